//! Monte Carlo curves for every signaling scheme.
//!
//! All curves of one call share the channel draws: trial `t` always uses
//! stream `t` of the run seed, so schemes are compared on common random
//! numbers. Per-trial work runs on the rayon pool and is reduced in trial order.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::channel::CorrelationModel;
use crate::codebook::{self, best_weighted, mode_gains, LambdaSpec, QuantizedCodebook};
use crate::error::{precondition, Error, Result};
use crate::infotheory::{perfect_csi_mi_from_lambda, Constellation, MiEvaluator};
use crate::matkit::{haar_unitary, lambda_max, CMatrix, Rng};

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_OPT_SAMPLES: usize = 5000;
pub const DEFAULT_RANK_TWO_COUNT: usize = 50;
const OPT_MAX_ITER: usize = 500;
const OPT_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

const TRIAL_DOMAIN: u64 = 0;
const UNITARY_DOMAIN: u64 = 1 << 48;
const RANK_TWO_DOMAIN: u64 = 2 << 48;
const OPTIMIZER_DOMAIN: u64 = 3 << 48;

#[derive(Debug, Clone)]
pub enum QuantizedKind {
    /// Best of all single-mode assignments, ranked by mean MI summed over the grid.
    RankOneBest,
    /// Per-point best of `count` random rank-two codebooks.
    RankTwoBest {
        count: usize,
    },
    Fixed(LambdaSpec),
}

#[derive(Debug, Clone)]
pub struct QuantizedScheme {
    pub n1: usize,
    pub n2: usize,
    pub kind: QuantizedKind,
}

impl QuantizedScheme {
    pub fn bits(&self) -> Result<u32> {
        let n = self.n1 * self.n2;
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "split {}x{} is not a power of two",
                self.n1, self.n2
            )));
        }
        Ok(n.trailing_zeros())
    }
}

#[derive(Debug, Clone)]
pub enum Scheme {
    Perfect,
    Statistical,
    StatisticalBeamforming,
    Quantized(QuantizedScheme),
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Perfect => "perfect",
            Scheme::Statistical => "statistical",
            Scheme::StatisticalBeamforming => "statistical-beamforming",
            Scheme::Quantized(q) => match q.kind {
                QuantizedKind::RankOneBest => "quantized-rank1-best",
                QuantizedKind::RankTwoBest { .. } => "quantized-rank2-best",
                QuantizedKind::Fixed(_) => "quantized",
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: CorrelationModel,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub constellation: Constellation,
    /// Symbols per block for the statistical and quantized schemes.
    pub k: usize,
    pub nc: usize,
    /// Symbols per block for the perfect-CSI benchmark.
    pub perfect_k: usize,
    pub optimizer_samples: usize,
    pub schemes: Vec<Scheme>,
}

impl SimConfig {
    /// Defaults: 0–20 dB in 2 dB steps, 2000 trials, Gaussian inputs,
    /// `K = Nc` (`2Nc` for perfect CSI), and every scheme on the `2×2` split.
    pub fn new(model: CorrelationModel, nc: usize) -> Self {
        let split = |kind| Scheme::Quantized(QuantizedScheme { n1: 2, n2: 2, kind });
        Self {
            model,
            snr_grid_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            constellation: Constellation::Gaussian,
            k: nc,
            nc,
            perfect_k: 2 * nc,
            optimizer_samples: DEFAULT_OPT_SAMPLES,
            schemes: vec![
                Scheme::Perfect,
                Scheme::Statistical,
                Scheme::StatisticalBeamforming,
                split(QuantizedKind::RankOneBest),
                split(QuantizedKind::RankTwoBest {
                    count: DEFAULT_RANK_TWO_COUNT,
                }),
            ],
        }
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.snr_grid_db
            .iter()
            .map(|db| db_to_linear(*db))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return cfg("trials must be >= 1".into());
        }
        if self.snr_grid_db.is_empty() {
            return cfg("SNR grid is empty".into());
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return cfg("SNR grid values must be finite".into());
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return cfg("SNR grid must be strictly increasing".into());
        }
        if self.schemes.is_empty() {
            return cfg("scheme list is empty".into());
        }
        if self.nc == 0 || self.k == 0 || self.perfect_k == 0 {
            return cfg("k, nc and perfect_k must be >= 1".into());
        }
        for (name, k) in [("k", self.k), ("perfect_k", self.perfect_k)] {
            if k > 2 * self.nc {
                return Err(Error::Infeasible(format!(
                    "{name} = {k} violates K <= 2Nc = {}",
                    2 * self.nc
                )));
            }
        }
        let statistical = self
            .schemes
            .iter()
            .any(|s| matches!(s, Scheme::Statistical | Scheme::StatisticalBeamforming));
        if statistical && self.optimizer_samples < 100 {
            return cfg("optimizer_samples must be >= 100".into());
        }
        let nt = self.model.nt();
        for s in &self.schemes {
            let Scheme::Quantized(q) = s else { continue };
            q.bits()?;
            match &q.kind {
                QuantizedKind::RankOneBest if q.n2 > nt => {
                    return cfg(format!("rank-one split needs N2 <= Nt, got N2 = {}", q.n2));
                }
                QuantizedKind::RankTwoBest { count } if *count == 0 || nt < 2 => {
                    return cfg("rank-two tournament needs count >= 1 and Nt >= 2".into());
                }
                _ => {}
            }
        }
        self.labels().map(|_| ())
    }

    /// Output labels; a `-N1xN2` suffix disambiguates repeated quantized kinds.
    pub fn labels(&self) -> Result<Vec<String>> {
        let base: Vec<&str> = self.schemes.iter().map(Scheme::label).collect();
        let labels: Vec<String> = self
            .schemes
            .iter()
            .zip(&base)
            .map(|(s, b)| match s {
                Scheme::Quantized(q) if base.iter().filter(|x| *x == b).count() > 1 => {
                    format!("{b}-{}x{}", q.n1, q.n2)
                }
                _ => b.to_string(),
            })
            .collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Config(format!("scheme `{l}` listed twice")));
            }
        }
        Ok(labels)
    }

    fn evaluator(&self) -> Result<MiEvaluator> {
        MiEvaluator::new(self.constellation)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub scheme: String,
    pub mi_bits_per_use: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Per-trial block MI in nats, indexed `[point][trial]`.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TrialTable {
    pub snr_db: Vec<f64>,
    pub nc: usize,
    pub series: Vec<Series>,
    /// Optimizer runs that hit the iteration cap.
    pub warnings: Vec<String>,
}

impl TrialTable {
    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }

    pub fn curve_points(&self) -> Vec<CurvePoint> {
        self.series
            .iter()
            .flat_map(|s| curve_of(&s.label, &self.snr_db, &s.values, self.nc))
            .collect()
    }
}

/// Mean and standard error of per-trial block MI, in bits per channel use.
pub fn summarize(values: &[f64], nc: usize) -> (f64, f64) {
    let scale = 1.0 / (nc as f64 * LN_2);
    let n = values.len() as f64;
    let mean = values.iter().map(|v| v * scale).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values
        .iter()
        .map(|v| (v * scale - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn curve_of(label: &str, snr_db: &[f64], values: &[Vec<f64>], nc: usize) -> Vec<CurvePoint> {
    snr_db
        .iter()
        .zip(values)
        .map(|(db, v)| {
            let (mean, stderr) = summarize(v, nc);
            CurvePoint {
                snr_db: *db,
                scheme: label.to_string(),
                mi_bits_per_use: mean,
                stderr,
                trials: v.len(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// statistical power allocation

#[derive(Debug, Clone)]
pub struct StatOptimum {
    /// Diagonal of `Λ_stat`, trace `Nt·Nc/K`.
    pub lambda: Vec<f64>,
    /// Sample-average per-symbol MI at `lambda`, nats.
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `lambda` is then the best iterate.
    pub converged: bool,
}

/// Squared column norms of `H_ind` for `samples` draws.
fn column_samples(model: &CorrelationModel, samples: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..samples)
        .map(|_| {
            let r = model.sample(rng);
            (0..model.nt()).map(|m| r.hind.column_norm_sqr(m)).collect()
        })
        .collect()
}

/// Maximizes the sample average of `mi(ρ/Nt·Tr(H_ind Λ H_ind†))` over
/// diagonals with trace `Nt·Nc/K` by projected gradient ascent.
pub fn optimize_lambda_stat(
    model: &CorrelationModel,
    rho: f64,
    k: usize,
    nc: usize,
    eval: &MiEvaluator,
    samples: usize,
    rng: &mut Rng,
) -> Result<StatOptimum> {
    if samples < 100 {
        return precondition("optimizer needs at least 100 samples");
    }
    if k == 0 || nc == 0 {
        return precondition("k and nc must be >= 1");
    }
    if !rho.is_finite() || rho < 0.0 {
        return precondition("rho must be finite and >= 0");
    }
    let cols = column_samples(model, samples, rng);
    let total = (model.nt() * nc) as f64 / k as f64;
    Ok(optimize_on_samples(
        &cols,
        rho / model.nt() as f64,
        total,
        eval,
    ))
}

fn objective_and_gradient(
    cols: &[Vec<f64>],
    scale: f64,
    lam: &[f64],
    eval: &MiEvaluator,
) -> (f64, Vec<f64>) {
    let terms: Vec<(f64, f64)> = cols
        .par_iter()
        .map(|c| {
            let a = (scale * dot(lam, c)).max(0.0);
            (eval.mi_unchecked(a), eval.mmse_unchecked(a))
        })
        .collect();
    let n = cols.len() as f64;
    let mut f = 0.0;
    let mut g = vec![0.0; lam.len()];
    for (c, (mi, mmse)) in cols.iter().zip(&terms) {
        f += mi;
        for (gm, cm) in g.iter_mut().zip(c) {
            *gm += mmse * scale * cm;
        }
    }
    g.iter_mut().for_each(|v| *v /= n);
    (f / n, g)
}

fn optimize_on_samples(
    cols: &[Vec<f64>],
    scale: f64,
    total: f64,
    eval: &MiEvaluator,
) -> StatOptimum {
    let nt = cols[0].len();
    let mut lam = vec![total / nt as f64; nt];
    let (mut f, mut g) = objective_and_gradient(cols, scale, &lam, eval);
    let mut step = total / (g.iter().fold(0.0f64, |m, v| m.max(v.abs())) + f64::MIN_POSITIVE);
    for iter in 0..OPT_MAX_ITER {
        let unit = project_simplex(&axpy(&lam, 1.0, &g), total);
        if norm_diff(&unit, &lam) <= OPT_TOL {
            return StatOptimum {
                lambda: lam,
                objective: f,
                iterations: iter,
                converged: true,
            };
        }
        loop {
            let cand = project_simplex(&axpy(&lam, step, &g), total);
            let ascent: f64 = g
                .iter()
                .zip(cand.iter().zip(&lam))
                .map(|(gi, (c, l))| gi * (c - l))
                .sum();
            let (fc, gc) = objective_and_gradient(cols, scale, &cand, eval);
            if fc >= f + ARMIJO * ascent {
                lam = cand;
                f = fc;
                g = gc;
                step *= 2.0;
                break;
            }
            step /= 2.0;
            if step < 1e-30 {
                // no ascent direction left at machine precision
                return StatOptimum {
                    lambda: lam,
                    objective: f,
                    iterations: iter,
                    converged: true,
                };
            }
        }
    }
    StatOptimum {
        lambda: lam,
        objective: f,
        iterations: OPT_MAX_ITER,
        converged: false,
    }
}

/// Euclidean projection onto `{x ≥ 0, Σx = total}`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Per-point `Λ_stat` and best single mode, on one shared optimizer sample set.
#[derive(Debug, Clone)]
pub struct StatisticalPlan {
    pub lambdas: Vec<Vec<f64>>,
    pub beam_modes: Vec<usize>,
    pub warnings: Vec<String>,
}

pub fn plan_statistical(config: &SimConfig) -> Result<StatisticalPlan> {
    let eval = config.evaluator()?;
    let mut rng = Rng::new(config.seed, OPTIMIZER_DOMAIN);
    let cols = column_samples(&config.model, config.optimizer_samples, &mut rng);
    let nt = config.model.nt();
    let total = (nt * config.nc) as f64 / config.k as f64;
    let mut plan = StatisticalPlan {
        lambdas: Vec::new(),
        beam_modes: Vec::new(),
        warnings: Vec::new(),
    };
    for (db, rho) in config.snr_grid_db.iter().zip(config.rhos()) {
        let scale = rho / nt as f64;
        let opt = optimize_on_samples(&cols, scale, total, &eval);
        if !opt.converged {
            plan.warnings.push(format!(
                "statistical optimizer hit {OPT_MAX_ITER} iterations at {db} dB"
            ));
        }
        plan.lambdas.push(opt.lambda);
        let means: Vec<f64> = (0..nt)
            .map(|m| {
                let per: Vec<f64> = cols
                    .par_iter()
                    .map(|c| eval.mi_unchecked(scale * total * c[m]))
                    .collect();
                per.iter().sum::<f64>()
            })
            .collect();
        plan.beam_modes.push(argmax_first(&means));
    }
    Ok(plan)
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// shared-draw evaluation engine

enum Curve {
    Perfect {
        k: usize,
    },
    /// `Λ` per grid point, applied in the `H_ind` basis.
    Diagonal {
        lambdas: Vec<Vec<f64>>,
    },
    Codebook {
        family: usize,
        lambdas: Vec<Vec<f64>>,
    },
}

/// Returns `[curve][point][trial]` block MI in nats.
fn evaluate(
    config: &SimConfig,
    eval: &MiEvaluator,
    families: &[Vec<CMatrix>],
    curves: &[Curve],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let rhos = config.rhos();
    let points = rhos.len();
    let nt = config.model.nt();
    let (k, nc) = (config.k as f64, config.nc);
    let need_lmax = curves.iter().any(|c| matches!(c, Curve::Perfect { .. }));
    let per_trial: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let mut rng = Rng::new(config.seed, TRIAL_DOMAIN + t as u64);
            let draw = config.model.sample(&mut rng);
            let lmax = if need_lmax {
                lambda_max(&draw.gram())?
            } else {
                0.0
            };
            let cols: Vec<f64> = (0..nt).map(|m| draw.hind.column_norm_sqr(m)).collect();
            let gains: Vec<Vec<Vec<f64>>> = families.iter().map(|u| mode_gains(&draw, u)).collect();
            let mut out = Vec::with_capacity(curves.len() * points);
            for curve in curves {
                match curve {
                    Curve::Perfect { k: pk } => {
                        for &rho in &rhos {
                            out.push(perfect_csi_mi_from_lambda(lmax, rho, *pk, nc, eval)?);
                        }
                    }
                    Curve::Diagonal { lambdas } => {
                        for (lam, &rho) in lambdas.iter().zip(&rhos) {
                            let a = rho / nt as f64 * dot(lam, &cols);
                            out.push(k * eval.mi_unchecked(a.max(0.0)));
                        }
                    }
                    Curve::Codebook { family, lambdas } => {
                        let (_, _, best) = best_weighted(&gains[*family], lambdas);
                        for &rho in &rhos {
                            let a = rho / nt as f64 * best;
                            out.push(k * eval.mi_unchecked(a.max(0.0)));
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((0..curves.len())
        .map(|c| {
            (0..points)
                .map(|p| per_trial.iter().map(|row| row[c * points + p]).collect())
                .collect()
        })
        .collect())
}

fn point_means(values: &[Vec<f64>]) -> Vec<f64> {
    values
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect()
}

/// Index of the curve with the largest grid-summed mean; first on ties.
fn pick_by_grid_sum(curves: &[Vec<Vec<f64>>]) -> usize {
    let sums: Vec<f64> = curves.iter().map(|c| point_means(c).iter().sum()).collect();
    argmax_first(&sums)
}

/// Per grid point, the curve with the largest mean; first on ties.
fn pick_per_point(curves: &[Vec<Vec<f64>>]) -> Vec<usize> {
    let means: Vec<Vec<f64>> = curves.iter().map(|c| point_means(c)).collect();
    (0..curves[0].len())
        .map(|p| argmax_first(&means.iter().map(|m| m[p]).collect::<Vec<_>>()))
        .collect()
}

/// The run's RVQ family for a given `N1`; equal `N1` share the same unitaries.
pub fn rvq_family(config: &SimConfig, n1: usize) -> Result<Vec<CMatrix>> {
    let mut rng = Rng::new(config.seed, UNITARY_DOMAIN + n1 as u64);
    (0..n1)
        .map(|_| haar_unitary(config.model.nt(), &mut rng))
        .collect()
}

/// All `N2`-subsets of the `Nt` modes, in lexicographic order.
pub fn rank_one_candidates(nt: usize, n2: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, nt: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for m in start..=(nt - left) {
            cur.push(m);
            rec(m + 1, nt, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n2 >= 1 && n2 <= nt {
        rec(0, nt, n2, &mut Vec::new(), &mut out);
    }
    out
}

fn rank_one_lambdas(modes: &[usize], nt: usize, cap: f64) -> Vec<Vec<f64>> {
    modes
        .iter()
        .map(|&m| codebook::single_mode(nt, m, cap))
        .collect()
}

fn rank_two_sets(
    config: &SimConfig,
    n1: usize,
    n2: usize,
    count: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut rng = Rng::new(
        config.seed,
        RANK_TWO_DOMAIN + ((n1 as u64) << 16) + n2 as u64,
    );
    codebook::random_rank_two_lambdas(count, n2, config.model.nt(), config.nc, config.k, &mut rng)
}

fn power_cap(config: &SimConfig) -> f64 {
    (config.model.nt() * config.nc) as f64 / config.k as f64
}

/// Per-trial values for every configured scheme.
pub fn run_table(config: &SimConfig) -> Result<TrialTable> {
    config.validate()?;
    let eval = config.evaluator()?;
    let labels = config.labels()?;
    let nt = config.model.nt();
    let cap = power_cap(config);

    let needs_plan = config
        .schemes
        .iter()
        .any(|s| matches!(s, Scheme::Statistical | Scheme::StatisticalBeamforming));
    let plan = if needs_plan {
        Some(plan_statistical(config)?)
    } else {
        None
    };

    let mut families: Vec<(usize, Vec<CMatrix>)> = Vec::new();
    fn family_of(
        families: &mut Vec<(usize, Vec<CMatrix>)>,
        config: &SimConfig,
        n1: usize,
    ) -> Result<usize> {
        if let Some(i) = families.iter().position(|(n, _)| *n == n1) {
            return Ok(i);
        }
        families.push((n1, rvq_family(config, n1)?));
        Ok(families.len() - 1)
    }

    // each scheme owns a contiguous range of curves
    let mut curves = Vec::new();
    let mut ranges = Vec::new();
    for scheme in &config.schemes {
        let start = curves.len();
        match scheme {
            Scheme::Perfect => curves.push(Curve::Perfect {
                k: config.perfect_k,
            }),
            Scheme::Statistical => curves.push(Curve::Diagonal {
                lambdas: plan.as_ref().expect("planned").lambdas.clone(),
            }),
            Scheme::StatisticalBeamforming => curves.push(Curve::Diagonal {
                lambdas: plan
                    .as_ref()
                    .expect("planned")
                    .beam_modes
                    .iter()
                    .map(|&m| codebook::single_mode(nt, m, cap))
                    .collect(),
            }),
            Scheme::Quantized(q) => {
                let family = family_of(&mut families, config, q.n1)?;
                let sets = match &q.kind {
                    QuantizedKind::RankOneBest => rank_one_candidates(nt, q.n2)
                        .iter()
                        .map(|m| rank_one_lambdas(m, nt, cap))
                        .collect(),
                    QuantizedKind::RankTwoBest { count } => {
                        rank_two_sets(config, q.n1, q.n2, *count)?
                    }
                    QuantizedKind::Fixed(spec) => vec![fixed_lambdas(spec, q, nt, cap)?],
                };
                // validates the trace bound and the split for every set
                for l in &sets {
                    QuantizedCodebook::new(
                        q.bits()?,
                        families[family].1.clone(),
                        l.clone(),
                        config.k,
                        config.nc,
                    )?;
                }
                curves.extend(
                    sets.into_iter()
                        .map(|lambdas| Curve::Codebook { family, lambdas }),
                );
            }
        }
        ranges.push(start..curves.len());
    }

    let unitaries: Vec<Vec<CMatrix>> = families.into_iter().map(|(_, u)| u).collect();
    let mut values = evaluate(config, &eval, &unitaries, &curves)?;

    let mut series = Vec::new();
    for ((scheme, label), range) in config.schemes.iter().zip(labels).zip(ranges) {
        let group: Vec<Vec<Vec<f64>>> = range.map(|i| std::mem::take(&mut values[i])).collect();
        let chosen = match scheme {
            Scheme::Quantized(QuantizedScheme {
                kind: QuantizedKind::RankTwoBest { .. },
                ..
            }) => pick_per_point(&group)
                .iter()
                .enumerate()
                .map(|(p, &c)| group[c][p].clone())
                .collect(),
            Scheme::Quantized(QuantizedScheme {
                kind: QuantizedKind::RankOneBest,
                ..
            }) => group[pick_by_grid_sum(&group)].clone(),
            _ => group.into_iter().next().expect("one curve per scheme"),
        };
        series.push(Series {
            label,
            values: chosen,
        });
    }
    Ok(TrialTable {
        snr_db: config.snr_grid_db.clone(),
        nc: config.nc,
        series,
        warnings: plan.map(|p| p.warnings).unwrap_or_default(),
    })
}

fn fixed_lambdas(
    spec: &LambdaSpec,
    q: &QuantizedScheme,
    nt: usize,
    cap: f64,
) -> Result<Vec<Vec<f64>>> {
    match spec {
        LambdaSpec::RankOne(modes) => {
            if modes.len() != q.n2 || modes.iter().any(|&m| m >= nt) {
                return Err(Error::Config(format!(
                    "need {} rank-one modes below Nt = {nt}",
                    q.n2
                )));
            }
            Ok(rank_one_lambdas(modes, nt, cap))
        }
        LambdaSpec::Explicit(ls) => Ok(ls.clone()),
    }
}

/// Mean MI per grid point for every configured scheme.
pub fn run(config: &SimConfig) -> Result<Vec<CurvePoint>> {
    Ok(run_table(config)?.curve_points())
}

#[derive(Debug, Clone)]
pub struct RankOneOutcome {
    pub best: usize,
    pub candidates: Vec<Vec<usize>>,
    pub codebook: QuantizedCodebook,
    pub curves: Vec<Vec<CurvePoint>>,
}

/// Evaluates every candidate mode assignment on the run's `{U_i}` and keeps the
/// one with the largest grid-summed mean MI.
pub fn best_rank_one_codebook(
    config: &SimConfig,
    n1: usize,
    n2: usize,
    candidates: &[Vec<usize>],
) -> Result<RankOneOutcome> {
    if candidates.is_empty() {
        return precondition("no rank-one candidates");
    }
    let (eval, unitaries, b) = codebook_setup(config, n1, n2)?;
    let nt = config.model.nt();
    let cap = power_cap(config);
    let lambda_sets: Vec<Vec<Vec<f64>>> = candidates
        .iter()
        .map(|m| {
            if m.len() != n2 || m.iter().any(|&x| x >= nt) {
                return precondition(format!("candidate {m:?} needs {n2} modes below {nt}"));
            }
            Ok(rank_one_lambdas(m, nt, cap))
        })
        .collect::<Result<_>>()?;
    let curves: Vec<Curve> = lambda_sets
        .iter()
        .map(|l| Curve::Codebook {
            family: 0,
            lambdas: l.clone(),
        })
        .collect();
    let values = evaluate(config, &eval, std::slice::from_ref(&unitaries), &curves)?;
    let best = pick_by_grid_sum(&values);
    let codebook =
        QuantizedCodebook::new(b, unitaries, lambda_sets[best].clone(), config.k, config.nc)?;
    let curves = values
        .iter()
        .zip(candidates)
        .map(|(v, m)| {
            let label = format!("rank1-modes-{}", join_modes(m));
            curve_of(&label, &config.snr_grid_db, v, config.nc)
        })
        .collect();
    Ok(RankOneOutcome {
        best,
        candidates: candidates.to_vec(),
        codebook,
        curves,
    })
}

fn join_modes(m: &[usize]) -> String {
    m.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

#[derive(Debug, Clone)]
pub struct TournamentOutcome {
    pub best: Vec<CurvePoint>,
    /// Winning codebook index per grid point.
    pub winners: Vec<usize>,
    pub lambda_sets: Vec<Vec<Vec<f64>>>,
    pub all: Vec<Vec<CurvePoint>>,
}

/// `count` random rank-two codebooks on the run's `{U_i}`; the best curve is the
/// per-point maximum of their means.
pub fn rank_two_tournament(
    config: &SimConfig,
    n1: usize,
    n2: usize,
    count: usize,
) -> Result<TournamentOutcome> {
    if count == 0 {
        return precondition("tournament needs count >= 1");
    }
    let (eval, unitaries, b) = codebook_setup(config, n1, n2)?;
    let lambda_sets = rank_two_sets(config, n1, n2, count)?;
    for l in &lambda_sets {
        QuantizedCodebook::new(b, unitaries.clone(), l.clone(), config.k, config.nc)?;
    }
    let curves: Vec<Curve> = lambda_sets
        .iter()
        .map(|l| Curve::Codebook {
            family: 0,
            lambdas: l.clone(),
        })
        .collect();
    let values = evaluate(config, &eval, std::slice::from_ref(&unitaries), &curves)?;
    let winners = pick_per_point(&values);
    let all: Vec<Vec<CurvePoint>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| curve_of(&format!("rank2-set-{i}"), &config.snr_grid_db, v, config.nc))
        .collect();
    let best = winners
        .iter()
        .enumerate()
        .map(|(p, &w)| CurvePoint {
            scheme: "quantized-rank2-best".into(),
            ..all[w][p].clone()
        })
        .collect();
    Ok(TournamentOutcome {
        best,
        winners,
        lambda_sets,
        all,
    })
}

fn codebook_setup(
    config: &SimConfig,
    n1: usize,
    n2: usize,
) -> Result<(MiEvaluator, Vec<CMatrix>, u32)> {
    let mut probe = config.clone();
    probe.schemes = vec![Scheme::Perfect];
    probe.validate()?;
    let b = QuantizedScheme {
        n1,
        n2,
        kind: QuantizedKind::RankOneBest,
    }
    .bits()?;
    Ok((config.evaluator()?, rvq_family(config, n1)?, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrPoint {
    pub snr_db: f64,
    /// Mean of `ρNc/K·Σ_m α_jm s_im` at the SNR-rule selection.
    pub mean_snr: f64,
    pub stderr: f64,
    /// Mean of `ρNc/K·(λ_max − Σ_m α_jm s_im)`.
    pub mean_delta_snr: f64,
}

/// Average received SNR of a codebook under the SNR selection rule.
pub fn avg_received_snr(config: &SimConfig, cb: &QuantizedCodebook) -> Result<Vec<SnrPoint>> {
    let mut probe = config.clone();
    probe.schemes = vec![Scheme::Perfect];
    probe.validate()?;
    if cb.nt() != config.model.nt() {
        return precondition("codebook and channel disagree on Nt");
    }
    let per_trial: Vec<(f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::new(config.seed, TRIAL_DOMAIN + t as u64);
            let draw = config.model.sample(&mut rng);
            codebook::snr_selection(cb, &draw).map(|(sel, lmax)| (sel.value, lmax))
        })
        .collect::<Result<_>>()?;
    let n = per_trial.len() as f64;
    let scale0 = cb.nc() as f64 / cb.k() as f64;
    Ok(config
        .snr_grid_db
        .iter()
        .zip(config.rhos())
        .map(|(db, rho)| {
            let s = rho * scale0;
            let snr: Vec<f64> = per_trial.iter().map(|(v, _)| s * v).collect();
            let mean = snr.iter().sum::<f64>() / n;
            let var = if per_trial.len() > 1 {
                snr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let gap = per_trial.iter().map(|(v, l)| s * (l - v)).sum::<f64>() / n;
            SnrPoint {
                snr_db: *db,
                mean_snr: mean,
                stderr: (var / n).sqrt(),
                mean_delta_snr: gap,
            }
        })
        .collect())
}
