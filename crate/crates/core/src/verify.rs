//! Property suites behind `verify`: each property reports PASS/FAIL together
//! with the residual or margin it measured.

use std::fmt;

use crate::channel::{iid_model, v4_model, ChannelRealization};
use crate::codebook::{
    delta_mi, delta_snr, max_expectation_sides, random_rank_two_lambdas, rvq_codebook, select_mi,
    LambdaSpec,
};
use crate::dispersion::{
    build_v_matrix, check_goc, decoupling_residual, rank_one_set, DispersionSet, GOC_TOL,
};
use crate::error::{Error, Result};
use crate::infotheory::{block_mi, perfect_csi_mi, Constellation, MiEvaluator};
use crate::matkit::{haar_unitary, hermitian_eig, CMatrix, Rng, C64};
use crate::simengine::optimize_lambda_stat;

pub const DEFAULT_SEED: u64 = 0x5eed;

pub const SUITES: &[&str] = &[
    "eig",
    "channel",
    "goc",
    "vmatrix",
    "immse",
    "perfect-bound",
    "scalar-bound",
    "averaging",
    "statistical-optimum",
    "k-monotone",
    "rank-one-selection",
    "gap-bound",
    "prop3",
    "received-snr",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub property: String,
    pub pass: bool,
    /// Residual (should be small) or margin (should be non-negative).
    pub measure: f64,
    pub kind: Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Residual,
    Margin,
    Violations,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let what = match self.kind {
            Measure::Residual => "residual",
            Measure::Margin => "margin",
            Measure::Violations => "violations",
        };
        if self.kind == Measure::Violations {
            write!(
                f,
                "{tag} {} {}: {what} {}",
                self.suite, self.property, self.measure
            )
        } else {
            write!(
                f,
                "{tag} {} {}: {what} {:.3e}",
                self.suite, self.property, self.measure
            )
        }
    }
}

fn residual(suite: &'static str, property: &str, value: f64, tol: f64) -> PropertyResult {
    PropertyResult {
        suite,
        property: property.into(),
        pass: value <= tol,
        measure: value,
        kind: Measure::Residual,
    }
}

fn margin(suite: &'static str, property: &str, value: f64, slack: f64) -> PropertyResult {
    PropertyResult {
        suite,
        property: property.into(),
        pass: value >= -slack,
        measure: value,
        kind: Measure::Margin,
    }
}

fn violations(suite: &'static str, property: &str, count: usize) -> PropertyResult {
    PropertyResult {
        suite,
        property: property.into(),
        pass: count == 0,
        measure: count as f64,
        kind: Measure::Violations,
    }
}

/// Runs one suite by name, or every suite for `all`.
pub fn run(selector: &str, seed: u64) -> Result<Vec<PropertyResult>> {
    if selector == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s, seed)?);
        }
        return Ok(out);
    }
    run_suite(selector, seed)
}

fn run_suite(name: &str, seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = Rng::new(
        seed,
        0x7e57 + SUITES.iter().position(|s| *s == name).unwrap_or(0) as u64,
    );
    match name {
        "eig" => eig_suite(&mut rng),
        "channel" => channel_suite(&mut rng),
        "goc" => goc_suite(&mut rng),
        "vmatrix" => vmatrix_suite(),
        "immse" => immse_suite(),
        "perfect-bound" => perfect_bound_suite(&mut rng),
        "scalar-bound" => scalar_bound_suite(),
        "averaging" => averaging_suite(&mut rng),
        "statistical-optimum" => statistical_optimum_suite(&mut rng),
        "k-monotone" => k_monotone_suite(&mut rng),
        "rank-one-selection" => rank_one_selection_suite(&mut rng),
        "gap-bound" => gap_bound_suite(&mut rng),
        "prop3" => max_expectation_suite(&mut rng),
        "received-snr" => received_snr_suite(&mut rng),
        other => Err(Error::Config(format!(
            "unknown suite `{other}`; expected one of {} or all",
            SUITES.join(", ")
        ))),
    }
}

fn random_hermitian(n: usize, rng: &mut Rng) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        rng.complex_gaussian(1.0).expect("unit variance")
    });
    (&a + &a.adjoint()).scale_real(0.5)
}

fn eig_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let mut fact = 0.0f64;
    let mut rot = 0.0f64;
    for n in 1..=8 {
        for _ in 0..20 {
            let m = random_hermitian(n, rng);
            let e = hermitian_eig(&m)?;
            fact =
                fact.max((&e.reconstruct() - &m).frobenius_norm() / m.frobenius_norm().max(1e-300));
            let u = haar_unitary(n, rng)?;
            let r = hermitian_eig(&(&(&u * &m) * &u.adjoint()))?;
            for (a, b) in e.eigenvalues.iter().zip(&r.eigenvalues) {
                rot = rot.max((a - b).abs());
            }
        }
    }
    Ok(vec![
        residual("eig", "reconstruction", fact, 1e-10),
        residual("eig", "rotation invariance", rot, 1e-9),
    ])
}

fn channel_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let model = v4_model();
    let mut assembly = 0.0f64;
    let mut pigeon = f64::INFINITY;
    for _ in 0..1000 {
        let r = model.sample(rng);
        let rebuilt = &(model.ur() * &r.hind) * &model.ut().adjoint();
        assembly = assembly.max((&r.h - &rebuilt).frobenius_norm());
        let g = r.gram();
        pigeon = pigeon.min(hermitian_eig(&g)?.lambda_max() - g.trace().re / 4.0);
    }
    Ok(vec![
        residual("channel", "assembly", assembly, 1e-12),
        margin("channel", "lambda_max >= trace/Nt", pigeon, 1e-12),
    ])
}

fn alamouti() -> DispersionSet {
    let c = |re: f64, im: f64| C64::new(re, im);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = |d: [C64; 4]| CMatrix::new(2, 2, d.to_vec()).expect("2x2");
    let z = c(0.0, 0.0);
    DispersionSet::new(
        2,
        2,
        vec![
            m([c(r, 0.0), z, z, c(r, 0.0)]),
            m([c(0.0, r), z, z, c(0.0, -r)]),
            m([z, c(r, 0.0), c(-r, 0.0), z]),
            m([z, c(0.0, r), c(0.0, r), z]),
        ],
    )
    .expect("Alamouti set is valid")
}

/// GOC residual and decoupling on random channels for an arbitrary set.
pub fn goc_properties(
    label: &str,
    set: &DispersionSet,
    rng: &mut Rng,
) -> Result<Vec<PropertyResult>> {
    let report = check_goc(set, GOC_TOL);
    let model = iid_model(set.nt(), 2)?;
    let mut dec = 0.0f64;
    for _ in 0..50 {
        dec = dec.max(decoupling_residual(&model.sample(rng), set)?);
    }
    Ok(vec![
        residual(
            "goc",
            &format!("{label} orthogonality"),
            report.worst,
            GOC_TOL,
        ),
        residual("goc", &format!("{label} decoupling"), dec, 1e-10),
    ])
}

fn goc_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let mut out = goc_properties("alamouti", &alamouti(), rng)?;
    let mut worst = 0.0f64;
    let mut power = 0.0f64;
    for nc in 1..=4 {
        for k in 1..=2 * nc {
            let u: Vec<C64> = {
                let v: Vec<C64> = (0..3)
                    .map(|_| rng.complex_gaussian(1.0).expect("unit"))
                    .collect();
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.iter().map(|z| z / n).collect()
            };
            let set = rank_one_set(&u, k, nc)?;
            worst = worst.max(check_goc(&set, GOC_TOL).worst);
            power = power.max((set.total_power() - (3 * nc) as f64).abs());
        }
    }
    out.push(residual(
        "goc",
        "rank-one sets orthogonality",
        worst,
        GOC_TOL,
    ));
    out.push(residual("goc", "rank-one sets full power", power, 1e-9));
    Ok(out)
}

fn vmatrix_suite() -> Result<Vec<PropertyResult>> {
    let mut worst = 0.0f64;
    let mut refused = 0;
    for nc in 1..=8 {
        for k in 1..=2 * nc {
            worst = worst.max(build_v_matrix(k, nc)?.condition_residual());
        }
        if !matches!(build_v_matrix(2 * nc + 1, nc), Err(Error::Infeasible(_))) {
            refused += 1;
        }
    }
    Ok(vec![
        residual("vmatrix", "VV^H = I + iX for K <= 2Nc", worst, 1e-12),
        violations("vmatrix", "K = 2Nc+1 rejected", refused),
    ])
}

fn immse_suite() -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    let g = MiEvaluator::gaussian();
    for c in [
        Constellation::Gaussian,
        Constellation::Bpsk,
        Constellation::Pam(4),
    ] {
        let e = MiEvaluator::new(c)?;
        let mut rel = 0.0f64;
        for a in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let h = 1e-4;
            let d = (e.mi(a + h)? - e.mi(a - h)?) / (2.0 * h);
            let m = e.mmse(a)?;
            rel = rel.max((d - m).abs() / m);
        }
        let mut second = f64::NEG_INFINITY;
        let mut dom = f64::INFINITY;
        for i in 0..50 {
            let a = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
            let s = 1e-3 * a.max(1e-2);
            second = second.max(e.mi(a + s)? - 2.0 * e.mi(a)? + e.mi(a - s)?);
            dom = dom.min(g.mi(a)? - e.mi(a)?).min(g.mmse(a)? - e.mmse(a)?);
        }
        let label = c.label();
        out.push(residual(
            "immse",
            &format!("{label} dI/da = mmse (relative)"),
            rel,
            1e-3,
        ));
        out.push(residual(
            "immse",
            &format!("{label} concavity"),
            second.max(0.0),
            1e-6,
        ));
        out.push(margin(
            "immse",
            &format!("{label} Gaussian dominance"),
            dom,
            1e-12,
        ));
    }
    Ok(out)
}

fn unit_vector(nt: usize, rng: &mut Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..nt)
        .map(|_| rng.complex_gaussian(1.0).expect("unit"))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

fn perfect_bound_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let eval = MiEvaluator::gaussian();
    let (nt, nc) = (4, 4);
    let model = iid_model(nt, 4)?;
    let mut worst = f64::INFINITY;
    for c in 0..100 {
        let h = model.sample(rng);
        let rho = [0.5, 2.0, 10.0][c % 3];
        for _ in 0..20 {
            let k = 1 + rng.below(2 * nc);
            let set = rank_one_set(&unit_vector(nt, rng), k, nc)?;
            let got = block_mi(&h, &set.covariances(), rho, nt, nc, &eval)?;
            worst = worst.min(perfect_csi_mi(&h, rho, k, nc, &eval)? - got);
        }
    }
    Ok(vec![margin(
        "perfect-bound",
        "block MI <= perfect-CSI value",
        worst,
        1e-9,
    )])
}

fn scalar_bound_suite() -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    for c in [Constellation::Gaussian, Constellation::Bpsk] {
        let e = MiEvaluator::new(c)?;
        let mut worst = f64::INFINITY;
        for z in [1.0, 10.0, 100.0] {
            for k in 1..=8 {
                let a = z / k as f64;
                worst = worst.min(e.mi(a)? - a * e.mmse(a)?);
            }
        }
        out.push(margin(
            "scalar-bound",
            &format!("{} mi(a) >= a*mmse(a)", c.label()),
            worst,
            1e-12,
        ));
    }
    Ok(out)
}

fn random_psd(nt: usize, trace: f64, rng: &mut Rng) -> CMatrix {
    let a = CMatrix::from_fn(nt, nt, |_, _| rng.complex_gaussian(1.0).expect("unit"));
    let q = (&a * &a.adjoint()).symmetrized();
    let t = q.trace().re;
    q.scale_real(trace / t)
}

fn averaging_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let eval = MiEvaluator::new(Constellation::Bpsk)?;
    let (nt, nc, k) = (3, 2, 3);
    let model = iid_model(nt, 2)?;
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let h = model.sample(rng);
        let qs: Vec<CMatrix> = (0..k)
            .map(|_| random_psd(nt, (nt * nc) as f64 / k as f64 * rng.uniform(), rng))
            .collect();
        let avg = qs
            .iter()
            .skip(1)
            .fold(qs[0].clone(), |acc, q| &acc + q)
            .scale_real(1.0 / k as f64);
        let averaged = vec![avg; k];
        let rho = 4.0;
        worst = worst.min(
            block_mi(&h, &averaged, rho, nt, nc, &eval)? - block_mi(&h, &qs, rho, nt, nc, &eval)?,
        );
    }
    Ok(vec![margin(
        "averaging",
        "averaged codeword never loses",
        worst,
        1e-12,
    )])
}

fn statistical_optimum_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let eval = MiEvaluator::gaussian();
    let model = v4_model();
    let (k, nc, rho, samples) = (4, 4, 3.0, 3000);
    let probe = rng.clone();
    let opt = optimize_lambda_stat(&model, rho, k, nc, &eval, samples, rng)?;
    let mut again = probe;
    let cols: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let r = model.sample(&mut again);
            (0..4).map(|m| r.hind.column_norm_sqr(m)).collect()
        })
        .collect();
    let objective = |lam: &[f64]| -> f64 {
        cols.iter()
            .map(|c| {
                eval.mi(rho / 4.0 * lam.iter().zip(c).map(|(l, x)| l * x).sum::<f64>())
                    .unwrap_or(0.0)
            })
            .sum::<f64>()
            / samples as f64
    };
    let best = objective(&opt.lambda);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let w: Vec<f64> = (0..4).map(|_| -rng.uniform().ln()).collect();
        let s: f64 = w.iter().sum();
        let lam: Vec<f64> = w.iter().map(|x| x / s * 4.0).collect();
        worst = worst.min(best - objective(&lam));
    }
    let trace = (opt.lambda.iter().sum::<f64>() - 4.0).abs();
    Ok(vec![
        residual("statistical-optimum", "trace = Nt*Nc/K", trace, 1e-9),
        margin(
            "statistical-optimum",
            "optimum beats random diagonals",
            worst,
            1e-9,
        ),
        violations(
            "statistical-optimum",
            "optimizer hit iteration cap",
            usize::from(!opt.converged),
        ),
    ])
}

fn k_monotone_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let mut bad = 0;
    let evals = [
        MiEvaluator::gaussian(),
        MiEvaluator::new(Constellation::Bpsk)?,
    ];
    let model = iid_model(2, 2)?;
    for _ in 0..300 {
        let h = model.sample(rng);
        for e in &evals {
            let v: Vec<f64> = (1..=4)
                .map(|k| perfect_csi_mi(&h, 5.0, k, 2, e))
                .collect::<Result<_>>()?;
            bad += v.windows(2).filter(|w| w[1] < w[0]).count();
        }
    }
    Ok(vec![violations(
        "k-monotone",
        "perfect-CSI MI non-decreasing in K",
        bad,
    )])
}

fn rank_one_selection_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let eval = MiEvaluator::gaussian();
    let cb = rvq_codebook(
        3,
        2,
        4,
        &LambdaSpec::RankOne(vec![0, 1, 2, 3]),
        4,
        4,
        4,
        rng,
    )?;
    let model = v4_model();
    let mut worst = f64::INFINITY;
    for _ in 0..300 {
        let h = model.sample(rng);
        let ours = select_mi(&cb, &h, 10.0, &eval)?.value;
        for _ in 0..5 {
            let ls: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    let w: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
                    let s: f64 = w.iter().sum();
                    w.iter().map(|x| x / s * 4.0).collect()
                })
                .collect();
            worst = worst.min(ours - select_mi(&cb.with_lambdas(ls)?, &h, 10.0, &eval)?.value);
        }
    }
    Ok(vec![margin(
        "rank-one-selection",
        "rank-one selection dominates",
        worst,
        1e-9,
    )])
}

fn gap_bound_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let eval = MiEvaluator::gaussian();
    let cb = rvq_codebook(2, 4, 1, &LambdaSpec::RankOne(vec![2]), 4, 4, 4, rng)?;
    let model = v4_model();
    let mut bad = 0;
    for _ in 0..2000 {
        let h: ChannelRealization = model.sample(rng);
        for rho in [1.0, 10.0] {
            if delta_mi(&cb, &h, rho, &eval)? > delta_snr(&cb, &h, rho)? + 1e-12 {
                bad += 1;
            }
        }
    }
    Ok(vec![violations("gap-bound", "MI gap <= SNR gap", bad)])
}

fn max_expectation_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    let mut bad = 0;
    for _ in 0..1000 {
        let m = 1 + rng.below(4);
        let n = 1 + rng.below(4);
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            })
            .collect();
        let y: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| 3.0 * rng.standard_normal()).collect())
            .collect();
        let (l, r) = max_expectation_sides(&a, &y)?;
        if l > r + 1e-12 {
            bad += 1;
        }
    }
    Ok(vec![violations(
        "prop3",
        "brute-force max/expectation bound",
        bad,
    )])
}

fn received_snr_suite(rng: &mut Rng) -> Result<Vec<PropertyResult>> {
    // sample-mean received SNR: best rank-one beats every mixed codebook on the same draws
    let (nt, nc, k) = (4, 4, 4);
    let cap = 4.0;
    let base = rvq_codebook(2, 2, 2, &LambdaSpec::RankOne(vec![0, 1]), k, nc, nt, rng)?;
    let model = v4_model();
    let draws: Vec<ChannelRealization> = (0..500).map(|_| model.sample(rng)).collect();
    let mean_snr = |cb: &crate::codebook::QuantizedCodebook| -> Result<f64> {
        let mut s = 0.0;
        for h in &draws {
            s += crate::codebook::select_snr(cb, h)?.value;
        }
        Ok(s / draws.len() as f64)
    };
    let mut best_one = f64::NEG_INFINITY;
    for p in 0..nt {
        for q in 0..nt {
            let l = vec![
                crate::codebook::single_mode(nt, p, cap),
                crate::codebook::single_mode(nt, q, cap),
            ];
            best_one = best_one.max(mean_snr(&base.with_lambdas(l)?)?);
        }
    }
    let mut worst = f64::INFINITY;
    for set in random_rank_two_lambdas(30, 2, nt, nc, k, rng)? {
        worst = worst.min(best_one - mean_snr(&base.with_lambdas(set)?)?);
    }
    Ok(vec![margin(
        "received-snr",
        "best rank-one received SNR dominates",
        worst,
        1e-9,
    )])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for r in run("all", DEFAULT_SEED).unwrap() {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run("nope", 1), Err(Error::Config(_))));
    }

    #[test]
    fn broken_goc_fixture_fails() {
        let mut mats = alamouti().mats().to_vec();
        mats[1] = mats[0].clone();
        let broken = DispersionSet::new(2, 2, mats).unwrap();
        let res = goc_properties("broken", &broken, &mut Rng::new(1, 0)).unwrap();
        assert!(!res[0].pass);
        assert!(res[0].measure > 1.0);
        assert!(res[0]
            .to_string()
            .starts_with("FAIL goc broken orthogonality: residual"));
    }
}
