//! Scalar information kernel for `y = √a·x + n`, `n ~ N(0, 1/2)` real, and the
//! block-level mutual information of GOC codes built on it.
//!
//! All values are in nats. With this noise variance the I-MMSE relation reads
//! `dI/da = mmse(a)`.

use std::sync::OnceLock;

use crate::channel::ChannelRealization;
use crate::error::{precondition, Error, Result};
use crate::matkit::{hermitian_eig, lambda_max, CMatrix};

const PSD_TOL: f64 = 1e-10;
const QUAD_START: usize = 64;
const QUAD_MAX: usize = 1024;
const QUAD_AGREE: f64 = 1e-9;

/// Differential entropy of the real noise term, `½·ln(πe)`.
pub fn noise_entropy() -> f64 {
    0.5 * (std::f64::consts::PI * std::f64::consts::E).ln()
}

/// Real, zero-mean, unit-variance input alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Gaussian,
    Bpsk,
    /// Equally spaced `M`-ary amplitude alphabet, `M ≥ 2`.
    Pam(usize),
}

impl Constellation {
    /// Alphabet points with uniform priors, `None` for the Gaussian input.
    pub fn points(&self) -> Option<Vec<f64>> {
        match *self {
            Constellation::Gaussian => None,
            Constellation::Bpsk => Some(vec![-1.0, 1.0]),
            Constellation::Pam(m) => {
                let scale = (3.0 / ((m * m - 1) as f64)).sqrt();
                Some(
                    (0..m)
                        .map(|i| (2.0 * i as f64 - (m as f64 - 1.0)) * scale)
                        .collect(),
                )
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Constellation::Gaussian => "gaussian".into(),
            Constellation::Bpsk => "bpsk".into(),
            Constellation::Pam(m) => format!("pam{m}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "gaussian" | "gauss" => Ok(Constellation::Gaussian),
            "bpsk" => Ok(Constellation::Bpsk),
            _ => {
                let m = s
                    .strip_prefix("pam")
                    .and_then(|m| m.parse::<usize>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown constellation `{s}`")))?;
                if m < 2 {
                    return Err(Error::Config("PAM order must be >= 2".into()));
                }
                Ok(Constellation::Pam(m))
            }
        }
    }
}

/// Evaluates `I(a)` and `mmse(a)` for one constellation.
#[derive(Debug, Clone)]
pub struct MiEvaluator {
    constellation: Constellation,
    points: Vec<f64>,
    log_prior: f64,
    quad_start: usize,
}

impl MiEvaluator {
    pub fn new(constellation: Constellation) -> Result<Self> {
        Self::with_quadrature(constellation, QUAD_START)
    }

    /// `order` is the starting Gauss–Hermite order; it doubles until two
    /// successive results agree to 1e-9 (capped at 1024).
    pub fn with_quadrature(constellation: Constellation, order: usize) -> Result<Self> {
        if let Constellation::Pam(m) = constellation {
            if m < 2 {
                return precondition("PAM order must be >= 2");
            }
        }
        if !order.is_power_of_two() || !(2..=QUAD_MAX).contains(&order) {
            return precondition("quadrature order must be a power of two in [2, 1024]");
        }
        let points = constellation.points().unwrap_or_default();
        let log_prior = if points.is_empty() {
            0.0
        } else {
            -(points.len() as f64).ln()
        };
        Ok(Self {
            constellation,
            points,
            log_prior,
            quad_start: order,
        })
    }

    pub fn gaussian() -> Self {
        Self::new(Constellation::Gaussian).expect("gaussian evaluator")
    }

    pub fn constellation(&self) -> Constellation {
        self.constellation
    }

    pub fn is_gaussian(&self) -> bool {
        self.constellation == Constellation::Gaussian
    }

    /// Mutual information in nats.
    pub fn mi(&self, a: f64) -> Result<f64> {
        check_snr(a)?;
        Ok(self.mi_unchecked(a))
    }

    pub fn mmse(&self, a: f64) -> Result<f64> {
        check_snr(a)?;
        Ok(self.mmse_unchecked(a))
    }

    pub(crate) fn mi_unchecked(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        if self.is_gaussian() {
            return 0.5 * (2.0 * a).ln_1p();
        }
        self.adaptive(|order| self.mi_discrete(a, order))
    }

    pub(crate) fn mmse_unchecked(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 1.0;
        }
        if self.is_gaussian() {
            return 1.0 / (1.0 + 2.0 * a);
        }
        self.adaptive(|order| self.mmse_discrete(a, order))
    }

    fn adaptive(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut order = self.quad_start;
        let mut prev = f(order);
        while order < QUAD_MAX {
            order *= 2;
            let next = f(order);
            if (next - prev).abs() <= QUAD_AGREE {
                return next;
            }
            prev = next;
        }
        prev
    }

    /// `log Σ_x' p(x') exp(−(δ+t)² + t²)` with `δ = √a(x − x')`.
    fn log_ratio_sum(&self, sa: f64, x: f64, t: f64, buf: &mut [f64]) -> f64 {
        let mut hi = f64::NEG_INFINITY;
        for (slot, &xp) in buf.iter_mut().zip(&self.points) {
            let d = sa * (x - xp);
            let e = self.log_prior - d * (d + 2.0 * t);
            *slot = e;
            hi = hi.max(e);
        }
        hi + buf.iter().map(|e| (e - hi).exp()).sum::<f64>().ln()
    }

    fn mi_discrete(&self, a: f64, order: usize) -> f64 {
        let (nodes, weights) = gauss_hermite(order);
        let sa = a.sqrt();
        let mut buf = vec![0.0; self.points.len()];
        let mut acc = 0.0;
        for &x in &self.points {
            let inner: f64 = nodes
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * self.log_ratio_sum(sa, x, t, &mut buf))
                .sum();
            acc += inner;
        }
        let prior = self.log_prior.exp();
        (-prior * acc / std::f64::consts::PI.sqrt()).max(0.0)
    }

    fn mmse_discrete(&self, a: f64, order: usize) -> f64 {
        let (nodes, weights) = gauss_hermite(order);
        let sa = a.sqrt();
        let mut logw = vec![0.0; self.points.len()];
        let mut acc = 0.0;
        for &x in &self.points {
            for (&t, &w) in nodes.iter().zip(weights) {
                // posterior over x' given y = √a x + t
                let mut hi = f64::NEG_INFINITY;
                for (slot, &xp) in logw.iter_mut().zip(&self.points) {
                    let d = sa * (x - xp);
                    *slot = -d * (d + 2.0 * t);
                    hi = hi.max(*slot);
                }
                let (mut num, mut den) = (0.0, 0.0);
                for (&lw, &xp) in logw.iter().zip(&self.points) {
                    let p = (lw - hi).exp();
                    num += p * xp;
                    den += p;
                }
                let err = x - num / den;
                acc += w * err * err;
            }
        }
        let prior = self.log_prior.exp();
        (prior * acc / std::f64::consts::PI.sqrt()).clamp(0.0, 1.0)
    }
}

fn check_snr(a: f64) -> Result<()> {
    if !a.is_finite() || a < 0.0 {
        return precondition(format!("SNR argument must be finite and >= 0, got {a}"));
    }
    Ok(())
}

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} f(t) dt`, cached per order.
fn gauss_hermite(order: usize) -> (&'static [f64], &'static [f64]) {
    static CACHE: [OnceLock<(Vec<f64>, Vec<f64>)>; 11] = [const { OnceLock::new() }; 11];
    let slot = order.trailing_zeros() as usize;
    let (x, w) = CACHE[slot].get_or_init(|| hermite_rule(order));
    (x, w)
}

/// Golub–Welsch: nodes are the eigenvalues of the Hermite Jacobi matrix
/// (zero diagonal, off-diagonal `√(k/2)`), weights `√π·v₀²` from the first
/// eigenvector components. Implicit QL, tracking only those components.
fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0f64; n];
    let mut e: Vec<f64> = (1..=n)
        .map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 })
        .collect();
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "Hermite rule failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d
        .into_iter()
        .zip(z)
        .map(|(x, v)| (x, std::f64::consts::PI.sqrt() * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// `Σ_k I(ρ/Nt · Tr(H Q_k H†))`; exact block mutual information when the
/// covariances come from a GOC code.
pub fn block_mi(
    h: &ChannelRealization,
    qset: &[CMatrix],
    rho: f64,
    nt: usize,
    nc: usize,
    eval: &MiEvaluator,
) -> Result<f64> {
    if h.nt() != nt {
        return precondition("channel and covariance dimensions disagree");
    }
    check_snr(rho)?;
    let mut total_trace = 0.0;
    for q in qset {
        if q.rows() != nt || q.cols() != nt {
            return precondition("covariances must be nt x nt");
        }
        let e = hermitian_eig(q)?;
        let min = *e.eigenvalues.last().expect("non-empty");
        if min < -PSD_TOL {
            return precondition(format!("covariance is not PSD (eigenvalue {min:e})"));
        }
        total_trace += q.trace().re;
    }
    if total_trace > (nt * nc) as f64 + 1e-9 {
        return precondition(format!(
            "total covariance trace {total_trace} exceeds Nt*Nc = {}",
            nt * nc
        ));
    }
    let mut sum = 0.0;
    for q in qset {
        let hq = &(&h.h * q) * &h.h.adjoint();
        let arg = (rho / nt as f64 * hq.trace().re).max(0.0);
        sum += eval.mi_unchecked(arg);
    }
    Ok(sum)
}

/// `K · I(ρ·Nc/K · λ_max(H†H))`, the perfect-CSI optimum over GOC codes.
pub fn perfect_csi_mi(
    h: &ChannelRealization,
    rho: f64,
    k: usize,
    nc: usize,
    eval: &MiEvaluator,
) -> Result<f64> {
    let lmax = lambda_max(&h.gram())?;
    perfect_csi_mi_from_lambda(lmax, rho, k, nc, eval)
}

/// [`perfect_csi_mi`] for a precomputed `λ_max(H†H)`.
pub fn perfect_csi_mi_from_lambda(
    lambda_max: f64,
    rho: f64,
    k: usize,
    nc: usize,
    eval: &MiEvaluator,
) -> Result<f64> {
    check_snr(rho)?;
    if k == 0 || nc == 0 {
        return precondition("k and nc must be >= 1");
    }
    if k > 2 * nc {
        return Err(Error::Infeasible(format!(
            "K = {k} exceeds 2*Nc = {}; the GOC admits K <= 2Nc only",
            2 * nc
        )));
    }
    let a = (rho * nc as f64 / k as f64 * lambda_max).max(0.0);
    Ok(k as f64 * eval.mi_unchecked(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::iid_model;
    use crate::dispersion::rank_one_set;
    use crate::matkit::{haar_unitary, Rng, C64};

    const GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

    // (a, I, mmse) from an independent 30-digit adaptive quadrature of h(y).
    const BPSK_REF: [(f64, f64, f64); 6] = [
        (0.1, 0.091_090_686_963_109_62, 0.8309059855305609),
        (0.5, 0.336_830_820_346_831_6, 0.44959950920667283),
        (1.0, 0.500_072_136_066_845, 0.231_018_221_929_295_6),
        (2.0, 0.632_720_193_736_866_9, 0.068_597_408_790_738_82),
        (5.0, 0.690_898_838_451_573_2, 0.0024113147354122573),
        (10.0, 0.693_135_624_576_785_3, 1.2036620875489877e-5),
    ];
    const PAM4_REF: [(f64, f64, f64); 6] = [
        (0.1, 0.091_129_331_609_544_13, 0.832_258_522_751_433_6),
        (0.5, 0.343_018_220_787_808_1, 0.48337295159122222),
        (1.0, 0.534_806_740_166_045_3, 0.30843459414240156),
        (2.0, 0.7653951927855758, 0.17651539216197611),
        (5.0, 1.0965391501245897, 0.069_527_416_704_989_53),
        (10.0, 1.2956538271446383, 0.020579308033598348),
    ];

    /// Composite Simpson on the output density: `I = h(y) − h(n)`.
    fn simpson_oracle(points: &[f64], a: f64) -> (f64, f64) {
        let sa = a.sqrt();
        let p = 1.0 / points.len() as f64;
        let lim = sa * points.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 12.0;
        let n = 200_000;
        let hstep = 2.0 * lim / n as f64;
        let (mut ent, mut cm) = (0.0, 0.0);
        for i in 0..=n {
            let y = -lim + i as f64 * hstep;
            let mut dens = 0.0;
            let mut num = 0.0;
            for &x in points {
                let g = p * (-(y - sa * x).powi(2)).exp() / std::f64::consts::PI.sqrt();
                dens += g;
                num += g * x;
            }
            let wgt = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            if dens > 0.0 {
                ent -= wgt * dens * dens.ln();
                cm += wgt * num * num / dens;
            }
        }
        ent *= hstep / 3.0;
        cm *= hstep / 3.0;
        (ent - noise_entropy(), 1.0 - cm)
    }

    #[test]
    fn zero_snr() {
        for c in [
            Constellation::Gaussian,
            Constellation::Bpsk,
            Constellation::Pam(4),
        ] {
            let e = MiEvaluator::new(c).unwrap();
            assert_eq!(e.mi(0.0).unwrap(), 0.0);
            assert_eq!(e.mmse(0.0).unwrap(), 1.0);
            assert!(e.mi(-1.0).is_err());
            assert!(e.mmse(f64::INFINITY).is_err());
        }
    }

    #[test]
    fn gaussian_closed_forms() {
        let e = MiEvaluator::gaussian();
        assert!((e.mi(0.5).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((e.mi(0.5).unwrap() - 0.34657).abs() < 1e-5);
        assert!((e.mmse(0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bpsk_saturates() {
        let e = MiEvaluator::new(Constellation::Bpsk).unwrap();
        assert!((e.mi(1e4).unwrap() - 2f64.ln()).abs() < 1e-6);
        assert!(e.mmse(1e4).unwrap() < 1e-12);
    }

    #[test]
    fn constellations_are_unit_variance() {
        for c in [
            Constellation::Bpsk,
            Constellation::Pam(2),
            Constellation::Pam(4),
            Constellation::Pam(8),
        ] {
            let p = c.points().unwrap();
            let n = p.len() as f64;
            assert!(p.iter().sum::<f64>().abs() < 1e-14);
            assert!((p.iter().map(|x| x * x).sum::<f64>() / n - 1.0).abs() < 1e-14);
        }
        assert_eq!(Constellation::parse("PAM4").unwrap(), Constellation::Pam(4));
        assert!(Constellation::parse("pam1").is_err());
        assert!(Constellation::parse("qpsk").is_err());
    }

    #[test]
    fn matches_frozen_reference() {
        for (c, table) in [
            (Constellation::Bpsk, BPSK_REF),
            (Constellation::Pam(4), PAM4_REF),
        ] {
            let e = MiEvaluator::new(c).unwrap();
            for (a, i_ref, m_ref) in table {
                assert!((e.mi(a).unwrap() - i_ref).abs() < 1e-8, "{c:?} I({a})");
                assert!((e.mmse(a).unwrap() - m_ref).abs() < 1e-8, "{c:?} mmse({a})");
            }
        }
    }

    #[test]
    fn matches_simpson_oracle() {
        for c in [
            Constellation::Bpsk,
            Constellation::Pam(4),
            Constellation::Pam(8),
        ] {
            let e = MiEvaluator::new(c).unwrap();
            let pts = c.points().unwrap();
            for a in [0.03, 0.7, 3.0, 20.0, 80.0] {
                let (i_o, m_o) = simpson_oracle(&pts, a);
                assert!((e.mi(a).unwrap() - i_o).abs() < 1e-8, "{c:?} I({a})");
                assert!((e.mmse(a).unwrap() - m_o).abs() < 1e-8, "{c:?} mmse({a})");
            }
        }
    }

    #[test]
    fn i_mmse_and_concavity() {
        for c in [
            Constellation::Gaussian,
            Constellation::Bpsk,
            Constellation::Pam(4),
        ] {
            let e = MiEvaluator::new(c).unwrap();
            for a in GRID {
                let step = 1e-4;
                let d = (e.mi(a + step).unwrap() - e.mi(a - step).unwrap()) / (2.0 * step);
                let m = e.mmse(a).unwrap();
                assert!(
                    (d - m).abs() <= 1e-3 * m.abs().max(1e-12),
                    "{c:?} a={a}: {d} vs {m}"
                );
            }
            for i in 0..50 {
                let a = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
                let s = 1e-3 * a.max(1e-2);
                let second =
                    e.mi(a + s).unwrap() - 2.0 * e.mi(a).unwrap() + e.mi((a - s).max(0.0)).unwrap();
                assert!(second <= 1e-6, "{c:?} a={a}");
            }
        }
    }

    #[test]
    fn gaussian_dominates_bpsk() {
        let g = MiEvaluator::gaussian();
        let b = MiEvaluator::new(Constellation::Bpsk).unwrap();
        assert!(b.mmse(1.0).unwrap() < 1.0 / 3.0);
        for i in 0..40 {
            let a = 10f64.powf(-2.0 + 4.0 * i as f64 / 39.0);
            assert!(g.mi(a).unwrap() >= b.mi(a).unwrap());
            assert!(g.mmse(a).unwrap() >= b.mmse(a).unwrap());
        }
    }

    #[test]
    fn area_inequality() {
        for c in [Constellation::Gaussian, Constellation::Bpsk] {
            let e = MiEvaluator::new(c).unwrap();
            for z in [1.0, 10.0, 100.0] {
                for k in 1..=8 {
                    let a = z / k as f64;
                    assert!(e.mi(a).unwrap() >= a * e.mmse(a).unwrap() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn block_mi_cases() {
        let mut rng = Rng::new(3, 0);
        let model = iid_model(3, 2).unwrap();
        let g = MiEvaluator::gaussian();
        let h = model.sample(&mut rng);
        let zeros = vec![CMatrix::zeros(3, 3); 4];
        assert_eq!(block_mi(&h, &zeros, 10.0, 3, 2, &g).unwrap(), 0.0);

        let eig = hermitian_eig(&h.gram()).unwrap();
        let u = eig.eigenvectors.column(0);
        let q = CMatrix::from_fn(3, 3, |i, j| u[i] * u[j].conj() * 6.0);
        let v = block_mi(&h, &[q], 2.0, 3, 2, &g).unwrap();
        assert!((v - g.mi(2.0 * 2.0 * eig.lambda_max()).unwrap()).abs() < 1e-10);

        let bad = CMatrix::diag_real(&[1.0, -0.1, 0.0]);
        assert!(block_mi(&h, &[bad], 1.0, 3, 2, &g).is_err());
        let too_big = CMatrix::diag_real(&[7.0, 0.0, 0.0]);
        assert!(block_mi(&h, &[too_big], 1.0, 3, 2, &g).is_err());
    }

    #[test]
    fn averaging_never_hurts() {
        let mut rng = Rng::new(21, 0);
        let model = iid_model(3, 3).unwrap();
        let b = MiEvaluator::new(Constellation::Bpsk).unwrap();
        for _ in 0..50 {
            let h = model.sample(&mut rng);
            let split: Vec<CMatrix> = (0..3)
                .map(|_| {
                    let u = haar_unitary(3, &mut rng).unwrap();
                    let w = [rng.uniform(), rng.uniform(), rng.uniform()];
                    let s: f64 = w.iter().sum();
                    let d: Vec<f64> = w.iter().map(|x| x / s * 3.0).collect();
                    &(&u * &CMatrix::diag_real(&d)) * &u.adjoint()
                })
                .collect();
            let mut mean = CMatrix::zeros(3, 3);
            for q in &split {
                mean = &mean + q;
            }
            let mean = mean.scale_real(1.0 / 3.0).symmetrized();
            let uniform = vec![mean; 3];
            let a = block_mi(&h, &uniform, 3.0, 3, 3, &b).unwrap();
            let s = block_mi(&h, &split, 3.0, 3, 3, &b).unwrap();
            assert!(a >= s - 1e-9);
        }
    }

    #[test]
    fn perfect_csi_cases() {
        let mut rng = Rng::new(5, 0);
        let model = iid_model(2, 2).unwrap();
        let g = MiEvaluator::gaussian();
        let b = MiEvaluator::new(Constellation::Bpsk).unwrap();
        for _ in 0..100 {
            let h = model.sample(&mut rng);
            let lmax = lambda_max(&h.gram()).unwrap();
            let rho = 3.0;
            let nc = 2;
            let v = perfect_csi_mi(&h, rho, 2 * nc, nc, &g).unwrap();
            assert!((v - nc as f64 * (rho * lmax).ln_1p()).abs() < 1e-12);
            assert_eq!(perfect_csi_mi(&h, 0.0, 3, nc, &g).unwrap(), 0.0);
            for e in [&g, &b] {
                let mut prev = 0.0;
                for k in 1..=2 * nc {
                    let cur = perfect_csi_mi(&h, rho, k, nc, e).unwrap();
                    assert!(cur >= prev - 1e-12);
                    prev = cur;
                }
            }
        }
        let h = model.sample(&mut rng);
        assert!(matches!(
            perfect_csi_mi(&h, 1.0, 5, 2, &g),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn dispersion_route_matches_closed_form() {
        // beamforming code on the top eigenvector attains the perfect-CSI value
        let mut rng = Rng::new(6, 0);
        let model = iid_model(4, 4).unwrap();
        let g = MiEvaluator::gaussian();
        for _ in 0..50 {
            let h = model.sample(&mut rng);
            let eig = hermitian_eig(&h.gram()).unwrap();
            let u: Vec<C64> = eig.eigenvectors.column(0);
            for nc in 1..=3 {
                let set = rank_one_set(&u, 2 * nc, nc).unwrap();
                let via_set = block_mi(&h, &set.covariances(), 5.0, 4, nc, &g).unwrap();
                let direct = perfect_csi_mi(&h, 5.0, 2 * nc, nc, &g).unwrap();
                assert!((via_set - direct).abs() <= 1e-9 * direct.max(1.0));
            }
        }
    }
}
