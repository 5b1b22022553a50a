//! B-bit quantized covariance codebooks `Q^{i,j} = U_i Λ_j U_i†` and the two
//! receiver-side selection rules.

use crate::channel::ChannelRealization;
use crate::error::{precondition, Result};
use crate::infotheory::{perfect_csi_mi_from_lambda, MiEvaluator};
use crate::matkit::{haar_unitary, hermitian_eig, CMatrix, EigSystem, Rng};
use crate::textfmt::{self, Lines};

const TRACE_SLACK: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QuantizedCodebook {
    b: u32,
    nt: usize,
    nc: usize,
    k: usize,
    unitaries: Vec<CMatrix>,
    lambdas: Vec<Vec<f64>>,
}

/// How the power-allocation half of a codebook is specified.
#[derive(Debug, Clone)]
pub enum LambdaSpec {
    /// One excited mode per diagonal (0-based), full power `Nt·Nc/K` on it.
    RankOne(Vec<usize>),
    Explicit(Vec<Vec<f64>>),
}

/// Codeword picked by the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub i: usize,
    pub j: usize,
    /// Nats for the MI rule, `Σ_m α_jm s_im` for the SNR rule.
    pub value: f64,
}

impl QuantizedCodebook {
    pub fn new(
        b: u32,
        unitaries: Vec<CMatrix>,
        lambdas: Vec<Vec<f64>>,
        k: usize,
        nc: usize,
    ) -> Result<Self> {
        let n1 = unitaries.len();
        let n2 = lambdas.len();
        if n1 == 0 || n2 == 0 {
            return precondition("codebook needs at least one unitary and one power allocation");
        }
        if b >= usize::BITS || n1 * n2 != 1usize << b {
            return precondition(format!("split {n1}x{n2} does not give 2^{b} codewords"));
        }
        if k == 0 || nc == 0 || k > 2 * nc {
            return precondition(format!("need 1 <= K <= 2Nc, got K = {k}, Nc = {nc}"));
        }
        let nt = unitaries[0].rows();
        for u in &unitaries {
            if u.rows() != nt || u.unitarity_defect().is_none_or(|d| d > UNITARY_TOL) {
                return precondition("every U_i must be an Nt x Nt unitary");
            }
        }
        let cap = (nt * nc) as f64 / k as f64;
        for l in &lambdas {
            if l.len() != nt {
                return precondition("every power allocation must have Nt entries");
            }
            if l.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return precondition("power allocations must be finite and non-negative");
            }
            let tr: f64 = l.iter().sum();
            if tr > cap + TRACE_SLACK {
                return precondition(format!("Tr(Lambda) = {tr} exceeds Nt*Nc/K = {cap}"));
            }
        }
        Ok(Self {
            b,
            nt,
            nc,
            k,
            unitaries,
            lambdas,
        })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn n1(&self) -> usize {
        self.unitaries.len()
    }

    pub fn n2(&self) -> usize {
        self.lambdas.len()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn lambdas(&self) -> &[Vec<f64>] {
        &self.lambdas
    }

    /// `Nt·Nc/K`, the per-symbol trace budget.
    pub fn power_cap(&self) -> f64 {
        (self.nt * self.nc) as f64 / self.k as f64
    }

    /// `α_jm = Λ_j(m)·K/(Nt·Nc)`.
    pub fn alphas(&self, j: usize) -> Vec<f64> {
        let cap = self.power_cap();
        self.lambdas[j].iter().map(|l| l / cap).collect()
    }

    /// `U_i Λ_j U_i†`.
    pub fn codeword(&self, i: usize, j: usize) -> CMatrix {
        let u = &self.unitaries[i];
        (&(u * &CMatrix::diag_real(&self.lambdas[j])) * &u.adjoint()).symmetrized()
    }

    /// Same unitaries, different power allocations.
    pub fn with_lambdas(&self, lambdas: Vec<Vec<f64>>) -> Result<Self> {
        let n1 = self.n1();
        let bits = (n1 * lambdas.len()).trailing_zeros();
        Self::new(bits, self.unitaries.clone(), lambdas, self.k, self.nc)
    }

    /// Header `b n1 n2 nt nc k`, then the `N1` unitaries and the `N2` diagonals
    /// as `Nt × Nt` blocks.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {} {}\n",
            self.b,
            self.n1(),
            self.n2(),
            self.nt,
            self.nc,
            self.k
        );
        for u in &self.unitaries {
            textfmt::write_matrix(&mut out, u);
        }
        for l in &self.lambdas {
            textfmt::write_matrix(&mut out, &CMatrix::diag_real(l));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let h = lines.header(6)?;
        let (b, n1, n2, nt, nc, k) = (h[0], h[1], h[2], h[3], h[4], h[5]);
        let unitaries = (0..n1)
            .map(|_| lines.matrix(nt, nt))
            .collect::<Result<Vec<_>>>()?;
        let lambdas = (0..n2)
            .map(|_| {
                let m = lines.matrix(nt, nt)?;
                Ok((0..nt).map(|i| m[(i, i)].re).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        lines.finish()?;
        Self::new(b as u32, unitaries, lambdas, k, nc)
    }

    fn check_channel(&self, h: &ChannelRealization) -> Result<()> {
        if h.nt() != self.nt {
            return precondition(format!(
                "channel has {} transmit antennas, codebook expects {}",
                h.nt(),
                self.nt
            ));
        }
        Ok(())
    }
}

/// Single-mode diagonal with the full budget on `mode`.
pub fn single_mode(nt: usize, mode: usize, cap: f64) -> Vec<f64> {
    let mut l = vec![0.0; nt];
    l[mode] = cap;
    l
}

/// Haar-random `{U_i}` paired with the requested power allocations.
#[allow(clippy::too_many_arguments)]
pub fn rvq_codebook(
    b: u32,
    n1: usize,
    n2: usize,
    lambda_spec: &LambdaSpec,
    k: usize,
    nc: usize,
    nt: usize,
    rng: &mut Rng,
) -> Result<QuantizedCodebook> {
    if n1 == 0 || n2 == 0 || b >= usize::BITS || n1 * n2 != 1usize << b {
        return precondition(format!("split {n1}x{n2} does not give 2^{b} codewords"));
    }
    if k == 0 {
        return precondition("K must be >= 1");
    }
    let cap = (nt * nc) as f64 / k as f64;
    let lambdas = match lambda_spec {
        LambdaSpec::RankOne(modes) => {
            if modes.len() != n2 {
                return precondition(format!("{} modes given for N2 = {n2}", modes.len()));
            }
            if let Some(m) = modes.iter().find(|&&m| m >= nt) {
                return precondition(format!("mode {m} out of range for Nt = {nt}"));
            }
            modes.iter().map(|&m| single_mode(nt, m, cap)).collect()
        }
        LambdaSpec::Explicit(ls) => {
            if ls.len() != n2 {
                return precondition(format!("{} diagonals given for N2 = {n2}", ls.len()));
            }
            ls.clone()
        }
    };
    let unitaries = (0..n1)
        .map(|_| haar_unitary(nt, rng))
        .collect::<Result<Vec<_>>>()?;
    QuantizedCodebook::new(b, unitaries, lambdas, k, nc)
}

/// `count` random sets of `n2` rank-two diagonals: a uniform mode pair and a
/// `(w, 1−w)` split with `w ~ U(0,1)`, scaled to trace `Nt·Nc/K`.
pub fn random_rank_two_lambdas(
    count: usize,
    n2: usize,
    nt: usize,
    nc: usize,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if count == 0 || n2 == 0 || nc == 0 || k == 0 {
        return precondition("counts must be >= 1");
    }
    if nt < 2 {
        return precondition("rank-two allocations need Nt >= 2");
    }
    let pairs = mode_pairs(nt);
    let cap = (nt * nc) as f64 / k as f64;
    Ok((0..count)
        .map(|_| {
            (0..n2)
                .map(|_| {
                    let (p, q) = pairs[rng.below(pairs.len())];
                    let mut w = rng.uniform();
                    while w == 0.0 {
                        w = rng.uniform();
                    }
                    let mut l = vec![0.0; nt];
                    l[p] = w * cap;
                    l[q] = (1.0 - w) * cap;
                    l
                })
                .collect()
        })
        .collect())
}

/// Unordered mode pairs `(p, q)`, `p < q`.
pub fn mode_pairs(nt: usize) -> Vec<(usize, usize)> {
    (0..nt)
        .flat_map(|p| ((p + 1)..nt).map(move |q| (p, q)))
        .collect()
}

/// `s_m = ‖(Λ_H^{1/2} U_H† U) e_m‖²` for the eigendecomposition `H†H = U_H Λ_H U_H†`.
pub fn s_matrix(h: &ChannelRealization, u: &CMatrix) -> Result<Vec<f64>> {
    if u.rows() != h.nt() || !u.is_square() {
        return precondition("unitary must be Nt x Nt");
    }
    if u.unitarity_defect().is_none_or(|d| d > 1e-10) {
        return precondition("s_matrix needs a unitary argument");
    }
    let eig = hermitian_eig(&h.gram())?;
    Ok(s_from_eig(&eig, u))
}

fn s_from_eig(eig: &EigSystem, u: &CMatrix) -> Vec<f64> {
    let proj = &eig.eigenvectors.adjoint() * u;
    let nt = u.cols();
    (0..nt)
        .map(|m| {
            (0..nt)
                .map(|r| eig.eigenvalues[r].max(0.0) * proj[(r, m)].norm_sqr())
                .sum()
        })
        .collect()
}

/// `‖H U_i e_m‖²` for every unitary and mode; equals `s_matrix` row by row.
pub fn mode_gains(h: &ChannelRealization, unitaries: &[CMatrix]) -> Vec<Vec<f64>> {
    unitaries
        .iter()
        .map(|u| {
            let hu = &h.h * u;
            (0..hu.cols()).map(|m| hu.column_norm_sqr(m)).collect()
        })
        .collect()
}

/// `max_{i,j} Σ_m Λ_j(m)·g_im` with lexicographic tie-break.
pub(crate) fn best_weighted(gains: &[Vec<f64>], lambdas: &[Vec<f64>]) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::NEG_INFINITY);
    for (i, g) in gains.iter().enumerate() {
        for (j, l) in lambdas.iter().enumerate() {
            let v: f64 = g.iter().zip(l).map(|(a, b)| a * b).sum();
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Receiver rule maximizing `K·I(ρ/Nt·Tr(H Q^{i,j} H†))`.
pub fn select_mi(
    cb: &QuantizedCodebook,
    h: &ChannelRealization,
    rho: f64,
    eval: &MiEvaluator,
) -> Result<Selection> {
    cb.check_channel(h)?;
    if !rho.is_finite() || rho < 0.0 {
        return precondition("rho must be finite and >= 0");
    }
    let gains = mode_gains(h, &cb.unitaries);
    let scale = rho / cb.nt as f64;
    let mut best = Selection {
        i: 0,
        j: 0,
        value: f64::NEG_INFINITY,
    };
    for (i, g) in gains.iter().enumerate() {
        for (j, l) in cb.lambdas.iter().enumerate() {
            let arg: f64 = g.iter().zip(l).map(|(a, b)| a * b).sum();
            let v = cb.k as f64 * eval.mi_unchecked((scale * arg).max(0.0));
            if v > best.value {
                best = Selection { i, j, value: v };
            }
        }
    }
    Ok(best)
}

/// Receiver rule maximizing the received-SNR argument `Σ_m α_jm s_im`.
pub fn select_snr(cb: &QuantizedCodebook, h: &ChannelRealization) -> Result<Selection> {
    cb.check_channel(h)?;
    let eig = hermitian_eig(&h.gram())?;
    Ok(select_snr_with(cb, &eig))
}

/// SNR-rule selection together with `λ_max(H†H)`, from one eigendecomposition.
pub(crate) fn snr_selection(
    cb: &QuantizedCodebook,
    h: &ChannelRealization,
) -> Result<(Selection, f64)> {
    cb.check_channel(h)?;
    let eig = hermitian_eig(&h.gram())?;
    Ok((select_snr_with(cb, &eig), eig.lambda_max()))
}

fn select_snr_with(cb: &QuantizedCodebook, eig: &EigSystem) -> Selection {
    let s: Vec<Vec<f64>> = cb.unitaries.iter().map(|u| s_from_eig(eig, u)).collect();
    let alphas: Vec<Vec<f64>> = (0..cb.n2()).map(|j| cb.alphas(j)).collect();
    let (i, j, value) = best_weighted(&s, &alphas);
    Selection { i, j, value }
}

/// `ρNc/K·(λ_max(H†H) − Σ_m α_jm s_im)` at the SNR-rule selection.
pub fn delta_snr(cb: &QuantizedCodebook, h: &ChannelRealization, rho: f64) -> Result<f64> {
    cb.check_channel(h)?;
    let eig = hermitian_eig(&h.gram())?;
    let sel = select_snr_with(cb, &eig);
    Ok(rho * cb.nc as f64 / cb.k as f64 * (eig.lambda_max() - sel.value))
}

/// Per-symbol gap `φ(ρNc/K·λ_max) − max_{i,j} φ(...)`: the perfect-CSI block
/// MI minus the MI-rule selection value, divided by `K`.
pub fn delta_mi(
    cb: &QuantizedCodebook,
    h: &ChannelRealization,
    rho: f64,
    eval: &MiEvaluator,
) -> Result<f64> {
    let sel = select_mi(cb, h, rho, eval)?;
    let lmax = hermitian_eig(&h.gram())?.lambda_max();
    let perfect = perfect_csi_mi_from_lambda(lmax, rho, cb.k, cb.nc, eval)?;
    Ok((perfect - sel.value) / cb.k as f64)
}

/// Both sides of `max_j Σ_k a_jk y_jk ≤ Σ_{k_1..k_M} Π_j a_{j,k_j} · max_j y_{j,k_j}`,
/// the right side by enumerating all `N^M` index tuples.
pub fn max_expectation_sides(a: &[Vec<f64>], y: &[Vec<f64>]) -> Result<(f64, f64)> {
    let m = a.len();
    if m == 0 || y.len() != m {
        return precondition("weights and values need the same non-zero row count");
    }
    let n = a[0].len();
    if n == 0 || a.iter().chain(y).any(|row| row.len() != n) {
        return precondition("all rows need the same non-zero length");
    }
    let lhs = a
        .iter()
        .zip(y)
        .map(|(ar, yr)| ar.iter().zip(yr).map(|(p, v)| p * v).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let total = n.pow(m as u32);
    let mut rhs = 0.0;
    let mut idx = vec![0usize; m];
    for _ in 0..total {
        let mut w = 1.0;
        let mut mx = f64::NEG_INFINITY;
        for (j, &kj) in idx.iter().enumerate() {
            w *= a[j][kj];
            mx = mx.max(y[j][kj]);
        }
        rhs += w * mx;
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    Ok((lhs, rhs))
}
