//! Linear-dispersion code sets `X = Σ_k A_k x_k`, the generalized orthogonal
//! constraint (GOC) `A_k A_j† + A_j A_k† = 0`, and the explicit constructions.

use crate::channel::ChannelRealization;
use crate::error::{precondition, Error, Result};
use crate::matkit::{haar_unitary, CMatrix, Rng, C64};
use crate::textfmt::{self, Lines};

/// Residual below which a set counts as GOC-verified.
pub const GOC_TOL: f64 = 1e-10;
const POWER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DispersionSet {
    nt: usize,
    nc: usize,
    mats: Vec<CMatrix>,
    goc_verified: bool,
}

/// Outcome of [`check_goc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GocReport {
    pub holds: bool,
    /// `max_{k≠j} ‖A_k A_j† + A_j A_k†‖_F`, zero when there are no pairs.
    pub worst: f64,
}

impl DispersionSet {
    /// Checks shapes and the total power bound `Σ Tr(A_k A_k†) ≤ nt·nc`.
    pub fn new(nt: usize, nc: usize, mats: Vec<CMatrix>) -> Result<Self> {
        if nt == 0 || nc == 0 {
            return precondition("nt and nc must be >= 1");
        }
        if mats.is_empty() {
            return precondition("a dispersion set needs at least one matrix");
        }
        if let Some(m) = mats.iter().find(|m| m.rows() != nt || m.cols() != nc) {
            return precondition(format!(
                "dispersion matrix is {}x{}, expected {nt}x{nc}",
                m.rows(),
                m.cols()
            ));
        }
        let mut set = Self {
            nt,
            nc,
            mats,
            goc_verified: false,
        };
        let power = set.total_power();
        if power > (nt * nc) as f64 + POWER_SLACK {
            return precondition(format!("total power {power} exceeds nt*nc = {}", nt * nc));
        }
        set.goc_verified = goc_residual(&set.mats) <= GOC_TOL;
        Ok(set)
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn k(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn goc_verified(&self) -> bool {
        self.goc_verified
    }

    pub fn total_power(&self) -> f64 {
        self.mats.iter().map(|a| a.frobenius_norm().powi(2)).sum()
    }

    /// Per-symbol covariances `Q_k = A_k A_k†`.
    pub fn covariances(&self) -> Vec<CMatrix> {
        self.mats.iter().map(|a| a * &a.adjoint()).collect()
    }

    /// `A_k ← U A_k`, e.g. to map eigen-coordinates back through `U_t`.
    pub fn rotated(&self, u: &CMatrix) -> Result<Self> {
        if u.rows() != self.nt || u.unitarity_defect().is_none_or(|d| d > 1e-12) {
            return precondition("rotation must be an nt x nt unitary");
        }
        Self::new(self.nt, self.nc, self.mats.iter().map(|a| u * a).collect())
    }

    /// Header `nt nc k` followed by K blocks of `nt` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.nt, self.nc, self.k());
        for a in &self.mats {
            textfmt::write_matrix(&mut out, a);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let h = lines.header(3)?;
        let (nt, nc, k) = (h[0], h[1], h[2]);
        let mats = (0..k)
            .map(|_| lines.matrix(nt, nc))
            .collect::<Result<Vec<_>>>()?;
        lines.finish()?;
        Self::new(nt, nc, mats)
    }
}

fn goc_residual(mats: &[CMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..mats.len() {
        for j in (k + 1)..mats.len() {
            let s = &(&mats[k] * &mats[j].adjoint()) + &(&mats[j] * &mats[k].adjoint());
            worst = worst.max(s.frobenius_norm());
        }
    }
    worst
}

pub fn check_goc(set: &DispersionSet, tol: f64) -> GocReport {
    let worst = goc_residual(&set.mats);
    GocReport {
        holds: worst <= tol,
        worst,
    }
}

/// `K × Nc` matrix whose rows `v_k` satisfy `VV† = I + iX`, `X` real skew-symmetric.
#[derive(Debug, Clone)]
pub struct VMatrix {
    nc: usize,
    rows: Vec<Vec<C64>>,
}

impl VMatrix {
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn rows(&self) -> &[Vec<C64>] {
        &self.rows
    }

    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.k(), self.nc, |i, j| self.rows[i][j])
    }

    /// `VV†`.
    pub fn gram(&self) -> CMatrix {
        let v = self.as_matrix();
        &v * &v.adjoint()
    }

    /// `‖Re(VV†) − I‖_F + ‖Im(VV†) + Im(VV†)ᵀ‖_F`; zero iff the rows meet the condition.
    pub fn condition_residual(&self) -> f64 {
        let g = self.gram();
        let k = self.k();
        let mut re = 0.0;
        let mut skew = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                re += (g[(i, j)].re - target).powi(2);
                skew += (g[(i, j)].im + g[(j, i)].im).powi(2);
            }
        }
        re.sqrt() + skew.sqrt()
    }
}

/// For `k ≤ nc` the rows are `e_1, …, e_k` (so `VV† = I`); above that they
/// alternate `e_m`, `i·e_m` for `m = 1, 2, …`, truncated to `k` rows.
pub fn build_v_matrix(k: usize, nc: usize) -> Result<VMatrix> {
    if nc == 0 || k == 0 {
        return precondition("k and nc must be >= 1");
    }
    if k > 2 * nc {
        return Err(Error::Infeasible(format!(
            "K = {k} exceeds 2*Nc = {}; the GOC admits K <= 2Nc only",
            2 * nc
        )));
    }
    if k <= nc {
        return Ok(VMatrix {
            nc,
            rows: orthonormal_v(k, nc),
        });
    }
    let rows = (0..k)
        .map(|r| {
            let mut row = vec![C64::new(0.0, 0.0); nc];
            row[r / 2] = if r % 2 == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 1.0)
            };
            row
        })
        .collect();
    Ok(VMatrix { nc, rows })
}

/// Orthonormal-row variant for `k ≤ nc`: `v_k = e_k`.
fn orthonormal_v(k: usize, nc: usize) -> Vec<Vec<C64>> {
    (0..k)
        .map(|r| {
            let mut row = vec![C64::new(0.0, 0.0); nc];
            row[r] = C64::new(1.0, 0.0);
            row
        })
        .collect()
}

/// Beamforming code `A_k = √(Nt·Nc/K) · u v_k` with `v_k` from [`build_v_matrix`].
pub fn rank_one_set(u: &[C64], k: usize, nc: usize) -> Result<DispersionSet> {
    let nt = u.len();
    if nt == 0 {
        return precondition("beamforming vector must be non-empty");
    }
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return precondition(format!("beamforming vector has norm {norm}, expected 1"));
    }
    let v_rows = build_v_matrix(k, nc)?.rows;
    let scale = ((nt * nc) as f64 / k as f64).sqrt();
    let mats = v_rows
        .iter()
        .map(|v| CMatrix::from_fn(nt, nc, |i, j| u[i] * v[j] * scale))
        .collect();
    DispersionSet::new(nt, nc, mats)
}

/// Statistical-CSI code in transmit eigen-coordinates:
/// `Ã_k = Σ_l √λ_{p_l} e_{p_l} y_{k,l}†` with the `y_{k,l}` drawn as disjoint
/// columns of one Haar unitary of size `nc`, so `Ã_k Ã_j† = 0` and `Ã_k Ã_k† = Λ`.
/// Only the `r·k ≤ nc` regime is constructed.
pub fn statistical_set(
    lambda_diag: &[f64],
    k: usize,
    nc: usize,
    rng: &mut Rng,
) -> Result<DispersionSet> {
    let nt = lambda_diag.len();
    if nt == 0 || k == 0 || nc == 0 {
        return precondition("lambda, k and nc must be non-empty");
    }
    if lambda_diag.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return precondition("lambda entries must be finite and non-negative");
    }
    let trace: f64 = lambda_diag.iter().sum();
    let target = (nt * nc) as f64 / k as f64;
    if (trace - target).abs() > 1e-9 {
        return precondition(format!("Tr(Lambda) = {trace}, expected Nt*Nc/K = {target}"));
    }
    let support: Vec<usize> = (0..nt).filter(|&m| lambda_diag[m] > 0.0).collect();
    let r = support.len();
    if r * k > nc {
        return Err(Error::Infeasible(format!(
            "r*K = {} exceeds Nc = {nc}; only the rK <= Nc construction is implemented",
            r * k
        )));
    }
    let w = haar_unitary(nc, rng)?;
    let mats = (0..k)
        .map(|kk| {
            let mut a = CMatrix::zeros(nt, nc);
            for (l, &p) in support.iter().enumerate() {
                let col = kk * r + l;
                let amp = lambda_diag[p].sqrt();
                for j in 0..nc {
                    a[(p, j)] = w[(j, col)].conj() * amp;
                }
            }
            a
        })
        .collect();
    DispersionSet::new(nt, nc, mats)
}

/// `max_{k≠j} |Re Tr(H A_k A_j† H†)|`, zero when `K = 1`.
pub fn decoupling_residual(h: &ChannelRealization, set: &DispersionSet) -> Result<f64> {
    if h.nt() != set.nt() {
        return precondition(format!(
            "channel has {} transmit antennas, dispersion set has {}",
            h.nt(),
            set.nt()
        ));
    }
    let ha: Vec<CMatrix> = set.mats.iter().map(|a| &h.h * a).collect();
    let mut worst: f64 = 0.0;
    for k in 0..ha.len() {
        for j in 0..ha.len() {
            if k == j {
                continue;
            }
            // Tr(X Y†) = Σ x_il conj(y_il)
            let tr: C64 = ha[k]
                .data()
                .iter()
                .zip(ha[j].data())
                .map(|(x, y)| x * y.conj())
                .sum();
            worst = worst.max(tr.re.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::iid_model;
    use crate::matkit::hermitian_eig;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn goc_examples() {
        let single = DispersionSet::new(2, 2, vec![CMatrix::identity(2)]).unwrap();
        assert!(check_goc(&single, GOC_TOL).holds);
        assert_eq!(check_goc(&single, GOC_TOL).worst, 0.0);

        let a1 = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let a2 = CMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let alamouti = DispersionSet::new(2, 2, vec![a1.clone(), a2]).unwrap();
        assert!(check_goc(&alamouti, GOC_TOL).holds);
        assert!(alamouti.goc_verified());

        let same = DispersionSet::new(2, 2, vec![a1.clone(), a1]).unwrap();
        let rep = check_goc(&same, GOC_TOL);
        assert!(!rep.holds);
        assert!((rep.worst - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(!same.goc_verified());
    }

    #[test]
    fn power_bound_enforced() {
        let big = CMatrix::identity(2).scale_real(2.0);
        assert!(DispersionSet::new(2, 2, vec![big]).is_err());
        assert!(DispersionSet::new(2, 2, vec![CMatrix::zeros(2, 3)]).is_err());
    }

    #[test]
    fn v_matrix_full_pattern() {
        let v = build_v_matrix(4, 2).unwrap();
        let expect = [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 1.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 1.0)],
        ];
        for (row, e) in v.rows().iter().zip(expect.iter()) {
            assert_eq!(row.as_slice(), e.as_slice());
        }
        let g = v.gram();
        // VV† = I + iX
        let x = |i, j| g[(i, j)].im;
        assert_eq!(x(0, 1), -1.0);
        assert_eq!(x(1, 0), 1.0);
        assert_eq!(x(2, 3), -1.0);
        assert_eq!(x(3, 2), 1.0);
        assert_eq!(x(0, 2), 0.0);
        assert_eq!(v.condition_residual(), 0.0);
    }

    #[test]
    fn v_matrix_small_k_is_identity_gram() {
        for nc in 1..=4 {
            for k in 1..=nc {
                let v = build_v_matrix(k, nc).unwrap();
                assert_eq!(v.gram(), CMatrix::identity(k));
            }
        }
        let v = build_v_matrix(3, 2).unwrap();
        assert_eq!(v.rows()[2], vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(v.condition_residual() == 0.0);
    }

    #[test]
    fn rank_one_small_k_uses_basis_rows() {
        let v = rank_one_set(&[c(1.0, 0.0)], 3, 3).unwrap();
        for (k, a) in v.mats().iter().enumerate() {
            for j in 0..3 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_eq!(a[(0, j)], c(expect, 0.0));
            }
        }
        let q = v.covariances();
        assert_eq!(q[0][(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn v_matrix_infeasible() {
        assert!(matches!(build_v_matrix(5, 2), Err(Error::Infeasible(_))));
        assert!(build_v_matrix(4, 2).is_ok());
    }

    #[test]
    fn rank_one_example() {
        let set = rank_one_set(&[c(1.0, 0.0), c(0.0, 0.0)], 2, 1).unwrap();
        assert_eq!(set.mats()[0].data(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(set.mats()[1].data(), &[c(0.0, 1.0), c(0.0, 0.0)]);
        assert!(set.goc_verified());
        assert!((set.total_power() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_random_direction() {
        let mut rng = Rng::new(4, 0);
        for nc in 1..=4 {
            for k in 1..=2 * nc {
                let u = haar_unitary(3, &mut rng).unwrap().column(0);
                let set = rank_one_set(&u, k, nc).unwrap();
                assert!(check_goc(&set, GOC_TOL).holds);
                assert!((set.total_power() - (3 * nc) as f64).abs() < 1e-9);
                for q in set.covariances() {
                    let e = hermitian_eig(&q).unwrap();
                    assert!((e.eigenvalues[0] - (3 * nc) as f64 / k as f64).abs() < 1e-9);
                    assert!(e.eigenvalues[1..].iter().all(|l| l.abs() < 1e-12));
                }
            }
        }
        let not_unit = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(rank_one_set(&not_unit, 1, 1).is_err());
        assert!(matches!(
            rank_one_set(&[c(1.0, 0.0)], 3, 1),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn statistical_examples() {
        let mut rng = Rng::new(8, 0);
        // r = 2, k = 2, nc = 4: Tr = 4*4/2 = 8
        let lambda = [5.0, 3.0, 0.0, 0.0];
        let set = statistical_set(&lambda, 2, 4, &mut rng).unwrap();
        assert!(check_goc(&set, GOC_TOL).worst <= 1e-10);
        for q in set.covariances() {
            assert!((&q - &CMatrix::diag_real(&lambda)).frobenius_norm() < 1e-12);
        }
        for k in 0..2 {
            for j in 0..2 {
                if k != j {
                    let cross = &set.mats()[k] * &set.mats()[j].adjoint();
                    assert!(cross.frobenius_norm() < 1e-12);
                }
            }
        }
        let lambda3 = [16.0 / 3.0 * 0.5, 16.0 / 3.0 * 0.5, 0.0, 0.0];
        assert!(matches!(
            statistical_set(&lambda3, 3, 4, &mut rng),
            Err(Error::Infeasible(_))
        ));
        assert!(statistical_set(&[1.0, 1.0], 2, 4, &mut rng).is_err());
    }

    #[test]
    fn statistical_rank_one_matches_beamforming() {
        let mut rng = Rng::new(8, 1);
        // nt = 3, nc = 4, k = 2: trace 6 on mode 1
        let stat = statistical_set(&[0.0, 6.0, 0.0], 2, 4, &mut rng).unwrap();
        let e1 = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let beam = rank_one_set(&e1, 2, 4).unwrap();
        for (a, b) in stat.covariances().iter().zip(beam.covariances()) {
            assert!((a - &b).frobenius_norm() < 1e-12);
        }
        assert!(stat.goc_verified());
    }

    #[test]
    fn decoupling_witness() {
        let model = iid_model(3, 2).unwrap();
        let mut rng = Rng::new(1, 0);
        let u = haar_unitary(3, &mut rng).unwrap().column(0);
        let good = rank_one_set(&u, 6, 3).unwrap();
        let a = CMatrix::from_fn(3, 3, |i, j| if i == j { c(0.5, 0.0) } else { c(0.0, 0.0) });
        let bad = DispersionSet::new(3, 3, vec![a.clone(), a.clone()]).unwrap();
        let single = DispersionSet::new(3, 3, vec![a.clone()]).unwrap();
        for _ in 0..100 {
            let h = model.sample(&mut rng);
            assert!(decoupling_residual(&h, &good).unwrap() <= 1e-10);
            let self_overlap = (&h.h * &a).frobenius_norm().powi(2);
            let r = decoupling_residual(&h, &bad).unwrap();
            assert!((r - self_overlap).abs() < 1e-12 && r > 0.0);
            assert_eq!(decoupling_residual(&h, &single).unwrap(), 0.0);
        }
        let wrong = iid_model(2, 2).unwrap().sample(&mut rng);
        assert!(decoupling_residual(&wrong, &good).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = Rng::new(2, 0);
        let u = haar_unitary(2, &mut rng).unwrap().column(1);
        let set = rank_one_set(&u, 3, 2).unwrap();
        let text = set.to_text();
        assert!(text.starts_with("2 2 3\n"));
        let back = DispersionSet::from_text(&text).unwrap();
        assert_eq!(back.mats(), set.mats());
        assert!(DispersionSet::from_text("2 2 1\n1+0i 0+0i\n").is_err());
    }
}
