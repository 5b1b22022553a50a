//! Canonical correlated Rayleigh channel `H = U_r H_ind U_t†`.

use crate::error::{precondition, Result};
use crate::matkit::{CMatrix, Rng};

const UNITARY_TOL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-9;

/// Raw V4 variance profile; rows index receive antennas.
const V4_RAW: [[f64; 4]; 4] = [
    [0.1, 0.0, 0.4, 0.0],
    [0.0, 0.1, 0.4, 0.0],
    [0.0, 0.0, 0.4, 0.4],
    [0.0, 0.0, 0.4, 0.4],
];

/// Channel law: eigenbases plus a per-entry variance mask for `H_ind`.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    nt: usize,
    nr: usize,
    ut: CMatrix,
    ur: CMatrix,
    /// `nr × nt`, row-major.
    vmask: Vec<f64>,
}

/// One draw of the channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub hind: CMatrix,
}

impl CorrelationModel {
    /// Validates dimensions, unitarity and the `sum(vmask) = nt·nr` normalization.
    pub fn new(ut: CMatrix, ur: CMatrix, vmask: Vec<f64>) -> Result<Self> {
        let nt = ut.rows();
        let nr = ur.rows();
        if nt == 0 || nr == 0 {
            return precondition("channel dimensions must be >= 1");
        }
        if ut.unitarity_defect().is_none_or(|d| d > UNITARY_TOL) {
            return precondition("transmit eigenbasis is not unitary");
        }
        if ur.unitarity_defect().is_none_or(|d| d > UNITARY_TOL) {
            return precondition("receive eigenbasis is not unitary");
        }
        if vmask.len() != nt * nr {
            return precondition(format!(
                "variance mask has {} entries, expected {}",
                vmask.len(),
                nt * nr
            ));
        }
        if vmask.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return precondition("variance mask entries must be finite and non-negative");
        }
        let total: f64 = vmask.iter().sum();
        let target = (nt * nr) as f64;
        if (total - target).abs() > POWER_TOL {
            return precondition(format!(
                "variance mask sums to {total}, expected nt*nr = {target}"
            ));
        }
        Ok(Self {
            nt,
            nr,
            ut,
            ur,
            vmask,
        })
    }

    /// Identity eigenbases with an explicit variance mask.
    pub fn with_mask(nt: usize, nr: usize, vmask: Vec<f64>) -> Result<Self> {
        if nt == 0 || nr == 0 {
            return precondition("channel dimensions must be >= 1");
        }
        Self::new(CMatrix::identity(nt), CMatrix::identity(nr), vmask)
    }

    /// Like [`with_mask`](Self::with_mask) but rescales the mask to sum to `nt·nr`.
    pub fn with_normalized_mask(nt: usize, nr: usize, vmask: Vec<f64>) -> Result<Self> {
        let total: f64 = vmask.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return precondition("variance mask must have positive total");
        }
        let scale = (nt * nr) as f64 / total;
        Self::with_mask(nt, nr, vmask.into_iter().map(|v| v * scale).collect())
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ut(&self) -> &CMatrix {
        &self.ut
    }

    pub fn ur(&self) -> &CMatrix {
        &self.ur
    }

    pub fn vmask(&self) -> &[f64] {
        &self.vmask
    }

    /// Variance of `H_ind(i, j)`.
    pub fn variance(&self, i: usize, j: usize) -> f64 {
        self.vmask[i * self.nt + j]
    }

    /// `E‖H_ind[:, m]‖²` for every transmit mode `m`.
    pub fn column_powers(&self) -> Vec<f64> {
        (0..self.nt)
            .map(|j| (0..self.nr).map(|i| self.variance(i, j)).sum())
            .collect()
    }

    /// Replace the transmit eigenbasis.
    pub fn with_ut(mut self, ut: CMatrix) -> Result<Self> {
        if ut.rows() != self.nt || ut.unitarity_defect().is_none_or(|d| d > UNITARY_TOL) {
            return precondition("transmit eigenbasis must be a unitary of size nt");
        }
        self.ut = ut;
        Ok(self)
    }

    /// Draws `H_ind` entrywise and assembles `H = U_r H_ind U_t†`.
    pub fn sample(&self, rng: &mut Rng) -> ChannelRealization {
        let hind = CMatrix::from_fn(self.nr, self.nt, |i, j| {
            rng.complex_gaussian(self.variance(i, j))
                .expect("variance mask validated at construction")
        });
        let h = &(&self.ur * &hind) * &self.ut.adjoint();
        ChannelRealization { h, hind }
    }
}

/// i.i.d. `CN(0,1)` entries.
pub fn iid_model(nt: usize, nr: usize) -> Result<CorrelationModel> {
    if nt == 0 || nr == 0 {
        return precondition("channel dimensions must be >= 1");
    }
    CorrelationModel::with_mask(nt, nr, vec![1.0; nt * nr])
}

/// The 4×4 correlated profile `(16/2.6)·V4` with identity eigenbases.
pub fn v4_model() -> CorrelationModel {
    let mask = V4_RAW.iter().flatten().map(|v| v * 16.0 / 2.6).collect();
    CorrelationModel::with_mask(4, 4, mask).expect("V4 profile is normalized")
}

pub fn sample(model: &CorrelationModel, rng: &mut Rng) -> ChannelRealization {
    model.sample(rng)
}

impl ChannelRealization {
    pub fn nt(&self) -> usize {
        self.h.cols()
    }

    pub fn nr(&self) -> usize {
        self.h.rows()
    }

    /// Wraps a bare matrix with identity eigenbases (`H_ind = H`).
    pub fn from_h(h: CMatrix) -> Self {
        Self { hind: h.clone(), h }
    }

    /// `H†H`.
    pub fn gram(&self) -> CMatrix {
        &self.h.adjoint() * &self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::{haar_unitary, hermitian_eig};

    #[test]
    fn iid_normalization() {
        assert_eq!(iid_model(2, 2).unwrap().vmask().iter().sum::<f64>(), 4.0);
        assert_eq!(iid_model(4, 4).unwrap().vmask().iter().sum::<f64>(), 16.0);
        assert_eq!(iid_model(1, 1).unwrap().vmask(), &[1.0]);
        assert!(iid_model(0, 2).is_err());
    }

    #[test]
    fn v4_profile() {
        let m = v4_model();
        assert!((m.vmask().iter().sum::<f64>() - 16.0).abs() < 1e-12);
        assert_eq!(m.variance(0, 1), 0.0);
        assert!((m.variance(0, 2) - 16.0 * 0.4 / 2.6).abs() < 1e-15);
        assert!((m.variance(0, 2) - 2.4615).abs() < 1e-4);
        let cols = m.column_powers();
        assert!((cols[2] - 16.0 * 1.6 / 2.6).abs() < 1e-12);
        let mut rng = Rng::new(0, 0);
        for _ in 0..200 {
            let r = m.sample(&mut rng);
            assert_eq!(r.hind[(0, 1)].re, 0.0);
            assert_eq!(r.hind[(0, 1)].im, 0.0);
        }
    }

    #[test]
    fn rejects_unnormalized_mask() {
        assert!(CorrelationModel::with_mask(2, 2, vec![1.0, 1.0, 1.0, 2.0]).is_err());
        assert!(CorrelationModel::with_mask(2, 2, vec![2.0, 2.0, 0.0, -0.0]).is_ok());
        assert!(CorrelationModel::with_mask(2, 2, vec![5.0, -1.0, 0.0, 0.0]).is_err());
        let m = CorrelationModel::with_normalized_mask(2, 2, vec![1.0, 3.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.vmask(), &[1.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn assembly_and_pigeonhole() {
        let mut rng = Rng::new(9, 0);
        let ut = haar_unitary(3, &mut rng).unwrap();
        let model =
            CorrelationModel::new(ut, haar_unitary(2, &mut rng).unwrap(), vec![1.0; 6]).unwrap();
        for _ in 0..100 {
            let r = model.sample(&mut rng);
            let rebuilt = &(&model.ur * &r.hind) * &model.ut.adjoint();
            assert!((&r.h - &rebuilt).frobenius_norm() <= 1e-12);
            let g = r.gram();
            let lmax = hermitian_eig(&g).unwrap().lambda_max();
            assert!(lmax >= g.trace().re / 3.0 - 1e-12);
        }
    }

    #[test]
    fn iid_power_and_entry_variances() {
        let model = v4_model();
        let mut rng = Rng::new(31, 0);
        let n = 20_000;
        let mut sums = [0.0; 16];
        let mut sq = [0.0; 16];
        for _ in 0..n {
            let r = model.sample(&mut rng);
            for i in 0..4 {
                for j in 0..4 {
                    let p = r.hind[(i, j)].norm_sqr();
                    sums[i * 4 + j] += p;
                    sq[i * 4 + j] += p * p;
                }
            }
        }
        for idx in 0..16 {
            let mean = sums[idx] / n as f64;
            let var = sq[idx] / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            let target = model.vmask()[idx];
            assert!(
                (mean - target).abs() <= 3.0 * se + 1e-15,
                "entry {idx}: {mean} vs {target}"
            );
        }

        let iid = iid_model(2, 2).unwrap();
        let powers: Vec<f64> = (0..100_000)
            .map(|_| iid.sample(&mut rng).h.frobenius_norm().powi(2))
            .collect();
        let m = powers.iter().sum::<f64>() / powers.len() as f64;
        let var = powers.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (powers.len() - 1) as f64;
        assert!((m - 4.0).abs() <= 3.0 * (var / powers.len() as f64).sqrt());
    }

    #[test]
    fn iid_law_is_rotation_invariant() {
        // two-sample Kolmogorov–Smirnov on λ_max(H†H) with and without a fixed U_t
        let mut rng = Rng::new(12, 0);
        let plain = iid_model(2, 2).unwrap();
        let rotated = iid_model(2, 2)
            .unwrap()
            .with_ut(haar_unitary(2, &mut rng).unwrap())
            .unwrap();
        let n = 10_000;
        let draw = |model: &CorrelationModel, rng: &mut Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n)
                .map(|_| {
                    hermitian_eig(&model.sample(rng).gram())
                        .unwrap()
                        .lambda_max()
                })
                .collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let a = draw(&plain, &mut Rng::new(100, 0));
        let b = draw(&rotated, &mut Rng::new(100, 1));
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        // 1% critical value for n = m = 10^4 is 1.63·sqrt(2/n) ≈ 0.023
        assert!(d < 0.023, "KS statistic {d}");
    }
}
