use super::cmatrix::{CMatrix, C64};
use super::rng::Rng;
use crate::error::{precondition, Result};

/// Haar-distributed `n×n` unitary.
///
/// QR of an i.i.d. `CN(0,1)` matrix, with the phases of `diag(R)` pushed into Q
/// so that `R` has a positive real diagonal.
pub fn haar_unitary(n: usize, rng: &mut Rng) -> Result<CMatrix> {
    if n == 0 {
        return precondition("haar_unitary needs n >= 1");
    }
    let g = CMatrix::from_fn(n, n, |_, _| {
        rng.complex_gaussian(1.0).expect("unit variance")
    });
    let (q, r) = householder_qr(&g);
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let mag = d.norm();
        let phase = if mag > 0.0 {
            d / mag
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    Ok(u)
}

/// Householder QR of a square matrix. Returns `(Q, R)` with `Q` unitary.
pub(crate) fn householder_qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    assert!(a.is_square());
    let mut r = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<C64> = (k..n).map(|i| r[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha_phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        // v = x + e^{i arg x0} ‖x‖ e1
        let mut v = x.clone();
        v[0] += alpha_phase * xnorm;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // R ← (I − 2vv†/‖v‖²) R
        for j in 0..n {
            let dot: C64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            let f = dot * (2.0 / vnorm_sq);
            for i in k..n {
                r[(i, j)] -= v[i - k] * f;
            }
        }
        // Q ← Q (I − 2vv†/‖v‖²)
        for i in 0..n {
            let dot: C64 = (k..n).map(|l| q[(i, l)] * v[l - k]).sum();
            let f = dot * (2.0 / vnorm_sq);
            for l in k..n {
                q[(i, l)] -= f * v[l - k].conj();
            }
        }
    }
    (q, r)
}
