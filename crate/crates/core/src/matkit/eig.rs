//! Cyclic Jacobi eigensolver for small Hermitian matrices.

use super::cmatrix::{CMatrix, C64};
use crate::error::{precondition, Result};

const HERMITIAN_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;
// off-diagonal mass below this fraction of ‖M‖_F is dropped
const NEGLIGIBLE: f64 = 1e-20;

/// Eigenvalues in non-increasing order with unitary eigenvectors.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`. In every column the
/// entry of largest magnitude (first one on ties) is real and non-negative.
#[derive(Debug, Clone)]
pub struct EigSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigSystem {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let scaled = CMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        &scaled * &v.adjoint()
    }
}

pub fn hermitian_eig(m: &CMatrix) -> Result<EigSystem> {
    if !m.is_square() {
        return precondition(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        ));
    }
    if m.rows() == 0 {
        return precondition("hermitian_eig needs a non-empty matrix");
    }
    if !m.is_finite() {
        return precondition("hermitian_eig input has non-finite entries");
    }
    let norm = m.frobenius_norm();
    let defect = m.hermitian_defect().unwrap_or(f64::INFINITY);
    if defect > HERMITIAN_TOL * norm {
        return precondition(format!(
            "matrix is not Hermitian: ||M - M^H||_F = {defect:e}"
        ));
    }

    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = CMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= NEGLIGIBLE * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the sweep order on exact ties
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(EigSystem {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn lambda_max(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.lambda_max())
}

/// Zeroes `a[(p, q)]` with a complex Jacobi rotation `G` and accumulates `V ← V G`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // diag(1, e^{-iφ}) makes the pivot real, then a real rotation finishes it
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    let n = a.rows();
    // A ← A G
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // A ← G† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

fn fix_phase(col: &mut [C64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in col.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let rot = col[best].conj() / best_mag;
    for z in col.iter_mut() {
        *z *= rot;
    }
    col[best] = C64::new(col[best].re.abs(), 0.0);
}
