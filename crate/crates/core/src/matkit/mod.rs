//! Small dense complex linear algebra and reproducible randomness.

mod cmatrix;
mod eig;
mod haar;
mod rng;

pub use cmatrix::{CMatrix, C64};
pub use eig::{hermitian_eig, lambda_max, EigSystem};
pub use haar::haar_unitary;
pub use rng::{complex_gaussian, Rng};
