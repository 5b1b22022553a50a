use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cmatrix::C64;
use crate::error::{precondition, Result};

/// Counter-based random source addressed by `(seed, stream)`.
///
/// Each stream is an independent ChaCha keystream, so the n-th draw of a given
/// `(seed, stream)` pair never depends on what other streams were used for or
/// on which thread consumed them.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Another stream under the same seed.
    pub fn substream(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Circularly-symmetric complex Gaussian `CN(0, variance)`.
    pub fn complex_gaussian(&mut self, variance: f64) -> Result<C64> {
        if !variance.is_finite() || variance < 0.0 {
            return precondition(format!("variance must be finite and >= 0, got {variance}"));
        }
        if variance == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let s = (variance / 2.0).sqrt();
        let re = self.standard_normal();
        let im = self.standard_normal();
        Ok(C64::new(re * s, im * s))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Free-function form of [`Rng::complex_gaussian`].
pub fn complex_gaussian(rng: &mut Rng, variance: f64) -> Result<C64> {
    rng.complex_gaussian(variance)
}
