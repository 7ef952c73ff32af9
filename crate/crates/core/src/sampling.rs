//! Seeded random sampling of algebra elements.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgElement, Subspace};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard Gaussian vector.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Gaussian element of a subspace.
pub fn gaussian_in<R: Rng + ?Sized>(rng: &mut R, sub: &Subspace) -> AlgElement {
    sub.embed(&gaussian(rng, sub.dim()))
}

/// Random symmetric positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> nalgebra::DMatrix<f64> {
    let raw = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = raw.qr().q();
    let d = nalgebra::DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        (0..n).map(|_| rng.random_range(lo..=hi)),
    ));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}
