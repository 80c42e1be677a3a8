//! Seeded benchmark instances.

use framesolve_core::frames::random_frame;
use framesolve_core::random::{random_pd, seeded};
use framesolve_core::{Frame, HermitianMatrix, Spectrum};
use rand::Rng;

/// Nonincreasing spectrum with entries in `[-2, 5)`.
pub fn spectrum(d: usize, seed: u64) -> Spectrum {
    let mut rng = seeded(seed);
    let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..5.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Spectrum::new(v).expect("finite entries")
}

pub fn positive_matrix(d: usize, seed: u64) -> HermitianMatrix {
    random_pd(d, 0.5, 4.0, &mut seeded(seed))
}

pub fn frame(d: usize, n: usize, seed: u64) -> Frame {
    random_frame(d, n, &mut seeded(seed)).expect("n ≥ d")
}
