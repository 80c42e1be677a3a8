//! Seeded random instances: unitaries, Hermitian and positive matrices, frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermat::{eigh, ComplexMatrix, HermitianMatrix, C64};

pub type TrialRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for trial `index` of a sweep seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard normal real and imaginary parts.
pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Gram–Schmidt on the columns; returns `None` if they are numerically dependent.
pub fn orthonormalize(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let mut v = m.column(j);
        // two passes for stability
        for _ in 0..2 {
            for q in &cols {
                let p: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm < 1e-10 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        cols.push(v);
    }
    ComplexMatrix::from_columns(m.rows(), &cols).ok()
}

/// Haar-distributed unitary (Gram–Schmidt of a Gaussian matrix).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        if let Some(q) = orthonormalize(&random_gaussian(d, d, rng)) {
            return q;
        }
    }
}

/// `rows × k` matrix with orthonormal columns.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, k: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        if let Some(q) = orthonormalize(&random_gaussian(rows, k, rng)) {
            return q;
        }
    }
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianMatrix {
    let g = random_gaussian(d, d, rng);
    HermitianMatrix::new((&g + &g.adjoint()).scale_real(0.5)).expect("symmetrized matrix is Hermitian")
}

/// Positive definite matrix with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_pd<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> HermitianMatrix {
    let vals: Vec<f64> = (0..d).map(|_| rng.random_range(lo..=hi)).collect();
    let u = random_unitary(d, rng);
    HermitianMatrix::from_real_diag(&vals).congruence(&u).expect("square congruence")
}

/// Invertible matrix with singular values drawn from `[lo, hi]`.
pub fn random_invertible<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> ComplexMatrix {
    let sv: Vec<f64> = (0..d).map(|_| rng.random_range(lo..=hi)).collect();
    let u1 = random_unitary(d, rng);
    let u2 = random_unitary(d, rng);
    &(&u1 * &ComplexMatrix::from_real_diag(&sv)) * &u2
}

/// Eigenbasis of a random Hermitian matrix, as an alternative unitary sampler
/// whose columns come out of the eigensolver.
pub fn random_eigenbasis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    eigh(&random_hermitian(d, rng)).map(|es| es.vectors).unwrap_or_else(|_| random_unitary(d, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermat::orthonormality_defect;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded(1);
        for d in 1..8 {
            assert!(orthonormality_defect(&random_unitary(d, &mut rng)) < 1e-12);
            assert!(orthonormality_defect(&random_isometry(d + 3, d, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(7, 3).random();
        let b: f64 = trial_rng(7, 3).random();
        let c: f64 = trial_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
