//! Random operators and states for randomized verification suites.
//!
//! All generators draw standard-normal entries from the supplied RNG, so a
//! seeded `ChaCha8Rng` gives reproducible instances.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{expm_hermitian, ComplexMatrix, DensityMatrix};
use crate::real::{cplx, cre, Real, C};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn random_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(n, |_, _| cplx(T::lit(normal(rng)), T::lit(normal(rng))))
}

/// (A + A†)/2 for a Gaussian A.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    random_matrix::<T, R>(rng, n).hermitian_part()
}

/// Random real-diagonal Hermitian matrix, sorted ascending.
pub fn random_diagonal<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    let mut d: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d: Vec<T> = d.into_iter().map(T::lit).collect();
    ComplexMatrix::from_real_diagonal(&d)
}

/// exp(−iH) for a random Hermitian H.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    let h = random_hermitian::<T, R>(rng, n);
    expm_hermitian(&h, cplx(T::zero(), -T::one())).expect("Hermitian by construction")
}

/// A A† / Tr(A A†) for a Gaussian A: full rank with probability one.
pub fn random_density<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    let a = random_matrix::<T, R>(rng, n);
    let p = a.matmul(&a.adjoint());
    let tr = p.trace().re;
    p.scale(cre(T::one() / tr)).hermitian_part()
}

pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix<T> {
    DensityMatrix::new(random_density(rng, n)).expect("valid by construction")
}

/// Uniform draw from [lo, hi).
pub fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> T {
    T::lit(rng.random_range(lo..hi))
}

/// Complex unit-modulus phase with uniform angle.
pub fn random_phase<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    cplx(T::lit(th.cos()), T::lit(th.sin()))
}
