//! Hermitian eigendecomposition.
//!
//! The input is reduced to Hermitian tridiagonal form with Householder
//! reflections, rotated to a real symmetric tridiagonal matrix by a diagonal
//! phase similarity, and diagonalized with the implicit-shift QL iteration.
//! Eigenvector columns are the product of the three transforms.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::real::{cre, Real, C};

/// Eigenvalues in ascending order together with orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigensystem<T: Real> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> Eigensystem<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// V f(Λ) V†
    pub fn apply_fn(&self, f: impl Fn(T) -> C<T>) -> ComplexMatrix<T> {
        let n = self.dim();
        let v = &self.vectors;
        let fvals: Vec<C<T>> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = ComplexMatrix::from_fn(n, |i, k| v[(i, k)] * fvals[k]);
        scaled.matmul(&v.adjoint())
    }

    /// V diag(λ) V†
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.apply_fn(cre)
    }

    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        (0..self.dim()).map(|i| self.vectors[(i, k)]).collect()
    }

    /// Groups eigenvalues closer than `tol` (ascending order makes this a
    /// single pass). Each group is a list of column indices.
    pub fn eigenspaces(&self, tol: T) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (k, &x) in self.values.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if (x - self.values[*g.last().unwrap()]).abs() <= tol => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        groups
    }

    /// Orthogonal projector onto the span of the listed eigenvector columns.
    pub fn projector(&self, cols: &[usize]) -> ComplexMatrix<T> {
        let n = self.dim();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |i, j| {
            cols.iter()
                .fold(C::zero(), |acc, &k| acc + v[(i, k)] * v[(j, k)].conj())
        })
    }
}

/// Absolute Hermiticity tolerance for a matrix of dimension `dim`.
pub(crate) fn hermitian_tolerance<T: Real>(dim: usize) -> T {
    T::tol(1e-10) * T::from_usize_lossy(dim)
}

/// Eigendecomposition of a Hermitian matrix. Inputs within the Hermiticity
/// tolerance are symmetrized as (h + h†)/2 first.
pub fn eig_hermitian<T: Real>(h: &ComplexMatrix<T>) -> Result<Eigensystem<T>> {
    let dev = h.hermitian_deviation();
    if !(dev < hermitian_tolerance::<T>(h.dim())) {
        return Err(Error::NotHermitian {
            deviation: dev.as_f64(),
        });
    }
    let a = h.hermitian_part();
    Ok(eig_symmetrized(a))
}

/// exp(c·h) for Hermitian h and complex c.
pub fn expm_hermitian<T: Real>(h: &ComplexMatrix<T>, c: C<T>) -> Result<ComplexMatrix<T>> {
    Ok(eig_hermitian(h)?.apply_fn(|x| (c * x).exp()))
}

fn eig_symmetrized<T: Real>(mut a: ComplexMatrix<T>) -> Eigensystem<T> {
    let n = a.dim();
    let mut q = ComplexMatrix::<T>::identity(n);
    householder_tridiagonalize(&mut a, &mut q);

    // Diagonal phases making the subdiagonal real and non-negative.
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    let mut phase = vec![C::<T>::one(); n];
    for i in 0..n {
        diag[i] = a[(i, i)].re;
    }
    for k in 0..n.saturating_sub(1) {
        let t = a[(k + 1, k)];
        let r = t.norm();
        off[k] = r;
        phase[k + 1] = if r > T::zero() { phase[k] * (t / r) } else { phase[k] };
    }

    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    tql2(&mut diag, &mut off, &mut z, n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&k| diag[k]).collect();

    // V = Q · D · Z with columns permuted into ascending order.
    let qd = ComplexMatrix::from_fn(n, |i, k| q[(i, k)] * phase[k]);
    let zc = ComplexMatrix::from_fn(n, |k, c| cre(z[k * n + order[c]]));
    Eigensystem {
        values,
        vectors: qd.matmul(&zc),
    }
}

/// In-place reduction A ← Q† A Q to Hermitian tridiagonal form, accumulating Q.
fn householder_tridiagonalize<T: Real>(a: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let two = T::lit(2.0);
    for k in 0..n - 2 {
        let norm_x = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<T>().sqrt();
        let tail = (k + 2..n).map(|i| a[(i, k)].norm_sqr()).sum::<T>();
        if tail == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let unit = if x0.norm() > T::zero() { x0 / x0.norm() } else { C::one() };
        let alpha = -unit * norm_x;

        let mut v = vec![C::<T>::zero(); n];
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }

        // p = A v, K = v† p (real), w = p − K v;  A ← A − 2 v w† − 2 w v†
        let mut p = vec![C::<T>::zero(); n];
        for (i, pi) in p.iter_mut().enumerate() {
            let mut acc = C::zero();
            for j in k + 1..n {
                acc += a[(i, j)] * v[j];
            }
            *pi = acc;
        }
        let kk = (k + 1..n).fold(C::<T>::zero(), |acc, j| acc + v[j].conj() * p[j]).re;
        let w: Vec<C<T>> = p.iter().zip(&v).map(|(&pi, &vi)| pi - vi * kk).collect();
        for i in 0..n {
            for j in 0..n {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                if !upd.is_zero() {
                    a[(i, j)] -= upd * two;
                }
            }
        }
        // Q ← Q (I − 2 v v†)
        for i in 0..n {
            let qv = (k + 1..n).fold(C::<T>::zero(), |acc, j| acc + q[(i, j)] * v[j]);
            if qv.is_zero() {
                continue;
            }
            for j in k + 1..n {
                q[(i, j)] -= qv * v[j].conj() * two;
            }
        }
    }
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix with diagonal `d`
/// and subdiagonal `e` (`e[i]` couples rows i and i+1; `e[n-1]` ignored).
/// Rotations are accumulated into the row-major `z`.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T], n: usize) {
    if n == 0 {
        return;
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) || iter > 64 * n.max(8) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_matrix};
    use crate::real::cplx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unitary_residual(v: &ComplexMatrix<f64>) -> f64 {
        v.adjoint().matmul(v).distance(&ComplexMatrix::identity(v.dim()))
    }

    #[test]
    fn pauli_spectra() {
        let sz = ComplexMatrix::<f64>::from_real_diagonal(&[1.0, -1.0]);
        let es = eig_hermitian(&sz).unwrap();
        assert_eq!(es.values, vec![-1.0, 1.0]);

        let o = cre(0.0f64);
        let l = cre(1.0);
        let sx = ComplexMatrix::from_rows(&[&[o, l], &[l, o]]).unwrap();
        let es = eig_hermitian(&sx).unwrap();
        assert!((es.values[0] + 1.0).abs() < 1e-15 && (es.values[1] - 1.0).abs() < 1e-15);
        // eigenvector of −1 ∝ (1, −1)/√2 up to phase
        let v = es.vector(0);
        let overlap = (v[0] - v[1]) * 0.5f64.sqrt();
        assert!((overlap.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 3, 5, 8, 17, 40] {
            let h = random_hermitian::<f64, _>(&mut rng, n);
            let es = eig_hermitian(&h).unwrap();
            assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(unitary_residual(&es.vectors) < 1e-12, "n={n}");
            assert!(es.reconstruct().distance(&h) < 1e-12 * (n as f64).max(1.0), "n={n}");
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // U diag(1,1,1,2,2) U† with a random unitary: degenerate eigenspaces
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = crate::random::random_unitary::<f64, _>(&mut rng, 5);
        let d = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 1.0, 2.0, 2.0]);
        let h = d.conjugate_by(&u);
        let es = eig_hermitian(&h).unwrap();
        assert!(es.reconstruct().distance(&h) < 1e-12);
        assert!(unitary_residual(&es.vectors) < 1e-12);
        let groups = es.eigenspaces(1e-10);
        assert_eq!(groups, vec![vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn diagonal_input_keeps_identity_vectors() {
        let h = ComplexMatrix::<f64>::from_real_diagonal(&[0.5, 1.5, 2.5, 3.5]);
        let es = eig_hermitian(&h).unwrap();
        assert_eq!(es.vectors, ComplexMatrix::identity(4));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix::<f64, _>(&mut rng, 4);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expm_diagonal_and_zero() {
        let sz = ComplexMatrix::<f64>::from_real_diagonal(&[1.0, -1.0]);
        let u = 0.7;
        let e = expm_hermitian(&sz, cplx(0.0, -u)).unwrap();
        let expected =
            ComplexMatrix::from_diagonal(&[cplx(0.0, -u).exp(), cplx(0.0, u).exp()]);
        assert!(e.distance(&expected) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian::<f64, _>(&mut rng, 5);
        let e0 = expm_hermitian(&h, cplx(0.0, 0.0)).unwrap();
        assert!(e0.distance(&ComplexMatrix::identity(5)) < 1e-13);
    }

    #[test]
    fn expm_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hermitian::<f64, _>(&mut rng, 6);
        let c = cplx(0.0, -0.3);
        // oracle: 30-term Taylor series of exp(c h)
        let ch = h.scale(c);
        let mut term = ComplexMatrix::identity(6);
        let mut sum = term.clone();
        for k in 1..30 {
            term = term.matmul(&ch).scale(cre(1.0 / k as f64));
            sum = &sum + &term;
        }
        let e = expm_hermitian(&h, c).unwrap();
        assert!(e.distance(&sum) < 1e-10);
        assert!(e.unitary_deviation() < 1e-12);
    }

    #[test]
    fn single_precision_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = random_hermitian::<f32, _>(&mut rng, 6);
        let es = eig_hermitian(&h).unwrap();
        assert!(es.reconstruct().distance(&h) < 1e-4);
    }
}
