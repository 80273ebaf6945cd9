use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::real::{cre, Real, C};

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    /// Builds a matrix from row-major entries. Rejects non-square input and
    /// non-finite entries.
    pub fn new(dim: usize, data: Vec<C<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[C<T>]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let d: Vec<C<T>> = diag.iter().map(|&x| cre(x)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds from nested real/imaginary row slices; convenient for small literals.
    pub fn from_rows(rows: &[&[C<T>]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    /// |ψ⟩⟨ψ|
    pub fn outer(psi: &[C<T>]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).fold(C::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// ‖self − other‖_F. Panics on dimension mismatch.
    pub fn distance(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "distance between matrices of different size");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// ‖h − h†‖_F
    pub fn hermitian_deviation(&self) -> T {
        let n = self.dim;
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] - self.data[j * n + i].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// ‖U U† − I‖_F
    pub fn unitary_deviation(&self) -> T {
        self.matmul(&self.adjoint()).distance(&Self::identity(self.dim))
    }

    /// (h + h†)/2
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let half = T::lit(0.5);
        Self::from_fn(n, |i, j| (self.data[i * n + j] + self.data[j * n + i].conj()) * half)
    }

    /// Matrix product. Zero entries of `self` are skipped, which makes products
    /// with diagonal or block-sparse operators quadratic rather than cubic.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![C::zero(); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let rk = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in row.iter_mut().zip(rk) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `self · rhs†` without materialising the adjoint.
    pub fn matmul_adjoint(&self, rhs: &Self) -> Self {
        self.matmul(&rhs.adjoint())
    }

    /// Frobenius inner product ⟨a, b⟩ = Tr(a† b).
    pub fn inner(&self, other: &Self) -> C<T> {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(C::zero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    /// Tr(self · rhs) in O(n²).
    pub fn trace_product(&self, rhs: &Self) -> C<T> {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut acc = C::zero();
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * rhs.data[k * n + i];
            }
        }
        acc
    }

    /// [a, b] = ab − ba
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// U · self · U†
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Converts entries to another precision.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}×{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  [")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.4e}{:+.4e}i", z.re, z.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

/// Kronecker product: `(a ⊗ b)[i·db + k, j·db + l] = a[i,j]·b[k,l]`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (da, db) = (a.dim, b.dim);
    let n = da * db;
    let mut data = vec![C::zero(); n * n];
    for i in 0..da {
        for j in 0..da {
            let aij = a.data[i * da + j];
            if aij.is_zero() {
                continue;
            }
            for k in 0..db {
                let row = (i * db + k) * n + j * db;
                for l in 0..db {
                    data[row + l] = aij * b.data[k * db + l];
                }
            }
        }
    }
    ComplexMatrix { dim: n, data }
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<T: Real>(factors: &[&ComplexMatrix<T>]) -> ComplexMatrix<T> {
    let mut it = factors.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

/// Partial trace keeping the single tensor factor `keep` of a space with
/// factor dimensions `dims` (first factor most significant in the index).
pub fn partial_trace<T: Real>(
    m: &ComplexMatrix<T>,
    dims: &[usize],
    keep: usize,
) -> Result<ComplexMatrix<T>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDimension("factor dimensions must be positive".into()));
    }
    let total: usize = dims.iter().product();
    if total != m.dim {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: m.dim,
        });
    }
    if keep >= dims.len() {
        return Err(Error::InvalidDimension(format!(
            "factor index {keep} out of range for {} factors",
            dims.len()
        )));
    }
    let left: usize = dims[..keep].iter().product();
    let k = dims[keep];
    let right: usize = dims[keep + 1..].iter().product();
    let n = m.dim;
    let mut out = ComplexMatrix::zeros(k);
    for a in 0..k {
        for b in 0..k {
            let mut acc = C::zero();
            for l in 0..left {
                for r in 0..right {
                    let i = (l * k + a) * right + r;
                    let j = (l * k + b) * right + r;
                    acc += m.data[i * n + j];
                }
            }
            out.data[a * k + b] = acc;
        }
    }
    Ok(out)
}
