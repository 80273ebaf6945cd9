use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, kron, ComplexMatrix};
use crate::real::{cre, Real, C};

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    m: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates and wraps a matrix.
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        check_density(&m)?;
        Ok(Self { m: m.hermitian_part() })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[T]) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDimension("empty population vector".into()));
        }
        let tol = T::tol(1e-12);
        if let Some(&bad) = p.iter().find(|&&x| !(x >= -tol)) {
            return Err(Error::NotDensityMatrix(format!("negative population {bad:e}")));
        }
        let s: T = p.iter().copied().sum();
        if (s - T::one()).abs() > tol {
            return Err(Error::NotDensityMatrix(format!("populations sum to {s}")));
        }
        Ok(Self {
            m: ComplexMatrix::from_real_diagonal(p),
        })
    }

    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix<T>) -> Self {
        Self { m }
    }

    /// I/d
    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(dim);
        Self {
            m: ComplexMatrix::identity(dim).scale(cre(w)),
        }
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    pub fn pure(psi: &[C<T>]) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi))
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Tr(ρ A)
    pub fn expectation(&self, op: &ComplexMatrix<T>) -> C<T> {
        self.m.trace_product(op)
    }

    pub fn min_eigenvalue(&self) -> T {
        eig_hermitian(&self.m)
            .map(|es| es.values[0])
            .unwrap_or_else(|_| T::nan())
    }

    /// Re-checks trace, Hermiticity and positivity.
    pub fn check(&self) -> Result<()> {
        check_density(&self.m)
    }

    /// ρ ⊗ σ
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            m: kron(&self.m, &other.m),
        }
    }

    /// Largest off-diagonal modulus in the basis given by the columns of `basis`.
    pub fn max_offdiagonal_in(&self, basis: &ComplexMatrix<T>) -> T {
        let rot = basis.adjoint().matmul(&self.m).matmul(basis);
        let n = rot.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(rot[(i, j)].norm());
                }
            }
        }
        worst
    }
}

fn check_density<T: Real>(m: &ComplexMatrix<T>) -> Result<()> {
    let tol = T::tol(1e-12);
    let tr = m.trace();
    if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    let es = eig_hermitian(m).map_err(|e| Error::NotDensityMatrix(e.to_string()))?;
    if es.values[0] < -tol {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {:e}",
            es.values[0]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::cplx;

    #[test]
    fn accepts_valid_and_rejects_invalid() {
        assert!(DensityMatrix::<f64>::from_populations(&[0.25, 0.75]).is_ok());
        assert!(DensityMatrix::<f64>::from_populations(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::<f64>::from_populations(&[1.5, -0.5]).is_err());
        let neg = ComplexMatrix::from_rows(&[
            &[cre(0.5), cre(0.8)][..],
            &[cre(0.8), cre(0.5)][..],
        ])
        .unwrap();
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotDensityMatrix(_))));
    }

    #[test]
    fn pure_state_expectations() {
        let h = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[cre(h), cre(h)]).unwrap();
        let sx = ComplexMatrix::from_rows(&[&[cre(0.0), cre(1.0)][..], &[cre(1.0), cre(0.0)][..]])
            .unwrap();
        assert!((plus.expectation(&sx) - cplx(1.0, 0.0)).norm() < 1e-15);
        assert!(plus.min_eigenvalue().abs() < 1e-15);
    }
}
