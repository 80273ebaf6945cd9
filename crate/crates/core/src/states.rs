//! Hamiltonians, thermal states, ancilla-qubit operators and the Fock-space
//! truncation policy.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, kron, ComplexMatrix, DensityMatrix, Eigensystem};
use crate::real::{cplx, cre, Real, C};
use crate::Config;

/// Hermitian operator stored with its eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralHamiltonian<T: Real> {
    matrix: ComplexMatrix<T>,
    eigen: Eigensystem<T>,
}

impl<T: Real> SpectralHamiltonian<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let eigen = eig_hermitian(&matrix)?;
        Ok(Self {
            matrix: matrix.hermitian_part(),
            eigen,
        })
    }

    /// Diagonal Hamiltonian; the eigenvectors are (permuted) basis vectors.
    pub fn from_diagonal(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("empty spectrum".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite energy".into()));
        }
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let vectors = ComplexMatrix::from_fn(n, |i, c| {
            if order[c] == i {
                C::one()
            } else {
                C::zero()
            }
        });
        Ok(Self {
            matrix: ComplexMatrix::from_real_diagonal(values),
            eigen: Eigensystem {
                values: order.iter().map(|&k| values[k]).collect(),
                vectors,
            },
        })
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    #[inline]
    pub fn eigensystem(&self) -> &Eigensystem<T> {
        &self.eigen
    }

    /// Eigenvalues, ascending.
    #[inline]
    pub fn energies(&self) -> &[T] {
        &self.eigen.values
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// exp(c·H) from the stored eigensystem.
    pub fn exp(&self, c: C<T>) -> ComplexMatrix<T> {
        self.eigen.apply_fn(|x| (c * x).exp())
    }

    /// exp(−i H t)
    pub fn evolution(&self, t: T) -> ComplexMatrix<T> {
        self.exp(cplx(T::zero(), -t))
    }

    /// H ⊗ I_d, keeping the spectral data consistent.
    pub fn tensor_identity(&self, d: usize) -> Self {
        let id = ComplexMatrix::identity(d);
        let values = self
            .eigen
            .values
            .iter()
            .flat_map(|&x| std::iter::repeat_n(x, d))
            .collect();
        Self {
            matrix: kron(&self.matrix, &id),
            eigen: Eigensystem {
                values,
                vectors: kron(&self.eigen.vectors, &id),
            },
        }
    }

    /// Largest |E|, used to scale finite-difference steps and merge tolerances.
    pub fn max_abs_energy(&self) -> T {
        self.eigen
            .values
            .iter()
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Temperature given either as an inverse temperature or as a mean oscillator
/// occupation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temperature<T: Real> {
    Beta(T),
    Nbar(T),
}

/// Initial thermal configuration of the oscillator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalSpec<T: Real> {
    pub temperature: Temperature<T>,
    pub lambda0: T,
}

impl<T: Real> ThermalSpec<T> {
    pub fn from_nbar(nbar: T, lambda0: T) -> Result<Self> {
        let s = Self {
            temperature: Temperature::Nbar(nbar),
            lambda0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_beta(beta: T, lambda0: T) -> Result<Self> {
        let s = Self {
            temperature: Temperature::Beta(beta),
            lambda0,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda0 > T::zero()) || !self.lambda0.is_finite() {
            return Err(Error::InvalidParameter("lambda0 must be positive".into()));
        }
        match self.temperature {
            Temperature::Beta(b) if !(b > T::zero()) || !b.is_finite() => Err(
                Error::InvalidParameter("beta must be positive and finite".into()),
            ),
            Temperature::Nbar(n) if !(n >= T::zero()) || !n.is_finite() => {
                Err(Error::InvalidParameter("nbar must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn nbar(&self) -> T {
        match self.temperature {
            Temperature::Nbar(n) => n,
            Temperature::Beta(b) => nbar_from_beta(b, self.lambda0),
        }
    }

    /// Infinite for n̄ = 0.
    pub fn beta(&self) -> T {
        match self.temperature {
            Temperature::Beta(b) => b,
            Temperature::Nbar(n) => beta_from_nbar(n, self.lambda0),
        }
    }
}

/// n̄ = 1/(e^{βλ₀} − 1)
pub fn nbar_from_beta<T: Real>(beta: T, lambda0: T) -> T {
    T::one() / (beta * lambda0).exp_m1()
}

/// β = ln(1 + 1/n̄)/λ₀
pub fn beta_from_nbar<T: Real>(nbar: T, lambda0: T) -> T {
    if nbar == T::zero() {
        return T::infinity();
    }
    (T::one() / nbar).ln_1p() / lambda0
}

/// Work-parameter schedule over the protocol duration.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule<T: Real> {
    /// Instantaneous jump λ₀ → λ_τ; the propagator is the identity.
    SuddenQuench,
    /// Consecutive (duration, λ) segments, λ held constant within each.
    Piecewise(Vec<(T, T)>),
    /// Linear interpolation from λ₀ through consecutive (duration, λ_end) knots.
    Ramp(Vec<(T, T)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchProtocol<T: Real> {
    pub lambda0: T,
    pub lambda_tau: T,
    pub schedule: Schedule<T>,
}

impl<T: Real> QuenchProtocol<T> {
    pub fn sudden(lambda0: T, lambda_tau: T) -> Self {
        Self {
            lambda0,
            lambda_tau,
            schedule: Schedule::SuddenQuench,
        }
    }

    pub fn piecewise(segments: Vec<(T, T)>) -> Result<Self> {
        let (first, last) = match (segments.first(), segments.last()) {
            (Some(f), Some(l)) => (f.1, l.1),
            _ => return Err(Error::InvalidParameter("empty schedule".into())),
        };
        if segments.iter().any(|&(d, l)| !(d >= T::zero()) || !d.is_finite() || !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "segment durations must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            lambda0: first,
            lambda_tau: last,
            schedule: Schedule::Piecewise(segments),
        })
    }

    pub fn ramp(lambda0: T, knots: Vec<(T, T)>) -> Result<Self> {
        let last = match knots.last() {
            Some(k) => k.1,
            None => return Err(Error::InvalidParameter("empty ramp".into())),
        };
        if knots.iter().any(|&(d, l)| !(d >= T::zero()) || !d.is_finite() || !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "ramp durations must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            lambda0,
            lambda_tau: last,
            schedule: Schedule::Ramp(knots),
        })
    }

    pub fn delta_lambda(&self) -> T {
        self.lambda_tau - self.lambda0
    }

    pub fn duration(&self) -> T {
        match &self.schedule {
            Schedule::SuddenQuench => T::zero(),
            Schedule::Piecewise(s) | Schedule::Ramp(s) => s.iter().map(|&(d, _)| d).sum(),
        }
    }

    /// ∫₀^τ λ_t dt
    pub fn integrated_lambda(&self) -> T {
        match &self.schedule {
            Schedule::SuddenQuench => T::zero(),
            Schedule::Piecewise(s) => s.iter().map(|&(d, l)| d * l).sum(),
            Schedule::Ramp(s) => {
                let half = T::lit(0.5);
                let mut from = self.lambda0;
                let mut acc = T::zero();
                for &(d, to) in s {
                    acc += d * (from + to) * half;
                    from = to;
                }
                acc
            }
        }
    }
}

/// ħλ(n + 1/2) on the truncated Fock space {|0⟩, …, |nmax⟩}.
pub fn oscillator_hamiltonian<T: Real>(lambda: T, nmax: usize) -> Result<SpectralHamiltonian<T>> {
    if nmax < 1 {
        return Err(Error::InvalidDimension("oscillator cutoff nmax must be ≥ 1".into()));
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("oscillator frequency {lambda} must be ≥ 0")));
    }
    let half = T::lit(0.5);
    let values: Vec<T> = (0..=nmax)
        .map(|n| (T::from_usize_lossy(n) + half) * lambda)
        .collect();
    SpectralHamiltonian::from_diagonal(&values)
}

/// Truncated annihilation operator, â|n⟩ = √n |n−1⟩.
pub fn annihilation<T: Real>(nmax: usize) -> ComplexMatrix<T> {
    let d = nmax + 1;
    ComplexMatrix::from_fn(d, |i, j| {
        if j == i + 1 {
            cre(T::from_usize_lossy(j).sqrt())
        } else {
            C::zero()
        }
    })
}

/// â†â = diag(0, 1, …, nmax)
pub fn number_operator<T: Real>(nmax: usize) -> ComplexMatrix<T> {
    let d: Vec<T> = (0..=nmax).map(T::from_usize_lossy).collect();
    ComplexMatrix::from_real_diagonal(&d)
}

/// Boltzmann populations over the spectrum, shifted by the ground energy.
fn boltzmann<T: Real>(energies: &[T], beta: T) -> Vec<T> {
    let e0 = energies[0];
    let w: Vec<T> = energies.iter().map(|&e| (-(beta * (e - e0))).exp()).collect();
    let z: T = w.iter().copied().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// e^{−βH}/Z on the (possibly truncated) space of `h`.
pub fn thermal_state<T: Real>(h: &SpectralHamiltonian<T>, beta: T) -> Result<DensityMatrix<T>> {
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite and ≥ 0".into()));
    }
    let p = boltzmann(h.energies(), beta);
    Ok(state_from_populations(h, &p))
}

/// Z = Σ e^{−βE_n}
pub fn partition_function<T: Real>(h: &SpectralHamiltonian<T>, beta: T) -> T {
    h.energies().iter().map(|&e| (-(beta * e)).exp()).sum()
}

/// V diag(p) V†, built directly so diagonal Hamiltonians stay exactly diagonal.
fn state_from_populations<T: Real>(h: &SpectralHamiltonian<T>, p: &[T]) -> DensityMatrix<T> {
    let es = h.eigensystem();
    let m = es.apply_fn_indexed(|k| cre(p[k]));
    DensityMatrix::from_matrix_unchecked(m)
}

impl<T: Real> Eigensystem<T> {
    /// V diag(f(k)) V† with the function indexed by eigenvalue position.
    pub(crate) fn apply_fn_indexed(&self, f: impl Fn(usize) -> C<T>) -> ComplexMatrix<T> {
        let n = self.dim();
        let v = &self.vectors;
        let fvals: Vec<C<T>> = (0..n).map(f).collect();
        ComplexMatrix::from_fn(n, |i, k| v[(i, k)] * fvals[k]).matmul(&v.adjoint())
    }
}

/// Thermal occupation probabilities n̄ⁿ/(1+n̄)^{n+1}, n = 0..=nmax (not renormalized).
pub fn thermal_occupations<T: Real>(nbar: T, nmax: usize) -> Vec<T> {
    let q = nbar / (T::one() + nbar);
    let p0 = T::one() / (T::one() + nbar);
    let mut out = Vec::with_capacity(nmax + 1);
    let mut w = p0;
    for _ in 0..=nmax {
        out.push(w);
        w *= q;
    }
    out
}

/// Smallest cutoff with discarded thermal weight (n̄/(1+n̄))^{nmax+1} < eps_tail.
pub fn truncation_dim<T: Real>(nbar: T, eps_tail: T, cap: usize) -> Result<usize> {
    if !(nbar >= T::zero()) || !nbar.is_finite() {
        return Err(Error::InvalidParameter("nbar must be finite and ≥ 0".into()));
    }
    if !(eps_tail > T::zero() && eps_tail < T::one()) {
        return Err(Error::InvalidParameter("eps_tail must lie in (0, 1)".into()));
    }
    if nbar == T::zero() {
        return Ok(0);
    }
    let ln_q = (nbar / (T::one() + nbar)).ln();
    // tail(nmax) = q^{nmax+1}; start from the log estimate and settle exactly
    let est = (eps_tail.ln() / ln_q).floor().to_usize().unwrap_or(usize::MAX);
    if est > cap.saturating_add(1) {
        return Err(Error::TailTooHeavy { cap });
    }
    let tail = |nmax: usize| (ln_q * T::from_usize_lossy(nmax + 1)).exp();
    let mut nmax = est.saturating_sub(1);
    while nmax > 0 && tail(nmax - 1) < eps_tail {
        nmax -= 1;
    }
    while !(tail(nmax) < eps_tail) {
        nmax += 1;
    }
    if nmax > cap {
        return Err(Error::TailTooHeavy { cap });
    }
    Ok(nmax)
}

/// Truncated oscillator at frequency `lambda` together with its thermal state
/// for mean occupation `nbar`. The cutoff follows `truncation_dim` (at least 1)
/// and the retained populations are renormalized.
pub fn oscillator_thermal<T: Real>(
    lambda: T,
    nbar: T,
    config: &Config,
) -> Result<(SpectralHamiltonian<T>, DensityMatrix<T>)> {
    let nmax = truncation_dim(nbar, T::lit(config.eps_tail), config.nmax_cap)?.max(1);
    let h = oscillator_hamiltonian(lambda, nmax)?;
    let rho = oscillator_thermal_on(&h, nbar)?;
    Ok((h, rho))
}

/// Renormalized thermal state n̄ⁿ/(1+n̄)^{n+1} on the levels of an oscillator
/// Hamiltonian built by [`oscillator_hamiltonian`].
pub fn oscillator_thermal_on<T: Real>(
    h: &SpectralHamiltonian<T>,
    nbar: T,
) -> Result<DensityMatrix<T>> {
    if !(nbar >= T::zero()) || !nbar.is_finite() {
        return Err(Error::InvalidParameter("nbar must be finite and ≥ 0".into()));
    }
    let mut p = thermal_occupations(nbar, h.dim() - 1);
    let s: T = p.iter().copied().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(state_from_populations(h, &p))
}

/// Single-qubit operators in the {|0⟩, |1⟩} basis with σ_z|0⟩ = |0⟩.
#[derive(Clone, Debug)]
pub struct QubitOps<T: Real> {
    pub pauli_x: ComplexMatrix<T>,
    pub pauli_y: ComplexMatrix<T>,
    pub pauli_z: ComplexMatrix<T>,
    /// (σ_x + σ_z)/√2
    pub hadamard: ComplexMatrix<T>,
    pub ket0_proj: ComplexMatrix<T>,
    pub ket1_proj: ComplexMatrix<T>,
    pub plus_proj: ComplexMatrix<T>,
}

pub fn qubit_constants<T: Real>() -> QubitOps<T> {
    let o = C::zero();
    let l = C::one();
    let i = cplx(T::zero(), T::one());
    let r = T::FRAC_1_SQRT_2();
    let h = cre(T::lit(0.5));
    let m = |a: [C<T>; 4]| ComplexMatrix::new(2, a.to_vec()).expect("2×2 literal");
    QubitOps {
        pauli_x: m([o, l, l, o]),
        pauli_y: m([o, -i, i, o]),
        pauli_z: m([l, o, o, -l]),
        hadamard: m([cre(r), cre(r), cre(r), cre(-r)]),
        ket0_proj: m([l, o, o, o]),
        ket1_proj: m([o, o, o, l]),
        plus_proj: m([h, h, h, h]),
    }
}
