//! Two-point-measurement ground truth: joint probabilities, the work
//! distribution, χ(u) evaluated directly, moments and the Jarzynski ratio.

use log::warn;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::real::{cis, cplx, Real, C};
use crate::states::{QuenchProtocol, Schedule, SpectralHamiltonian};

/// Eigenvalues closer than this (relative to the spectral scale) share an eigenspace.
pub(crate) fn degeneracy_tol<T: Real>(h: &SpectralHamiltonian<T>) -> T {
    T::tol(1e-10) * h.max_abs_energy().max(T::one())
}

/// p(n, M) over the eigenspaces of the initial (rows) and final (columns)
/// Hamiltonians.
#[derive(Clone, Debug, PartialEq)]
pub struct JointProbabilityTable<T: Real> {
    /// Row-major, `spectra_i.len()` × `spectra_f.len()`.
    pub p: Vec<Vec<T>>,
    /// Distinct initial energies E_n.
    pub spectra_i: Vec<T>,
    /// Distinct final energies E′_M.
    pub spectra_f: Vec<T>,
    /// Initial populations p_n⁰ = Tr(P_n ρ).
    pub initial_populations: Vec<T>,
}

impl<T: Real> JointProbabilityTable<T> {
    pub fn total(&self) -> T {
        self.p.iter().flatten().copied().sum()
    }

    /// p^τ_{M|n}; `None` when the initial level is unpopulated.
    pub fn conditional(&self, n: usize, m: usize) -> Option<T> {
        let p0 = self.initial_populations[n];
        (p0 > T::zero()).then(|| self.p[n][m] / p0)
    }

    /// Non-negativity, normalization and row marginals.
    pub fn check(&self) -> Result<()> {
        let neg = T::tol(1e-14);
        if let Some(bad) = self.p.iter().flatten().find(|&&x| x < -neg) {
            return Err(Error::NotDensityMatrix(format!("negative joint probability {bad:e}")));
        }
        let tol = T::tol(1e-12);
        let tot = self.total();
        if (tot - T::one()).abs() > tol {
            return Err(Error::NotDensityMatrix(format!("joint probabilities sum to {tot}")));
        }
        for (row, &p0) in self.p.iter().zip(&self.initial_populations) {
            let s: T = row.iter().copied().sum();
            if (s - p0).abs() > tol {
                return Err(Error::NotDensityMatrix(format!(
                    "row marginal {s} differs from initial population {p0}"
                )));
            }
        }
        Ok(())
    }

    /// Σ p(n,M) e^{iu(E′_M − E_n)}
    pub fn fourier_sum(&self, u: T) -> C<T> {
        let mut acc = C::zero();
        for (n, row) in self.p.iter().enumerate() {
            for (m, &p) in row.iter().enumerate() {
                acc += cis(u * (self.spectra_f[m] - self.spectra_i[n])) * p;
            }
        }
        acc
    }
}

/// Discrete work distribution Σ_k p_k δ(W − W_k) with strictly ascending W_k.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkDistribution<T: Real> {
    pub atoms: Vec<(T, T)>,
}

impl<T: Real> WorkDistribution<T> {
    /// Sorts, drops non-positive weights and merges atoms closer than `merge_tol`.
    /// Merged atoms sit at their probability-weighted mean.
    pub fn from_atoms(mut raw: Vec<(T, T)>, merge_tol: T) -> Self {
        raw.retain(|&(_, p)| p > T::zero());
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut atoms: Vec<(T, T)> = Vec::new();
        let mut anchor = T::zero();
        for (w, p) in raw {
            match atoms.last_mut() {
                Some(last) if w - anchor < merge_tol => {
                    let tot = last.1 + p;
                    last.0 = (last.0 * last.1 + w * p) / tot;
                    last.1 = tot;
                }
                _ => {
                    anchor = w;
                    atoms.push((w, p));
                }
            }
        }
        Self { atoms }
    }

    pub fn total(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Σ p e^{iuW}
    pub fn char_fn(&self, u: T) -> C<T> {
        self.atoms
            .iter()
            .fold(C::zero(), |acc, &(w, p)| acc + cis(u * w) * p)
    }

    pub fn check(&self) -> Result<()> {
        if self.atoms.iter().any(|a| a.1 < T::zero()) {
            return Err(Error::NotDensityMatrix("negative work probability".into()));
        }
        if self.atoms.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidParameter("work values not strictly ascending".into()));
        }
        let tot = self.total();
        if (tot - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::NotDensityMatrix(format!("work probabilities sum to {tot}")));
        }
        Ok(())
    }
}

/// Time-ordered propagator of a schedule, with the rightmost factor earliest.
/// Each segment is cut into `steps_per_segment` slices; ramps are sampled at
/// slice midpoints.
pub fn propagator<T, F>(
    protocol: &QuenchProtocol<T>,
    h_of_lambda: F,
    steps_per_segment: usize,
) -> Result<ComplexMatrix<T>>
where
    T: Real,
    F: Fn(T) -> Result<SpectralHamiltonian<T>>,
{
    if steps_per_segment == 0 {
        return Err(Error::InvalidParameter("steps_per_segment must be ≥ 1".into()));
    }
    let dim = h_of_lambda(protocol.lambda0)?.dim();
    let mut u = ComplexMatrix::identity(dim);
    let steps = T::from_usize_lossy(steps_per_segment);
    match &protocol.schedule {
        Schedule::SuddenQuench => {}
        Schedule::Piecewise(segments) => {
            for &(duration, lambda) in segments {
                let slice = h_of_lambda(lambda)?.evolution(duration / steps);
                for _ in 0..steps_per_segment {
                    u = slice.matmul(&u);
                }
            }
        }
        Schedule::Ramp(knots) => {
            let mut from = protocol.lambda0;
            for &(duration, to) in knots {
                let dt = duration / steps;
                for k in 0..steps_per_segment {
                    let frac = (T::from_usize_lossy(k) + T::lit(0.5)) / steps;
                    let lambda = from + (to - from) * frac;
                    u = h_of_lambda(lambda)?.evolution(dt).matmul(&u);
                }
                from = to;
            }
        }
    }
    Ok(u)
}

fn check_dims<T: Real>(
    rho: usize,
    u_tau: &ComplexMatrix<T>,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
) -> Result<()> {
    for found in [u_tau.dim(), h_i.dim(), h_f.dim()] {
        if found != rho {
            return Err(Error::DimensionMismatch {
                expected: rho,
                found,
            });
        }
    }
    Ok(())
}

/// Joint probabilities p(n,M) = Tr[Q_M U_τ P_n ρ P_n U_τ†] with P_n, Q_M the
/// eigenspace projectors of H_i and H_f.
pub fn joint_probabilities<T: Real>(
    rho_s: &DensityMatrix<T>,
    u_tau: &ComplexMatrix<T>,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
) -> Result<JointProbabilityTable<T>> {
    check_dims(rho_s.dim(), u_tau, h_i, h_f)?;
    let vi = &h_i.eigensystem().vectors;
    let vf = &h_f.eigensystem().vectors;
    // Transition amplitudes between eigenvectors and ρ in the initial eigenbasis.
    let w = vf.adjoint().matmul(u_tau).matmul(vi);
    let r = vi.adjoint().matmul(rho_s.matrix()).matmul(vi);

    let groups_i = h_i.eigensystem().eigenspaces(degeneracy_tol(h_i));
    let groups_f = h_f.eigensystem().eigenspaces(degeneracy_tol(h_f));
    let n_dim = rho_s.dim();

    let mut p = Vec::with_capacity(groups_i.len());
    let mut initial = Vec::with_capacity(groups_i.len());
    for gi in &groups_i {
        // Per final eigenvector k: Σ_{a,b ∈ gi} W[k,a] R[a,b] W[k,b]*
        let mut per_k = vec![T::zero(); n_dim];
        for (k, slot) in per_k.iter_mut().enumerate() {
            let mut acc = C::<T>::zero();
            for &a in gi {
                let wka = w[(k, a)];
                if wka.is_zero() {
                    continue;
                }
                for &b in gi {
                    acc += wka * r[(a, b)] * w[(k, b)].conj();
                }
            }
            *slot = acc.re;
        }
        let row: Vec<T> = groups_f
            .iter()
            .map(|gf| gf.iter().map(|&k| per_k[k]).sum())
            .collect();
        p.push(row);
        initial.push(gi.iter().map(|&a| r[(a, a)].re).sum());
    }
    let energy = |h: &SpectralHamiltonian<T>, groups: &[Vec<usize>]| -> Vec<T> {
        groups
            .iter()
            .map(|g| {
                g.iter().map(|&k| h.energies()[k]).sum::<T>() / T::from_usize_lossy(g.len())
            })
            .collect()
    };
    Ok(JointProbabilityTable {
        p,
        spectra_i: energy(h_i, &groups_i),
        spectra_f: energy(h_f, &groups_f),
        initial_populations: initial,
    })
}

/// Default merge tolerance: 1e-9 · max|W| (and at least 1e-9 in absolute terms).
pub fn default_merge_tol<T: Real>(table: &JointProbabilityTable<T>) -> T {
    let mut wmax = T::zero();
    for &ef in &table.spectra_f {
        for &ei in &table.spectra_i {
            wmax = wmax.max((ef - ei).abs());
        }
    }
    T::tol(1e-9) * wmax.max(T::one())
}

/// Joint probabilities at or below this level are round-off from the basis
/// change and are not reported as atoms.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// P(W) = Σ p(n,M) δ[W − (E′_M − E_n)] with the default merge tolerance.
pub fn work_distribution<T: Real>(table: &JointProbabilityTable<T>) -> WorkDistribution<T> {
    work_distribution_with_tol(table, default_merge_tol(table))
}

pub fn work_distribution_with_tol<T: Real>(
    table: &JointProbabilityTable<T>,
    merge_tol: T,
) -> WorkDistribution<T> {
    let floor = T::tol(PROBABILITY_FLOOR);
    let mut raw = Vec::new();
    for (n, row) in table.p.iter().enumerate() {
        for (m, &p) in row.iter().enumerate().filter(|(_, &p)| p > floor) {
            raw.push((table.spectra_f[m] - table.spectra_i[n], p));
        }
    }
    WorkDistribution::from_atoms(raw, merge_tol)
}

/// χ(u) = Tr[U_τ† e^{iuH_f} U_τ e^{−iuH_i} ρ]. Agrees with the two-point
/// definition when ρ commutes with H_i; a warning is logged otherwise.
pub fn char_fn_direct<T: Real>(
    rho_s: &DensityMatrix<T>,
    u_tau: &ComplexMatrix<T>,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
    u: T,
) -> Result<C<T>> {
    check_dims(rho_s.dim(), u_tau, h_i, h_f)?;
    let off = rho_s.max_offdiagonal_in(&h_i.eigensystem().vectors);
    if off > T::tol(1e-10) {
        warn!("initial state has coherences {off:e} in the H_i eigenbasis; χ differs from the TPM sum");
    }
    let fwd = h_f.exp(cplx(T::zero(), u));
    let back = h_i.exp(cplx(T::zero(), -u));
    let heis = u_tau.adjoint().matmul(&fwd).matmul(u_tau);
    Ok(heis.matmul(&back).trace_product(rho_s.matrix()))
}

/// ⟨W⟩ = Σ w p
pub fn average_work<T: Real>(dist: &WorkDistribution<T>) -> T {
    dist.atoms.iter().map(|&(w, p)| w * p).sum()
}

/// ⟨W⟩ = −i ∂_u χ(u)|₀ from central differences Im[χ(h) − χ(−h)]/(2h) with one
/// Richardson step between h = du and h = du/2.
pub fn average_work_from_chi<T: Real>(chi: impl Fn(T) -> C<T>, du: T) -> Result<T> {
    if !(du > T::zero()) || !du.is_finite() {
        return Err(Error::InvalidParameter("du must be positive".into()));
    }
    let d = |h: T| (chi(h) - chi(-h)).im / (T::lit(2.0) * h);
    let coarse = d(du);
    let fine = d(du / T::lit(2.0));
    Ok((T::lit(4.0) * fine - coarse) / T::lit(3.0))
}

/// Finite-difference step 1e-4 / max|E| over both spectra.
pub fn default_du<T: Real>(h_i: &SpectralHamiltonian<T>, h_f: &SpectralHamiltonian<T>) -> T {
    let e = h_i.max_abs_energy().max(h_f.max_abs_energy());
    T::lit(1e-4) / e.max(T::min_positive_value())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JarzynskiCheck<T: Real> {
    /// ⟨e^{−βW}⟩
    pub lhs: T,
    /// Z_f / Z_i
    pub rhs: T,
    pub deviation: T,
}

pub fn jarzynski_check<T: Real>(
    dist: &WorkDistribution<T>,
    beta: T,
    z_i: T,
    z_f: T,
) -> Result<JarzynskiCheck<T>> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be positive and finite".into()));
    }
    let lhs: T = dist.atoms.iter().map(|&(w, p)| p * (-(beta * w)).exp()).sum();
    let rhs = z_f / z_i;
    Ok(JarzynskiCheck {
        lhs,
        rhs,
        deviation: (lhs - rhs).abs(),
    })
}
