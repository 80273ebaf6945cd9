//! Qubit–resonator realization: a mechanical mode (system S) dispersively
//! coupled to a Cooper-pair-box qubit that doubles as the interferometer
//! ancilla A. Operators act on S ⊗ A with basis index 2·n + a.
//!
//! H_SA(λ) = ω(n̂+½) ⊗ I + δ I ⊗ σ_z + λ(n̂+½) ⊗ σ_z
//!
//! Writing H_S = ω(n̂+½), H_A = δσ_z and H_S(λ) = λ(n̂+½), the two
//! half-duration gates 𝒢₁ = e^{−iH_SA(λ_τ)u/2} and 𝒢₂ = e^{−iH_SA(λ₀)u/2}
//! compose to
//!
//! 𝒢(u) = σ_x 𝒢₂ σ_x 𝒢₁ = [e^{−iΔu/2} ⊗ |0⟩⟨0| + e^{iΔu/2} ⊗ |1⟩⟨1|] e^{−iH_S u},
//!
//! with Δ = H_S(λ_τ) − H_S(λ₀). The qubit splitting cancels between the two
//! halves, so no e^{−iH_A u} factor survives. [`gate_cal_branch_form_with_ha`]
//! keeps that factor for comparison.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interferometer::{ancilla_flip, branch_gate, gate_commuting, run_protocol_state};
use crate::linalg::{kron, ComplexMatrix};
use crate::quench::{chi_closed, QuenchParams};
use crate::real::{cis, cre, Real, C};
use crate::states::{
    annihilation, number_operator, oscillator_thermal, qubit_constants, QuenchProtocol,
    SpectralHamiltonian,
};
use crate::Config;

/// Parameters of the full qubit–resonator Hamiltonian.
///
/// The dispersive limit needs δ ≫ ω, g ≪ δ and ε₀ = 0; none of this is
/// enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersiveParams<T: Real> {
    pub epsilon0: T,
    pub delta: T,
    pub omega: T,
    pub g: T,
    pub nmax: usize,
}

impl<T: Real> DispersiveParams<T> {
    /// Work parameter λ = g²/δ.
    pub fn lambda(&self) -> T {
        self.g * self.g / self.delta
    }
}

/// Dispersive model with a sudden change λ₀ → λ_τ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersiveQuench<T: Real> {
    pub omega: T,
    pub delta: T,
    pub lambda0: T,
    pub lambda_tau: T,
    pub nmax: usize,
}

fn check_nmax(nmax: usize) -> Result<()> {
    if nmax == 0 {
        return Err(Error::InvalidDimension("nmax must be ≥ 1".into()));
    }
    Ok(())
}

/// (ε₀/2)σ_z + δσ_x + ω(a†a+½) + g(a+a†) ⊗ σ_z on S ⊗ A.
pub fn full_hamiltonian<T: Real>(p: &DispersiveParams<T>) -> Result<ComplexMatrix<T>> {
    check_nmax(p.nmax)?;
    let d = p.nmax + 1;
    let q = qubit_constants::<T>();
    let id_s = ComplexMatrix::identity(d);
    let a = annihilation::<T>(p.nmax);
    let x = &a + &a.adjoint();
    let mut osc = number_operator::<T>(p.nmax);
    for k in 0..d {
        osc[(k, k)] += cre(T::lit(0.5));
    }
    let qubit = &q.pauli_z.scale(cre(p.epsilon0 / T::lit(2.0))) + &q.pauli_x.scale(cre(p.delta));
    let h = &(&kron(&id_s, &qubit) + &kron(&osc.scale(cre(p.omega)), &ComplexMatrix::identity(2)))
        + &kron(&x.scale(cre(p.g)), &q.pauli_z);
    Ok(h)
}

/// Diagonal entries of H_SA(λ): ω(n+½) + s δ + s λ(n+½) with s = ±1 for a = 0, 1.
fn dispersive_levels<T: Real>(omega: T, delta: T, lambda: T, nmax: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(2 * (nmax + 1));
    for n in 0..=nmax {
        let m = T::from_usize_lossy(n) + T::lit(0.5);
        out.push(omega * m + delta + lambda * m);
        out.push(omega * m - delta - lambda * m);
    }
    out
}

/// H_SA(λ) = ω(n̂+½) ⊗ I + δ I ⊗ σ_z + λ(n̂+½) ⊗ σ_z
pub fn dispersive_hamiltonian<T: Real>(
    omega: T,
    delta: T,
    lambda: T,
    nmax: usize,
) -> Result<SpectralHamiltonian<T>> {
    check_nmax(nmax)?;
    SpectralHamiltonian::from_diagonal(&dispersive_levels(omega, delta, lambda, nmax))
}

/// Diagonal unitary with entries e^{−iφ_k}.
fn phase_diagonal<T: Real>(phases: impl Iterator<Item = T>) -> ComplexMatrix<T> {
    let d: Vec<C<T>> = phases.map(|p| cis(-p)).collect();
    ComplexMatrix::from_diagonal(&d)
}

fn level(n: usize) -> f64 {
    n as f64 + 0.5
}

/// e^{−iH_S t} e^{−iH_A t} e^{−i(∫λ dt)(n̂+½) ⊗ σ_z} for the schedule's
/// duration t = τ.
pub fn usa_propagator<T: Real>(
    protocol: &QuenchProtocol<T>,
    omega: T,
    delta: T,
    nmax: usize,
) -> Result<ComplexMatrix<T>> {
    check_nmax(nmax)?;
    let tau = protocol.duration();
    let area = protocol.integrated_lambda();
    Ok(phase_diagonal((0..2 * (nmax + 1)).map(|k| {
        let m = T::lit(level(k / 2));
        let s = if k % 2 == 0 { T::one() } else { -T::one() };
        omega * m * tau + s * delta * tau + s * area * m
    })))
}

/// (e^{−i∫H_S(λ_t)dt} ⊗ |0⟩⟨0| + e^{+i∫H_S(λ_t)dt} ⊗ |1⟩⟨1|) e^{−i(H_S+H_A)τ}
pub fn usa_branch_form<T: Real>(
    protocol: &QuenchProtocol<T>,
    omega: T,
    delta: T,
    nmax: usize,
) -> Result<ComplexMatrix<T>> {
    check_nmax(nmax)?;
    let tau = protocol.duration();
    let area = protocol.integrated_lambda();
    let d = nmax + 1;
    let coupling = phase_diagonal((0..d).map(|n| area * T::lit(level(n))));
    let branches = branch_gate(&coupling, &coupling.adjoint());
    let free = free_evolution(omega, delta, nmax, tau, true);
    Ok(branches.matmul(&free))
}

/// e^{−iH_S t} ⊗ I, times e^{−iH_A t} when `with_ha`.
fn free_evolution<T: Real>(omega: T, delta: T, nmax: usize, t: T, with_ha: bool) -> ComplexMatrix<T> {
    phase_diagonal((0..2 * (nmax + 1)).map(|k| {
        let s = if k % 2 == 0 { T::one() } else { -T::one() };
        let a = if with_ha { s * delta * t } else { T::zero() };
        omega * T::lit(level(k / 2)) * t + a
    }))
}

/// 𝒢₁, 𝒢₂ and their composition 𝒢 = σ_x 𝒢₂ σ_x 𝒢₁.
#[derive(Clone, Debug)]
pub struct CalGates<T: Real> {
    pub g1: ComplexMatrix<T>,
    pub g2: ComplexMatrix<T>,
    pub composed: ComplexMatrix<T>,
}

pub fn gate_cal<T: Real>(u: T, q: &DispersiveQuench<T>) -> Result<CalGates<T>> {
    let half = u / T::lit(2.0);
    let g1 = dispersive_hamiltonian(q.omega, q.delta, q.lambda_tau, q.nmax)?.evolution(half);
    let g2 = dispersive_hamiltonian(q.omega, q.delta, q.lambda0, q.nmax)?.evolution(half);
    let x = ancilla_flip::<T>(q.nmax + 1);
    let composed = x.matmul(&g2).matmul(&x).matmul(&g1);
    Ok(CalGates { g1, g2, composed })
}

/// Diagonal e^{−iH_S(λ)t} on S alone.
fn coupling_phase<T: Real>(lambda: T, nmax: usize, t: T) -> ComplexMatrix<T> {
    phase_diagonal((0..=nmax).map(|n| lambda * T::lit(level(n)) * t))
}

/// [e^{−iΔu/2} ⊗ |0⟩⟨0| + e^{iΔu/2} ⊗ |1⟩⟨1|] e^{−iH_S u}, equal to 𝒢(u).
pub fn gate_cal_branch_form<T: Real>(u: T, q: &DispersiveQuench<T>) -> Result<ComplexMatrix<T>> {
    cal_branch(u, q, false)
}

/// The same branch structure followed by e^{−i(H_S+H_A)u}. Differs from
/// 𝒢(u) by e^{−iH_A u} unless δu is a multiple of π.
pub fn gate_cal_branch_form_with_ha<T: Real>(
    u: T,
    q: &DispersiveQuench<T>,
) -> Result<ComplexMatrix<T>> {
    cal_branch(u, q, true)
}

fn cal_branch<T: Real>(u: T, q: &DispersiveQuench<T>, with_ha: bool) -> Result<ComplexMatrix<T>> {
    check_nmax(q.nmax)?;
    let shift = coupling_phase(q.lambda_tau - q.lambda0, q.nmax, u / T::lit(2.0));
    let branches = branch_gate(&shift, &shift.adjoint());
    Ok(branches.matmul(&free_evolution(q.omega, q.delta, q.nmax, u, with_ha)))
}

/// H_S^{i(f)} = (ω + λ_{0(τ)})(n̂+½) on S.
pub fn system_hamiltonians<T: Real>(
    q: &DispersiveQuench<T>,
) -> Result<(SpectralHamiltonian<T>, SpectralHamiltonian<T>)> {
    check_nmax(q.nmax)?;
    let levels = |l: T| -> Vec<T> {
        (0..=q.nmax).map(|n| (q.omega + l) * T::lit(level(n))).collect()
    };
    Ok((
        SpectralHamiltonian::from_diagonal(&levels(q.lambda0))?,
        SpectralHamiltonian::from_diagonal(&levels(q.lambda_tau))?,
    ))
}

/// Gˢ(u) = e^{−iH_S^i u} ⊗ |0⟩⟨0| + e^{−iH_S^f u} ⊗ |1⟩⟨1|
pub fn gate_simple<T: Real>(u: T, q: &DispersiveQuench<T>) -> Result<ComplexMatrix<T>> {
    let (h_i, h_f) = system_hamiltonians(q)?;
    gate_commuting(u, &h_i, &h_f)
}

/// σ_x 𝒢(u) σ_x e^{iH_A u} e^{−i(H_S(λ₀)+H_S(λ_τ))u/2}, the local-unitary
/// relation to Gˢ(u) including the ancilla factor e^{iH_A u}.
pub fn simple_from_cal_with_ha<T: Real>(u: T, q: &DispersiveQuench<T>) -> Result<ComplexMatrix<T>> {
    let base = simple_from_cal(u, q)?;
    let ha = kron(
        &ComplexMatrix::identity(q.nmax + 1),
        &ComplexMatrix::from_diagonal(&[cis(q.delta * u), cis(-q.delta * u)]),
    );
    // e^{iH_A u} commutes with the diagonal system factor.
    Ok(base.matmul(&ha))
}

/// σ_x 𝒢(u) σ_x e^{−i(H_S(λ₀)+H_S(λ_τ))u/2}, which equals Gˢ(u) exactly.
pub fn simple_from_cal<T: Real>(u: T, q: &DispersiveQuench<T>) -> Result<ComplexMatrix<T>> {
    let cal = gate_cal(u, q)?.composed;
    let x = ancilla_flip::<T>(q.nmax + 1);
    let sum = coupling_phase(q.lambda0 + q.lambda_tau, q.nmax, u / T::lit(2.0));
    let local = kron(&sum, &ComplexMatrix::identity(2));
    Ok(x.matmul(&cal).matmul(&x).matmul(&local))
}

/// Outcome of running the interferometer with 𝒢(u) and with Gˢ(u).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquivalenceReport {
    /// max ‖Gˢ − σ_x𝒢σ_x e^{iH_A u} e^{−i(H_S(λ₀)+H_S(λ_τ))u/2}‖ (operator norm)
    pub identity_with_ha: f64,
    /// max ‖Gˢ − σ_x𝒢σ_x e^{−i(H_S(λ₀)+H_S(λ_τ))u/2}‖ (operator norm)
    pub identity: f64,
    /// max ‖ρ_A[𝒢] − ρ_A[Gˢ]‖_F
    pub rho_raw: f64,
    /// max ‖σ_z ρ_A[𝒢] σ_z − ρ_A[Gˢ]‖_F
    pub rho_conjugated: f64,
    /// max |χ[Gˢ] − χ_closed|
    pub chi_simple_vs_closed: f64,
    /// max |χ[𝒢] − χ_closed|
    pub chi_cal_vs_closed: f64,
    /// max |χ[𝒢]* − χ_closed|
    pub chi_cal_conj_vs_closed: f64,
    /// Largest density-matrix defect (|Tr − 1| or negative eigenvalue) seen.
    pub density_defect: f64,
    pub nmax: usize,
}

/// Runs both circuits on the thermal state of H_S^i with mean occupation
/// `nbar`. The cutoff follows `config` unless `q.nmax` is larger.
pub fn protocol_equivalence<T: Real>(
    u_grid: &[T],
    q: &DispersiveQuench<T>,
    nbar: T,
    config: &Config,
) -> Result<EquivalenceReport> {
    let (_, rho) = oscillator_thermal(q.omega + q.lambda0, nbar, config)?;
    let nmax = (rho.dim() - 1).max(q.nmax);
    let q = DispersiveQuench { nmax, ..*q };
    let rho = if rho.dim() == nmax + 1 {
        rho
    } else {
        let (h_i, _) = system_hamiltonians(&q)?;
        crate::states::oscillator_thermal_on(&h_i, nbar)?
    };
    let qp = QuenchParams::new(q.lambda_tau - q.lambda0, nbar)?;
    let sz = qubit_constants::<T>().pauli_z;

    let rows: Vec<[f64; 8]> = u_grid
        .par_iter()
        .map(|&u| -> Result<[f64; 8]> {
            let simple = gate_simple(u, &q)?;
            let cal = gate_cal(u, &q)?.composed;
            let id_ha = diagonal_gap(&simple, &simple_from_cal_with_ha(u, &q)?);
            let id = diagonal_gap(&simple, &simple_from_cal(u, &q)?);
            let out_s = run_protocol_state(&simple, &rho)?;
            let out_c = run_protocol_state(&cal, &rho)?;
            let ms = out_s.ancilla.matrix();
            let mc = out_c.ancilla.matrix();
            let raw = mc.distance(ms).as_f64();
            let conj = mc.conjugate_by(&sz).distance(ms).as_f64();
            let closed = chi_closed(u, &qp);
            let chi_s = (out_s.readout.chi() - closed).norm().as_f64();
            let chi_c = (out_c.readout.chi() - closed).norm().as_f64();
            let chi_cc = (out_c.readout.chi().conj() - closed).norm().as_f64();
            let defect = density_defect(&out_s.ancilla).max(density_defect(&out_c.ancilla));
            Ok([id_ha, id, raw, conj, chi_s, chi_c, chi_cc, defect])
        })
        .collect::<Result<_>>()?;

    let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        identity_with_ha: col(0),
        identity: col(1),
        rho_raw: col(2),
        rho_conjugated: col(3),
        chi_simple_vs_closed: col(4),
        chi_cal_vs_closed: col(5),
        chi_cal_conj_vs_closed: col(6),
        density_defect: col(7),
        nmax,
    })
}

/// Operator-norm distance of two diagonal matrices (largest entry gap).
fn diagonal_gap<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> f64 {
    (a - b).max_abs().as_f64()
}

fn density_defect<T: Real>(rho: &crate::linalg::DensityMatrix<T>) -> f64 {
    let tr = (rho.matrix().trace().re - T::one()).abs().as_f64();
    tr.max((-rho.min_eigenvalue().as_f64()).max(0.0))
}
