//! Conditional system–ancilla gates and the Ramsey-like readout of χ(u).
//!
//! Every gate acts on (rest ⊗ ancilla) with the ancilla as the last,
//! least-significant tensor factor: basis index = 2·s + a. The circuit is
//!
//! ```text
//!   |0⟩_A ─ H ─┤     ├─ H ─ measure ⟨σ_z⟩, ⟨σ_y⟩
//!              │  G  │
//!   ρ     ─────┤     ├───── traced out
//! ```
//!
//! and leaves the ancilla in (I + Re χ σ_z + Im χ σ_y)/2 for the gates built
//! here.

use log::warn;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace, ComplexMatrix, DensityMatrix};
use crate::real::{cplx, Real, C};
use crate::states::{qubit_constants, SpectralHamiltonian};

/// Ancilla magnetizations ⟨σ_z⟩ = Re χ and ⟨σ_y⟩ = Im χ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaReadout<T: Real> {
    pub sz: T,
    pub sy: T,
}

impl<T: Real> AncillaReadout<T> {
    pub fn chi(&self) -> C<T> {
        cplx(self.sz, self.sy)
    }
}

/// One point of a characteristic-function sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharSample<T: Real> {
    pub u: T,
    pub re: T,
    pub im: T,
}

impl<T: Real> CharSample<T> {
    pub fn chi(&self) -> C<T> {
        cplx(self.re, self.im)
    }
}

/// Full result of one circuit run.
#[derive(Clone, Debug)]
pub struct ProtocolOutcome<T: Real> {
    /// Final 2×2 ancilla state.
    pub ancilla: DensityMatrix<T>,
    pub readout: AncillaReadout<T>,
    /// ⟨σ_x⟩, zero for well-formed conditional gates.
    pub sx: T,
}

/// How the magnetizations are read off the final ancilla state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReadoutMode {
    /// Exact expectation values.
    #[default]
    Exact,
    /// `shots` projective measurements each of σ_z and σ_y.
    Sampled { shots: u64 },
}

/// X ⊗ |0⟩⟨0| + Y ⊗ |1⟩⟨1|
pub fn branch_gate<T: Real>(on0: &ComplexMatrix<T>, on1: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let q = qubit_constants::<T>();
    &kron(on0, &q.ket0_proj) + &kron(on1, &q.ket1_proj)
}

/// I_rest ⊗ σ_x
pub fn ancilla_flip<T: Real>(rest_dim: usize) -> ComplexMatrix<T> {
    kron(&ComplexMatrix::identity(rest_dim), &qubit_constants::<T>().pauli_x)
}

/// I_rest ⊗ op
pub fn on_ancilla<T: Real>(rest_dim: usize, op: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    kron(&ComplexMatrix::identity(rest_dim), op)
}

/// ⟨a|G|b⟩_A as an operator on the rest.
pub fn ancilla_block<T: Real>(g: &ComplexMatrix<T>, a: usize, b: usize) -> ComplexMatrix<T> {
    let d = g.dim() / 2;
    ComplexMatrix::from_fn(d, |i, j| g[(2 * i + a, 2 * j + b)])
}

fn check_unitary<T: Real>(u: &ComplexMatrix<T>) -> Result<()> {
    let dev = u.unitary_deviation();
    if !(dev < T::tol(1e-10) * T::from_usize_lossy(u.dim()).sqrt()) {
        return Err(Error::NotUnitary {
            deviation: dev.as_f64(),
        });
    }
    Ok(())
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// U_τ e^{−iH_i u} ⊗ |0⟩⟨0| + e^{−iH_f u} U_τ ⊗ |1⟩⟨1|
pub fn gate_general<T: Real>(
    u: T,
    u_tau: &ComplexMatrix<T>,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
) -> Result<ComplexMatrix<T>> {
    check_same_dim(u_tau.dim(), h_i.dim())?;
    check_same_dim(u_tau.dim(), h_f.dim())?;
    check_unitary(u_tau)?;
    let e_i = h_i.evolution(u);
    let e_f = h_f.evolution(u);
    Ok(branch_gate(&u_tau.matmul(&e_i), &e_f.matmul(u_tau)))
}

/// The four factors [G₁, I⊗σ_x, G₂, I⊗σ_x] in application order, with
/// G₁ = I ⊗ |0⟩⟨0| + e^{−iH_f u} U_τ ⊗ |1⟩⟨1| and
/// G₂ = I ⊗ |0⟩⟨0| + U_τ e^{−iH_i u} ⊗ |1⟩⟨1|.
pub fn gate_sequence<T: Real>(
    u: T,
    u_tau: &ComplexMatrix<T>,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
) -> Result<[ComplexMatrix<T>; 4]> {
    check_same_dim(u_tau.dim(), h_i.dim())?;
    check_same_dim(u_tau.dim(), h_f.dim())?;
    check_unitary(u_tau)?;
    let d = u_tau.dim();
    let id = ComplexMatrix::identity(d);
    let g1 = branch_gate(&id, &h_f.evolution(u).matmul(u_tau));
    let g2 = branch_gate(&id, &u_tau.matmul(&h_i.evolution(u)));
    let x = ancilla_flip(d);
    Ok([g1, x.clone(), g2, x])
}

/// Product of gates given in application order (first applied first).
pub fn compose<T: Real>(factors: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
    let mut it = factors.iter();
    let first = it.next().expect("at least one factor").clone();
    it.fold(first, |acc, g| g.matmul(&acc))
}

/// e^{−iH_i u} ⊗ |0⟩⟨0| + e^{−iH_f u} ⊗ |1⟩⟨1|, valid when [H_i, H_f] = 0.
pub fn gate_commuting<T: Real>(
    u: T,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
) -> Result<ComplexMatrix<T>> {
    check_same_dim(h_i.dim(), h_f.dim())?;
    warn_if_noncommuting(h_i, h_f);
    Ok(branch_gate(&h_i.evolution(u), &h_f.evolution(u)))
}

/// [G₁ˢ, I⊗σ_x, G₂ˢ, I⊗σ_x] in application order for the commuting gate.
pub fn gate_commuting_sequence<T: Real>(
    u: T,
    h_i: &SpectralHamiltonian<T>,
    h_f: &SpectralHamiltonian<T>,
) -> Result<[ComplexMatrix<T>; 4]> {
    check_same_dim(h_i.dim(), h_f.dim())?;
    warn_if_noncommuting(h_i, h_f);
    let d = h_i.dim();
    let id = ComplexMatrix::identity(d);
    let g1 = branch_gate(&id, &h_f.evolution(u));
    let g2 = branch_gate(&id, &h_i.evolution(u));
    let x = ancilla_flip(d);
    Ok([g1, x.clone(), g2, x])
}

fn warn_if_noncommuting<T: Real>(h_i: &SpectralHamiltonian<T>, h_f: &SpectralHamiltonian<T>) {
    let c = h_i.matrix().commutator(h_f.matrix()).frobenius_norm();
    if !(c < T::tol(1e-10)) {
        warn!("commuting-gate shortcut used with ‖[H_i, H_f]‖_F = {c:e}");
    }
}

/// Runs the circuit and returns the final ancilla state and magnetizations.
pub fn run_protocol_state<T: Real>(
    gate: &ComplexMatrix<T>,
    rho_rest: &DensityMatrix<T>,
) -> Result<ProtocolOutcome<T>> {
    check_same_dim(2 * rho_rest.dim(), gate.dim())?;
    check_unitary(gate)?;
    let q = qubit_constants::<T>();

    // ρ ⊗ |+⟩⟨+|: the ancilla starts in |0⟩ and passes the first Hadamard.
    let start = kron(rho_rest.matrix(), &q.plus_proj);
    let evolved = gate.matmul(&start).matmul(&gate.adjoint());
    // The final Hadamard acts on the ancilla only, so it commutes with the
    // partial trace over the rest.
    let reduced = partial_trace(&evolved, &[rho_rest.dim(), 2], 1)?;
    let ancilla = DensityMatrix::new(reduced.conjugate_by(&q.hadamard))?;

    let m = ancilla.matrix();
    let readout = AncillaReadout {
        sz: m.trace_product(&q.pauli_z).re,
        sy: m.trace_product(&q.pauli_y).re,
    };
    let sx = m.trace_product(&q.pauli_x).re;
    Ok(ProtocolOutcome { ancilla, readout, sx })
}

/// Runs the circuit and returns (⟨σ_z⟩, ⟨σ_y⟩) = (Re χ, Im χ).
pub fn run_protocol<T: Real>(
    gate: &ComplexMatrix<T>,
    rho_rest: &DensityMatrix<T>,
) -> Result<AncillaReadout<T>> {
    run_protocol_state(gate, rho_rest).map(|o| o.readout)
}

/// Estimates the magnetizations from `shots` binary outcomes each of σ_z and σ_y.
pub fn sample_readout<T: Real, R: Rng + ?Sized>(
    exact: &AncillaReadout<T>,
    shots: u64,
    rng: &mut R,
) -> Result<AncillaReadout<T>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let mut estimate = |mean: T| -> Result<T> {
        let p_up = ((T::one() + mean) / T::lit(2.0)).max(T::zero()).min(T::one());
        let dist = Binomial::new(shots, p_up.as_f64())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let ups = dist.sample(rng) as f64;
        Ok(T::lit(2.0 * ups / shots as f64 - 1.0))
    };
    Ok(AncillaReadout {
        sz: estimate(exact.sz)?,
        sy: estimate(exact.sy)?,
    })
}

/// ‖ρ_A(G·(K_S ⊗ L_A)) − ρ_A(G)‖_F for local unitaries applied before the gate.
pub fn verify_generalized_gate<T: Real>(
    gate: &ComplexMatrix<T>,
    k_s: &ComplexMatrix<T>,
    l_a: &ComplexMatrix<T>,
    rho_s: &DensityMatrix<T>,
) -> Result<T> {
    check_same_dim(rho_s.dim(), k_s.dim())?;
    check_same_dim(2, l_a.dim())?;
    check_unitary(k_s)?;
    check_unitary(l_a)?;
    let dressed = gate.matmul(&kron(k_s, l_a));
    let a = run_protocol_state(gate, rho_s)?;
    let b = run_protocol_state(&dressed, rho_s)?;
    Ok(a.ancilla.matrix().distance(b.ancilla.matrix()))
}

/// Runs the circuit at every grid point. Points are independent and may be
/// evaluated concurrently; the output follows the input order.
pub fn sweep_char_fn<T, F>(
    gate_builder: F,
    rho: &DensityMatrix<T>,
    u_grid: &[T],
) -> Result<Vec<CharSample<T>>>
where
    T: Real,
    F: Fn(T) -> Result<ComplexMatrix<T>> + Sync,
{
    if u_grid.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidParameter("u grid must be finite".into()));
    }
    u_grid
        .par_iter()
        .map(|&u| {
            let r = run_protocol(&gate_builder(u)?, rho)?;
            Ok(CharSample {
                u,
                re: r.sz,
                im: r.sy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density_matrix, random_hermitian, random_unitary};
    use crate::states::{oscillator_hamiltonian, thermal_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectral(m: ComplexMatrix<f64>) -> SpectralHamiltonian<f64> {
        SpectralHamiltonian::new(m).unwrap()
    }

    #[test]
    fn zero_time_gate_is_unitary_times_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u_tau = random_unitary(&mut rng, 3);
        let h_i = spectral(random_hermitian(&mut rng, 3));
        let h_f = spectral(random_hermitian(&mut rng, 3));
        let g = gate_general(0.0, &u_tau, &h_i, &h_f).unwrap();
        let expected = kron(&u_tau, &ComplexMatrix::identity(2));
        assert!(g.distance(&expected) < 1e-13);
    }

    #[test]
    fn trivial_protocol_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = spectral(random_hermitian(&mut rng, 3));
        let g = gate_general(0.8, &ComplexMatrix::identity(3), &h, &h).unwrap();
        let expected = kron(&h.evolution(0.8), &ComplexMatrix::identity(2));
        assert!(g.distance(&expected) < 1e-13);
    }

    #[test]
    fn gate_block_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u_tau = random_unitary(&mut rng, 4);
        let h_i = spectral(random_hermitian(&mut rng, 4));
        let h_f = spectral(random_hermitian(&mut rng, 4));
        let u = 1.7;
        let g = gate_general(u, &u_tau, &h_i, &h_f).unwrap();
        assert!(ancilla_block(&g, 0, 0).distance(&u_tau.matmul(&h_i.evolution(u))) < 1e-13);
        assert!(ancilla_block(&g, 1, 1).distance(&h_f.evolution(u).matmul(&u_tau)) < 1e-13);
        assert_eq!(ancilla_block(&g, 0, 1).max_abs(), 0.0);
        assert_eq!(ancilla_block(&g, 1, 0).max_abs(), 0.0);
        assert!(g.unitary_deviation() < 1e-12);
    }

    #[test]
    fn sequence_at_zero_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u_tau = random_unitary(&mut rng, 3);
        let h = spectral(random_hermitian(&mut rng, 3));
        let [g1, _, g2, _] = gate_sequence(0.0, &u_tau, &h, &h).unwrap();
        let expected = branch_gate(&ComplexMatrix::identity(3), &u_tau);
        assert!(g1.distance(&expected) < 1e-13);
        assert!(g2.distance(&expected) < 1e-13);
    }

    #[test]
    fn trivial_sequence_multiplies_to_identity() {
        let zero = SpectralHamiltonian::from_diagonal(&[0.0f64, 0.0]).unwrap();
        let seq = gate_sequence(2.0, &ComplexMatrix::identity(2), &zero, &zero).unwrap();
        assert!(compose(&seq).distance(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn commuting_gate_examples() {
        let h = oscillator_hamiltonian(0.5f64, 3).unwrap();
        let g = gate_commuting(1.1, &h, &h).unwrap();
        assert!(g.distance(&kron(&h.evolution(1.1), &ComplexMatrix::identity(2))) < 1e-14);
        assert!(gate_commuting(0.0, &h, &h)
            .unwrap()
            .distance(&ComplexMatrix::identity(8))
            < 1e-15);

        // diagonal-phase oracle
        let (l0, lt, u) = (0.7, 1.3, 2.4);
        let hi = oscillator_hamiltonian(l0, 3).unwrap();
        let hf = oscillator_hamiltonian(lt, 3).unwrap();
        let g = gate_commuting(u, &hi, &hf).unwrap();
        for n in 0..4 {
            let e = n as f64 + 0.5;
            assert!((g[(2 * n, 2 * n)] - cplx(0.0, -e * l0 * u).exp()).norm() < 1e-14);
            assert!((g[(2 * n + 1, 2 * n + 1)] - cplx(0.0, -e * lt * u).exp()).norm() < 1e-14);
        }
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(g[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn identity_gate_reads_unit_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density_matrix::<f64, _>(&mut rng, 3);
        let out = run_protocol_state(&ComplexMatrix::identity(6), &rho).unwrap();
        assert!((out.readout.sz - 1.0).abs() < 1e-14);
        assert!(out.readout.sy.abs() < 1e-14);
        assert!(out.sx.abs() < 1e-14);
    }

    #[test]
    fn equal_branches_read_unit_chi() {
        let h = oscillator_hamiltonian(1.0f64, 6).unwrap();
        let rho = thermal_state(&h, 0.4).unwrap();
        let r = run_protocol(&gate_commuting(3.3, &h, &h).unwrap(), &rho).unwrap();
        assert!((r.sz - 1.0).abs() < 1e-13 && r.sy.abs() < 1e-13);
    }

    #[test]
    fn protocol_matches_block_trace_formula() {
        // independent route: ρ_A before the last Hadamard has entries
        // ½ Σ_{b,d} Tr(G_ab ρ G_cd†)
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = qubit_constants::<f64>();
        for _ in 0..5 {
            let u_tau = random_unitary(&mut rng, 3);
            let h_i = spectral(random_hermitian(&mut rng, 3));
            let h_f = spectral(random_hermitian(&mut rng, 3));
            let g = gate_general(0.9, &u_tau, &h_i, &h_f).unwrap();
            let g = g.matmul(&on_ancilla(3, &random_unitary(&mut rng, 2)));
            let rho = random_density_matrix(&mut rng, 3);
            let mut pre = ComplexMatrix::<f64>::zeros(2);
            for a in 0..2 {
                for c in 0..2 {
                    let mut acc = cplx(0.0, 0.0);
                    for b in 0..2 {
                        for d in 0..2 {
                            let gab = ancilla_block(&g, a, b);
                            let gcd = ancilla_block(&g, c, d);
                            acc += gab.matmul(rho.matrix()).matmul(&gcd.adjoint()).trace();
                        }
                    }
                    pre[(a, c)] = acc * 0.5;
                }
            }
            let oracle = pre.conjugate_by(&q.hadamard);
            let out = run_protocol_state(&g, &rho).unwrap();
            assert!(out.ancilla.matrix().distance(&oracle) < 1e-13);
        }
    }

    #[test]
    fn generalized_gate_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h_i = spectral(random_hermitian(&mut rng, 3));
        let h_f = spectral(random_hermitian(&mut rng, 3));
        let u_tau = random_unitary(&mut rng, 3);
        let rho = thermal_state(&h_i, 0.8).unwrap();
        let g = gate_general(1.3, &u_tau, &h_i, &h_f).unwrap();
        let id2 = ComplexMatrix::identity(2);
        let id3 = ComplexMatrix::identity(3);
        assert!(verify_generalized_gate(&g, &id3, &id2, &rho).unwrap() < 1e-14);

        // K_S commuting with the thermal state, L_A fixing |+⟩ (global phase
        // times a rotation about x).
        let k_s = h_i.evolution(0.37);
        let q = qubit_constants::<f64>();
        let rot_x = crate::linalg::expm_hermitian(&q.pauli_x, cplx(0.0, 0.61)).unwrap();
        let l_a = rot_x.scale(cplx(0.0, 0.2).exp());
        assert!(verify_generalized_gate(&g, &k_s, &l_a, &rho).unwrap() < 1e-10);
        let equal_phases = ComplexMatrix::identity(2).scale(cplx(0.0, 1.1).exp());
        assert!(verify_generalized_gate(&g, &k_s, &equal_phases, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn branch_phases_rotate_the_readout() {
        // diag(e^{iφ₀}, e^{iφ₁}) applied before the gate multiplies χ by
        // e^{i(φ₀−φ₁)}: the readout is invariant only when φ₀ = φ₁.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h_i = spectral(random_hermitian(&mut rng, 3));
        let h_f = spectral(random_hermitian(&mut rng, 3));
        let u_tau = random_unitary(&mut rng, 3);
        let rho = thermal_state(&h_i, 0.8).unwrap();
        let g = gate_general(1.3, &u_tau, &h_i, &h_f).unwrap();
        let (p0, p1) = (0.4, -0.3);
        let l_a = ComplexMatrix::from_diagonal(&[cplx(0.0, p0).exp(), cplx(0.0, p1).exp()]);
        let plain = run_protocol(&g, &rho).unwrap().chi();
        let dressed = run_protocol(&g.matmul(&kron(&ComplexMatrix::identity(3), &l_a)), &rho)
            .unwrap()
            .chi();
        assert!((dressed - plain * cplx(0.0, p0 - p1).exp()).norm() < 1e-12);
        let dev = verify_generalized_gate(&g, &ComplexMatrix::identity(3), &l_a, &rho).unwrap();
        assert!(dev > 1e-3);
    }

    #[test]
    fn sweep_preserves_grid_order_and_normalization() {
        let h = oscillator_hamiltonian(1.0f64, 4).unwrap();
        let rho = thermal_state(&h, 1.0).unwrap();
        let hf = oscillator_hamiltonian(1.4f64, 4).unwrap();
        let grid = [0.0, 2.0, -1.0, 5.5];
        let s = sweep_char_fn(|u| gate_commuting(u, &h, &hf), &rho, &grid).unwrap();
        assert_eq!(s.iter().map(|x| x.u).collect::<Vec<_>>(), grid.to_vec());
        assert!((s[0].re - 1.0).abs() < 1e-14 && s[0].im.abs() < 1e-14);
        assert!(sweep_char_fn(|u| gate_commuting(u, &h, &hf), &rho, &[f64::NAN]).is_err());
    }

    #[test]
    fn sampled_readout_concentrates() {
        let exact = AncillaReadout { sz: 0.3f64, sy: -0.6 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let est = sample_readout(&exact, 200_000, &mut rng).unwrap();
        // 5σ with σ ≤ 1/√shots
        assert!((est.sz - 0.3).abs() < 5.0 / (200_000f64).sqrt());
        assert!((est.sy + 0.6).abs() < 5.0 / (200_000f64).sqrt());
        assert!(sample_readout(&exact, 0, &mut rng).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let rho = DensityMatrix::<f64>::maximally_mixed(3);
        assert!(matches!(
            run_protocol(&ComplexMatrix::identity(4), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
        let not_unitary = ComplexMatrix::identity(6).scale(cplx(2.0, 0.0));
        assert!(matches!(run_protocol(&not_unitary, &rho), Err(Error::NotUnitary { .. })));
        let h = oscillator_hamiltonian(1.0f64, 2).unwrap();
        let h4 = oscillator_hamiltonian(1.0f64, 3).unwrap();
        assert!(gate_general(1.0, &ComplexMatrix::identity(3), &h, &h4).is_err());
    }
}
