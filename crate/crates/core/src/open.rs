//! System S coupled to an auxiliary system E during the protocol.
//!
//! Operators on S ⊗ E use index s·d_E + e; the three-party gate acts on
//! S ⊗ E ⊗ A with the ancilla last. The reduced dynamics of S is the channel
//! ρ ↦ Σ K ρ K† with K_{jl} = √p_l ⟨j|U_SE|l⟩ for ρ_E = Σ_l p_l |l⟩⟨l|.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::interferometer::{branch_gate, run_protocol_state, AncillaReadout};
use crate::linalg::{eig_hermitian, kron, partial_trace, ComplexMatrix, DensityMatrix};
use crate::real::{cplx, cre, Real, C};
use crate::states::SpectralHamiltonian;
use crate::tpm::{degeneracy_tol, JointProbabilityTable};

/// Setup for the open protocol.
///
/// During the protocol the total Hamiltonian is H_S(t) ⊗ I_E + H_SE with
/// H_S(t) piecewise constant over `segments`. [`OpenSetup::sudden`] uses the
/// single segment (τ, H_f).
#[derive(Clone, Debug)]
pub struct OpenSetup<T: Real> {
    pub h_i: SpectralHamiltonian<T>,
    pub h_f: SpectralHamiltonian<T>,
    /// Interaction plus bare environment Hamiltonian on S ⊗ E.
    pub h_se: ComplexMatrix<T>,
    pub rho_s: DensityMatrix<T>,
    pub rho_e: DensityMatrix<T>,
    /// (duration, H_S) pieces in time order.
    pub segments: Vec<(T, ComplexMatrix<T>)>,
    /// Accept ρ_S with coherences in the H_i eigenbasis. χ_S then no longer
    /// equals the two-point-measurement Fourier sum.
    pub allow_coherences: bool,
}

impl<T: Real> OpenSetup<T> {
    /// Sudden quench at t = 0, then evolution under H_f ⊗ I + H_SE for τ.
    pub fn sudden(
        h_i: SpectralHamiltonian<T>,
        h_f: SpectralHamiltonian<T>,
        h_se: ComplexMatrix<T>,
        rho_s: DensityMatrix<T>,
        rho_e: DensityMatrix<T>,
        tau: T,
    ) -> Result<Self> {
        let segments = vec![(tau, h_f.matrix().clone())];
        let setup = Self {
            h_i,
            h_f,
            h_se,
            rho_s,
            rho_e,
            segments,
            allow_coherences: false,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn dim_s(&self) -> usize {
        self.h_i.dim()
    }

    pub fn dim_e(&self) -> usize {
        self.rho_e.dim()
    }

    pub fn tau(&self) -> T {
        self.segments.iter().map(|s| s.0).sum()
    }

    /// Dimensions, Hermiticity and (unless bypassed) diagonality of ρ_S.
    pub fn validate(&self) -> Result<()> {
        let ds = self.dim_s();
        let dse = ds * self.dim_e();
        for found in [self.h_f.dim(), self.rho_s.dim()] {
            if found != ds {
                return Err(Error::DimensionMismatch { expected: ds, found });
            }
        }
        if self.h_se.dim() != dse {
            return Err(Error::DimensionMismatch {
                expected: dse,
                found: self.h_se.dim(),
            });
        }
        let tol = crate::linalg::hermitian_tolerance::<T>(dse);
        let dev = self.h_se.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian {
                deviation: dev.as_f64(),
            });
        }
        for (dur, h) in &self.segments {
            if h.dim() != ds {
                return Err(Error::DimensionMismatch {
                    expected: ds,
                    found: h.dim(),
                });
            }
            if !(*dur >= T::zero()) || !dur.is_finite() {
                return Err(Error::InvalidParameter("segment durations must be ≥ 0".into()));
            }
        }
        self.check_diagonal()
    }

    fn check_diagonal(&self) -> Result<()> {
        if self.allow_coherences {
            return Ok(());
        }
        let off = self.rho_s.max_offdiagonal_in(&self.h_i.eigensystem().vectors);
        if off > T::tol(1e-12) {
            return Err(Error::DiagonalityViolation {
                max_offdiag: off.as_f64(),
            });
        }
        Ok(())
    }

    /// H ⊗ I_E on S ⊗ E.
    fn lift(&self, m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        kron(m, &ComplexMatrix::identity(self.dim_e()))
    }
}

/// Kraus operators on S labelled by (output j, input l) environment indices.
#[derive(Clone, Debug)]
pub struct KrausSet<T: Real> {
    pub operators: Vec<ComplexMatrix<T>>,
    pub labels: Vec<(usize, usize)>,
}

impl<T: Real> KrausSet<T> {
    /// ‖Σ K†K − I‖_F
    pub fn completeness_deviation(&self) -> T {
        let d = self.operators.first().map_or(0, |k| k.dim());
        let mut acc = ComplexMatrix::zeros(d);
        for k in &self.operators {
            acc = &acc + &k.adjoint().matmul(k);
        }
        acc.distance(&ComplexMatrix::identity(d))
    }

    /// Σ K X K†
    pub fn apply(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mut acc = ComplexMatrix::zeros(x.dim());
        for k in &self.operators {
            acc = &acc + &k.matmul(x).matmul_adjoint(k);
        }
        acc
    }
}

/// Time-ordered propagator of H_S(t) ⊗ I_E + H_SE, each segment cut into
/// `steps` equal slices.
pub fn u_se<T: Real>(setup: &OpenSetup<T>, steps: usize) -> Result<ComplexMatrix<T>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be ≥ 1".into()));
    }
    let dse = setup.dim_s() * setup.dim_e();
    let mut u = ComplexMatrix::identity(dse);
    for (dur, h) in &setup.segments {
        if *dur == T::zero() {
            continue;
        }
        let total = &setup.lift(h) + &setup.h_se;
        let dt = *dur / T::from_usize_lossy(steps);
        let slice = SpectralHamiltonian::new(total)?.evolution(dt);
        for _ in 0..steps {
            u = slice.matmul(&u);
        }
    }
    Ok(u)
}

/// ⟨j|U|l⟩_E as an operator on S, in the given environment basis (columns).
fn env_element<T: Real>(
    u: &ComplexMatrix<T>,
    basis: &ComplexMatrix<T>,
    ds: usize,
    j: usize,
    l: usize,
) -> ComplexMatrix<T> {
    let de = basis.dim();
    ComplexMatrix::from_fn(ds, |s, t| {
        let mut acc = C::<T>::zero();
        for e in 0..de {
            let bj = basis[(e, j)].conj();
            if bj.is_zero() {
                continue;
            }
            for f in 0..de {
                acc += bj * u[(s * de + e, t * de + f)] * basis[(f, l)];
            }
        }
        acc
    })
}

/// K_{jl} = √p_l ⟨j|U_SE|l⟩ over the eigenbasis {|l⟩} of ρ_E, skipping p_l = 0.
pub fn kraus_from_use<T: Real>(u: &ComplexMatrix<T>, rho_e: &DensityMatrix<T>) -> Result<KrausSet<T>> {
    let de = rho_e.dim();
    if !u.dim().is_multiple_of(de) {
        return Err(Error::DimensionMismatch {
            expected: de * (u.dim() / de).max(1),
            found: u.dim(),
        });
    }
    let ds = u.dim() / de;
    let eig = eig_hermitian(rho_e.matrix())?;
    let mut operators = Vec::new();
    let mut labels = Vec::new();
    for l in 0..de {
        let p = eig.values[l];
        if !(p > T::zero()) {
            continue;
        }
        let w = p.sqrt();
        for j in 0..de {
            operators.push(env_element(u, &eig.vectors, ds, j, l).scale(cre(w)));
            labels.push((j, l));
        }
    }
    Ok(KrausSet { operators, labels })
}

/// Σ_l √p_l ⟨j|U_SE|l⟩ with one operator per output index j. The set is
/// complete, but the channel it generates is that of the pure environment
/// state Σ_l √p_l |l⟩ rather than ρ_E, so it differs from
/// [`kraus_from_use`] whenever ρ_E is mixed and U_SE couples its eigenstates.
pub fn kraus_summed_over_input<T: Real>(
    u: &ComplexMatrix<T>,
    rho_e: &DensityMatrix<T>,
) -> Result<KrausSet<T>> {
    let pairs = kraus_from_use(u, rho_e)?;
    let de = rho_e.dim();
    let ds = u.dim() / de;
    let mut operators = vec![ComplexMatrix::zeros(ds); de];
    for (k, &(j, _)) in pairs.operators.iter().zip(&pairs.labels) {
        operators[j] = &operators[j] + k;
    }
    Ok(KrausSet {
        operators,
        labels: (0..de).map(|j| (j, usize::MAX)).collect(),
    })
}

fn default_steps<T: Real>(setup: &OpenSetup<T>) -> usize {
    if setup.segments.len() <= 1 {
        1
    } else {
        64
    }
}

/// χ_S(u) = Tr_S[e^{iuH_f} Σ K ρ_S e^{−iuH_i} K†].
pub fn char_fn_open_direct<T: Real>(setup: &OpenSetup<T>, u: T) -> Result<C<T>> {
    setup.check_diagonal()?;
    let kraus = kraus_from_use(&u_se(setup, default_steps(setup))?, &setup.rho_e)?;
    char_fn_open_kraus(setup, &kraus, u)
}

/// Kraus-form χ_S(u) for a precomputed channel.
pub fn char_fn_open_kraus<T: Real>(setup: &OpenSetup<T>, kraus: &KrausSet<T>, u: T) -> Result<C<T>> {
    let back = setup.h_i.exp(cplx(T::zero(), -u));
    let fwd = setup.h_f.exp(cplx(T::zero(), u));
    let mapped = kraus.apply(&setup.rho_s.matrix().matmul(&back));
    Ok(fwd.trace_product(&mapped))
}

/// Tr_SE[(e^{iuH_f} ⊗ I) U (ρ_S ⊗ ρ_E)(e^{−iuH_i} ⊗ I) U†].
pub fn char_fn_open_trace<T: Real>(setup: &OpenSetup<T>, u_se: &ComplexMatrix<T>, u: T) -> C<T> {
    let back = setup.lift(&setup.h_i.exp(cplx(T::zero(), -u)));
    let fwd = setup.lift(&setup.h_f.exp(cplx(T::zero(), u)));
    let joint = kron(setup.rho_s.matrix(), setup.rho_e.matrix());
    let inner = u_se.matmul(&joint.matmul(&back)).matmul_adjoint(u_se);
    fwd.trace_product(&inner)
}

/// p_S(n,M) = Tr_SE[Q_M U (P_n ρ_S P_n ⊗ ρ_E) U† Q_M] over eigenspaces of H_i, H_f.
pub fn joint_prob_open<T: Real>(setup: &OpenSetup<T>) -> Result<JointProbabilityTable<T>> {
    setup.check_diagonal()?;
    let kraus = kraus_from_use(&u_se(setup, default_steps(setup))?, &setup.rho_e)?;
    joint_prob_open_kraus(setup, &kraus)
}

pub fn joint_prob_open_kraus<T: Real>(
    setup: &OpenSetup<T>,
    kraus: &KrausSet<T>,
) -> Result<JointProbabilityTable<T>> {
    let ei = setup.h_i.eigensystem();
    let ef = setup.h_f.eigensystem();
    let groups_i = ei.eigenspaces(degeneracy_tol(&setup.h_i));
    let groups_f = ef.eigenspaces(degeneracy_tol(&setup.h_f));
    let q: Vec<ComplexMatrix<T>> = groups_f.iter().map(|g| ef.projector(g)).collect();
    let mut p = Vec::with_capacity(groups_i.len());
    let mut initial = Vec::with_capacity(groups_i.len());
    for g in &groups_i {
        let pn = ei.projector(g);
        let x = pn.matmul(setup.rho_s.matrix()).matmul(&pn);
        initial.push(x.trace().re);
        let out = kraus.apply(&x);
        p.push(q.iter().map(|qm| qm.trace_product(&out).re).collect());
    }
    let mean = |vals: &[T], groups: &[Vec<usize>]| -> Vec<T> {
        groups
            .iter()
            .map(|g| g.iter().map(|&k| vals[k]).sum::<T>() / T::from_usize_lossy(g.len()))
            .collect()
    };
    Ok(JointProbabilityTable {
        p,
        spectra_i: mean(&ei.values, &groups_i),
        spectra_f: mean(&ef.values, &groups_f),
        initial_populations: initial,
    })
}

/// U_SE (e^{−iuH_i} ⊗ I_E) ⊗ |0⟩⟨0| + (e^{−iuH_f} ⊗ I_E) U_SE ⊗ |1⟩⟨1|
pub fn gate_se<T: Real>(setup: &OpenSetup<T>, u_se: &ComplexMatrix<T>, u: T) -> Result<ComplexMatrix<T>> {
    let dse = setup.dim_s() * setup.dim_e();
    if u_se.dim() != dse {
        return Err(Error::DimensionMismatch {
            expected: dse,
            found: u_se.dim(),
        });
    }
    let e_i = setup.lift(&setup.h_i.evolution(u));
    let e_f = setup.lift(&setup.h_f.evolution(u));
    Ok(branch_gate(&u_se.matmul(&e_i), &e_f.matmul(u_se)))
}

/// Hadamard → G^SE → Hadamard on ρ_S ⊗ ρ_E ⊗ |0⟩⟨0|; returns (Re χ_S, Im χ_S).
pub fn run_protocol_open<T: Real>(setup: &OpenSetup<T>, u: T) -> Result<AncillaReadout<T>> {
    let use_ = u_se(setup, default_steps(setup))?;
    run_protocol_open_with(setup, &use_, u)
}

pub fn run_protocol_open_with<T: Real>(
    setup: &OpenSetup<T>,
    u_se: &ComplexMatrix<T>,
    u: T,
) -> Result<AncillaReadout<T>> {
    let gate = gate_se(setup, u_se, u)?;
    let rest = setup.rho_s.tensor(&setup.rho_e);
    Ok(run_protocol_state(&gate, &rest)?.readout)
}

/// Reduced state of S after the protocol, Tr_E[U (ρ_S ⊗ ρ_E) U†].
pub fn reduced_final_state<T: Real>(setup: &OpenSetup<T>, u_se: &ComplexMatrix<T>) -> Result<DensityMatrix<T>> {
    let joint = kron(setup.rho_s.matrix(), setup.rho_e.matrix()).conjugate_by(u_se);
    DensityMatrix::new(partial_trace(&joint, &[setup.dim_s(), setup.dim_e()], 0)?)
}
