//! Characteristic function of quantum work, reconstructed from a Ramsey-like
//! ancilla interferometer and cross-checked against the two-point-measurement
//! definition, closed forms for a sudden frequency quench of a harmonic
//! oscillator, a dispersive qubit–resonator realization and an open-system
//! (Kraus-operator) generalization.
//!
//! Every numerical type is generic over a [`Real`] scalar (`f32` or `f64`).
//! The double-precision aliases at the crate root are what most callers want.
//!
//! Conventions: ħ = 1; tensor products are ordered (system ⊗ environment ⊗
//! ancilla) with the ancilla last; the ancilla basis is {|0⟩, |1⟩} with
//! σ_z|0⟩ = |0⟩.

// `!(x < tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersive;
pub mod error;
pub mod interferometer;
pub mod linalg;
pub mod open;
pub mod quench;
pub mod random;
pub mod real;
pub mod states;
pub mod tpm;
pub mod verify;

pub use error::{Error, Result};
pub use real::{Real, C};

/// Library-wide numerical configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    /// Bound on the thermal population discarded by Fock-space truncation.
    pub eps_tail: f64,
    /// Largest oscillator cutoff `truncation_dim` may return.
    pub nmax_cap: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            eps_tail: 1e-12,
            nmax_cap: 4096,
        }
    }
}

pub type Complex64 = C<f64>;
pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
pub type ComplexMatrix32 = linalg::ComplexMatrix<f32>;
pub type DensityMatrix64 = linalg::DensityMatrix<f64>;
pub type DensityMatrix32 = linalg::DensityMatrix<f32>;
pub type Eigensystem64 = linalg::Eigensystem<f64>;
pub type SpectralHamiltonian64 = states::SpectralHamiltonian<f64>;
pub type SpectralHamiltonian32 = states::SpectralHamiltonian<f32>;
pub type WorkDistribution64 = tpm::WorkDistribution<f64>;
pub type JointProbabilityTable64 = tpm::JointProbabilityTable<f64>;
pub type QuenchParams64 = quench::QuenchParams<f64>;
pub type CharSample64 = interferometer::CharSample<f64>;
pub type AncillaReadout64 = interferometer::AncillaReadout<f64>;
pub type OpenSetup64 = open::OpenSetup<f64>;
pub type KrausSet64 = open::KrausSet<f64>;
