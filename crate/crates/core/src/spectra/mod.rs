//! Oscillator-basis Hamiltonians, diagonalization and spectrum tables for Eckart models.

pub mod basis;
pub mod jacobi;
pub mod model;
pub mod reports;
pub mod table;

pub use basis::{OscillatorBasis, Renderer};
pub use jacobi::{diagonalize, eigenvalues, Eigen};
pub use model::{
    assemble_full_hamiltonian, build_h0, build_h0_full, build_h1, effective_levels, expand_hamiltonian, AngOp,
    HamiltonianExpansion, HamiltonianForm, HamiltonianModel,
};
pub use reports::{spectrum3, spectrum4, Spectrum3Report};
pub use table::{closed_form_spectrum_n3, degenerate_perturbation, SpectrumRow, SpectrumTable};
