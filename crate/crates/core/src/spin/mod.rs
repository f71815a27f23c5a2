//! Spin-1 operator algebra, magnetization sectors, sparse Hamiltonians and
//! dense spectra for small chains.

pub mod basis;
pub mod hamiltonian;
pub mod operator;
pub mod params;
pub mod spectrum;

pub use basis::{build_basis, Sector, SectorBasis};
pub use hamiltonian::{build_hamiltonian, full_space_hamiltonian};
pub use operator::{
    apply, apply_local, expectation, image_basis, inner, local_operator, LocalKind, SparseOperator,
    StateVector,
};
pub use params::{Boundary, ModelParams};
pub use spectrum::{full_spectrum, full_spectrum_capped, Spectrum};
