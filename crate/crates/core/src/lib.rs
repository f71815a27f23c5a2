//! Numerical toolkit for a spin-1 chain hosting an exact tower of quantum
//! many-body scars.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin`]: spin-1 algebra, magnetization-sector bases, sparse Hamiltonians
//!   and dense spectra for small chains.
//! - [`scar`]: the scar tower `|N⟩ ∝ (J†)^N |⇓⟩`, coherent states and the
//!   dynamical-symmetry checks.
//! - [`dynamics`]: Krylov time evolution and every exact-diagonalization
//!   observable (connected autocorrelators, projected correlators,
//!   infinite-temperature correlators, Lehmann sums, ETH scatter).
//! - [`mps`]: matrix-product states and operators with TDVP time evolution
//!   for chains beyond exact diagonalization.
//! - [`transport`]: demodulation, sum rule, `η(t)`, scaling collapse and
//!   light-cone fronts on correlator grids.
//! - [`saddle`]: closed-form large-`L` predictions and their finite-size
//!   comparisons.

pub mod dynamics;
pub mod error;
pub mod mps;
pub mod output;
pub mod saddle;
pub mod scar;
pub mod spin;
pub mod transport;

pub use error::{ScarError, ScarResult};
pub use num_complex::Complex64 as C64;

/// Dense diagonalization is refused above this sector dimension by default.
pub const DEFAULT_DENSE_CAP: usize = 20_000;
