//! Krylov time evolution and exact-diagonalization observables.

pub mod correlator;
pub mod eth;
pub mod grid;
pub mod krylov;
pub mod lehmann;

pub use correlator::{
    autocorrelator_ed, infinite_temperature_autocorrelator, infinite_temperature_autocorrelator_with,
    projected_autocorrelator, Projector, TraceMode,
};
pub use eth::{eth_matrix_elements, g0_binned_average, EntropyEstimate, EthPoint, EthScatter, G0Bin};
pub use grid::{time_axis, CorrelatorGrid, GridMetadata, StateLabel};
pub use krylov::{evolve_times, expm_krylov, for_each_time, krylov_evolve, KrylovOptions, KrylovStats};
pub use lehmann::{lehmann_decomposition, LehmannTerm, SpectralDecomposition};
