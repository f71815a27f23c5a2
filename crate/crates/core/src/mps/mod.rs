//! Matrix-product states, the Hamiltonian MPO and TDVP time evolution.

pub mod correlator;
pub mod mpo;
pub mod schedule;
pub mod state;
pub mod taylor;
pub mod tdvp;
pub mod tensor;

pub use correlator::{autocorrelator_mps, autocorrelator_mps_run, h0_annihilation_residual, MpsCorrelatorRun, MpsMode};
pub use mpo::{build_mpo, build_mpo_h0, MpoOperator, MpoSite};
pub use schedule::{evolve_schedule, trajectory_ndjson, Evolver, Method, Phase, Schedule, Trajectory, TrajectoryRecord};
pub use state::{apply_squared_raising, op_matrix, product_mps, sandwich, site_profile, MpsState, OpMatrix};
pub use taylor::{add, apply_mpo, compress, taylor_step};
pub use tdvp::{tdvp1_step, tdvp2_step, LOCAL_KRYLOV};
pub use tensor::{SiteTensor, PHYS};
