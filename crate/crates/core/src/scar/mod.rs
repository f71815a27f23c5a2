//! The scar tower `|N⟩ ∝ (J†)^N |⇓⟩`, coherent states `|ζ⟩` and the checks
//! of the dynamical symmetry `([H, J†] − ωJ†)|ψ⟩ = 0` on the scarred subspace.

pub mod coherent;
pub mod tower;

pub use coherent::{
    build_coherent, coherent_overlaps, ln_binomial, revival_check, revival_fidelities, CoherentState,
};
pub use tower::{
    build_tower, ladder_apply, scar_matrix_element, verify_rsga, verify_rsga_at, verify_rsga_with_seed, LadderImage,
    OperatorSpec, RsgaReport, ScarState, ScarTower, RSGA_CONTRAST_SEED,
};
