//! Nine-point Lax-Wendroff scheme with a stabilizing term for two-dimensional
//! linear transport, with ghost-cell boundary rules and numerical checks of
//! its discrete energy estimates.

pub mod energy;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod scheme;
pub mod spectral;
pub mod stencil;

pub use energy::{
    inner_product, norm_sq, pairwise_sum, traces, verify, verify_half_space,
    verify_quarter_space, verify_whole_space, Check, EnergyReport, ProofDiagnostics, Traces,
    Verification,
};
pub use error::{Error, Result};
pub use geometry::{
    fill_ghosts, make_field, BoundarySpec, CornerRule, Field, Geometry, GeometryKind,
    MixedCorner, Side, SideRule,
};
pub use scheme::{compute_v, compute_w, interior_update, lw_step, lw_step_into, Params};
pub use spectral::{amplification_factor, max_amplification, Frequency};
pub use stencil::{apply, apply_stencil, check_operator_algebra, compose, Op, StencilKind};
pub use harness::{
    convergence_study, corner_scan, run_experiment, simulate, ExperimentConfig, InitialCondition,
    NormTrace, RunOutcome,
};
