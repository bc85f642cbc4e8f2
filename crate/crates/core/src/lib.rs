//! Synthesis of globally optimal control pulses for two-level (spin-1/2)
//! systems that stay robust against offset detuning and control-amplitude
//! miscalibration.
//!
//! The toolkit integrates the adjoint-derived flow systems whose solutions
//! are the candidate optimal fields, propagates the matching perturbative
//! cascades of the Bloch equation, and searches the resulting
//! low-dimensional shooting landscapes for the global optimum of the energy
//! or duration cost.
//!
//! The main entry points are:
//!
//! * [`bloch`] — Bloch-vector and cascade propagation, fidelity and
//!   robustness metrics,
//! * [`flows`] — the shooting flow systems and their conserved-quantity
//!   audits,
//! * [`analytic`] — closed-form first-order solutions (elliptic and
//!   bang-bang),
//! * [`search`] — shooting objective, landscape scans, local refinement and
//!   global-optimum selection,
//! * [`grape`] — a phase-only gradient-ascent baseline for broadband
//!   inversion,
//! * [`io`] — CSV/JSON artifact formats shared with the command-line tool.

pub mod analytic;
pub mod bloch;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod flows;
pub mod grape;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod search;
pub mod validate;

pub use bloch::{
    inversion_fidelity, propagate_bloch, propagate_cascade, robust_fidelity, robustness_profile,
    BlochVector, CascadeMode, DynamicsConfig, ErrorAxis, PerturbativeStack, RobustnessProfile,
    TransferTarget,
};
pub use error::{Error, Result};
pub use field::{ControlField, FieldKind};
pub use flows::{CostKind, FirstIntegralAudit, FlowVariant, SearchSpace, ShootingPoint};
pub use linalg::{Mat3, Vec3};
pub use search::{
    find_global, grid_scan, objective, refine, AxisSpec, LandscapeScan, ObjectiveResult,
    SearchConfig, SynthesisRecord,
};
