//! Radial Cauchy problem `w_tt = w_rr + ((D-3)/r) w_r + ((D-2)/r^2) w (1 - w^2)`
//! for D = 4, 5.
//!
//! The evolved variable is `u = (s w - 1)/r^2` with `s = w(t, 0) = +-1`,
//! which satisfies the regular equation
//! `u_tt = u_rr + ((D+1)/r) u_r - 3(D-2) u^2 - (D-2) r^2 u^3`.
//! Space is discretized with second-order stencils on a composite grid of
//! nested levels that is refined around the centre whenever the feature
//! width `|u(t, 0)|^{-1/2}` shrinks below a set number of cells; time
//! stepping is classical RK4 at a fixed fraction of the smallest spacing.

pub mod diagnostics;
pub mod field;
pub mod grid;
pub mod scheme;

pub use diagnostics::{
    central_energy_density, classify_outcome, cone_energies, diagnose, energy_density, energy_prefactor,
    estimate_blowup_time, estimate_blowup_time_with, extract_scale_lambda, k_functional, k_functional_of, rescaled_profile_residual,
    total_energy, BlowupDiagnostics, BlowupFit, Outcome, ProfileResidual, RateModel, Reference,
};
pub use field::{init_gaussian, GaussianData, PulseMode, RadialField, RefinementRecord};
pub use grid::{CompositeGrid, Level};
pub use scheme::{advance, advance_with, refine, Control, EvolveConfig, Evolution, Sample, Termination};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("dimension {0} is not supported (use 4 or 5)")]
    Dimension(u32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid spacing {h} does not resolve the data width {width}")]
    Unresolved { h: f64, width: f64 },
    #[error("non-finite field at t = {t}")]
    NonFinite { t: f64 },
    #[error("refinement depth {depth} exhausted at t = {t}")]
    DepthExhausted { t: f64, depth: usize },
    #[error("no blowup-time fit: {0}")]
    NoFit(String),
}
