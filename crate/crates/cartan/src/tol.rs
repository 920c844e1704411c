//! Central tolerance constants.
//!
//! All thresholds trace back to f64 precision and the order of the
//! numerical method that produces the quantity being checked.

/// Group constraint residual allowed at element construction.
pub const CONSTRUCTION: f64 = 1e-8;

/// Distance of an algebra matrix to the basis span, relative to 1 + its norm.
pub const ALGEBRA_PROJECTION: f64 = 1e-10;

/// Exact double-precision identities (composition chains, projections).
pub const EXACT: f64 = 1e-12;

/// Central finite-difference step used by derivative checks.
pub const FD_STEP: f64 = 1e-6;

/// Tolerance for O(h^2) central differences at `FD_STEP`.
pub const FD_CHECK: f64 = 1e-5;

/// Relative finite-difference step for form components (scaled by half-width).
pub const FORM_FD_STEP: f64 = 1e-5;

/// Projection residual budget for finite-difference pullbacks.
pub const PULLBACK_PROJECTION: f64 = 1e-6;

/// Constraint residual allowed for exp() output at moderate argument norm.
pub const EXP_CONSTRAINT: f64 = 1e-10;

/// Flatness certificate default.
pub const FLATNESS: f64 = 1e-4;
