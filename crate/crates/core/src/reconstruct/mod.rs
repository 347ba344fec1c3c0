//! The inverse problem: detect the singular support of the restricted
//! kernel, map echo graphs back to points of S1 and S2, and estimate the
//! conormal orders.
//!
//! The recovery map reads the echo graph s*(ω) and its spherical gradient:
//!
//! ```text
//!   y(ω) = −c ∇_ω s*(ω) − (s*(ω)/2) ω,
//! ```
//!
//! with c calibrated on a known test object (the data-side graph gradient
//! carries twice the chart's cotangent component, so c = 1/2 is the
//! expected winner; the chart-side formula y = Ω/τ − (s/2) ω is kept
//! separately for phase-space round trips).

mod detect;
mod orders;
mod recover;

pub use detect::{detect_singular_support, matched_envelope, DetectParams, EchoPeak, SingularSupportCurve};
pub use orders::{estimate_orders, recover_symbol_magnitude, OrderReport, SymbolSample};
pub use recover::{
    calibrate_gradient_constant, recover_from_phase_point, recover_points, CloudPoint,
    EchoClass, RecoverParams, ReconstructionResult, WedgeRecord,
};

use std::fmt;

/// Errors from detection, recovery, and order estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum ReconError {
    /// The restricted data does not resolve the pulse (Δs > ε/2).
    DetectorUnderresolved { ds: f64, epsilon: f64 },
    /// Gradient unavailable at the queried ω (wedge boundary).
    GradientUndefined { omega_idx: usize },
    /// Both calibration constants explain the data equally well.
    CalibrationAmbiguous { err_half: f64, err_one: f64 },
    BandTooNarrow { lo: f64, hi: f64 },
    /// Decay-exponent clusters are not separable.
    ClassOverlap { separation: f64 },
    ReferenceMismatch { matched_fraction: f64 },
    InvalidInput { detail: &'static str },
}

impl fmt::Display for ReconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconError::DetectorUnderresolved { ds, epsilon } => {
                write!(f, "data under-resolved: ds = {ds} > epsilon/2 = {}", epsilon / 2.0)
            }
            ReconError::GradientUndefined { omega_idx } => {
                write!(f, "GRADIENT_UNDEFINED at omega index {omega_idx}")
            }
            ReconError::CalibrationAmbiguous { err_half, err_one } => write!(
                f,
                "CALIBRATION_AMBIGUOUS: c = 1/2 error {err_half:.3e} vs c = 1 error {err_one:.3e}"
            ),
            ReconError::BandTooNarrow { lo, hi } => write!(f, "BAND_TOO_NARROW: [{lo}, {hi}]"),
            ReconError::ClassOverlap { separation } => {
                write!(f, "CLASS_OVERLAP: decay-class separation {separation:.3}")
            }
            ReconError::ReferenceMismatch { matched_fraction } => {
                write!(f, "REFERENCE_MISMATCH: only {matched_fraction:.2} of echoes matched")
            }
            ReconError::InvalidInput { detail } => write!(f, "invalid input: {detail}"),
        }
    }
}

impl std::error::Error for ReconError {}
