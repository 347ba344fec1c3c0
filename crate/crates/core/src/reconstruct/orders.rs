//! Order estimation from echo decay slopes and relative symbol-magnitude
//! recovery.

use super::detect::SingularSupportCurve;
use super::ReconError;
use crate::math::two_means_1d;
use serde::Serialize;

/// Aggregated order estimates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderReport {
    /// Mean decay slope of the S1-class echoes.
    pub s1_slope: f64,
    /// Mean decay slope of the S2-class echoes (None with a single class).
    pub s2_slope: Option<f64>,
    /// M2 estimate: slope difference between the classes.
    pub m2_relative: Option<f64>,
    /// Absolute M1 from the calibration offset, when one was supplied.
    pub m1_est: Option<f64>,
}

/// Estimate orders from the per-echo spectral slopes on the curve.
///
/// With `expect_two_classes`, the slopes are split by 1-d 2-means and the
/// class gap becomes the relative M2 (the S2 class is the more negative
/// one); insufficient separation errors with CLASS_OVERLAP. The absolute M1
/// comes from `slope_to_m1_offset`, the additive constant measured on the
/// shipped calibration runs (M1 = slope − offset).
pub fn estimate_orders(
    curve: &SingularSupportCurve,
    expect_two_classes: bool,
    class_split_min: f64,
    slope_to_m1_offset: Option<f64>,
) -> Result<OrderReport, ReconError> {
    let slopes: Vec<f64> = curve
        .peaks
        .iter()
        .flatten()
        .filter(|p| !p.blurred)
        .filter_map(|p| p.decay_slope)
        .collect();
    if slopes.len() < 3 {
        return Err(ReconError::BandTooNarrow { lo: 0.0, hi: 0.0 });
    }
    if expect_two_classes {
        let (lo, hi, assign, sep) = two_means_1d(&slopes);
        if sep < class_split_min {
            return Err(ReconError::ClassOverlap { separation: sep });
        }
        let n_lo = assign.iter().filter(|&&a| a == 0).count();
        if n_lo < 2 || slopes.len() - n_lo < 2 {
            return Err(ReconError::ClassOverlap { separation: sep });
        }
        Ok(OrderReport {
            s1_slope: hi,
            s2_slope: Some(lo),
            m2_relative: Some(lo - hi),
            m1_est: slope_to_m1_offset.map(|off| hi - off),
        })
    } else {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        Ok(OrderReport {
            s1_slope: mean,
            s2_slope: None,
            m2_relative: None,
            m1_est: slope_to_m1_offset.map(|off| mean - off),
        })
    }
}

/// One relative symbol-magnitude sample.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolSample {
    pub omega_idx: usize,
    /// Retarded time of the matched echo pair.
    pub s: f64,
    /// target amplitude / reference amplitude.
    pub ratio: f64,
}

/// Divide matched-filter amplitudes of a target run by those of a reference
/// run with known constant symbol on the same geometry. Echoes are matched
/// per ω within one pulse support; failure to match most of the reference
/// echoes is REFERENCE_MISMATCH.
pub fn recover_symbol_magnitude(
    target: &SingularSupportCurve,
    reference: &SingularSupportCurve,
) -> Result<Vec<SymbolSample>, ReconError> {
    if target.peaks.len() != reference.peaks.len() {
        return Err(ReconError::InvalidInput { detail: "curves on different grids" });
    }
    let tol = 3.0 * reference.pulse_epsilon;
    let mut out = Vec::new();
    let mut ref_count = 0usize;
    for (oi, (tp, rp)) in target.peaks.iter().zip(&reference.peaks).enumerate() {
        for r in rp {
            ref_count += 1;
            let best = tp
                .iter()
                .map(|t| (t, (t.s - r.s).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((t, gap)) = best {
                if gap <= tol && r.amplitude > 0.0 {
                    out.push(SymbolSample { omega_idx: oi, s: r.s, ratio: t.amplitude / r.amplitude });
                }
            }
        }
    }
    if ref_count == 0 {
        return Err(ReconError::InvalidInput { detail: "reference curve has no echoes" });
    }
    let matched_fraction = out.len() as f64 / ref_count as f64;
    if matched_fraction < 0.5 {
        return Err(ReconError::ReferenceMismatch { matched_fraction });
    }
    Ok(out)
}
