//! Point recovery from echo graphs and the calibration of the gradient
//! constant.

use super::detect::SingularSupportCurve;
use super::ReconError;
use crate::geom::{is_tangential_ray, NestedPair, PhasePoint, Which};
use crate::math::two_means_1d;
use crate::sphere::DirGrid;
use nalgebra::Vector3;
use serde::Serialize;

/// Which decay class a recovered point was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EchoClass {
    S1,
    S2,
}

/// One recovered point.
#[derive(Debug, Clone, Serialize)]
pub struct CloudPoint {
    pub y: [f64; 3],
    pub omega_idx: usize,
    pub echo_idx: usize,
    pub class: EchoClass,
    pub confidence: f64,
    pub decay_slope: Option<f64>,
}

impl CloudPoint {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.y[0], self.y[1], self.y[2])
    }
}

/// A direction excluded from recovery, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct WedgeRecord {
    pub omega_idx: usize,
    pub reason: String,
}

/// Full recovery output.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub s1_cloud: Vec<CloudPoint>,
    pub s2_cloud: Vec<CloudPoint>,
    pub m1_est: Option<f64>,
    pub m2_relative_est: Option<f64>,
    pub excluded_wedges: Vec<WedgeRecord>,
    pub calibration_c: f64,
    /// Mean decay slope per class, when two classes separated.
    pub class_slopes: Option<(f64, f64)>,
}

/// Recovery knobs.
#[derive(Clone)]
pub struct RecoverParams<'a> {
    pub calibration_c: f64,
    /// Spatial clustering radius (outliers without a class-mate inside it
    /// are dropped); typically 3 grid cells.
    pub cluster_radius: f64,
    /// Points outside this box are discarded.
    pub search_half: f64,
    /// Validation mode: exclude ω tangential to the pair's submanifolds at
    /// the given tolerance (blind mode relies on NO_PEAKS / blur flags).
    pub wedge_pair: Option<(&'a NestedPair, f64)>,
    /// Minimum decay-class separation before splitting into S1/S2.
    pub class_split_min: f64,
    /// Reject echoes whose local graph fit has RMS residual above this
    /// (genuine singular-support graphs are locally affine; smeared
    /// non-stationary returns are not). In pulse widths ε.
    pub max_graph_residual_eps: f64,
}

impl Default for RecoverParams<'_> {
    fn default() -> Self {
        RecoverParams {
            calibration_c: 0.5,
            cluster_radius: 0.1,
            search_half: 1.0,
            wedge_pair: None,
            class_split_min: 0.25,
            max_graph_residual_eps: 1.0,
        }
    }
}

/// The chart-side recovery y = Ω/τ − (s/2) ω̂ for backscatter phase points
/// (exact on chart output; the data-side graph gradient needs c = 1/2
/// instead).
pub fn recover_from_phase_point(p: &PhasePoint) -> Vector3<f64> {
    p.cap_omega / p.tau - 0.5 * p.t * p.omega
}

/// Map detected echoes to points: y = −c ∇_ω s* − (s*/2) ω, clustered into
/// decay classes across the direction grid.
pub fn recover_points(
    curve: &SingularSupportCurve,
    grid: &DirGrid,
    params: &RecoverParams,
) -> Result<ReconstructionResult, ReconError> {
    if curve.peaks.len() != grid.len() {
        return Err(ReconError::InvalidInput { detail: "curve/grid size mismatch" });
    }
    let mut excluded: Vec<WedgeRecord> = Vec::new();
    let mut raw: Vec<CloudPoint> = Vec::new();

    for (oi, peaks) in curve.peaks.iter().enumerate() {
        let omega = grid.verts[oi];
        if let Some((pair, tol)) = params.wedge_pair {
            if direction_in_wedge(pair, omega, tol) {
                if !peaks.is_empty() {
                    excluded.push(WedgeRecord {
                        omega_idx: oi,
                        reason: "tangential wedge (forward geometry)".into(),
                    });
                }
                continue;
            }
        }
        if peaks.is_empty() {
            excluded.push(WedgeRecord { omega_idx: oi, reason: "NO_PEAKS".into() });
            continue;
        }
        for (ei, p) in peaks.iter().enumerate() {
            if p.blurred {
                continue;
            }
            let Some(g) = p.grad_s else {
                continue;
            };
            if p.graph_residual > params.max_graph_residual_eps * curve.pulse_epsilon {
                continue;
            }
            let y = -params.calibration_c * g - 0.5 * p.s * omega;
            if y.norm() > params.search_half * 3.0f64.sqrt() {
                continue;
            }
            let confidence =
                (p.amplitude / (curve.noise_floor.max(1e-300) * 3.0)).min(1.0).max(0.0);
            raw.push(CloudPoint {
                y: [y.x, y.y, y.z],
                omega_idx: oi,
                echo_idx: ei,
                class: EchoClass::S1,
                confidence,
                decay_slope: p.decay_slope,
            });
        }
    }

    // Decay-class split (S2 echoes carry the extra ⟨θ''⟩^{M2} decay, i.e.
    // a more negative slope), then spatial outlier rejection per class.
    let slopes: Vec<f64> = raw.iter().filter_map(|p| p.decay_slope).collect();
    let mut class_slopes = None;
    if slopes.len() >= 4 {
        let (lo, hi, _, sep) = two_means_1d(&slopes);
        if sep >= params.class_split_min {
            class_slopes = Some((hi, lo)); // (S1 slope, S2 slope)
            let mid = 0.5 * (lo + hi);
            for p in &mut raw {
                if let Some(sl) = p.decay_slope {
                    p.class = if sl <= mid { EchoClass::S2 } else { EchoClass::S1 };
                }
            }
        }
    }
    let kept = spatial_filter(raw, params.cluster_radius);

    let (s1, s2): (Vec<CloudPoint>, Vec<CloudPoint>) =
        kept.into_iter().partition(|p| p.class == EchoClass::S1);
    Ok(ReconstructionResult {
        s1_cloud: s1,
        s2_cloud: s2,
        m1_est: None,
        m2_relative_est: None,
        excluded_wedges: excluded,
        calibration_c: params.calibration_c,
        class_slopes,
    })
}

/// ω is in the tangential wedge of a submanifold when it is tangential at
/// every sampled surface point — no conormal covector anywhere on the
/// surface can pair with it (a curved surface has tangent points for every
/// direction, so a pointwise test would exclude everything).
fn direction_in_wedge(pair: &NestedPair, omega: Vector3<f64>, tol: f64) -> bool {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for which in [Which::S1, Which::S2] {
        if which == Which::S2 && pair.d2 == 0 {
            continue;
        }
        let samples = pair.sample_surface(which, 6, &mut rng);
        if !samples.is_empty()
            && samples
                .iter()
                .all(|&y| matches!(is_tangential_ray(pair, y, which, omega, tol), Ok(true)))
        {
            return true;
        }
    }
    false
}

/// Drop points with no same-class neighbour within the cluster radius
/// (small classes are kept whole).
fn spatial_filter(points: Vec<CloudPoint>, radius: f64) -> Vec<CloudPoint> {
    let keep: Vec<bool> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let same_class: Vec<&CloudPoint> =
                points.iter().filter(|q| q.class == p.class).collect();
            if same_class.len() < 5 {
                return true;
            }
            points.iter().enumerate().any(|(j, q)| {
                i != j
                    && q.class == p.class
                    && (p.position() - q.position()).norm() <= radius
            })
        })
        .collect();
    points.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect()
}

/// Pick the gradient constant from {1/2, 1} by the median distance of the
/// recovered cloud to a known truth surface. Errors when the two are within
/// 10% of each other.
pub fn calibrate_gradient_constant(
    curve: &SingularSupportCurve,
    grid: &DirGrid,
    distance_to_truth: &dyn Fn(Vector3<f64>) -> f64,
) -> Result<f64, ReconError> {
    let mut errs = [0.0f64; 2];
    for (k, c) in [0.5f64, 1.0].iter().enumerate() {
        let params = RecoverParams {
            calibration_c: *c,
            cluster_radius: f64::INFINITY,
            search_half: f64::INFINITY,
            ..Default::default()
        };
        let rec = recover_points(curve, grid, &params)?;
        let mut d: Vec<f64> = rec
            .s1_cloud
            .iter()
            .chain(rec.s2_cloud.iter())
            .map(|p| distance_to_truth(p.position()))
            .collect();
        if d.is_empty() {
            return Err(ReconError::InvalidInput { detail: "no recovered points to calibrate on" });
        }
        d.sort_by(|a, b| a.total_cmp(b));
        errs[k] = d[d.len() / 2];
    }
    let (e_half, e_one) = (errs[0], errs[1]);
    let scale = e_half.max(e_one).max(1e-300);
    if (e_half - e_one).abs() / scale < 0.1 {
        return Err(ReconError::CalibrationAmbiguous { err_half: e_half, err_one: e_one });
    }
    Ok(if e_half < e_one { 0.5 } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{chart_point, ChartKind, ChartParams, TANGENCY_TOL};
    use crate::reconstruct::detect::EchoPeak;
    use crate::sphere::sphere_pullback;
    use approx::assert_relative_eq;

    /// Analytic backscatter curve of a sphere centred at x0 with radius R:
    /// s*(ω) = −2(x0·ω + R), ∇s* = −2 i*_ω(x0).
    fn sphere_curve(grid: &DirGrid, x0: Vector3<f64>, radius: f64, eps: f64) -> SingularSupportCurve {
        let peaks = grid
            .verts
            .iter()
            .map(|&omega| {
                vec![EchoPeak {
                    s: -2.0 * (x0.dot(&omega) + radius),
                    amplitude: 1.0,
                    width: 2.0 * eps,
                    decay_slope: Some(-1.0),
                    blurred: false,
                    grad_s: Some(-2.0 * sphere_pullback(omega, x0)),
                    graph_residual: 0.0,
                }]
            })
            .collect();
        SingularSupportCurve { peaks, noise_floor: 0.01, pulse_epsilon: eps }
    }

    #[test]
    fn chart_round_trip_is_exact() {
        // recover_from_phase_point inverts the backscatter chart exactly,
        // including flat geometry where the data graph alone is degenerate.
        let pair = NestedPair::plane_line(0.3, 0.0, 1.0);
        for (y, nu) in [
            (Vector3::new(0.4, -0.2, 0.3), Vector3::new(0.0, 0.0, 1.7)),
            (Vector3::new(-0.1, 0.6, 0.3), Vector3::new(0.0, 0.0, -0.9)),
        ] {
            let p = chart_point(
                ChartKind::BackscatterA,
                &pair,
                &ChartParams { y, nu, ..Default::default() },
                TANGENCY_TOL,
            )
            .unwrap();
            let back = recover_from_phase_point(&p);
            assert!((back - y).norm() < 1e-12, "{back:?} vs {y:?}");
        }
    }

    #[test]
    fn analytic_sphere_curve_round_trips_with_half() {
        let grid = DirGrid::icosphere(2);
        let x0 = Vector3::new(0.3, 0.0, 0.0);
        let radius = 0.5;
        let curve = sphere_curve(&grid, x0, radius, 0.05);
        let params = RecoverParams {
            calibration_c: 0.5,
            search_half: 2.0,
            cluster_radius: 0.2,
            ..Default::default()
        };
        let rec = recover_points(&curve, &grid, &params).unwrap();
        assert_eq!(rec.s1_cloud.len(), grid.len());
        for p in &rec.s1_cloud {
            let expect = x0 + radius * grid.verts[p.omega_idx];
            assert!((p.position() - expect).norm() < 1e-8, "{:?}", p.y);
            assert!(p.confidence > 0.0 && p.confidence <= 1.0);
        }
        // the non-selected constant lands max|i*_ω(x0)| = 0.3 ≥ radius/2 off
        let params1 = RecoverParams { calibration_c: 1.0, ..params };
        let rec1 = recover_points(&curve, &grid, &params1).unwrap();
        let worst = rec1
            .s1_cloud
            .iter()
            .map(|p| {
                let expect = x0 + radius * grid.verts[p.omega_idx];
                (p.position() - expect).norm()
            })
            .fold(0.0f64, f64::max);
        assert!(worst >= radius / 2.0, "worst {worst}");
    }

    #[test]
    fn calibration_selects_half_on_offset_sphere() {
        let grid = DirGrid::icosphere(2);
        let x0 = Vector3::new(0.3, 0.0, 0.0);
        let radius = 0.5;
        let curve = sphere_curve(&grid, x0, radius, 0.05);
        let dist = move |p: Vector3<f64>| ((p - x0).norm() - radius).abs();
        let c = calibrate_gradient_constant(&curve, &grid, &dist).unwrap();
        assert_relative_eq!(c, 0.5);
    }

    #[test]
    fn centered_sphere_calibration_is_ambiguous() {
        // ∇s* ≡ 0: both constants give identical clouds.
        let grid = DirGrid::icosphere(1);
        let curve = sphere_curve(&grid, Vector3::zeros(), 0.5, 0.05);
        let dist = |p: Vector3<f64>| (p.norm() - 0.5).abs();
        let err = calibrate_gradient_constant(&curve, &grid, &dist).unwrap_err();
        assert!(matches!(err, ReconError::CalibrationAmbiguous { .. }));
    }

    #[test]
    fn tangential_wedge_contributes_no_points() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let grid = DirGrid::icosphere(2);
        // Echoes everywhere; wedge exclusion must strip directions nearly
        // tangent to the line's fiber plane (|proj| ≤ 0.1 near ±e1).
        let curve = sphere_curve(&grid, Vector3::zeros(), 0.5, 0.05);
        let params = RecoverParams {
            wedge_pair: Some((&pair, 0.1)),
            search_half: 2.0,
            cluster_radius: 0.2,
            ..Default::default()
        };
        let rec = recover_points(&curve, &grid, &params).unwrap();
        for p in rec.s1_cloud.iter().chain(rec.s2_cloud.iter()) {
            let omega = grid.verts[p.omega_idx];
            let fiber_proj = (omega.y * omega.y + omega.z * omega.z).sqrt();
            assert!(fiber_proj > 0.1, "wedge direction slipped through");
        }
        assert!(!rec.excluded_wedges.is_empty());
    }
}
