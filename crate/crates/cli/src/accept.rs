//! The validation suite: one function per acceptance criterion, shared by
//! the `validate` subcommand and the `acceptance` integration test target.
//! Every tolerance is pinned here, in code.

use crate::config::ExperimentConfig;
use crate::runner::{
    self, compare_oracle, detect_from, kernel_config_from, pulse_from, random_intersection,
};
use crate::scenario::{build_pair, build_potential};
use anyhow::{anyhow, Result};
use conoscatter::geom::{
    chart_point, clean_intersection_at, ChartKind, ChartParams, NestedPair, RANK_TOL,
    TANGENCY_TOL,
};
use conoscatter::potential::PotentialField;
use conoscatter::reconstruct::{
    calibrate_gradient_constant, estimate_orders, recover_points, recover_symbol_magnitude,
    CloudPoint, EchoPeak, RecoverParams, SingularSupportCurve,
};
use conoscatter::scatter::{
    columns_for_slice, restrict, scattering_kernel, DataSliceSpec, PairSelection, RestrictedData,
    ScatterError, ScatteringKernel,
};
use conoscatter::sphere::{sphere_pullback, DirGrid};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    fn finish(name: &'static str, start: Instant, pass: bool, detail: String) -> Self {
        CriterionResult { name, pass, detail, seconds: start.elapsed().as_secs_f64() }
    }
}

/// Run every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion1_geometry(),
        criterion2_multiphase(),
        criterion3_forward_oracle(),
        criterion4_sphere_echo(),
        criterion5_chart_roundtrip(),
        criterion6_inverse_roundtrip(),
        criterion7_order_discrimination(),
        criterion8_symbol_linearity(),
        criterion9_graph_slice(),
    ]
}

fn toml_config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).expect("criterion config must parse")
}

/// Criterion 1: clean-intersection certification for the model plane/line
/// pair at ≥ 100 random intersection points: concatenated-Jacobian rank
/// ≥ 2n + d2 = 7 and codimension 1.
pub fn criterion1_geometry() -> CriterionResult {
    let start = Instant::now();
    let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut passed = 0usize;
    let mut failed = 0usize;
    let mut min_rank = usize::MAX;
    while passed + failed < 100 {
        let Some(shared) = random_intersection(&pair, &mut rng) else { continue };
        match clean_intersection_at(
            ChartKind::FlowoutA,
            ChartKind::FlowoutC,
            &pair,
            &shared,
            1e-5,
            RANK_TOL,
        ) {
            Ok(cert) => {
                min_rank = min_rank.min(cert.rank_sum);
                if cert.clean && cert.rank_sum >= 7 && cert.codim_a == 1 && cert.codim_b == 1 {
                    passed += 1;
                } else {
                    failed += 1;
                }
            }
            Err(_) => failed += 1,
        }
    }
    let pass = failed == 0;
    CriterionResult::finish(
        "1 geometry certification",
        start,
        pass,
        format!("{passed}/100 clean (rank ≥ 7, codim 1); min rank {min_rank}"),
    )
}

/// Criterion 2: multiphase ODE vs closed form ≤ 1e-8 relative and
/// Hamilton–Jacobi residual ≤ 1e-6 over a 10×10×10 parameter grid.
pub fn criterion2_multiphase() -> CriterionResult {
    let start = Instant::now();
    let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
    match runner::multiphase_grid_maxima(&pair, 10) {
        Ok((gap, residual)) => {
            let pass = gap <= 1e-8 && residual <= 1e-6;
            CriterionResult::finish(
                "2 multiphase",
                start,
                pass,
                format!("route gap {gap:.2e} (≤ 1e-8), HJ residual {residual:.2e} (≤ 1e-6)"),
            )
        }
        Err(e) => CriterionResult::finish("2 multiphase", start, false, e.to_string()),
    }
}

/// Criterion 3: born_u1 vs the dense oracle, relative error ≤ 1e-3 at 20
/// random (receiver, t) probes on a 64³ potential grid.
pub fn criterion3_forward_oracle() -> CriterionResult {
    let start = Instant::now();
    let config = toml_config(
        r#"
[scenario]
name = "bump"
seed = 303
bump_width = 0.3
[potential]
support_radius = 0.5
mollify_scale = 0.04
[pulse]
epsilon = 0.08
[grids]
potential_n = 64
"#,
    );
    match compare_oracle(&config, 20, false) {
        Ok(report) => CriterionResult::finish(
            "3 forward oracle",
            start,
            report.born_max_rel <= 1e-3,
            format!("max relative error {:.2e} (≤ 1e-3) at 20 probes", report.born_max_rel),
        ),
        Err(e) => CriterionResult::finish("3 forward oracle", start, false, e.to_string()),
    }
}

fn sphere_config(omega_level: u32, n: usize) -> ExperimentConfig {
    toml_config(&format!(
        r#"
[scenario]
name = "sphere"
seed = 404
sphere_radius = 0.5
[potential]
profile = "delta-layer"
support_radius = 0.8
mollify_scale = 0.052
[pulse]
epsilon = 0.1
[grids]
potential_n = {n}
omega_level = {omega_level}
theta_level = {omega_level}
"#
    ))
}

/// Forward-simulate a backscatter run in memory: synth grid, kernel on the
/// antipodal columns, restriction, detection.
pub fn backscatter_run(
    config: &ExperimentConfig,
) -> Result<(RestrictedData, SingularSupportCurve)> {
    let mut field = build_potential(config).map_err(|e| anyhow!("{e}"))?;
    field.fill_grid(config.grids.potential_n).map_err(|e| anyhow!("{e}"))?;
    let kernel = backscatter_kernel(config, &field)?;
    let gauss = None;
    let data = restrict(&kernel, &DataSliceSpec::backscatter(), gauss, 0.1)
        .map_err(|e| anyhow!("{e}"))?;
    let curve = detect_from(config, &data)?;
    Ok((data, curve))
}

fn backscatter_kernel(
    config: &ExperimentConfig,
    field: &PotentialField,
) -> Result<ScatteringKernel> {
    let pulse = pulse_from(config);
    let kc = kernel_config_from(config);
    let grid = DirGrid::icosphere(config.grids.omega_level);
    scattering_kernel(field, &pulse, &grid, &grid, &PairSelection::Backscatter, &kc)
        .map_err(|e| anyhow!("{e}"))
}

/// Criterion 4: sphere scatterer echo at s* = −1.0 within one s-grid cell
/// for every direction, and two-route kernel agreement ≤ 2e-2.
pub fn criterion4_sphere_echo() -> CriterionResult {
    let start = Instant::now();
    let config = sphere_config(2, 64);
    let run = || -> Result<(usize, usize, f64, f64)> {
        let (data, curve) = backscatter_run(&config)?;
        let ds = data.s_grid.ds;
        let mut hit = 0usize;
        let mut missed = 0usize;
        for peaks in &curve.peaks {
            if peaks.iter().any(|p: &EchoPeak| (p.s + 1.0).abs() <= ds) {
                hit += 1;
            } else {
                missed += 1;
            }
        }
        // two-route agreement on the same potential
        let report = compare_oracle(&config, 5, true)?;
        Ok((hit, missed, report.route_max_rel.unwrap_or(f64::NAN), ds))
    };
    match run() {
        Ok((hit, missed, route_rel, ds)) => {
            let pass = missed == 0 && route_rel <= 2e-2;
            CriterionResult::finish(
                "4 echo location",
                start,
                pass,
                format!(
                    "peak at −1.0 ± {ds:.3} for {hit}/{} directions; route agreement {route_rel:.2e} (≤ 2e-2)",
                    hit + missed
                ),
            )
        }
        Err(e) => CriterionResult::finish("4 echo location", start, false, e.to_string()),
    }
}

/// Criterion 5: geometry-level inverse round trip — recover_points on the
/// analytic backscatter chart output reproduces y to 1e-8 with the
/// calibrated constant.
pub fn criterion5_chart_roundtrip() -> CriterionResult {
    let start = Instant::now();
    let x0 = Vector3::new(0.3, 0.0, 0.0);
    let radius = 0.5;
    let pair = NestedPair::sphere(x0, radius, 1.0);
    let grid = DirGrid::icosphere(2);
    // analytic curve from the chart: s*(ω) = −2 y(ω)·ω, ∇s* = −2 i*_ω(x0)
    let peaks: Vec<Vec<EchoPeak>> = grid
        .verts
        .iter()
        .map(|&omega| {
            let y = x0 + radius * omega;
            let p = chart_point(
                ChartKind::BackscatterA,
                &pair,
                &ChartParams { y, nu: omega, ..Default::default() },
                TANGENCY_TOL,
            )
            .expect("chart point");
            vec![EchoPeak {
                s: p.t,
                amplitude: 1.0,
                width: 0.1,
                decay_slope: Some(-1.0),
                blurred: false,
                grad_s: Some(-2.0 * sphere_pullback(omega, x0)),
                graph_residual: 0.0,
            }]
        })
        .collect();
    let curve = SingularSupportCurve { peaks, noise_floor: 0.01, pulse_epsilon: 0.05 };
    let dist = move |p: Vector3<f64>| ((p - x0).norm() - radius).abs();
    let run = || -> Result<(f64, f64)> {
        let c = calibrate_gradient_constant(&curve, &grid, &dist).map_err(|e| anyhow!("{e}"))?;
        let params = RecoverParams {
            calibration_c: c,
            cluster_radius: f64::INFINITY,
            search_half: 2.0,
            ..Default::default()
        };
        let rec = recover_points(&curve, &grid, &params).map_err(|e| anyhow!("{e}"))?;
        let worst = rec
            .s1_cloud
            .iter()
            .map(|p| {
                let expect = x0 + radius * grid.verts[p.omega_idx];
                (p.position() - expect).norm()
            })
            .fold(0.0f64, f64::max);
        Ok((c, worst))
    };
    match run() {
        Ok((c, worst)) => CriterionResult::finish(
            "5 inverse round trip (geometry)",
            start,
            c == 0.5 && worst <= 1e-8,
            format!("calibrated c = {c}, max |y_rec − y| = {worst:.2e} (≤ 1e-8)"),
        ),
        Err(e) => {
            CriterionResult::finish("5 inverse round trip (geometry)", start, false, e.to_string())
        }
    }
}

/// One-sided sup distance from a cloud to a truth surface.
fn cloud_to_truth(cloud: &[CloudPoint], dist: impl Fn(Vector3<f64>) -> f64) -> f64 {
    cloud.iter().map(|p| dist(p.position())).fold(0.0f64, f64::max)
}

/// Criterion 6: simulation-level round trips — sphere recovered within 2
/// grid cells (symmetric Hausdorff) and the nested plane/line recovered
/// within 2 cells each, with tangential wedges contributing nothing.
pub fn criterion6_inverse_roundtrip() -> CriterionResult {
    let start = Instant::now();
    match (sphere_roundtrip(), nested_roundtrip_with(&nested_config(64, 3, -1.0, 1.0))) {
        (Ok((sphere_h, cell_s)), Ok(nested)) => {
            let pass = sphere_h <= 2.0 * cell_s && nested.pass;
            CriterionResult::finish(
                "6 inverse round trip (simulation)",
                start,
                pass,
                format!(
                    "sphere Hausdorff {:.4} (≤ {:.4}); {}",
                    sphere_h,
                    2.0 * cell_s,
                    nested.detail
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => CriterionResult::finish(
            "6 inverse round trip (simulation)",
            start,
            false,
            e.to_string(),
        ),
    }
}

pub fn sphere_roundtrip_with(config: &ExperimentConfig) -> Result<(f64, f64)> {
    let config = config.clone();
    let config = &config;
    let (data, curve) = backscatter_run(&config)?;
    let pair = build_pair(&config).map_err(|e| anyhow!("{e}"))?;
    let params = RecoverParams {
        calibration_c: 0.5,
        cluster_radius: 3.0 * config.grid_cell(),
        search_half: 1.2,
        wedge_pair: Some((pair.as_ref(), 0.1)),
        class_split_min: 0.25,
        max_graph_residual_eps: 1.0,
    };
    let rec = recover_points(&curve, &data.omega_grid, &params).map_err(|e| anyhow!("{e}"))?;
    let all: Vec<CloudPoint> =
        rec.s1_cloud.iter().chain(rec.s2_cloud.iter()).cloned().collect();
    if all.is_empty() {
        anyhow::bail!("sphere: empty cloud");
    }
    // symmetric Hausdorff against |x| = 0.5
    let to_truth = cloud_to_truth(&all, |p| (p.norm() - 0.5).abs());
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut coverage = 0.0f64;
    for _ in 0..2000 {
        let q = 0.5 * conoscatter::sphere::random_unit(&mut rng);
        let d = all
            .iter()
            .map(|p| (p.position() - q).norm())
            .fold(f64::INFINITY, f64::min);
        coverage = coverage.max(d);
    }
    Ok((to_truth.max(coverage), config.grid_cell()))
}

pub struct NestedOutcome {
    pub pass: bool,
    pub detail: String,
}

fn sphere_roundtrip() -> Result<(f64, f64)> {
    sphere_roundtrip_with(&sphere_config(3, 64))
}

pub fn nested_config(n: usize, level: u32, m2: f64, amplitude: f64) -> ExperimentConfig {
    toml_config(&format!(
        r#"
[scenario]
name = "plane-line"
seed = 505
plane_offset = 0.3
line_offset = 0.0
[potential]
profile = "fourier"
m1 = -1.5
m2 = {m2}
support_radius = 0.7
mollify_scale = 0.05
amplitude = {amplitude}
[pulse]
epsilon = 0.1
[grids]
potential_n = {n}
omega_level = {level}
theta_level = {level}
[reconstruct]
expect_two_classes = true
relative_floor = 0.01
"#
    ))
}

pub fn nested_roundtrip_with(config: &ExperimentConfig) -> Result<NestedOutcome> {
    let cell = config.grid_cell();
    let (data, curve) = backscatter_run(&config)?;
    let pair = build_pair(&config).map_err(|e| anyhow!("{e}"))?;
    let params = RecoverParams {
        calibration_c: 0.5,
        cluster_radius: 3.0 * cell,
        search_half: 1.2,
        wedge_pair: Some((pair.as_ref(), 0.1)),
        class_split_min: 0.25,
        max_graph_residual_eps: 1.0,
    };
    let rec = recover_points(&curve, &data.omega_grid, &params).map_err(|e| anyhow!("{e}"))?;
    let plane_dist = |p: Vector3<f64>| (p.z - 0.3).abs();
    let line_dist = |p: Vector3<f64>| ((p.y).powi(2) + (p.z - 0.3).powi(2)).sqrt();

    if rec.s1_cloud.is_empty() || rec.s2_cloud.is_empty() {
        return Ok(NestedOutcome {
            pass: false,
            detail: format!(
                "nested: cloud sizes S1 {} / S2 {}",
                rec.s1_cloud.len(),
                rec.s2_cloud.len()
            ),
        });
    }
    let s1_err = cloud_to_truth(&rec.s1_cloud, plane_dist);
    let s2_err = cloud_to_truth(&rec.s2_cloud, line_dist);

    // tangential wedges (|ν̂·ω| ≤ 0.1 for the line fibers) contribute zero
    let mut wedge_leak = 0usize;
    for p in rec.s1_cloud.iter().chain(rec.s2_cloud.iter()) {
        let omega = data.omega_grid.verts[p.omega_idx];
        let fiber_proj = (omega.y * omega.y + omega.z * omega.z).sqrt();
        if fiber_proj <= 0.1 {
            wedge_leak += 1;
        }
    }
    let pass = s1_err <= 2.0 * cell && s2_err <= 2.0 * cell && wedge_leak == 0;
    Ok(NestedOutcome {
        pass,
        detail: format!(
            "nested: S1 patch err {:.4} / S2 line err {:.4} (≤ {:.4}), wedge leaks {}, {} + {} points",
            s1_err,
            s2_err,
            2.0 * cell,
            wedge_leak,
            rec.s1_cloud.len(),
            rec.s2_cloud.len()
        ),
    })
}

fn plane_layer_config(profile: &str) -> ExperimentConfig {
    toml_config(&format!(
        r#"
[scenario]
name = "plane"
seed = 707
plane_offset = 0.3
[potential]
profile = "{profile}"
support_radius = 0.7
mollify_scale = 0.05
[pulse]
epsilon = 0.1
[grids]
potential_n = 64
omega_level = 2
theta_level = 2
"#
    ))
}

/// Mean decay slope over all detected echoes of a run.
fn mean_slope(curve: &SingularSupportCurve) -> Option<f64> {
    let slopes: Vec<f64> = curve
        .peaks
        .iter()
        .flatten()
        .filter(|p| !p.blurred)
        .filter_map(|p| p.decay_slope)
        .collect();
    if slopes.is_empty() {
        None
    } else {
        Some(slopes.iter().sum::<f64>() / slopes.len() as f64)
    }
}

/// Criterion 7: delta vs Heaviside plane layers differ by one order
/// (slope difference 1.0 ± 0.2); nested runs with ΔM2 = 0.5 shift the
/// S2-echo slope by 0.5 ± 0.2.
pub fn criterion7_order_discrimination() -> CriterionResult {
    let start = Instant::now();
    let run = || -> Result<(f64, f64)> {
        let delta = backscatter_run(&plane_layer_config("delta-layer"))?;
        let heavi = backscatter_run(&plane_layer_config("heaviside"))?;
        let s_delta = mean_slope(&delta.1).ok_or_else(|| anyhow!("no delta-layer echoes"))?;
        let s_heavi = mean_slope(&heavi.1).ok_or_else(|| anyhow!("no heaviside echoes"))?;
        let layer_diff = s_delta - s_heavi;

        let nested_a = backscatter_run(&nested_config(64, 2, -1.0, 1.0))?;
        let nested_b = backscatter_run(&nested_config(64, 2, -0.5, 1.0))?;
        let oa = estimate_orders(&nested_a.1, true, 0.25, None).map_err(|e| anyhow!("{e}"))?;
        let ob = estimate_orders(&nested_b.1, true, 0.25, None).map_err(|e| anyhow!("{e}"))?;
        let s2_diff = ob.s2_slope.unwrap() - oa.s2_slope.unwrap();
        Ok((layer_diff, s2_diff))
    };
    match run() {
        Ok((layer_diff, s2_diff)) => {
            let pass = (layer_diff - 1.0).abs() <= 0.2 && (s2_diff - 0.5).abs() <= 0.2;
            CriterionResult::finish(
                "7 order discrimination",
                start,
                pass,
                format!(
                    "delta−heaviside slope diff {layer_diff:.3} (1.0 ± 0.2); ΔM2 = 0.5 S2-echo diff {s2_diff:.3} (0.5 ± 0.2)"
                ),
            )
        }
        Err(e) => {
            CriterionResult::finish("7 order discrimination", start, false, e.to_string())
        }
    }
}

/// Criterion 8: scaling q by 3 scales recovered symbol ratios by 3 ± 5% and
/// leaves order estimates unchanged within ±0.05.
pub fn criterion8_symbol_linearity() -> CriterionResult {
    let start = Instant::now();
    let run = || -> Result<(f64, f64, f64)> {
        let base = backscatter_run(&nested_config(64, 2, -1.0, 1.0))?;
        let scaled = backscatter_run(&nested_config(64, 2, -1.0, 3.0))?;
        let samples =
            recover_symbol_magnitude(&scaled.1, &base.1).map_err(|e| anyhow!("{e}"))?;
        if samples.is_empty() {
            anyhow::bail!("no matched echoes");
        }
        let mean = samples.iter().map(|s| s.ratio).sum::<f64>() / samples.len() as f64;
        let worst =
            samples.iter().map(|s| (s.ratio - 3.0).abs()).fold(0.0f64, f64::max);
        let oa = estimate_orders(&base.1, true, 0.25, None).map_err(|e| anyhow!("{e}"))?;
        let ob = estimate_orders(&scaled.1, true, 0.25, None).map_err(|e| anyhow!("{e}"))?;
        let order_shift = (oa.s1_slope - ob.s1_slope)
            .abs()
            .max((oa.s2_slope.unwrap() - ob.s2_slope.unwrap()).abs());
        Ok((mean, worst, order_shift))
    };
    match run() {
        Ok((mean, worst, order_shift)) => {
            let pass = worst <= 0.15 && order_shift <= 0.05;
            CriterionResult::finish(
                "8 symbol linearity",
                start,
                pass,
                format!(
                    "ratios mean {mean:.3}, worst |ratio − 3| = {worst:.3} (≤ 0.15 = 5%); order shift {order_shift:.2e} (≤ 0.05)"
                ),
            )
        }
        Err(e) => CriterionResult::finish("8 symbol linearity", start, false, e.to_string()),
    }
}

/// Criterion 9: a 10°-rotated backscatter graph passes the slice validation
/// and reconstructs the sphere within 3 grid cells; φ ≡ ω is rejected with
/// the condition-1 error.
pub fn criterion9_graph_slice() -> CriterionResult {
    let start = Instant::now();
    let run = || -> Result<(f64, f64, bool)> {
        let config = sphere_config(2, 64);
        let mut field = build_potential(&config).map_err(|e| anyhow!("{e}"))?;
        field.fill_grid(config.grids.potential_n).map_err(|e| anyhow!("{e}"))?;
        let pulse = pulse_from(&config);
        let kc = kernel_config_from(&config);
        let theta_grid = DirGrid::icosphere(config.grids.theta_level);
        let omega_grid = DirGrid::icosphere(config.grids.omega_level);
        let slice =
            DataSliceSpec::rotated_backscatter(Vector3::x(), 10.0f64.to_radians());
        let columns = columns_for_slice(&slice, &kc.s_grid, &theta_grid, &omega_grid);
        let kernel = scattering_kernel(
            &field,
            &pulse,
            &theta_grid,
            &omega_grid,
            &PairSelection::Explicit(columns),
            &kc,
        )
        .map_err(|e| anyhow!("{e}"))?;

        // validation needs the Gauss directions of the sphere
        let pair = build_pair(&config).map_err(|e| anyhow!("{e}"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let gauss: Vec<Vector3<f64>> = pair
            .sample_surface(conoscatter::geom::Which::S1, 24, &mut rng)
            .iter()
            .filter_map(|&y| pair.conormal_fiber(y, conoscatter::geom::Which::S1).ok())
            .flat_map(|f| f.into_iter().flat_map(|b| [b, -b]))
            .collect();
        let data =
            restrict(&kernel, &slice, Some(&gauss), 0.1).map_err(|e| anyhow!("{e}"))?;
        let curve = detect_from(&config, &data)?;
        let params = RecoverParams {
            calibration_c: 0.5,
            cluster_radius: 3.0 * config.grid_cell(),
            search_half: 1.2,
            wedge_pair: None,
            class_split_min: 0.25,
            max_graph_residual_eps: 1.0,
        };
        let rec = recover_points(&curve, &data.omega_grid, &params).map_err(|e| anyhow!("{e}"))?;
        let all: Vec<CloudPoint> =
            rec.s1_cloud.iter().chain(rec.s2_cloud.iter()).cloned().collect();
        if all.is_empty() {
            anyhow::bail!("rotated slice: empty cloud");
        }
        let to_truth = cloud_to_truth(&all, |p| (p.norm() - 0.5).abs());
        let mut coverage = 0.0f64;
        for _ in 0..1000 {
            let q = 0.5 * conoscatter::sphere::random_unit(&mut rng);
            let d =
                all.iter().map(|p| (p.position() - q).norm()).fold(f64::INFINITY, f64::min);
            coverage = coverage.max(d);
        }

        // identity slice must be rejected with condition 1
        let identity = DataSliceSpec::graph(std::sync::Arc::new(|_s, omega| omega));
        let rejected = matches!(
            restrict(&kernel, &identity, None, 0.1),
            Err(ScatterError::SliceInvalid { condition: 1, .. })
        );
        Ok((to_truth.max(coverage), config.grid_cell(), rejected))
    };
    match run() {
        Ok((hausdorff, cell, rejected)) => {
            let pass = hausdorff <= 3.0 * cell && rejected;
            CriterionResult::finish(
                "9 general data sets",
                start,
                pass,
                format!(
                    "rotated-slice Hausdorff {hausdorff:.4} (≤ {:.4}); identity slice rejected: {rejected}",
                    3.0 * cell
                ),
            )
        }
        Err(e) => CriterionResult::finish("9 general data sets", start, false, e.to_string()),
    }
}
