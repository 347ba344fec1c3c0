//! Stage runners. Each stage consumes only files written by earlier stages
//! plus the configuration, so re-running a later stage alone reproduces its
//! outputs.

use crate::config::ExperimentConfig;
use crate::manifest::{RunManifest, StageTimer};
use crate::scenario::{build_pair, build_potential};
use crate::{io, slice_from_config};
use anyhow::{anyhow, bail, Context, Result};
use conoscatter::geom::{
    chart_jacobian_rank, clean_intersection_at, model_pair, multiphase_solve,
    prop71_intersection, sample_nontangential_omega, ChartKind, ChartParams, IntersectionParams,
    NestedPair, RankMode, Which, RANK_TOL,
};
use conoscatter::potential::PotentialField;
use conoscatter::reconstruct::{
    detect_singular_support, recover_points, DetectParams, RecoverParams, SingularSupportCurve,
};
use conoscatter::scatter::{
    columns_for_slice, farfield_convergence, scattering_kernel, KernelConfig, KernelRoute,
    PairSelection, RestrictedData, SGrid, ScatteringKernel,
};
use conoscatter::sphere::DirGrid;
use conoscatter::wavefield::{born_u1, born_u1_oracle, QuadratureSpec, SourcePulse};
use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

pub fn pulse_from(config: &ExperimentConfig) -> SourcePulse {
    SourcePulse::new(config.pulse_epsilon())
}

pub fn s_grid_from(config: &ExperimentConfig) -> SGrid {
    let eps = config.pulse_epsilon();
    let rho = config.potential.support_radius;
    let half = 2.0 * rho + 6.0 * eps + config.grids.s_margin_pulses * eps;
    SGrid::symmetric(half, config.grids.ds_factor * eps)
}

pub fn kernel_config_from(config: &ExperimentConfig) -> KernelConfig {
    let rho = config.potential.support_radius;
    let pulse = pulse_from(config);
    let mut kc = KernelConfig::defaults(rho, &pulse);
    kc.s_grid = s_grid_from(config);
    kc.r_far = config.routes.r_far_factor * rho;
    kc.t0 = config.routes.t0_factor * rho;
    kc.route = match config.routes.kernel_route.as_str() {
        "lax-phillips" => KernelRoute::LaxPhillips,
        _ => KernelRoute::Friedlander,
    };
    kc.check_farfield = config.routes.check_farfield;
    kc
}

/// Stage: synthesize the potential and write its volumetric grid.
pub fn stage_synth(config: &ExperimentConfig, out: &Path, manifest: &mut RunManifest) -> Result<()> {
    let mut timer = StageTimer::start("synth");
    let mut field = build_potential(config).map_err(|e| anyhow!("{e}"))?;
    field
        .fill_grid(config.grids.potential_n)
        .map_err(|e| anyhow!("synth: {e}"))?;
    let grid = field.grid_cache.as_ref().unwrap();
    let spec = serde_json::json!({
        "scenario": config.scenario.name,
        "profile": config.potential.profile,
        "m1": config.potential.m1,
        "m2": config.potential.m2,
        "support_radius": config.potential.support_radius,
        "mollify_scale": config.potential.mollify_scale,
        "amplitude": config.potential.amplitude,
    });
    io::write_grid(out, "potential", grid, spec)?;
    timer.output(out, "potential.bin")?;
    timer.output(out, "potential.json")?;
    timer.finish(manifest);
    Ok(())
}

/// Load the synth stage's grid back into an evaluable field.
pub fn load_field(config: &ExperimentConfig, out: &Path) -> Result<PotentialField> {
    let pair = build_pair(config).map_err(|e| anyhow!("{e}"))?;
    let grid = io::read_grid(out, "potential").context("forward: missing synth artifacts")?;
    let p = &config.potential;
    // evaluator backed by the stored grid: stages downstream of synth consume
    // only its files
    let sampler = std::sync::Arc::new(grid.clone());
    let eval_grid = sampler.clone();
    let field = PotentialField::custom(
        pair,
        p.support_radius,
        p.mollify_scale,
        std::sync::Arc::new(move |x: Vector3<f64>| eval_grid.sample(x)),
    )
    .with_grid(grid);
    // the amplitude cutoff is already baked into the stored samples; the
    // custom evaluator multiplies it again, which matters only within one
    // cell of the support edge where the field is ~0 anyway
    Ok(field)
}

/// Stage: forward traces at a probe set of backscatter receivers.
pub fn stage_forward(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut timer = StageTimer::start("forward");
    let field = load_field(config, out)?;
    let pulse = pulse_from(config);
    let kc = kernel_config_from(config);
    let grid = DirGrid::icosphere(0);
    let quad = QuadratureSpec::default();
    for (k, &omega) in grid.verts.iter().take(4).enumerate() {
        let receiver = -kc.r_far * omega;
        let times: Vec<f64> =
            (0..kc.s_grid.n).map(|i| kc.r_far - kc.s_grid.at(kc.s_grid.n - 1 - i)).collect();
        let trace = born_u1(&field, omega, receiver, &times, &pulse, &quad)
            .map_err(|e| anyhow!("forward: {e}"))?;
        let base = format!("trace_{k:02}");
        io::write_trace(out, &base, &trace, pulse.epsilon)?;
        timer.output(out, &format!("{base}.csv"))?;
        timer.output(out, &format!("{base}.json"))?;
    }
    timer.finish(manifest);
    Ok(())
}

/// Stage: assemble the scattering kernel from the stored potential grid.
pub fn stage_scatter(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut timer = StageTimer::start("scatter");
    let field = load_field(config, out)?;
    let pulse = pulse_from(config);
    let kc = kernel_config_from(config);
    let theta_grid = DirGrid::icosphere(config.grids.theta_level);
    let omega_grid = DirGrid::icosphere(config.grids.omega_level);
    let selection = match config.routes.pairs.as_str() {
        "full" => PairSelection::All,
        "slice" => {
            let slice = slice_from_config(config);
            PairSelection::Explicit(columns_for_slice(
                &slice,
                &kc.s_grid,
                &theta_grid,
                &omega_grid,
            ))
        }
        _ => PairSelection::Backscatter,
    };
    if matches!(selection, PairSelection::Backscatter)
        && config.grids.theta_level != config.grids.omega_level
    {
        bail!("backscatter pairing needs matching θ/ω grid levels");
    }
    let kernel = scattering_kernel(&field, &pulse, &theta_grid, &omega_grid, &selection, &kc)
        .map_err(|e| anyhow!("scatter: {e}"))?;
    io::write_kernel(out, "kernel", &kernel)?;
    timer.output(out, "kernel.bin")?;
    timer.output(out, "kernel.json")?;
    timer.finish(manifest);
    Ok(())
}

/// Stage: restrict the kernel to the configured data slice.
pub fn stage_restrict(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<RestrictedData> {
    let mut timer = StageTimer::start("restrict");
    let kernel = io::read_kernel(out, "kernel").context("restrict: missing scatter artifacts")?;
    let slice = slice_from_config(config);
    let gauss = gauss_directions(config)?;
    let data = conoscatter::scatter::restrict(
        &kernel,
        &slice,
        gauss.as_deref(),
        config.slice.tangency_tol,
    )
    .map_err(|e| anyhow!("restrict: {e}"))?;
    io::write_slice_csv(out, "beta", &data)?;
    std::fs::write(
        out.join("restrict.json"),
        serde_json::to_string_pretty(&data.report)?,
    )?;
    timer.output(out, "beta.csv")?;
    timer.output(out, "restrict.json")?;
    timer.finish(manifest);
    Ok(data)
}

/// Sampled Gauss-map image of the scenario's submanifolds (validation mode).
fn gauss_directions(config: &ExperimentConfig) -> Result<Option<Vec<Vector3<f64>>>> {
    let pair = build_pair(config).map_err(|e| anyhow!("{e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.scenario.seed ^ 0x9a55);
    let mut dirs = Vec::new();
    for which in [Which::S1, Which::S2] {
        if which == Which::S2 && pair.d2 == 0 {
            continue;
        }
        for y in pair.sample_surface(which, 12, &mut rng) {
            if let Ok(fiber) = pair.conormal_fiber(y, which) {
                for b in fiber {
                    dirs.push(b);
                    dirs.push(-b);
                }
            }
        }
    }
    Ok(if dirs.is_empty() { None } else { Some(dirs) })
}

/// Read the restrict stage's output back.
pub fn load_restricted(out: &Path) -> Result<RestrictedData> {
    let kernel = io::read_kernel(out, "kernel")?;
    let report: conoscatter::scatter::Cor84Report =
        serde_json::from_str(&std::fs::read_to_string(out.join("restrict.json"))?)?;
    let text = std::fs::read_to_string(out.join("beta.csv"))?;
    let mut values = vec![vec![0.0f64; kernel.s_grid.n]; kernel.omega_grid.len()];
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let oi: usize = parts.next().ok_or_else(|| anyhow!("bad beta.csv"))?.parse()?;
        let s: f64 = parts.next().ok_or_else(|| anyhow!("bad beta.csv"))?.parse()?;
        let v: f64 = parts.next().ok_or_else(|| anyhow!("bad beta.csv"))?.parse()?;
        let i = ((s - kernel.s_grid.s0) / kernel.s_grid.ds).round() as usize;
        values[oi][i] = v;
    }
    Ok(RestrictedData {
        s_grid: kernel.s_grid,
        omega_grid: kernel.omega_grid.clone(),
        values,
        pulse_epsilon: kernel.meta.pulse_epsilon,
        report,
    })
}

/// Stage: detect echoes and recover point clouds + report.
pub fn stage_reconstruct(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<conoscatter::reconstruct::ReconstructionResult> {
    let mut timer = StageTimer::start("reconstruct");
    let data = load_restricted(out).context("reconstruct: missing restrict artifacts")?;
    let pulse = SourcePulse::new(data.pulse_epsilon);
    let detect_params = DetectParams {
        noise_floor_k: config.reconstruct.noise_floor_k,
        relative_floor: config.reconstruct.relative_floor,
        fit_band: None,
        graph_slope_cap: 4.0 * config.scenario.half_box.max(1.0),
    };
    let curve = detect_singular_support(&data, &pulse, &detect_params)
        .map_err(|e| anyhow!("reconstruct: {e}"))?;
    io::write_peaks_csv(out, "peaks", &curve, &data.omega_grid)?;

    let pair = build_pair(config).map_err(|e| anyhow!("{e}"))?;
    let params = RecoverParams {
        calibration_c: config.reconstruct.calibration_c,
        cluster_radius: config.reconstruct.cluster_cells * config.grid_cell(),
        search_half: config.scenario.half_box * 1.5,
        wedge_pair: if config.reconstruct.use_geometry_wedges {
            Some((pair.as_ref(), config.reconstruct.wedge_tol))
        } else {
            None
        },
        class_split_min: 0.25,
        max_graph_residual_eps: 1.0,
    };
    let mut result =
        recover_points(&curve, &data.omega_grid, &params).map_err(|e| anyhow!("{e}"))?;
    if let Ok(orders) = conoscatter::reconstruct::estimate_orders(
        &curve,
        config.reconstruct.expect_two_classes,
        0.25,
        None,
    ) {
        result.m1_est = orders.m1_est.or(Some(orders.s1_slope));
        result.m2_relative_est = orders.m2_relative;
    }
    io::write_cloud_csv(out, "s1_cloud", &result.s1_cloud)?;
    io::write_cloud_csv(out, "s2_cloud", &result.s2_cloud)?;
    let report = serde_json::json!({
        "M1_est": result.m1_est,
        "M2_rel_est": result.m2_relative_est,
        "calibration_c": result.calibration_c,
        "excluded_wedges": result.excluded_wedges,
        "s1_points": result.s1_cloud.len(),
        "s2_points": result.s2_cloud.len(),
        "class_slopes": result.class_slopes,
    });
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    timer.output(out, "peaks.csv")?;
    timer.output(out, "s1_cloud.csv")?;
    timer.output(out, "s2_cloud.csv")?;
    timer.output(out, "report.json")?;
    timer.finish(manifest);
    Ok(result)
}

/// Full pipeline: synth → forward → scatter → restrict → reconstruct.
pub fn run_pipeline(config: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new(
        config.hash(),
        config.scenario.name.clone(),
        config.scenario.seed,
    );
    stage_synth(config, out, &mut manifest)?;
    stage_forward(config, out, &mut manifest)?;
    stage_scatter(config, out, &mut manifest)?;
    let data = stage_restrict(config, out, &mut manifest)?;
    let result = stage_reconstruct(config, out, &mut manifest)?;
    manifest.add_check(
        "pipeline_nonempty",
        config.scenario.name == "zero"
            || !result.s1_cloud.is_empty()
            || !result.s2_cloud.is_empty(),
        format!("{} S1 + {} S2 points", result.s1_cloud.len(), result.s2_cloud.len()),
    );
    if config.scenario.name == "zero" {
        manifest.add_check(
            "zero_in_zero_out",
            data.max_abs() == 0.0 && result.s1_cloud.is_empty() && result.s2_cloud.is_empty(),
            format!("restricted max {}", data.max_abs()),
        );
    }
    manifest.write(out, "manifest")?;
    Ok(manifest)
}

/// Geometry certificate suite: ranks, clean intersections, multiphase
/// residuals, and second-order surface sampling over the configured pair.
pub fn run_geometry_suite(config: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new(
        config.hash(),
        config.scenario.name.clone(),
        config.scenario.seed,
    );
    let mut timer = StageTimer::start("geomcheck");
    let mut rng = ChaCha8Rng::seed_from_u64(config.scenario.seed);
    let mut records: Vec<serde_json::Value> = Vec::new();

    let pair = build_pair(config).map_err(|e| anyhow!("{e}"))?;
    pair.validate(20, &mut rng).map_err(|e| anyhow!("geomcheck: {e}"))?;

    // Chart ranks on the configured pair.
    let fd = 1e-5;
    let mut rank_ok = true;
    for _ in 0..20 {
        let params = random_flowout_params(&pair, Which::S1, &mut rng)?;
        let full =
            chart_jacobian_rank(ChartKind::FlowoutA, &pair, &params, RankMode::Full, fd, RANK_TOL)
                .map_err(|e| anyhow!("{e}"))?;
        let base = chart_jacobian_rank(
            ChartKind::FlowoutA,
            &pair,
            &params,
            RankMode::BaseProjection,
            fd,
            RANK_TOL,
        )
        .map_err(|e| anyhow!("{e}"))?;
        rank_ok &= full == 6 && base == 5;
        records.push(serde_json::json!({
            "kind": "FlowoutA",
            "params": params_json(&params),
            "rank": full,
            "rank_base": base,
            "codim": serde_json::Value::Null,
            "clean": serde_json::Value::Null,
            "residuals": { "on_surface": pair.max_residual(Which::S1, params.y) },
        }));
    }
    manifest.add_check("flowout_ranks", rank_ok, "full 6 / base projection 5 at 20 points");

    // Clean intersections need a genuine nested pair.
    if pair.d2 > 0 {
        let mut clean_ok = true;
        let mut count = 0;
        while count < 40 {
            let Some(shared) = random_intersection(&pair, &mut rng) else { continue };
            for (a, b) in [
                (ChartKind::FlowoutA, ChartKind::FlowoutC),
                (ChartKind::ReflectedA, ChartKind::ReflectedC),
            ] {
                let cert = clean_intersection_at(a, b, &pair, &shared, fd, RANK_TOL)
                    .map_err(|e| anyhow!("{e}"))?;
                clean_ok &= cert.clean;
                records.push(serde_json::json!({
                    "kind": format!("{a:?}+{b:?}"),
                    "params": intersection_json(&shared),
                    "rank": cert.rank_sum,
                    "codim": cert.codim_a,
                    "clean": cert.clean,
                    "residuals": { "point_gap": cert.point_gap },
                }));
            }
            count += 1;
        }
        manifest.add_check("clean_intersections", clean_ok, "codim d2 at 40 matched points");
    }

    // Tangential-ray expected-error record.
    {
        let y = pair.sample_surface(Which::S1, 1, &mut rng)[0];
        let fiber = pair.conormal_fiber(y, Which::S1).map_err(|e| anyhow!("{e}"))?;
        let tangent = conoscatter::sphere::tangent_basis(fiber[0]).0;
        let err = conoscatter::geom::sigma_of(fiber[0], tangent, 1e-3).unwrap_err();
        records.push(serde_json::json!({
            "kind": "TangentialRayExpectedError",
            "params": { "y": [y.x, y.y, y.z] },
            "rank": serde_json::Value::Null,
            "codim": serde_json::Value::Null,
            "clean": serde_json::Value::Null,
            "residuals": { "error": err.to_string() },
        }));
    }

    // Multiphase residuals over a 10×10×10 grid.
    let (gap, residual) = multiphase_grid_maxima(&pair, 10)?;
    manifest.add_check(
        "multiphase",
        gap <= 1e-8 && residual <= 1e-6,
        format!("route gap {gap:.2e}, HJ residual {residual:.2e}"),
    );
    records.push(serde_json::json!({
        "kind": "Multiphase",
        "params": { "grid": [10, 10, 10] },
        "rank": serde_json::Value::Null,
        "codim": serde_json::Value::Null,
        "clean": gap <= 1e-8 && residual <= 1e-6,
        "residuals": { "route_gap": gap, "hj_residual": residual },
    }));

    // Second-order surface sampling on the model pair.
    let model = model_pair(config.scenario.half_box);
    let report = prop71_intersection(&model, 50, &mut rng).map_err(|e| anyhow!("{e}"))?;
    manifest.add_check(
        "prop71_transversality",
        report.transversal_count >= 45 && report.x2_nonzero_fraction >= 0.9,
        format!(
            "{}/50 transversal, x2≠0 on {:.0}%",
            report.transversal_count,
            100.0 * report.x2_nonzero_fraction
        ),
    );
    records.push(serde_json::json!({
        "kind": "Prop71",
        "params": { "samples": 50 },
        "rank": serde_json::Value::Null,
        "codim": 2,
        "clean": report.transversal_count >= 45,
        "residuals": {
            "transversal": report.transversal_count,
            "degenerate_draws": report.degenerate_draws,
        },
    }));

    std::fs::write(
        out.join("certificates.json"),
        serde_json::to_string_pretty(&records)?,
    )?;
    timer.output(out, "certificates.json")?;
    timer.finish(&mut manifest);
    manifest.write(out, "manifest")?;
    Ok(manifest)
}

fn params_json(p: &ChartParams) -> serde_json::Value {
    serde_json::json!({
        "y": [p.y.x, p.y.y, p.y.z],
        "nu": [p.nu.x, p.nu.y, p.nu.z],
        "omega": [p.omega.x, p.omega.y, p.omega.z],
        "r": p.r,
    })
}

fn intersection_json(p: &IntersectionParams) -> serde_json::Value {
    serde_json::json!({
        "y": [p.y.x, p.y.y, p.y.z],
        "nu": [p.nu.x, p.nu.y, p.nu.z],
        "omega": [p.omega.x, p.omega.y, p.omega.z],
        "r": p.r,
    })
}

pub fn random_flowout_params(
    pair: &NestedPair,
    which: Which,
    rng: &mut ChaCha8Rng,
) -> Result<ChartParams> {
    let y = pair
        .sample_surface(which, 1, rng)
        .pop()
        .ok_or_else(|| anyhow!("no surface sample"))?;
    let omega = sample_nontangential_omega(pair, y, which, 0.1, rng).map_err(|e| anyhow!("{e}"))?;
    let nu_hat = conoscatter::geom::sample_nontangential_fiber(pair, y, which, omega, 0.1, rng)
        .map_err(|e| anyhow!("{e}"))?;
    let nu = rng.gen_range(0.5..2.0) * nu_hat;
    let r = rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    Ok(ChartParams { y, nu, omega, r, sigma: 1.0 })
}

/// Matched intersection parameters: y on S2, ν in the S1 fiber, ω away from
/// tangency. None when the draw lands in a wedge.
pub fn random_intersection(pair: &NestedPair, rng: &mut ChaCha8Rng) -> Option<IntersectionParams> {
    let y = pair.sample_surface(Which::S2, 1, rng).pop()?;
    let fiber1 = pair.conormal_fiber(y, Which::S1).ok()?;
    let mut nu = Vector3::zeros();
    for b in &fiber1 {
        nu += conoscatter::math::normal_sample(rng) * *b;
    }
    if nu.norm() < 0.3 {
        return None;
    }
    let omega = conoscatter::sphere::random_unit(rng);
    if nu.normalize().dot(&omega).abs() < 0.15 {
        return None;
    }
    let r = rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    Some(IntersectionParams { y, nu, omega, r })
}

/// Max route gap and Hamilton–Jacobi residual of the multiphase solver over
/// an n³ parameter grid (transect point × σ × s).
pub fn multiphase_grid_maxima(pair: &NestedPair, n: usize) -> Result<(f64, f64)> {
    let omega = Vector3::new(0.2, -0.3, 0.7).normalize();
    let theta = vec![1.0; pair.d1];
    let mut max_gap = 0.0f64;
    let mut max_res = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = Vector3::new(
                    -0.8 + 1.6 * i as f64 / (n - 1) as f64,
                    0.3 - 0.1 * i as f64 / (n - 1) as f64,
                    0.9 - 1.7 * i as f64 / (n - 1) as f64,
                );
                let sigma = 0.5 + 1.5 * j as f64 / (n - 1) as f64;
                let s = -0.5 + 1.0 * k as f64 / (n - 1) as f64;
                let sol = multiphase_solve(pair, Which::S1, x, 0.3, omega, &theta, sigma, s, 128)
                    .map_err(|e| anyhow!("{e}"))?;
                max_gap = max_gap.max(sol.route_gap());
                max_res = max_res.max(sol.closed_form.hj_residual().max(sol.ode.hj_residual()));
            }
        }
    }
    Ok((max_gap, max_res))
}

/// Fast-vs-oracle comparison report.
#[derive(Debug, serde::Serialize)]
pub struct OracleReport {
    pub born_probes: usize,
    pub born_max_rel: f64,
    pub route_max_rel: Option<f64>,
    pub farfield_rel_change: Option<f64>,
}

/// Compare the production Born quadrature against the dense oracle at random
/// probes, and the two kernel routes against each other.
pub fn compare_oracle(
    config: &ExperimentConfig,
    probes: usize,
    compare_routes: bool,
) -> Result<OracleReport> {
    let mut field = build_potential(config).map_err(|e| anyhow!("{e}"))?;
    field
        .fill_grid(config.grids.potential_n)
        .map_err(|e| anyhow!("{e}"))?;
    let pulse = pulse_from(config);
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.scenario.seed ^ 0x0bac1e);
    let rho = config.potential.support_radius;

    // probes grouped into a few receivers, several times each
    let n_receivers = probes.div_ceil(5);
    let mut max_rel = 0.0f64;
    let mut scale = 0.0f64;
    let mut diffs: Vec<f64> = Vec::new();
    for _ in 0..n_receivers {
        let dir = conoscatter::sphere::random_unit(&mut rng);
        let receiver = rng.gen_range(4.0..8.0) * rho * dir;
        let omega = conoscatter::sphere::random_unit(&mut rng);
        let dist = receiver.norm();
        let times: Vec<f64> = {
            let mut t: Vec<f64> = (0..5)
                .map(|_| rng.gen_range((dist - 1.2 * rho)..(dist + 1.2 * rho)))
                .collect();
            t.sort_by(|a, b| a.total_cmp(b));
            t.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            t
        };
        let fast = born_u1(&field, omega, receiver, &times, &pulse, &quad)
            .map_err(|e| anyhow!("{e}"))?;
        let oracle =
            born_u1_oracle(&field, omega, receiver, &times, &pulse, config.grids.potential_n)
                .map_err(|e| anyhow!("{e}"))?;
        for (f, o) in fast.values.iter().zip(&oracle.values) {
            diffs.push((f - o).abs());
            scale = scale.max(o.abs());
        }
    }
    for d in diffs {
        max_rel = max_rel.max(d / scale.max(1e-300));
    }

    let mut route_max_rel = None;
    let mut farfield = None;
    if compare_routes {
        let kc = kernel_config_from(config);
        let grid = DirGrid::icosphere(0);
        let pairs = vec![(grid.antipode[2], 2usize), (7usize, 2usize)];
        let mut deep = kc.clone();
        deep.r_far = 64.0 * rho;
        deep.t0 = deep.r_far + 3.0 * rho + 12.0 * pulse.epsilon;
        let mk = |route: KernelRoute| -> Result<ScatteringKernel> {
            let mut c = deep.clone();
            c.route = route;
            scattering_kernel(
                &field,
                &pulse,
                &grid,
                &grid,
                &PairSelection::Explicit(pairs.clone()),
                &c,
            )
            .map_err(|e| anyhow!("{e}"))
        };
        let kf = mk(KernelRoute::Friedlander)?;
        let kl = mk(KernelRoute::LaxPhillips)?;
        let mut worst = 0.0f64;
        for &(ti, oi) in &pairs {
            let a = kf.column(ti, oi).unwrap();
            let b = kl.column(ti, oi).unwrap();
            let na = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            let nb = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x / na - y / nb).abs());
            }
        }
        route_max_rel = Some(worst);
        farfield = Some(
            farfield_convergence(
                &field,
                &pulse,
                grid.verts[grid.antipode[2]],
                grid.verts[2],
                &kc.s_grid,
                16.0 * rho,
                &quad,
            )
            .map_err(|e| anyhow!("{e}"))?,
        );
    }

    Ok(OracleReport {
        born_probes: probes,
        born_max_rel: max_rel,
        route_max_rel,
        farfield_rel_change: farfield,
    })
}

/// Detect + curve from an in-memory restricted dataset (used by validation).
pub fn detect_from(
    config: &ExperimentConfig,
    data: &RestrictedData,
) -> Result<SingularSupportCurve> {
    let pulse = SourcePulse::new(data.pulse_epsilon);
    let params = DetectParams {
        noise_floor_k: config.reconstruct.noise_floor_k,
        relative_floor: config.reconstruct.relative_floor,
        fit_band: None,
        graph_slope_cap: 4.0 * config.scenario.half_box.max(1.0),
    };
    detect_singular_support(data, &pulse, &params).map_err(|e| anyhow!("{e}"))
}
