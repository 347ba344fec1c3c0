//! Pipeline diagnostics (development aid).

use conoscatter_cli::accept::backscatter_run;
use conoscatter_cli::config::ExperimentConfig;

fn nested_toml(n: usize, level: u32, m2: f64, eps: f64) -> String {
    format!(
        r#"
[scenario]
name = "plane-line"
seed = 505
plane_offset = 0.3
line_offset = 0.0
[potential]
profile = "fourier"
m1 = -0.8
m2 = {m2}
support_radius = 0.7
mollify_scale = 0.05
[pulse]
epsilon = {eps}
[grids]
potential_n = {n}
omega_level = {level}
theta_level = {level}
[reconstruct]
expect_two_classes = true
relative_floor = 0.01
"#
    )
}

fn sphere_toml(n: usize, level: u32, eps: f64) -> String {
    format!(
        r#"
[scenario]
name = "sphere"
seed = 404
sphere_radius = 0.5
[potential]
profile = "delta-layer"
support_radius = 0.7
mollify_scale = 0.05
[pulse]
epsilon = {eps}
[grids]
potential_n = {n}
omega_level = {level}
theta_level = {level}
"#
    )
}

fn sweep() {
    for eps in [0.1, 0.15, 0.2] {
        let config = ExperimentConfig::from_toml(&nested_toml(64, 2, -1.0, eps)).unwrap();
        match conoscatter_cli::accept::nested_roundtrip_with(&config) {
            Ok(out) => println!("nested eps={eps}: pass={} {}", out.pass, out.detail),
            Err(e) => println!("nested eps={eps}: ERR {e}"),
        }
        let sc = ExperimentConfig::from_toml(&sphere_toml(64, 2, eps)).unwrap();
        match conoscatter_cli::accept::sphere_roundtrip_with(&sc) {
            Ok((h, cell)) => println!("sphere eps={eps}: hausdorff {h:.4} vs 2 cells {:.4}", 2.0*cell),
            Err(e) => println!("sphere eps={eps}: ERR {e}"),
        }
        // cloud radial histogram for the sphere
        let (data, curve) = backscatter_run(&sc).unwrap();
        let params = conoscatter::reconstruct::RecoverParams {
            calibration_c: 0.5,
            cluster_radius: 3.0 * sc.grid_cell(),
            search_half: 1.2,
            wedge_pair: None,
            class_split_min: 0.25,
            max_graph_residual_eps: 1.0,
        };
        let rec = conoscatter::reconstruct::recover_points(&curve, &data.omega_grid, &params).unwrap();
        let mut radii: Vec<f64> = rec
            .s1_cloud
            .iter()
            .chain(rec.s2_cloud.iter())
            .map(|p| p.position().norm())
            .collect();
        radii.sort_by(|a, b| a.total_cmp(b));
        println!(
            "  sphere cloud: {} pts radii min {:.3} med {:.3} max {:.3}",
            radii.len(),
            radii.first().unwrap_or(&0.0),
            radii.get(radii.len() / 2).unwrap_or(&0.0),
            radii.last().unwrap_or(&0.0)
        );
    }
}

fn nested_cloud(eps: f64) {
    let config = ExperimentConfig::from_toml(&nested_toml(64, 2, -1.0, eps)).unwrap();
    let (data, curve) = backscatter_run(&config).unwrap();
    let pair = conoscatter_cli::scenario::build_pair(&config).unwrap();
    let params = conoscatter::reconstruct::RecoverParams {
        calibration_c: 0.5,
        cluster_radius: 3.0 * config.grid_cell(),
        search_half: 1.2,
        wedge_pair: Some((pair.as_ref(), 0.1)),
        class_split_min: 0.25,
        max_graph_residual_eps: 1.0,
    };
    let rec = conoscatter::reconstruct::recover_points(&curve, &data.omega_grid, &params).unwrap();
    println!("class slopes: {:?}", rec.class_slopes);
    for (label, cloud) in [("S1", &rec.s1_cloud), ("S2", &rec.s2_cloud)] {
        println!("{label}: {} points", cloud.len());
        for p in cloud.iter() {
            let omega = data.omega_grid.verts[p.omega_idx];
            let pos = p.position();
            let plane_d = (pos.z - 0.3).abs();
            let line_d = (pos.y.powi(2) + (pos.z - 0.3).powi(2)).sqrt();
            println!(
                "  y=({:+.3},{:+.3},{:+.3}) slope={:+.2} om=({:+.2},{:+.2},{:+.2}) plane_d={:.3} line_d={:.3}",
                pos.x, pos.y, pos.z,
                p.decay_slope.unwrap_or(f64::NAN),
                omega.x, omega.y, omega.z,
                plane_d, line_d
            );
        }
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    if which == "sweep" {
        sweep();
        return;
    }
    if which == "nestedcloud" {
        let eps: f64 = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(0.2);
        nested_cloud(eps);
        return;
    }
    let toml = match which.as_str() {
        "sphere" => {
            r#"
[scenario]
name = "sphere"
seed = 404
sphere_radius = 0.5
[potential]
profile = "delta-layer"
support_radius = 0.7
mollify_scale = 0.05
[pulse]
epsilon = 0.1
[grids]
potential_n = 64
omega_level = 1
theta_level = 1
"#
        }
        "nested" => {
            r#"
[scenario]
name = "plane-line"
seed = 505
plane_offset = 0.3
line_offset = 0.0
[potential]
profile = "fourier"
m1 = -0.8
m2 = -1.0
support_radius = 0.7
mollify_scale = 0.05
[pulse]
epsilon = 0.1
[grids]
potential_n = 64
omega_level = 2
theta_level = 2
[reconstruct]
expect_two_classes = true
relative_floor = 0.01
"#
        }
        _ => {
            eprintln!("usage: diag [sphere|nested]");
            return;
        }
    };
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let (data, curve) = backscatter_run(&config).unwrap();
    println!("restricted max {:.4e}, floor {:.4e}", data.max_abs(), curve.noise_floor);
    println!("ds = {}, eps = {}", data.s_grid.ds, data.pulse_epsilon);
    let mut with_peaks = 0;
    for (oi, peaks) in curve.peaks.iter().enumerate() {
        if !peaks.is_empty() {
            with_peaks += 1;
        }
        if oi < 6 {
            let omega = data.omega_grid.verts[oi];
            println!(
                "omega {oi} ({:+.2},{:+.2},{:+.2}):",
                omega.x, omega.y, omega.z
            );
            for p in peaks {
                println!(
                    "  s={:+.4} amp={:.3e} width={:.3} ({}eps) blurred={} slope={:?} grad={:?}",
                    p.s,
                    p.amplitude,
                    p.width,
                    (p.width / data.pulse_epsilon).round(),
                    p.blurred,
                    p.decay_slope,
                    p.grad_s.map(|g| (g.x, g.y, g.z))
                );
            }
        }
    }
    println!("directions with peaks: {with_peaks}/{}", curve.peaks.len());
    // raw trace dump for a chosen direction
    let dump_idx: usize = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(0);
    let tr = &data.values[dump_idx];
    let env = conoscatter::reconstruct::matched_envelope(
        tr,
        data.s_grid.ds,
        &conoscatter::wavefield::SourcePulse::new(data.pulse_epsilon),
    );
    let m = env.iter().cloned().fold(0.0f64, f64::max);
    for i in 0..data.s_grid.n {
        let s = data.s_grid.at(i);
        if env[i] > 0.15 * m {
            println!("  env s={:+.3} val={:.3e} env={:.3e}", s, tr[i], env[i]);
        }
    }
}
