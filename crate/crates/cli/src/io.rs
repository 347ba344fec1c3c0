//! On-disk artifact formats.
//!
//! * Volumetric grids: flat binary little-endian f64, row-major with x
//!   slowest (`data[(ix*ny + iy)*nz + iz]`), plus a JSON sidecar
//!   `{dims, spacing, origin, spec}`.
//! * Scattering kernels: flat binary f64 ordered [s × θ × ω], plus a JSON
//!   manifest with the grids, pulse, route, and C_n (paired assemblies list
//!   their (θ, ω) columns and store only those, in listed order).
//! * Traces and slices: CSV; clouds: CSV (x, y, z, class, confidence).

use anyhow::{bail, Context, Result};
use conoscatter::grid::Grid3;
use conoscatter::scatter::{KernelMeta, KernelRoute, SGrid, ScatteringKernel};
use conoscatter::sphere::DirGrid;
use conoscatter::wavefield::WaveTrace;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

fn write_f64s(path: &Path, data: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_f64s(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .with_context(|| format!("open {}", path.display()))?
        .read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        bail!("{}: length not a multiple of 8", path.display());
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

#[derive(Serialize, Deserialize)]
struct GridSidecar {
    dims: [usize; 3],
    spacing: f64,
    origin: [f64; 3],
    spec: serde_json::Value,
}

/// Write grid data + sidecar (`base.bin`, `base.json`).
pub fn write_grid(dir: &Path, base: &str, grid: &Grid3, spec: serde_json::Value) -> Result<()> {
    write_f64s(&dir.join(format!("{base}.bin")), &grid.data)?;
    let sidecar = GridSidecar {
        dims: grid.dims,
        spacing: grid.spacing,
        origin: grid.origin,
        spec,
    };
    std::fs::write(dir.join(format!("{base}.json")), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_grid(dir: &Path, base: &str) -> Result<Grid3> {
    let sidecar: GridSidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{base}.json")))?)?;
    let data = read_f64s(&dir.join(format!("{base}.bin")))?;
    if data.len() != sidecar.dims[0] * sidecar.dims[1] * sidecar.dims[2] {
        bail!("grid data length does not match dims");
    }
    Ok(Grid3 { origin: sidecar.origin, spacing: sidecar.spacing, dims: sidecar.dims, data })
}

/// Trace CSV: header then `t,value` rows; JSON manifest alongside.
pub fn write_trace(dir: &Path, base: &str, trace: &WaveTrace, pulse_eps: f64) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(dir.join(format!("{base}.csv")))?);
    writeln!(w, "t,value")?;
    for (t, v) in trace.times.iter().zip(&trace.values) {
        writeln!(w, "{t:.12e},{v:.12e}")?;
    }
    w.flush()?;
    let manifest = serde_json::json!({
        "receiver": [trace.receiver.x, trace.receiver.y, trace.receiver.z],
        "omega": [trace.direction.x, trace.direction.y, trace.direction.z],
        "pulse": { "epsilon": pulse_eps, "support_half_width": 3.0 * pulse_eps },
    });
    std::fs::write(
        dir.join(format!("{base}.json")),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct KernelManifest {
    s0: f64,
    ds: f64,
    n_s: usize,
    theta_level: u32,
    omega_level: u32,
    /// (theta_idx, omega_idx) of each stored column, in storage order.
    columns: Vec<(usize, usize)>,
    dense: bool,
    pulse_epsilon: f64,
    t0: f64,
    r_far: f64,
    route: KernelRoute,
    c_n: f64,
    support_radius: f64,
}

/// Write kernel binary + manifest. Dense kernels store the full
/// [s × θ × ω] tensor (s fastest within a column, θ-major over columns);
/// paired kernels store their columns in manifest order.
pub fn write_kernel(dir: &Path, base: &str, kernel: &ScatteringKernel) -> Result<()> {
    let n_theta = kernel.theta_grid.len();
    let n_omega = kernel.omega_grid.len();
    let mut columns = Vec::new();
    let mut data = Vec::new();
    for ti in 0..n_theta {
        for oi in 0..n_omega {
            if let Some(col) = kernel.column(ti, oi) {
                columns.push((ti, oi));
                data.extend_from_slice(col);
            }
        }
    }
    let dense = columns.len() == n_theta * n_omega;
    write_f64s(&dir.join(format!("{base}.bin")), &data)?;
    let manifest = KernelManifest {
        s0: kernel.s_grid.s0,
        ds: kernel.s_grid.ds,
        n_s: kernel.s_grid.n,
        theta_level: kernel.theta_grid.level,
        omega_level: kernel.omega_grid.level,
        columns,
        dense,
        pulse_epsilon: kernel.meta.pulse_epsilon,
        t0: kernel.meta.t0,
        r_far: kernel.meta.r_far,
        route: kernel.meta.route,
        c_n: kernel.meta.c_n,
        support_radius: kernel.meta.support_radius,
    };
    std::fs::write(
        dir.join(format!("{base}.json")),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn read_kernel(dir: &Path, base: &str) -> Result<ScatteringKernel> {
    let manifest: KernelManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{base}.json")))?)?;
    let data = read_f64s(&dir.join(format!("{base}.bin")))?;
    if data.len() != manifest.columns.len() * manifest.n_s {
        bail!("kernel data length does not match manifest");
    }
    let s_grid = SGrid { s0: manifest.s0, ds: manifest.ds, n: manifest.n_s };
    let meta = KernelMeta {
        pulse_epsilon: manifest.pulse_epsilon,
        t0: manifest.t0,
        r_far: manifest.r_far,
        route: manifest.route,
        c_n: manifest.c_n,
        support_radius: manifest.support_radius,
    };
    let mut kernel = ScatteringKernel::new_empty(
        s_grid,
        DirGrid::icosphere(manifest.theta_level),
        DirGrid::icosphere(manifest.omega_level),
        meta,
    );
    for (k, &(ti, oi)) in manifest.columns.iter().enumerate() {
        kernel.set_column(ti, oi, data[k * manifest.n_s..(k + 1) * manifest.n_s].to_vec());
    }
    Ok(kernel)
}

/// Restricted data as CSV rows `omega_index,s,value`.
pub fn write_slice_csv(
    dir: &Path,
    base: &str,
    data: &conoscatter::scatter::RestrictedData,
) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(dir.join(format!("{base}.csv")))?);
    writeln!(w, "omega_index,s,value")?;
    for (oi, trace) in data.values.iter().enumerate() {
        for (i, v) in trace.iter().enumerate() {
            writeln!(w, "{oi},{:.12e},{v:.12e}", data.s_grid.at(i))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Point clouds as CSV rows `x,y,z,class,confidence`.
pub fn write_cloud_csv(
    dir: &Path,
    base: &str,
    points: &[conoscatter::reconstruct::CloudPoint],
) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(dir.join(format!("{base}.csv")))?);
    writeln!(w, "x,y,z,class,confidence")?;
    for p in points {
        let class = match p.class {
            conoscatter::reconstruct::EchoClass::S1 => "S1",
            conoscatter::reconstruct::EchoClass::S2 => "S2",
        };
        writeln!(
            w,
            "{:.10e},{:.10e},{:.10e},{class},{:.4}",
            p.y[0], p.y[1], p.y[2], p.confidence
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Peak map s*(ω) as CSV rows `omega_index,ox,oy,oz,echo_index,s,amplitude,width`.
pub fn write_peaks_csv(
    dir: &Path,
    base: &str,
    curve: &conoscatter::reconstruct::SingularSupportCurve,
    grid: &DirGrid,
) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(dir.join(format!("{base}.csv")))?);
    writeln!(w, "omega_index,ox,oy,oz,echo_index,s,amplitude,width")?;
    for (oi, peaks) in curve.peaks.iter().enumerate() {
        let v = grid.verts[oi];
        for (ei, p) in peaks.iter().enumerate() {
            writeln!(
                w,
                "{oi},{:.8},{:.8},{:.8},{ei},{:.10e},{:.10e},{:.6}",
                v.x, v.y, v.z, p.s, p.amplitude, p.width
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// SHA-256 of a file, for manifest reproducibility records.
pub fn file_sha256(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    let mut f = std::fs::File::open(path)?;
    let mut buf = [0u8; 65536];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(crate::config::hex_string(&h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use conoscatter::scatter::{KernelMeta, KernelRoute};

    #[test]
    fn grid_round_trip() {
        let dir = std::env::temp_dir().join(format!("conoscatter-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut g = Grid3::centered(0.5, 9);
        g.fill(|p| p.x + 2.0 * p.y - p.z);
        write_grid(&dir, "q", &g, serde_json::json!({"test": true})).unwrap();
        let back = read_grid(&dir, "q").unwrap();
        assert_eq!(back.dims, g.dims);
        assert_eq!(back.data, g.data);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn kernel_round_trip_paired() {
        let dir = std::env::temp_dir().join(format!("conoscatter-io-k-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let grid = DirGrid::icosphere(0);
        let s_grid = SGrid::symmetric(1.0, 0.1);
        let meta = KernelMeta {
            pulse_epsilon: 0.05,
            t0: 4.0,
            r_far: 2.0,
            route: KernelRoute::Friedlander,
            c_n: 1.0,
            support_radius: 0.4,
        };
        let mut k = ScatteringKernel::new_empty(s_grid, grid.clone(), grid.clone(), meta);
        for oi in 0..grid.len() {
            let col: Vec<f64> = (0..s_grid.n).map(|i| (oi * 100 + i) as f64).collect();
            k.set_column(grid.antipode[oi], oi, col);
        }
        write_kernel(&dir, "kernel", &k).unwrap();
        let back = read_kernel(&dir, "kernel").unwrap();
        assert!(!back.is_dense());
        for oi in 0..grid.len() {
            assert_eq!(
                back.column(grid.antipode[oi], oi).unwrap(),
                k.column(grid.antipode[oi], oi).unwrap()
            );
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
