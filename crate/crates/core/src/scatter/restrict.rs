//! Restriction of the kernel to determined data sets: backscattering and
//! graph slices φ = φ(s, ω), with the three sufficient conditions of the
//! general-data corollary checked on the sampled grids.

use super::{SGrid, ScatterError, ScatteringKernel};
use crate::sphere::DirGrid;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Slice family.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SliceKind {
    Backscatter,
    Graph,
}

/// A data-set slice {(s, φ(s, ω), ω)}. Backscattering is the graph case
/// φ ≡ −ω, restricted without interpolation through the grid's exact
/// antipodes.
#[derive(Clone)]
pub struct DataSliceSpec {
    pub kind: SliceKind,
    phi: Option<Arc<dyn Fn(f64, Vector3<f64>) -> Vector3<f64> + Send + Sync>>,
}

impl DataSliceSpec {
    pub fn backscatter() -> Self {
        DataSliceSpec { kind: SliceKind::Backscatter, phi: None }
    }

    pub fn graph(phi: Arc<dyn Fn(f64, Vector3<f64>) -> Vector3<f64> + Send + Sync>) -> Self {
        DataSliceSpec { kind: SliceKind::Graph, phi: Some(phi) }
    }

    /// Backscattering composed with a fixed rotation: φ(s, ω) = −R ω.
    pub fn rotated_backscatter(axis: Vector3<f64>, angle_rad: f64) -> Self {
        let axis = axis.normalize();
        Self::graph(Arc::new(move |_s, omega: Vector3<f64>| {
            -(rotate(axis, angle_rad, omega))
        }))
    }

    pub fn phi(&self, s: f64, omega: Vector3<f64>) -> Vector3<f64> {
        match self.kind {
            SliceKind::Backscatter => -omega,
            SliceKind::Graph => (self.phi.as_ref().expect("graph slice without map"))(s, omega),
        }
    }
}

fn rotate(axis: Vector3<f64>, angle: f64, v: Vector3<f64>) -> Vector3<f64> {
    // Rodrigues rotation.
    let (sin, cos) = angle.sin_cos();
    v * cos + axis.cross(&v) * sin + axis * axis.dot(&v) * (1.0 - cos)
}

/// Outcome of the three slice-validity checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cor84Report {
    /// Minimum angle between φ(s, ω) and ω over the sampled grid (rad).
    pub min_phi_omega_angle: f64,
    /// Largest gap in the coverage test of the normalized difference map.
    pub coverage_gap: f64,
    /// Smallest |φ_s⁻¹(ν)·ν| over the supplied Gauss directions (1.0 when
    /// no directions were supplied).
    pub min_gauss_dot: f64,
    pub condition1_ok: bool,
    pub condition2_ok: bool,
    pub condition3_ok: bool,
}

/// Validate a slice against the corollary's conditions on the sampled grids:
///
/// 1. φ(s, ω) ≠ ω everywhere;
/// 2. φ_s(ω) = (ω − φ)/|ω − φ| is a sampled bijection of S² (nearest-image
///    coverage of every grid vertex);
/// 3. φ_s⁻¹(ν)·ν ≠ 0 for ν in the supplied Gauss-map image samples.
pub fn validate_slice(
    slice: &DataSliceSpec,
    s_samples: &[f64],
    omega_grid: &DirGrid,
    gauss_dirs: Option<&[Vector3<f64>]>,
    tangency_tol: f64,
) -> Result<Cor84Report, ScatterError> {
    let mut min_angle = f64::INFINITY;
    let mut coverage_gap: f64 = 0.0;
    let mut min_gauss_dot = f64::INFINITY;
    let edge = omega_grid.edge_length();

    for &s in s_samples {
        let images: Vec<Vector3<f64>> = omega_grid
            .verts
            .iter()
            .map(|&omega| {
                let phi = slice.phi(s, omega).normalize();
                let a = phi.dot(&omega).clamp(-1.0, 1.0).acos();
                if a < min_angle {
                    min_angle = a;
                }
                let diff = omega - phi;
                if diff.norm() < 1e-12 {
                    omega
                } else {
                    diff.normalize()
                }
            })
            .collect();
        // Coverage: every grid vertex has a nearby image.
        for v in &omega_grid.verts {
            let best = images
                .iter()
                .map(|im| (v - im).norm())
                .fold(f64::INFINITY, f64::min);
            coverage_gap = coverage_gap.max(best);
        }
        if let Some(dirs) = gauss_dirs {
            for &nu in dirs {
                // nearest-image preimage of ν under φ_s
                let mut best = (f64::INFINITY, 0usize);
                for (i, im) in images.iter().enumerate() {
                    let d = (nu - im).norm();
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                let pre = omega_grid.verts[best.1];
                min_gauss_dot = min_gauss_dot.min(pre.dot(&nu).abs());
            }
        }
    }

    let condition1_ok = min_angle > 0.02; // ~1.1°
    // A bijective sampled map leaves no vertex farther than ~1 edge from an
    // image; 1.6 edges tolerates the gnomonic distortion of coarse grids.
    let condition2_ok = coverage_gap <= 1.6 * 2.0 * (edge / 2.0).sin();
    let condition3_ok = gauss_dirs.is_none() || min_gauss_dot > tangency_tol;
    let report = Cor84Report {
        min_phi_omega_angle: min_angle,
        coverage_gap,
        min_gauss_dot: if gauss_dirs.is_none() { 1.0 } else { min_gauss_dot },
        condition1_ok,
        condition2_ok,
        condition3_ok,
    };
    if !condition1_ok {
        return Err(ScatterError::SliceInvalid {
            condition: 1,
            detail: format!("phi(s, omega) = omega within {min_angle:.4} rad"),
        });
    }
    if !condition2_ok {
        return Err(ScatterError::SliceInvalid {
            condition: 2,
            detail: format!("difference map not a sampled bijection (gap {coverage_gap:.3})"),
        });
    }
    if !condition3_ok {
        return Err(ScatterError::SliceInvalid {
            condition: 3,
            detail: format!("tangency against the Gauss image (min dot {min_gauss_dot:.3e})"),
        });
    }
    Ok(report)
}

/// β(s, ω) = α(s, φ(s, ω), ω), one s-trace per ω-grid vertex.
#[derive(Debug, Clone)]
pub struct RestrictedData {
    pub s_grid: SGrid,
    pub omega_grid: DirGrid,
    /// values[omega_idx][s_idx]
    pub values: Vec<Vec<f64>>,
    pub pulse_epsilon: f64,
    pub report: Cor84Report,
}

impl RestrictedData {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Restrict a kernel to a slice. Backscattering reads the exact antipodal
/// columns; graph slices interpolate spherical-linearly within the θ-grid
/// triangle containing φ(s, ω). Validation runs first (condition 3 only
/// when Gauss directions are supplied).
pub fn restrict(
    kernel: &ScatteringKernel,
    slice: &DataSliceSpec,
    gauss_dirs: Option<&[Vector3<f64>]>,
    tangency_tol: f64,
) -> Result<RestrictedData, ScatterError> {
    let sv = kernel.s_grid.values();
    let s_probe: Vec<f64> = [0usize, sv.len() / 2, sv.len() - 1]
        .iter()
        .map(|&i| sv[i])
        .collect();
    let report =
        validate_slice(slice, &s_probe, &kernel.omega_grid, gauss_dirs, tangency_tol)?;

    let n_omega = kernel.omega_grid.len();
    let mut values = Vec::with_capacity(n_omega);
    for oi in 0..n_omega {
        let omega = kernel.omega_grid.verts[oi];
        let mut trace = vec![0.0f64; kernel.s_grid.n];
        match slice.kind {
            SliceKind::Backscatter => {
                let ti = kernel.omega_grid.antipode[oi];
                let col = kernel
                    .column(ti, oi)
                    .ok_or(ScatterError::MissingColumn { theta_idx: ti, omega_idx: oi })?;
                trace.copy_from_slice(col);
            }
            SliceKind::Graph => {
                for (si, s) in sv.iter().enumerate() {
                    let phi = slice.phi(*s, omega).normalize();
                    let (face, w) = kernel.theta_grid.locate(phi);
                    let mut acc = 0.0;
                    for k in 0..3 {
                        let col = kernel.column(face[k], oi).ok_or(
                            ScatterError::MissingColumn { theta_idx: face[k], omega_idx: oi },
                        )?;
                        acc += w[k] * col[si];
                    }
                    trace[si] = acc;
                }
            }
        }
        values.push(trace);
    }
    Ok(RestrictedData {
        s_grid: kernel.s_grid,
        omega_grid: kernel.omega_grid.clone(),
        values,
        pulse_epsilon: kernel.meta.pulse_epsilon,
        report,
    })
}

/// The (theta, omega) column list a graph slice needs from a kernel, for
/// assembly-time economy: every triangle vertex of φ(s, ω) over the s-probe
/// values, per ω.
pub fn columns_for_slice(
    slice: &DataSliceSpec,
    s_grid: &SGrid,
    theta_grid: &DirGrid,
    omega_grid: &DirGrid,
) -> Vec<(usize, usize)> {
    let mut set = std::collections::BTreeSet::new();
    match slice.kind {
        SliceKind::Backscatter => {
            for oi in 0..omega_grid.len() {
                set.insert((omega_grid.antipode[oi], oi));
            }
        }
        SliceKind::Graph => {
            let sv = s_grid.values();
            for oi in 0..omega_grid.len() {
                let omega = omega_grid.verts[oi];
                for s in &sv {
                    let phi = slice.phi(*s, omega).normalize();
                    let (face, _) = theta_grid.locate(phi);
                    for k in face {
                        set.insert((k, oi));
                    }
                }
            }
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::{KernelMeta, KernelRoute};

    fn empty_kernel(level: u32) -> ScatteringKernel {
        let grid = DirGrid::icosphere(level);
        let s_grid = SGrid::symmetric(1.0, 0.05);
        let meta = KernelMeta {
            pulse_epsilon: 0.05,
            t0: 4.0,
            r_far: 2.0,
            route: KernelRoute::Friedlander,
            c_n: 1.0,
            support_radius: 0.4,
        };
        let mut k = ScatteringKernel::new_empty(s_grid, grid.clone(), grid, meta);
        for oi in 0..k.omega_grid.len() {
            for ti in 0..k.theta_grid.len() {
                k.set_column(ti, oi, vec![0.0; k.s_grid.n]);
            }
        }
        k
    }

    #[test]
    fn backscatter_of_zero_kernel_is_zero() {
        let k = empty_kernel(1);
        let out = restrict(&k, &DataSliceSpec::backscatter(), None, 0.1).unwrap();
        assert_eq!(out.max_abs(), 0.0);
        assert!(out.report.condition1_ok && out.report.condition2_ok);
    }

    #[test]
    fn identity_graph_fails_condition_one() {
        let k = empty_kernel(1);
        let slice = DataSliceSpec::graph(Arc::new(|_s, omega: Vector3<f64>| omega));
        let err = restrict(&k, &slice, None, 0.1).unwrap_err();
        match err {
            ScatterError::SliceInvalid { condition, .. } => assert_eq!(condition, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rotated_backscatter_passes_validation() {
        let k = empty_kernel(2);
        let slice = DataSliceSpec::rotated_backscatter(
            Vector3::x(),
            10.0_f64.to_radians(),
        );
        let gauss: Vec<Vector3<f64>> = k.omega_grid.verts.iter().take(40).cloned().collect();
        let out = restrict(&k, &slice, Some(&gauss), 0.1).unwrap();
        assert!(out.report.condition3_ok);
        assert!(out.report.min_phi_omega_angle > 2.0);
    }

    #[test]
    fn columns_for_backscatter_are_antipodal() {
        let grid = DirGrid::icosphere(1);
        let s_grid = SGrid::symmetric(1.0, 0.05);
        let cols = columns_for_slice(&DataSliceSpec::backscatter(), &s_grid, &grid, &grid);
        assert_eq!(cols.len(), grid.len());
        for (ti, oi) in cols {
            assert_eq!(ti, grid.antipode[oi]);
        }
    }
}
