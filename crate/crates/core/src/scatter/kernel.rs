//! Kernel assembly: the Friedlander receiver-trace route and the
//! Lax-Phillips projection route.

use super::{KernelMeta, SGrid, ScatterError, ScatteringKernel};
use crate::math::fft::apply_multiplier;
use crate::potential::PotentialField;
use crate::sphere::DirGrid;
use crate::wavefield::{born_u1, QuadratureSpec, SourcePulse};
use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

/// Which construction produced a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KernelRoute {
    Friedlander,
    LaxPhillips,
}

/// Which (θ, ω) columns to assemble.
#[derive(Debug, Clone)]
pub enum PairSelection {
    /// Every pair — dense kernel.
    All,
    /// Only θ = −ω (exact antipodes of the shared grid).
    Backscatter,
    /// Explicit (theta_idx, omega_idx) list.
    Explicit(Vec<(usize, usize)>),
}

impl PairSelection {
    fn pairs(&self, theta: &DirGrid, omega: &DirGrid) -> Result<Vec<(usize, usize)>, ScatterError> {
        match self {
            PairSelection::All => {
                let mut v = Vec::with_capacity(theta.len() * omega.len());
                for ti in 0..theta.len() {
                    for oi in 0..omega.len() {
                        v.push((ti, oi));
                    }
                }
                Ok(v)
            }
            PairSelection::Backscatter => {
                if theta.len() != omega.len() {
                    return Err(ScatterError::InvalidInput {
                        detail: "backscatter pairing needs matching θ/ω grids".into(),
                    });
                }
                Ok((0..omega.len()).map(|oi| (omega.antipode[oi], oi)).collect())
            }
            PairSelection::Explicit(v) => Ok(v.clone()),
        }
    }
}

/// Assembly configuration.
#[derive(Debug, Clone)]
pub struct KernelConfig {
    pub s_grid: SGrid,
    pub t0: f64,
    pub r_far: f64,
    pub c_n: f64,
    pub route: KernelRoute,
    pub quad: QuadratureSpec,
    /// When set, verify far-field convergence by doubling R_far on a probe
    /// column and erroring above 1e-2 relative change (Friedlander route).
    pub check_farfield: bool,
}

impl KernelConfig {
    /// Defaults tied to the potential: R_far = 4ρ, t0 = 8ρ, s covering the
    /// echo support 2ρ + 6ε with margin, Δs = ε/2.
    pub fn defaults(rho: f64, pulse: &SourcePulse) -> Self {
        let half = 2.0 * rho + 6.0 * pulse.epsilon + 10.0 * pulse.epsilon;
        KernelConfig {
            s_grid: SGrid::symmetric(half, pulse.epsilon / 2.0),
            t0: 8.0 * rho,
            r_far: 4.0 * rho,
            c_n: 1.0,
            route: KernelRoute::Friedlander,
            quad: QuadratureSpec::default(),
            check_farfield: false,
        }
    }
}

/// One Friedlander column: α(s, θ, ω) = r ∂_t u1(rθ, r − s) at r = R_far.
fn friedlander_column(
    q: &PotentialField,
    pulse: &SourcePulse,
    theta: Vector3<f64>,
    omega: Vector3<f64>,
    s_grid: &SGrid,
    r_far: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>, ScatterError> {
    let receiver = r_far * theta;
    // t = r − s decreases in s: evaluate on the reversed time axis.
    let times: Vec<f64> = (0..s_grid.n).rev().map(|i| r_far - s_grid.at(i)).collect();
    let dp = pulse.derivative();
    let trace = born_u1(q, omega, receiver, &times, &dp, quad)?;
    Ok(trace.values.iter().rev().map(|v| r_far * v).collect())
}

/// One Lax-Phillips column through the exact projection identity.
///
/// The Radon transform of the retarded potential over {x·θ = s_r} at time t0
/// is (plane integral of ψ(c − |x−y|)/|x−y| = 2π Ψ(c − |p|)):
///
/// ```text
///   R v0(s_r) = −(1/2) ∫ q(y) Ψ(t0 − s_r − y·(ω−θ)) dy,
///   R v1(s_r) = −(1/2) ∫ q(y) ψ(t0 − s_r − y·(ω−θ)) dy,
/// ```
///
/// so D_s R v0 − R v1 = ∫ q ψ(t0 − s_r − y·(ω−θ)) dy =: P, and the kernel
/// column is C_n · D_s P pulled back by s_r = t0 + s.
pub fn lax_phillips_column(
    q: &PotentialField,
    pulse: &SourcePulse,
    theta: Vector3<f64>,
    omega: Vector3<f64>,
    s_grid: &SGrid,
    t0: f64,
    c_n: f64,
) -> Result<Vec<f64>, ScatterError> {
    let grid = q
        .grid_cache
        .as_ref()
        .ok_or(ScatterError::Wave(crate::wavefield::WaveError::VolumeGridMissing))?;
    let required = q.support_radius + 2.0 * q.support_radius + 10.0 * pulse.epsilon;
    if t0 < required {
        return Err(ScatterError::T0TooSmall { t0, required });
    }
    if 6.0 * pulse.epsilon < 4.0 * s_grid.ds {
        return Err(ScatterError::SGridTooCoarse { ds: s_grid.ds, pulse_epsilon: pulse.epsilon });
    }
    let e = omega - theta;
    let vol = grid.cell_volume();
    let half_width = pulse.half_width();
    let mut p_of_s = vec![0.0f64; s_grid.n];
    for (y, qv) in grid.nodes() {
        if qv == 0.0 {
            continue;
        }
        let z = y.dot(&e);
        // deposit ψ(−s − z) over stored s near −z
        let center = -z;
        let lo = ((center - half_width - s_grid.s0) / s_grid.ds).floor().max(0.0) as usize;
        for i in lo..s_grid.n {
            let s = s_grid.at(i);
            if s > center + half_width {
                break;
            }
            p_of_s[i] += qv * vol * pulse.eval(-s - z);
        }
    }
    let sigma_cut = 3.0 / pulse.epsilon;
    let roll = move |s: f64| {
        let a = s.abs();
        if a <= 0.8 * sigma_cut {
            1.0
        } else if a >= sigma_cut {
            0.0
        } else {
            let x = (a - 0.8 * sigma_cut) / (0.2 * sigma_cut);
            0.5 * (1.0 + (std::f64::consts::PI * x).cos())
        }
    };
    Ok(apply_multiplier(&p_of_s, s_grid.ds, 0.1, |sigma| {
        Complex64::new(0.0, sigma * roll(sigma))
    })
    .into_iter()
    .map(|v| c_n * v)
    .collect())
}

/// Assemble the scattered part of the kernel on the selected (θ, ω) columns.
pub fn scattering_kernel(
    q: &PotentialField,
    pulse: &SourcePulse,
    theta_grid: &DirGrid,
    omega_grid: &DirGrid,
    selection: &PairSelection,
    config: &KernelConfig,
) -> Result<ScatteringKernel, ScatterError> {
    if 6.0 * pulse.epsilon < 4.0 * config.s_grid.ds {
        return Err(ScatterError::SGridTooCoarse {
            ds: config.s_grid.ds,
            pulse_epsilon: pulse.epsilon,
        });
    }
    let required_t0 = config.r_far + 2.0 * q.support_radius + 10.0 * pulse.epsilon;
    if config.t0 < required_t0 {
        return Err(ScatterError::T0TooSmall { t0: config.t0, required: required_t0 });
    }
    let pairs = selection.pairs(theta_grid, omega_grid)?;

    if config.check_farfield && !pairs.is_empty() {
        let (ti, oi) = pairs[0];
        let rel = farfield_convergence(
            q,
            pulse,
            theta_grid.verts[ti],
            omega_grid.verts[oi],
            &config.s_grid,
            config.r_far,
            &config.quad,
        )?;
        if rel > 1e-2 {
            return Err(ScatterError::FarfieldUnconverged { rel_change: rel });
        }
    }

    let columns: Vec<Result<Vec<f64>, ScatterError>> = pairs
        .par_iter()
        .map(|&(ti, oi)| {
            let theta = theta_grid.verts[ti];
            let omega = omega_grid.verts[oi];
            match config.route {
                KernelRoute::Friedlander => friedlander_column(
                    q,
                    pulse,
                    theta,
                    omega,
                    &config.s_grid,
                    config.r_far,
                    &config.quad,
                ),
                KernelRoute::LaxPhillips => lax_phillips_column(
                    q,
                    pulse,
                    theta,
                    omega,
                    &config.s_grid,
                    config.t0,
                    config.c_n,
                ),
            }
        })
        .collect();

    let meta = KernelMeta {
        pulse_epsilon: pulse.epsilon,
        t0: config.t0,
        r_far: config.r_far,
        route: config.route,
        c_n: config.c_n,
        support_radius: q.support_radius,
    };
    let mut kernel =
        ScatteringKernel::new_empty(config.s_grid, theta_grid.clone(), omega_grid.clone(), meta);
    for (&(ti, oi), col) in pairs.iter().zip(columns) {
        kernel.set_column(ti, oi, col?);
    }
    Ok(kernel)
}

/// Relative change of one Friedlander column when R_far doubles (sup-norm
/// normalized); the far-field convergence diagnostic.
pub fn farfield_convergence(
    q: &PotentialField,
    pulse: &SourcePulse,
    theta: Vector3<f64>,
    omega: Vector3<f64>,
    s_grid: &SGrid,
    r_far: f64,
    quad: &QuadratureSpec,
) -> Result<f64, ScatterError> {
    let a = friedlander_column(q, pulse, theta, omega, s_grid, r_far, quad)?;
    let b = friedlander_column(q, pulse, theta, omega, s_grid, 2.0 * r_far, quad)?;
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(diff / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::NestedPair;
    use crate::potential::PotentialField;
    use std::sync::Arc;

    fn bump_q(center: Vector3<f64>, rho: f64, width: f64, n: usize) -> PotentialField {
        let pair = Arc::new(NestedPair::plane(0.0, 1.0));
        let mut f = PotentialField::custom(
            pair,
            rho,
            0.1,
            Arc::new(move |x: Vector3<f64>| crate::math::bump((x - center).norm() / width)),
        );
        f.fill_grid(n).unwrap();
        f
    }

    #[test]
    fn zero_potential_zero_kernel() {
        let pair = Arc::new(NestedPair::plane(0.0, 1.0));
        let mut q = PotentialField::zero(pair, 0.5, 0.1);
        q.fill_grid(33).unwrap();
        let pulse = SourcePulse::new(0.1);
        let config = KernelConfig::defaults(0.5, &pulse);
        let grid = DirGrid::icosphere(0);
        let k = scattering_kernel(&q, &pulse, &grid, &grid, &PairSelection::Backscatter, &config)
            .unwrap();
        assert_eq!(k.max_abs(), 0.0);
    }

    #[test]
    fn centered_bump_echo_at_s_zero() {
        // All path lengths are equal at an origin scatterer: the echo sits
        // at s = 0 for every (θ, ω).
        let q = bump_q(Vector3::zeros(), 0.4, 0.18, 49);
        let pulse = SourcePulse::new(0.07);
        let mut config = KernelConfig::defaults(0.4, &pulse);
        config.r_far = 24.0 * 0.4; // deep far field keeps the peak centred
        config.t0 = config.r_far + 3.0 * 0.4 + 12.0 * pulse.epsilon;
        let grid = DirGrid::icosphere(0);
        let k = scattering_kernel(&q, &pulse, &grid, &grid, &PairSelection::Backscatter, &config)
            .unwrap();
        for oi in 0..grid.len() {
            let col = k.column(grid.antipode[oi], oi).unwrap();
            let env = crate::reconstruct::matched_envelope(col, k.s_grid.ds, &pulse);
            let peak = env
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let s_peak = k.s_grid.at(peak);
            assert!(s_peak.abs() < 2.0 * pulse.epsilon, "peak at {s_peak}");
        }
        // echo-support decay
        assert!(k.tail_fraction() < 1e-3, "tail {}", k.tail_fraction());
    }

    #[test]
    fn off_center_bump_echo_location_convention() {
        // Point-like bump at x0: stored echo at s = x0·(θ − ω).
        let x0 = Vector3::new(0.15, -0.1, 0.2);
        let q = bump_q(x0, 0.6, 0.12, 65);
        let pulse = SourcePulse::new(0.05);
        let mut config = KernelConfig::defaults(0.6, &pulse);
        config.r_far = 40.0 * 0.6;
        config.t0 = config.r_far + 3.0 * 0.6 + 12.0 * pulse.epsilon;
        let grid = DirGrid::icosphere(1);
        let pairs = vec![(3usize, 17usize), (30, 5), (11, 11)];
        let k = scattering_kernel(
            &q,
            &pulse,
            &grid,
            &grid,
            &PairSelection::Explicit(pairs.clone()),
            &config,
        )
        .unwrap();
        for (ti, oi) in pairs {
            let col = k.column(ti, oi).unwrap();
            let env = crate::reconstruct::matched_envelope(col, k.s_grid.ds, &pulse);
            let peak = env
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let s_peak = k.s_grid.at(peak);
            let expect = x0.dot(&(grid.verts[ti] - grid.verts[oi]));
            assert!(
                (s_peak - expect).abs() < 2.5 * pulse.epsilon,
                "peak {s_peak} expect {expect}"
            );
        }
    }

    #[test]
    fn two_routes_agree_after_normalization() {
        // Friedlander vs Lax-Phillips on a bump potential: ≤ 2e-2 relative
        // after sup-norm normalization (C_n = 1 leaves an overall constant).
        let q = bump_q(Vector3::new(0.1, 0.05, 0.0), 0.5, 0.22, 65);
        let pulse = SourcePulse::new(0.1);
        let mut config = KernelConfig::defaults(0.5, &pulse);
        config.r_far = 64.0 * 0.5;
        config.t0 = config.r_far + 3.0 * 0.5 + 12.0 * pulse.epsilon;
        let grid = DirGrid::icosphere(0);
        let pairs = vec![(grid.antipode[2], 2usize), (7, 2)];
        let mk = |route: KernelRoute| {
            let mut c = config.clone();
            c.route = route;
            scattering_kernel(&q, &pulse, &grid, &grid, &PairSelection::Explicit(pairs.clone()), &c)
                .unwrap()
        };
        let kf = mk(KernelRoute::Friedlander);
        let kl = mk(KernelRoute::LaxPhillips);
        for &(ti, oi) in &pairs {
            let a = kf.column(ti, oi).unwrap();
            let b = kl.column(ti, oi).unwrap();
            let na = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let nb = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut dev = 0.0f64;
            for (x, y) in a.iter().zip(b) {
                dev = dev.max((x / na - y / nb).abs());
            }
            assert!(dev <= 2e-2, "route deviation {dev}");
        }
    }

    #[test]
    fn reciprocity_for_radial_bump() {
        let q = bump_q(Vector3::zeros(), 0.4, 0.2, 49);
        let pulse = SourcePulse::new(0.08);
        let mut config = KernelConfig::defaults(0.4, &pulse);
        config.r_far = 16.0 * 0.4;
        config.t0 = config.r_far + 3.0 * 0.4 + 12.0 * pulse.epsilon;
        let grid = DirGrid::icosphere(1);
        let (ti, oi) = (5usize, 29usize);
        let (tin, oin) = (grid.antipode[oi], grid.antipode[ti]);
        let k = scattering_kernel(
            &q,
            &pulse,
            &grid,
            &grid,
            &PairSelection::Explicit(vec![(ti, oi), (tin, oin)]),
            &config,
        )
        .unwrap();
        let a = k.column(ti, oi).unwrap();
        let b = k.column(tin, oin).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dev =
            a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(dev <= 2e-2 * scale, "reciprocity deviation {dev} scale {scale}");
    }
}
