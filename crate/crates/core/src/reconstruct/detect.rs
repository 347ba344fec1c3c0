//! Echo detection on the restricted kernel: matched filtering against the
//! pulse, sub-sample peak refinement, per-echo spectral decay slopes, and
//! graph gradients over the direction grid.

use super::ReconError;
use crate::math::fft::{fft_real, tukey_window};
use crate::math::{line_fit, mad, quadratic_peak};
use crate::scatter::RestrictedData;
use crate::sphere::sphere_pullback;
use crate::wavefield::SourcePulse;
use nalgebra::Vector3;

/// One detected echo on one ω-trace.
#[derive(Debug, Clone)]
pub struct EchoPeak {
    /// Sub-sample retarded time of the peak.
    pub s: f64,
    /// Matched-filter amplitude at the peak.
    pub amplitude: f64,
    /// Half-maximum width of the filtered envelope.
    pub width: f64,
    /// Log–log slope of the windowed spectral magnitude around the echo.
    pub decay_slope: Option<f64>,
    /// Width outside [ε, 10ε].
    pub blurred: bool,
    /// Tangent-plane gradient of the echo graph s*(ω), filled by the
    /// cross-ω pass when enough neighbours carry a matching echo.
    pub grad_s: Option<Vector3<f64>>,
    /// RMS residual of the local linear graph fit behind `grad_s`: genuine
    /// echo graphs are locally affine over the one-ring, incoherent blobs
    /// are not.
    pub graph_residual: f64,
}

/// All echoes over the direction grid.
#[derive(Debug, Clone)]
pub struct SingularSupportCurve {
    /// peaks[omega_idx] sorted by s.
    pub peaks: Vec<Vec<EchoPeak>>,
    pub noise_floor: f64,
    pub pulse_epsilon: f64,
}

/// Detection knobs.
#[derive(Debug, Clone, Copy)]
pub struct DetectParams {
    /// Noise floor at k × MAD of the filtered envelope.
    pub noise_floor_k: f64,
    /// Relative floor against the analytic envelope's own 1/s² tails, as a
    /// fraction of the global envelope maximum.
    pub relative_floor: f64,
    /// Spectral fit band (σ_lo, σ_hi); defaults to [0.3/ε, 1.5/ε] from the
    /// pulse when absent.
    pub fit_band: Option<(f64, f64)>,
    /// A-priori bound on |∇_ω s*| used when matching neighbour echoes for
    /// the graph gradient (≈ 2 × scene radius).
    pub graph_slope_cap: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            noise_floor_k: 3.0,
            relative_floor: 0.04,
            fit_band: None,
            graph_slope_cap: 4.0,
        }
    }
}

/// Public wrapper over the detector's envelope, for tests and diagnostics.
pub fn matched_envelope(values: &[f64], ds: f64, pulse: &SourcePulse) -> Vec<f64> {
    envelope(values, ds, pulse).0
}

/// Matched-filter envelope: the Hilbert (analytic-signal) envelope of β,
/// smoothed by correlation with the unit-mass pulse. The kernel's echoes
/// are derivative-of-pulse shaped; the analytic envelope is single-lobed
/// and centred on the arrival regardless of the waveform's phase.
const SMOOTH_FACTOR: f64 = 2.0;

fn envelope(values: &[f64], ds: f64, pulse: &SourcePulse) -> (Vec<f64>, Vec<f64>) {
    // Taper before the FFT-based analytic signal so the envelope's 1/s²
    // tails do not wrap around the grid boundary.
    let window = tukey_window(values.len(), 0.08);
    let tapered: Vec<f64> = values.iter().zip(&window).map(|(v, w)| v * w).collect();
    // Derivative prefilter (σ-weight, rolled off at the pulse band): echoes
    // are conormal singularities with flat-ish spectra inside the band,
    // while the smooth support-edge pedestal concentrates at low σ and
    // would otherwise dominate the envelope.
    let sigma_cut = 3.0 / pulse.epsilon;
    let filtered = crate::math::fft::apply_multiplier(&tapered, ds, 0.0, |sigma| {
        let a = sigma.abs();
        let roll = if a <= 0.8 * sigma_cut {
            1.0
        } else if a >= sigma_cut {
            0.0
        } else {
            let x = (a - 0.8 * sigma_cut) / (0.2 * sigma_cut);
            0.5 * (1.0 + (std::f64::consts::PI * x).cos())
        };
        num_complex::Complex64::new(0.0, sigma * roll)
    });
    let analytic = crate::math::fft::hilbert_envelope(&filtered);
    // Smooth with a doubled-width unit-mass pulse: the analytic envelope of
    // a derivative-shaped band-limited echo ripples at the carrier period
    // (≈ 2ε lobe spacing), which a same-width kernel cannot bridge.
    let smooth = SourcePulse::new(SMOOTH_FACTOR * pulse.epsilon);
    let half = (smooth.half_width() / ds).ceil() as isize;
    let taps: Vec<f64> = (-half..=half).map(|j| smooth.eval(j as f64 * ds) * ds).collect();
    let n = analytic.len();
    let mut out = vec![0.0f64; n];
    for i in 0..n {
        let mut acc = 0.0;
        for (k, w) in taps.iter().enumerate() {
            let j = i as isize + k as isize - half;
            if j >= 0 && (j as usize) < n {
                acc += analytic[j as usize] * w;
            }
        }
        out[i] = acc;
    }
    (out, analytic)
}

/// Detect per-ω echoes and attach graph gradients.
pub fn detect_singular_support(
    data: &RestrictedData,
    pulse: &SourcePulse,
    params: &DetectParams,
) -> Result<SingularSupportCurve, ReconError> {
    let ds = data.s_grid.ds;
    if ds > pulse.epsilon / 2.0 + 1e-12 {
        return Err(ReconError::DetectorUnderresolved { ds, epsilon: pulse.epsilon });
    }

    // Global robust noise floor over the filtered envelopes.
    let pairs: Vec<(Vec<f64>, Vec<f64>)> =
        data.values.iter().map(|tr| envelope(tr, ds, pulse)).collect();
    let envelopes: Vec<&Vec<f64>> = pairs.iter().map(|p| &p.0).collect();
    let analytics: Vec<&Vec<f64>> = pairs.iter().map(|p| &p.1).collect();
    let all: Vec<f64> = envelopes.iter().flat_map(|e| e.iter()).cloned().collect();
    if all.is_empty() {
        return Err(ReconError::InvalidInput { detail: "empty restricted data" });
    }
    let global_max = all.iter().fold(0.0f64, |m, v| m.max(*v));
    let floor = (params.noise_floor_k * mad(&all)).max(params.relative_floor * global_max);

    let min_sep = (2.0 * pulse.half_width() / ds).ceil() as usize;
    let mut peaks: Vec<Vec<EchoPeak>> = Vec::with_capacity(envelopes.len());
    for (oi, env) in envelopes.iter().enumerate() {
        let mut found: Vec<EchoPeak> = Vec::new();
        let n = env.len();
        for i in 1..n - 1 {
            if env[i] <= floor || env[i] < env[i - 1] || env[i] < env[i + 1] {
                continue;
            }
            // local maximum over the separation window
            let lo = i.saturating_sub(min_sep);
            let hi = (i + min_sep).min(n - 1);
            if (lo..=hi).any(|j| env[j] > env[i]) {
                continue;
            }
            let (delta, value) = quadratic_peak(env[i - 1], env[i], env[i + 1]);
            let s_star = data.s_grid.at(i) + delta * ds;
            // width measured on the unsmoothed analytic envelope: the
            // smoothing kernel would otherwise dominate the estimate
            let width = analytic_width(analytics[oi], i, ds);
            let blurred = width < pulse.epsilon || width > 10.0 * pulse.epsilon;
            let decay_slope =
                spectral_slope(&data.values[oi], data.s_grid.ds, i, pulse, params);
            if found.iter().all(|p: &EchoPeak| (p.s - s_star).abs() > pulse.half_width()) {
                found.push(EchoPeak {
                    s: s_star,
                    amplitude: value,
                    width,
                    decay_slope,
                    blurred,
                    grad_s: None,
                    graph_residual: f64::INFINITY,
                });
            }
        }
        found.sort_by(|a, b| a.s.total_cmp(&b.s));
        peaks.push(found);
    }

    // Graph gradients: least-squares fit of s over the one-ring tangent
    // displacements, matching neighbour echoes within one pulse support.
    let grid = &data.omega_grid;
    let mut grads: Vec<Vec<Option<(Vector3<f64>, f64)>>> = Vec::with_capacity(peaks.len());
    for oi in 0..peaks.len() {
        let omega = grid.verts[oi];
        let mut per_echo = Vec::with_capacity(peaks[oi].len());
        for p in &peaks[oi] {
            let mut disp: Vec<Vector3<f64>> = Vec::new();
            let mut dvals: Vec<f64> = Vec::new();
            for &nb in &grid.rings[oi] {
                let delta = sphere_pullback(omega, grid.verts[nb] - omega);
                // the echo graph can move by at most (slope cap)·|δ| between
                // neighbouring directions, plus one pulse width of jitter
                let match_tol =
                    3.0 * pulse.epsilon + params.graph_slope_cap * delta.norm();
                let candidate = peaks[nb]
                    .iter()
                    .map(|q| (q.s, (q.s - p.s).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((s_nb, gap)) = candidate {
                    if gap <= match_tol {
                        disp.push(delta);
                        dvals.push(s_nb - p.s);
                    }
                }
            }
            per_echo.push(tangent_ls_gradient(omega, &disp, &dvals));
        }
        grads.push(per_echo);
    }
    for (oi, per_echo) in grads.into_iter().enumerate() {
        for (ei, g) in per_echo.into_iter().enumerate() {
            if let Some((grad, residual)) = g {
                peaks[oi][ei].grad_s = Some(grad);
                peaks[oi][ei].graph_residual = residual;
            }
        }
    }

    Ok(SingularSupportCurve { peaks, noise_floor: floor, pulse_epsilon: pulse.epsilon })
}

/// Solve min_g Σ (dvals_k − g·disp_k)² for g in the tangent plane at ω;
/// returns the gradient and the RMS fit residual.
fn tangent_ls_gradient(
    omega: Vector3<f64>,
    disp: &[Vector3<f64>],
    dvals: &[f64],
) -> Option<(Vector3<f64>, f64)> {
    if disp.len() < 3 {
        return None;
    }
    let (t1, t2) = crate::sphere::tangent_basis(omega);
    let mut a11 = 0.0;
    let mut a12 = 0.0;
    let mut a22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for (d, &v) in disp.iter().zip(dvals) {
        let u1 = d.dot(&t1);
        let u2 = d.dot(&t2);
        a11 += u1 * u1;
        a12 += u1 * u2;
        a22 += u2 * u2;
        b1 += u1 * v;
        b2 += u2 * v;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-14 {
        return None;
    }
    let g1 = (a22 * b1 - a12 * b2) / det;
    let g2 = (a11 * b2 - a12 * b1) / det;
    let g = g1 * t1 + g2 * t2;
    let mut ss = 0.0;
    for (d, &v) in disp.iter().zip(dvals) {
        let r = v - g.dot(d);
        ss += r * r;
    }
    Some((g, (ss / disp.len() as f64).sqrt()))
}

/// Half-max width of the analytic envelope around the (smoothed-envelope)
/// peak index: find the local analytic maximum near i, then walk out.
fn analytic_width(env: &[f64], i: usize, ds: f64) -> f64 {
    let n = env.len();
    let lo_scan = i.saturating_sub(8);
    let hi_scan = (i + 8).min(n - 1);
    let (center, &peak) = env[lo_scan..=hi_scan]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (lo_scan + k, v))
        .unwrap();
    let half = peak / 2.0;
    let mut lo = center;
    while lo > 0 && env[lo] > half {
        lo -= 1;
    }
    let mut hi = center;
    while hi + 1 < n && env[hi] > half {
        hi += 1;
    }
    (hi - lo) as f64 * ds
}

/// Log–log slope of the windowed spectral magnitude around one echo.
fn spectral_slope(
    trace: &[f64],
    ds: f64,
    center: usize,
    pulse: &SourcePulse,
    params: &DetectParams,
) -> Option<f64> {
    let window_half = (8.0 * pulse.half_width() / ds).ceil() as usize;
    let lo = center.saturating_sub(window_half);
    let hi = (center + window_half).min(trace.len());
    if hi - lo < 16 {
        return None;
    }
    let mut seg: Vec<f64> = trace[lo..hi].to_vec();
    let w = tukey_window(seg.len(), 0.25);
    for (v, wv) in seg.iter_mut().zip(&w) {
        *v *= wv;
    }
    let spec = fft_real(&seg);
    let n = seg.len();
    let (band_lo, band_hi) =
        params.fit_band.unwrap_or((0.3 / pulse.epsilon, 1.5 / pulse.epsilon));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 1..n / 2 {
        let sigma = 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * ds);
        if sigma >= band_lo && sigma <= band_hi {
            let m = spec[k].norm();
            if m > 0.0 {
                xs.push(sigma.ln());
                ys.push(m.ln());
            }
        }
    }
    if xs.len() < 4 {
        return None;
    }
    Some(line_fit(&xs, &ys).slope)
}

impl SingularSupportCurve {
    /// Total number of detected echoes.
    pub fn echo_count(&self) -> usize {
        self.peaks.iter().map(|p| p.len()).sum()
    }

    /// ω indices with no valid detection (legitimate inside tangential
    /// wedges).
    pub fn empty_directions(&self) -> Vec<usize> {
        self.peaks
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_empty())
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::{Cor84Report, RestrictedData, SGrid};
    use crate::sphere::DirGrid;

    fn dummy_report() -> Cor84Report {
        Cor84Report {
            min_phi_omega_angle: std::f64::consts::PI,
            coverage_gap: 0.0,
            min_gauss_dot: 1.0,
            condition1_ok: true,
            condition2_ok: true,
            condition3_ok: true,
        }
    }

    fn synthetic_data(
        level: u32,
        eps: f64,
        echo: impl Fn(Vector3<f64>) -> Vec<(f64, f64)>,
    ) -> (RestrictedData, SourcePulse) {
        let pulse = SourcePulse::new(eps);
        let dpulse = pulse.derivative();
        let grid = DirGrid::icosphere(level);
        let s_grid = SGrid::symmetric(1.5, eps / 2.2);
        let values: Vec<Vec<f64>> = grid
            .verts
            .iter()
            .map(|&omega| {
                let echoes = echo(omega);
                (0..s_grid.n)
                    .map(|i| {
                        let s = s_grid.at(i);
                        echoes.iter().map(|&(s0, a)| a * dpulse.eval(s - s0)).sum()
                    })
                    .collect()
            })
            .collect();
        (
            RestrictedData {
                s_grid,
                omega_grid: grid,
                values,
                pulse_epsilon: eps,
                report: dummy_report(),
            },
            pulse,
        )
    }

    #[test]
    fn zero_data_has_no_peaks() {
        let (mut data, pulse) = synthetic_data(1, 0.05, |_| vec![]);
        for tr in &mut data.values {
            tr.iter_mut().for_each(|v| *v = 0.0);
        }
        let curve =
            detect_singular_support(&data, &pulse, &DetectParams::default()).unwrap();
        assert_eq!(curve.echo_count(), 0);
    }

    #[test]
    fn constant_graph_echo_detected_everywhere() {
        // One echo at s* = −1 for every ω, like a centred sphere.
        let (data, pulse) = synthetic_data(1, 0.05, |_| vec![(-1.0, 1.0)]);
        let curve =
            detect_singular_support(&data, &pulse, &DetectParams::default()).unwrap();
        for (oi, peaks) in curve.peaks.iter().enumerate() {
            assert_eq!(peaks.len(), 1, "omega {oi}");
            assert!((peaks[0].s + 1.0).abs() < data.s_grid.ds, "s = {}", peaks[0].s);
            assert!(!peaks[0].blurred);
            // constant graph: zero gradient
            let g = peaks[0].grad_s.unwrap();
            assert!(g.norm() < 0.05, "gradient {g:?}");
        }
    }

    #[test]
    fn two_echoes_resolved_when_separated() {
        let (data, pulse) = synthetic_data(1, 0.05, |_| vec![(-0.6, 1.0), (0.4, 0.7)]);
        let curve =
            detect_singular_support(&data, &pulse, &DetectParams::default()).unwrap();
        for peaks in &curve.peaks {
            assert_eq!(peaks.len(), 2);
            assert!((peaks[0].s + 0.6).abs() < data.s_grid.ds);
            assert!((peaks[1].s - 0.4).abs() < data.s_grid.ds);
        }
    }

    #[test]
    fn echo_pair_resolution_threshold() {
        // The detector's two-point resolution for this pulse family: echo
        // pairs split at ≥ 10ε separation and merge below ~2ε. Same-phase
        // echoes interfere constructively between their analytic envelopes,
        // so the limit sits well above the nominal pulse width.
        let eps = 0.05;
        let resolved = |sep: f64| -> usize {
            let (data, pulse) =
                synthetic_data(0, eps, move |_| vec![(-sep / 2.0, 1.0), (sep / 2.0, 0.9)]);
            let curve =
                detect_singular_support(&data, &pulse, &DetectParams::default()).unwrap();
            curve.peaks.iter().map(|p| p.len()).max().unwrap()
        };
        assert_eq!(resolved(10.0 * eps), 2);
        assert_eq!(resolved(2.0 * eps), 1);
    }

    #[test]
    fn linear_graph_gradient_is_recovered() {
        // s*(ω) = −2 y₀·ω has tangent gradient −2 i*_ω(y₀).
        let y0 = Vector3::new(0.2, -0.1, 0.3);
        let (data, pulse) = synthetic_data(2, 0.05, |omega| vec![(-2.0 * y0.dot(&omega), 1.0)]);
        let curve =
            detect_singular_support(&data, &pulse, &DetectParams::default()).unwrap();
        let grid = &data.omega_grid;
        let mut checked = 0;
        for (oi, peaks) in curve.peaks.iter().enumerate() {
            if peaks.len() != 1 {
                continue;
            }
            if let Some(g) = peaks[0].grad_s {
                let expect = -2.0 * sphere_pullback(grid.verts[oi], y0);
                assert!(
                    (g - expect).norm() < 0.08,
                    "omega {oi}: got {g:?} expect {expect:?}"
                );
                checked += 1;
            }
        }
        assert!(checked > grid.len() / 2, "only {checked} gradients");
    }

    #[test]
    fn underresolved_grid_is_rejected() {
        let (mut data, pulse) = synthetic_data(0, 0.05, |_| vec![]);
        data.s_grid.ds = pulse.epsilon; // coarser than ε/2
        let err =
            detect_singular_support(&data, &pulse, &DetectParams::default()).unwrap_err();
        assert!(matches!(err, ReconError::DetectorUnderresolved { .. }));
    }
}
