//! Thin FFT helpers over `rustfft`: real-signal transforms, angular
//! frequencies, Tukey windows, and spectral multiplier application on the
//! retarded-time axis.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward FFT of a real signal; returns the full complex spectrum.
pub fn fft_real(signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse FFT returning the real part, normalized by 1/N.
pub fn ifft_to_real(spectrum: &mut [Complex64]) -> Vec<f64> {
    let n = spectrum.len();
    FftPlanner::new().plan_fft_inverse(n).process(spectrum);
    let scale = 1.0 / n as f64;
    spectrum.iter().map(|c| c.re * scale).collect()
}

/// Angular frequencies 2π k / (N Δ) in FFT bin order (signed).
pub fn angular_freqs(n: usize, dx: f64) -> Vec<f64> {
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dx);
    (0..n)
        .map(|k| {
            let k = if k < (n + 1) / 2 { k as isize } else { k as isize - n as isize };
            k as f64 * dw
        })
        .collect()
}

/// Tukey (tapered cosine) window with the given taper fraction per side:
/// 0 at the boundary samples, 1 across the interior.
pub fn tukey_window(n: usize, taper: f64) -> Vec<f64> {
    let a = taper.clamp(0.0, 0.5);
    let edge = (a * n as f64).floor() as usize;
    (0..n)
        .map(|i| {
            let i_rev = n - 1 - i;
            let d = i.min(i_rev);
            if edge == 0 || d >= edge {
                1.0
            } else {
                let x = d as f64 / edge as f64;
                0.5 * (1.0 - (std::f64::consts::PI * x).cos())
            }
        })
        .collect()
}

/// Hilbert (analytic-signal) envelope of a real signal: |x + i H x| by the
/// one-sided spectrum construction.
pub fn hilbert_envelope(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut spec = fft_real(signal);
    for (k, c) in spec.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            // DC and Nyquist stay
        } else if k < (n + 1) / 2 {
            *c *= 2.0;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    spec.iter().map(|c| c.norm() * scale).collect()
}

/// Apply a spectral multiplier m(σ) to a real signal on a uniform grid of
/// spacing `ds`, after a Tukey window with the given taper. Returns the real
/// part of the filtered signal.
pub fn apply_multiplier<M>(signal: &[f64], ds: f64, taper: f64, multiplier: M) -> Vec<f64>
where
    M: Fn(f64) -> Complex64,
{
    let n = signal.len();
    let window = tukey_window(n, taper);
    let windowed: Vec<f64> = signal.iter().zip(&window).map(|(v, w)| v * w).collect();
    let mut spec = fft_real(&windowed);
    for (c, sigma) in spec.iter_mut().zip(angular_freqs(n, ds)) {
        *c *= multiplier(sigma);
    }
    ifft_to_real(&mut spec)
}
