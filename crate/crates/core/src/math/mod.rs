//! Small numerical helpers shared across modules: least-squares line fits,
//! robust noise floors, sub-sample peak refinement, singular-value ranks.

pub mod fft;

use nalgebra::DMatrix;

/// Slope/intercept/residual of an ordinary least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

/// Least-squares line through (x_i, y_i). Panics on fewer than two points.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "line_fit needs >= 2 points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    LineFit { slope, intercept, rms_residual: (ss / n).sqrt() }
}

/// Median of a slice (not in place).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Median absolute deviation, the robust noise-floor unit used by the
/// echo detector.
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Refine a discrete argmax by fitting a parabola through the sample and its
/// two neighbours. Returns the sub-sample offset in [-0.5, 0.5] and the
/// interpolated peak value.
pub fn quadratic_peak(ym1: f64, y0: f64, yp1: f64) -> (f64, f64) {
    let denom = ym1 - 2.0 * y0 + yp1;
    if denom.abs() < 1e-300 {
        return (0.0, y0);
    }
    let delta = 0.5 * (ym1 - yp1) / denom;
    let delta = delta.clamp(-0.5, 0.5);
    let value = y0 - 0.25 * (ym1 - yp1) * delta;
    (delta, value)
}

/// Numerical rank of a matrix: singular values below `tol` times the largest
/// count as zero.
pub fn svd_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Smallest singular value of a matrix.
pub fn svd_min(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Split scalar samples into two clusters by 1-d 2-means. Returns
/// (lower-mean, upper-mean, assignments, separation), where assignment 0 is
/// the lower cluster. Deterministic: seeded from the extremes.
pub fn two_means_1d(values: &[f64]) -> (f64, f64, Vec<usize>, f64) {
    assert!(values.len() >= 2);
    let mut c0 = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut c1 = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut assign = vec![0usize; values.len()];
    for _ in 0..64 {
        for (i, &v) in values.iter().enumerate() {
            assign[i] = if (v - c0).abs() <= (v - c1).abs() { 0 } else { 1 };
        }
        let mut s = [0.0f64; 2];
        let mut n = [0usize; 2];
        for (i, &v) in values.iter().enumerate() {
            s[assign[i]] += v;
            n[assign[i]] += 1;
        }
        let n0 = if n[0] == 0 { 1 } else { n[0] };
        let n1 = if n[1] == 0 { 1 } else { n[1] };
        let new0 = if n[0] == 0 { c0 } else { s[0] / n0 as f64 };
        let new1 = if n[1] == 0 { c1 } else { s[1] / n1 as f64 };
        if (new0 - c0).abs() + (new1 - c1).abs() < 1e-14 {
            c0 = new0;
            c1 = new1;
            break;
        }
        c0 = new0;
        c1 = new1;
    }
    (c0, c1, assign, (c1 - c0).abs())
}

/// Standard normal sample via Box-Muller; two uniforms in, one normal out.
pub fn normal_sample<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// C∞ bump g(s) = exp(1 − 1/(1 − s²)) for |s| < 1, identically 0 outside.
#[inline]
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// First derivative of [`bump`].
#[inline]
pub fn bump_deriv(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s2;
        bump(s) * (-2.0 * s / (d * d))
    }
}

/// Second derivative of [`bump`].
#[inline]
pub fn bump_deriv2(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s2;
        let a = -2.0 * s / (d * d);
        // g'' = g (a² + a') with a' = −2/d² − 8s²/d³
        bump(s) * (a * a - 2.0 / (d * d) - 8.0 * s2 / (d * d * d))
    }
}

/// C∞ plateau cutoff: 1 for |t| ≤ 0.8, smooth monotone roll to 0 at |t| = 1,
/// identically 0 beyond. Used as the compact-support amplitude factor so
/// the cutoff plateau leaves the interior field untouched.
pub fn plateau_cutoff(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.8 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        // normalized C∞ step built from the bump
        let x = (a - 0.8) / 0.2; // 0 → 1 across the roll
        1.0 - bump_step(x)
    }
}

/// ∫₀^x-normalized C∞ step: 0 at 0, 1 at 1, flat derivatives at both ends.
fn bump_step(x: f64) -> f64 {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let n = 2048;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for i in 0..n {
            let s = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            acc += bump(s);
            out.push(acc);
        }
        let total = acc;
        for v in &mut out {
            *v /= total;
        }
        out
    });
    let pos = x.clamp(0.0, 1.0) * (table.len() - 1) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= table.len() {
        return 1.0;
    }
    let t = pos - i as f64;
    table[i] * (1.0 - t) + table[i + 1] * t
}

/// ∫_{-1}^{1} bump(s) ds, computed once to full precision.
pub fn bump_mass() -> f64 {
    use std::sync::OnceLock;
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 1 << 14;
        let h = 2.0 / n as f64;
        (0..n).map(|i| bump(-1.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.5 * x).collect();
        let f = line_fit(&xs, &ys);
        assert_relative_eq!(f.slope, -2.5, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 3.0, epsilon = 1e-12);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn quadratic_peak_centers_parabola() {
        // y = 1 - (x - 0.3)^2 sampled at x = -1, 0, 1.
        let f = |x: f64| 1.0 - (x - 0.3) * (x - 0.3);
        let (d, v) = quadratic_peak(f(-1.0), f(0.0), f(1.0));
        assert_relative_eq!(d, 0.3, epsilon = 1e-12);
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mad_is_robust_to_outliers() {
        let mut v = vec![1.0; 100];
        v[0] = 1e6;
        assert_eq!(mad(&v), 0.0);
    }

    #[test]
    fn rank_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        assert_eq!(svd_rank(&m, 1e-8), 2);
    }

    #[test]
    fn two_means_separates_clusters() {
        let v = [0.9, 1.1, 1.0, 5.2, 4.8, 5.0];
        let (c0, c1, assign, sep) = two_means_1d(&v);
        assert!(c0 < 1.2 && c1 > 4.7 && sep > 3.0);
        assert_eq!(&assign[..3], &[0, 0, 0]);
        assert_eq!(&assign[3..], &[1, 1, 1]);
    }
}
