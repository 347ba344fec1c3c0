//! Normal-coordinate profile tables.
//!
//! The oscillatory integrals over the fiber variables are computed once on a
//! fine uniform table by inverse FFT of the sampled symbol, then evaluated
//! by cubic-free linear interpolation (the tables are oversampled well past
//! the band limit, making interpolation error negligible against the 1e-2
//! synthesis tolerance).

use super::ModelProfileKind;
use crate::geom::NestedPair;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Japanese bracket ⟨a⟩ = (1 + |a|²)^{1/2} of a squared norm.
#[inline]
fn bracket_sq(norm_sq: f64) -> f64 {
    (1.0 + norm_sq).sqrt()
}

/// Smooth radial band-limit window: 1 below 0.7·θc, cosine taper to 0 at θc.
fn band_window(r: f64, theta_c: f64) -> f64 {
    let lo = 0.7 * theta_c;
    if r <= lo {
        1.0
    } else if r >= theta_c {
        0.0
    } else {
        let t = (r - lo) / (theta_c - lo);
        0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// Extent of normal coordinates over the pair's domain box (with margin).
pub(crate) fn u_range(pair: &NestedPair) -> f64 {
    let b = &pair.domain_box;
    let corners = [
        [b.min.x, b.min.y, b.min.z],
        [b.min.x, b.min.y, b.max.z],
        [b.min.x, b.max.y, b.min.z],
        [b.min.x, b.max.y, b.max.z],
        [b.max.x, b.min.y, b.min.z],
        [b.max.x, b.min.y, b.max.z],
        [b.max.x, b.max.y, b.min.z],
        [b.max.x, b.max.y, b.max.z],
    ];
    let mut m: f64 = 1.0;
    for c in corners {
        let x = nalgebra::Vector3::new(c[0], c[1], c[2]);
        for h in &pair.h {
            m = m.max(h.value(x).abs());
        }
    }
    1.5 * m
}

/// 1-d profile F(u) on a uniform symmetric table.
#[derive(Debug, Clone)]
pub struct ProfileTable1D {
    u_max: f64,
    du: f64,
    values: Vec<f64>,
}

impl ProfileTable1D {
    /// F(u) = (2π)⁻¹ ∫ ⟨θ⟩^m w(|θ|/θc) e^{iuθ} dθ via FFT.
    pub fn symbol(m: f64, mollify: f64, u_max: f64) -> Self {
        let theta_c = 1.0 / mollify;
        let du = (mollify / 8.0).min(u_max / 256.0);
        let mut n = (2.0 * u_max / du).ceil() as usize;
        n = n.next_power_of_two().clamp(256, 1 << 21);
        let du = 2.0 * u_max / n as f64;
        let dtheta = 2.0 * std::f64::consts::PI / (n as f64 * du);
        let mut spec: Vec<Complex64> = (0..n)
            .map(|k| {
                let k_signed = if k < n / 2 { k as isize } else { k as isize - n as isize };
                let theta = k_signed as f64 * dtheta;
                let a = bracket_sq(theta * theta).powf(m) * band_window(theta.abs(), theta_c);
                Complex64::new(a, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        // ifft includes no 1/N: Σ_k A_k e^{2πijk/N} = F(u_j)·(2π/dθ)/... net
        // F(u_j) = dθ/(2π) · Σ_k A_k e^{iu_jθ_k}, with u_j in signed layout.
        let scale = dtheta / (2.0 * std::f64::consts::PI);
        let mut values = vec![0.0; n];
        for (j, v) in spec.iter().enumerate() {
            let j_signed = if j < n / 2 { j as isize } else { j as isize - n as isize };
            let idx = (j_signed + (n / 2) as isize) as usize;
            values[idx] = v.re * scale;
        }
        ProfileTable1D { u_max, du, values }
    }

    /// Closed-form model profiles, band-limited at scale ε.
    pub fn model(kind: ModelProfileKind, eps: f64, u_max: f64) -> Self {
        let du = eps / 16.0;
        let n = ((2.0 * u_max / du).ceil() as usize).next_power_of_two().clamp(256, 1 << 21);
        let du = 2.0 * u_max / n as f64;
        let u_at = |j: usize| (j as f64 - (n / 2) as f64) * du;
        let values: Vec<f64> = match kind {
            ModelProfileKind::DeltaLayer => {
                let norm = bump_mass() * 3.0 * eps;
                (0..n).map(|j| super::smooth_bump(u_at(j) / (3.0 * eps)) / norm).collect()
            }
            ModelProfileKind::Heaviside => {
                // cumulative integral of the unit-mass layer
                let norm = bump_mass() * 3.0 * eps;
                let mut acc = 0.0;
                (0..n)
                    .map(|j| {
                        acc += super::smooth_bump(u_at(j) / (3.0 * eps)) / norm * du;
                        acc.min(1.0)
                    })
                    .collect()
            }
            ModelProfileKind::PowerLaw { mu } => (0..n)
                .map(|j| {
                    let u = u_at(j);
                    (u * u + eps * eps).powf(-(1.0 + mu) / 2.0)
                })
                .collect(),
        };
        ProfileTable1D { u_max, du, values }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let pos = (u + self.u_max) / self.du;
        if pos < 1.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 2 >= self.values.len() {
            return 0.0;
        }
        let t = pos - i as f64;
        catmull_rom(
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
            t,
        )
    }
}

/// Catmull-Rom cubic through four consecutive samples, evaluated at
/// t ∈ [0, 1] between the middle two.
#[inline]
fn catmull_rom(pm1: f64, p0: f64, p1: f64, p2: f64, t: f64) -> f64 {
    let a = -0.5 * pm1 + 1.5 * p0 - 1.5 * p1 + 0.5 * p2;
    let b = pm1 - 2.5 * p0 + 2.0 * p1 - 0.5 * p2;
    let c = -0.5 * pm1 + 0.5 * p1;
    ((a * t + b) * t + c) * t + p0
}

use crate::math::bump_mass;

/// 2-d nested profile F(u, v) with symbol ⟨θ',θ''⟩^{M1}⟨θ''⟩^{M2}.
#[derive(Debug, Clone)]
pub struct ProfileTable2D {
    u_max: f64,
    du: f64,
    n: usize,
    values: Vec<f64>,
}

impl ProfileTable2D {
    pub fn symbol(m1: f64, m2: f64, mollify: f64, u_max: f64) -> Self {
        let theta_c = 1.0 / mollify;
        let du = (mollify / 6.0).min(u_max / 128.0);
        let mut n = (2.0 * u_max / du).ceil() as usize;
        n = n.next_power_of_two().clamp(128, 2048);
        let du = 2.0 * u_max / n as f64;
        let dtheta = 2.0 * std::f64::consts::PI / (n as f64 * du);

        let signed = |k: usize| -> f64 {
            let k = if k < n / 2 { k as isize } else { k as isize - n as isize };
            k as f64 * dtheta
        };
        let mut spec: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n * n];
        for ku in 0..n {
            let tu = signed(ku);
            for kv in 0..n {
                let tv = signed(kv);
                let r2 = tu * tu + tv * tv;
                let a = bracket_sq(r2).powf(m1)
                    * bracket_sq(tv * tv).powf(m2)
                    * band_window(r2.sqrt(), theta_c);
                spec[ku * n + kv] = Complex64::new(a, 0.0);
            }
        }
        // 2-d inverse FFT by rows then columns.
        let planner_fft = FftPlanner::new().plan_fft_inverse(n);
        for row in spec.chunks_mut(n) {
            planner_fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for kv in 0..n {
            for ku in 0..n {
                col[ku] = spec[ku * n + kv];
            }
            planner_fft.process(&mut col);
            for ku in 0..n {
                spec[ku * n + kv] = col[ku];
            }
        }
        let scale = (dtheta / (2.0 * std::f64::consts::PI)).powi(2);
        let mut values = vec![0.0; n * n];
        let unshift = |j: usize| -> usize {
            let js = if j < n / 2 { j as isize } else { j as isize - n as isize };
            (js + (n / 2) as isize) as usize
        };
        for ju in 0..n {
            for jv in 0..n {
                values[unshift(ju) * n + unshift(jv)] = spec[ju * n + jv].re * scale;
            }
        }
        ProfileTable2D { u_max, du, n, values }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let pu = (u + self.u_max) / self.du;
        let pv = (v + self.u_max) / self.du;
        if pu < 1.0 || pv < 1.0 {
            return 0.0;
        }
        let (iu, iv) = (pu.floor() as usize, pv.floor() as usize);
        if iu + 2 >= self.n || iv + 2 >= self.n {
            return 0.0;
        }
        let (tu, tv) = (pu - iu as f64, pv - iv as f64);
        let at = |a: usize, b: usize| self.values[a * self.n + b];
        let mut rows = [0.0f64; 4];
        for (k, row) in rows.iter_mut().enumerate() {
            let a = iu + k - 1;
            *row = catmull_rom(at(a, iv - 1), at(a, iv), at(a, iv + 1), at(a, iv + 2), tv);
        }
        catmull_rom(rows[0], rows[1], rows[2], rows[3], tu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_layer_has_unit_mass() {
        let p = ProfileTable1D::model(ModelProfileKind::DeltaLayer, 0.05, 2.0);
        let du = 1e-4;
        let mut mass = 0.0;
        let mut u = -0.5;
        while u < 0.5 {
            mass += p.eval(u) * du;
            u += du;
        }
        assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn symbol_profile_is_even_and_decays() {
        let p = ProfileTable1D::symbol(-0.5, 0.0005, 2.0);
        assert_relative_eq!(p.eval(0.3), p.eval(-0.3), epsilon = 1e-12);
        // |u|^{-1/2}-type decay in the asymptotic range: past the band-limit
        // scale but with u ≪ 1 (the Japanese bracket flattens the symbol at
        // low frequency, so the power law holds only near the surface).
        let a = p.eval(0.01).abs();
        let b = p.eval(0.02).abs();
        let c = p.eval(0.04).abs();
        assert!(a > b && b > c, "{a} {b} {c}");
        // ratio close to 2^{-1/2} for the -0.5 order
        assert_relative_eq!(b / a, 0.5f64.sqrt(), epsilon = 0.08);
    }

    #[test]
    fn nested_profile_is_singularmost_at_the_line() {
        let p = ProfileTable2D::symbol(-2.0, -0.5, 0.05, 2.0);
        let at_line = p.eval(0.0, 0.0).abs();
        let on_plane = p.eval(0.0, 0.4).abs();
        let off = p.eval(0.4, 0.4).abs();
        assert!(at_line > on_plane && on_plane > off);
    }
}
