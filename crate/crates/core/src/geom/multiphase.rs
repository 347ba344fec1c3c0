//! Multiphase functions for the pairs (Λ_{i+}, flowout of Σ_i): the phase
//! φ(x, t, ω; θ, σ, s) solving
//!
//! ```text
//!   ∂φ/∂s = p(d_x φ, ∂φ/∂t),   p(ξ, τ) = |ξ|²/τ − τ,
//!   φ|_{s=0} = φ₀ = H⃗(x)·θ + (t − x·ω) σ,
//! ```
//!
//! where H⃗ collects the defining functions of S1 (or of S2). Since p is
//! homogeneous of degree one, φ is constant along characteristics and the
//! solution is φ₀ pulled back through the backtracked foot point
//!
//! ```text
//!   x° = x + (2ξ/σ) s,   t° = t − (|ξ|²/σ² + 1) s,   ξ = d_x φ₀.
//! ```
//!
//! Two independent evaluation routes are kept: a fixed-step fourth-order
//! integration of the characteristic system (dx/dr = −2ξ/τ,
//! dt/dr = |ξ|²/τ² + 1, dξ/dr = dτ/dr = 0, run from the foot to the query)
//! and the closed form above. The system is constant-coefficient, so the
//! integrator is exact up to roundoff for polynomial H⃗ — and is still
//! cross-checked against the closed form and the Hamilton–Jacobi residual.

use super::{GeomError, NestedPair, Which};
use nalgebra::Vector3;

/// Which evaluation route produced a [`MultiphaseResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiphaseMethod {
    CharacteristicOde,
    ClosedForm,
}

/// Value and first partials of the multiphase at one evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct MultiphaseResult {
    pub phi: f64,
    pub grad_x: Vector3<f64>,
    pub dphi_dt: f64,
    pub dphi_ds: f64,
    pub method: MultiphaseMethod,
}

impl MultiphaseResult {
    /// |∂φ/∂s − p(d_xφ, ∂φ/∂t)|, the Hamilton–Jacobi residual.
    pub fn hj_residual(&self) -> f64 {
        let p = self.grad_x.norm_squared() / self.dphi_dt - self.dphi_dt;
        (self.dphi_ds - p).abs()
    }
}

/// Both evaluation routes at one point.
#[derive(Debug, Clone, Copy)]
pub struct MultiphaseSolution {
    pub ode: MultiphaseResult,
    pub closed_form: MultiphaseResult,
}

impl MultiphaseSolution {
    /// Relative disagreement between the two routes.
    pub fn route_gap(&self) -> f64 {
        let scale = self.closed_form.phi.abs().max(1.0);
        (self.ode.phi - self.closed_form.phi).abs() / scale
    }
}

struct PhaseSetup<'a> {
    pair: &'a NestedPair,
    k: usize,
    theta: Vec<f64>,
    sigma: f64,
    omega: Vector3<f64>,
}

impl PhaseSetup<'_> {
    /// φ₀(x, t) = H⃗(x)·θ + (t − x·ω)σ.
    fn phi0(&self, x: Vector3<f64>, t: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.k {
            acc += self.pair.h[i].value(x) * self.theta[i];
        }
        acc + (t - x.dot(&self.omega)) * self.sigma
    }

    /// d_x φ₀ with the analytic gradients of the defining functions.
    fn grad_phi0(&self, x: Vector3<f64>) -> Vector3<f64> {
        let mut g = -self.sigma * self.omega;
        for i in 0..self.k {
            g += self.theta[i] * self.pair.h[i].gradient(x);
        }
        g
    }
}

/// Solve the multiphase initial value problem at (x, t, ω; θ, σ, s) for the
/// pair selected by `which` (S1 uses the first d1 defining functions, S2 all
/// of them). Returns both the characteristic-ODE and closed-form results.
pub fn multiphase_solve(
    pair: &NestedPair,
    which: Which,
    x: Vector3<f64>,
    t: f64,
    omega: Vector3<f64>,
    theta: &[f64],
    sigma: f64,
    s: f64,
    integrator_steps: usize,
) -> Result<MultiphaseSolution, GeomError> {
    if sigma.abs() < 1e-12 {
        return Err(GeomError::SigmaZero);
    }
    let k = pair.codim(which);
    if theta.len() != k {
        return Err(GeomError::InvalidChart { detail: "theta dimension mismatch" });
    }
    let setup =
        PhaseSetup { pair, k, theta: theta.to_vec(), sigma, omega };

    let eval_closed = |x: Vector3<f64>, t: f64, s: f64| closed_form_phi(&setup, x, t, s);
    let eval_ode =
        |x: Vector3<f64>, t: f64, s: f64| ode_phi(&setup, x, t, s, integrator_steps.max(1));

    let closed = with_fd_partials(eval_closed, x, t, s, MultiphaseMethod::ClosedForm);
    let ode = with_fd_partials(eval_ode, x, t, s, MultiphaseMethod::CharacteristicOde);
    Ok(MultiphaseSolution { ode, closed_form: closed })
}

/// Closed form: φ = φ₀(x + (2ξ/σ)s, t − (|ξ|²/σ² + 1)s) with ξ = d_xφ₀(x).
fn closed_form_phi(setup: &PhaseSetup, x: Vector3<f64>, t: f64, s: f64) -> f64 {
    let xi = setup.grad_phi0(x);
    let sigma = setup.sigma;
    let foot_x = x + (2.0 / sigma) * s * xi;
    let foot_t = t - (xi.norm_squared() / (sigma * sigma) + 1.0) * s;
    setup.phi0(foot_x, foot_t)
}

/// Characteristic route: integrate (dx/dr, dt/dr, dξ/dr, dτ/dr) =
/// (−2ξ/τ, |ξ|²/τ² + 1, 0, 0) from the query point backwards over [s, 0]
/// with classical RK4, then evaluate φ₀ at the foot.
fn ode_phi(setup: &PhaseSetup, x: Vector3<f64>, t: f64, s: f64, steps: usize) -> f64 {
    let xi = setup.grad_phi0(x);
    let tau = setup.sigma;
    let rhs = |state: [f64; 4]| -> [f64; 4] {
        let _ = state;
        let q = xi.norm_squared() / (tau * tau);
        [-2.0 * xi.x / tau, -2.0 * xi.y / tau, -2.0 * xi.z / tau, q + 1.0]
    };
    // Backwards: step −s/N from the query point to the foot.
    let n = steps;
    let h = -s / n as f64;
    let mut state = [x.x, x.y, x.z, t];
    for _ in 0..n {
        state = rk4_step(state, h, &rhs);
    }
    let foot_x = Vector3::new(state[0], state[1], state[2]);
    setup.phi0(foot_x, state[3])
}

fn rk4_step<F: Fn([f64; 4]) -> [f64; 4]>(y: [f64; 4], h: f64, f: &F) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], c: f64| {
        [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]]
    };
    let k1 = f(y);
    let k2 = f(add(y, k1, h / 2.0));
    let k3 = f(add(y, k2, h / 2.0));
    let k4 = f(add(y, k3, h));
    let mut out = y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Evaluate φ and its partials by central differences of the evaluation
/// route itself (the residual check must see the construction, not a
/// restatement of it).
fn with_fd_partials<F>(eval: F, x: Vector3<f64>, t: f64, s: f64, method: MultiphaseMethod) -> MultiphaseResult
where
    F: Fn(Vector3<f64>, f64, f64) -> f64,
{
    let h = 1e-5;
    let phi = eval(x, t, s);
    let mut grad_x = Vector3::zeros();
    for i in 0..3 {
        let mut dp = Vector3::zeros();
        dp[i] = h;
        grad_x[i] = (eval(x + dp, t, s) - eval(x - dp, t, s)) / (2.0 * h);
    }
    let dphi_dt = (eval(x, t + h, s) - eval(x, t - h, s)) / (2.0 * h);
    let dphi_ds = (eval(x, t, s + h) - eval(x, t, s - h)) / (2.0 * h);
    MultiphaseResult { phi, grad_x, dphi_dt, dphi_ds, method }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_condition_at_s_zero() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let x = Vector3::new(0.3, -0.4, 0.8);
        let t = 0.7;
        let omega = Vector3::new(0.48, 0.6, 0.64).normalize();
        let sol =
            multiphase_solve(&pair, Which::S1, x, t, omega, &[1.3], 0.8, 0.0, 128).unwrap();
        let phi0 = 1.3 * x.z + (t - x.dot(&omega)) * 0.8;
        assert_relative_eq!(sol.closed_form.phi, phi0, epsilon = 1e-10);
        assert_relative_eq!(sol.ode.phi, phi0, epsilon = 1e-10);
    }

    #[test]
    fn ode_matches_closed_form_on_plane() {
        // Plane S1 = {x3 = 0}, θ = 1, σ = 1, x = (0,0,1), t = 0, ω = e3,
        // s = 0.3: both routes agree; the closed form is the oracle.
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let sol = multiphase_solve(
            &pair,
            Which::S1,
            Vector3::new(0.0, 0.0, 1.0),
            0.0,
            Vector3::z(),
            &[1.0],
            1.0,
            0.3,
            128,
        )
        .unwrap();
        assert!(sol.route_gap() < 1e-12);
        assert_relative_eq!(sol.closed_form.phi, -0.3, epsilon = 1e-12);
    }

    #[test]
    fn hamilton_jacobi_residual_small_at_random_points() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let omega = crate::sphere::random_unit(&mut rng);
            let theta = rng.gen_range(0.5..2.0);
            let sigma = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let s = rng.gen_range(-0.5..0.5);
            let t = rng.gen_range(-1.0..1.0);
            let sol =
                multiphase_solve(&pair, Which::S1, x, t, omega, &[theta], sigma, s, 128).unwrap();
            assert!(sol.closed_form.hj_residual() < 1e-6, "{:?}", sol.closed_form);
            assert!(sol.ode.hj_residual() < 1e-6, "{:?}", sol.ode);
            assert!(sol.route_gap() < 1e-8);
        }
    }

    #[test]
    fn s2_pair_uses_both_defining_functions() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let x = Vector3::new(0.1, 0.5, 0.4);
        let omega = Vector3::new(0.0, 0.6, 0.8);
        let sol =
            multiphase_solve(&pair, Which::S2, x, 0.2, omega, &[0.7, -1.1], 1.3, 0.25, 64)
                .unwrap();
        assert!(sol.route_gap() < 1e-10);
        assert!(sol.closed_form.hj_residual() < 1e-6);
        // dimension mismatch is rejected
        assert!(matches!(
            multiphase_solve(&pair, Which::S2, x, 0.2, omega, &[0.7], 1.3, 0.25, 64),
            Err(GeomError::InvalidChart { .. })
        ));
    }

    #[test]
    fn sigma_zero_is_rejected() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let err = multiphase_solve(
            &pair,
            Which::S1,
            Vector3::zeros(),
            0.0,
            Vector3::z(),
            &[1.0],
            0.0,
            0.1,
            64,
        )
        .unwrap_err();
        assert_eq!(err, GeomError::SigmaZero);
    }
}
