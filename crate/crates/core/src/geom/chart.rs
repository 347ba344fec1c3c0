//! Parametrized Lagrangian charts.
//!
//! Each chart kind realizes one of the phase-space parametrizations the
//! scattering analysis runs on:
//!
//! * `Plus` — the incident-wavefront Lagrangian over {t = x·ω}.
//! * `OnePlus` / `TwoPlus` — conormal bundles of S_{1+}, S_{2+} (fiber ν,
//!   free σ).
//! * `FlowoutA` / `FlowoutC` — Hamiltonian flowouts of the characteristic
//!   sets Σ₁, Σ₂: base (y − r(ν−σω), y·ω + rσ), cotangent (ν−σω, σ, −σ i*_ω y)
//!   with σ = |ν|²/(2ν·ω). The time component advances by rσ per unit flow
//!   parameter so the base path is a genuine bicharacteristic of
//!   H = −ξ·∂_x + τ·∂_t.
//! * `ReflectedA` / `ReflectedC` — images over the data space R × S² × S²
//!   after the Radon-type transform and large-time restriction.
//! * `BackscatterA` / `BackscatterC` — restrictions to the backscattering
//!   surface, over R × S².
//!
//! Data-space charts reuse the spacetime slots of [`PhasePoint`]; which slots
//! are meaningful is recorded in [`SlotUsage`].

use super::{sigma_of, GeomError, NestedPair, PhasePoint, Which, TANGENCY_TOL};
use crate::sphere::{sphere_pullback, tangent_basis};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Which chart family a [`LagrangianChart`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartKind {
    Plus,
    OnePlus,
    TwoPlus,
    FlowoutA,
    FlowoutC,
    ReflectedA,
    ReflectedC,
    BackscatterA,
    BackscatterC,
}

impl ChartKind {
    /// Which submanifold the chart's fiber parameter lives over (None for
    /// the free `Plus` chart).
    pub fn which(self) -> Option<Which> {
        match self {
            ChartKind::Plus => None,
            ChartKind::OnePlus | ChartKind::FlowoutA | ChartKind::ReflectedA
            | ChartKind::BackscatterA => Some(Which::S1),
            ChartKind::TwoPlus | ChartKind::FlowoutC | ChartKind::ReflectedC
            | ChartKind::BackscatterC => Some(Which::S2),
        }
    }

    /// How the returned [`PhasePoint`] slots are to be read.
    pub fn slots(self) -> SlotUsage {
        match self {
            ChartKind::ReflectedA | ChartKind::ReflectedC => SlotUsage::DataReflected,
            ChartKind::BackscatterA | ChartKind::BackscatterC => SlotUsage::DataBackscatter,
            _ => SlotUsage::Spacetime,
        }
    }

    /// Dimension of the chart's parameter manifold (= chart dimension).
    pub fn param_dim(self, pair: &NestedPair) -> usize {
        let (d1, d2) = (pair.d1, pair.d2);
        match self {
            ChartKind::Plus => 6,
            ChartKind::OnePlus | ChartKind::TwoPlus => 6,
            ChartKind::FlowoutA | ChartKind::FlowoutC => 6,
            ChartKind::ReflectedA | ChartKind::ReflectedC => 5,
            ChartKind::BackscatterA => (3 - d1) + d1, // = n
            ChartKind::BackscatterC => (3 - d1 - d2) + d1 + d2,
        }
    }
}

/// Interpretation of the [`PhasePoint`] slots returned by a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotUsage {
    /// (x, t, ω; ξ, τ, Ω) on R³ × R × S².
    Spacetime,
    /// Reflected charts on R × S² × S²: x-slot = outgoing direction φ,
    /// t-slot = retarded time s, ξ-slot = Φ (cotangent to φ), τ, Ω as usual.
    DataReflected,
    /// Backscatter charts on R × S²: t-slot = s, ω-slot = ν̂, τ = |ν|,
    /// Ω = |ν| i*_ν̂(y); x and ξ slots are zeroed.
    DataBackscatter,
}

/// Parameter tuple of a chart; entries are used per kind.
#[derive(Debug, Clone, Copy)]
pub struct ChartParams {
    /// Base point: on S1/S2 for fibered kinds, free for `Plus`.
    pub y: Vector3<f64>,
    /// Conormal covector at y (unused for `Plus`).
    pub nu: Vector3<f64>,
    /// Incident direction (unused for backscatter kinds).
    pub omega: Vector3<f64>,
    /// Flow parameter (flowout kinds only; must be nonzero there).
    pub r: f64,
    /// Free cotangent scale for `Plus`/`OnePlus`/`TwoPlus`; ignored where σ
    /// is determined by the characteristic condition.
    pub sigma: f64,
}

impl Default for ChartParams {
    fn default() -> Self {
        ChartParams {
            y: Vector3::zeros(),
            nu: Vector3::zeros(),
            omega: Vector3::z(),
            r: 1.0,
            sigma: 1.0,
        }
    }
}

/// A chart kind bound to a nested pair and a parameter point.
#[derive(Clone)]
pub struct LagrangianChart<'a> {
    pub kind: ChartKind,
    pub pair: &'a NestedPair,
    pub params: ChartParams,
    pub tangency_tol: f64,
}

impl<'a> LagrangianChart<'a> {
    pub fn new(kind: ChartKind, pair: &'a NestedPair, params: ChartParams) -> Self {
        LagrangianChart { kind, pair, params, tangency_tol: TANGENCY_TOL }
    }

    /// Evaluate the chart at its parameter point.
    pub fn point(&self) -> Result<PhasePoint, GeomError> {
        chart_point(self.kind, self.pair, &self.params, self.tangency_tol)
    }
}

/// Evaluate a chart parametrization. See the module docs for the formulas.
pub fn chart_point(
    kind: ChartKind,
    pair: &NestedPair,
    params: &ChartParams,
    tangency_tol: f64,
) -> Result<PhasePoint, GeomError> {
    let omega = params.omega;
    if kind != ChartKind::BackscatterA && kind != ChartKind::BackscatterC {
        if (omega.norm() - 1.0).abs() > 1e-9 {
            return Err(GeomError::InvalidChart { detail: "omega must be unit" });
        }
    }

    let point = match kind {
        ChartKind::Plus => {
            let x = params.y;
            let sigma = params.sigma;
            if sigma.abs() < 1e-12 {
                return Err(GeomError::ZeroSection);
            }
            PhasePoint {
                x,
                t: x.dot(&omega),
                omega,
                xi: -sigma * omega,
                tau: sigma,
                cap_omega: -sigma * sphere_pullback(omega, x),
                slots: SlotUsage::Spacetime,
            }
        }
        ChartKind::OnePlus | ChartKind::TwoPlus => {
            let which = kind.which().unwrap();
            let (y, nu) = fiber_checked(pair, which, params)?;
            let sigma = params.sigma;
            if sigma.abs() < 1e-12 {
                return Err(GeomError::InvalidChart { detail: "sigma must be nonzero" });
            }
            PhasePoint {
                x: y,
                t: y.dot(&omega),
                omega,
                xi: nu - sigma * omega,
                tau: sigma,
                cap_omega: -sigma * sphere_pullback(omega, y),
                slots: SlotUsage::Spacetime,
            }
        }
        ChartKind::FlowoutA | ChartKind::FlowoutC => {
            let which = kind.which().unwrap();
            let (y, nu) = fiber_checked(pair, which, params)?;
            if params.r == 0.0 {
                return Err(GeomError::InvalidChart { detail: "flowout requires r != 0" });
            }
            let sigma = sigma_of(nu, omega, tangency_tol)?;
            let xi = nu - sigma * omega;
            PhasePoint {
                x: y - params.r * xi,
                t: y.dot(&omega) + params.r * sigma,
                omega,
                xi,
                tau: sigma,
                cap_omega: -sigma * sphere_pullback(omega, y),
                slots: SlotUsage::Spacetime,
            }
        }
        ChartKind::ReflectedA | ChartKind::ReflectedC => {
            let which = kind.which().unwrap();
            let (y, nu) = fiber_checked(pair, which, params)?;
            let sigma = sigma_of(nu, omega, tangency_tol)?;
            // On the characteristic set (ν − σω)/σ is a unit vector.
            let phi = -(nu - sigma * omega) / sigma;
            PhasePoint {
                x: phi,
                t: -y.dot(&(-phi + omega)),
                omega,
                xi: -sigma * sphere_pullback(phi, y),
                tau: sigma,
                cap_omega: sigma * sphere_pullback(omega, y),
                slots: SlotUsage::DataReflected,
            }
        }
        ChartKind::BackscatterA | ChartKind::BackscatterC => {
            let which = kind.which().unwrap();
            let (y, nu) = fiber_checked(pair, which, params)?;
            let norm = nu.norm();
            let nu_hat = nu / norm;
            PhasePoint {
                x: Vector3::zeros(),
                t: -2.0 * y.dot(&nu_hat),
                omega: nu_hat,
                xi: Vector3::zeros(),
                tau: norm,
                cap_omega: norm * sphere_pullback(nu_hat, y),
                slots: SlotUsage::DataBackscatter,
            }
        }
    };
    point.validate()?;
    Ok(point)
}

/// Check y is on the submanifold and ν is a nonzero covector in its fiber.
fn fiber_checked(
    pair: &NestedPair,
    which: Which,
    params: &ChartParams,
) -> Result<(Vector3<f64>, Vector3<f64>), GeomError> {
    let nu = params.nu;
    if nu.norm() < 1e-12 {
        return Err(GeomError::ZeroSection);
    }
    let basis = pair.conormal_fiber(params.y, which)?;
    let mut rem = nu;
    for b in &basis {
        rem -= rem.dot(b) * *b;
    }
    if rem.norm() > 1e-8 * nu.norm() {
        return Err(GeomError::InvalidChart { detail: "nu not in the conormal fiber" });
    }
    Ok((params.y, nu))
}

/// Local coordinates on a chart's parameter manifold around a base point.
///
/// Returns the parameter dimension and a map from local coordinates
/// u ∈ R^dim to the chart's phase point; the map retracts surface motions
/// back onto S1/S2 by Newton projection and keeps fiber coefficients
/// expressed against the (smoothly varying) Gram-Schmidt fiber frame. Used
/// by the finite-difference rank machinery.
pub fn chart_local_map<'a>(
    kind: ChartKind,
    pair: &'a NestedPair,
    base: &ChartParams,
    tangency_tol: f64,
) -> Result<(usize, Box<dyn Fn(&[f64]) -> Result<PhasePoint, GeomError> + 'a>), GeomError> {
    let base = *base;
    match kind {
        ChartKind::Plus => {
            let (w1, w2) = tangent_basis(base.omega);
            let map = move |u: &[f64]| {
                let mut p = base;
                p.y += Vector3::new(u[0], u[1], u[2]);
                p.omega = (base.omega + u[3] * w1 + u[4] * w2).normalize();
                p.sigma += u[5];
                chart_point(kind, pair, &p, tangency_tol)
            };
            Ok((6, Box::new(map)))
        }
        _ => {
            let which = kind.which().unwrap();
            let surf_basis = pair.tangent_space(base.y, which)?;
            let fiber0 = pair.conormal_fiber(base.y, which)?;
            let coeffs0: Vec<f64> = fiber0.iter().map(|b| b.dot(&base.nu)).collect();
            let n_surf = surf_basis.len();
            let n_fib = fiber0.len();
            let (w1, w2) = tangent_basis(base.omega);
            let has_omega = kind.slots() != SlotUsage::DataBackscatter;
            let has_r = matches!(kind, ChartKind::FlowoutA | ChartKind::FlowoutC);
            let has_sigma = matches!(kind, ChartKind::OnePlus | ChartKind::TwoPlus);
            let dim = n_surf
                + n_fib
                + if has_omega { 2 } else { 0 }
                + usize::from(has_r)
                + usize::from(has_sigma);
            let map = move |u: &[f64]| {
                let mut k = 0;
                let mut y = base.y;
                for b in &surf_basis {
                    y += u[k] * *b;
                    k += 1;
                }
                let y = pair.project(which, y)?;
                let fiber = pair.conormal_fiber(y, which)?;
                let mut nu = Vector3::zeros();
                for (j, b) in fiber.iter().enumerate() {
                    nu += (coeffs0[j] + u[k]) * *b;
                    k += 1;
                }
                let mut p = base;
                p.y = y;
                p.nu = nu;
                if has_omega {
                    p.omega = (base.omega + u[k] * w1 + u[k + 1] * w2).normalize();
                    k += 2;
                }
                if has_r {
                    p.r += u[k];
                    k += 1;
                }
                if has_sigma {
                    p.sigma += u[k];
                }
                chart_point(kind, pair, &p, tangency_tol)
            };
            Ok((dim, Box::new(map)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn backscatter_point_on_sphere() {
        // Sphere S1 = {|x| = 0.5}, y = (0,0,0.5), ν = e3:
        // (s, φ; τ, Ω) = (−1, (0,0,1); 1, 0).
        let pair = NestedPair::sphere(Vector3::zeros(), 0.5, 1.0);
        let params = ChartParams {
            y: Vector3::new(0.0, 0.0, 0.5),
            nu: Vector3::z(),
            ..Default::default()
        };
        let p = chart_point(ChartKind::BackscatterA, &pair, &params, TANGENCY_TOL).unwrap();
        assert_relative_eq!(p.t, -1.0, epsilon = 1e-14);
        assert_relative_eq!((p.omega - Vector3::z()).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(p.tau, 1.0, epsilon = 1e-14);
        assert!(p.cap_omega.norm() < 1e-14);
        assert_eq!(p.slots, SlotUsage::DataBackscatter);
    }

    #[test]
    fn flowout_point_on_plane() {
        // Plane {x3 = 0}, y = 0, ν = e3, ω = e3, r = 2: σ = 1/2,
        // ξ = (0,0,1/2), x = (0,0,−1), t = rσ = 1.
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let params = ChartParams {
            y: Vector3::zeros(),
            nu: Vector3::z(),
            omega: Vector3::z(),
            r: 2.0,
            sigma: 0.0,
        };
        let p = chart_point(ChartKind::FlowoutA, &pair, &params, TANGENCY_TOL).unwrap();
        assert_relative_eq!(p.tau, 0.5, epsilon = 1e-14);
        assert_relative_eq!((p.xi - Vector3::new(0.0, 0.0, 0.5)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((p.x - Vector3::new(0.0, 0.0, -1.0)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(p.t, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn one_plus_zero_covector_is_rejected() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let params =
            ChartParams { y: Vector3::zeros(), nu: Vector3::zeros(), ..Default::default() };
        let err = chart_point(ChartKind::OnePlus, &pair, &params, TANGENCY_TOL).unwrap_err();
        assert_eq!(err, GeomError::ZeroSection);
    }

    #[test]
    fn flowout_rejects_tangential_and_zero_r() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut params = ChartParams {
            y: Vector3::zeros(),
            nu: Vector3::z(),
            omega: Vector3::x(),
            r: 1.0,
            sigma: 0.0,
        };
        assert!(matches!(
            chart_point(ChartKind::FlowoutA, &pair, &params, TANGENCY_TOL),
            Err(GeomError::TangentialRay { .. })
        ));
        params.omega = Vector3::z();
        params.r = 0.0;
        assert!(matches!(
            chart_point(ChartKind::FlowoutA, &pair, &params, TANGENCY_TOL),
            Err(GeomError::InvalidChart { .. })
        ));
    }

    #[test]
    fn characteristic_membership_of_flowout_and_reflected() {
        // |ξ|² = τ² along flowouts; reflected charts have |φ| = 1.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        for _ in 0..50 {
            let y = pair.sample_surface(Which::S1, 1, &mut rng)[0];
            let omega = super::super::sample_nontangential_omega(&pair, y, Which::S1, 0.05, &mut rng).unwrap();
            let nu = super::super::sample_nontangential_fiber(&pair, y, Which::S1, omega, 0.05, &mut rng).unwrap();
            let params = ChartParams { y, nu, omega, r: 0.7, sigma: 0.0 };
            let p = chart_point(ChartKind::FlowoutA, &pair, &params, TANGENCY_TOL).unwrap();
            assert_relative_eq!(p.xi.norm_squared(), p.tau * p.tau, epsilon = 1e-10);
            let q = chart_point(ChartKind::ReflectedA, &pair, &params, TANGENCY_TOL).unwrap();
            assert_relative_eq!(q.x.norm(), 1.0, epsilon = 1e-10);
            // Φ ⊥ φ and Ω ⊥ ω
            assert!(q.xi.dot(&q.x).abs() < 1e-10);
            assert!(q.cap_omega.dot(&q.omega).abs() < 1e-10);
        }
    }

    #[test]
    fn flowout_translation_consistency() {
        // The r-flow translates (x, t) by r·(−(ν−σω), σ) and fixes (ξ, τ, Ω).
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let y = Vector3::new(0.3, -0.2, 0.0);
        let nu = Vector3::new(0.0, 0.0, 1.4);
        let omega = Vector3::new(0.1, -0.3, 0.9).normalize();
        let mk = |r: f64| ChartParams { y, nu, omega, r, sigma: 0.0 };
        let r = 1.7;
        let p = chart_point(ChartKind::FlowoutA, &pair, &mk(r), TANGENCY_TOL).unwrap();
        let p0 = chart_point(ChartKind::FlowoutA, &pair, &mk(1e-9), TANGENCY_TOL).unwrap();
        let sigma = p.tau;
        let xi = p.xi;
        assert!((p.x - (p0.x - r * xi)).norm() < 1e-9);
        assert_relative_eq!(p.t, p0.t + r * sigma, epsilon = 1e-9);
        assert!((p.xi - p0.xi).norm() < 1e-12);
        assert!((p.cap_omega - p0.cap_omega).norm() < 1e-12);
    }
}
