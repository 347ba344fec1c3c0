//! Phase-space geometry engine.
//!
//! Realizes, numerically, the Lagrangian submanifolds that organize the
//! scattering of a plane-wave pulse off a potential conormal to a nested
//! pair S2 ⊂ S1 ⊂ R³: conormal bundles, the characteristic set of the wave
//! operator, flowouts under the Hamiltonian field, the reflected and
//! backscattering Lagrangians living over the data space, and their clean
//! intersections — together with a multiphase Hamilton–Jacobi solver.
//!
//! Everything is certified by finite differences and SVD ranks rather than
//! symbol calculus; the certificates are what downstream reconstruction
//! relies on.

mod chart;
mod multiphase;
mod prop71;
mod rank;

pub use chart::{chart_local_map, chart_point, ChartKind, ChartParams, LagrangianChart, SlotUsage};
pub use multiphase::{multiphase_solve, MultiphaseMethod, MultiphaseResult, MultiphaseSolution};
pub use prop71::{model_pair, prop71_intersection, prop71_sample, Prop71Report, Prop71Sample};
pub use rank::{
    chart_jacobian_rank, clean_intersection_at, clean_intersection_certificate, fd_jacobian,
    CleanIntersectionCertificate, IntersectionParams, RankMode,
};

use crate::math::svd_min;
use crate::sphere::random_unit;
use nalgebra::{DMatrix, Vector3};
use rand::Rng;
use std::fmt;
use std::sync::Arc;

/// Default tolerance on |ν̂·ω| below which a ray counts as tangential.
pub const TANGENCY_TOL: f64 = 1e-3;
/// Singular values below this multiple of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;
/// A point is "on" a submanifold when all defining functions are below this.
pub const ON_SURFACE_TOL: f64 = 1e-10;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq)]
pub enum GeomError {
    /// Gradients of the defining functions are dependent at the query point.
    GradientDegenerate { smallest_sv: f64 },
    /// |ν̂·ω| at or below the tangency tolerance.
    TangentialRay { dot: f64 },
    /// A chart evaluation produced (or was handed) a zero cotangent.
    ZeroSection,
    /// The queried point does not satisfy the defining equations.
    PointOffSurface { max_residual: f64 },
    /// Chart points disagree beyond tolerance in an intersection certificate.
    NotIntersecting { gap: f64 },
    /// Jacobian rank fell below the chart's nominal rank.
    RankDeficientParams { got: usize, expected: usize },
    /// A Prop 7.1 draw landed on an excluded lower-dimensional set.
    DegenerateSample { detail: &'static str },
    /// Multiphase evaluation with |σ| below 1e-12.
    SigmaZero,
    /// Chart parameters outside the chart's open domain (r = 0, bad fiber
    /// dimension, ...).
    InvalidChart { detail: &'static str },
    /// The operation requires the model plane/line configuration.
    ModelConfigRequired,
}

impl fmt::Display for GeomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeomError::GradientDegenerate { smallest_sv } => {
                write!(f, "GRADIENT_DEGENERATE: smallest singular value {smallest_sv:.3e}")
            }
            GeomError::TangentialRay { dot } => {
                write!(f, "TANGENTIAL_RAY: |nu_hat . omega| = {dot:.3e}")
            }
            GeomError::ZeroSection => write!(f, "ZERO_SECTION: zero covector excluded"),
            GeomError::PointOffSurface { max_residual } => {
                write!(f, "point off surface: max |h_i| = {max_residual:.3e}")
            }
            GeomError::NotIntersecting { gap } => {
                write!(f, "NOT_INTERSECTING: chart points differ by {gap:.3e}")
            }
            GeomError::RankDeficientParams { got, expected } => {
                write!(f, "RANK_DEFICIENT_PARAMS: rank {got} below nominal {expected}")
            }
            GeomError::DegenerateSample { detail } => write!(f, "DEGENERATE_SAMPLE: {detail}"),
            GeomError::SigmaZero => write!(f, "SIGMA_ZERO"),
            GeomError::InvalidChart { detail } => write!(f, "invalid chart parameters: {detail}"),
            GeomError::ModelConfigRequired => {
                write!(f, "operation requires the model plane/line pair")
            }
        }
    }
}

impl std::error::Error for GeomError {}

/// A scalar defining function with analytic gradient.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: Vector3<f64>) -> f64;
    fn gradient(&self, x: Vector3<f64>) -> Vector3<f64>;
}

/// h(x) = n·x − c, the affine defining function of a plane.
#[derive(Debug, Clone)]
pub struct AffineField {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl ScalarField for AffineField {
    fn value(&self, x: Vector3<f64>) -> f64 {
        self.normal.dot(&x) - self.offset
    }
    fn gradient(&self, _x: Vector3<f64>) -> Vector3<f64> {
        self.normal
    }
}

/// h(x) = |x − c| − R, the radial defining function of a sphere.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl ScalarField for RadialField {
    fn value(&self, x: Vector3<f64>) -> f64 {
        (x - self.center).norm() - self.radius
    }
    fn gradient(&self, x: Vector3<f64>) -> Vector3<f64> {
        let d = x - self.center;
        let n = d.norm();
        if n < 1e-14 {
            Vector3::zeros()
        } else {
            d / n
        }
    }
}

/// Which of the nested submanifolds an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    S1,
    S2,
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl BoundingBox {
    pub fn centered(half: f64) -> Self {
        BoundingBox { min: Vector3::repeat(-half), max: Vector3::repeat(half) }
    }
    pub fn contains(&self, p: Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - 1e-12 && p[i] <= self.max[i] + 1e-12)
    }
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector3<f64> {
        Vector3::new(
            rng.gen_range(self.min.x..self.max.x),
            rng.gen_range(self.min.y..self.max.y),
            rng.gen_range(self.min.z..self.max.z),
        )
    }
}

/// Defining data of the nested pair S2 ⊂ S1 ⊂ R³.
///
/// The first `d1` defining functions cut out S1; all `d1 + d2` cut out S2.
#[derive(Clone)]
pub struct NestedPair {
    pub d1: usize,
    pub d2: usize,
    pub h: Vec<Arc<dyn ScalarField>>,
    pub domain_box: BoundingBox,
}

impl fmt::Debug for NestedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NestedPair")
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .field("n_defining", &self.h.len())
            .finish()
    }
}

impl NestedPair {
    pub fn new(
        d1: usize,
        d2: usize,
        h: Vec<Arc<dyn ScalarField>>,
        domain_box: BoundingBox,
    ) -> Self {
        assert_eq!(h.len(), d1 + d2, "need d1 + d2 defining functions");
        assert!(d1 >= 1 && d1 + d2 <= 3, "codimensions must fit in R^3");
        NestedPair { d1, d2, h, domain_box }
    }

    /// Single plane S1 = {x3 = offset} (d2 = 0).
    pub fn plane(offset: f64, half_box: f64) -> Self {
        NestedPair::new(
            1,
            0,
            vec![Arc::new(AffineField { normal: Vector3::z(), offset })],
            BoundingBox::centered(half_box),
        )
    }

    /// Model pair: S1 = {x3 = h1_offset}, S2 = {x3 = h1_offset, x2 = h2_offset}.
    pub fn plane_line(h1_offset: f64, h2_offset: f64, half_box: f64) -> Self {
        NestedPair::new(
            1,
            1,
            vec![
                Arc::new(AffineField { normal: Vector3::z(), offset: h1_offset }),
                Arc::new(AffineField { normal: Vector3::y(), offset: h2_offset }),
            ],
            BoundingBox::centered(half_box),
        )
    }

    /// Single sphere |x − c| = R as S1 (no second submanifold: d2 = 0).
    pub fn sphere(center: Vector3<f64>, radius: f64, half_box: f64) -> Self {
        NestedPair::new(
            1,
            0,
            vec![Arc::new(RadialField { center, radius })],
            BoundingBox::centered(half_box),
        )
    }

    /// Sphere S1 with its equatorial circle {x3 = c_z} as S2.
    pub fn sphere_equator(center: Vector3<f64>, radius: f64, half_box: f64) -> Self {
        NestedPair::new(
            1,
            1,
            vec![
                Arc::new(RadialField { center, radius }),
                Arc::new(AffineField { normal: Vector3::z(), offset: center.z }),
            ],
            BoundingBox::centered(half_box),
        )
    }

    /// Codimension of the requested submanifold.
    pub fn codim(&self, which: Which) -> usize {
        match which {
            Which::S1 => self.d1,
            Which::S2 => self.d1 + self.d2,
        }
    }

    /// Values of the defining functions of the requested submanifold.
    pub fn residuals(&self, which: Which, x: Vector3<f64>) -> Vec<f64> {
        self.h[..self.codim(which)].iter().map(|h| h.value(x)).collect()
    }

    pub fn max_residual(&self, which: Which, x: Vector3<f64>) -> f64 {
        self.residuals(which, x).iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Check that `y` lies on the submanifold to `ON_SURFACE_TOL`.
    pub fn require_on(&self, which: Which, y: Vector3<f64>) -> Result<(), GeomError> {
        let r = self.max_residual(which, y);
        if r > ON_SURFACE_TOL {
            Err(GeomError::PointOffSurface { max_residual: r })
        } else {
            Ok(())
        }
    }

    /// Gradient matrix (rows = ∇h_i) of the submanifold's defining functions.
    pub fn gradient_matrix(&self, which: Which, x: Vector3<f64>) -> DMatrix<f64> {
        let k = self.codim(which);
        let mut m = DMatrix::zeros(k, 3);
        for (i, h) in self.h[..k].iter().enumerate() {
            let g = h.gradient(x);
            for j in 0..3 {
                m[(i, j)] = g[j];
            }
        }
        m
    }

    /// Orthonormal basis of the conormal fiber N*_y(S) = span{∇h_i(y)}.
    ///
    /// Gram-Schmidt in the order the defining functions are listed, after a
    /// degeneracy check on the normalized gradient matrix.
    pub fn conormal_fiber(&self, y: Vector3<f64>, which: Which) -> Result<Vec<Vector3<f64>>, GeomError> {
        self.require_on(which, y)?;
        let k = self.codim(which);
        let mut normalized = self.gradient_matrix(which, y);
        for i in 0..k {
            let n = normalized.row(i).norm();
            if n < 1e-14 {
                return Err(GeomError::GradientDegenerate { smallest_sv: 0.0 });
            }
            for j in 0..3 {
                normalized[(i, j)] /= n;
            }
        }
        let smin = svd_min(&normalized);
        if smin < RANK_TOL {
            return Err(GeomError::GradientDegenerate { smallest_sv: smin });
        }
        let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut v = self.h[i].gradient(y);
            for b in &basis {
                v -= v.dot(b) * *b;
            }
            basis.push(v.normalize());
        }
        Ok(basis)
    }

    /// Orthonormal basis of the tangent space T_y(S) (complement of the fiber).
    pub fn tangent_space(&self, y: Vector3<f64>, which: Which) -> Result<Vec<Vector3<f64>>, GeomError> {
        let fiber = self.conormal_fiber(y, which)?;
        let mut basis = Vec::new();
        for seed in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let mut v = seed;
            for b in fiber.iter().chain(basis.iter()) {
                v -= v.dot(b) * *b;
            }
            if v.norm() > 1e-8 {
                basis.push(v.normalize());
            }
        }
        debug_assert_eq!(basis.len(), 3 - fiber.len());
        Ok(basis)
    }

    /// Newton-project a point onto the submanifold (underdetermined least
    /// squares step y ← y − Jᵀ(JJᵀ)⁻¹ h(y)).
    pub fn project(&self, which: Which, mut y: Vector3<f64>) -> Result<Vector3<f64>, GeomError> {
        for _ in 0..60 {
            let r = self.residuals(which, y);
            if r.iter().all(|v| v.abs() < 1e-13) {
                return Ok(y);
            }
            let j = self.gradient_matrix(which, y);
            let jjt = &j * j.transpose();
            let rhs = DMatrix::from_column_slice(r.len(), 1, &r);
            let sol = jjt
                .lu()
                .solve(&rhs)
                .ok_or(GeomError::GradientDegenerate { smallest_sv: 0.0 })?;
            let step = j.transpose() * sol;
            for i in 0..3 {
                y[i] -= step[(i, 0)];
            }
        }
        let r = self.max_residual(which, y);
        if r < ON_SURFACE_TOL {
            Ok(y)
        } else {
            Err(GeomError::PointOffSurface { max_residual: r })
        }
    }

    /// Random points on the submanifold inside the domain box.
    pub fn sample_surface<R: Rng>(
        &self,
        which: Which,
        count: usize,
        rng: &mut R,
    ) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < count * 200 {
            attempts += 1;
            let seed = self.domain_box.sample(rng);
            if let Ok(p) = self.project(which, seed) {
                if self.domain_box.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Random unit covector in the conormal fiber at y.
    pub fn sample_fiber_dir<R: Rng>(
        &self,
        y: Vector3<f64>,
        which: Which,
        rng: &mut R,
    ) -> Result<Vector3<f64>, GeomError> {
        let basis = self.conormal_fiber(y, which)?;
        loop {
            let mut v = Vector3::zeros();
            for b in &basis {
                v += crate::math::normal_sample(rng) * *b;
            }
            let n = v.norm();
            if n > 1e-8 {
                return Ok(v / n);
            }
        }
    }

    /// Validate the nested-pair invariants on randomly sampled points:
    /// gradient independence on S1 and S2, and S2 ⊂ S1.
    pub fn validate<R: Rng>(&self, samples: usize, rng: &mut R) -> Result<(), GeomError> {
        for y in self.sample_surface(Which::S1, samples, rng) {
            self.conormal_fiber(y, Which::S1)?;
        }
        if self.d2 > 0 {
            for y in self.sample_surface(Which::S2, samples, rng) {
                self.conormal_fiber(y, Which::S2)?;
                // every S2 point satisfies the S1 equations
                self.require_on(Which::S1, y)?;
            }
        }
        Ok(())
    }
}

/// σ = |ν|² / (2 ν·ω), the solution of the characteristic condition
/// |ν − σω|² = σ².
pub fn sigma_of(nu: Vector3<f64>, omega: Vector3<f64>, tangency_tol: f64) -> Result<f64, GeomError> {
    let norm = nu.norm();
    if norm < 1e-12 {
        return Err(GeomError::ZeroSection);
    }
    let dot = nu.dot(&omega) / norm;
    if dot.abs() <= tangency_tol {
        return Err(GeomError::TangentialRay { dot: dot.abs() });
    }
    Ok(norm * norm / (2.0 * nu.dot(&omega)))
}

/// True when ω is tangential to the submanifold at y: every unit fiber
/// covector ν̂ has |ν̂·ω| ≤ tol, i.e. the norm of the fiber projection of ω
/// is at most tol.
pub fn is_tangential_ray(
    pair: &NestedPair,
    y: Vector3<f64>,
    which: Which,
    omega: Vector3<f64>,
    tol: f64,
) -> Result<bool, GeomError> {
    let fiber = pair.conormal_fiber(y, which)?;
    let proj_sq: f64 = fiber.iter().map(|b| b.dot(&omega) * b.dot(&omega)).sum();
    Ok(proj_sq.sqrt() <= tol)
}

/// A point of T*(R³ × R × S²) (or of a data cotangent space embedded in the
/// same slots — see [`SlotUsage`]).
///
/// Ω is stored as an ambient vector constrained orthogonal to ω.
#[derive(Debug, Clone, Copy)]
pub struct PhasePoint {
    pub x: Vector3<f64>,
    pub t: f64,
    pub omega: Vector3<f64>,
    pub xi: Vector3<f64>,
    pub tau: f64,
    pub cap_omega: Vector3<f64>,
    pub slots: SlotUsage,
}

impl PhasePoint {
    /// Flat embedding used for finite-difference Jacobians.
    pub fn embed(&self) -> [f64; 14] {
        [
            self.x.x, self.x.y, self.x.z, self.t, self.omega.x, self.omega.y, self.omega.z,
            self.xi.x, self.xi.y, self.xi.z, self.tau, self.cap_omega.x, self.cap_omega.y,
            self.cap_omega.z,
        ]
    }

    /// Base-coordinates embedding (x, t, ω).
    pub fn embed_base(&self) -> [f64; 7] {
        [self.x.x, self.x.y, self.x.z, self.t, self.omega.x, self.omega.y, self.omega.z]
    }

    pub fn cotangent_norm(&self) -> f64 {
        (self.xi.norm_squared() + self.tau * self.tau + self.cap_omega.norm_squared()).sqrt()
    }

    /// Validate the structural invariants: |ω| = 1, Ω ⊥ ω, nonzero cotangent.
    pub fn validate(&self) -> Result<(), GeomError> {
        if (self.omega.norm() - 1.0).abs() > 1e-12 {
            return Err(GeomError::InvalidChart { detail: "omega not unit" });
        }
        if self.cap_omega.dot(&self.omega).abs() > 1e-12 {
            return Err(GeomError::InvalidChart { detail: "cap_omega not orthogonal to omega" });
        }
        if self.cotangent_norm() < 1e-12 {
            return Err(GeomError::ZeroSection);
        }
        Ok(())
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let a = self.embed();
        let b = other.embed();
        a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// Draw a random non-tangential unit fiber direction: |ν̂·ω| > tol.
pub fn sample_nontangential_fiber<R: Rng>(
    pair: &NestedPair,
    y: Vector3<f64>,
    which: Which,
    omega: Vector3<f64>,
    tol: f64,
    rng: &mut R,
) -> Result<Vector3<f64>, GeomError> {
    for _ in 0..256 {
        let nu = pair.sample_fiber_dir(y, which, rng)?;
        if nu.dot(&omega).abs() > tol.max(0.05) {
            return Ok(nu);
        }
    }
    Err(GeomError::TangentialRay { dot: 0.0 })
}

/// Draw a random direction not tangential to the fiber at y.
pub fn sample_nontangential_omega<R: Rng>(
    pair: &NestedPair,
    y: Vector3<f64>,
    which: Which,
    tol: f64,
    rng: &mut R,
) -> Result<Vector3<f64>, GeomError> {
    for _ in 0..256 {
        let omega = random_unit(rng);
        if !is_tangential_ray(pair, y, which, omega, tol.max(0.05))? {
            return Ok(omega);
        }
    }
    Err(GeomError::TangentialRay { dot: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn span_contains(basis: &[Vector3<f64>], v: Vector3<f64>) -> bool {
        let mut r = v;
        for b in basis {
            r -= r.dot(b) * *b;
        }
        r.norm() < 1e-10
    }

    #[test]
    fn conormal_fiber_plane() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let fiber = pair.conormal_fiber(Vector3::new(0.2, -0.1, 0.0), Which::S1).unwrap();
        assert_eq!(fiber.len(), 1);
        assert!(span_contains(&fiber, Vector3::z()));
    }

    #[test]
    fn conormal_fiber_line() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let fiber = pair.conormal_fiber(Vector3::new(0.7, 0.0, 0.0), Which::S2).unwrap();
        assert_eq!(fiber.len(), 2);
        assert!(span_contains(&fiber, Vector3::y()));
        assert!(span_contains(&fiber, Vector3::z()));
    }

    #[test]
    fn conormal_fiber_sphere() {
        let pair = NestedPair::sphere(Vector3::zeros(), 0.5, 1.0);
        let fiber = pair.conormal_fiber(Vector3::new(0.5, 0.0, 0.0), Which::S1).unwrap();
        assert_eq!(fiber.len(), 1);
        assert_relative_eq!(fiber[0].dot(&Vector3::x()).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fiber_requires_on_surface_point() {
        let pair = NestedPair::sphere(Vector3::zeros(), 0.5, 1.0);
        let err = pair.conormal_fiber(Vector3::new(0.6, 0.0, 0.0), Which::S1).unwrap_err();
        assert!(matches!(err, GeomError::PointOffSurface { .. }));
    }

    #[test]
    fn sigma_of_examples() {
        // |ν|²/(2ν·ω) on axis-aligned data.
        let s = sigma_of(Vector3::z(), Vector3::z(), TANGENCY_TOL).unwrap();
        assert_relative_eq!(s, 0.5, epsilon = 1e-15);
        let s = sigma_of(2.0 * Vector3::z(), Vector3::z(), TANGENCY_TOL).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-15);
        let err = sigma_of(Vector3::z(), Vector3::x(), TANGENCY_TOL).unwrap_err();
        assert!(matches!(err, GeomError::TangentialRay { .. }));
        // characteristic condition |ν − σω|² = σ²
        let (nu, om) = (Vector3::new(0.3, -0.2, 0.9), Vector3::new(0.6, 0.0, 0.8));
        let s = sigma_of(nu, om, TANGENCY_TOL).unwrap();
        assert_relative_eq!((nu - s * om).norm_squared(), s * s, epsilon = 1e-12);
    }

    #[test]
    fn tangential_ray_predicate() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let y1 = Vector3::new(0.3, 0.4, 0.0);
        assert!(is_tangential_ray(&pair, y1, Which::S1, Vector3::x(), 1e-3).unwrap());
        assert!(!is_tangential_ray(&pair, y1, Which::S1, Vector3::z(), 1e-3).unwrap());
        let y2 = Vector3::new(0.3, 0.0, 0.0);
        assert!(is_tangential_ray(&pair, y2, Which::S2, Vector3::x(), 1e-3).unwrap());
        // transverse to the line: some fiber covector aligns with ω
        assert!(!is_tangential_ray(&pair, y2, Which::S2, Vector3::y(), 1e-3).unwrap());
    }

    #[test]
    fn surface_sampling_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pair = NestedPair::sphere_equator(Vector3::zeros(), 0.5, 0.9);
        pair.validate(25, &mut rng).unwrap();
        for y in pair.sample_surface(Which::S2, 10, &mut rng) {
            assert!(pair.max_residual(Which::S2, y) < 1e-10);
            assert_relative_eq!(y.norm(), 0.5, epsilon = 1e-9);
            assert!(y.z.abs() < 1e-10);
        }
    }

    #[test]
    fn projection_converges_for_curved_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = NestedPair::sphere(Vector3::new(0.1, 0.0, -0.2), 0.4, 1.0);
        for _ in 0..20 {
            let seed = pair.domain_box.sample(&mut rng);
            if let Ok(p) = pair.project(Which::S1, seed) {
                assert!(pair.max_residual(Which::S1, p) < 1e-10);
            }
        }
    }
}
