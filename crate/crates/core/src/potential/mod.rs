//! Synthesis of evaluable potentials conormal to a nested pair, with
//! prescribed two-scale symbol orders.
//!
//! A nested conormal q is realized in the flat normal coordinates
//! (u, v) = (h₁(x), h₂(x)) of the pair as
//!
//! ```text
//!   q(x) = χ(x) · F(h₁(x), h₂(x)),
//!   F(u, v) = (2π)^{-2} ∬ e^{i(uθ' + vθ'')} ⟨θ',θ''⟩^{M1} ⟨θ''⟩^{M2} w(|θ|) dθ' dθ'',
//! ```
//!
//! with ⟨·⟩ the Japanese bracket, w a smooth radial band-limit at 1/ε, and χ
//! a compactly supported amplitude cutoff of radius ρ. Single-surface
//! conormals are the one-dimensional specialization. The oscillatory
//! integral is evaluated once by FFT on a fine normal-coordinate table;
//! the evaluator then composes the table with the defining functions, which
//! for the named flat/radial primitives are exact normal coordinates.
//!
//! Model profiles (delta layer ∈ I⁰(S), Heaviside ∈ I⁻¹(S), power law
//! |u|^{−1−μ}) are closed-form standins with documented exact orders, used
//! for calibration scenarios; they bypass the order-window check below.

pub mod fit;
mod profile;

pub use fit::{blowup_rate_estimate, order_check_fourier, BlowupFit};
pub use profile::{ProfileTable1D, ProfileTable2D};

use crate::geom::NestedPair;
use crate::grid::Grid3;
use nalgebra::Vector3;
use std::fmt;
use std::sync::Arc;

/// Errors from synthesis and order verification.
#[derive(Debug, Clone)]
pub enum PotentialError {
    /// Orders violate the admissibility window.
    OrderInadmissible { detail: String },
    /// Requested grid cannot resolve the band limit (mollify_scale < 2Δx).
    Unresolved { mollify_scale: f64, dx: f64 },
    /// Log–log fit residual too large to trust.
    FitUnstable { residual: f64 },
    /// Requested fit range exceeds the synthesis band limit.
    BandLimited { requested: f64, limit: f64 },
    /// Malformed specification.
    InvalidSpec { detail: String },
}

impl fmt::Display for PotentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialError::OrderInadmissible { detail } => {
                write!(f, "ORDER_INADMISSIBLE: {detail}")
            }
            PotentialError::Unresolved { mollify_scale, dx } => {
                write!(f, "UNRESOLVED: mollify_scale {mollify_scale} < 2 * dx = {}", 2.0 * dx)
            }
            PotentialError::FitUnstable { residual } => {
                write!(f, "FIT_UNSTABLE: residual {residual:.3}")
            }
            PotentialError::BandLimited { requested, limit } => {
                write!(f, "BAND_LIMITED: requested {requested:.1} beyond limit {limit:.1}")
            }
            PotentialError::InvalidSpec { detail } => write!(f, "invalid spec: {detail}"),
        }
    }
}

impl std::error::Error for PotentialError {}

/// Closed-form model profiles across S1 (single-surface pairs only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelProfileKind {
    /// Band-limited unit-mass layer; conormal order 0.
    DeltaLayer,
    /// Smoothed Heaviside jump; conormal order −1.
    Heaviside,
    /// (u² + ε²)^{−(1+μ)/2}; conormal order μ ∈ (−1, 0), blowup dist^{−(1+μ)}.
    PowerLaw { mu: f64 },
}

/// Synthesis mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    FourierSymbol,
    ModelProfile(ModelProfileKind),
}

/// Specification of a potential q ∈ I^{M1,M2}(S1, S2).
#[derive(Clone)]
pub struct PotentialSpec {
    pub pair: Arc<NestedPair>,
    pub m1: f64,
    pub m2: f64,
    pub profile: ProfileKind,
    /// Compact support radius of the amplitude cutoff.
    pub support_radius: f64,
    /// Band-limit scale ε: frequencies above 1/ε are smoothly removed.
    pub mollify_scale: f64,
    /// Overall amplitude factor.
    pub amplitude: f64,
    /// Optional smooth spatial modulation of the symbol magnitude.
    pub modulation: Option<Arc<dyn Fn(Vector3<f64>) -> f64 + Send + Sync>>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("m1", &self.m1)
            .field("m2", &self.m2)
            .field("profile", &self.profile)
            .field("support_radius", &self.support_radius)
            .field("mollify_scale", &self.mollify_scale)
            .finish()
    }
}

impl PotentialSpec {
    pub fn fourier(pair: Arc<NestedPair>, m1: f64, m2: f64, rho: f64, mollify: f64) -> Self {
        PotentialSpec {
            pair,
            m1,
            m2,
            profile: ProfileKind::FourierSymbol,
            support_radius: rho,
            mollify_scale: mollify,
            amplitude: 1.0,
            modulation: None,
        }
    }

    pub fn model(pair: Arc<NestedPair>, kind: ModelProfileKind, rho: f64, mollify: f64) -> Self {
        let (m1, m2) = match kind {
            ModelProfileKind::DeltaLayer => (0.0, 0.0),
            ModelProfileKind::Heaviside => (-1.0, 0.0),
            ModelProfileKind::PowerLaw { mu } => (mu, 0.0),
        };
        PotentialSpec {
            pair,
            m1,
            m2,
            profile: ProfileKind::ModelProfile(kind),
            support_radius: rho,
            mollify_scale: mollify,
            amplitude: 1.0,
            modulation: None,
        }
    }
}

/// Thm-1.1-style admissibility window for the synthesis orders in n = 3.
///
/// The window is the hypothesis of the nested recovery theorem; the
/// single-surface specialization (d2 = 0) only requires a decaying symbol.
pub fn orders_admissible(d1: usize, d2: usize, m1: f64, m2: f64) -> Result<(), PotentialError> {
    let (d1f, d2f) = (d1 as f64, d2 as f64);
    if d2 == 0 {
        if m1 < 0.0 {
            return Ok(());
        }
        return Err(PotentialError::OrderInadmissible {
            detail: format!("single-surface synthesis needs M1 < 0, got {m1}"),
        });
    }
    let branch = if m2 > -d2f {
        m1 < -d1f - d2f / 2.0 + 1.0
    } else {
        m1 < -d1f + 1.0
    };
    if !branch {
        return Err(PotentialError::OrderInadmissible {
            detail: format!("M1 = {m1} too large for M2 = {m2} (d1 = {d1}, d2 = {d2})"),
        });
    }
    // n = 3 bound on the combined order.
    let bound = (-(d1f + d2f) / 2.0).min(-d1f - d2f + 1.0);
    if m1 + m2 / 2.0 >= bound {
        return Err(PotentialError::OrderInadmissible {
            detail: format!("M1 + M2/2 = {} not below {bound}", m1 + m2 / 2.0),
        });
    }
    Ok(())
}

enum Evaluator {
    Profile1D(ProfileTable1D),
    Profile2D(ProfileTable2D),
    Custom(Arc<dyn Fn(Vector3<f64>) -> f64 + Send + Sync>),
    Zero,
}

/// An evaluable potential: normal-coordinate profile composed with the
/// pair's defining functions under the amplitude cutoff.
pub struct PotentialField {
    evaluator: Evaluator,
    pub pair: Arc<NestedPair>,
    pub support_radius: f64,
    pub mollify_scale: f64,
    amplitude: f64,
    modulation: Option<Arc<dyn Fn(Vector3<f64>) -> f64 + Send + Sync>>,
    pub grid_cache: Option<Grid3>,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialField")
            .field("support_radius", &self.support_radius)
            .field("mollify_scale", &self.mollify_scale)
            .field("has_grid", &self.grid_cache.is_some())
            .finish()
    }
}

/// C∞ bump, identically zero for |s| ≥ 1, value 1 at s = 0.
#[inline]
pub fn smooth_bump(s: f64) -> f64 {
    crate::math::bump(s)
}

/// The amplitude cutoff: a C∞ plateau, 1 out to 0.8ρ and smoothly 0 at ρ,
/// so the singular layers inside the plateau are carried unattenuated.
#[inline]
pub fn support_cutoff(t: f64) -> f64 {
    crate::math::plateau_cutoff(t)
}

/// Synthesize an evaluable field from a specification.
pub fn synthesize(spec: &PotentialSpec) -> Result<PotentialField, PotentialError> {
    if spec.support_radius <= 0.0 || spec.mollify_scale <= 0.0 {
        return Err(PotentialError::InvalidSpec {
            detail: "support radius and mollify scale must be positive".into(),
        });
    }
    let pair = spec.pair.clone();
    let u_max = profile::u_range(&pair);

    let evaluator = match spec.profile {
        ProfileKind::FourierSymbol => {
            orders_admissible(pair.d1, pair.d2, spec.m1, spec.m2)?;
            if pair.d2 == 0 {
                if pair.d1 != 1 {
                    return Err(PotentialError::InvalidSpec {
                        detail: "Fourier synthesis needs d1 = 1 (hypersurface normal model)".into(),
                    });
                }
                Evaluator::Profile1D(ProfileTable1D::symbol(spec.m1, spec.mollify_scale, u_max))
            } else {
                if pair.d1 != 1 || pair.d2 != 1 {
                    return Err(PotentialError::InvalidSpec {
                        detail: "nested Fourier synthesis implemented for d1 = d2 = 1".into(),
                    });
                }
                Evaluator::Profile2D(ProfileTable2D::symbol(
                    spec.m1,
                    spec.m2,
                    spec.mollify_scale,
                    u_max,
                ))
            }
        }
        ProfileKind::ModelProfile(kind) => {
            if pair.d2 != 0 || pair.d1 != 1 {
                return Err(PotentialError::InvalidSpec {
                    detail: "model profiles are single-surface standins (d1 = 1, d2 = 0)".into(),
                });
            }
            Evaluator::Profile1D(ProfileTable1D::model(kind, spec.mollify_scale, u_max))
        }
    };

    Ok(PotentialField {
        evaluator,
        pair,
        support_radius: spec.support_radius,
        mollify_scale: spec.mollify_scale,
        amplitude: spec.amplitude,
        modulation: spec.modulation.clone(),
        grid_cache: None,
    })
}

impl PotentialField {
    /// The zero potential.
    pub fn zero(pair: Arc<NestedPair>, rho: f64, mollify: f64) -> Self {
        PotentialField {
            evaluator: Evaluator::Zero,
            pair,
            support_radius: rho,
            mollify_scale: mollify,
            amplitude: 0.0,
            modulation: None,
            grid_cache: None,
        }
    }

    /// A field backed by an arbitrary evaluator (negative controls, smooth
    /// bumps). The closure's output is still multiplied by the amplitude
    /// cutoff, so compact support is preserved.
    pub fn custom(
        pair: Arc<NestedPair>,
        rho: f64,
        mollify: f64,
        f: Arc<dyn Fn(Vector3<f64>) -> f64 + Send + Sync>,
    ) -> Self {
        PotentialField {
            evaluator: Evaluator::Custom(f),
            pair,
            support_radius: rho,
            mollify_scale: mollify,
            amplitude: 1.0,
            modulation: None,
            grid_cache: None,
        }
    }

    /// q(x).
    pub fn eval(&self, x: Vector3<f64>) -> f64 {
        let cutoff = support_cutoff(x.norm() / self.support_radius);
        if cutoff == 0.0 {
            return 0.0;
        }
        let raw = match &self.evaluator {
            Evaluator::Zero => 0.0,
            Evaluator::Custom(f) => f(x),
            Evaluator::Profile1D(p) => p.eval(self.pair.h[0].value(x)),
            Evaluator::Profile2D(p) => p.eval(self.pair.h[0].value(x), self.pair.h[1].value(x)),
        };
        let m = self.modulation.as_ref().map_or(1.0, |f| f(x));
        self.amplitude * cutoff * m * raw
    }

    /// Fill the volumetric cache on a centered grid with n nodes per axis
    /// spanning the support (with one cell of margin).
    pub fn fill_grid(&mut self, n: usize) -> Result<(), PotentialError> {
        let half = self.support_radius * 1.02;
        let dx = 2.0 * half / (n as f64 - 1.0);
        if self.mollify_scale < 2.0 * dx {
            return Err(PotentialError::Unresolved { mollify_scale: self.mollify_scale, dx });
        }
        let mut g = Grid3::centered(half, n);
        g.fill(|p| self.eval(p));
        self.grid_cache = Some(g);
        Ok(())
    }

    /// Attach an externally loaded grid cache (harness stage isolation).
    pub fn with_grid(mut self, grid: Grid3) -> Self {
        self.grid_cache = Some(grid);
        self
    }

    pub fn which_band_limit(&self) -> f64 {
        1.0 / self.mollify_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plane_pair() -> Arc<NestedPair> {
        Arc::new(NestedPair::plane(0.0, 1.0))
    }

    fn plane_line_pair() -> Arc<NestedPair> {
        Arc::new(NestedPair::plane_line(0.0, 0.0, 1.0))
    }

    #[test]
    fn admissibility_window() {
        // (−2, −0.5) and (−1.5, −1) admissible for d1 = d2 = 1.
        assert!(orders_admissible(1, 1, -2.0, -0.5).is_ok());
        assert!(orders_admissible(1, 1, -1.5, -1.0).is_ok());
        // M1 too large for the M2 > −d2 branch.
        assert!(orders_admissible(1, 1, 0.0, -0.5).is_err());
        // combined order bound violated
        assert!(orders_admissible(1, 1, -1.0, 0.1).is_err());
    }

    #[test]
    fn zero_symbol_gives_zero_field() {
        let field = PotentialField::zero(plane_line_pair(), 0.8, 0.05);
        assert_eq!(field.eval(Vector3::new(0.1, 0.2, 0.0)), 0.0);
    }

    #[test]
    fn support_is_exactly_compact() {
        let spec = PotentialSpec::model(plane_pair(), ModelProfileKind::DeltaLayer, 0.5, 0.03);
        let field = synthesize(&spec).unwrap();
        assert_eq!(field.eval(Vector3::new(0.51, 0.0, 0.0)), 0.0);
        assert_eq!(field.eval(Vector3::new(0.0, 0.0, 0.9)), 0.0);
        assert!(field.eval(Vector3::new(0.2, 0.0, 0.0)).abs() > 1e-3);
    }

    #[test]
    fn heaviside_profile_steps_across_surface() {
        let spec = PotentialSpec::model(plane_pair(), ModelProfileKind::Heaviside, 0.8, 0.02);
        let field = synthesize(&spec).unwrap();
        let above = field.eval(Vector3::new(0.0, 0.0, 0.2));
        let below = field.eval(Vector3::new(0.0, 0.0, -0.2));
        assert!(above > 0.5 * smooth_bump(0.25));
        assert!(below.abs() < 1e-3);
    }

    #[test]
    fn inadmissible_fourier_orders_are_rejected() {
        let spec = PotentialSpec::fourier(plane_line_pair(), 0.0, -0.5, 0.8, 0.05);
        assert!(matches!(
            synthesize(&spec),
            Err(PotentialError::OrderInadmissible { .. })
        ));
    }

    #[test]
    fn symmetry_of_even_symbol_across_s1() {
        // Even symbols on the flat model give q even under x3 ↦ −x3.
        let spec = PotentialSpec::fourier(plane_line_pair(), -2.0, -0.5, 0.8, 0.04);
        let field = synthesize(&spec).unwrap();
        for (a, b, c) in [(0.1, 0.2, 0.15), (0.3, -0.1, 0.33), (0.0, 0.4, 0.07)] {
            let plus = field.eval(Vector3::new(a, b, c));
            let minus = field.eval(Vector3::new(a, b, -c));
            assert_relative_eq!(plus, minus, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn mollification_converges_away_from_surface() {
        // Halving the band-limit scale changes q by < 1e-3 relative at
        // distances beyond 10ε.
        let mk = |eps: f64| {
            synthesize(&PotentialSpec::fourier(plane_line_pair(), -2.0, -0.5, 0.8, eps)).unwrap()
        };
        let coarse = mk(0.02);
        let fine = mk(0.01);
        let probes = [
            Vector3::new(0.1, 0.3, 0.45),
            Vector3::new(-0.2, 0.5, 0.5),
            Vector3::new(0.3, 0.42, -0.5),
        ];
        for p in probes {
            let a = coarse.eval(p);
            let b = fine.eval(p);
            assert!(
                (a - b).abs() <= 1e-3 * a.abs().max(b.abs()).max(1e-6),
                "p = {p:?}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn unresolved_grid_is_rejected() {
        let spec = PotentialSpec::model(plane_pair(), ModelProfileKind::DeltaLayer, 0.5, 0.004);
        let mut field = synthesize(&spec).unwrap();
        assert!(matches!(field.fill_grid(65), Err(PotentialError::Unresolved { .. })));
        let spec = PotentialSpec::model(plane_pair(), ModelProfileKind::DeltaLayer, 0.5, 0.08);
        let mut field = synthesize(&spec).unwrap();
        field.fill_grid(65).unwrap();
        assert!(field.grid_cache.is_some());
    }
}
