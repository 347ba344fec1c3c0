//! Finite-difference Jacobian ranks and clean-intersection certificates.
//!
//! All Jacobians are central finite differences of the chart's local
//! parametrization map (defining functions are user-supplied, so no analytic
//! chart derivatives are assumed). Ranks come from SVD with singular values
//! below `svd_tol` times the largest counted as zero.

use super::chart::{chart_local_map, chart_point, ChartKind, ChartParams};
use super::{GeomError, NestedPair, TANGENCY_TOL};
use crate::math::svd_rank;
use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

/// Whether a rank refers to the full chart map or its projection to the
/// base coordinates (x, t, ω).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    Full,
    BaseProjection,
}

/// Central finite-difference Jacobian of a local chart map, as a matrix with
/// one column per parameter direction.
pub fn fd_jacobian<F>(
    map: F,
    dim: usize,
    out_dim: usize,
    fd_step: f64,
) -> Result<DMatrix<f64>, GeomError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, GeomError>,
{
    let mut jac = DMatrix::zeros(out_dim, dim);
    let mut u = vec![0.0; dim];
    for j in 0..dim {
        u[j] = fd_step;
        let plus = map(&u)?;
        u[j] = -fd_step;
        let minus = map(&u)?;
        u[j] = 0.0;
        for i in 0..out_dim {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * fd_step);
        }
    }
    Ok(jac)
}

fn chart_fd_jacobian(
    kind: ChartKind,
    pair: &NestedPair,
    params: &ChartParams,
    mode: RankMode,
    fd_step: f64,
) -> Result<DMatrix<f64>, GeomError> {
    let (dim, map) = chart_local_map(kind, pair, params, TANGENCY_TOL)?;
    let embed = move |u: &[f64]| -> Result<Vec<f64>, GeomError> {
        let p = map(u)?;
        Ok(match mode {
            RankMode::Full => p.embed().to_vec(),
            RankMode::BaseProjection => p.embed_base().to_vec(),
        })
    };
    let out_dim = match mode {
        RankMode::Full => 14,
        RankMode::BaseProjection => 7,
    };
    fd_jacobian(embed, dim, out_dim, fd_step)
}

/// Rank of the chart parametrization map (or of its base projection) at the
/// given parameters. Errors with `RANK_DEFICIENT_PARAMS` when the rank falls
/// below the chart's nominal value: the parameter dimension for `Full`,
/// 2n − 1 = 5 for flowout base projections (elsewhere the projection has no
/// nominal rank and any value is returned).
pub fn chart_jacobian_rank(
    kind: ChartKind,
    pair: &NestedPair,
    params: &ChartParams,
    mode: RankMode,
    fd_step: f64,
    svd_tol: f64,
) -> Result<usize, GeomError> {
    let jac = chart_fd_jacobian(kind, pair, params, mode, fd_step)?;
    let rank = svd_rank(&jac, svd_tol);
    let nominal = match mode {
        RankMode::Full => Some(kind.param_dim(pair)),
        RankMode::BaseProjection => match kind {
            ChartKind::FlowoutA | ChartKind::FlowoutC => Some(5),
            _ => None,
        },
    };
    if let Some(expected) = nominal {
        if rank < expected {
            return Err(GeomError::RankDeficientParams { got: rank, expected });
        }
    }
    Ok(rank)
}

/// Matched parameters of an intersection certificate: both charts are
/// evaluated at the same (y, ν, ω, r) with y on S2 and ν in the S1 fiber
/// (which sits inside the S2 fiber), so the two parametrizations hit the
/// same phase point with ν = ν̄, ω = ω̄, σ = σ̄, y = ȳ.
#[derive(Debug, Clone, Copy)]
pub struct IntersectionParams {
    pub y: Vector3<f64>,
    pub nu: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub r: f64,
}

impl IntersectionParams {
    pub fn chart_params(&self) -> ChartParams {
        ChartParams { y: self.y, nu: self.nu, omega: self.omega, r: self.r, sigma: 1.0 }
    }
}

/// Outcome of a clean-intersection check at one intersection point.
#[derive(Debug, Clone, Serialize)]
pub struct CleanIntersectionCertificate {
    /// Rank of the concatenated Jacobian [D chart_a | D chart_b], i.e. the
    /// dimension of the sum of tangent spaces at the intersection point.
    pub rank_sum: usize,
    /// Codimension of the intersection inside chart A (= rank_sum − dim B).
    pub codim_a: usize,
    /// Codimension of the intersection inside chart B (= rank_sum − dim A).
    pub codim_b: usize,
    /// Required tangent-sum rank, chart dimension + d2 (for the
    /// 2n-dimensional flowout charts this is the 2n + d2 bound).
    pub required_rank: usize,
    pub clean: bool,
    /// Distance between the two chart evaluations.
    pub point_gap: f64,
}

/// Certify that two charts intersect cleanly in codimension d2.
///
/// The concatenated finite-difference Jacobian's column space is the sum of
/// the two tangent spaces; with immersed charts of parameter dimensions
/// p_a, p_b meeting along the matched-parameter manifold, the intersection
/// has dimension p_a + p_b − rank, so the codimensions are rank − p_b and
/// rank − p_a. Cleanliness in codimension d2 is rank ≥ min(p) + d2 together
/// with codim = d2 on both sides.
pub fn clean_intersection_certificate(
    kind_a: ChartKind,
    params_a: &ChartParams,
    kind_b: ChartKind,
    params_b: &ChartParams,
    pair: &NestedPair,
    fd_step: f64,
    svd_tol: f64,
) -> Result<CleanIntersectionCertificate, GeomError> {
    let pa = chart_point(kind_a, pair, params_a, TANGENCY_TOL)?;
    let pb = chart_point(kind_b, pair, params_b, TANGENCY_TOL)?;
    let gap = pa.distance(&pb);
    if gap > 1e-8 {
        return Err(GeomError::NotIntersecting { gap });
    }

    let ja = chart_fd_jacobian(kind_a, pair, params_a, RankMode::Full, fd_step)?;
    let jb = chart_fd_jacobian(kind_b, pair, params_b, RankMode::Full, fd_step)?;
    let (pa_dim, pb_dim) = (ja.ncols(), jb.ncols());
    let mut concat = DMatrix::zeros(14, pa_dim + pb_dim);
    concat.view_mut((0, 0), (14, pa_dim)).copy_from(&ja);
    concat.view_mut((0, pa_dim), (14, pb_dim)).copy_from(&jb);
    let rank_sum = svd_rank(&concat, svd_tol);

    let codim_a = rank_sum.saturating_sub(pb_dim);
    let codim_b = rank_sum.saturating_sub(pa_dim);
    let required_rank = pa_dim.min(pb_dim) + pair.d2;
    let clean = rank_sum >= required_rank && codim_a == pair.d2 && codim_b == pair.d2;
    Ok(CleanIntersectionCertificate {
        rank_sum,
        codim_a,
        codim_b,
        required_rank,
        clean,
        point_gap: gap,
    })
}

/// Certificate at matched parameters (the §4.2-style identification).
pub fn clean_intersection_at(
    kind_a: ChartKind,
    kind_b: ChartKind,
    pair: &NestedPair,
    shared: &IntersectionParams,
    fd_step: f64,
    svd_tol: f64,
) -> Result<CleanIntersectionCertificate, GeomError> {
    let p = shared.chart_params();
    clean_intersection_certificate(kind_a, &p, kind_b, &p, pair, fd_step, svd_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{sample_nontangential_fiber, sample_nontangential_omega, Which, RANK_TOL};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FD: f64 = 1e-5;

    fn random_flowout_params(
        pair: &NestedPair,
        which: Which,
        rng: &mut ChaCha8Rng,
    ) -> ChartParams {
        let y = pair.sample_surface(which, 1, rng)[0];
        let omega = sample_nontangential_omega(pair, y, which, 0.1, rng).unwrap();
        let nu_hat = sample_nontangential_fiber(pair, y, which, omega, 0.1, rng).unwrap();
        let nu = rng.gen_range(0.5..2.0) * nu_hat;
        let r = rng.gen_range(0.3..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        ChartParams { y, nu, omega, r, sigma: 1.0 }
    }

    #[test]
    fn flowout_full_rank_is_lagrangian_dimension() {
        // Finite-difference Jacobian at random generic parameter points:
        // constant rank 2n = 6.
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let params = random_flowout_params(&pair, Which::S1, &mut rng);
            let rank =
                chart_jacobian_rank(ChartKind::FlowoutA, &pair, &params, RankMode::Full, FD, RANK_TOL)
                    .unwrap();
            assert_eq!(rank, 6);
        }
    }

    #[test]
    fn flowout_base_projection_rank_drops_to_five() {
        // Projection to (x, t, ω) has rank 2n − 1 = 5: the fiber scaling
        // direction reproduces the r-translation on the base.
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let params = random_flowout_params(&pair, Which::S1, &mut rng);
            let rank = chart_jacobian_rank(
                ChartKind::FlowoutA,
                &pair,
                &params,
                RankMode::BaseProjection,
                FD,
                RANK_TOL,
            )
            .unwrap();
            assert_eq!(rank, 5);
        }
    }

    #[test]
    fn caustic_r_is_rank_deficient() {
        // Sphere of radius R with radial incidence ω = ŷ and ν = θŷ: the
        // reflected pencil focuses at r = R/θ, where the base projection
        // drops rank and the op must refuse.
        let radius = 0.5;
        let theta = 1.3;
        let pair = NestedPair::sphere(Vector3::zeros(), radius, 1.0);
        let y = Vector3::new(0.0, 0.0, radius);
        let params = ChartParams {
            y,
            nu: theta * Vector3::z(),
            omega: Vector3::z(),
            r: radius / theta,
            sigma: 1.0,
        };
        let err = chart_jacobian_rank(
            ChartKind::FlowoutA,
            &pair,
            &params,
            RankMode::BaseProjection,
            FD,
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::RankDeficientParams { .. }));
        // Away from the caustic the rank is the nominal 5.
        let params_ok = ChartParams { r: 0.5 * radius / theta, ..params };
        let rank = chart_jacobian_rank(
            ChartKind::FlowoutA,
            &pair,
            &params_ok,
            RankMode::BaseProjection,
            FD,
            1e-6,
        )
        .unwrap();
        assert_eq!(rank, 5);
    }

    #[test]
    fn other_charts_have_full_rank() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let y2 = pair.sample_surface(Which::S2, 1, &mut rng)[0];
        let omega = sample_nontangential_omega(&pair, y2, Which::S2, 0.1, &mut rng).unwrap();
        let nu = sample_nontangential_fiber(&pair, y2, Which::S2, omega, 0.1, &mut rng).unwrap();
        let params = ChartParams { y: y2, nu, omega, r: 0.8, sigma: 0.9 };
        for (kind, expect) in [
            (ChartKind::TwoPlus, 6),
            (ChartKind::ReflectedC, 5),
            (ChartKind::BackscatterC, 3),
        ] {
            let rank =
                chart_jacobian_rank(kind, &pair, &params, RankMode::Full, FD, RANK_TOL).unwrap();
            assert_eq!(rank, expect, "kind {kind:?}");
        }
        // For the S1 charts use a fiber direction valid on S1 and an ω not
        // tangential to it.
        let params1 = ChartParams { nu: Vector3::z(), omega: Vector3::new(0.2, -0.3, 0.93).normalize(), ..params };
        for (kind, expect) in [
            (ChartKind::OnePlus, 6),
            (ChartKind::ReflectedA, 5),
            (ChartKind::BackscatterA, 3),
            (ChartKind::Plus, 6),
        ] {
            let rank =
                chart_jacobian_rank(kind, &pair, &params1, RankMode::Full, FD, RANK_TOL).unwrap();
            assert_eq!(rank, expect, "kind {kind:?}");
        }
    }

    #[test]
    fn matched_flowouts_certify_clean_codim_one() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let y = pair.sample_surface(Which::S2, 1, &mut rng)[0];
            let omega = sample_nontangential_omega(&pair, y, Which::S1, 0.1, &mut rng).unwrap();
            // ν in the S1 fiber (⊂ S2 fiber), nontangential to ω.
            let mut nu = Vector3::z() * rng.gen_range(0.5..2.0);
            if nu.dot(&omega).abs() < 0.1 {
                continue;
            }
            if rng.gen_bool(0.5) {
                nu = -nu;
            }
            let shared = IntersectionParams { y, nu, omega, r: rng.gen_range(0.3..1.5) };
            let cert = clean_intersection_at(
                ChartKind::FlowoutA,
                ChartKind::FlowoutC,
                &pair,
                &shared,
                FD,
                RANK_TOL,
            )
            .unwrap();
            assert!(cert.clean, "{cert:?}");
            assert_eq!(cert.codim_a, 1);
            assert_eq!(cert.rank_sum, 7);
        }
    }

    #[test]
    fn matched_reflected_certify_clean_codim_one() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..10 {
            let y = pair.sample_surface(Which::S2, 1, &mut rng)[0];
            let omega = sample_nontangential_omega(&pair, y, Which::S1, 0.1, &mut rng).unwrap();
            let mut nu = Vector3::z() * rng.gen_range(0.5..2.0);
            if nu.dot(&omega).abs() < 0.1 {
                continue;
            }
            if rng.gen_bool(0.5) {
                nu = -nu;
            }
            let shared = IntersectionParams { y, nu, omega, r: 1.0 };
            let cert = clean_intersection_at(
                ChartKind::ReflectedA,
                ChartKind::ReflectedC,
                &pair,
                &shared,
                FD,
                RANK_TOL,
            )
            .unwrap();
            assert!(cert.clean, "{cert:?}");
            assert_eq!(cert.codim_a, 1);
            assert_eq!(cert.rank_sum, 6);
        }
    }

    #[test]
    fn disjoint_parameters_are_not_intersecting() {
        let pair = NestedPair::plane_line(0.0, 0.0, 1.0);
        let omega = Vector3::new(0.1, 0.2, 0.97).normalize();
        let a = ChartParams {
            y: Vector3::new(0.4, 0.1, 0.0),
            nu: Vector3::z(),
            omega,
            r: 1.0,
            sigma: 1.0,
        };
        let b = ChartParams { y: Vector3::new(-0.2, 0.0, 0.0), ..a };
        let err = clean_intersection_certificate(
            ChartKind::FlowoutA,
            &a,
            ChartKind::FlowoutC,
            &b,
            &pair,
            FD,
            RANK_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::NotIntersecting { .. }));
    }
}
