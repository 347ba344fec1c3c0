//! Named geometry primitives and potential construction from configuration.

use crate::config::{ConfigError, ExperimentConfig};
use conoscatter::geom::NestedPair;
use conoscatter::potential::{
    synthesize, ModelProfileKind, PotentialField, PotentialSpec, ProfileKind,
};
use nalgebra::Vector3;
use std::sync::Arc;

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

/// Build the nested pair for a named scenario.
pub fn build_pair(config: &ExperimentConfig) -> Result<Arc<NestedPair>, ConfigError> {
    let s = &config.scenario;
    let pair = match s.name.as_str() {
        "plane" | "bump" | "zero" => NestedPair::plane(s.plane_offset, s.half_box),
        "plane-line" => NestedPair::plane_line(s.plane_offset, s.line_offset, s.half_box),
        "sphere" => NestedPair::sphere(v3(s.sphere_center), s.sphere_radius, s.half_box),
        "sphere-equator" => {
            NestedPair::sphere_equator(v3(s.sphere_center), s.sphere_radius, s.half_box)
        }
        other => {
            return Err(ConfigError { detail: format!("scenario.name: unknown '{other}'") })
        }
    };
    Ok(Arc::new(pair))
}

/// Build the evaluable potential (without the volumetric cache).
pub fn build_potential(config: &ExperimentConfig) -> Result<PotentialField, ConfigError> {
    let pair = build_pair(config)?;
    let p = &config.potential;
    let mut field = match config.scenario.name.as_str() {
        "zero" => PotentialField::zero(pair, p.support_radius, p.mollify_scale),
        "bump" => {
            let width = config.scenario.bump_width;
            let center = v3(config.scenario.bump_center);
            let amplitude = p.amplitude;
            PotentialField::custom(
                pair,
                p.support_radius,
                p.mollify_scale,
                Arc::new(move |x: Vector3<f64>| {
                    amplitude * conoscatter::math::bump((x - center).norm() / width)
                }),
            )
        }
        _ => {
            let profile = match p.profile.as_str() {
                "fourier" => ProfileKind::FourierSymbol,
                "delta-layer" => ProfileKind::ModelProfile(ModelProfileKind::DeltaLayer),
                "heaviside" => ProfileKind::ModelProfile(ModelProfileKind::Heaviside),
                "power-law" => {
                    ProfileKind::ModelProfile(ModelProfileKind::PowerLaw { mu: p.power_mu })
                }
                other => {
                    return Err(ConfigError {
                        detail: format!("potential.profile: unknown '{other}'"),
                    })
                }
            };
            let mut spec = match profile {
                ProfileKind::FourierSymbol => PotentialSpec::fourier(
                    pair,
                    p.m1,
                    p.m2,
                    p.support_radius,
                    p.mollify_scale,
                ),
                ProfileKind::ModelProfile(kind) => {
                    PotentialSpec::model(pair, kind, p.support_radius, p.mollify_scale)
                }
            };
            spec.amplitude = p.amplitude;
            if p.modulate_y1 != 0.0 {
                let c = p.modulate_y1;
                spec.modulation = Some(Arc::new(move |x: Vector3<f64>| 1.0 + c * x.x));
            }
            synthesize(&spec)
                .map_err(|e| ConfigError { detail: format!("potential: {e}") })?
        }
    };
    let _ = &mut field;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_scenarios_build() {
        // single-surface scenarios take the model-profile default
        for name in ["plane", "sphere", "bump", "zero"] {
            let toml = format!("[scenario]\nname = \"{name}\"\n");
            let config = ExperimentConfig::from_toml(&toml).unwrap();
            build_pair(&config).unwrap();
            build_potential(&config).unwrap();
        }
        // nested scenarios need a two-scale synthesis profile
        for name in ["plane-line", "sphere-equator"] {
            let toml = format!(
                "[scenario]\nname = \"{name}\"\n[potential]\nprofile = \"fourier\"\nm1 = -1.5\nm2 = -1.0\n"
            );
            let config = ExperimentConfig::from_toml(&toml).unwrap();
            build_pair(&config).unwrap();
            build_potential(&config).unwrap();
        }
    }

    #[test]
    fn fourier_profile_on_nested_pair() {
        let toml = r#"
[scenario]
name = "plane-line"
[potential]
profile = "fourier"
m1 = -1.5
m2 = -1.0
"#;
        let config = ExperimentConfig::from_toml(toml).unwrap();
        let field = build_potential(&config).unwrap();
        assert!(field.eval(Vector3::new(0.1, 0.02, 0.01)).abs() > 0.0);
    }
}
