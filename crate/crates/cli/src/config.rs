//! Experiment configuration: flat key = value sections per pipeline module,
//! loaded from TOML.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Configuration errors carry the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub detail: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CONFIG_INVALID: {}", self.detail)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(detail: impl Into<String>) -> ConfigError {
    ConfigError { detail: detail.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// plane | plane-line | sphere | sphere-equator | bump | zero
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_half_box")]
    pub half_box: f64,
    #[serde(default = "default_sphere_radius")]
    pub sphere_radius: f64,
    #[serde(default)]
    pub sphere_center: [f64; 3],
    #[serde(default)]
    pub plane_offset: f64,
    #[serde(default)]
    pub line_offset: f64,
    /// Width of the `bump` scenario's smooth blob.
    #[serde(default = "default_bump_width")]
    pub bump_width: f64,
    #[serde(default)]
    pub bump_center: [f64; 3],
}

fn default_seed() -> u64 {
    7
}
fn default_half_box() -> f64 {
    1.0
}
fn default_sphere_radius() -> f64 {
    0.5
}
fn default_bump_width() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// fourier | delta-layer | heaviside | power-law (bump/zero scenarios
    /// ignore this)
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "default_m1")]
    pub m1: f64,
    #[serde(default)]
    pub m2: f64,
    #[serde(default = "default_power_mu")]
    pub power_mu: f64,
    #[serde(default = "default_rho")]
    pub support_radius: f64,
    #[serde(default = "default_mollify")]
    pub mollify_scale: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Linear symbol modulation a(y) = 1 + c·y₁ (0 disables).
    #[serde(default)]
    pub modulate_y1: f64,
}

fn default_profile() -> String {
    "delta-layer".into()
}
fn default_m1() -> f64 {
    -2.0
}
fn default_power_mu() -> f64 {
    -0.5
}
fn default_rho() -> f64 {
    0.7
}
fn default_mollify() -> f64 {
    0.05
}
fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// 0 = derive from the potential's mollify scale (4×).
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection { epsilon: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    #[serde(default = "default_potential_n")]
    pub potential_n: usize,
    /// Δs = ds_factor · ε.
    #[serde(default = "default_ds_factor")]
    pub ds_factor: f64,
    /// Extra s-range beyond the echo support, in pulse widths.
    #[serde(default = "default_s_margin")]
    pub s_margin_pulses: f64,
    #[serde(default = "default_omega_level")]
    pub omega_level: u32,
    #[serde(default = "default_theta_level")]
    pub theta_level: u32,
}

fn default_potential_n() -> usize {
    64
}
fn default_ds_factor() -> f64 {
    0.5
}
fn default_s_margin() -> f64 {
    10.0
}
fn default_omega_level() -> u32 {
    2
}
fn default_theta_level() -> u32 {
    2
}

impl Default for GridsSection {
    fn default() -> Self {
        GridsSection {
            potential_n: default_potential_n(),
            ds_factor: default_ds_factor(),
            s_margin_pulses: default_s_margin(),
            omega_level: default_omega_level(),
            theta_level: default_theta_level(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutesSection {
    /// friedlander | lax-phillips
    #[serde(default = "default_route")]
    pub kernel_route: String,
    /// backscatter | full | slice (columns needed by the [slice] section)
    #[serde(default = "default_pairs")]
    pub pairs: String,
    #[serde(default = "default_r_far_factor")]
    pub r_far_factor: f64,
    #[serde(default = "default_t0_factor")]
    pub t0_factor: f64,
    #[serde(default)]
    pub check_farfield: bool,
}

fn default_route() -> String {
    "friedlander".into()
}
fn default_pairs() -> String {
    "backscatter".into()
}
fn default_r_far_factor() -> f64 {
    4.0
}
fn default_t0_factor() -> f64 {
    10.0
}

impl Default for RoutesSection {
    fn default() -> Self {
        RoutesSection {
            kernel_route: default_route(),
            pairs: default_pairs(),
            r_far_factor: default_r_far_factor(),
            t0_factor: default_t0_factor(),
            check_farfield: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSection {
    /// backscatter | rotated | identity (identity exists to exercise the
    /// condition-1 rejection)
    #[serde(default = "default_slice_kind")]
    pub kind: String,
    #[serde(default = "default_slice_angle")]
    pub angle_deg: f64,
    #[serde(default = "default_slice_axis")]
    pub axis: [f64; 3],
    /// Tangency tolerance for the Gauss-map condition.
    #[serde(default = "default_tangency")]
    pub tangency_tol: f64,
}

fn default_slice_kind() -> String {
    "backscatter".into()
}
fn default_slice_angle() -> f64 {
    10.0
}
fn default_slice_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_tangency() -> f64 {
    0.1
}

impl Default for SliceSection {
    fn default() -> Self {
        SliceSection {
            kind: default_slice_kind(),
            angle_deg: default_slice_angle(),
            axis: default_slice_axis(),
            tangency_tol: default_tangency(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    #[serde(default = "default_floor_k")]
    pub noise_floor_k: f64,
    #[serde(default = "default_rel_floor")]
    pub relative_floor: f64,
    #[serde(default = "default_calibration_c")]
    pub calibration_c: f64,
    /// Spatial clustering radius in potential-grid cells.
    #[serde(default = "default_cluster_cells")]
    pub cluster_cells: f64,
    #[serde(default = "default_tangency")]
    pub wedge_tol: f64,
    #[serde(default)]
    pub expect_two_classes: bool,
    /// Exclude tangential wedges from the known scenario geometry
    /// (validation mode); blind mode relies on detection flags only.
    #[serde(default = "default_true")]
    pub use_geometry_wedges: bool,
}

fn default_floor_k() -> f64 {
    3.0
}
fn default_rel_floor() -> f64 {
    0.04
}
fn default_calibration_c() -> f64 {
    0.5
}
fn default_cluster_cells() -> f64 {
    3.0
}
fn default_true() -> bool {
    true
}

impl Default for ReconstructSection {
    fn default() -> Self {
        ReconstructSection {
            noise_floor_k: default_floor_k(),
            relative_floor: default_rel_floor(),
            calibration_c: default_calibration_c(),
            cluster_cells: default_cluster_cells(),
            wedge_tol: default_tangency(),
            expect_two_classes: false,
            use_geometry_wedges: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default)]
    pub threads: usize,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out_dir(), threads: 0 }
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    #[serde(default = "default_potential_section")]
    pub potential: PotentialSection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub routes: RoutesSection,
    #[serde(default)]
    pub slice: SliceSection,
    #[serde(default)]
    pub reconstruct: ReconstructSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_potential_section() -> PotentialSection {
    PotentialSection {
        profile: default_profile(),
        m1: default_m1(),
        m2: 0.0,
        power_mu: default_power_mu(),
        support_radius: default_rho(),
        mollify_scale: default_mollify(),
        amplitude: default_amplitude(),
        modulate_y1: 0.0,
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Effective pulse width: explicit, or 4× the potential's band-limit
    /// scale so the pulse controls resolution.
    pub fn pulse_epsilon(&self) -> f64 {
        if self.pulse.epsilon > 0.0 {
            self.pulse.epsilon
        } else {
            4.0 * self.potential.mollify_scale
        }
    }

    /// Potential-grid spacing (the "grid cell" unit of the acceptance
    /// tolerances).
    pub fn grid_cell(&self) -> f64 {
        2.0 * self.potential.support_radius * 1.02 / (self.grids.potential_n as f64 - 1.0)
    }

    /// Resolution relations from the module preconditions, checked at load.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let known = ["plane", "plane-line", "sphere", "sphere-equator", "bump", "zero"];
        if !known.contains(&self.scenario.name.as_str()) {
            return Err(invalid(format!(
                "scenario.name: unknown scenario '{}' (expected one of {known:?})",
                self.scenario.name
            )));
        }
        let known_profiles = ["fourier", "delta-layer", "heaviside", "power-law"];
        if !known_profiles.contains(&self.potential.profile.as_str()) {
            return Err(invalid(format!(
                "potential.profile: unknown profile '{}'",
                self.potential.profile
            )));
        }
        if self.potential.support_radius <= 0.0 {
            return Err(invalid("potential.support_radius: must be positive"));
        }
        if self.potential.mollify_scale <= 0.0 {
            return Err(invalid("potential.mollify_scale: must be positive"));
        }
        if self.grids.potential_n < 9 {
            return Err(invalid("grids.potential_n: need at least 9 nodes"));
        }
        let eps = self.pulse_epsilon();
        let dx = self.grid_cell();
        // quadrature shells must span ≥ 2 grid cells
        if 3.0 * eps < 2.0 * dx {
            return Err(invalid(format!(
                "pulse.epsilon: shell thickness 3ε = {:.4} under 2 grid cells {:.4}",
                3.0 * eps,
                2.0 * dx
            )));
        }
        // the potential grid must resolve the band limit
        if self.potential.mollify_scale < 2.0 * dx {
            return Err(invalid(format!(
                "potential.mollify_scale: {:.4} under 2 grid cells {:.4}",
                self.potential.mollify_scale,
                2.0 * dx
            )));
        }
        // the s-grid must resolve the pulse (detector precondition Δs ≤ ε/2)
        if self.grids.ds_factor > 0.5 + 1e-12 {
            return Err(invalid("grids.ds_factor: must be ≤ 0.5 (Δs ≤ ε/2)"));
        }
        if self.routes.t0_factor < self.routes.r_far_factor + 2.0 + 10.0 * eps {
            // t0 ≥ R_far + 2ρ + 10ε in units of ρ (ε term conservative)
            return Err(invalid(format!(
                "routes.t0_factor: {} too small for r_far_factor {} (echo must escape)",
                self.routes.t0_factor, self.routes.r_far_factor
            )));
        }
        match self.routes.kernel_route.as_str() {
            "friedlander" | "lax-phillips" => {}
            other => return Err(invalid(format!("routes.kernel_route: unknown '{other}'"))),
        }
        match self.routes.pairs.as_str() {
            "backscatter" | "full" | "slice" => {}
            other => return Err(invalid(format!("routes.pairs: unknown '{other}'"))),
        }
        match self.slice.kind.as_str() {
            "backscatter" | "rotated" | "identity" => {}
            other => return Err(invalid(format!("slice.kind: unknown '{other}'"))),
        }
        Ok(())
    }

    /// Stable hash of the serialized config (manifests record it).
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = toml::to_string(self).unwrap_or_default();
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        hex_string(&h.finalize())
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_toml("[scenario]\nname = \"sphere\"\n").unwrap();
        assert_eq!(c.scenario.name, "sphere");
        assert_eq!(c.grids.potential_n, 64);
        assert!(c.pulse_epsilon() > 0.0);
    }

    #[test]
    fn unknown_scenario_is_rejected_with_field_path() {
        let err = ExperimentConfig::from_toml("[scenario]\nname = \"torus\"\n").unwrap_err();
        assert!(err.detail.contains("scenario.name"), "{err}");
    }

    #[test]
    fn resolution_relations_are_checked() {
        let toml = r#"
[scenario]
name = "sphere"
[potential]
mollify_scale = 0.001
[grids]
potential_n = 16
"#;
        let err = ExperimentConfig::from_toml(toml).unwrap_err();
        assert!(err.detail.contains("pulse.epsilon") || err.detail.contains("mollify"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_config_sensitive() {
        let a = ExperimentConfig::from_toml("[scenario]\nname = \"sphere\"\n").unwrap();
        let b =
            ExperimentConfig::from_toml("[scenario]\nname = \"sphere\"\nseed = 9\n").unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
