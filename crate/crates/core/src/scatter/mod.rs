//! Scattering-kernel assembly and restriction.
//!
//! The kernel α(s, θ, ω) is the far-field response of the first Born term.
//! Its retarded-time axis follows the Lax-Phillips orientation: an echo from
//! a scatterer point y sits at s = −y·(ω − θ), so the backscattering trace
//! of a point at y peaks at s = −2y·ν̂ — matching the backscatter chart and
//! making the recovery map y = −c ∇_ω s* − (s*/2) ω read off physical
//! points. Two assembly routes are kept and cross-checked:
//!
//! * Friedlander: finite-radius receiver traces r·∂_t u1(rθ, r − s);
//! * Lax-Phillips: R_LP(v0, v1) = C_n D_s (D_s R v0 − R v1) on the time-t0
//!   slice, realized through the exact identity that the Radon transform of
//!   a retarded potential is a one-dimensional convolution of the
//!   direction-projected potential (see `kernel.rs`).

mod kernel;
mod radon;
mod restrict;

pub use kernel::{
    farfield_convergence, lax_phillips_column, scattering_kernel, KernelConfig, KernelRoute,
    PairSelection,
};
pub use radon::{lax_phillips, multiplier_n3, radon, RadonValue, MULTIPLIER_N3_DOC};
pub use restrict::{
    columns_for_slice, restrict, validate_slice, Cor84Report, DataSliceSpec, RestrictedData,
    SliceKind,
};

use crate::sphere::DirGrid;
use crate::wavefield::WaveError;
use std::fmt;

/// Uniform retarded-time grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SGrid {
    pub s0: f64,
    pub ds: f64,
    pub n: usize,
}

impl SGrid {
    /// Symmetric grid covering [−half, half] with spacing ≤ ds_target.
    pub fn symmetric(half: f64, ds_target: f64) -> Self {
        let n = (2.0 * half / ds_target).ceil() as usize + 1;
        let ds = 2.0 * half / (n as f64 - 1.0);
        SGrid { s0: -half, ds, n }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.ds
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i)).collect()
    }

    pub fn max(&self) -> f64 {
        self.at(self.n - 1)
    }
}

/// Provenance and conventions of an assembled kernel.
#[derive(Debug, Clone, Copy)]
pub struct KernelMeta {
    pub pulse_epsilon: f64,
    pub t0: f64,
    pub r_far: f64,
    pub route: KernelRoute,
    /// Overall Lax-Phillips constant; positions and relative decay are what
    /// feed reconstruction, so this stays 1 and is recorded here.
    pub c_n: f64,
    /// Support radius of the potential that produced the kernel.
    pub support_radius: f64,
}

/// Sampled scattered part of the kernel: one s-trace per computed (θ, ω)
/// column. Dense assemblies have every column; paired assemblies (e.g.
/// backscattering) only the columns they need.
pub struct ScatteringKernel {
    pub s_grid: SGrid,
    pub theta_grid: DirGrid,
    pub omega_grid: DirGrid,
    columns: Vec<Option<Vec<f64>>>,
    pub meta: KernelMeta,
}

impl fmt::Debug for ScatteringKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScatteringKernel")
            .field("n_s", &self.s_grid.n)
            .field("n_theta", &self.theta_grid.len())
            .field("n_omega", &self.omega_grid.len())
            .field("columns", &self.columns.iter().filter(|c| c.is_some()).count())
            .finish()
    }
}

impl ScatteringKernel {
    pub fn new_empty(
        s_grid: SGrid,
        theta_grid: DirGrid,
        omega_grid: DirGrid,
        meta: KernelMeta,
    ) -> Self {
        let columns = vec![None; theta_grid.len() * omega_grid.len()];
        ScatteringKernel { s_grid, theta_grid, omega_grid, columns, meta }
    }

    fn slot(&self, theta_idx: usize, omega_idx: usize) -> usize {
        theta_idx * self.omega_grid.len() + omega_idx
    }

    pub fn set_column(&mut self, theta_idx: usize, omega_idx: usize, values: Vec<f64>) {
        assert_eq!(values.len(), self.s_grid.n);
        let slot = self.slot(theta_idx, omega_idx);
        self.columns[slot] = Some(values);
    }

    pub fn column(&self, theta_idx: usize, omega_idx: usize) -> Option<&[f64]> {
        self.columns[self.slot(theta_idx, omega_idx)].as_deref()
    }

    pub fn is_dense(&self) -> bool {
        self.columns.iter().all(|c| c.is_some())
    }

    pub fn max_abs(&self) -> f64 {
        self.columns
            .iter()
            .flatten()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Echo-support check: the largest |value| at |s| > 2ρ + 6ε, relative to
    /// the overall maximum.
    pub fn tail_fraction(&self) -> f64 {
        let bound = 2.0 * self.meta.support_radius + 6.0 * self.meta.pulse_epsilon;
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let mut tail = 0.0f64;
        for col in self.columns.iter().flatten() {
            for (i, v) in col.iter().enumerate() {
                if self.s_grid.at(i).abs() > bound {
                    tail = tail.max(v.abs());
                }
            }
        }
        tail / max
    }
}

/// Errors from kernel assembly and restriction.
#[derive(Debug, Clone)]
pub enum ScatterError {
    SGridTooCoarse { ds: f64, pulse_epsilon: f64 },
    T0TooSmall { t0: f64, required: f64 },
    FarfieldUnconverged { rel_change: f64 },
    /// Cor-8.4 validation failure; condition ∈ {1, 2, 3}.
    SliceInvalid { condition: u8, detail: String },
    MissingColumn { theta_idx: usize, omega_idx: usize },
    InvalidInput { detail: String },
    Wave(WaveError),
}

impl fmt::Display for ScatterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScatterError::SGridTooCoarse { ds, pulse_epsilon } => {
                write!(f, "S_GRID_TOO_COARSE: pulse width {pulse_epsilon} < 4 ds = {}", 4.0 * ds)
            }
            ScatterError::T0TooSmall { t0, required } => {
                write!(f, "T0_TOO_SMALL: {t0} < required {required}")
            }
            ScatterError::FarfieldUnconverged { rel_change } => {
                write!(f, "FARFIELD_UNCONVERGED: doubling R_far changes kernel by {rel_change:.3}")
            }
            ScatterError::SliceInvalid { condition, detail } => {
                write!(f, "SLICE_INVALID (condition {condition}): {detail}")
            }
            ScatterError::MissingColumn { theta_idx, omega_idx } => {
                write!(f, "kernel column (θ {theta_idx}, ω {omega_idx}) was not assembled")
            }
            ScatterError::InvalidInput { detail } => write!(f, "invalid input: {detail}"),
            ScatterError::Wave(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ScatterError {}

impl From<WaveError> for ScatterError {
    fn from(e: WaveError) -> Self {
        ScatterError::Wave(e)
    }
}
