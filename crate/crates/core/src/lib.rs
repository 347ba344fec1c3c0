//! Forward-and-inverse scattering workbench for potentials conormal to a
//! nested pair of submanifolds S2 ⊂ S1 ⊂ R³.
//!
//! The crate is organized around the stages of the time-domain Born pipeline:
//!
//! * [`geom`] — phase-space geometry: conormal fibers, characteristic sets,
//!   flowout / reflected / backscattering Lagrangian charts, finite-difference
//!   Jacobian ranks, clean-intersection certificates, and the multiphase
//!   Hamilton–Jacobi solver.
//! * [`potential`] — synthesis of evaluable nested-conormal potentials with
//!   prescribed two-scale symbol orders, plus blowup-rate and Fourier order
//!   verification.
//! * [`wavefield`] — the retarded Green's operator in three space dimensions,
//!   producing the Born term u1 (optionally u2) with a brute-force quadrature
//!   oracle.
//! * [`scatter`] — Radon / Lax-Phillips assembly of the scattering kernel and
//!   its restriction to backscattering or general graph data sets.
//! * [`reconstruct`] — echo detection on the restricted kernel, recovery of
//!   the submanifolds as point clouds, and conormal order estimation.
//!
//! Everything is deterministic given a seed; all operations are pure
//! functions of their inputs and safe to call concurrently.

pub mod geom;
pub mod grid;
pub mod math;
pub mod potential;
pub mod reconstruct;
pub mod scatter;
pub mod sphere;
pub mod wavefield;

pub use geom::{ChartKind, LagrangianChart, NestedPair, PhasePoint};
pub use grid::Grid3;
pub use potential::{PotentialField, PotentialSpec};
pub use scatter::ScatteringKernel;
pub use sphere::DirGrid;
pub use wavefield::{SourcePulse, WaveTrace};
