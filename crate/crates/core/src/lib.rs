//! Pseudospectral simulation of fourth-order (biharmonic) wave maps
//! `u_tt + Δ²u ⊥ T_uN` on periodic boxes in one and two dimensions.
//!
//! The numerical core is generic over the scalar type ([`Scalar`], implemented
//! for `f32` and `f64`); the `*64` aliases below fix double precision, which is
//! what every tolerance in the test suites assumes.

pub mod calibration;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod invariants;
pub mod io;
pub mod scalar;
pub mod study;

pub use calibration::Calibration;
pub use config::{parse_config, InitialData, RunConfig};
pub use diagnostics::{DiagnosticsRecord, GnRatios, GronwallForm, Monitor};
pub use dynamics::SimulationState;
pub use error::{Error, Result};
pub use geometry::{Derivatives, JetOrder, ManifoldKind, ManifoldSpec, ProjectorJet};
pub use grid::{divergence, Grid, GridField, Lp, Spectrum};
pub use initial::make_initial;
pub use integrator::{evolve, free_propagator, step, Scheme, SchemeConfig};
pub use scalar::Scalar;

pub type Grid64 = Grid<f64>;
pub type GridField64 = GridField<f64>;
pub type ManifoldSpec64 = ManifoldSpec<f64>;
pub type SimulationState64 = SimulationState<f64>;
pub type SchemeConfig64 = SchemeConfig<f64>;
