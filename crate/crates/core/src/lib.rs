//! Explicit finite-difference integrators for the cubic nonlinear
//! Schrödinger equation on uniform grids in one to three dimensions.

pub mod boundary;
pub mod config;
pub mod engine;
pub mod error;
pub mod field;
pub mod frame;
pub mod harness;
pub mod integrator;
pub mod problems;
pub mod stability;
pub mod stencil;

pub use boundary::BoundaryKind;
pub use engine::{integrate_chunk_parallel, plan_tiles, Engine, HaloMode, TilePlan};
pub use error::{Error, Result};
pub use field::{ComplexField, GridSpec, Precision, Real, RealField};
pub use integrator::{f_rhs, integrate_chunk, rk4_step, Diagnostics, IntegratorState, SimParams};
pub use stability::{stability_bounds, StabilityReport};
pub use stencil::SchemeKind;
