//! Time integration of assembled systems.
//!
//! Poses advance through the group (exponential or Cayley map of the stage
//! twist, or the joint subgroup exponential for relative poses), so rotation
//! matrices stay orthogonal to roundoff. Vector states and algebraic unknowns
//! are found together by a Newton iteration with a finite-difference
//! Jacobian.

mod config;
mod error;
mod integrator;
pub mod newton;
mod project;
mod state;
mod trajectory;

pub use config::{IntegratorConfig, Method};
pub use error::SimError;
pub use integrator::{step, Integrator, StepReport};
pub use project::{consistent_algebraic, project_initial, ProjectOptions, POSITION_TOL, VELOCITY_TOL};
pub use state::{SystemState, MEMBERSHIP_TOL};
pub use trajectory::{simulate, Sample, Summary, Trajectory, CONSISTENCY_TOL};
