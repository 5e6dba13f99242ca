//! Builders for the reference systems (oscillators, a rigid body, a joint and
//! a two-body mechanism), demonstration parameters, and reference solutions
//! computed without the port-Hamiltonian machinery.

pub mod builders;
pub mod demo;
pub mod oracles;

use ephs_components::ComponentError;
use thiserror::Error;

pub use builders::{
    body_binding, body_pattern, build_basic_mbs, build_basic_mbs_flat, build_body, build_damped_oscillator,
    build_damped_oscillator_flat, build_joint, build_oscillator, damped_oscillator_flat_pattern,
    damped_oscillator_pattern, joint_binding, joint_pattern, mbs_flat_pattern, mbs_pattern, oscillator_pattern, Model,
};
pub use oracles::{
    free_body_reference, oracle_damped_oscillator, oracle_minimal_pendulum, pendulum_energy, rk4_damped_oscillator,
    FreeBodyState, PendulumState,
};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("bad parameter: {0}")]
    BadParam(#[from] ComponentError),
    #[error("the closed form covers underdamped motion only (d² < 4mk)")]
    Overdamped,
}
