//! Lowering of a flat pattern and its binding to an index-2 DAE
//! `ẋ = f(x, z)`, `0 = g(x, z)`.
//!
//! Each junction effort has exactly one defining port: a storage or
//! environment port, the junction-side port of an offset, an open outer port,
//! or else an algebraic unknown. Flows at a junction satisfy
//! `Σ inner = Σ outer`, with storage flows equal to the state rate.

mod audit;
mod error;
mod system;
mod tape;

pub use audit::{AuditReport, ComponentPower, ConstraintReport};
pub use error::AssembleError;
pub use system::{
    assemble, resolve_theta0, AlgKind, AlgSlot, AssembleOptions, DaeSystem, DiffSlot, DriftChain, Evaluation, SlotKind,
    VariableLayout, DEFAULT_THETA0,
};
