use ephs_assemble::AssembleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("Newton iteration diverged at t = {t}: residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged { t: f64, residual: f64, iterations: usize },
    #[error("inconsistent initial state: {0}")]
    InconsistentInitialState(String),
    #[error("constraint `{constraint}` cannot be satisfied by the given poses (mismatch {mismatch:.3e})")]
    InfeasibleConstraint { constraint: String, mismatch: f64 },
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}
