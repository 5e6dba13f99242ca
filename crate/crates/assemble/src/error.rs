use ephs_components::ComponentError;
use ephs_core::Diagnostic;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssembleError {
    #[error("pattern is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("box `{0}` has no binding")]
    IncompleteBinding(String),
    #[error("binding of box `{0}` does not match its interface")]
    InterfaceMismatch(String),
    #[error("junction `{junction}` has more than one effort-defining port: {}", .ports.join(", "))]
    CausalityConflict { junction: String, ports: Vec<String> },
    #[error("junction `{0}` has no effort-defining port and admits no algebraic unknown")]
    UnderdeterminedJunction(String),
    #[error("effort at junction `{0}` depends on itself")]
    AlgebraicLoop(String),
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch { what: String, expected: usize, got: usize },
    #[error("component `{path}`: {source}")]
    Component { path: String, source: ComponentError },
    #[error("environments disagree on the reference temperature: {0} vs {1}")]
    ThetaConflict(f64, f64),
}
