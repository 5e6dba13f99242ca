#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComponentError {
    #[error("bad parameter `{name}`: {reason}")]
    BadParam { name: String, reason: String },
    #[error("joint axis must have unit length, got norm {norm}")]
    BadAxis { norm: f64 },
    #[error("state not admissible: {0}")]
    BadState(String),
    #[error("inputs do not match the causality signature: {0}")]
    BadSignature(String),
    #[error("absolute temperature {0} is not positive")]
    NonPositiveTemperature(f64),
}
