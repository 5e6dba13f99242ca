use thiserror::Error;

use crate::Convention;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("matrix is not skew-symmetric (deviation {deviation:e})")]
    NotSkew { deviation: f64 },
    #[error("operands use different group conventions ({left:?} vs {right:?})")]
    ConventionMismatch { left: Convention, right: Convention },
    #[error("rotation angle {angle} is too close to pi for a unique logarithm")]
    NearPiSingularity { angle: f64 },
    #[error("material velocity is not tangent at the base point (deviation {deviation:e})")]
    NotTangent { deviation: f64 },
    #[error("matrix is not a rotation (orthogonality error {orthogonality:e}, det {det})")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("non-finite entries")]
    NonFinite,
}
