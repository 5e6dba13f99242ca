//! Primitive systems: storage components defined by an energy function,
//! reversible components defined by a Dirac structure, irreversible components
//! defined by an Onsager structure, and the isothermal environment.

mod component;
mod error;
mod joint;
pub mod laws;
mod value;

pub use component::{
    make_revolute, BodyParams, Component, ComponentKind, EnvParams, FrictionSpace, JointParams, PkcSpace, Potential,
    PortVars,
};
pub use error::ComponentError;
pub use joint::JointGeometry;
pub use value::{Coords, Value};
