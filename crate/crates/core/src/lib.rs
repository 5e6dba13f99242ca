//! Syntax of exergetic port-Hamiltonian systems: quantities, interfaces,
//! interconnection patterns, nesting and flattening.

mod equiv;
mod flatten;
mod pattern;
mod quantity;

pub use equiv::{interface_equiv, Renaming};
pub use flatten::{flatten, substitute, Binding, FlatBinding, FlatEntry, Filling, FlattenError, Leaf};
pub use pattern::{Diagnostic, Pattern, PortRef, Rule, Wire};
pub use quantity::{Interface, JointKind, PortDecl, PortKind, Quantity, Space, UnknownQuantity};
