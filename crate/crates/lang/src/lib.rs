//! Text form of interconnection patterns and their bindings.
//!
//! ```text
//! pattern osc {
//!   outer (p: momentum)
//!   junction p: momentum
//!   junction q: displacement
//!   box pe (q: displacement)
//!   wire pe.q -> q
//!   ...
//! }
//! bind pe = spring(k = 1)
//! ```
//!
//! Identifiers may be dotted paths, so flattened patterns can be written
//! directly. Bind paths are relative to the root pattern, the one pattern not
//! bound into another.

mod ast;
mod check;
mod diag;
mod lexer;
mod load;
mod lower;
mod parser;
mod serialize;

pub use ast::{Arg, BindDecl, BindTarget, BoxItem, Include, JunctionItem, Literal, PatternDecl, PortItem, SourceModel, WireItem};
pub use check::{check_model, check_pattern};
pub use diag::{Code, Diagnostic, Diagnostics, Span};
pub use lexer::{lex, Tok, Token};
pub use load::{from_json, load, parse_file, to_json};
pub use lower::{component, lower, root, CONSTRUCTORS};
pub use parser::parse;
pub use serialize::{serialize, serialize_pattern};
