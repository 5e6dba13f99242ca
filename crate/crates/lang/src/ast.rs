use std::collections::BTreeMap;

use ephs_core::{Interface, Pattern, PortDecl, PortKind, PortRef, Quantity, Wire};
use serde::{Deserialize, Serialize};

use crate::diag::Span;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortItem {
    pub name: String,
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub state: bool,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionItem {
    pub name: String,
    pub quantity: Quantity,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxItem {
    pub name: String,
    pub ports: Vec<PortItem>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireItem {
    pub port: PortRef,
    pub junction: String,
    #[serde(skip)]
    pub span: Span,
    #[serde(skip)]
    pub junction_span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDecl {
    pub name: String,
    #[serde(default)]
    pub outer: Vec<PortItem>,
    #[serde(default)]
    pub junctions: Vec<JunctionItem>,
    #[serde(default)]
    pub boxes: Vec<BoxItem>,
    #[serde(default)]
    pub wires: Vec<WireItem>,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Number(f64),
    Ident(String),
    List(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arg {
    pub name: String,
    pub value: Literal,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BindTarget {
    Component { ctor: String, args: Vec<Arg> },
    Pattern(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindDecl {
    pub path: String,
    pub target: BindTarget,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Include {
    pub path: String,
    #[serde(skip)]
    pub span: Span,
}

/// A parsed model file: pattern declarations, bindings of the root pattern's
/// boxes (by dotted path) and included files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    #[serde(default)]
    pub includes: Vec<Include>,
    #[serde(default)]
    pub patterns: Vec<PatternDecl>,
    #[serde(default)]
    pub binds: Vec<BindDecl>,
}

fn port(p: &PortItem) -> PortDecl {
    let kind = if p.state { PortKind::State } else { PortKind::Power };
    PortDecl { name: p.name.clone(), quantity: p.quantity.clone(), kind }
}

fn iface(ports: &[PortItem]) -> Interface {
    Interface::new(ports.iter().map(port).collect())
}

impl PatternDecl {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            outer: Vec::new(),
            junctions: Vec::new(),
            boxes: Vec::new(),
            wires: Vec::new(),
            span: Span::default(),
        }
    }

    /// The pattern as a core value; later duplicates of a box or junction win.
    pub fn to_pattern(&self) -> Pattern {
        Pattern {
            name: self.name.clone(),
            outer: iface(&self.outer),
            junctions: self.junctions.iter().map(|j| (j.name.clone(), j.quantity.clone())).collect(),
            boxes: self.boxes.iter().map(|b| (b.name.clone(), iface(&b.ports))).collect(),
            wires: self.wires.iter().map(|w| Wire { port: w.port.clone(), junction: w.junction.clone() }).collect(),
        }
    }

    pub fn from_pattern(p: &Pattern) -> Self {
        let ports = |i: &Interface| {
            i.ports
                .iter()
                .map(|d| PortItem {
                    name: d.name.clone(),
                    quantity: d.quantity.clone(),
                    state: d.kind == PortKind::State,
                    span: Span::default(),
                })
                .collect::<Vec<_>>()
        };
        Self {
            name: p.name.clone(),
            outer: ports(&p.outer),
            junctions: p
                .junctions
                .iter()
                .map(|(n, q)| JunctionItem { name: n.clone(), quantity: q.clone(), span: Span::default() })
                .collect(),
            boxes: p
                .boxes
                .iter()
                .map(|(n, i)| BoxItem { name: n.clone(), ports: ports(i), span: Span::default() })
                .collect(),
            wires: p
                .wires
                .iter()
                .map(|w| WireItem {
                    port: w.port.clone(),
                    junction: w.junction.clone(),
                    span: Span::default(),
                    junction_span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        }
    }

    /// Sorted junctions, boxes and wires, spans cleared. Port order inside an
    /// interface is significant and kept.
    pub fn canonical(&self) -> Self {
        Self::from_pattern(&self.to_pattern().canonical())
    }
}

impl SourceModel {
    pub fn pattern(&self, name: &str) -> Option<&PatternDecl> {
        self.patterns.iter().find(|p| p.name == name)
    }

    pub fn bind(&self, path: &str) -> Option<&BindDecl> {
        self.binds.iter().find(|b| b.path == path)
    }

    /// Names of patterns that are bound into another pattern's box.
    pub fn referenced(&self) -> BTreeMap<&str, &BindDecl> {
        self.binds
            .iter()
            .filter_map(|b| match &b.target {
                BindTarget::Pattern(n) => Some((n.as_str(), b)),
                _ => None,
            })
            .collect()
    }

    /// Patterns that are not bound anywhere; a complete model has exactly one.
    pub fn roots(&self) -> Vec<&PatternDecl> {
        let r = self.referenced();
        self.patterns.iter().filter(|p| !r.contains_key(p.name.as_str())).collect()
    }

    /// Canonical form: includes in source order, non-root patterns by name with
    /// the roots last, binds by path, everything sorted within and spans cleared.
    pub fn canonical(&self) -> Self {
        let roots: Vec<String> = self.roots().iter().map(|p| p.name.clone()).collect();
        let mut patterns: Vec<PatternDecl> = self.patterns.iter().map(PatternDecl::canonical).collect();
        patterns.sort_by(|a, b| (roots.contains(&a.name), &a.name).cmp(&(roots.contains(&b.name), &b.name)));
        let mut binds: Vec<BindDecl> = self
            .binds
            .iter()
            .map(|b| {
                let target = match &b.target {
                    BindTarget::Component { ctor, args } => BindTarget::Component {
                        ctor: ctor.clone(),
                        args: args.iter().map(|a| Arg { span: Span::default(), ..a.clone() }).collect(),
                    },
                    t => t.clone(),
                };
                BindDecl { path: b.path.clone(), target, span: Span::default() }
            })
            .collect();
        binds.sort_by(|a, b| a.path.cmp(&b.path));
        Self {
            includes: self.includes.iter().map(|i| Include { path: i.path.clone(), span: Span::default() }).collect(),
            patterns,
            binds,
        }
    }
}
