use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quantity::{Interface, PortDecl, PortKind, Quantity};

/// A port of an inner box (`box.port`) or of the outer interface (`port`).
///
/// Box names may themselves be dotted paths after flattening, so the textual
/// form splits at the last dot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub owner: Option<String>,
    pub port: String,
}

impl PortRef {
    pub fn outer(port: &str) -> Self {
        Self { owner: None, port: port.to_string() }
    }

    pub fn inner(owner: &str, port: &str) -> Self {
        Self { owner: Some(owner.to_string()), port: port.to_string() }
    }

    pub fn is_outer(&self) -> bool {
        self.owner.is_none()
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.owner {
            Some(b) => write!(f, "{b}.{}", self.port),
            None => f.write_str(&self.port),
        }
    }
}

impl FromStr for PortRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.rsplit_once('.') {
            Some((b, p)) => PortRef::inner(b, p),
            None => PortRef::outer(s),
        })
    }
}

impl Serialize for PortRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PortRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Wire {
    pub port: PortRef,
    pub junction: String,
}

/// An interconnection pattern: an outer interface, inner boxes with their
/// interfaces, junctions, and the wiring of every port to a junction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    pub outer: Interface,
    pub junctions: BTreeMap<String, Quantity>,
    pub boxes: BTreeMap<String, Interface>,
    pub wires: Vec<Wire>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    EmptyName,
    DuplicatePort,
    UnknownBox,
    UnknownPort,
    UnknownJunction,
    DoubleWire,
    UnwiredPort,
    QuantityMismatch,
    DanglingOuter,
    UnusedJunction,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::EmptyName => "EMPTY_NAME",
            Rule::DuplicatePort => "DUPLICATE_PORT",
            Rule::UnknownBox => "UNKNOWN_BOX",
            Rule::UnknownPort => "UNKNOWN_PORT",
            Rule::UnknownJunction => "UNKNOWN_JUNCTION",
            Rule::DoubleWire => "DOUBLE_WIRE",
            Rule::UnwiredPort => "UNWIRED_PORT",
            Rule::QuantityMismatch => "QUANTITY_MISMATCH",
            Rule::DanglingOuter => "DANGLING_OUTER",
            Rule::UnusedJunction => "UNUSED_JUNCTION",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule: Rule,
    /// `pattern/port-or-junction`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.location, self.message)
    }
}

impl Pattern {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            outer: Interface::default(),
            junctions: BTreeMap::new(),
            boxes: BTreeMap::new(),
            wires: Vec::new(),
        }
    }

    pub fn with_outer(mut self, port: PortDecl) -> Self {
        self.outer.ports.push(port);
        self
    }

    pub fn with_junction(mut self, id: &str, quantity: Quantity) -> Self {
        self.junctions.insert(id.to_string(), quantity);
        self
    }

    pub fn with_box(mut self, name: &str, ports: Vec<PortDecl>) -> Self {
        self.boxes.insert(name.to_string(), Interface::new(ports));
        self
    }

    /// Adds a wire from `port` (`box.port` or an outer port name) to `junction`.
    pub fn with_wire(mut self, port: &str, junction: &str) -> Self {
        self.wires.push(Wire { port: port.parse().unwrap(), junction: junction.to_string() });
        self
    }

    /// Declaration of a port, looked up in the outer interface or a box.
    pub fn port_decl(&self, r: &PortRef) -> Option<&PortDecl> {
        match &r.owner {
            None => self.outer.port(&r.port),
            Some(b) => self.boxes.get(b)?.port(&r.port),
        }
    }

    /// Junction of a port (the first wire, if several).
    pub fn junction_of(&self, r: &PortRef) -> Option<&str> {
        self.wires.iter().find(|w| &w.port == r).map(|w| w.junction.as_str())
    }

    /// All declared ports: outer first, then boxes in name order.
    pub fn all_ports(&self) -> Vec<(PortRef, &PortDecl)> {
        let outer = self.outer.ports.iter().map(|p| (PortRef::outer(&p.name), p));
        let inner = self
            .boxes
            .iter()
            .flat_map(|(b, i)| i.ports.iter().map(move |p| (PortRef::inner(b, &p.name), p)));
        outer.chain(inner).collect()
    }

    /// Ports wired to `junction`, in wire order.
    pub fn ports_at<'a>(&'a self, junction: &'a str) -> impl Iterator<Item = &'a PortRef> + 'a {
        self.wires.iter().filter(move |w| w.junction == junction).map(|w| &w.port)
    }

    /// Sorts the wire list; the canonical form used for comparison and output.
    pub fn canonicalize(&mut self) {
        self.wires.sort();
        self.wires.dedup();
    }

    pub fn canonical(&self) -> Self {
        let mut p = self.clone();
        p.canonicalize();
        p
    }

    /// Deterministic JSON with sorted object keys and sorted wires.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self.canonical()).expect("pattern serializes");
        serde_json::to_string_pretty(&value).expect("json value prints")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Checks the structural invariants; an empty list means the pattern is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut diag = |rule: Rule, at: String, message: String| {
            out.push(Diagnostic { rule, location: format!("{}/{}", self.name, at), message });
        };

        if self.name.is_empty() {
            diag(Rule::EmptyName, String::new(), "pattern has no name".into());
        }
        for (owner, iface) in std::iter::once(("outer".to_string(), &self.outer))
            .chain(self.boxes.iter().map(|(b, i)| (b.clone(), i)))
        {
            if owner.is_empty() {
                diag(Rule::EmptyName, owner.clone(), "box has no name".into());
            }
            let mut seen = BTreeSet::new();
            for p in &iface.ports {
                if p.name.is_empty() {
                    diag(Rule::EmptyName, owner.clone(), "port has no name".into());
                } else if !seen.insert(p.name.as_str()) {
                    diag(Rule::DuplicatePort, format!("{owner}.{}", p.name), "port declared twice".into());
                }
            }
        }
        for id in self.junctions.keys().filter(|id| id.is_empty()) {
            diag(Rule::EmptyName, id.clone(), "junction has no name".into());
        }

        let mut wired: BTreeMap<&PortRef, usize> = BTreeMap::new();
        for w in &self.wires {
            let at = w.port.to_string();
            if let Some(b) = &w.port.owner {
                if !self.boxes.contains_key(b) {
                    diag(Rule::UnknownBox, at, format!("no box named `{b}`"));
                    continue;
                }
            }
            let Some(decl) = self.port_decl(&w.port) else {
                diag(Rule::UnknownPort, at, "no such port".into());
                continue;
            };
            *wired.entry(&w.port).or_default() += 1;
            match self.junctions.get(&w.junction) {
                None => diag(Rule::UnknownJunction, at, format!("no junction named `{}`", w.junction)),
                Some(q) if *q != decl.quantity => diag(
                    Rule::QuantityMismatch,
                    at,
                    format!("port carries {} but junction `{}` carries {q}", decl.quantity, w.junction),
                ),
                Some(_) => {}
            }
        }
        for (r, _) in self.all_ports() {
            match wired.get(&r).copied().unwrap_or(0) {
                0 => diag(Rule::UnwiredPort, r.to_string(), "port is not wired".into()),
                1 => {}
                n => diag(Rule::DoubleWire, r.to_string(), format!("port is wired {n} times")),
            }
        }

        for id in self.junctions.keys() {
            let ports: Vec<_> = self.ports_at(id).filter(|r| self.port_decl(r).is_some()).collect();
            if ports.is_empty() {
                diag(Rule::UnusedJunction, id.clone(), "junction has no ports".into());
            } else if ports.iter().any(|r| r.is_outer()) && ports.iter().all(|r| r.is_outer()) {
                diag(Rule::DanglingOuter, id.clone(), "outer port meets no inner port".into());
            }
        }
        out
    }

    /// Inner power ports at a junction.
    pub fn power_ports_at<'a>(&'a self, junction: &'a str) -> impl Iterator<Item = &'a PortRef> + 'a {
        self.ports_at(junction).filter(move |r| {
            !r.is_outer() && self.port_decl(r).is_some_and(|d| d.kind == PortKind::Power)
        })
    }
}
