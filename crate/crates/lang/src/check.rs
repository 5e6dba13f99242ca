use std::collections::BTreeSet;

use ephs_core::Rule;

use crate::ast::{PatternDecl, SourceModel};
use crate::diag::{Code, Diagnostic, Span};

/// Declaration-level checks: duplicate names and the structural rules of
/// every pattern, located at the offending item.
pub fn check_model(m: &SourceModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for p in &m.patterns {
        if !seen.insert(p.name.as_str()) {
            out.push(Diagnostic::new(Code::DuplicatePattern, p.span, format!("pattern `{}` declared twice", p.name)));
        }
        out.extend(check_pattern(p));
    }
    let mut seen = BTreeSet::new();
    for b in &m.binds {
        if !seen.insert(b.path.as_str()) {
            out.push(Diagnostic::new(Code::DuplicateBinding, b.span, format!("`{}` bound twice", b.path)));
        }
    }
    out
}

pub fn check_pattern(p: &PatternDecl) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for j in &p.junctions {
        if !seen.insert(j.name.as_str()) {
            out.push(Diagnostic::new(Code::DuplicateJunction, j.span, format!("junction `{}` declared twice", j.name)));
        }
    }
    let mut seen = BTreeSet::new();
    for b in &p.boxes {
        if !seen.insert(b.name.as_str()) {
            out.push(Diagnostic::new(Code::DuplicateBox, b.span, format!("box `{}` declared twice", b.name)));
        }
    }
    if !out.is_empty() {
        return out;
    }

    // Wire-level findings come out in wire order, at most one per wire.
    let mut cursor = 0;
    let prefix = format!("{}/", p.name);
    for d in p.to_pattern().validate() {
        let at = d.location.strip_prefix(&prefix).unwrap_or(&d.location);
        let span = match d.rule {
            Rule::UnknownBox | Rule::UnknownPort | Rule::UnknownJunction | Rule::QuantityMismatch => {
                match p.wires[cursor..].iter().position(|w| w.port.to_string() == at) {
                    Some(i) => {
                        let w = &p.wires[cursor + i];
                        cursor += i + 1;
                        if d.rule == Rule::UnknownJunction {
                            w.junction_span
                        } else {
                            w.span
                        }
                    }
                    None => p.span,
                }
            }
            Rule::DoubleWire => p.wires.iter().rev().find(|w| w.port.to_string() == at).map_or(p.span, |w| w.span),
            Rule::DuplicatePort | Rule::UnwiredPort => port_span(p, at, d.rule == Rule::DuplicatePort).unwrap_or(p.span),
            Rule::UnusedJunction | Rule::DanglingOuter => {
                p.junctions.iter().find(|j| j.name == at).map_or(p.span, |j| j.span)
            }
            Rule::EmptyName => p.span,
        };
        out.push(Diagnostic::new(Code::Pattern(d.rule), span, d.message));
    }
    out
}

/// Span of a port given as `box.port`, `outer.port` or `port`; `last` picks
/// the final declaration when the name repeats.
fn port_span(p: &PatternDecl, at: &str, last: bool) -> Option<Span> {
    let (owner, port) = match at.rsplit_once('.') {
        Some((o, port)) => (Some(o), port),
        None => (None, at),
    };
    let ports = match owner {
        None => &p.outer,
        Some(o) => match p.boxes.iter().find(|b| b.name == o) {
            Some(b) => &b.ports,
            None if o == "outer" => &p.outer,
            None => return None,
        },
    };
    let mut it = ports.iter().filter(|q| q.name == port);
    let hit = if last { it.next_back() } else { it.next() };
    hit.map(|q| q.span)
}
