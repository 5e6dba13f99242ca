use std::fmt::Write;

use crate::ast::{BindDecl, BindTarget, Literal, PatternDecl, PortItem, SourceModel};

fn number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:?}")
    }
}

fn literal(out: &mut String, l: &Literal) {
    match l {
        Literal::Number(x) => out.push_str(&number(*x)),
        Literal::Ident(s) => out.push_str(s),
        Literal::List(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                literal(out, x);
            }
            out.push(']');
        }
    }
}

fn portlist(ports: &[PortItem]) -> String {
    let items: Vec<String> = ports
        .iter()
        .map(|p| format!("{}: {}{}", p.name, p.quantity, if p.state { ":state" } else { "" }))
        .collect();
    format!("({})", items.join(", "))
}

/// One pattern in canonical layout; an empty pattern prints on one line.
pub fn serialize_pattern(p: &PatternDecl) -> String {
    let p = p.canonical();
    if p.outer.is_empty() && p.junctions.is_empty() && p.boxes.is_empty() && p.wires.is_empty() {
        return format!("pattern {} {{ }}", p.name);
    }
    let mut s = format!("pattern {} {{\n", p.name);
    if !p.outer.is_empty() {
        writeln!(s, "  outer {}", portlist(&p.outer)).unwrap();
    }
    for j in &p.junctions {
        writeln!(s, "  junction {}: {}", j.name, j.quantity).unwrap();
    }
    for b in &p.boxes {
        writeln!(s, "  box {} {}", b.name, portlist(&b.ports)).unwrap();
    }
    for w in &p.wires {
        writeln!(s, "  wire {} -> {}", w.port, w.junction).unwrap();
    }
    s.push('}');
    s
}

fn serialize_bind(b: &BindDecl) -> String {
    let mut s = format!("bind {} = ", b.path);
    match &b.target {
        BindTarget::Pattern(n) => write!(s, "pattern {n}").unwrap(),
        BindTarget::Component { ctor, args } => {
            s.push_str(ctor);
            s.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write!(s, "{} = ", a.name).unwrap();
                literal(&mut s, &a.value);
            }
            s.push(')');
        }
    }
    s
}

/// Deterministic text of the canonical form of `m`.
pub fn serialize(m: &SourceModel) -> String {
    let m = m.canonical();
    let mut blocks = Vec::new();
    if !m.includes.is_empty() {
        blocks.push(m.includes.iter().map(|i| format!("include \"{}\"", i.path)).collect::<Vec<_>>().join("\n"));
    }
    blocks.extend(m.patterns.iter().map(serialize_pattern));
    if !m.binds.is_empty() {
        blocks.push(m.binds.iter().map(serialize_bind).collect::<Vec<_>>().join("\n"));
    }
    let mut s = blocks.join("\n\n");
    s.push('\n');
    s
}
