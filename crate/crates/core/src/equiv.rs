use std::collections::BTreeMap;

use crate::quantity::{Interface, PortKind, Quantity};

type Classes<'a> = BTreeMap<(&'a Quantity, PortKind), Vec<&'a str>>;

fn classes(i: &Interface) -> Classes<'_> {
    let mut m: Classes = BTreeMap::new();
    for p in &i.ports {
        m.entry((&p.quantity, p.kind)).or_default().push(&p.name);
    }
    m.values_mut().for_each(|v| v.sort_unstable());
    m
}

/// Bijection from the port names of one interface to those of another.
pub type Renaming = BTreeMap<String, String>;

/// Finds a renaming of the ports of `a` onto the ports of `b` that preserves
/// quantity and kind. Within each (quantity, kind) class equal names are matched
/// first; the remaining ports are paired in lexicographic order.
pub fn interface_equiv(a: &Interface, b: &Interface) -> Option<Renaming> {
    if a.len() != b.len() {
        return None;
    }
    let ca = classes(a);
    let cb = classes(b);
    if ca.len() != cb.len() {
        return None;
    }
    let mut out = Renaming::new();
    for (key, names_a) in ca {
        let names_b = cb.get(&key)?;
        if names_a.len() != names_b.len() {
            return None;
        }
        let mut rest_a = Vec::new();
        for n in &names_a {
            if names_b.contains(n) {
                out.insert(n.to_string(), n.to_string());
            } else {
                rest_a.push(*n);
            }
        }
        let rest_b = names_b.iter().filter(|n| !names_a.contains(n));
        for (x, y) in rest_a.into_iter().zip(rest_b) {
            out.insert(x.to_string(), y.to_string());
        }
    }
    (out.len() == a.len()).then_some(out)
}
