use std::collections::BTreeMap;

use crate::equiv::{interface_equiv, Renaming};
use crate::pattern::{Diagnostic, Pattern, PortRef, Wire};
use crate::quantity::Interface;

/// Anything that can fill a box of a pattern.
pub trait Leaf: Clone {
    fn interface(&self) -> Interface;
}

/// What fills a box: a primitive or a nested pattern with its own binding.
#[derive(Debug, Clone, PartialEq)]
pub enum Filling<L> {
    Leaf(L),
    Nested { pattern: Pattern, binding: Binding<L> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding<L> {
    pub boxes: BTreeMap<String, Filling<L>>,
}

impl<L> Default for Binding<L> {
    fn default() -> Self {
        Self { boxes: BTreeMap::new() }
    }
}

impl<L: Leaf> Binding<L> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf(mut self, name: &str, item: L) -> Self {
        self.boxes.insert(name.to_string(), Filling::Leaf(item));
        self
    }

    pub fn nested(mut self, name: &str, pattern: Pattern, binding: Binding<L>) -> Self {
        self.boxes.insert(name.to_string(), Filling::Nested { pattern, binding });
        self
    }

    pub fn from_flat(flat: &FlatBinding<L>) -> Self {
        Self {
            boxes: flat.iter().map(|(k, e)| (k.clone(), Filling::Leaf(e.item.clone()))).collect(),
        }
    }
}

/// A primitive bound to a box of a flat pattern; `renaming` maps the
/// primitive's port names to the box's port names.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatEntry<L> {
    pub item: L,
    pub renaming: Renaming,
}

pub type FlatBinding<L> = BTreeMap<String, FlatEntry<L>>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlattenError {
    #[error("interface of `{path}` does not match its box")]
    InterfaceMismatch { path: String },
    #[error("box `{path}` has no binding")]
    IncompleteBinding { path: String },
    #[error("binding names `{path}`, which is not a box")]
    UnknownBox { path: String },
    #[error("pattern `{path}` is invalid: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { path: String, diagnostics: Vec<Diagnostic> },
}

impl FlattenError {
    fn under(self, prefix: &str) -> Self {
        let join = |p: String| format!("{prefix}.{p}");
        match self {
            FlattenError::InterfaceMismatch { path } => FlattenError::InterfaceMismatch { path: join(path) },
            FlattenError::IncompleteBinding { path } => FlattenError::IncompleteBinding { path: join(path) },
            FlattenError::UnknownBox { path } => FlattenError::UnknownBox { path: join(path) },
            FlattenError::Invalid { path, diagnostics } => FlattenError::Invalid { path: join(path), diagnostics },
        }
    }
}

struct Classes {
    parent: BTreeMap<(bool, String), (bool, String)>,
}

impl Classes {
    fn find(&mut self, k: &(bool, String)) -> (bool, String) {
        let p = self.parent.get(k).cloned().unwrap_or_else(|| k.clone());
        if &p == k {
            return p;
        }
        let root = self.find(&p);
        self.parent.insert(k.clone(), root.clone());
        root
    }

    // Roots prefer outer junctions (`false` sorts first), then the smallest name.
    fn union(&mut self, a: (bool, String), b: (bool, String)) {
        let (ra, rb) = (self.find(&a), self.find(&b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
        }
    }
}

/// Replaces box `box_name` of `outer` by the pattern `inner`, whose outer ports
/// are mapped onto the box ports by `renaming`. Inner boxes and unexposed
/// junctions receive the `box_name.` prefix; exposed junctions merge with the
/// outer junctions they meet and keep the outer name.
pub fn substitute(
    outer: &Pattern,
    box_name: &str,
    inner: &Pattern,
    renaming: &Renaming,
) -> Result<Pattern, FlattenError> {
    let mismatch = || FlattenError::InterfaceMismatch { path: box_name.to_string() };
    let slot = outer.boxes.get(box_name).ok_or_else(|| FlattenError::UnknownBox { path: box_name.to_string() })?;
    if renaming.len() != inner.outer.len() || renaming.len() != slot.len() {
        return Err(mismatch());
    }
    for p in &inner.outer.ports {
        let target = renaming.get(&p.name).and_then(|n| slot.port(n)).ok_or_else(mismatch)?;
        if target.quantity != p.quantity || target.kind != p.kind {
            return Err(mismatch());
        }
    }
    let mut seen: Vec<_> = renaming.values().collect();
    seen.sort();
    seen.dedup();
    if seen.len() != renaming.len() {
        return Err(mismatch());
    }

    let mut classes = Classes { parent: BTreeMap::new() };
    for p in &inner.outer.ports {
        let j_in = inner.junction_of(&PortRef::outer(&p.name)).ok_or_else(mismatch)?;
        let j_out = outer.junction_of(&PortRef::inner(box_name, &renaming[&p.name])).ok_or_else(mismatch)?;
        classes.union((false, j_out.to_string()), (true, j_in.to_string()));
    }
    let mut name_of = |inner_side: bool, id: &str| -> String {
        let (is_inner, root) = classes.find(&(inner_side, id.to_string()));
        if is_inner {
            format!("{box_name}.{root}")
        } else {
            root
        }
    };

    let mut result = Pattern::new(&outer.name);
    result.outer = outer.outer.clone();
    for (id, q) in &outer.junctions {
        result.junctions.insert(name_of(false, id), q.clone());
    }
    for (id, q) in &inner.junctions {
        result.junctions.insert(name_of(true, id), q.clone());
    }
    for (b, i) in &outer.boxes {
        if b != box_name {
            result.boxes.insert(b.clone(), i.clone());
        }
    }
    for (b, i) in &inner.boxes {
        result.boxes.insert(format!("{box_name}.{b}"), i.clone());
    }
    for w in &outer.wires {
        if w.port.owner.as_deref() != Some(box_name) {
            result.wires.push(Wire { port: w.port.clone(), junction: name_of(false, &w.junction) });
        }
    }
    for w in &inner.wires {
        if let Some(b) = &w.port.owner {
            result.wires.push(Wire {
                port: PortRef::inner(&format!("{box_name}.{b}"), &w.port.port),
                junction: name_of(true, &w.junction),
            });
        }
    }
    result.canonicalize();
    Ok(result)
}

/// Flattens a hierarchy of nested patterns into a single pattern whose boxes
/// are all filled by primitives. Boxes are substituted in name order; the
/// result does not depend on that order.
pub fn flatten<L: Leaf>(p: &Pattern, b: &Binding<L>) -> Result<(Pattern, FlatBinding<L>), FlattenError> {
    let diagnostics = p.validate();
    if !diagnostics.is_empty() {
        return Err(FlattenError::Invalid { path: p.name.clone(), diagnostics });
    }
    if let Some(name) = p.boxes.keys().find(|k| !b.boxes.contains_key(*k)) {
        return Err(FlattenError::IncompleteBinding { path: name.clone() });
    }
    if let Some(name) = b.boxes.keys().find(|k| !p.boxes.contains_key(*k)) {
        return Err(FlattenError::UnknownBox { path: name.clone() });
    }

    let mut current = p.canonical();
    let mut flat = FlatBinding::new();
    for (name, filling) in &b.boxes {
        let slot = &p.boxes[name];
        match filling {
            Filling::Leaf(item) => {
                let renaming = interface_equiv(&item.interface(), slot)
                    .ok_or_else(|| FlattenError::InterfaceMismatch { path: name.clone() })?;
                flat.insert(name.clone(), FlatEntry { item: item.clone(), renaming });
            }
            Filling::Nested { pattern, binding } => {
                let (fp, fb) = flatten(pattern, binding).map_err(|e| e.under(name))?;
                let renaming = interface_equiv(&fp.outer, slot)
                    .ok_or_else(|| FlattenError::InterfaceMismatch { path: name.clone() })?;
                current = substitute(&current, name, &fp, &renaming)?;
                for (k, e) in fb {
                    flat.insert(format!("{name}.{k}"), e);
                }
            }
        }
    }
    Ok((current, flat))
}
