use std::collections::{BTreeMap, BTreeSet};

use ephs_components::{Component, ComponentKind, Coords, JointGeometry, PkcSpace, Value};
use ephs_core::{FlatBinding, Pattern, PortKind, PortRef, Quantity, Space};
use ephs_geom::{Convention, GroupElement};

use crate::error::AssembleError;
use crate::tape::{Node, Op, Repr, Storages, Tape};

/// Reference temperature used when neither the caller nor an environment sets one.
pub const DEFAULT_THETA0: f64 = 298.15;

#[derive(Debug, Clone, PartialEq)]
pub enum SlotKind {
    Vector,
    /// A pose in `SE(3)`; rates are body twists.
    Pose,
    /// A relative pose in a joint subgroup; rates are joint coordinates.
    Subgroup(JointGeometry),
}

/// A differential variable: the state shared at one junction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSlot {
    pub junction: String,
    pub quantity: Quantity,
    /// Offset of the trivialized rate in `ẋ`.
    pub offset: usize,
    pub dim: usize,
    /// Box whose storage (or environment) port defines the junction.
    pub storage: String,
    pub kind: SlotKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlgKind {
    /// Effort at a junction without storage.
    Effort { junction: String },
    /// Multiplier of a holonomic constraint box.
    Multiplier { constraint: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgSlot {
    pub name: String,
    pub kind: AlgKind,
    pub offset: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    pub differential: Vec<DiffSlot>,
    pub algebraic: Vec<AlgSlot>,
    pub nx: usize,
    pub nz: usize,
}

impl VariableLayout {
    pub fn slot(&self, junction: &str) -> Option<&DiffSlot> {
        self.differential.iter().find(|s| s.junction == junction)
    }

    pub fn slot_index(&self, junction: &str) -> Option<usize> {
        self.differential.iter().position(|s| s.junction == junction)
    }

    pub fn algebraic_slot(&self, name: &str) -> Option<&AlgSlot> {
        self.algebraic.iter().find(|s| s.name == name)
    }

    /// Zero momenta and entropy, identity poses.
    pub fn initial_state(&self) -> Vec<Value> {
        self.differential
            .iter()
            .map(|s| match s.kind {
                SlotKind::Vector => Value::Vector(Coords::zeros(s.dim)),
                _ => Value::Pose(GroupElement::identity(Convention::SemidirectProduct)),
            })
            .collect()
    }

    /// Column names of the flattened state followed by the algebraic unknowns.
    pub fn column_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.differential {
            let j = &s.junction;
            match s.kind {
                SlotKind::Vector if s.dim == 1 => out.push(j.clone()),
                SlotKind::Vector => out.extend((1..=s.dim).map(|i| format!("{j}[{i}]"))),
                _ => {
                    for r in 1..=3 {
                        out.extend((1..=3).map(|c| format!("{j}.R{r}{c}")));
                    }
                    out.extend((1..=3).map(|i| format!("{j}.r{i}")));
                }
            }
        }
        for a in &self.algebraic {
            match &a.kind {
                AlgKind::Effort { junction } if a.dim == 1 => out.push(format!("{junction}.e")),
                AlgKind::Effort { junction } => out.extend((1..=a.dim).map(|i| format!("{junction}.e[{i}]"))),
                AlgKind::Multiplier { constraint } => out.extend((1..=a.dim).map(|i| format!("{constraint}.lambda{i}"))),
            }
        }
        out
    }

    /// Flattens a state into the numbers named by [`Self::column_names`].
    pub fn state_columns(&self, x: &[Value], out: &mut Vec<f64>) {
        for v in x {
            match v {
                Value::Vector(c) => out.extend_from_slice(c.as_slice()),
                Value::Pose(q) => {
                    for r in 0..3 {
                        out.extend((0..3).map(|c| q.rot[(r, c)]));
                    }
                    out.extend(q.trans.iter().copied());
                }
                other => panic!("not a state value: {other:?}"),
            }
        }
    }
}

/// Poses needed to measure the position drift of one constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftChain {
    pub constraint: String,
    pub q_r: usize,
    pub q1: usize,
    pub o1: GroupElement,
    pub q2: usize,
    pub o2: GroupElement,
}

impl DriftChain {
    /// `‖log(q_r⁻¹ (q1 o1)⁻¹ (q2 o2))‖`.
    pub fn drift(&self, x: &[Value]) -> f64 {
        let qj1 = x[self.q1].pose().then(&self.o1);
        let qj2 = x[self.q2].pose().then(&self.o2);
        let d = x[self.q_r].pose().inverse().then(&qj1.inverse()).then(&qj2);
        d.log().map(|t| Coords::from_twist(&t).norm()).unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PortRecord {
    pub comp: usize,
    pub effort: Node,
    pub flow: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    Balance,
    Constraint,
}

/// An assembled system `ẋ = f(x, z)`, `0 = g(x, z)`.
#[derive(Debug, Clone)]
pub struct DaeSystem {
    pub pattern: Pattern,
    pub layout: VariableLayout,
    pub theta0: f64,
    /// Remarks raised during assembly, such as capped outer ports.
    pub notes: Vec<String>,
    pub drift_chains: Vec<DriftChain>,
    pub(crate) components: Vec<(String, Component)>,
    pub(crate) tape: Tape,
    pub(crate) rates: Vec<Node>,
    pub(crate) rows: Vec<(String, RowKind, Node)>,
    pub(crate) outputs: Vec<(String, Node)>,
    pub(crate) ports: Vec<PortRecord>,
}

/// Values of one evaluation of the right-hand side.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Trivialized state rates, laid out like `ẋ`.
    pub rates: Vec<f64>,
    /// Algebraic rows: junction balances, then velocity constraints.
    pub algebraic: Vec<f64>,
    pub(crate) values: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Definer {
    Storage(usize),
    Env(usize),
    OffsetPj(usize),
    Outer,
    Algebraic,
}

struct Builder<'a> {
    pat: &'a Pattern,
    comps: Vec<(String, Component)>,
    box_index: BTreeMap<String, usize>,
    to_box: Vec<BTreeMap<String, String>>,
    to_comp: Vec<BTreeMap<String, String>>,
    definer: BTreeMap<String, (Definer, Option<PortRef>)>,
    slots: BTreeMap<String, usize>,
    alg: BTreeMap<String, (usize, usize)>,
    lambda: BTreeMap<usize, usize>,
    tape: Tape,
    effort_memo: BTreeMap<String, Node>,
    sink_memo: BTreeMap<String, Node>,
    flow_memo: BTreeMap<(usize, String), Node>,
    lambda_memo: BTreeMap<usize, Node>,
    busy: BTreeSet<String>,
}

fn effort_repr(space: Space) -> Repr {
    match space {
        Space::Group(_) => Repr::Cotangent,
        s => Repr::Coords(s.tangent_dim()),
    }
}

fn flow_repr(space: Space) -> Repr {
    match space {
        Space::Group(_) => Repr::Tangent,
        s => Repr::Coords(s.tangent_dim()),
    }
}

impl<'a> Builder<'a> {
    fn junction(&self, b: usize, cport: &str) -> Result<String, AssembleError> {
        let bport = self.to_box[b].get(cport).ok_or_else(|| AssembleError::InterfaceMismatch(self.comps[b].0.clone()))?;
        self.pat
            .junction_of(&PortRef::inner(&self.comps[b].0, bport))
            .map(str::to_string)
            .ok_or_else(|| AssembleError::Invalid(self.pat.validate()))
    }

    fn space(&self, j: &str) -> Space {
        self.pat.junctions[j].space
    }

    fn enter(&mut self, key: String, j: &str) -> Result<(), AssembleError> {
        if !self.busy.insert(key) {
            return Err(AssembleError::AlgebraicLoop(j.to_string()));
        }
        Ok(())
    }

    fn state(&mut self, j: &str) -> Result<Node, AssembleError> {
        let slot = *self.slots.get(j).ok_or_else(|| AssembleError::UnderdeterminedJunction(j.to_string()))?;
        Ok(self.tape.push(Op::State { slot, name: j.to_string() }))
    }

    fn effort(&mut self, j: &str) -> Result<Node, AssembleError> {
        if let Some(&n) = self.effort_memo.get(j) {
            return Ok(n);
        }
        self.enter(format!("e:{j}"), j)?;
        let (def, port) = self.definer[j].clone();
        let n = match def {
            Definer::Storage(b) => {
                let x = self.state(j)?;
                self.tape.push(Op::StorageEffort { boxi: b, label: self.comps[b].0.clone(), x })
            }
            Definer::Env(_) => self.tape.push(Op::Zero(Repr::Coords(1))),
            Definer::OffsetPj(b) => {
                let Component::Offset { o, side } = self.comps[b].1 else { unreachable!() };
                let jp = self.junction(b, &format!("p{side}"))?;
                let e = self.effort(&jp)?;
                self.tape.push(Op::AdInv { o, label: self.comps[b].0.clone(), e })
            }
            Definer::Outer => {
                let p = port.expect("outer definer");
                self.tape.push(Op::External { name: format!("{}.e", p.port), repr: effort_repr(self.space(j)) })
            }
            Definer::Algebraic => {
                let (offset, dim) = self.alg[j];
                self.tape.push(Op::Alg { offset, dim, name: format!("e[{j}]") })
            }
        };
        self.busy.remove(&format!("e:{j}"));
        self.effort_memo.insert(j.to_string(), n);
        Ok(n)
    }

    fn lambda(&mut self, b: usize) -> Node {
        if let Some(&n) = self.lambda_memo.get(&b) {
            return n;
        }
        let offset = self.lambda[&b];
        let n = self.tape.push(Op::Alg { offset, dim: 6, name: format!("λ[{}]", self.comps[b].0) });
        self.lambda_memo.insert(b, n);
        n
    }

    /// Power ports at a junction: inner ones sorted by (box, port), then outer ones.
    fn ports_at(&self, j: &str) -> Vec<PortRef> {
        let mut inner: Vec<PortRef> = Vec::new();
        let mut outer: Vec<PortRef> = Vec::new();
        let power = self.pat.ports_at(j).filter(|r| self.pat.port_decl(r).is_some_and(|d| d.kind == PortKind::Power));
        for r in power {
            if r.is_outer() {
                outer.push(r.clone());
            } else {
                inner.push(r.clone());
            }
        }
        inner.sort();
        outer.sort();
        inner.extend(outer);
        inner
    }

    fn inner_flow(&mut self, r: &PortRef) -> Result<Node, AssembleError> {
        let owner = r.owner.as_deref().expect("inner port");
        let b = self.box_index[owner];
        let cport = self.to_comp[b][&r.port].clone();
        self.flow(b, &cport)
    }

    fn external_flow(&mut self, r: &PortRef, j: &str) -> Node {
        self.tape.push(Op::External { name: format!("{}.f", r.port), repr: flow_repr(self.space(j)) })
    }

    /// Flow that closes the balance at `j`, assigned to its defining port. For
    /// algebraic junctions this is the balance residual itself.
    fn sink(&mut self, j: &str) -> Result<Node, AssembleError> {
        if let Some(&n) = self.sink_memo.get(j) {
            return Ok(n);
        }
        self.enter(format!("f:{j}"), j)?;
        let (def, dport) = self.definer[j].clone();
        let mut terms = Vec::new();
        for r in self.ports_at(j) {
            if Some(&r) == dport.as_ref() {
                continue;
            }
            let f = if r.is_outer() { self.external_flow(&r, j) } else { self.inner_flow(&r)? };
            // Defining inner ports receive Σ outer − Σ other inner; outer
            // definers and balance rows receive Σ inner − Σ other outer.
            let positive = match def {
                Definer::Outer | Definer::Algebraic => !r.is_outer(),
                _ => r.is_outer(),
            };
            terms.push(if positive { f } else { self.tape.push(Op::Neg(f)) });
        }
        let n = self.tape.push(Op::Sum(terms, flow_repr(self.space(j))));
        self.busy.remove(&format!("f:{j}"));
        self.sink_memo.insert(j.to_string(), n);
        Ok(n)
    }

    fn flow(&mut self, b: usize, cport: &str) -> Result<Node, AssembleError> {
        let key = (b, cport.to_string());
        if let Some(&n) = self.flow_memo.get(&key) {
            return Ok(n);
        }
        let comp = self.comps[b].1.clone();
        let label = self.comps[b].0.clone();
        let j = |s: &Self, p: &str| s.junction(b, p);
        let n = match (&comp, cport) {
            (Component::Pkc(PkcSpace::Scalar), "q") => {
                let e = self.effort(&j(self, "p")?)?;
                self.tape.push(Op::Neg(e))
            }
            (Component::Pkc(PkcSpace::Scalar), "p") => self.effort(&j(self, "q")?)?,
            (Component::Pkc(space), "q" | "q_r") => {
                let coords = !matches!(space, PkcSpace::Body);
                let (jq, jp) = if coords { (j(self, "q_r")?, j(self, "p_r")?) } else { (j(self, "q")?, j(self, "p")?) };
                let q = self.state(&jq)?;
                let v = self.effort(&jp)?;
                let t = self.tape.push(Op::TeL { q, v, coords });
                self.tape.push(Op::Neg(t))
            }
            (Component::Pkc(space), "p" | "p_r") => {
                let coords = !matches!(space, PkcSpace::Body);
                let jq = if coords { j(self, "q_r")? } else { j(self, "q")? };
                let q = self.state(&jq)?;
                let f = self.effort(&jq)?;
                self.tape.push(Op::TStarEL { q, f, coords })
            }
            (Component::LiePoisson, _) => {
                let jp = j(self, "p")?;
                let u = self.effort(&jp)?;
                let p = self.state(&jp)?;
                let a = self.tape.push(Op::AdStar { u, p });
                self.tape.push(Op::Neg(a))
            }
            (Component::Offset { o, side }, p) if p == format!("p{side}") => {
                let f = self.flow(b, &format!("pj{side}"))?;
                let a = self.tape.push(Op::AdStarInv { o: *o, label, f });
                self.tape.push(Op::Neg(a))
            }
            (Component::Offset { .. }, pj) => self.sink(&j(self, pj)?)?,
            (Component::Constraint { joint }, p) => {
                let l = self.lambda(b);
                match p {
                    "pj1" => {
                        let q = self.state(&j(self, "q_r")?)?;
                        self.tape.push(Op::AdStarIInv { q, f: l })
                    }
                    "pj2" => self.tape.push(Op::Neg(l)),
                    "p_r" => self.tape.push(Op::Restrict { joint: joint.clone(), f: l }),
                    _ => return Err(AssembleError::InterfaceMismatch(label)),
                }
            }
            (Component::Friction { mu, .. }, p) => {
                let pn = if self.to_box[b].contains_key("p_r") { "p_r" } else { "p" };
                let u = self.effort(&j(self, pn)?)?;
                if p == "s" {
                    let se = self.effort(&j(self, "s")?)?;
                    let q = self.tape.push(Op::Quad { mu: mu.clone(), label, u, se });
                    self.tape.push(Op::Neg(q))
                } else {
                    self.tape.push(Op::Flat { mu: mu.clone(), label, u })
                }
            }
            (_, p) => self.sink(&j(self, p)?)?,
        };
        self.flow_memo.insert(key, n);
        Ok(n)
    }
}

/// Resolves the reference temperature from an explicit value, the environment
/// components, or [`DEFAULT_THETA0`].
pub fn resolve_theta0(override_: Option<f64>, comps: &[&Component]) -> Result<f64, AssembleError> {
    if let Some(t) = override_ {
        if !(t > 0.0 && t.is_finite()) {
            return Err(AssembleError::Component {
                path: "theta0".into(),
                source: ephs_components::ComponentError::NonPositiveTemperature(t),
            });
        }
        return Ok(t);
    }
    let mut found: Option<f64> = None;
    for c in comps {
        if let Component::Environment { theta0 } = c {
            match found {
                Some(t) if t != *theta0 => return Err(AssembleError::ThetaConflict(t, *theta0)),
                _ => found = Some(*theta0),
            }
        }
    }
    Ok(found.unwrap_or(DEFAULT_THETA0))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssembleOptions {
    /// Overrides the reference temperature of every environment.
    pub theta0: Option<f64>,
}

/// Lowers a flat pattern and its binding to a DAE.
pub fn assemble(
    pattern: &Pattern,
    binding: &FlatBinding<Component>,
    options: AssembleOptions,
) -> Result<DaeSystem, AssembleError> {
    let diags = pattern.validate();
    if !diags.is_empty() {
        return Err(AssembleError::Invalid(diags));
    }
    for name in binding.keys() {
        if !pattern.boxes.contains_key(name) {
            return Err(AssembleError::InterfaceMismatch(name.clone()));
        }
    }
    let mut comps = Vec::new();
    let mut to_box = Vec::new();
    let mut to_comp = Vec::new();
    for (name, iface) in &pattern.boxes {
        let entry = binding.get(name).ok_or_else(|| AssembleError::IncompleteBinding(name.clone()))?;
        let ci = entry.item.interface();
        let mismatch = || AssembleError::InterfaceMismatch(name.clone());
        if ci.len() != iface.len() || entry.renaming.len() != ci.len() {
            return Err(mismatch());
        }
        let mut back = BTreeMap::new();
        for p in &ci.ports {
            let target = entry.renaming.get(&p.name).and_then(|n| iface.port(n)).ok_or_else(mismatch)?;
            if target.quantity != p.quantity || target.kind != p.kind {
                return Err(mismatch());
            }
            back.insert(target.name.clone(), p.name.clone());
        }
        comps.push((name.clone(), entry.item.clone()));
        to_box.push(entry.renaming.clone());
        to_comp.push(back);
    }
    let theta0 = resolve_theta0(options.theta0, &comps.iter().map(|(_, c)| c).collect::<Vec<_>>())?;
    let box_index: BTreeMap<String, usize> = comps.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();

    let mut b = Builder {
        pat: pattern,
        comps,
        box_index,
        to_box,
        to_comp,
        definer: BTreeMap::new(),
        slots: BTreeMap::new(),
        alg: BTreeMap::new(),
        lambda: BTreeMap::new(),
        tape: Tape::default(),
        effort_memo: BTreeMap::new(),
        sink_memo: BTreeMap::new(),
        flow_memo: BTreeMap::new(),
        lambda_memo: BTreeMap::new(),
        busy: BTreeSet::new(),
    };

    // Causality: one effort-defining port per junction.
    let mut notes = Vec::new();
    for (j, q) in &pattern.junctions {
        let mut defs = Vec::new();
        let mut outers = Vec::new();
        for r in b.ports_at(j) {
            let Some(owner) = r.owner.as_deref() else {
                outers.push(r);
                continue;
            };
            let bi = b.box_index[owner];
            let cport = &b.to_comp[bi][&r.port];
            let d = match &b.comps[bi].1 {
                Component::Offset { side, .. } if *cport == format!("pj{side}") => Some(Definer::OffsetPj(bi)),
                c => match c.kind() {
                    ComponentKind::Storage => Some(Definer::Storage(bi)),
                    ComponentKind::Environment => Some(Definer::Env(bi)),
                    _ => None,
                },
            };
            if let Some(d) = d {
                defs.push((d, r));
            }
        }
        let entry = match defs.len() {
            0 if !outers.is_empty() => (Definer::Outer, Some(outers[0].clone())),
            0 if q.space.is_linear() && b.pat.power_ports_at(j).next().is_some() => (Definer::Algebraic, None),
            0 => return Err(AssembleError::UnderdeterminedJunction(j.clone())),
            1 => {
                let (d, r) = defs.pop().unwrap();
                (d, Some(r))
            }
            _ => {
                return Err(AssembleError::CausalityConflict {
                    junction: j.clone(),
                    ports: defs.iter().map(|(_, r)| r.to_string()).collect(),
                })
            }
        };
        for r in &outers {
            let role = if Some(r) == entry.1.as_ref() { "effort" } else { "flow" };
            notes.push(format!("OPEN_PORT_CAPPED: outer port `{}` is closed with zero {role}", r.port));
        }
        b.definer.insert(j.clone(), entry);
    }

    // Layout: differential junctions, then effort unknowns, then multipliers.
    let mut differential = Vec::new();
    let mut nx = 0;
    for (j, q) in &pattern.junctions {
        let bi = match b.definer[j].0 {
            Definer::Storage(bi) | Definer::Env(bi) => bi,
            _ => continue,
        };
        let kind = match q.space {
            Space::Group(_) => SlotKind::Pose,
            Space::Subgroup(_) => match &b.comps[bi].1 {
                Component::JointPotential { joint, .. } => SlotKind::Subgroup(joint.clone()),
                _ => return Err(AssembleError::InterfaceMismatch(b.comps[bi].0.clone())),
            },
            _ => SlotKind::Vector,
        };
        let dim = q.space.tangent_dim();
        b.slots.insert(j.clone(), differential.len());
        differential.push(DiffSlot {
            junction: j.clone(),
            quantity: q.clone(),
            offset: nx,
            dim,
            storage: b.comps[bi].0.clone(),
            kind,
        });
        nx += dim;
    }
    let mut algebraic = Vec::new();
    let mut nz = 0;
    for (j, q) in &pattern.junctions {
        if b.definer[j].0 == Definer::Algebraic {
            let dim = q.space.tangent_dim();
            b.alg.insert(j.clone(), (nz, dim));
            algebraic.push(AlgSlot {
                name: format!("e[{j}]"),
                kind: AlgKind::Effort { junction: j.clone() },
                offset: nz,
                dim,
            });
            nz += dim;
        }
    }
    let hcs: Vec<usize> =
        (0..b.comps.len()).filter(|&i| matches!(b.comps[i].1, Component::Constraint { .. })).collect();
    for &i in &hcs {
        b.lambda.insert(i, nz);
        let name = b.comps[i].0.clone();
        algebraic.push(AlgSlot { name: format!("λ[{name}]"), kind: AlgKind::Multiplier { constraint: name }, offset: nz, dim: 6 });
        nz += 6;
    }

    // Equations.
    let mut rates = Vec::new();
    for s in &differential {
        rates.push(b.sink(&s.junction)?);
    }
    let mut rows = Vec::new();
    for a in &algebraic {
        if let AlgKind::Effort { junction } = &a.kind {
            let n = b.sink(junction)?;
            rows.push((junction.clone(), RowKind::Balance, n));
        }
    }
    let mut drift_chains = Vec::new();
    for &i in &hcs {
        let Component::Constraint { joint } = b.comps[i].1.clone() else { unreachable!() };
        let jq = b.junction(i, "q_r")?;
        let q = b.state(&jq)?;
        let e1 = b.effort(&b.junction(i, "pj1")?)?;
        let e2 = b.effort(&b.junction(i, "pj2")?)?;
        let er = b.effort(&b.junction(i, "p_r")?)?;
        let a = b.tape.push(Op::AdIInv { q, e: e1 });
        let n2 = b.tape.push(Op::Neg(e2));
        let inc = b.tape.push(Op::Include { joint, e: er });
        let n = b.tape.push(Op::Sum(vec![a, n2, inc], Repr::Coords(6)));
        rows.push((b.comps[i].0.clone(), RowKind::Constraint, n));
        if let Some(c) = drift_chain(&b, i, &jq) {
            drift_chains.push(c);
        }
    }
    let mut outputs = Vec::new();
    for p in &pattern.outer.ports {
        if p.kind != PortKind::Power {
            continue;
        }
        let r = PortRef::outer(&p.name);
        let j = pattern.junction_of(&r).expect("validated").to_string();
        let (def, dport) = b.definer[&j].clone();
        if def == Definer::Outer && dport.as_ref() == Some(&r) {
            let n = b.sink(&j)?;
            outputs.push((format!("{}.f", p.name), n));
        } else {
            let n = b.effort(&j)?;
            outputs.push((format!("{}.e", p.name), n));
        }
    }
    let mut ports = Vec::new();
    for i in 0..b.comps.len() {
        let iface = b.comps[i].1.interface();
        for p in iface.ports.iter().filter(|p| p.kind == PortKind::Power) {
            let j = b.junction(i, &p.name)?;
            let effort = b.effort(&j)?;
            let flow = b.flow(i, &p.name)?;
            ports.push(PortRecord { comp: i, effort, flow });
        }
    }

    Ok(DaeSystem {
        pattern: pattern.clone(),
        layout: VariableLayout { differential, algebraic, nx, nz },
        theta0,
        notes,
        drift_chains,
        components: b.comps,
        tape: b.tape,
        rates,
        rows,
        outputs,
        ports,
    })
}

fn drift_chain(b: &Builder, hc: usize, jq: &str) -> Option<DriftChain> {
    let side = |k: u8| -> Option<(usize, GroupElement)> {
        let jpj = b.junction(hc, &format!("pj{k}")).ok()?;
        let Definer::OffsetPj(ob) = b.definer.get(&jpj)?.0 else { return None };
        let Component::Offset { o, side } = b.comps[ob].1 else { return None };
        let jp = b.junction(ob, &format!("p{side}")).ok()?;
        let body = (0..b.comps.len()).find(|&i| {
            matches!(b.comps[i].1, Component::Pkc(PkcSpace::Body)) && b.junction(i, "p").ok().as_deref() == Some(&*jp)
        })?;
        let jpose = b.junction(body, "q").ok()?;
        Some((*b.slots.get(&jpose)?, o))
    };
    let (q1, o1) = side(1)?;
    let (q2, o2) = side(2)?;
    Some(DriftChain { constraint: b.comps[hc].0.clone(), q_r: *b.slots.get(jq)?, q1, o1, q2, o2 })
}

impl Storages for DaeSystem {
    fn effort(&self, boxi: usize, x: &Value) -> Result<Value, AssembleError> {
        let (path, c) = &self.components[boxi];
        c.storage_effort(x).map_err(|source| AssembleError::Component { path: path.clone(), source })
    }
}

impl DaeSystem {
    pub fn components(&self) -> impl Iterator<Item = (&str, &Component)> {
        self.components.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn component(&self, path: &str) -> Option<&Component> {
        self.components.iter().find(|(n, _)| n == path).map(|(_, c)| c)
    }

    /// Number of residual rows, `dim ẋ + dim z`.
    pub fn residual_dim(&self) -> usize {
        self.layout.nx + self.layout.nz
    }

    fn check_x(&self, x: &[Value]) -> Result<(), AssembleError> {
        if x.len() != self.layout.differential.len() {
            return Err(AssembleError::DimensionMismatch {
                what: "state slots".into(),
                expected: self.layout.differential.len(),
                got: x.len(),
            });
        }
        for (s, v) in self.layout.differential.iter().zip(x) {
            let ok = match (&s.kind, v) {
                (SlotKind::Vector, Value::Vector(c)) => c.len() == s.dim,
                (SlotKind::Pose | SlotKind::Subgroup(_), Value::Pose(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(AssembleError::DimensionMismatch { what: format!("state at `{}`", s.junction), expected: s.dim, got: 0 });
            }
        }
        Ok(())
    }

    fn check_len(what: &str, expected: usize, got: usize) -> Result<(), AssembleError> {
        if expected != got {
            return Err(AssembleError::DimensionMismatch { what: what.into(), expected, got });
        }
        Ok(())
    }

    /// Evaluates the state rates and algebraic rows at `(x, z)`.
    pub fn eval(&self, x: &[Value], z: &[f64]) -> Result<Evaluation, AssembleError> {
        self.check_x(x)?;
        Self::check_len("algebraic unknowns", self.layout.nz, z.len())?;
        let values = self.tape.eval(x, z, self.theta0, self)?;
        let mut rates = Vec::with_capacity(self.layout.nx);
        for (s, &n) in self.layout.differential.iter().zip(&self.rates) {
            let q = match s.kind {
                SlotKind::Pose => Some(x[self.layout.slot_index(&s.junction).unwrap()].pose()),
                _ => None,
            };
            rates.extend_from_slice(Tape::rate_coords(q.as_ref(), &values[n]).as_slice());
        }
        let mut algebraic = Vec::with_capacity(self.layout.nz);
        for (_, _, n) in &self.rows {
            algebraic.extend_from_slice(values[*n].vector().as_slice());
        }
        Ok(Evaluation { rates, algebraic, values })
    }

    /// `r = (ẋ − f(x, z), g(x, z))`; pose rows compare body twists.
    pub fn residual(&self, x: &[Value], xdot: &[f64], z: &[f64]) -> Result<Vec<f64>, AssembleError> {
        Self::check_len("state rates", self.layout.nx, xdot.len())?;
        let ev = self.eval(x, z)?;
        let mut r: Vec<f64> = xdot.iter().zip(&ev.rates).map(|(a, b)| a - b).collect();
        r.extend(ev.algebraic);
        Ok(r)
    }

    /// Value of an outer port variable such as `p.e`, by label.
    pub fn output(&self, ev: &Evaluation, label: &str) -> Option<Value> {
        self.outputs.iter().find(|(l, _)| l == label).map(|(_, n)| ev.values[*n])
    }

    pub fn output_labels(&self) -> impl Iterator<Item = &str> {
        self.outputs.iter().map(|(l, _)| l.as_str())
    }

    /// One line per equation: state rates, junction balances, velocity
    /// constraints, then outer port outputs.
    pub fn dump(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (s, &n) in self.layout.differential.iter().zip(&self.rates) {
            out.push(format!("d/dt {} = {}", s.junction, self.tape.print(n)));
        }
        for (_, _, n) in &self.rows {
            out.push(format!("0 = {}", self.tape.print(*n)));
        }
        for (l, n) in &self.outputs {
            out.push(format!("{l} = {}", self.tape.print(*n)));
        }
        out
    }

    /// Constraint rows by box, as `(path, ‖C e‖)`.
    pub(crate) fn constraint_norms(&self, ev: &Evaluation) -> Vec<(String, f64)> {
        self.rows
            .iter()
            .filter(|r| r.1 == RowKind::Constraint)
            .map(|(p, _, n)| (p.clone(), ev.values[*n].vector().norm()))
            .collect()
    }

    /// Multiplier of constraint box `path`, if present.
    pub fn multiplier<'z>(&self, path: &str, z: &'z [f64]) -> Option<&'z [f64]> {
        let a = self.layout.algebraic.iter().find(|a| a.kind == AlgKind::Multiplier { constraint: path.into() })?;
        Some(&z[a.offset..a.offset + a.dim])
    }

    /// Total energy `Σ E_storage + θ0 s_env`.
    pub fn total_energy(&self, x: &[Value]) -> Result<f64, AssembleError> {
        self.check_x(x)?;
        let mut e = 0.0;
        for (s, v) in self.layout.differential.iter().zip(x) {
            let c = self.component(&s.storage).expect("storage box");
            e += match c {
                Component::Environment { .. } => self.theta0 * v.vector().as_slice()[0],
                c => c.storage_energy(v).map_err(|source| AssembleError::Component { path: s.storage.clone(), source })?,
            };
        }
        Ok(e)
    }

    /// Energy stored in all storage components except the environment.
    pub fn mechanical_energy(&self, x: &[Value]) -> Result<f64, AssembleError> {
        let mut e = 0.0;
        for (s, v) in self.layout.differential.iter().zip(x) {
            let c = self.component(&s.storage).expect("storage box");
            if c.kind() == ComponentKind::Storage {
                e += c.storage_energy(v).map_err(|source| AssembleError::Component { path: s.storage.clone(), source })?;
            }
        }
        Ok(e)
    }

    /// Entropy stored in environments.
    pub fn environment_entropy(&self, x: &[Value]) -> f64 {
        self.layout
            .differential
            .iter()
            .zip(x)
            .filter(|(s, _)| matches!(self.component(&s.storage), Some(Component::Environment { .. })))
            .map(|(_, v)| v.vector().as_slice()[0])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ephs_components::EnvParams;
    use ephs_core::{flatten, Binding, PortDecl};

    fn osc() -> (Pattern, Binding<Component>) {
        let p = Pattern::new("osc")
            .with_outer(PortDecl::power("p", Quantity::momentum()))
            .with_junction("q", Quantity::displacement())
            .with_junction("p", Quantity::momentum())
            .with_box("pe", vec![PortDecl::power("q", Quantity::displacement())])
            .with_box("ke", vec![PortDecl::power("p", Quantity::momentum())])
            .with_box(
                "pkc",
                vec![PortDecl::power("q", Quantity::displacement()), PortDecl::power("p", Quantity::momentum())],
            )
            .with_wire("pe.q", "q")
            .with_wire("ke.p", "p")
            .with_wire("pkc.q", "q")
            .with_wire("pkc.p", "p")
            .with_wire("p", "p");
        let b = Binding::new()
            .leaf("pe", Component::spring(2.0).unwrap())
            .leaf("ke", Component::mass(0.5).unwrap())
            .leaf("pkc", Component::Pkc(PkcSpace::Scalar));
        (p, b)
    }

    fn damped() -> (Pattern, Binding<Component>) {
        let (op, ob) = osc();
        let p = Pattern::new("damped")
            .with_junction("p", Quantity::momentum())
            .with_junction("s", Quantity::entropy())
            .with_box("osc", vec![PortDecl::power("p", Quantity::momentum())])
            .with_box("mf", vec![PortDecl::power("p", Quantity::momentum()), PortDecl::power("s", Quantity::entropy())])
            .with_box("env", vec![PortDecl::power("s", Quantity::entropy())])
            .with_wire("osc.p", "p")
            .with_wire("mf.p", "p")
            .with_wire("mf.s", "s")
            .with_wire("env.s", "s");
        let b = Binding::new()
            .nested("osc", op, ob)
            .leaf("mf", Component::damper(0.3).unwrap())
            .leaf("env", Component::environment(&EnvParams { theta0: 300.0 }).unwrap());
        (p, b)
    }

    fn build(pb: (Pattern, Binding<Component>)) -> DaeSystem {
        let (p, b) = flatten(&pb.0, &pb.1).unwrap();
        assemble(&p, &b, AssembleOptions::default()).unwrap()
    }

    #[test]
    fn oscillator_equations() {
        let sys = build(osc());
        assert_eq!((sys.layout.nx, sys.layout.nz), (2, 0));
        assert_eq!(sys.dump(), ["d/dt p = -dE[pe](q) + p.f", "d/dt q = dE[ke](p)", "p.e = dE[ke](p)"]);
        assert_eq!(sys.theta0, DEFAULT_THETA0);
        assert_eq!(sys.notes.len(), 1);
        let x = [Value::Vector(Coords::scalar(1.0)), Value::Vector(Coords::scalar(3.0))];
        let ev = sys.eval(&x, &[]).unwrap();
        // ṗ = −k q = −6, q̇ = p/m = 2
        assert_eq!(ev.rates, [-6.0, 2.0]);
        assert_eq!(sys.output(&ev, "p.e").unwrap().vector().as_slice(), &[2.0]);
    }

    #[test]
    fn damped_oscillator_equations_and_rates() {
        let sys = build(damped());
        assert_eq!(sys.layout.column_names(), ["osc.q", "p", "s"]);
        assert_eq!(
            sys.dump(),
            [
                "d/dt osc.q = dE[osc.ke](p)",
                "d/dt p = -μ♭[mf](dE[osc.ke](p)) - dE[osc.pe](osc.q)",
                "d/dt s = μ[mf](dE[osc.ke](p), dE[osc.ke](p))/θ0",
            ]
        );
        assert_eq!(sys.theta0, 300.0);
        let x = [Value::Vector(Coords::scalar(1.0)), Value::Vector(Coords::scalar(1.5)), Value::Vector(Coords::scalar(0.0))];
        let ev = sys.eval(&x, &[]).unwrap();
        let v = 3.0;
        assert_eq!(ev.rates[0], v);
        assert!((ev.rates[1] - (-2.0 - 0.3 * v)).abs() < 1e-15);
        assert!((ev.rates[2] - 0.3 * v * v / 300.0).abs() < 1e-15);
        let r = sys.residual(&x, &ev.rates, &[]).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
        assert!(matches!(sys.residual(&x, &[0.0], &[]), Err(AssembleError::DimensionMismatch { .. })));
    }

    #[test]
    fn theta_override_and_conflicts() {
        let (p, b) = flatten(&damped().0, &damped().1).unwrap();
        let sys = assemble(&p, &b, AssembleOptions { theta0: Some(310.0) }).unwrap();
        assert_eq!(sys.theta0, 310.0);
        let c = [
            &Component::Environment { theta0: 300.0 },
            &Component::Environment { theta0: 301.0 },
        ];
        assert!(matches!(resolve_theta0(None, &c), Err(AssembleError::ThetaConflict(..))));
    }

    #[test]
    fn two_storages_on_one_junction_conflict() {
        let (p, b) = osc();
        let p = p.with_box("pe2", vec![PortDecl::power("q", Quantity::displacement())]).with_wire("pe2.q", "q");
        let b = b.leaf("pe2", Component::spring(1.0).unwrap());
        let (p, b) = flatten(&p, &b).unwrap();
        match assemble(&p, &b, AssembleOptions::default()) {
            Err(AssembleError::CausalityConflict { junction, ports }) => {
                assert_eq!(junction, "q");
                assert_eq!(ports, ["pe.q", "pe2.q"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_binding_is_reported() {
        let (p, b) = flatten(&osc().0, &osc().1).unwrap();
        let mut b = b;
        b.remove("ke");
        assert_eq!(assemble(&p, &b, AssembleOptions::default()).unwrap_err(), AssembleError::IncompleteBinding("ke".into()));
    }
}
