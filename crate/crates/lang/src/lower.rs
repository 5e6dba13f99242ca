use std::collections::BTreeSet;

use ephs_components::{BodyParams, Component, ComponentError, EnvParams, JointGeometry, JointParams, PkcSpace, Potential};
use ephs_core::{Binding, JointKind, Pattern};
use ephs_geom::{Convention, GroupElement, Mat3, Vec3};
use nalgebra::DMatrix;

use crate::ast::{Arg, BindDecl, BindTarget, Literal, SourceModel};
use crate::diag::{Code, Diagnostic, Diagnostics, Span};

const SEMI: Convention = Convention::SemidirectProduct;

/// Constructor names accepted on the right of `bind PATH =`.
pub const CONSTRUCTORS: [&str; 12] = [
    "spring",
    "mass",
    "kinetic",
    "gravity",
    "joint_potential",
    "pkc",
    "lie_poisson",
    "offset",
    "constraint",
    "damper",
    "friction",
    "environment",
];

struct Args<'a> {
    ctor: &'a str,
    args: &'a [Arg],
    span: Span,
    used: BTreeSet<&'a str>,
}

impl<'a> Args<'a> {
    fn err(&self, span: Span, msg: String) -> Diagnostic {
        Diagnostic::new(Code::BadArgument, span, format!("{}: {msg}", self.ctor))
    }

    fn get(&mut self, name: &'a str) -> Option<&'a Arg> {
        self.used.insert(name);
        self.args.iter().find(|a| a.name == name)
    }

    fn required(&mut self, name: &'a str) -> Result<&'a Arg, Diagnostic> {
        self.get(name).ok_or_else(|| self.err(self.span, format!("missing argument `{name}`")))
    }

    fn num(&mut self, name: &'a str) -> Result<f64, Diagnostic> {
        let a = self.required(name)?;
        match a.value {
            Literal::Number(x) => Ok(x),
            _ => Err(self.err(a.span, format!("`{name}` must be a number"))),
        }
    }

    fn opt_num(&mut self, name: &'a str, default: f64) -> Result<f64, Diagnostic> {
        match self.get(name) {
            Some(_) => self.num(name),
            None => Ok(default),
        }
    }

    fn word(&mut self, name: &'a str) -> Result<(&'a str, Span), Diagnostic> {
        let a = self.required(name)?;
        match &a.value {
            Literal::Ident(s) => Ok((s, a.span)),
            _ => Err(self.err(a.span, format!("`{name}` must be a name"))),
        }
    }

    /// A matrix given as a list of rows; a bare number is a 1x1 matrix.
    fn matrix(&mut self, name: &'a str) -> Result<DMatrix<f64>, Diagnostic> {
        let a = self.required(name)?;
        let bad = || self.err(a.span, format!("`{name}` must be a matrix given as a list of equal-length rows"));
        match &a.value {
            Literal::Number(x) => Ok(DMatrix::from_element(1, 1, *x)),
            Literal::List(rows) => {
                let rows: Vec<Vec<f64>> = rows.iter().map(numbers).collect::<Option<_>>().ok_or_else(bad)?;
                let n = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(bad());
                }
                Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
            }
            Literal::Ident(_) => Err(bad()),
        }
    }

    fn vec3(&mut self, name: &'a str) -> Result<Vec3, Diagnostic> {
        let a = self.required(name)?;
        match numbers(&a.value) {
            Some(v) if v.len() == 3 => Ok(Vec3::new(v[0], v[1], v[2])),
            _ => Err(self.err(a.span, format!("`{name}` must be a list of 3 numbers"))),
        }
    }

    fn opt_vec3(&mut self, name: &'a str, default: Vec3) -> Result<Vec3, Diagnostic> {
        match self.get(name) {
            Some(_) => self.vec3(name),
            None => Ok(default),
        }
    }

    fn mat3(&mut self, name: &'a str) -> Result<Mat3, Diagnostic> {
        let a = self.required(name)?;
        let m = self.matrix(name)?;
        if m.shape() != (3, 3) {
            return Err(self.err(a.span, format!("`{name}` must be 3x3")));
        }
        Ok(Mat3::from_fn(|i, j| m[(i, j)]))
    }

    fn joint(&mut self) -> Result<JointGeometry, Diagnostic> {
        let (k, span) = self.word("joint")?;
        let kind = JointKind::from_name(k).ok_or_else(|| self.err(span, format!("unknown joint type `{k}`")))?;
        let axis = self.opt_vec3("axis", Vec3::z())?;
        let pitch = self.opt_num("pitch", 0.0)?;
        JointGeometry::new(kind, axis, pitch).map_err(|e| self.param(e))
    }

    fn param(&self, e: ComponentError) -> Diagnostic {
        Diagnostic::new(Code::BadParam, self.span, format!("{}: {e}", self.ctor))
    }

    fn finish(&self) -> Result<(), Diagnostic> {
        match self.args.iter().find(|a| !self.used.contains(a.name.as_str())) {
            Some(a) => Err(self.err(a.span, format!("unknown argument `{}`", a.name))),
            None => Ok(()),
        }
    }
}

fn numbers(l: &Literal) -> Option<Vec<f64>> {
    match l {
        Literal::List(xs) => xs
            .iter()
            .map(|x| match x {
                Literal::Number(v) => Some(*v),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

fn joint_params(geometry: JointGeometry, mu: Option<DMatrix<f64>>, potential: Potential) -> JointParams {
    let k = geometry.dim();
    JointParams {
        geometry,
        o1: GroupElement::identity(SEMI),
        o2: GroupElement::identity(SEMI),
        mu: mu.unwrap_or_else(|| DMatrix::zeros(k, k)),
        potential,
    }
}

/// Builds the primitive named by a component binding. `theta0` fills in an
/// `environment()` without an explicit temperature.
pub fn component(bind: &BindDecl, theta0: f64) -> Result<Component, Diagnostic> {
    let BindTarget::Component { ctor, args } = &bind.target else {
        unreachable!("component() takes component bindings")
    };
    let mut a = Args { ctor, args, span: bind.span, used: BTreeSet::new() };
    let c = match ctor.as_str() {
        "spring" => Component::spring(a.num("k")?),
        "mass" => Component::mass(a.num("m")?),
        "damper" => Component::damper(a.num("d")?),
        "kinetic" => {
            let (m, inertia) = (a.num("m")?, a.mat3("J")?);
            Component::kinetic(&BodyParams { m, inertia, g: Vec3::zeros() })
        }
        "gravity" => {
            let (m, g) = (a.num("m")?, a.vec3("g")?);
            Component::gravity(&BodyParams { m, inertia: Mat3::identity(), g })
        }
        "pkc" => {
            let (s, span) = a.word("space")?;
            let space = match s {
                "scalar" => PkcSpace::Scalar,
                "body" => PkcSpace::Body,
                k => PkcSpace::Joint(JointKind::from_name(k).ok_or_else(|| a.err(span, format!("unknown space `{k}`")))?),
            };
            Ok(Component::Pkc(space))
        }
        "lie_poisson" => Ok(Component::LiePoisson),
        "offset" => {
            let side = a.num("side")?;
            let r = a.opt_vec3("r", Vec3::zeros())?;
            let rot = match a.get("R") {
                Some(_) => a.mat3("R")?,
                None => Mat3::identity(),
            };
            if side != 1.0 && side != 2.0 {
                return Err(a.err(a.span, "`side` must be 1 or 2".into()));
            }
            Component::offset(GroupElement::from_parts(rot, r, SEMI), side as u8)
        }
        "constraint" => Component::constraint(&joint_params(a.joint()?, None, Potential::Zero)),
        "joint_potential" => {
            let g = a.joint()?;
            let potential = match a.get("stiffness") {
                Some(_) => Potential::QuadraticLog(a.matrix("stiffness")?),
                None => Potential::Zero,
            };
            Component::joint_potential(&joint_params(g, None, potential))
        }
        "friction" => {
            let g = a.joint()?;
            let mu = a.matrix("mu")?;
            Component::joint_friction(&joint_params(g, Some(mu), Potential::Zero))
        }
        "environment" => Component::environment(&EnvParams { theta0: a.opt_num("theta0", theta0)? }),
        other => {
            let mut d = Diagnostic::new(Code::UnknownComponent, bind.span, format!("no component named `{other}`"));
            d.expected = CONSTRUCTORS.map(String::from).to_vec();
            return Err(d);
        }
    };
    a.finish()?;
    c.map_err(|e| a.param(e))
}

struct Lowering<'a> {
    model: &'a SourceModel,
    theta0: f64,
    used: BTreeSet<&'a str>,
    stack: Vec<&'a str>,
    diags: Vec<Diagnostic>,
}

impl<'a> Lowering<'a> {
    fn pattern(&mut self, name: &'a str, prefix: &str, at: Span) -> Option<(Pattern, Binding<Component>)> {
        let Some(decl) = self.model.pattern(name) else {
            self.diags.push(Diagnostic::new(Code::UnknownPattern, at, format!("no pattern named `{name}`")));
            return None;
        };
        if self.stack.contains(&name) {
            let msg = format!("pattern `{name}` contains itself via {}", self.stack.join(" -> "));
            self.diags.push(Diagnostic::new(Code::RecursivePattern, at, msg));
            return None;
        }
        self.stack.push(name);
        let mut binding = Binding::new();
        let mut ok = true;
        for b in &decl.boxes {
            let path = format!("{prefix}{}", b.name);
            let Some(bind) = self.model.bind(&path) else {
                let msg = format!("box `{path}` has no binding");
                self.diags.push(Diagnostic::new(Code::MissingBinding, b.span, msg));
                ok = false;
                continue;
            };
            self.used.insert(bind.path.as_str());
            match &bind.target {
                BindTarget::Pattern(inner) => match self.pattern(inner, &format!("{path}."), bind.span) {
                    Some((p, ib)) => binding = binding.nested(&b.name, p, ib),
                    None => ok = false,
                },
                BindTarget::Component { .. } => match component(bind, self.theta0) {
                    Ok(c) => binding = binding.leaf(&b.name, c),
                    Err(mut d) => {
                        d.message = format!("{path}: {}", d.message);
                        self.diags.push(d);
                        ok = false;
                    }
                },
            }
        }
        self.stack.pop();
        ok.then(|| (decl.to_pattern(), binding))
    }
}

/// The root pattern: the only pattern that is not bound into another.
pub fn root(model: &SourceModel) -> Result<&str, Diagnostics> {
    match model.roots().as_slice() {
        [r] => Ok(&r.name),
        [] => Err(Diagnostics::one(Diagnostic::new(Code::NoRoot, Span::default(), "model has no root pattern".into()))),
        rs => {
            let names: Vec<&str> = rs.iter().map(|p| p.name.as_str()).collect();
            let msg = format!("several patterns could be the root: {}", names.join(", "));
            Err(Diagnostics::one(Diagnostic::new(Code::AmbiguousRoot, rs[1].span, msg)))
        }
    }
}

/// Turns a model into its root pattern and the binding of every box, nested
/// patterns included. Every binding must be reached.
pub fn lower(model: &SourceModel, theta0: f64) -> Result<(Pattern, Binding<Component>), Diagnostics> {
    let name = root(model)?;
    let mut l = Lowering { model, theta0, used: BTreeSet::new(), stack: Vec::new(), diags: Vec::new() };
    let span = model.pattern(name).map(|p| p.span).unwrap_or_default();
    let out = l.pattern(name, "", span);
    for b in &model.binds {
        if !l.used.contains(b.path.as_str()) {
            let msg = format!("`{}` does not name a box of `{name}`", b.path);
            l.diags.push(Diagnostic::new(Code::UnusedBinding, b.span, msg));
        }
    }
    match out {
        Some(m) if l.diags.is_empty() => Ok(m),
        _ => {
            l.diags.sort_by_key(|d| d.span.start);
            Err(Diagnostics(l.diags))
        }
    }
}
