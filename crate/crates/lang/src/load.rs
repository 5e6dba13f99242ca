use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::ast::SourceModel;
use crate::check::check_model;
use crate::diag::{Code, Diagnostic, Diagnostics, Span};
use crate::parser::parse;

pub fn to_json(m: &SourceModel) -> String {
    serde_json::to_string_pretty(&m.canonical()).expect("model serializes")
}

/// Reads the JSON form of a model and applies the same declaration checks as
/// the text parser. Positions refer to the JSON text only for syntax errors.
pub fn from_json(text: &str) -> Result<SourceModel, Diagnostics> {
    let m: SourceModel = serde_json::from_str(text).map_err(|e| {
        let span = Span { start: 0, end: 0, line: e.line() as u32, col: e.column() as u32 };
        Diagnostics::one(Diagnostic::new(Code::Json, span, e.to_string()))
    })?;
    let d = check_model(&m);
    if d.is_empty() {
        Ok(m)
    } else {
        Err(Diagnostics(d))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn io_error(path: &Path, e: std::io::Error) -> Diagnostics {
    let d = Diagnostic::new(Code::Include, Span::default(), format!("cannot read {}: {e}", path.display()));
    Diagnostics::one(d).in_file(path)
}

/// Parses one file, text or JSON by extension, leaving includes unresolved.
pub fn parse_file(path: &Path) -> Result<SourceModel, Diagnostics> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let m = if is_json(path) { from_json(&text) } else { parse(&text) };
    m.map_err(|d| d.in_file(path))
}

/// Parses a file and merges the pattern declarations of its includes,
/// resolved relative to the including file. Bindings in included files are
/// not imported; the returned model has no includes left.
pub fn load(path: &Path) -> Result<SourceModel, Diagnostics> {
    let mut m = parse_file(path)?;
    let mut active = vec![canonical(path)];
    let mut seen = BTreeSet::new();
    let mut diags = Vec::new();
    let includes = std::mem::take(&mut m.includes);
    for inc in includes {
        import(path, &inc.path, inc.span, &mut active, &mut seen, &mut m, &mut diags);
    }
    let mut names = BTreeSet::new();
    for p in &m.patterns {
        if !names.insert(p.name.as_str()) {
            let mut d = Diagnostic::new(Code::DuplicatePattern, p.span, format!("pattern `{}` declared twice", p.name));
            d.file = Some(path.to_path_buf());
            diags.push(d);
        }
    }
    if diags.is_empty() {
        Ok(m)
    } else {
        Err(Diagnostics(diags))
    }
}

fn canonical(p: &Path) -> PathBuf {
    p.canonicalize().unwrap_or_else(|_| p.to_path_buf())
}

fn import(
    from: &Path,
    rel: &str,
    span: Span,
    active: &mut Vec<PathBuf>,
    seen: &mut BTreeSet<PathBuf>,
    into: &mut SourceModel,
    diags: &mut Vec<Diagnostic>,
) {
    let target = from.parent().unwrap_or(Path::new(".")).join(rel);
    let key = canonical(&target);
    if active.contains(&key) {
        let mut d = Diagnostic::new(Code::Include, span, format!("include cycle through {}", target.display()));
        d.file = Some(from.to_path_buf());
        diags.push(d);
        return;
    }
    if !seen.insert(key.clone()) {
        return;
    }
    let mut inc = match parse_file(&target) {
        Ok(m) => m,
        Err(e) => {
            diags.extend(e.0);
            return;
        }
    };
    active.push(key);
    for i in std::mem::take(&mut inc.includes) {
        import(&target, &i.path, i.span, active, seen, into, diags);
    }
    active.pop();
    for mut p in inc.patterns {
        // positions would point into another file
        p = p.canonical();
        into.patterns.push(p);
    }
}
