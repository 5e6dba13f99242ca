use std::fmt;
use std::path::PathBuf;

use ephs_core::Rule;

/// Byte range plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    Syntax,
    UnknownQuantity,
    DuplicatePattern,
    DuplicateBox,
    DuplicateJunction,
    DuplicateBinding,
    /// A structural rule of the pattern itself.
    Pattern(Rule),
    UnknownPattern,
    UnknownComponent,
    BadArgument,
    BadParam,
    MissingBinding,
    UnusedBinding,
    RecursivePattern,
    NoRoot,
    AmbiguousRoot,
    Include,
    Json,
}

impl Code {
    pub fn id(self) -> &'static str {
        match self {
            Code::Syntax => "SYNTAX",
            Code::UnknownQuantity => "UNKNOWN_QUANTITY",
            Code::DuplicatePattern => "DUPLICATE_PATTERN",
            Code::DuplicateBox => "DUPLICATE_BOX",
            Code::DuplicateJunction => "DUPLICATE_JUNCTION",
            Code::DuplicateBinding => "DUPLICATE_BINDING",
            Code::Pattern(r) => r.id(),
            Code::UnknownPattern => "UNKNOWN_PATTERN",
            Code::UnknownComponent => "UNKNOWN_COMPONENT",
            Code::BadArgument => "BAD_ARGUMENT",
            Code::BadParam => "BAD_PARAM",
            Code::MissingBinding => "MISSING_BINDING",
            Code::UnusedBinding => "UNUSED_BINDING",
            Code::RecursivePattern => "RECURSIVE_PATTERN",
            Code::NoRoot => "NO_ROOT",
            Code::AmbiguousRoot => "AMBIGUOUS_ROOT",
            Code::Include => "INCLUDE",
            Code::Json => "JSON",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: Code,
    pub span: Span,
    pub message: String,
    /// Tokens the parser would have accepted, for syntax errors.
    pub expected: Vec<String>,
    pub file: Option<PathBuf>,
}

impl Diagnostic {
    pub fn new(code: Code, span: Span, message: String) -> Self {
        Self { code, span, message, expected: Vec::new(), file: None }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.file {
            write!(f, "{}:", p.display())?;
            if self.span.line == 0 {
                f.write_str(" ")?;
            }
        }
        if self.span.line > 0 {
            write!(f, "{}:{}: ", self.span.line, self.span.col)?;
        }
        write!(f, "{}: {}", self.code, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// A non-empty list of diagnostics, in source order.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn one(d: Diagnostic) -> Self {
        Self(vec![d])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter()
    }

    pub fn has(&self, code: Code) -> bool {
        self.0.iter().any(|d| d.code == code)
    }

    pub fn in_file(mut self, path: &std::path::Path) -> Self {
        for d in &mut self.0 {
            d.file.get_or_insert_with(|| path.to_path_buf());
        }
        self
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
