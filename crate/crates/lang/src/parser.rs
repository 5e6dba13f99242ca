use std::collections::BTreeSet;

use ephs_core::{PortRef, Quantity};

use crate::ast::{Arg, BindDecl, BindTarget, BoxItem, Include, JunctionItem, Literal, PatternDecl, PortItem, SourceModel, WireItem};
use crate::check::check_model;
use crate::diag::{Code, Diagnostic, Diagnostics, Span};
use crate::lexer::{lex, Tok, Token};

const MAX_DEPTH: usize = 64;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    expected: BTreeSet<String>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn nth(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn at(&mut self, t: &Tok) -> bool {
        self.expected.insert(t.to_string());
        &self.peek().tok == t
    }

    fn at_kw(&mut self, kw: &str) -> bool {
        self.expected.insert(format!("`{kw}`"));
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        let hit = self.at(t);
        if hit {
            self.bump();
        }
        hit
    }

    fn error(&mut self) -> Diagnostic {
        let t = self.peek();
        let mut d = Diagnostic::new(Code::Syntax, t.span, format!("unexpected {}", t.tok));
        d.expected = std::mem::take(&mut self.expected).into_iter().collect();
        d
    }

    fn expect(&mut self, t: &Tok) -> PResult<Span> {
        if self.at(t) {
            Ok(self.bump().span)
        } else {
            Err(self.error())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.error())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        self.expected.insert(what.to_string());
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => Err(self.error()),
        }
    }

    fn model(&mut self, diags: &mut Vec<Diagnostic>) -> SourceModel {
        let mut m = SourceModel::default();
        loop {
            if self.at(&Tok::Eof) {
                break;
            }
            let r = if self.at_kw("pattern") {
                self.pattern().map(|p| m.patterns.push(p))
            } else if self.at_kw("bind") {
                self.bind().map(|b| m.binds.push(b))
            } else if self.at_kw("include") {
                self.include().map(|i| m.includes.push(i))
            } else {
                Err(self.error())
            };
            if let Err(d) = r {
                diags.push(d);
                self.recover();
            }
        }
        m
    }

    /// Skips to the next token that can start a top-level item.
    fn recover(&mut self) {
        self.bump();
        loop {
            match (self.nth(0), self.nth(1), self.nth(2)) {
                (Tok::Eof, ..) => break,
                (Tok::Ident(k), Tok::Ident(_), Tok::LBrace) if k == "pattern" => break,
                (Tok::Ident(k), ..) if k == "bind" || k == "include" => break,
                _ => {
                    self.bump();
                }
            }
        }
        self.expected.clear();
    }

    fn include(&mut self) -> PResult<Include> {
        let start = self.expect_kw("include")?;
        self.expected.insert("string".into());
        match &self.peek().tok {
            Tok::Str(s) => {
                let path = s.clone();
                let end = self.bump().span;
                Ok(Include { path, span: join(start, end) })
            }
            _ => Err(self.error()),
        }
    }

    fn pattern(&mut self) -> PResult<PatternDecl> {
        let start = self.expect_kw("pattern")?;
        let (name, _) = self.ident("pattern name")?;
        self.expect(&Tok::LBrace)?;
        let mut p = PatternDecl::new(&name);
        if self.at_kw("outer") {
            self.bump();
            p.outer = self.portlist()?;
        }
        while self.at_kw("junction") {
            let s = self.bump().span;
            let (name, _) = self.ident("junction name")?;
            self.expect(&Tok::Colon)?;
            let (quantity, end) = self.quantity()?;
            p.junctions.push(JunctionItem { name, quantity, span: join(s, end) });
        }
        while self.at_kw("box") {
            let s = self.bump().span;
            let (name, _) = self.ident("box name")?;
            let ports = self.portlist()?;
            p.boxes.push(BoxItem { name, ports, span: s });
        }
        while self.at_kw("wire") {
            self.bump();
            let (r, span) = self.ident("port reference")?;
            self.expect(&Tok::Arrow)?;
            let (junction, junction_span) = self.ident("junction name")?;
            let port: PortRef = r.parse().expect("infallible");
            p.wires.push(WireItem { port, junction, span, junction_span });
        }
        let end = self.expect(&Tok::RBrace)?;
        p.span = join(start, end);
        Ok(p)
    }

    fn portlist(&mut self) -> PResult<Vec<PortItem>> {
        self.expect(&Tok::LParen)?;
        let mut out = Vec::new();
        while !self.at(&Tok::RParen) {
            let (name, s) = self.ident("port name")?;
            self.expect(&Tok::Colon)?;
            let (quantity, mut end) = self.quantity()?;
            let mut state = false;
            if self.eat(&Tok::Colon) {
                end = self.expect_kw("state")?;
                state = true;
            }
            out.push(PortItem { name, quantity, state, span: join(s, end) });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(out)
    }

    fn quantity(&mut self) -> PResult<(Quantity, Span)> {
        let (mut text, start) = self.ident("quantity")?;
        let mut end = start;
        if self.eat(&Tok::Lt) {
            text.push('<');
            loop {
                match &self.peek().tok {
                    Tok::Ident(s) => text.push_str(s),
                    Tok::Star => text.push('*'),
                    Tok::Colon => text.push(':'),
                    _ => break,
                }
                self.bump();
            }
            self.expected.extend(["identifier".to_string(), "`*`".into(), "`:`".into()]);
            end = self.expect(&Tok::Gt)?;
            text.push('>');
        }
        let span = join(start, end);
        let q = text.parse::<Quantity>().map_err(|e| {
            let mut d = Diagnostic::new(Code::UnknownQuantity, span, e.to_string());
            d.expected = ["displacement", "entropy", "momentum", "momentum<g*>", "pose", "relative_pose<JOINT>"]
                .map(String::from)
                .to_vec();
            d
        })?;
        Ok((q, span))
    }

    fn bind(&mut self) -> PResult<BindDecl> {
        let start = self.expect_kw("bind")?;
        let (path, _) = self.ident("box path")?;
        self.expect(&Tok::Eq)?;
        if self.at_kw("pattern") && matches!(self.nth(1), Tok::Ident(_)) {
            self.bump();
            let (name, end) = self.ident("pattern name")?;
            return Ok(BindDecl { path, target: BindTarget::Pattern(name), span: join(start, end) });
        }
        let (ctor, _) = self.ident("component constructor")?;
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        while !self.at(&Tok::RParen) {
            let (name, s) = self.ident("argument name")?;
            self.expect(&Tok::Eq)?;
            let (value, end) = self.literal(0)?;
            args.push(Arg { name, value, span: join(s, end) });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let end = self.expect(&Tok::RParen)?;
        Ok(BindDecl { path, target: BindTarget::Component { ctor, args }, span: join(start, end) })
    }

    fn literal(&mut self, depth: usize) -> PResult<(Literal, Span)> {
        self.expected.extend(["number".to_string(), "identifier".into(), "`[`".into()]);
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(x) => {
                self.bump();
                Ok((Literal::Number(x), t.span))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok((Literal::Ident(s), t.span))
            }
            Tok::LBracket if depth < MAX_DEPTH => {
                self.bump();
                let mut items = Vec::new();
                while !self.at(&Tok::RBracket) {
                    items.push(self.literal(depth + 1)?.0);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                let end = self.expect(&Tok::RBracket)?;
                Ok((Literal::List(items), join(t.span, end)))
            }
            Tok::LBracket => Err(Diagnostic::new(Code::Syntax, t.span, "list nested too deeply".into())),
            _ => Err(self.error()),
        }
    }
}

fn join(a: Span, b: Span) -> Span {
    Span { end: b.end.max(a.end), ..a }
}

/// Parses model text without resolving includes. Syntax errors, duplicate
/// declarations and structural pattern errors are reported with their spans.
pub fn parse(text: &str) -> Result<SourceModel, Diagnostics> {
    let (toks, mut diags) = lex(text);
    let mut p = Parser { toks, pos: 0, expected: BTreeSet::new() };
    let model = p.model(&mut diags);
    if diags.is_empty() {
        diags = check_model(&model);
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        diags.sort_by_key(|d| d.span.start);
        Err(Diagnostics(diags))
    }
}
