use std::fmt;

use crate::diag::{Code, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Identifier, possibly a dotted path such as `b1.pe`.
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Colon,
    Eq,
    Arrow,
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(x) => write!(f, "number {x:?}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Eof => f.write_str("end of input"),
            t => write!(f, "`{}`", t.text()),
        }
    }
}

impl Tok {
    /// Source text of punctuation tokens.
    pub fn text(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Eq => "=",
            Tok::Arrow => "->",
            Tok::Star => "*",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, f: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&f) {
            self.bump();
        }
    }
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits source text into tokens. `//` starts a line comment. Lexical errors
/// are collected and the offending character skipped.
pub fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut c = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    let mut errs = Vec::new();
    loop {
        c.eat_while(char::is_whitespace);
        if c.peek() == Some('/') && c.peek2() == Some('/') {
            c.eat_while(|ch| ch != '\n');
            continue;
        }
        let (start, line, col) = (c.pos, c.line, c.col);
        let span = |c: &Cursor| Span { start, end: c.pos, line, col };
        let Some(ch) = c.peek() else {
            out.push(Token { tok: Tok::Eof, span: span(&c) });
            break;
        };
        let tok = if ident_start(ch) {
            c.eat_while(ident_char);
            while c.peek() == Some('.') && c.peek2().is_some_and(ident_start) {
                c.bump();
                c.eat_while(ident_char);
            }
            Tok::Ident(src[start..c.pos].to_string())
        } else if ch.is_ascii_digit() || (ch == '-' && c.peek2().is_some_and(|d| d.is_ascii_digit() || d == '.')) {
            match number(&mut c) {
                Some(x) => Tok::Number(x),
                None => {
                    errs.push(Diagnostic::new(Code::Syntax, span(&c), format!("malformed number `{}`", &src[start..c.pos])));
                    continue;
                }
            }
        } else if ch == '"' {
            c.bump();
            let mut s = String::new();
            let mut closed = false;
            while let Some(ch) = c.bump() {
                match ch {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\n' => break,
                    _ => s.push(ch),
                }
            }
            if !closed {
                errs.push(Diagnostic::new(Code::Syntax, span(&c), "unterminated string".into()));
                continue;
            }
            Tok::Str(s)
        } else {
            c.bump();
            match ch {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '=' => Tok::Eq,
                '*' => Tok::Star,
                '-' if c.peek() == Some('>') => {
                    c.bump();
                    Tok::Arrow
                }
                _ => {
                    errs.push(Diagnostic::new(Code::Syntax, span(&c), format!("unexpected character {ch:?}")));
                    continue;
                }
            }
        };
        out.push(Token { tok, span: span(&c) });
    }
    (out, errs)
}

fn number(c: &mut Cursor) -> Option<f64> {
    let start = c.pos;
    if c.peek() == Some('-') {
        c.bump();
    }
    c.eat_while(|d| d.is_ascii_digit());
    if c.peek() == Some('.') {
        c.bump();
        c.eat_while(|d| d.is_ascii_digit());
    }
    if matches!(c.peek(), Some('e' | 'E')) {
        c.bump();
        if matches!(c.peek(), Some('+' | '-')) {
            c.bump();
        }
        c.eat_while(|d| d.is_ascii_digit());
    }
    // a number glued to letters such as `1x` is malformed
    let glued = c.peek().is_some_and(ident_char);
    c.eat_while(ident_char);
    let x: f64 = c.src[start..c.pos].parse().ok()?;
    (!glued && x.is_finite()).then_some(x)
}
