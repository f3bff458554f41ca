//! Untyped syntax tree. Every declaration the typed model does not
//! understand is kept in this form so it can be printed back verbatim.

use crate::Loc;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scalar {
    Word(String),
    Str(String),
    /// The `..` marker of a period range.
    Range,
}

impl Scalar {
    pub fn as_word(&self) -> Option<&str> {
        match self {
            Scalar::Word(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Value(Vec<(Scalar, Loc)>),
    Class(Vec<Field>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: Option<String>,
    pub ty: Option<String>,
    pub body: Body,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub values: Vec<Value>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Scalar(Scalar, Loc),
    Decl(Decl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Alias { name: String, target: String, loc: Loc },
    Decl(Decl),
}

/// Field names are upper-case words; everything else in value position is a
/// name, a literal or a nested declaration.
pub fn is_field_name(w: &str) -> bool {
    let mut chars = w.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && w.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn scalar_text(s: &Scalar) -> String {
    match s {
        Scalar::Word(w) => w.clone(),
        Scalar::Str(s) => quote(s),
        Scalar::Range => "..".into(),
    }
}

fn head(d: &Decl) -> String {
    let mut s = String::new();
    if let Some(n) = &d.name {
        s.push_str(n);
    }
    if let Some(t) = &d.ty {
        if !s.is_empty() {
            s.push(' ');
        }
        s.push_str(": ");
        s.push_str(t);
    }
    s
}

/// Single-line rendering, used for declarations nested inside field values.
pub fn inline_decl(d: &Decl) -> String {
    let mut s = head(d);
    if !s.is_empty() {
        s.push(' ');
    }
    match &d.body {
        Body::Value(vs) => {
            let parts: Vec<String> = vs.iter().map(|(v, _)| scalar_text(v)).collect();
            s.push_str(&parts.join(" "));
        }
        Body::Class(fields) => {
            s.push('{');
            for f in fields {
                s.push(' ');
                s.push_str(&inline_field(f));
            }
            s.push_str(" }");
        }
    }
    s
}

pub fn inline_field(f: &Field) -> String {
    let mut s = f.name.clone();
    for v in &f.values {
        s.push(' ');
        match v {
            Value::Scalar(sc, _) => s.push_str(&scalar_text(sc)),
            Value::Decl(d) => s.push_str(&inline_decl(d)),
        }
    }
    s
}

/// Multi-line rendering for top-level declarations: one field per line,
/// nested declarations inline.
pub fn block_decl(d: &Decl) -> String {
    match &d.body {
        Body::Value(_) => inline_decl(d),
        Body::Class(fields) if fields.is_empty() => inline_decl(d),
        Body::Class(fields) => {
            let mut s = head(d);
            s.push_str(" {\n");
            for f in fields {
                let _ = writeln!(s, "  {}", inline_field(f));
            }
            s.push('}');
            s
        }
    }
}
