//! Bounded temporal queries in prefix notation.
//!
//! ```text
//! (query afs_function (=> (= bat_level 19) X[1,1][(not (= AFS_State 0))]))
//! (assume-input afs_function (= gps_fix true))
//! ```
//! `X<a,b>[f]` holds when `f` holds at every offset in the window,
//! `F<a,b>[f]` when it holds at some offset. `[` and `]` include an
//! endpoint, `(` and `)` exclude it. Offsets count firings of the reference
//! node; duration offsets are divided by the step period.

mod direct;
mod eval;
mod parse;
mod unfold;

use std::fmt;

pub use direct::eval_direct;
pub use eval::{eval, steps_from_trace, Counterexample, QueryOutcome, Steps};
pub use parse::parse_query;
pub use unfold::{expand_intervals, unfold};

use qparch_sim::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("reference node '{0}' never fires in the trace")]
    UnknownNode(String),
}

/// A variable sampled at a step relative to the current one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: String,
    pub offset: i64,
}

impl VarRef {
    pub fn current(name: &str) -> Self {
        VarRef { name: name.into(), offset: 0 }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (word, n) = if self.offset < 0 { ("prev", -self.offset) } else { ("next", self.offset) };
        match n {
            0 => write!(f, "{}", self.name),
            1 => write!(f, "{word}_{}", self.name),
            n => write!(f, "{word}{n}_{}", self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(VarRef),
    Num(f64),
    Bool(bool),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Num(x) if x.fract() == 0.0 && x.abs() < 1e15 => write!(f, "{}", *x as i64),
            Term::Num(x) => write!(f, "{x}"),
            Term::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, a: Value, b: Value) -> bool {
        let (x, y) = (a.as_f64(), b.as_f64());
        match self {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Temporal {
    /// X: at every offset
    All,
    /// F: at some offset
    Some,
}

/// Offset window in steps with syntactic endpoint inclusivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: u32,
    pub start_inclusive: bool,
    pub end: u32,
    pub end_inclusive: bool,
}

impl Window {
    pub fn closed(start: u32, end: u32) -> Self {
        Window { start, start_inclusive: true, end, end_inclusive: true }
    }

    /// Included offsets, ascending.
    pub fn offsets(&self) -> Vec<u32> {
        (self.start..=self.end)
            .filter(|&o| (o != self.start || self.start_inclusive) && (o != self.end || self.end_inclusive))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Const(bool),
    Var(VarRef),
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Interval(Temporal, Window, Box<Formula>),
}

impl Formula {
    /// Every variable reference, in order of appearance.
    pub fn vars(&self) -> Vec<&VarRef> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a VarRef>) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(v) => out.push(v),
            Formula::Cmp(_, a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        out.push(v);
                    }
                }
            }
            Formula::Not(f) | Formula::Interval(_, _, f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn has_interval(&self) -> bool {
        match self {
            Formula::Interval(..) => true,
            Formula::Not(f) => f.has_interval(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::has_interval),
            Formula::Implies(a, b) => a.has_interval() || b.has_interval(),
            _ => false,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, items: &[Formula]| -> fmt::Result {
            write!(f, "({head}")?;
            for i in items {
                write!(f, " {i}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Cmp(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            Formula::Not(x) => write!(f, "(not {x})"),
            Formula::And(xs) => list(f, "and", xs),
            Formula::Or(xs) => list(f, "or", xs),
            Formula::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Formula::Interval(op, w, body) => write!(
                f,
                "{}{}{},{}{}[{body}]",
                if *op == Temporal::All { "X" } else { "F" },
                if w.start_inclusive { '[' } else { '(' },
                w.start,
                w.end,
                if w.end_inclusive { ']' } else { ')' }
            ),
        }
    }
}

/// A parsed query file.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub system: String,
    pub formula: Formula,
    /// Atoms pinned at every step.
    pub assumptions: Vec<Formula>,
}

/// A query after unfolding: only current and past references remain.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainQuery {
    pub system: String,
    pub formula: Formula,
    /// How far the formula was moved into the past.
    pub shift: u32,
    pub assumptions: Vec<Formula>,
}

impl PlainQuery {
    pub fn max_offset(&self) -> i64 {
        self.formula.vars().iter().map(|v| v.offset).max().unwrap_or(0)
    }
}

impl fmt::Display for PlainQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(query {} {})", self.system, self.formula)?;
        for a in &self.assumptions {
            write!(f, "\n(assume-input {} {a})", self.system)?;
        }
        Ok(())
    }
}
