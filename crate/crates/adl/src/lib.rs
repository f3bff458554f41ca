//! Architecture definitions for quasi-periodic publish/subscribe systems.
//!
//! Source text is parsed into an untyped tree ([`ast`]), lowered into an
//! [`ArchitectureSpec`], and checked by [`validate`]. [`pretty_print`] emits
//! a canonical form that re-parses to the same spec.

pub mod ast;
pub mod duration;
pub mod format;
mod lexer;
mod parser;
mod pretty;
mod spec;
mod validate;

use std::fmt;

pub use duration::{format_duration, parse_duration};
pub use format::{check_subtype, FormatType, UnsupportedComparison};
pub use parser::parse_items;
pub use pretty::{arch_hash, pretty_print};
pub use spec::{
    parse_architecture, parse_architecture_named, AliasSpec, ArchitectureSpec, ConstantSpec, Declared, MachineSpec,
    NodeSpec, ParseDiagnostics, PlantSpec, PublicationSpec, ResolveError, SubscriptionSpec, TopicField, TopicSpec,
};
pub use validate::{validate, ValidationReport};

/// 1-based source position. Specs built in code carry `Loc::default()`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
            Severity::Info => "INFO",
        })
    }
}

/// One diagnostic or validation result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub rule: String,
    pub loc: Loc,
    pub message: String,
}

impl Finding {
    pub fn error(rule: &str, loc: Loc, message: impl Into<String>) -> Self {
        Finding { severity: Severity::Error, rule: rule.to_string(), loc, message: message.into() }
    }

    pub fn warning(rule: &str, loc: Loc, message: impl Into<String>) -> Self {
        Finding { severity: Severity::Warning, rule: rule.to_string(), loc, message: message.into() }
    }

    /// `SEVERITY<TAB>RULE<TAB>LINE:COL<TAB>MESSAGE`
    pub fn record(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.severity, self.rule, self.loc, self.message)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} at {}: {}", self.severity.to_string().to_lowercase(), self.rule, self.loc, self.message)
    }
}

/// Deterministic order used by every report: location, then rule, then text.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| (a.loc, &a.rule, &a.message).cmp(&(b.loc, &b.rule, &b.message)));
}
