use std::collections::BTreeMap;

use crate::ast::Body;
use crate::format::literal_fits;
use crate::spec::{duplicates, module_names, ResolveError};
use crate::{sort_findings, ArchitectureSpec, Finding, Severity};

/// Ordered findings from [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn rules(&self) -> Vec<&str> {
        self.findings.iter().map(|f| f.rule.as_str()).collect()
    }

    /// One `SEVERITY<TAB>RULE<TAB>LINE:COL<TAB>MESSAGE` line per finding.
    pub fn to_records(&self) -> String {
        self.findings.iter().map(|f| f.record() + "\n").collect()
    }
}

pub fn validate(spec: &ArchitectureSpec) -> ValidationReport {
    let mut out = Vec::new();

    for (name, loc) in duplicates(module_names(spec)) {
        out.push(Finding::error("DUPLICATE_NAME", loc, format!("'{name}' is declared more than once")));
    }

    for a in &spec.aliases {
        match spec.resolve_identifier(&a.name) {
            Ok(_) => {}
            Err(e @ ResolveError::Cycle(_)) => out.push(Finding::error("ALIAS_CYCLE", a.loc, e.to_string())),
            Err(e) => out.push(Finding::error("UNRESOLVED_IDENTIFIER", a.loc, e.to_string())),
        }
    }

    for t in &spec.topics {
        let publishers: Vec<&str> = {
            let mut v: Vec<&str> = spec.publishers_of(&t.name).map(|n| n.name.as_str()).collect();
            v.dedup();
            v
        };
        match publishers.len() {
            0 => out.push(Finding::error("NO_PUBLISHER", t.loc, format!("topic '{}' has no publishing node", t.name))),
            1 => {}
            _ => out.push(Finding::error(
                "UNIQUE_PUBLISHER",
                t.loc,
                format!("topic '{}' is published by {}", t.name, publishers.join(", ")),
            )),
        }
        for f in &t.fields {
            let fits = match &f.default {
                Body::Value(_) => f.default_word().and_then(|w| literal_fits(f.format, w)),
                Body::Class(_) => literal_fits(f.format, "").map(|_| false),
            };
            if fits == Some(false) {
                let shown = f.default_word().unwrap_or("{ ... }");
                out.push(Finding::error(
                    "TYPE_SIZE",
                    f.loc,
                    format!("default {shown} of '{}.{}' does not fit {}", t.name, f.name, f.format),
                ));
            }
        }
    }

    for n in &spec.nodes {
        if n.period_min == 0 || n.period_min > n.period_max {
            out.push(Finding::error(
                "PERIOD_BOUNDS",
                n.loc,
                format!("node '{}' period {}..{}us violates 0 < min <= max", n.name, n.period_min, n.period_max),
            ));
        }
        if let Some(w) = n.wcet {
            if w > n.period_min {
                out.push(Finding::error(
                    "WCET_BOUND",
                    n.loc,
                    format!("node '{}' WCET {w}us exceeds minimum period {}us", n.name, n.period_min),
                ));
            }
        }
        let locals = n
            .subscriptions
            .iter()
            .map(|s| (s.local_name.as_str(), s.loc))
            .chain(n.publications.iter().map(|p| (p.local_name.as_str(), p.loc)));
        for (name, loc) in duplicates(locals) {
            out.push(Finding::error(
                "DUPLICATE_NAME",
                loc,
                format!("'{name}' is declared more than once in node '{}'", n.name),
            ));
        }
        for (topic, loc) in duplicates(n.subscriptions.iter().map(|s| (s.topic.as_str(), s.loc))) {
            out.push(Finding::error(
                "DUPLICATE_NAME",
                loc,
                format!("node '{}' subscribes to topic '{topic}' more than once", n.name),
            ));
        }
        for p in &n.publications {
            if spec.topic(&p.topic).is_none() {
                out.push(Finding::error(
                    "UNDECLARED_TOPIC",
                    p.loc,
                    format!("publication '{}.{}' names undeclared topic '{}'", n.name, p.local_name, p.topic),
                ));
            }
        }
        for s in &n.subscriptions {
            if spec.topic(&s.topic).is_none() {
                out.push(Finding::error(
                    "UNDECLARED_TOPIC",
                    s.loc,
                    format!("subscription '{}.{}' names undeclared topic '{}'", n.name, s.local_name, s.topic),
                ));
            }
            if s.max_latency == 0 {
                out.push(Finding::error(
                    "MAX_LATENCY",
                    s.loc,
                    format!("subscription '{}.{}' MAXLATENCY must be positive", n.name, s.local_name),
                ));
            }
            if s.buffer_capacity == 0 {
                out.push(Finding::error(
                    "QUEUE_CAPACITY",
                    s.loc,
                    format!("subscription '{}.{}' QUEUE must be at least 1", n.name, s.local_name),
                ));
            }
        }
    }

    if let Some(p) = &spec.plant {
        let mut placed: BTreeMap<&str, &str> = BTreeMap::new();
        for m in &p.machines {
            for (node, loc) in &m.nodes {
                if spec.node(node).is_none() {
                    out.push(Finding::error(
                        "UNRESOLVED_IDENTIFIER",
                        *loc,
                        format!("machine '{}' hosts unknown node '{node}'", m.name),
                    ));
                }
                if let Some(prev) = placed.insert(node, &m.name) {
                    out.push(Finding::error(
                        "PLANT_ASSIGNMENT",
                        *loc,
                        format!("node '{node}' is assigned to both '{prev}' and '{}'", m.name),
                    ));
                }
            }
        }
    }

    sort_findings(&mut out);
    ValidationReport { findings: out }
}
