use std::fmt::Write;

use sha2::{Digest, Sha256};

use crate::ast::{block_decl, inline_field, scalar_text, Body};
use crate::duration::format_duration;
use crate::ArchitectureSpec;

fn fields_suffix(fields: &[crate::ast::Field]) -> String {
    fields.iter().map(|f| format!(" {}", inline_field(f))).collect()
}

/// Canonical text form. Declarations are grouped by kind, each group in
/// source order; durations use the largest exact unit.
pub fn pretty_print(spec: &ArchitectureSpec) -> String {
    let mut s = String::new();
    for a in &spec.aliases {
        let _ = writeln!(s, "{} = {}", a.name, a.target);
    }
    for c in &spec.constants {
        let value: Vec<String> = c.value.iter().map(scalar_text).collect();
        let _ = writeln!(s, "{} : {} {}", c.name, c.ty, value.join(" "));
    }
    for t in &spec.topics {
        if t.fields.is_empty() && t.extra.is_empty() {
            let _ = writeln!(s, "{} : topic {{ }}", t.name);
            continue;
        }
        let _ = writeln!(s, "{} : topic {{", t.name);
        if !t.fields.is_empty() {
            s.push_str("  FIELDS\n");
            for f in &t.fields {
                let default = match &f.default {
                    Body::Value(v) => v.iter().map(|(x, _)| scalar_text(x)).collect::<Vec<_>>().join(" "),
                    Body::Class(fs) => format!("{{{} }}", fields_suffix(fs)),
                };
                let _ = writeln!(s, "    {} : {} {}", f.name, f.format, default);
            }
        }
        for f in &t.extra {
            let _ = writeln!(s, "  {}", inline_field(f));
        }
        s.push_str("}\n");
    }
    for n in &spec.nodes {
        let _ = writeln!(s, "{} : node {{", n.name);
        if !n.subscriptions.is_empty() {
            s.push_str("  SUBSCRIBES\n");
            for sub in &n.subscriptions {
                let queue = if sub.buffer_capacity == 1 { String::new() } else { format!(" QUEUE {}", sub.buffer_capacity) };
                let _ = writeln!(
                    s,
                    "    {} {{ TOPIC {} MAXLATENCY {}{}{} }}",
                    sub.local_name,
                    sub.topic,
                    format_duration(sub.max_latency),
                    queue,
                    fields_suffix(&sub.extra)
                );
            }
        }
        if !n.publications.is_empty() {
            s.push_str("  PUBLISHES\n");
            for p in &n.publications {
                let _ = writeln!(s, "    {} {{ TOPIC {}{} }}", p.local_name, p.topic, fields_suffix(&p.extra));
            }
        }
        if n.period_min == n.period_max {
            let _ = writeln!(s, "  PERIOD {}", format_duration(n.period_min));
        } else {
            let _ = writeln!(s, "  PERIOD {} .. {}", format_duration(n.period_min), format_duration(n.period_max));
        }
        if let Some(w) = n.wcet {
            let _ = writeln!(s, "  WCET {}", format_duration(w));
        }
        for f in n.step_binding.iter().chain(&n.extra) {
            let _ = writeln!(s, "  {}", inline_field(f));
        }
        s.push_str("}\n");
    }
    for d in &spec.physical {
        let _ = writeln!(s, "{}", block_decl(d));
    }
    if let Some(raw) = spec.plant.as_ref().and_then(|p| p.raw.as_ref()) {
        let _ = writeln!(s, "{}", block_decl(raw));
    }
    for d in &spec.opaque {
        let _ = writeln!(s, "{}", block_decl(d));
    }
    s
}

/// Hex SHA-256 of the canonical form; identifies an architecture in traces.
pub fn arch_hash(spec: &ArchitectureSpec) -> String {
    let digest = Sha256::digest(pretty_print(spec).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
