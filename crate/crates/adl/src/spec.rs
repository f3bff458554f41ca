use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{Body, Decl, Field, Item, Scalar, Value};
use crate::duration::{looks_like_duration, parse_duration};
use crate::format::FormatType;
use crate::parser::parse_items;
use crate::{sort_findings, Finding, Loc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasSpec {
    pub name: String,
    pub target: String,
    pub loc: Loc,
}

/// A typed scalar declaration such as `basic_rate : duration 50msec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantSpec {
    pub name: String,
    pub ty: String,
    pub value: Vec<Scalar>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicField {
    pub name: String,
    pub format: FormatType,
    /// Default value as written; a single word for scalar formats.
    pub default: Body,
    pub loc: Loc,
}

impl TopicField {
    pub fn default_word(&self) -> Option<&str> {
        match &self.default {
            Body::Value(v) if v.len() == 1 => v[0].0.as_word(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicSpec {
    pub name: String,
    pub fields: Vec<TopicField>,
    pub extra: Vec<Field>,
    pub loc: Loc,
}

impl TopicSpec {
    pub fn new(name: &str) -> Self {
        TopicSpec { name: name.into(), fields: Vec::new(), extra: Vec::new(), loc: Loc::default() }
    }

    pub fn field(mut self, name: &str, format: FormatType, default: &str) -> Self {
        self.fields.push(TopicField {
            name: name.into(),
            format,
            default: Body::Value(vec![(Scalar::Word(default.into()), Loc::default())]),
            loc: Loc::default(),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationSpec {
    pub local_name: String,
    pub topic: String,
    pub extra: Vec<Field>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubscriptionSpec {
    pub local_name: String,
    pub topic: String,
    /// Microseconds from publisher step start to mailbox availability.
    pub max_latency: u64,
    pub buffer_capacity: u64,
    pub extra: Vec<Field>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: String,
    pub period_min: u64,
    pub period_max: u64,
    pub wcet: Option<u64>,
    pub publications: Vec<PublicationSpec>,
    pub subscriptions: Vec<SubscriptionSpec>,
    /// Source-binding fields (PATH, CXX, ...) kept verbatim.
    pub step_binding: Vec<Field>,
    pub extra: Vec<Field>,
    pub loc: Loc,
}

impl NodeSpec {
    pub fn new(name: &str, period_min: u64, period_max: u64) -> Self {
        NodeSpec {
            name: name.into(),
            period_min,
            period_max,
            wcet: None,
            publications: Vec::new(),
            subscriptions: Vec::new(),
            step_binding: Vec::new(),
            extra: Vec::new(),
            loc: Loc::default(),
        }
    }

    pub fn publishes(mut self, local_name: &str, topic: &str) -> Self {
        self.publications.push(PublicationSpec {
            local_name: local_name.into(),
            topic: topic.into(),
            extra: Vec::new(),
            loc: Loc::default(),
        });
        self
    }

    pub fn subscribes(mut self, local_name: &str, topic: &str, max_latency: u64, queue: u64) -> Self {
        self.subscriptions.push(SubscriptionSpec {
            local_name: local_name.into(),
            topic: topic.into(),
            max_latency,
            buffer_capacity: queue,
            extra: Vec::new(),
            loc: Loc::default(),
        });
        self
    }

    pub fn with_wcet(mut self, wcet: u64) -> Self {
        self.wcet = Some(wcet);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    /// Dotted for virtual machines, e.g. `house_computer.vm1`.
    pub name: String,
    pub os_kind: String,
    pub nodes: Vec<(String, Loc)>,
    pub address: Option<String>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantSpec {
    pub name: String,
    pub machines: Vec<MachineSpec>,
    /// The plant declaration as written; printed back verbatim.
    pub raw: Option<Decl>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArchitectureSpec {
    pub module_name: String,
    pub aliases: Vec<AliasSpec>,
    pub constants: Vec<ConstantSpec>,
    pub topics: Vec<TopicSpec>,
    pub nodes: Vec<NodeSpec>,
    pub plant: Option<PlantSpec>,
    /// Operating-system and machine declarations referenced by the plant.
    pub physical: Vec<Decl>,
    /// Declarations of classes the model does not interpret.
    pub opaque: Vec<Decl>,
    /// Non-fatal parse findings (unknown fields and classes).
    pub warnings: Vec<Finding>,
}

/// What a dotted identifier resolves to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Declared<'a> {
    Topic(&'a TopicSpec),
    TopicField(&'a TopicSpec, &'a TopicField),
    Node(&'a NodeSpec),
    Subscription(&'a NodeSpec, &'a SubscriptionSpec),
    Publication(&'a NodeSpec, &'a PublicationSpec),
    Constant(&'a ConstantSpec),
    Plant(&'a PlantSpec),
    Decl(&'a Decl),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("unknown identifier '{0}'")]
    UnknownRoot(String),
    #[error("'{path}' has no member '{member}'")]
    UnknownMember { path: String, member: String },
    #[error("alias cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

fn nested_named<'a>(fields: &'a [Field], name: &str) -> Option<&'a Decl> {
    fields.iter().flat_map(|f| f.values.iter()).find_map(|v| match v {
        Value::Decl(d) if d.name.as_deref() == Some(name) => Some(d),
        _ => None,
    })
}

impl ArchitectureSpec {
    pub fn new(module_name: &str) -> Self {
        ArchitectureSpec { module_name: module_name.into(), ..Default::default() }
    }

    pub fn topic(&self, name: &str) -> Option<&TopicSpec> {
        self.topics.iter().find(|t| t.name == name)
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Nodes with a publication on `topic`, in declaration order.
    pub fn publishers_of<'a>(&'a self, topic: &'a str) -> impl Iterator<Item = &'a NodeSpec> + 'a {
        self.nodes.iter().filter(move |n| n.publications.iter().any(|p| p.topic == topic))
    }

    fn alias(&self, name: &str) -> Option<&AliasSpec> {
        self.aliases.iter().find(|a| a.name == name)
    }

    fn root(&self, name: &str) -> Option<Declared<'_>> {
        if let Some(t) = self.topic(name) {
            return Some(Declared::Topic(t));
        }
        if let Some(n) = self.node(name) {
            return Some(Declared::Node(n));
        }
        if let Some(c) = self.constants.iter().find(|c| c.name == name) {
            return Some(Declared::Constant(c));
        }
        if let Some(p) = self.plant.as_ref().filter(|p| p.name == name) {
            return Some(Declared::Plant(p));
        }
        self.physical.iter().chain(&self.opaque).find(|d| d.name.as_deref() == Some(name)).map(Declared::Decl)
    }

    /// Follow aliases on the root segment until a declaration is reached,
    /// then walk the remaining segments through nested names.
    pub fn resolve_identifier(&self, dotted_path: &str) -> Result<Declared<'_>, ResolveError> {
        let mut path = dotted_path.to_string();
        let mut seen: Vec<String> = Vec::new();
        loop {
            let (root, rest) = match path.split_once('.') {
                Some((r, rest)) => (r.to_string(), Some(rest.to_string())),
                None => (path.clone(), None),
            };
            if let Some(found) = self.root(&root) {
                let mut cur = found;
                let mut walked = root.clone();
                for member in rest.iter().flat_map(|r| r.split('.')) {
                    let next = match cur {
                        Declared::Topic(t) => {
                            t.fields.iter().find(|f| f.name == member).map(|f| Declared::TopicField(t, f))
                        }
                        Declared::Node(n) => n
                            .subscriptions
                            .iter()
                            .find(|s| s.local_name == member)
                            .map(|s| Declared::Subscription(n, s))
                            .or_else(|| {
                                n.publications
                                    .iter()
                                    .find(|p| p.local_name == member)
                                    .map(|p| Declared::Publication(n, p))
                            }),
                        Declared::Plant(p) => match &p.raw {
                            Some(Decl { body: Body::Class(fs), .. }) => nested_named(fs, member).map(Declared::Decl),
                            _ => None,
                        },
                        Declared::Decl(Decl { body: Body::Class(fs), .. }) => {
                            nested_named(fs, member).map(Declared::Decl)
                        }
                        _ => None,
                    };
                    cur = next.ok_or_else(|| ResolveError::UnknownMember {
                        path: walked.clone(),
                        member: member.to_string(),
                    })?;
                    walked.push('.');
                    walked.push_str(member);
                }
                return Ok(cur);
            }
            let Some(a) = self.alias(&root) else {
                return Err(ResolveError::UnknownRoot(root));
            };
            if seen.contains(&root) {
                seen.push(root);
                return Err(ResolveError::Cycle(seen));
            }
            seen.push(root);
            path = match rest {
                Some(rest) => format!("{}.{}", a.target, rest),
                None => a.target.clone(),
            };
        }
    }

    /// Canonical name of the topic an identifier denotes, if any.
    pub fn resolve_topic(&self, ident: &str) -> Option<&TopicSpec> {
        match self.resolve_identifier(ident) {
            Ok(Declared::Topic(t)) => Some(t),
            _ => None,
        }
    }
}

/// Hard parse errors; the spec could not be built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostics(pub Vec<Finding>);

impl fmt::Display for ParseDiagnostics {
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

impl std::error::Error for ParseDiagnostics {}

const PHYSICAL_KINDS: [&str; 3] = ["linux", "lynxsecure", "machine"];
const OPAQUE_KINDS: [&str; 3] = ["cxx_file", "cmake_library", "static_library"];
const STEP_BINDING_FIELDS: [&str; 5] = ["PATH", "CXX", "C", "LIB", "LIBS"];

pub fn parse_architecture(source: &str) -> Result<ArchitectureSpec, ParseDiagnostics> {
    parse_architecture_named("main", source)
}

pub fn parse_architecture_named(module_name: &str, source: &str) -> Result<ArchitectureSpec, ParseDiagnostics> {
    let items = parse_items(source).map_err(|d| ParseDiagnostics(vec![d]))?;
    let mut lw = Lowering { spec: ArchitectureSpec::new(module_name), errors: Vec::new() };
    lw.run(items);
    if lw.errors.is_empty() {
        sort_findings(&mut lw.spec.warnings);
        Ok(lw.spec)
    } else {
        sort_findings(&mut lw.errors);
        Err(ParseDiagnostics(lw.errors))
    }
}

struct Lowering {
    spec: ArchitectureSpec,
    errors: Vec<Finding>,
}

fn inferred_type(body: &Body) -> Option<&'static str> {
    match body {
        Body::Value(v) => match v.first().map(|(s, _)| s) {
            Some(Scalar::Word(w)) if parse_duration(w).is_ok() => Some("duration"),
            Some(Scalar::Word(w)) if w == "true" || w == "false" => Some("bool"),
            _ => None,
        },
        Body::Class(_) => None,
    }
}

impl Lowering {
    fn err(&mut self, rule: &str, loc: Loc, msg: impl Into<String>) {
        self.errors.push(Finding::error(rule, loc, msg));
    }

    fn warn(&mut self, rule: &str, loc: Loc, msg: impl Into<String>) {
        self.spec.warnings.push(Finding::warning(rule, loc, msg));
    }

    fn run(&mut self, items: Vec<Item>) {
        let mut nodes = Vec::new();
        let mut plants = Vec::new();
        for item in items {
            let d = match item {
                Item::Alias { name, target, loc } => {
                    self.spec.aliases.push(AliasSpec { name, target, loc });
                    continue;
                }
                Item::Decl(d) => d,
            };
            let name = d.name.clone().unwrap_or_default();
            let ty = match d.ty.as_deref().or_else(|| inferred_type(&d.body)) {
                Some(t) => t.to_string(),
                None => {
                    self.err("AMBIGUOUS_TYPE", d.loc, format!("cannot infer the type of '{name}'; add ': TYPE'"));
                    continue;
                }
            };
            match (ty.as_str(), &d.body) {
                ("topic", Body::Class(_)) => self.topic(&d),
                ("node", Body::Class(_)) => nodes.push(d),
                ("plant", Body::Class(_)) => plants.push(d),
                (k, Body::Class(_)) if PHYSICAL_KINDS.contains(&k) => self.spec.physical.push(d),
                (k, Body::Class(_)) if OPAQUE_KINDS.contains(&k) => self.spec.opaque.push(d),
                ("topic" | "node" | "plant", Body::Value(_)) => {
                    self.err("SYNTAX", d.loc, format!("'{name}' of class {ty} needs a '{{ ... }}' value"))
                }
                (_, Body::Value(v)) => {
                    if ty == "duration" {
                        self.check_duration_constant(v);
                    }
                    self.spec.constants.push(ConstantSpec {
                        name,
                        ty,
                        value: v.iter().map(|(s, _)| s.clone()).collect(),
                        loc: d.loc,
                    });
                }
                (_, Body::Class(_)) => {
                    self.warn("UNKNOWN_CLASS", d.loc, format!("class '{ty}' of '{name}' is not interpreted"));
                    self.spec.opaque.push(d);
                }
            }
        }
        for d in nodes {
            self.node(&d);
        }
        for d in plants {
            self.plant(d);
        }
        for a in self.spec.aliases.clone() {
            match self.spec.resolve_identifier(&a.name) {
                Ok(_) => {}
                Err(e @ ResolveError::Cycle(_)) => self.err("ALIAS_CYCLE", a.loc, e.to_string()),
                Err(e) => self.err("UNRESOLVED_IDENTIFIER", a.loc, e.to_string()),
            }
        }
    }

    fn check_duration_constant(&mut self, v: &[(Scalar, Loc)]) {
        for (s, loc) in v {
            if let Scalar::Word(w) = s {
                if parse_duration(w).is_err() {
                    self.err("DURATION", *loc, format!("malformed duration literal '{w}'"));
                }
            }
        }
    }

    fn topic(&mut self, d: &Decl) {
        let Body::Class(fields) = &d.body else { unreachable!() };
        let mut t = TopicSpec { name: d.name.clone().unwrap_or_default(), fields: Vec::new(), extra: Vec::new(), loc: d.loc };
        for f in fields {
            if f.name != "FIELDS" {
                self.warn("UNKNOWN_FIELD", f.loc, format!("topic field {} is not interpreted", f.name));
                t.extra.push(f.clone());
                continue;
            }
            for v in &f.values {
                let Value::Decl(fd) = v else {
                    self.err("SYNTAX", f.loc, "FIELDS entries take the form 'name : format default'");
                    continue;
                };
                let Some(fname) = fd.name.clone() else {
                    self.err("SYNTAX", fd.loc, "topic field needs a name");
                    continue;
                };
                let Some(ty) = fd.ty.as_deref() else {
                    self.err("AMBIGUOUS_TYPE", fd.loc, format!("topic field '{fname}' needs a format type"));
                    continue;
                };
                match ty.parse::<FormatType>() {
                    Ok(format) => {
                        t.fields.push(TopicField { name: fname, format, default: fd.body.clone(), loc: fd.loc })
                    }
                    Err(e) => self.err("UNKNOWN_FORMAT", fd.loc, e),
                }
            }
        }
        self.spec.topics.push(t);
    }

    /// Resolve a word to duration bounds: a literal, or a name that leads
    /// to a duration constant (which may itself be a range).
    fn duration_word(&mut self, w: &str, loc: Loc, what: &str) -> Option<(u64, u64)> {
        if let Ok(us) = parse_duration(w) {
            return Some((us, us));
        }
        if looks_like_duration(w) || w.starts_with(|c: char| c.is_ascii_digit()) {
            self.err("DURATION", loc, format!("malformed duration literal '{w}'"));
            return None;
        }
        let resolved = self.spec.resolve_identifier(w).map(|d| match d {
            Declared::Constant(c) if c.ty == "duration" => Ok(c.value.clone()),
            _ => Err(()),
        });
        match resolved {
            Ok(Ok(value)) => {
                let words: Vec<&str> = value.iter().filter_map(|s| s.as_word()).collect();
                match words.as_slice() {
                    [one] => parse_duration(one).ok().map(|v| (v, v)),
                    [lo, hi] => Some((parse_duration(lo).ok()?, parse_duration(hi).ok()?)),
                    _ => None,
                }
            }
            Ok(Err(())) => {
                self.err("TYPE_MISMATCH", loc, format!("{what} expects a duration, '{w}' is not one"));
                None
            }
            Err(e) => {
                self.err("UNRESOLVED_IDENTIFIER", loc, e.to_string());
                None
            }
        }
    }

    fn duration_field(&mut self, f: &Field) -> Option<(u64, u64)> {
        let scalars: Vec<(&Scalar, Loc)> = f
            .values
            .iter()
            .filter_map(|v| match v {
                Value::Scalar(s, l) => Some((s, *l)),
                Value::Decl(_) => None,
            })
            .collect();
        if scalars.len() != f.values.len() {
            self.err("SYNTAX", f.loc, format!("{} expects a duration", f.name));
            return None;
        }
        match scalars.as_slice() {
            [(Scalar::Word(w), l)] => self.duration_word(w, *l, &f.name),
            [(Scalar::Word(a), la), (Scalar::Range, _), (Scalar::Word(b), lb)] => {
                let lo = self.duration_word(a, *la, &f.name)?;
                let hi = self.duration_word(b, *lb, &f.name)?;
                Some((lo.0, hi.1))
            }
            _ => {
                self.err("SYNTAX", f.loc, format!("{} expects 'duration' or 'duration .. duration'", f.name));
                None
            }
        }
    }

    fn single_word<'f>(&mut self, f: &'f Field) -> Option<(&'f str, Loc)> {
        match f.values.as_slice() {
            [Value::Scalar(Scalar::Word(w), l)] => Some((w.as_str(), *l)),
            _ => {
                self.err("SYNTAX", f.loc, format!("{} expects a single identifier", f.name));
                None
            }
        }
    }

    fn topic_ref(&mut self, w: &str) -> String {
        // keep the name as written when it does not lead to a topic; validation reports it
        self.spec.resolve_topic(w).map(|t| t.name.clone()).unwrap_or_else(|| w.to_string())
    }

    fn endpoint_decls<'d>(&mut self, f: &'d Field, kind: &str) -> Vec<&'d Decl> {
        let mut out = Vec::new();
        for v in &f.values {
            match v {
                Value::Decl(d @ Decl { name: Some(_), body: Body::Class(_), .. })
                    if d.ty.is_none() || d.ty.as_deref() == Some(kind) =>
                {
                    out.push(d)
                }
                Value::Decl(d) => {
                    self.err("SYNTAX", d.loc, format!("{} entries are named '{{ ... }}' {kind} values", f.name))
                }
                Value::Scalar(_, l) => {
                    self.err("SYNTAX", *l, format!("{} entries are named '{{ ... }}' {kind} values", f.name))
                }
            }
        }
        out
    }

    fn node(&mut self, d: &Decl) {
        let Body::Class(fields) = &d.body else { unreachable!() };
        let name = d.name.clone().unwrap_or_default();
        let mut n = NodeSpec::new(&name, 0, 0);
        n.loc = d.loc;
        let mut period = None;
        for f in fields {
            match f.name.as_str() {
                "PERIOD" => {
                    if period.is_some() {
                        self.err("SYNTAX", f.loc, "PERIOD given twice");
                    }
                    period = Some(self.duration_field(f));
                }
                "WCET" => n.wcet = self.duration_field(f).map(|(lo, _)| lo),
                "PUBLISHES" => {
                    for p in self.endpoint_decls(f, "publication") {
                        if let Some(pub_spec) = self.publication(p) {
                            n.publications.push(pub_spec);
                        }
                    }
                }
                "SUBSCRIBES" => {
                    for s in self.endpoint_decls(f, "subscription") {
                        if let Some(sub) = self.subscription(s) {
                            n.subscriptions.push(sub);
                        }
                    }
                }
                k if STEP_BINDING_FIELDS.contains(&k) => n.step_binding.push(f.clone()),
                other => {
                    self.warn("UNKNOWN_FIELD", f.loc, format!("node field {other} is not interpreted"));
                    n.extra.push(f.clone());
                }
            }
        }
        match period {
            Some(Some((lo, hi))) => {
                n.period_min = lo;
                n.period_max = hi;
            }
            Some(None) => {}
            None => self.err("MISSING_FIELD", d.loc, format!("node '{name}' has no PERIOD")),
        }
        self.spec.nodes.push(n);
    }

    fn publication(&mut self, d: &Decl) -> Option<PublicationSpec> {
        let Body::Class(fields) = &d.body else { return None };
        let mut topic = None;
        let mut extra = Vec::new();
        for f in fields {
            if f.name == "TOPIC" {
                topic = self.single_word(f).map(|(w, _)| self.topic_ref(w));
            } else {
                self.warn("UNKNOWN_FIELD", f.loc, format!("publication field {} is not interpreted", f.name));
                extra.push(f.clone());
            }
        }
        let local_name = d.name.clone().unwrap_or_default();
        let Some(topic) = topic else {
            self.err("MISSING_FIELD", d.loc, format!("publication '{local_name}' has no TOPIC"));
            return None;
        };
        Some(PublicationSpec { local_name, topic, extra, loc: d.loc })
    }

    fn subscription(&mut self, d: &Decl) -> Option<SubscriptionSpec> {
        let Body::Class(fields) = &d.body else { return None };
        let local_name = d.name.clone().unwrap_or_default();
        let (mut topic, mut latency, mut queue) = (None, None, 1u64);
        let mut extra = Vec::new();
        for f in fields {
            match f.name.as_str() {
                "TOPIC" => topic = self.single_word(f).map(|(w, _)| self.topic_ref(w)),
                "MAXLATENCY" => latency = self.duration_field(f).map(|(lo, _)| lo),
                "QUEUE" => {
                    if let Some((w, l)) = self.single_word(f) {
                        match self.integer(w) {
                            Some(q) => queue = q,
                            None => self.err("SYNTAX", l, format!("QUEUE expects a non-negative integer, got '{w}'")),
                        }
                    }
                }
                other => {
                    self.warn("UNKNOWN_FIELD", f.loc, format!("subscription field {other} is not interpreted"));
                    extra.push(f.clone());
                }
            }
        }
        let Some(topic) = topic else {
            self.err("MISSING_FIELD", d.loc, format!("subscription '{local_name}' has no TOPIC"));
            return None;
        };
        let Some(max_latency) = latency else {
            self.err("MISSING_FIELD", d.loc, format!("subscription '{local_name}' has no MAXLATENCY"));
            return None;
        };
        Some(SubscriptionSpec { local_name, topic, max_latency, buffer_capacity: queue, extra, loc: d.loc })
    }

    fn integer(&self, w: &str) -> Option<u64> {
        if let Ok(v) = w.parse::<u64>() {
            return Some(v);
        }
        match self.spec.resolve_identifier(w) {
            Ok(Declared::Constant(c)) => match c.value.as_slice() {
                [Scalar::Word(v)] => v.parse().ok(),
                _ => None,
            },
            _ => None,
        }
    }

    fn plant(&mut self, d: Decl) {
        let Body::Class(fields) = &d.body else { unreachable!() };
        let name = d.name.clone().unwrap_or_default();
        if self.spec.plant.is_some() {
            self.err("DUPLICATE_NAME", d.loc, format!("second plant declaration '{name}'"));
            return;
        }
        let mut machines = Vec::new();
        for f in fields {
            if f.name != "MACHINES" {
                self.warn("UNKNOWN_FIELD", f.loc, format!("plant field {} is not interpreted", f.name));
                continue;
            }
            for v in &f.values {
                match v {
                    Value::Decl(m @ Decl { name: Some(mname), body: Body::Class(_), .. }) => {
                        self.machine(mname, m, &mut machines, 0)
                    }
                    Value::Decl(m) => self.err("SYNTAX", m.loc, "MACHINES entries are named '{ OS ... }' values"),
                    Value::Scalar(_, l) => self.err("SYNTAX", *l, "MACHINES entries are named '{ OS ... }' values"),
                }
            }
        }
        self.spec.plant = Some(PlantSpec { name, machines, loc: d.loc, raw: Some(d) });
    }

    /// Flatten a machine (or virtual machine) into leaf entries that carry
    /// node assignments.
    fn machine(&mut self, path: &str, m: &Decl, out: &mut Vec<MachineSpec>, depth: usize) {
        if depth > 8 {
            self.err("SYNTAX", m.loc, "machine nesting too deep");
            return;
        }
        let Body::Class(fields) = &m.body else { return };
        let Some(os_field) = fields.iter().find(|f| f.name == "OS") else {
            self.warn("MISSING_FIELD", m.loc, format!("machine '{path}' has no OS"));
            return;
        };
        let os: Decl = match os_field.values.as_slice() {
            [Value::Decl(d)] => d.clone(),
            [Value::Scalar(Scalar::Word(w), l)] => match self.spec.resolve_identifier(w) {
                Ok(Declared::Decl(d)) => d.clone(),
                Ok(_) => {
                    self.err("TYPE_MISMATCH", *l, format!("OS '{w}' is not an operating-system declaration"));
                    return;
                }
                Err(e) => {
                    self.err("UNRESOLVED_IDENTIFIER", *l, e.to_string());
                    return;
                }
            },
            _ => {
                self.err("SYNTAX", os_field.loc, "OS expects one identifier or declaration");
                return;
            }
        };
        let Body::Class(os_fields) = &os.body else {
            self.err("SYNTAX", os.loc, "OS declaration needs a '{ ... }' value");
            return;
        };
        if let Some(vms) = os_fields.iter().find(|f| f.name == "VMS") {
            for v in &vms.values {
                if let Value::Decl(vm @ Decl { name: Some(vname), .. }) = v {
                    self.machine(&format!("{path}.{vname}"), vm, out, depth + 1);
                } else {
                    self.err("SYNTAX", vms.loc, "VMS entries are named '{ OS ... }' values");
                }
            }
            return;
        }
        let mut nodes = Vec::new();
        let mut address = None;
        for f in os_fields {
            match f.name.as_str() {
                "NODES" => {
                    for v in &f.values {
                        match v {
                            Value::Scalar(Scalar::Word(w), l) => nodes.push((w.clone(), *l)),
                            _ => self.err("SYNTAX", f.loc, "NODES expects node names"),
                        }
                    }
                }
                "IP" => {
                    address = f.values.iter().find_map(|v| match v {
                        Value::Scalar(s, _) => Some(crate::ast::scalar_text(s)),
                        Value::Decl(_) => None,
                    })
                }
                _ => {}
            }
        }
        out.push(MachineSpec {
            name: path.to_string(),
            os_kind: os.ty.clone().unwrap_or_else(|| "machine".into()),
            nodes,
            address,
            loc: m.loc,
        });
    }
}

/// Names declared at module scope, with their locations, in source order.
pub(crate) fn module_names(spec: &ArchitectureSpec) -> Vec<(&str, Loc)> {
    let mut out: Vec<(&str, Loc)> = Vec::new();
    out.extend(spec.aliases.iter().map(|a| (a.name.as_str(), a.loc)));
    out.extend(spec.constants.iter().map(|c| (c.name.as_str(), c.loc)));
    out.extend(spec.topics.iter().map(|t| (t.name.as_str(), t.loc)));
    out.extend(spec.nodes.iter().map(|n| (n.name.as_str(), n.loc)));
    out.extend(spec.plant.iter().map(|p| (p.name.as_str(), p.loc)));
    out.extend(spec.physical.iter().chain(&spec.opaque).filter_map(|d| d.name.as_deref().map(|n| (n, d.loc))));
    out
}

pub(crate) fn duplicates<'a>(names: impl IntoIterator<Item = (&'a str, Loc)>) -> Vec<(&'a str, Loc)> {
    let mut seen = BTreeSet::new();
    let mut dups = Vec::new();
    for (n, l) in names {
        if !seen.insert(n) {
            dups.push((n, l));
        }
    }
    dups
}
