//! Validation checked against an independent invariant oracle written
//! directly from the model's invariants.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use qparch_adl::{
    parse_architecture, validate, AliasSpec, ArchitectureSpec, FormatType, MachineSpec, NodeSpec, PlantSpec,
    TopicSpec,
};

const FULL: &str = include_str!("../../scenarios/fixtures/thermostat.radl");

/// Every invariant of a well-formed architecture, evaluated without the
/// validator's code paths.
fn invariant_violations(spec: &ArchitectureSpec) -> Vec<String> {
    let mut v = Vec::new();
    let mut names = BTreeSet::new();
    let all_names = spec
        .aliases
        .iter()
        .map(|a| a.name.clone())
        .chain(spec.constants.iter().map(|c| c.name.clone()))
        .chain(spec.topics.iter().map(|t| t.name.clone()))
        .chain(spec.nodes.iter().map(|n| n.name.clone()))
        .chain(spec.plant.iter().map(|p| p.name.clone()));
    for n in all_names {
        if !names.insert(n.clone()) {
            v.push(format!("duplicate {n}"));
        }
    }
    let topic_names: BTreeSet<&str> = spec.topics.iter().map(|t| t.name.as_str()).collect();
    for t in &spec.topics {
        let pubs: BTreeSet<&str> = spec
            .nodes
            .iter()
            .filter(|n| n.publications.iter().any(|p| p.topic == t.name))
            .map(|n| n.name.as_str())
            .collect();
        if pubs.len() != 1 {
            v.push(format!("topic {} has {} publishers", t.name, pubs.len()));
        }
        for f in &t.fields {
            let w = f.default_word().unwrap();
            let ok = match f.format {
                FormatType::Bool => w == "true" || w == "false",
                FormatType::Int8 => w.parse::<i8>().is_ok(),
                FormatType::Uint8 => w.parse::<u8>().is_ok(),
                FormatType::Int16 => w.parse::<i16>().is_ok(),
                FormatType::Uint16 => w.parse::<u16>().is_ok(),
                FormatType::Int32 => w.parse::<i32>().is_ok(),
                FormatType::Uint32 => w.parse::<u32>().is_ok(),
                _ => true,
            };
            if !ok {
                v.push(format!("default {w} does not fit {}", f.format));
            }
        }
    }
    for n in &spec.nodes {
        if !(0 < n.period_min && n.period_min <= n.period_max) {
            v.push(format!("period of {}", n.name));
        }
        if matches!(n.wcet, Some(w) if w > n.period_min) {
            v.push(format!("wcet of {}", n.name));
        }
        let mut locals = BTreeSet::new();
        let mut sub_topics = BTreeSet::new();
        for s in &n.subscriptions {
            if !topic_names.contains(s.topic.as_str()) {
                v.push(format!("undeclared {}", s.topic));
            }
            if s.max_latency == 0 || s.buffer_capacity == 0 {
                v.push(format!("bad subscription {}", s.local_name));
            }
            if !locals.insert(s.local_name.clone()) || !sub_topics.insert(s.topic.clone()) {
                v.push(format!("duplicate local {}", s.local_name));
            }
        }
        for p in &n.publications {
            if !topic_names.contains(p.topic.as_str()) {
                v.push(format!("undeclared {}", p.topic));
            }
            if !locals.insert(p.local_name.clone()) {
                v.push(format!("duplicate local {}", p.local_name));
            }
        }
    }
    // aliases: follow targets by brute force
    let alias: BTreeMap<&str, &str> = spec.aliases.iter().map(|a| (a.name.as_str(), a.target.as_str())).collect();
    for a in &spec.aliases {
        let mut cur = a.name.as_str();
        let mut steps = 0;
        while let Some(next) = alias.get(cur) {
            if names.contains(*next) && !alias.contains_key(next) {
                break;
            }
            cur = next;
            steps += 1;
            if steps > alias.len() {
                break;
            }
        }
        let end = alias.get(cur).copied().unwrap_or(cur);
        if steps > alias.len() || !names.contains(end) || alias.contains_key(end) {
            v.push(format!("alias {} unresolvable", a.name));
        }
    }
    if let Some(p) = &spec.plant {
        let mut seen = BTreeSet::new();
        for m in &p.machines {
            for (node, _) in &m.nodes {
                if spec.node(node).is_none() || !seen.insert(node.clone()) {
                    v.push(format!("plant node {node}"));
                }
            }
        }
    }
    v
}

#[test]
fn thermostat_fixture_is_clean() {
    let spec = parse_architecture(FULL).unwrap();
    assert!(invariant_violations(&spec).is_empty());
    let report = validate(&spec);
    assert!(report.is_empty(), "{}", report.to_records());
}

#[test]
fn duplicate_publisher() {
    let mut spec = parse_architecture(FULL).unwrap();
    let extra = NodeSpec::new("rogue", 50_000, 50_000).publishes("o", "thermostat_data");
    spec.nodes.push(extra);
    assert_eq!(validate(&spec).rules(), ["UNIQUE_PUBLISHER"]);
}

#[test]
fn type_size_violation() {
    let src = "t : topic { FIELDS v : int16 70000 }\nn : node { PUBLISHES o { TOPIC t } PERIOD 1msec }";
    let report = validate(&parse_architecture(src).unwrap());
    assert_eq!(report.rules(), ["TYPE_SIZE"]);
    assert_eq!(report.findings[0].loc.line, 1);
    assert!(report.to_records().starts_with("ERROR\tTYPE_SIZE\t1:20\t"));
}

#[test]
fn timing_rules() {
    let src = "t : topic { FIELDS v : bool true }\n\
               p : node { PUBLISHES o { TOPIC t } PERIOD 5msec .. 2msec }\n\
               w : node { PERIOD 1msec WCET 2msec }\n\
               s : node { SUBSCRIBES i { TOPIC t MAXLATENCY 0usec QUEUE 0 } PERIOD 1msec }";
    let report = validate(&parse_architecture(src).unwrap());
    assert_eq!(report.rules(), ["PERIOD_BOUNDS", "WCET_BOUND", "MAX_LATENCY", "QUEUE_CAPACITY"]);
}

#[test]
fn undeclared_topics_and_plant_errors() {
    let src = "n : node { SUBSCRIBES i { TOPIC ghost MAXLATENCY 1msec } PERIOD 1msec }\n\
               a : linux { NODES n n2 }\nb : linux { NODES n }\n\
               plant : plant { MACHINES m1 { OS a } m2 { OS b } }";
    let report = validate(&parse_architecture(src).unwrap());
    assert_eq!(report.rules(), ["UNDECLARED_TOPIC", "UNRESOLVED_IDENTIFIER", "PLANT_ASSIGNMENT"]);
}

#[test]
fn findings_are_ordered_by_location() {
    let src = "t : topic { FIELDS v : int8 300 }\nu : topic { FIELDS w : int8 1 }\nt : topic { FIELDS x : uint8 -1 }";
    let report = validate(&parse_architecture(src).unwrap());
    let locs: Vec<_> = report.findings.iter().map(|f| f.loc).collect();
    let mut sorted = locs.clone();
    sorted.sort();
    assert_eq!(locs, sorted);
    assert!(report.rules().contains(&"DUPLICATE_NAME"));
}

const INT_FORMATS: [FormatType; 7] = [
    FormatType::Bool,
    FormatType::Int8,
    FormatType::Uint8,
    FormatType::Int16,
    FormatType::Uint16,
    FormatType::Int32,
    FormatType::Uint32,
];

fn arb_spec() -> impl Strategy<Value = ArchitectureSpec> {
    let topic = (0usize..4, 0usize..INT_FORMATS.len(), -70_000i64..70_000, any::<bool>());
    let sub = (0usize..5, 0u64..3, 0u64..3);
    let node = (1u64..4, 0u64..4, prop::option::of(0u64..4), prop::collection::vec(0usize..5, 0..3), prop::collection::vec(sub, 0..3));
    (
        prop::collection::vec(topic, 0..4),
        prop::collection::vec(node, 0..4),
        prop::collection::vec((0usize..6, 0usize..6), 0..3),
        prop::option::of(prop::collection::vec(prop::collection::vec(0usize..5, 0..3), 1..3)),
    )
        .prop_map(|(topics, nodes, aliases, plant)| {
            let mut spec = ArchitectureSpec::new("fuzz");
            for (i, fmt, val, as_bool) in topics {
                let f = INT_FORMATS[fmt];
                let default = if f == FormatType::Bool {
                    if as_bool { "true".to_string() } else { "0".to_string() }
                } else {
                    val.to_string()
                };
                spec.topics.push(TopicSpec::new(&format!("t{i}")).field("v", f, &default));
            }
            for (k, (pmin, extra, wcet, pubs, subs)) in nodes.into_iter().enumerate() {
                let mut n = NodeSpec::new(&format!("n{k}"), pmin * 1000 - 1000 * (pmin % 3 == 0) as u64, (pmin + extra) * 1000);
                n.wcet = wcet.map(|w| w * 1000);
                for (j, t) in pubs.into_iter().enumerate() {
                    n = n.publishes(&format!("o{j}"), &format!("t{t}"));
                }
                for (j, (t, l, q)) in subs.into_iter().enumerate() {
                    n = n.subscribes(&format!("i{j}"), &format!("t{t}"), l * 500, q);
                }
                spec.nodes.push(n);
            }
            for (a, b) in aliases {
                let target = if b < 3 { format!("a{b}") } else { format!("t{}", b - 3) };
                spec.aliases.push(AliasSpec { name: format!("a{a}"), target, loc: Default::default() });
            }
            if let Some(machines) = plant {
                spec.plant = Some(PlantSpec {
                    name: "plant".into(),
                    machines: machines
                        .into_iter()
                        .enumerate()
                        .map(|(i, ns)| MachineSpec {
                            name: format!("m{i}"),
                            os_kind: "linux".into(),
                            nodes: ns.into_iter().map(|n| (format!("n{n}"), Default::default())).collect(),
                            address: None,
                            loc: Default::default(),
                        })
                        .collect(),
                    raw: None,
                    loc: Default::default(),
                });
            }
            spec
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn empty_report_iff_invariants_hold(spec in arb_spec()) {
        let report = validate(&spec);
        let oracle = invariant_violations(&spec);
        prop_assert_eq!(report.is_empty(), oracle.is_empty(), "report: {} oracle: {:?}", report.to_records(), oracle);
    }

    #[test]
    fn validation_is_deterministic(spec in arb_spec()) {
        prop_assert_eq!(validate(&spec), validate(&spec));
    }
}
