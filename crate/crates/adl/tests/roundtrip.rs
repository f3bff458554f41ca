use proptest::prelude::*;
use qparch_adl::{parse_architecture, pretty_print, ArchitectureSpec};

const CORPUS: [&str; 4] = [
    include_str!("../../scenarios/fixtures/thermostat.radl"),
    include_str!("../../scenarios/fixtures/thermostat_excerpt.radl"),
    include_str!("../../scenarios/fixtures/regulation.radl"),
    include_str!("../../scenarios/fixtures/afs.radl"),
];

/// The parts of a spec that do not depend on source positions.
fn shape(spec: &ArchitectureSpec) -> String {
    let mut s = String::new();
    for t in &spec.topics {
        s += &format!("T {} {:?}\n", t.name, t.fields.iter().map(|f| (&f.name, f.format, f.default_word())).collect::<Vec<_>>());
    }
    for n in &spec.nodes {
        s += &format!("N {} {} {} {:?}\n", n.name, n.period_min, n.period_max, n.wcet);
        for sub in &n.subscriptions {
            s += &format!("  S {} {} {} {}\n", sub.local_name, sub.topic, sub.max_latency, sub.buffer_capacity);
        }
        for p in &n.publications {
            s += &format!("  P {} {}\n", p.local_name, p.topic);
        }
    }
    if let Some(p) = &spec.plant {
        for m in &p.machines {
            s += &format!("M {} {} {:?} {:?}\n", m.name, m.os_kind, m.nodes.iter().map(|n| &n.0).collect::<Vec<_>>(), m.address);
        }
    }
    s
}

fn check_round_trip(src: &str) {
    let first = parse_architecture(src).unwrap();
    let printed = pretty_print(&first);
    let second = parse_architecture(&printed).unwrap_or_else(|e| panic!("{e}\n---\n{printed}"));
    assert_eq!(pretty_print(&second), printed);
    assert_eq!(shape(&second), shape(&first));
    assert_eq!(second.warnings.len(), first.warnings.len());
}

#[test]
fn corpus_round_trips() {
    for src in CORPUS {
        check_round_trip(src);
    }
}

#[test]
fn excerpt_canonical_form() {
    let spec = parse_architecture(CORPUS[1]).unwrap();
    let printed = pretty_print(&spec);
    assert!(printed.starts_with("basic_rate : duration 50msec\nthermometer_data : topic {\n  FIELDS\n    temp : float32 75\n}"));
    assert!(printed.contains("    thermometer_temp { TOPIC thermometer_data MAXLATENCY 1msec }\n"));
    assert!(printed.contains("  CXX { HEADER \"thermostat.h\" FILENAME \"thermostat.cpp\" CLASS \"Thermostat\" }\n"));
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("keywords", |s| s != "true" && s != "false")
}

fn duration() -> impl Strategy<Value = String> {
    (1u64..5000, prop::sample::select(vec!["usec", "msec", "sec"])).prop_map(|(n, u)| format!("{n}{u}"))
}

/// Opaque nested field content: words, strings and nested class values.
fn opaque_fields() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        ident(),
        "\"[ -~&&[^\"\\\\]]{0,8}\"".prop_map(|s| s),
        (0u32..300).prop_map(|n| n.to_string()),
    ];
    let value = leaf.prop_recursive(2, 8, 3, |inner| {
        (ident(), prop::collection::vec(("[A-Z]{1,5}", inner), 1..3)).prop_map(|(n, fs)| {
            let body: Vec<String> = fs.into_iter().map(|(k, v)| format!("{k} {v}")).collect();
            format!("{n} {{ {} }}", body.join(" "))
        })
    });
    prop::collection::vec(("[A-Z]{1,5}", prop::collection::vec(value, 1..3)), 0..3).prop_map(|fs| {
        fs.into_iter().map(|(k, vs)| format!("{k} {}", vs.join(" "))).collect::<Vec<_>>().join("\n  ")
    })
}

fn module() -> impl Strategy<Value = String> {
    (
        prop::collection::vec((ident(), prop::sample::select(vec!["int8", "uint16", "float32", "bool"])), 1..4),
        prop::collection::vec((duration(), prop::option::of(duration()), 1u64..4, any::<bool>()), 0..4),
        prop::collection::vec(opaque_fields(), 0..2),
    )
        .prop_map(|(topics, nodes, opaque)| {
            let mut s = String::new();
            for (i, (field, fmt)) in topics.iter().enumerate() {
                let default = if *fmt == "bool" { "true" } else { "1" };
                s += &format!("topic{i} : topic {{ FIELDS {field} : {fmt} {default} }}\n");
            }
            for (i, (p, hi, q, wcet)) in nodes.iter().enumerate() {
                let period = match hi {
                    Some(hi) => format!("{p} .. {hi}"),
                    None => p.clone(),
                };
                let t = i % topics.len();
                let w = if *wcet { "WCET 1usec" } else { "" };
                s += &format!(
                    "node{i} : node {{ SUBSCRIBES in{i} {{ TOPIC topic{t} MAXLATENCY {p} QUEUE {q} }} \
                     PUBLISHES out{i} {{ TOPIC topic{t} }} PERIOD {period} {w} PATH \"src\" }}\n"
                );
            }
            for (i, body) in opaque.iter().enumerate() {
                s += &format!("lib{i} : cmake_library {{\n  {body}\n}}\n");
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pretty_print_is_a_fixed_point(src in module()) {
        check_round_trip(&src);
    }
}
