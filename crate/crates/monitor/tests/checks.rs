use proptest::prelude::*;
use qparch_adl::{parse_architecture, ArchitectureSpec, FormatType, NodeSpec, TopicSpec};
use qparch_analysis::{analyze, Channel};
use qparch_monitor::*;
use qparch_sim::{idle_scenario, run, SimConfig, Trace};

fn synthetic(lines: &[&str]) -> Trace {
    let mut text = String::from("#seed\t0\n#grid\t1\n#rng\tchacha8\n#arch-hash\tx\n");
    for l in lines {
        text.push_str(&l.replace(' ', "\t"));
        text.push('\n');
    }
    Trace::parse(&text).unwrap()
}

fn chan() -> Channel {
    Channel::new("p", "s", "t", 1_000, (50_000, 50_000), (50_000, 50_000), 1).unwrap()
}

#[test]
fn read_going_backwards_is_one_violation() {
    let t = synthetic(&["10 READ s t 5 -", "20 READ s t 4 -", "30 READ s t 6 -"]);
    let r = check_no_overtaking(&t, &chan());
    assert_eq!(r.violations.len(), 1);
    assert_eq!((r.violations[0].time, r.violations[0].seq), (20, Some(4)));
}

#[test]
fn empty_trace_is_clean() {
    let t = synthetic(&[]);
    let reports = vec![qparch_analysis::ChannelReport {
        bounds: qparch_analysis::bounds(&chan()),
        channel: chan(),
        loc: Default::default(),
    }];
    let rep = monitor(&t, &reports, &Check::ALL);
    assert!(rep.is_clean());
    assert_eq!(rep.results.len(), 5);
}

#[test]
fn loss_run_is_named() {
    let t = synthetic(&[
        "0 PUBLISH p t 1 0",
        "1 PUBLISH p t 2 0",
        "2 PUBLISH p t 3 0",
        "3 PUBLISH p t 4 0",
        "4 PUBLISH p t 5 0",
        "5 READ s t 1 -",
        "5 READ s t 2 -",
        "6 DROP s t 3 -",
        "7 DROP s t 4 -",
        "8 READ s t 5 -",
    ]);
    let r = check_consecutive_loss(&t, &chan(), 1);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].detail, "run [3,4]");
    assert_eq!(r.violations[0].measured, 2);
    assert!(check_consecutive_loss(&t, &chan(), 2).violations.is_empty());
    let single = synthetic(&["0 PUBLISH p t 1 0", "1 DROP s t 1 -"]);
    assert_eq!(check_consecutive_loss(&single, &chan(), 0).violations.len(), 1);
}

#[test]
fn skipped_seq_counts_as_lost() {
    // Seq 2 was never read but seq 3 was: 2 is gone.
    let t = synthetic(&["0 PUBLISH p t 1 0", "1 PUBLISH p t 2 0", "2 PUBLISH p t 3 0", "3 READ s t 1 -", "5 READ s t 3 -"]);
    let r = check_consecutive_loss(&t, &chan(), 0);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].detail, "run [2,2]");
}

#[test]
fn age_bound_is_strict() {
    let t = synthetic(&["0 PUBLISH p t 1 0", "51000 READ s t 1 -"]);
    let r = check_age(&t, &chan(), 51_000);
    assert_eq!(r.violations.len(), 1);
    let t = synthetic(&["0 PUBLISH p t 1 0", "50999 READ s t 1 -"]);
    let r = check_age(&t, &chan(), 51_000);
    assert!(r.violations.is_empty());
    assert_eq!(r.max_observed, Some(50_999));
}

#[test]
fn processing_latency_deadline() {
    let t = synthetic(&["0 PUBLISH p t 1 0", "100 PUBLISH p t 2 0", "151 READ s t 1 -", "160 READ s t 2 -"]);
    let r = check_processing_latency(&t, &chan(), 150);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].seq, Some(1));
    // Superseded by a later read in time counts as handled.
    let t = synthetic(&["0 PUBLISH p t 1 0", "10 PUBLISH p t 2 0", "50 READ s t 2 -"]);
    assert!(check_processing_latency(&t, &chan(), 60).violations.is_empty());
}

#[test]
fn false_failure_declaration_is_flagged() {
    let ch = Channel::new("p", "s", "t", 1_000, (50_000, 50_000), (10_000, 10_000), 1).unwrap();
    let mut lines: Vec<String> = (0..8).map(|i| format!("{} STEP_START s - - -", i * 10_000)).collect();
    lines.insert(2, "15000 PUBLISH p t 1 0".into());
    lines.push("70000 FAILURE_DECLARED s t - -".into());
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let t = synthetic(&refs);
    // k = 2: window (50000, 69000] has no publish, so no violation...
    assert!(check_detection(&t, &ch, 2).violations.is_empty());
    // ...but with k = 6 the window (10000, 69000] contains the publish at 15000.
    assert_eq!(check_detection(&t, &ch, 6).violations.len(), 1);
}

#[test]
fn halted_publisher_detection_is_valid() {
    let spec = parse_architecture(
        "t : topic { FIELDS v : int32 0 }\n\
         p : node { PERIOD 50msec PUBLISHES o { TOPIC t } }\n\
         s : node { PERIOD 10msec SUBSCRIBES i { TOPIC t MAXLATENCY 1msec } }",
    )
    .unwrap();
    let mut cfg = SimConfig::new(4, 2_000_000);
    cfg.detect_failures = true;
    cfg.halts.insert("p".into(), 500_000);
    let trace = run(&spec, &mut idle_scenario(&spec), &cfg).unwrap();
    assert_eq!(trace.count(qparch_sim::EventKind::FailureDeclared), 1);
    let reports = analyze(&spec).unwrap();
    let rep = monitor(&trace, &reports, &[Check::Detection, Check::NoOvertaking, Check::ConsecutiveLoss]);
    assert!(rep.is_clean(), "{}", rep.to_records());
}

#[test]
fn thermostat_batch_is_clean() {
    let src = std::fs::read_to_string(format!("{}/../scenarios/fixtures/thermostat.radl", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let spec = parse_architecture(&src).unwrap();
    let reports = analyze(&spec).unwrap();
    for seed in 0..5 {
        let mut cfg = SimConfig::new(seed, 10_000_000);
        cfg.detect_failures = true;
        let trace = run(&spec, &mut idle_scenario(&spec), &cfg).unwrap();
        let rep = monitor(&trace, &reports, &Check::ALL);
        assert!(rep.is_clean(), "seed {seed}: {}", rep.to_records());
        let age = rep.result(Check::Age, "thermostat", "thermometer_data").unwrap();
        assert!(age.max_observed.unwrap() < 51_000);
    }
}

#[test]
fn report_is_a_pure_function_of_the_trace() {
    let t = synthetic(&["0 PUBLISH p t 1 0", "51000 READ s t 1 -"]);
    let reports = vec![qparch_analysis::ChannelReport {
        bounds: qparch_analysis::bounds(&chan()),
        channel: chan(),
        loc: Default::default(),
    }];
    let a = monitor(&t, &reports, &Check::ALL).to_records();
    assert_eq!(a, monitor(&t, &reports, &Check::ALL).to_records());
    assert!(a.contains("ERROR\tAGE\t51000:1\tp->s:t measured=51000 bound=51000"));
}

fn jittered_chain() -> impl Strategy<Value = ArchitectureSpec> {
    (proptest::collection::vec((2u64..30, 0u64..15), 2..4), proptest::collection::vec((1u64..4, 0u64..50), 3)).prop_map(
        |(periods, links)| {
            let mut spec = ArchitectureSpec::new("main");
            for i in 0..periods.len() {
                spec.topics.push(TopicSpec::new(&format!("t{i}")).field("v", FormatType::Int32, "0"));
            }
            for (i, &(pmin, jitter)) in periods.iter().enumerate() {
                let mut n = NodeSpec::new(&format!("n{i}"), pmin, pmin + jitter).publishes("o", &format!("t{i}"));
                if i > 0 {
                    let (q, l) = links[i - 1];
                    // Keep L below the publisher's minimum period: no overtaking.
                    n = n.subscribes("i", &format!("t{}", i - 1), l % (periods[i - 1].0 - 1) + 1, q);
                }
                spec.nodes.push(n);
            }
            spec
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn simulation_never_violates_analytic_bounds(spec in jittered_chain(), seed in any::<u64>()) {
        let reports = analyze(&spec).unwrap();
        prop_assert!(reports.iter().all(|r| r.bounds.no_overtaking));
        let mut cfg = SimConfig::new(seed, 5_000);
        cfg.detect_failures = true;
        let trace = run(&spec, &mut idle_scenario(&spec), &cfg).unwrap();
        let rep = monitor(&trace, &reports, &Check::ALL);
        prop_assert!(rep.is_clean(), "{}", rep.to_records());
    }
}
