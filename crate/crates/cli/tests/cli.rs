mod common;

use common::*;
use qparch::manifest::{manifest_path, sha256_hex, RunManifest};
use qparch_sim::{EventKind, Trace};

#[test]
fn check_exit_codes() {
    let dir = workspace();
    let ok = qparch(dir.path(), &["check", "thermostat.radl"]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.stdout.lines().filter(|l| l.contains("M=2 loss<=1 age<51000us")).count(), 6);
    let dup = qparch(dir.path(), &["check", "duplicate_publisher.radl", "--format", "records"]);
    assert_eq!(dup.code, 1);
    assert!(dup.stdout.starts_with("ERROR\tUNIQUE_PUBLISHER"), "{}", dup.stdout);
    assert_eq!(qparch(dir.path(), &["check", "missing.radl"]).code, 2);
    std::fs::write(dir.path().join("broken.radl"), "t : topic { FIELDS").unwrap();
    assert_eq!(qparch(dir.path(), &["check", "broken.radl"]).code, 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = workspace();
    assert_eq!(qparch(dir.path(), &[]).code, 2);
    assert_eq!(qparch(dir.path(), &["frobnicate"]).code, 2);
    assert_eq!(qparch(dir.path(), &["simulate", "thermostat.radl", "--scenario", "thermostat", "--horizon", "1s"]).code, 2);
    assert_eq!(qparch(dir.path(), &["--help"]).code, 0);
}

#[test]
fn simulate_writes_trace_and_manifest() {
    let dir = workspace();
    let run = qparch(dir.path(), &["simulate", "thermostat.radl", "--scenario", "thermostat", "--seed", "1", "--horizon", "60s", "--trace", "t.trace"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let bytes = std::fs::read(dir.path().join("t.trace")).unwrap();
    let trace = Trace::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
    assert_eq!(trace.header.seed, 1);
    assert_eq!(trace.firings("thermostat").len(), 1200);

    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(manifest_path(&dir.path().join("t.trace"))).unwrap()).unwrap();
    assert_eq!(manifest.seed, Some(1));
    assert_eq!(manifest.output.sha256, sha256_hex(&bytes));
    assert_eq!(manifest.inputs.len(), 1);
    assert_eq!(manifest.inputs[0].sha256, sha256_hex(&std::fs::read(dir.path().join("thermostat.radl")).unwrap()));
    // Only the declared outputs appear.
    let mut names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.retain(|n| n.starts_with("t.trace") || n.starts_with('.'));
    names.sort();
    assert_eq!(names, ["t.trace", "t.trace.manifest.json"]);
}

#[test]
fn simulate_failures() {
    let dir = workspace();
    let unknown = qparch(dir.path(), &["simulate", "thermostat.radl", "--scenario", "boiler", "--horizon", "1s", "--trace", "x.trace"]);
    assert_eq!(unknown.code, 2);
    assert!(unknown.stderr.contains("unknown scenario"));
    assert!(!dir.path().join("x.trace").exists());

    let fault = qparch(dir.path(), &["simulate", "afs.radl", "--scenario", "afs", "--horizon", "3s", "--script", "overflow.csv", "--trace", "f.trace"]);
    assert_eq!(fault.code, 1, "{}", fault.stderr);
    let trace = Trace::parse(&std::fs::read_to_string(dir.path().join("f.trace")).unwrap()).unwrap();
    let event = trace.fault().unwrap();
    assert_eq!(event.kind, EventKind::Fault);
    assert!(event.time >= 1_000_000);

    std::fs::write(dir.path().join("bad.csv"), "time_us,variable,value\n0,bat_level,plenty\n").unwrap();
    let bad = qparch(dir.path(), &["simulate", "afs.radl", "--scenario", "afs", "--horizon", "1s", "--script", "bad.csv", "--trace", "b.trace"]);
    assert_eq!(bad.code, 2);
    assert!(bad.stderr.contains("line 2"), "{}", bad.stderr);
}

#[test]
fn grid_from_environment_and_flag() {
    let dir = workspace();
    let args = ["simulate", "thermostat.radl", "--scenario", "thermostat", "--horizon", "1s", "--trace", "g.trace"];
    assert_eq!(qparch_env(dir.path(), &args, Some("1ms")).code, 0);
    let trace = Trace::parse(&std::fs::read_to_string(dir.path().join("g.trace")).unwrap()).unwrap();
    assert_eq!(trace.header.grid, 1000);
    assert!(trace.events.iter().all(|e| e.time % 1000 == 0));
    let mut with_flag = args.to_vec();
    with_flag.extend(["--grid", "100us"]);
    assert_eq!(qparch_env(dir.path(), &with_flag, Some("1ms")).code, 0);
    let trace = Trace::parse(&std::fs::read_to_string(dir.path().join("g.trace")).unwrap()).unwrap();
    assert_eq!(trace.header.grid, 100);
    assert_eq!(qparch_env(dir.path(), &args, Some("often")).code, 2);
}

#[test]
fn monitor_exit_codes() {
    let dir = workspace();
    let sim = ["simulate", "thermostat.radl", "--scenario", "thermostat", "--seed", "3", "--horizon", "5s", "--trace", "t.trace"];
    assert_eq!(qparch(dir.path(), &sim).code, 0);
    let clean = qparch(dir.path(), &["monitor", "t.trace", "--arch", "thermostat.radl"]);
    assert_eq!(clean.code, 0, "{}{}", clean.stdout, clean.stderr);
    assert!(clean.stdout.ends_with("clean\n"));

    // Swap the sequence numbers of two successive reads on one channel.
    let mut trace = Trace::parse(&std::fs::read_to_string(dir.path().join("t.trace")).unwrap()).unwrap();
    let reads: Vec<usize> = (0..trace.events.len())
        .filter(|&i| {
            let e = &trace.events[i];
            e.kind == EventKind::Read && &*e.node == "thermostat" && e.topic() == Some("thermometer_data")
        })
        .collect();
    let (a, b) = (reads[3], reads[4]);
    let (sa, sb) = (trace.events[a].seq, trace.events[b].seq);
    trace.events[a].seq = sb;
    trace.events[b].seq = sa;
    std::fs::write(dir.path().join("doctored.trace"), trace.to_text()).unwrap();
    let caught = qparch(dir.path(), &["monitor", "doctored.trace", "--arch", "thermostat.radl", "--checks", "no_overtaking", "--format", "records"]);
    assert_eq!(caught.code, 1);
    assert!(caught.stdout.lines().any(|l| l.starts_with("ERROR\tNO_OVERTAKING")), "{}", caught.stdout);

    let mismatch = qparch(dir.path(), &["monitor", "t.trace", "--arch", "regulation.radl"]);
    assert_eq!(mismatch.code, 2);
    assert!(mismatch.stderr.contains("hashes to"));
    assert_eq!(qparch(dir.path(), &["monitor", "t.trace", "--arch", "thermostat.radl", "--checks", "speed"]).code, 2);
    std::fs::write(dir.path().join("junk.trace"), "not a trace\n").unwrap();
    assert_eq!(qparch(dir.path(), &["monitor", "junk.trace", "--arch", "thermostat.radl"]).code, 2);
}

#[test]
fn query_exit_codes() {
    let dir = workspace();
    let sim = ["simulate", "afs.radl", "--scenario", "afs", "--seed", "5", "--horizon", "10s", "--script", "pinned_19.csv", "--trace", "afs.trace"];
    assert_eq!(qparch(dir.path(), &sim).code, 0);
    let holds = qparch(dir.path(), &["query", "afs.trace", "--query", "battery.query"]);
    assert_eq!(holds.code, 0, "{}{}", holds.stdout, holds.stderr);
    assert!(holds.stdout.contains("(query afs_function (=> (= prev_bat_level 19) (not (= AFS_State 0))))"));
    assert!(holds.stdout.contains("holds on"));

    let fails = qparch(dir.path(), &["query", "afs.trace", "--query", "battery_negated.query", "--format", "records"]);
    assert_eq!(fails.code, 1);
    let first = fails.stdout.lines().next().unwrap();
    assert!(first.starts_with("ERROR\tQUERY\t") && first.contains("prev_bat_level=19.0"), "{first}");
    assert!(first.contains("AFS_State=9"), "{first}");

    let malformed = qparch(dir.path(), &["query", "afs.trace", "--query", "malformed.query"]);
    assert_eq!(malformed.code, 2);
    let unknown = qparch(dir.path(), &["query", "afs.trace", "--query", "worked_example.query"]);
    assert_eq!(unknown.code, 2, "system 'sys' is not a node of the trace");
}

#[test]
fn unfold_prints_both_forms() {
    let dir = workspace();
    let run = qparch(dir.path(), &["unfold", "--query", "worked_example.query"]);
    assert_eq!(run.code, 0);
    let lines: Vec<&str> = run.stdout.lines().filter(|l| !l.starts_with(';')).collect();
    assert_eq!(
        lines,
        [
            "(query sys (=> p (and q next_q next2_q)))",
            "(query sys (=> prev2_p (and prev2_q prev_q q)))",
            "(query sys (=> p (or q next_q next2_q)))",
            "(query sys (=> prev2_p (or prev2_q prev_q q)))",
        ]
    );
}

#[test]
fn golden_files() {
    let dir = workspace();
    let mut problems = Vec::new();
    for (name, code, output) in golden_outputs(dir.path()) {
        assert_eq!(code, 0, "{name}");
        if let Err(e) = golden_matches(name, &output) {
            problems.push(e);
        }
    }
    assert!(problems.is_empty(), "{problems:?}");
}

#[test]
fn reruns_are_byte_identical() {
    let first = workspace();
    let second = workspace();
    let a = golden_outputs(first.path());
    let b = golden_outputs(second.path());
    assert_eq!(a, b);
}
