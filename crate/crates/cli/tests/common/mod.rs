// Shared by the CLI test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    for src in [root.join("../scenarios/fixtures"), root.join("tests/data")] {
        for entry in std::fs::read_dir(src).unwrap() {
            let path = entry.unwrap().path();
            std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn qparch(dir: &Path, args: &[&str]) -> Run {
    qparch_env(dir, args, None)
}

pub fn qparch_env(dir: &Path, args: &[&str], grid: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qparch"));
    cmd.current_dir(dir).args(args).env_remove("QPARCH_GRID");
    if let Some(g) = grid {
        cmd.env("QPARCH_GRID", g);
    }
    let out = cmd.output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compare with the pinned file; `UPDATE_GOLDEN=1` rewrites it instead.
pub fn golden_matches(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).unwrap_or(expected.lines().count().min(actual.lines().count()));
    Err(format!("{name} differs from golden at line {}", line + 1))
}

/// The commands whose outputs are pinned, as (golden name, args, output file).
pub const GOLDEN_RUNS: [(&str, &[&str], &str); 6] = [
    ("check_thermostat.records", &["check", "thermostat.radl", "--format", "records", "--out", "check.out"], "check.out"),
    ("check_thermostat.txt", &["check", "thermostat.radl", "--out", "check.txt"], "check.txt"),
    ("thermostat_seed1.trace", &["simulate", "thermostat.radl", "--scenario", "thermostat", "--seed", "1", "--horizon", "300ms", "--trace", "t.trace"], "t.trace"),
    ("monitor_thermostat_seed1.records", &["monitor", "t.trace", "--arch", "thermostat.radl", "--format", "records", "--out", "monitor.out"], "monitor.out"),
    ("afs_pinned.trace", &["simulate", "afs.radl", "--scenario", "afs", "--seed", "2", "--horizon", "1s", "--script", "pinned_19.csv", "--trace", "afs.trace"], "afs.trace"),
    ("query_battery.records", &["query", "afs.trace", "--query", "battery.query", "--format", "records", "--out", "query.out"], "query.out"),
];

/// Run every golden command in order in `dir`; returns (name, exit code, output bytes).
pub fn golden_outputs(dir: &Path) -> Vec<(&'static str, i32, String)> {
    GOLDEN_RUNS
        .iter()
        .map(|(name, args, out)| {
            let run = qparch(dir, args);
            (*name, run.code, std::fs::read_to_string(dir.join(out)).unwrap_or_default())
        })
        .collect()
}
