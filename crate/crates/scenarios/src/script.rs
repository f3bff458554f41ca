//! Input scripts: CSV rows `time_us,variable,value`.
//!
//! `gap.<node>` rows feed the simulator's scripted firing gaps and
//! `latency.<topic>.<subscriber>` rows its scripted latencies, both in file
//! order. Every other variable is an exogenous input, piecewise constant
//! from its row's time on.

use std::collections::BTreeMap;

use qparch_sim::{Script, Value};

use crate::ScenarioError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExogenousScript {
    series: BTreeMap<String, Vec<(u64, Value)>>,
}

impl ExogenousScript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rows for one variable must come in non-decreasing time.
    pub fn push(&mut self, time: u64, variable: &str, value: Value) -> Result<(), ScenarioError> {
        let rows = self.series.entry(variable.to_string()).or_default();
        if rows.last().is_some_and(|(t, _)| *t > time) {
            return Err(ScenarioError::Script { line: 0, message: format!("{variable}: time {time} goes backwards") });
        }
        rows.push((time, value));
        Ok(())
    }

    /// Value in force at `time`, if any row has started by then.
    pub fn value_at(&self, variable: &str, time: u64) -> Option<Value> {
        let rows = self.series.get(variable)?;
        let upto = rows.partition_point(|(t, _)| *t <= time);
        upto.checked_sub(1).map(|i| rows[i].1)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(u64, &str, Value)> =
            self.series.iter().flat_map(|(name, rows)| rows.iter().map(move |(t, v)| (*t, name.as_str(), *v))).collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
        let mut out = String::from("time_us,variable,value\n");
        for (t, name, v) in rows {
            out.push_str(&format!("{t},{name},{v}\n"));
        }
        out
    }
}

/// A parsed script file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptFile {
    pub inputs: ExogenousScript,
    pub timing: Script,
}

impl ScriptFile {
    pub fn parse(text: &str) -> Result<ScriptFile, ScenarioError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
        let err = |line: u64, message: String| ScenarioError::Script { line, message };
        let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time_us", "variable", "value"] {
            return Err(err(1, format!("header must be time_us,variable,value, got {}", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut file = ScriptFile::default();
        for record in reader.records() {
            let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let time: u64 = record[0].parse().map_err(|_| err(line, format!("bad time '{}'", &record[0])))?;
            let variable = &record[1];
            let text = &record[2];
            if let Some(node) = variable.strip_prefix("gap.") {
                let gap = text.parse().map_err(|_| err(line, format!("bad gap '{text}'")))?;
                file.timing.gaps.entry(node.to_string()).or_default().push_back(gap);
            } else if let Some(rest) = variable.strip_prefix("latency.") {
                let (topic, sub) = rest.rsplit_once('.').ok_or_else(|| err(line, format!("'{variable}' is not latency.<topic>.<subscriber>")))?;
                let latency = text.parse().map_err(|_| err(line, format!("bad latency '{text}'")))?;
                file.timing.latencies.entry((topic.to_string(), sub.to_string())).or_default().push_back(latency);
            } else {
                if variable.is_empty() {
                    return Err(err(line, "empty variable name".into()));
                }
                let value = Value::parse(text).ok_or_else(|| err(line, format!("bad value '{text}'")))?;
                file.inputs.push(time, variable, value).map_err(|e| match e {
                    ScenarioError::Script { message, .. } => err(line, message),
                    other => other,
                })?;
            }
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let text = "time_us,variable,value\n0,bat_level,30\n# comment\n10000000,bat_level,15\n0,gps_fix,true\n0,gap.afs_gateway,100000\n0,latency.afs_inputs.afs_function,3000\n";
        let f = ScriptFile::parse(text).unwrap();
        assert_eq!(f.inputs.value_at("bat_level", 0), Some(Value::Int(30)));
        assert_eq!(f.inputs.value_at("bat_level", 9_999_999), Some(Value::Int(30)));
        assert_eq!(f.inputs.value_at("bat_level", 10_000_000), Some(Value::Int(15)));
        assert_eq!(f.inputs.value_at("gps_fix", 5), Some(Value::Bool(true)));
        assert_eq!(f.inputs.value_at("x", 5), None);
        assert_eq!(f.timing.gaps["afs_gateway"], [100_000]);
        assert_eq!(f.timing.latencies[&("afs_inputs".to_string(), "afs_function".to_string())], [3000]);
        assert_eq!(ScriptFile::parse(&f.inputs.to_csv()).unwrap().inputs, f.inputs);
    }

    #[test]
    fn rejects() {
        for bad in [
            "time,variable,value\n",
            "time_us,variable,value\nx,bat_level,1\n",
            "time_us,variable,value\n0,bat_level,lots\n",
            "time_us,variable,value\n5,bat_level,1\n4,bat_level,2\n",
            "time_us,variable,value\n0,latency.t,5\n",
            "time_us,variable,value\n0,gap.n,-5\n",
            "time_us,variable,value\n0,a\n",
        ] {
            assert!(ScriptFile::parse(bad).is_err(), "{bad:?}");
        }
        let e = ScriptFile::parse("time_us,variable,value\n0,a,1\n1,a,zz\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }
}
