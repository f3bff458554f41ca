//! Named scenarios for the command line and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qparch_adl::ArchitectureSpec;
use qparch_sim::{Scenario, StepContext, StepFunction, StepOutput, Value};

use crate::afs::{afs_step, AfsInputs, AfsParams, AfsState, Priority};
use crate::script::ExogenousScript;
use crate::thermostat::{Button, ElseBranch, Heater, House, ThermoParams, Thermometer, Thermostat};
use crate::ScenarioError;

pub const SCENARIOS: [&str; 3] = ["thermostat", "regulation", "afs"];

const THERMOSTAT_INPUTS: [&str; 2] = ["set_temp", "status"];
const AFS_INPUTS: [&str; 6] = ["bat_level", "gps_fix", "heartbeat_age", "x", "y", "z"];

/// Step functions for the nodes of `spec` under the named scenario.
pub fn build(name: &str, spec: &ArchitectureSpec, inputs: &ExogenousScript) -> Result<Scenario, ScenarioError> {
    match name {
        "thermostat" => thermostat_scenario(spec, ThermoParams::FIXTURE, ElseBranch::Hold, inputs),
        "regulation" => thermostat_scenario(spec, ThermoParams::REGULATION, ElseBranch::Hold, inputs),
        "afs" => afs_scenario(spec, AfsParams::default(), Priority::Standard, inputs),
        other => Err(ScenarioError::UnknownScenario(other.to_string())),
    }
}

fn check_variables(scenario: &str, inputs: &ExogenousScript, known: &[&str]) -> Result<(), ScenarioError> {
    match inputs.variables().find(|v| !known.contains(v)) {
        Some(v) => Err(ScenarioError::UnknownVariable { scenario: scenario.to_string(), variable: v.to_string() }),
        None => Ok(()),
    }
}

/// Binds whichever of button, thermostat, thermometer, heater and house
/// the spec declares; other nodes stay unbound and the simulator says so.
pub fn thermostat_scenario(
    spec: &ArchitectureSpec,
    params: ThermoParams,
    else_branch: ElseBranch,
    inputs: &ExogenousScript,
) -> Result<Scenario, ScenarioError> {
    params.validate()?;
    check_variables("thermostat", inputs, &THERMOSTAT_INPUTS)?;
    let mut scenario = Scenario::new();
    for node in &spec.nodes {
        let step: Box<dyn StepFunction> = match node.name.as_str() {
            "button" => Box::new(ScriptedButton { button: Button { params }, inputs: inputs.clone() }),
            "thermostat" => Box::new(Thermostat { params, else_branch, switch_on: false }),
            "thermometer" => Box::new(Thermometer { params }),
            "heater" => Box::new(Heater),
            "house" => Box::new(House { params, temp: params.theta0, heating: false }),
            _ => continue,
        };
        scenario.insert(node.name.clone(), step);
    }
    Ok(scenario)
}

struct ScriptedButton {
    button: Button,
    inputs: ExogenousScript,
}

impl StepFunction for ScriptedButton {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        let mut out = self.button.step(ctx);
        if let Some(v) = self.inputs.value_at("set_temp", ctx.now) {
            out.set("button_set", "temp", v.as_f64());
        }
        if let Some(v) = self.inputs.value_at("status", ctx.now) {
            out.set("button_status", "status", v.as_bool());
        }
        out
    }
}

pub fn afs_scenario(spec: &ArchitectureSpec, params: AfsParams, priority: Priority, inputs: &ExogenousScript) -> Result<Scenario, ScenarioError> {
    params.validate()?;
    check_variables("afs", inputs, &AFS_INPUTS)?;
    let mut scenario = Scenario::new();
    for node in &spec.nodes {
        let step: Box<dyn StepFunction> = match node.name.as_str() {
            "afs_gateway" => Box::new(AfsGateway { inputs: inputs.clone() }),
            "afs_function" => Box::new(AfsFunction { params: params.clone(), priority, period: node.period_min, state: AfsState::default() }),
            _ => continue,
        };
        scenario.insert(node.name.clone(), step);
    }
    Ok(scenario)
}

/// Publishes the scripted world; unscripted fields keep their last value.
pub struct AfsGateway {
    pub inputs: ExogenousScript,
}

impl StepFunction for AfsGateway {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        let mut out = StepOutput::default();
        for field in AFS_INPUTS {
            if let Some(v) = self.inputs.value_at(field, ctx.now) {
                let v = if field == "gps_fix" { Value::Bool(v.as_bool()) } else { Value::Float(v.as_f64()) };
                out.set("inputs_out", field, v);
            }
        }
        out
    }
}

/// The state machine as a node. Timers advance by the declared period.
pub struct AfsFunction {
    pub params: AfsParams,
    pub priority: Priority,
    pub period: u64,
    pub state: AfsState,
}

impl StepFunction for AfsFunction {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        let num = |field: &str, fallback: f64| ctx.value("inputs_in", field).map_or(fallback, |v| v.as_f64());
        let nominal = AfsInputs::NOMINAL;
        let inputs = AfsInputs {
            bat_level: num("bat_level", nominal.bat_level),
            gps_fix: ctx.value("inputs_in", "gps_fix").is_none_or(|v| v.as_bool()),
            heartbeat_age: num("heartbeat_age", nominal.heartbeat_age),
            position: (num("x", 0.0), num("y", 0.0), num("z", 0.0)),
        };
        let result = afs_step(self.state, &inputs, self.period, &self.params, self.priority);
        self.state = result.state;
        let mut out = StepOutput::default();
        out.set("commands_out", "state", i64::from(result.state.mode.code()))
            .set("commands_out", "command", i64::from(result.command.code()))
            .observe("bat_level", inputs.bat_level)
            .observe("gps_fix", inputs.gps_fix)
            .observe("heartbeat_age", inputs.heartbeat_age)
            .observe("AFS_State", i64::from(result.state.mode.code()))
            .observe("command", i64::from(result.command.code()));
        out
    }
}

/// A flight of `horizon` µs with the battery falling one percent every
/// 1.5 to 2.5 s from 30, plus random link, gps and altitude episodes. Half
/// of the seeds lose the link around the time the battery reads 19.
pub fn random_afs_inputs(seed: u64, horizon: u64) -> ExogenousScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ms = |rng: &mut ChaCha8Rng, lo: u64, hi: u64| rng.gen_range(lo..=hi) * 1000;
    let mut s = ExogenousScript::new();
    let push = |s: &mut ExogenousScript, t: u64, var: &str, v: Value| {
        s.push(t, var, v).expect("rows are generated in time order per variable");
    };

    let mut t = 0;
    let mut level = 30;
    let mut nineteen_at = None;
    while t < horizon && level >= 5 {
        push(&mut s, t, "bat_level", Value::Int(level));
        if level == 19 {
            nineteen_at = Some(t);
        }
        level -= 1;
        t += ms(&mut rng, 1500, 2500);
    }

    push(&mut s, 0, "heartbeat_age", Value::Float(0.0));
    if let Some(t19) = nineteen_at.filter(|_| rng.gen_bool(0.5)) {
        let start = t19.saturating_sub(ms(&mut rng, 0, 2500));
        let end = start + ms(&mut rng, 3200, 4800);
        push(&mut s, start, "heartbeat_age", Value::Float(3.5));
        push(&mut s, end, "heartbeat_age", Value::Float(0.0));
    }

    push(&mut s, 0, "gps_fix", Value::Bool(true));
    if rng.gen_bool(1.0 / 3.0) {
        let start = ms(&mut rng, 0, horizon / 1000);
        push(&mut s, start, "gps_fix", Value::Bool(false));
        push(&mut s, start + ms(&mut rng, 500, 4000), "gps_fix", Value::Bool(true));
    }

    push(&mut s, 0, "z", Value::Float(10.0));
    if rng.gen_bool(1.0 / 3.0) {
        let start = ms(&mut rng, 0, horizon / 1000);
        push(&mut s, start, "z", Value::Float(150.0));
        push(&mut s, start + ms(&mut rng, 1000, 3000), "z", Value::Float(10.0));
    }
    s
}

/// Battery pinned at one level for the whole flight.
pub fn pinned_battery(level: i64) -> ExogenousScript {
    let mut s = ExogenousScript::new();
    s.push(0, "bat_level", Value::Int(level)).expect("single row");
    s
}
