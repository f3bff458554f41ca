//! Room temperature regulation: controller decision, plant, sensor, and
//! the margin argument tying them to end-to-end latency.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qparch_adl::ArchitectureSpec;
use qparch_analysis::{analyze, processing_latency_bound};
use qparch_sim::{StepContext, StepFunction, StepOutput};

use crate::ScenarioError;

/// Temperatures in degrees, rates in degrees per second, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoParams {
    pub low: f64,
    pub high: f64,
    /// Trigger margin inside the band.
    pub delta: f64,
    /// Sensor error bound.
    pub epsilon: f64,
    /// Fastest rise or fall.
    pub rho_max: f64,
    /// Slowest rise while heating.
    pub rho_min: f64,
    /// Initial room temperature.
    pub theta0: f64,
}

impl ThermoParams {
    /// The regulation example: 18..24 with a 2 degree margin.
    pub const REGULATION: ThermoParams =
        ThermoParams { low: 18.0, high: 24.0, delta: 2.0, epsilon: 0.5, rho_max: 1.0, rho_min: 0.5, theta0: 15.0 };

    /// Same shape in the thermostat fixture's units: set point 75, room at 70.
    pub const FIXTURE: ThermoParams =
        ThermoParams { low: 73.0, high: 79.0, delta: 2.0, epsilon: 0.5, rho_max: 1.0, rho_min: 0.5, theta0: 70.0 };

    /// (high − Δ) − (low + Δ)
    pub fn gamma(&self) -> f64 {
        (self.high - self.delta) - (self.low + self.delta)
    }

    /// Controller set point: switch on below it.
    pub fn set_point(&self) -> f64 {
        self.low + self.delta
    }

    /// Controller tolerance: switch off above set point + tolerance.
    pub fn tolerance(&self) -> f64 {
        self.gamma()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |why: &str| Err(ScenarioError::Params(why.into()));
        if self.low >= self.high {
            return bad("low must be below high");
        }
        if self.delta <= 0.0 {
            return bad("delta must be positive");
        }
        if self.epsilon < 0.0 {
            return bad("epsilon must be non-negative");
        }
        if !(0.0 < self.rho_min && self.rho_min < self.rho_max) {
            return bad("need 0 < rho_min < rho_max");
        }
        Ok(())
    }
}

/// What the controller outputs when neither threshold fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElseBranch {
    /// Keep the previous command.
    #[default]
    Hold,
    /// Echo the switch status.
    Status,
}

/// Off above set + tol; on when enabled and below set; otherwise the
/// else-branch.
pub fn thermostat_step(previous: bool, sensed: f64, set: f64, tol: f64, status: bool, else_branch: ElseBranch) -> bool {
    if sensed > set + tol {
        false
    } else if status && sensed < set {
        true
    } else {
        match else_branch {
            ElseBranch::Hold => previous,
            ElseBranch::Status => status,
        }
    }
}

/// Advance the room temperature over `dt` seconds. Heating rises at a rate
/// drawn from [rho_min, rho_max]; otherwise it falls at a rate in [0, rho_max].
pub fn house_step(temp: f64, heating: bool, dt: f64, params: &ThermoParams, rng: &mut ChaCha8Rng) -> Result<f64, ScenarioError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(ScenarioError::Params(format!("house step needs dt > 0, got {dt}")));
    }
    let rate = if heating { rng.gen_range(params.rho_min..=params.rho_max) } else { -rng.gen_range(0.0..=params.rho_max) };
    Ok(temp + rate * dt)
}

/// True temperature plus noise within ±epsilon.
pub fn thermometer_step(true_temp: f64, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<f64, ScenarioError> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(ScenarioError::Params(format!("sensor error must be non-negative, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(true_temp);
    }
    Ok(true_temp + rng.gen_range(-epsilon..=epsilon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub safe: bool,
    /// Each violated inequality, spelled out with numbers.
    pub violated: Vec<String>,
}

/// Safe iff Δ ≥ ε + ρ·τ (the trigger margin covers sensing error plus drift
/// during the sense-to-actuate delay) and γ > 2ε (hysteresis survives noise).
pub fn regulation_margin(params: &ThermoParams, tau: f64) -> Margin {
    let mut violated = Vec::new();
    if let Err(e) = params.validate() {
        violated.push(e.to_string());
    }
    let need = params.epsilon + params.rho_max * tau;
    if params.delta < need {
        violated.push(format!(
            "delta {} < epsilon {} + rho {} * tau {} = {need}",
            params.delta, params.epsilon, params.rho_max, tau
        ));
    }
    if params.gamma() <= 2.0 * params.epsilon {
        violated.push(format!("gamma {} <= 2 * epsilon {}", params.gamma(), 2.0 * params.epsilon));
    }
    Margin { safe: violated.is_empty(), violated }
}

/// Time after which the room stays in band: the heater is on within τ, the
/// room may drift down by ρ·τ meanwhile, then rises at no less than ρ⁻.
pub fn convergence_time(params: &ThermoParams, tau: f64) -> f64 {
    let climb = params.low - params.theta0 + params.rho_max * tau;
    tau + climb.max(0.0) / params.rho_min
}

/// Lower bound on the time between two controller toggles: (γ − 2ε)/ρ.
pub fn toggle_gap_bound(params: &ThermoParams) -> f64 {
    (params.gamma() - 2.0 * params.epsilon) / params.rho_max
}

/// Worst-case sense-to-actuate latency in µs along a cycle of nodes such as
/// house → thermometer → thermostat → heater → house: the first node's
/// longest period plus the processing bound of every hop.
pub fn chain_latency(spec: &ArchitectureSpec, chain: &[&str]) -> Result<u64, ScenarioError> {
    let reports = analyze(spec).map_err(|e| ScenarioError::Params(e.to_string()))?;
    let first = chain.first().and_then(|n| spec.node(n)).ok_or_else(|| ScenarioError::UnknownNode(chain.first().unwrap_or(&"").to_string()))?;
    let mut total = first.period_max;
    for hop in chain.windows(2) {
        let r = reports
            .iter()
            .find(|r| r.channel.publisher() == hop[0] && r.channel.subscriber() == hop[1])
            .ok_or_else(|| ScenarioError::Params(format!("no channel {} -> {}", hop[0], hop[1])))?;
        total += processing_latency_bound(&r.channel);
    }
    Ok(total)
}

/// The regulation loop of the fixtures.
pub const REGULATION_CHAIN: [&str; 5] = ["house", "thermometer", "thermostat", "heater", "house"];

pub struct Button {
    pub params: ThermoParams,
}

impl StepFunction for Button {
    fn step(&mut self, _: &mut StepContext<'_>) -> StepOutput {
        let mut out = StepOutput::default();
        out.set("button_status", "status", true).set("button_set", "temp", self.params.set_point());
        out
    }
}

pub struct Thermostat {
    pub params: ThermoParams,
    pub else_branch: ElseBranch,
    pub switch_on: bool,
}

impl StepFunction for Thermostat {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        let set = ctx.value("thermostat_set_temp", "temp").map_or(self.params.set_point(), |v| v.as_f64());
        let status = ctx.value("thermostat_switch", "status").is_none_or(|v| v.as_bool());
        let Some(sensed) = ctx.value("thermometer_temp", "temp").map(|v| v.as_f64()) else {
            return StepOutput::fault("thermostat: no temperature input");
        };
        self.switch_on = thermostat_step(self.switch_on, sensed, set, self.params.tolerance(), status, self.else_branch);
        let mut out = StepOutput::default();
        out.set("heater_switch", "switch_on", self.switch_on).observe("sensed", sensed).observe("switch_on", self.switch_on);
        out
    }
}

pub struct Thermometer {
    pub params: ThermoParams,
}

impl StepFunction for Thermometer {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        let truth = ctx.value("room_temp", "temp").map_or(self.params.theta0, |v| v.as_f64());
        match thermometer_step(truth, self.params.epsilon, ctx.rng) {
            Ok(t) => {
                let mut out = StepOutput::default();
                out.set("reading", "temp", t);
                out
            }
            Err(e) => StepOutput::fault(e.to_string()),
        }
    }
}

pub struct Heater;

impl StepFunction for Heater {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        let on = ctx.value("heater_switch", "switch_on").is_some_and(|v| v.as_bool());
        let mut out = StepOutput::default();
        out.set("heater_state", "heating", on);
        out
    }
}

/// Integrates with the heater state it held since its previous firing,
/// then adopts the newest heater state.
pub struct House {
    pub params: ThermoParams,
    pub temp: f64,
    pub heating: bool,
}

impl StepFunction for House {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        if let Some(prev) = ctx.previous_firing {
            let dt = (ctx.now - prev) as f64 / 1e6;
            match house_step(self.temp, self.heating, dt, &self.params, ctx.rng) {
                Ok(t) => self.temp = t,
                Err(e) => return StepOutput::fault(e.to_string()),
            }
        }
        self.heating = ctx.value("heater_state", "heating").is_some_and(|v| v.as_bool());
        let mut out = StepOutput::default();
        out.set("room_temp", "temp", self.temp).observe("temp", self.temp).observe("heating", self.heating);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn controller_table() {
        use ElseBranch::*;
        assert!(!thermostat_step(true, 80.0, 75.0, 2.0, true, Hold));
        assert!(thermostat_step(false, 70.0, 75.0, 2.0, true, Hold));
        assert!(thermostat_step(true, 75.5, 75.0, 2.0, true, Hold));
        assert!(!thermostat_step(false, 75.5, 75.0, 2.0, true, Hold));
        assert!(thermostat_step(false, 75.5, 75.0, 2.0, true, Status));
        assert!(!thermostat_step(true, 70.0, 75.0, 2.0, false, Status));
    }

    #[test]
    fn house_rates() {
        let p = ThermoParams::REGULATION;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let up = house_step(20.0, true, 0.1, &p, &mut rng).unwrap() - 20.0;
            assert!((0.05 - 1e-12..=0.1 + 1e-12).contains(&up));
            let down = house_step(20.0, false, 0.1, &p, &mut rng).unwrap() - 20.0;
            assert!((-0.1 - 1e-12..=0.0).contains(&down));
        }
        assert!(house_step(20.0, true, 0.0, &p, &mut rng).is_err());
    }

    #[test]
    fn sensor_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(thermometer_step(21.0, 0.0, &mut rng).unwrap(), 21.0);
        assert!((0..10_000).all(|_| (thermometer_step(21.0, 0.5, &mut rng).unwrap() - 21.0).abs() <= 0.5));
        assert!(thermometer_step(21.0, -0.1, &mut rng).is_err());
    }

    #[test]
    fn margins() {
        let p = ThermoParams::REGULATION;
        assert!(regulation_margin(&p, 0.7).safe);
        let tight = ThermoParams { delta: 0.5, ..p };
        assert!(!regulation_margin(&tight, 0.1).safe);
        // γ = 2ε exactly: high − low − 2Δ = 1.
        let flat = ThermoParams { high: 23.0, ..p };
        assert_eq!(flat.gamma(), 1.0);
        let m = regulation_margin(&flat, 0.7);
        assert!(!m.safe && m.violated[0].contains("gamma"));
        assert!((convergence_time(&p, 0.7) - 8.1).abs() < 1e-9);
        assert!((toggle_gap_bound(&p) - 1.0).abs() < 1e-12);
    }
}
