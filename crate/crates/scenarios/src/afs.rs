//! Contingency state machine of the fail-safe function and its geofence.
//!
//! Each contingency has a handler that either claims the next state or
//! passes. Handlers run in priority order and the first claim wins; when
//! nobody claims, the vehicle is Normal.

use std::collections::BTreeSet;
use std::fmt;

use crate::ScenarioError;

pub const SECOND: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AfsMode {
    Normal,
    AltBreach,
    RangeBreach,
    PolygonBreach,
    GpsLossHover,
    FlightTerminatedGps,
    MissionAbandoned,
    CommLossLoiter,
    RtlCommUnreliable,
    RtlLowBattery,
    LandNoGpsLowBattery,
    LandCriticalBattery,
}

impl AfsMode {
    pub const ALL: [AfsMode; 12] = [
        AfsMode::Normal,
        AfsMode::AltBreach,
        AfsMode::RangeBreach,
        AfsMode::PolygonBreach,
        AfsMode::GpsLossHover,
        AfsMode::FlightTerminatedGps,
        AfsMode::MissionAbandoned,
        AfsMode::CommLossLoiter,
        AfsMode::RtlCommUnreliable,
        AfsMode::RtlLowBattery,
        AfsMode::LandNoGpsLowBattery,
        AfsMode::LandCriticalBattery,
    ];

    /// Wire code published in `afs_commands.state`; Normal is 0.
    pub fn code(self) -> u8 {
        AfsMode::ALL.iter().position(|m| *m == self).unwrap_or(0) as u8
    }

    pub fn from_code(code: u8) -> Option<AfsMode> {
        AfsMode::ALL.get(usize::from(code)).copied()
    }

    pub fn is_battery(self) -> bool {
        matches!(self, AfsMode::RtlLowBattery | AfsMode::LandNoGpsLowBattery | AfsMode::LandCriticalBattery)
    }

    pub fn is_breach(self) -> bool {
        matches!(self, AfsMode::AltBreach | AfsMode::RangeBreach | AfsMode::PolygonBreach)
    }

    pub fn annunciation(self) -> &'static str {
        match self {
            AfsMode::Normal => "nominal",
            AfsMode::AltBreach => "altitude fence breached",
            AfsMode::RangeBreach => "range fence breached",
            AfsMode::PolygonBreach => "polygon fence breached",
            AfsMode::GpsLossHover => "gps lost, holding position",
            AfsMode::FlightTerminatedGps => "gps not recovered, flight terminated",
            AfsMode::MissionAbandoned => "repeated gps loss, mission abandoned",
            AfsMode::CommLossLoiter => "no heartbeat, loitering",
            AfsMode::RtlCommUnreliable => "link unreliable, going to rally point",
            AfsMode::RtlLowBattery => "battery low, returning to launch",
            AfsMode::LandNoGpsLowBattery => "battery low without gps, landing",
            AfsMode::LandCriticalBattery => "battery critical, landing",
        }
    }
}

impl fmt::Display for AfsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopterCommand {
    Continue,
    Hover,
    Loiter,
    ReturnToLaunch,
    GoToRally,
    RecoverFence,
    Land,
    Terminate,
}

impl CopterCommand {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fence {
    pub home: (f64, f64),
    pub max_altitude: f64,
    pub range: f64,
    pub polygon: Vec<(f64, f64)>,
}

impl Default for Fence {
    /// A 1200 m by 600 m rectangle around home, a 500 m range and a 100 m ceiling,
    /// so each breach kind can occur on its own.
    fn default() -> Self {
        Fence {
            home: (0.0, 0.0),
            max_altitude: 100.0,
            range: 500.0,
            polygon: vec![(-600.0, -300.0), (600.0, -300.0), (600.0, 300.0), (-600.0, 300.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Breach {
    Altitude,
    Polygon,
    Range,
}

/// Breach set ordered by precedence: altitude, polygon, range.
pub type Breaches = BTreeSet<Breach>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("fence polygon needs at least 3 vertices, has {0}")]
pub struct DegeneratePolygon(pub usize);

/// Strict checks: a point on the fence is inside.
pub fn fence_check(position: (f64, f64, f64), fence: &Fence) -> Result<Breaches, DegeneratePolygon> {
    if fence.polygon.len() < 3 {
        return Err(DegeneratePolygon(fence.polygon.len()));
    }
    let (x, y, z) = position;
    let mut out = Breaches::new();
    if z > fence.max_altitude {
        out.insert(Breach::Altitude);
    }
    if distance((x, y, 0.0), (fence.home.0, fence.home.1, 0.0)) > fence.range {
        out.insert(Breach::Range);
    }
    if !inside_polygon((x, y), &fence.polygon) {
        out.insert(Breach::Polygon);
    }
    Ok(out)
}

pub fn distance(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) + (a.2 - b.2).powi(2)).sqrt()
}

/// Even-odd ray casting, with points on an edge counted as inside.
pub fn inside_polygon(p: (f64, f64), polygon: &[(f64, f64)]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.1 > p.1) != (b.1 > p.1) {
            let cross_x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < cross_x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    cross == 0.0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfsParams {
    /// Percent thresholds, 100 > t_rtl > t_land > 0.
    pub t_rtl: f64,
    pub t_land: f64,
    pub fence: Fence,
    pub heartbeat_timeout: u64,
    pub gps_loss_time: u64,
    pub recovery_window: u64,
    pub breach_window: u64,
    pub strike_limit: u32,
    pub gps_loss_limit: u32,
}

impl Default for AfsParams {
    fn default() -> Self {
        AfsParams {
            t_rtl: 20.0,
            t_land: 10.0,
            fence: Fence::default(),
            heartbeat_timeout: 3 * SECOND,
            gps_loss_time: 3 * SECOND,
            recovery_window: 5 * SECOND,
            breach_window: 5 * SECOND,
            strike_limit: 3,
            gps_loss_limit: 3,
        }
    }
}

impl AfsParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(100.0 > self.t_rtl && self.t_rtl > self.t_land && self.t_land > 0.0) {
            return Err(ScenarioError::Params(format!("need 100 > t_rtl {} > t_land {} > 0", self.t_rtl, self.t_land)));
        }
        if self.fence.polygon.len() < 3 {
            return Err(ScenarioError::Params(DegeneratePolygon(self.fence.polygon.len()).to_string()));
        }
        Ok(())
    }
}

/// One sample of the sensed world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfsInputs {
    pub bat_level: f64,
    pub gps_fix: bool,
    /// Seconds since the last heartbeat.
    pub heartbeat_age: f64,
    pub position: (f64, f64, f64),
}

impl AfsInputs {
    pub const NOMINAL: AfsInputs = AfsInputs { bat_level: 100.0, gps_fix: true, heartbeat_age: 0.0, position: (0.0, 0.0, 10.0) };
}

/// Mode plus the clocks and counters the handlers keep. Times in µs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AfsState {
    pub mode: AfsMode,
    pub breach_timer: u64,
    pub gps_timer: u64,
    pub comm_timer: u64,
    /// How long the fix has been missing, whatever the mode.
    pub gps_lost_for: u64,
    pub gps_loss_count: u32,
    pub comm_strike_count: u32,
}

impl Default for AfsState {
    fn default() -> Self {
        AfsState { mode: AfsMode::Normal, breach_timer: 0, gps_timer: 0, comm_timer: 0, gps_lost_for: 0, gps_loss_count: 0, comm_strike_count: 0 }
    }
}

impl AfsState {
    fn enter(mut self, mode: AfsMode) -> AfsState {
        if mode != self.mode {
            self.mode = mode;
            self.breach_timer = 0;
            self.gps_timer = 0;
            self.comm_timer = 0;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AfsOutput {
    pub state: AfsState,
    pub command: CopterCommand,
    pub annunciation: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Priority {
    /// battery > gps > breach > comm
    #[default]
    Standard,
    /// comm > breach > gps > battery; only for showing that the checks bite.
    Inverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contingency {
    Battery,
    Gps,
    Breach,
    Comm,
}

impl Priority {
    pub fn order(self) -> [Contingency; 4] {
        use Contingency::*;
        match self {
            Priority::Standard => [Battery, Gps, Breach, Comm],
            Priority::Inverted => [Comm, Breach, Gps, Battery],
        }
    }
}

/// Advance by `dt` µs (the node period).
pub fn afs_step(state: AfsState, inputs: &AfsInputs, dt: u64, params: &AfsParams, priority: Priority) -> AfsOutput {
    let mut base = state;
    base.gps_lost_for = if inputs.gps_fix { 0 } else { state.gps_lost_for.saturating_add(dt) };
    let next = priority
        .order()
        .into_iter()
        .find_map(|c| match c {
            Contingency::Battery => battery(base, inputs, params),
            Contingency::Gps => gps(base, inputs, dt, params),
            Contingency::Breach => breach(base, inputs, dt, params),
            Contingency::Comm => comm(base, inputs, dt, params),
        })
        .unwrap_or_else(|| base.enter(AfsMode::Normal));
    AfsOutput { state: next, command: command(&next, params), annunciation: next.mode.annunciation() }
}

fn battery(s: AfsState, i: &AfsInputs, p: &AfsParams) -> Option<AfsState> {
    let sensed = if i.bat_level < p.t_land {
        Some(AfsMode::LandCriticalBattery)
    } else if i.bat_level < p.t_rtl {
        Some(if i.gps_fix { AfsMode::RtlLowBattery } else { AfsMode::LandNoGpsLowBattery })
    } else {
        None
    };
    // Battery modes only escalate.
    let held = s.mode.is_battery().then_some(s.mode);
    sensed.max(held).map(|m| s.enter(m))
}

fn gps(s: AfsState, i: &AfsInputs, dt: u64, p: &AfsParams) -> Option<AfsState> {
    match s.mode {
        AfsMode::FlightTerminatedGps | AfsMode::MissionAbandoned => Some(s),
        AfsMode::GpsLossHover if i.gps_fix => {
            Some(s.enter(if s.gps_loss_count >= p.gps_loss_limit { AfsMode::MissionAbandoned } else { AfsMode::Normal }))
        }
        AfsMode::GpsLossHover => {
            let waited = s.gps_timer.saturating_add(dt);
            if waited >= p.recovery_window {
                Some(s.enter(AfsMode::FlightTerminatedGps))
            } else {
                Some(AfsState { gps_timer: waited, ..s })
            }
        }
        _ if s.gps_lost_for >= p.gps_loss_time => {
            Some(AfsState { gps_loss_count: s.gps_loss_count + 1, ..s }.enter(AfsMode::GpsLossHover))
        }
        _ => None,
    }
}

fn breach(s: AfsState, i: &AfsInputs, dt: u64, p: &AfsParams) -> Option<AfsState> {
    // An unusable fence reads as a polygon breach.
    let found = fence_check(i.position, &p.fence).unwrap_or_else(|_| Breaches::from([Breach::Polygon]));
    match found.first() {
        Some(kind) => {
            let mode = match kind {
                Breach::Altitude => AfsMode::AltBreach,
                Breach::Polygon => AfsMode::PolygonBreach,
                Breach::Range => AfsMode::RangeBreach,
            };
            if s.mode == mode {
                Some(AfsState { breach_timer: s.breach_timer.saturating_add(dt), ..s })
            } else {
                Some(s.enter(mode))
            }
        }
        None if s.mode.is_breach() => Some(s.enter(AfsMode::Normal)),
        None => None,
    }
}

fn comm(s: AfsState, i: &AfsInputs, dt: u64, p: &AfsParams) -> Option<AfsState> {
    let silent = i.heartbeat_age * SECOND as f64 > p.heartbeat_timeout as f64;
    match s.mode {
        AfsMode::RtlCommUnreliable => Some(s),
        AfsMode::CommLossLoiter if !silent => Some(s.enter(AfsMode::Normal)),
        AfsMode::CommLossLoiter => {
            let waited = s.comm_timer.saturating_add(dt);
            if waited >= p.recovery_window {
                Some(s.enter(AfsMode::RtlCommUnreliable))
            } else {
                Some(AfsState { comm_timer: waited, ..s })
            }
        }
        _ if silent => {
            let struck = AfsState { comm_strike_count: s.comm_strike_count + 1, ..s };
            let mode = if struck.comm_strike_count >= p.strike_limit { AfsMode::RtlCommUnreliable } else { AfsMode::CommLossLoiter };
            Some(struck.enter(mode))
        }
        _ => None,
    }
}

fn command(s: &AfsState, p: &AfsParams) -> CopterCommand {
    match s.mode {
        AfsMode::Normal => CopterCommand::Continue,
        AfsMode::AltBreach | AfsMode::RangeBreach | AfsMode::PolygonBreach => {
            if s.breach_timer < p.breach_window {
                CopterCommand::RecoverFence
            } else {
                CopterCommand::Land
            }
        }
        AfsMode::GpsLossHover => CopterCommand::Hover,
        AfsMode::FlightTerminatedGps => CopterCommand::Terminate,
        AfsMode::MissionAbandoned | AfsMode::RtlLowBattery => CopterCommand::ReturnToLaunch,
        AfsMode::CommLossLoiter => CopterCommand::Loiter,
        AfsMode::RtlCommUnreliable => CopterCommand::GoToRally,
        AfsMode::LandNoGpsLowBattery | AfsMode::LandCriticalBattery => CopterCommand::Land,
    }
}

/// One cell of the discretized input space: the state the machine is in
/// before the step and the inputs it then sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub bat_level: f64,
    /// Fix missing for the full loss time by the end of the step.
    pub gps_lost: bool,
    pub breaches: &'static [Breach],
    pub heartbeat_stale: bool,
}

impl GridCell {
    /// Pre-state and inputs for a step of `dt` from `mode`.
    pub fn realize(&self, mode: AfsMode, dt: u64, params: &AfsParams) -> (AfsState, AfsInputs) {
        let state = AfsState {
            mode,
            gps_lost_for: if self.gps_lost { params.gps_loss_time.saturating_sub(dt) } else { 0 },
            ..AfsState::default()
        };
        let f = &params.fence;
        let has = |b| self.breaches.contains(&b);
        let z = if has(Breach::Altitude) { f.max_altitude + 50.0 } else { f.max_altitude / 2.0 };
        // Against the default fence: (550, 0) is out of range only, (0, 400)
        // leaves the polygon only, (0, 600) does both.
        let (x, y) = match (has(Breach::Range), has(Breach::Polygon)) {
            (false, false) => f.home,
            (true, false) => (f.home.0 + 550.0, f.home.1),
            (false, true) => (f.home.0, f.home.1 + 400.0),
            (true, true) => (f.home.0, f.home.1 + 600.0),
        };
        let inputs = AfsInputs {
            bat_level: self.bat_level,
            gps_fix: !self.gps_lost,
            heartbeat_age: if self.heartbeat_stale { params.heartbeat_timeout as f64 / SECOND as f64 + 0.5 } else { 0.0 },
            position: (x, y, z),
        };
        (state, inputs)
    }
}

/// bat ∈ {5, 15, 25, 50} × gps ∈ {ok, lost 3 s} × breach ∈ {none, alt,
/// range, poly, alt+range} × heartbeat ∈ {fresh, stale 3 s}.
pub fn grid_cells() -> Vec<GridCell> {
    const BREACHES: [&[Breach]; 5] =
        [&[], &[Breach::Altitude], &[Breach::Range], &[Breach::Polygon], &[Breach::Altitude, Breach::Range]];
    let mut cells = Vec::new();
    for bat_level in [5.0, 15.0, 25.0, 50.0] {
        for gps_lost in [false, true] {
            for breaches in BREACHES {
                for heartbeat_stale in [false, true] {
                    cells.push(GridCell { bat_level, gps_lost, breaches, heartbeat_stale });
                }
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: u64 = 100_000;

    fn step(state: AfsState, inputs: AfsInputs) -> AfsOutput {
        afs_step(state, &inputs, DT, &AfsParams::default(), Priority::Standard)
    }

    #[test]
    fn codes_round_trip() {
        for m in AfsMode::ALL {
            assert_eq!(AfsMode::from_code(m.code()), Some(m));
        }
        assert_eq!(AfsMode::Normal.code(), 0);
        assert_eq!(AfsMode::from_code(12), None);
    }

    #[test]
    fn battery_levels() {
        let low = step(AfsState::default(), AfsInputs { bat_level: 19.0, ..AfsInputs::NOMINAL });
        assert_eq!(low.state.mode, AfsMode::RtlLowBattery);
        assert_eq!(low.command, CopterCommand::ReturnToLaunch);
        let critical = step(AfsState::default(), AfsInputs { bat_level: 9.0, ..AfsInputs::NOMINAL });
        assert_eq!(critical.state.mode, AfsMode::LandCriticalBattery);
        let blind = step(AfsState::default(), AfsInputs { bat_level: 15.0, gps_fix: false, ..AfsInputs::NOMINAL });
        assert_eq!(blind.state.mode, AfsMode::LandNoGpsLowBattery);
        // Thresholds are strict.
        assert_eq!(step(AfsState::default(), AfsInputs { bat_level: 20.0, ..AfsInputs::NOMINAL }).state.mode, AfsMode::Normal);
        assert_eq!(step(AfsState::default(), AfsInputs { bat_level: 10.0, ..AfsInputs::NOMINAL }).state.mode, AfsMode::RtlLowBattery);
        // No way back once low.
        assert_eq!(step(low.state, AfsInputs::NOMINAL).state.mode, AfsMode::RtlLowBattery);
    }

    #[test]
    fn gps_loss_then_recovery_or_termination() {
        let lost = AfsInputs { gps_fix: false, ..AfsInputs::NOMINAL };
        let mut s = AfsState::default();
        for _ in 0..29 {
            s = step(s, lost).state;
            assert_eq!(s.mode, AfsMode::Normal);
        }
        s = step(s, lost).state;
        assert_eq!((s.mode, s.gps_loss_count), (AfsMode::GpsLossHover, 1));
        let hovering = s;
        assert_eq!(step(hovering, AfsInputs::NOMINAL).state.mode, AfsMode::Normal);
        for _ in 0..49 {
            s = step(s, lost).state;
            assert_eq!(s.mode, AfsMode::GpsLossHover);
        }
        assert_eq!(step(s, lost).state.mode, AfsMode::FlightTerminatedGps);
        let third = AfsState { gps_loss_count: 3, ..hovering };
        assert_eq!(step(third, AfsInputs::NOMINAL).state.mode, AfsMode::MissionAbandoned);
    }

    #[test]
    fn breach_window_then_land() {
        let high = AfsInputs { position: (0.0, 0.0, 150.0), ..AfsInputs::NOMINAL };
        let mut out = step(AfsState::default(), high);
        assert_eq!((out.state.mode, out.state.breach_timer, out.command), (AfsMode::AltBreach, 0, CopterCommand::RecoverFence));
        for _ in 0..50 {
            out = step(out.state, high);
        }
        assert_eq!(out.command, CopterCommand::Land);
        assert_eq!(step(out.state, AfsInputs::NOMINAL).state.mode, AfsMode::Normal);
    }

    #[test]
    fn comm_loss_strikes() {
        let silent = AfsInputs { heartbeat_age: 3.5, ..AfsInputs::NOMINAL };
        let mut s = AfsState::default();
        for strike in 1..3 {
            s = step(s, silent).state;
            assert_eq!((s.mode, s.comm_strike_count), (AfsMode::CommLossLoiter, strike));
            s = step(s, AfsInputs::NOMINAL).state;
            assert_eq!(s.mode, AfsMode::Normal);
        }
        assert_eq!(step(s, silent).state.mode, AfsMode::RtlCommUnreliable);
        let mut s = step(AfsState::default(), silent).state;
        for _ in 0..49 {
            s = step(s, silent).state;
        }
        assert_eq!(s.mode, AfsMode::CommLossLoiter);
        assert_eq!(step(s, silent).state.mode, AfsMode::RtlCommUnreliable);
        // Exactly 3 s is not yet silent.
        assert_eq!(step(AfsState::default(), AfsInputs { heartbeat_age: 3.0, ..AfsInputs::NOMINAL }).state.mode, AfsMode::Normal);
    }

    #[test]
    fn fence_cases() {
        let f = Fence::default();
        assert!(fence_check((0.0, 0.0, 0.0), &f).unwrap().is_empty());
        assert!(fence_check((0.0, 0.0, 100.0), &f).unwrap().is_empty());
        assert_eq!(fence_check((0.0, 0.0, 100.5), &f).unwrap(), Breaches::from([Breach::Altitude]));
        assert_eq!(fence_check((550.0, 0.0, 10.0), &f).unwrap(), Breaches::from([Breach::Range]));
        assert_eq!(fence_check((0.0, 400.0, 10.0), &f).unwrap(), Breaches::from([Breach::Polygon]));
        assert_eq!(fence_check((0.0, 300.0, 10.0), &f).unwrap(), Breaches::new());
        assert_eq!(fence_check((0.0, 500.0, 10.0), &f).unwrap(), Breaches::from([Breach::Polygon]));
        assert_eq!(fence_check((0.0, 600.0, 10.0), &f).unwrap(), Breaches::from([Breach::Polygon, Breach::Range]));
        let flat = Fence { polygon: vec![(0.0, 0.0), (1.0, 1.0)], ..f };
        assert_eq!(fence_check((0.0, 0.0, 0.0), &flat), Err(DegeneratePolygon(2)));
    }

    #[test]
    fn inverted_priority_lets_comm_mask_battery() {
        let s = AfsState { mode: AfsMode::CommLossLoiter, comm_strike_count: 1, ..AfsState::default() };
        let inputs = AfsInputs { bat_level: 19.0, ..AfsInputs::NOMINAL };
        let p = AfsParams::default();
        assert_eq!(afs_step(s, &inputs, DT, &p, Priority::Standard).state.mode, AfsMode::RtlLowBattery);
        assert_eq!(afs_step(s, &inputs, DT, &p, Priority::Inverted).state.mode, AfsMode::Normal);
    }
}
