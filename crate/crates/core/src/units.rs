//! Single-unit technical model: operating limits, quadratic generation
//! cost, startup-cost schedule and the feasibility rules that every
//! dispatch schedule must satisfy.
//!
//! Feasibility of a schedule is data, not an error: [`check_feasibility`]
//! returns a [`ViolationReport`] listing every broken constraint instance,
//! and an empty report means the schedule is implementable.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Commitment status of the unit just before the planning horizon starts.
///
/// Minimum up/down times and startup costs reach back before hour 1; the
/// initial state pins down those pre-horizon hours: the unit has been in
/// the current state for `hours_in_state` hours (at least 1, counting the
/// reference hour 0) and in the opposite state before that.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    /// Whether the unit is on in the reference hour 0.
    pub on: bool,
    /// Hours already spent in the current state, including hour 0.
    pub hours_in_state: u32,
    /// Output in hour 0 (MW); must be 0 when off.
    pub power: f64,
}

impl InitialState {
    pub fn off(hours: u32) -> Self {
        InitialState {
            on: false,
            hours_in_state: hours,
            power: 0.0,
        }
    }

    pub fn on(hours: u32, power: f64) -> Self {
        InitialState {
            on: true,
            hours_in_state: hours,
            power,
        }
    }

    /// Commitment status at a non-positive hour index.
    ///
    /// Hours `1 - hours_in_state ..= 0` carry the current state; anything
    /// earlier carries the opposite one, so off-duration and dwell counts
    /// saturate at `hours_in_state`.
    pub fn status_at(&self, hour: i64) -> bool {
        debug_assert!(hour <= 0);
        if hour >= 1 - i64::from(self.hours_in_state) {
            self.on
        } else {
            !self.on
        }
    }

    /// Pre-horizon hour in which the unit started up, if it is currently on.
    pub fn startup_hour(&self) -> Option<i64> {
        self.on.then(|| 1 - i64::from(self.hours_in_state))
    }

    /// Pre-horizon hour in which the unit shut down, if it is currently off.
    pub fn shutdown_hour(&self) -> Option<i64> {
        (!self.on).then(|| 1 - i64::from(self.hours_in_state))
    }
}

/// Technical and cost parameters of one generation unit.
///
/// Power quantities are MW, ramp limits MW per hour, costs EUR. The
/// generation cost in an on-hour is `cost_a * p^2 + cost_b * p + cost_fixed`
/// plus any startup charge incurred in that hour.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub ramp_startup: f64,
    pub ramp_shutdown: f64,
    pub min_up: u32,
    pub min_down: u32,
    /// Quadratic cost coefficient (EUR per MW^2 h); must be >= 0 so the
    /// dispatch subproblem stays concave.
    pub cost_a: f64,
    /// Linear cost coefficient (EUR per MWh).
    pub cost_b: f64,
    /// Fixed cost per on-hour (EUR).
    pub cost_fixed: f64,
    /// Startup cost after tau consecutive off-hours; entry `tau - 1`
    /// applies, saturating at the last entry. Empty means free startups.
    pub suc_schedule: Vec<f64>,
    pub initial_state: InitialState,
}

/// Non-fatal observations raised by [`UnitSpec::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitWarning {
    /// `ramp_startup < p_min`: no startup can reach the minimum stable
    /// output, so the unit can never be turned on.
    StartupRampBelowMinimum,
}

impl fmt::Display for UnitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitWarning::StartupRampBelowMinimum => write!(
                f,
                "ramp_startup is below p_min: the unit cannot reach its minimum stable output in a startup hour"
            ),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UnitSpecError {
    #[error("power bounds must satisfy 0 <= p_min <= p_max (got {p_min} .. {p_max})")]
    BadPowerBounds { p_min: f64, p_max: f64 },
    #[error("{name} must be positive (got {value})")]
    NonPositiveRamp { name: &'static str, value: f64 },
    #[error("{name} must be at least 1")]
    ZeroMinTime { name: &'static str },
    #[error("cost_a must be non-negative (got {0})")]
    NegativeQuadraticCost(f64),
    #[error("suc_schedule must be non-negative and non-decreasing (entry {index})")]
    BadStartupSchedule { index: usize },
    #[error("initial_state.hours_in_state must be at least 1")]
    ZeroInitialDwell,
    #[error("initial power {power} outside [{p_min}, {p_max}] for an initially-on unit")]
    BadInitialPowerOn { power: f64, p_min: f64, p_max: f64 },
    #[error("initial power must be 0 for an initially-off unit (got {0})")]
    BadInitialPowerOff(f64),
}

impl UnitSpec {
    /// Checks every structural invariant; returns the non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<UnitWarning>, UnitSpecError> {
        if !(0.0 <= self.p_min && self.p_min <= self.p_max) {
            return Err(UnitSpecError::BadPowerBounds {
                p_min: self.p_min,
                p_max: self.p_max,
            });
        }
        for (name, value) in [
            ("ramp_up", self.ramp_up),
            ("ramp_down", self.ramp_down),
            ("ramp_startup", self.ramp_startup),
            ("ramp_shutdown", self.ramp_shutdown),
        ] {
            if !(value > 0.0) {
                return Err(UnitSpecError::NonPositiveRamp { name, value });
            }
        }
        if self.min_up < 1 {
            return Err(UnitSpecError::ZeroMinTime { name: "min_up" });
        }
        if self.min_down < 1 {
            return Err(UnitSpecError::ZeroMinTime { name: "min_down" });
        }
        if !(self.cost_a >= 0.0) {
            return Err(UnitSpecError::NegativeQuadraticCost(self.cost_a));
        }
        let mut prev = 0.0;
        for (index, &c) in self.suc_schedule.iter().enumerate() {
            if !(c >= 0.0) || c < prev {
                return Err(UnitSpecError::BadStartupSchedule { index });
            }
            prev = c;
        }
        if self.initial_state.hours_in_state < 1 {
            return Err(UnitSpecError::ZeroInitialDwell);
        }
        if self.initial_state.on {
            let p0 = self.initial_state.power;
            if !(self.p_min <= p0 && p0 <= self.p_max) {
                return Err(UnitSpecError::BadInitialPowerOn {
                    power: p0,
                    p_min: self.p_min,
                    p_max: self.p_max,
                });
            }
        } else if self.initial_state.power != 0.0 {
            return Err(UnitSpecError::BadInitialPowerOff(self.initial_state.power));
        }

        let mut warnings = Vec::new();
        if self.ramp_startup < self.p_min {
            warnings.push(UnitWarning::StartupRampBelowMinimum);
        }
        Ok(warnings)
    }

    /// Startup cost charged when the unit turns on after `off_hours`
    /// consecutive off-hours (saturating at the end of the schedule).
    pub fn startup_cost_after(&self, off_hours: usize) -> f64 {
        if self.suc_schedule.is_empty() || off_hours == 0 {
            0.0
        } else {
            let idx = off_hours.min(self.suc_schedule.len()) - 1;
            self.suc_schedule[idx]
        }
    }
}

/// Hourly dispatch and commitment over a planning horizon.
///
/// `status[t]` is the on/off state, `startup[t]`/`shutdown[t]` the
/// turn-on/turn-off indicators and `suc[t]` the startup charge booked in
/// hour `t`. A `Schedule` is plain data and may be inconsistent or
/// infeasible; [`check_feasibility`] is the judge.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub power: Vec<f64>,
    pub status: Vec<bool>,
    pub startup: Vec<bool>,
    pub shutdown: Vec<bool>,
    pub suc: Vec<f64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("schedule vectors have mismatched horizon lengths")]
pub struct HorizonMismatch;

impl Schedule {
    pub fn new(
        power: Vec<f64>,
        status: Vec<bool>,
        startup: Vec<bool>,
        shutdown: Vec<bool>,
        suc: Vec<f64>,
    ) -> Result<Self, HorizonMismatch> {
        let t = power.len();
        if [status.len(), startup.len(), shutdown.len(), suc.len()] != [t, t, t, t] {
            return Err(HorizonMismatch);
        }
        Ok(Schedule {
            power,
            status,
            startup,
            shutdown,
            suc,
        })
    }

    /// Builds a logically consistent schedule from a commitment sequence
    /// and power profile, deriving startups, shutdowns and startup costs
    /// from the unit's initial state.
    pub fn from_commitment(
        unit: &UnitSpec,
        status: &[bool],
        power: Vec<f64>,
    ) -> Result<Self, HorizonMismatch> {
        if status.len() != power.len() {
            return Err(HorizonMismatch);
        }
        let init = &unit.initial_state;
        let mut startup = Vec::with_capacity(status.len());
        let mut shutdown = Vec::with_capacity(status.len());
        let mut suc = Vec::with_capacity(status.len());
        // Consecutive off-hours before the current hour; saturates via the
        // initial dwell when the off period extends beyond the horizon.
        let mut off_run: usize = if init.on {
            0
        } else {
            init.hours_in_state as usize
        };
        let mut prev_on = init.on;
        for &on in status {
            let turn_on = on && !prev_on;
            let turn_off = !on && prev_on;
            startup.push(turn_on);
            shutdown.push(turn_off);
            suc.push(if turn_on {
                unit.startup_cost_after(off_run)
            } else {
                0.0
            });
            off_run = if on { 0 } else { off_run + 1 };
            prev_on = on;
        }
        Ok(Schedule {
            power,
            status: status.to_vec(),
            startup,
            shutdown,
            suc,
        })
    }

    /// All-off schedule over `horizon` hours.
    pub fn all_off(horizon: usize) -> Self {
        Schedule {
            power: vec![0.0; horizon],
            status: vec![false; horizon],
            startup: vec![false; horizon],
            shutdown: vec![false; horizon],
            suc: vec![0.0; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.power.len()
    }
}

/// Total generation cost of a schedule and its per-hour breakdown (EUR).
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub per_hour: Vec<f64>,
    pub total: f64,
}

/// Generation cost of a schedule: `a p^2 + b p + c_fixed u + suc` per hour.
pub fn generation_cost(unit: &UnitSpec, schedule: &Schedule) -> Result<CostBreakdown, HorizonMismatch> {
    let t = schedule.horizon();
    if [
        schedule.status.len(),
        schedule.startup.len(),
        schedule.shutdown.len(),
        schedule.suc.len(),
    ] != [t, t, t, t]
    {
        return Err(HorizonMismatch);
    }
    let mut per_hour = Vec::with_capacity(t);
    let mut total = 0.0;
    for i in 0..t {
        let p = schedule.power[i];
        let on = if schedule.status[i] { 1.0 } else { 0.0 };
        let c = unit.cost_a * p * p + unit.cost_b * p + unit.cost_fixed * on + schedule.suc[i];
        per_hour.push(c);
        total += c;
    }
    Ok(CostBreakdown { per_hour, total })
}

/// Revenue of a schedule at the given hourly prices (EUR).
pub fn revenue(prices: &[f64], schedule: &Schedule) -> Result<f64, HorizonMismatch> {
    if prices.len() != schedule.horizon() {
        return Err(HorizonMismatch);
    }
    Ok(prices
        .iter()
        .zip(&schedule.power)
        .map(|(l, p)| l * p)
        .sum())
}

/// Profit of a schedule: revenue minus generation cost (EUR).
pub fn profit(unit: &UnitSpec, prices: &[f64], schedule: &Schedule) -> Result<f64, HorizonMismatch> {
    Ok(revenue(prices, schedule)? - generation_cost(unit, schedule)?.total)
}

/// Constraint families of the unit model, one per inequality family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintFamily {
    StartupCost,
    PowerBounds,
    RampUp,
    RampDown,
    MinUp,
    MinDown,
    Logical,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintFamily::StartupCost => "startup-cost",
            ConstraintFamily::PowerBounds => "power-bounds",
            ConstraintFamily::RampUp => "ramp-up",
            ConstraintFamily::RampDown => "ramp-down",
            ConstraintFamily::MinUp => "min-up",
            ConstraintFamily::MinDown => "min-down",
            ConstraintFamily::Logical => "logical",
        };
        f.write_str(s)
    }
}

/// One violated constraint instance: `lhs` and `rhs` are the two sides of
/// the inequality as evaluated, `slack` the amount by which it is broken.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub hour: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at hour {}: {} vs {} (by {:.3e})",
            self.family, self.hour, self.lhs, self.rhs, self.slack
        )
    }
}

/// Result of a feasibility check: empty iff the schedule satisfies every
/// constraint of the unit model within tolerance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn families(&self) -> Vec<ConstraintFamily> {
        let mut fams: Vec<_> = self.violations.iter().map(|v| v.family).collect();
        fams.dedup();
        fams
    }
}

/// Default absolute feasibility tolerance on MW and EUR quantities.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-6;

/// Checks a schedule against every constraint family of the unit model.
///
/// Reported hours are 1-based. Pre-horizon commitment values needed by the
/// ramp, minimum up/down and startup-cost constraints come from the unit's
/// initial state.
pub fn check_feasibility(unit: &UnitSpec, schedule: &Schedule, tol: f64) -> ViolationReport {
    let horizon = schedule.horizon();
    let init = &unit.initial_state;
    let mut report = ViolationReport::default();
    let mut push = |family, hour, lhs: f64, rhs: f64, slack: f64| {
        report.violations.push(Violation {
            family,
            hour,
            lhs,
            rhs,
            slack,
        });
    };

    let u = |t: i64| -> f64 {
        if t >= 1 {
            if schedule.status[(t - 1) as usize] {
                1.0
            } else {
                0.0
            }
        } else if init.status_at(t) {
            1.0
        } else {
            0.0
        }
    };

    for i in 0..horizon {
        let t = i + 1;
        let ti = t as i64;
        let p = schedule.power[i];
        let on = u(ti);
        let v = if schedule.startup[i] { 1.0 } else { 0.0 };
        let w = if schedule.shutdown[i] { 1.0 } else { 0.0 };
        let p_prev = if i == 0 {
            init.power
        } else {
            schedule.power[i - 1]
        };

        // w_t = v_t + u_{t-1} - u_t
        let logical_rhs = v + u(ti - 1) - on;
        if (w - logical_rhs).abs() > tol {
            push(
                ConstraintFamily::Logical,
                t,
                w,
                logical_rhs,
                (w - logical_rhs).abs(),
            );
        }

        // P^min u <= p <= P^max u
        let lo = unit.p_min * on;
        let hi = unit.p_max * on;
        if p < lo - tol {
            push(ConstraintFamily::PowerBounds, t, p, lo, lo - p);
        }
        if p > hi + tol {
            push(ConstraintFamily::PowerBounds, t, p, hi, p - hi);
        }

        // suc_t >= c_tau (u_t - sum_{k=1..tau} u_{t-k}), and suc_t >= 0
        let suc = schedule.suc[i];
        if suc < -tol {
            push(ConstraintFamily::StartupCost, t, suc, 0.0, -suc);
        }
        for (tau_idx, &c_tau) in unit.suc_schedule.iter().enumerate() {
            let tau = tau_idx + 1;
            let window: f64 = (1..=tau as i64).map(|k| u(ti - k)).sum();
            let required = c_tau * (on - window);
            if suc < required - tol {
                push(ConstraintFamily::StartupCost, t, suc, required, required - suc);
            }
        }

        // p_t <= p_{t-1} + R_up u_t + (R_su - R_up) v_t
        let ramp_up_cap = p_prev + unit.ramp_up * on + (unit.ramp_startup - unit.ramp_up) * v;
        if p > ramp_up_cap + tol {
            push(ConstraintFamily::RampUp, t, p, ramp_up_cap, p - ramp_up_cap);
        }

        // p_t >= p_{t-1} - R_down u_{t-1} + (R_down - R_sd) w_t
        let ramp_down_floor =
            p_prev - unit.ramp_down * u(ti - 1) + (unit.ramp_down - unit.ramp_shutdown) * w;
        if p < ramp_down_floor - tol {
            push(
                ConstraintFamily::RampDown,
                t,
                p,
                ramp_down_floor,
                ramp_down_floor - p,
            );
        }

        // sum of startups in the last U hours <= u_t
        let mut v_window = 0.0;
        for tau in (ti - i64::from(unit.min_up) + 1)..=ti {
            if tau >= 1 {
                if schedule.startup[(tau - 1) as usize] {
                    v_window += 1.0;
                }
            } else if init.startup_hour() == Some(tau) {
                v_window += 1.0;
            }
        }
        if v_window > on + tol {
            push(ConstraintFamily::MinUp, t, v_window, on, v_window - on);
        }

        // sum of shutdowns in the last D hours <= 1 - u_t
        let mut w_window = 0.0;
        for tau in (ti - i64::from(unit.min_down) + 1)..=ti {
            if tau >= 1 {
                if schedule.shutdown[(tau - 1) as usize] {
                    w_window += 1.0;
                }
            } else if init.shutdown_hour() == Some(tau) {
                w_window += 1.0;
            }
        }
        if w_window > 1.0 - on + tol {
            push(
                ConstraintFamily::MinDown,
                t,
                w_window,
                1.0 - on,
                w_window - (1.0 - on),
            );
        }
    }
    report
}

/// Solves the 3x3 Vandermonde system through three (power, cost) points,
/// returning the quadratic coefficients (a, b, c).
fn fit_quadratic_through(points: [(f64, f64); 3]) -> (f64, f64, f64) {
    let mut m = [[0.0f64; 4]; 3];
    for (row, (p, c)) in m.iter_mut().zip(points) {
        *row = [p * p, p, 1.0, c];
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][3] - s) / m[row][row];
    }
    (x[0], x[1], x[2])
}

/// The 440 MW reference unit used by the offering-curve demo.
///
/// Quadratic cost coefficients are fitted through the three known cost
/// points (160 MW, 8768 EUR), (215 MW, 11752 EUR), (270 MW, 14917 EUR).
/// Ramp-down, shutdown ramp and minimum up/down times are not exercised by
/// the demo and are set non-binding.
pub fn demo_unit() -> UnitSpec {
    let (a, b, c) = fit_quadratic_through([(160.0, 8768.0), (215.0, 11752.0), (270.0, 14917.0)]);
    UnitSpec {
        p_min: 160.0,
        p_max: 440.0,
        ramp_up: 55.0,
        ramp_down: 440.0,
        ramp_startup: 160.0,
        ramp_shutdown: 440.0,
        min_up: 1,
        min_down: 1,
        cost_a: a,
        cost_b: b,
        cost_fixed: c,
        suc_schedule: vec![0.0],
        initial_state: InitialState::off(1),
    }
}

/// A unit specification as read from file, with its identifier and the
/// price zone it bids into.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRecord {
    pub id: String,
    pub zone: Option<String>,
    pub spec: UnitSpec,
}

#[derive(Debug, Error)]
pub enum UnitFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// TOML syntax or schema errors; the message carries line/column.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        source: UnitSpecError,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitFile {
    id: Option<String>,
    zone: Option<String>,
    p_min: f64,
    p_max: f64,
    ramp_up: f64,
    ramp_down: f64,
    ramp_startup: f64,
    ramp_shutdown: f64,
    min_up: u32,
    min_down: u32,
    cost_a: f64,
    cost_b: f64,
    cost_fixed: f64,
    #[serde(default)]
    suc_schedule: Vec<f64>,
    initial_state: InitialState,
}

/// Parses a unit specification from TOML source.
///
/// `origin` labels error messages (usually the file path); `fallback_id`
/// names the unit when the file has no `id` key. Returns the parsed record
/// together with any validation warnings.
pub fn parse_unit_toml(
    source: &str,
    origin: &str,
    fallback_id: &str,
) -> Result<(UnitRecord, Vec<UnitWarning>), UnitFileError> {
    let file: UnitFile = toml::from_str(source).map_err(|e| UnitFileError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let spec = UnitSpec {
        p_min: file.p_min,
        p_max: file.p_max,
        ramp_up: file.ramp_up,
        ramp_down: file.ramp_down,
        ramp_startup: file.ramp_startup,
        ramp_shutdown: file.ramp_shutdown,
        min_up: file.min_up,
        min_down: file.min_down,
        cost_a: file.cost_a,
        cost_b: file.cost_b,
        cost_fixed: file.cost_fixed,
        suc_schedule: file.suc_schedule,
        initial_state: file.initial_state,
    };
    let warnings = spec.validate().map_err(|source| UnitFileError::Invalid {
        path: origin.to_string(),
        source,
    })?;
    Ok((
        UnitRecord {
            id: file.id.unwrap_or_else(|| fallback_id.to_string()),
            zone: file.zone,
            spec,
        },
        warnings,
    ))
}

/// Reads and validates a unit specification file.
pub fn read_unit_file(path: &Path) -> Result<(UnitRecord, Vec<UnitWarning>), UnitFileError> {
    let source = std::fs::read_to_string(path).map_err(|source| UnitFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unit".to_string());
    parse_unit_toml(&source, &path.display().to_string(), &stem)
}
