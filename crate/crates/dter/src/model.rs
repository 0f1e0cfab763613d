//! Physical model of the energy link between a dedicated energy source (ES)
//! and an energy-harvesting device (EHD).
//!
//! The EHD stores harvested energy in a capacitor charged through an RC
//! circuit. Charging is nonlinear: the time (and therefore the ES energy)
//! needed to deliver a given amount depends on how much charge is already in
//! the capacitor. This module provides the charge-time/charging-cost
//! functions, the capacitor power bound, and residual-energy accounting that
//! every scheduler in this crate builds on.
//!
//! All quantities are SI (joules, seconds, watts, hertz, bytes) in `f64`.

use std::fmt;

/// Relative guard band below the full capacity: charging to within this
/// fraction of `E_m` is rejected because the charge time diverges there.
pub const CAPACITY_GUARD: f64 = 1e-12;

/// Errors from the charging model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Residual plus requested energy exceeds the capacitor capacity.
    CapacityExceeded { total_j: f64, capacity_j: f64 },
    /// Residual plus requested energy lands on the capacity singularity,
    /// where the charge time is infinite.
    InfiniteChargeTime,
    /// A residual-energy evaluation went negative (infeasible history).
    NegativeResidual { time_s: f64, value_j: f64 },
    /// An argument was outside its physical domain.
    InvalidInput(&'static str),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::CapacityExceeded { total_j, capacity_j } => write!(
                f,
                "residual + request = {total_j:e} J exceeds capacity {capacity_j:e} J"
            ),
            ModelError::InfiniteChargeTime => {
                write!(f, "charging to full capacity takes infinite time")
            }
            ModelError::NegativeResidual { time_s, value_j } => {
                write!(f, "residual energy {value_j:e} J negative at t = {time_s} s")
            }
            ModelError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Physical parameters of the ES-to-EHD charging path.
///
/// The storable energy `E_m = C V_m^2 / 2` is always derived from the
/// capacitance and maximum voltage so the charge-time and power-bound
/// formulas stay mutually consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingCircuit {
    /// Resistance of the charging circuit (ohm).
    pub resistance_ohm: f64,
    /// Capacitance of the storage capacitor (farad).
    pub capacitance_farad: f64,
    /// Maximum voltage the capacitor can approach (volt).
    pub max_voltage_v: f64,
    /// Constant transmit power of the ES while sending an energy packet (watt).
    pub es_power_w: f64,
    /// Fixed ES-side overhead paid per energy request (joule).
    pub request_overhead_j: f64,
}

impl ChargingCircuit {
    /// Validates the parameters and builds a circuit.
    pub fn new(
        resistance_ohm: f64,
        capacitance_farad: f64,
        max_voltage_v: f64,
        es_power_w: f64,
        request_overhead_j: f64,
    ) -> Result<Self, ModelError> {
        if !(resistance_ohm > 0.0) {
            return Err(ModelError::InvalidInput("resistance must be > 0"));
        }
        if !(capacitance_farad > 0.0) {
            return Err(ModelError::InvalidInput("capacitance must be > 0"));
        }
        if !(max_voltage_v > 0.0) {
            return Err(ModelError::InvalidInput("max voltage must be > 0"));
        }
        if !(es_power_w > 0.0) {
            return Err(ModelError::InvalidInput("ES power must be > 0"));
        }
        if !(request_overhead_j >= 0.0) {
            return Err(ModelError::InvalidInput("request overhead must be >= 0"));
        }
        Ok(Self {
            resistance_ohm,
            capacitance_farad,
            max_voltage_v,
            es_power_w,
            request_overhead_j,
        })
    }

    /// Storable energy `E_m = C V_m^2 / 2` (joule). Derived, never stored.
    pub fn energy_capacity_j(&self) -> f64 {
        0.5 * self.capacitance_farad * self.max_voltage_v * self.max_voltage_v
    }

    /// RC time constant (second).
    pub fn time_constant_s(&self) -> f64 {
        self.resistance_ohm * self.capacitance_farad
    }

    /// Highest power a capacitor-based EHD can sustainably harvest:
    /// `E_m / (2 R C) = V_m^2 / (4 R)` (watt).
    pub fn max_harvest_power_w(&self) -> f64 {
        self.max_voltage_v * self.max_voltage_v / (4.0 * self.resistance_ohm)
    }

    /// Time for the ES to charge the capacitor from `residual_j` up by
    /// `request_j` (second):
    ///
    /// `T = R C ln[(sqrt(2 E_m) - sqrt(2 E_b)) / (sqrt(2 E_m) - sqrt(2 (E_b + E_r)))]`
    ///
    /// Strictly increasing in the request for a fixed residual. Charging to
    /// (or past) the capacity is rejected: the logarithm diverges there.
    pub fn charge_time_s(&self, residual_j: f64, request_j: f64) -> Result<f64, ModelError> {
        if !(residual_j >= 0.0) {
            return Err(ModelError::InvalidInput("residual must be >= 0"));
        }
        if !(request_j >= 0.0) {
            return Err(ModelError::InvalidInput("request must be >= 0"));
        }
        if request_j == 0.0 {
            return Ok(0.0);
        }
        let capacity = self.energy_capacity_j();
        let total = residual_j + request_j;
        if total > capacity {
            return Err(ModelError::CapacityExceeded { total_j: total, capacity_j: capacity });
        }
        if total > capacity * (1.0 - CAPACITY_GUARD) {
            return Err(ModelError::InfiniteChargeTime);
        }
        let a = (2.0 * capacity).sqrt();
        let num = a - (2.0 * residual_j).sqrt();
        let den = a - (2.0 * total).sqrt();
        Ok(self.time_constant_s() * (num / den).ln())
    }

    /// ES energy spent delivering `request_j` on top of `residual_j`:
    /// `E_es = p_es * T_es` (joule). Excludes the per-request overhead.
    pub fn charging_cost_j(&self, residual_j: f64, request_j: f64) -> Result<f64, ModelError> {
        Ok(self.es_power_w * self.charge_time_s(residual_j, request_j)?)
    }

    /// Classifies the local curvature of the charging cost in the requested
    /// amount by a central second difference with the given step.
    ///
    /// The cost is strictly concave in the request while
    /// `residual + request < E_m / 4` and strictly convex past it; within
    /// one step of the flip point the result is `Boundary`.
    pub fn charging_cost_curvature(
        &self,
        residual_j: f64,
        request_j: f64,
        step_j: f64,
    ) -> Result<Curvature, ModelError> {
        if !(step_j > 0.0) {
            return Err(ModelError::InvalidInput("step must be > 0"));
        }
        if request_j < step_j {
            return Err(ModelError::InvalidInput("request must be >= step"));
        }
        let flip = self.energy_capacity_j() / 4.0;
        let total = residual_j + request_j;
        if (total - flip).abs() <= step_j {
            return Ok(Curvature::Boundary);
        }
        let lo = self.charging_cost_j(residual_j, request_j - step_j)?;
        let mid = self.charging_cost_j(residual_j, request_j)?;
        let hi = self.charging_cost_j(residual_j, request_j + step_j)?;
        let second_diff = hi - 2.0 * mid + lo;
        if second_diff < 0.0 {
            Ok(Curvature::Concave)
        } else {
            Ok(Curvature::Convex)
        }
    }
}

/// Sign of the second difference of the charging cost in the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Concave,
    Convex,
    Boundary,
}

/// State of the storage capacitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitorState {
    /// Residual energy (joule), in `[0, E_m]` of the owning circuit.
    pub residual_j: f64,
}

/// One completed energy request as seen by the schedulers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRequest {
    /// Instant the request is initiated (second).
    pub time_s: f64,
    /// Energy harvested by the EHD (joule), credited as a step at `time_s`.
    pub harvested_j: f64,
    /// Charge duration; no new request may start before it elapses (second).
    pub charge_time_s: f64,
    /// ES transmit energy `p_es * charge_time` (joule), overhead excluded.
    pub es_cost_j: f64,
}

impl EnergyRequest {
    /// Builds a request, deriving charge time and ES cost from the circuit.
    pub fn charge(
        circuit: &ChargingCircuit,
        time_s: f64,
        residual_j: f64,
        request_j: f64,
    ) -> Result<Self, ModelError> {
        let charge_time_s = circuit.charge_time_s(residual_j, request_j)?;
        Ok(Self {
            time_s,
            harvested_j: request_j,
            charge_time_s,
            es_cost_j: circuit.es_power_w * charge_time_s,
        })
    }

    /// Average charge rate `E_r / T_es` (watt); zero for an empty request.
    pub fn avg_charge_rate_w(&self) -> f64 {
        if self.charge_time_s > 0.0 {
            self.harvested_j / self.charge_time_s
        } else {
            0.0
        }
    }
}

/// How a cumulative curve interpolates between breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Straight lines between breakpoints.
    PiecewiseLinear,
    /// Constant value that jumps at each breakpoint.
    Staircase,
}

/// A non-decreasing cumulative quantity over time (energy or data).
///
/// Breakpoints are `(time, value-after-this-time)` pairs with strictly
/// increasing times. A staircase curve can be read with either the
/// left limit (jump at `t` not yet counted) or the right limit (counted).
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve {
    points: Vec<(f64, f64)>,
    interpolation: Interpolation,
    initial_value: f64,
}

impl CumulativeCurve {
    /// Builds a curve from breakpoints; `initial_value` applies before the
    /// first breakpoint.
    pub fn new(
        initial_value: f64,
        points: Vec<(f64, f64)>,
        interpolation: Interpolation,
    ) -> Result<Self, ModelError> {
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_v = initial_value;
        for &(t, v) in &points {
            if t <= prev_t {
                return Err(ModelError::InvalidInput("breakpoint times must strictly increase"));
            }
            if v < prev_v {
                return Err(ModelError::InvalidInput("breakpoint values must be non-decreasing"));
            }
            prev_t = t;
            prev_v = v;
        }
        Ok(Self { points, interpolation, initial_value })
    }

    /// A constant-zero curve.
    pub fn zero(interpolation: Interpolation) -> Self {
        Self { points: Vec::new(), interpolation, initial_value: 0.0 }
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Breakpoints as `(time, value)` pairs.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Value just before `t`: a step exactly at `t` is not yet counted.
    pub fn value_before(&self, t: f64) -> f64 {
        self.eval(t, true)
    }

    /// Value at/just after `t`: a step exactly at `t` is counted.
    pub fn value_at(&self, t: f64) -> f64 {
        self.eval(t, false)
    }

    fn eval(&self, t: f64, strict: bool) -> f64 {
        // Index of the last breakpoint with time < t (strict) or <= t.
        let idx = self.points.partition_point(|&(bt, _)| if strict { bt < t } else { bt <= t });
        if idx == 0 {
            return match self.interpolation {
                Interpolation::Staircase => self.initial_value,
                Interpolation::PiecewiseLinear => {
                    if let Some(&(t0, v0)) = self.points.first() {
                        if t >= t0 {
                            v0
                        } else {
                            self.initial_value
                                + (v0 - self.initial_value) * ((t - self.anchor_time()) / (t0 - self.anchor_time()))
                        }
                    } else {
                        self.initial_value
                    }
                }
            };
        }
        let (t_lo, v_lo) = self.points[idx - 1];
        match self.interpolation {
            Interpolation::Staircase => v_lo,
            Interpolation::PiecewiseLinear => {
                if idx == self.points.len() {
                    v_lo
                } else {
                    let (t_hi, v_hi) = self.points[idx];
                    v_lo + (v_hi - v_lo) * (t - t_lo) / (t_hi - t_lo)
                }
            }
        }
    }

    fn anchor_time(&self) -> f64 {
        0.0
    }
}

/// Residual energy at time `t` given an initial charge, step-credited
/// requests, and a cumulative consumption curve:
///
/// `E_b(t) = E_0 + sum over requests with time < t of E_r - consumption(t)`
///
/// A request exactly at `t` is not yet counted. Errors if the history is
/// infeasible (result negative).
pub fn residual_energy_j(
    initial_j: f64,
    requests: &[EnergyRequest],
    consumption: &CumulativeCurve,
    t: f64,
) -> Result<f64, ModelError> {
    let harvested: f64 =
        requests.iter().filter(|r| r.time_s < t).map(|r| r.harvested_j).sum();
    let value = initial_j + harvested - consumption.value_at(t);
    if value < 0.0 {
        return Err(ModelError::NegativeResidual { time_s: t, value_j: value });
    }
    Ok(value)
}
