//! Transmission-rate planning inside the feasible data tunnel.
//!
//! Cumulative arrivals bound the cumulative-sent curve from above (causality:
//! data cannot be sent before it arrives) and, shifted down by the buffer
//! capacity, from below (data must be sent before the buffer overflows). The
//! minimum-energy rate profile for any strictly convex power-rate function is
//! the taut string pulled through that tunnel, which this module computes by
//! string pulling over the tunnel's constraint points.
//!
//! Two right anchors are supported: `Deadline` pins the string to "all data
//! sent by the horizon"; `Lazy` pins it to the tunnel's lower bound, which
//! drops the rate to zero as soon as everything outstanding fits the buffer.

use std::fmt;

use crate::channel::ChannelModel;
use crate::model::{CumulativeCurve, Interpolation};

/// Errors from tunnel construction and rate planning.
#[derive(Debug, Clone, PartialEq)]
pub enum RateError {
    /// A single packet is larger than the data buffer.
    PacketExceedsBuffer { bytes: f64, capacity_bytes: f64 },
    /// The tunnel admits no monotone curve.
    InfeasibleTunnel { time_s: f64 },
    /// Arrival events are not strictly increasing in time, lie outside the
    /// horizon, or have non-positive sizes.
    InvalidTrace(&'static str),
}

impl fmt::Display for RateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateError::PacketExceedsBuffer { bytes, capacity_bytes } => {
                write!(f, "packet of {bytes} B exceeds buffer capacity {capacity_bytes} B")
            }
            RateError::InfeasibleTunnel { time_s } => {
                write!(f, "data tunnel infeasible at t = {time_s} s")
            }
            RateError::InvalidTrace(msg) => write!(f, "invalid arrival trace: {msg}"),
        }
    }
}

impl std::error::Error for RateError {}

/// One data arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataArrival {
    /// Arrival instant (second).
    pub time_s: f64,
    /// Packet size (byte).
    pub bytes: f64,
}

/// A finite trace of data arrivals over `[0, horizon_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataArrivalTrace {
    events: Vec<DataArrival>,
    horizon_s: f64,
}

impl DataArrivalTrace {
    /// Validates ordering and bounds and builds a trace.
    pub fn new(events: Vec<DataArrival>, horizon_s: f64) -> Result<Self, RateError> {
        if !(horizon_s > 0.0) {
            return Err(RateError::InvalidTrace("horizon must be > 0"));
        }
        let mut prev = f64::NEG_INFINITY;
        for ev in &events {
            if !(ev.time_s >= 0.0 && ev.time_s < horizon_s) {
                return Err(RateError::InvalidTrace("arrival outside [0, horizon)"));
            }
            if ev.time_s <= prev {
                return Err(RateError::InvalidTrace("arrival times must strictly increase"));
            }
            if !(ev.bytes > 0.0) {
                return Err(RateError::InvalidTrace("packet sizes must be > 0"));
            }
            prev = ev.time_s;
        }
        Ok(Self { events, horizon_s })
    }

    pub fn events(&self) -> &[DataArrival] {
        &self.events
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    /// Total bytes across all arrivals.
    pub fn total_bytes(&self) -> f64 {
        self.events.iter().map(|e| e.bytes).sum()
    }

    /// Parses the trace interchange format: a JSON array of
    /// `{"t": seconds, "bytes": integer}` objects plus a horizon.
    pub fn from_json_str(json: &str, horizon_s: f64) -> Result<Self, RateError> {
        #[derive(serde::Deserialize)]
        struct Entry {
            t: f64,
            bytes: f64,
        }
        let entries: Vec<Entry> = serde_json::from_str(json)
            .map_err(|_| RateError::InvalidTrace("malformed trace JSON"))?;
        let events = entries
            .into_iter()
            .map(|e| DataArrival { time_s: e.t, bytes: e.bytes })
            .collect();
        Self::new(events, horizon_s)
    }

    /// Serializes to the trace interchange format.
    pub fn to_json_string(&self) -> String {
        let mut out = String::from("[");
        for (i, ev) in self.events.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{{\"t\":{},\"bytes\":{}}}", ev.time_s, ev.bytes));
        }
        out.push(']');
        out
    }
}

/// The feasible data tunnel: cumulative arrivals above, arrivals minus
/// buffer capacity (clipped at zero) below.
#[derive(Debug, Clone)]
pub struct DataTunnel {
    arrivals: Vec<DataArrival>,
    cumulative: Vec<f64>,
    capacity_bytes: f64,
    horizon_s: f64,
}

impl DataTunnel {
    /// Cumulative bytes arrived strictly before `t`.
    pub fn arrived_before(&self, t: f64) -> f64 {
        let idx = self.arrivals.partition_point(|a| a.time_s < t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Cumulative bytes arrived at or before `t`.
    pub fn arrived_at(&self, t: f64) -> f64 {
        let idx = self.arrivals.partition_point(|a| a.time_s <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Upper bound on cumulative sent data at `t` (causality).
    pub fn upper_at(&self, t: f64) -> f64 {
        self.arrived_before(t)
    }

    /// Lower bound on cumulative sent data at `t` (no overflow).
    pub fn lower_at(&self, t: f64) -> f64 {
        (self.arrived_at(t) - self.capacity_bytes).max(0.0)
    }

    pub fn capacity_bytes(&self) -> f64 {
        self.capacity_bytes
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    pub fn total_bytes(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn arrivals(&self) -> &[DataArrival] {
        &self.arrivals
    }

    /// Upper bound as an exportable staircase curve.
    pub fn upper_curve(&self) -> CumulativeCurve {
        let pts = self
            .arrivals
            .iter()
            .zip(&self.cumulative)
            .map(|(a, &c)| (a.time_s, c))
            .collect();
        CumulativeCurve::new(0.0, pts, Interpolation::Staircase)
            .expect("arrival staircase is ordered by construction")
    }

    /// Lower bound as an exportable staircase curve (clipped at zero).
    pub fn lower_curve(&self) -> CumulativeCurve {
        let pts = self
            .arrivals
            .iter()
            .zip(&self.cumulative)
            .map(|(a, &c)| (a.time_s, (c - self.capacity_bytes).max(0.0)))
            .collect();
        CumulativeCurve::new(0.0, pts, Interpolation::Staircase)
            .expect("clipped staircase is ordered by construction")
    }

    /// Constraint points the taut string must thread: at each arrival instant
    /// the string value must lie in `[arrived_incl - capacity, arrived_excl]`
    /// (clipped at zero), plus the fixed start and end anchors.
    fn constraint_points(&self, anchor: AnchorMode) -> Result<Vec<(f64, f64, f64)>, RateError> {
        let total = self.total_bytes();
        let end_value = match anchor {
            AnchorMode::Deadline => total,
            AnchorMode::Lazy => (total - self.capacity_bytes).max(0.0),
        };
        let mut pts = vec![(0.0, 0.0, 0.0)];
        for (i, a) in self.arrivals.iter().enumerate() {
            let hi = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
            let lo = (self.cumulative[i] - self.capacity_bytes).max(0.0);
            if lo > hi {
                return Err(RateError::InfeasibleTunnel { time_s: a.time_s });
            }
            if a.time_s == 0.0 {
                // Covered by the start anchor; feasible because lo <= hi = 0.
                continue;
            }
            pts.push((a.time_s, lo, hi));
        }
        pts.push((self.horizon_s, end_value, end_value));
        Ok(pts)
    }
}

/// Which point the taut string is anchored to at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorMode {
    /// All data is sent by the horizon.
    Deadline,
    /// The string ends on the tunnel's lower bound; the rate is zero once
    /// everything outstanding fits the buffer.
    Lazy,
}

/// One constant-rate span of a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSegment {
    pub start_s: f64,
    pub end_s: f64,
    /// Transmission rate (bytes per second).
    pub rate_bytes_per_s: f64,
}

/// A piecewise-constant transmission-rate profile partitioning `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePlan {
    segments: Vec<RateSegment>,
    anchor: AnchorMode,
}

impl RatePlan {
    pub fn segments(&self) -> &[RateSegment] {
        &self.segments
    }

    pub fn anchor(&self) -> AnchorMode {
        self.anchor
    }

    pub fn horizon_s(&self) -> f64 {
        self.segments.last().map(|s| s.end_s).unwrap_or(0.0)
    }

    /// Cumulative bytes sent by time `t`.
    pub fn sent_bytes(&self, t: f64) -> f64 {
        let mut sent = 0.0;
        for seg in &self.segments {
            if t <= seg.start_s {
                break;
            }
            let end = t.min(seg.end_s);
            sent += seg.rate_bytes_per_s * (end - seg.start_s);
        }
        sent
    }

    /// Rate in force at time `t` (right-continuous; last segment at `t = horizon`).
    pub fn rate_at(&self, t: f64) -> f64 {
        for seg in &self.segments {
            if t < seg.end_s {
                return seg.rate_bytes_per_s;
            }
        }
        self.segments.last().map(|s| s.rate_bytes_per_s).unwrap_or(0.0)
    }

    /// Total transmission energy for a convex per-rate power `f` (joule),
    /// with rates converted to bits per second.
    pub fn energy_j(&self, power_for_rate_w: impl Fn(f64) -> f64) -> f64 {
        self.segments
            .iter()
            .map(|s| power_for_rate_w(s.rate_bytes_per_s * 8.0) * (s.end_s - s.start_s))
            .sum()
    }

    /// CSV export with header `start_s,end_s,rate_Bps`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("start_s,end_s,rate_Bps\n");
        for s in &self.segments {
            out.push_str(&format!("{},{},{}\n", s.start_s, s.end_s, s.rate_bytes_per_s));
        }
        out
    }
}

/// Builds the feasible data tunnel for a trace and buffer capacity.
pub fn build_data_tunnel(
    trace: &DataArrivalTrace,
    capacity_bytes: f64,
) -> Result<DataTunnel, RateError> {
    if !(capacity_bytes > 0.0) {
        return Err(RateError::InvalidTrace("capacity must be > 0"));
    }
    for ev in trace.events() {
        if ev.bytes > capacity_bytes {
            return Err(RateError::PacketExceedsBuffer {
                bytes: ev.bytes,
                capacity_bytes,
            });
        }
    }
    let mut cumulative = Vec::with_capacity(trace.events().len());
    let mut acc = 0.0;
    for ev in trace.events() {
        acc += ev.bytes;
        cumulative.push(acc);
    }
    Ok(DataTunnel {
        arrivals: trace.events().to_vec(),
        cumulative,
        capacity_bytes,
        horizon_s: trace.horizon_s(),
    })
}

/// Pulls the taut string through interval constraints `(t, lo, hi)` from the
/// first point (where `lo == hi`) to the last. Returns the string vertices.
///
/// Scans forward keeping the window of feasible slopes from the current
/// vertex; when the window empties, the string bends at the point that set
/// the binding slope and the scan restarts there.
fn pull_string(points: &[(f64, f64, f64)]) -> Result<Vec<(f64, f64)>, RateError> {
    for &(t, lo, hi) in points {
        if lo > hi {
            return Err(RateError::InfeasibleTunnel { time_s: t });
        }
    }
    let last = points.len() - 1;
    let mut vertices = vec![(points[0].0, points[0].1)];
    let mut start = 0usize;
    let (mut t0, mut v0) = vertices[0];
    while start < last {
        let mut min_slope = f64::NEG_INFINITY;
        let mut max_slope = f64::INFINITY;
        let mut min_idx = start;
        let mut max_idx = start;
        let mut bend: Option<(usize, f64)> = None;
        for (j, &(tj, lo, hi)) in points.iter().enumerate().skip(start + 1) {
            let dt = tj - t0;
            let slope_lo = (lo - v0) / dt;
            let slope_hi = (hi - v0) / dt;
            if slope_lo > max_slope {
                // Must climb faster than the upper bound at max_idx allows:
                // the string touches that upper bound and bends there.
                bend = Some((max_idx, points[max_idx].2));
                break;
            }
            if slope_hi < min_slope {
                // Must stay under a bound that the lower bound at min_idx
                // forbids: the string touches that lower bound.
                bend = Some((min_idx, points[min_idx].1));
                break;
            }
            if slope_lo > min_slope {
                min_slope = slope_lo;
                min_idx = j;
            }
            if slope_hi < max_slope {
                max_slope = slope_hi;
                max_idx = j;
            }
            if j == last {
                break;
            }
        }
        match bend {
            Some((idx, value)) => {
                vertices.push((points[idx].0, value));
                t0 = points[idx].0;
                v0 = value;
                start = idx;
            }
            None => {
                vertices.push((points[last].0, points[last].1));
                start = last;
            }
        }
    }
    Ok(vertices)
}

/// Computes the minimum-energy rate plan: the taut string from the origin to
/// the chosen anchor, expressed as constant-rate segments.
pub fn solve_optimal_rate(tunnel: &DataTunnel, anchor: AnchorMode) -> Result<RatePlan, RateError> {
    let points = tunnel.constraint_points(anchor)?;
    let vertices = pull_string(&points)?;
    let mut segments: Vec<RateSegment> = Vec::new();
    for pair in vertices.windows(2) {
        let (t0, v0) = pair[0];
        let (t1, v1) = pair[1];
        let rate = (v1 - v0) / (t1 - t0);
        match segments.last_mut() {
            Some(prev) if prev.rate_bytes_per_s == rate => prev.end_s = t1,
            _ => segments.push(RateSegment { start_s: t0, end_s: t1, rate_bytes_per_s: rate }),
        }
    }
    if segments.is_empty() {
        segments.push(RateSegment {
            start_s: 0.0,
            end_s: tunnel.horizon_s(),
            rate_bytes_per_s: 0.0,
        });
    }
    Ok(RatePlan { segments, anchor })
}

/// Earliest time at which the data still stored plus everything yet to
/// arrive exactly equals the buffer capacity; the minimum-energy rate is
/// zero from there on. Returns the horizon if the condition never holds.
///
/// Buffered-plus-future data equals `total - sent(t)`, so the condition is
/// `sent(t) = total - capacity`.
pub fn compute_t_p(trace: &DataArrivalTrace, capacity_bytes: f64, plan: &RatePlan) -> f64 {
    let target = trace.total_bytes() - capacity_bytes;
    if target < 0.0 {
        return trace.horizon_s();
    }
    if target == 0.0 {
        return 0.0;
    }
    let mut sent = 0.0;
    for seg in plan.segments() {
        let gain = seg.rate_bytes_per_s * (seg.end_s - seg.start_s);
        if sent + gain >= target {
            if seg.rate_bytes_per_s > 0.0 {
                return seg.start_s + (target - sent) / seg.rate_bytes_per_s;
            }
            return seg.start_s;
        }
        sent += gain;
    }
    trace.horizon_s()
}

/// Diagnostics from checking a plan against a tunnel.
///
/// Violations are reported in bytes (zero when the constraint holds). The
/// structural flags capture the shape every taut-string optimum must have.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDiagnostics {
    /// Largest excess of sent data over arrived data (causality breach).
    pub max_causality_violation_bytes: f64,
    /// Largest excess of buffered data over the capacity (overflow breach).
    pub max_overflow_violation_bytes: f64,
    /// Rate is constant between consecutive arrival instants.
    pub rate_constant_between_arrivals: bool,
    /// Every rate change happens with the buffer exactly empty or full.
    pub changes_only_at_empty_or_full: bool,
    /// Every rate increase happens with the buffer empty.
    pub increases_at_empty: bool,
    /// Every rate decrease happens with the buffer full.
    pub decreases_at_full: bool,
}

impl PlanDiagnostics {
    /// True when no constraint is violated and the optimal shape holds.
    pub fn is_clean(&self) -> bool {
        self.max_causality_violation_bytes <= 0.0
            && self.max_overflow_violation_bytes <= 0.0
            && self.rate_constant_between_arrivals
            && self.changes_only_at_empty_or_full
            && self.increases_at_empty
            && self.decreases_at_full
    }
}

/// Checks a rate plan against a tunnel; never fails, only reports.
pub fn validate_plan(plan: &RatePlan, tunnel: &DataTunnel) -> PlanDiagnostics {
    let occupancy_tol = 1e-9 * tunnel.capacity_bytes();
    let mut events: Vec<f64> = Vec::new();
    for seg in plan.segments() {
        events.push(seg.start_s);
        events.push(seg.end_s);
    }
    for a in tunnel.arrivals() {
        events.push(a.time_s);
    }
    events.push(tunnel.horizon_s());
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();

    let mut max_causality = 0.0_f64;
    let mut max_overflow = 0.0_f64;
    for &t in &events {
        let sent = plan.sent_bytes(t);
        max_causality = max_causality.max(sent - tunnel.upper_at(t));
        let occupancy = tunnel.arrived_at(t) - sent;
        max_overflow = max_overflow.max(occupancy - tunnel.capacity_bytes());
    }

    let time_tol = 1e-9 * tunnel.horizon_s().max(1.0);
    let mut rate_constant_between_arrivals = true;
    let mut changes_only_at_empty_or_full = true;
    let mut increases_at_empty = true;
    let mut decreases_at_full = true;
    for pair in plan.segments().windows(2) {
        let (before, after) = (pair[0], pair[1]);
        if before.rate_bytes_per_s == after.rate_bytes_per_s {
            continue;
        }
        let t = after.start_s;
        let on_arrival =
            tunnel.arrivals().iter().any(|a| (a.time_s - t).abs() <= time_tol);
        if !on_arrival {
            rate_constant_between_arrivals = false;
        }
        let occupancy = tunnel.arrived_at(t) - plan.sent_bytes(t);
        let empty = occupancy.abs() <= occupancy_tol;
        let full = (occupancy - tunnel.capacity_bytes()).abs() <= occupancy_tol;
        if !(empty || full) {
            changes_only_at_empty_or_full = false;
        }
        if after.rate_bytes_per_s > before.rate_bytes_per_s && !empty {
            increases_at_empty = false;
        }
        if after.rate_bytes_per_s < before.rate_bytes_per_s && !full {
            decreases_at_full = false;
        }
    }

    PlanDiagnostics {
        max_causality_violation_bytes: max_causality,
        max_overflow_violation_bytes: max_overflow,
        rate_constant_between_arrivals,
        changes_only_at_empty_or_full,
        increases_at_empty,
        decreases_at_full,
    }
}

/// One constant-power span of the EHD's transmit profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub power_w: f64,
}

/// Piecewise-constant transmit power with its cumulative energy curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    pub segments: Vec<PowerSegment>,
    pub cumulative_energy: CumulativeCurve,
}

impl PowerProfile {
    pub fn horizon_s(&self) -> f64 {
        self.segments.last().map(|s| s.end_s).unwrap_or(0.0)
    }

    /// Total transmit energy over the horizon (joule).
    pub fn total_energy_j(&self) -> f64 {
        self.segments.iter().map(|s| s.power_w * (s.end_s - s.start_s)).sum()
    }
}

/// Maps a rate plan to the transmit-power profile it implies on the channel.
pub fn plan_to_power(plan: &RatePlan, channel: &ChannelModel) -> PowerProfile {
    let segments: Vec<PowerSegment> = plan
        .segments()
        .iter()
        .map(|s| PowerSegment {
            start_s: s.start_s,
            end_s: s.end_s,
            power_w: channel.power_for_rate_w(s.rate_bytes_per_s * 8.0),
        })
        .collect();
    let mut pts = vec![(0.0, 0.0)];
    let mut energy = 0.0;
    for s in &segments {
        energy += s.power_w * (s.end_s - s.start_s);
        pts.push((s.end_s, energy));
    }
    pts.dedup_by(|a, b| a.0 == b.0);
    let cumulative_energy = CumulativeCurve::new(0.0, pts, Interpolation::PiecewiseLinear)
        .expect("energy accumulation is monotone");
    PowerProfile { segments, cumulative_energy }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(events: &[(f64, f64)], horizon: f64) -> DataArrivalTrace {
        DataArrivalTrace::new(
            events.iter().map(|&(t, b)| DataArrival { time_s: t, bytes: b }).collect(),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn tunnel_staircases_match_construction() {
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        assert_eq!(tunnel.upper_at(0.0), 0.0);
        assert_eq!(tunnel.upper_at(1.0), 2.0);
        assert_eq!(tunnel.upper_at(3.0), 4.0);
        assert_eq!(tunnel.lower_at(1.0), 0.0);
        assert_eq!(tunnel.lower_at(2.0), 2.0);
        assert_eq!(tunnel.lower_at(9.0), 2.0);
    }

    #[test]
    fn tunnel_empty_trace_is_zero() {
        let tr = trace(&[], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        assert_eq!(tunnel.upper_at(5.0), 0.0);
        assert_eq!(tunnel.lower_at(5.0), 0.0);
    }

    #[test]
    fn tunnel_full_size_packet_clips_lower_bound() {
        let tr = trace(&[(0.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        assert_eq!(tunnel.lower_at(0.0), 0.0);
        assert_eq!(tunnel.upper_at(1.0), 2.0);
    }

    #[test]
    fn tunnel_rejects_oversized_packet() {
        let tr = trace(&[(1.0, 3.0)], 10.0);
        assert!(matches!(
            build_data_tunnel(&tr, 2.0),
            Err(RateError::PacketExceedsBuffer { .. })
        ));
    }

    #[test]
    fn deadline_plan_through_pinch_point() {
        // Arrivals 2@0 and 2@2 with capacity 2 pinch the string at (2, 2):
        // rate 1 on [0, 2] then 0.25 on [2, 10].
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        let plan = solve_optimal_rate(&tunnel, AnchorMode::Deadline).unwrap();
        let segs = plan.segments();
        assert_eq!(segs.len(), 2, "{segs:?}");
        assert!((segs[0].rate_bytes_per_s - 1.0).abs() < 1e-12);
        assert!((segs[0].end_s - 2.0).abs() < 1e-12);
        assert!((segs[1].rate_bytes_per_s - 0.25).abs() < 1e-12);
        assert!((segs[1].end_s - 10.0).abs() < 1e-12);
    }

    #[test]
    fn deadline_plan_single_packet_is_straight_chord() {
        let tr = trace(&[(0.0, 3.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 4.0).unwrap();
        let plan = solve_optimal_rate(&tunnel, AnchorMode::Deadline).unwrap();
        assert_eq!(plan.segments().len(), 1);
        assert!((plan.segments()[0].rate_bytes_per_s - 0.3).abs() < 1e-12);
    }

    #[test]
    fn lazy_plan_drops_rate_to_zero_after_pinch() {
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        let plan = solve_optimal_rate(&tunnel, AnchorMode::Lazy).unwrap();
        let segs = plan.segments();
        assert_eq!(segs.len(), 2, "{segs:?}");
        assert!((segs[0].rate_bytes_per_s - 1.0).abs() < 1e-12);
        assert_eq!(segs[1].rate_bytes_per_s, 0.0);
        let t_p = compute_t_p(&tr, 2.0, &plan);
        assert!((t_p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_yields_zero_plan() {
        let tr = trace(&[], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        for anchor in [AnchorMode::Deadline, AnchorMode::Lazy] {
            let plan = solve_optimal_rate(&tunnel, anchor).unwrap();
            assert_eq!(plan.segments().len(), 1);
            assert_eq!(plan.segments()[0].rate_bytes_per_s, 0.0);
        }
        assert_eq!(compute_t_p(&tr, 2.0, &solve_optimal_rate(&tunnel, AnchorMode::Lazy).unwrap()), 10.0);
    }

    #[test]
    fn t_p_is_zero_when_everything_already_fits() {
        let tr = trace(&[(0.0, 2.0)], 10.0);
        let plan = RatePlan {
            segments: vec![RateSegment { start_s: 0.0, end_s: 10.0, rate_bytes_per_s: 0.0 }],
            anchor: AnchorMode::Lazy,
        };
        assert_eq!(compute_t_p(&tr, 2.0, &plan), 0.0);
    }

    #[test]
    fn t_p_with_unit_rate_plan() {
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let plan = RatePlan {
            segments: vec![RateSegment { start_s: 0.0, end_s: 10.0, rate_bytes_per_s: 1.0 }],
            anchor: AnchorMode::Deadline,
        };
        assert!((compute_t_p(&tr, 2.0, &plan) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validate_accepts_optimal_plan() {
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        let plan = solve_optimal_rate(&tunnel, AnchorMode::Deadline).unwrap();
        let diag = validate_plan(&plan, &tunnel);
        assert!(diag.is_clean(), "{diag:?}");
    }

    #[test]
    fn validate_reports_overflow_of_constant_rate() {
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        let plan = RatePlan {
            segments: vec![RateSegment { start_s: 0.0, end_s: 10.0, rate_bytes_per_s: 0.4 }],
            anchor: AnchorMode::Deadline,
        };
        let diag = validate_plan(&plan, &tunnel);
        // At t = 2: arrived 4, sent 0.8, occupancy 3.2 -> 1.2 over capacity.
        assert!((diag.max_overflow_violation_bytes - 1.2).abs() < 1e-12, "{diag:?}");
    }

    #[test]
    fn validate_reports_causality_overdraw() {
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        // Optimal plan plus 0.5 B/s on [0, 1]: total sent exceeds arrivals.
        let plan = RatePlan {
            segments: vec![
                RateSegment { start_s: 0.0, end_s: 1.0, rate_bytes_per_s: 1.5 },
                RateSegment { start_s: 1.0, end_s: 2.0, rate_bytes_per_s: 1.0 },
                RateSegment { start_s: 2.0, end_s: 10.0, rate_bytes_per_s: 0.25 },
            ],
            anchor: AnchorMode::Deadline,
        };
        let diag = validate_plan(&plan, &tunnel);
        assert!((diag.max_causality_violation_bytes - 0.5).abs() < 1e-12, "{diag:?}");
    }

    #[test]
    fn plan_power_mapping_is_monotone_in_rate() {
        let ch = crate::channel::tests::reference_channel();
        let tr = trace(&[(0.0, 2.0), (2.0, 2.0)], 10.0);
        let tunnel = build_data_tunnel(&tr, 2.0).unwrap();
        let plan = solve_optimal_rate(&tunnel, AnchorMode::Deadline).unwrap();
        let profile = plan_to_power(&plan, &ch);
        assert_eq!(profile.segments.len(), 2);
        assert!(profile.segments[0].power_w > profile.segments[1].power_w);
        assert!(profile.segments[1].power_w > 0.0);
        let end_energy = profile.cumulative_energy.value_at(10.0);
        assert!((end_energy / profile.total_energy_j() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_trace_round_trip() {
        let tr = trace(&[(0.5, 100.0), (2.0, 250.0)], 10.0);
        let json = tr.to_json_string();
        let back = DataArrivalTrace::from_json_str(&json, 10.0).unwrap();
        assert_eq!(tr, back);
    }
}
