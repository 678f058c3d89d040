//! Least-cost start time of a tour, given its total ATF and a cost model.
//!
//! The total cost of starting at `t0` is
//! `c_a(t0) + c_ot(a(t0) - t0) + ∫_{t0}^{a(t0)} c_wt`, with `c_a` the ATF's
//! attached step cost. Between consecutive events the sum is affine, and the
//! attached cost takes the smaller one-sided limit at its jumps, so the
//! minimum is attained at an event.

use crate::plf::{Atf, PlfError, StepCost};

const SECONDS_PER_HOUR: f64 = 3600.0;
const TIE_TOLERANCE: f64 = 1e-9;

/// Bracket list of the soft time-window reduction: `(minutes before the
/// deadline, penalty in dollars)`.
pub const SOFT_BRACKETS: [(f64, f64); 3] = [(15.0, 1.0), (10.0, 2.0), (5.0, 4.0)];
/// Same brackets with doubled penalties.
pub const AGGRESSIVE_SOFT_BRACKETS: [(f64, f64); 3] = [(15.0, 2.0), (10.0, 4.0), (5.0, 8.0)];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Plf(#[from] PlfError),
    #[error("invalid overtime function: {0}")]
    InvalidOvertime(String),
    #[error("malformed penalty brackets: {0}")]
    MalformedBrackets(String),
}

/// Continuous, non-decreasing, piecewise-linear cost of a tour duration
/// (seconds to dollars), extended past its last point with `tail_slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct OvertimeCost {
    points: Vec<(f64, f64)>,
    tail_slope: f64,
}

impl OvertimeCost {
    /// `points` must start at duration 0 with increasing durations and
    /// non-decreasing costs.
    pub fn new(points: &[(f64, f64)], tail_slope: f64) -> Result<Self, ScheduleError> {
        let bad = |m: &str| Err(ScheduleError::InvalidOvertime(m.into()));
        if points.is_empty() || points[0].0 != 0.0 {
            return bad("first point must be at duration 0");
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) || !tail_slope.is_finite() {
            return bad("values must be finite");
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0) || w[1].1 < w[0].1) {
            return bad("durations must increase and costs must not decrease");
        }
        if tail_slope < 0.0 {
            return bad("tail slope must be non-negative");
        }
        Ok(OvertimeCost {
            points: points.to_vec(),
            tail_slope,
        })
    }

    pub fn zero() -> Self {
        OvertimeCost {
            points: vec![(0.0, 0.0)],
            tail_slope: 0.0,
        }
    }

    /// `rate * d`.
    pub fn linear(rate: f64) -> Self {
        OvertimeCost {
            points: vec![(0.0, 0.0)],
            tail_slope: rate,
        }
    }

    /// Free up to `limit`, then `rate` per second.
    pub fn free_until(limit: f64, rate: f64) -> Self {
        if limit <= 0.0 {
            return Self::linear(rate);
        }
        OvertimeCost {
            points: vec![(0.0, 0.0), (limit, 0.0)],
            tail_slope: rate,
        }
    }

    /// Duration abscissae where the slope may change.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, d: f64) -> f64 {
        let d = d.max(0.0);
        let n = self.points.len();
        let (xl, yl) = self.points[n - 1];
        if d >= xl {
            return yl + self.tail_slope * (d - xl);
        }
        let k = self.points.partition_point(|p| p.0 <= d);
        let (x0, y0) = self.points[k - 1];
        let (x1, y1) = self.points[k];
        y0 + (y1 - y0) * ((d - x0) / (x1 - x0))
    }
}

/// Overtime cost plus a piecewise-constant work-time rate in dollars per
/// hour.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub overtime: OvertimeCost,
    pub work_rate: StepCost,
}

impl CostModel {
    pub fn zero() -> Self {
        CostModel {
            overtime: OvertimeCost::zero(),
            work_rate: StepCost::zero(),
        }
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostComponents {
    /// Attached cost of the tour ATF.
    pub attached: f64,
    pub overtime: f64,
    pub work_time: f64,
}

impl CostComponents {
    pub fn total(&self) -> f64 {
        self.attached + self.overtime + self.work_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleResult {
    pub t0: f64,
    pub total_cost: f64,
    pub components: CostComponents,
}

/// `∫_lo^hi rate(t) dt`, with `rate` per hour and times in seconds.
pub fn work_time_integral(rate: &StepCost, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let pieces: Vec<(f64, f64)> = rate.pieces().collect();
    let mut sum = 0.0;
    for (i, &(start, value)) in pieces.iter().enumerate() {
        let end = pieces.get(i + 1).map_or(f64::INFINITY, |p| p.0);
        let overlap = hi.min(end) - lo.max(start);
        if overlap > 0.0 {
            sum += value * overlap;
        }
    }
    sum / SECONDS_PER_HOUR
}

fn components_at(a: &Atf, model: &CostModel, t0: f64) -> CostComponents {
    let arrival = a.eval_clamped(t0);
    CostComponents {
        attached: a.eval_cost(t0),
        overtime: model.overtime.eval(arrival - t0),
        work_time: work_time_integral(&model.work_rate, t0, arrival),
    }
}

/// Total cost of starting at `t0`.
pub fn total_cost(a: &Atf, model: &CostModel, t0: f64) -> Result<f64, ScheduleError> {
    if t0 < a.t_min() || t0 > a.t_max() {
        return Err(PlfError::OutOfDomain {
            t: t0,
            t_max: a.t_max(),
        }
        .into());
    }
    Ok(components_at(a, model, t0).total())
}

/// Candidate start times: every point where the total cost may stop being
/// affine, restricted to `[t_min, t_max]`, sorted and deduplicated.
pub fn events(a: &Atf, model: &CostModel) -> Vec<f64> {
    let (lo, hi) = (a.t_min(), a.t_max());
    let inside = |t: f64| t >= lo && t <= hi;
    let (ts, vs) = (a.ts(), a.vs());
    let mut out: Vec<f64> = ts.to_vec();
    out.extend(a.cost().jumps().iter().copied().filter(|&t| inside(t)));
    let rate_jumps = model.work_rate.jumps();
    out.extend(rate_jumps.iter().copied().filter(|&t| inside(t)));
    for i in 0..ts.len().saturating_sub(1) {
        let (t0, v0, t1, v1) = (ts[i], vs[i], ts[i + 1], vs[i + 1]);
        let slope = (v1 - v0) / (t1 - t0);
        // duration crossing an overtime breakpoint
        let (d0, d1) = (v0 - t0, v1 - t1);
        if d0 != d1 {
            for d in model.overtime.breakpoints() {
                if (d - d0) * (d - d1) < 0.0 {
                    out.push(t0 + (d - d0) / (slope - 1.0));
                }
            }
        }
        // arrival crossing a rate jump
        if v1 > v0 {
            let from = rate_jumps.partition_point(|&s| s <= v0);
            for &s in rate_jumps[from..].iter().take_while(|&&s| s < v1) {
                out.push(t0 + (s - v0) / slope);
            }
        }
    }
    out.retain(|&t| inside(t));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Least start time minimizing the total cost.
pub fn optimal_start(a: &Atf, model: &CostModel) -> ScheduleResult {
    optimal_start_counted(a, model).0
}

/// Like [`optimal_start`], also returning the number of scanned events.
pub fn optimal_start_counted(a: &Atf, model: &CostModel) -> (ScheduleResult, usize) {
    let candidates = events(a, model);
    let scored: Vec<(f64, CostComponents)> = candidates
        .iter()
        .map(|&t| (t, components_at(a, model, t)))
        .collect();
    let best = scored
        .iter()
        .map(|(_, c)| c.total())
        .fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * (1.0 + best.abs());
    let &(t0, components) = scored
        .iter()
        .find(|(_, c)| c.total() <= best + tol)
        .expect("at least one event");
    let result = ScheduleResult {
        t0,
        total_cost: components.total(),
        components,
    };
    (result, scored.len())
}

/// Step cost charging `penalty` for arrivals less than `offset` minutes
/// before `window_end` (seconds), per bracket.
pub fn soft_window_penalty(window_end: f64, brackets: &[(f64, f64)]) -> Result<StepCost, ScheduleError> {
    if brackets.is_empty() {
        return Ok(StepCost::zero());
    }
    for &(offset, penalty) in brackets {
        if !(offset > 0.0) || !offset.is_finite() || !(penalty >= 0.0) || !penalty.is_finite() {
            return Err(ScheduleError::MalformedBrackets(format!("bad bracket ({offset}, {penalty})")));
        }
    }
    for w in brackets.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(ScheduleError::MalformedBrackets("offsets must decrease".into()));
        }
        if w[1].1 < w[0].1 {
            return Err(ScheduleError::MalformedBrackets("penalties must not decrease".into()));
        }
    }
    let mut pieces = vec![(f64::NEG_INFINITY, 0.0)];
    pieces.extend(brackets.iter().map(|&(offset, penalty)| (window_end - offset * 60.0, penalty)));
    Ok(StepCost::from_pieces(&pieces)?)
}
