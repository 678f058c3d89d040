use super::{PlfError, StepCost, EPS_SLOPE, EPS_T};

/// Piecewise-linear FIFO arrival time function with an attached step cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Atf {
    ts: Vec<f64>,
    vs: Vec<f64>,
    cost: StepCost,
}

/// Range of the travel time `a(t) - t` over `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Atf {
    /// Validates and normalizes a breakpoint list. The cost is zero.
    pub fn new(points: &[(f64, f64)]) -> Result<Atf, PlfError> {
        if points.is_empty() {
            return Err(PlfError::Invalid("no breakpoints".into()));
        }
        for &(t, v) in points {
            if !t.is_finite() || !v.is_finite() {
                return Err(PlfError::Invalid("breakpoints must be finite".into()));
            }
            if v < t - EPS_T {
                return Err(PlfError::Invalid(format!("negative travel time at t = {t}")));
            }
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(PlfError::Invalid("breakpoint times must increase".into()));
            }
            if w[1].1 < w[0].1 - EPS_T {
                return Err(PlfError::Invalid(format!(
                    "arrival decreases after t = {}",
                    w[0].0
                )));
            }
        }
        let (ts, vs) = points.iter().copied().unzip();
        Ok(Atf::from_raw(ts, vs, StepCost::zero()))
    }

    /// `t + travel` on `[t_min, t_max]`.
    pub fn constant_travel(travel: f64, t_min: f64, t_max: f64) -> Atf {
        assert!(travel >= 0.0 && t_max >= t_min);
        if t_max > t_min {
            Atf::from_raw(vec![t_min, t_max], vec![t_min + travel, t_max + travel], StepCost::zero())
        } else {
            Atf::from_raw(vec![t_min], vec![t_min + travel], StepCost::zero())
        }
    }

    pub fn identity(t_min: f64, t_max: f64) -> Atf {
        Atf::constant_travel(0.0, t_min, t_max)
    }

    /// Arrival after waiting for `open` and spending `duration`; departures
    /// later than `close` are outside the domain.
    pub fn window(open: f64, close: f64, duration: f64) -> Atf {
        assert!(close >= open && duration >= 0.0);
        Atf::constant_travel(duration, open, close)
    }

    pub fn with_cost(mut self, cost: StepCost) -> Atf {
        self.cost = cost.truncated(self.t_max());
        self
    }

    /// Builds from arbitrary numeric output: merges coincident abscissae,
    /// lifts rounding dips so that `v` stays non-decreasing and `v >= t`, and
    /// removes redundant breakpoints.
    pub(crate) fn from_raw(ts: Vec<f64>, vs: Vec<f64>, cost: StepCost) -> Atf {
        debug_assert_eq!(ts.len(), vs.len());
        debug_assert!(!ts.is_empty());
        let n = ts.len();
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let (t, mut v) = (ts[i], vs[i]);
            if let Some(&(pt, pv)) = pts.last() {
                v = v.max(pv);
                if t - pt <= EPS_T {
                    if i == n - 1 && pts.len() > 1 {
                        pts.pop();
                        pts.push((t, v));
                    } else {
                        pts.last_mut().unwrap().1 = v;
                    }
                    continue;
                }
            }
            pts.push((t, v.max(t)));
        }
        let pts = prune_collinear(&pts);
        let (ts, vs): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let t_max = *ts.last().unwrap();
        Atf {
            ts,
            vs,
            cost: cost.truncated(t_max),
        }
    }

    pub fn t_min(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.vs.iter().copied())
    }

    pub fn cost(&self) -> &StepCost {
        &self.cost
    }

    pub fn eval(&self, t: f64) -> Result<f64, PlfError> {
        if t > self.t_max() + EPS_T {
            return Err(PlfError::OutOfDomain {
                t,
                t_max: self.t_max(),
            });
        }
        Ok(self.eval_clamped(t))
    }

    /// Like [`Atf::eval`] but treats times past `t_max` as `t_max`.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.vs[0];
        }
        if t >= self.ts[n - 1] {
            return self.vs[n - 1];
        }
        let k = self.ts.partition_point(|&x| x <= t);
        interpolate(self.ts[k - 1], self.vs[k - 1], self.ts[k], self.vs[k], t)
    }

    pub fn eval_cost(&self, t: f64) -> f64 {
        self.cost.eval(t)
    }

    /// Latest departure whose arrival is at most `arrival`, if any.
    pub fn latest_departure(&self, arrival: f64) -> Option<f64> {
        let n = self.ts.len();
        if arrival < self.vs[0] {
            return None;
        }
        if arrival >= self.vs[n - 1] {
            return Some(self.t_max());
        }
        let k = self.vs.partition_point(|&v| v <= arrival);
        Some(interpolate(self.vs[k - 1], self.ts[k - 1], self.vs[k], self.ts[k], arrival))
    }

    pub fn travel_bounds(&self) -> TravelBounds {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (t, v) in self.breakpoints() {
            lo = lo.min(v - t);
            hi = hi.max(v - t);
        }
        TravelBounds { lo: lo.max(0.0), hi }
    }

    /// Re-checks every invariant of the representation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.ts.len();
        if n == 0 || self.vs.len() != n {
            return Err("empty or ragged breakpoint list".into());
        }
        for i in 0..n {
            if !self.ts[i].is_finite() || !self.vs[i].is_finite() {
                return Err(format!("non-finite breakpoint {i}"));
            }
            if self.vs[i] < self.ts[i] - EPS_T {
                return Err(format!("negative travel time at breakpoint {i}"));
            }
            if i > 0 {
                if !(self.ts[i] > self.ts[i - 1]) {
                    return Err(format!("times not increasing at breakpoint {i}"));
                }
                if self.vs[i] < self.vs[i - 1] {
                    return Err(format!("arrival decreases at breakpoint {i}"));
                }
            }
            if i > 0 && i + 1 < n {
                let s1 = slope(self.ts[i - 1], self.vs[i - 1], self.ts[i], self.vs[i]);
                let s2 = slope(self.ts[i], self.vs[i], self.ts[i + 1], self.vs[i + 1]);
                if (s1 - s2).abs() <= EPS_SLOPE {
                    return Err(format!("redundant breakpoint {i}"));
                }
            }
        }
        let starts = self.cost.raw_starts();
        if starts.iter().skip(1).any(|&s| s >= self.t_max()) {
            return Err("cost jump past the domain".into());
        }
        Ok(())
    }

    /// Same function after removing a leading flat run: the first breakpoint
    /// becomes the last one with value `a(t_min)`. Two ATFs that agree on the
    /// whole real line up to `t_max` have equal canonical forms.
    pub fn canonical(&self) -> Atf {
        let v0 = self.vs[0];
        let mut k = 0;
        while k + 1 < self.ts.len() && self.vs[k + 1] == v0 {
            k += 1;
        }
        Atf {
            ts: self.ts[k..].to_vec(),
            vs: self.vs[k..].to_vec(),
            cost: self.cost.clone(),
        }
    }

    /// Same function extended to the left: breakpoint at `t` if `t < t_min`.
    pub fn extended_left(&self, t: f64) -> Atf {
        if t >= self.t_min() {
            return self.clone();
        }
        let mut ts = vec![t];
        let mut vs = vec![self.vs[0]];
        ts.extend_from_slice(&self.ts);
        vs.extend_from_slice(&self.vs);
        Atf {
            ts,
            vs,
            cost: self.cost.clone(),
        }
    }

    /// Restricts the domain to `(-inf, t_end]`; `t_end` must not precede
    /// `t_min`.
    pub fn truncated(&self, t_end: f64) -> Atf {
        if t_end >= self.t_max() {
            return self.clone();
        }
        let t_end = t_end.max(self.t_min());
        let k = self.ts.partition_point(|&x| x < t_end);
        let mut ts = self.ts[..k].to_vec();
        let mut vs = self.vs[..k].to_vec();
        let v_end = self.eval_clamped(t_end);
        ts.push(t_end);
        vs.push(v_end);
        Atf::from_raw(ts, vs, self.cost.clone())
    }

    /// Largest absolute difference at the union of breakpoints; the two must
    /// share `t_max` within tolerance.
    pub fn max_abs_diff(&self, other: &Atf) -> f64 {
        let mut d: f64 = 0.0;
        for &t in self.ts.iter().chain(other.ts.iter()) {
            d = d.max((self.eval_clamped(t) - other.eval_clamped(t)).abs());
        }
        d
    }
}

pub(crate) fn interpolate(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    if x <= x0 {
        y0
    } else if x >= x1 {
        y1
    } else if x0 == y0 && x1 == y1 {
        // identity piece: keep it exact
        x
    } else {
        y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
    }
}

pub(crate) fn slope(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    (y1 - y0) / (x1 - x0)
}

/// Removes inner points whose incoming and outgoing slopes agree.
pub(crate) fn prune_collinear(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let s1 = slope(a.0, a.1, b.0, b.1);
            let s2 = slope(b.0, b.1, p.0, p.1);
            if (s1 - s2).abs() <= EPS_SLOPE {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}
