use super::atf::{interpolate, prune_collinear};
use super::{Atf, PlfError, StepCost, EPS_T};

/// General piecewise-linear function on a compact interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, PlfError> {
        if points.is_empty() {
            return Err(PlfError::Invalid("no breakpoints".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(PlfError::Invalid("breakpoints must be finite".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(PlfError::Invalid("abscissae must increase".into()));
        }
        Ok(Self::from_points(points))
    }

    /// Builds without validation, merging near-coincident abscissae and
    /// removing collinear points.
    pub(crate) fn from_points(points: &[(f64, f64)]) -> Self {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        let n = points.len();
        for (i, &p) in points.iter().enumerate() {
            if let Some(last) = pts.last_mut() {
                if p.0 - last.0 <= EPS_T {
                    if i == n - 1 && pts.len() > 1 {
                        *pts.last_mut().unwrap() = p;
                    }
                    continue;
                }
            }
            pts.push(p);
        }
        let (xs, ys) = prune_collinear(&pts).into_iter().unzip();
        PiecewiseLinear { xs, ys }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Value at `x`, or `None` outside the domain.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if x < lo - EPS_T || x > hi + EPS_T {
            return None;
        }
        Some(self.eval_clamped(x))
    }

    pub(crate) fn eval_clamped(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x);
        interpolate(self.xs[k - 1], self.ys[k - 1], self.xs[k], self.ys[k], x)
    }

    /// The ATF (constant left of `t_min`) restricted to `[lo, hi]`, where
    /// `hi` should not exceed `t_max`.
    pub fn from_atf(a: &Atf, lo: f64, hi: f64) -> Self {
        let mut pts = vec![(lo, a.eval_clamped(lo))];
        pts.extend(a.breakpoints().filter(|&(t, _)| t > lo && t < hi));
        if hi > lo {
            pts.push((hi, a.eval_clamped(hi)));
        }
        Self::from_points(&pts)
    }

    /// Interprets the function as an ATF (constant to the left) with zero cost.
    pub fn to_atf(&self) -> Result<Atf, PlfError> {
        let pts: Vec<(f64, f64)> = self.points().collect();
        Atf::new(&pts).map(|a| a.with_cost(StepCost::zero()))
    }
}
