use super::PlfError;

/// Piecewise-constant cost of departure.
///
/// Piece `i` holds `values[i]` on `[starts[i], starts[i + 1])`; the first piece
/// starts at negative infinity. At a jump the function takes the smaller of its
/// two one-sided limits, which keeps it lower semi-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCost {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl Default for StepCost {
    fn default() -> Self {
        Self::zero()
    }
}

impl StepCost {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        StepCost {
            starts: vec![f64::NEG_INFINITY],
            values: vec![value],
        }
    }

    /// Builds a step function from `(start, value)` pieces. The first start is
    /// ignored: the first value extends to negative infinity.
    pub fn from_pieces(pieces: &[(f64, f64)]) -> Result<Self, PlfError> {
        if pieces.is_empty() {
            return Err(PlfError::Invalid("step cost needs at least one piece".into()));
        }
        for w in pieces.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(PlfError::Invalid("step cost starts must increase".into()));
            }
        }
        if pieces.iter().any(|p| !p.1.is_finite() || p.0.is_nan()) {
            return Err(PlfError::Invalid("step cost values must be finite".into()));
        }
        if pieces.iter().skip(1).any(|p| !p.0.is_finite()) {
            return Err(PlfError::Invalid("step cost starts must be finite".into()));
        }
        let mut starts = Vec::with_capacity(pieces.len());
        let mut values = Vec::with_capacity(pieces.len());
        starts.push(f64::NEG_INFINITY);
        values.push(pieces[0].1);
        for &(s, v) in &pieces[1..] {
            starts.push(s);
            values.push(v);
        }
        Ok(Self::normalized(starts, values))
    }

    /// Drops pieces that repeat the previous value.
    pub(crate) fn normalized(starts: Vec<f64>, values: Vec<f64>) -> Self {
        let mut s_out = Vec::with_capacity(starts.len());
        let mut v_out: Vec<f64> = Vec::with_capacity(values.len());
        for (s, v) in starts.into_iter().zip(values) {
            if let Some(&last) = v_out.last() {
                if last == v {
                    continue;
                }
                if *s_out.last().unwrap() == s {
                    // zero-length piece: the later value wins
                    *v_out.last_mut().unwrap() = v;
                    if v_out.len() >= 2 && v_out[v_out.len() - 2] == v {
                        v_out.pop();
                        s_out.pop();
                    }
                    continue;
                }
            }
            s_out.push(s);
            v_out.push(v);
        }
        s_out[0] = f64::NEG_INFINITY;
        StepCost {
            starts: s_out,
            values: v_out,
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.starts.iter().copied().zip(self.values.iter().copied())
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    pub fn discontinuities(&self) -> usize {
        self.values.len() - 1
    }

    /// Jump abscissae in increasing order.
    pub fn jumps(&self) -> &[f64] {
        &self.starts[1..]
    }

    pub fn is_zero(&self) -> bool {
        self.values.len() == 1 && self.values[0] == 0.0
    }

    fn piece_index(&self, t: f64) -> usize {
        self.starts.partition_point(|&s| s <= t) - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        if i > 0 && self.starts[i] == t {
            self.values[i].min(self.values[i - 1])
        } else {
            self.values[i]
        }
    }

    /// Limit from the right.
    pub fn right_value(&self, t: f64) -> f64 {
        self.values[self.piece_index(t)]
    }

    /// Limit from the left.
    pub fn left_value(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        if i > 0 && self.starts[i] == t {
            self.values[i - 1]
        } else {
            self.values[i]
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Pointwise sum.
    pub fn add(&self, other: &StepCost) -> StepCost {
        self.combine(other, |a, b| a + b)
    }

    /// Pointwise minimum.
    pub fn min_with(&self, other: &StepCost) -> StepCost {
        self.combine(other, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> StepCost {
        StepCost::normalized(
            self.starts.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    fn combine(&self, other: &StepCost, op: impl Fn(f64, f64) -> f64) -> StepCost {
        let (a, b) = (self, other);
        let mut starts = vec![f64::NEG_INFINITY];
        let mut values = vec![op(a.values[0], b.values[0])];
        let (mut i, mut j) = (1, 1);
        while i < a.starts.len() || j < b.starts.len() {
            let sa = a.starts.get(i).copied().unwrap_or(f64::INFINITY);
            let sb = b.starts.get(j).copied().unwrap_or(f64::INFINITY);
            let s = sa.min(sb);
            if sa == s {
                i += 1;
            }
            if sb == s {
                j += 1;
            }
            starts.push(s);
            values.push(op(a.values[i - 1], b.values[j - 1]));
        }
        StepCost::normalized(starts, values)
    }

    /// Drops jumps at or after `t_end`, which lie outside an owning domain
    /// ending at `t_end`.
    pub fn truncated(&self, t_end: f64) -> StepCost {
        let keep = self.starts.partition_point(|&s| s < t_end);
        let mut starts = self.starts[..keep].to_vec();
        let mut values = self.values[..keep].to_vec();
        // the value at t_end itself is the minimum of the two limits
        if keep < self.starts.len() && self.starts[keep] == t_end {
            let right = self.values[keep];
            if right < *values.last().unwrap() {
                starts.push(t_end);
                values.push(right);
            }
        }
        StepCost::normalized(starts, values)
    }

    /// Shifts every jump by `delta`.
    pub fn shifted(&self, delta: f64) -> StepCost {
        StepCost {
            starts: self.starts.iter().map(|s| s + delta).collect(),
            values: self.values.clone(),
        }
    }

    pub(crate) fn raw_starts(&self) -> &[f64] {
        &self.starts
    }

    pub(crate) fn raw_values(&self) -> &[f64] {
        &self.values
    }
}
