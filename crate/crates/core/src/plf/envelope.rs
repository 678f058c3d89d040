use super::PiecewiseLinear;

/// `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Line { slope, intercept }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Concave lower envelope of lines over the whole real line.
///
/// `lines[i]` is the minimum on `[breaks[i - 1], breaks[i]]`; slopes strictly
/// decrease from left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerEnvelope {
    lines: Vec<Line>,
    breaks: Vec<f64>,
}

impl LowerEnvelope {
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.lines[self.breaks.partition_point(|&b| b < x)].at(x)
    }

    /// Restriction to `[lo, hi]` as a piecewise-linear function.
    pub fn to_pwl(&self, lo: f64, hi: f64) -> PiecewiseLinear {
        let mut pts = vec![(lo, self.eval(lo))];
        for (i, &b) in self.breaks.iter().enumerate() {
            if b > lo && b < hi {
                pts.push((b, self.lines[i].at(b)));
            }
        }
        if hi > lo {
            pts.push((hi, self.eval(hi)));
        }
        PiecewiseLinear::from_points(&pts)
    }
}

/// Lower envelope of lines given in non-decreasing slope order.
pub fn envelope_affine(lines: &[Line]) -> LowerEnvelope {
    assert!(!lines.is_empty(), "envelope of no lines");
    debug_assert!(lines.windows(2).all(|w| w[0].slope <= w[1].slope));
    let mut hull: Vec<Line> = Vec::with_capacity(lines.len());
    let mut breaks: Vec<f64> = Vec::with_capacity(lines.len());
    // steepest first: it is the minimum far to the left
    for &line in lines.iter().rev() {
        if let Some(top) = hull.last() {
            if top.slope == line.slope {
                if line.intercept >= top.intercept {
                    continue;
                }
                hull.pop();
                breaks.pop();
            }
        }
        while let Some(top) = hull.last() {
            let x = crossing(top, &line);
            match breaks.last() {
                Some(&b) if x <= b => {
                    hull.pop();
                    breaks.pop();
                }
                _ => {
                    if !hull.is_empty() {
                        breaks.push(x);
                    }
                    break;
                }
            }
        }
        hull.push(line);
    }
    breaks.truncate(hull.len() - 1);
    LowerEnvelope {
        lines: hull,
        breaks,
    }
}

fn crossing(a: &Line, b: &Line) -> f64 {
    (b.intercept - a.intercept) / (a.slope - b.slope)
}

/// Sorts the values of every index set with one global sort.
///
/// Returns, per set, its indices ordered by non-decreasing value (ties by
/// index).
pub fn multi_sort(values: &[f64], sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut member_of: Vec<Vec<usize>> = vec![Vec::new(); values.len()];
    for (s, set) in sets.iter().enumerate() {
        for &i in set {
            member_of[i].push(s);
        }
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out: Vec<Vec<usize>> = sets.iter().map(|s| Vec::with_capacity(s.len())).collect();
    for i in order {
        for &s in &member_of[i] {
            out[s].push(i);
        }
    }
    out
}
