use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::atf::interpolate;
use super::envelope::{envelope_affine, multi_sort, Line};
use super::{Atf, PiecewiseLinear, PlfError, StepCost, EPS_T};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    First,
    Second,
    Tie,
}

/// Evaluates a breakpoint list, constant outside its range, at non-decreasing
/// arguments.
struct Cursor<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    k: usize,
}

impl<'a> Cursor<'a> {
    fn new(xs: &'a [f64], ys: &'a [f64]) -> Self {
        Cursor { xs, ys, k: 0 }
    }

    fn at(&mut self, x: f64) -> f64 {
        while self.k < self.xs.len() && self.xs[self.k] <= x {
            self.k += 1;
        }
        let k = self.k;
        if k == 0 {
            self.ys[0]
        } else if k == self.xs.len() {
            self.ys[k - 1]
        } else {
            interpolate(self.xs[k - 1], self.ys[k - 1], self.xs[k], self.ys[k], x)
        }
    }
}

/// Pointwise minimum of two functions on `[x_start, x_end]`, plus the argmin
/// regions as `(start, side)` with the first region open to the left.
fn pair_min(
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
    x_start: f64,
    x_end: f64,
) -> (Vec<(f64, f64)>, Vec<(f64, Side)>) {
    let mut xs: Vec<f64> = Vec::with_capacity(a.0.len() + b.0.len() + 2);
    {
        let (mut i, mut j) = (0, 0);
        xs.push(x_start);
        loop {
            let xa = a.0.get(i).copied().unwrap_or(f64::INFINITY);
            let xb = b.0.get(j).copied().unwrap_or(f64::INFINITY);
            let x = xa.min(xb);
            if x >= x_end {
                break;
            }
            if xa == x {
                i += 1;
            }
            if xb == x {
                j += 1;
            }
            if x > *xs.last().unwrap() {
                xs.push(x);
            }
        }
        if x_end > *xs.last().unwrap() {
            xs.push(x_end);
        }
    }
    let mut ca = Cursor::new(a.0, a.1);
    let mut cb = Cursor::new(b.0, b.1);
    let vals: Vec<(f64, f64)> = xs.iter().map(|&x| (ca.at(x), cb.at(x))).collect();

    let side_of = |d: f64, scale: f64| {
        let tol = 1e-12 * scale.abs().max(1.0);
        if d < -tol {
            Side::First
        } else if d > tol {
            Side::Second
        } else {
            Side::Tie
        }
    };

    let mut pts = Vec::with_capacity(2 * xs.len());
    let mut regions: Vec<(f64, Side)> = Vec::with_capacity(2 * xs.len());
    let (ya0, yb0) = vals[0];
    pts.push((xs[0], ya0.min(yb0)));
    regions.push((f64::NEG_INFINITY, side_of(ya0 - yb0, ya0)));
    let push_region = |regions: &mut Vec<(f64, Side)>, x: f64, s: Side| {
        if regions.last().unwrap().1 != s {
            regions.push((x, s));
        }
    };
    for i in 0..xs.len() - 1 {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (ya0, yb0) = vals[i];
        let (ya1, yb1) = vals[i + 1];
        let (d0, d1) = (ya0 - yb0, ya1 - yb1);
        if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
            let r = d0 / (d0 - d1);
            let xc = x0 + (x1 - x0) * r;
            if xc > x0 && xc < x1 {
                let yc = ya0 + (ya1 - ya0) * r;
                push_region(&mut regions, x0, side_of(d0 / 2.0, ya0));
                pts.push((xc, yc));
                push_region(&mut regions, xc, side_of(d1 / 2.0, ya1));
                pts.push((x1, ya1.min(yb1)));
                continue;
            }
        }
        push_region(&mut regions, x0, side_of((d0 + d1) / 2.0, ya0));
        pts.push((x1, ya1.min(yb1)));
    }
    (pts, regions)
}

/// Cost following the argmin regions; ties take the cheaper cost.
fn region_cost(regions: &[(f64, Side)], ca: &StepCost, cb: &StepCost, x_end: f64) -> StepCost {
    let mut cuts: Vec<f64> = regions[1..].iter().map(|r| r.0).collect();
    cuts.extend(ca.jumps().iter().copied().filter(|&x| x < x_end));
    cuts.extend(cb.jumps().iter().copied().filter(|&x| x < x_end));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let value_at = |m: f64| {
        let r = regions.partition_point(|reg| reg.0 <= m) - 1;
        match regions[r].1 {
            Side::First => ca.eval(m),
            Side::Second => cb.eval(m),
            Side::Tie => ca.eval(m).min(cb.eval(m)),
        }
    };
    let mut starts = vec![f64::NEG_INFINITY];
    let mut values = Vec::with_capacity(cuts.len() + 1);
    values.push(value_at(cuts.first().map_or(0.0, |&c| c - 1.0)));
    for (i, &c) in cuts.iter().enumerate() {
        let m = match cuts.get(i + 1) {
            Some(&n) => c + (n - c) / 2.0,
            None => c + 1.0,
        };
        starts.push(c);
        values.push(value_at(m));
    }
    StepCost::normalized(starts, values).truncated(x_end)
}

/// Pointwise minimum on `(-inf, min(t_max))`, with the cost of the faster
/// function (the cheaper one where both arrive together).
pub fn min2(a: &Atf, b: &Atf) -> Atf {
    let x_start = a.t_min().min(b.t_min());
    let x_end = a.t_max().min(b.t_max());
    let x_start = x_start.min(x_end);
    let (pts, regions) = pair_min((a.ts(), a.vs()), (b.ts(), b.vs()), x_start, x_end);
    let cost = region_cost(&regions, a.cost(), b.cost(), x_end);
    let (ts, vs) = pts.into_iter().unzip();
    Atf::from_raw(ts, vs, cost)
}

impl PiecewiseLinear {
    /// Pointwise minimum on the common part of the two domains.
    pub fn min2(&self, other: &PiecewiseLinear) -> Result<PiecewiseLinear, PlfError> {
        let (a0, a1) = self.domain();
        let (b0, b1) = other.domain();
        let (lo, hi) = (a0.max(b0), a1.min(b1));
        if hi < lo - EPS_T {
            return Err(PlfError::MismatchedDomain);
        }
        let hi = hi.max(lo);
        let (pts, _) = pair_min((self.xs(), self.ys()), (other.xs(), other.ys()), lo, hi);
        Ok(PiecewiseLinear::from_points(&pts))
    }
}

struct Segment {
    line: Line,
}

/// Exact pointwise minimum of functions sharing one compact domain.
///
/// Follows the interval-tree scheme: functions are assigned to tree nodes on
/// which they are affine, each node takes the lower envelope of its lines,
/// and each leaf merges the envelopes of its ancestors. Coincident inner
/// breakpoints of different functions are ordered by function index, which
/// may produce leaves of zero length.
pub fn min_n(list: &[PiecewiseLinear]) -> Result<PiecewiseLinear, PlfError> {
    let Some(first) = list.first() else {
        return Err(PlfError::Invalid("minimum of no functions".into()));
    };
    let (x0, xm) = first.domain();
    for f in list {
        let (lo, hi) = f.domain();
        if (lo - x0).abs() > EPS_T || (hi - xm).abs() > EPS_T {
            return Err(PlfError::MismatchedDomain);
        }
    }
    if list.len() == 1 {
        return Ok(first.clone());
    }
    if xm - x0 <= EPS_T {
        let y = list.iter().map(|f| f.ys()[0]).fold(f64::INFINITY, f64::min);
        return Ok(PiecewiseLinear::from_points(&[(x0, y)]));
    }
    let n = list.len();

    // segments in local coordinates u = x - x0
    let mut seg_base = Vec::with_capacity(n);
    let mut segments: Vec<Segment> = Vec::new();
    for f in list {
        seg_base.push(segments.len());
        let (xs, ys) = (f.xs(), f.ys());
        for r in 0..xs.len() - 1 {
            let s = (ys[r + 1] - ys[r]) / (xs[r + 1] - xs[r]);
            let c = ys[r] - s * (xs[r] - x0);
            segments.push(Segment {
                line: Line::new(s, c),
            });
        }
    }

    // inner breakpoints merged by (x, function)
    let mut events: Vec<(f64, usize)> = Vec::new();
    let mut heap = BinaryHeap::new();
    for (h, f) in list.iter().enumerate() {
        if f.len() > 2 {
            heap.push(HeapItem { x: f.xs()[1], h, r: 1 });
        }
    }
    while let Some(HeapItem { x, h, r }) = heap.pop() {
        events.push((x, h));
        let xs = list[h].xs();
        if r + 2 < xs.len() {
            heap.push(HeapItem { x: xs[r + 1], h, r: r + 1 });
        }
    }
    // event positions per function, for active-segment lookup
    let mut own_events: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(_, h)) in events.iter().enumerate() {
        own_events[h].push(e);
    }
    let n_leaves = events.len() + 1;
    let leaf_lo = |l: usize| match l {
        0 => x0,
        l if l - 1 < events.len() => events[l - 1].0,
        _ => xm,
    };
    let leaf_hi = |l: usize| if l >= events.len() { xm } else { events[l].0 };

    let mut k = 1;
    while (1usize << k) < n + 1 {
        k += 1;
    }
    let chunk = 1usize << k;
    let padded = chunk - 1;

    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut c_lo = 0;
    while c_lo < n_leaves {
        let ctx = ChunkContext {
            events: &events,
            own_events: &own_events,
            seg_base: &seg_base,
            n,
            n_leaves,
        };
        let mut nodes: Vec<Node> = Vec::new();
        let funcs: Vec<usize> = (0..padded).collect();
        assign(&ctx, c_lo, c_lo + chunk, funcs, &mut nodes);

        // per-node envelopes over slope-sorted lines
        let values: Vec<f64> = segments.iter().map(|s| s.line.slope).collect();
        let sets: Vec<Vec<usize>> = nodes.iter().map(|nd| nd.segs.clone()).collect();
        let sorted = multi_sort(&values, &sets);
        let envelopes: Vec<Option<super::LowerEnvelope>> = sorted
            .iter()
            .map(|ids| {
                if ids.is_empty() {
                    None
                } else {
                    let lines: Vec<Line> = ids.iter().map(|&i| segments[i].line).collect();
                    Some(envelope_affine(&lines))
                }
            })
            .collect();

        // candidate pieces per real leaf of the chunk
        let c_hi = (c_lo + chunk).min(n_leaves);
        let mut pieces: Vec<Line> = Vec::new();
        let mut leaf_sets: Vec<Vec<usize>> = vec![Vec::new(); c_hi - c_lo];
        for (nd, env) in nodes.iter().zip(&envelopes) {
            let Some(env) = env else { continue };
            let breaks: Vec<f64> = env.breaks().iter().map(|b| b + x0).collect();
            let mut p = 0;
            for l in nd.lo..nd.hi.min(c_hi) {
                let (lo, hi) = (leaf_lo(l), leaf_hi(l));
                if hi <= lo {
                    continue;
                }
                while p < breaks.len() && breaks[p] <= lo {
                    p += 1;
                }
                let mut q = p;
                loop {
                    pieces.push(env.lines()[q]);
                    leaf_sets[l - c_lo].push(pieces.len() - 1);
                    if q < breaks.len() && breaks[q] < hi {
                        q += 1;
                    } else {
                        break;
                    }
                }
            }
        }
        let values: Vec<f64> = pieces.iter().map(|l| l.slope).collect();
        let sorted = multi_sort(&values, &leaf_sets);
        for (off, ids) in sorted.iter().enumerate() {
            let l = c_lo + off;
            let (lo, hi) = (leaf_lo(l), leaf_hi(l));
            if hi <= lo || ids.is_empty() {
                continue;
            }
            let lines: Vec<Line> = ids.iter().map(|&i| pieces[i]).collect();
            let env = envelope_affine(&lines);
            let local = env.to_pwl(lo - x0, hi - x0);
            for (u, y) in local.points() {
                let x = u + x0;
                match out.last() {
                    Some(&(px, _)) if x <= px + EPS_T => {}
                    _ => out.push((x, y)),
                }
            }
        }
        c_lo += chunk;
    }
    if out.last().is_none_or(|p| p.0 < xm) {
        let y = list.iter().map(|f| f.eval_clamped(xm)).fold(f64::INFINITY, f64::min);
        out.push((xm, y));
    }
    Ok(PiecewiseLinear::from_points(&out))
}

struct ChunkContext<'a> {
    events: &'a [(f64, usize)],
    own_events: &'a [Vec<usize>],
    seg_base: &'a [usize],
    n: usize,
    n_leaves: usize,
}

impl ChunkContext<'_> {
    /// Does function `h` have an event strictly inside leaves `[lo, hi)`?
    fn bends_inside(&self, h: usize, lo: usize, hi: usize) -> bool {
        if h >= self.n {
            return false;
        }
        // boundary between leaf l and l + 1 is event l
        let (e_lo, e_hi) = (lo, hi.saturating_sub(1).min(self.events.len()));
        if e_lo >= e_hi {
            return false;
        }
        let ev = &self.own_events[h];
        let i = ev.partition_point(|&e| e < e_lo);
        i < ev.len() && ev[i] < e_hi
    }

    /// Segment of `h` active on leaf `l`.
    fn active_segment(&self, h: usize, l: usize) -> usize {
        let l = l.min(self.n_leaves - 1);
        self.seg_base[h] + self.own_events[h].partition_point(|&e| e < l)
    }
}

struct Node {
    lo: usize,
    hi: usize,
    segs: Vec<usize>,
}

/// Splits `[lo, hi)` into halves; each half keeps half of its leaf count in
/// functions that are affine on it and passes the rest down.
fn assign(ctx: &ChunkContext, lo: usize, hi: usize, funcs: Vec<usize>, nodes: &mut Vec<Node>) {
    if hi - lo <= 1 {
        debug_assert!(funcs.is_empty());
        return;
    }
    let mid = lo + (hi - lo) / 2;
    for (a, b) in [(lo, mid), (mid, hi)] {
        let need = b - a;
        let mut chosen = Vec::with_capacity(need);
        let mut rest = Vec::with_capacity(funcs.len());
        for &h in &funcs {
            if chosen.len() < need && !ctx.bends_inside(h, a, b) {
                chosen.push(h);
            } else {
                rest.push(h);
            }
        }
        debug_assert_eq!(chosen.len(), need, "not enough affine functions");
        let segs = chosen
            .iter()
            .filter(|&&h| h < ctx.n)
            .map(|&h| ctx.active_segment(h, a))
            .collect();
        nodes.push(Node { lo: a, hi: b, segs });
        assign(ctx, a, b, rest, nodes);
    }
}

#[derive(PartialEq)]
struct HeapItem {
    x: f64,
    h: usize,
    r: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (x, h)
        other.x.total_cmp(&self.x).then(other.h.cmp(&self.h))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
