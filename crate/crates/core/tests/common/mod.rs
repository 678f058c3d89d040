//! Random generators and independent oracles shared by integration tests and
//! the acceptance target.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdroute_core::plf::{compose, Atf, PiecewiseLinear, StepCost};
use tdroute_core::scheduler::{CostModel, OvertimeCost};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of randomly drawn ATFs.
#[derive(Clone, Copy, Debug)]
pub struct AtfShape {
    pub t_lo: f64,
    pub t_hi: f64,
    pub max_travel: f64,
    pub max_bp: usize,
    pub with_cost: bool,
}

impl Default for AtfShape {
    fn default() -> Self {
        AtfShape {
            t_lo: 0.0,
            t_hi: 100.0,
            max_travel: 30.0,
            max_bp: 8,
            with_cost: true,
        }
    }
}

pub fn random_atf(rng: &mut ChaCha8Rng, shape: AtfShape) -> Atf {
    let b = rng.gen_range(1..=shape.max_bp);
    let span = shape.t_hi - shape.t_lo;
    let mut ts: Vec<f64> = (0..b).map(|_| shape.t_lo + rng.gen::<f64>() * span).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| *a - *b < 1e-3);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(ts.len());
    for &t in &ts {
        let prev = pts.last().map_or(f64::NEG_INFINITY, |p| p.1);
        let v = if prev >= t && rng.gen_bool(0.25) {
            prev
        } else {
            (t + rng.gen::<f64>() * shape.max_travel).max(prev)
        };
        pts.push((t, v));
    }
    let a = Atf::new(&pts).expect("generated ATF is valid");
    if shape.with_cost && rng.gen_bool(0.7) {
        let c = random_cost(rng, shape.t_lo - 10.0, shape.t_hi + shape.max_travel);
        a.with_cost(c)
    } else {
        a
    }
}

pub fn random_cost(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> StepCost {
    let k = rng.gen_range(0..4);
    let mut starts: Vec<f64> = (0..k).map(|_| lo + rng.gen::<f64>() * (hi - lo)).collect();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    let mut pieces = vec![(f64::NEG_INFINITY, rng.gen_range(0..5) as f64)];
    for s in starts {
        pieces.push((s, rng.gen_range(0..5) as f64));
    }
    StepCost::from_pieces(&pieces).unwrap()
}

pub fn random_pwl(rng: &mut ChaCha8Rng, segments: usize, x0: f64, xm: f64) -> PiecewiseLinear {
    let mut xs: Vec<f64> = (0..segments.saturating_sub(1))
        .map(|_| x0 + rng.gen::<f64>() * (xm - x0))
        .collect();
    xs.push(x0);
    xs.push(xm);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| *a - *b < 0.05);
    if *xs.last().unwrap() < xm {
        xs.pop();
        xs.push(xm);
    }
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, rng.gen_range(-50.0..50.0))).collect();
    PiecewiseLinear::new(&pts).unwrap()
}

/// `count + 1` evenly spaced points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..=count).map(move |i| lo + (hi - lo) * i as f64 / count as f64)
}

/// Left fold `list[n-1] ∘ ... ∘ list[0]`.
pub fn fold_compose(list: &[Atf]) -> Option<Atf> {
    let mut acc = list[0].clone();
    for a in &list[1..] {
        acc = compose(&acc, a).ok()?;
    }
    Some(acc)
}

/// Arrival and cost of running `list` in order from departure `t`, or `None`
/// if some step is out of domain.
pub fn run_chain(list: &[Atf], t: f64) -> Option<(f64, f64)> {
    let (mut x, mut c) = (t, 0.0);
    for a in list {
        if x > a.t_max() + 1e-9 {
            return None;
        }
        c += a.eval_cost(x);
        x = a.eval(x).ok()?;
    }
    Some((x, c))
}

/// Checks `got` against the pointwise chain evaluation at its breakpoints,
/// at the inputs' breakpoints and on a grid of `samples` points.
pub fn check_against_chain(list: &[Atf], got: &Atf, samples: usize, tol: f64) -> Result<(), String> {
    let lo = list[0].t_min() - 5.0;
    let hi = got.t_max();
    let mut probe: Vec<f64> = got.ts().to_vec();
    probe.extend(grid(lo, hi, samples));
    for a in list {
        probe.extend(a.ts().iter().copied().filter(|&t| t <= hi));
    }
    for t in probe {
        let Some((want, _)) = run_chain(list, t) else {
            return Err(format!("chain undefined at {t} inside result domain"));
        };
        let v = got.eval(t).map_err(|e| e.to_string())?;
        if (v - want).abs() > tol * (1.0 + want.abs()) {
            return Err(format!("at t={t}: got {v}, want {want}"));
        }
    }
    // the domain must not stop early
    let beyond = hi + 1e-6 * (1.0 + hi.abs());
    if beyond < list[0].t_max() && run_chain(list, beyond).is_some() {
        return Err(format!("domain ends at {hi} but chain is defined at {beyond}"));
    }
    Ok(())
}

/// Cost agreement away from jumps (at jumps the stored value is the smaller
/// one-sided limit, which pointwise chaining does not reproduce).
pub fn check_cost_against_chain(list: &[Atf], got: &Atf, samples: usize) -> Result<(), String> {
    let lo = list[0].t_min() - 5.0;
    let hi = got.t_max();
    for t in grid(lo, hi, samples) {
        if got.cost().jumps().iter().any(|&j| (j - t).abs() < 1e-6) {
            continue;
        }
        let Some((_, want)) = run_chain(list, t) else { continue };
        let c = got.eval_cost(t);
        if (c - want).abs() > 1e-9 {
            // pointwise chaining can land exactly on an inner jump
            let near_jump = list.iter().any(|a| !a.cost().jumps().is_empty());
            if !near_jump {
                return Err(format!("cost at {t}: got {c}, want {want}"));
            }
            let (l, r) = (run_chain(list, t - 1e-7), run_chain(list, t + 1e-7));
            let ok = [l, r].iter().flatten().any(|&(_, w)| (w - c).abs() <= 1e-9);
            if !ok {
                return Err(format!("cost at {t}: got {c}, want {want}"));
            }
        }
    }
    Ok(())
}

/// Minimum breakpoint count of a monotone `g` with `f <= g <= f + eps`,
/// searched over polylines whose vertices lie on a grid inside the corridor.
///
/// Abscissae are `f`'s breakpoints plus `sub` subdivisions per segment;
/// ordinates are `levels + 1` evenly spaced heights per abscissa plus the
/// height `f(t_min) + eps`.
pub fn min_breakpoints_grid(f: &Atf, eps: f64, sub: usize, levels: usize) -> usize {
    let (ts, vs) = (f.ts(), f.vs());
    let n = ts.len();
    let t_max = ts[n - 1];
    let top0 = vs[0] + eps;
    if vs[n - 1] <= top0 {
        return 1;
    }
    let mut xs = Vec::new();
    for i in 0..n - 1 {
        for k in 0..sub {
            xs.push(ts[i] + (ts[i + 1] - ts[i]) * k as f64 / sub as f64);
        }
    }
    xs.push(t_max);
    let mut verts: Vec<(f64, f64)> = Vec::new();
    for &x in &xs {
        let lo = f.eval_clamped(x);
        for l in 0..=levels {
            verts.push((x, lo + eps * l as f64 / levels as f64));
        }
        if top0 >= lo && top0 <= lo + eps {
            verts.push((x, top0));
        }
    }
    let tol = 1e-12;
    let seg_ok = |p: (f64, f64), q: (f64, f64)| {
        if !(q.0 > p.0) || q.1 < p.1 {
            return false;
        }
        for k in 0..n {
            if ts[k] > p.0 && ts[k] < q.0 {
                let y = p.1 + (q.1 - p.1) * (ts[k] - p.0) / (q.0 - p.0);
                if y < vs[k] - tol || y > vs[k] + eps + tol {
                    return false;
                }
            }
        }
        true
    };
    let m = verts.len();
    let mut dist = vec![usize::MAX; m];
    let mut frontier: Vec<usize> = Vec::new();
    for (i, &(_, y)) in verts.iter().enumerate() {
        if y <= top0 + tol {
            dist[i] = 1;
            frontier.push(i);
        }
    }
    let mut layer = 1;
    loop {
        if frontier.iter().any(|&i| verts[i].0 == t_max) {
            return layer;
        }
        if frontier.is_empty() {
            return usize::MAX;
        }
        let mut next = Vec::new();
        for q in 0..m {
            if dist[q] != usize::MAX {
                continue;
            }
            if frontier.iter().any(|&p| seg_ok(verts[p], verts[q])) {
                dist[q] = layer + 1;
                next.push(q);
            }
        }
        frontier = next;
        layer += 1;
    }
}

/// Checks `f <= g <= f + eps` at `samples` points and at both breakpoint sets.
pub fn check_sandwich(f: &Atf, g: &Atf, eps: f64, samples: usize) -> Result<(), String> {
    if (g.t_max() - f.t_max()).abs() > 1e-9 {
        return Err(format!("domain end {} vs {}", g.t_max(), f.t_max()));
    }
    let lo = f.t_min().min(g.t_min()) - 1.0;
    let mut probe: Vec<f64> = grid(lo, f.t_max(), samples).collect();
    probe.extend(f.ts());
    probe.extend(g.ts());
    let tol = 1e-9 * (1.0 + f.vs().last().unwrap().abs());
    for t in probe {
        let (fv, gv) = (f.eval_clamped(t), g.eval_clamped(t));
        if gv < fv - tol || gv > fv + eps + tol {
            return Err(format!("at t={t}: f={fv} g={gv} eps={eps}"));
        }
    }
    Ok(())
}

/// Area between `g` and `f` over `[f.t_min, t_max]` by the trapezoid rule on
/// the merged breakpoints (exact for piecewise-linear integrands).
pub fn area_between(f: &Atf, g: &Atf) -> f64 {
    let mut xs: Vec<f64> = f.ts().iter().chain(g.ts()).copied().collect();
    xs.retain(|&x| x >= f.t_min());
    xs.push(f.t_min());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| {
            let d0 = g.eval_clamped(w[0]) - f.eval_clamped(w[0]);
            let d1 = g.eval_clamped(w[1]) - f.eval_clamped(w[1]);
            (d0 + d1) / 2.0 * (w[1] - w[0])
        })
        .sum()
}

pub fn random_model(rng: &mut ChaCha8Rng, t_lo: f64, t_hi: f64) -> CostModel {
    let k = rng.gen_range(1..=4);
    let mut pts = vec![(0.0, 0.0)];
    for _ in 1..k {
        let (d, c) = *pts.last().unwrap();
        pts.push((d + rng.gen_range(1.0..20.0), c + rng.gen_range(0.0..10.0)));
    }
    let overtime = OvertimeCost::new(&pts, rng.gen_range(0.0..3.0)).unwrap();
    let jumps = rng.gen_range(0..4);
    let mut starts: Vec<f64> = (0..jumps).map(|_| rng.gen_range(t_lo..t_hi)).collect();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    let mut pieces = vec![(f64::NEG_INFINITY, rng.gen_range(0.0..60.0))];
    pieces.extend(starts.into_iter().map(|s| (s, rng.gen_range(0.0..60.0))));
    CostModel {
        overtime,
        work_rate: StepCost::from_pieces(&pieces).unwrap(),
    }
}

/// Work-time integral by splitting at the rate's jumps and sampling each
/// piece at its midpoint.
pub fn oracle_work_time(rate: &StepCost, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = vec![lo];
    cuts.extend(rate.jumps().iter().copied().filter(|&s| s > lo && s < hi));
    cuts.push(hi);
    cuts.windows(2)
        .map(|w| rate.eval(0.5 * (w[0] + w[1])) * (w[1] - w[0]))
        .sum::<f64>()
        / 3600.0
}

pub fn oracle_total(a: &Atf, model: &CostModel, t: f64) -> f64 {
    let arrival = a.eval(t).unwrap();
    a.eval_cost(t) + model.overtime.eval(arrival - t) + oracle_work_time(&model.work_rate, t, arrival)
}

/// Brute-force candidate start times: all breakpoints and jumps, a uniform
/// grid, and sign changes of `a(t) - t - d` and `a(t) - s` located by
/// linear interpolation between neighbouring candidates.
pub struct ScheduleOracle {
    pub events: Vec<f64>,
    pub grid: Vec<f64>,
}

impl ScheduleOracle {
    pub fn new(a: &Atf, model: &CostModel, grid_points: usize) -> Self {
        let (lo, hi) = (a.t_min(), a.t_max());
        let mut base: Vec<f64> = a.ts().to_vec();
        base.extend(a.cost().jumps().iter().copied());
        base.extend(model.work_rate.jumps().iter().copied());
        base.retain(|&t| t >= lo && t <= hi);
        let grid: Vec<f64> = if hi > lo { grid(lo, hi, grid_points).collect() } else { vec![lo] };
        let mut all: Vec<f64> = base.iter().chain(&grid).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        let durations: Vec<f64> = model.overtime.breakpoints().collect();
        let levels: Vec<f64> = model.work_rate.jumps().to_vec();
        let mut events = base;
        for w in all.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (ap, aq) = (a.eval(p).unwrap(), a.eval(q).unwrap());
            for &d in &durations {
                let (fp, fq) = (ap - p - d, aq - q - d);
                if fp * fq < 0.0 {
                    events.push(p + (q - p) * fp / (fp - fq));
                }
            }
            for &s in &levels {
                let (fp, fq) = (ap - s, aq - s);
                if fp * fq < 0.0 {
                    events.push(p + (q - p) * fp / (fp - fq));
                }
            }
        }
        events.sort_by(f64::total_cmp);
        events.dedup();
        ScheduleOracle { events, grid }
    }

    /// Minimum cost over all candidates.
    pub fn best(&self, a: &Atf, model: &CostModel) -> f64 {
        self.events
            .iter()
            .chain(&self.grid)
            .map(|&t| oracle_total(a, model, t))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Random routing instance: a depot and `items` stops (two per item with
/// pickups) in a 100 x 100 square. With `td` the arcs follow random hourly
/// speed profiles and vehicles pay for time; otherwise travel is constant
/// and the distance is the attached cost.
pub fn random_instance(rng: &mut ChaCha8Rng, items: usize, vehicles: usize, pickups: bool, td: bool) -> tdroute_core::solver::Instance {
    use tdroute_core::bench_io::SpeedProfile;
    use tdroute_core::solver::{Instance, Item, Stop, Vehicle};
    let stops_per_item = if pickups { 2 } else { 1 };
    let n = 1 + items * stops_per_item;
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))).collect();
    let horizon = 1000.0;
    let profiles: Vec<SpeedProfile> = (0..3)
        .map(|_| SpeedProfile::new((0..4).map(|_| rng.gen_range(0.4..1.0)).collect()).unwrap())
        .collect();
    let scale = if td { 360.0 } else { 1.0 };
    let mut matrix = Vec::with_capacity(n * n);
    for a in &pts {
        for b in &pts {
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            let atf = if td {
                let p = &profiles[rng.gen_range(0..profiles.len())];
                // hours scaled down so that a tour crosses several speed changes
                let f = p.arrival_function(d * scale, 0.0, horizon * scale);
                Atf::new(&f.breakpoints().map(|(t, v)| (t / scale, v / scale)).collect::<Vec<_>>()).unwrap()
            } else {
                Atf::constant_travel(d, 0.0, horizon).with_cost(StepCost::constant(d))
            };
            matrix.push(atf);
        }
    }
    let window = |rng: &mut ChaCha8Rng| {
        let open = rng.gen_range(0.0..600.0);
        let width = rng.gen_range(60.0..400.0);
        (open, open + width)
    };
    let mut list = Vec::with_capacity(items);
    for i in 0..items {
        let (o, c) = window(rng);
        let delivery_addr = 1 + i * stops_per_item + stops_per_item - 1;
        let pickup = pickups.then(|| {
            let (po, pc) = (o * 0.5, c * 0.5 + 100.0);
            Stop { address: 1 + i * stops_per_item, open: po, close: pc, duration: rng.gen_range(0.0..10.0) }
        });
        list.push(Item {
            id: i,
            pickup,
            delivery: Stop { address: delivery_addr, open: o, close: c, duration: rng.gen_range(0.0..10.0) },
            demand: vec![rng.gen_range(1.0..10.0)],
            unserved_penalty: 1e4,
        });
    }
    let vehicles = (0..vehicles)
        .map(|id| Vehicle {
            id,
            start_address: 0,
            end_address: 0,
            fixed_cost: 100.0,
            time_cost_rate: if td { 20.0 } else { 0.0 },
            availability: (0.0, horizon),
            max_duration: None,
            capacity: vec![30.0],
        })
        .collect();
    Instance { name: "random".into(), addresses: n, matrix, items: list, vehicles }
}
