use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{number, tokens, ParseError};
use crate::plf::{default_epsilon, simplify, Atf};
use crate::solver::{Instance, Stop, Vehicle};

const HOUR: f64 = 3600.0;

/// Fractions of free-flow speed for each hour from midnight; hours past
/// the end run at free flow.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub multipliers: Vec<f64>,
}

impl SpeedProfile {
    pub fn new(multipliers: Vec<f64>) -> Result<SpeedProfile, String> {
        if multipliers.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err("speed multipliers must be positive".into());
        }
        Ok(SpeedProfile { multipliers })
    }

    pub fn free_flow() -> SpeedProfile {
        SpeedProfile { multipliers: Vec::new() }
    }

    fn speed(&self, hour: usize) -> f64 {
        self.multipliers.get(hour).copied().unwrap_or(1.0)
    }

    /// Free-flow seconds covered between time 0 and `t`.
    fn progress(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return t;
        }
        let mut acc = 0.0;
        let full = (t / HOUR).floor() as usize;
        for h in 0..full.min(self.multipliers.len()) {
            acc += self.speed(h) * HOUR;
        }
        if full >= self.multipliers.len() {
            acc + (t - self.multipliers.len() as f64 * HOUR)
        } else {
            acc + self.speed(full) * (t - full as f64 * HOUR)
        }
    }

    /// Inverse of `progress`.
    fn time_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return s;
        }
        let mut acc = 0.0;
        for h in 0..self.multipliers.len() {
            let step = self.speed(h) * HOUR;
            if acc + step >= s {
                return h as f64 * HOUR + (s - acc) / self.speed(h);
            }
            acc += step;
        }
        self.multipliers.len() as f64 * HOUR + (s - acc)
    }

    /// Arrival time function for `free_flow` seconds of driving, departing
    /// in `[lo, hi]`.
    pub fn arrival_function(&self, free_flow: f64, lo: f64, hi: f64) -> Atf {
        let mut cand = vec![lo, hi];
        for h in 0..=self.multipliers.len() {
            let b = h as f64 * HOUR;
            cand.push(b);
            cand.push(self.time_at(self.progress(b) - free_flow));
        }
        cand.retain(|&t| t >= lo && t <= hi);
        cand.sort_by(f64::total_cmp);
        cand.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let pts: Vec<(f64, f64)> = cand
            .iter()
            .map(|&t| (t, self.time_at(self.progress(t) + free_flow)))
            .collect();
        Atf::new(&pts).expect("integrated speeds give a FIFO function")
    }
}

/// Three hourly patterns with an evening rush of increasing severity.
pub fn default_profiles() -> Vec<SpeedProfile> {
    let mut light = vec![1.0; 24];
    let mut busy = vec![1.0; 24];
    let mut heavy = vec![1.0; 24];
    for (h, (l, b, x)) in [
        (15, (0.9, 0.8, 0.7)),
        (16, (0.8, 0.55, 0.45)),
        (17, (0.75, 0.45, 0.35)),
        (18, (0.8, 0.5, 0.4)),
        (19, (0.9, 0.7, 0.6)),
        (20, (1.0, 0.9, 0.8)),
    ] {
        light[h] = l;
        busy[h] = b;
        heavy[h] = x;
    }
    vec![SpeedProfile { multipliers: light }, SpeedProfile { multipliers: busy }, SpeedProfile { multipliers: heavy }]
}

/// One profile per non-empty line, multipliers separated by whitespace;
/// `#` starts a comment line.
pub fn parse_profiles(text: &str) -> Result<Vec<SpeedProfile>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let values = tokens(line).into_iter().map(|t| number(i + 1, t)).collect::<Result<Vec<_>, _>>()?;
        out.push(SpeedProfile::new(values).map_err(|e| ParseError::new(i + 1, 1, e))?);
    }
    if out.is_empty() {
        return Err(ParseError::new(1, 1, "no speed profiles"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdOptions {
    /// Free-flow seconds per unit of base travel time.
    pub seconds_per_unit: f64,
    /// Earliest tour start and departure-domain start (seconds from midnight).
    pub day_start: f64,
    /// End of the departure domain of every arc.
    pub day_end: f64,
    /// Replace windows by the evening delivery scheme; otherwise base
    /// windows are scaled and shifted to `day_start`.
    pub regenerate_windows: bool,
    pub one_hour_share: f64,
    pub service: f64,
    pub fixed_cost: f64,
    pub hourly_rate: f64,
    pub unserved_penalty: f64,
}

impl Default for TdOptions {
    fn default() -> Self {
        TdOptions {
            seconds_per_unit: 20.0,
            day_start: 15.0 * HOUR,
            day_end: 26.0 * HOUR,
            regenerate_windows: true,
            one_hour_share: 0.5,
            service: 180.0,
            fixed_cost: 200.0,
            hourly_rate: 20.0,
            unserved_penalty: 1e5,
        }
    }
}

/// Time-dependent version of a constant-travel instance: each address
/// pair gets a random profile (the same in both directions) and its travel
/// time becomes the exact integral of that profile, then simplified. Items
/// become deliveries from pre-loaded vehicles without capacity limits.
pub fn generate_td(base: &Instance, profiles: &[SpeedProfile], seed: u64, opts: &TdOptions) -> Instance {
    assert!(!profiles.is_empty(), "at least one speed profile");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.addresses;
    let mut choice = vec![0usize; n * n];
    for p in 0..n {
        for q in p..n {
            let k = rng.gen_range(0..profiles.len());
            choice[p * n + q] = k;
            choice[q * n + p] = k;
        }
    }
    let mut matrix = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            let free = base.arc(p, q).travel_bounds().lo * opts.seconds_per_unit;
            let exact = profiles[choice[p * n + q]].arrival_function(free, opts.day_start, opts.day_end);
            let eps = default_epsilon(&exact);
            let atf = if eps > 0.0 && exact.len() > 2 { simplify(&exact, eps).unwrap_or(exact) } else { exact };
            matrix.push(atf);
        }
    }
    let scale = |t: f64| opts.day_start + t * opts.seconds_per_unit;
    let open = opts.day_start + 0.5 * HOUR;
    let items = base
        .items
        .iter()
        .map(|it| {
            let delivery = if opts.regenerate_windows {
                let (o, c) = if rng.gen::<f64>() < opts.one_hour_share {
                    let start = open + 0.5 * HOUR * rng.gen_range(0..10) as f64;
                    (start, start + HOUR)
                } else {
                    (open, open + 5.5 * HOUR)
                };
                Stop { address: it.delivery.address, open: o, close: c, duration: opts.service }
            } else {
                Stop {
                    address: it.delivery.address,
                    open: scale(it.delivery.open),
                    close: scale(it.delivery.close),
                    duration: it.delivery.duration * opts.seconds_per_unit,
                }
            };
            crate::solver::Item {
                id: it.id,
                pickup: None,
                delivery,
                demand: Vec::new(),
                unserved_penalty: opts.unserved_penalty,
            }
        })
        .collect();
    let vehicles = base
        .vehicles
        .iter()
        .map(|v| Vehicle {
            id: v.id,
            start_address: v.start_address,
            end_address: v.end_address,
            fixed_cost: opts.fixed_cost,
            time_cost_rate: opts.hourly_rate,
            availability: (opts.day_start, opts.day_end),
            max_duration: None,
            capacity: Vec::new(),
        })
        .collect();
    Instance { name: format!("{}-td{seed}", base.name), addresses: n, matrix, items, vehicles }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlattenMode {
    /// Largest travel time of each arc.
    Worst,
    /// Time-average travel time over the arc's domain.
    Average,
    /// Mean of the two.
    Mixed,
}

fn average_travel(a: &Atf) -> f64 {
    let (ts, vs) = (a.ts(), a.vs());
    if ts.len() == 1 {
        return vs[0] - ts[0];
    }
    let mut area = 0.0;
    for k in 1..ts.len() {
        let d0 = vs[k - 1] - ts[k - 1];
        let d1 = vs[k] - ts[k];
        area += 0.5 * (d0 + d1) * (ts[k] - ts[k - 1]);
    }
    area / (a.t_max() - a.t_min())
}

/// Constant-travel copy of an instance; attached costs are kept.
pub fn flatten(inst: &Instance, mode: FlattenMode) -> Instance {
    let matrix = inst
        .matrix
        .iter()
        .map(|a| {
            if a.len() <= 2 && a.travel_bounds().lo == a.travel_bounds().hi {
                return a.clone();
            }
            let worst = a.travel_bounds().hi;
            let travel = match mode {
                FlattenMode::Worst => worst,
                FlattenMode::Average => average_travel(a),
                FlattenMode::Mixed => 0.5 * (worst + average_travel(a)),
            };
            Atf::constant_travel(travel, a.t_min(), a.t_max()).with_cost(a.cost().clone())
        })
        .collect();
    Instance { matrix, ..inst.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench_io::{parse_solomon, BenchOptions};
    use crate::plf::StepCost;

    fn without_cost(a: &Atf) -> Atf {
        a.clone().with_cost(StepCost::zero())
    }

    fn base() -> Instance {
        let text = "S\nVEHICLE\nNUMBER CAPACITY\n 3 50\nCUSTOMER\nCUST NO.\n 0 0 0 0 0 1000 0\n 1 30 40 5 0 500 3\n 2 60 0 5 0 500 3\n";
        parse_solomon(text, &BenchOptions::default()).unwrap()
    }

    #[test]
    fn all_ones_profile_reproduces_constants() {
        let b = base();
        let opts = TdOptions { seconds_per_unit: 1.0, day_start: 0.0, day_end: 1000.0, regenerate_windows: false, ..TdOptions::default() };
        let td = generate_td(&b, &[SpeedProfile::free_flow()], 1, &opts);
        for (x, y) in td.matrix.iter().zip(&b.matrix) {
            assert_eq!(x.canonical(), without_cost(y).canonical());
        }
        assert_eq!(td.items[0].delivery.close, 500.0);
    }

    #[test]
    fn half_speed_hour_doubles_travel() {
        let p = SpeedProfile::new(vec![1.0, 0.5]).unwrap();
        let a = p.arrival_function(600.0, 0.0, 3.0 * HOUR);
        // fully inside the slow hour
        assert!((a.eval(4000.0).unwrap() - 5200.0).abs() < 1e-9);
        // starts free, crosses into the slow hour
        assert!((a.eval(3300.0).unwrap() - (3600.0 + 600.0)).abs() < 1e-9);
        a.check_invariants().unwrap();
    }

    #[test]
    fn generated_functions_are_valid_and_flatten_orders() {
        let td = generate_td(&base(), &default_profiles(), 3, &TdOptions::default());
        td.check().unwrap();
        let (w, m, a) = (flatten(&td, FlattenMode::Worst), flatten(&td, FlattenMode::Mixed), flatten(&td, FlattenMode::Average));
        for k in 0..td.matrix.len() {
            let t = td.matrix[k].t_min() + 7000.0;
            let (tw, tm, ta) = (w.matrix[k].eval(t).unwrap(), m.matrix[k].eval(t).unwrap(), a.matrix[k].eval(t).unwrap());
            assert!(tw >= tm && tm >= ta);
            assert!(tw >= td.matrix[k].eval(t).unwrap());
        }
        let windows: Vec<f64> = td.items.iter().map(|i| i.delivery.close - i.delivery.open).collect();
        assert!(windows.iter().all(|&w| w == 3600.0 || w == 5.5 * 3600.0));
    }

    #[test]
    fn flatten_keeps_constant_instances() {
        let b = base();
        for mode in [FlattenMode::Worst, FlattenMode::Average, FlattenMode::Mixed] {
            assert_eq!(flatten(&b, mode), b);
        }
    }
}
