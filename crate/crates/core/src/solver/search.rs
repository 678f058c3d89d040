use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::construct::{items_of, regret_construct, regret_insert};
use super::local::improve_pairs;
use super::{Context, Instance, Solution};

/// Longest run of consecutive actions removed by a sequence ruin.
const MAX_RUIN: usize = 10;
/// Random-walk iterations between exchanges with the shared incumbent.
const EXCHANGE_EVERY: usize = 50;
/// Iteration multiplier of the high-effort mode.
const HIGH_EFFORT_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Default,
    HighEffort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub workers: usize,
    /// Random-walk iterations per worker in the default mode.
    pub iterations: usize,
    /// Optional cap on the wall time; results then depend on timing.
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub mode: Mode,
    /// Penalty brackets for soft item windows.
    pub soft_windows: Option<Vec<(f64, f64)>>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            workers: 1,
            iterations: 2000,
            time_limit: None,
            seed: 0,
            mode: Mode::Default,
            soft_windows: None,
        }
    }
}

impl Config {
    pub fn total_iterations(&self) -> usize {
        match self.mode {
            Mode::Default => self.iterations,
            Mode::HighEffort => self.iterations * HIGH_EFFORT_FACTOR,
        }
    }
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// One ruin-and-recreate step: strategy 0 removes a random run of actions
/// from one tour, strategy 1 dissolves a whole tour. The removed items are
/// reinserted by regret into any tour, the source tour included.
fn ruin_recreate(ctx: &Context<'_>, sol: &Solution, rng: &mut ChaCha8Rng, strategy: usize) -> Option<Solution> {
    if sol.tours.is_empty() {
        return None;
    }
    let t = rng.gen_range(0..sol.tours.len());
    let tour = &sol.tours[t];
    let mut cand = sol.clone();
    let removed: BTreeSet<usize> = if strategy == 0 && tour.len() > 3 {
        let inner = tour.len() - 2;
        let len = rng.gen_range(1..=inner.min(MAX_RUIN));
        let from = 1 + rng.gen_range(0..=inner - len);
        let removed = items_of(&tour.actions[from..from + len]);
        match tour.without(ctx, &|i| removed.contains(&i)) {
            Some(rest) if !rest.is_empty() => cand.tours[t] = rest,
            Some(_) => {
                cand.tours.remove(t);
            }
            None => return None,
        }
        removed
    } else {
        cand.tours.remove(t);
        items_of(&tour.actions)
    };
    cand.unserved.extend(removed.iter().copied());
    regret_insert(ctx, &mut cand, removed, false);
    Some(cand)
}

/// Ruin-and-recreate walk: alternates sequence ruin and tour dissolution
/// and keeps a candidate when its cost does not exceed the incumbent.
/// `exchange` is called after every accepted move and every
/// `EXCHANGE_EVERY` iterations and may replace the incumbent.
pub fn random_walk_with(
    ctx: &Context<'_>,
    start: Solution,
    rng: &mut ChaCha8Rng,
    budget: usize,
    deadline: Option<Instant>,
    exchange: &mut dyn FnMut(&mut Solution),
) -> Solution {
    let mut cur = start;
    for it in 0..budget {
        if expired(deadline) {
            break;
        }
        if let Some(mut cand) = ruin_recreate(ctx, &cur, rng, it % 2) {
            if cand.cost <= cur.cost + 1e-9 {
                if cand.cost < cur.cost - 1e-9 {
                    improve_pairs(ctx, &mut cand);
                }
                cur = cand;
                exchange(&mut cur);
                continue;
            }
        }
        if (it + 1) % EXCHANGE_EVERY == 0 {
            exchange(&mut cur);
        }
    }
    cur
}

pub fn random_walk(ctx: &Context<'_>, start: Solution, rng: &mut ChaCha8Rng, budget: usize) -> Solution {
    random_walk_with(ctx, start, rng, budget, None, &mut |_| {})
}

/// Keeps the cheaper of the shared and local solutions in both places.
fn swap_with_shared(shared: &Mutex<Option<Solution>>, local: &mut Solution) {
    let mut cell = shared.lock().expect("incumbent lock");
    match cell.as_ref() {
        Some(best) if best.cost < local.cost - 1e-9 => *local = best.clone(),
        Some(best) if best.cost <= local.cost + 1e-9 => {}
        _ => *cell = Some(local.clone()),
    }
}

/// Parallel construction and random walks. Each worker `w` uses seed
/// `seed + w`; after the first half of the budget every worker continues
/// from the best solution found so far.
pub fn solve(inst: &Instance, config: &Config) -> Solution {
    let ctx = Context::new(inst, config.soft_windows.as_deref());
    solve_in(&ctx, config)
}

pub fn solve_in(ctx: &Context<'_>, config: &Config) -> Solution {
    let deadline = config.time_limit.map(|d| Instant::now() + d);
    let workers = config.workers.max(1);
    let budget = config.total_iterations();
    let shared: Mutex<Option<Solution>> = Mutex::new(None);
    let run = |w: usize| {
        let seed = config.seed.wrapping_add(w as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sol = regret_construct(ctx, seed);
        improve_pairs(ctx, &mut sol);
        let mut exchange = |s: &mut Solution| {
            if workers > 1 {
                swap_with_shared(&shared, s)
            }
        };
        let first = budget / 2;
        sol = random_walk_with(ctx, sol, &mut rng, first, deadline, &mut |s| {
            if workers > 1 {
                let mut cell = shared.lock().expect("incumbent lock");
                if cell.as_ref().is_none_or(|b| s.cost < b.cost - 1e-9) {
                    *cell = Some(s.clone());
                }
            }
        });
        exchange(&mut sol);
        sol = random_walk_with(ctx, sol, &mut rng, budget - first, deadline, &mut exchange);
        exchange(&mut sol);
        sol
    };
    let results: Vec<Solution> = if workers == 1 {
        vec![run(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|w| s.spawn(move || run(w))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    results
        .into_iter()
        .reduce(|a, b| if b.cost < a.cost - 1e-9 { b } else { a })
        .expect("at least one worker")
}
