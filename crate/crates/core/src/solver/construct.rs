use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::local::improve_pairs;
use super::{Action, Context, Insertion, Instance, Solution, Tour};

/// Cost assigned to an insertion when no tour and no spare vehicle can
/// take the item.
pub const NO_VEHICLE_COST: f64 = 1e6;
/// Detour ratio at or below which two items count as friends.
pub const FRIEND_RATIO: f64 = 0.75;
/// Insertions between local-search passes during construction.
pub const LOCAL_SEARCH_EVERY: usize = 25;

/// Addresses an item visits, in order.
fn visits(inst: &Instance, item: usize) -> Vec<usize> {
    let it = &inst.items[item];
    it.pickup.iter().map(|p| p.address).chain([it.delivery.address]).collect()
}

fn min_travel(inst: &Instance, from: usize, to: usize) -> f64 {
    inst.arc(from, to).travel_bounds().lo
}

fn path_lo(inst: &Instance, path: &[usize]) -> f64 {
    path.windows(2).map(|w| min_travel(inst, w[0], w[1])).sum()
}

fn depots(inst: &Instance) -> (usize, usize) {
    inst.vehicles.first().map_or((0, 0), |v| (v.start_address, v.end_address))
}

/// Lower bound on the travel time of a round trip serving one item.
pub fn remoteness(inst: &Instance, item: usize) -> f64 {
    let (s, e) = depots(inst);
    let mut path = vec![s];
    path.extend(visits(inst, item));
    path.push(e);
    path_lo(inst, &path)
}

/// Friend lists, most compatible first. Two items are friends when a round
/// trip serving both (in the better order, by travel-time lower bounds) is
/// at most `FRIEND_RATIO` of the two separate round trips.
pub fn compute_friends(inst: &Instance) -> Vec<Vec<usize>> {
    let n = inst.items.len();
    let (s, e) = depots(inst);
    let alone: Vec<f64> = (0..n).map(|i| remoteness(inst, i)).collect();
    let seq: Vec<Vec<usize>> = (0..n).map(|i| visits(inst, i)).collect();
    let inner: Vec<f64> = seq.iter().map(|p| path_lo(inst, p)).collect();
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        let mut list: Vec<(f64, usize)> = Vec::new();
        for j in 0..n {
            if i == j {
                continue;
            }
            let (fi, li) = (seq[i][0], *seq[i].last().unwrap());
            let (fj, lj) = (seq[j][0], *seq[j].last().unwrap());
            let i_first = min_travel(inst, s, fi) + inner[i] + min_travel(inst, li, fj) + inner[j] + min_travel(inst, lj, e);
            let j_first = min_travel(inst, s, fj) + inner[j] + min_travel(inst, lj, fi) + inner[i] + min_travel(inst, li, e);
            let denom = alone[i] + alone[j];
            if denom <= 0.0 {
                continue;
            }
            let ratio = i_first.min(j_first) / denom;
            if ratio <= FRIEND_RATIO {
                list.push((ratio, j));
            }
        }
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out[i] = list.into_iter().map(|(_, j)| j).collect();
    }
    out
}

/// Seed importance: unserved penalty plus remoteness.
pub fn importance(inst: &Instance, item: usize) -> f64 {
    inst.items[item].unserved_penalty + remoteness(inst, item)
}

/// Greedy seeds by descending score, skipping friends of chosen seeds, at
/// most one per vehicle.
pub fn select_seeds_by(ctx: &Context<'_>, scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut seeds: Vec<usize> = Vec::new();
    for i in order {
        if seeds.len() == ctx.inst.vehicles.len() {
            break;
        }
        if seeds.iter().all(|&s| !ctx.are_friends(s, i) && !ctx.are_friends(i, s)) {
            seeds.push(i);
        }
    }
    seeds
}

pub fn select_seeds(ctx: &Context<'_>) -> Vec<usize> {
    let scores: Vec<f64> = (0..ctx.inst.items.len()).map(|i| importance(ctx.inst, i)).collect();
    select_seeds_by(ctx, &scores)
}

/// The next insertion picked by average regret.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretChoice {
    pub item: usize,
    /// Existing tour, or `None` to open a tour with `vehicle`.
    pub tour: Option<usize>,
    pub vehicle: usize,
    pub insertion: Insertion,
    pub regret: f64,
    /// Cost of the chosen option.
    pub cost: f64,
}

/// Cheapest new tour for an item among unused vehicles.
fn best_new_tour(ctx: &Context<'_>, used: &BTreeSet<usize>, item: usize, cache: &mut NewTourCache) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for v in 0..ctx.inst.vehicles.len() {
        if used.contains(&v) {
            continue;
        }
        if let Some(c) = cache.get(ctx, item, v) {
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((v, c));
            }
        }
        if cache.uniform {
            // identical vehicles: the first unused one stands for all
            break;
        }
    }
    best
}

/// Single-item tour costs per (item, vehicle), filled on demand.
struct NewTourCache {
    cost: Vec<Option<Option<f64>>>,
    vehicles: usize,
    uniform: bool,
}

impl NewTourCache {
    fn new(ctx: &Context<'_>) -> Self {
        let vs = &ctx.inst.vehicles;
        let uniform = vs.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.start_address == b.start_address
                && a.end_address == b.end_address
                && a.fixed_cost == b.fixed_cost
                && a.time_cost_rate == b.time_cost_rate
                && a.availability == b.availability
                && a.max_duration == b.max_duration
                && a.capacity == b.capacity
        });
        NewTourCache {
            cost: vec![None; ctx.inst.items.len() * vs.len()],
            vehicles: vs.len(),
            uniform,
        }
    }

    fn get(&mut self, ctx: &Context<'_>, item: usize, vehicle: usize) -> Option<f64> {
        let key = if self.uniform { 0 } else { vehicle };
        let slot = &mut self.cost[item * self.vehicles + key];
        *slot.get_or_insert_with(|| Tour::single(ctx, vehicle, item).map(|t| t.cost))
    }
}

/// Average-regret decision for one item given its per-tour insertions.
/// Infeasible tours are charged the new-tour cost, or `NO_VEHICLE_COST`
/// when no vehicle is left. Regret is the mean of the per-tour costs minus
/// their minimum; the chosen option is the cheapest of the best tour and a
/// new tour.
fn decide(item: usize, per_tour: &[Option<Insertion>], tour_vehicle: &[usize], new_tour: Option<(usize, f64)>) -> Option<RegretChoice> {
    let sentinel = new_tour.map_or(NO_VEHICLE_COST, |(_, c)| c);
    let costs: Vec<f64> = per_tour.iter().map(|o| o.map_or(sentinel, |i| i.delta)).collect();
    let regret = if costs.is_empty() {
        0.0
    } else {
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        mean - min
    };
    let mut best: Option<RegretChoice> = None;
    for (t, ins) in per_tour.iter().enumerate() {
        if let Some(ins) = ins {
            if best.is_none_or(|b| ins.delta < b.cost) {
                best = Some(RegretChoice { item, tour: Some(t), vehicle: tour_vehicle[t], insertion: *ins, regret, cost: ins.delta });
            }
        }
    }
    if let Some((v, c)) = new_tour {
        if best.is_none_or(|b| c < b.cost) {
            let insertion = Insertion { pickup_after: None, delivery_after: 0, delta: c };
            best = Some(RegretChoice { item, tour: None, vehicle: v, insertion, regret, cost: c });
        }
    }
    best
}

/// Max-regret item, ties broken by lower cost and then lower id.
fn pick(choices: impl Iterator<Item = RegretChoice>) -> Option<RegretChoice> {
    choices.fold(None, |acc: Option<RegretChoice>, c| match acc {
        None => Some(c),
        Some(a) => {
            let better = c.regret > a.regret
                || (c.regret == a.regret && (c.cost < a.cost || (c.cost == a.cost && c.item < a.item)));
            Some(if better { c } else { a })
        }
    })
}

/// One regret decision computed from scratch over `pool`.
pub fn regret_step(ctx: &Context<'_>, sol: &Solution, pool: &BTreeSet<usize>) -> Option<RegretChoice> {
    let used = sol.used_vehicles();
    let vehicles: Vec<usize> = sol.tours.iter().map(|t| t.vehicle).collect();
    let mut cache = NewTourCache::new(ctx);
    pick(pool.iter().filter_map(|&i| {
        let per: Vec<Option<Insertion>> = sol.tours.iter().map(|t| t.best_insertion(ctx, i, false)).collect();
        decide(i, &per, &vehicles, best_new_tour(ctx, &used, i, &mut cache))
    }))
}

/// Inserts the items of `pool` by average regret. Items whose best option
/// costs at least their penalty, or that fit nowhere, stay unserved.
pub fn regret_insert(ctx: &Context<'_>, sol: &mut Solution, pool: BTreeSet<usize>, local_search: bool) {
    let mut pool = pool;
    let mut cache = NewTourCache::new(ctx);
    // table[item][tour]
    let mut table: Vec<Vec<Option<Insertion>>> = vec![Vec::new(); ctx.inst.items.len()];
    let fill_all = |sol: &Solution, table: &mut Vec<Vec<Option<Insertion>>>, pool: &BTreeSet<usize>| {
        for &i in pool {
            table[i] = sol.tours.iter().map(|t| t.best_insertion(ctx, i, false)).collect();
        }
    };
    fill_all(sol, &mut table, &pool);
    let mut since_search = 0;
    while !pool.is_empty() {
        let used = sol.used_vehicles();
        let vehicles: Vec<usize> = sol.tours.iter().map(|t| t.vehicle).collect();
        let mut stuck = Vec::new();
        let choice = pick(pool.iter().filter_map(|&i| {
            let c = decide(i, &table[i], &vehicles, best_new_tour(ctx, &used, i, &mut cache));
            if c.is_none() {
                stuck.push(i);
            }
            c
        }));
        for i in stuck {
            pool.remove(&i);
        }
        let Some(choice) = choice else { break };
        pool.remove(&choice.item);
        if choice.cost >= ctx.inst.items[choice.item].unserved_penalty {
            continue;
        }
        let changed = match choice.tour {
            Some(t) => {
                if !sol.tours[t].insert(ctx, choice.item, &choice.insertion) {
                    // composition disagreed with the quick check
                    table[choice.item][t] = None;
                    pool.insert(choice.item);
                    continue;
                }
                t
            }
            None => match Tour::single(ctx, choice.vehicle, choice.item) {
                Some(tour) => {
                    sol.tours.push(tour);
                    sol.tours.len() - 1
                }
                None => continue,
            },
        };
        sol.unserved.remove(&choice.item);
        since_search += 1;
        if local_search && since_search >= LOCAL_SEARCH_EVERY {
            since_search = 0;
            if improve_pairs(ctx, sol) {
                fill_all(sol, &mut table, &pool);
                continue;
            }
        }
        for &i in &pool {
            let ins = sol.tours[changed].best_insertion(ctx, i, false);
            if changed < table[i].len() {
                table[i][changed] = ins;
            } else {
                table[i].push(ins);
            }
        }
    }
    sol.recompute_cost(ctx.inst);
}

/// Seed tours, then average-regret insertion of all remaining items.
/// `rng_seed` jitters the seed scores so that workers start differently;
/// seed 0 uses the plain scores.
pub fn regret_construct(ctx: &Context<'_>, rng_seed: u64) -> Solution {
    let inst = ctx.inst;
    let mut scores: Vec<f64> = (0..inst.items.len()).map(|i| importance(inst, i)).collect();
    if rng_seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for s in &mut scores {
            *s *= 1.0 + 0.2 * rng.gen::<f64>();
        }
    }
    let mut sol = Solution::empty(inst);
    let mut vehicle = 0;
    for seed in select_seeds_by(ctx, &scores) {
        while vehicle < inst.vehicles.len() {
            let v = vehicle;
            vehicle += 1;
            if let Some(t) = Tour::single(ctx, v, seed) {
                sol.tours.push(t);
                sol.unserved.remove(&seed);
                break;
            }
        }
    }
    sol.recompute_cost(inst);
    let pool = sol.unserved.clone();
    regret_insert(ctx, &mut sol, pool, true);
    sol
}

/// Items whose actions appear in `actions`.
pub(crate) fn items_of(actions: &[Action]) -> BTreeSet<usize> {
    actions.iter().filter_map(|a| a.item()).collect()
}
