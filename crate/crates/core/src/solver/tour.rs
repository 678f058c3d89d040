use super::context::TIME_TOL;
use super::{Action, Context, Stop};
use crate::plf::{compose, Atf};
use crate::scheduler::ScheduleResult;
use crate::touratf::{ActionAtf, SegmentStore};

/// Where an item goes into a tour and what it costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    /// Action index the pickup follows, for items with a pickup.
    pub pickup_after: Option<usize>,
    /// Action index the delivery follows, counted in the tour before the
    /// insertion.
    pub delivery_after: usize,
    /// Change of the tour cost.
    pub delta: f64,
}

/// One vehicle's tour with its composed ATF, optimal schedule and the
/// earliest/latest times used for quick feasibility checks.
#[derive(Debug, Clone)]
pub struct Tour {
    pub vehicle: usize,
    pub actions: Vec<Action>,
    pub store: SegmentStore,
    pub atf: Atf,
    pub schedule: ScheduleResult,
    /// Fixed cost plus the scheduled cost.
    pub cost: f64,
    /// Earliest departure from each action after service.
    dep: Vec<f64>,
    /// Latest service start at each action that keeps the rest feasible.
    lat: Vec<f64>,
    /// Load when leaving each action.
    load: Vec<Vec<f64>>,
    /// Running maximum of `load` from the start.
    prefix_max: Vec<Vec<f64>>,
}

fn action_id(action: Action) -> u64 {
    match action {
        Action::Start => u64::MAX - 1,
        Action::Stop => u64::MAX - 2,
        Action::Pickup(i) => 2 * i as u64,
        Action::Delivery(i) => 2 * i as u64 + 1,
    }
}

/// Arrival at `to` when leaving `from` at `t`.
fn travel(ctx: &Context<'_>, from: usize, to: usize, t: f64) -> Option<f64> {
    let arc = ctx.inst.arc(from, to);
    (t <= arc.t_max() + TIME_TOL).then(|| arc.eval_clamped(t))
}

/// Departure after arriving at `t`, waiting and serving.
fn serve(stop: &Stop, t: f64) -> Option<f64> {
    let start = t.max(stop.open);
    (start <= stop.close + TIME_TOL).then_some(start + stop.duration)
}

impl Tour {
    /// Evaluates a complete action list `START, ..., STOP`. `None` if it
    /// misses a window, breaks capacity or exceeds the duration limit.
    pub fn new(ctx: &Context<'_>, vehicle: usize, actions: Vec<Action>) -> Option<Tour> {
        let m = actions.len();
        if m < 2 || actions[0] != Action::Start || actions[m - 1] != Action::Stop {
            return None;
        }
        let mut atfs = Vec::with_capacity(m);
        for k in 0..m {
            let next = actions.get(k + 1).copied();
            let atf = ctx.action_atf(vehicle, actions[k], next)?.clone();
            atfs.push(ActionAtf::new(atf, action_id(actions[k])));
        }
        let store = SegmentStore::build(atfs, ctx.levels);
        Tour::finish(ctx, vehicle, actions, store)
    }

    /// A tour serving a single item.
    pub fn single(ctx: &Context<'_>, vehicle: usize, item: usize) -> Option<Tour> {
        let mut actions = vec![Action::Start];
        if ctx.inst.items[item].pickup.is_some() {
            actions.push(Action::Pickup(item));
        }
        actions.push(Action::Delivery(item));
        actions.push(Action::Stop);
        Tour::new(ctx, vehicle, actions)
    }

    fn finish(ctx: &Context<'_>, vehicle: usize, actions: Vec<Action>, store: SegmentStore) -> Option<Tour> {
        let atf = store.full().ok()?;
        let (schedule, cost) = ctx.schedule(vehicle, &atf)?;
        let mut tour = Tour {
            vehicle,
            actions,
            store,
            atf,
            schedule,
            cost,
            dep: Vec::new(),
            lat: Vec::new(),
            load: Vec::new(),
            prefix_max: Vec::new(),
        };
        tour.refresh_scalars(ctx).then_some(tour)
    }

    /// Recomputes times and loads; false on a window or capacity violation.
    fn refresh_scalars(&mut self, ctx: &Context<'_>) -> bool {
        let v = self.vehicle;
        let m = self.actions.len();
        let addr: Vec<usize> = self.actions.iter().map(|&a| ctx.address(v, a)).collect();
        let stops: Vec<Stop> = self.actions.iter().map(|&a| ctx.stop(v, a)).collect();

        self.dep = Vec::with_capacity(m);
        let mut t = stops[0].open;
        for k in 0..m {
            if k > 0 {
                match travel(ctx, addr[k - 1], addr[k], t) {
                    Some(x) => t = x,
                    None => return false,
                }
            }
            match serve(&stops[k], t) {
                Some(x) => t = x,
                None => return false,
            }
            self.dep.push(t);
        }

        self.lat = vec![0.0; m];
        self.lat[m - 1] = stops[m - 1].close;
        for k in (0..m - 1).rev() {
            let arc = ctx.inst.arc(addr[k], addr[k + 1]);
            let ld = arc.latest_departure(self.lat[k + 1]).unwrap_or(f64::NEG_INFINITY);
            self.lat[k] = stops[k].close.min(ld - stops[k].duration);
        }

        let cap = &ctx.inst.vehicles[v].capacity;
        let dims = cap.len();
        let mut cur = vec![0.0; dims];
        for a in &self.actions {
            if let Action::Delivery(i) = *a {
                let item = &ctx.inst.items[i];
                if item.pickup.is_none() {
                    add_demand(&mut cur, &item.demand, 1.0);
                }
            }
        }
        self.load = Vec::with_capacity(m);
        self.prefix_max = Vec::with_capacity(m);
        let mut peak = vec![f64::NEG_INFINITY; dims];
        for a in &self.actions {
            match *a {
                Action::Pickup(i) => add_demand(&mut cur, &ctx.inst.items[i].demand, 1.0),
                Action::Delivery(i) => add_demand(&mut cur, &ctx.inst.items[i].demand, -1.0),
                _ => {}
            }
            for d in 0..dims {
                peak[d] = peak[d].max(cur[d]);
            }
            self.load.push(cur.clone());
            self.prefix_max.push(peak.clone());
        }
        (0..dims).all(|d| peak[d] <= cap[d] + TIME_TOL)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    /// True when the tour serves nothing.
    pub fn is_empty(&self) -> bool {
        self.actions.len() <= 2
    }

    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.actions.iter().filter_map(|a| match a {
            Action::Delivery(i) => Some(*i),
            _ => None,
        })
    }

    pub fn earliest_departure(&self, k: usize) -> f64 {
        self.dep[k]
    }

    pub fn latest_start(&self, k: usize) -> f64 {
        self.lat[k]
    }

    /// Whether `seq` fits between actions `from - 1` and `to + 1` in time,
    /// replacing `from..=to`.
    pub fn splice_time_feasible(&self, ctx: &Context<'_>, from: usize, to: usize, seq: &[Action]) -> bool {
        let v = self.vehicle;
        let mut t = self.dep[from - 1];
        let mut at = ctx.address(v, self.actions[from - 1]);
        for &a in seq {
            let stop = ctx.stop(v, a);
            let Some(x) = travel(ctx, at, stop.address, t).and_then(|x| serve(&stop, x)) else {
                return false;
            };
            t = x;
            at = stop.address;
        }
        let next = self.actions[to + 1];
        match travel(ctx, at, ctx.address(v, next), t) {
            Some(x) => x.max(ctx.stop(v, next).open) <= self.lat[to + 1] + TIME_TOL,
            None => false,
        }
    }

    /// Tour ATF with actions `from..=to` replaced by `seq`. `from == to + 1`
    /// inserts.
    pub fn splice_atf(&self, ctx: &Context<'_>, from: usize, to: usize, seq: &[Action]) -> Option<Atf> {
        let bridge = self.bridge(ctx, from - 1, seq, self.actions[to + 1])?;
        self.store.eval_removal(from, to + 1, &bridge).ok()
    }

    /// Composition of `actions[before]` heading into `seq`, then `seq`
    /// heading into `after`.
    fn bridge(&self, ctx: &Context<'_>, before: usize, seq: &[Action], after: Action) -> Option<Atf> {
        let v = self.vehicle;
        let first = seq.first().copied().unwrap_or(after);
        let mut acc = ctx.action_atf(v, self.actions[before], Some(first))?.clone();
        for (k, &a) in seq.iter().enumerate() {
            let next = seq.get(k + 1).copied().unwrap_or(after);
            acc = compose(&acc, ctx.action_atf(v, a, Some(next))?).ok()?;
        }
        Some(acc)
    }

    /// New tour cost for a candidate ATF, `None` if infeasible.
    pub fn cost_of(&self, ctx: &Context<'_>, atf: &Atf) -> Option<f64> {
        ctx.schedule(self.vehicle, atf).map(|(_, c)| c)
    }

    /// Capacity check for a whole candidate action list.
    pub fn loads_fit(ctx: &Context<'_>, vehicle: usize, actions: &[Action]) -> bool {
        let cap = &ctx.inst.vehicles[vehicle].capacity;
        let mut cur = vec![0.0; cap.len()];
        for a in actions {
            if let Action::Delivery(i) = *a {
                if ctx.inst.items[i].pickup.is_none() {
                    add_demand(&mut cur, &ctx.inst.items[i].demand, 1.0);
                }
            }
        }
        let fits = |cur: &[f64]| cur.iter().zip(cap).all(|(l, c)| *l <= c + TIME_TOL);
        if !fits(&cur) {
            return false;
        }
        for a in actions {
            match *a {
                Action::Pickup(i) => add_demand(&mut cur, &ctx.inst.items[i].demand, 1.0),
                Action::Delivery(i) => add_demand(&mut cur, &ctx.inst.items[i].demand, -1.0),
                _ => continue,
            }
            if !fits(&cur) {
                return false;
            }
        }
        true
    }

    fn arc_cost(&self, ctx: &Context<'_>, from: Action, to: Action) -> (f64, f64) {
        let v = self.vehicle;
        ctx.arc_cost_bounds(ctx.address(v, from), ctx.address(v, to))
    }

    /// Bounds on the arc-cost change of replacing arcs `removed` by `added`.
    fn arc_delta(&self, ctx: &Context<'_>, added: &[(Action, Action)], removed: &[(Action, Action)]) -> (f64, f64, bool) {
        let (mut lo, mut hi, mut exact) = (0.0, 0.0, true);
        for &(a, b) in added {
            let (l, h) = self.arc_cost(ctx, a, b);
            lo += l;
            hi += h;
            exact &= l == h;
        }
        for &(a, b) in removed {
            let (l, h) = self.arc_cost(ctx, a, b);
            lo -= h;
            hi -= l;
            exact &= l == h;
        }
        (lo, hi, exact)
    }

    /// Cheapest feasible insertion of `item`. With `exhaustive` every
    /// time-feasible position is composed; otherwise arc-cost bounds skip
    /// positions that cannot beat the best so far and constant-cost arcs
    /// are priced without composing.
    pub fn best_insertion(&self, ctx: &Context<'_>, item: usize, exhaustive: bool) -> Option<Insertion> {
        let v = self.vehicle;
        let it = &ctx.inst.items[item];
        let cap = &ctx.inst.vehicles[v].capacity;
        let additive = !exhaustive && ctx.cost_is_arc_additive(v);
        let m = self.actions.len();
        let mut best: Option<Insertion> = None;
        let better = |best: &Option<Insertion>, d: f64| best.is_none_or(|b| d < b.delta);

        let Some(pickup) = it.pickup.as_ref().map(|_| Action::Pickup(item)) else {
            let x = Action::Delivery(item);
            for p in 0..m - 1 {
                let fits = self.prefix_max[p].iter().zip(&it.demand).zip(cap).all(|((l, d), c)| l + d <= c + TIME_TOL);
                if !fits || !self.splice_time_feasible(ctx, p + 1, p, &[x]) {
                    continue;
                }
                let (a, b) = (self.actions[p], self.actions[p + 1]);
                let delta = if additive {
                    let (lo, _, exact) = self.arc_delta(ctx, &[(a, x), (x, b)], &[(a, b)]);
                    if !better(&best, lo) {
                        continue;
                    }
                    if exact {
                        Some(lo)
                    } else {
                        self.splice_atf(ctx, p + 1, p, &[x]).and_then(|f| self.cost_of(ctx, &f)).map(|c| c - self.cost)
                    }
                } else {
                    self.splice_atf(ctx, p + 1, p, &[x]).and_then(|f| self.cost_of(ctx, &f)).map(|c| c - self.cost)
                };
                if let Some(d) = delta {
                    if better(&best, d) {
                        best = Some(Insertion { pickup_after: None, delivery_after: p, delta: d });
                    }
                }
            }
            return best;
        };

        let x = Action::Delivery(item);
        let pstop = ctx.stop(v, pickup);
        let dstop = ctx.stop(v, x);
        for p in 0..m - 1 {
            let start = &self.load[p];
            if start.iter().zip(&it.demand).zip(cap).any(|((l, d), c)| l + d > c + TIME_TOL) {
                continue;
            }
            let Some(mut t) = travel(ctx, ctx.address(v, self.actions[p]), pstop.address, self.dep[p]).and_then(|a| serve(&pstop, a)) else {
                continue;
            };
            let mut at = pstop.address;
            let mut peak_ok = true;
            for q in p..m - 1 {
                if q > p {
                    // action q now runs with the pickup on board
                    let stop = ctx.stop(v, self.actions[q]);
                    let Some(arr) = travel(ctx, at, stop.address, t) else { break };
                    if arr.max(stop.open) > self.lat[q] + TIME_TOL {
                        break;
                    }
                    let Some(x) = serve(&stop, arr) else { break };
                    t = x;
                    at = stop.address;
                    peak_ok &= self.load[q].iter().zip(&it.demand).zip(cap).all(|((l, d), c)| l + d <= c + TIME_TOL);
                    if !peak_ok {
                        break;
                    }
                }
                let Some(after_d) = travel(ctx, at, dstop.address, t).and_then(|a| serve(&dstop, a)) else {
                    continue;
                };
                let next = self.actions[q + 1];
                let Some(arr) = travel(ctx, dstop.address, ctx.address(v, next), after_d) else {
                    continue;
                };
                if arr.max(ctx.stop(v, next).open) > self.lat[q + 1] + TIME_TOL {
                    continue;
                }
                let (a, b) = (self.actions[p], self.actions[p + 1]);
                let (c, e) = (self.actions[q], self.actions[q + 1]);
                let delta = if additive {
                    let (lo, _, exact) = if p == q {
                        self.arc_delta(ctx, &[(a, pickup), (pickup, x), (x, b)], &[(a, b)])
                    } else {
                        self.arc_delta(ctx, &[(a, pickup), (pickup, b), (c, x), (x, e)], &[(a, b), (c, e)])
                    };
                    if !better(&best, lo) {
                        continue;
                    }
                    if exact {
                        Some(lo)
                    } else {
                        self.pair_cost(ctx, pickup, x, p, q).map(|c| c - self.cost)
                    }
                } else {
                    self.pair_cost(ctx, pickup, x, p, q).map(|c| c - self.cost)
                };
                if let Some(d) = delta {
                    if better(&best, d) {
                        best = Some(Insertion { pickup_after: Some(p), delivery_after: q, delta: d });
                    }
                }
            }
        }
        best
    }

    fn pair_cost(&self, ctx: &Context<'_>, pickup: Action, delivery: Action, p: usize, q: usize) -> Option<f64> {
        let v = self.vehicle;
        let (a, b) = (self.actions[p], self.actions[p + 1]);
        let (c, e) = (self.actions[q], self.actions[q + 1]);
        let after_i = ctx.action_atf(v, a, Some(pickup))?;
        let pick = ctx.action_atf(v, pickup, Some(if p == q { delivery } else { b }))?;
        let after_j = if p == q { after_i } else { ctx.action_atf(v, c, Some(delivery))? };
        let del = ctx.action_atf(v, delivery, Some(e))?;
        let (atf, _) = self.store.eval_insertion(p + 1, q + 1, after_i, pick, after_j, del).ok()?;
        self.cost_of(ctx, &atf)
    }

    /// Action list after applying `ins` for `item`.
    pub fn actions_with(&self, item: usize, ins: &Insertion) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.actions.len() + 2);
        for (k, &a) in self.actions.iter().enumerate() {
            out.push(a);
            if ins.pickup_after == Some(k) {
                out.push(Action::Pickup(item));
            }
            if ins.delivery_after == k {
                out.push(Action::Delivery(item));
            }
        }
        out
    }

    /// Applies an insertion, updating the store in place. On failure the
    /// tour is left unchanged and false is returned.
    pub fn insert(&mut self, ctx: &Context<'_>, item: usize, ins: &Insertion) -> bool {
        let actions = self.actions_with(item, ins);
        let v = self.vehicle;
        let mut store = self.store.clone();
        // positions in the new list of the inserted actions, ascending
        let mut placed: Vec<usize> = actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.item() == Some(item))
            .map(|(k, _)| k)
            .collect();
        placed.sort_unstable();
        let mut ok = true;
        for &k in &placed {
            let Some(atf) = ctx.action_atf(v, actions[k], actions.get(k + 1).copied()) else {
                ok = false;
                break;
            };
            // store index k + 1 is the new action; k - 1 precedes it
            ok &= store.insert_action(k, ActionAtf::new(atf.clone(), action_id(actions[k]))).is_ok();
        }
        for &k in &placed {
            if !ok {
                break;
            }
            let prev = actions[k - 1];
            if prev.item() == Some(item) {
                continue;
            }
            match ctx.action_atf(v, prev, Some(actions[k])) {
                Some(atf) => ok &= store.update_action(k, ActionAtf::new(atf.clone(), action_id(prev))).is_ok(),
                None => ok = false,
            }
        }
        if !ok {
            return false;
        }
        match Tour::finish(ctx, v, actions, store) {
            Some(t) => {
                *self = t;
                true
            }
            None => false,
        }
    }

    /// Tour without the given items, `None` if it becomes infeasible.
    pub fn without(&self, ctx: &Context<'_>, drop: &impl Fn(usize) -> bool) -> Option<Tour> {
        let actions: Vec<Action> = self
            .actions
            .iter()
            .copied()
            .filter(|a| a.item().is_none_or(|i| !drop(i)))
            .collect();
        Tour::new(ctx, self.vehicle, actions)
    }
}

fn add_demand(load: &mut [f64], demand: &[f64], sign: f64) {
    for (l, d) in load.iter_mut().zip(demand) {
        *l += sign * d;
    }
}
