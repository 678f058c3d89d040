use std::sync::OnceLock;

use super::construct::compute_friends;
use super::{Action, Instance, Stop};
use crate::plf::{compose, Atf, StepCost};
use crate::scheduler::{optimal_start, soft_window_penalty, CostModel, OvertimeCost, ScheduleResult};
use crate::touratf::DEFAULT_LEVELS;

/// Overtime rate past a vehicle's maximum duration, dollars per second.
const OVERTIME_RATE: f64 = 1000.0;
/// Slack when comparing times against windows and duration limits.
pub(crate) const TIME_TOL: f64 = 1e-6;

/// Read-only evaluation state shared by all workers: cached action ATFs,
/// cost models, arc bounds and the friend relation.
pub struct Context<'a> {
    pub inst: &'a Instance,
    soft: Option<Vec<(f64, f64)>>,
    cache: Vec<OnceLock<Option<Atf>>>,
    models: Vec<CostModel>,
    travel_lo: Vec<f64>,
    cost_lo: Vec<f64>,
    cost_hi: Vec<f64>,
    friends: Vec<Vec<usize>>,
    friend_bits: Vec<Vec<u64>>,
    pub levels: usize,
}

impl<'a> Context<'a> {
    /// `soft` adds penalty brackets to every item window.
    pub fn new(inst: &'a Instance, soft: Option<&[(f64, f64)]>) -> Context<'a> {
        let keys = 2 * inst.items.len() + 2 * inst.vehicles.len();
        let cache = (0..keys * (inst.addresses + 1)).map(|_| OnceLock::new()).collect();
        let models = inst
            .vehicles
            .iter()
            .map(|v| CostModel {
                overtime: v
                    .max_duration
                    .map_or(OvertimeCost::zero(), |d| OvertimeCost::free_until(d, OVERTIME_RATE)),
                work_rate: StepCost::constant(v.time_cost_rate),
            })
            .collect();
        let travel_lo = inst.matrix.iter().map(|a| a.travel_bounds().lo).collect();
        let cost_lo = inst.matrix.iter().map(|a| a.cost().min_value()).collect();
        let cost_hi = inst.matrix.iter().map(|a| a.cost().max_value()).collect();
        let friends = compute_friends(inst);
        let words = inst.items.len().div_ceil(64);
        let friend_bits = friends
            .iter()
            .map(|list| {
                let mut bits = vec![0u64; words];
                for &j in list {
                    bits[j / 64] |= 1 << (j % 64);
                }
                bits
            })
            .collect();
        Context {
            inst,
            soft: soft.map(|b| b.to_vec()),
            cache,
            models,
            travel_lo,
            cost_lo,
            cost_hi,
            friends,
            friend_bits,
            levels: DEFAULT_LEVELS,
        }
    }

    pub fn has_soft_windows(&self) -> bool {
        self.soft.is_some()
    }

    /// Stop served by `action` on `vehicle`.
    pub fn stop(&self, vehicle: usize, action: Action) -> Stop {
        let v = &self.inst.vehicles[vehicle];
        let (open, close) = v.availability;
        match action {
            Action::Start => Stop { address: v.start_address, open, close, duration: 0.0 },
            Action::Stop => Stop { address: v.end_address, open, close, duration: 0.0 },
            Action::Pickup(i) => self.inst.items[i].pickup.clone().expect("item has a pickup"),
            Action::Delivery(i) => self.inst.items[i].delivery.clone(),
        }
    }

    pub fn address(&self, vehicle: usize, action: Action) -> usize {
        let v = &self.inst.vehicles[vehicle];
        match action {
            Action::Start => v.start_address,
            Action::Stop => v.end_address,
            Action::Pickup(i) => self.inst.items[i].pickup.as_ref().expect("item has a pickup").address,
            Action::Delivery(i) => self.inst.items[i].delivery.address,
        }
    }

    fn key(&self, vehicle: usize, action: Action) -> usize {
        let n = self.inst.items.len();
        match action {
            Action::Pickup(i) => 2 * i,
            Action::Delivery(i) => 2 * i + 1,
            Action::Start => 2 * n + 2 * vehicle,
            Action::Stop => 2 * n + 2 * vehicle + 1,
        }
    }

    /// Wait for the window, serve, then travel to `next` (if any). `None`
    /// when the travel cannot start before the arc's domain ends.
    pub fn action_atf(&self, vehicle: usize, action: Action, next: Option<Action>) -> Option<&Atf> {
        let slot = match next {
            Some(a) => self.address(vehicle, a),
            None => self.inst.addresses,
        };
        let idx = self.key(vehicle, action) * (self.inst.addresses + 1) + slot;
        self.cache[idx]
            .get_or_init(|| {
                let stop = self.stop(vehicle, action);
                let mut window = Atf::window(stop.open, stop.close, stop.duration);
                if let (Some(brackets), Some(_)) = (&self.soft, action.item()) {
                    let penalty = soft_window_penalty(stop.close, brackets).expect("validated brackets");
                    window = window.with_cost(penalty);
                }
                match next {
                    Some(_) => compose(&window, self.inst.arc(stop.address, slot)).ok(),
                    None => Some(window),
                }
            })
            .as_ref()
    }

    pub fn model(&self, vehicle: usize) -> &CostModel {
        &self.models[vehicle]
    }

    /// Schedules a tour ATF: returns the schedule and the tour cost
    /// including the fixed cost, or `None` if the duration limit is broken.
    pub fn schedule(&self, vehicle: usize, atf: &Atf) -> Option<(ScheduleResult, f64)> {
        let r = optimal_start(atf, self.model(vehicle));
        let v = &self.inst.vehicles[vehicle];
        if let Some(limit) = v.max_duration {
            if atf.eval_clamped(r.t0) - r.t0 > limit + TIME_TOL {
                return None;
            }
        }
        Some((r, v.fixed_cost + r.total_cost))
    }

    pub fn travel_lo(&self, from: usize, to: usize) -> f64 {
        self.travel_lo[from * self.inst.addresses + to]
    }

    /// Smallest and largest attached cost of an arc.
    pub fn arc_cost_bounds(&self, from: usize, to: usize) -> (f64, f64) {
        let k = from * self.inst.addresses + to;
        (self.cost_lo[k], self.cost_hi[k])
    }

    /// Whether a vehicle's tour cost is its fixed cost plus the sum of arc
    /// costs, independent of timing, so that arc-cost bounds bound deltas.
    pub fn cost_is_arc_additive(&self, vehicle: usize) -> bool {
        let v = &self.inst.vehicles[vehicle];
        self.soft.is_none() && v.time_cost_rate == 0.0 && v.max_duration.is_none()
    }

    pub fn are_friends(&self, a: usize, b: usize) -> bool {
        self.friend_bits[a][b / 64] & (1 << (b % 64)) != 0
    }

    pub fn friends(&self, item: usize) -> &[usize] {
        &self.friends[item]
    }
}
