//! Multi-tour construction and improvement.
//!
//! A tour is a sequence of actions `START, ..., STOP` for one vehicle. Each
//! action's ATF covers waiting for its window, serving it and travelling to
//! the next action, so a tour's ATF is the composition of its actions.

mod construct;
mod context;
mod local;
mod search;
pub(crate) mod tour;
mod validate;

pub use construct::{compute_friends, importance, regret_construct, regret_insert, regret_step, select_seeds, select_seeds_by, RegretChoice};
pub use context::Context;
pub use local::{apply_swap, best_swap, improve_pairs, segment_swap, swap_delta, SwapMove};
pub use search::{random_walk, random_walk_with, solve, solve_in, Config, Mode};
pub use tour::{Insertion, Tour};
pub use validate::{validate, TourCheck, ValidationReport, Violation};

use std::collections::BTreeSet;

use crate::plf::Atf;

/// Location and time window of one stop.
#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub address: usize,
    pub open: f64,
    pub close: f64,
    pub duration: f64,
}

/// A transport request. Without a pickup the goods are loaded at the depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: usize,
    pub pickup: Option<Stop>,
    pub delivery: Stop,
    pub demand: Vec<f64>,
    pub unserved_penalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    pub start_address: usize,
    pub end_address: usize,
    pub fixed_cost: f64,
    /// Dollars per hour of tour duration.
    pub time_cost_rate: f64,
    pub availability: (f64, f64),
    pub max_duration: Option<f64>,
    pub capacity: Vec<f64>,
}

/// Items, vehicles and the arrival time function of every address pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub addresses: usize,
    /// Row-major `addresses x addresses` matrix; attached costs carry
    /// distance-dependent charges.
    pub matrix: Vec<Atf>,
    pub items: Vec<Item>,
    pub vehicles: Vec<Vehicle>,
}

impl Instance {
    pub fn arc(&self, from: usize, to: usize) -> &Atf {
        &self.matrix[from * self.addresses + to]
    }

    /// Checks indices, windows and matrix shape.
    pub fn check(&self) -> Result<(), String> {
        let n = self.addresses;
        if self.matrix.len() != n * n {
            return Err(format!("matrix has {} entries, expected {}", self.matrix.len(), n * n));
        }
        for (k, a) in self.matrix.iter().enumerate() {
            a.check_invariants().map_err(|e| format!("arc {} -> {}: {e}", k / n, k % n))?;
        }
        let stop_ok = |s: &Stop| s.address < n && s.close >= s.open && s.duration >= 0.0;
        for (i, item) in self.items.iter().enumerate() {
            if item.id != i {
                return Err(format!("item {i} has id {}", item.id));
            }
            if !stop_ok(&item.delivery) || item.pickup.as_ref().is_some_and(|p| !stop_ok(p)) {
                return Err(format!("item {i} has an invalid stop"));
            }
        }
        for (v, veh) in self.vehicles.iter().enumerate() {
            if veh.id != v || veh.start_address >= n || veh.end_address >= n {
                return Err(format!("vehicle {v} is invalid"));
            }
            if veh.availability.1 < veh.availability.0 {
                return Err(format!("vehicle {v} has an empty availability"));
            }
        }
        Ok(())
    }
}

/// One step of a tour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Start,
    Pickup(usize),
    Delivery(usize),
    Stop,
}

impl Action {
    pub fn item(self) -> Option<usize> {
        match self {
            Action::Pickup(i) | Action::Delivery(i) => Some(i),
            _ => None,
        }
    }
}

/// Tour sequence and start time, independent of any solver state.
#[derive(Debug, Clone, PartialEq)]
pub struct TourPlan {
    pub vehicle: usize,
    pub actions: Vec<Action>,
    pub t0: f64,
}

/// Solver-independent description of a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub tours: Vec<TourPlan>,
    pub unserved: BTreeSet<usize>,
    pub cost: f64,
}

/// Tours with their evaluation state plus the unserved items.
#[derive(Debug, Clone)]
pub struct Solution {
    pub tours: Vec<Tour>,
    pub unserved: BTreeSet<usize>,
    pub cost: f64,
}

impl Solution {
    pub fn empty(inst: &Instance) -> Solution {
        let unserved: BTreeSet<usize> = (0..inst.items.len()).collect();
        let cost = inst.items.iter().map(|i| i.unserved_penalty).sum();
        Solution {
            tours: Vec::new(),
            unserved,
            cost,
        }
    }

    pub fn recompute_cost(&mut self, inst: &Instance) {
        self.cost = self.tours.iter().map(|t| t.cost).sum::<f64>()
            + self.unserved.iter().map(|&i| inst.items[i].unserved_penalty).sum::<f64>();
    }

    pub fn used_vehicles(&self) -> BTreeSet<usize> {
        self.tours.iter().map(|t| t.vehicle).collect()
    }

    pub fn plan(&self) -> Plan {
        Plan {
            tours: self
                .tours
                .iter()
                .map(|t| TourPlan {
                    vehicle: t.vehicle,
                    actions: t.actions.clone(),
                    t0: t.schedule.t0,
                })
                .collect(),
            unserved: self.unserved.clone(),
            cost: self.cost,
        }
    }

    /// Rebuilds evaluation state for a plan; `None` if some tour is
    /// infeasible.
    pub fn from_plan(ctx: &Context<'_>, plan: &Plan) -> Option<Solution> {
        let mut tours = Vec::with_capacity(plan.tours.len());
        for t in &plan.tours {
            tours.push(Tour::new(ctx, t.vehicle, t.actions.clone())?);
        }
        let mut s = Solution {
            tours,
            unserved: plan.unserved.clone(),
            cost: 0.0,
        };
        s.recompute_cost(ctx.inst);
        Some(s)
    }

    pub fn vehicle_count(&self) -> usize {
        self.tours.len()
    }
}
