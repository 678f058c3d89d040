use std::collections::BTreeMap;
use std::fmt;

use super::{Action, Instance, Plan, Stop};
use crate::plf::{compose, Atf, StepCost};
use crate::scheduler::{total_cost, CostModel};

const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Malformed { tour: usize, reason: String },
    VehicleReused { vehicle: usize },
    EmptyDomain { tour: usize },
    StartOutsideDomain { tour: usize, t0: f64 },
    MissedWindow { tour: usize, position: usize, arrival: f64, close: f64 },
    Availability { tour: usize, end: f64, limit: f64 },
    MaxDuration { tour: usize, duration: f64, limit: f64 },
    Capacity { tour: usize, position: usize, load: f64, capacity: f64 },
    Precedence { item: usize },
    ServedTwice { item: usize },
    Missing { item: usize },
    UnservedButServed { item: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Malformed { tour, reason } => write!(f, "tour {tour}: {reason}"),
            Violation::VehicleReused { vehicle } => write!(f, "vehicle {vehicle} drives more than one tour"),
            Violation::EmptyDomain { tour } => write!(f, "tour {tour}: no feasible start time"),
            Violation::StartOutsideDomain { tour, t0 } => write!(f, "tour {tour}: start {t0} is infeasible"),
            Violation::MissedWindow { tour, position, arrival, close } => {
                write!(f, "tour {tour} action {position}: arrives {arrival}, window closes {close}")
            }
            Violation::Availability { tour, end, limit } => {
                write!(f, "tour {tour}: ends {end} after availability {limit}")
            }
            Violation::MaxDuration { tour, duration, limit } => {
                write!(f, "tour {tour}: duration {duration} exceeds {limit}")
            }
            Violation::Capacity { tour, position, load, capacity } => {
                write!(f, "tour {tour} action {position}: load {load} exceeds {capacity}")
            }
            Violation::Precedence { item } => write!(f, "item {item}: delivery before pickup"),
            Violation::ServedTwice { item } => write!(f, "item {item}: served more than once"),
            Violation::Missing { item } => write!(f, "item {item}: neither served nor listed unserved"),
            Violation::UnservedButServed { item } => write!(f, "item {item}: listed unserved but served"),
        }
    }
}

/// Schedule details of one tour.
#[derive(Debug, Clone, PartialEq)]
pub struct TourCheck {
    pub cost: f64,
    /// Service start of every action.
    pub starts: Vec<f64>,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Fixed costs, scheduled costs at the given start times and unserved
    /// penalties; soft window penalties are not included.
    pub cost: f64,
    pub tours: Vec<Option<TourCheck>>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn stop_of(inst: &Instance, vehicle: usize, action: Action) -> Option<Stop> {
    let v = &inst.vehicles[vehicle];
    let (open, close) = v.availability;
    match action {
        Action::Start => Some(Stop { address: v.start_address, open, close, duration: 0.0 }),
        Action::Stop => Some(Stop { address: v.end_address, open, close, duration: 0.0 }),
        Action::Pickup(i) => inst.items.get(i)?.pickup.clone(),
        Action::Delivery(i) => inst.items.get(i).map(|it| it.delivery.clone()),
    }
}

/// Re-checks a plan from the instance alone: composes every tour by a
/// plain fold, simulates it from its recorded start and recomputes costs.
pub fn validate(inst: &Instance, plan: &Plan) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen_vehicle = BTreeMap::new();
    let mut served: BTreeMap<usize, usize> = BTreeMap::new();

    for (ti, tp) in plan.tours.iter().enumerate() {
        if tp.vehicle >= inst.vehicles.len() {
            report.violations.push(Violation::Malformed { tour: ti, reason: format!("unknown vehicle {}", tp.vehicle) });
            report.tours.push(None);
            continue;
        }
        if seen_vehicle.insert(tp.vehicle, ti).is_some() {
            report.violations.push(Violation::VehicleReused { vehicle: tp.vehicle });
        }
        match check_tour(inst, ti, tp.vehicle, &tp.actions, tp.t0, &mut report.violations) {
            Some(check) => {
                report.cost += check.cost;
                report.tours.push(Some(check));
            }
            None => report.tours.push(None),
        }
        for a in &tp.actions {
            if let Action::Delivery(i) = *a {
                *served.entry(i).or_default() += 1;
            }
        }
    }

    for (i, item) in inst.items.iter().enumerate() {
        let count = served.get(&i).copied().unwrap_or(0);
        let listed = plan.unserved.contains(&i);
        if count > 1 {
            report.violations.push(Violation::ServedTwice { item: i });
        }
        if count > 0 && listed {
            report.violations.push(Violation::UnservedButServed { item: i });
        }
        if count == 0 {
            if listed {
                report.cost += item.unserved_penalty;
            } else {
                report.violations.push(Violation::Missing { item: i });
            }
        }
    }
    report
}

fn check_tour(
    inst: &Instance,
    ti: usize,
    vehicle: usize,
    actions: &[Action],
    t0: f64,
    out: &mut Vec<Violation>,
) -> Option<TourCheck> {
    let malformed = |reason: &str| Violation::Malformed { tour: ti, reason: reason.to_string() };
    let m = actions.len();
    if m < 2 || actions[0] != Action::Start || actions[m - 1] != Action::Stop {
        out.push(malformed("must run from START to STOP"));
        return None;
    }
    if actions[1..m - 1].iter().any(|a| matches!(a, Action::Start | Action::Stop)) {
        out.push(malformed("START or STOP inside the tour"));
        return None;
    }
    let mut stops = Vec::with_capacity(m);
    for &a in actions {
        match stop_of(inst, vehicle, a) {
            Some(s) => stops.push(s),
            None => {
                out.push(malformed(&format!("{a:?} does not exist")));
                return None;
            }
        }
    }

    // precedence and capacity
    let veh = &inst.vehicles[vehicle];
    let mut picked = BTreeMap::new();
    let mut load = vec![0.0; veh.capacity.len()];
    for a in actions {
        if let Action::Delivery(i) = *a {
            if inst.items[i].pickup.is_none() {
                add(&mut load, &inst.items[i].demand, 1.0);
            }
        }
    }
    let check_load = |load: &[f64], position: usize, out: &mut Vec<Violation>| {
        for (l, c) in load.iter().zip(&veh.capacity) {
            if *l > c + TOL {
                out.push(Violation::Capacity { tour: ti, position, load: *l, capacity: *c });
            }
        }
    };
    check_load(&load, 0, out);
    for (k, a) in actions.iter().enumerate() {
        match *a {
            Action::Pickup(i) => {
                picked.insert(i, k);
                add(&mut load, &inst.items[i].demand, 1.0);
                check_load(&load, k, out);
            }
            Action::Delivery(i) => {
                if inst.items[i].pickup.is_some() && !picked.contains_key(&i) {
                    out.push(Violation::Precedence { item: i });
                }
                add(&mut load, &inst.items[i].demand, -1.0);
            }
            _ => {}
        }
    }

    // fold composition
    let mut parts = Vec::with_capacity(m);
    for k in 0..m {
        let s = &stops[k];
        let window = Atf::window(s.open, s.close, s.duration);
        let part = if k + 1 < m {
            match compose(&window, inst.arc(s.address, stops[k + 1].address)) {
                Ok(p) => p,
                Err(_) => {
                    out.push(Violation::EmptyDomain { tour: ti });
                    return None;
                }
            }
        } else {
            window
        };
        parts.push(part);
    }
    let mut tour_atf = parts[0].clone();
    for p in &parts[1..] {
        match compose(&tour_atf, p) {
            Ok(a) => tour_atf = a,
            Err(_) => {
                out.push(Violation::EmptyDomain { tour: ti });
                return None;
            }
        }
    }
    if t0 < tour_atf.t_min() - TOL || t0 > tour_atf.t_max() + TOL {
        out.push(Violation::StartOutsideDomain { tour: ti, t0 });
    }

    // simulation
    let mut starts = Vec::with_capacity(m);
    let mut t = t0;
    for k in 0..m {
        if k > 0 {
            let arc = inst.arc(stops[k - 1].address, stops[k].address);
            t = arc.eval_clamped(t);
        }
        let s = &stops[k];
        if t > s.close + TOL {
            out.push(Violation::MissedWindow { tour: ti, position: k, arrival: t, close: s.close });
        }
        let start = t.max(s.open);
        starts.push(start);
        t = start + s.duration;
    }
    let end = t;
    if end > veh.availability.1 + TOL {
        out.push(Violation::Availability { tour: ti, end, limit: veh.availability.1 });
    }
    if let Some(limit) = veh.max_duration {
        if end - t0 > limit + TOL {
            out.push(Violation::MaxDuration { tour: ti, duration: end - t0, limit });
        }
    }

    let model = CostModel {
        overtime: crate::scheduler::OvertimeCost::zero(),
        work_rate: StepCost::constant(veh.time_cost_rate),
    };
    let scheduled = total_cost(&tour_atf, &model, t0.clamp(tour_atf.t_min(), tour_atf.t_max())).unwrap_or(f64::NAN);
    Some(TourCheck { cost: veh.fixed_cost + scheduled, starts, end })
}

fn add(load: &mut [f64], demand: &[f64], sign: f64) {
    for (l, d) in load.iter_mut().zip(demand) {
        *l += sign * d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Item, TourPlan, Vehicle};
    use std::collections::BTreeSet;

    fn two_point() -> Instance {
        let arc = |d: f64| Atf::constant_travel(d, 0.0, 1000.0).with_cost(StepCost::constant(d));
        Instance {
            name: "two".into(),
            addresses: 2,
            matrix: vec![arc(0.0), arc(5.0), arc(5.0), arc(0.0)],
            items: vec![Item {
                id: 0,
                pickup: None,
                delivery: Stop { address: 1, open: 10.0, close: 20.0, duration: 2.0 },
                demand: vec![1.0],
                unserved_penalty: 100.0,
            }],
            vehicles: vec![Vehicle {
                id: 0,
                start_address: 0,
                end_address: 0,
                fixed_cost: 7.0,
                time_cost_rate: 0.0,
                availability: (0.0, 100.0),
                max_duration: None,
                capacity: vec![1.0],
            }],
        }
    }

    fn plan(t0: f64) -> Plan {
        Plan {
            tours: vec![TourPlan {
                vehicle: 0,
                actions: vec![Action::Start, Action::Delivery(0), Action::Stop],
                t0,
            }],
            unserved: BTreeSet::new(),
            cost: 0.0,
        }
    }

    #[test]
    fn empty_plan_without_items_is_feasible() {
        let mut inst = two_point();
        inst.items.clear();
        let r = validate(&inst, &Plan { tours: vec![], unserved: BTreeSet::new(), cost: 0.0 });
        assert!(r.is_feasible());
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn direct_tour_inside_window() {
        let r = validate(&two_point(), &plan(3.0));
        assert!(r.is_feasible(), "{:?}", r.violations);
        assert_eq!(r.cost, 17.0);
        assert_eq!(r.tours[0].as_ref().unwrap().starts, vec![3.0, 10.0, 17.0]);
    }

    #[test]
    fn late_delivery_is_reported() {
        let r = validate(&two_point(), &plan(16.0));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::MissedWindow { position: 1, .. })));
    }

    #[test]
    fn missing_and_unserved_items() {
        let inst = two_point();
        let mut p = plan(3.0);
        p.tours.clear();
        assert_eq!(validate(&inst, &p).violations, vec![Violation::Missing { item: 0 }]);
        p.unserved.insert(0);
        let r = validate(&inst, &p);
        assert!(r.is_feasible());
        assert_eq!(r.cost, 100.0);
    }

    #[test]
    fn overload_is_reported() {
        let mut inst = two_point();
        inst.items[0].demand = vec![3.0];
        let r = validate(&inst, &plan(3.0));
        assert!(matches!(r.violations[0], Violation::Capacity { .. }));
    }
}
