use crate::plf::StepCost;
use crate::scheduler::work_time_integral;
use crate::solver::{Action, Instance, Plan, Stop};

/// Slack bucket bounds in minutes: `[10,15)`, `[5,10)`, `[0,5)`; a fourth
/// bucket counts late deliveries.
pub const SLACK_BUCKETS: [(f64, f64); 3] = [(10.0, 15.0), (5.0, 10.0), (0.0, 5.0)];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub tours: usize,
    pub deliveries: usize,
    /// Pickups and deliveries starting after their window.
    pub late: usize,
    /// Largest lateness in seconds.
    pub max_delay: f64,
    /// Counts per `SLACK_BUCKETS` entry followed by the late count.
    pub slack: [usize; 4],
    /// Fixed, time and attached costs plus unserved penalties.
    pub cost: f64,
}

/// Drives every tour of `plan` under the instance's travel times, leaving
/// at the planned start, waiting for windows to open and counting late
/// arrivals. Slack is the time from service start to window close.
pub fn evaluate_under(inst: &Instance, plan: &Plan) -> EvaluationReport {
    let mut r = EvaluationReport { tours: plan.tours.len(), ..EvaluationReport::default() };
    for tp in &plan.tours {
        let v = &inst.vehicles[tp.vehicle];
        let stop = |a: Action| -> Stop {
            match a {
                Action::Start => Stop { address: v.start_address, open: v.availability.0, close: v.availability.1, duration: 0.0 },
                Action::Stop => Stop { address: v.end_address, open: v.availability.0, close: v.availability.1, duration: 0.0 },
                Action::Pickup(i) => inst.items[i].pickup.clone().expect("pickup exists"),
                Action::Delivery(i) => inst.items[i].delivery.clone(),
            }
        };
        let mut t = tp.t0;
        let mut attached = 0.0;
        let mut at = v.start_address;
        for &a in &tp.actions {
            let s = stop(a);
            if a != Action::Start {
                let arc = inst.arc(at, s.address);
                attached += arc.eval_cost(t);
                t = arc.eval_clamped(t);
            }
            let start = t.max(s.open);
            if a.item().is_some() {
                let slack = s.close - start;
                if slack < -1e-6 {
                    r.late += 1;
                    r.max_delay = r.max_delay.max(-slack);
                    r.slack[3] += 1;
                } else {
                    let minutes = slack.max(0.0) / 60.0;
                    if let Some(k) = SLACK_BUCKETS.iter().position(|&(lo, hi)| minutes >= lo && minutes < hi) {
                        r.slack[k] += 1;
                    }
                }
                if matches!(a, Action::Delivery(_)) {
                    r.deliveries += 1;
                }
            }
            t = start + s.duration;
            at = s.address;
        }
        r.cost += v.fixed_cost + attached + work_time_integral(&StepCost::constant(v.time_cost_rate), tp.t0, t);
    }
    r.cost += plan.unserved.iter().map(|&i| inst.items[i].unserved_penalty).sum::<f64>();
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plf::Atf;
    use crate::solver::{Item, TourPlan, Vehicle};
    use std::collections::BTreeSet;

    fn inst(travel: f64) -> Instance {
        let arc = |d: f64| Atf::constant_travel(d, 0.0, 1e5);
        Instance {
            name: "e".into(),
            addresses: 2,
            matrix: vec![arc(0.0), arc(travel), arc(travel), arc(0.0)],
            items: vec![Item {
                id: 0,
                pickup: None,
                delivery: Stop { address: 1, open: 0.0, close: 1200.0, duration: 60.0 },
                demand: vec![],
                unserved_penalty: 1.0,
            }],
            vehicles: vec![Vehicle {
                id: 0,
                start_address: 0,
                end_address: 0,
                fixed_cost: 200.0,
                time_cost_rate: 20.0,
                availability: (0.0, 1e5),
                max_duration: None,
                capacity: vec![],
            }],
        }
    }

    fn plan() -> Plan {
        Plan {
            tours: vec![TourPlan { vehicle: 0, actions: vec![Action::Start, Action::Delivery(0), Action::Stop], t0: 0.0 }],
            unserved: BTreeSet::new(),
            cost: 0.0,
        }
    }

    #[test]
    fn slack_buckets_and_lateness() {
        // arrives at 900: 5 minutes of slack
        let r = evaluate_under(&inst(900.0), &plan());
        assert_eq!(r.slack, [0, 1, 0, 0]);
        assert_eq!(r.late, 0);
        // 1860 s driving plus 60 s service at $20/h
        assert!((r.cost - (200.0 + 20.0 * 1860.0 / 3600.0)).abs() < 1e-9);
        let r = evaluate_under(&inst(1500.0), &plan());
        assert_eq!((r.late, r.max_delay, r.slack[3]), (1, 300.0, 1));
    }
}
