mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tdroute_core::plf::Atf;
use tdroute_core::scheduler::{optimal_start_counted, total_cost, CostModel};

fn schedule_shape() -> AtfShape {
    AtfShape {
        t_lo: 0.0,
        t_hi: 100.0,
        max_travel: 40.0,
        max_bp: 8,
        with_cost: true,
    }
}

fn check_case(a: &Atf, model: &CostModel, grid_points: usize) -> Result<(), String> {
    let (r, scanned) = optimal_start_counted(a, model);
    if r.t0 < a.t_min() || r.t0 > a.t_max() {
        return Err(format!("t0 {} outside domain", r.t0));
    }
    let sum = r.components.attached + r.components.overtime + r.components.work_time;
    if sum != r.total_cost {
        return Err("components do not add up".into());
    }
    let at_t0 = total_cost(a, model, r.t0).map_err(|e| e.to_string())?;
    if (at_t0 - r.total_cost).abs() > 1e-9 {
        return Err(format!("reported {} but cost at t0 is {at_t0}", r.total_cost));
    }
    let oracle = ScheduleOracle::new(a, model, grid_points);
    let best = oracle.best(a, model);
    if (r.total_cost - best).abs() > 1e-7 {
        return Err(format!("cost {} vs oracle {best}", r.total_cost));
    }
    let tol = 1e-9 * (1.0 + best.abs());
    if let Some(&t) = oracle
        .events
        .iter()
        .find(|&&t| t < r.t0 - 1e-7 && oracle_total(a, model, t) <= best + tol)
    {
        return Err(format!("earlier minimizer {t} before {}", r.t0));
    }
    let b_a = a.len();
    let b_ca = a.cost().discontinuities();
    let b_cot = model.overtime.len();
    let b_cwt = model.work_rate.discontinuities();
    if scanned > b_cot * b_a + b_ca + 2 * b_cwt + b_a + 2 {
        return Err(format!("scanned {scanned} events"));
    }
    Ok(())
}

#[test]
fn matches_brute_force() {
    let mut r = rng(41);
    for case in 0..300 {
        let a = random_atf(&mut r, schedule_shape());
        let model = random_model(&mut r, a.t_min() - 20.0, a.t_max() + 60.0);
        check_case(&a, &model, 10_000).unwrap_or_else(|e| panic!("case {case}: {e}"));
    }
}

#[test]
fn flat_cost_ties_pick_earliest_event() {
    let mut r = rng(42);
    for _ in 0..50 {
        let a = random_atf(&mut r, AtfShape { with_cost: false, ..schedule_shape() });
        let (res, _) = optimal_start_counted(&a, &CostModel::zero());
        assert_eq!(res.t0, a.t_min());
        assert_eq!(res.total_cost, 0.0);
    }
}

#[test]
fn point_domain() {
    let mut r = rng(43);
    for _ in 0..20 {
        let t = r.gen_range(0.0..50.0);
        let a = Atf::new(&[(t, t + r.gen_range(0.0..10.0))]).unwrap();
        let model = random_model(&mut r, 0.0, 100.0);
        check_case(&a, &model, 10).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_optimum_is_a_lower_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_atf(&mut r, schedule_shape());
        let model = random_model(&mut r, a.t_min() - 20.0, a.t_max() + 60.0);
        let (res, _) = optimal_start_counted(&a, &model);
        let span = a.t_max() - a.t_min();
        for i in 0..=200 {
            let t = (a.t_min() + span * i as f64 / 200.0).min(a.t_max());
            prop_assert!(res.total_cost <= total_cost(&a, &model, t).unwrap() + 1e-9);
        }
    }
}
