mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdroute_core::solver::*;

/// Every position pair for `item`, priced by building the whole tour.
fn enumerate_insertions(ctx: &Context<'_>, tour: &Tour, item: usize) -> Option<f64> {
    let m = tour.actions.len();
    let has_pickup = ctx.inst.items[item].pickup.is_some();
    let mut best: Option<f64> = None;
    for p in 0..m - 1 {
        let qs: Vec<usize> = if has_pickup { (p..m - 1).collect() } else { vec![p] };
        for q in qs {
            let ins = Insertion { pickup_after: has_pickup.then_some(p), delivery_after: q, delta: 0.0 };
            if let Some(t) = Tour::new(ctx, tour.vehicle, tour.actions_with(item, &ins)) {
                let d = t.cost - tour.cost;
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
    }
    best
}

fn partial_solution(ctx: &Context<'_>, rng: &mut ChaCha8Rng, tours: usize) -> Solution {
    let inst = ctx.inst;
    let mut sol = Solution::empty(inst);
    let mut v = 0;
    for item in 0..inst.items.len() {
        if sol.tours.len() < tours && v < inst.vehicles.len() {
            if let Some(t) = Tour::single(ctx, v, item) {
                sol.tours.push(t);
                sol.unserved.remove(&item);
                v += 1;
                continue;
            }
        }
        if rng.gen_bool(0.5) {
            let k = rng.gen_range(0..sol.tours.len().max(1));
            if let Some(t) = sol.tours.get_mut(k) {
                if let Some(ins) = t.best_insertion(ctx, item, true) {
                    if t.insert(ctx, item, &ins) {
                        sol.unserved.remove(&item);
                    }
                }
            }
        }
    }
    sol.recompute_cost(inst);
    sol
}

#[test]
fn insertion_scans_match_enumeration() {
    let mut r = rng(71);
    let mut checked = 0;
    for case in 0..60 {
        let (pickups, td) = (case % 2 == 1, case % 3 == 2);
        let inst = random_instance(&mut r, 12, 4, pickups, td);
        let ctx = Context::new(&inst, None);
        let sol = partial_solution(&ctx, &mut r, 3);
        for tour in &sol.tours {
            for &item in &sol.unserved {
                let want = enumerate_insertions(&ctx, tour, item);
                let full = tour.best_insertion(&ctx, item, true);
                let pruned = tour.best_insertion(&ctx, item, false);
                match (want, full, pruned) {
                    (None, None, None) => {}
                    (Some(w), Some(f), Some(p)) => {
                        assert!((w - f.delta).abs() < 1e-6, "case {case}: oracle {w} vs exhaustive {}", f.delta);
                        assert!((f.delta - p.delta).abs() < 1e-6, "case {case}: exhaustive {} vs pruned {}", f.delta, p.delta);
                        checked += 1;
                    }
                    other => panic!("case {case}: feasibility disagrees {other:?}"),
                }
            }
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn applied_insertions_match_predicted_delta_and_validate() {
    let mut r = rng(72);
    for case in 0..40 {
        let inst = random_instance(&mut r, 10, 3, case % 2 == 0, case % 4 < 2);
        let ctx = Context::new(&inst, None);
        let sol = partial_solution(&ctx, &mut r, 2);
        for tour in &sol.tours {
            for &item in &sol.unserved {
                let Some(ins) = tour.best_insertion(&ctx, item, false) else { continue };
                let mut t = tour.clone();
                assert!(t.insert(&ctx, item, &ins), "case {case}");
                assert!((t.cost - tour.cost - ins.delta).abs() < 1e-6, "case {case}");
                let mut one = Solution { tours: vec![t], unserved: BTreeSet::new(), cost: 0.0 };
                one.unserved = (0..inst.items.len()).filter(|i| !one.tours[0].actions.iter().any(|a| a.item() == Some(*i))).collect();
                one.recompute_cost(&inst);
                let report = validate(&inst, &one.plan());
                assert!(report.is_feasible(), "case {case}: {:?}", report.violations);
                assert!((report.cost - one.cost).abs() < 1e-6, "case {case}");
            }
        }
    }
}

#[test]
fn regret_choice_maximizes_enumerated_regret() {
    let mut r = rng(73);
    for case in 0..30 {
        let inst = random_instance(&mut r, 9, 4, case % 2 == 0, false);
        let ctx = Context::new(&inst, None);
        let tours = 1 + case % 3;
        let sol = partial_solution(&ctx, &mut r, tours);
        if sol.unserved.is_empty() {
            continue;
        }
        let choice = regret_step(&ctx, &sol, &sol.unserved).expect("some option");
        let used = sol.used_vehicles();
        let new_tour = |i: usize| {
            (0..inst.vehicles.len())
                .filter(|v| !used.contains(v))
                .filter_map(|v| Tour::single(&ctx, v, i).map(|t| t.cost))
                .fold(None, |b: Option<f64>, c| Some(b.map_or(c, |b| b.min(c))))
        };
        let regret = |i: usize| {
            let sentinel = new_tour(i).unwrap_or(1e6);
            let costs: Vec<f64> = sol.tours.iter().map(|t| enumerate_insertions(&ctx, t, i).unwrap_or(sentinel)).collect();
            let mean = costs.iter().sum::<f64>() / costs.len() as f64;
            mean - costs.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let best = sol.unserved.iter().map(|&i| regret(i)).fold(f64::NEG_INFINITY, f64::max);
        assert!((regret(choice.item) - best).abs() < 1e-6, "case {case}: chose {} with {} < {best}", choice.item, regret(choice.item));
        if tours == 1 {
            assert!(choice.regret.abs() < 1e-9);
        }
    }
}

#[test]
fn single_tour_inserts_cheapest_first() {
    let mut r = rng(74);
    let mut inst = random_instance(&mut r, 6, 1, false, false);
    for it in &mut inst.items {
        it.delivery.open = 0.0;
        it.delivery.close = 1000.0;
        it.demand = vec![1.0];
    }
    let ctx = Context::new(&inst, None);
    let mut sol = Solution::empty(&inst);
    sol.tours.push(Tour::single(&ctx, 0, 0).unwrap());
    sol.unserved.remove(&0);
    sol.recompute_cost(&inst);
    let choice = regret_step(&ctx, &sol, &sol.unserved).unwrap();
    let cheapest = sol
        .unserved
        .iter()
        .map(|&i| (sol.tours[0].best_insertion(&ctx, i, true).unwrap().delta, i))
        .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a });
    assert_eq!(choice.item, cheapest.1);
    assert_eq!(choice.regret, 0.0);
}

#[test]
fn two_identical_items_split_when_capacity_forces_it() {
    let mut r = rng(75);
    let mut inst = random_instance(&mut r, 2, 2, false, false);
    inst.items[1].delivery = inst.items[0].delivery.clone();
    for it in &mut inst.items {
        it.demand = vec![20.0];
        it.delivery.open = 0.0;
        it.delivery.close = 900.0;
    }
    let ctx = Context::new(&inst, None);
    let sol = regret_construct(&ctx, 0);
    assert_eq!(sol.tours.len(), 2);
    assert!(sol.tours.iter().all(|t| t.items().count() == 1));
}

#[test]
fn construction_and_search_stay_feasible() {
    let mut r = rng(76);
    for case in 0..12 {
        let inst = random_instance(&mut r, 25, 8, case % 2 == 1, case % 3 == 0);
        let ctx = Context::new(&inst, None);
        let built = regret_construct(&ctx, case);
        let report = validate(&inst, &built.plan());
        assert!(report.is_feasible(), "case {case}: {:?}", report.violations);
        assert!((report.cost - built.cost).abs() < 1e-6);
        let mut walk_rng = ChaCha8Rng::seed_from_u64(case);
        let walked = random_walk(&ctx, built.clone(), &mut walk_rng, 60);
        assert!(walked.cost <= built.cost + 1e-9);
        let report = validate(&inst, &walked.plan());
        assert!(report.is_feasible(), "case {case}: {:?}", report.violations);
        assert!((report.cost - walked.cost).abs() < 1e-6);
    }
}

#[test]
fn swaps_keep_solutions_valid_and_relocates_match_reinsertion() {
    let mut r = rng(77);
    for case in 0..20 {
        let inst = random_instance(&mut r, 16, 4, case % 2 == 1, case % 4 == 0);
        let ctx = Context::new(&inst, None);
        let sol = regret_construct(&ctx, 0);
        for a in 0..sol.tours.len() {
            for b in a + 1..sol.tours.len() {
                let (ta, tb) = (&sol.tours[a], &sol.tours[b]);
                if let Some((mv, d)) = best_swap(&ctx, ta, tb, false) {
                    let exact = swap_delta(&ctx, ta, tb, &mv).unwrap();
                    assert!((exact - d).abs() < 1e-6, "case {case}");
                    let (na, nb) = apply_swap(&ctx, ta, tb, &mv).unwrap();
                    let mut s2 = sol.clone();
                    s2.tours.clear();
                    for (k, t) in sol.tours.iter().enumerate() {
                        if k == a {
                            s2.tours.extend(na.clone());
                        } else if k == b {
                            s2.tours.extend(nb.clone());
                        } else {
                            s2.tours.push(t.clone());
                        }
                    }
                    s2.recompute_cost(&inst);
                    assert!((s2.cost - sol.cost - d).abs() < 1e-6, "case {case}");
                    let report = validate(&inst, &s2.plan());
                    assert!(report.is_feasible(), "case {case}: {:?}", report.violations);
                }
                // relocating a single delivery-only action equals remove + best reinsertion position
                for (k, act) in ta.actions.iter().enumerate() {
                    let Action::Delivery(i) = *act else { continue };
                    if inst.items[i].pickup.is_some() || ta.len() <= 3 {
                        continue;
                    }
                    let Some(ins) = tb.best_insertion(&ctx, i, true) else { continue };
                    let mv = SwapMove { seg_a: (k, k), seg_b: (ins.delivery_after + 1, ins.delivery_after), reverse_into_a: false, reverse_into_b: false };
                    let Some(d) = swap_delta(&ctx, ta, tb, &mv) else { continue };
                    let rest = ta.without(&ctx, &|x| x == i).unwrap();
                    assert!((d - (rest.cost - ta.cost + ins.delta)).abs() < 1e-6, "case {case}");
                }
            }
        }
    }
}

#[test]
fn solve_is_deterministic_and_no_worse_than_construction() {
    let mut r = rng(78);
    let inst = random_instance(&mut r, 30, 10, false, true);
    let cfg = Config { iterations: 40, seed: 7, ..Config::default() };
    let a = solve(&inst, &cfg);
    let b = solve(&inst, &cfg);
    assert_eq!(a.plan(), b.plan());
    let ctx = Context::new(&inst, None);
    assert!(a.cost <= regret_construct(&ctx, 7).cost + 1e-9);
}

#[test]
fn seed_examples() {
    let mut r = rng(79);
    let inst = random_instance(&mut r, 3, 3, false, false);
    let ctx = Context::new(&inst, None);
    let lonely: Vec<f64> = vec![1.0, 2.0, 3.0];
    let seeds = select_seeds_by(&ctx, &lonely);
    // greedy order by score; only friendships can exclude
    assert_eq!(seeds[0], 2);
    for i in 0..3 {
        if !seeds.contains(&i) {
            assert!(seeds.iter().any(|&s| ctx.are_friends(s, i) || ctx.are_friends(i, s)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_raising_importance_keeps_seed(seed in any::<u64>(), pick in 0usize..12, boost in 0.0f64..1e6) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 12, 12, false, false);
        let ctx = Context::new(&inst, None);
        let mut scores: Vec<f64> = (0..12).map(|i| importance(&inst, i)).collect();
        let before = select_seeds_by(&ctx, &scores);
        prop_assume!(before.contains(&pick));
        scores[pick] += boost;
        prop_assert!(select_seeds_by(&ctx, &scores).contains(&pick));
    }

    #[test]
    fn prop_walk_is_monotone_and_feasible(seed in any::<u64>(), budget in 0usize..30) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 15, 5, seed % 2 == 0, seed % 3 == 0);
        let ctx = Context::new(&inst, None);
        let start = regret_construct(&ctx, 0);
        let mut walk_rng = ChaCha8Rng::seed_from_u64(seed);
        let out = random_walk(&ctx, start.clone(), &mut walk_rng, budget);
        prop_assert!(out.cost <= start.cost + 1e-9);
        let report = validate(&inst, &out.plan());
        prop_assert!(report.is_feasible(), "{:?}", report.violations);
    }
}
