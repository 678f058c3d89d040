mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tdroute_core::plf::{
    compose, compose_chain, envelope_affine, min2, min_n, multi_sort, polish, simplify, Atf, Line,
    PiecewiseLinear,
};

fn second_shape(rng: &mut rand_chacha::ChaCha8Rng) -> AtfShape {
    let lo = rng.gen_range(0.0..80.0);
    AtfShape {
        t_lo: lo,
        t_hi: lo + rng.gen_range(10.0..150.0),
        ..AtfShape::default()
    }
}

#[test]
fn compose_matches_pointwise_chain() {
    let mut r = rng(11);
    let mut empty = 0;
    for case in 0..300 {
        let a1 = random_atf(&mut r, AtfShape::default());
        let shape = second_shape(&mut r);
        let a2 = random_atf(&mut r, shape);
        match compose(&a1, &a2) {
            Ok(c) => {
                let list = [a1.clone(), a2.clone()];
                check_against_chain(&list, &c, 2000, 1e-9).unwrap_or_else(|e| panic!("case {case}: {e}"));
                check_cost_against_chain(&list, &c, 500).unwrap_or_else(|e| panic!("case {case}: {e}"));
                assert!(c.len() <= a1.len() + a2.len() - 1, "case {case}");
                c.check_invariants().unwrap();
                assert!(
                    c.cost().discontinuities()
                        <= a1.cost().discontinuities() + a2.cost().discontinuities()
                );
            }
            Err(_) => {
                empty += 1;
                assert!(a1.vs()[0] > a2.t_max());
            }
        }
    }
    assert!(empty < 150);
}

#[test]
fn chain_equals_fold() {
    let mut r = rng(12);
    let shape = AtfShape {
        t_lo: 0.0,
        t_hi: 1000.0,
        max_travel: 10.0,
        max_bp: 6,
        with_cost: true,
    };
    for case in 0..150 {
        let k = r.gen_range(1..=12);
        let list: Vec<Atf> = (0..k).map(|_| random_atf(&mut r, shape)).collect();
        let chained = compose_chain(&list);
        let folded = fold_compose(&list);
        match (chained, folded) {
            (Ok(c), Some(f)) => {
                let bound = 1 + list.iter().map(|a| a.len() - 1).sum::<usize>();
                assert!(c.len() <= bound, "case {case}");
                assert!((c.t_max() - f.t_max()).abs() < 1e-9, "case {case}");
                assert!(c.max_abs_diff(&f) < 1e-9, "case {case}");
                check_against_chain(&list, &c, 1000, 1e-9).unwrap_or_else(|e| panic!("case {case}: {e}"));
            }
            (Err(_), None) => {}
            (c, f) => panic!("case {case}: chain {:?} vs fold {:?}", c.is_ok(), f.is_some()),
        }
    }
}

#[test]
fn min2_matches_pointwise_min() {
    let mut r = rng(13);
    for case in 0..300 {
        let a = random_atf(&mut r, AtfShape::default());
        let b = random_atf(&mut r, AtfShape::default());
        let m = min2(&a, &b);
        m.check_invariants().unwrap();
        assert!(m.len() <= (2 * (a.len() + b.len())).saturating_sub(3).max(1), "case {case}");
        let hi = a.t_max().min(b.t_max());
        assert_eq!(m.t_max(), hi);
        for t in grid(a.t_min().min(b.t_min()) - 5.0, hi, 2000).chain(m.ts().iter().copied()) {
            let want = a.eval_clamped(t).min(b.eval_clamped(t));
            assert!((m.eval(t).unwrap() - want).abs() < 1e-9, "case {case} t={t}");
        }
        let n = min2(&b, &a);
        assert!(m.max_abs_diff(&n) < 1e-9);
    }
}

#[test]
fn min_n_matches_fold_and_pointwise() {
    let mut r = rng(14);
    for case in 0..120 {
        let n = r.gen_range(1..=64);
        let fs: Vec<PiecewiseLinear> = (0..n)
            .map(|_| {
                let s = r.gen_range(1..=10);
                random_pwl(&mut r, s, 0.0, 100.0)
            })
            .collect();
        let m = min_n(&fs).unwrap();
        let mut fold = fs[0].clone();
        for f in &fs[1..] {
            fold = fold.min2(f).unwrap();
        }
        let probe: Vec<f64> = grid(0.0, 100.0, 2000)
            .chain(m.xs().iter().copied())
            .chain(fold.xs().iter().copied())
            .collect();
        for x in probe {
            let want = fs.iter().map(|f| f.eval(x).unwrap()).fold(f64::INFINITY, f64::min);
            let got = m.eval(x).unwrap();
            assert!((got - want).abs() < 1e-9, "case {case} n={n} x={x}: {got} vs {want}");
            assert!((fold.eval(x).unwrap() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn min_n_of_atfs_is_an_atf() {
    let mut r = rng(15);
    for _ in 0..50 {
        let n = r.gen_range(2..=20);
        let atfs: Vec<Atf> = (0..n)
            .map(|_| random_atf(&mut r, AtfShape { with_cost: false, ..AtfShape::default() }))
            .collect();
        let x0 = atfs.iter().map(|a| a.t_min()).fold(f64::INFINITY, f64::min);
        let xm = atfs.iter().map(|a| a.t_max()).fold(f64::INFINITY, f64::min);
        let fs: Vec<PiecewiseLinear> = atfs
            .iter()
            .map(|a| PiecewiseLinear::from_atf(a, x0, xm))
            .collect();
        let m = min_n(&fs).unwrap().to_atf().unwrap();
        // the fold keeps the common domain (-inf, xm]
        m.check_invariants().unwrap();
        let mut fold = atfs[0].clone();
        for a in &atfs[1..] {
            fold = min2(&fold, a);
        }
        assert!(m.max_abs_diff(&fold) < 1e-9);
    }
}

#[test]
fn min_n_input_order_ties() {
    // several functions sharing breakpoints and whole segments
    let f = PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 2.0)]).unwrap();
    let g = PiecewiseLinear::new(&[(0.0, 0.5), (1.0, 1.0), (2.0, 0.5), (3.0, 2.0)]).unwrap();
    let fs = vec![f.clone(), g, f.clone(), f.clone(), f.clone()];
    let m = min_n(&fs).unwrap();
    assert_eq!(m, f);
}

#[test]
fn simplify_small_matches_grid_oracle() {
    let mut r = rng(16);
    for case in 0..40 {
        let f = random_atf(&mut r, AtfShape { max_bp: 6, with_cost: false, ..AtfShape::default() });
        let range = f.vs().last().unwrap() - f.vs()[0];
        if range <= 0.0 {
            continue;
        }
        let eps = 0.1 * range;
        let g = simplify(&f, eps).unwrap();
        check_sandwich(&f, &g, eps, 2000).unwrap_or_else(|e| panic!("case {case}: {e}"));
        g.check_invariants().unwrap();
        let mut best = min_breakpoints_grid(&f, eps, 16, 16);
        if g.len() < best {
            best = best.min(min_breakpoints_grid(&f, eps, 48, 48));
        }
        assert_eq!(g.len(), best, "case {case}: {f}");
    }
}

#[test]
fn simplify_sandwich_on_large_functions() {
    let mut r = rng(17);
    for case in 0..200 {
        let shape = AtfShape { max_bp: 60, t_hi: 1000.0, max_travel: 200.0, ..AtfShape::default() };
        let f = random_atf(&mut r, shape);
        let eps = r.gen_range(0.1..20.0);
        let g = simplify(&f, eps).unwrap();
        check_sandwich(&f, &g, eps, 3000).unwrap_or_else(|e| panic!("case {case}: {e}"));
        g.check_invariants().unwrap();
        assert!(g.len() <= f.len());
        assert_eq!(g.cost(), f.cost());
        let p = polish(&g, &f, eps);
        assert!(p.len() <= g.len());
        check_sandwich(&f, &p, eps, 1000).unwrap();
        assert!(area_between(&f, &p) <= area_between(&f, &g) + 1e-7);
    }
}

#[test]
fn envelope_matches_pointwise_min() {
    let mut r = rng(18);
    for _ in 0..200 {
        let n = r.gen_range(1..30);
        let mut lines: Vec<Line> = (0..n)
            .map(|_| Line::new(r.gen_range(-5..=5) as f64 * 0.5, r.gen_range(-20.0..20.0)))
            .collect();
        lines.sort_by(|a, b| a.slope.total_cmp(&b.slope));
        let e = envelope_affine(&lines);
        assert!(e.lines().windows(2).all(|w| w[0].slope > w[1].slope));
        assert!(e.breaks().len() < n.max(1));
        for x in grid(-50.0, 50.0, 1000) {
            let want = lines.iter().map(|l| l.at(x)).fold(f64::INFINITY, f64::min);
            assert!((e.eval(x) - want).abs() < 1e-9);
        }
    }
}

#[test]
fn multi_sort_matches_per_set_sort() {
    let mut r = rng(19);
    for _ in 0..100 {
        let m = r.gen_range(1..200);
        let values: Vec<f64> = (0..m).map(|_| r.gen_range(-10..10) as f64).collect();
        let sets: Vec<Vec<usize>> = (0..r.gen_range(1..20))
            .map(|_| {
                let k = r.gen_range(1..=m);
                let mut s: Vec<usize> = (0..k).map(|_| r.gen_range(0..m)).collect();
                s.sort();
                s.dedup();
                s
            })
            .collect();
        let out = multi_sort(&values, &sets);
        for (set, sorted) in sets.iter().zip(&out) {
            let mut want = set.clone();
            want.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            assert_eq!(&want, sorted);
        }
    }
}

#[test]
fn text_round_trip_random() {
    let mut r = rng(20);
    for _ in 0..200 {
        let a = random_atf(&mut r, AtfShape::default());
        let b: Atf = a.to_string().parse().unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_compose_bound_and_values(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a1 = random_atf(&mut r, AtfShape::default());
        let a2 = random_atf(&mut r, AtfShape { t_hi: 200.0, ..AtfShape::default() });
        if let Ok(c) = compose(&a1, &a2) {
            prop_assert!(c.len() <= a1.len() + a2.len() - 1);
            prop_assert!(c.check_invariants().is_ok());
            for t in grid(a1.t_min() - 1.0, c.t_max(), 200) {
                let want = a2.eval(a1.eval(t).unwrap()).unwrap();
                prop_assert!((c.eval(t).unwrap() - want).abs() < 1e-9);
            }
            prop_assert!(c.cost().discontinuities()
                <= a1.cost().discontinuities() + a2.cost().discontinuities());
        }
    }

    #[test]
    fn prop_min2_bound_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_atf(&mut r, AtfShape::default());
        let b = random_atf(&mut r, AtfShape::default());
        let m = min2(&a, &b);
        prop_assert!(m.len() <= (2 * (a.len() + b.len())).saturating_sub(3).max(1));
        prop_assert!(m.check_invariants().is_ok());
        prop_assert_eq!(min2(&a, &a), a);
    }

    #[test]
    fn prop_simplify_sandwich(seed in any::<u64>(), eps in 0.01f64..10.0) {
        let mut r = rng(seed);
        let f = random_atf(&mut r, AtfShape { max_bp: 30, ..AtfShape::default() });
        let g = simplify(&f, eps).unwrap();
        prop_assert!(check_sandwich(&f, &g, eps, 500).is_ok());
        prop_assert!(g.check_invariants().is_ok());
    }
}
