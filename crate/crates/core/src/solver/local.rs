use super::{Action, Context, Solution, Tour};

/// Longest sequence moved by a segment swap.
pub const MAX_SEGMENT: usize = 3;
/// Full passes over all tour pairs per call of [`improve_pairs`].
const MAX_PASSES: usize = 3;
const IMPROVE_EPS: f64 = 1e-9;

/// Exchange of `a.actions[seg_a.0..=seg_a.1]` with
/// `b.actions[seg_b.0..=seg_b.1]`. An empty segment has `to = from - 1`.
/// The `reverse_*` flags reverse the sequence on its way into the other
/// tour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapMove {
    pub seg_a: (usize, usize),
    pub seg_b: (usize, usize),
    pub reverse_into_a: bool,
    pub reverse_into_b: bool,
}

fn seg_len(seg: (usize, usize)) -> usize {
    seg.1 + 1 - seg.0
}

/// Segments that contain both actions of every pair item they touch.
fn closed_segments(tour: &Tour) -> Vec<(usize, usize)> {
    let m = tour.actions.len();
    let mut out = Vec::new();
    for from in 1..m {
        out.push((from, from - 1));
        for len in 1..=MAX_SEGMENT {
            let to = from + len - 1;
            if to > m - 2 {
                break;
            }
            let seq = &tour.actions[from..=to];
            let closed = seq.iter().all(|a| match a {
                Action::Pickup(i) => seq.contains(&Action::Delivery(*i)),
                Action::Delivery(i) => !tour.actions.contains(&Action::Pickup(*i)) || seq.contains(&Action::Pickup(*i)),
                _ => false,
            });
            if closed {
                out.push((from, to));
            }
        }
    }
    out
}

fn oriented(seq: &[Action], reverse: bool) -> Vec<Action> {
    let mut v = seq.to_vec();
    if reverse {
        v.reverse();
    }
    v
}

fn reversible(seq: &[Action]) -> bool {
    seq.len() >= 2 && !seq.iter().any(|a| matches!(a, Action::Pickup(_)))
}

fn spliced(tour: &Tour, seg: (usize, usize), seq: &[Action]) -> Vec<Action> {
    let mut out = tour.actions[..seg.0].to_vec();
    out.extend_from_slice(seq);
    out.extend_from_slice(&tour.actions[seg.1 + 1..]);
    out
}

/// Whether some item of `seq` is a friend of an item next to `seg`.
fn lands_near_friend(ctx: &Context<'_>, tour: &Tour, seg: (usize, usize), seq: &[Action]) -> bool {
    let neighbours = [tour.actions[seg.0 - 1].item(), tour.actions[seg.1 + 1].item()];
    seq.iter().filter_map(|a| a.item()).any(|x| {
        neighbours.iter().flatten().any(|&y| x == y || ctx.are_friends(x, y) || ctx.are_friends(y, x))
    })
}

/// Lower bound on the cost change of one side; exact when the flag is set.
fn side_bound(ctx: &Context<'_>, tour: &Tour, seg: (usize, usize), seq: &[Action]) -> (f64, bool) {
    if tour.actions.len() - seg_len(seg) + seq.len() == 2 {
        return (-tour.cost, true);
    }
    if !ctx.cost_is_arc_additive(tour.vehicle) {
        return (f64::NEG_INFINITY, false);
    }
    let v = tour.vehicle;
    let addr = |a: Action| ctx.address(v, a);
    let prev = tour.actions[seg.0 - 1];
    let next = tour.actions[seg.1 + 1];
    let (mut lo, mut exact) = (0.0, true);
    let mut add_path = |path: &mut dyn Iterator<Item = Action>, sign: f64| {
        let mut last: Option<Action> = None;
        for a in path {
            if let Some(l) = last {
                let (c_lo, c_hi) = ctx.arc_cost_bounds(addr(l), addr(a));
                lo += if sign > 0.0 { c_lo } else { -c_hi };
                exact &= c_lo == c_hi;
            }
            last = Some(a);
        }
    };
    add_path(&mut std::iter::once(prev).chain(seq.iter().copied()).chain([next]), 1.0);
    add_path(&mut tour.actions[seg.0 - 1..=seg.1 + 1].iter().copied(), -1.0);
    (lo, exact)
}

/// Exact cost change of one side, `None` if infeasible.
fn side_delta(ctx: &Context<'_>, tour: &Tour, seg: (usize, usize), seq: &[Action], bound: (f64, bool)) -> Option<f64> {
    if tour.actions.len() - seg_len(seg) + seq.len() == 2 {
        return Some(-tour.cost);
    }
    if !tour.splice_time_feasible(ctx, seg.0, seg.1, seq) {
        return None;
    }
    if !Tour::loads_fit(ctx, tour.vehicle, &spliced(tour, seg, seq)) {
        return None;
    }
    if bound.1 {
        return Some(bound.0);
    }
    let atf = tour.splice_atf(ctx, seg.0, seg.1, seq)?;
    tour.cost_of(ctx, &atf).map(|c| c - tour.cost)
}

/// Exact cost change of a move by composition, `None` if infeasible.
pub fn swap_delta(ctx: &Context<'_>, a: &Tour, b: &Tour, mv: &SwapMove) -> Option<f64> {
    let into_a = oriented(&b.actions[mv.seg_b.0..=mv.seg_b.1], mv.reverse_into_a);
    let into_b = oriented(&a.actions[mv.seg_a.0..=mv.seg_a.1], mv.reverse_into_b);
    let da = side_delta(ctx, a, mv.seg_a, &into_a, (f64::NEG_INFINITY, false))?;
    let db = side_delta(ctx, b, mv.seg_b, &into_b, (f64::NEG_INFINITY, false))?;
    Some(da + db)
}

/// New tours after a move; `None` in place of a tour that becomes empty.
/// The outer `None` means the move is infeasible.
pub fn apply_swap(ctx: &Context<'_>, a: &Tour, b: &Tour, mv: &SwapMove) -> Option<(Option<Tour>, Option<Tour>)> {
    let into_a = oriented(&b.actions[mv.seg_b.0..=mv.seg_b.1], mv.reverse_into_a);
    let into_b = oriented(&a.actions[mv.seg_a.0..=mv.seg_a.1], mv.reverse_into_b);
    let build = |t: &Tour, seg, seq: &[Action]| -> Option<Option<Tour>> {
        let actions = spliced(t, seg, seq);
        if actions.len() == 2 {
            Some(None)
        } else {
            Tour::new(ctx, t.vehicle, actions).map(Some)
        }
    };
    Some((build(a, mv.seg_a, &into_a)?, build(b, mv.seg_b, &into_b)?))
}

/// Best strictly improving segment swap between two tours, with its cost
/// change. With `use_friends`, at least one moved sequence must land next
/// to a friend.
pub fn best_swap(ctx: &Context<'_>, a: &Tour, b: &Tour, use_friends: bool) -> Option<(SwapMove, f64)> {
    let segs_a = closed_segments(a);
    let segs_b = closed_segments(b);
    let mut best: Option<(SwapMove, f64)> = None;
    for &sa in &segs_a {
        let seq_a = &a.actions[sa.0..=sa.1];
        for &sb in &segs_b {
            let seq_b = &b.actions[sb.0..=sb.1];
            if seq_a.is_empty() && seq_b.is_empty() {
                continue;
            }
            for rev_a in [false, true] {
                if rev_a && !reversible(seq_b) {
                    continue;
                }
                let into_a = oriented(seq_b, rev_a);
                let friendly_a = !into_a.is_empty() && lands_near_friend(ctx, a, sa, &into_a);
                let bound_a = side_bound(ctx, a, sa, &into_a);
                for rev_b in [false, true] {
                    if rev_b && !reversible(seq_a) {
                        continue;
                    }
                    let into_b = oriented(seq_a, rev_b);
                    if use_friends && !friendly_a && !(!into_b.is_empty() && lands_near_friend(ctx, b, sb, &into_b)) {
                        continue;
                    }
                    let bound_b = side_bound(ctx, b, sb, &into_b);
                    let target = best.map_or(-IMPROVE_EPS, |(_, d)| d);
                    if bound_a.0 + bound_b.0 >= target {
                        continue;
                    }
                    let Some(da) = side_delta(ctx, a, sa, &into_a, bound_a) else { continue };
                    if da + bound_b.0 >= target {
                        continue;
                    }
                    let Some(db) = side_delta(ctx, b, sb, &into_b, bound_b) else { continue };
                    if da + db < target {
                        let mv = SwapMove { seg_a: sa, seg_b: sb, reverse_into_a: rev_a, reverse_into_b: rev_b };
                        best = Some((mv, da + db));
                    }
                }
            }
        }
    }
    best
}

/// Applies the best strictly improving swap between two tours, if any.
pub fn segment_swap(ctx: &Context<'_>, a: &Tour, b: &Tour) -> Option<(Option<Tour>, Option<Tour>)> {
    let (mv, _) = best_swap(ctx, a, b, true)?;
    let (na, nb) = apply_swap(ctx, a, b, &mv)?;
    let old = a.cost + b.cost;
    let new = na.as_ref().map_or(0.0, |t| t.cost) + nb.as_ref().map_or(0.0, |t| t.cost);
    (new < old - IMPROVE_EPS).then_some((na, nb))
}

/// Segment swaps over all tour pairs until no pair improves or the pass
/// limit is hit. Empty tours are dropped. Returns whether anything changed.
pub fn improve_pairs(ctx: &Context<'_>, sol: &mut Solution) -> bool {
    let mut changed = false;
    for _ in 0..MAX_PASSES {
        let mut pass_changed = false;
        let mut i = 0;
        while i < sol.tours.len() {
            let mut j = i + 1;
            while j < sol.tours.len() {
                if let Some((na, nb)) = segment_swap(ctx, &sol.tours[i], &sol.tours[j]) {
                    pass_changed = true;
                    match nb {
                        Some(t) => sol.tours[j] = t,
                        None => {
                            sol.tours.remove(j);
                        }
                    }
                    match na {
                        Some(t) => sol.tours[i] = t,
                        None => {
                            sol.tours.remove(i);
                            j = i + 1;
                            continue;
                        }
                    }
                }
                j += 1;
            }
            i += 1;
        }
        changed |= pass_changed;
        if !pass_changed {
            break;
        }
    }
    if changed {
        sol.recompute_cost(ctx.inst);
    }
    changed
}
