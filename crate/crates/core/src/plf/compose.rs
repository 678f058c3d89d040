use super::atf::interpolate;
use super::{Atf, PlfError, StepCost, EPS_T};

/// `second ∘ first`: depart at `t`, run `first`, then `second` from its
/// arrival. The domain is cut where `first` arrives after `second.t_max()`.
/// The cost is `second.cost ∘ first + first.cost`.
pub fn compose(first: &Atf, second: &Atf) -> Result<Atf, PlfError> {
    let (t1, v1) = (first.ts(), first.vs());
    let (t2, v2) = (second.ts(), second.vs());
    let (n1, n2) = (t1.len(), t2.len());
    let limit = second.t_max();
    if v1[0] > limit + EPS_T {
        return Err(PlfError::EmptyDomain);
    }

    let mut ts = Vec::with_capacity(n1 + n2);
    let mut vs = Vec::with_capacity(n1 + n2);
    if v1[0] >= limit {
        // arrival pinned to the very end of `second`
        let t_end = first.latest_departure(v1[0]).unwrap_or(t1[0]).min(t1[n1 - 1]);
        ts.push(t1[0]);
        vs.push(v2[n2 - 1]);
        if t_end > t1[0] {
            ts.push(t_end);
            vs.push(v2[n2 - 1]);
        }
        let cost = composed_cost(first, second, t_end);
        return Ok(Atf::from_raw(ts, vs, cost));
    }

    // k: first breakpoint of `second` strictly above the current arrival
    let mut k = t2.partition_point(|&s| s <= v1[0]);
    ts.push(t1[0]);
    vs.push(eval_at(t2, v2, k, v1[0]));
    let mut done = false;
    for i in 0..n1 - 1 {
        let (ta, xa, tb, xb) = (t1[i], v1[i], t1[i + 1], v1[i + 1]);
        while k < n2 && t2[k] < xb {
            // t2[k] > xa here, so the segment is not flat
            let t = if ta == xa && tb == xb {
                t2[k]
            } else {
                ta + (t2[k] - xa) * ((tb - ta) / (xb - xa))
            };
            ts.push(t.clamp(ta, tb));
            vs.push(v2[k]);
            if k == n2 - 1 {
                done = true;
                break;
            }
            k += 1;
        }
        if done {
            break;
        }
        if k < n2 && t2[k] == xb {
            ts.push(tb);
            vs.push(v2[k]);
            if k == n2 - 1 {
                // only a flat continuation at `limit` stays in the domain
                let mut j = i + 1;
                while j + 1 < n1 && v1[j + 1] == xb {
                    j += 1;
                    ts.push(t1[j]);
                    vs.push(v2[k]);
                }
                done = true;
                break;
            }
            k += 1;
        } else {
            ts.push(tb);
            vs.push(eval_at(t2, v2, k, xb));
        }
    }
    let _ = done;
    let t_end = *ts.last().unwrap();
    let cost = composed_cost(first, second, t_end);
    Ok(Atf::from_raw(ts, vs, cost))
}

/// Value of the function given by `(ts, vs)` at `x`, where `k` is the first
/// index with `ts[k] > x`.
fn eval_at(ts: &[f64], vs: &[f64], k: usize, x: f64) -> f64 {
    if k == 0 {
        vs[0]
    } else if k == ts.len() {
        vs[k - 1]
    } else {
        interpolate(ts[k - 1], vs[k - 1], ts[k], vs[k], x)
    }
}

/// `second.cost ∘ first + first.cost` on `(-inf, t_end]`.
fn composed_cost(first: &Atf, second: &Atf, t_end: f64) -> StepCost {
    let outer = pull_back(second.cost(), first, t_end);
    outer.add(first.cost()).truncated(t_end)
}

/// `cost ∘ atf` as a step function of the departure time.
fn pull_back(cost: &StepCost, atf: &Atf, t_end: f64) -> StepCost {
    let starts = cost.raw_starts();
    let values = cost.raw_values();
    if starts.len() == 1 {
        return cost.clone();
    }
    let (ts, vs) = (atf.ts(), atf.vs());
    let n = ts.len();
    let x0 = vs[0];
    let mut out_s = vec![f64::NEG_INFINITY];
    let mut out_v = vec![cost.eval(x0)];
    // segment pointer: vs[seg] < x <= vs[seg + 1] for the current jump x
    let mut seg = 0;
    for j in 1..starts.len() {
        let x = starts[j];
        let (before, after) = (values[j - 1], values[j]);
        if x < x0 {
            continue;
        }
        if x == x0 {
            let tb = flat_end(ts, vs, 0);
            if tb < t_end {
                out_s.push(tb);
                out_v.push(after);
            }
            continue;
        }
        while seg + 1 < n && vs[seg + 1] < x {
            seg += 1;
        }
        if seg + 1 >= n {
            break;
        }
        // first time reaching x
        let ta = if vs[seg + 1] == x {
            ts[seg + 1]
        } else {
            let (t0, a0, t1, a1) = (ts[seg], vs[seg], ts[seg + 1], vs[seg + 1]);
            (t0 + (x - a0) * ((t1 - t0) / (a1 - a0))).clamp(t0, t1)
        };
        if ta > t_end {
            break;
        }
        let tb = if vs[seg + 1] == x {
            flat_end(ts, vs, seg + 1)
        } else {
            ta
        };
        if tb > ta {
            out_s.push(ta);
            out_v.push(before.min(after));
            if tb < t_end {
                out_s.push(tb);
                out_v.push(after);
            }
        } else {
            out_s.push(ta);
            out_v.push(after);
        }
    }
    StepCost::normalized(out_s, out_v)
}

/// Last breakpoint time of the flat run starting at index `i`.
fn flat_end(ts: &[f64], vs: &[f64], i: usize) -> f64 {
    let mut j = i;
    while j + 1 < ts.len() && vs[j + 1] == vs[i] {
        j += 1;
    }
    ts[j]
}

/// Composes `list[0]`, then `list[1]`, and so on, by balanced halving.
pub fn compose_chain(list: &[Atf]) -> Result<Atf, PlfError> {
    match list.len() {
        0 => Err(PlfError::Invalid("empty composition chain".into())),
        1 => Ok(list[0].clone()),
        n => {
            let left = compose_chain(&list[..n / 2])?;
            let right = compose_chain(&list[n / 2..])?;
            compose(&left, &right)
        }
    }
}
