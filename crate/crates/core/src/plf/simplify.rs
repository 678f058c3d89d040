use super::atf::interpolate;
use super::{Atf, PlfError, EPS_T};

/// Default approximation tolerance: half a percent of the shortest travel time.
pub fn default_epsilon(a: &Atf) -> f64 {
    0.005 * a.travel_bounds().lo
}

/// Half-plane `a * s + b * c <= g` over lines `y = c + s * (x - x_ref)`.
#[derive(Debug, Clone, Copy)]
struct Half {
    a: f64,
    b: f64,
    g: f64,
}

impl Half {
    /// Line passes on or below `(x, y)`.
    fn below(x_ref: f64, x: f64, y: f64) -> Half {
        Half { a: x - x_ref, b: 1.0, g: y }
    }

    /// Line passes on or above `(x, y)`.
    fn above(x_ref: f64, x: f64, y: f64) -> Half {
        Half { a: x_ref - x, b: -1.0, g: -y }
    }

    fn excess(&self, v: (f64, f64)) -> f64 {
        self.a * v.0 + self.b * v.1 - self.g
    }

    fn tolerance(&self, v: (f64, f64)) -> f64 {
        1e-11 * (self.g.abs() + (self.a * v.0).abs() + (self.b * v.1).abs()).max(1.0)
    }
}

fn meet(h1: &Half, h2: &Half) -> (f64, f64) {
    let det = h1.a * h2.b - h2.a * h1.b;
    let s = (h1.g * h2.b - h2.g * h1.b) / det;
    let c = (h1.a * h2.g - h2.a * h1.g) / det;
    (s, c)
}

/// Convex polygon of feasible lines, kept as a counter-clockwise cycle of
/// constraint edges.
#[derive(Debug, Clone)]
struct DualPolygon {
    edges: Vec<Half>,
    verts: Vec<(f64, f64)>,
}

impl DualPolygon {
    fn bounding(x_ref: f64, max_slope: f64, c_lo: f64, c_hi: f64) -> Self {
        let edges = vec![
            Half::above(x_ref, x_ref, c_lo),
            Half { a: 1.0, b: 0.0, g: max_slope },
            Half::below(x_ref, x_ref, c_hi),
            Half { a: -1.0, b: 0.0, g: max_slope },
        ];
        let mut p = DualPolygon { edges, verts: Vec::new() };
        p.refresh();
        p
    }

    fn refresh(&mut self) {
        let m = self.edges.len();
        self.verts = (0..m)
            .map(|i| meet(&self.edges[i], &self.edges[(i + 1) % m]))
            .collect();
    }

    /// Intersects with `h`; returns false if nothing is left.
    fn clip(&mut self, h: Half) -> bool {
        let m = self.verts.len();
        let outside: Vec<bool> = self
            .verts
            .iter()
            .map(|&v| h.excess(v) > h.tolerance(v))
            .collect();
        let n_out = outside.iter().filter(|&&o| o).count();
        if n_out == 0 {
            return true;
        }
        if n_out == m {
            return false;
        }
        // outside vertices form one cyclic run first..=last
        let first = (0..m)
            .find(|&i| outside[i] && !outside[(i + m - 1) % m])
            .expect("run start");
        let mut last = first;
        while outside[(last + 1) % m] {
            last = (last + 1) % m;
        }
        let mut edges = Vec::with_capacity(m + 1);
        let mut i = (last + 1) % m;
        loop {
            edges.push(self.edges[i]);
            if i == first {
                break;
            }
            i = (i + 1) % m;
        }
        edges.push(h);
        self.edges = edges;
        self.refresh();
        true
    }
}

#[derive(Debug, Clone, Copy)]
enum Chain {
    Upper,
    Lower,
}

struct Corridor<'a> {
    ts: &'a [f64],
    vs: &'a [f64],
    eps: f64,
}

impl Corridor<'_> {
    fn lower(&self, x: f64) -> f64 {
        let n = self.ts.len();
        if x <= self.ts[0] {
            return self.vs[0];
        }
        if x >= self.ts[n - 1] {
            return self.vs[n - 1];
        }
        let k = self.ts.partition_point(|&t| t <= x);
        interpolate(self.ts[k - 1], self.vs[k - 1], self.ts[k], self.vs[k], x)
    }

    fn upper(&self, x: f64) -> f64 {
        self.lower(x) + self.eps
    }
}

fn line_at(v: (f64, f64), x_ref: f64, x: f64) -> f64 {
    v.1 + v.0 * (x - x_ref)
}

/// Where the line `v` crosses the window from `up` to `low`.
fn cross_window(v: (f64, f64), x_ref: f64, up: (f64, f64), low: (f64, f64)) -> (f64, f64) {
    let (dx, dy) = (low.0 - up.0, low.1 - up.1);
    let denom = v.0 * dx - dy;
    let num = up.1 - line_at(v, x_ref, up.0);
    let scale = (v.0 * dx).abs() + dy.abs();
    if denom.abs() <= 1e-12 * scale.max(1e-300) || scale == 0.0 {
        // line runs along the window
        return if up.0 >= low.0 { up } else { low };
    }
    let u = (num / denom).clamp(0.0, 1.0);
    let x = up.0 + u * dx;
    (x, line_at(v, x_ref, x))
}

/// Monotone approximation with the fewest breakpoints inside the corridor
/// `[f, f + eps]`. The attached cost is kept unchanged.
pub fn simplify(f: &Atf, eps: f64) -> Result<Atf, PlfError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(PlfError::InvalidEpsilon(eps));
    }
    let (ts, vs) = (f.ts(), f.vs());
    let n = ts.len();
    let t_max = ts[n - 1];
    if vs[n - 1] <= vs[0] + eps {
        return Ok(Atf::from_raw(vec![t_max], vec![vs[n - 1]], f.cost().clone()));
    }
    if n <= 2 {
        return Ok(f.clone());
    }
    let cor = Corridor { ts, vs, eps };
    let max_f_slope = (1..n)
        .map(|i| (vs[i] - vs[i - 1]) / (ts[i] - ts[i - 1]))
        .fold(1.0, f64::max);
    let max_slope = 1e6 * max_f_slope;

    let h = vs[0] + eps;
    let i1 = vs.partition_point(|&v| v < h);
    let t_h = interpolate(vs[i1 - 1], ts[i1 - 1], vs[i1], ts[i1], h);
    let mut up = (ts[0], h);
    let mut low = (t_h, h);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);

    for _round in 0..(4 * n + 8) {
        let w_min = up.0.min(low.0);
        let w_max = up.0.max(low.0);
        let x_ref = w_max;
        let f_ref = cor.lower(w_max);
        let mut poly = DualPolygon::bounding(x_ref, max_slope, f_ref - eps - 1.0, f_ref + 2.0 * eps + 1.0);
        poly.clip(Half::below(x_ref, up.0, up.1));
        poly.clip(Half::above(x_ref, low.0, low.1));
        // the pocket between the window and its far end
        if up.0 < low.0 {
            for j in 0..n {
                if ts[j] > w_min && ts[j] < w_max {
                    poly.clip(Half::below(x_ref, ts[j], vs[j] + eps));
                }
            }
            poly.clip(Half::below(x_ref, w_max, cor.upper(w_max)));
        } else if up.0 > low.0 {
            for j in 0..n {
                if ts[j] > w_min && ts[j] < w_max {
                    poly.clip(Half::above(x_ref, ts[j], vs[j]));
                }
            }
            poly.clip(Half::above(x_ref, w_max, cor.lower(w_max)));
        }

        let mut j = ts.partition_point(|&t| t <= w_max + EPS_T * 1e-3);
        let mut xc = w_max;
        let mut blocked: Option<(usize, DualPolygon)> = None;
        while j < n {
            let snapshot = poly.clone();
            let ok = poly.clip(Half::above(x_ref, ts[j], vs[j]))
                && poly.clip(Half::below(x_ref, ts[j], vs[j] + eps));
            if !ok {
                blocked = Some((j, snapshot));
                break;
            }
            xc = ts[j];
            j += 1;
        }

        let Some((j, snap)) = blocked else {
            // the last segment reaches t_max: steepest feasible line
            let v = poly
                .verts
                .iter()
                .copied()
                .max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
                .expect("non-empty polygon");
            out.push(cross_window(v, x_ref, up, low));
            out.push((t_max, line_at(v, x_ref, t_max)));
            let g = finish(out, f);
            // f itself is as short whenever the sweep finds no saving
            return Ok(if g.len() >= n { f.clone() } else { g });
        };

        // farthest reach inside the trapezoid [xc, ts[j]]
        let xg = ts[j];
        let (lo_c, lo_g) = (cor.lower(xc), vs[j]);
        let mut best: Option<(f64, Chain, (f64, f64))> = None;
        for &v in &snap.verts {
            let (lc, lg) = (line_at(v, x_ref, xc), line_at(v, x_ref, xg));
            let exit_up = if lg > lo_g + eps {
                ((lo_c + eps - lc) / ((lg - lc) - (lo_g - lo_c))).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let exit_low = if lg < lo_g {
                ((lc - lo_c) / ((lc - lg) - (lo_c - lo_g))).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let (tau, chain) = if exit_up <= exit_low {
                (exit_up, Chain::Upper)
            } else {
                (exit_low, Chain::Lower)
            };
            best = match best {
                None => Some((tau, chain, v)),
                Some((bt, bc, bv)) => {
                    if tau > bt + 1e-12 {
                        Some((tau, chain, v))
                    } else if tau >= bt - 1e-12 {
                        let better = match bc {
                            Chain::Upper => v.0 > bv.0,
                            Chain::Lower => v.0 < bv.0,
                        };
                        if better {
                            Some((bt.max(tau), bc, v))
                        } else {
                            Some((bt, bc, bv))
                        }
                    } else {
                        Some((bt, bc, bv))
                    }
                }
            };
        }
        let (tau, chain, v) = best.expect("polygon has vertices");
        let x_star = xc + tau * (xg - xc);
        let q = cross_window(v, x_ref, up, low);
        out.push(q);
        let far = (x_star, line_at(v, x_ref, x_star));

        // last contact with the opposite chain between q and the exit
        let mut cands: Vec<f64> = ts
            .iter()
            .copied()
            .filter(|&t| t >= q.0 && t < x_star)
            .collect();
        cands.push(w_max);
        cands.push(match chain {
            Chain::Upper => low.0,
            Chain::Lower => up.0,
        });
        let mut contact: Option<f64> = None;
        for &x in &cands {
            if x < q.0 - EPS_T || x > x_star {
                continue;
            }
            let y = line_at(v, x_ref, x);
            let gap = match chain {
                Chain::Upper => y - cor.lower(x),
                Chain::Lower => cor.upper(x) - y,
            };
            if gap.abs() <= 1e-9 * (1.0 + y.abs()) && contact.is_none_or(|c| x > c) {
                contact = Some(x);
            }
        }
        let cx = contact.unwrap_or(q.0);
        let near = (cx, line_at(v, x_ref, cx));
        match chain {
            Chain::Upper => {
                up = far;
                low = near;
            }
            Chain::Lower => {
                up = near;
                low = far;
            }
        }
    }
    debug_assert!(false, "corridor sweep did not terminate");
    Ok(f.clone())
}

/// Turns the chosen vertices into an ATF, snapping rounding noise.
fn finish(out: Vec<(f64, f64)>, f: &Atf) -> Atf {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for (x, y) in out {
        let x = x.min(f.t_max());
        match pts.last_mut() {
            Some(last) if x <= last.0 + EPS_T => {
                last.1 = last.1.max(y);
            }
            _ => pts.push((x, y)),
        }
    }
    let (ts, vs) = pts.into_iter().unzip();
    Atf::from_raw(ts, vs, f.cost().clone())
}

/// One sweep lowering each breakpoint of `g` as far as the corridor and
/// monotonicity allow, which never increases the area between `g` and `f`.
pub fn polish(g: &Atf, f: &Atf, eps: f64) -> Atf {
    let _ = eps;
    let mut pts: Vec<(f64, f64)> = g.breakpoints().collect();
    let (fts, fvs) = (f.ts(), f.vs());
    let m = pts.len();
    for i in 0..m {
        let (x, y) = pts[i];
        let mut lb = f.eval_clamped(x);
        if i > 0 {
            let (px, py) = pts[i - 1];
            lb = lb.max(py);
            for k in 0..fts.len() {
                if fts[k] > px && fts[k] < x {
                    let r = (fts[k] - px) / (x - px);
                    lb = lb.max(py + (fvs[k] - py) / r);
                }
            }
        }
        if i + 1 < m {
            let (nx, ny) = pts[i + 1];
            for k in 0..fts.len() {
                if fts[k] > x && fts[k] < nx {
                    let r = (fts[k] - x) / (nx - x);
                    lb = lb.max((fvs[k] - r * ny) / (1.0 - r));
                }
            }
        } else if x < f.t_max() {
            lb = lb.max(f.eval_clamped(f.t_max()));
        }
        if i == 0 {
            // constant extension to the left of the first breakpoint
            lb = lb.max(f.eval_clamped(x));
        }
        pts[i].1 = y.min(lb);
    }
    let (ts, vs) = pts.into_iter().unzip();
    Atf::from_raw(ts, vs, g.cost().clone())
}
