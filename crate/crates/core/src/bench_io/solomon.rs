use super::{index, number, tokens, ParseError};
use crate::plf::{Atf, StepCost};
use crate::solver::{Instance, Item, Stop, Vehicle};

/// Cost settings for the classic benchmarks, which carry no prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Charged per used vehicle on top of the travelled distance.
    pub fixed_cost: f64,
    pub unserved_penalty: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { fixed_cost: 200.0, unserved_penalty: 1e5 }
    }
}

struct Site {
    x: f64,
    y: f64,
    demand: f64,
    open: f64,
    close: f64,
    service: f64,
}

/// Constant Euclidean arcs, unrounded, with the distance as attached cost.
fn euclidean_matrix(sites: &[Site], horizon: f64) -> Vec<Atf> {
    let mut m = Vec::with_capacity(sites.len() * sites.len());
    for a in sites {
        for b in sites {
            let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            m.push(Atf::constant_travel(d, 0.0, horizon).with_cost(StepCost::constant(d)));
        }
    }
    m
}

fn fleet(count: usize, capacity: f64, depot: &Site, opts: &BenchOptions) -> Vec<Vehicle> {
    (0..count)
        .map(|id| Vehicle {
            id,
            start_address: 0,
            end_address: 0,
            fixed_cost: opts.fixed_cost,
            time_cost_rate: 0.0,
            availability: (depot.open, depot.close),
            max_duration: None,
            capacity: vec![capacity],
        })
        .collect()
}

fn site(line: usize, toks: &[(usize, &str)]) -> Result<Site, ParseError> {
    Ok(Site {
        x: number(line, toks[1])?,
        y: number(line, toks[2])?,
        demand: number(line, toks[3])?,
        open: number(line, toks[4])?,
        close: number(line, toks[5])?,
        service: number(line, toks[6])?,
    })
}

fn check_window(line: usize, s: &Site) -> Result<(), ParseError> {
    if s.close < s.open || s.service < 0.0 {
        return Err(ParseError::new(line, 1, "invalid time window or service time"));
    }
    Ok(())
}

/// Solomon and Gehring–Homberger files: name, `VEHICLE` block with count
/// and capacity, `CUSTOMER` block whose first row is the depot. Every
/// customer becomes a delivery loaded at the depot.
pub fn parse_solomon(text: &str, opts: &BenchOptions) -> Result<Instance, ParseError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut it = lines.iter().copied();
    let (_, name) = it.next().ok_or_else(|| ParseError::new(1, 1, "empty file"))?;
    let expect_word = |it: &mut dyn Iterator<Item = (usize, &str)>, word: &str| -> Result<(), ParseError> {
        match it.next() {
            Some((_, l)) if l.trim().to_ascii_uppercase().starts_with(word) => Ok(()),
            Some((n, _)) => Err(ParseError::new(n, 1, format!("expected `{word}`"))),
            None => Err(ParseError::new(lines.len() + 1, 1, format!("missing `{word}`"))),
        }
    };
    expect_word(&mut it, "VEHICLE")?;
    expect_word(&mut it, "NUMBER")?;
    let (n, l) = it.next().ok_or_else(|| ParseError::new(0, 1, "missing vehicle data"))?;
    let toks = tokens(l);
    if toks.len() < 2 {
        return Err(ParseError::new(n, 1, "expected vehicle count and capacity"));
    }
    let count = index(n, toks[0])?;
    let capacity = number(n, toks[1])?;
    expect_word(&mut it, "CUSTOMER")?;
    expect_word(&mut it, "CUST")?;
    let mut sites = Vec::new();
    for (n, l) in it {
        let toks = tokens(l);
        if toks.len() < 7 {
            return Err(ParseError::new(n, toks.last().map_or(1, |t| t.0), "expected 7 columns"));
        }
        let id = index(n, toks[0])?;
        if id != sites.len() {
            return Err(ParseError::new(n, toks[0].0, format!("expected customer {}", sites.len())));
        }
        let s = site(n, &toks)?;
        check_window(n, &s)?;
        sites.push(s);
    }
    if sites.len() < 2 {
        return Err(ParseError::new(lines.last().map_or(1, |l| l.0), 1, "no customers"));
    }
    let depot = &sites[0];
    let horizon = depot.close.max(sites.iter().map(|s| s.close + s.service).fold(0.0, f64::max));
    let items = sites[1..]
        .iter()
        .enumerate()
        .map(|(i, s)| Item {
            id: i,
            pickup: None,
            delivery: Stop { address: i + 1, open: s.open, close: s.close, duration: s.service },
            demand: vec![s.demand],
            unserved_penalty: opts.unserved_penalty,
        })
        .collect();
    Ok(Instance {
        name: name.trim().to_string(),
        addresses: sites.len(),
        matrix: euclidean_matrix(&sites, horizon),
        items,
        vehicles: fleet(count, capacity, depot, opts),
    })
}

/// The 200-customer extension uses the same layout.
pub fn parse_homberger(text: &str, opts: &BenchOptions) -> Result<Instance, ParseError> {
    parse_solomon(text, opts)
}

/// Li–Lim pickup-and-delivery files: `K Q S` header, then rows `id x y
/// demand open close service pickup delivery`. Each pickup row with its
/// delivery row forms one item.
pub fn parse_lilim(text: &str, name: &str, opts: &BenchOptions) -> Result<Instance, ParseError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let (n, head) = *lines.first().ok_or_else(|| ParseError::new(1, 1, "empty file"))?;
    let toks = tokens(head);
    if toks.len() < 2 {
        return Err(ParseError::new(n, 1, "expected vehicle count and capacity"));
    }
    let count = index(n, toks[0])?;
    let capacity = number(n, toks[1])?;
    let mut sites = Vec::new();
    let mut links = Vec::new();
    for &(n, l) in &lines[1..] {
        let toks = tokens(l);
        if toks.len() < 9 {
            return Err(ParseError::new(n, toks.last().map_or(1, |t| t.0), "expected 9 columns"));
        }
        let id = index(n, toks[0])?;
        if id != sites.len() {
            return Err(ParseError::new(n, toks[0].0, format!("expected task {}", sites.len())));
        }
        let s = site(n, &toks)?;
        check_window(n, &s)?;
        sites.push(s);
        links.push((n, index(n, toks[7])?, index(n, toks[8])?));
    }
    if sites.len() < 2 {
        return Err(ParseError::new(lines.last().map_or(1, |l| l.0), 1, "no customers"));
    }
    let mut items = Vec::new();
    for (k, &(n, pick, del)) in links.iter().enumerate().skip(1) {
        if pick != 0 {
            continue;
        }
        if del == 0 || del >= sites.len() || links[del].1 != k {
            return Err(ParseError::new(n, 1, format!("task {k} has no matching delivery")));
        }
        let (p, d) = (&sites[k], &sites[del]);
        items.push(Item {
            id: items.len(),
            pickup: Some(Stop { address: k, open: p.open, close: p.close, duration: p.service }),
            delivery: Stop { address: del, open: d.open, close: d.close, duration: d.service },
            demand: vec![p.demand],
            unserved_penalty: opts.unserved_penalty,
        });
    }
    if items.is_empty() {
        return Err(ParseError::new(n, 1, "no pickup-and-delivery pairs"));
    }
    let depot = &sites[0];
    let horizon = depot.close.max(sites.iter().map(|s| s.close + s.service).fold(0.0, f64::max));
    Ok(Instance {
        name: name.to_string(),
        addresses: sites.len(),
        matrix: euclidean_matrix(&sites, horizon),
        items,
        vehicles: fleet(count, capacity, depot, opts),
    })
}
