//! Line-oriented native instance format:
//!
//! ```text
//! tdroute-instance 1
//! name <name>
//! addresses <n>
//! arc <from> <to> <atf>
//! item <id> <pickup|-> <delivery> demand <d...> penalty <p>
//! vehicle <id> <start> <end> <fixed> <rate> <avail_lo> <avail_hi> <max_duration|-> capacity <c...>
//! ```
//!
//! A stop is written `address,open,close,duration`; the ATF text follows
//! the plf line format. Missing arcs are an error.

use std::fmt::Write as _;

use super::{index, number, tokens, ParseError};
use crate::plf::Atf;
use crate::solver::{Instance, Item, Stop, Vehicle};

pub(crate) const MAGIC: &str = "tdroute-instance";

fn stop_text(s: &Stop) -> String {
    format!("{},{},{},{}", s.address, s.open, s.close, s.duration)
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_native(inst: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} 1").unwrap();
    writeln!(out, "name {}", inst.name).unwrap();
    writeln!(out, "addresses {}", inst.addresses).unwrap();
    for from in 0..inst.addresses {
        for to in 0..inst.addresses {
            writeln!(out, "arc {from} {to} {}", inst.arc(from, to)).unwrap();
        }
    }
    for it in &inst.items {
        let pickup = it.pickup.as_ref().map_or("-".to_string(), stop_text);
        writeln!(
            out,
            "item {} {} {} demand {} penalty {}",
            it.id,
            pickup,
            stop_text(&it.delivery),
            list(&it.demand),
            it.unserved_penalty
        )
        .unwrap();
    }
    for v in &inst.vehicles {
        let maxd = v.max_duration.map_or("-".to_string(), |d| d.to_string());
        writeln!(
            out,
            "vehicle {} {} {} {} {} {} {} {} capacity {}",
            v.id,
            v.start_address,
            v.end_address,
            v.fixed_cost,
            v.time_cost_rate,
            v.availability.0,
            v.availability.1,
            maxd,
            list(&v.capacity)
        )
        .unwrap();
    }
    out
}

fn stop(line: usize, (col, tok): (usize, &str)) -> Result<Stop, ParseError> {
    let parts: Vec<&str> = tok.split(',').collect();
    if parts.len() != 4 {
        return Err(ParseError::new(line, col, format!("expected address,open,close,duration, found `{tok}`")));
    }
    let s = Stop {
        address: index(line, (col, parts[0]))?,
        open: number(line, (col, parts[1]))?,
        close: number(line, (col, parts[2]))?,
        duration: number(line, (col, parts[3]))?,
    };
    if s.close < s.open || s.duration < 0.0 {
        return Err(ParseError::new(line, col, "empty window or negative duration"));
    }
    Ok(s)
}

/// Numbers after `toks[from]` up to (not including) a keyword or the end.
fn numbers_until(line: usize, toks: &[(usize, &str)], from: usize, stop_word: Option<&str>) -> Result<(Vec<f64>, usize), ParseError> {
    let mut out = Vec::new();
    let mut k = from;
    while k < toks.len() && Some(toks[k].1) != stop_word {
        out.push(number(line, toks[k])?);
        k += 1;
    }
    Ok((out, k))
}

fn keyword(line: usize, toks: &[(usize, &str)], k: usize, word: &str) -> Result<(), ParseError> {
    match toks.get(k) {
        Some(&(_, w)) if w == word => Ok(()),
        Some(&(c, w)) => Err(ParseError::new(line, c, format!("expected `{word}`, found `{w}`"))),
        None => Err(ParseError::new(line, 1, format!("missing `{word}`"))),
    }
}

pub fn parse_native(text: &str) -> Result<Instance, ParseError> {
    let mut name = String::new();
    let mut addresses: Option<usize> = None;
    let mut matrix: Vec<Option<Atf>> = Vec::new();
    let mut items = Vec::new();
    let mut vehicles = Vec::new();
    let mut seen_magic = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks = tokens(line);
        if !seen_magic {
            if toks[0].1 != MAGIC {
                return Err(ParseError::new(n, 1, format!("expected `{MAGIC}`")));
            }
            seen_magic = true;
            continue;
        }
        match toks[0].1 {
            "name" => name = line["name".len()..].trim().to_string(),
            "addresses" => {
                let a = index(n, *toks.get(1).ok_or_else(|| ParseError::new(n, 1, "missing count"))?)?;
                addresses = Some(a);
                matrix = vec![None; a * a];
            }
            "arc" => {
                let a = addresses.ok_or_else(|| ParseError::new(n, 1, "arc before `addresses`"))?;
                if toks.len() < 4 {
                    return Err(ParseError::new(n, 1, "expected `arc from to atf`"));
                }
                let (from, to) = (index(n, toks[1])?, index(n, toks[2])?);
                if from >= a || to >= a {
                    return Err(ParseError::new(n, toks[1].0, "address out of range"));
                }
                let col = toks[3].0;
                let atf: Atf = line[col - 1..].parse().map_err(|e: crate::plf::ParseAtfError| ParseError::new(n, col, e.0))?;
                atf.check_invariants().map_err(|e| ParseError::new(n, col, e))?;
                matrix[from * a + to] = Some(atf);
            }
            "item" => {
                if toks.len() < 6 {
                    return Err(ParseError::new(n, 1, "incomplete item"));
                }
                let id = index(n, toks[1])?;
                let pickup = if toks[2].1 == "-" { None } else { Some(stop(n, toks[2])?) };
                let delivery = stop(n, toks[3])?;
                keyword(n, &toks, 4, "demand")?;
                let (demand, k) = numbers_until(n, &toks, 5, Some("penalty"))?;
                keyword(n, &toks, k, "penalty")?;
                let penalty = number(n, *toks.get(k + 1).ok_or_else(|| ParseError::new(n, 1, "missing penalty"))?)?;
                items.push(Item { id, pickup, delivery, demand, unserved_penalty: penalty });
            }
            "vehicle" => {
                if toks.len() < 10 {
                    return Err(ParseError::new(n, 1, "incomplete vehicle"));
                }
                let max_duration = if toks[8].1 == "-" { None } else { Some(number(n, toks[8])?) };
                keyword(n, &toks, 9, "capacity")?;
                let (capacity, _) = numbers_until(n, &toks, 10, None)?;
                vehicles.push(Vehicle {
                    id: index(n, toks[1])?,
                    start_address: index(n, toks[2])?,
                    end_address: index(n, toks[3])?,
                    fixed_cost: number(n, toks[4])?,
                    time_cost_rate: number(n, toks[5])?,
                    availability: (number(n, toks[6])?, number(n, toks[7])?),
                    max_duration,
                    capacity,
                });
            }
            other => return Err(ParseError::new(n, 1, format!("unknown record `{other}`"))),
        }
    }
    let last = text.lines().count().max(1);
    if !seen_magic {
        return Err(ParseError::new(1, 1, format!("expected `{MAGIC}`")));
    }
    let a = addresses.ok_or_else(|| ParseError::new(last, 1, "missing `addresses`"))?;
    let matrix = matrix
        .into_iter()
        .enumerate()
        .map(|(k, m)| m.ok_or_else(|| ParseError::new(last, 1, format!("missing arc {} -> {}", k / a, k % a))))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(ParseError::new(last, 1, "no items"));
    }
    let inst = Instance { name, addresses: a, matrix, items, vehicles };
    inst.check().map_err(|e| ParseError::new(last, 1, e))?;
    Ok(inst)
}
