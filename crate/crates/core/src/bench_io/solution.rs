//! Solution files:
//!
//! ```text
//! tdroute-solution 1
//! instance <name>
//! cost <total>
//! tour <vehicle> <t0> start d3 p1 d1 stop
//! unserved <ids...>
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{index, number, tokens, ParseError};
use crate::solver::{Action, Plan, TourPlan};

const MAGIC: &str = "tdroute-solution";

fn action_text(a: Action) -> String {
    match a {
        Action::Start => "start".into(),
        Action::Stop => "stop".into(),
        Action::Pickup(i) => format!("p{i}"),
        Action::Delivery(i) => format!("d{i}"),
    }
}

pub fn write_solution(instance: &str, plan: &Plan) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} 1").unwrap();
    writeln!(out, "instance {instance}").unwrap();
    writeln!(out, "cost {}", plan.cost).unwrap();
    for t in &plan.tours {
        let acts: Vec<String> = t.actions.iter().map(|&a| action_text(a)).collect();
        writeln!(out, "tour {} {} {}", t.vehicle, t.t0, acts.join(" ")).unwrap();
    }
    let un: Vec<String> = plan.unserved.iter().map(|i| i.to_string()).collect();
    writeln!(out, "unserved {}", un.join(" ")).unwrap();
    out
}

fn action(line: usize, (col, tok): (usize, &str)) -> Result<Action, ParseError> {
    let bad = || ParseError::new(line, col, format!("unknown action `{tok}`"));
    match tok {
        "start" => Ok(Action::Start),
        "stop" => Ok(Action::Stop),
        _ if tok.len() > 1 => {
            let i: usize = tok[1..].parse().map_err(|_| bad())?;
            match &tok[..1] {
                "p" => Ok(Action::Pickup(i)),
                "d" => Ok(Action::Delivery(i)),
                _ => Err(bad()),
            }
        }
        _ => Err(bad()),
    }
}

/// Returns the instance name and the plan.
pub fn parse_solution(text: &str) -> Result<(String, Plan), ParseError> {
    let mut name = String::new();
    let mut plan = Plan { tours: Vec::new(), unserved: BTreeSet::new(), cost: 0.0 };
    let mut seen_magic = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        if !seen_magic {
            if toks[0].1 != MAGIC {
                return Err(ParseError::new(n, toks[0].0, format!("expected `{MAGIC}`")));
            }
            seen_magic = true;
            continue;
        }
        match toks[0].1 {
            "instance" => name = toks.get(1).map_or("", |t| t.1).to_string(),
            "cost" => plan.cost = number(n, *toks.get(1).ok_or_else(|| ParseError::new(n, 1, "missing cost"))?)?,
            "tour" => {
                if toks.len() < 5 {
                    return Err(ParseError::new(n, 1, "a tour needs a vehicle, a start time and actions"));
                }
                let actions = toks[3..].iter().map(|&t| action(n, t)).collect::<Result<Vec<_>, _>>()?;
                plan.tours.push(TourPlan { vehicle: index(n, toks[1])?, t0: number(n, toks[2])?, actions });
            }
            "unserved" => {
                for &t in &toks[1..] {
                    plan.unserved.insert(index(n, t)?);
                }
            }
            other => return Err(ParseError::new(n, toks[0].0, format!("unknown record `{other}`"))),
        }
    }
    if !seen_magic {
        return Err(ParseError::new(1, 1, format!("expected `{MAGIC}`")));
    }
    Ok((name, plan))
}
