//! Line-oriented text form: `t,v t,v ... | c0 s,c s,c ...`.
//!
//! The part after `|` is the cost: its first value holds up to the first
//! jump, and each `s,c` pair switches to `c` at `s`. Floats use the shortest
//! representation that reads back to the same bits.

use std::fmt;
use std::str::FromStr;

use super::{Atf, StepCost};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ParseAtfError(pub String);

impl fmt::Display for StepCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut it = self.pieces();
        let (_, c0) = it.next().expect("step cost has a piece");
        write!(f, "{c0}")?;
        for (s, c) in it {
            write!(f, " {s},{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Atf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (t, v)) in self.breakpoints().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t},{v}")?;
        }
        write!(f, " | {}", self.cost())
    }
}

fn num(s: &str) -> Result<f64, ParseAtfError> {
    s.parse::<f64>()
        .map_err(|_| ParseAtfError(format!("bad number `{s}`")))
}

fn pair(s: &str) -> Result<(f64, f64), ParseAtfError> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| ParseAtfError(format!("expected `x,y`, got `{s}`")))?;
    Ok((num(a)?, num(b)?))
}

impl FromStr for StepCost {
    type Err = ParseAtfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut toks = s.split_whitespace();
        let c0 = num(toks.next().ok_or_else(|| ParseAtfError("empty cost".into()))?)?;
        let mut pieces = vec![(f64::NEG_INFINITY, c0)];
        for t in toks {
            pieces.push(pair(t)?);
        }
        StepCost::from_pieces(&pieces).map_err(|e| ParseAtfError(e.to_string()))
    }
}

impl FromStr for Atf {
    type Err = ParseAtfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (pts, cost) = match s.split_once('|') {
            Some((p, c)) => (p, Some(c)),
            None => (s, None),
        };
        let pts = pts
            .split_whitespace()
            .map(pair)
            .collect::<Result<Vec<_>, _>>()?;
        let atf = Atf::new(&pts).map_err(|e| ParseAtfError(e.to_string()))?;
        let cost = match cost {
            Some(c) => c.parse()?,
            None => StepCost::zero(),
        };
        Ok(atf.with_cost(cost))
    }
}
