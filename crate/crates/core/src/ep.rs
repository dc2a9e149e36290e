//! Offline error-pattern (EP) generation, test ordering and persistence.
//!
//! Patterns live in the reliability-rank domain: rank 1 is the least reliable
//! systematic bit of whatever frame is being decoded. Nothing here depends on
//! a particular code, so one table serves every code and every frame.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use smallvec::SmallVec;

use crate::error::{invalid, parse_err, Result};

/// A set of distinct reliability ranks to flip, kept in ascending order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ErrorPattern {
    ranks: SmallVec<[u32; 6]>,
}

impl ErrorPattern {
    /// `ranks` must be non-empty, positive and strictly increasing.
    pub fn new(ranks: &[u32]) -> Result<Self> {
        if ranks.is_empty() {
            return Err(invalid("error pattern has no ranks"));
        }
        if ranks[0] == 0 {
            return Err(invalid("ranks are 1-based"));
        }
        if ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!("ranks {ranks:?} are not strictly increasing")));
        }
        Ok(ErrorPattern {
            ranks: SmallVec::from_slice(ranks),
        })
    }

    fn from_sorted(ranks: SmallVec<[u32; 6]>) -> Self {
        debug_assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        ErrorPattern { ranks }
    }

    #[inline]
    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    /// Index weight: sum of the ranks.
    #[inline]
    pub fn index_weight(&self) -> u32 {
        self.ranks.iter().sum()
    }

    /// Hamming weight: number of flipped bits.
    #[inline]
    pub fn hamming_weight(&self) -> u32 {
        self.ranks.len() as u32
    }

    #[inline]
    pub fn max_rank(&self) -> u32 {
        *self.ranks.last().expect("patterns are non-empty")
    }

    pub fn priority_weight(&self, alpha: f64, beta: f64) -> f64 {
        priority_weight(self, alpha, beta)
    }
}

impl fmt::Debug for ErrorPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.ranks.iter().rev().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

/// `w_I + alpha · w_H^beta`.
pub fn priority_weight(ep: &ErrorPattern, alpha: f64, beta: f64) -> f64 {
    priority_weight_value(ep.index_weight(), ep.hamming_weight(), alpha, beta)
}

pub fn priority_weight_value(w_i: u32, w_h: u32, alpha: f64, beta: f64) -> f64 {
    w_i as f64 + alpha * (w_h as f64).powf(beta)
}

/// Test order of a table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpOrder {
    /// Hamming weight first, then index weight.
    IwHw,
    /// Priority weight `w_I + alpha · w_H^beta`, then Hamming weight.
    Pw { alpha: f64, beta: f64 },
}

impl EpOrder {
    pub fn name(&self) -> &'static str {
        match self {
            EpOrder::IwHw => "iwhw",
            EpOrder::Pw { .. } => "pw",
        }
    }

    /// Strict total order used for sorting; ties fall through to the
    /// lexicographic order of the ascending rank lists.
    pub fn compare(&self, a: &ErrorPattern, b: &ErrorPattern) -> Ordering {
        let primary = match *self {
            EpOrder::IwHw => a
                .hamming_weight()
                .cmp(&b.hamming_weight())
                .then(a.index_weight().cmp(&b.index_weight())),
            EpOrder::Pw { alpha, beta } => priority_weight(a, alpha, beta)
                .total_cmp(&priority_weight(b, alpha, beta))
                .then(a.hamming_weight().cmp(&b.hamming_weight())),
        };
        primary.then_with(|| a.ranks().cmp(b.ranks()))
    }
}

/// Every distinct-part partition of each `w_I` in `1..=w_i_max` with at most
/// `w_h_max` parts.
///
/// Patterns of weight `h` are derived from those of weight `h - 1` by
/// splitting the largest part `b` into `(a, b - a)`, where `a` runs from one
/// past the previous part up to `(b - 1) / 2`. That keeps every part distinct
/// and reaches each partition exactly once. Output is grouped by `w_I`, then
/// by `w_H`.
pub fn generate_eps(w_i_max: u32, w_h_max: u32) -> Vec<ErrorPattern> {
    let mut out = Vec::new();
    for w_i in 1..=w_i_max {
        let mut old: Vec<SmallVec<[u32; 6]>> = vec![SmallVec::from_slice(&[w_i])];
        out.push(ErrorPattern::from_sorted(old[0].clone()));
        for _w_h in 2..=w_h_max {
            let mut new = Vec::new();
            for parts in &old {
                let (&b, rest) = parts.split_last().expect("non-empty");
                let lo = rest.last().map_or(1, |&a| a + 1);
                for a in lo..=(b.saturating_sub(1)) / 2 {
                    let mut next: SmallVec<[u32; 6]> = SmallVec::from_slice(rest);
                    next.push(a);
                    next.push(b - a);
                    new.push(next);
                }
            }
            if new.is_empty() {
                break;
            }
            out.extend(new.iter().cloned().map(ErrorPattern::from_sorted));
            old = new;
        }
    }
    out
}

/// An ordered, immutable collection of error patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct EpTable {
    patterns: Vec<ErrorPattern>,
    order: EpOrder,
    w_i_max: u32,
    w_h_max: u32,
}

/// Sorts `eps` into `order`. Budgets are taken from the patterns themselves.
pub fn sort_eps(eps: Vec<ErrorPattern>, order: EpOrder) -> EpTable {
    let w_i_max = eps.iter().map(ErrorPattern::index_weight).max().unwrap_or(0);
    let w_h_max = eps.iter().map(ErrorPattern::hamming_weight).max().unwrap_or(0);
    EpTable::from_patterns(eps, order, w_i_max, w_h_max)
}

impl EpTable {
    /// Generates and sorts the full table for the given budgets.
    pub fn generate(w_i_max: u32, w_h_max: u32, order: EpOrder) -> Self {
        Self::from_patterns(generate_eps(w_i_max, w_h_max), order, w_i_max, w_h_max)
    }

    fn from_patterns(mut patterns: Vec<ErrorPattern>, order: EpOrder, w_i_max: u32, w_h_max: u32) -> Self {
        patterns.sort_by(|a, b| order.compare(a, b));
        EpTable {
            patterns,
            order,
            w_i_max,
            w_h_max,
        }
    }

    pub fn patterns(&self) -> &[ErrorPattern] {
        &self.patterns
    }

    pub fn order(&self) -> EpOrder {
        self.order
    }

    pub fn w_i_max(&self) -> u32 {
        self.w_i_max
    }

    pub fn w_h_max(&self) -> u32 {
        self.w_h_max
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ErrorPattern> {
        self.patterns.iter()
    }

    fn header(&self) -> String {
        let (alpha, beta) = match self.order {
            EpOrder::IwHw => (0.0, 0.0),
            EpOrder::Pw { alpha, beta } => (alpha, beta),
        };
        format!(
            "{MAGIC} wImax={} wHmax={} order={} alpha={alpha} beta={beta}",
            self.w_i_max,
            self.w_h_max,
            self.order.name()
        )
    }

    /// Writes the line-oriented store format.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        let mut line = String::new();
        for ep in &self.patterns {
            line.clear();
            for (i, r) in ep.ranks().iter().rev().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&r.to_string());
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the store format, validating every pattern and the sort order.
    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| parse_err(1, "missing header"))?;
        let (order, w_i_max, w_h_max) = parse_header(&header)?;
        let mut patterns: Vec<ErrorPattern> = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut ranks: Vec<u32> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|e| parse_err(line_no, format!("bad rank '{t}': {e}")))
                })
                .collect::<Result<_>>()?;
            if ranks.windows(2).any(|w| w[0] <= w[1]) {
                return Err(parse_err(line_no, "ranks must be strictly decreasing"));
            }
            ranks.reverse();
            let ep = ErrorPattern::new(&ranks).map_err(|e| parse_err(line_no, e.to_string()))?;
            if ep.index_weight() > w_i_max || ep.hamming_weight() > w_h_max {
                return Err(parse_err(line_no, format!("{ep:?} exceeds the header budget")));
            }
            if !seen.insert(ep.clone()) {
                return Err(parse_err(line_no, format!("duplicate pattern {ep:?}")));
            }
            if let Some(prev) = patterns.last() {
                if order.compare(prev, &ep) != Ordering::Less {
                    return Err(parse_err(line_no, format!("{ep:?} is out of order")));
                }
            }
            patterns.push(ep);
        }
        Ok(EpTable {
            patterns,
            order,
            w_i_max,
            w_h_max,
        })
    }
}

const MAGIC: &str = "peposd-ep v1";

fn parse_header(line: &str) -> Result<(EpOrder, u32, u32)> {
    let bad = |msg: String| parse_err(1, msg);
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad(format!("expected '{MAGIC}' header")))?;
    let mut w_i_max = None;
    let mut w_h_max = None;
    let mut order = None;
    let mut alpha = None;
    let mut beta = None;
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("bad header field '{tok}'")))?;
        let real = || v.parse::<f64>().map_err(|e| bad(format!("{k}: {e}")));
        let int = || v.parse::<u32>().map_err(|e| bad(format!("{k}: {e}")));
        match k {
            "wImax" => w_i_max = Some(int()?),
            "wHmax" => w_h_max = Some(int()?),
            "order" => order = Some(v.to_string()),
            "alpha" => alpha = Some(real()?),
            "beta" => beta = Some(real()?),
            _ => return Err(bad(format!("unknown header field '{k}'"))),
        }
    }
    let need = |name: &str| bad(format!("header is missing {name}"));
    let w_i_max = w_i_max.ok_or_else(|| need("wImax"))?;
    let w_h_max = w_h_max.ok_or_else(|| need("wHmax"))?;
    let alpha = alpha.ok_or_else(|| need("alpha"))?;
    let beta = beta.ok_or_else(|| need("beta"))?;
    let order = match order.as_deref() {
        Some("iwhw") => EpOrder::IwHw,
        Some("pw") => EpOrder::Pw { alpha, beta },
        Some(other) => return Err(bad(format!("unknown order '{other}'"))),
        None => return Err(need("order")),
    };
    Ok((order, w_i_max, w_h_max))
}

/// Writes `table` to `path`.
pub fn write_store(table: &EpTable, path: impl AsRef<Path>) -> Result<()> {
    table.write_to(BufWriter::new(File::create(path)?))
}

/// Reads a table from `path`.
pub fn read_store(path: impl AsRef<Path>) -> Result<EpTable> {
    EpTable::read_from(File::open(path)?)
}
