//! One-sided r-out-of-s run rules as absorbing Markov chains.
//!
//! A transient state is the in/out pattern of the last `s − 1` plotted points
//! (bit 0 is the most recent point, a set bit means "outside the limit"). Only
//! patterns with at most `r − 1` outside points are transient; the chart
//! signals as soon as the current point and the history hold `r` outside points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cvdist::Cv2Law;
use crate::error::{Error, Result};
use crate::linalg::Lu;

/// Largest window accepted by [`RunRule::new`].
pub const MAX_WINDOW: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Signals on small CV² values (detects decreases).
    Lower,
    /// Signals on large CV² values (detects increases).
    Upper,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        }
    }

    /// Whether a plotted statistic falls outside the control region.
    pub fn is_outside(self, statistic: f64, limit: f64) -> bool {
        match self {
            Direction::Lower => statistic < limit,
            Direction::Upper => statistic > limit,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" | "lo" | "down" | "-" => Ok(Direction::Lower),
            "upper" | "up" | "hi" | "+" => Ok(Direction::Upper),
            other => Err(Error::InvalidRule(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunRule {
    pub r: u32,
    pub s: u32,
    pub direction: Direction,
}

impl RunRule {
    pub fn new(r: u32, s: u32, direction: Direction) -> Result<Self> {
        let rule = Self { r, s, direction };
        rule.validate()?;
        Ok(rule)
    }

    /// The 1-of-1 rule, i.e. a plain Shewhart chart.
    pub fn shewhart(direction: Direction) -> Self {
        Self {
            r: 1,
            s: 1,
            direction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.s || self.s > MAX_WINDOW {
            return Err(Error::InvalidRule(format!(
                "need 1 ≤ r ≤ s ≤ {MAX_WINDOW} (got r = {}, s = {})",
                self.r, self.s
            )));
        }
        Ok(())
    }

    /// Parses `"r,s"`, `"r/s"` or `"rofs"` (e.g. `2of3`).
    pub fn parse(text: &str, direction: Direction) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        let parts: Vec<&str> = t.split([',', '/', ':']).collect();
        let parts = if parts.len() == 2 {
            parts
        } else {
            t.split("of").collect()
        };
        if parts.len() != 2 {
            return Err(Error::InvalidRule(format!("cannot parse rule {text:?}")));
        }
        let parse = |p: &str| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidRule(format!("cannot parse rule {text:?}")))
        };
        Self::new(parse(parts[0])?, parse(parts[1])?, direction)
    }

    pub fn label(&self) -> String {
        format!("{},{}", self.r, self.s)
    }
}

impl fmt::Display for RunRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RR({},{}){}",
            self.r,
            self.s,
            if self.direction == Direction::Upper {
                "+"
            } else {
                "-"
            }
        )
    }
}

/// Transient part of the run-rule Markov chain at a fixed in-control probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleChain {
    pub rule: RunRule,
    pub p: f64,
    /// Histories in descending order, so the all-inside history comes last.
    pub states: Vec<u32>,
    /// Row-major transient matrix `Q`.
    pub transition: Vec<f64>,
    pub initial_index: usize,
}

impl RuleChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.len() + j]
    }

    /// Absorption vector `r = 1 − Q1`.
    pub fn absorption(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| 1.0 - self.transition[i * n..(i + 1) * n].iter().sum::<f64>())
            .collect()
    }
}

fn transient_states(rule: &RunRule) -> Vec<u32> {
    let bits = rule.s - 1;
    let mut states: Vec<u32> = (0..1u32 << bits)
        .filter(|h| h.count_ones() < rule.r)
        .collect();
    states.reverse();
    states
}

/// Builds `Q` from the history semantics for in-control probability `p`.
pub fn build_chain(rule: RunRule, p: f64) -> Result<RuleChain> {
    rule.validate()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "in-control probability must lie in [0, 1] (got {p})"
        )));
    }
    let states = transient_states(&rule);
    let n = states.len();
    let mask = (1u32 << (rule.s - 1)) - 1;
    let index_of = |h: u32| states.iter().position(|&x| x == h);
    let mut transition = vec![0.0; n * n];
    for (i, &h) in states.iter().enumerate() {
        let inside = (h << 1) & mask;
        let j = index_of(inside).expect("shifting in an inside point keeps the state transient");
        transition[i * n + j] += p;
        if h.count_ones() + 1 < rule.r {
            let outside = ((h << 1) | 1) & mask;
            let j = index_of(outside).expect("outside count stays below r");
            transition[i * n + j] += 1.0 - p;
        }
    }
    let initial_index = n - 1;
    debug_assert_eq!(states[initial_index], 0);
    Ok(RuleChain {
        rule,
        p,
        states,
        transition,
        initial_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactMarkov,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunLengthMetrics {
    pub arl: f64,
    pub sdrl: f64,
    pub method: Method,
    /// Standard error of the ARL estimate (Monte Carlo only).
    pub stderr: Option<f64>,
}

/// Exact ARL and SDRL: `ARL = qᵀ(I − Q)⁻¹1`, `SDRL² = 2qᵀ(I − Q)⁻²Q1 − ARL² + ARL`.
pub fn arl(chain: &RuleChain) -> Result<RunLengthMetrics> {
    if chain.p >= 1.0 {
        return Err(Error::Singular);
    }
    let n = chain.len();
    let mut m: Vec<f64> = chain.transition.iter().map(|q| -q).collect();
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    let lu = Lu::factor(m, n).ok_or(Error::Singular)?;
    let a = lu.solve(&vec![1.0; n]);
    // (I − Q)⁻¹Q1 = (I − Q)⁻¹1 − 1
    let shifted: Vec<f64> = a.iter().map(|v| v - 1.0).collect();
    let w = lu.solve(&shifted);
    let arl = a[chain.initial_index];
    if !arl.is_finite() || arl < 1.0 - 1e-9 {
        return Err(Error::Singular);
    }
    let var = 2.0 * w[chain.initial_index] - arl * arl + arl;
    Ok(RunLengthMetrics {
        arl: arl.max(1.0),
        sdrl: var.max(0.0).sqrt(),
        method: Method::ExactMarkov,
        stderr: None,
    })
}

/// Probability that one plotted `γ̂²` stays inside the control region.
pub fn in_control_prob(direction: Direction, limit: f64, law: &Cv2Law) -> Result<f64> {
    if limit.is_nan() {
        return Err(Error::domain("control limit is NaN"));
    }
    match direction {
        Direction::Lower if limit <= 0.0 => Ok(1.0),
        Direction::Lower => law.sf(limit),
        Direction::Upper if limit == f64::INFINITY => Ok(1.0),
        Direction::Upper => law.cdf(limit),
    }
}

/// Exact run-length metrics of `rule` with limit `limit` when `γ̂²` follows `law`.
pub fn metrics_for_limit(rule: RunRule, limit: f64, law: &Cv2Law) -> Result<RunLengthMetrics> {
    let p = in_control_prob(rule.direction, limit, law)?;
    arl(&build_chain(rule, p)?)
}

/// Streaming evaluation of a run rule on a sequence of in/out flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleTracker {
    rule: RunRule,
    history: u32,
    mask: u32,
}

impl RuleTracker {
    pub fn new(rule: RunRule) -> Self {
        Self {
            rule,
            history: 0,
            mask: (1u32 << (rule.s - 1)) - 1,
        }
    }

    pub fn reset(&mut self) {
        self.history = 0;
    }

    /// The last `s − 1` flags, most recent in bit 0.
    pub fn history(&self) -> u32 {
        self.history
    }

    /// Records one point; returns true when the rule signals on it.
    pub fn push(&mut self, outside: bool) -> bool {
        let signal = outside && self.history.count_ones() + 1 >= self.rule.r;
        self.history = ((self.history << 1) | outside as u32) & self.mask;
        signal
    }
}
