//! Phase II monitoring of recorded subgroup summaries.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::runrules::{RuleTracker, RunRule};

/// One recorded subgroup: index, observed mean `X̄*` and std `S*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseIIRecord {
    pub index: u64,
    pub mean: f64,
    pub std: f64,
}

impl PhaseIIRecord {
    pub fn new(index: u64, mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() || mean == 0.0 {
            return Err(Error::domain(format!(
                "sample {index}: mean must be finite and non-zero"
            )));
        }
        if !std.is_finite() || std < 0.0 {
            return Err(Error::domain(format!(
                "sample {index}: std must be finite and non-negative"
            )));
        }
        Ok(Self { index, mean, std })
    }

    pub fn cv(&self) -> f64 {
        self.std / self.mean
    }

    pub fn cv2(&self) -> f64 {
        let c = self.cv();
        c * c
    }
}

/// Reads `index,mean,std` CSV. Errors carry the 1-based line number.
pub fn read_phase2<R: Read>(reader: R) -> Result<Vec<PhaseIIRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["index", "mean", "std"] {
        return Err(Error::Data {
            line: 1,
            message: format!("expected header index,mean,std (got {})", names.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PhaseIIRecord>().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| Error::Data {
            line,
            message: e.to_string(),
        })?;
        let rec = PhaseIIRecord::new(rec.index, rec.mean, rec.std).map_err(|e| Error::Data {
            line,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// A chart to apply: a rule and its limit on the `γ̂²` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartLimit {
    pub label: String,
    pub rule: RunRule,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTrace {
    pub index: u64,
    pub cv2: f64,
    pub outside: bool,
    /// In/out flags of the last `s` points, oldest first (`1` = outside).
    pub window: String,
    pub signal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartReport {
    pub chart: ChartLimit,
    pub points: Vec<PointTrace>,
    pub first_signal: Option<u64>,
    /// Earliest outside point inside the window that produced the first signal.
    pub window_start: Option<u64>,
    pub signals: Vec<u64>,
}

pub fn monitor(records: &[PhaseIIRecord], chart: &ChartLimit) -> ChartReport {
    let rule = chart.rule;
    let s = rule.s as usize;
    let mut tracker = RuleTracker::new(rule);
    let mut flags: Vec<bool> = Vec::with_capacity(records.len());
    let mut points = Vec::with_capacity(records.len());
    let mut signals = Vec::new();
    let mut first_signal = None;
    let mut window_start = None;
    for (pos, rec) in records.iter().enumerate() {
        let cv2 = rec.cv2();
        let outside = rule.direction.is_outside(cv2, chart.limit);
        flags.push(outside);
        let signal = tracker.push(outside);
        let from = (pos + 1).saturating_sub(s);
        let window: String = flags[from..]
            .iter()
            .map(|&f| if f { '1' } else { '0' })
            .collect();
        if signal {
            signals.push(rec.index);
            if first_signal.is_none() {
                first_signal = Some(rec.index);
                window_start = (from..=pos).find(|&j| flags[j]).map(|j| records[j].index);
            }
        }
        points.push(PointTrace {
            index: rec.index,
            cv2,
            outside,
            window,
            signal,
        });
    }
    ChartReport {
        chart: chart.clone(),
        points,
        first_signal,
        window_start,
        signals,
    }
}
