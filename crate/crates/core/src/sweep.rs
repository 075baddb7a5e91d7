//! Cartesian parameter sweeps over designs, shifts and measurement models.
//!
//! Designs are solved once per distinct (rule, n, γ₀, model) and shared by all
//! shift cells. Output order follows the grid, never completion order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cvdist::ProcessModel;
use crate::design::{self, ChartDesign, ShiftRange, DEFAULT_ARL0, DEFAULT_EARL_NODES};
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::merror::MeasurementErrorModel;
use crate::runrules::{Direction, RunRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// ARL and SDRL at a single shift τ.
    Arl { tau: f64 },
    /// EARL over a shift range.
    Earl { range: ShiftRange },
}

impl Metric {
    /// Lower charts watch decreases, upper charts increases.
    pub fn natural_direction(&self) -> Direction {
        match self {
            Metric::Arl { tau } if *tau < 1.0 => Direction::Lower,
            Metric::Arl { .. } => Direction::Upper,
            Metric::Earl { range } => range.direction(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub rule: RunRule,
    pub n: usize,
    pub gamma0: f64,
    pub me: MeasurementErrorModel,
    pub metric: Metric,
}

/// Grid axes; every combination becomes one [`Cell`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub rules: Vec<(u32, u32)>,
    /// Fixed chart direction; `None` picks it from each τ or range.
    #[serde(default)]
    pub direction: Option<Direction>,
    pub n: Vec<usize>,
    pub gamma0: Vec<f64>,
    #[serde(default = "zero")]
    pub theta: Vec<f64>,
    #[serde(default = "zero")]
    pub eta: Vec<f64>,
    #[serde(default = "one")]
    pub slope: Vec<f64>,
    #[serde(default = "one_rep")]
    pub reps: Vec<u32>,
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub ranges: Vec<ShiftRange>,
}

fn zero() -> Vec<f64> {
    vec![0.0]
}
fn one() -> Vec<f64> {
    vec![1.0]
}
fn one_rep() -> Vec<u32> {
    vec![1]
}

impl SweepGrid {
    /// Cells in row-major order: n, rule, metric, θ, η, B, m, γ₀ (fastest).
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let metrics: Vec<Metric> = self
            .taus
            .iter()
            .map(|&tau| Metric::Arl { tau })
            .chain(self.ranges.iter().map(|&range| Metric::Earl { range }))
            .collect();
        let mut out = Vec::new();
        for &n in &self.n {
            for &(r, s) in &self.rules {
                for metric in &metrics {
                    let dir = self.direction.unwrap_or_else(|| metric.natural_direction());
                    let rule = RunRule::new(r, s, dir)?;
                    for &theta in &self.theta {
                        for &eta in &self.eta {
                            for &slope in &self.slope {
                                for &reps in &self.reps {
                                    let me = MeasurementErrorModel::new(theta, eta, slope, reps)?;
                                    for &gamma0 in &self.gamma0 {
                                        out.push(Cell {
                                            rule,
                                            n,
                                            gamma0,
                                            me,
                                            metric: *metric,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub arl0: f64,
    pub earl_nodes: usize,
    /// Allow CVs at or above 0.5.
    pub force: bool,
    pub execution: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            arl0: DEFAULT_ARL0,
            earl_nodes: DEFAULT_EARL_NODES,
            force: false,
            execution: Execution::default(),
        }
    }
}

/// One output row; failures are kept in `error` and the sweep continues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: u32,
    pub s: u32,
    pub direction: Direction,
    pub n: usize,
    pub gamma0: f64,
    pub theta: f64,
    pub eta: f64,
    pub slope: f64,
    pub reps: u32,
    pub tau: Option<f64>,
    pub omega_lo: Option<f64>,
    pub omega_hi: Option<f64>,
    pub k: Option<f64>,
    pub limit: Option<f64>,
    pub arl: Option<f64>,
    pub sdrl: Option<f64>,
    pub earl: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn blank(cell: &Cell) -> Self {
        let (tau, omega_lo, omega_hi) = match cell.metric {
            Metric::Arl { tau } => (Some(tau), None, None),
            Metric::Earl { range } => (None, Some(range.lo), Some(range.hi)),
        };
        Self {
            r: cell.rule.r,
            s: cell.rule.s,
            direction: cell.rule.direction,
            n: cell.n,
            gamma0: cell.gamma0,
            theta: cell.me.theta,
            eta: cell.me.eta,
            slope: cell.me.slope,
            reps: cell.me.reps,
            tau,
            omega_lo,
            omega_hi,
            k: None,
            limit: None,
            arl: None,
            sdrl: None,
            earl: None,
            error: None,
        }
    }
}

type DesignKey = (RunRule, usize, u64, [u64; 3], u32);

fn key(cell: &Cell) -> DesignKey {
    (
        cell.rule,
        cell.n,
        cell.gamma0.to_bits(),
        [
            cell.me.theta.to_bits(),
            cell.me.eta.to_bits(),
            cell.me.slope.to_bits(),
        ],
        cell.me.reps,
    )
}

fn process_model(cell: &Cell, force: bool) -> Result<ProcessModel> {
    if force {
        ProcessModel::forced(cell.gamma0, cell.n)
    } else {
        ProcessModel::new(cell.gamma0, cell.n)
    }
}

fn solve_cell_design(cell: &Cell, opts: &SweepOptions) -> Result<ChartDesign> {
    let pm = process_model(cell, opts.force)?;
    design::solve_design(cell.rule, &pm, &cell.me, opts.arl0)
}

fn evaluate_with(cell: &Cell, design: &Result<ChartDesign>, opts: &SweepOptions) -> SweepRow {
    let mut row = SweepRow::blank(cell);
    let outcome = (|| -> Result<()> {
        let d = design.as_ref().map_err(Clone::clone)?;
        row.k = Some(d.k);
        row.limit = Some(d.limit);
        let pm = process_model(cell, opts.force)?;
        match cell.metric {
            Metric::Arl { tau } => {
                let m = design::arl_at_tau(d, &pm, &cell.me, tau)?;
                row.arl = Some(m.arl);
                row.sdrl = Some(m.sdrl);
            }
            Metric::Earl { range } => {
                row.earl = Some(design::earl(d, &pm, &cell.me, &range, opts.earl_nodes)?);
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(format!("{}: {e}", e.class().as_str()));
    }
    row
}

/// Evaluates one cell on its own.
pub fn evaluate_cell(cell: &Cell, opts: &SweepOptions) -> SweepRow {
    evaluate_with(cell, &solve_cell_design(cell, opts), opts)
}

/// Evaluates every cell, in grid order.
pub fn sweep(cells: &[Cell], opts: &SweepOptions) -> Vec<SweepRow> {
    let mut index: HashMap<DesignKey, usize> = HashMap::new();
    let mut unique: Vec<Cell> = Vec::new();
    for c in cells {
        index.entry(key(c)).or_insert_with(|| {
            unique.push(*c);
            unique.len() - 1
        });
    }
    let designs = exec::map_ordered(&unique, opts.execution, |c| solve_cell_design(c, opts));
    exec::map_ordered(cells, opts.execution, |c| {
        evaluate_with(c, &designs[index[&key(c)]], opts)
    })
}
