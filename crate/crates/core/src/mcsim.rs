//! Monte Carlo run lengths from the full data-generating pipeline.
//!
//! True values are normal with mean `μ₀ + aσ₀` and std `bσ₀` (μ₀ = 1, σ₀ = γ₀),
//! each is measured `m` times as `A + B·X + ε`, the measurements are averaged,
//! and the squared sample CV of the `n` averages is plotted against the limit.
//!
//! Replication `i` draws from ChaCha8 keyed by the master seed on stream `i`,
//! so results do not depend on how replications are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cvdist::ProcessModel;
use crate::design::ChartDesign;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::merror::{MeasurementErrorModel, ShiftSpec};
use crate::runrules::{Method, RuleTracker, RunLengthMetrics, RunRule};

pub const DEFAULT_MAX_RUN_LENGTH: u64 = 10_000_000;
const BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    /// Runs reaching this length are stopped and counted as truncated.
    pub max_run_length: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl SimConfig {
    pub fn new(replications: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            replications,
            seed,
            max_run_length: DEFAULT_MAX_RUN_LENGTH,
            execution: Execution::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::domain("at least one replication is required"));
        }
        if self.max_run_length == 0 {
            return Err(Error::domain("max_run_length must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub metrics: RunLengthMetrics,
    pub replications: u64,
    /// Runs stopped at `max_run_length`; they enter the averages at that length.
    pub truncated: u64,
    /// Subgroups redrawn because their observed mean was exactly zero.
    pub redraws: u64,
    pub seed: u64,
}

/// Parameters of the observed-subgroup generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pipeline {
    n: usize,
    mean: f64,
    sd: f64,
    intercept: f64,
    slope: f64,
    sigma_m: f64,
    reps: u32,
}

impl Pipeline {
    pub fn new(
        n: usize,
        gamma0: f64,
        shift: &ShiftSpec,
        me: &MeasurementErrorModel,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!(
                "subgroup size must be at least 2 (got {n})"
            )));
        }
        if !(gamma0 > 0.0) || !(shift.b > 0.0) || !shift.a.is_finite() {
            return Err(Error::domain(
                "simulation needs γ₀ > 0, b > 0 and a finite mean shift",
            ));
        }
        me.validate()?;
        Ok(Self {
            n,
            mean: 1.0 + shift.a * gamma0,
            sd: shift.b * gamma0,
            intercept: me.theta,
            slope: me.slope,
            sigma_m: me.eta * gamma0,
            reps: me.reps,
        })
    }

    /// Squared CV of one observed subgroup, or `None` if its mean is exactly zero.
    fn try_sample<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64]) -> Option<f64> {
        let mut sum = 0.0;
        for slot in buf.iter_mut() {
            let x = self.mean + self.sd * rng.sample::<f64, _>(StandardNormal);
            let mut noise = 0.0;
            if self.sigma_m > 0.0 {
                for _ in 0..self.reps {
                    noise += rng.sample::<f64, _>(StandardNormal);
                }
                noise *= self.sigma_m / self.reps as f64;
            }
            *slot = self.intercept + self.slope * x + noise;
            sum += *slot;
        }
        let mean = sum / self.n as f64;
        if mean == 0.0 {
            return None;
        }
        let ss: f64 = buf.iter().map(|v| (v - mean) * (v - mean)).sum();
        let var = ss / (self.n as f64 - 1.0);
        Some(var / (mean * mean))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64], redraws: &mut u64) -> f64 {
        loop {
            if let Some(v) = self.try_sample(rng, buf) {
                return v;
            }
            *redraws += 1;
        }
    }
}

/// One observed squared sample CV.
pub fn simulate_subgroup<R: Rng + ?Sized>(
    n: usize,
    gamma0: f64,
    shift: &ShiftSpec,
    me: &MeasurementErrorModel,
    rng: &mut R,
) -> Result<f64> {
    let pipe = Pipeline::new(n, gamma0, shift, me)?;
    let mut buf = vec![0.0; n];
    let mut redraws = 0;
    Ok(pipe.sample(rng, &mut buf, &mut redraws))
}

/// `count` independent observed squared CVs, reproducible from `seed`.
pub fn sample_cv2(
    n: usize,
    gamma0: f64,
    shift: &ShiftSpec,
    me: &MeasurementErrorModel,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let pipe = Pipeline::new(n, gamma0, shift, me)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; n];
    let mut redraws = 0;
    Ok((0..count)
        .map(|_| pipe.sample(&mut rng, &mut buf, &mut redraws))
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    sum: u128,
    sum_sq: u128,
    truncated: u64,
    redraws: u64,
}

fn run_block(rule: RunRule, limit: f64, pipe: &Pipeline, cfg: &SimConfig, block: u64) -> Tally {
    let start = block * BLOCK;
    let end = (start + BLOCK).min(cfg.replications);
    let mut tally = Tally::default();
    let mut buf = vec![0.0; pipe.n];
    let mut tracker = RuleTracker::new(rule);
    for rep in start..end {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep);
        tracker.reset();
        let mut t = 0u64;
        loop {
            t += 1;
            let stat = pipe.sample(&mut rng, &mut buf, &mut tally.redraws);
            if tracker.push(rule.direction.is_outside(stat, limit)) {
                break;
            }
            if t >= cfg.max_run_length {
                tally.truncated += 1;
                break;
            }
        }
        tally.sum += t as u128;
        tally.sum_sq += (t as u128) * (t as u128);
    }
    tally
}

/// Simulated run lengths of `rule` with `limit` for the given pipeline.
pub fn simulate_run_length(
    rule: RunRule,
    limit: f64,
    pipe: &Pipeline,
    cfg: &SimConfig,
) -> Result<SimReport> {
    rule.validate()?;
    cfg.validate()?;
    if limit.is_nan() {
        return Err(Error::domain("control limit is NaN"));
    }
    let blocks: Vec<u64> = (0..cfg.replications.div_ceil(BLOCK)).collect();
    let tallies = exec::map_ordered(&blocks, cfg.execution, |&b| {
        run_block(rule, limit, pipe, cfg, b)
    });
    let total = tallies.iter().fold(Tally::default(), |acc, t| Tally {
        sum: acc.sum + t.sum,
        sum_sq: acc.sum_sq + t.sum_sq,
        truncated: acc.truncated + t.truncated,
        redraws: acc.redraws + t.redraws,
    });
    let r = cfg.replications as f64;
    let mean = total.sum as f64 / r;
    let sd = if cfg.replications > 1 {
        // exact integer sums keep the variance free of accumulation-order effects
        let centered = total.sum_sq as f64 - (total.sum as f64) * (total.sum as f64) / r;
        (centered.max(0.0) / (r - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(SimReport {
        metrics: RunLengthMetrics {
            arl: mean,
            sdrl: sd,
            method: Method::MonteCarlo,
            stderr: Some(sd / r.sqrt()),
        },
        replications: cfg.replications,
        truncated: total.truncated,
        redraws: total.redraws,
        seed: cfg.seed,
    })
}

/// Monte Carlo counterpart of [`crate::design::arl_at_shift`].
pub fn estimate_run_length(
    design: &ChartDesign,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    shift: &ShiftSpec,
    cfg: &SimConfig,
) -> Result<SimReport> {
    pm.validate()?;
    let pipe = Pipeline::new(pm.n, pm.gamma0, shift, me)?;
    simulate_run_length(design.rule, design.limit, &pipe, cfg)
}
