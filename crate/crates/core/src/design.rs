//! Chart constants, control limits, ARL at shifts and EARL over shift ranges.
//!
//! Limits are `μ₀ ∓ k·σ₀` with Breunig's moments at the observed in-control CV;
//! `k` is chosen so the exact in-control ARL equals the target.

use serde::{Deserialize, Serialize};

use crate::cvdist::{self, Cv2Moments, ProcessModel};
use crate::error::{Error, Result};
use crate::merror::{self, MeasurementErrorModel, ShiftSpec};
use crate::quadrature::GaussLegendre;
use crate::roots::{self, RootOptions};
use crate::runrules::{self, Direction, RunLengthMetrics, RunRule};

/// Conventional in-control ARL target.
pub const DEFAULT_ARL0: f64 = 370.4;
/// Default Gauss–Legendre order for EARL.
pub const DEFAULT_EARL_NODES: usize = 64;
/// Largest accepted |ln(ARL₀ achieved / target)| when the k tolerance ends the search.
const STEEP_SLOPE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub k_min: f64,
    pub k_max: f64,
    /// Relative tolerance on the in-control ARL.
    pub arl_rel_tol: f64,
    pub k_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            k_min: 0.0,
            k_max: 20.0,
            arl_rel_tol: 1e-6,
            k_tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartDesign {
    pub rule: RunRule,
    /// Chart constant `k_d` (lower) or `k_u` (upper).
    pub k: f64,
    /// `LCL⁻` or `UCL⁺` on the `γ̂²` scale.
    pub limit: f64,
    pub arl0_target: f64,
    pub arl0_achieved: f64,
    /// Moments at the observed in-control CV.
    pub moments: Cv2Moments,
    /// Observed in-control CV `γ₀*` (equals `γ₀` without measurement error).
    pub gamma_star0: f64,
}

/// `μ − kσ` for lower charts, `μ + kσ` for upper charts.
pub fn limit_for(direction: Direction, moments: &Cv2Moments, k: f64) -> f64 {
    match direction {
        Direction::Lower => moments.mean - k * moments.std,
        Direction::Upper => moments.mean + k * moments.std,
    }
}

/// Builds a design for a given constant `k` (no solving).
pub fn design_with_k(
    rule: RunRule,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    k: f64,
    arl0_target: f64,
) -> Result<ChartDesign> {
    rule.validate()?;
    pm.validate()?;
    let gamma_star0 = merror::observed_cv_incontrol(pm.gamma0, me)?;
    let law = pm.law(gamma_star0)?;
    let moments = cvdist::moments_at(gamma_star0, pm.n)?;
    let limit = limit_for(rule.direction, &moments, k);
    let arl0_achieved = match runrules::metrics_for_limit(rule, limit, &law) {
        Ok(m) => m.arl,
        Err(Error::Singular) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(ChartDesign {
        rule,
        k,
        limit,
        arl0_target,
        arl0_achieved,
        moments,
        gamma_star0,
    })
}

/// Solves for `k` such that the in-control ARL equals `arl0`.
pub fn solve_design(
    rule: RunRule,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    arl0: f64,
) -> Result<ChartDesign> {
    solve_design_with(rule, pm, me, arl0, &SolverOptions::default())
}

pub fn solve_design_with(
    rule: RunRule,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    arl0: f64,
    opts: &SolverOptions,
) -> Result<ChartDesign> {
    rule.validate()?;
    pm.validate()?;
    if !(arl0 > 1.0) || !arl0.is_finite() {
        return Err(Error::domain(format!(
            "target in-control ARL must exceed 1 (got {arl0})"
        )));
    }
    let gamma_star0 = merror::observed_cv_incontrol(pm.gamma0, me)?;
    let law = pm.law(gamma_star0)?;
    let moments = cvdist::moments_at(gamma_star0, pm.n)?;

    let in_control_arl = |k: f64| -> Result<f64> {
        let limit = limit_for(rule.direction, &moments, k);
        match runrules::metrics_for_limit(rule, limit, &law) {
            Ok(m) => Ok(m.arl),
            Err(Error::Singular) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let k_lo = opts.k_min;
    let mut k_hi = opts.k_max;
    if rule.direction == Direction::Lower {
        // beyond μ/σ the lower limit is non-positive and the chart cannot signal
        k_hi = k_hi.min(moments.mean / moments.std);
    }
    let arl_lo = in_control_arl(k_lo)?;
    let arl_hi = in_control_arl(k_hi)?;
    if !(arl_lo <= arl0 && arl0 <= arl_hi) {
        let max_arl0 = if rule.direction == Direction::Lower && arl_hi.is_infinite() {
            // largest finite ARL reachable with a positive lower limit
            in_control_arl(k_hi * (1.0 - 1e-12)).unwrap_or(arl_hi)
        } else {
            arl_hi
        };
        return Err(Error::Unattainable {
            target: arl0,
            min_arl0: arl_lo,
            max_arl0,
        });
    }

    let h = |k: f64| -> Result<f64> { Ok((in_control_arl(k)? / arl0).ln()) };
    let root_opts = RootOptions {
        f_tol: opts.arl_rel_tol.ln_1p(),
        x_tol: opts.k_tol,
        max_iter: opts.max_iter,
    };
    let (h_lo, h_hi) = ((arl_lo / arl0).ln(), (arl_hi / arl0).ln());
    let k = if h_lo == 0.0 {
        k_lo
    } else if h_hi == 0.0 {
        k_hi
    } else {
        let root = roots::solve_increasing(h, k_lo, k_hi, h_lo, h_hi, root_opts)?;
        // the k tolerance can stop the search on a slope too steep for f64 to resolve
        if root.fx.abs() > STEEP_SLOPE_TOL {
            return Err(Error::NonConvergence {
                iterations: root.iterations,
                residual: root.fx,
            });
        }
        root.x
    };
    let limit = limit_for(rule.direction, &moments, k);
    Ok(ChartDesign {
        rule,
        k,
        limit,
        arl0_target: arl0,
        arl0_achieved: in_control_arl(k)?,
        moments,
        gamma_star0,
    })
}

/// Exact ARL and SDRL of a design after a process shift.
pub fn arl_at_shift(
    design: &ChartDesign,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    shift: &ShiftSpec,
) -> Result<RunLengthMetrics> {
    let law = merror::observed_law(pm, shift, me)?;
    runrules::metrics_for_limit(design.rule, design.limit, &law)
}

/// ARL at a CV shift τ produced by a mean shift alone.
pub fn arl_at_tau(
    design: &ChartDesign,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    tau: f64,
) -> Result<RunLengthMetrics> {
    arl_at_shift(design, pm, me, &ShiftSpec::from_tau(tau, pm.gamma0)?)
}

/// Shift range with a uniform shift-size density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftRange {
    pub lo: f64,
    pub hi: f64,
}

impl ShiftRange {
    /// Ω_D = [0.5, 1).
    pub const DECREASING: ShiftRange = ShiftRange { lo: 0.5, hi: 1.0 };
    /// Ω_I = (1, 2].
    pub const INCREASING: ShiftRange = ShiftRange { lo: 1.0, hi: 2.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::domain(format!(
                "shift range needs 0 < lo < hi (got [{lo}, {hi}])"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The chart direction that watches this range.
    pub fn direction(&self) -> Direction {
        if self.hi <= 1.0 {
            Direction::Lower
        } else {
            Direction::Upper
        }
    }
}

/// `∫ g(τ) dτ / (hi − lo)` by Gauss–Legendre quadrature.
pub fn earl_with<F>(range: &ShiftRange, nodes: usize, g: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if nodes < 8 {
        return Err(Error::domain(format!(
            "EARL needs at least 8 quadrature nodes (got {nodes})"
        )));
    }
    let rule = GaussLegendre::new(nodes)?;
    Ok(rule.try_integrate(range.lo, range.hi, g)? / (range.hi - range.lo))
}

/// Expected ARL over a shift range with uniform shift density.
pub fn earl(
    design: &ChartDesign,
    pm: &ProcessModel,
    me: &MeasurementErrorModel,
    range: &ShiftRange,
    nodes: usize,
) -> Result<f64> {
    earl_with(range, nodes, |tau| Ok(arl_at_tau(design, pm, me, tau)?.arl))
}
