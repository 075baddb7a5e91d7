//! Linear covariate measurement-error model `X* = A + B·X + ε`.
//!
//! Each item is measured `m` times and the measurements are averaged, so the
//! observed quantity is normal with mean `A + B(μ₀ + aσ₀)` and variance
//! `B²b²σ₀² + σ_M²/m`. Everything downstream only needs the CV of that quantity.

use serde::{Deserialize, Serialize};

use crate::cvdist::{self, Cv2Law};
use crate::error::{Error, Result};

/// Accuracy error θ = A/μ₀, precision ratio η = σ_M/σ₀, slope B and repeats m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementErrorModel {
    pub theta: f64,
    pub eta: f64,
    pub slope: f64,
    pub reps: u32,
}

impl Default for MeasurementErrorModel {
    fn default() -> Self {
        Self::identity()
    }
}

impl MeasurementErrorModel {
    /// The error-free model (θ = 0, η = 0, B = 1, m = 1).
    pub const fn identity() -> Self {
        Self {
            theta: 0.0,
            eta: 0.0,
            slope: 1.0,
            reps: 1,
        }
    }

    pub fn new(theta: f64, eta: f64, slope: f64, reps: u32) -> Result<Self> {
        let me = Self {
            theta,
            eta,
            slope,
            reps,
        };
        me.validate()?;
        Ok(me)
    }

    /// From raw gauge constants: `A`, `σ_M` and the in-control process mean and std.
    pub fn from_raw(
        intercept: f64,
        sigma_m: f64,
        slope: f64,
        reps: u32,
        mu0: f64,
        sigma0: f64,
    ) -> Result<Self> {
        if !(mu0 > 0.0) || !(sigma0 > 0.0) {
            return Err(Error::domain("in-control mean and std must be positive"));
        }
        Self::new(intercept / mu0, sigma_m / sigma0, slope, reps)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.theta.is_finite() && self.eta.is_finite() && self.slope.is_finite();
        if !finite || self.theta < 0.0 || self.eta < 0.0 || !(self.slope > 0.0) || self.reps == 0 {
            return Err(Error::domain(format!(
                "measurement model needs θ ≥ 0, η ≥ 0, B > 0, m ≥ 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

/// A process shift expressed both as a CV multiplier τ and as standardized
/// mean/std shifts `(a, b)`, tied by `τ = b/(1 + aγ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
}

impl ShiftSpec {
    pub const fn in_control() -> Self {
        Self {
            tau: 1.0,
            a: 0.0,
            b: 1.0,
        }
    }

    /// CV shift τ produced by a mean shift alone (b = 1).
    pub fn from_tau(tau: f64, gamma0: f64) -> Result<Self> {
        Self::from_tau_b(tau, 1.0, gamma0)
    }

    /// CV shift τ with standard-deviation multiplier `b`; the mean shift `a` is derived.
    pub fn from_tau_b(tau: f64, b: f64, gamma0: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() || !(b > 0.0) || !(gamma0 > 0.0) {
            return Err(Error::domain(format!(
                "shift needs τ > 0, b > 0, γ₀ > 0 (got τ = {tau}, b = {b}, γ₀ = {gamma0})"
            )));
        }
        let a = if tau == b {
            0.0
        } else {
            (b / tau - 1.0) / gamma0
        };
        Ok(Self { tau, a, b })
    }

    pub fn from_ab(a: f64, b: f64, gamma0: f64) -> Result<Self> {
        let tau = shift_from_ab(a, b, gamma0)?;
        Ok(Self { tau, a, b })
    }

    pub fn is_in_control(&self) -> bool {
        self.tau == 1.0
    }
}

/// `τ = b/(1 + aγ₀)`.
pub fn shift_from_ab(a: f64, b: f64, gamma0: f64) -> Result<f64> {
    let denom = 1.0 + a * gamma0;
    if !(denom > 0.0) || !(b > 0.0) {
        return Err(Error::domain(format!(
            "shift needs 1 + aγ₀ > 0 and b > 0 (got a = {a}, b = {b}, γ₀ = {gamma0})"
        )));
    }
    Ok(b / denom)
}

/// In-control CV of the observed quantity: `γ₀* = γ₀ √(B² + η²/m) / (θ + B)`.
pub fn observed_cv_incontrol(gamma0: f64, me: &MeasurementErrorModel) -> Result<f64> {
    me.validate()?;
    let denom = me.theta + me.slope;
    if !(denom > 0.0) {
        return Err(Error::DegenerateDenominator(denom));
    }
    let b2 = me.slope * me.slope;
    Ok(gamma0 * (b2 + me.eta * me.eta / me.reps as f64).sqrt() / denom)
}

/// Shifted CV of the observed quantity: `γ₁* = γ₀ √(B²b² + η²/m) / (θ + Bb/τ)`.
pub fn observed_cv_shifted(
    gamma0: f64,
    shift: &ShiftSpec,
    me: &MeasurementErrorModel,
) -> Result<f64> {
    me.validate()?;
    if !(shift.tau > 0.0) || !(shift.b > 0.0) {
        return Err(Error::domain(format!("invalid shift {shift:?}")));
    }
    let bb = me.slope * shift.b;
    let denom = me.theta + bb / shift.tau;
    if !(denom > 0.0) {
        return Err(Error::DegenerateDenominator(denom));
    }
    Ok(gamma0 * (bb * bb + me.eta * me.eta / me.reps as f64).sqrt() / denom)
}

/// CDF of the observed `γ̂*²`: the CV² law with γ replaced by γ*.
pub fn observed_cv2_cdf(x: f64, n: usize, gamma_star: f64) -> Result<f64> {
    cvdist::cv2_cdf(x, n, gamma_star)
}

/// Observed CV² law honouring the process model's validity policy.
pub fn observed_law(
    pm: &cvdist::ProcessModel,
    shift: &ShiftSpec,
    me: &MeasurementErrorModel,
) -> Result<Cv2Law> {
    let gamma_star = if shift.is_in_control() && shift.b == 1.0 {
        observed_cv_incontrol(pm.gamma0, me)?
    } else {
        observed_cv_shifted(pm.gamma0, shift, me)?
    };
    pm.law(gamma_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_model_is_transparent() {
        let me = MeasurementErrorModel::identity();
        assert_eq!(observed_cv_incontrol(0.1, &me).unwrap(), 0.1);
        let shift = ShiftSpec::from_tau(1.3, 0.1).unwrap();
        let g1 = observed_cv_shifted(0.1, &shift, &me).unwrap();
        assert!((g1 - 0.13).abs() < 1e-15);
    }

    #[test]
    fn example_in_control_observed_cv() {
        let me = MeasurementErrorModel::new(0.05, 0.28, 1.0, 1).unwrap();
        let g = observed_cv_incontrol(0.417, &me).unwrap();
        // 0.417 · √1.0784 / 1.05
        assert!((g - 0.417 * 1.0784f64.sqrt() / 1.05).abs() < 1e-15);
        assert!((g - 0.41242).abs() < 5e-5, "{g}");
    }

    #[test]
    fn many_repeats_remove_precision_error() {
        let noisy = MeasurementErrorModel::new(0.03, 0.5, 1.1, 1_000_000_000).unwrap();
        let clean = MeasurementErrorModel::new(0.03, 0.0, 1.1, 1).unwrap();
        let a = observed_cv_incontrol(0.2, &noisy).unwrap();
        let b = observed_cv_incontrol(0.2, &clean).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn shifted_reduces_to_in_control() {
        let me = MeasurementErrorModel::new(0.04, 0.3, 0.9, 3).unwrap();
        let a = observed_cv_shifted(0.1, &ShiftSpec::in_control(), &me).unwrap();
        let b = observed_cv_incontrol(0.1, &me).unwrap();
        assert!((a - b).abs() < 1e-16);
    }

    #[test]
    fn table4_left_cell_observed_cv() {
        // γ₀ = 0.05, τ = 0.8, θ = 0.05, η = 0: γ₁* = 0.05 / (0.05 + 1.25)
        let me = MeasurementErrorModel::new(0.05, 0.0, 1.0, 1).unwrap();
        let s = ShiftSpec::from_tau(0.8, 0.05).unwrap();
        let g = observed_cv_shifted(0.05, &s, &me).unwrap();
        assert!((g - 0.05 / 1.3).abs() < 1e-16);
    }

    #[test]
    fn shift_from_ab_values() {
        assert_eq!(shift_from_ab(0.0, 1.3, 0.1).unwrap(), 1.3);
        assert!((shift_from_ab(2.0, 1.0, 0.1).unwrap() - 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(shift_from_ab(0.0, 1.0, 0.3).unwrap(), 1.0);
        assert!(shift_from_ab(-20.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn from_tau_is_consistent() {
        let s = ShiftSpec::from_tau(0.5, 0.05).unwrap();
        assert!((s.a - 20.0).abs() < 1e-12);
        assert!((shift_from_ab(s.a, s.b, 0.05).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(MeasurementErrorModel::new(-0.1, 0.0, 1.0, 1).is_err());
        assert!(MeasurementErrorModel::new(0.0, 0.0, 0.0, 1).is_err());
        assert!(MeasurementErrorModel::new(0.0, 0.0, 1.0, 0).is_err());
        let raw = MeasurementErrorModel::from_raw(0.5, 0.28, 1.0, 1, 10.0, 1.0).unwrap();
        assert!((raw.theta - 0.05).abs() < 1e-16 && (raw.eta - 0.28).abs() < 1e-16);
    }
}
