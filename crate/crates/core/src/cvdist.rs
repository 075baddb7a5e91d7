//! Sampling laws of the sample CV `γ̂ = S/X̄` and of its square for normal subgroups.
//!
//! `n/γ̂²` is noncentral F with `(1, n − 1)` degrees of freedom and
//! noncentrality `n/γ²`; the CV itself is handled through the noncentral t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, NoncentralParams};

/// Upper end of the CV range in which the sampling laws are trusted.
pub const CV_VALIDITY_BOUND: f64 = 0.5;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!(
            "subgroup size must be at least 2 (got {n})"
        )));
    }
    Ok(())
}

fn check_gamma(gamma: f64, force: bool) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!(
            "CV must be positive and finite (got {gamma})"
        )));
    }
    if !force && gamma >= CV_VALIDITY_BOUND {
        return Err(Error::OutsideValidity { gamma });
    }
    Ok(())
}

/// In-control CV `γ₀` and subgroup size `n` of the monitored process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub gamma0: f64,
    pub n: usize,
    /// Evaluate CVs at or above 0.5 instead of rejecting them.
    #[serde(default)]
    pub force: bool,
}

impl ProcessModel {
    pub fn new(gamma0: f64, n: usize) -> Result<Self> {
        check_n(n)?;
        check_gamma(gamma0, false)?;
        Ok(Self {
            gamma0,
            n,
            force: false,
        })
    }

    /// Like [`ProcessModel::new`] but lets shifted or observed CVs leave the validity window.
    pub fn forced(gamma0: f64, n: usize) -> Result<Self> {
        check_n(n)?;
        check_gamma(gamma0, true)?;
        Ok(Self {
            gamma0,
            n,
            force: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_n(self.n)?;
        check_gamma(self.gamma0, self.force)
    }

    /// Law of `γ̂²` for subgroups of this size when the CV equals `gamma`.
    pub fn law(&self, gamma: f64) -> Result<Cv2Law> {
        check_gamma(gamma, self.force)?;
        Cv2Law::build(self.n, gamma)
    }
}

/// Distribution of the squared sample CV for subgroup size `n` and true CV `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cv2Law {
    n: usize,
    gamma: f64,
    params: NoncentralParams,
}

impl Cv2Law {
    pub fn new(n: usize, gamma: f64) -> Result<Self> {
        check_n(n)?;
        check_gamma(gamma, false)?;
        Self::build(n, gamma)
    }

    /// Skips the `γ < 0.5` validity check.
    pub fn forced(n: usize, gamma: f64) -> Result<Self> {
        check_n(n)?;
        check_gamma(gamma, true)?;
        Self::build(n, gamma)
    }

    fn build(n: usize, gamma: f64) -> Result<Self> {
        let nf = n as f64;
        let params = NoncentralParams::new(1.0, nf - 1.0, nf / (gamma * gamma))?;
        Ok(Self { n, gamma, params })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(P(γ̂² ≤ x), P(γ̂² > x))`, both without cancellation.
    pub fn cdf_sf(&self, x: f64) -> Result<(f64, f64)> {
        if x.is_nan() {
            return Err(Error::domain("CV² argument is NaN"));
        }
        if x <= 0.0 {
            return Ok((0.0, 1.0));
        }
        if x == f64::INFINITY {
            return Ok((1.0, 0.0));
        }
        // F(x) = 1 − F_F(n/x): the F-law's survival function is the CV² CDF.
        let (f_cdf, f_sf) = specfun::noncentral_f_cdf_sf(self.n as f64 / x, &self.params)?;
        Ok((f_sf, f_cdf))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.cdf_sf(x)?.0)
    }

    pub fn sf(&self, x: f64) -> Result<f64> {
        Ok(self.cdf_sf(x)?.1)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::domain(format!("CV² density needs x > 0 (got {x})")));
        }
        let nf = self.n as f64;
        Ok(nf / (x * x) * specfun::noncentral_f_pdf(nf / x, &self.params)?)
    }
}

/// CDF of the sample CV: `1 − F_t(√n/x | n − 1, √n/γ)`.
///
/// Samples with a negative mean are ignored, so `cv2_cdf(x²)` exceeds this by
/// `F_t(−√n/x | n − 1, √n/γ)`, which is negligible unless `n` is tiny.
pub fn cv_cdf(x: f64, n: usize, gamma: f64) -> Result<f64> {
    check_n(n)?;
    check_gamma(gamma, false)?;
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "CV argument must be positive (got {x})"
        )));
    }
    let nf = n as f64;
    let t = specfun::noncentral_t_cdf(nf.sqrt() / x, nf - 1.0, nf.sqrt() / gamma)?;
    Ok((1.0 - t).clamp(0.0, 1.0))
}

/// CDF of the squared sample CV: `1 − F_F(n/x | 1, n − 1, n/γ²)`.
pub fn cv2_cdf(x: f64, n: usize, gamma: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "CV² argument must be positive (got {x})"
        )));
    }
    Cv2Law::new(n, gamma)?.cdf(x)
}

/// Density of the squared sample CV: `(n/x²) f_F(n/x | 1, n − 1, n/γ²)`.
pub fn cv2_pdf(x: f64, n: usize, gamma: f64) -> Result<f64> {
    Cv2Law::new(n, gamma)?.pdf(x)
}

/// Approximate in-control mean and standard deviation of `γ̂²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cv2Moments {
    pub mean: f64,
    pub std: f64,
}

/// Breunig's approximations for the mean and standard deviation of `γ̂²`.
pub fn cv2_moments(pm: &ProcessModel) -> Result<Cv2Moments> {
    pm.validate()?;
    moments_at(pm.gamma0, pm.n)
}

/// Same approximations at an arbitrary CV (used with the observed in-control CV γ₀*).
pub fn moments_at(gamma: f64, n: usize) -> Result<Cv2Moments> {
    check_n(n)?;
    let nf = n as f64;
    let g2 = gamma * gamma;
    let mean = g2 * (1.0 - 3.0 * g2 / nf);
    let bias = mean - g2;
    let radicand = g2
        * g2
        * (2.0 / (nf - 1.0) + g2 * (4.0 / nf + 20.0 / (nf * (nf - 1.0)) + 75.0 * g2 / (nf * nf)))
        - bias * bias;
    if !(radicand > 0.0) || !(mean > 0.0) {
        return Err(Error::domain(format!(
            "CV² moment approximation breaks down at γ = {gamma}, n = {n}"
        )));
    }
    Ok(Cv2Moments {
        mean,
        std: radicand.sqrt(),
    })
}

/// `(x, density)` pairs of `γ̂²` on an evenly spaced grid over `(0, upper]`.
pub fn density_grid(n: usize, gamma: f64, upper: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if !(upper > 0.0) || points == 0 {
        return Err(Error::domain(
            "density grid needs a positive upper bound and points ≥ 1",
        ));
    }
    let law = Cv2Law::new(n, gamma)?;
    (1..=points)
        .map(|i| {
            let x = upper * i as f64 / points as f64;
            law.pdf(x).map(|d| (x, d))
        })
        .collect()
}
