//! Scalar special functions behind the CV sampling laws.
//!
//! The noncentral t and F distributions are evaluated as Poisson mixtures of
//! regularized incomplete beta functions. Every mixture is summed outward from
//! the Poisson mode, with the incomplete beta values advanced by the exact
//! three-term recurrence in the first shape parameter, so that one continued
//! fraction evaluation serves the whole series. Noncentralities in the
//! hundreds of thousands are routine here (λ = n/γ²), and summing from `j = 0`
//! would underflow long before reaching the mass of the mixture.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::{erf::erfc, gamma::ln_gamma};

use crate::error::{Error, Result};

/// Maximum number of mixture terms before a series is declared divergent.
pub const MAX_SERIES_TERMS: usize = 1_000_000;

/// Tail-mass tolerance for the noncentral F mixture.
pub const F_TERM_TOLERANCE: f64 = 1e-15;

/// Tail-mass tolerance for the noncentral t mixture.
pub const T_TERM_TOLERANCE: f64 = 1e-14;

const CF_MAX_ITER: usize = 200_000;
const CF_EPS: f64 = 1e-16;

/// Degrees of freedom and noncentrality of a noncentral F (or t) law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralParams {
    pub df1: f64,
    pub df2: f64,
    pub noncentrality: f64,
}

impl NoncentralParams {
    pub fn new(df1: f64, df2: f64, noncentrality: f64) -> Result<Self> {
        if !(df1 > 0.0 && df1.is_finite()) || !(df2 > 0.0 && df2.is_finite()) {
            return Err(Error::domain(format!(
                "degrees of freedom must be positive and finite (got {df1}, {df2})"
            )));
        }
        if !(noncentrality >= 0.0 && noncentrality.is_finite()) {
            return Err(Error::domain(format!(
                "noncentrality must be finite and non-negative (got {noncentrality})"
            )));
        }
        Ok(Self {
            df1,
            df2,
            noncentrality,
        })
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Stirling remainder `ln Γ(x) − [(x − ½) ln x − x + ½ ln 2π]`, valid for x ≥ 15.
fn stirling_remainder(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln Γ(a) − ln Γ(a + b)` without cancellation when `a` is large.
pub(crate) fn ln_gamma_diff(a: f64, b: f64) -> f64 {
    if a < 15.0 {
        return ln_gamma(a) - ln_gamma(a + b);
    }
    let apb = a + b;
    -(a - 0.5) * (b / a).ln_1p() - b * apb.ln() + b + stirling_remainder(a)
        - stirling_remainder(apb)
}

/// `ln B(a, b)`, accurate to a few ulps even when one argument is huge.
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, large) = if a < b { (a, b) } else { (b, a) };
    if large < 15.0 {
        ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
    } else {
        ln_gamma(small) + ln_gamma_diff(large, small)
    }
}

/// Poisson probability mass `e^{-μ} μ^k / k!`, via the saddle-point form for large `k`.
pub(crate) fn poisson_pmf(k: usize, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    if k < 15 {
        return (-mu + kf * mu.ln() - ln_gamma(kf + 1.0)).exp();
    }
    // k ln(k/μ) + μ − k, written in terms of d = k − μ
    let d = kf - mu;
    let bd0 = kf * (d / mu).ln_1p() - d;
    (-stirling_remainder(kf) - bd0).exp() / (2.0 * PI * kf).sqrt()
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::EvaluationFailure {
        what: "incomplete beta continued fraction",
        terms: CF_MAX_ITER,
    })
}

/// `(ln x, ln(1 − x))` from a complementary pair, keeping precision near both ends.
fn ln_pair(x: f64, omx: f64) -> (f64, f64) {
    if x > 0.5 {
        ((-omx).ln_1p(), omx.ln())
    } else {
        (x.ln(), (-x).ln_1p())
    }
}

/// Returns `(I_x(a,b), 1 − I_x(a,b))`, each computed without cancellation.
///
/// `omx` must equal `1 − x`; callers pass it separately so it keeps full
/// precision when `x` is close to one.
pub(crate) fn inc_beta_pair(x: f64, omx: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    if x <= 0.0 {
        return Ok((0.0, 1.0));
    }
    if omx <= 0.0 {
        return Ok((1.0, 0.0));
    }
    let (ln_x, ln_omx) = ln_pair(x, omx);
    let ln_front = a * ln_x + b * ln_omx - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (ln_front.exp() * beta_continued_fraction(x, a, b)? / a).clamp(0.0, 1.0);
        Ok((lower, 1.0 - lower))
    } else {
        let upper = (ln_front.exp() * beta_continued_fraction(omx, b, a)? / b).clamp(0.0, 1.0);
        Ok((1.0 - upper, upper))
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "incomplete beta argument {x} outside [0, 1]"
        )));
    }
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "incomplete beta shapes must be positive (got a = {a}, b = {b})"
        )));
    }
    Ok(inc_beta_pair(x, 1.0 - x, a, b)?.0)
}

/// Sums of a mixture `Σ_j w_j · I_x(a0 + j, b)` and its companions.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct MixtureSums {
    /// Σ w_j I_x(a_j, b)
    pub lower: f64,
    /// Σ w_j (1 − I_x(a_j, b))
    pub upper: f64,
    /// Σ w_j a_j T_j, where T_j = x^{a_j}(1−x)^b / (a_j B(a_j, b)); gives densities.
    pub density: f64,
    /// Σ w_j over the terms actually summed.
    pub weight: f64,
    pub terms: usize,
}

/// Mixture with weights `w_j = e^{-μ} μ^j / Γ(j + 1 + shift)` (Poisson for `shift = 0`)
/// over incomplete beta terms `I_x(a0 + j, b)`, summed outward from the mode.
#[allow(clippy::too_many_arguments)]
pub(crate) fn beta_mixture(
    mu: f64,
    shift: f64,
    x: f64,
    omx: f64,
    a0: f64,
    b: f64,
    tol: f64,
    what: &'static str,
) -> Result<MixtureSums> {
    let mode = mu.floor().max(0.0) as usize;
    let w_mode = poisson_pmf(mode, mu) * (ln_gamma_diff(mode as f64 + 1.0, shift)).exp();

    let a_mode = a0 + mode as f64;
    let (i_mode, j_mode) = inc_beta_pair(x, omx, a_mode, b)?;
    let t_mode = if x <= 0.0 || omx <= 0.0 {
        0.0
    } else {
        let (ln_x, ln_omx) = ln_pair(x, omx);
        (a_mode * ln_x + b * ln_omx - a_mode.ln() - ln_beta(a_mode, b)).exp()
    };

    let mut sums = MixtureSums::default();
    let add = |w: f64, a: f64, i: f64, j: f64, t: f64, sums: &mut MixtureSums| {
        sums.lower += w * i;
        sums.upper += w * j;
        sums.density += w * a * t;
        sums.weight += w;
        sums.terms += 1;
    };
    add(w_mode, a_mode, i_mode, j_mode, t_mode, &mut sums);

    // Upward from the mode: I(a+1) = I(a) − T(a), T(a+1) = T(a)·x(a+b)/(a+1).
    let (mut w, mut a, mut i, mut jc, mut t) = (w_mode, a_mode, i_mode, j_mode, t_mode);
    let mut k = mode;
    loop {
        let ratio = mu / (k as f64 + 1.0 + shift);
        w *= ratio;
        i = (i - t).max(0.0);
        jc = (jc + t).min(1.0);
        t *= x * (a + b) / (a + 1.0);
        a += 1.0;
        k += 1;
        add(w, a, i, jc, t, &mut sums);
        let r_next = mu / (k as f64 + 1.0 + shift);
        if r_next < 1.0 && w * r_next / (1.0 - r_next) < tol {
            break;
        }
        if w == 0.0 {
            break;
        }
        if sums.terms > MAX_SERIES_TERMS {
            return Err(Error::EvaluationFailure {
                what,
                terms: MAX_SERIES_TERMS,
            });
        }
    }

    // Downward: I(a−1) = I(a) + T(a−1), T(a−1) = T(a)·a / (x(a−1+b)).
    let (mut w, mut a, mut i, mut jc, mut t) = (w_mode, a_mode, i_mode, j_mode, t_mode);
    let mut k = mode;
    while k > 0 {
        w *= (k as f64 + shift) / mu;
        t = if x > 0.0 {
            t * a / (x * (a - 1.0 + b))
        } else {
            0.0
        };
        a -= 1.0;
        i = (i + t).min(1.0);
        jc = (jc - t).max(0.0);
        k -= 1;
        add(w, a, i, jc, t, &mut sums);
        if k == 0 {
            break;
        }
        let r_next = (k as f64 + shift) / mu;
        if r_next < 1.0 && w * r_next / (1.0 - r_next) < tol {
            break;
        }
        if w == 0.0 {
            break;
        }
        if sums.terms > MAX_SERIES_TERMS {
            return Err(Error::EvaluationFailure {
                what,
                terms: MAX_SERIES_TERMS,
            });
        }
    }
    Ok(sums)
}

/// Poisson weights `(first_index, weights)` summed from the mode until the
/// remaining tail mass on each side drops below `tol`.
pub fn poisson_window(mu: f64, tol: f64) -> (usize, Vec<f64>) {
    let mode = mu.floor().max(0.0) as usize;
    let w_mode = poisson_pmf(mode, mu);
    let mut up = vec![];
    let (mut w, mut k) = (w_mode, mode);
    loop {
        w *= mu / (k as f64 + 1.0);
        k += 1;
        up.push(w);
        let r = mu / (k as f64 + 1.0);
        if w == 0.0 || (r < 1.0 && w * r / (1.0 - r) < tol) {
            break;
        }
    }
    let mut down = vec![];
    let (mut w, mut k) = (w_mode, mode);
    while k > 0 {
        w *= k as f64 / mu;
        k -= 1;
        down.push(w);
        let r = k as f64 / mu;
        if k == 0 || w == 0.0 || (r < 1.0 && w * r / (1.0 - r) < tol) {
            break;
        }
    }
    let first = mode - down.len();
    let mut weights: Vec<f64> = down.into_iter().rev().collect();
    weights.push(w_mode);
    weights.extend(up);
    (first, weights)
}

fn f_mixture(x: f64, p: &NoncentralParams) -> Result<MixtureSums> {
    let denom = p.df1 * x + p.df2;
    let y = p.df1 * x / denom;
    let omy = p.df2 / denom;
    beta_mixture(
        p.noncentrality / 2.0,
        0.0,
        y,
        omy,
        p.df1 / 2.0,
        p.df2 / 2.0,
        F_TERM_TOLERANCE,
        "noncentral F mixture",
    )
}

/// CDF and survival function of the noncentral F law at `x`, each accurate in
/// absolute terms and free of `1 − cdf` cancellation.
pub fn noncentral_f_cdf_sf(x: f64, p: &NoncentralParams) -> Result<(f64, f64)> {
    if x.is_nan() {
        return Err(Error::domain("noncentral F argument is NaN"));
    }
    if x <= 0.0 {
        return Ok((0.0, 1.0));
    }
    if x == f64::INFINITY {
        return Ok((1.0, 0.0));
    }
    let s = f_mixture(x, p)?;
    Ok((s.lower.clamp(0.0, 1.0), s.upper.clamp(0.0, 1.0)))
}

/// Noncentral F CDF.
pub fn noncentral_f_cdf(x: f64, p: &NoncentralParams) -> Result<f64> {
    Ok(noncentral_f_cdf_sf(x, p)?.0)
}

/// Noncentral F survival function `1 − CDF`.
pub fn noncentral_f_sf(x: f64, p: &NoncentralParams) -> Result<f64> {
    Ok(noncentral_f_cdf_sf(x, p)?.1)
}

/// Noncentral F density, defined for `x > 0`.
pub fn noncentral_f_pdf(x: f64, p: &NoncentralParams) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "noncentral F density needs x > 0 (got {x})"
        )));
    }
    // Beta density of term j is a_j T_j / (y(1−y)) and dy/dx / (y(1−y)) = 1/x.
    Ok((f_mixture(x, p)?.density / x).max(0.0))
}

/// Noncentral t CDF `P(T ≤ x)` with `nu` degrees of freedom and noncentrality `delta`.
pub fn noncentral_t_cdf(x: f64, nu: f64, delta: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!(
            "t degrees of freedom must be positive (got {nu})"
        )));
    }
    if x.is_nan() || !delta.is_finite() {
        return Err(Error::domain(
            "noncentral t argument or noncentrality is not finite",
        ));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x < 0.0 {
        return Ok((1.0 - nct_nonnegative(-x, nu, -delta)?).clamp(0.0, 1.0));
    }
    Ok(nct_nonnegative(x, nu, delta)?.clamp(0.0, 1.0))
}

/// `P(T ≤ t)` for `t ≥ 0`:
/// Φ(−δ) + ½ Σ_j [p_j I_y(j + ½, ν/2) + q_j I_y(j + 1, ν/2)], y = t²/(t² + ν).
fn nct_nonnegative(t: f64, nu: f64, delta: f64) -> Result<f64> {
    let base = normal_cdf(-delta);
    if t == 0.0 {
        return Ok(base);
    }
    let t2 = t * t;
    let y = t2 / (t2 + nu);
    let omy = nu / (t2 + nu);
    let mu = 0.5 * delta * delta;
    let half = beta_mixture(
        mu,
        0.0,
        y,
        omy,
        0.5,
        nu / 2.0,
        T_TERM_TOLERANCE,
        "noncentral t mixture",
    )?;
    let mut total = base + 0.5 * half.lower;
    if delta != 0.0 {
        let whole = beta_mixture(
            mu,
            0.5,
            y,
            omy,
            1.0,
            nu / 2.0,
            T_TERM_TOLERANCE,
            "noncentral t mixture",
        )?;
        total += 0.5 * delta * FRAC_1_SQRT_2 * whole.lower;
    }
    Ok(total)
}

/// Density of the central F law, used as a closed-form cross-check.
pub fn central_f_pdf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln = 0.5 * df1 * (df1 / df2).ln() + (0.5 * df1 - 1.0) * x.ln()
        - 0.5 * (df1 + df2) * (df1 * x / df2).ln_1p()
        - ln_beta(0.5 * df1, 0.5 * df2);
    ln.exp()
}
