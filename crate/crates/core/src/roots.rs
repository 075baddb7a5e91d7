//! Bracketed root finding for increasing functions: bisection with secant refinement.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Stop once `|f(x)| ≤ f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-6,
            x_tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Finds a sign change of an increasing `f` inside `[lo, hi]`, given
/// `f(lo) < 0 < f(hi)`. Infinite values are allowed; steps that would use
/// them fall back to bisection.
pub fn solve_increasing<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    flo: f64,
    fhi: f64,
    opts: RootOptions,
) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, flo, fhi);
    if !(fa < 0.0 && fb > 0.0) {
        return Err(Error::domain("root bracket does not straddle zero"));
    }
    let mut best = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    let mut last_width = b - a;
    for iter in 1..=opts.max_iter {
        let width = b - a;
        let secant = if fa.is_finite() && fb.is_finite() {
            b - fb * (b - a) / (fb - fa)
        } else {
            f64::NAN
        };
        // secant only while it keeps halving the bracket every couple of steps
        let margin = 1e-3 * width;
        let use_secant = secant.is_finite()
            && secant > a + margin
            && secant < b - margin
            && width <= 0.75 * last_width;
        let x = if use_secant { secant } else { 0.5 * (a + b) };
        last_width = width;
        let fx = f(x)?;
        if fx.is_nan() {
            return Err(Error::domain(format!("function is NaN at {x}")));
        }
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= opts.f_tol {
            return Ok(Root {
                x,
                fx,
                iterations: iter,
            });
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if b - a <= opts.x_tol {
            return Ok(Root {
                x: best.0,
                fx: best.1,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = solve_increasing(
            f,
            0.0,
            2.0,
            -2.0,
            6.0,
            RootOptions {
                f_tol: 1e-14,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
        assert!(r.iterations < 40);
    }

    #[test]
    fn tolerates_infinite_end() {
        let f = |x: f64| {
            Ok(if x >= 1.0 {
                f64::INFINITY
            } else {
                (1.0 / (1.0 - x)).ln() - 3.0
            })
        };
        let r = solve_increasing(
            f,
            0.0,
            1.0,
            -3.0,
            f64::INFINITY,
            RootOptions {
                f_tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.x - (1.0 - (-3f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn steep_exponential() {
        let f = |x: f64| Ok((8.0 * x).exp() - 370.4);
        let r = solve_increasing(
            f,
            0.0,
            20.0,
            1.0 - 370.4,
            f64::INFINITY,
            RootOptions {
                f_tol: 370.4e-6,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(((8.0 * r.x).exp() - 370.4).abs() <= 370.4e-6);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(solve_increasing(Ok, 1.0, 2.0, 1.0, 2.0, RootOptions::default()).is_err());
    }
}
