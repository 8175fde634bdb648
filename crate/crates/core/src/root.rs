//! Safeguarded Newton iteration for a decreasing score.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSolverConfig {
    /// Initial half-width of the bracket around zero.
    pub initial_half_width: f64,
    /// The bracket is doubled until it reaches this half-width.
    pub max_half_width: f64,
    /// Absolute tolerance on the score.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RootSolverConfig {
    fn default() -> Self {
        Self {
            initial_half_width: 2.0,
            max_half_width: 50.0,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Finds a zero of a nonincreasing function.
///
/// `f` returns the value and the *negative* derivative `g = -f'`, which is
/// nonnegative for a decreasing function. A bracket `[lo, hi]` with
/// `f(lo) > 0 > f(hi)` is grown geometrically from the configured initial
/// width; Newton steps are taken inside it and replaced by bisection whenever
/// they leave the bracket or `g` is not positive.
pub fn solve_decreasing<F>(f: F, cfg: &RootSolverConfig) -> Result<Root>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (f0, g0) = f(0.0)?;
    if f0.abs() < cfg.tolerance {
        return Ok(Root {
            x: 0.0,
            value: f0,
            iterations: 0,
        });
    }

    let mut lo = -cfg.initial_half_width;
    let mut hi = cfg.initial_half_width;
    let mut f_lo = f(lo)?.0;
    let mut f_hi = f(hi)?.0;
    while f_lo < 0.0 && lo > -cfg.max_half_width {
        lo = (lo * 2.0).max(-cfg.max_half_width);
        f_lo = f(lo)?.0;
    }
    while f_hi > 0.0 && hi < cfg.max_half_width {
        hi = (hi * 2.0).min(cfg.max_half_width);
        f_hi = f(hi)?.0;
    }
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::NoRoot { lo, hi });
    }
    if f_lo == 0.0 {
        return Ok(Root { x: lo, value: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, value: 0.0, iterations: 0 });
    }

    let (mut x, mut fx, mut gx) = (0.0, f0, g0);
    for it in 1..=cfg.max_iterations {
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if gx > 0.0 { x + fx / gx } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        (fx, gx) = f(x)?;
        if fx.abs() < cfg.tolerance {
            return Ok(Root {
                x,
                value: fx,
                iterations: it,
            });
        }
        if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    Err(Error::NoRoot { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let r = solve_decreasing(|x| Ok((1.5 - x, 1.0)), &RootSolverConfig::default()).unwrap();
        assert!((r.x - 1.5).abs() < 1e-12);
        assert!(r.iterations <= 2);
    }

    #[test]
    fn needs_bracket_expansion() {
        let r = solve_decreasing(|x: f64| Ok((7.0 - x, 1.0)), &RootSolverConfig::default()).unwrap();
        assert!((r.x - 7.0).abs() < 1e-9);
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // g reported as zero: pure bisection must still converge.
        let r = solve_decreasing(|x: f64| Ok((-(x - 0.3).powi(3), 0.0)), &RootSolverConfig::default())
            .unwrap();
        assert!((r.x - 0.3).abs() < 1e-3);
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn plateau_without_sign_change() {
        let err = solve_decreasing(
            |x: f64| Ok((1.0 / (1.0 + x.exp()), x.exp() / (1.0 + x.exp()).powi(2))),
            &RootSolverConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoRoot { .. }));
    }
}
