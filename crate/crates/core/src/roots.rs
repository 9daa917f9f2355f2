//! Root finding for the KKT multipliers of the budget-sharing problems.

use crate::error::{Error, Result};
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;

/// Relative tolerance on the budget equation.
pub(crate) const BUDGET_RTOL: f64 = 1e-12;

const MAX_BRACKET_STEPS: usize = 4096;
const MAX_BISECTIONS: usize = 400;

/// Finds `λ > 0` with `f(λ) = target` for `f` monotone decreasing on
/// `(0, ∞)`.
///
/// The bracket grows from `λ = 1` by doubling or halving until the residual
/// changes sign, then shrinks by bisection at the geometric midpoint so that
/// multipliers spanning many decades converge at the same rate.
pub(crate) fn solve_decreasing<F>(mut f: F, target: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let tol = BUDGET_RTOL * target.abs();
    let mut lambda = 1.0;
    let mut value = f(lambda);
    if (value - target).abs() <= tol {
        return Ok(lambda);
    }

    let (mut lo, mut hi);
    if value > target {
        lo = lambda;
        let mut steps = 0;
        loop {
            lambda *= 2.0;
            value = f(lambda);
            steps += 1;
            if value <= target || steps > MAX_BRACKET_STEPS || !lambda.is_finite() {
                break;
            }
            lo = lambda;
        }
        hi = lambda;
    } else {
        hi = lambda;
        let mut steps = 0;
        loop {
            lambda *= 0.5;
            value = f(lambda);
            steps += 1;
            if value >= target || steps > MAX_BRACKET_STEPS || lambda == 0.0 {
                break;
            }
            hi = lambda;
        }
        lo = lambda;
    }
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::BracketFailure);
    }
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo >= target && f_hi <= target) {
        return Err(Error::BracketFailure);
    }
    if (f_lo - target).abs() <= tol {
        return Ok(lo);
    }
    if (f_hi - target).abs() <= tol {
        return Ok(hi);
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if (v - target).abs() <= tol {
            return Ok(mid);
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
