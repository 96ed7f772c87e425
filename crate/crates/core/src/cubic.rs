//! The cubic whose unique positive root pins down the price-impact
//! equilibrium:
//!
//! `g(y) = (1+y)^2 (1 - c y) + b ((1-λ) y + 1)`,
//! with `c = (1-λ)/(λ(1+p_I))` and `b = κ p_I / λ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DerivedParams;

pub const MAX_ITERATIONS: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub kappa: f64,
    pub lambda: f64,
    pub p_i: f64,
    /// Expanded coefficients, constant term first.
    coeffs: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicSolution {
    pub y_hat: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl Cubic {
    pub fn new(kappa: f64, lambda: f64, p_i: f64) -> Self {
        let c = (1.0 - lambda) / (lambda * (1.0 + p_i));
        let b = kappa * p_i / lambda;
        let coeffs = [1.0 + b, 2.0 - c + b * (1.0 - lambda), 1.0 - 2.0 * c, -c];
        Self { kappa, lambda, p_i, coeffs }
    }

    pub fn from_derived(d: &DerivedParams) -> Self {
        Self::new(d.kappa, d.lambda, d.p_i)
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn value(&self, y: f64) -> f64 {
        let [a0, a1, a2, a3] = self.coeffs;
        ((a3 * y + a2) * y + a1) * y + a0
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let [_, a1, a2, a3] = self.coeffs;
        (3.0 * a3 * y + 2.0 * a2) * y + a1
    }

    /// Magnitude of the summed terms at `y`; rounding error in `value(y)` is
    /// a small multiple of `f64::EPSILON` times this.
    pub fn scale(&self, y: f64) -> f64 {
        let y = y.abs();
        1.0 + self.coeffs.iter().rev().fold(0.0, |acc, a| acc * y + a.abs())
    }

    pub fn tolerance(&self, y: f64) -> f64 {
        RESIDUAL_TOL * self.scale(y)
    }

    /// Root of the `kappa = 0` factorization, `λ(1+p_I)/(1-λ)`. The full
    /// cubic is positive there, so it is a strict lower bound for `ŷ`.
    pub fn lower_bound(&self) -> f64 {
        self.lambda * (1.0 + self.p_i) / (1.0 - self.lambda)
    }

    pub fn initial_upper(&self) -> f64 {
        let (k, l, p) = (self.kappa, self.lambda, self.p_i);
        (3.0 * l * (1.0 + p) * (1.0 + k * p) / (1.0 - l)).max(10.0)
    }

    pub fn solve(&self) -> Result<CubicSolution> {
        self.solve_with(MAX_ITERATIONS)
    }

    /// Safeguarded Newton on a sign bracket `g(lo) > 0 > g(hi)`; any step
    /// leaving the bracket or failing to halve it falls back to bisection.
    pub fn solve_with(&self, max_iterations: usize) -> Result<CubicSolution> {
        if !(self.p_i > 0.0) {
            return Err(Error::param("p_I", "the cubic needs p_I > 0; use the no-signal equilibria"));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::BracketFailure { y_max: f64::NAN });
        }

        let mut hi = self.initial_upper();
        while self.value(hi) >= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::BracketFailure { y_max: hi });
            }
        }
        let mut lo = 0.0;
        let lb = self.lower_bound();
        if lb < hi && self.value(lb) > 0.0 {
            lo = lb;
        }

        let mut y = 0.5 * (lo + hi);
        let mut step_old = hi - lo;
        for it in 1..=max_iterations {
            let gy = self.value(y);
            if !gy.is_finite() {
                return Err(Error::BracketFailure { y_max: hi });
            }
            if gy.abs() <= self.tolerance(y) {
                return Ok(CubicSolution { y_hat: y, residual: gy, iterations: it });
            }
            if gy > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                // Bracket exhausted at machine precision.
                let r = self.value(y);
                if r.abs() <= self.tolerance(y) {
                    return Ok(CubicSolution { y_hat: y, residual: r, iterations: it });
                }
                return Err(Error::NoConvergence { iterations: it, residual: r });
            }

            // Newton only if it lands inside the bracket and shrinks at least
            // as fast as bisection would have two steps ago.
            let dg = self.derivative(y);
            let newton = y - gy / dg;
            let next = if newton > lo && newton < hi && (2.0 * gy).abs() <= (step_old * dg).abs() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            step_old = (next - y).abs();
            y = next;
        }
        Err(Error::NoConvergence { iterations: max_iterations, residual: self.value(y) })
    }
}

pub fn cubic_residual(y: f64, d: &DerivedParams) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::param("y", format!("must be finite, got {y}")));
    }
    Ok(Cubic::from_derived(d).value(y))
}

pub fn solve_cubic(d: &DerivedParams) -> Result<CubicSolution> {
    Cubic::from_derived(d).solve()
}
