//! Market primitives and the reduced parameters every formula consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exogenous primitives of the single-asset model.
///
/// The payoff is normalized to `X ~ N(0, 1)`; the insider observes
/// `G = X + Z_I` with `Z_I ~ N(0, 1/p_I)` and noise traders demand
/// `Z_N ~ N(0, 1/p_N)` shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    #[serde(rename = "alpha_I")]
    pub alpha_i: f64,
    #[serde(rename = "alpha_U")]
    pub alpha_u: f64,
    #[serde(rename = "p_I")]
    pub p_i: f64,
    #[serde(rename = "p_N")]
    pub p_n: f64,
    /// Outstanding supply in shares.
    #[serde(rename = "Pi")]
    pub pi: f64,
}

/// Reduced parameters. `lambda_i` duplicates `lambda` because the
/// certainty-equivalent displays use both spellings side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Precision of `Z_N / alpha_I`.
    pub kappa: f64,
    /// Insider share of total risk tolerance.
    pub lambda: f64,
    #[serde(rename = "Pi_hat")]
    pub pi_hat: f64,
    #[serde(rename = "p_Q0")]
    pub p_q0: f64,
    pub beta: f64,
    #[serde(rename = "lambda_I")]
    pub lambda_i: f64,
    #[serde(rename = "lambda_U")]
    pub lambda_u: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(skip)]
    pub p_i: f64,
}

fn check_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be finite, got {v}")))
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    check_finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be > 0, got {v}")))
    }
}

impl MarketParams {
    pub fn new(alpha_i: f64, alpha_u: f64, p_i: f64, p_n: f64, pi: f64) -> Self {
        Self { alpha_i, alpha_u, p_i, p_n, pi }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("alpha_I", self.alpha_i)?;
        check_positive("alpha_U", self.alpha_u)?;
        check_finite("p_I", self.p_i)?;
        if self.p_i < 0.0 {
            return Err(Error::param("p_I", format!("must be >= 0, got {}", self.p_i)));
        }
        check_positive("p_N", self.p_n)?;
        check_finite("Pi", self.pi)
    }

    /// Same parameters with a different signal precision.
    pub fn with_p_i(&self, p_i: f64) -> Self {
        Self { p_i, ..*self }
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        let total = self.alpha_i + self.alpha_u;
        let kappa = self.alpha_i * self.alpha_i * self.p_n;
        let lambda = self.alpha_i / total;
        let pi_hat = self.pi / total;
        let d = DerivedParams {
            kappa,
            lambda,
            pi_hat,
            p_q0: -pi_hat,
            beta: kappa * self.p_i,
            lambda_i: lambda,
            lambda_u: self.alpha_u / total,
            r: 1.0 / (1.0 + self.p_i),
            p_i: self.p_i,
        };
        // Extreme but finite inputs can still overflow or underflow here.
        check_finite("kappa", d.kappa)?;
        check_finite("Pi_hat", d.pi_hat)?;
        check_finite("beta", d.beta)?;
        if !(d.kappa > 0.0) {
            return Err(Error::param("kappa", "alpha_I^2 * p_N underflowed to 0"));
        }
        if !(d.lambda > 0.0 && d.lambda < 1.0) {
            return Err(Error::param("lambda", format!("must lie in (0, 1), got {}", d.lambda)));
        }
        Ok(d)
    }
}

/// Free function form of [`MarketParams::derive`].
pub fn derive(params: &MarketParams) -> Result<DerivedParams> {
    params.derive()
}

impl DerivedParams {
    /// Reduced parameters straight from `(kappa, lambda, p_I)` with zero
    /// supply, for callers that work in the reduced coordinates only.
    pub fn from_reduced(kappa: f64, lambda: f64, p_i: f64) -> Result<Self> {
        check_positive("kappa", kappa)?;
        check_finite("lambda", lambda)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param("lambda", format!("must lie in (0, 1), got {lambda}")));
        }
        check_finite("p_I", p_i)?;
        if p_i < 0.0 {
            return Err(Error::param("p_I", format!("must be >= 0, got {p_i}")));
        }
        Ok(Self {
            kappa,
            lambda,
            pi_hat: 0.0,
            p_q0: 0.0,
            beta: kappa * p_i,
            lambda_i: lambda,
            lambda_u: 1.0 - lambda,
            r: 1.0 / (1.0 + p_i),
            p_i,
        })
    }
}
