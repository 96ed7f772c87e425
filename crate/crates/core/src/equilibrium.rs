//! The four scalar equilibria as explicit affine objects.
//!
//! Demands are risk-tolerance adjusted (`ψ`); trader `i` holds `α_i ψ`
//! shares. Prices and demands are affine in the state, which is the public
//! signal `h` for PI/PT and the noise demand `z` for the no-signal kinds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cubic::{solve_cubic, CubicSolution};
use crate::error::{Error, Result};
use crate::model::{DerivedParams, MarketParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    #[serde(rename = "PI")]
    Pi,
    #[serde(rename = "PT")]
    Pt,
    #[serde(rename = "NS_PI")]
    NsPi,
    #[serde(rename = "NS_PT")]
    NsPt,
}

impl EquilibriumKind {
    pub const ALL: [EquilibriumKind; 4] = [Self::Pi, Self::Pt, Self::NsPi, Self::NsPt];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pi => "PI",
            Self::Pt => "PT",
            Self::NsPi => "NS_PI",
            Self::NsPt => "NS_PT",
        }
    }

    pub fn has_signal(self) -> bool {
        matches!(self, Self::Pi | Self::Pt)
    }

    pub fn is_impact(self) -> bool {
        matches!(self, Self::Pi | Self::NsPi)
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One solved equilibrium.
///
/// * price: `p_Q0 + price_slope * (h - p_Q0)`, or `p_Q0 + price_slope * z`
///   for the no-signal kinds.
/// * insider: `ψ_I = c_g g + c_p p + c_q p_Q0` with `insider_coeffs = [c_g, c_p, c_q]`.
/// * uninformed: `ψ_U = u_h h + u_p p` with `uninformed_coeffs = [u_h, u_p]`.
/// * perceived impact: `p = impact_v + impact_m (ψ_I - Π̂ + z/α_I)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    #[serde(flatten)]
    pub params: MarketParams,
    #[serde(flatten)]
    pub derived: DerivedParams,
    /// `Λ` in `h = g + Λ z`; absent for the no-signal kinds.
    pub lambda_sig: Option<f64>,
    pub p_pub: f64,
    pub price_intercept: f64,
    pub price_slope: f64,
    pub insider_coeffs: [f64; 3],
    pub uninformed_coeffs: [f64; 2],
    #[serde(rename = "impact_M")]
    pub impact_m: f64,
    #[serde(rename = "impact_V")]
    pub impact_v: f64,
    pub y_hat: Option<f64>,
    pub cubic_residual: Option<f64>,
    pub cubic_iterations: Option<usize>,
}

/// Public-signal precision in the PI equilibrium at cubic root `y`.
pub fn p_pub_pi(kappa: f64, p_i: f64, y: f64) -> f64 {
    kappa * p_i * p_i / ((1.0 + y).powi(2) + kappa * p_i)
}

pub fn p_pub_pt(kappa: f64, p_i: f64) -> f64 {
    kappa * p_i * p_i / (1.0 + kappa * p_i)
}

fn require_signal(params: &MarketParams, kind: EquilibriumKind) -> Result<DerivedParams> {
    let d = params.derive()?;
    if params.p_i == 0.0 {
        let ns = if kind.is_impact() { "NS_PI" } else { "NS_PT" };
        return Err(Error::param("p_I", format!("{kind} needs p_I > 0; p_I = 0 is the {ns} equilibrium")));
    }
    Ok(d)
}

pub fn solve_pi(params: &MarketParams) -> Result<Equilibrium> {
    let d = require_signal(params, EquilibriumKind::Pi)?;
    let sol = solve_cubic(&d)?;
    Ok(assemble_pi(params, d, sol))
}

pub(crate) fn assemble_pi(params: &MarketParams, d: DerivedParams, sol: CubicSolution) -> Equilibrium {
    let (p, y) = (params.p_i, sol.y_hat);
    let p_pub = p_pub_pi(d.kappa, p, y);
    Equilibrium {
        kind: EquilibriumKind::Pi,
        params: *params,
        derived: d,
        lambda_sig: Some((1.0 + y) / (params.alpha_i * p)),
        p_pub,
        price_intercept: d.p_q0,
        price_slope: p * y / ((1.0 + p) * (1.0 + 2.0 * y)),
        insider_coeffs: [p / (1.0 + y), -(1.0 + p) / (1.0 + y), -y / (1.0 + y)],
        uninformed_coeffs: [p_pub, -(1.0 + p_pub)],
        impact_m: y / (1.0 + p),
        impact_v: d.p_q0,
        y_hat: Some(y),
        cubic_residual: Some(sol.residual),
        cubic_iterations: Some(sol.iterations),
    }
}

pub fn solve_pt(params: &MarketParams) -> Result<Equilibrium> {
    let d = require_signal(params, EquilibriumKind::Pt)?;
    let (ai, au, p) = (params.alpha_i, params.alpha_u, params.p_i);
    let p_pub = p_pub_pt(d.kappa, p);
    Ok(Equilibrium {
        kind: EquilibriumKind::Pt,
        params: *params,
        derived: d,
        lambda_sig: Some(1.0 / (ai * p)),
        p_pub,
        price_intercept: d.p_q0,
        price_slope: (ai * p + au * p_pub) / (ai * (1.0 + p) + au * (1.0 + p_pub)),
        insider_coeffs: [p, -(1.0 + p), 0.0],
        uninformed_coeffs: [p_pub, -(1.0 + p_pub)],
        // Reverse combined-demand map; PT traders do not internalize it.
        impact_m: (ai * p + au * p_pub) / (au * (p - p_pub)),
        impact_v: d.p_q0,
        y_hat: None,
        cubic_residual: None,
        cubic_iterations: None,
    })
}

/// No-signal equilibrium; `impact` selects the PI flavor. `p_I` is ignored.
pub fn solve_no_signal(params: &MarketParams, impact: bool) -> Result<Equilibrium> {
    let d = params.with_p_i(0.0).derive()?;
    let l = d.lambda;
    let (kind, slope, insider) = if impact {
        (EquilibriumKind::NsPi, l / (1.0 - l * l), [0.0, -(1.0 - l), -l])
    } else {
        (EquilibriumKind::NsPt, l, [0.0, -1.0, 0.0])
    };
    Ok(Equilibrium {
        kind,
        params: *params,
        derived: DerivedParams { p_i: params.p_i, ..d },
        lambda_sig: None,
        p_pub: 0.0,
        price_intercept: d.p_q0,
        price_slope: slope / params.alpha_i,
        insider_coeffs: insider,
        uninformed_coeffs: [0.0, -1.0],
        impact_m: l / (1.0 - l),
        impact_v: d.p_q0,
        y_hat: None,
        cubic_residual: None,
        cubic_iterations: None,
    })
}

pub fn solve(params: &MarketParams, kind: EquilibriumKind) -> Result<Equilibrium> {
    match kind {
        EquilibriumKind::Pi => solve_pi(params),
        EquilibriumKind::Pt => solve_pt(params),
        EquilibriumKind::NsPi => solve_no_signal(params, true),
        EquilibriumKind::NsPt => solve_no_signal(params, false),
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {v}")))
    }
}

/// Risk-tolerance-adjusted demand to shares.
pub fn shares(alpha: f64, psi: f64) -> f64 {
    alpha * psi
}

impl Equilibrium {
    pub fn public_signal(&self, g: f64, z: f64) -> Result<f64> {
        let lam = self.lambda_sig.ok_or_else(|| Error::Unsupported {
            kind: self.kind.as_str(),
            what: "no public signal exists without a private signal".into(),
        })?;
        finite("g", g)?;
        finite("z", z)?;
        Ok(g + lam * z)
    }

    /// Price at state `h` (PI/PT) or `z` (no-signal kinds).
    pub fn price(&self, state: f64) -> Result<f64> {
        finite("state", state)?;
        Ok(self.price_unchecked(state))
    }

    #[inline]
    pub(crate) fn price_unchecked(&self, state: f64) -> f64 {
        if self.kind.has_signal() {
            self.price_intercept + self.price_slope * (state - self.derived.p_q0)
        } else {
            self.price_intercept + self.price_slope * state
        }
    }

    #[inline]
    pub(crate) fn state(&self, g: f64, z: f64) -> f64 {
        match self.lambda_sig {
            Some(lam) => g + lam * z,
            None => z,
        }
    }

    /// Price reached from the primitives `(g, z)`.
    pub fn price_at(&self, g: f64, z: f64) -> f64 {
        self.price_unchecked(self.state(g, z))
    }

    pub fn insider_demand(&self, g: f64, z: f64) -> Result<f64> {
        if self.kind.has_signal() {
            finite("g", g)?;
        }
        finite("z", z)?;
        Ok(self.insider_unchecked(g, z))
    }

    #[inline]
    pub(crate) fn insider_unchecked(&self, g: f64, z: f64) -> f64 {
        let p = self.price_at(g, z);
        let [cg, cp, cq] = self.insider_coeffs;
        let gterm = if self.kind.has_signal() { cg * g } else { 0.0 };
        gterm + cp * p + cq * self.derived.p_q0
    }

    /// Uninformed demand at state `h` (PI/PT) or `z` (no-signal kinds).
    pub fn uninformed_demand(&self, state: f64) -> Result<f64> {
        finite("state", state)?;
        Ok(self.uninformed_unchecked(state))
    }

    #[inline]
    pub(crate) fn uninformed_unchecked(&self, state: f64) -> f64 {
        let p = self.price_unchecked(state);
        let [uh, up] = self.uninformed_coeffs;
        let hterm = if self.kind.has_signal() { uh * state } else { 0.0 };
        hterm + up * p
    }

    /// `α_I ψ_I + α_U ψ_U + z - Π`, zero in equilibrium.
    pub fn clearing_residual(&self, g: f64, z: f64) -> f64 {
        let s = self.state(g, z);
        self.params.alpha_i * self.insider_unchecked(g, z) + self.params.alpha_u * self.uninformed_unchecked(s) + z
            - self.params.pi
    }

    /// Price the insider perceives after trading to `psi` from endowment
    /// `psi_i0` (which must be the Pareto endowment `Π̂`).
    pub fn perceived_price(&self, psi: f64, psi_i0: f64, z: f64) -> Result<f64> {
        if !self.kind.has_signal() {
            return Err(Error::Unsupported { kind: self.kind.as_str(), what: "perceived impact map".into() });
        }
        let pi_hat = self.derived.pi_hat;
        if (psi_i0 - pi_hat).abs() > 1e-12 * (1.0 + pi_hat.abs()) {
            return Err(Error::param("psi_I0", format!("only the Pareto endowment {pi_hat} is supported")));
        }
        finite("psi", psi)?;
        finite("z", z)?;
        Ok(self.impact_v + self.impact_m * (psi - psi_i0 + z / self.params.alpha_i))
    }
}

pub fn public_signal(eq: &Equilibrium, g: f64, z: f64) -> Result<f64> {
    eq.public_signal(g, z)
}

pub fn price(eq: &Equilibrium, state: f64) -> Result<f64> {
    eq.price(state)
}

pub fn insider_demand(eq: &Equilibrium, g: f64, z: f64) -> Result<f64> {
    eq.insider_demand(g, z)
}

pub fn uninformed_demand(eq: &Equilibrium, state: f64) -> Result<f64> {
    eq.uninformed_demand(state)
}

pub fn perceived_price(eq: &Equilibrium, psi: f64, psi_i0: f64, z: f64) -> Result<f64> {
    eq.perceived_price(psi, psi_i0, z)
}

/// Price reactivity to the market signal (`m_g*`) and to the publicly
/// observable combined demand (`m_chi*`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slopes {
    pub m_g_iota: f64,
    pub m_g: f64,
    pub m_chi_iota: f64,
    pub m_chi: f64,
}

pub fn slopes(eq_pi: &Equilibrium, eq_pt: &Equilibrium) -> Result<Slopes> {
    if eq_pi.kind != EquilibriumKind::Pi || eq_pt.kind != EquilibriumKind::Pt {
        return Err(Error::Unsupported { kind: eq_pi.kind.as_str(), what: "slopes need a PI and a PT equilibrium".into() });
    }
    if eq_pi.params != eq_pt.params {
        return Err(Error::ParamMismatch);
    }
    let d = eq_pi.derived;
    let (k, l, p) = (d.kappa, d.lambda, d.p_i);
    let y = eq_pi.y_hat.expect("PI equilibrium carries its root");
    Ok(Slopes {
        m_g_iota: p * y / ((1.0 + p) * (1.0 + 2.0 * y)),
        m_g: p * (k * p + l) / (1.0 - l + (1.0 + p) * (k * p + l)),
        m_chi_iota: y / (1.0 + p),
        m_chi: (l + k * p) / (1.0 - l),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const Y_UNIT: f64 = 2.689_095_323_637_659_4;

    fn unit() -> MarketParams {
        MarketParams::new(1.0, 1.0, 1.0, 1.0, 0.0)
    }

    #[test]
    fn pi_unit_coefficients() {
        let eq = solve_pi(&unit()).unwrap();
        let y = eq.y_hat.unwrap();
        assert!((y - Y_UNIT).abs() < 1e-12);
        assert!((eq.lambda_sig.unwrap() - (1.0 + Y_UNIT)).abs() < 1e-12);
        assert!((eq.price_slope - Y_UNIT / (2.0 * (1.0 + 2.0 * Y_UNIT))).abs() < 1e-14);
        assert!((eq.p_pub - 1.0 / ((1.0 + Y_UNIT).powi(2) + 1.0)).abs() < 1e-14);
        assert_eq!(eq.impact_v, 0.0);
    }

    #[test]
    fn pt_unit_coefficients() {
        let eq = solve_pt(&unit()).unwrap();
        assert_eq!(eq.p_pub, 0.5);
        let d = eq.derived;
        let (k, l, p) = (d.kappa, d.lambda, d.p_i);
        let alt = p * (k * p + l) / (1.0 - l + (1.0 + p) * (k * p + l));
        assert!((eq.price_slope - 1.5 / 3.5).abs() < 1e-15);
        assert!((eq.price_slope - alt).abs() < 1e-15);
        assert!((eq.impact_m - 3.0).abs() < 1e-14);
        assert_eq!(eq.insider_demand(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn no_signal_prices() {
        let p = MarketParams::new(2.0, 2.0, 0.0, 1.0, 0.0);
        let pt = solve_no_signal(&p, false).unwrap();
        let pi = solve_no_signal(&p, true).unwrap();
        assert!((pt.price(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pi.price(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(pi.public_signal(0.0, 1.0).is_err());
        assert!(pi.perceived_price(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn no_signal_zero_noise_is_pareto() {
        let p = MarketParams::new(0.4, 1.3, 0.0, 2.0, 1.7);
        for impact in [false, true] {
            let eq = solve_no_signal(&p, impact).unwrap();
            let d = eq.derived;
            assert!((eq.price(0.0).unwrap() - d.p_q0).abs() < 1e-15);
            assert!((eq.insider_demand(f64::NAN, 0.0).unwrap() - d.pi_hat).abs() < 1e-15);
            assert!((eq.uninformed_demand(0.0).unwrap() - d.pi_hat).abs() < 1e-15);
        }
    }

    #[test]
    fn signal_examples() {
        let pt = solve_pt(&unit()).unwrap();
        assert_eq!(pt.public_signal(0.7, 1.1).unwrap(), 0.7 + 1.1);
        let pi = solve_pi(&unit()).unwrap();
        assert!((pi.public_signal(1.0, 1.0).unwrap() - (2.0 + Y_UNIT)).abs() < 1e-12);
        assert_eq!(pi.public_signal(0.3, 0.0).unwrap(), 0.3);
    }

    #[test]
    fn p_i_zero_points_to_no_signal() {
        let err = solve_pi(&unit().with_p_i(0.0)).unwrap_err();
        assert!(err.to_string().contains("NS_PI"), "{err}");
    }

    #[test]
    fn unit_clearing() {
        for kind in EquilibriumKind::ALL {
            let eq = solve(&unit(), kind).unwrap();
            assert!(eq.clearing_residual(1.0, 1.0).abs() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn slopes_unit() {
        let s = slopes(&solve_pi(&unit()).unwrap(), &solve_pt(&unit()).unwrap()).unwrap();
        assert!(s.m_g_iota < s.m_g);
        assert!((s.m_chi_iota - Y_UNIT / 2.0).abs() < 1e-12);
        assert!((s.m_chi - 3.0).abs() < 1e-15);
        let other = solve_pt(&unit().with_p_i(2.0)).unwrap();
        assert_eq!(slopes(&solve_pi(&unit()).unwrap(), &other), Err(Error::ParamMismatch));
    }

    #[test]
    fn perceived_price_rejects_non_pareto_endowment() {
        let eq = solve_pi(&MarketParams::new(1.0, 1.0, 1.0, 1.0, 2.0)).unwrap();
        assert!(eq.perceived_price(0.0, 0.0, 0.0).is_err());
        assert!(eq.perceived_price(0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn flat_json() {
        let v = serde_json::to_value(solve_pi(&unit()).unwrap()).unwrap();
        for key in ["kind", "alpha_I", "kappa", "p_Q0", "y_hat", "impact_M", "price_slope"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["kind"], "PI");
    }
}
