//! The `d`-asset market. Payoffs `X ~ N(μ_X, P_X⁻¹)`, signal precision
//! `P_I = p_I P_X` and noise precision `P_N = p_N P_X⁻¹`. Under that
//! proportionality the impact matrix guess `𝕐 = ŷ 1_d` reduces the matrix
//! clearing equation to the scalar cubic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cubic::Cubic;
use crate::equilibrium::EquilibriumKind;
use crate::error::{Error, Result};
use crate::model::{DerivedParams, MarketParams};
use crate::spd::{inverse, symmetrize, Spd};
use crate::welfare::{interim_coeffs, ratios, report_from, CeReport};

/// Model as read from JSON; matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetModelInput {
    pub d: usize,
    #[serde(rename = "mu_X")]
    pub mu_x: Vec<f64>,
    #[serde(rename = "prec_X")]
    pub prec_x: Vec<Vec<f64>>,
    #[serde(rename = "p_I")]
    pub p_i: f64,
    #[serde(rename = "p_N")]
    pub p_n: f64,
    #[serde(rename = "alpha_I")]
    pub alpha_i: f64,
    #[serde(rename = "alpha_U")]
    pub alpha_u: f64,
    #[serde(rename = "Pi")]
    pub pi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AssetModel {
    pub d: usize,
    pub mu_x: DVector<f64>,
    pub prec_x: DMatrix<f64>,
    pub p_i: f64,
    pub p_n: f64,
    pub alpha_i: f64,
    pub alpha_u: f64,
    pub pi: DVector<f64>,
    px: Spd,
}

impl AssetModel {
    pub fn new(
        mu_x: DVector<f64>,
        prec_x: DMatrix<f64>,
        p_i: f64,
        p_n: f64,
        alpha_i: f64,
        alpha_u: f64,
        pi: DVector<f64>,
    ) -> Result<Self> {
        let d = mu_x.len();
        if d == 0 {
            return Err(Error::Dimension("d must be at least 1".into()));
        }
        if prec_x.nrows() != d || prec_x.ncols() != d || pi.len() != d {
            return Err(Error::Dimension(format!(
                "mu_X has {d} entries, prec_X is {}x{}, Pi has {}",
                prec_x.nrows(),
                prec_x.ncols(),
                pi.len()
            )));
        }
        if mu_x.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("mu_X", "entries must be finite"));
        }
        if pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("Pi", "entries must be finite"));
        }
        // Scalar checks reuse the single-asset validation.
        MarketParams::new(alpha_i, alpha_u, p_i, p_n, 0.0).derive()?;
        let px = Spd::new("prec_X", &prec_x)?;
        Ok(Self { d, mu_x, prec_x, p_i, p_n, alpha_i, alpha_u, pi, px })
    }

    /// Scalar parameters embedded as a one-asset model with `P_X = 1`.
    pub fn from_scalar(params: &MarketParams, mu_x: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, mu_x),
            DMatrix::identity(1, 1),
            params.p_i,
            params.p_n,
            params.alpha_i,
            params.alpha_u,
            DVector::from_element(1, params.pi),
        )
    }

    pub fn from_input(input: &AssetModelInput) -> Result<Self> {
        if input.prec_x.len() != input.d || input.prec_x.iter().any(|r| r.len() != input.d) {
            return Err(Error::Dimension(format!("prec_X must be {0}x{0}", input.d)));
        }
        if input.mu_x.len() != input.d || input.pi.len() != input.d {
            return Err(Error::Dimension(format!("mu_X and Pi must have {} entries", input.d)));
        }
        let flat: Vec<f64> = input.prec_x.iter().flatten().copied().collect();
        Self::new(
            DVector::from_vec(input.mu_x.clone()),
            DMatrix::from_row_slice(input.d, input.d, &flat),
            input.p_i,
            input.p_n,
            input.alpha_i,
            input.alpha_u,
            DVector::from_vec(input.pi.clone()),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let input: AssetModelInput =
            serde_json::from_str(text).map_err(|e| Error::param("model", format!("bad JSON: {e}")))?;
        Self::from_input(&input)
    }

    pub fn with_p_i(&self, p_i: f64) -> Result<Self> {
        Self::new(self.mu_x.clone(), self.prec_x.clone(), p_i, self.p_n, self.alpha_i, self.alpha_u, self.pi.clone())
    }

    /// Scalar parameters sharing `(α_I, α_U, p_I, p_N)`; supply is zeroed
    /// since only the reduced coordinates are needed.
    pub fn scalar_params(&self) -> MarketParams {
        MarketParams::new(self.alpha_i, self.alpha_u, self.p_i, self.p_n, 0.0)
    }

    pub fn derived(&self) -> DerivedParams {
        self.scalar_params().derive().expect("validated at construction")
    }

    pub fn prec_x_spd(&self) -> &Spd {
        &self.px
    }

    pub fn cov_x(&self) -> DMatrix<f64> {
        self.px.inverse()
    }

    pub fn pi_hat(&self) -> DVector<f64> {
        &self.pi / (self.alpha_i + self.alpha_u)
    }

    /// `μ_X - P_X⁻¹ Π̂`.
    pub fn p_q0(&self) -> DVector<f64> {
        &self.mu_x - self.cov_x() * self.pi_hat()
    }

    pub fn prec_i(&self) -> DMatrix<f64> {
        &self.prec_x * self.p_i
    }

    pub fn prec_n(&self) -> DMatrix<f64> {
        self.cov_x() * self.p_n
    }
}

/// Matrix equilibrium. Price: `p_Q0 + S (h - p_Q0)` (or `p_Q0 + S z` for
/// the no-signal kinds). Demands: `ψ_I = a_I + G_I g + C_I p`,
/// `ψ_U = a_U + H_U h + C_U p` (no `g`/`h` terms without a signal).
#[derive(Debug, Clone)]
pub struct MatrixEquilibrium {
    pub kind: EquilibriumKind,
    pub y_hat: Option<f64>,
    pub lambda: Option<DMatrix<f64>>,
    pub m_p: DMatrix<f64>,
    pub mcal: Option<DMatrix<f64>>,
    pub p_pub: DMatrix<f64>,
    pub p_q0: DVector<f64>,
    pub pi_hat: DVector<f64>,
    pub price_slope: DMatrix<f64>,
    pub insider_intercept: DVector<f64>,
    pub insider_g: DMatrix<f64>,
    pub insider_p: DMatrix<f64>,
    pub uninformed_intercept: DVector<f64>,
    pub uninformed_h: DMatrix<f64>,
    pub uninformed_p: DMatrix<f64>,
    /// Signal and noise precisions the equilibrium was solved for.
    pub prec_i: DMatrix<f64>,
    pub prec_n: DMatrix<f64>,
    pub alpha_i: f64,
    pub alpha_u: f64,
}

fn rows(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!(m.row(i).iter().copied().collect::<Vec<_>>())).collect())
}

fn vector(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

impl MatrixEquilibrium {
    pub fn dim(&self) -> usize {
        self.p_q0.len()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "d": self.dim(),
            "y_hat": self.y_hat,
            "Lambda": self.lambda.as_ref().map(rows),
            "M_p": rows(&self.m_p),
            "Mcal": self.mcal.as_ref().map(rows),
            "P_pub": rows(&self.p_pub),
            "p_Q0": vector(&self.p_q0),
            "Pi_hat": vector(&self.pi_hat),
            "price_slope": rows(&self.price_slope),
            "insider_intercept": vector(&self.insider_intercept),
            "insider_g": rows(&self.insider_g),
            "insider_p": rows(&self.insider_p),
            "uninformed_intercept": vector(&self.uninformed_intercept),
            "uninformed_h": rows(&self.uninformed_h),
            "uninformed_p": rows(&self.uninformed_p),
        })
    }

    fn check_len(&self, name: &str, v: &DVector<f64>) -> Result<()> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{name} has {} entries, model has {}", v.len(), self.dim())))
        }
    }

    pub fn public_signal(&self, g: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        let lam = self.lambda.as_ref().ok_or_else(|| Error::Unsupported {
            kind: self.kind.as_str(),
            what: "no public signal exists without a private signal".into(),
        })?;
        self.check_len("g", g)?;
        self.check_len("z", z)?;
        Ok(g + lam * z)
    }

    /// State that prices are affine in: `h` with a signal, `z` without.
    pub fn state(&self, g: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        match &self.lambda {
            Some(lam) => g + lam * z,
            None => z.clone(),
        }
    }

    pub fn price(&self, state: &DVector<f64>) -> DVector<f64> {
        if self.kind.has_signal() {
            &self.p_q0 + &self.price_slope * (state - &self.p_q0)
        } else {
            &self.p_q0 + &self.price_slope * state
        }
    }

    pub fn insider_demand(&self, g: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len("z", z)?;
        if self.kind.has_signal() {
            self.check_len("g", g)?;
        }
        let p = self.price(&self.state(g, z));
        Ok(self.insider_at(g, &p))
    }

    /// Insider demand at a given price, used by the optimality checks.
    pub fn insider_at(&self, g: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        let mut psi = &self.insider_intercept + &self.insider_p * p;
        if self.kind.has_signal() {
            psi += &self.insider_g * g;
        }
        psi
    }

    pub fn uninformed_demand(&self, state: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len("state", state)?;
        let p = self.price(state);
        let mut psi = &self.uninformed_intercept + &self.uninformed_p * &p;
        if self.kind.has_signal() {
            psi += &self.uninformed_h * state;
        }
        Ok(psi)
    }

    /// `α_I ψ_I + α_U ψ_U + z - Π`.
    pub fn clearing_residual(&self, g: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.state(g, z);
        let total = self.alpha_i + self.alpha_u;
        Ok(self.insider_demand(g, z)? * self.alpha_i + self.uninformed_demand(&s)? * self.alpha_u + z
            - &self.pi_hat * total)
    }

    /// Perceived impact `p_Q0 + M_p (ψ - Π̂ + z/α_I)`; PI only.
    pub fn perceived_price(&self, psi: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        if self.kind != EquilibriumKind::Pi {
            return Err(Error::Unsupported { kind: self.kind.as_str(), what: "perceived impact map".into() });
        }
        Ok(&self.p_q0 + &self.m_p * (psi - &self.pi_hat + z / self.alpha_i))
    }
}

pub fn solve_pi_multi(model: &AssetModel) -> Result<MatrixEquilibrium> {
    if !(model.p_i > 0.0) {
        return Err(Error::param("p_I", "PI needs p_I > 0; p_I = 0 is the NS_PI equilibrium"));
    }
    let sol = Cubic::from_derived(&model.derived()).solve()?;
    Ok(assemble_pi_multi(model, sol.y_hat))
}

/// Builds every matrix from its general definition with `𝕐 = y 1_d`, so
/// the closed forms under proportionality are a check, not an input.
pub fn assemble_pi_multi(model: &AssetModel, y: f64) -> MatrixEquilibrium {
    let d = model.d;
    let eye = DMatrix::<f64>::identity(d, d);
    let a = model.alpha_i;
    let p_i = model.prec_i();
    let p_n = model.prec_n();
    let p_i_inv = model.px.inverse() / model.p_i;
    let pxg = Spd::new("P_X|G", &(&model.prec_x + &p_i)).expect("sum of SPD matrices");
    let (s, si) = (pxg.sqrt(), pxg.inv_sqrt());
    let yy = &eye * y;

    let m_p = &si * &yy * &si;
    let inv_1_2y = &eye / (1.0 + 2.0 * y);
    let inv_1_y = &eye / (1.0 + y);
    let mcal = &s * &inv_1_2y * &si * &p_i;
    let lambda = &p_i_inv * &s * (&eye + yy.transpose()) * &si / a;
    let p_n_inv = Spd::new("P_N", &p_n).expect("validated").inverse();
    let p_pub_inv = symmetrize(&(&p_i_inv + &lambda * p_n_inv * lambda.transpose()));
    let p_pub = Spd::new("P_U,iota inverse", &p_pub_inv).expect("positive definite").inverse();
    let price_slope = &m_p * &mcal;

    let p_q0 = model.p_q0();
    let pi_hat = model.pi_hat();
    let b_i = &s * &inv_1_y * &si * &model.prec_x;
    let lambda_inv = inverse("Lambda", &lambda).expect("invertible for y > -1");
    let c_i = -(&s * &inv_1_y * &s);
    MatrixEquilibrium {
        kind: EquilibriumKind::Pi,
        y_hat: Some(y),
        insider_intercept: &pi_hat + &b_i * &p_q0,
        insider_g: lambda_inv / a,
        insider_p: c_i,
        uninformed_intercept: &pi_hat + &model.prec_x * &p_q0,
        uninformed_h: p_pub.clone(),
        uninformed_p: -(&p_pub + &model.prec_x),
        lambda: Some(lambda),
        m_p,
        mcal: Some(mcal),
        p_pub,
        p_q0,
        pi_hat,
        price_slope,
        prec_i: p_i,
        prec_n: p_n,
        alpha_i: model.alpha_i,
        alpha_u: model.alpha_u,
    }
}

/// Frobenius norm of `(α_I/α_U) 1_d + P_U,ι 𝓜⁻¹ - (P_U,ι + P_X) M_p`.
pub fn clearing_matrix_residual(eq: &MatrixEquilibrium, model: &AssetModel) -> Result<f64> {
    let mcal = match (&eq.mcal, eq.kind) {
        (Some(m), EquilibriumKind::Pi) => m,
        _ => return Err(Error::Unsupported { kind: eq.kind.as_str(), what: "matrix clearing residual".into() }),
    };
    let d = model.d;
    let mcal_inv = inverse("Mcal", mcal)?;
    let r = DMatrix::<f64>::identity(d, d) * (model.alpha_i / model.alpha_u) + &eq.p_pub * mcal_inv
        - (&eq.p_pub + &model.prec_x) * &eq.m_p;
    Ok(r.norm())
}

/// Price-taking equilibrium, optionally with general SPD `P_I`, `P_N`.
pub fn solve_pt_multi(model: &AssetModel, general: Option<(&DMatrix<f64>, &DMatrix<f64>)>) -> Result<MatrixEquilibrium> {
    let (p_i, p_n) = match general {
        Some((pi, pn)) => {
            if pi.nrows() != model.d || pn.nrows() != model.d {
                return Err(Error::Dimension("P_I and P_N must match d".into()));
            }
            Spd::new("P_I", pi)?;
            Spd::new("P_N", pn)?;
            (pi.clone(), pn.clone())
        }
        None => {
            if !(model.p_i > 0.0) {
                return Err(Error::param("p_I", "PT needs p_I > 0; p_I = 0 is the NS_PT equilibrium"));
            }
            (model.prec_i(), model.prec_n())
        }
    };
    let (ai, au) = (model.alpha_i, model.alpha_u);
    let p_i_inv = Spd::new("P_I", &p_i)?.inverse();
    let p_n_inv = Spd::new("P_N", &p_n)?.inverse();
    let lambda = &p_i_inv / ai;
    let p_pub_inv = symmetrize(&(&p_i_inv + &p_i_inv * &p_n_inv * &p_i_inv / (ai * ai)));
    let p_pub = Spd::new("P_U inverse", &p_pub_inv)?.inverse();
    let px = &model.prec_x;
    let lhs = (&p_i + px) * ai + (&p_pub + px) * au;
    let price_slope = inverse("price denominator", &lhs)? * (&p_i * ai + &p_pub * au);
    let p_q0 = model.p_q0();
    let pi_hat = model.pi_hat();
    // Reverse combined-demand map: clearing gives
    // ψ_I - Π̂ + z/α_I = -(α_U/α_I)(ψ_U - Π̂), and ψ_U is affine in the price.
    let s_inv = inverse("price slope", &price_slope)?;
    let m_p = inverse("reverse demand", &((&p_pub + px - &p_pub * s_inv) * (au / ai)))?;
    let intercept = &pi_hat + px * &p_q0;
    Ok(MatrixEquilibrium {
        kind: EquilibriumKind::Pt,
        y_hat: None,
        lambda: Some(lambda),
        m_p,
        mcal: None,
        insider_intercept: intercept.clone(),
        insider_g: p_i.clone(),
        insider_p: -(&p_i + px),
        uninformed_intercept: intercept,
        uninformed_h: p_pub.clone(),
        uninformed_p: -(&p_pub + px),
        p_pub,
        p_q0,
        pi_hat,
        price_slope,
        prec_i: p_i,
        prec_n: p_n,
        alpha_i: ai,
        alpha_u: au,
    })
}

pub fn solve_no_signal_multi(model: &AssetModel, impact: bool) -> Result<MatrixEquilibrium> {
    let d = model.d;
    let (ai, au) = (model.alpha_i, model.alpha_u);
    let l = ai / (ai + au);
    let px = &model.prec_x;
    let cov = model.cov_x();
    let p_q0 = model.p_q0();
    let pi_hat = model.pi_hat();
    let zero = DMatrix::<f64>::zeros(d, d);
    // Price `p_Q0 + k P_X⁻¹ z/α_I`; demands expressed through the price.
    let (kind, k, insider_scale) = if impact {
        (EquilibriumKind::NsPi, l / (1.0 - l * l), 1.0 - l)
    } else {
        (EquilibriumKind::NsPt, l, 1.0)
    };
    Ok(MatrixEquilibrium {
        kind,
        y_hat: None,
        lambda: None,
        m_p: &cov * (l / (1.0 - l)),
        mcal: None,
        p_pub: zero.clone(),
        price_slope: &cov * (k / ai),
        insider_intercept: &pi_hat + px * &p_q0 * insider_scale,
        insider_g: zero.clone(),
        insider_p: -(px * insider_scale),
        uninformed_intercept: &pi_hat + px * &p_q0,
        uninformed_h: zero.clone(),
        uninformed_p: -px.clone(),
        p_q0,
        pi_hat,
        prec_i: zero,
        prec_n: model.prec_n(),
        alpha_i: ai,
        alpha_u: au,
    })
}

pub fn solve_multi(model: &AssetModel, kind: EquilibriumKind) -> Result<MatrixEquilibrium> {
    match kind {
        EquilibriumKind::Pi => solve_pi_multi(model),
        EquilibriumKind::Pt => solve_pt_multi(model, None),
        EquilibriumKind::NsPi => solve_no_signal_multi(model, true),
        EquilibriumKind::NsPt => solve_no_signal_multi(model, false),
    }
}

fn baselines(model: &AssetModel) -> (f64, f64) {
    let ph = model.pi_hat();
    let q = ph.dot(&model.mu_x) - 0.5 * ph.dot(&(model.cov_x() * &ph));
    (model.alpha_i * q, model.alpha_u * q)
}

pub fn ce_ex_ante_multi(model: &AssetModel) -> Result<CeReport> {
    if !(model.p_i > 0.0) {
        return Err(Error::param("p_I", "ex-ante CEs need p_I > 0"));
    }
    let dp = model.derived();
    let y = Cubic::from_derived(&dp).solve()?.y_hat;
    let r = ratios(dp.kappa, dp.lambda, dp.p_i, y);
    let (nsn_i, nsn_u) = baselines(model);
    Ok(report_from(model.d, model.alpha_i, model.alpha_u, nsn_i, nsn_u, &r))
}

/// Interim certainty equivalents at `(G, Z_N) = (g, z)`.
pub fn ce_interim_multi(model: &AssetModel, kind: EquilibriumKind, g: &DVector<f64>, z: &DVector<f64>) -> Result<(f64, f64)> {
    if !kind.has_signal() {
        return Err(Error::Unsupported { kind: kind.as_str(), what: "use no_signal_interim_limits".into() });
    }
    if g.len() != model.d || z.len() != model.d {
        return Err(Error::Dimension(format!("g and z must have {} entries", model.d)));
    }
    if !(model.p_i > 0.0) {
        return Err(Error::param("p_I", "interim CEs need p_I > 0"));
    }
    let dp = model.derived();
    let y = match kind {
        EquilibriumKind::Pi => Some(Cubic::from_derived(&dp).solve()?.y_hat),
        _ => None,
    };
    let c = interim_coeffs(&dp, kind, y);
    let (ai, au, r) = (model.alpha_i, model.alpha_u, dp.r);
    let lam_scale = match y {
        Some(y) => (1.0 + y) / (ai * model.p_i),
        None => 1.0 / (ai * model.p_i),
    };
    let cov = model.cov_x();
    let h = g + &cov * z * lam_scale;
    let ph = model.pi_hat();
    let q0 = model.p_q0();
    let quad = ph.dot(&(&cov * &ph));

    let base_i = -0.5 * ai * r * (quad - 2.0 * ph.dot(&(&model.mu_x + g * ((1.0 - r) / r))));
    let base_u = -au / (2.0 * (1.0 + c.p_pub)) * (quad - 2.0 * ph.dot(&(&model.mu_x + &h * c.p_pub)));
    let sq = model.px.sqrt();
    let isq = model.px.inv_sqrt();
    let vi = &sq * (g - &q0) * c.a_g - &isq * z * (c.a_z / ai);
    let vu = &sq * (&h - &q0);
    Ok((base_i + 0.5 * ai * c.scale_i * vi.norm_squared(), base_u + 0.5 * au * c.coef_u * vu.norm_squared()))
}
