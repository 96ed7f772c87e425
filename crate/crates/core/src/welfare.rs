//! Certainty equivalents, the precision-to-utility maps, PI-vs-PT
//! comparisons and the expected demand and price decompositions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubic::Cubic;
use crate::equilibrium::{p_pub_pt, solve_pi, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{DerivedParams, MarketParams};

/// Ex-ante certainty equivalents of both traders in both equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeReport {
    pub dim: usize,
    #[serde(rename = "ce_nsn_I")]
    pub ce_nsn_i: f64,
    #[serde(rename = "ce_nsn_U")]
    pub ce_nsn_u: f64,
    #[serde(rename = "ce_I_pi")]
    pub ce_i_pi: f64,
    #[serde(rename = "ce_U_pi")]
    pub ce_u_pi: f64,
    #[serde(rename = "ce_I_pt")]
    pub ce_i_pt: f64,
    #[serde(rename = "ce_U_pt")]
    pub ce_u_pt: f64,
    #[serde(rename = "diff_I")]
    pub diff_i: f64,
    #[serde(rename = "diff_U")]
    pub diff_u: f64,
}

/// The four log arguments minus one, in reduced coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    pub insider_pi: f64,
    pub uninformed_pi: f64,
    pub insider_pt: f64,
    pub uninformed_pt: f64,
}

fn pt_denominator(kappa: f64, lambda: f64, p: f64) -> f64 {
    1.0 + lambda * p + kappa * p * (1.0 + p)
}

/// Ratios with the `p_I` factors cancelled, so they stay finite as
/// `p_I -> 0`.
pub fn ratios(kappa: f64, lambda: f64, p: f64, y: f64) -> Ratios {
    let (k, l) = (kappa, lambda);
    let den = pt_denominator(k, l, p);
    Ratios {
        insider_pi: (k * p * (1.0 + p) + y * y) / (k * (1.0 + p) * (1.0 + 2.0 * y)),
        uninformed_pi: l * l * (k * p + (1.0 + y).powi(2)) / ((1.0 - l).powi(2) * k * (1.0 + 2.0 * y).powi(2)),
        insider_pt: ((1.0 - l).powi(2) * k * p + (1.0 + p) * (l + k * p).powi(2)) / (k * den * den),
        uninformed_pt: l * l * (1.0 + k * p) / (k * den * den),
    }
}

fn root(d: &DerivedParams) -> Result<f64> {
    Ok(Cubic::from_derived(d).solve()?.y_hat)
}

/// `(φ_ι, φ)`: the insider's log arguments minus one in PI and PT.
pub fn phi_maps(p_i: f64, kappa: f64, lambda: f64) -> Result<(f64, f64)> {
    let d = DerivedParams::from_reduced(kappa, lambda, p_i)?;
    let y = root(&d)?;
    let r = ratios(kappa, lambda, p_i, y);
    Ok((r.insider_pi, r.insider_pt))
}

/// Baselines absent private information plus the four ratio terms.
pub(crate) fn report_from(dim: usize, alpha_i: f64, alpha_u: f64, nsn_i: f64, nsn_u: f64, r: &Ratios) -> CeReport {
    let n = dim as f64;
    let ce_i_pi = nsn_i + 0.5 * alpha_i * n * r.insider_pi.ln_1p();
    let ce_u_pi = nsn_u + 0.5 * alpha_u * n * r.uninformed_pi.ln_1p();
    let ce_i_pt = nsn_i + 0.5 * alpha_i * n * r.insider_pt.ln_1p();
    let ce_u_pt = nsn_u + 0.5 * alpha_u * n * r.uninformed_pt.ln_1p();
    CeReport {
        dim,
        ce_nsn_i: nsn_i,
        ce_nsn_u: nsn_u,
        ce_i_pi,
        ce_u_pi,
        ce_i_pt,
        ce_u_pt,
        // Differences straight from the logs avoid cancelling the baselines.
        diff_i: 0.5 * alpha_i * n * log_ratio(r.insider_pi, r.insider_pt),
        diff_u: 0.5 * alpha_u * n * log_ratio(r.uninformed_pi, r.uninformed_pt),
    }
}

/// `log(1+a) - log(1+b)` without cancellation when `a ≈ b`.
fn log_ratio(a: f64, b: f64) -> f64 {
    ((a - b) / (1.0 + b)).ln_1p()
}

pub fn ce_ex_ante(params: &MarketParams) -> Result<CeReport> {
    let d = params.derive()?;
    if params.p_i == 0.0 {
        return Err(Error::param("p_I", "ex-ante CEs need p_I > 0"));
    }
    let y = root(&d)?;
    let r = ratios(d.kappa, d.lambda, d.p_i, y);
    let nsn_i = -0.5 * params.alpha_i * d.pi_hat * d.pi_hat;
    let nsn_u = -0.5 * params.alpha_u * d.pi_hat * d.pi_hat;
    Ok(report_from(1, params.alpha_i, params.alpha_u, nsn_i, nsn_u, &r))
}

/// Interim correction coefficients shared with the multi-asset module.
///
/// Insider: `(α_I/2) * scale_i * (a_g * P^{1/2}(g - p_Q0) - a_z * P^{-1/2} z/α_I)^2`.
/// Uninformed: `(α_U/2) * coef_u * |P^{1/2}(h - p_Q0)|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct InterimCoeffs {
    pub scale_i: f64,
    pub a_g: f64,
    pub a_z: f64,
    pub coef_u: f64,
    pub p_pub: f64,
}

pub(crate) fn interim_coeffs(d: &DerivedParams, kind: EquilibriumKind, y: Option<f64>) -> InterimCoeffs {
    let (r, b, li, lu) = (d.r, d.beta, d.lambda_i, d.lambda_u);
    let one_r = 1.0 - r;
    match kind {
        EquilibriumKind::Pi => {
            let y = y.expect("PI needs the cubic root");
            let s = (1.0 + y).powi(2);
            InterimCoeffs {
                scale_i: r / (1.0 + 2.0 * y),
                a_g: one_r / r,
                a_z: y,
                coef_u: li * li * one_r * one_r * (b + s) / (lu * lu * r * (b + r * s) * (1.0 + 2.0 * y).powi(2)),
                p_pub: crate::equilibrium::p_pub_pi(d.kappa, d.p_i, y),
            }
        }
        EquilibriumKind::Pt => {
            let den = li + b + r * lu;
            InterimCoeffs {
                scale_i: r / (den * den),
                a_g: one_r * lu,
                a_z: li + b,
                coef_u: li * li * one_r * one_r * r * (1.0 + b) / (den * den * (r + b)),
                p_pub: p_pub_pt(d.kappa, d.p_i),
            }
        }
        _ => unreachable!("no-signal kinds are rejected by callers"),
    }
}

/// Interim certainty equivalents at `(G, Z_N) = (g, z)` in the scalar
/// model (`μ_X = 0`, `P_X = 1`); the uninformed trader sees `h(g, z)`.
pub fn ce_interim(params: &MarketParams, kind: EquilibriumKind, g: f64, z: f64) -> Result<(f64, f64)> {
    if !kind.has_signal() {
        return Err(Error::Unsupported { kind: kind.as_str(), what: "use no_signal_interim_limits".into() });
    }
    for (name, v) in [("g", g), ("z", z)] {
        if !v.is_finite() {
            return Err(Error::param(name, format!("must be finite, got {v}")));
        }
    }
    let d = params.derive()?;
    if params.p_i == 0.0 {
        return Err(Error::param("p_I", "interim CEs need p_I > 0"));
    }
    let (y, lam) = match kind {
        EquilibriumKind::Pi => {
            let y = root(&d)?;
            (Some(y), (1.0 + y) / (params.alpha_i * params.p_i))
        }
        _ => (None, 1.0 / (params.alpha_i * params.p_i)),
    };
    let c = interim_coeffs(&d, kind, y);
    let (ai, au, r, ph) = (params.alpha_i, params.alpha_u, d.r, d.pi_hat);
    let h = g + lam * z;

    let base_i = -0.5 * ai * r * (ph * ph - 2.0 * ph * ((1.0 - r) / r) * g);
    let base_u = -au / (2.0 * (1.0 + c.p_pub)) * (ph * ph - 2.0 * ph * c.p_pub * h);
    let qi = c.a_g * (g - d.p_q0) - c.a_z * z / ai;
    let qu = h - d.p_q0;
    Ok((base_i + 0.5 * ai * c.scale_i * qi * qi, base_u + 0.5 * au * c.coef_u * qu * qu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "p_I")]
    pub p_i: f64,
    #[serde(rename = "ce_I_pi")]
    pub ce_i_pi: f64,
    #[serde(rename = "ce_I_pt")]
    pub ce_i_pt: f64,
}

pub(crate) fn check_increasing(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Grid(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Grid(format!("{name} grid must be finite and positive")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

pub fn precision_sweep(base: &MarketParams, p_i_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_increasing("p_I", p_i_grid)?;
    base.with_p_i(1.0).validate()?;
    p_i_grid
        .par_iter()
        .map(|&p| {
            let r = ce_ex_ante(&base.with_p_i(p))?;
            Ok(SweepRow { p_i: p, ce_i_pi: r.ce_i_pi, ce_i_pt: r.ce_i_pt })
        })
        .collect()
}

/// Qualitative shape of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveShape {
    Increasing,
    Decreasing,
    InteriorMaximum,
    Other,
}

impl CurveShape {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Increasing => "increasing",
            Self::Decreasing => "decreasing",
            Self::InteriorMaximum => "interior_maximum",
            Self::Other => "other",
        }
    }
}

/// Strictly monotone, or rising then falling with the peak strictly
/// inside the sample.
pub fn curve_shape(values: &[f64]) -> CurveShape {
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if steps.iter().all(|s| *s > 0.0) {
        return CurveShape::Increasing;
    }
    if steps.iter().all(|s| *s < 0.0) {
        return CurveShape::Decreasing;
    }
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let rises = steps[..peak].iter().all(|s| *s > 0.0);
    let falls = steps[peak..].iter().all(|s| *s < 0.0);
    if peak > 0 && peak + 1 < values.len() && rises && falls {
        CurveShape::InteriorMaximum
    } else {
        CurveShape::Other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "PI_better")]
    PiBetter,
    #[serde(rename = "PT_better")]
    PtBetter,
    #[serde(rename = "tie_within_tol")]
    Tie,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PiBetter => "PI_better",
            Self::PtBetter => "PT_better",
            Self::Tie => "tie_within_tol",
        }
    }
}

pub const TIE_TOL: f64 = 1e-12;

/// Tie band `|diff| <= 1e-12 (1 + |CE|)`.
pub fn classify(diff: f64, ce_scale: f64) -> Sign {
    if diff.abs() <= TIE_TOL * (1.0 + ce_scale.abs()) {
        Sign::Tie
    } else if diff > 0.0 {
        Sign::PiBetter
    } else {
        Sign::PtBetter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    #[serde(rename = "alpha_U")]
    pub alpha_u: f64,
    #[serde(rename = "p_I")]
    pub p_i: f64,
    pub sign: Sign,
    pub uninformed_sign: Sign,
}

/// Compares the two sides of the insider and uninformed CE orderings
/// directly, i.e. `κ φ_ι` against `κ φ` and the analogous uninformed pair.
pub fn fast_signs(kappa: f64, lambda: f64, p: f64, y: f64) -> (f64, f64) {
    let (k, l) = (kappa, lambda);
    let den = pt_denominator(k, l, p);
    let lhs_i = (k * p * (1.0 + p) + y * y) / ((1.0 + p) * (1.0 + 2.0 * y));
    let rhs_i = ((1.0 - l).powi(2) * k * p + (1.0 + p) * (l + k * p).powi(2)) / (den * den);
    let lhs_u = (k * p + (1.0 + y).powi(2)) / ((1.0 - l).powi(2) * (1.0 + 2.0 * y).powi(2));
    let rhs_u = (1.0 + k * p) / (den * den);
    (lhs_i - rhs_i, lhs_u - rhs_u)
}

/// Sign of `CE_PI - CE_PT` at every `(α_U, p_I)` node, `α_U` outer.
pub fn classify_region(alpha_i: f64, p_n: f64, alpha_u_grid: &[f64], p_i_grid: &[f64]) -> Result<Vec<RegionPoint>> {
    check_increasing("alpha_U", alpha_u_grid)?;
    check_increasing("p_I", p_i_grid)?;
    MarketParams::new(alpha_i, 1.0, 1.0, p_n, 0.0).validate()?;
    let nodes: Vec<(f64, f64)> = alpha_u_grid.iter().flat_map(|&a| p_i_grid.iter().map(move |&p| (a, p))).collect();
    nodes
        .par_iter()
        .map(|&(au, p)| {
            let r = ce_ex_ante(&MarketParams::new(alpha_i, au, p, p_n, 0.0))?;
            Ok(RegionPoint {
                alpha_u: au,
                p_i: p,
                sign: classify(r.diff_i, r.ce_i_pi),
                uninformed_sign: classify(r.diff_u, r.ce_u_pi),
            })
        })
        .collect()
}

/// Small-`α_I` behaviour of `(CE_PI - CE_PT) / α_I^3` for the insider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCheck {
    pub numeric_limit: f64,
    pub closed_form: f64,
    pub rel_err: f64,
    /// Limit of the log expansion `(φ_ι - φ)/(α_I^2 (1 + φ))`, which the
    /// numerics converge to.
    pub log_expanded_limit: f64,
    pub samples: [f64; 3],
}

pub const ASYMPTOTIC_ALPHAS: [f64; 3] = [1e-2, 3.162_277_660_168_379_5e-3, 1e-3];

/// The published limit `½ (1+p)^2 (1+p-a² p p_N) / (a² (a² p p_N + 1 + p))`.
pub fn asymptotic_closed_form(alpha_u: f64, p_i: f64, p_n: f64) -> f64 {
    let (a2, p) = (alpha_u * alpha_u, p_i);
    0.5 * (1.0 + p).powi(2) * (1.0 + p - a2 * p * p_n) / (a2 * (a2 * p * p_n + 1.0 + p))
}

/// `½ (1+p) (1+p-a² p p_N) / (a² (a² p_N + 1))`: the first-order term of
/// `½ log((1+φ_ι)/(1+φ)) / α_I^2` using `φ(0) = (a² p p_N + 1 + p)/(a² p_N)`.
pub fn asymptotic_log_expanded(alpha_u: f64, p_i: f64, p_n: f64) -> f64 {
    let (a2, p) = (alpha_u * alpha_u, p_i);
    0.5 * (1.0 + p) * (1.0 + p - a2 * p * p_n) / (a2 * (a2 * p_n + 1.0))
}

pub fn scaled_diff(alpha_i: f64, alpha_u: f64, p_i: f64, p_n: f64) -> Result<f64> {
    let r = ce_ex_ante(&MarketParams::new(alpha_i, alpha_u, p_i, p_n, 0.0))?;
    Ok(r.diff_i / alpha_i.powi(3))
}

/// Two rounds of Richardson extrapolation in powers of `α_I` on the
/// geometric sequence [`ASYMPTOTIC_ALPHAS`].
pub fn richardson(samples: [f64; 3], ratio: f64) -> f64 {
    let first = |coarse: f64, fine: f64| (ratio * fine - coarse) / (ratio - 1.0);
    let r1 = first(samples[0], samples[1]);
    let r2 = first(samples[1], samples[2]);
    let q = ratio * ratio;
    (q * r2 - r1) / (q - 1.0)
}

pub fn asymptotic_check(alpha_u: f64, p_i: f64, p_n: f64) -> Result<AsymptoticCheck> {
    MarketParams::new(1.0, alpha_u, p_i, p_n, 0.0).validate()?;
    if !(p_i > 0.0) {
        return Err(Error::param("p_I", "must be > 0"));
    }
    let closed_form = asymptotic_closed_form(alpha_u, p_i, p_n);
    if !closed_form.is_finite() {
        return Err(Error::param("alpha_U", "closed form overflows"));
    }
    let mut samples = [0.0; 3];
    for (s, a) in samples.iter_mut().zip(ASYMPTOTIC_ALPHAS) {
        *s = scaled_diff(a, alpha_u, p_i, p_n)?;
    }
    let numeric_limit = richardson(samples, ASYMPTOTIC_ALPHAS[0] / ASYMPTOTIC_ALPHAS[1]);
    Ok(AsymptoticCheck {
        numeric_limit,
        closed_form,
        rel_err: ((numeric_limit - closed_form) / closed_form).abs(),
        log_expanded_limit: asymptotic_log_expanded(alpha_u, p_i, p_n),
        samples,
    })
}

/// Expected effects of the signal and of price-impact internalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandShift {
    /// `E[ψ_I - ψ_ns,I]` in PT.
    pub pt_shift: f64,
    /// `E[ψ_I,ι - ψ_ns,ι,I]` in PI.
    pub pi_shift: f64,
    /// `E[ψ_I,ι - ψ_I]`.
    pub pi_minus_pt: f64,
    /// `E[p - p_ns]` in PT.
    pub price_shift_pt: f64,
    /// `E[p_ι - p_ns,ι]` in PI.
    pub price_shift_pi: f64,
    /// `(p_ns,ι - p_ns)` per unit of `z/α_I`, i.e. `λ³/(1-λ²)`.
    pub ns_price_gap_coeff: f64,
}

pub fn expected_demand_shift(params: &MarketParams) -> Result<DemandShift> {
    let eq = solve_pi(params)?;
    let d = eq.derived;
    let (k, l, p, ph) = (d.kappa, d.lambda, d.p_i, d.pi_hat);
    let y = eq.y_hat.unwrap_or_default();
    let pu = p_pub_pt(k, p);
    let pt_den = 1.0 + l * p + (1.0 - l) * pu;
    Ok(DemandShift {
        pt_shift: (1.0 - l) * (p - pu) / pt_den * ph,
        pi_shift: p / (1.0 + 2.0 * y) * ph,
        pi_minus_pt: p * (1.0 / (1.0 + 2.0 * y) - (1.0 - l) / pt_denominator(k, l, p)) * ph,
        price_shift_pt: (l * p + (1.0 - l) * pu) / pt_den * ph,
        price_shift_pi: eq.price_slope * ph,
        ns_price_gap_coeff: l.powi(3) / (1.0 - l * l),
    })
}

/// Almost-sure interim limits as `p_I -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoSignalLimits {
    #[serde(rename = "ce_I_pt")]
    pub insider_pt: f64,
    #[serde(rename = "ce_I_pi")]
    pub insider_pi: f64,
    #[serde(rename = "ce_U_pt")]
    pub uninformed_pt: f64,
    #[serde(rename = "ce_U_pi")]
    pub uninformed_pi: f64,
}

pub fn no_signal_interim_limits(params: &MarketParams, z: f64) -> Result<NoSignalLimits> {
    let d = params.with_p_i(0.0).derive()?;
    if !z.is_finite() {
        return Err(Error::param("z", format!("must be finite, got {z}")));
    }
    let (ai, au, l) = (params.alpha_i, params.alpha_u, d.lambda);
    let nsn_i = -0.5 * ai * d.pi_hat * d.pi_hat;
    let nsn_u = -0.5 * au * d.pi_hat * d.pi_hat;
    let q = l * l * z * z;
    let one_l2 = 1.0 - l * l;
    Ok(NoSignalLimits {
        insider_pt: nsn_i + q / (2.0 * ai),
        insider_pi: nsn_i + q / (2.0 * one_l2 * ai),
        uninformed_pt: nsn_u + au * q / (2.0 * ai * ai),
        uninformed_pi: nsn_u + au * q / (2.0 * ai * ai * one_l2 * one_l2),
    })
}
