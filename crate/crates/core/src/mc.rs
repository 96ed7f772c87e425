//! Monte Carlo verification of the closed forms.
//!
//! Paths are generated in fixed-size shards; shard `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, so results do not depend on thread count.
//! Shard accumulators are merged in shard order.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::MarketParams;
use crate::multiasset::{ce_ex_ante_multi, ce_interim_multi, AssetModel, MatrixEquilibrium};
use crate::spd::Spd;
use crate::welfare::{ce_ex_ante, ce_interim};

pub const SHARD_LEN: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Pair each path with its negated draws.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, antithetic: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::param("n_paths", format!("must be >= 2, got {}", self.n_paths)));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::param("n_paths", "must be even with antithetic pairs"));
        }
        Ok(())
    }

    fn shards(&self) -> Vec<(u64, usize)> {
        let full = self.n_paths / SHARD_LEN;
        let mut v: Vec<(u64, usize)> = (0..full as u64).map(|k| (k, SHARD_LEN)).collect();
        let rest = self.n_paths % SHARD_LEN;
        if rest > 0 {
            v.push((full as u64, rest));
        }
        v
    }
}

/// `len * width` standard normals for one shard, path-major.
fn shard_normals(cfg: &SimConfig, shard: u64, len: usize, width: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(shard);
    let mut out = vec![0.0; len * width];
    if cfg.antithetic {
        for pair in out.chunks_mut(2 * width) {
            let (a, b) = pair.split_at_mut(width.min(pair.len()));
            for v in a.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for (dst, src) in b.iter_mut().zip(a.iter()) {
                *dst = -*src;
            }
        }
    } else {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    out
}

fn map_shards<T: Send>(cfg: &SimConfig, width: usize, f: impl Fn(&[f64], usize) -> T + Sync) -> Vec<T> {
    cfg.shards()
        .into_par_iter()
        .map(|(k, len)| f(&shard_normals(cfg, k, len, width), len))
        .collect()
}

/// Scalar draws of `(X, G, Z_N)`; `G` is NaN when `p_I = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub z: Vec<f64>,
}

impl Draws {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn scalar_path(params: &MarketParams, e: &[f64]) -> (f64, f64, f64) {
    let x = e[0];
    let g = if params.p_i > 0.0 { x + e[1] / params.p_i.sqrt() } else { f64::NAN };
    (x, g, e[2] / params.p_n.sqrt())
}

pub fn sample_market(cfg: &SimConfig, params: &MarketParams) -> Result<Draws> {
    cfg.validate()?;
    params.validate()?;
    let parts = map_shards(cfg, 3, |e, len| {
        let mut d = Draws { x: Vec::with_capacity(len), g: Vec::with_capacity(len), z: Vec::with_capacity(len) };
        for row in e.chunks(3) {
            let (x, g, z) = scalar_path(params, row);
            d.x.push(x);
            d.g.push(g);
            d.z.push(z);
        }
        d
    });
    let mut out = Draws { x: Vec::with_capacity(cfg.n_paths), g: Vec::with_capacity(cfg.n_paths), z: Vec::with_capacity(cfg.n_paths) };
    for p in parts {
        out.x.extend(p.x);
        out.g.extend(p.g);
        out.z.extend(p.z);
    }
    Ok(out)
}

/// Factors turning standard normals into `(X, Z_I, Z_N)`.
#[derive(Debug, Clone)]
struct MultiSampler {
    mu: DVector<f64>,
    x_factor: DMatrix<f64>,
    i_factor: Option<DMatrix<f64>>,
    n_factor: DMatrix<f64>,
}

impl MultiSampler {
    fn new(mu: &DVector<f64>, prec_x: &DMatrix<f64>, prec_i: Option<&DMatrix<f64>>, prec_n: &DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            mu: mu.clone(),
            x_factor: Spd::new("prec_X", prec_x)?.inv_sqrt(),
            i_factor: prec_i.map(|p| Spd::new("P_I", p).map(|s| s.inv_sqrt())).transpose()?,
            n_factor: Spd::new("P_N", prec_n)?.inv_sqrt(),
        })
    }

    fn path(&self, e: &[f64]) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let d = self.mu.len();
        let x = &self.mu + &self.x_factor * DVector::from_column_slice(&e[..d]);
        let g = match &self.i_factor {
            Some(f) => &x + f * DVector::from_column_slice(&e[d..2 * d]),
            None => DVector::from_element(d, f64::NAN),
        };
        let z = &self.n_factor * DVector::from_column_slice(&e[2 * d..3 * d]);
        (x, g, z)
    }
}

/// Multi-asset draws stored path-major with stride `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDraws {
    pub d: usize,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub z: Vec<f64>,
}

impl MultiDraws {
    pub fn len(&self) -> usize {
        self.x.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn path(&self, i: usize) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let r = i * self.d..(i + 1) * self.d;
        (
            DVector::from_column_slice(&self.x[r.clone()]),
            DVector::from_column_slice(&self.g[r.clone()]),
            DVector::from_column_slice(&self.z[r]),
        )
    }
}

/// Draws with arbitrary SPD precisions; `prec_i = None` means no signal.
pub fn sample_market_general(
    cfg: &SimConfig,
    mu: &DVector<f64>,
    prec_x: &DMatrix<f64>,
    prec_i: Option<&DMatrix<f64>>,
    prec_n: &DMatrix<f64>,
) -> Result<MultiDraws> {
    cfg.validate()?;
    let sampler = MultiSampler::new(mu, prec_x, prec_i, prec_n)?;
    let d = mu.len();
    let parts = map_shards(cfg, 3 * d, |e, len| {
        let (mut xs, mut gs, mut zs) = (Vec::<f64>::with_capacity(len * d), Vec::<f64>::with_capacity(len * d), Vec::<f64>::with_capacity(len * d));
        for row in e.chunks(3 * d) {
            let (x, g, z) = sampler.path(row);
            xs.extend(x.iter());
            gs.extend(g.iter());
            zs.extend(z.iter());
        }
        (xs, gs, zs)
    });
    let mut out = MultiDraws { d, x: Vec::new(), g: Vec::new(), z: Vec::new() };
    for (x, g, z) in parts {
        out.x.extend(x);
        out.g.extend(g);
        out.z.extend(z);
    }
    Ok(out)
}

pub fn sample_market_multi(cfg: &SimConfig, model: &AssetModel) -> Result<MultiDraws> {
    let prec_i = model.prec_i();
    let signal = if model.p_i > 0.0 { Some(&prec_i) } else { None };
    sample_market_general(cfg, &model.mu_x, &model.prec_x, signal, &model.prec_n())
}

/// Max `|α_I ψ_I + α_U ψ_U + Z_N - Π|` over the draws.
pub fn verify_clearing(eq: &Equilibrium, draws: &Draws) -> f64 {
    draws
        .g
        .par_iter()
        .zip(draws.z.par_iter())
        .map(|(&g, &z)| eq.clearing_residual(g, z).abs())
        .reduce(|| 0.0, f64::max)
}

pub fn verify_clearing_multi(eq: &MatrixEquilibrium, draws: &MultiDraws) -> Result<f64> {
    if draws.d != eq.dim() {
        return Err(Error::Dimension(format!("draws have d = {}, equilibrium d = {}", draws.d, eq.dim())));
    }
    (0..draws.len())
        .into_par_iter()
        .map(|i| {
            let (_, g, z) = draws.path(i);
            Ok(eq.clearing_residual(&g, &z)?.amax())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Largest amount by which a perturbed demand beats the closed-form one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub insider: f64,
    pub uninformed: f64,
}

/// `log E[exp(-W)]` for `W = Π̂p + ψ(X - p)` with `X ~ N(m, v)`.
#[inline]
fn objective(pi_hat: f64, psi: f64, p: f64, m: f64, v: f64) -> f64 {
    -pi_hat * p - psi * (m - p) + 0.5 * psi * psi * v
}

fn check_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !e.is_finite() || *e == 0.0) {
        return Err(Error::Grid("epsilon grid must be finite and nonzero".into()));
    }
    let mut s: Vec<f64> = eps.to_vec();
    s.sort_by(f64::total_cmp);
    let mut n: Vec<f64> = eps.iter().map(|e| -e).collect();
    n.sort_by(f64::total_cmp);
    if s != n {
        return Err(Error::Grid("epsilon grid must be symmetric around 0".into()));
    }
    Ok(())
}

/// First-order check of both traders' conditional problems at the draws.
///
/// The insider conditions on `G` (`X | G ~ N((1-R) g, R)`); with price
/// impact her price moves with her trade along `V_p + M_p(ψ - Π̂ + z/α_I)`.
/// The uninformed conditions on `H` (`X | H ~ N(p_pub h/(1+p_pub), 1/(1+p_pub))`).
pub fn verify_optimality(eq: &Equilibrium, draws: &Draws, eps: &[f64]) -> Result<OptimalityReport> {
    if !eq.kind.has_signal() {
        return Err(Error::Unsupported { kind: eq.kind.as_str(), what: "optimality needs a signal".into() });
    }
    check_grid(eps)?;
    let d = eq.derived;
    let (r, ph, ai) = (d.r, d.pi_hat, eq.params.alpha_i);
    let v_u = 1.0 / (1.0 + eq.p_pub);
    let impact = eq.kind == EquilibriumKind::Pi;
    let worst = |acc: (f64, f64), next: (f64, f64)| (acc.0.max(next.0), acc.1.max(next.1));
    let out = draws
        .g
        .par_iter()
        .zip(draws.z.par_iter())
        .map(|(&g, &z)| {
            let h = eq.state(g, z);
            let p = eq.price_unchecked(h);
            let psi_i = eq.insider_unchecked(g, z);
            let m_i = (1.0 - r) * g;
            let price_i = |psi: f64| if impact { eq.impact_v + eq.impact_m * (psi - ph + z / ai) } else { p };
            let base_i = objective(ph, psi_i, price_i(psi_i), m_i, r);

            let psi_u = eq.uninformed_unchecked(h);
            let m_u = eq.p_pub * h * v_u;
            let base_u = objective(ph, psi_u, p, m_u, v_u);

            eps.iter().fold((0.0f64, 0.0f64), |acc, &e| {
                let alt_i = objective(ph, psi_i + e, price_i(psi_i + e), m_i, r);
                let alt_u = objective(ph, psi_u + e, p, m_u, v_u);
                worst(acc, ((base_i - alt_i).max(0.0), (base_u - alt_u).max(0.0)))
            })
        })
        .reduce(|| (0.0, 0.0), worst);
    Ok(OptimalityReport { insider: out.0, uninformed: out.1 })
}

fn objective_multi(pi_hat: &DVector<f64>, psi: &DVector<f64>, p: &DVector<f64>, m: &DVector<f64>, v: &DMatrix<f64>) -> f64 {
    -pi_hat.dot(p) - psi.dot(&(m - p)) + 0.5 * psi.dot(&(v * psi))
}

/// Multi-asset version of [`verify_optimality`], perturbing along each axis.
pub fn verify_optimality_multi(eq: &MatrixEquilibrium, model: &AssetModel, draws: &MultiDraws, eps: &[f64]) -> Result<OptimalityReport> {
    if !eq.kind.has_signal() {
        return Err(Error::Unsupported { kind: eq.kind.as_str(), what: "optimality needs a signal".into() });
    }
    check_grid(eps)?;
    let n = eq.dim();
    let px = &model.prec_x;
    let pxg = Spd::new("P_X|G", &(px + &eq.prec_i))?;
    let v_i = pxg.inverse();
    let pxh = Spd::new("P_X|H", &(px + &eq.p_pub))?;
    let v_u = pxh.inverse();
    let mu_term = px * &model.mu_x;
    let impact = eq.kind == EquilibriumKind::Pi;
    let worst = |acc: (f64, f64), next: (f64, f64)| (acc.0.max(next.0), acc.1.max(next.1));
    let out = (0..draws.len())
        .into_par_iter()
        .map(|k| {
            let (_, g, z) = draws.path(k);
            let h = eq.state(&g, &z);
            let p = eq.price(&h);
            let psi_i = eq.insider_at(&g, &p);
            let m_i = &v_i * (&mu_term + &eq.prec_i * &g);
            let price_i = |psi: &DVector<f64>| {
                if impact {
                    &eq.p_q0 + &eq.m_p * (psi - &eq.pi_hat + &z / eq.alpha_i)
                } else {
                    p.clone()
                }
            };
            let base_i = objective_multi(&eq.pi_hat, &psi_i, &price_i(&psi_i), &m_i, &v_i);
            let psi_u = &eq.uninformed_intercept + &eq.uninformed_h * &h + &eq.uninformed_p * &p;
            let m_u = &v_u * (&mu_term + &eq.p_pub * &h);
            let base_u = objective_multi(&eq.pi_hat, &psi_u, &p, &m_u, &v_u);
            let mut acc = (0.0f64, 0.0f64);
            for j in 0..n {
                for &e in eps {
                    let mut di = psi_i.clone();
                    di[j] += e;
                    let mut du = psi_u.clone();
                    du[j] += e;
                    let alt_i = objective_multi(&eq.pi_hat, &di, &price_i(&di), &m_i, &v_i);
                    let alt_u = objective_multi(&eq.pi_hat, &du, &p, &m_u, &v_u);
                    acc = worst(acc, ((base_i - alt_i).max(0.0), (base_u - alt_u).max(0.0)));
                }
            }
            acc
        })
        .reduce(|| (0.0, 0.0), worst);
    Ok(OptimalityReport { insider: out.0, uninformed: out.1 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub check: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub target: f64,
    pub z_score: f64,
}

impl McReport {
    pub fn new(check: impl Into<String>, estimate: f64, std_error: f64, n_paths: usize, target: f64) -> Self {
        Self { check: check.into(), estimate, std_error, n_paths, target, z_score: (estimate - target) / std_error }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

/// Streaming `log mean exp(u)` with the running maximum factored out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanExp {
    n: usize,
    shift: f64,
    s1: f64,
    s2: f64,
}

impl Default for LogMeanExp {
    fn default() -> Self {
        Self { n: 0, shift: f64::NEG_INFINITY, s1: 0.0, s2: 0.0 }
    }
}

impl LogMeanExp {
    pub fn push(&mut self, u: f64) {
        if u > self.shift {
            let f = (self.shift - u).exp();
            self.s1 *= f;
            self.s2 *= f * f;
            self.shift = u;
        }
        let w = (u - self.shift).exp();
        self.s1 += w;
        self.s2 += w * w;
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let shift = self.shift.max(other.shift);
        let (fa, fb) = ((self.shift - shift).exp(), (other.shift - shift).exp());
        self.s1 = self.s1 * fa + other.s1 * fb;
        self.s2 = self.s2 * fa * fa + other.s2 * fb * fb;
        self.shift = shift;
        self.n += other.n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn log_mean(&self) -> f64 {
        self.shift + (self.s1 / self.n as f64).ln()
    }

    /// Standard error of `log mean` by the delta method, i.e. the relative
    /// standard error of the mean of `exp(u)`.
    pub fn log_mean_se(&self) -> f64 {
        let n = self.n as f64;
        let m1 = self.s1 / n;
        let m2 = self.s2 / n;
        let var = ((m2 - m1 * m1) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt() / m1
    }

    /// `(-α log mean exp(u), se)`.
    pub fn certainty_equivalent(&self, alpha: f64) -> (f64, f64) {
        (-alpha * self.log_mean(), alpha * self.log_mean_se())
    }
}

/// Antithetic pairs enter as one sample, the log of their average.
fn accumulate(cfg: &SimConfig, width: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> LogMeanExp {
    let parts = map_shards(cfg, width, |e, _| {
        let mut acc = LogMeanExp::default();
        if cfg.antithetic {
            for pair in e.chunks(2 * width) {
                let (a, b) = (f(&pair[..width]), f(&pair[width..]));
                let m = a.max(b);
                acc.push(m + (0.5 * ((a - m).exp() + (b - m).exp())).ln());
            }
        } else {
            for row in e.chunks(width) {
                acc.push(f(row));
            }
        }
        acc
    });
    let mut total = LogMeanExp::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trader {
    Insider,
    Uninformed,
}

impl Trader {
    pub fn as_str(self) -> &'static str {
        match self {
            Trader::Insider => "I",
            Trader::Uninformed => "U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CeLevel {
    ExAnte,
    /// Conditional on `(G, Z_N) = (g, z)`; the uninformed trader conditions
    /// on the implied `h(g, z)`.
    Interim { g: f64, z: f64 },
}

fn require_signal(kind: EquilibriumKind) -> Result<()> {
    if kind.has_signal() {
        Ok(())
    } else {
        Err(Error::Unsupported { kind: kind.as_str(), what: "closed-form CE targets need a signal".into() })
    }
}

/// Certainty equivalent `-α log mean exp(-W)` for `W = Π̂p + ψ(X - p)`,
/// compared with the closed form.
pub fn estimate_ce(eq: &Equilibrium, cfg: &SimConfig, level: CeLevel, trader: Trader) -> Result<McReport> {
    cfg.validate()?;
    require_signal(eq.kind)?;
    let params = eq.params;
    let d = eq.derived;
    let (ph, r) = (d.pi_hat, d.r);
    let alpha = match trader {
        Trader::Insider => params.alpha_i,
        Trader::Uninformed => params.alpha_u,
    };
    let wealth = |psi: f64, p: f64, x: f64| ph * p + psi * (x - p);
    let (acc, target, name) = match level {
        CeLevel::ExAnte => {
            let acc = accumulate(cfg, 3, |e| {
                let (x, g, z) = scalar_path(&params, e);
                let h = eq.state(g, z);
                let p = eq.price_unchecked(h);
                let psi = match trader {
                    Trader::Insider => eq.insider_unchecked(g, z),
                    Trader::Uninformed => eq.uninformed_unchecked(h),
                };
                -wealth(psi, p, x)
            });
            let rep = ce_ex_ante(&params)?;
            let t = match (eq.kind, trader) {
                (EquilibriumKind::Pi, Trader::Insider) => rep.ce_i_pi,
                (EquilibriumKind::Pi, Trader::Uninformed) => rep.ce_u_pi,
                (_, Trader::Insider) => rep.ce_i_pt,
                (_, Trader::Uninformed) => rep.ce_u_pt,
            };
            (acc, t, "ex_ante")
        }
        CeLevel::Interim { g, z } => {
            let h = eq.public_signal(g, z)?;
            let p = eq.price_unchecked(h);
            let (psi, m, v) = match trader {
                Trader::Insider => (eq.insider_unchecked(g, z), (1.0 - r) * g, r),
                Trader::Uninformed => {
                    let v = 1.0 / (1.0 + eq.p_pub);
                    (eq.uninformed_unchecked(h), eq.p_pub * h * v, v)
                }
            };
            let sd = v.sqrt();
            let acc = accumulate(cfg, 1, |e| -wealth(psi, p, m + sd * e[0]));
            let (ci, cu) = ce_interim(&params, eq.kind, g, z)?;
            (acc, if trader == Trader::Insider { ci } else { cu }, "interim")
        }
    };
    let (est, se) = acc.certainty_equivalent(alpha);
    Ok(McReport::new(format!("ce_{name}_{}_{}", trader.as_str(), eq.kind), est, se, cfg.n_paths, target))
}

/// Aggregates closed-form interim CEs over simulated `(G, Z_N)`; by the
/// tower property this reproduces the ex-ante CE.
pub fn estimate_ce_tower(params: &MarketParams, kind: EquilibriumKind, cfg: &SimConfig, trader: Trader) -> Result<McReport> {
    cfg.validate()?;
    require_signal(kind)?;
    let rep = ce_ex_ante(params)?;
    // The interim CE is quadratic in (g, z); fit it once instead of
    // re-solving the equilibrium per path.
    let alpha = if trader == Trader::Insider { params.alpha_i } else { params.alpha_u };
    let quad = InterimQuadratic::fit(params, kind, trader)?;
    let acc = accumulate(cfg, 3, |e| {
        let (_, g, z) = scalar_path(params, e);
        -quad.eval(g, z) / alpha
    });
    let (est, se) = acc.certainty_equivalent(alpha);
    let target = match (kind, trader) {
        (EquilibriumKind::Pi, Trader::Insider) => rep.ce_i_pi,
        (EquilibriumKind::Pi, Trader::Uninformed) => rep.ce_u_pi,
        (_, Trader::Insider) => rep.ce_i_pt,
        (_, Trader::Uninformed) => rep.ce_u_pt,
    };
    Ok(McReport::new(format!("ce_tower_{}_{kind}", trader.as_str()), est, se, cfg.n_paths, target))
}

/// Exact quadratic `c0 + c1 g + c2 z + c3 g² + c4 g z + c5 z²` recovered
/// from six evaluations of the interim CE.
struct InterimQuadratic([f64; 6]);

impl InterimQuadratic {
    fn fit(params: &MarketParams, kind: EquilibriumKind, trader: Trader) -> Result<Self> {
        let f = |g: f64, z: f64| -> Result<f64> {
            let (ci, cu) = ce_interim(params, kind, g, z)?;
            Ok(if trader == Trader::Insider { ci } else { cu })
        };
        let c0 = f(0.0, 0.0)?;
        let (gp, gm) = (f(1.0, 0.0)?, f(-1.0, 0.0)?);
        let (zp, zm) = (f(0.0, 1.0)?, f(0.0, -1.0)?);
        let gz = f(1.0, 1.0)?;
        let c1 = 0.5 * (gp - gm);
        let c3 = 0.5 * (gp + gm) - c0;
        let c2 = 0.5 * (zp - zm);
        let c5 = 0.5 * (zp + zm) - c0;
        let c4 = gz - c0 - c1 - c2 - c3 - c5;
        Ok(Self([c0, c1, c2, c3, c4, c5]))
    }

    fn eval(&self, g: f64, z: f64) -> f64 {
        let [c0, c1, c2, c3, c4, c5] = self.0;
        c0 + c1 * g + c2 * z + c3 * g * g + c4 * g * z + c5 * z * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CeLevelMulti {
    ExAnte,
    Interim { g: DVector<f64>, z: DVector<f64> },
}

pub fn estimate_ce_multi(eq: &MatrixEquilibrium, model: &AssetModel, cfg: &SimConfig, level: &CeLevelMulti, trader: Trader) -> Result<McReport> {
    cfg.validate()?;
    require_signal(eq.kind)?;
    let alpha = if trader == Trader::Insider { model.alpha_i } else { model.alpha_u };
    let wealth = |psi: &DVector<f64>, p: &DVector<f64>, x: &DVector<f64>| eq.pi_hat.dot(p) + psi.dot(&(x - p));
    let pick = |ci: f64, cu: f64| if trader == Trader::Insider { ci } else { cu };
    let d = model.d;
    let (acc, target, name) = match level {
        CeLevelMulti::ExAnte => {
            let sampler = MultiSampler::new(&model.mu_x, &model.prec_x, Some(&eq.prec_i), &eq.prec_n)?;
            let acc = accumulate(cfg, 3 * d, |e| {
                let (x, g, z) = sampler.path(e);
                let h = eq.state(&g, &z);
                let p = eq.price(&h);
                let psi = match trader {
                    Trader::Insider => eq.insider_at(&g, &p),
                    Trader::Uninformed => &eq.uninformed_intercept + &eq.uninformed_h * &h + &eq.uninformed_p * &p,
                };
                -wealth(&psi, &p, &x)
            });
            let rep = ce_ex_ante_multi(model)?;
            let t = if eq.kind == EquilibriumKind::Pi { pick(rep.ce_i_pi, rep.ce_u_pi) } else { pick(rep.ce_i_pt, rep.ce_u_pt) };
            (acc, t, "ex_ante")
        }
        CeLevelMulti::Interim { g, z } => {
            let h = eq.public_signal(g, z)?;
            let p = eq.price(&h);
            let px = &model.prec_x;
            let (psi, post) = match trader {
                Trader::Insider => (eq.insider_at(g, &p), Spd::new("P_X|G", &(px + &eq.prec_i))?),
                Trader::Uninformed => (
                    &eq.uninformed_intercept + &eq.uninformed_h * &h + &eq.uninformed_p * &p,
                    Spd::new("P_X|H", &(px + &eq.p_pub))?,
                ),
            };
            let signal_term = if trader == Trader::Insider { &eq.prec_i * g } else { &eq.p_pub * &h };
            let cov = post.inverse();
            let mean = &cov * (px * &model.mu_x + signal_term);
            let factor = post.inv_sqrt();
            let acc = accumulate(cfg, d, |e| {
                let x = &mean + &factor * DVector::from_column_slice(e);
                -wealth(&psi, &p, &x)
            });
            let (ci, cu) = ce_interim_multi(model, eq.kind, g, z)?;
            (acc, pick(ci, cu), "interim")
        }
    };
    let (est, se) = acc.certainty_equivalent(alpha);
    Ok(McReport::new(format!("ce_{name}_{}_{}_d{d}", trader.as_str(), eq.kind), est, se, cfg.n_paths, target))
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        let v2 = v * v;
        self.n += 1;
        self.s1 += v;
        self.s2 += v2;
        self.s3 += v2 * v;
        self.s4 += v2 * v2;
    }

    /// Sample variance and the standard error of that variance.
    fn variance_with_se(&self) -> (f64, f64) {
        let n = self.n as f64;
        let m = self.s1 / n;
        let (e2, e3, e4) = (self.s2 / n, self.s3 / n, self.s4 / n);
        let c2 = e2 - m * m;
        let c4 = e4 - 4.0 * m * e3 + 6.0 * m * m * e2 - 3.0 * m.powi(4);
        let var = c2 * n / (n - 1.0);
        (var, ((c4 - c2 * c2) / n).max(0.0).sqrt())
    }
}

/// Precision of the public-signal noise `H - X = Z_I + Λ Z_N`.
pub fn estimate_public_precision(draws: &Draws, eq: &Equilibrium) -> Result<McReport> {
    let lam = eq.lambda_sig.ok_or_else(|| Error::Unsupported {
        kind: eq.kind.as_str(),
        what: "no public signal exists without a private signal".into(),
    })?;
    if draws.len() < 2 {
        return Err(Error::param("n_paths", "need at least 2 draws"));
    }
    let mut acc = Moments::default();
    for ((x, g), z) in draws.x.iter().zip(&draws.g).zip(&draws.z) {
        acc.push(g + lam * z - x);
    }
    let (var, se_var) = acc.variance_with_se();
    let est = 1.0 / var;
    Ok(McReport::new(format!("public_precision_{}", eq.kind), est, se_var / (var * var), draws.len(), eq.p_pub))
}

/// Multi-asset precision check through `E[N' P_pub N] = d` for the noise
/// `N = H - X`; a correctly specified `P_pub` whitens the noise exactly.
pub fn estimate_public_precision_multi(draws: &MultiDraws, eq: &MatrixEquilibrium) -> Result<McReport> {
    let lam = eq.lambda.as_ref().ok_or_else(|| Error::Unsupported {
        kind: eq.kind.as_str(),
        what: "no public signal exists without a private signal".into(),
    })?;
    let d = draws.d;
    if draws.len() < d + 1 {
        return Err(Error::param("n_paths", format!("need at least d + 1 = {} draws", d + 1)));
    }
    let mut acc = Moments::default();
    for i in 0..draws.len() {
        let (x, g, z) = draws.path(i);
        let noise = g + lam * z - x;
        acc.push(noise.dot(&(&eq.p_pub * &noise)));
    }
    let n = acc.n as f64;
    let mean = acc.s1 / n;
    let var = (acc.s2 / n - mean * mean) * n / (n - 1.0);
    Ok(McReport::new(format!("public_precision_quadratic_form_{}_d{d}", eq.kind), mean, (var / n).sqrt(), draws.len(), d as f64))
}
