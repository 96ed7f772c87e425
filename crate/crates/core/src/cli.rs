//! Command-line front end: `solve`, `sweep`, `region`, `mc`, `figure`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 solver
//! failure, 4 Monte Carlo verification failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::cubic::{Cubic, MAX_ITERATIONS};
use crate::equilibrium::{self, EquilibriumKind};
use crate::error::Error;
use crate::mc::{self, CeLevel, CeLevelMulti, McReport, SimConfig, Trader};
use crate::model::MarketParams;
use crate::multiasset::{self, AssetModel};
use crate::welfare::{self, curve_shape, CurveShape};

#[derive(Debug, Parser)]
#[command(name = "insider", version, about = "Strategic-insider market equilibria: solve, compare, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one or all equilibrium kinds and print them as JSON.
    Solve(SolveArgs),
    /// Ex-ante insider CEs over a p_I grid.
    Sweep(SweepArgs),
    /// Sign of the insider CE difference over an (alpha_U, p_I) grid.
    Region(RegionArgs),
    /// Monte Carlo verification suite, one JSON line per check.
    Mc(McArgs),
    /// Datasets behind the three figures.
    Figure(FigureArgs),
}

/// Model input: a JSON file or inline flags, never both. Environment
/// variables fill in unset inline flags and override config fields.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Market parameters (`alpha_I`, ...) or a multi-asset model (with `d`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "INSIDER_ALPHA_I", allow_negative_numbers = true)]
    pub alpha_i: Option<f64>,
    #[arg(long, env = "INSIDER_ALPHA_U", allow_negative_numbers = true)]
    pub alpha_u: Option<f64>,
    #[arg(long, env = "INSIDER_P_I", allow_negative_numbers = true)]
    pub p_i: Option<f64>,
    #[arg(long, env = "INSIDER_P_N", allow_negative_numbers = true)]
    pub p_n: Option<f64>,
    #[arg(long, env = "INSIDER_PI", allow_negative_numbers = true)]
    pub pi: Option<f64>,
}

const INLINE: [&str; 5] = ["alpha_i", "alpha_u", "p_i", "p_n", "pi"];

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Pi,
    Pt,
    NsPi,
    NsPt,
    All,
}

impl KindArg {
    fn kinds(self) -> Vec<EquilibriumKind> {
        match self {
            Self::Pi => vec![EquilibriumKind::Pi],
            Self::Pt => vec![EquilibriumKind::Pt],
            Self::NsPi => vec![EquilibriumKind::NsPi],
            Self::NsPt => vec![EquilibriumKind::NsPt],
            Self::All => EquilibriumKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub kind: KindArg,
    /// Iteration cap for the cubic solver.
    #[arg(long, default_value_t = MAX_ITERATIONS)]
    pub max_iter: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1e-2)]
    pub min: f64,
    #[arg(long, default_value_t = 1e2)]
    pub max: f64,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "log")]
    pub scale: Scale,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0.05)]
    pub au_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub au_max: f64,
    #[arg(long, default_value_t = 40)]
    pub au_count: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 40)]
    pub p_count: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub scale: Scale,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_paths: usize,
    #[arg(long, env = "INSIDER_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Insider signal used for the interim spot checks (every coordinate).
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub interim_g: f64,
    #[arg(long, default_value_t = -0.3, allow_negative_numbers = true)]
    pub interim_z: f64,
    /// Negative control: perturb the PI insider signal loading by 10%.
    #[arg(long)]
    pub corrupt: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub which: u8,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_validation() => 2,
            CliError::Model(_) => 3,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Verification(_) => 4,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Scalar or multi-asset input.
#[derive(Debug, Clone)]
pub enum Input {
    Scalar(MarketParams),
    Multi(AssetModel),
}

fn inline_from_cli(m: &ArgMatches) -> Vec<&'static str> {
    INLINE.into_iter().filter(|id| m.ids().any(|i| i == *id) && m.value_source(id) == Some(ValueSource::CommandLine)).collect()
}

impl ParamArgs {
    /// Resolves the input. `explicit` lists inline flags given on the
    /// command line (as opposed to the environment).
    pub fn resolve(&self, explicit: &[&'static str]) -> CliResult<Input> {
        let overrides = [self.alpha_i, self.alpha_u, self.p_i, self.p_n, self.pi];
        match &self.config {
            None => {
                let [ai, au, p, n, pi] = overrides;
                let params = MarketParams::new(ai.unwrap_or(1.0), au.unwrap_or(1.0), p.unwrap_or(1.0), n.unwrap_or(1.0), pi.unwrap_or(0.0));
                params.validate()?;
                Ok(Input::Scalar(params))
            }
            Some(path) => {
                if !explicit.is_empty() {
                    let flags: Vec<String> = explicit.iter().map(|f| format!("--{}", f.replace('_', "-"))).collect();
                    return Err(CliError::Usage(format!("--config cannot be combined with {}", flags.join(", "))));
                }
                let text = std::fs::read_to_string(path)?;
                let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: bad JSON: {e}", path.display())))?;
                let obj = value.as_object_mut().ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
                let keys = ["alpha_I", "alpha_U", "p_I", "p_N"];
                for (key, v) in keys.iter().zip(overrides) {
                    if let Some(v) = v {
                        obj.insert((*key).into(), json!(v));
                    }
                }
                if obj.contains_key("d") {
                    if self.pi.is_some() {
                        return Err(CliError::Usage("INSIDER_PI cannot override a vector supply".into()));
                    }
                    Ok(Input::Multi(AssetModel::from_json(&value.to_string())?))
                } else {
                    if let Some(pi) = self.pi {
                        obj.insert("Pi".into(), json!(pi));
                    }
                    let params: MarketParams =
                        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    params.validate()?;
                    Ok(Input::Scalar(params))
                }
            }
        }
    }
}

/// Parses `args` and runs; returns the exit code after printing errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let explicit = matches.subcommand().map(|(_, m)| inline_from_cli(m)).unwrap_or_default();
    match run(&cli, &explicit) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, explicit: &[&'static str]) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => {
            let doc = cmd_solve(&a.params.resolve(explicit)?, a.kind, a.max_iter)?;
            if a.output.format == Some(Format::Csv) {
                return Err(CliError::Usage("solve only supports --format json".into()));
            }
            emit(&a.output.out, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))
        }
        Command::Sweep(a) => {
            let params = scalar_only(a.params.resolve(explicit)?, "sweep")?;
            let grid = make_grid("p_I", a.min, a.max, a.count, a.scale)?;
            let rows = welfare::precision_sweep(&params, &grid)?;
            let text = match a.output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    csv(&["p_I", "ce_I_pi", "ce_I_pt"], rows.iter().map(|r| vec![num(r.p_i), num(r.ce_i_pi), num(r.ce_i_pt)]))
                }
                Format::Json => serde_json::to_string_pretty(&rows).expect("json") + "\n",
            };
            emit(&a.output.out, &text)
        }
        Command::Region(a) => {
            let params = scalar_only(a.params.resolve(explicit)?, "region")?;
            let au = make_grid("alpha_U", a.au_min, a.au_max, a.au_count, a.scale)?;
            let p = make_grid("p_I", a.p_min, a.p_max, a.p_count, a.scale)?;
            let pts = welfare::classify_region(params.alpha_i, params.p_n, &au, &p)?;
            let text = match a.output.format.unwrap_or(Format::Csv) {
                Format::Csv => csv(&["alpha_U", "p_I", "sign"], pts.iter().map(|r| vec![num(r.alpha_u), num(r.p_i), r.sign.as_str().into()])),
                Format::Json => serde_json::to_string_pretty(&pts).expect("json") + "\n",
            };
            emit(&a.output.out, &text)
        }
        Command::Mc(a) => {
            let input = a.params.resolve(explicit)?;
            let (reports, failed) = cmd_mc(&input, a)?;
            let mut text = String::new();
            for r in &reports {
                text.push_str(&r.to_json_line());
                text.push('\n');
            }
            emit(&a.out, &text)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(failed))
            }
        }
        Command::Figure(a) => {
            let fmt = a.output.format.unwrap_or(Format::Csv);
            let text = match a.which {
                1 => figure_1(fmt)?,
                2 => figure_2(fmt)?,
                _ => figure_3(fmt)?,
            };
            emit(&a.output.out, &text)
        }
    }
}

fn scalar_only(input: Input, cmd: &str) -> CliResult<MarketParams> {
    match input {
        Input::Scalar(p) => Ok(p),
        Input::Multi(_) => Err(CliError::Usage(format!("{cmd} needs scalar parameters, not a multi-asset model"))),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// `count >= 2` points from `min` to `max` inclusive.
pub fn make_grid(name: &str, min: f64, max: f64, count: usize, scale: Scale) -> CliResult<Vec<f64>> {
    if count < 2 {
        return Err(CliError::Model(Error::Grid(format!("{name} grid needs count >= 2, got {count}"))));
    }
    if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
        return Err(CliError::Model(Error::Grid(format!("{name} grid needs 0 < min < max, got [{min}, {max}]"))));
    }
    let last = (count - 1) as f64;
    let grid: Vec<f64> = match scale {
        Scale::Linear => (0..count).map(|i| min + (max - min) * i as f64 / last).collect(),
        Scale::Log => {
            let (a, b) = (min.ln(), max.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
        }
    };
    Ok(grid)
}

/// 17 significant digits, so every value round-trips.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push_str("\r\n");
    for r in rows {
        s.push_str(&r.join(","));
        s.push_str("\r\n");
    }
    s
}

fn check_cubic(params: &MarketParams, max_iter: usize) -> CliResult<()> {
    let d = params.derive()?;
    if params.p_i > 0.0 {
        Cubic::from_derived(&d).solve_with(max_iter)?;
    }
    Ok(())
}

pub fn cmd_solve(input: &Input, kind: KindArg, max_iter: usize) -> CliResult<Value> {
    let kinds = kind.kinds();
    match input {
        Input::Scalar(params) => {
            if params.p_i == 0.0 && matches!(kind, KindArg::Pi | KindArg::Pt) {
                let ns = if kind == KindArg::Pi { "ns-pi" } else { "ns-pt" };
                return Err(CliError::Usage(format!("invalid parameter `p_I`: p_I = 0 carries no signal; use --kind {ns}")));
            }
            if kinds.contains(&EquilibriumKind::Pi) && params.p_i > 0.0 {
                check_cubic(params, max_iter)?;
            }
            let eqs = if kind == KindArg::All && params.p_i == 0.0 {
                vec![EquilibriumKind::NsPi, EquilibriumKind::NsPt]
            } else {
                kinds
            };
            let blocks = eqs
                .iter()
                .map(|k| equilibrium::solve(params, *k).map(|e| serde_json::to_value(e).expect("json")))
                .collect::<Result<Vec<_>, _>>()?;
            let ce = if params.p_i > 0.0 { Some(welfare::ce_ex_ante(params)?) } else { None };
            Ok(json!({ "params": params, "equilibria": blocks, "ce": ce }))
        }
        Input::Multi(model) => {
            if kinds.contains(&EquilibriumKind::Pi) {
                check_cubic(&model.scalar_params(), max_iter)?;
            }
            let kinds: Vec<_> = kinds.into_iter().filter(|k| kind != KindArg::All || model.p_i > 0.0 || !k.has_signal()).collect();
            let blocks = kinds
                .iter()
                .map(|k| multiasset::solve_multi(model, *k).map(|e| e.to_json()))
                .collect::<Result<Vec<_>, _>>()?;
            let ce = if model.p_i > 0.0 { Some(multiasset::ce_ex_ante_multi(model)?) } else { None };
            Ok(json!({ "d": model.d, "equilibria": blocks, "ce": ce }))
        }
    }
}

const OPT_EPS: [f64; 4] = [-1e-2, -1e-4, 1e-4, 1e-2];
const CLEARING_TOL: f64 = 1e-10;
const OPTIMALITY_TOL: f64 = 1e-12;
const Z_LIMIT: f64 = 4.0;

/// Exact checks are reported with `std_error = tol / 4`, so they fail the
/// `|z| > 4` rule exactly when they exceed their tolerance.
fn exact(check: String, value: f64, tol: f64, n: usize) -> McReport {
    McReport::new(check, value, tol / Z_LIMIT, n, 0.0)
}

fn failing(r: &McReport) -> bool {
    !(r.z_score.abs() <= Z_LIMIT)
}

/// Returns the reports and the names of checks that failed after one reseed.
pub fn cmd_mc(input: &Input, a: &McArgs) -> CliResult<(Vec<McReport>, Vec<String>)> {
    let first = mc_suite(input, a, a.seed, None)?;
    let bad: Vec<String> = first.iter().filter(|r| failing(r)).map(|r| r.check.clone()).collect();
    if bad.is_empty() {
        return Ok((first, bad));
    }
    let retry = mc_suite(input, a, a.seed.wrapping_add(0x9E37_79B9_7F4A_7C15), Some(&bad))?;
    let mut out = first;
    for r in retry {
        if let Some(slot) = out.iter_mut().find(|x| x.check == r.check) {
            *slot = r;
        }
    }
    let failed = out.iter().filter(|r| failing(r)).map(|r| r.check.clone()).collect();
    Ok((out, failed))
}

fn mc_suite(input: &Input, a: &McArgs, seed: u64, only: Option<&[String]>) -> CliResult<Vec<McReport>> {
    let cfg = SimConfig::new(a.n_paths, seed);
    cfg.validate()?;
    let wanted = |name: &str| only.is_none_or(|names| names.iter().any(|n| n == name));
    let mut out = Vec::new();
    let mut push = |r: McReport| {
        if wanted(&r.check) {
            out.push(r);
        }
    };
    let n = cfg.n_paths;
    match input {
        Input::Scalar(params) => {
            let draws = mc::sample_market(&cfg, params)?;
            for kind in EquilibriumKind::ALL {
                if kind.has_signal() && params.p_i == 0.0 {
                    continue;
                }
                let mut eq = equilibrium::solve(params, kind)?;
                if a.corrupt && kind == EquilibriumKind::Pi {
                    eq.insider_coeffs[0] *= 1.1;
                }
                push(exact(format!("clearing_{kind}"), mc::verify_clearing(&eq, &draws), CLEARING_TOL, n));
                if !kind.has_signal() {
                    continue;
                }
                let opt = mc::verify_optimality(&eq, &draws, &OPT_EPS)?;
                push(exact(format!("optimality_I_{kind}"), opt.insider, OPTIMALITY_TOL, n));
                push(exact(format!("optimality_U_{kind}"), opt.uninformed, OPTIMALITY_TOL, n));
                for trader in [Trader::Insider, Trader::Uninformed] {
                    let level = CeLevel::Interim { g: a.interim_g, z: a.interim_z };
                    for lvl in [CeLevel::ExAnte, level] {
                        let name = format!("ce_{}_{}_{kind}", if lvl == CeLevel::ExAnte { "ex_ante" } else { "interim" }, trader.as_str());
                        if wanted(&name) {
                            push(mc::estimate_ce(&eq, &cfg, lvl, trader)?);
                        }
                    }
                }
                let name = format!("public_precision_{kind}");
                if wanted(&name) {
                    push(mc::estimate_public_precision(&draws, &eq)?);
                }
            }
        }
        Input::Multi(model) => {
            let d = model.d;
            let draws = mc::sample_market_multi(&cfg, model)?;
            let g = DVector::from_element(d, a.interim_g);
            let z = DVector::from_element(d, a.interim_z);
            for kind in EquilibriumKind::ALL {
                if kind.has_signal() && model.p_i == 0.0 {
                    continue;
                }
                let mut eq = multiasset::solve_multi(model, kind)?;
                if a.corrupt && kind == EquilibriumKind::Pi {
                    eq.insider_g *= 1.1;
                }
                push(exact(format!("clearing_{kind}_d{d}"), mc::verify_clearing_multi(&eq, &draws)?, CLEARING_TOL, n));
                if !kind.has_signal() {
                    continue;
                }
                let opt = mc::verify_optimality_multi(&eq, model, &draws, &OPT_EPS)?;
                push(exact(format!("optimality_I_{kind}_d{d}"), opt.insider, OPTIMALITY_TOL, n));
                push(exact(format!("optimality_U_{kind}_d{d}"), opt.uninformed, OPTIMALITY_TOL, n));
                for trader in [Trader::Insider, Trader::Uninformed] {
                    for (tag, lvl) in [("ex_ante", CeLevelMulti::ExAnte), ("interim", CeLevelMulti::Interim { g: g.clone(), z: z.clone() })] {
                        if wanted(&format!("ce_{tag}_{}_{kind}_d{d}", trader.as_str())) {
                            push(mc::estimate_ce_multi(&eq, model, &cfg, &lvl, trader)?);
                        }
                    }
                }
                if wanted(&format!("public_precision_quadratic_form_{kind}_d{d}")) {
                    push(mc::estimate_public_precision_multi(&draws, &eq)?);
                }
            }
        }
    }
    Ok(out)
}

/// Presets for the two PT curve shapes, found by scanning `α_U`, `p_N`
/// at `α_I = 0.3`, `Π = 0` over `p_I` in `[0.1, 10]`.
pub const FIGURE_1_PRESETS: [(&str, MarketParams); 2] = [
    ("decreasing", MarketParams { alpha_i: 0.3, alpha_u: 0.1, p_i: 1.0, p_n: 1.0, pi: 0.0 }),
    ("interior_maximum", MarketParams { alpha_i: 0.3, alpha_u: 2.0, p_i: 1.0, p_n: 4.0, pi: 0.0 }),
];

pub fn figure_p_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 * 0.1).collect()
}

pub fn figure_1_data() -> CliResult<Vec<(&'static str, MarketParams, Vec<welfare::SweepRow>, CurveShape)>> {
    let grid = figure_p_grid();
    FIGURE_1_PRESETS
        .iter()
        .map(|(label, params)| {
            let rows = welfare::precision_sweep(params, &grid)?;
            let shape = curve_shape(&rows.iter().map(|r| r.ce_i_pt).collect::<Vec<_>>());
            Ok((*label, *params, rows, shape))
        })
        .collect()
}

fn figure_1(fmt: Format) -> CliResult<String> {
    let data = figure_1_data()?;
    Ok(match fmt {
        Format::Csv => csv(
            &["preset", "shape", "alpha_I", "alpha_U", "p_N", "Pi", "p_I", "ce_I_pt"],
            data.iter().flat_map(|(label, p, rows, shape)| {
                rows.iter().map(move |r| {
                    vec![
                        label.to_string(),
                        shape.as_str().into(),
                        num(p.alpha_i),
                        num(p.alpha_u),
                        num(p.p_n),
                        num(p.pi),
                        num(r.p_i),
                        num(r.ce_i_pt),
                    ]
                })
            }),
        ),
        Format::Json => {
            let presets: Vec<Value> = data
                .iter()
                .map(|(label, p, rows, shape)| {
                    json!({
                        "preset": label,
                        "params": p,
                        "shape": shape.as_str(),
                        "selection": "grid scan over alpha_U and p_N at alpha_I = 0.3, Pi = 0",
                        "rows": rows.iter().map(|r| json!({"p_I": r.p_i, "ce_I_pt": r.ce_i_pt})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "figure": 1, "presets": presets })).expect("json") + "\n"
        }
    })
}

/// `(p_I, CE^I_PI, CE^I_PT)` at `α_I = α_U = 0.3`, `μ_X = 0.5`,
/// `P_X = 1`, `p_N = 1`, `Π = 0`.
pub fn figure_2_data() -> CliResult<Vec<(f64, f64, f64)>> {
    let base = AssetModel::new(
        DVector::from_element(1, 0.5),
        DMatrix::from_element(1, 1, 1.0),
        1.0,
        1.0,
        0.3,
        0.3,
        DVector::from_element(1, 0.0),
    )?;
    figure_p_grid()
        .into_iter()
        .map(|p| {
            let r = multiasset::ce_ex_ante_multi(&base.with_p_i(p)?)?;
            Ok((p, r.ce_i_pi, r.ce_i_pt))
        })
        .collect()
}

fn figure_2(fmt: Format) -> CliResult<String> {
    let rows = figure_2_data()?;
    Ok(match fmt {
        Format::Csv => csv(&["p_I", "ce_I_pi", "ce_I_pt"], rows.iter().map(|r| vec![num(r.0), num(r.1), num(r.2)])),
        Format::Json => {
            let pi: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let pt: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let doc = json!({
                "figure": 2,
                "params": {"alpha_I": 0.3, "alpha_U": 0.3, "mu_X": 0.5, "prec_X": 1.0, "p_N": 1.0, "Pi": 0.0},
                "pi_shape": curve_shape(&pi).as_str(),
                "pt_shape": curve_shape(&pt).as_str(),
                "rows": rows.iter().map(|r| json!({"p_I": r.0, "ce_I_pi": r.1, "ce_I_pt": r.2})).collect::<Vec<_>>(),
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
    })
}

pub const FIGURE_3_ALPHAS: [f64; 3] = [0.2, 0.1, 0.05];

/// 40 x 40 nodes on `(0, 2] x (0, 4]`.
pub fn figure_3_grids() -> (Vec<f64>, Vec<f64>) {
    ((1..=40).map(|i| i as f64 * 0.05).collect(), (1..=40).map(|i| i as f64 * 0.1).collect())
}

pub fn figure_3_data() -> CliResult<Vec<(f64, Vec<welfare::RegionPoint>)>> {
    let (au, p) = figure_3_grids();
    FIGURE_3_ALPHAS.iter().map(|&ai| Ok((ai, welfare::classify_region(ai, 1.0, &au, &p)?))).collect()
}

fn figure_3(fmt: Format) -> CliResult<String> {
    let data = figure_3_data()?;
    Ok(match fmt {
        Format::Csv => csv(
            &["alpha_I", "alpha_U", "p_I", "sign"],
            data.iter().flat_map(|(ai, pts)| pts.iter().map(move |r| vec![num(*ai), num(r.alpha_u), num(r.p_i), r.sign.as_str().into()])),
        ),
        Format::Json => {
            let mut s = String::new();
            let panels: Vec<Value> = data.iter().map(|(ai, pts)| json!({"alpha_I": ai, "p_N": 1.0, "points": pts})).collect();
            let _ = write!(s, "{}", serde_json::to_string_pretty(&json!({"figure": 3, "panels": panels})).expect("json"));
            s + "\n"
        }
    })
}
