mod common;

use common::*;
use strategic_insider::equilibrium::{self, EquilibriumKind};
use strategic_insider::mc::{self, CeLevel, SimConfig, Trader};
use strategic_insider::multiasset::solve_multi;
use strategic_insider::{Error, MarketParams};

fn unit() -> MarketParams {
    MarketParams::new(1.0, 1.0, 1.0, 1.0, 0.0)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let params = MarketParams::new(0.7, 1.2, 1.5, 0.8, 0.3);
    let eq = equilibrium::solve_pi(&params).unwrap();
    let cfg = SimConfig::new(200_000, 7);
    let run = || {
        let r = mc::estimate_ce(&eq, &cfg, CeLevel::ExAnte, Trader::Insider).unwrap();
        let draws = mc::sample_market(&cfg, &params).unwrap();
        (r.estimate.to_bits(), r.std_error.to_bits(), draws)
    };
    let (a, b) = (in_pool(1, run), in_pool(4, run));
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
}

#[test]
fn draws_have_model_moments() {
    let params = MarketParams::new(1.0, 1.0, 4.0, 0.25, 0.0);
    let draws = mc::sample_market(&SimConfig::new(400_000, 3), &params).unwrap();
    let n = draws.len() as f64;
    let var = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / n;
    assert!((var(&draws.x) - 1.0).abs() < 0.01);
    assert!((var(&draws.g) - 1.25).abs() < 0.015);
    assert!((var(&draws.z) - 4.0).abs() < 0.05);
    let cov: f64 = draws.x.iter().zip(&draws.g).map(|(x, g)| x * g).sum::<f64>() / n;
    assert!((cov - 1.0).abs() < 0.01);
}

#[test]
fn tower_estimate_matches_ex_ante() {
    let params = MarketParams::new(0.8, 1.1, 1.3, 0.9, 0.4);
    let cfg = SimConfig::new(500_000, 11);
    for kind in [EquilibriumKind::Pi, EquilibriumKind::Pt] {
        for t in [Trader::Insider, Trader::Uninformed] {
            let r = mc::estimate_ce_tower(&params, kind, &cfg, t).unwrap();
            assert!(r.z_score.abs() < 4.0, "{r:?}");
        }
    }
}

#[test]
fn public_precision_estimates() {
    let params = MarketParams::new(0.9, 1.0, 2.0, 1.5, 0.0);
    let cfg = SimConfig::new(500_000, 13);
    let draws = mc::sample_market(&cfg, &params).unwrap();
    for kind in [EquilibriumKind::Pi, EquilibriumKind::Pt] {
        let r = mc::estimate_public_precision(&draws, &equilibrium::solve(&params, kind).unwrap()).unwrap();
        assert!(r.z_score.abs() < 4.0, "{r:?}");
    }
    let mut rng = rng(13);
    let model = random_model(&mut rng, 3);
    let draws = mc::sample_market_multi(&SimConfig::new(200_000, 13), &model).unwrap();
    for kind in [EquilibriumKind::Pi, EquilibriumKind::Pt] {
        let r = mc::estimate_public_precision_multi(&draws, &solve_multi(&model, kind).unwrap()).unwrap();
        assert!(r.z_score.abs() < 4.0, "{r:?}");
        assert_eq!(r.target, 3.0);
    }
    let small = mc::sample_market_multi(&SimConfig::new(3, 1), &model).unwrap();
    assert!(mc::estimate_public_precision_multi(&small, &solve_multi(&model, EquilibriumKind::Pi).unwrap()).is_err());
}

#[test]
fn corrupted_coefficients_are_caught() {
    let params = unit();
    let mut eq = equilibrium::solve_pi(&params).unwrap();
    eq.insider_coeffs[0] *= 1.1;
    let cfg = SimConfig::new(100_000, 17);
    let draws = mc::sample_market(&cfg, &params).unwrap();
    assert!(mc::verify_clearing(&eq, &draws) > 1e-3);
    let opt = mc::verify_optimality(&eq, &draws, &[-1e-3, 1e-3]).unwrap();
    assert!(opt.insider > 1e-9);
}

#[test]
fn small_samples_report_wide_bands() {
    let eq = equilibrium::solve_pt(&unit()).unwrap();
    let small = mc::estimate_ce(&eq, &SimConfig::new(10, 42), CeLevel::ExAnte, Trader::Insider).unwrap();
    let large = mc::estimate_ce(&eq, &SimConfig::new(100_000, 42), CeLevel::ExAnte, Trader::Insider).unwrap();
    assert!(small.std_error > 10.0 * large.std_error);
    assert!(small.estimate.is_finite());
    assert!(mc::estimate_ce(&eq, &SimConfig::new(1, 42), CeLevel::ExAnte, Trader::Insider).is_err());
}

#[test]
fn antithetic_pairs_stay_unbiased() {
    let params = MarketParams::new(1.0, 0.6, 0.8, 1.2, 0.5);
    let eq = equilibrium::solve_pi(&params).unwrap();
    let cfg = SimConfig { n_paths: 400_000, seed: 5, antithetic: true };
    for t in [Trader::Insider, Trader::Uninformed] {
        let r = mc::estimate_ce(&eq, &cfg, CeLevel::Interim { g: 0.4, z: 0.2 }, t).unwrap();
        assert!(r.z_score.abs() < 4.0, "{r:?}");
    }
}

#[test]
fn no_signal_draws_and_unsupported_checks() {
    let params = MarketParams::new(1.0, 2.0, 0.0, 1.0, 0.3);
    let cfg = SimConfig::new(10_000, 19);
    let draws = mc::sample_market(&cfg, &params).unwrap();
    assert!(draws.g.iter().all(|g| g.is_nan()));
    for kind in [EquilibriumKind::NsPi, EquilibriumKind::NsPt] {
        let eq = equilibrium::solve(&params, kind).unwrap();
        assert!(mc::verify_clearing(&eq, &draws) < 1e-12);
        assert!(matches!(mc::verify_optimality(&eq, &draws, &[0.1, -0.1]), Err(Error::Unsupported { .. })));
        assert!(mc::estimate_ce(&eq, &cfg, CeLevel::ExAnte, Trader::Insider).is_err());
    }
    let eq = equilibrium::solve_pi(&unit()).unwrap();
    let d = mc::sample_market(&cfg, &unit()).unwrap();
    assert!(matches!(mc::verify_optimality(&eq, &d, &[0.1]), Err(Error::Grid(_))));
}

#[test]
fn report_serializes_as_one_json_line() {
    let eq = equilibrium::solve_pi(&unit()).unwrap();
    let r = mc::estimate_ce(&eq, &SimConfig::new(1000, 1), CeLevel::ExAnte, Trader::Uninformed).unwrap();
    let line = r.to_json_line();
    assert!(!line.contains('\n'));
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    for key in ["check", "estimate", "std_error", "n_paths", "target", "z_score"] {
        assert!(v.get(key).is_some());
    }
}
