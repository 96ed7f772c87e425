mod common;

use proptest::prelude::*;
use strategic_insider::cubic::{cubic_residual, Cubic};
use strategic_insider::{Error, MarketParams};

/// Root of the cubic in `(β, λ_I, λ_U, R)` form,
/// `(1+y)^2 (1 - λ_U R y / λ_I) + β (λ_U (1+y) / λ_I + 1) = 0`,
/// by plain bisection.
fn oracle_root(kappa: f64, lambda: f64, p: f64) -> f64 {
    let (beta, li, lu, r) = (kappa * p, lambda, 1.0 - lambda, 1.0 / (1.0 + p));
    let g = |y: f64| (1.0 + y).powi(2) * (1.0 - lu * r * y / li) + beta * (lu * (1.0 + y) / li + 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn unit_root_matches_bisection() {
    let y = Cubic::new(1.0, 0.5, 1.0).solve().unwrap().y_hat;
    assert!((y - oracle_root(1.0, 0.5, 1.0)).abs() < 1e-13);
    assert!((y - 2.689_095_323_637_659_4).abs() < 1e-13);
}

#[test]
fn root_respects_lower_bound() {
    let c = Cubic::new(0.3, 0.7, 2.0);
    let y = c.solve().unwrap().y_hat;
    assert!(y > c.lower_bound());
}

#[test]
fn iteration_cap_reports_no_convergence() {
    match Cubic::new(1.0, 0.5, 1.0).solve_with(1) {
        Err(Error::NoConvergence { iterations: 1, .. }) => {}
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn residual_from_params() {
    let d = MarketParams::new(1.0, 1.0, 1.0, 1.0, 0.0).derive().unwrap();
    let y = strategic_insider::solve_cubic(&d).unwrap().y_hat;
    assert!(cubic_residual(y, &d).unwrap().abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn agrees_with_bisection_oracle(lk in -3.0f64..3.0, lambda in 0.01f64..0.99, lp in -3.0f64..3.0) {
        let (k, p) = (10f64.powf(lk), 10f64.powf(lp));
        let c = Cubic::new(k, lambda, p);
        let sol = c.solve().unwrap();
        let oracle = oracle_root(k, lambda, p);
        prop_assert!((sol.y_hat - oracle).abs() <= 1e-9 * (1.0 + oracle), "{} vs {}", sol.y_hat, oracle);
        prop_assert!(c.value(sol.y_hat).abs() <= c.tolerance(sol.y_hat));
    }
}
