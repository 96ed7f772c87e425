mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use strategic_insider::equilibrium::EquilibriumKind;
use strategic_insider::mc::{self, SimConfig};
use strategic_insider::multiasset::{ce_interim_multi, solve_multi, solve_pt_multi, AssetModel, MatrixEquilibrium};
use strategic_insider::Error;

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().unwrap()
}

/// `α (Π̂'p + ψ'(m - p) - ψ'Vψ/2)` with `X | info ~ N(m, V)`.
fn gaussian_ce(alpha: f64, pi_hat: &DVector<f64>, psi: &DVector<f64>, p: &DVector<f64>, m: &DVector<f64>, v: &DMatrix<f64>) -> f64 {
    alpha * (pi_hat.dot(p) + psi.dot(&(m - p)) - 0.5 * psi.dot(&(v * psi)))
}

fn uninformed(eq: &MatrixEquilibrium, h: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
    &eq.uninformed_intercept + &eq.uninformed_h * h + &eq.uninformed_p * p
}

#[test]
fn interim_ce_matches_gaussian_evaluation() {
    let mut rng = rng(21);
    for d in [1, 2, 3] {
        for _ in 0..5 {
            let model = random_model(&mut rng, d);
            let g = DVector::from_fn(d, |_, _| rng.random_range(-1.5..1.5));
            let z = DVector::from_fn(d, |_, _| rng.random_range(-1.5..1.5));
            for kind in [EquilibriumKind::Pi, EquilibriumKind::Pt] {
                let eq = solve_multi(&model, kind).unwrap();
                let h = eq.public_signal(&g, &z).unwrap();
                let p = eq.price(&h);
                let px = &model.prec_x;
                let vi = inv(&(px + &eq.prec_i));
                let mi = &vi * (px * &model.mu_x + &eq.prec_i * &g);
                let vu = inv(&(px + &eq.p_pub));
                let mu = &vu * (px * &model.mu_x + &eq.p_pub * &h);
                let ci = gaussian_ce(model.alpha_i, &eq.pi_hat, &eq.insider_at(&g, &p), &p, &mi, &vi);
                let cu = gaussian_ce(model.alpha_u, &eq.pi_hat, &uninformed(&eq, &h, &p), &p, &mu, &vu);
                let (a, b) = ce_interim_multi(&model, kind, &g, &z).unwrap();
                assert!(rel_close(a, ci, 1e-10), "d={d} {kind} insider {a} vs {ci}");
                assert!(rel_close(b, cu, 1e-10), "d={d} {kind} uninformed {b} vs {cu}");
            }
        }
    }
}

#[test]
fn general_precision_pt_clears_and_matches_direct_solve() {
    let mut rng = rng(22);
    let d = 3;
    let model = random_model(&mut rng, d);
    let (p_i, p_n) = (random_spd(&mut rng, d), random_spd(&mut rng, d));
    let eq = solve_pt_multi(&model, Some((&p_i, &p_n))).unwrap();
    let (ai, au) = (model.alpha_i, model.alpha_u);

    // Public precision from h = g + Λ z with Λ = P_I⁻¹/α_I.
    let lam = inv(&p_i) / ai;
    let p_u = inv(&(inv(&p_i) + &lam * inv(&p_n) * lam.transpose()));
    assert!((&eq.p_pub - &p_u).amax() < 1e-10);

    let px = &model.prec_x;
    for _ in 0..5 {
        let g = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let z = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let h = &g + &lam * &z;
        let lhs = (px + &p_i) * ai + (px + &p_u) * au;
        let rhs = (px * &model.mu_x + &p_i * &g) * ai + (px * &model.mu_x + &p_u * &h) * au + &z - &model.pi;
        let direct = inv(&lhs) * rhs;
        let p = eq.price(&eq.state(&g, &z));
        assert!((&p - &direct).amax() < 1e-10, "{p} vs {direct}");
        assert!(eq.clearing_residual(&g, &z).unwrap().amax() < 1e-10);
    }

    let cfg = SimConfig::new(20_000, 22);
    let draws = mc::sample_market_general(&cfg, &model.mu_x, px, Some(&p_i), &p_n).unwrap();
    assert!(mc::verify_clearing_multi(&eq, &draws).unwrap() < 1e-10);
}

#[test]
fn perceived_price_at_own_trade_is_the_price() {
    let mut rng = rng(23);
    let model = random_model(&mut rng, 2);
    let eq = solve_multi(&model, EquilibriumKind::Pi).unwrap();
    let g = DVector::from_vec(vec![0.3, -0.4]);
    let z = DVector::from_vec(vec![-0.2, 0.5]);
    let psi = eq.insider_demand(&g, &z).unwrap();
    let p = eq.price(&eq.state(&g, &z));
    assert!((eq.perceived_price(&psi, &z).unwrap() - p).amax() < 1e-12);
}

#[test]
fn rejects_bad_models() {
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    let err = AssetModel::new(DVector::zeros(2), bad, 1.0, 1.0, 1.0, 1.0, DVector::zeros(2)).unwrap_err();
    assert!(matches!(err, Error::NotSpd { name: "prec_X", .. }));
    let err = AssetModel::new(DVector::zeros(2), DMatrix::identity(3, 3), 1.0, 1.0, 1.0, 1.0, DVector::zeros(2)).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
    let err = AssetModel::new(DVector::zeros(1), DMatrix::identity(1, 1), 1.0, 1.0, -1.0, 1.0, DVector::zeros(1)).unwrap_err();
    assert!(matches!(err, Error::InvalidParam { field: "alpha_I", .. }));
    assert!(AssetModel::from_json(r#"{"d": 2, "mu_X": [0], "prec_X": [[1,0],[0,1]], "p_I": 1, "p_N": 1, "alpha_I": 1, "alpha_U": 1, "Pi": [0, 0]}"#).is_err());
}

#[test]
fn model_from_json() {
    let text = r#"{"d": 2, "mu_X": [0.5, 0.0], "prec_X": [[2.0, 0.3], [0.3, 1.0]], "p_I": 1.5, "p_N": 0.8, "alpha_I": 0.4, "alpha_U": 1.1, "Pi": [0.2, -0.1]}"#;
    let model = AssetModel::from_json(text).unwrap();
    assert_eq!(model.d, 2);
    for kind in EquilibriumKind::ALL {
        let eq = solve_multi(&model, kind).unwrap();
        let v = eq.to_json();
        assert_eq!(v["d"], 2);
        assert_eq!(v["price_slope"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn no_signal_kinds_have_no_public_signal() {
    let mut rng = rng(24);
    let model = random_model(&mut rng, 2);
    let eq = solve_multi(&model, EquilibriumKind::NsPi).unwrap();
    assert!(eq.public_signal(&DVector::zeros(2), &DVector::zeros(2)).is_err());
    assert!(ce_interim_multi(&model, EquilibriumKind::NsPt, &DVector::zeros(2), &DVector::zeros(2)).is_err());
}
