#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strategic_insider::multiasset::AssetModel;
use strategic_insider::MarketParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..hi.log10()))
}

/// Broad random parameters for property checks.
pub fn wide_params(rng: &mut impl Rng) -> MarketParams {
    MarketParams::new(
        log_uniform(rng, 0.03, 30.0),
        log_uniform(rng, 0.03, 30.0),
        log_uniform(rng, 0.01, 100.0),
        log_uniform(rng, 0.01, 100.0),
        rng.random_range(-2.0..2.0),
    )
}

/// Moderate parameters where simulated CEs have well-behaved tails.
pub fn moderate_params(rng: &mut impl Rng) -> MarketParams {
    MarketParams::new(
        rng.random_range(0.3..1.5),
        rng.random_range(0.3..1.5),
        rng.random_range(0.2..2.0),
        rng.random_range(0.5..2.0),
        rng.random_range(-0.5..0.5),
    )
}

pub fn random_spd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.5
}

pub fn random_model(rng: &mut impl Rng, d: usize) -> AssetModel {
    let p = moderate_params(rng);
    AssetModel::new(
        DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5)),
        random_spd(rng, d),
        p.p_i,
        p.p_n,
        p.alpha_i,
        p.alpha_u,
        DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5)),
    )
    .unwrap()
}

/// Random orthogonal matrix from a QR factorization.
pub fn random_rotation(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
