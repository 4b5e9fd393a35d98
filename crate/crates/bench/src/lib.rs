//! Shared inputs for the criterion benches under `benches/`.

use levy_chaos::models::{moments, sigma_adjust};
use levy_chaos::paths::{random_fixture, simulate_grid};
use levy_chaos::{GridPath, JumpPath, LevyModel, MomentVector, Rational};

pub fn gamma() -> LevyModel {
    LevyModel::gamma(10.0, 20.0)
}

pub fn gamma_moments_exact(order: usize) -> MomentVector<Rational> {
    sigma_adjust(&moments::<Rational>(&gamma(), order).expect("gamma moments")).expect("adjust")
}

pub fn gamma_moments(order: usize) -> MomentVector<f64> {
    sigma_adjust(&moments::<f64>(&gamma(), order).expect("gamma moments")).expect("adjust")
}

/// Gamma path on `[0, 1]`.
pub fn gamma_path(dt: f64) -> GridPath {
    simulate_grid(&gamma(), 1.0, dt, 0.0, 1).expect("simulable")
}

/// Eight-jump rational fixture with random drift and compensators.
pub fn fixture(order: usize) -> JumpPath<Rational> {
    random_fixture(8, Rational::from_integer(1.into()), order, 11).expect("fixture")
}
