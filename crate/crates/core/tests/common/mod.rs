#![allow(dead_code)]

use lambda4wm_core::dataset::{GainDataset, GainRecord};
use lambda4wm_core::doppler::DopplerConfig;
use lambda4wm_core::params::{build_params, ModelParams};
use lambda4wm_core::sweep::{solve_twin_beam, Geometry};
use serde_json::{json, Value};

pub fn params(doc: Value) -> ModelParams {
    build_params(doc.as_object().expect("object")).expect("valid parameters")
}

/// Omega = 60, Delta1 = 140, gamma_c = 0.2 with default density and length.
pub fn light_shift_point() -> ModelParams {
    params(json!({"omega_rabi_gamma": 60.0, "delta1_gamma": 140.0, "gamma_c_gamma": 0.2}))
}

/// Fitted working point of the angle-resolved gain measurements.
pub fn fitted_point() -> ModelParams {
    params(json!({
        "omega_rabi_gamma": 60.0,
        "delta1_gamma": 140.0,
        "delta2_gamma": 646.0,
        "gamma_c_gamma": 0.2,
        "density": 2.8e18,
        "epsilon_pump": 6.5e-6,
        "length": 0.012
    }))
}

pub fn fit_grid() -> (Vec<f64>, Vec<f64>) {
    let deltas = (0..=20).map(|k| -3.0 + 0.25 * k as f64).collect();
    let thetas = vec![0.1, 0.2, 0.3, 0.4, 0.5];
    (deltas, thetas)
}

/// Gains on the fit grid; each call of `noise` returns the factors applied
/// to the next record's probe and conjugate gains.
pub fn synthetic_dataset(truth: &ModelParams, mut noise: impl FnMut() -> (f64, f64)) -> GainDataset {
    let (deltas, thetas) = fit_grid();
    let mut records = Vec::new();
    for &t in &thetas {
        for &d in &deltas {
            let f = solve_twin_beam(truth, d, Geometry::Angle(f64::to_radians(t)), &DopplerConfig::disabled())
                .expect("forward model")
                .fields;
            let (np, nc) = noise();
            records.push(GainRecord {
                delta: d,
                theta_deg: t,
                g_p: f.g_p * np,
                g_c: f.g_c * nc,
                weight: 1.0,
            });
        }
    }
    GainDataset::new(records, false).expect("valid dataset")
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Initial guess with every fitted quantity 30% off, signs alternating.
pub fn perturbed_guess(truth: &ModelParams) -> ModelParams {
    ModelParams {
        omega_rabi: truth.omega_rabi * 1.3,
        density: truth.density * 0.7,
        gamma_c: truth.gamma_c * 1.3,
        epsilon_pump: truth.epsilon_pump * 0.7,
        ..*truth
    }
}

/// 5% multiplicative Gaussian noise from a seeded generator.
pub fn noisy_dataset(truth: &ModelParams, seed: u64) -> GainDataset {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.05).expect("valid spread");
    synthetic_dataset(truth, || {
        (1.0 + normal.sample(&mut rng), 1.0 + normal.sample(&mut rng))
    })
}
