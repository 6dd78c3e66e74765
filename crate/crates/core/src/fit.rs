//! Damped least-squares (Levenberg-Marquardt) fit of model parameters to
//! measured probe and conjugate gains.
//!
//! Residuals are differences of log gains. Rabi frequency, density and
//! ground-state decoherence are optimized through their logarithms, the pump
//! index deviation linearly (scaled by 1e5).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::GainDataset;
use crate::doppler::DopplerConfig;
use crate::params::ModelParams;
use crate::sweep::{solve_twin_beam, Geometry};
use crate::{Error, Result};

const EPSILON_SCALE: f64 = 1e5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParameter {
    OmegaRabi,
    Density,
    GammaC,
    EpsilonPump,
}

impl FitParameter {
    pub const ALL: [FitParameter; 4] = [
        FitParameter::OmegaRabi,
        FitParameter::Density,
        FitParameter::GammaC,
        FitParameter::EpsilonPump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParameter::OmegaRabi => "omega_rabi",
            FitParameter::Density => "density",
            FitParameter::GammaC => "gamma_c",
            FitParameter::EpsilonPump => "epsilon_pump",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::invalid("free", format!("unknown fit parameter `{name}`")))
    }

    fn get(self, p: &ModelParams) -> f64 {
        match self {
            FitParameter::OmegaRabi => p.omega_rabi,
            FitParameter::Density => p.density,
            FitParameter::GammaC => p.gamma_c,
            FitParameter::EpsilonPump => p.epsilon_pump,
        }
    }

    fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            FitParameter::OmegaRabi => p.omega_rabi = v,
            FitParameter::Density => p.density = v,
            FitParameter::GammaC => p.gamma_c = v,
            FitParameter::EpsilonPump => p.epsilon_pump = v,
        }
    }

    fn to_internal(self, v: f64) -> f64 {
        match self {
            FitParameter::EpsilonPump => v * EPSILON_SCALE,
            _ => v.ln(),
        }
    }

    fn to_natural(self, x: f64) -> f64 {
        match self {
            FitParameter::EpsilonPump => x / EPSILON_SCALE,
            _ => x.exp(),
        }
    }
}

/// Closed intervals for each fitted quantity, in natural units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitBounds {
    pub omega_rabi: (f64, f64),
    pub density: (f64, f64),
    pub gamma_c: (f64, f64),
    pub epsilon_pump: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            omega_rabi: (1.0, 1000.0),
            density: (1e16, 1e21),
            gamma_c: (1e-4, 10.0),
            epsilon_pump: (-1e-4, 1e-4),
        }
    }
}

impl FitBounds {
    fn get(&self, p: FitParameter) -> (f64, f64) {
        match p {
            FitParameter::OmegaRabi => self.omega_rabi,
            FitParameter::Density => self.density,
            FitParameter::GammaC => self.gamma_c,
            FitParameter::EpsilonPump => self.epsilon_pump,
        }
    }

    fn validate(&self) -> Result<()> {
        for p in FitParameter::ALL {
            let (lo, hi) = self.get(p);
            let positive = p != FitParameter::EpsilonPump;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) || (positive && !(lo > 0.0)) {
                return Err(Error::invalid(
                    format!("bounds.{}", p.name()),
                    format!("invalid interval [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative forward-difference step for the Jacobian.
    pub jacobian_step: f64,
    pub initial_damping: f64,
    /// Damping above which the fit gives up.
    pub damping_cap: f64,
    /// Stop when an accepted step lowers the objective by less than this fraction.
    pub ftol: f64,
    /// Stop when the step is smaller than this (internal coordinates).
    pub xtol: f64,
    /// Stop when the objective itself falls below this.
    pub objective_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 200,
            jacobian_step: 1e-4,
            initial_damping: 1e-3,
            damping_cap: 1e12,
            ftol: 1e-12,
            xtol: 1e-12,
            objective_floor: 1e-26,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    MaxIter,
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub delta: f64,
    pub theta_deg: f64,
    /// sqrt(weight) * (ln g_model - ln g_data)
    pub probe: f64,
    pub conjugate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Full parameter set with the fitted values substituted.
    pub params_out: ModelParams,
    pub free: Vec<FitParameter>,
    /// Objective after each accepted step, starting with the initial guess.
    pub objective_history: Vec<f64>,
    pub status: FitStatus,
    pub iterations: usize,
    pub residuals: Vec<PointResidual>,
    /// Standard errors of the free parameters (natural units) from the
    /// residual-scaled inverse normal matrix; absent if it is singular or the
    /// fit has no spare degrees of freedom.
    pub standard_errors: Option<Vec<f64>>,
    pub message: String,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&f64::NAN)
    }
}

struct Problem<'a> {
    data: &'a GainDataset,
    base: ModelParams,
    free: Vec<FitParameter>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    doppler: &'a DopplerConfig,
}

impl Problem<'_> {
    fn params_at(&self, x: &[f64]) -> ModelParams {
        let mut p = self.base;
        for (k, f) in self.free.iter().enumerate() {
            f.set(&mut p, f.to_natural(x[k]));
        }
        p
    }

    /// Residual vector [probe_0, conj_0, probe_1, ...], or None if the model
    /// is not finite somewhere.
    fn residuals(&self, x: &[f64]) -> Option<Vec<f64>> {
        let p = self.params_at(x);
        let pairs: Vec<Option<[f64; 2]>> = self
            .data
            .records
            .par_iter()
            .map(|r| {
                let t = solve_twin_beam(&p, r.delta, Geometry::Angle(r.theta_deg.to_radians()), self.doppler).ok()?;
                let w = r.weight.sqrt();
                let rp = w * (t.fields.ln_g_p - r.g_p.ln());
                let rc = w * (t.fields.ln_g_c - r.g_c.ln());
                (rp.is_finite() && rc.is_finite()).then_some([rp, rc])
            })
            .collect();
        let mut out = Vec::with_capacity(2 * pairs.len());
        for pair in pairs {
            out.extend(pair?);
        }
        Some(out)
    }

    fn clamp(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    fn jacobian(&self, x: &[f64], r0: &[f64], step: f64) -> Option<DMatrix<f64>> {
        let n = x.len();
        let m = r0.len();
        let mut jac = DMatrix::zeros(m, n);
        for k in 0..n {
            let mut h = step * x[k].abs().max(1.0);
            // step inward when sitting on the upper bound
            if x[k] + h > self.upper[k] {
                h = -h;
            }
            let mut xp = x.to_vec();
            xp[k] += h;
            let rp = self.residuals(&xp)?;
            for i in 0..m {
                jac[(i, k)] = (rp[i] - r0[i]) / h;
            }
        }
        Some(jac)
    }
}

fn sum_squares(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Fits the `free` parameters of `initial` to `data`.
///
/// Accepted steps strictly decrease the objective sum of squared weighted
/// log-gain residuals. A failed or non-improving trial raises the damping;
/// exceeding `options.damping_cap` ends the fit as stalled.
pub fn fit_model(
    data: &GainDataset,
    initial: &ModelParams,
    free: &[FitParameter],
    bounds: &FitBounds,
    doppler: &DopplerConfig,
    options: &FitOptions,
) -> Result<FitResult> {
    initial.validate()?;
    bounds.validate()?;
    if data.records.is_empty() {
        return Err(Error::invalid("dataset", "no records"));
    }
    let mut unique = free.to_vec();
    unique.sort_by_key(|p| p.name());
    unique.dedup();
    if unique.len() != free.len() {
        return Err(Error::invalid("free", "parameters listed twice"));
    }
    for f in free {
        let (lo, hi) = bounds.get(*f);
        let v = f.get(initial);
        if !(lo..=hi).contains(&v) {
            return Err(Error::invalid(
                f.name(),
                format!("initial value {v} outside bounds [{lo}, {hi}]"),
            ));
        }
    }
    let problem = Problem {
        data,
        base: *initial,
        free: free.to_vec(),
        lower: free.iter().map(|f| f.to_internal(bounds.get(*f).0)).collect(),
        upper: free.iter().map(|f| f.to_internal(bounds.get(*f).1)).collect(),
        doppler,
    };
    let mut x: Vec<f64> = free.iter().map(|f| f.to_internal(f.get(initial))).collect();
    let mut r = problem.residuals(&x).ok_or_else(|| {
        Error::Numerical("model gains are not finite at the initial parameters".into())
    })?;
    let mut objective = sum_squares(&r);
    let mut history = vec![objective];
    let n = x.len();
    let m = r.len();

    let mut status = FitStatus::MaxIter;
    let mut message = String::from("iteration limit reached");
    let mut iterations = 0;
    let mut lambda = options.initial_damping;
    let mut last_jac: Option<DMatrix<f64>> = None;

    if n == 0 {
        status = FitStatus::Converged;
        message = "no free parameters".into();
    }
    while n > 0 && iterations < options.max_iter {
        iterations += 1;
        if objective <= options.objective_floor {
            status = FitStatus::Converged;
            message = "objective below floor".into();
            break;
        }
        let Some(jac) = problem.jacobian(&x, &r, options.jacobian_step) else {
            status = FitStatus::Stalled;
            message = "model not finite while estimating the Jacobian".into();
            break;
        };
        let rv = DVector::from_column_slice(&r);
        let normal = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        last_jac = Some(jac);
        let diag_floor = normal.diagonal().max() * 1e-15 + f64::MIN_POSITIVE;

        let mut accepted = false;
        let mut small_step = false;
        while lambda <= options.damping_cap {
            let mut damped = normal.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * normal[(k, k)].max(diag_floor);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.clamp(&mut trial);
            let moved = trial
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if moved <= options.xtol * (1.0 + x.iter().fold(0.0f64, |s, v| s.max(v.abs()))) {
                small_step = true;
                break;
            }
            match problem.residuals(&trial) {
                Some(rt) if sum_squares(&rt) < objective => {
                    let new_obj = sum_squares(&rt);
                    let gain = (objective - new_obj) / objective;
                    x = trial;
                    r = rt;
                    objective = new_obj;
                    history.push(objective);
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if gain <= options.ftol {
                        small_step = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if small_step {
            status = FitStatus::Converged;
            message = format!("step or objective change below tolerance (damping {lambda:.1e})");
            break;
        }
        if !accepted {
            status = FitStatus::Stalled;
            message = format!("damping exceeded cap {:.1e} without improvement", options.damping_cap);
            break;
        }
    }

    let params_out = problem.params_at(&x);
    let standard_errors = last_jac.and_then(|jac| {
        if m <= n {
            return None;
        }
        let jac = problem.jacobian(&x, &r, options.jacobian_step).unwrap_or(jac);
        let inv = (jac.transpose() * &jac).try_inverse()?;
        let scale = objective / (m - n) as f64;
        Some(
            free.iter()
                .enumerate()
                .map(|(k, f)| {
                    let sx = (inv[(k, k)] * scale).max(0.0).sqrt();
                    match f {
                        FitParameter::EpsilonPump => sx / EPSILON_SCALE,
                        _ => f.get(&params_out) * sx,
                    }
                })
                .collect(),
        )
    });
    let residuals = data
        .records
        .iter()
        .enumerate()
        .map(|(k, rec)| PointResidual {
            delta: rec.delta,
            theta_deg: rec.theta_deg,
            probe: r[2 * k],
            conjugate: r[2 * k + 1],
        })
        .collect();
    Ok(FitResult {
        params_out,
        free: free.to_vec(),
        objective_history: history,
        status,
        iterations,
        residuals,
        standard_errors,
        message,
    })
}

/// Objective of `params` on `data` without fitting.
pub fn objective(data: &GainDataset, params: &ModelParams, doppler: &DopplerConfig) -> Result<f64> {
    let r = fit_model(data, params, &[], &FitBounds::default(), doppler, &FitOptions::default())?;
    Ok(r.objective())
}
