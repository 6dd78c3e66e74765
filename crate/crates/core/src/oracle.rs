//! Brute-force steady state of the four-level density matrix, used to check
//! the closed-form susceptibilities.
//!
//! The master equation is integrated in time with an L-stable, extrapolated
//! implicit Euler scheme and adaptive steps until the time derivative
//! vanishes. Weak probe and conjugate seeds then give the susceptibilities by
//! linear response.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::susceptibility::{chi_prefactor, SusceptibilitySet};
use crate::{Error, Result};

const DIM: usize = 16;
/// Largest seed allowed relative to the pump Rabi frequency.
pub const MAX_SEED_FRACTION: f64 = 1e-3;
/// Seed-halving discrepancy above which the response is deemed nonlinear.
pub const LINEARITY_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    GroundOne,
    MaximallyMixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Seed Rabi frequency as a fraction of the pump Rabi frequency.
    pub seed_fraction: f64,
    /// Phase of the complex seeds [rad].
    pub seed_phase: f64,
    /// Convergence threshold on max |d sigma / dt| [gamma].
    pub residual_tol: f64,
    /// Local error tolerance of the time stepper.
    pub step_tol: f64,
    pub max_steps: usize,
    pub initial: InitialState,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed_fraction: 1e-6,
            seed_phase: 0.3,
            residual_tol: 1e-12,
            step_tol: 1e-3,
            max_steps: 20_000,
            initial: InitialState::GroundOne,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixState {
    pub sigma: Matrix4<Complex64>,
}

impl DensityMatrixState {
    pub fn initial(kind: InitialState) -> Self {
        let mut sigma = Matrix4::zeros();
        match kind {
            InitialState::GroundOne => sigma[(0, 0)] = Complex64::new(1.0, 0.0),
            InitialState::MaximallyMixed => {
                for k in 0..4 {
                    sigma[(k, k)] = Complex64::new(0.25, 0.0);
                }
            }
        }
        DensityMatrixState { sigma }
    }

    fn from_vector(y: &DVector<Complex64>) -> Self {
        DensityMatrixState {
            sigma: Matrix4::from_fn(|n, m| y[n * 4 + m]),
        }
    }

    fn to_vector(self) -> DVector<Complex64> {
        DVector::from_fn(DIM, |k, _| self.sigma[(k / 4, k % 4)])
    }

    pub fn trace(&self) -> Complex64 {
        self.sigma.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.sigma - self.sigma.adjoint())
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.sigma + self.sigma.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    /// Populations sigma_11 .. sigma_44.
    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.sigma[(k, k)].re)
    }
}

/// Time derivative of sigma in the rotating frame (gamma = 1).
fn master_rhs(
    sigma: &Matrix4<Complex64>,
    hamiltonian: &Matrix4<Complex64>,
    damping: &Matrix4<f64>,
) -> Matrix4<Complex64> {
    let mi = Complex64::new(0.0, -1.0);
    let mut d = (hamiltonian * sigma - sigma * hamiltonian) * mi;
    for n in 0..4 {
        for m in 0..4 {
            if n != m {
                d[(n, m)] -= sigma[(n, m)] * damping[(n, m)];
            }
        }
    }
    // both excited states decay at gamma with equal branching to |1> and |2>
    let excited = sigma[(2, 2)] + sigma[(3, 3)];
    d[(2, 2)] -= sigma[(2, 2)];
    d[(3, 3)] -= sigma[(3, 3)];
    d[(0, 0)] += excited * 0.5;
    d[(1, 1)] += excited * 0.5;
    d
}

fn hamiltonian(params: &ModelParams, delta: f64, rabi_p: Complex64, rabi_c: Complex64) -> Matrix4<Complex64> {
    let mut h = Matrix4::<Complex64>::zeros();
    h[(1, 1)] = (-delta).into();
    h[(2, 2)] = (-params.delta1).into();
    h[(3, 3)] = (-params.delta2).into();
    let pump = Complex64::new(params.omega_rabi, 0.0);
    // (row, col, Rabi frequency): pump on 1-3 and 2-4, probe on 2-3, conjugate on 1-4
    for (r, c, w) in [(2, 0, pump), (3, 1, pump), (2, 1, rabi_p), (3, 0, rabi_c)] {
        h[(r, c)] = -w / 2.0;
        h[(c, r)] = -w.conj() / 2.0;
    }
    h
}

fn damping(params: &ModelParams) -> Matrix4<f64> {
    let width = [0.0, 0.0, 1.0, 1.0];
    let mut g = Matrix4::from_fn(|n, m| 0.5 * (width[n] + width[m]));
    g[(0, 1)] += params.gamma_c;
    g[(1, 0)] += params.gamma_c;
    g
}

/// The 16x16 generator, column k being the image of the k-th basis matrix.
fn generator(params: &ModelParams, delta: f64, rabi_p: Complex64, rabi_c: Complex64) -> DMatrix<Complex64> {
    let h = hamiltonian(params, delta, rabi_p, rabi_c);
    let g = damping(params);
    let mut l = DMatrix::zeros(DIM, DIM);
    for k in 0..DIM {
        let mut basis = Matrix4::zeros();
        basis[(k / 4, k % 4)] = Complex64::new(1.0, 0.0);
        let image = master_rhs(&basis, &h, &g);
        for j in 0..DIM {
            l[(j, k)] = image[(j / 4, j % 4)];
        }
    }
    l
}

/// Steady state with convergence and trajectory diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub state: DensityMatrixState,
    /// max |d sigma / dt| at the returned state [gamma].
    pub residual: f64,
    pub steps: usize,
    pub time: f64,
    /// Largest |trace - 1| seen along the trajectory.
    pub max_trace_error: f64,
    /// Largest |sigma - sigma^dagger| entry seen along the trajectory.
    pub max_hermiticity_error: f64,
}

fn max_modulus(v: &DVector<Complex64>) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Affine system for the 15 entries other than sigma_11, which is fixed by
/// the unit trace: dy/dt = a y + b.
struct Reduced {
    full: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
    b: DVector<Complex64>,
}

impl Reduced {
    fn new(full: DMatrix<Complex64>) -> Self {
        let n = DIM - 1;
        let mut a = full.view((1, 1), (n, n)).into_owned();
        let b = full.view((1, 0), (n, 1)).column(0).into_owned();
        for d in [5usize, 10, 15] {
            for r in 0..n {
                a[(r, d - 1)] -= b[r];
            }
        }
        Reduced { full, a, b }
    }

    fn expand(y: &DVector<Complex64>) -> DVector<Complex64> {
        let s11 = Complex64::new(1.0, 0.0) - y[4] - y[9] - y[14];
        DVector::from_fn(DIM, |k, _| if k == 0 { s11 } else { y[k - 1] })
    }

    fn residual(&self, y: &DVector<Complex64>) -> f64 {
        max_modulus(&(&self.full * Self::expand(y)))
    }

    /// One implicit Euler step in increment form, (I - h a) dy = h (a y + b).
    fn euler(&self, y: &DVector<Complex64>, h: f64) -> Option<DVector<Complex64>> {
        let n = DIM - 1;
        let lhs = DMatrix::<Complex64>::identity(n, n) - &self.a * Complex64::from(h);
        let rhs = (&self.a * y + &self.b) * Complex64::from(h);
        lhs.lu().solve(&rhs).map(|dy| y + dy)
    }
}

/// Integrates the master equation from `cfg.initial` until the time
/// derivative drops below `cfg.residual_tol`.
///
/// Seeds must not exceed `MAX_SEED_FRACTION` times the pump Rabi frequency.
pub fn evolve_to_steady_state(
    params: &ModelParams,
    delta: f64,
    rabi_p: Complex64,
    rabi_c: Complex64,
    cfg: &OracleConfig,
) -> Result<SteadyState> {
    params.validate()?;
    let limit = MAX_SEED_FRACTION * params.omega_rabi;
    if rabi_p.norm() > limit || rabi_c.norm() > limit {
        return Err(Error::Domain(format!(
            "seeds |{}|, |{}| exceed the linear-response limit {limit:.3e}",
            rabi_p, rabi_c
        )));
    }
    let sys = Reduced::new(generator(params, delta, rabi_p, rabi_c));
    let full0 = DensityMatrixState::initial(cfg.initial).to_vector();
    let mut y = DVector::from_fn(DIM - 1, |k, _| full0[k + 1]);

    let track = |y: &DVector<Complex64>, tr: &mut f64, he: &mut f64| {
        let s = DensityMatrixState::from_vector(&Reduced::expand(y));
        *tr = tr.max((s.trace() - 1.0).norm());
        *he = he.max(s.hermiticity_error());
    };
    let (mut max_trace, mut max_herm) = (0.0, 0.0);
    track(&y, &mut max_trace, &mut max_herm);

    let mut h = 1e-3;
    let mut t = 0.0;
    let h_max = 1e16;
    for step in 0..cfg.max_steps {
        let residual = sys.residual(&y);
        if residual < cfg.residual_tol && h >= 1e6 {
            return Ok(SteadyState {
                state: DensityMatrixState::from_vector(&Reduced::expand(&y)),
                residual,
                steps: step,
                time: t,
                max_trace_error: max_trace,
                max_hermiticity_error: max_herm,
            });
        }
        let singular = || Error::Numerical(format!("singular implicit step at h = {h:.3e}"));
        let coarse = sys.euler(&y, h).ok_or_else(singular)?;
        let mid = sys.euler(&y, h / 2.0).ok_or_else(singular)?;
        let fine = sys.euler(&mid, h / 2.0).ok_or_else(singular)?;
        let err = max_modulus(&(&fine - &coarse));
        if !err.is_finite() {
            return Err(Error::Numerical(format!("non-finite state at t = {t:.6e}")));
        }
        if err <= cfg.step_tol {
            y = &fine * Complex64::from(2.0) - &coarse;
            t += h;
            track(&y, &mut max_trace, &mut max_herm);
        }
        let factor = if err > 0.0 {
            (0.9 * (cfg.step_tol / err).sqrt()).clamp(0.2, 10.0)
        } else {
            10.0
        };
        h = (h * factor).min(h_max);
    }
    Err(Error::Numerical(format!(
        "steady state not reached after {} steps: residual {:.3e} at t = {t:.3e}",
        cfg.max_steps,
        sys.residual(&y)
    )))
}

/// Susceptibilities obtained by linear response of the steady state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleExtraction {
    pub chi: SusceptibilitySet,
    /// Largest relative change of any component when the seeds are halved.
    pub halving_discrepancy: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub max_residual: f64,
    pub min_eigenvalue: f64,
    pub total_steps: usize,
}

fn response(
    params: &ModelParams,
    delta: f64,
    seed: Complex64,
    cfg: &OracleConfig,
    acc: &mut OracleExtraction,
) -> Result<SusceptibilitySet> {
    let zero = Complex64::new(0.0, 0.0);
    let mut run = |p: Complex64, c: Complex64| -> Result<Matrix4<Complex64>> {
        let s = evolve_to_steady_state(params, delta, p, c, cfg)?;
        acc.max_trace_error = acc.max_trace_error.max(s.max_trace_error);
        acc.max_hermiticity_error = acc.max_hermiticity_error.max(s.max_hermiticity_error);
        acc.max_residual = acc.max_residual.max(s.residual);
        acc.min_eigenvalue = acc.min_eigenvalue.min(s.state.min_eigenvalue());
        acc.total_steps += s.steps;
        Ok(s.state.sigma)
    };
    // sigma_32 carries the probe polarization, sigma_41 the conjugate one
    let probe_only = run(seed, zero)?;
    let conj_only = run(zero, seed)?;
    Ok(SusceptibilitySet {
        chi_pp: probe_only[(2, 1)] * 2.0 / seed,
        chi_cp: probe_only[(3, 0)] * 2.0 / seed.conj(),
        chi_cc: conj_only[(3, 0)] * 2.0 / seed,
        chi_pc: conj_only[(2, 1)] * 2.0 / seed.conj(),
    })
}

/// Probe-only and conjugate-only seeded runs at two seed sizes; the result is
/// the Richardson combination, which cancels the leading cubic response.
pub fn extract_susceptibilities(
    params: &ModelParams,
    delta: f64,
    cfg: &OracleConfig,
) -> Result<OracleExtraction> {
    if !(cfg.seed_fraction > 0.0 && cfg.seed_fraction <= MAX_SEED_FRACTION) {
        return Err(Error::invalid(
            "seed_fraction",
            format!("must lie in (0, {MAX_SEED_FRACTION}], got {}", cfg.seed_fraction),
        ));
    }
    if !(params.omega_rabi > 0.0) {
        return Err(Error::Domain("linear response needs a pump (omega_rabi > 0)".into()));
    }
    let mut acc = OracleExtraction {
        chi: SusceptibilitySet::ZERO,
        halving_discrepancy: 0.0,
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        max_residual: 0.0,
        min_eigenvalue: f64::INFINITY,
        total_steps: 0,
    };
    let seed = Complex64::from_polar(cfg.seed_fraction * params.omega_rabi, cfg.seed_phase);
    let full = response(params, delta, seed, cfg, &mut acc)?;
    let half = response(params, delta, seed / 2.0, cfg, &mut acc)?;
    acc.halving_discrepancy = full.max_relative_difference(&half);
    if acc.halving_discrepancy > LINEARITY_TOLERANCE {
        return Err(Error::Numerical(format!(
            "seed too large: halving the seed changes chi by {:.3e} (relative)",
            acc.halving_discrepancy
        )));
    }
    let richardson = half.scale(4.0 / 3.0).add(&full.scale(-1.0 / 3.0));
    acc.chi = richardson.scale(chi_prefactor(params));
    Ok(acc)
}
