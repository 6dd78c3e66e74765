//! Thermal velocity averaging of the susceptibilities.
//!
//! Each velocity class sees the fields Doppler shifted; its susceptibilities
//! are evaluated at the shifted detunings and the Maxwell-Boltzmann weighted
//! average is taken before propagation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{BeamKinematics, ModelParams};
use crate::quadrature::{gauss_hermite, integrate_adaptive, Adaptive};
use crate::susceptibility::{chi_prefactor, reduced_susceptibilities, SusceptibilitySet};
use crate::{Error, Result};

/// FWHM of a Gaussian in units of its standard deviation.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Adaptive Gauss-Kronrod on [-vmax, vmax]; `nodes` sets the initial panel count.
    Adaptive,
    /// Fixed Gauss-Hermite rule with `nodes` points.
    GaussHermite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DopplerConfig {
    pub enabled: bool,
    pub nodes: usize,
    /// Integration cutoff in units of the 1-D thermal velocity spread.
    pub vmax_sigmas: f64,
    pub rule: QuadratureRule,
    /// Also average over the velocity component transverse to the pump in the
    /// pump-probe plane.
    pub transverse: bool,
    /// Relative accuracy target of the adaptive rule.
    pub rtol: f64,
}

impl Default for DopplerConfig {
    fn default() -> Self {
        DopplerConfig {
            enabled: true,
            nodes: 64,
            vmax_sigmas: 8.0,
            rule: QuadratureRule::Adaptive,
            transverse: false,
            rtol: 1e-10,
        }
    }
}

impl DopplerConfig {
    pub fn disabled() -> Self {
        DopplerConfig {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(Error::invalid("doppler.nodes", format!("must be >= 8, got {}", self.nodes)));
        }
        if !(self.vmax_sigmas >= 4.0) {
            return Err(Error::invalid(
                "doppler.vmax_sigmas",
                format!("must be >= 4, got {}", self.vmax_sigmas),
            ));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::invalid("doppler.rtol", format!("must lie in (0, 1), got {}", self.rtol)));
        }
        Ok(())
    }
}

/// Detuning shifts [gamma] seen by one velocity class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityShifts {
    pub d_delta1: f64,
    pub d_delta2: f64,
    pub d_delta: f64,
}

/// Shifts for an atom with velocity `v_axial` along the pump and
/// `v_transverse` perpendicular to it in the pump-probe plane [m/s].
///
/// Both one-photon detunings move by -k0 v_axial. The two-photon detuning only
/// sees the pump-probe wave-vector difference.
pub fn velocity_shifts(v_axial: f64, v_transverse: f64, kin: &BeamKinematics, gamma: f64) -> VelocityShifts {
    let one_photon = -kin.k0 * v_axial / gamma;
    let two_photon = (-(kin.k0 - kin.kp * kin.theta.cos()) * v_axial
        + kin.kp * kin.theta.sin() * v_transverse)
        / gamma;
    VelocityShifts {
        d_delta1: one_photon,
        d_delta2: one_photon,
        d_delta: two_photon,
    }
}

/// FWHM [gamma] of the two-photon detuning spread for an isotropic thermal
/// distribution with 1-D standard deviation `sigma_v` [m/s].
pub fn residual_two_photon_width(kin: &BeamKinematics, sigma_v: f64, gamma: f64) -> f64 {
    let axial = kin.k0 - kin.kp * kin.theta.cos();
    let transverse = kin.kp * kin.theta.sin();
    FWHM_PER_SIGMA * sigma_v * axial.hypot(transverse) / gamma
}

fn pack(chi: &SusceptibilitySet, weight: f64) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = chi.as_array().iter().map(|z| z * weight).collect();
    v.push(Complex64::new(weight, 0.0));
    v
}

fn unpack(v: &[Complex64]) -> SusceptibilitySet {
    let norm = v[4].re;
    SusceptibilitySet::from_array([v[0] / norm, v[1] / norm, v[2] / norm, v[3] / norm])
}

fn gaussian(v: f64, sigma: f64) -> f64 {
    (-0.5 * (v / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Averages `f(v_axial, v_transverse)` over a thermal distribution with 1-D
/// spread `sigma_v`. The weights are integrated alongside and the result is
/// divided by their sum, so the average of a constant is that constant.
pub fn average_over_velocity<F>(sigma_v: f64, cfg: &DopplerConfig, f: F) -> Result<SusceptibilitySet>
where
    F: Fn(f64, f64) -> Result<SusceptibilitySet> + Sync,
{
    cfg.validate()?;
    if !(sigma_v > 0.0) || !sigma_v.is_finite() {
        return Err(Error::invalid("temperature", format!("thermal velocity {sigma_v} is not positive")));
    }
    let vmax = cfg.vmax_sigmas * sigma_v;
    match cfg.rule {
        QuadratureRule::Adaptive => {
            let rule = Adaptive {
                initial_panels: cfg.nodes,
                rtol: cfg.rtol,
                atol: 1e-16,
                max_panels: 200_000,
            };
            let line = |vx: f64| -> Result<Vec<Complex64>> {
                integrate_adaptive(
                    |vz| Ok(pack(&f(vz, vx)?, gaussian(vz, sigma_v))),
                    -vmax,
                    vmax,
                    5,
                    &rule,
                )
            };
            let total = if cfg.transverse {
                integrate_adaptive(
                    |vx| {
                        let w = gaussian(vx, sigma_v);
                        Ok(line(vx)?.into_iter().map(|z| z * w).collect())
                    },
                    -vmax,
                    vmax,
                    5,
                    &rule,
                )?
            } else {
                line(0.0)?
            };
            Ok(unpack(&total))
        }
        QuadratureRule::GaussHermite => {
            let (x, w) = gauss_hermite(cfg.nodes)?;
            let scale = std::f64::consts::SQRT_2 * sigma_v;
            let line = |vx: f64| -> Result<Vec<Complex64>> {
                let parts: Vec<Vec<Complex64>> = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| Ok(pack(&f(scale * xi, vx)?, *wi)))
                    .collect::<Result<_>>()?;
                Ok(crate::quadrature::pairwise_sum(&parts, 5))
            };
            let total = if cfg.transverse {
                let parts: Vec<Vec<Complex64>> = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| Ok(line(scale * xi)?.into_iter().map(|z| z * *wi).collect()))
                    .collect::<Result<_>>()?;
                crate::quadrature::pairwise_sum(&parts, 5)
            } else {
                line(0.0)?
            };
            Ok(unpack(&total))
        }
    }
}

/// Velocity-averaged susceptibilities at two-photon detuning `delta` [gamma].
/// Returns the bare susceptibilities when averaging is disabled.
pub fn averaged_susceptibilities(
    params: &ModelParams,
    delta: f64,
    kin: &BeamKinematics,
    cfg: &DopplerConfig,
) -> Result<SusceptibilitySet> {
    let bare = |vz: f64, vx: f64| {
        let s = velocity_shifts(vz, vx, kin, params.gamma);
        reduced_susceptibilities(
            params.omega_rabi,
            params.delta1 + s.d_delta1,
            params.delta2 + s.d_delta2,
            params.gamma_c,
            delta + s.d_delta,
        )
    };
    let reduced = if cfg.enabled {
        average_over_velocity(params.thermal_velocity(), cfg, bare)?
    } else {
        bare(0.0, 0.0)?
    };
    Ok(reduced.scale(chi_prefactor(params)))
}
