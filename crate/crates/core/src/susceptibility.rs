//! Probe and conjugate susceptibilities of the double-lambda system, to first
//! order in the weak fields and to all orders in the pump.
//!
//! Level labels: |1> and |2> are the lower and upper ground states, |3> and
//! |4> the excited states. The pump drives |1>-|3> and |2>-|4>, the probe
//! |2>-|3> and the conjugate |1>-|4>.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{EPSILON_0, HBAR};
use crate::params::ModelParams;
use crate::{Error, Result};

/// Complex decay rates of the six coherences, in units of gamma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiSet {
    pub xi43: Complex64,
    pub xi42: Complex64,
    pub xi41: Complex64,
    pub xi32: Complex64,
    pub xi31: Complex64,
    pub xi21: Complex64,
}

pub fn complex_decay_rates(delta: f64, delta1: f64, delta2: f64, gamma_c: f64) -> XiSet {
    let c = Complex64::new;
    XiSet {
        xi43: c(-1.0, delta2 - delta1),
        xi42: c(-0.5, delta2 - delta),
        xi41: c(-0.5, delta2),
        xi32: c(-0.5, delta1 - delta),
        xi31: c(-0.5, delta1),
        xi21: c(-gamma_c, delta),
    }
}

/// Ground minus excited population differences in the pump-only steady state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationDifferences {
    pub s11_33: f64,
    pub s11_44: f64,
    pub s22_33: f64,
    pub s22_44: f64,
}

pub fn population_differences(omega_rabi: f64, xi: &XiSet) -> PopulationDifferences {
    let a = xi.xi31.norm_sqr();
    let b = xi.xi42.norm_sqr();
    let den = omega_rabi * omega_rabi + a + b;
    PopulationDifferences {
        s11_33: a / den,
        s11_44: a / den,
        s22_33: b / den,
        s22_44: b / den,
    }
}

/// The four susceptibilities at one two-photon detuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilitySet {
    pub chi_pp: Complex64,
    pub chi_cc: Complex64,
    pub chi_pc: Complex64,
    pub chi_cp: Complex64,
}

impl SusceptibilitySet {
    pub const ZERO: Self = SusceptibilitySet {
        chi_pp: Complex64::new(0.0, 0.0),
        chi_cc: Complex64::new(0.0, 0.0),
        chi_pc: Complex64::new(0.0, 0.0),
        chi_cp: Complex64::new(0.0, 0.0),
    };

    pub fn scale(&self, s: f64) -> Self {
        SusceptibilitySet {
            chi_pp: self.chi_pp * s,
            chi_cc: self.chi_cc * s,
            chi_pc: self.chi_pc * s,
            chi_cp: self.chi_cp * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        SusceptibilitySet {
            chi_pp: self.chi_pp + other.chi_pp,
            chi_cc: self.chi_cc + other.chi_cc,
            chi_pc: self.chi_pc + other.chi_pc,
            chi_cp: self.chi_cp + other.chi_cp,
        }
    }

    pub fn as_array(&self) -> [Complex64; 4] {
        [self.chi_pp, self.chi_cc, self.chi_pc, self.chi_cp]
    }

    pub fn from_array(a: [Complex64; 4]) -> Self {
        SusceptibilitySet {
            chi_pp: a[0],
            chi_cc: a[1],
            chi_pc: a[2],
            chi_cp: a[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|z| z.is_finite())
    }

    /// |chi_cp - conj(chi_pc)| relative to the larger cross term. Zero when the
    /// two cross susceptibilities are exact complex conjugates.
    pub fn cross_conjugate_deviation(&self) -> f64 {
        let scale = self.chi_pc.norm().max(self.chi_cp.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.chi_cp - self.chi_pc.conj()).norm() / scale
        }
    }

    /// Largest component-wise relative difference to `other`, each component
    /// normalized by its own magnitude in `other`.
    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| {
                let d = (a - b).norm();
                if b.norm() > 0.0 {
                    d / b.norm()
                } else {
                    d
                }
            })
            .fold(0.0, f64::max)
    }
}

/// N d^2 / (eps0 hbar gamma): converts the dimensionless reduced response into
/// a susceptibility.
pub fn chi_prefactor(params: &ModelParams) -> f64 {
    params.density * params.dipole * params.dipole / (EPSILON_0 * HBAR * params.gamma)
}

/// Closed-form susceptibilities without the density prefactor, for an
/// arbitrary set of detunings (all in gamma). Used directly by the velocity
/// averaging, which shifts the detunings per velocity class.
pub fn reduced_susceptibilities(
    omega_rabi: f64,
    delta1: f64,
    delta2: f64,
    gamma_c: f64,
    delta: f64,
) -> Result<SusceptibilitySet> {
    if !(omega_rabi > 0.0) {
        return Err(Error::Domain(format!(
            "closed-form susceptibilities need a pump (omega_rabi > 0, got {omega_rabi}); \
             use a small but finite Rabi frequency to probe the weak-pump limit"
        )));
    }
    let xi = complex_decay_rates(delta, delta1, delta2, gamma_c);
    let pop = population_differences(omega_rabi, &xi);
    let XiSet {
        xi43,
        xi42,
        xi41,
        xi32,
        xi31,
        xi21,
    } = xi;
    let quarter = omega_rabi * omega_rabi / 4.0;
    let i = Complex64::i();

    let den = (xi43 + xi21) * (xi32.conj() + xi41) + xi32.conj() * xi41 * xi43 * xi21 / quarter;
    let den_c = den.conj();

    let chi_pp = i * xi41.conj() / den_c
        * (xi21.conj() / xi42.conj() * pop.s22_44 + xi43.conj() / xi31.conj() * pop.s11_33
            - ((xi21.conj() + xi43.conj()) / xi41.conj() + xi21.conj() * xi43.conj() / quarter)
                * pop.s22_33);
    let chi_cc = i * xi32.conj() / den
        * (xi43 / xi42.conj() * pop.s22_44 + xi21 / xi31.conj() * pop.s11_33
            - ((xi21 + xi43) / xi32.conj() + xi21 * xi43 / quarter) * pop.s11_44);
    let chi_pc = i * xi41.conj() / den_c
        * (xi21.conj() / xi31 * pop.s11_33
            + xi43.conj() / xi42 * pop.s22_44
            + (xi21.conj() + xi43.conj()) / xi41.conj() * pop.s11_44);
    let chi_cp = i * xi32.conj() / den
        * (xi43 / xi31 * pop.s11_33
            + xi21 / xi42 * pop.s22_44
            + (xi21 + xi43) / xi32.conj() * pop.s22_33);

    let set = SusceptibilitySet {
        chi_pp,
        chi_cc,
        chi_pc,
        chi_cp,
    };
    if !set.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite susceptibility at delta = {delta}"
        )));
    }
    Ok(set)
}

/// Susceptibilities at two-photon detuning `delta` [gamma].
pub fn susceptibilities(params: &ModelParams, delta: f64) -> Result<SusceptibilitySet> {
    let reduced = reduced_susceptibilities(
        params.omega_rabi,
        params.delta1,
        params.delta2,
        params.gamma_c,
        delta,
    )?;
    Ok(reduced.scale(chi_prefactor(params)))
}

/// Far-detuned pump index of refraction from ground-state populations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpIndex {
    pub chi: f64,
    pub n0: f64,
    /// 1 - n0, computed without cancellation.
    pub epsilon: f64,
}

/// Pump index when a fraction `fractions[0]` of the atoms sits in |1> (pump
/// detuning `delta1`) and `fractions[1]` in |2> (pump detuning `delta2`).
pub fn pump_index(params: &ModelParams, fractions: [f64; 2]) -> Result<PumpIndex> {
    for (k, f) in fractions.iter().enumerate() {
        if !(0.0..=1.0).contains(f) {
            return Err(Error::invalid(
                format!("population[{k}]"),
                format!("must lie in [0, 1], got {f}"),
            ));
        }
    }
    let prefactor = chi_prefactor(params);
    let chi: f64 = fractions
        .iter()
        .zip([params.delta1, params.delta2])
        .map(|(f, det)| -f * prefactor * det / (det * det + 0.25))
        .sum();
    Ok(PumpIndex {
        chi,
        n0: 1.0 + chi / 2.0,
        epsilon: -chi / 2.0,
    })
}
