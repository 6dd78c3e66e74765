//! Physical parameters and beam kinematics.
//!
//! All rates and detunings are stored in units of the excited-state decay
//! rate `gamma` (so `gamma = 1` internally); `gamma` itself is kept in rad/s
//! as the unit scale. Lengths are in meters, densities in m^-3.
//!
//! Configuration documents are flat JSON objects. Frequency-like fields take
//! a unit suffix, either `_gamma` (already normalized) or `_hz` (ordinary
//! frequency f, converted with 2*pi*f / gamma). Giving both spellings of the
//! same field is rejected.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::constants::{
    BOLTZMANN, RB85_HF_SPLITTING_HZ, RB85_MASS, RB_D1_DIPOLE, RB_D1_LINEWIDTH_HZ,
    RB_D1_WAVELENGTH, SPEED_OF_LIGHT,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Resonant pump Rabi frequency [gamma].
    pub omega_rabi: f64,
    /// One-photon detuning of the pump on the |1>-|3> leg [gamma].
    pub delta1: f64,
    /// One-photon detuning of the second leg (conjugate on |1>-|4>) [gamma].
    pub delta2: f64,
    /// Excited-state decay rate [rad/s]; the unit of every other rate.
    pub gamma: f64,
    /// Ground-state decoherence rate [gamma].
    pub gamma_c: f64,
    /// Atom number density [m^-3].
    pub density: f64,
    /// Medium length [m].
    pub length: f64,
    /// Ground-state hyperfine splitting [gamma].
    pub hf_split: f64,
    /// Pump vacuum wavelength [m].
    pub wavelength: f64,
    /// Reduced dipole matrix element [C m].
    pub dipole: f64,
    /// Pump index deviation, n0 = 1 - epsilon_pump.
    pub epsilon_pump: f64,
    /// Vapor temperature [K].
    pub temperature: f64,
    /// Atomic mass [kg].
    pub atomic_mass: f64,
}

/// Frequency-valued keys; each accepts a `_gamma` or `_hz` suffix.
const FREQUENCY_FIELDS: [&str; 5] = ["omega_rabi", "delta1", "delta2", "gamma_c", "hf_split"];
const PLAIN_FIELDS: [&str; 7] = [
    "density",
    "length",
    "wavelength",
    "dipole",
    "epsilon_pump",
    "temperature",
    "atomic_mass",
];

/// Every key understood by [`build_params`].
pub fn model_keys() -> Vec<String> {
    let mut keys: Vec<String> = FREQUENCY_FIELDS
        .iter()
        .flat_map(|f| [format!("{f}_gamma"), format!("{f}_hz")])
        .collect();
    keys.push("gamma_hz".into());
    keys.push("gamma_rad_s".into());
    keys.extend(PLAIN_FIELDS.iter().map(|s| s.to_string()));
    keys
}

fn number(doc: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n
            .as_f64()
            .filter(|v| v.is_finite())
            .map(Some)
            .ok_or_else(|| Error::invalid(key, "not a finite number")),
        Some(other) => Err(Error::invalid(key, format!("expected a number, got {other}"))),
    }
}

/// Reads `field_gamma` / `field_hz`, converting Hz to gamma units.
fn frequency(doc: &Map<String, Value>, field: &str, gamma: f64) -> Result<Option<f64>> {
    let in_gamma = number(doc, &format!("{field}_gamma"))?;
    let in_hz = number(doc, &format!("{field}_hz"))?;
    match (in_gamma, in_hz) {
        (Some(_), Some(_)) => Err(Error::invalid(
            field,
            format!("both `{field}_gamma` and `{field}_hz` given"),
        )),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(hz)) => Ok(Some(2.0 * PI * hz / gamma)),
        (None, None) => {
            if doc.contains_key(field) {
                Err(Error::invalid(
                    field,
                    format!("frequency needs a unit suffix: `{field}_gamma` or `{field}_hz`"),
                ))
            } else {
                Ok(None)
            }
        }
    }
}

/// Builds validated parameters from a flat key-value document.
///
/// Required: `omega_rabi`, `delta1`, `gamma_c` (with unit suffix). Everything
/// else defaults to the 85Rb D1 configuration; `delta2` defaults to
/// `delta1 + hf_split`. Keys that are not model parameters are ignored here.
pub fn build_params(doc: &Map<String, Value>) -> Result<ModelParams> {
    let gamma = match (number(doc, "gamma_hz")?, number(doc, "gamma_rad_s")?) {
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "gamma",
                "both `gamma_hz` and `gamma_rad_s` given",
            ))
        }
        (Some(hz), None) => 2.0 * PI * hz,
        (None, Some(w)) => w,
        (None, None) => 2.0 * PI * RB_D1_LINEWIDTH_HZ,
    };
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be > 0"));
    }
    let required = |field: &str| -> Result<f64> {
        frequency(doc, field, gamma)?.ok_or_else(|| Error::MissingField(format!("{field}_gamma")))
    };
    let omega_rabi = required("omega_rabi")?;
    let delta1 = required("delta1")?;
    let gamma_c = required("gamma_c")?;
    let hf_split = frequency(doc, "hf_split", gamma)?
        .unwrap_or(2.0 * PI * RB85_HF_SPLITTING_HZ / gamma);
    let delta2 = frequency(doc, "delta2", gamma)?.unwrap_or(delta1 + hf_split);

    let params = ModelParams {
        omega_rabi,
        delta1,
        delta2,
        gamma,
        gamma_c,
        density: number(doc, "density")?.unwrap_or(2.8e18),
        length: number(doc, "length")?.unwrap_or(0.012),
        hf_split,
        wavelength: number(doc, "wavelength")?.unwrap_or(RB_D1_WAVELENGTH),
        dipole: number(doc, "dipole")?.unwrap_or(RB_D1_DIPOLE),
        epsilon_pump: number(doc, "epsilon_pump")?.unwrap_or(0.0),
        temperature: number(doc, "temperature")?.unwrap_or(383.15),
        atomic_mass: number(doc, "atomic_mass")?.unwrap_or(RB85_MASS),
    };
    params.validate()?;
    Ok(params)
}

impl ModelParams {
    pub fn from_json_str(text: &str) -> Result<Self> {
        match serde_json::from_str::<Value>(text)? {
            Value::Object(doc) => build_params(&doc),
            _ => Err(Error::invalid("config", "expected a JSON object")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(&str, f64, bool, &str); 12] = [
            ("gamma", self.gamma, self.gamma > 0.0, "must be > 0"),
            ("omega_rabi", self.omega_rabi, self.omega_rabi >= 0.0, "must be >= 0"),
            ("delta1", self.delta1, true, ""),
            ("delta2", self.delta2, true, ""),
            ("gamma_c", self.gamma_c, self.gamma_c >= 0.0, "negative rate"),
            ("density", self.density, self.density >= 0.0, "must be >= 0"),
            ("length", self.length, self.length >= 0.0, "must be >= 0"),
            ("hf_split", self.hf_split, self.hf_split > 0.0, "must be > 0"),
            ("wavelength", self.wavelength, self.wavelength > 0.0, "must be > 0"),
            ("dipole", self.dipole, self.dipole >= 0.0, "must be >= 0"),
            ("temperature", self.temperature, self.temperature > 0.0, "must be > 0"),
            ("atomic_mass", self.atomic_mass, self.atomic_mass > 0.0, "must be > 0"),
        ];
        for (field, value, ok, reason) in checks {
            if !value.is_finite() {
                return Err(Error::invalid(field, "not finite"));
            }
            if !ok {
                return Err(Error::invalid(field, format!("{reason} (got {value})")));
            }
        }
        if !self.epsilon_pump.is_finite() {
            return Err(Error::invalid("epsilon_pump", "not finite"));
        }
        Ok(())
    }

    /// Flat config document that [`build_params`] maps back to `self` exactly.
    pub fn to_config(&self) -> Map<String, Value> {
        let mut doc = Map::new();
        let mut put = |k: &str, v: f64| {
            doc.insert(k.to_string(), Value::from(v));
        };
        put("omega_rabi_gamma", self.omega_rabi);
        put("delta1_gamma", self.delta1);
        put("delta2_gamma", self.delta2);
        put("gamma_rad_s", self.gamma);
        put("gamma_c_gamma", self.gamma_c);
        put("hf_split_gamma", self.hf_split);
        put("density", self.density);
        put("length", self.length);
        put("wavelength", self.wavelength);
        put("dipole", self.dipole);
        put("epsilon_pump", self.epsilon_pump);
        put("temperature", self.temperature);
        put("atomic_mass", self.atomic_mass);
        doc
    }

    /// Pump refractive index n0 = 1 - epsilon_pump.
    pub fn pump_index(&self) -> f64 {
        1.0 - self.epsilon_pump
    }

    /// One-dimensional thermal velocity spread sqrt(kB T / m) [m/s].
    pub fn thermal_velocity(&self) -> f64 {
        (BOLTZMANN * self.temperature / self.atomic_mass).sqrt()
    }
}

/// Frequencies and vacuum wavenumbers of the pump, probe and conjugate at
/// one two-photon detuning, plus the pump-probe angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamKinematics {
    pub k0: f64,
    pub kp: f64,
    pub kc: f64,
    pub omega0: f64,
    pub omegap: f64,
    pub omegac: f64,
    /// Pump-probe angle [rad].
    pub theta: f64,
}

/// Beam kinematics for two-photon detuning `delta` [gamma] and pump-probe
/// angle `theta` [rad]. The conjugate frequency always follows from energy
/// conservation, omega_c = 2 omega_0 - omega_p.
pub fn kinematics(params: &ModelParams, delta: f64, theta: f64) -> Result<BeamKinematics> {
    params.validate()?;
    if !delta.is_finite() {
        return Err(Error::invalid("delta", "not finite"));
    }
    if !(0.0..PI / 2.0).contains(&theta) {
        return Err(Error::invalid("theta", format!("must lie in [0, pi/2), got {theta}")));
    }
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / params.wavelength;
    let omegap = omega0 - (params.hf_split + delta) * params.gamma;
    let omegac = 2.0 * omega0 - omegap;
    if !(omegap > 0.0) {
        return Err(Error::invalid("delta", "probe frequency is not positive"));
    }
    Ok(BeamKinematics {
        k0: omega0 / SPEED_OF_LIGHT,
        kp: omegap / SPEED_OF_LIGHT,
        kc: omegac / SPEED_OF_LIGHT,
        omega0,
        omegap,
        omegac,
        theta,
    })
}
