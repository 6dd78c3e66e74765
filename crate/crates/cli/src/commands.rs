//! One function per subcommand. Each returns the files it wrote and a small
//! JSON summary for the manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lambda4wm_core::dataset::load_gain_data;
use lambda4wm_core::doppler::DopplerConfig;
use lambda4wm_core::fit::{fit_model, FitBounds, FitOptions, FitParameter};
use lambda4wm_core::oracle::{evolve_to_steady_state, extract_susceptibilities, OracleConfig};
use lambda4wm_core::params::{build_params, ModelParams};
use lambda4wm_core::susceptibility::susceptibilities;
use lambda4wm_core::sweep::{format_float, gain_map, solve_twin_beam, Geometry};
use lambda4wm_core::{Complex64, Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{invalid, Config};

pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_json(path: PathBuf, value: &Value) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

pub fn params(cfg: &Config) -> Result<ModelParams> {
    build_params(&cfg.doc)
}

pub fn chi(cfg: &Config, out: &Path) -> Result<Outputs> {
    cfg.check_keys("chi", &["delta_axis"])?;
    let p = params(cfg)?;
    let deltas = cfg.axis("delta_axis")?;
    let rows = deltas
        .par_iter()
        .map(|&d| susceptibilities(&p, d))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("delta,re_chi_pp,im_chi_pp,re_chi_cc,im_chi_cc,re_chi_pc,im_chi_pc,re_chi_cp,im_chi_cp\n");
    for (d, c) in deltas.iter().zip(&rows) {
        csv.push_str(&format_float(*d));
        for z in [c.chi_pp, c.chi_cc, c.chi_pc, c.chi_cp] {
            let _ = write!(csv, ",{},{}", format_float(z.re), format_float(z.im));
        }
        csv.push('\n');
    }
    Ok(Outputs {
        files: vec![write(out.join("chi.csv"), &csv)?],
        summary: json!({"points": deltas.len()}),
    })
}

fn geometry(cfg: &Config) -> Result<Geometry> {
    match (cfg.get::<f64>("theta_deg")?, cfg.get::<f64>("dkz_rad_m")?) {
        (Some(_), Some(_)) => Err(invalid("theta_deg", "give either `theta_deg` or `dkz_rad_m`, not both")),
        (Some(t), None) => Ok(Geometry::Angle(t.to_radians())),
        (None, Some(dk)) => Ok(Geometry::Mismatch(dk)),
        (None, None) => Ok(Geometry::Angle(0.0)),
    }
}

fn complex(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

pub fn propagate(cfg: &Config, out: &Path) -> Result<Outputs> {
    cfg.check_keys("propagate", &["delta_gamma", "theta_deg", "dkz_rad_m", "doppler"])?;
    let p = params(cfg)?;
    let delta: f64 = cfg.require("delta_gamma")?;
    let geometry = geometry(cfg)?;
    let doppler = cfg.doppler()?;
    let t = solve_twin_beam(&p, delta, geometry, &doppler)?;
    let f = t.fields;
    let c = t.coupling;
    let doc = json!({
        "delta_gamma": delta,
        "geometry": geometry,
        "doppler": doppler,
        "g_p": f.g_p,
        "g_c": f.g_c,
        "ln_g_p": f.ln_g_p,
        "ln_g_c": f.ln_g_c,
        "log_form": f.log_form,
        "e_p": complex(f.e_p),
        "e_c_conj": complex(f.e_c_conj),
        "chi": {
            "pp": complex(t.chi.chi_pp), "cc": complex(t.chi.chi_cc),
            "pc": complex(t.chi.chi_pc), "cp": complex(t.chi.chi_cp),
        },
        "coupling_per_m": {
            "a_pp": complex(c.a_pp), "a_pc": complex(c.a_pc),
            "a_cp": complex(c.a_cp), "a_cc": complex(c.a_cc),
            "dkz": c.dkz,
        },
    });
    Ok(Outputs {
        files: vec![write_json(out.join("propagate.json"), &doc)?],
        summary: json!({"g_p": f.g_p, "g_c": f.g_c}),
    })
}

pub fn gainmap(cfg: &Config, out: &Path) -> Result<Outputs> {
    cfg.check_keys("gainmap", &["delta_axis", "second_axis", "doppler"])?;
    let p = params(cfg)?;
    let map = gain_map(&p, &cfg.axis("delta_axis")?, &cfg.second_axis()?, &cfg.doppler()?)?;
    let csv = out.join("gainmap.csv");
    let meta = out.join("gainmap.json");
    map.write(&csv, &meta)?;
    let peak = |g| lambda4wm_core::sweep::GainMap::peak(g).map(|(v, _, _)| v);
    Ok(Outputs {
        files: vec![csv, meta],
        summary: json!({
            "cells": map.delta_axis.len() * map.second_axis.values().len(),
            "failed_cells": map.failures.len(),
            "peak_g_p": peak(&map.gp_grid),
            "peak_g_c": peak(&map.gc_grid),
        }),
    })
}

pub fn doppler_gain(cfg: &Config, out: &Path) -> Result<Outputs> {
    cfg.check_keys("doppler-gain", &["delta_axis", "theta_deg", "doppler"])?;
    let p = params(cfg)?;
    let deltas = cfg.axis("delta_axis")?;
    let theta = cfg.get::<f64>("theta_deg")?.unwrap_or(0.0);
    let averaged = DopplerConfig {
        enabled: true,
        ..cfg.get::<DopplerConfig>("doppler")?.unwrap_or_default()
    };
    averaged.validate()?;
    let bare = DopplerConfig::disabled();
    let geometry = Geometry::Angle(theta.to_radians());
    let rows = deltas
        .par_iter()
        .map(|&d| {
            let b = solve_twin_beam(&p, d, geometry, &bare)?.fields;
            let a = solve_twin_beam(&p, d, geometry, &averaged)?.fields;
            Ok([b.g_p, b.g_c, a.g_p, a.g_c])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("delta_gamma,g_p,g_c,g_p_doppler,g_c_doppler\n");
    for (d, r) in deltas.iter().zip(&rows) {
        csv.push_str(&format_float(*d));
        for v in r {
            let _ = write!(csv, ",{}", format_float(*v));
        }
        csv.push('\n');
    }
    Ok(Outputs {
        files: vec![write(out.join("doppler_gain.csv"), &csv)?],
        summary: json!({"points": deltas.len(), "theta_deg": theta, "doppler": averaged}),
    })
}

pub fn fit(cfg: &Config, out: &Path) -> Result<Outputs> {
    cfg.check_keys("fit", &["data", "free", "bounds", "options", "doppler"])?;
    let initial = params(cfg)?;
    let data_path = cfg.resolve(&cfg.require::<PathBuf>("data")?);
    let data = load_gain_data(&data_path)?;
    let free = cfg
        .get::<Vec<FitParameter>>("free")?
        .unwrap_or_else(|| FitParameter::ALL.to_vec());
    let bounds = cfg.get::<FitBounds>("bounds")?.unwrap_or_default();
    let options = cfg.get::<FitOptions>("options")?.unwrap_or_default();
    let result = fit_model(&data, &initial, &free, &bounds, &cfg.doppler()?, &options)?;
    let mut doc = serde_json::to_value(&result)?;
    doc["objective"] = json!(result.objective());
    doc["data"] = json!(data_path);
    doc["records"] = json!(data.records.len());
    doc["fitted_config"] = Value::Object(result.params_out.to_config());
    Ok(Outputs {
        files: vec![write_json(out.join("fit.json"), &doc)?],
        summary: json!({
            "status": result.status,
            "iterations": result.iterations,
            "objective": result.objective(),
        }),
    })
}

pub fn oracle(cfg: &Config, out: &Path) -> Result<Outputs> {
    cfg.check_keys("oracle", &["delta_gamma", "oracle"])?;
    let p = params(cfg)?;
    let delta: f64 = cfg.require("delta_gamma")?;
    let oc = cfg.get::<OracleConfig>("oracle")?.unwrap_or_default();
    let extraction = extract_susceptibilities(&p, delta, &oc)?;
    let seed = Complex64::from_polar(oc.seed_fraction * p.omega_rabi, oc.seed_phase);
    let steady = evolve_to_steady_state(&p, delta, seed, Complex64::new(0.0, 0.0), &oc)?;
    let sigma: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|r| (0..4).map(|c| [steady.state.sigma[(r, c)].re, steady.state.sigma[(r, c)].im]).collect())
        .collect();
    let closed = susceptibilities(&p, delta)?;
    let deviation = extraction.chi.max_relative_difference(&closed);
    let doc = json!({
        "delta_gamma": delta,
        "oracle": oc,
        "probe_seeded_steady_state": {
            "sigma_rows_re_im": sigma,
            "populations": steady.state.populations(),
            "residual": steady.residual,
            "steps": steady.steps,
            "time_gamma": steady.time,
        },
        "extraction": extraction,
        "closed_form_chi": closed,
        "max_relative_difference": deviation,
    });
    Ok(Outputs {
        files: vec![write_json(out.join("oracle.json"), &doc)?],
        summary: json!({"max_relative_difference": deviation}),
    })
}
