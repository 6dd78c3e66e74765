//! Job configuration: a flat JSON object of model keys plus the run keys of
//! one subcommand, with `--set` overrides layered on top.

use std::path::{Path, PathBuf};

use lambda4wm_core::doppler::DopplerConfig;
use lambda4wm_core::params::model_keys;
use lambda4wm_core::sweep::{linspace, SecondAxis};
use lambda4wm_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidField {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Merged configuration document and where it came from.
#[derive(Clone, Debug)]
pub struct Config {
    pub path: PathBuf,
    pub doc: Map<String, Value>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc = match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(doc)) => doc,
            Ok(_) => {
                return Err(Error::Data {
                    path: path.to_path_buf(),
                    message: "config must be a JSON object".into(),
                })
            }
            Err(e) => {
                return Err(Error::Data {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })
            }
        };
        Ok(Config {
            path: path.to_path_buf(),
            doc,
        })
    }

    /// Applies `key=value` overrides. Dotted keys reach into nested objects;
    /// values are read as JSON when possible and as strings otherwise.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| invalid("--set", format!("expected key=value, got `{item}`")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut parts: Vec<&str> = key.split('.').collect();
            let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| invalid("--set", "empty key"))?;
            let mut node = &mut self.doc;
            for part in parts {
                let entry = node.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
                node = entry
                    .as_object_mut()
                    .ok_or_else(|| invalid(key, format!("`{part}` is not an object")))?;
            }
            node.insert(last.to_string(), value);
        }
        Ok(())
    }

    /// Rejects keys that are neither model parameters nor in `run_keys`.
    pub fn check_keys(&self, command: &str, run_keys: &[&str]) -> Result<()> {
        let model = model_keys();
        for key in self.doc.keys() {
            if !model.iter().any(|k| k == key) && !run_keys.contains(&key.as_str()) {
                return Err(invalid(
                    key.as_str(),
                    format!("unknown key for `{command}` (run keys: {})", run_keys.join(", ")),
                ));
            }
        }
        Ok(())
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.doc.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| invalid(key, e.to_string())),
        }
    }

    pub fn require<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::MissingField(key.to_string()))
    }

    /// `doppler` section; averaging is off when the section is absent.
    pub fn doppler(&self) -> Result<DopplerConfig> {
        let cfg = self.get::<DopplerConfig>("doppler")?.unwrap_or_else(DopplerConfig::disabled);
        if cfg.enabled {
            cfg.validate()?;
        }
        Ok(cfg)
    }

    /// Resolves a path relative to the directory of the config file.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(path)
        }
    }

    pub fn axis(&self, key: &str) -> Result<Vec<f64>> {
        self.require::<AxisSpec>(key)?.values(key)
    }

    /// `second_axis`: an axis spec plus `"kind": "theta_deg" | "dkz_rad_m"`.
    pub fn second_axis(&self) -> Result<SecondAxis> {
        let mut spec = self.require::<Map<String, Value>>("second_axis")?;
        let kind = spec.remove("kind").ok_or_else(|| Error::MissingField("second_axis.kind".into()))?;
        let values = serde_json::from_value::<AxisSpec>(Value::Object(spec))
            .map_err(|e| invalid("second_axis", e.to_string()))?
            .values("second_axis")?;
        match kind.as_str() {
            Some("theta_deg") => Ok(SecondAxis::ThetaDeg(values)),
            Some("dkz_rad_m") => Ok(SecondAxis::DkzRadM(values)),
            _ => Err(invalid("second_axis.kind", format!("expected \"theta_deg\" or \"dkz_rad_m\", got {kind}"))),
        }
    }
}

/// Either evenly spaced points or an explicit list.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum AxisSpec {
    Range { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl AxisSpec {
    fn values(self, key: &str) -> Result<Vec<f64>> {
        match self {
            AxisSpec::Range { start, stop, points } => {
                if points == 0 {
                    return Err(invalid(key, "points must be >= 1"));
                }
                Ok(linspace(start, stop, points))
            }
            AxisSpec::Values { values } => Ok(values),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn config(doc: Value) -> Config {
        Config {
            path: PathBuf::from("/tmp/run/config.json"),
            doc: doc.as_object().unwrap().clone(),
        }
    }

    #[test]
    fn overrides_replace_and_nest() {
        let mut c = config(json!({"omega_rabi_gamma": 60.0, "doppler": {"nodes": 64}}));
        c.apply_overrides(&["omega_rabi_gamma=70".into(), "doppler.nodes=32".into(), "data=gains.csv".into()])
            .unwrap();
        assert_eq!(c.doc["omega_rabi_gamma"], json!(70));
        assert_eq!(c.doc["doppler"]["nodes"], json!(32));
        assert_eq!(c.doc["data"], json!("gains.csv"));
        assert!(c.apply_overrides(&["novalue".into()]).is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let c = config(json!({"omega_rabi_gamma": 60.0, "delta_axes": {}}));
        let err = c.check_keys("chi", &["delta_axis"]).unwrap_err();
        assert!(err.to_string().contains("delta_axes"));
    }

    #[test]
    fn axis_forms() {
        let c = config(json!({
            "a": {"start": 0.0, "stop": 1.0, "points": 3},
            "b": {"values": [2.0, 1.0]},
            "second_axis": {"kind": "dkz_rad_m", "values": [0.0, 5.0]}
        }));
        assert_eq!(c.axis("a").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(c.axis("b").unwrap(), vec![2.0, 1.0]);
        assert_eq!(c.second_axis().unwrap(), SecondAxis::DkzRadM(vec![0.0, 5.0]));
        assert!(c.axis("missing").is_err());
    }

    #[test]
    fn relative_paths_follow_config() {
        let c = config(json!({}));
        assert_eq!(c.resolve(Path::new("gains.csv")), PathBuf::from("/tmp/run/gains.csv"));
        assert_eq!(c.resolve(Path::new("/data/g.csv")), PathBuf::from("/data/g.csv"));
    }
}
