//! Run configuration: one flat table of model, grid and run keys, read from
//! TOML or JSON and patched by `key=value` overrides.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{validate_config, GridConfig, ModelParams, ValidatedConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha_deg: f64,
    pub alpha_frac: f64,
    pub wp: f64,
    pub rho: f64,
    pub n_x: usize,
    pub n_xi: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Energy samples are recorded every this many steps.
    pub output_every: usize,
    /// Start of the decay-fit window; `None` means the final decade.
    pub fit_t_start: Option<f64>,
    /// Index range for the characteristic-equation spectrum.
    pub k_min: usize,
    pub k_max: usize,
    /// Index range whose eigenvalues locate the resolvent peaks.
    pub resolvent_k_min: usize,
    pub resolvent_k_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GridConfig::default();
        RunConfig {
            alpha_deg: 0.5,
            alpha_frac: 0.5,
            wp: 1.0,
            rho: 1.0,
            n_x: g.n_x,
            n_xi: g.n_xi,
            xi_min: g.xi_min,
            xi_max: g.xi_max,
            dt: g.dt,
            t_final: g.t_final,
            output_every: 100,
            fit_t_start: None,
            k_min: 1,
            k_max: 40,
            resolvent_k_min: 5,
            resolvent_k_max: 30,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// `.json` files are JSON, anything else is TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            alpha_deg: self.alpha_deg,
            alpha_frac: self.alpha_frac,
            wp: self.wp,
            rho: self.rho,
        }
    }

    pub fn grid(&self) -> GridConfig {
        GridConfig {
            n_x: self.n_x,
            n_xi: self.n_xi,
            xi_min: self.xi_min,
            xi_max: self.xi_max,
            dt: self.dt,
            t_final: self.t_final,
        }
    }

    pub fn validate(&self) -> Result<ValidatedConfig> {
        if self.output_every == 0 {
            return Err(Error::param("output_every", "must be >= 1"));
        }
        if self.k_min == 0 || self.k_max < self.k_min {
            return Err(Error::param(
                "k_min",
                format!(
                    "need 1 <= k_min <= k_max, got {}..{}",
                    self.k_min, self.k_max
                ),
            ));
        }
        if self.resolvent_k_min == 0 || self.resolvent_k_max < self.resolvent_k_min {
            return Err(Error::param(
                "resolvent_k_min",
                format!(
                    "need 1 <= resolvent_k_min <= resolvent_k_max, got {}..{}",
                    self.resolvent_k_min, self.resolvent_k_max
                ),
            ));
        }
        validate_config(&self.model_params(), &self.grid())
    }

    /// Applies `key=value`. Keys may carry a `model.`, `grid.` or `run.`
    /// prefix; values are parsed as JSON scalars and type-checked.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bare = ["model.", "grid.", "run."]
            .iter()
            .find_map(|p| key.strip_prefix(p))
            .unwrap_or(key);
        let mut obj = serde_json::to_value(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let map = obj.as_object_mut().expect("struct serializes to an object");
        if !map.contains_key(bare) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        let v: serde_json::Value = serde_json::from_str(value.trim())
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as a number")))?;
        map.insert(bare.to_string(), v);
        *self = serde_json::from_value(obj).map_err(|e| Error::Config(format!("`{key}`: {e}")))?;
        Ok(())
    }

    /// Applies a `key=value` string.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_takes_defaults() {
        let c = RunConfig::from_toml_str("alpha_frac = 0.75\nn_x = 128\n").unwrap();
        assert_eq!(c.alpha_frac, 0.75);
        assert_eq!(c.n_x, 128);
        assert_eq!(c.rho, 1.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("alpha = 0.5\n").is_err());
        assert!(RunConfig::from_json_str(r#"{"beta": 1}"#).is_err());
        let mut c = RunConfig::default();
        assert!(c.set("model.gamma", "1").is_err());
    }

    #[test]
    fn dotted_overrides() {
        let mut c = RunConfig::default();
        c.apply_override("model.alpha_frac=0.25").unwrap();
        c.apply_override("grid.n_x = 64").unwrap();
        c.apply_override("dt=2e-4").unwrap();
        assert_eq!((c.alpha_frac, c.n_x, c.dt), (0.25, 64, 2e-4));
        assert!(c.apply_override("n_x=1.5").is_err());
        assert!(c.apply_override("rho=abc").is_err());
        assert!(c.apply_override("rho").is_err());
    }

    #[test]
    fn validation_catches_bad_model() {
        let c = RunConfig {
            rho: -1.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            alpha_frac: 0.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig {
            fit_t_start: Some(50.0),
            ..RunConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json_str(&s).unwrap(), c);
    }
}
