//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment, keys are dotted names such
//! as `grid.columns` or `intent.mode`. Unknown keys are kept so that tools
//! layered on top can read their own settings.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{GridSpec, MaskParams, RegionMask, ZoneId};
use crate::intent::IntentMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list value.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    value: s.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        let d = GridSpec::default();
        let spec = GridSpec {
            pitch_length: self.get_or("grid.pitch_length", d.pitch_length)?,
            pitch_width: self.get_or("grid.pitch_width", d.pitch_width)?,
            columns: self.get_or("grid.columns", d.columns)?,
            rows: self.get_or("grid.rows", d.rows)?,
        };
        spec.check().map_err(|e| ConfigError::Invalid {
            key: "grid".into(),
            reason: e.to_string(),
        })?;
        Ok(spec)
    }

    pub fn mask_params(&self) -> Result<MaskParams, ConfigError> {
        let d = MaskParams::default();
        Ok(MaskParams {
            long_distance_max_m: self.get_or("mask.long_distance.max_distance_m", d.long_distance_max_m)?,
            flank_band_m: self.get_or("mask.flank.band_width_m", d.flank_band_m)?,
        })
    }

    /// User-defined masks from `mask.<name>.zones = 1, 2, 3` entries.
    pub fn custom_masks(&self, spec: &GridSpec) -> Result<Vec<RegionMask>, ConfigError> {
        let mut out = Vec::new();
        for key in self.entries.keys() {
            let Some(name) = key.strip_prefix("mask.").and_then(|k| k.strip_suffix(".zones")) else {
                continue;
            };
            let zones: Vec<usize> = self.list(key)?.unwrap_or_default();
            if let Some(bad) = zones.iter().find(|&&z| z == 0 || z >= spec.field_count()) {
                return Err(ConfigError::Invalid {
                    key: key.clone(),
                    reason: format!("zone {bad} is not an offensive-half field state"),
                });
            }
            out.push(RegionMask::new(name, zones.into_iter().map(ZoneId)));
        }
        Ok(out)
    }

    /// Default masks for the configured grid plus any user-defined ones.
    pub fn masks(&self) -> Result<Vec<RegionMask>, ConfigError> {
        let spec = self.grid_spec()?;
        let mut masks = crate::grid::default_masks(&spec, &self.mask_params()?);
        for custom in self.custom_masks(&spec)? {
            masks.retain(|m| m.name != custom.name);
            masks.push(custom);
        }
        Ok(masks)
    }

    pub fn intent_mode(&self) -> Result<IntentMode, ConfigError> {
        let lambda: f64 = self.get_or("intent.lambda", 0.5)?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ConfigError::Invalid {
                key: "intent.lambda".into(),
                reason: "must lie in [0, 1]".into(),
            });
        }
        match self.raw("intent.mode").unwrap_or("blended") {
            "observed_end" => Ok(IntentMode::ObservedEnd),
            "destination_prior" => Ok(IntentMode::DestinationPrior),
            "blended" => Ok(IntentMode::Blended(lambda)),
            other => Err(ConfigError::BadValue {
                key: "intent.mode".into(),
                value: other.into(),
            }),
        }
    }

    pub fn smoothing_alpha(&self) -> Result<f64, ConfigError> {
        let alpha: f64 = self.get_or("model.smoothing_alpha", 0.5)?;
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(ConfigError::Invalid {
                key: "model.smoothing_alpha".into(),
                reason: "must be a non-negative number".into(),
            });
        }
        Ok(alpha)
    }

    /// Relative shooting changes for what-if sweeps.
    pub fn sweep(&self) -> Result<Vec<f64>, ConfigError> {
        let sweep: Vec<f64> = self
            .list("whatif.sweep")?
            .unwrap_or_else(|| vec![-0.2, -0.1, -0.05, 0.05, 0.1, 0.2]);
        if let Some(bad) = sweep
            .iter()
            .find(|x| !x.is_finite() || **x <= -1.0 || **x > crate::policy::MAX_FACTOR)
        {
            return Err(ConfigError::Invalid {
                key: "whatif.sweep".into(),
                reason: format!("{bad} is not in (-1, {}]", crate::policy::MAX_FACTOR),
            });
        }
        Ok(sweep)
    }
}
