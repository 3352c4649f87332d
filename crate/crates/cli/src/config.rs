//! Run configuration: one flat TOML table holding both the feature and the
//! training keys.
//!
//! ```toml
//! frame_ms = 23.0
//! domains = ["time", "frequency", "cepstral"]
//! learning_rate = 0.05
//! n_estimators = 100
//! split = "random"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use timbre_core::{FeatureConfig, TrainConfig};

use crate::error::{CliError, CliResult};

/// Where the train/test assignment comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSource {
    /// Seeded shuffle of all rows.
    #[default]
    Random,
    /// The manifest's `subset` column; rows marked `test` are held out.
    Subset,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub split: SplitSource,
}

const SPLIT_KEY: &str = "split";

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut feature_keys = toml::Table::new();
        let mut train_keys = toml::Table::new();
        let mut split = SplitSource::default();
        for (key, value) in table {
            if FeatureConfig::KEYS.contains(&key.as_str()) {
                feature_keys.insert(key, value);
            } else if TrainConfig::KEYS.contains(&key.as_str()) {
                train_keys.insert(key, value);
            } else if key == SPLIT_KEY {
                split = value
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::Config(format!("split: {e}")))?;
            } else {
                return Err(CliError::Config(format!("unknown config key {key:?}")));
            }
        }
        let features: FeatureConfig = toml::Value::Table(feature_keys)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let train: TrainConfig = toml::Value::Table(train_keys)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        features.validate().map_err(|e| CliError::Config(e.to_string()))?;
        train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { features, train, split })
    }

    /// Reads a config file; `None` gives the defaults.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml_str(&text)
            }
        }
    }
}
