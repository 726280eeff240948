//! Run configuration: one TOML file, every section optional, with command
//! line overrides applied on top.
//!
//! ```toml
//! parallelism = 8
//!
//! [paths]
//! input = "contracts"
//! output = "results"
//!
//! [filter]
//! score_min = 0.95
//!
//! [graph]
//! immature_rule = "anywhere"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ExtractConfig;
use crate::filter::FilterConfig;
use crate::graph::GraphConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Settings echoed to the external mask producer; the engine itself only
/// records them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    pub points_per_side: u32,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self { points_per_side: 80 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads for batch commands.
    pub parallelism: usize,
    pub paths: PathsConfig,
    pub extract: ExtractConfig,
    pub filter: FilterConfig,
    pub graph: GraphConfig,
    pub adapter: AdapterConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            parallelism: 1,
            paths: PathsConfig::default(),
            extract: ExtractConfig::default(),
            filter: FilterConfig::default(),
            graph: GraphConfig::default(),
            adapter: AdapterConfig::default(),
        }
    }
}

/// Command line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::InvalidConfig("parallelism must be at least 1".into()));
        }
        if self.adapter.points_per_side == 0 {
            return Err(Error::InvalidConfig("adapter.points_per_side must be at least 1".into()));
        }
        self.extract.validate()?;
        self.filter.validate()?;
        self.graph.validate()
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Schema {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, path)
    }

    /// The file at `path` if given, else defaults, then `overrides`.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(i) = &overrides.input {
            cfg.paths.input = Some(i.clone());
        }
        if let Some(o) = &overrides.output {
            cfg.paths.output = Some(o.clone());
        }
        if let Some(n) = overrides.parallelism {
            cfg.parallelism = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}
