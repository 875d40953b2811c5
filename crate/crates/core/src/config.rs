//! JSON run configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{Architecture, RunOptions};
use crate::graph::{load_edge_list, preset, Graph, GraphError};
use crate::mapper::HardwareConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("parsing {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A Table-style preset, synthesized with the run seed.
    Preset(String),
    EdgeList {
        path: PathBuf,
        num_nodes: usize,
        feature_dims: Vec<usize>,
    },
}

impl DatasetSource {
    pub fn label(&self) -> String {
        match self {
            DatasetSource::Preset(name) => name.clone(),
            DatasetSource::EdgeList { path, .. } => path.display().to_string(),
        }
    }

    pub fn load(&self, seed: u64) -> Result<Graph, GraphError> {
        match self {
            DatasetSource::Preset(name) => preset(name)?.synthesize(seed),
            DatasetSource::EdgeList { path, num_nodes, feature_dims } => {
                load_edge_list(path, *num_nodes, feature_dims.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub uniform_p1: Option<f64>,
    pub uniform_p2: Option<f64>,
    pub nodes: Option<u64>,
    pub act_sum: Option<f64>,
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    /// CE count whose measured mean probabilities feed the convexity check.
    pub reference_k: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<DatasetSource>,
    pub seed: u64,
    pub hardware: HardwareConfig,
    pub run: RunOptions,
    pub k: Option<u32>,
    pub architectures: Option<Vec<Architecture>>,
    /// Mesh sizes for `sweep`, e.g. `"3x3..10x10"` or `"4x4,6x6"`.
    pub sizes: Option<String>,
    pub optimize: OptimizeSection,
    /// Per-command default when unset.
    pub format: Option<OutputFormat>,
    pub output: Option<PathBuf>,
    pub no_timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            seed: 1,
            hardware: HardwareConfig::default(),
            run: RunOptions::default(),
            k: None,
            architectures: None,
            sizes: None,
            optimize: OptimizeSection::default(),
            format: None,
            output: None,
            no_timestamp: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), msg: e.to_string() })?;
        Self::from_json(&text).map_err(|e| match e {
            ConfigError::Invalid(msg) => ConfigError::Parse { path: path.to_path_buf(), msg },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn dataset(&self) -> Result<&DatasetSource, ConfigError> {
        self.dataset
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("no dataset given (use --dataset or --edge-list)".into()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.hardware.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.run.trace.max_packet_bits == 0 {
            return Err(ConfigError::Invalid("max_packet_bits must be positive".into()));
        }
        if let Some(DatasetSource::Preset(name)) = &self.dataset {
            preset(name)?;
        }
        Ok(())
    }
}

/// Parses `WxH`, `AxA..BxB` (square sizes from A to B) or a comma list of
/// either.
pub fn parse_sizes(spec: &str) -> Result<Vec<(u32, u32)>, ConfigError> {
    let bad = || ConfigError::Invalid(format!("bad mesh size list {spec:?}"));
    let one = |s: &str| -> Result<(u32, u32), ConfigError> {
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let (w, h) = (w.parse::<u32>().map_err(|_| bad())?, h.parse::<u32>().map_err(|_| bad())?);
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok((w, h))
    };
    let mut out = Vec::new();
    for part in spec.split(',') {
        match part.split_once("..") {
            Some((lo, hi)) => {
                let ((lw, lh), (hw, hh)) = (one(lo)?, one(hi)?);
                if lw != lh || hw != hh || lw > hw {
                    return Err(bad());
                }
                out.extend((lw..=hw).map(|s| (s, s)));
            }
            None => out.push(one(part)?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
