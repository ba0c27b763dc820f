//! JSON run configuration shared by the CLI and the C interface.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmoments::MeasureSpec;
use crate::hierarchy::HierarchyConfig;
use crate::relaxation::Metric;
use crate::sdp::SolverOptions;
use crate::semialg::SetSpec;

/// On-disk run configuration. Only `measure` and `set` are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub measure: MeasureSpec,
    pub set: SetSpec,
    #[serde(default)]
    pub metric: Option<Metric>,
    #[serde(default)]
    pub n_min: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub verify_extra_degrees: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub eps_rank: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// W1 window half-width.
    #[serde(default)]
    pub y_box: Option<f64>,
    /// Directory for `report.json` and `trace.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path`; relative sample and output paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.measure.resolve_paths(dir);
            if let Some(out) = &cfg.output {
                if out.is_relative() {
                    cfg.output = Some(dir.join(out));
                }
            }
        }
        Ok(cfg)
    }

    pub fn hierarchy(&self) -> Result<HierarchyConfig> {
        let set = self.set.build().map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = HierarchyConfig::new(self.measure.clone(), set);
        if let Some(m) = self.metric {
            cfg.metric = m;
        }
        if let Some(n) = self.n_max {
            cfg.n_max = n;
        }
        if let Some(n) = self.n_min {
            cfg.n_min = n;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(j) = self.verify_extra_degrees {
            cfg.verify_extra_degrees = j;
        }
        let defaults = SolverOptions::default();
        cfg.solver = SolverOptions {
            tol: self.tol.unwrap_or(defaults.tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            seed: self.seed.unwrap_or(defaults.seed),
        };
        if let Some(e) = self.eps_rank {
            cfg.eps_rank = e;
        }
        cfg.y_box = self.y_box;
        Ok(cfg)
    }
}
