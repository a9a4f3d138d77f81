//! TOML run configuration: a `[model]` section plus optional per-scheme
//! sections.  Unknown keys are hard errors.

use serde::Deserialize;

use crate::error::{Result, SolverError};
use crate::models::{ModelConfig, ModelId};
use crate::pde::SplitOrder;
use crate::tree::TreeMode;

/// Baked-in default run: the reference `f1` experiment.
pub const DEFAULT_CONFIG_TOML: &str = r#"
[model]
model = "f1"

[fd]
n = 100

[proba]
n = 50
paths = 200000
seed = 42
degree = 2

[pde]
n = 100
order = "hjb-advect"

[tree]
n = 3
mode = "explicit"

[sweep]
dt = [0.05, 0.02, 0.01]
schemes = ["fd", "pde"]
seeds = [42]
"#;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub fd: FdSection,
    #[serde(default)]
    pub proba: ProbaSection,
    #[serde(default)]
    pub pde: PdeSection,
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// One of `f1`, `f2`, `zero`, `custom`.
    pub model: String,
    pub x0: Option<f64>,
    pub t: Option<f64>,
    pub a_lo: Option<f64>,
    pub a_hi: Option<f64>,
    pub control_grid: Option<usize>,
    pub k_lo: Option<f64>,
    pub k_hi: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub b: Option<f64>,
    pub zeta: Option<f64>,
    pub x_cap: Option<f64>,
    pub z_box: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSection {
    pub n: usize,
    pub x_half_span_stds: Option<f64>,
    pub dx: Option<f64>,
    pub dm: Option<f64>,
    pub m_half_span: Option<f64>,
}

impl Default for FdSection {
    fn default() -> Self {
        Self {
            n: 100,
            x_half_span_stds: None,
            dx: None,
            dm: None,
            m_half_span: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbaSection {
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
    pub degree: usize,
}

impl Default for ProbaSection {
    fn default() -> Self {
        Self {
            n: 50,
            paths: 200_000,
            seed: 42,
            degree: 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub n: usize,
    pub order: String,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            n: 100,
            order: "hjb-advect".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub n: usize,
    pub mode: String,
}

impl Default for TreeSection {
    fn default() -> Self {
        Self {
            n: 3,
            mode: "explicit".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Strictly decreasing list of time steps.
    pub dt: Vec<f64>,
    /// Subset of `fd`, `proba`, `pde`, `tree`.
    pub schemes: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub paths: Option<usize>,
    pub degree: Option<usize>,
}

fn default_seeds() -> Vec<u64> {
    vec![42]
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SolverError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SolverError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn default_run() -> Self {
        Self::parse(DEFAULT_CONFIG_TOML).expect("builtin config parses")
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let id = ModelId::parse(&self.model.model)?;
        let mut cfg = match id {
            ModelId::F1 => ModelConfig::f1_default(),
            ModelId::F2 => ModelConfig::f2_default(),
            ModelId::Zero => ModelConfig::zero_default(),
            ModelId::Custom => ModelConfig::custom_default(),
        };
        let s = &self.model;
        if let Some(v) = s.x0 {
            cfg.x0 = v;
        }
        if let Some(v) = s.t {
            cfg.horizon = v;
        }
        if let Some(v) = s.a_lo {
            cfg.a_lo = v;
        }
        if let Some(v) = s.a_hi {
            cfg.a_hi = v;
        }
        if let Some(v) = s.control_grid {
            cfg.control_grid = v;
        }
        if let Some(v) = s.k_lo {
            cfg.k_lo = v;
        }
        if let Some(v) = s.k_hi {
            cfg.k_hi = v;
        }
        if let Some(v) = s.k1 {
            cfg.k1 = v;
        }
        if let Some(v) = s.k2 {
            cfg.k2 = v;
        }
        if let Some(v) = s.b {
            cfg.b = v;
        }
        if let Some(v) = s.zeta {
            cfg.zeta = v;
        }
        if let Some(v) = s.x_cap {
            cfg.x_cap = v;
        }
        if let Some(v) = s.z_box {
            cfg.z_box = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tree_mode(&self) -> Result<TreeMode> {
        match self.tree.mode.as_str() {
            "implicit" => Ok(TreeMode::Implicit),
            "explicit" => Ok(TreeMode::Explicit),
            other => Err(SolverError::Config(format!(
                "unknown tree mode '{other}' (expected implicit|explicit)"
            ))),
        }
    }

    pub fn split_order(&self) -> Result<SplitOrder> {
        SplitOrder::parse(&self.pde.order)
    }
}
