//! Experiment configuration files.
//!
//! ```toml
//! [model]
//! a = 1.0
//! b = 1.0
//! gamma = [0.25, 0.5, 1.0]
//! orientation = "aligned"
//!
//! [domain]
//! side = 4.0
//! boundary = "torus"
//!
//! [run]
//! replications = 100000
//! seed = 1
//! ```
//!
//! Every section except `[model]` may be omitted; unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WindowBoundary;
use crate::rng;
use crate::simulate::{BoundaryMode, ModelSpec, Orientation};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub histogram: HistogramSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Long side of the rectangle.
    pub a: f64,
    /// Short side, `b <= a`.
    pub b: f64,
    /// Intensity sweep; every entry is a separate experiment.
    pub gamma: Vec<f64>,
    #[serde(default = "default_orientation")]
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Torus,
    MinusSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    Exclude,
    Include,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub side: f64,
    pub boundary: BoundaryKind,
    /// Minus-sampling margin; defaults to the grain circumradius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Whether window-frame boundary counts towards `v1` in minus sampling.
    #[serde(default = "default_frame")]
    pub frame: FrameKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub replications: usize,
    pub seed: u64,
    pub bootstrap: usize,
    pub bootstrap_seed: u64,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub z_threshold: f64,
    /// Below this many replications the report flags insufficient statistics.
    pub min_replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSection {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

fn default_orientation() -> Orientation {
    Orientation::Aligned
}

fn default_frame() -> FrameKind {
    FrameKind::Exclude
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            side: 4.0,
            boundary: BoundaryKind::Torus,
            margin: None,
            frame: FrameKind::Exclude,
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            replications: 1000,
            seed: 1,
            bootstrap: stats::DEFAULT_BOOTSTRAP,
            bootstrap_seed: 2,
            workers: None,
        }
    }
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            z_threshold: 4.0,
            min_replications: 1000,
        }
    }
}

impl Default for HistogramSection {
    fn default() -> Self {
        Self {
            lo: stats::DEFAULT_RANGE.0,
            hi: stats::DEFAULT_RANGE.1,
            bins: stats::DEFAULT_BINS,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl Default for RunConfig {
    /// Aligned unit squares on the torus of side 4.
    fn default() -> Self {
        Self {
            model: ModelSection {
                a: 1.0,
                b: 1.0,
                gamma: vec![0.25, 0.5, 1.0],
                orientation: Orientation::Aligned,
            },
            domain: DomainSection::default(),
            run: RunSection::default(),
            validate: ValidateSection::default(),
            histogram: HistogramSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.b > m.a {
            return Err(Error::InvalidModel(format!(
                "b = {} exceeds a = {}; swap them so that b <= a",
                m.b, m.a
            )));
        }
        if self.histogram.bins == 0 || !(self.histogram.lo < self.histogram.hi) {
            return Err(Error::Config("histogram needs bins > 0 and lo < hi".into()));
        }
        if !(self.validate.z_threshold > 0.0) {
            return Err(Error::Config("z_threshold must be positive".into()));
        }
        if m.orientation == Orientation::Isotropic && self.domain.boundary == BoundaryKind::Torus {
            return Err(Error::Config(
                "isotropic grains need boundary = \"minus-sampling\"".into(),
            ));
        }
        for (k, g) in m.gamma.iter().enumerate() {
            if m.gamma[..k].contains(g) {
                return Err(Error::Config(format!("intensity {g} is listed twice")));
            }
            self.spec(k)?.validate()?;
        }
        Ok(())
    }

    /// The experiment for the `k`-th intensity. Each intensity draws from its
    /// own seed derived from `run.seed`.
    pub fn spec(&self, k: usize) -> Result<ModelSpec> {
        let m = &self.model;
        let gamma = *m
            .gamma
            .get(k)
            .ok_or_else(|| Error::Config(format!("no intensity with index {k}")))?;
        let seed = rng::mix(self.run.seed, k as u64);
        let d = &self.domain;
        let mut spec = match d.boundary {
            BoundaryKind::Torus => ModelSpec::torus(m.a, m.b, gamma, d.side, self.run.replications, seed),
            BoundaryKind::MinusSampling => {
                ModelSpec::minus_sampling(m.a, m.b, gamma, m.orientation, d.side, self.run.replications, seed)
            }
        };
        spec.orientation = m.orientation;
        if let BoundaryMode::MinusSampling { margin, frame } = &mut spec.boundary {
            if let Some(user) = d.margin {
                *margin = user;
            }
            *frame = match d.frame {
                FrameKind::Exclude => WindowBoundary::Exclude,
                FrameKind::Include => WindowBoundary::Include,
            };
        }
        Ok(spec)
    }

    pub fn specs(&self) -> Result<Vec<ModelSpec>> {
        (0..self.model.gamma.len()).map(|k| self.spec(k)).collect()
    }
}
