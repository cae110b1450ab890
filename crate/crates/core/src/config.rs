//! Pipeline configuration, serialized as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blending::BlendSchedule;
use crate::error::{Error, Result};
use crate::partition::{grid_from_cuts, PartitionGrid};

/// All tunables of the stitching pipeline. The defaults are the paper
/// values: a 3×5 partition grid, 5/2-pixel padding, cubic registration
/// sampled every degree, γ = 1e−4, damping 0.5, 1024×989 views, and the
/// automatic pyramid schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub azimuth_cuts: Vec<f64>,
    pub zenith_cuts: Vec<f64>,
    pub pad_x: usize,
    pub pad_y: usize,
    pub registration_degree: u8,
    pub sample_step_deg: f64,
    pub gamma: f64,
    pub omega: f64,
    /// Per-level stop threshold as a fraction of the initial residual.
    pub residual_stop: f64,
    /// Custom pyramid levels (width, height), coarse to fine. Empty means
    /// the automatic schedule.
    pub schedule_levels: Vec<[usize; 2]>,
    /// Iteration budgets matching `schedule_levels`.
    pub schedule_iterations: Vec<usize>,
    /// Convert planar view depth to ray range when warping into the
    /// panorama. Perspective estimators emit planar depth while panoramas
    /// store range; disable to pass values through untouched.
    pub z_to_range: bool,
    /// Wrap the blend Laplacian across the azimuth seam.
    pub wrap_laplacian: bool,
    pub view_width: usize,
    pub view_height: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            azimuth_cuts: vec![0.0, 72.0, 144.0, 216.0, 288.0],
            zenith_cuts: vec![25.0, 60.0, 120.0, 155.0],
            pad_x: 5,
            pad_y: 2,
            registration_degree: 3,
            sample_step_deg: 1.0,
            gamma: 1e-4,
            omega: 0.5,
            residual_stop: 1e-3,
            schedule_levels: Vec::new(),
            schedule_iterations: Vec::new(),
            z_to_range: true,
            wrap_laplacian: false,
            view_width: 1024,
            view_height: 989,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.partition_grid()?;
        if !(1..=3).contains(&self.registration_degree) {
            return Err(Error::Config(format!(
                "registration degree {} not in 1..=3",
                self.registration_degree
            )));
        }
        if !(self.sample_step_deg > 0.0) {
            return Err(Error::Config("sample_step_deg must be positive".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config("omega must lie in (0, 1]".into()));
        }
        if self.schedule_levels.len() != self.schedule_iterations.len() {
            return Err(Error::Config(
                "schedule_levels and schedule_iterations lengths differ".into(),
            ));
        }
        if self.view_width == 0 || self.view_height == 0 {
            return Err(Error::Config("view dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn partition_grid(&self) -> Result<PartitionGrid> {
        grid_from_cuts(&self.azimuth_cuts, &self.zenith_cuts)
    }

    /// The blend schedule for a working resolution: the configured custom
    /// levels, or the automatic pyramid when none are set.
    pub fn blend_schedule(&self, width: usize, height: usize) -> Result<BlendSchedule> {
        let schedule = if self.schedule_levels.is_empty() {
            BlendSchedule::auto(width, height, self.gamma, self.omega, self.residual_stop)
        } else {
            BlendSchedule {
                levels: self.schedule_levels.iter().map(|&[w, h]| (w, h)).collect(),
                iterations: self.schedule_iterations.clone(),
                gamma: self.gamma,
                omega: self.omega,
                residual_stop: self.residual_stop,
            }
        };
        schedule.validate(width, height)?;
        Ok(schedule)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_toml_str(&text)
    }
}
