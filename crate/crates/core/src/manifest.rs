//! The view manifest: the file-based handoff between the partitioner and
//! external perspective depth estimators.
//!
//! `partition` writes a manifest naming, for every partition, the rendered
//! RGB view and the depth file an estimator must produce; `stitch` reads it
//! back. The file is TOML with a pinned `schema` version field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::spherical::SphericalDirection;
use crate::view::PerspectiveView;

pub const MANIFEST_SCHEMA: &str = "pano-stitch-manifest/v1";

/// Which space the per-partition depth files live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthSpace {
    /// Perspective rasters at each entry's view size (external estimators).
    View,
    /// Full-canvas equirectangular maps, valid on the padded partition
    /// rectangle (synthetic fixtures).
    Equirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub index: usize,
    /// Partition bounds `[phi0, phi1, theta0, theta1]` in degrees.
    pub partition: [f64; 4],
    pub center_azimuth_deg: f64,
    pub center_zenith_deg: f64,
    pub fov_x_deg: f64,
    pub fov_y_deg: f64,
    pub view_width: usize,
    pub view_height: usize,
    pub rgb_file: String,
    pub depth_file: String,
}

impl ViewEntry {
    pub fn partition(&self) -> Result<Partition> {
        let [phi0, phi1, theta0, theta1] = self.partition;
        Partition::new(phi0, phi1, theta0, theta1)
    }

    pub fn view(&self) -> Result<PerspectiveView> {
        PerspectiveView::new(
            SphericalDirection::new(self.center_azimuth_deg, self.center_zenith_deg)?,
            self.fov_x_deg,
            self.fov_y_deg,
            self.view_width,
            self.view_height,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewManifest {
    pub schema: String,
    /// Working equirectangular canvas.
    pub width: usize,
    pub height: usize,
    /// Padding (pixels) the views were solved to cover.
    pub pad_x: usize,
    pub pad_y: usize,
    pub depth_space: DepthSpace,
    pub entries: Vec<ViewEntry>,
}

impl ViewManifest {
    pub fn validate(&self) -> Result<()> {
        if self.schema != MANIFEST_SCHEMA {
            return Err(Error::Manifest(format!(
                "schema {:?} is not {MANIFEST_SCHEMA:?}",
                self.schema
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Manifest("canvas dimensions must be positive".into()));
        }
        if self.entries.is_empty() {
            return Err(Error::Manifest("manifest has no entries".into()));
        }
        let mut names: Vec<&str> = self
            .entries
            .iter()
            .flat_map(|e| [e.rgb_file.as_str(), e.depth_file.as_str()])
            .collect();
        names.sort_unstable();
        for pair in names.windows(2) {
            if pair[0] == pair[1] && !pair[0].is_empty() {
                return Err(Error::Manifest(format!("duplicate file name {:?}", pair[0])));
            }
        }
        for (k, entry) in self.entries.iter().enumerate() {
            if entry.index != k {
                return Err(Error::Manifest(format!(
                    "entry {k} carries index {}",
                    entry.index
                )));
            }
            entry.partition()?;
            entry.view()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let manifest: Self =
            toml::from_str(text).map_err(|e| Error::Manifest(format!("bad manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_toml_string(&self) -> String {
        let header = format!("# {MANIFEST_SCHEMA}\n");
        header + &toml::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(&path, self.to_toml_string()).map_err(|e| Error::io(&path, e))
    }
}
