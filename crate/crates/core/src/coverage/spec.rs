//! Region files for the command-line planner.

use super::{CoverageError, Heightmap, Region};
use crate::geometry::{ObstacleBoundary, Vec2};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Counter-clockwise or clockwise simple polygon (m).
    pub outline: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heightmap: Option<Heightmap>,
    /// Permitted flying altitudes `[min, max]` above the datum (m).
    #[serde(default = "default_band")]
    pub altitude_band: [f64; 2],
    /// Minimum distance between any two waypoints (m).
    pub separation_margin: f64,
    /// Minimum height of a waypoint above the ground below it (m).
    pub clearance_margin: f64,
}

fn default_band() -> [f64; 2] {
    [0.0, 500.0]
}

impl RegionSpec {
    pub fn from_json(text: &str) -> Result<Self, CoverageError> {
        serde_json::from_str(text).map_err(|e| CoverageError::InvalidParameter(format!("region file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CoverageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoverageError::InvalidParameter(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn region(&self) -> Result<Region, CoverageError> {
        let outline = ObstacleBoundary::from_vertices(self.outline.iter().map(|p| Vec2::from(*p)).collect())?;
        Region::new(outline, self.heightmap.clone())
    }
}
