//! Run configuration: field dimensions, class alias table, camera-role
//! default positions, solver settings, and tracker thresholds. Serialized as
//! TOML; unknown keys are rejected and every default round-trips through the
//! parser (`--print-config` emits exactly this structure).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldDimensions, FieldElementClass, FieldError};
use crate::optimize::SolverSettings;
use crate::reinit::ReinitSettings;
use crate::tripod::TripodRig;
use crate::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("unknown camera role '{0}'")]
    UnknownRole(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub length_m: f64,
    pub width_m: f64,
    /// Template sampling step for the marking loss, meters.
    pub loss_step_m: f64,
    /// Template sampling step for mask rendering and metric distances, meters.
    pub mask_step_m: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self { length_m: 105.0, width_m: 68.0, loss_step_m: 0.10, mask_step_m: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ClassConfig {
    /// Detector class name → canonical class name.
    pub aliases: BTreeMap<String, String>,
    /// Detector class names dropped without complaint.
    pub ignore: Vec<String>,
    /// Detector keypoint id → catalog keypoint id.
    pub keypoint_aliases: BTreeMap<String, String>,
}

impl Default for ClassConfig {
    fn default() -> Self {
        // sn-calibration naming out of the box
        let aliases = [
            ("Side line top", "side_line_top"),
            ("Side line bottom", "side_line_bottom"),
            ("Side line left", "goal_line_left"),
            ("Side line right", "goal_line_right"),
            ("Middle line", "halfway_line"),
            ("Circle central", "center_circle"),
            ("Circle left", "penalty_arc_left"),
            ("Circle right", "penalty_arc_right"),
            ("Big rect. left main", "penalty_area_left_main"),
            ("Big rect. left top", "penalty_area_left_top"),
            ("Big rect. left bottom", "penalty_area_left_bottom"),
            ("Big rect. right main", "penalty_area_right_main"),
            ("Big rect. right top", "penalty_area_right_top"),
            ("Big rect. right bottom", "penalty_area_right_bottom"),
            ("Small rect. left main", "goal_area_left_main"),
            ("Small rect. left top", "goal_area_left_top"),
            ("Small rect. left bottom", "goal_area_left_bottom"),
            ("Small rect. right main", "goal_area_right_main"),
            ("Small rect. right top", "goal_area_right_top"),
            ("Small rect. right bottom", "goal_area_right_bottom"),
            ("Goal left crossbar", "goal_left_crossbar"),
            ("Goal left post left", "goal_left_post_left"),
            ("Goal left post right", "goal_left_post_right"),
            ("Goal right crossbar", "goal_right_crossbar"),
            ("Goal right post left", "goal_right_post_left"),
            ("Goal right post right", "goal_right_post_right"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self {
            aliases,
            ignore: vec!["Goal unknown".to_string(), "Line unknown".to_string()],
            keypoint_aliases: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RolesConfig {
    /// Default focal-point positions per camera role, meters.
    pub positions: BTreeMap<String, [f64; 3]>,
    pub default_role: String,
    /// Head offset assumed before a rig has been fitted, meters.
    pub default_delta_m: f64,
}

impl Default for RolesConfig {
    fn default() -> Self {
        let positions = [
            ("main", [0.0, 55.0, -12.0]),
            ("sixteen_meters_left", [-36.0, 55.0, -12.0]),
            ("sixteen_meters_right", [36.0, 55.0, -12.0]),
            ("high_behind_goal", [-65.0, 0.0, -15.0]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { positions, default_role: "main".to_string(), default_delta_m: 0.3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Confidence below which reinitialization is attempted.
    pub reinit_score: f64,
    /// Confidence (of the previous camera) below which flow is discarded.
    pub flow_gate: f64,
    /// Confidence under which a frame counts toward track loss.
    pub lost_score: f64,
    /// Consecutive low-confidence frames before the track is declared lost.
    pub lost_frames: u32,
    /// Template render stroke width at 1080p, pixels.
    pub stroke_px: f64,
    /// Mean-shift bandwidth at 1080p, pixels.
    pub bandwidth_px: f64,
    /// Mean-shift seeding: every Nth blob pixel.
    pub seed_decimation: usize,
    /// Player-box dilation applied when filtering flow, pixels.
    pub box_margin_px: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            reinit_score: 0.5,
            flow_gate: 0.5,
            lost_score: 0.2,
            lost_frames: 3,
            stroke_px: 5.0,
            bandwidth_px: 25.0,
            seed_decimation: 8,
            box_margin_px: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub field: FieldConfig,
    pub classes: ClassConfig,
    pub roles: RolesConfig,
    pub solver: SolverSettings,
    pub tracker: TrackerConfig,
    pub reinit: ReinitSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn dimensions(&self) -> Result<FieldDimensions<f64>, FieldError> {
        FieldDimensions::new(self.field.length_m, self.field.width_m)
    }

    /// Resolves a detector class name to the canonical taxonomy.
    /// `Ok(None)` means the name is on the ignore list.
    pub fn resolve_class(&self, name: &str) -> Result<Option<FieldElementClass>, FieldError> {
        if self.classes.ignore.iter().any(|n| n == name) {
            return Ok(None);
        }
        let canonical = self.classes.aliases.get(name).map(String::as_str).unwrap_or(name);
        canonical.parse().map(Some)
    }

    /// Resolves a detector keypoint id to a catalog id.
    pub fn resolve_keypoint<'a>(&'a self, id: &'a str) -> &'a str {
        self.classes.keypoint_aliases.get(id).map(String::as_str).unwrap_or(id)
    }

    /// The default rig for a venue with no fitted tripod yet.
    pub fn default_rig(&self, role: Option<&str>) -> Result<TripodRig, ConfigError> {
        let role = role.unwrap_or(&self.roles.default_role);
        let pos = self
            .roles
            .positions
            .get(role)
            .ok_or_else(|| ConfigError::UnknownRole(role.to_string()))?;
        Ok(TripodRig { t: Vec3::new(pos[0], pos[1], pos[2]), delta: self.roles.default_delta_m })
    }
}
