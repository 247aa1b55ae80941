use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxmodel::{BoxParams, MITER_LIMIT};
use crate::linalg::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config not found: {0}")]
    NotFound(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config JSON: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

/// Clamped Gaussian perturbation around a base value:
/// `base + clamp(N(mu, sigma²), -sigma·gamma, sigma·gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub base: f64,
    #[serde(default)]
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl ParamSpec {
    pub const fn new(base: f64, sigma: f64, gamma: f64) -> Self {
        Self {
            base,
            mu: 0.0,
            sigma,
            gamma,
        }
    }

    /// A spec that always yields `value`.
    pub const fn fixed(value: f64) -> Self {
        Self::new(value, 0.0, 1.0)
    }

    pub fn half_width(&self) -> f64 {
        self.sigma * self.gamma
    }

    /// Smallest and largest value the spec can produce.
    pub fn range(&self) -> (f64, f64) {
        (self.base - self.half_width(), self.base + self.half_width())
    }

    pub fn validate(&self, field: &str) -> Result<(), ConfigError> {
        let all_finite = [self.base, self.mu, self.sigma, self.gamma].iter().all(|v| v.is_finite());
        if !all_finite || !(self.sigma >= 0.0) || !(self.gamma > 0.0) {
            return Err(invalid(
                field,
                format!("needs finite values, sigma >= 0 and gamma > 0, got {self:?}"),
            ));
        }
        Ok(())
    }
}

/// Scanner settings shared by every sample of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScannerConfig {
    pub width: u32,
    pub height: u32,
    /// Radians; the vertical field of view follows from the aspect ratio.
    pub horizontal_fov: f64,
    /// Std of the additive Gaussian range noise along each ray, meters.
    #[serde(default)]
    pub noise_std: f64,
    /// Projector position in the camera frame, meters. When set, points
    /// the projector cannot see are dropped.
    #[serde(default)]
    pub projector_offset: Option<[f64; 3]>,
}

impl Default for ScannerConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            horizontal_fov: 1.0,
            noise_std: 0.0,
            projector_offset: None,
        }
    }
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    /// Free-form annotations; ignored by the generator.
    #[serde(rename = "_notes", default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<serde_json::Value>,
    pub master_seed: u64,
    pub size_x: ParamSpec,
    pub size_y: ParamSpec,
    pub size_z: ParamSpec,
    pub flap_length: ParamSpec,
    pub flap_taper: ParamSpec,
    /// Drawn independently for each of the four flaps, then clamped to [0, π].
    pub open: ParamSpec,
    pub thickness: ParamSpec,
    pub bevel_radius: ParamSpec,
    pub bevel_segments: u32,
    pub camera_distance_min: f64,
    pub camera_distance_max: f64,
    /// Rotate each box by a uniform yaw about +Z. Off by default.
    #[serde(default)]
    pub randomize_yaw: bool,
    #[serde(default)]
    pub scanner: ScannerConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            notes: None,
            master_seed: 0,
            size_x: ParamSpec::new(0.25, 0.1, 2.0),
            size_y: ParamSpec::new(0.25, 0.1, 2.0),
            size_z: ParamSpec::new(0.25, 0.1, 2.0),
            flap_length: ParamSpec::new(0.12, 0.04, 2.0),
            flap_taper: ParamSpec::new(0.01, 0.005, 2.0),
            open: ParamSpec::new(0.9, 0.5, 2.0),
            thickness: ParamSpec::new(0.003, 0.0005, 2.0),
            bevel_radius: ParamSpec::new(0.004, 0.001, 2.0),
            bevel_segments: 3,
            camera_distance_min: 1.0,
            camera_distance_max: 1.7,
            randomize_yaw: false,
            scanner: ScannerConfig::default(),
        }
    }
}

fn invalid(field: &str, reason: String) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason,
    }
}

impl GenerationConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                ConfigError::NotFound(path.display().to_string())
            } else {
                ConfigError::Io {
                    path: path.display().to_string(),
                    source,
                }
            }
        })?;
        Self::from_json(&text)
    }

    /// Checks every spec and that each parameter combination the specs can
    /// produce is a buildable box.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let specs = [
            ("size_x", &self.size_x),
            ("size_y", &self.size_y),
            ("size_z", &self.size_z),
            ("flap_length", &self.flap_length),
            ("flap_taper", &self.flap_taper),
            ("open", &self.open),
            ("thickness", &self.thickness),
            ("bevel_radius", &self.bevel_radius),
        ];
        for (field, spec) in specs {
            spec.validate(field)?;
        }
        for (field, spec) in [("size_x", &self.size_x), ("size_y", &self.size_y), ("size_z", &self.size_z)] {
            if spec.range().0 <= 0.0 {
                return Err(invalid(field, format!("can produce non-positive sizes, range {:?}", spec.range())));
            }
        }
        for (field, spec) in [
            ("flap_length", &self.flap_length),
            ("flap_taper", &self.flap_taper),
            ("thickness", &self.thickness),
            ("bevel_radius", &self.bevel_radius),
        ] {
            if spec.range().0 < 0.0 {
                return Err(invalid(field, format!("can produce negative values, range {:?}", spec.range())));
            }
        }
        if self.bevel_segments == 0 {
            return Err(invalid("bevel_segments", "must be a positive count".into()));
        }
        if !(self.camera_distance_min > 0.0 && self.camera_distance_min < self.camera_distance_max)
            || !self.camera_distance_max.is_finite()
        {
            return Err(invalid(
                "camera_distance_min",
                format!(
                    "need 0 < min < max, got [{}, {}]",
                    self.camera_distance_min, self.camera_distance_max
                ),
            ));
        }
        let sc = &self.scanner;
        if sc.width == 0 || sc.height == 0 {
            return Err(invalid("scanner", "width and height must be >= 1".into()));
        }
        if !(sc.horizontal_fov > 0.0 && sc.horizontal_fov < std::f64::consts::PI) {
            return Err(invalid("scanner", format!("horizontal_fov must lie in (0, π), got {}", sc.horizontal_fov)));
        }
        if !(sc.noise_std >= 0.0 && sc.noise_std.is_finite()) {
            return Err(invalid("scanner", format!("noise_std must be >= 0, got {}", sc.noise_std)));
        }
        if let Some(p) = sc.projector_offset {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(invalid("scanner", "projector_offset must be finite".into()));
            }
        }
        self.validate_worst_case()
    }

    fn validate_worst_case(&self) -> Result<(), ConfigError> {
        let min_x = self.size_x.range().0;
        let min_y = self.size_y.range().0;
        let min_z = self.size_z.range().0;
        let min_xy = min_x.min(min_y);
        let max_t = self.thickness.range().1;
        let max_r = self.bevel_radius.range().1;
        if max_t >= min_xy / 2.0 {
            return Err(invalid("thickness", format!("{max_t} can reach half the smallest side {min_xy}")));
        }
        if self.flap_taper.range().1 > min_xy / 2.0 {
            return Err(invalid("flap_taper", format!("can exceed half the smallest side {min_xy}")));
        }
        // The outer fillet and hinge inset grow with radius and thickness,
        // so the largest draws bound them.
        let worst = BoxParams {
            size: Vec3::new(min_x, min_y, min_z),
            flap_length: self.flap_length.range().1,
            flap_taper: 0.0,
            open: [0.0; 4],
            thickness: max_t,
            bevel_radius: max_r,
            bevel_segments: self.bevel_segments,
        };
        let radius = worst.outer_bevel_radius();
        if radius >= min_xy.min(min_z) / 2.0 {
            return Err(invalid(
                "bevel_radius",
                format!("outer fillet {radius} can reach half the smallest side"),
            ));
        }
        if worst.has_flaps() && worst.hinge_inset() >= min_xy / 2.0 - 1e-6 {
            return Err(invalid(
                "bevel_radius",
                "fillet plus thickness can leave no room for the flap hinge".into(),
            ));
        }
        let max_open = self.open.range().1.min(std::f64::consts::PI);
        let miter_open = 2.0 * (1.0 / MITER_LIMIT).acos();
        if max_t > 0.0 && worst.has_flaps() && max_open >= miter_open {
            return Err(invalid(
                "open",
                format!("angles up to {max_open} fold flaps too sharply to thicken (limit {miter_open:.4})"),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(cfg: &GenerationConfig) -> String {
        match cfg.validate() {
            Err(ConfigError::Invalid { field, .. }) => field,
            other => panic!("expected invalid config, got {other:?}"),
        }
    }

    #[test]
    fn default_is_valid_and_roundtrips() {
        let cfg = GenerationConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(GenerationConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn mu_defaults_to_zero() {
        let spec: ParamSpec = serde_json::from_str(r#"{"base": 0.25, "sigma": 0.1, "gamma": 2.0}"#).unwrap();
        assert_eq!(spec, ParamSpec::new(0.25, 0.1, 2.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = serde_json::to_value(GenerationConfig::default()).unwrap();
        v["sizex"] = serde_json::json!(1);
        assert!(matches!(
            GenerationConfig::from_json(&v.to_string()),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn unbuildable_ranges_rejected() {
        let mut cfg = GenerationConfig::default();
        cfg.size_x.sigma = 0.2;
        assert_eq!(field_of(&cfg), "size_x");

        let mut cfg = GenerationConfig::default();
        cfg.thickness = ParamSpec::new(0.02, 0.02, 2.0);
        assert_eq!(field_of(&cfg), "thickness");

        let mut cfg = GenerationConfig::default();
        cfg.camera_distance_max = 0.5;
        assert_eq!(field_of(&cfg), "camera_distance_min");

        let mut cfg = GenerationConfig::default();
        cfg.open = ParamSpec::new(2.5, 0.5, 2.0);
        assert_eq!(field_of(&cfg), "open");

        let mut cfg = GenerationConfig::default();
        cfg.bevel_radius = ParamSpec::new(0.03, 0.001, 2.0);
        assert_eq!(field_of(&cfg), "bevel_radius");

        let mut cfg = GenerationConfig::default();
        cfg.open.gamma = 0.0;
        assert_eq!(field_of(&cfg), "open");
    }

    #[test]
    fn missing_file_is_not_found() {
        let err = GenerationConfig::load(Path::new("/nonexistent/boxscan.json")).unwrap_err();
        assert!(matches!(err, ConfigError::NotFound(_)));
        assert!(err.to_string().starts_with("config not found"));
    }
}
