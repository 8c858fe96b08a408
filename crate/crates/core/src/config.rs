//! Augmentation configuration: JSON schema, defaults, and validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraSpec, TrajectorySpec};
use crate::render::LightSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RenderSettings {
    pub width: u32,
    pub height: u32,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            width: 1920,
            height: 1080,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub cameras: Vec<CameraSpec>,
    pub lights: Vec<LightSpec>,
    pub ambient: f64,
    pub trajectory: TrajectorySpec,
    pub render: RenderSettings,
    pub seed: u64,
    pub enlargement_factor: u32,
    pub workers: usize,
    /// World size of one source pixel, meters.
    pub pixel_scale: f64,
    /// Containment-failure retries per (sample, replica) before passing the
    /// sample through unaugmented.
    pub max_attempts: u32,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            cameras: default_cameras(),
            lights: vec![LightSpec::Sun {
                direction: [0.0, 0.0, 1.0],
                irradiance: 0.9,
            }],
            ambient: 0.1,
            trajectory: TrajectorySpec {
                center: [0.0, 0.0, 0.0],
                radius_min: 0.2,
                radius_max: 0.5,
                rotation_min: -45.0,
                rotation_max: 45.0,
                frames_per_scene: 10,
                tilt: 20.0,
            },
            render: RenderSettings::default(),
            seed: 0,
            enlargement_factor: 1,
            workers: 1,
            pixel_scale: 0.0005,
            max_attempts: 8,
        }
    }
}

/// Four preset cameras spanning common device classes, each looking at the
/// trajectory center from its typical working distance.
pub fn default_cameras() -> Vec<CameraSpec> {
    let preset = |name: &str, sw: f64, sh: f64, f: f64, dist: f64| CameraSpec {
        name: name.to_string(),
        sensor_width: sw,
        sensor_height: sh,
        focal_length: f,
        position: [0.0, 0.0, -dist],
        look_at: [0.0, 0.0, 0.0],
    };
    vec![
        preset("smartphone-wide", 6.17, 4.55, 4.25, 0.4),
        preset("smartphone-tele", 6.17, 4.55, 6.9, 0.6),
        preset("aps-c", 23.5, 15.6, 35.0, 0.9),
        preset("full-frame", 36.0, 24.0, 50.0, 1.2),
    ]
}

impl AugmentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: AugmentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cameras.is_empty() {
            return Err(ConfigError::Invalid("camera list is empty".into()));
        }
        for cam in &self.cameras {
            cam.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        for light in &self.lights {
            light
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return Err(ConfigError::Invalid("ambient must be in [0, 1]".into()));
        }
        self.trajectory
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.render.width == 0 || self.render.height == 0 {
            return Err(ConfigError::Invalid("render resolution must be >= 1x1".into()));
        }
        if self.enlargement_factor < 1 {
            return Err(ConfigError::Invalid("enlargement_factor must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(ConfigError::Invalid("workers must be >= 1".into()));
        }
        if self.pixel_scale <= 0.0 {
            return Err(ConfigError::Invalid("pixel_scale must be positive".into()));
        }
        if self.max_attempts < 1 {
            return Err(ConfigError::Invalid("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}
