//! JSON run configuration with dotted-path `--override key=value`
//! support. Every field is validated against the module preconditions
//! before any compute starts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfd_core::{CameraConfig, PriorParams, Schedule};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Observation image paths (`.pgm` or `.pfm`); for `synth` these are
    /// the paths the rendered observations are written to, relative to
    /// `output_dir` unless absolute.
    #[serde(default)]
    pub observations: Vec<PathBuf>,
    #[serde(default)]
    pub cameras: Vec<CameraCfg>,
    #[serde(default)]
    pub reference_index: usize,
    #[serde(default = "defaults::depth_min")]
    pub depth_min_m: f64,
    #[serde(default = "defaults::depth_max")]
    pub depth_max_m: f64,
    #[serde(default = "defaults::label_count")]
    pub label_count: usize,
    #[serde(default)]
    pub prior: PriorCfg,
    #[serde(default = "defaults::aggregation_radius")]
    pub aggregation_radius: usize,
    #[serde(default)]
    pub schedule: ScheduleCfg,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    #[serde(default = "defaults::convergence_eps")]
    pub convergence_eps: f64,
    #[serde(default)]
    pub dump_cost_volume: bool,
    #[serde(default)]
    pub synth: Option<SynthCfg>,
    #[serde(default)]
    pub eval: Option<EvalCfg>,
    #[serde(default)]
    pub oracle: Option<OracleCfg>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraCfg {
    pub aperture_radius_m: f64,
    pub lens_to_image_m: f64,
    pub focal_length_m: f64,
    pub pixel_scale_px_per_m: f64,
}

impl CameraCfg {
    pub fn to_core(self) -> Result<CameraConfig> {
        CameraConfig::new(
            self.aperture_radius_m,
            self.lens_to_image_m,
            self.focal_length_m,
            self.pixel_scale_px_per_m,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorCfg {
    /// Truncation threshold in label-index steps.
    #[serde(default = "defaults::prior_truncation")]
    pub truncation: f64,
    /// Smoothness weight.
    #[serde(default = "defaults::prior_lambda")]
    pub lambda: f64,
}

impl Default for PriorCfg {
    fn default() -> Self {
        Self {
            truncation: 2.0,
            lambda: 1.0,
        }
    }
}

impl PriorCfg {
    pub fn to_core(self) -> Result<PriorParams> {
        PriorParams::new(self.truncation, self.lambda).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleCfg {
    #[default]
    RedBlack,
    Synchronous,
}

impl ScheduleCfg {
    pub fn to_core(self) -> Schedule {
        match self {
            ScheduleCfg::RedBlack => Schedule::RedBlack,
            ScheduleCfg::Synchronous => Schedule::Synchronous,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCfg {
    pub width: usize,
    pub height: usize,
    pub scene: SceneCfg,
    pub texture: TextureCfg,
    #[serde(default)]
    pub noise: Option<NoiseCfg>,
    #[serde(default)]
    pub observation_format: ObsFormat,
    /// Ground-truth depth output filename (PFM), relative to output_dir.
    #[serde(default = "defaults::ground_truth_name")]
    pub ground_truth: PathBuf,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCfg {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ObsFormat {
    #[default]
    Pfm,
    Pgm8,
    Pgm16,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SceneCfg {
    /// Depth ramps linearly from `depth_near_m` at x = 0 to
    /// `depth_far_m` at x = width - 1.
    SlantedPlane { depth_near_m: f64, depth_far_m: f64 },
    /// Spherical cap bulging toward the camera: `depth_base_m` outside
    /// the cap, `depth_base_m - cap_height_m` at the center.
    SphereCap {
        depth_base_m: f64,
        cap_height_m: f64,
        #[serde(default)]
        radius_px: Option<f64>,
    },
    /// Fronto-parallel step: `depth_left_m` left of `edge_x`,
    /// `depth_right_m` from `edge_x` on. `edge_x` defaults to width / 2.
    StepEdge {
        depth_left_m: f64,
        depth_right_m: f64,
        #[serde(default)]
        edge_x: Option<usize>,
    },
    /// Depth oscillates along x around `depth_mid_m`.
    Sinusoid {
        depth_mid_m: f64,
        amplitude_m: f64,
        period_px: f64,
    },
    /// Depth loaded from a PFM file (meters).
    File { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TextureCfg {
    /// Seeded broadband noise texture, lightly smoothed and rescaled to
    /// `[0.1, 0.9]`.
    Noise {
        seed: u64,
        #[serde(default = "defaults::smooth_sigma")]
        smooth_sigma: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCfg {
    /// Directory holding an estimate (labels.pgm, depth.pfm,
    /// manifest.json) as written by `estimate`.
    pub estimate_dir: PathBuf,
    /// Ground-truth depth PFM.
    pub ground_truth: PathBuf,
    /// Optional validity mask (PGM; nonzero = evaluate).
    #[serde(default)]
    pub mask: Option<PathBuf>,
    /// Optional low-texture exclusion computed from an image.
    #[serde(default)]
    pub texture_mask: Option<TextureMaskCfg>,
    /// `bad_k`: fraction of pixels off by more than k labels.
    #[serde(default = "defaults::bad_k")]
    pub bad_k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureMaskCfg {
    /// Image whose local variance defines texture validity.
    pub image: PathBuf,
    #[serde(default = "defaults::texture_window")]
    pub window_radius: usize,
    pub variance_threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCfg {
    /// Tiny-instance JSON file.
    pub instance: PathBuf,
}

mod defaults {
    use std::path::PathBuf;

    pub fn prior_truncation() -> f64 {
        2.0
    }
    pub fn prior_lambda() -> f64 {
        1.0
    }
    pub fn depth_min() -> f64 {
        0.32
    }
    pub fn depth_max() -> f64 {
        0.48
    }
    pub fn label_count() -> usize {
        16
    }
    pub fn aggregation_radius() -> usize {
        2
    }
    pub fn max_iters() -> usize {
        60
    }
    pub fn convergence_eps() -> f64 {
        1e-4
    }
    pub fn ground_truth_name() -> PathBuf {
        PathBuf::from("ground_truth.pfm")
    }
    pub fn smooth_sigma() -> f64 {
        0.7
    }
    pub fn bad_k() -> usize {
        1
    }
    pub fn texture_window() -> usize {
        3
    }
}

/// Loads a config file and applies `key.path=value` overrides on the raw
/// JSON before deserializing. Values parse as JSON when possible and
/// fall back to strings.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid JSON in {}: {e}", path.display())))?;
    for ov in overrides {
        apply_override(&mut value, ov)?;
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

fn apply_override(root: &mut serde_json::Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not key=value")))?;
    let value: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Ok(idx) = part.parse::<usize>() {
            let arr = node.as_array_mut().ok_or_else(|| {
                CliError::Config(format!("override '{key}': '{part}' indexes a non-array"))
            })?;
            if idx >= arr.len() {
                return Err(CliError::Config(format!(
                    "override '{key}': index {idx} out of bounds"
                )));
            }
            if last {
                arr[idx] = value;
                return Ok(());
            }
            node = &mut arr[idx];
        } else {
            let obj = node.as_object_mut().ok_or_else(|| {
                CliError::Config(format!("override '{key}': '{part}' indexes a non-object"))
            })?;
            if last {
                obj.insert(part.to_string(), value);
                return Ok(());
            }
            node = obj
                .entry(part.to_string())
                .or_insert(serde_json::Value::Object(Default::default()));
        }
    }
    Ok(())
}

impl RunConfig {
    /// Checks shared preconditions; command-specific checks live in the
    /// command implementations.
    pub fn validate_common(&self) -> Result<()> {
        if self.cameras.len() < 2 {
            return Err(CliError::Config(format!(
                "need at least 2 cameras, got {}",
                self.cameras.len()
            )));
        }
        if self.reference_index >= self.cameras.len() {
            return Err(CliError::Config(format!(
                "reference_index {} out of range for {} cameras",
                self.reference_index,
                self.cameras.len()
            )));
        }
        if !(self.depth_min_m > 0.0 && self.depth_min_m < self.depth_max_m) {
            return Err(CliError::Config(format!(
                "invalid depth range [{}, {}]",
                self.depth_min_m, self.depth_max_m
            )));
        }
        if self.label_count < 2 {
            return Err(CliError::Config(format!(
                "label_count must be at least 2, got {}",
                self.label_count
            )));
        }
        if self.max_iters == 0 {
            return Err(CliError::Config("max_iters must be at least 1".into()));
        }
        if !(self.convergence_eps.is_finite() && self.convergence_eps >= 0.0) {
            return Err(CliError::Config(format!(
                "convergence_eps must be finite and non-negative, got {}",
                self.convergence_eps
            )));
        }
        for cam in &self.cameras {
            cam.to_core()?;
        }
        self.prior.to_core()?;
        Ok(())
    }

    pub fn core_cameras(&self) -> Result<Vec<CameraConfig>> {
        self.cameras.iter().map(|c| c.to_core()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_cfg(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("cfg.json");
        fs::write(&p, body).unwrap();
        p
    }

    const MINIMAL: &str = r#"{
        "cameras": [
            {"aperture_radius_m": 0.002, "lens_to_image_m": 0.0395, "focal_length_m": 0.035, "pixel_scale_px_per_m": 20000},
            {"aperture_radius_m": 0.002, "lens_to_image_m": 0.0364, "focal_length_m": 0.035, "pixel_scale_px_per_m": 20000}
        ],
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_loads_with_defaults() {
        let dir = tempdir().unwrap();
        let p = write_cfg(dir.path(), MINIMAL);
        let cfg = load_config(&p, &[]).unwrap();
        assert_eq!(cfg.label_count, 16);
        assert_eq!(cfg.aggregation_radius, 2);
        assert_eq!(cfg.schedule, ScheduleCfg::RedBlack);
        assert!((cfg.prior.lambda - 1.0).abs() < 1e-15);
        cfg.validate_common().unwrap();
    }

    #[test]
    fn overrides_apply_dotted_paths() {
        let dir = tempdir().unwrap();
        let p = write_cfg(dir.path(), MINIMAL);
        let cfg = load_config(
            &p,
            &[
                "label_count=8".to_string(),
                "prior.lambda=0.25".to_string(),
                "cameras.1.pixel_scale_px_per_m=30000".to_string(),
                "schedule=\"synchronous\"".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.label_count, 8);
        assert!((cfg.prior.lambda - 0.25).abs() < 1e-15);
        assert!((cfg.cameras[1].pixel_scale_px_per_m - 30000.0).abs() < 1e-9);
        assert_eq!(cfg.schedule, ScheduleCfg::Synchronous);
    }

    #[test]
    fn bad_override_reports_config_error() {
        let dir = tempdir().unwrap();
        let p = write_cfg(dir.path(), MINIMAL);
        assert!(matches!(
            load_config(&p, &["no-equals".to_string()]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            load_config(&p, &["cameras.7.focal_length_m=1".to_string()]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn unknown_field_rejected() {
        let dir = tempdir().unwrap();
        let p = write_cfg(dir.path(), MINIMAL);
        assert!(matches!(
            load_config(&p, &["typo_field=1".to_string()]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn validation_catches_bad_ranges() {
        let dir = tempdir().unwrap();
        let p = write_cfg(dir.path(), MINIMAL);
        let cfg = load_config(&p, &["depth_min_m=0.9".to_string()]).unwrap();
        assert!(cfg.validate_common().is_err());
        let cfg = load_config(&p, &["reference_index=5".to_string()]).unwrap();
        assert!(cfg.validate_common().is_err());
    }
}
