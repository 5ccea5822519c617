//! Built-in synthetic depth scenes and texture generators.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sfd_core::{gaussian_kernel, BlurSpec, GrayImage, GroundTruthDepth};

use crate::config::{SceneCfg, TextureCfg};
use crate::error::{CliError, Result};
use crate::pnm;

pub fn generate_depth(scene: &SceneCfg, width: usize, height: usize) -> Result<GroundTruthDepth> {
    let mut depth = vec![0.0f64; width * height];
    match scene {
        SceneCfg::SlantedPlane {
            depth_near_m,
            depth_far_m,
        } => {
            let span = width.max(2) - 1;
            for y in 0..height {
                for x in 0..width {
                    let t = x as f64 / span as f64;
                    depth[y * width + x] = depth_near_m + t * (depth_far_m - depth_near_m);
                }
            }
        }
        SceneCfg::SphereCap {
            depth_base_m,
            cap_height_m,
            radius_px,
        } => {
            let r = radius_px.unwrap_or(0.45 * width.min(height) as f64);
            let cx = (width as f64 - 1.0) / 2.0;
            let cy = (height as f64 - 1.0) / 2.0;
            for y in 0..height {
                for x in 0..width {
                    let dx = x as f64 - cx;
                    let dy = y as f64 - cy;
                    let q = 1.0 - (dx * dx + dy * dy) / (r * r);
                    let lift = if q > 0.0 {
                        cap_height_m * q.sqrt()
                    } else {
                        0.0
                    };
                    depth[y * width + x] = depth_base_m - lift;
                }
            }
        }
        SceneCfg::StepEdge {
            depth_left_m,
            depth_right_m,
            edge_x,
        } => {
            let edge = edge_x.unwrap_or(width / 2);
            for y in 0..height {
                for x in 0..width {
                    depth[y * width + x] = if x < edge {
                        *depth_left_m
                    } else {
                        *depth_right_m
                    };
                }
            }
        }
        SceneCfg::Sinusoid {
            depth_mid_m,
            amplitude_m,
            period_px,
        } => {
            for y in 0..height {
                for x in 0..width {
                    let phase = 2.0 * std::f64::consts::PI * x as f64 / period_px;
                    depth[y * width + x] = depth_mid_m + amplitude_m * phase.sin();
                }
            }
        }
        SceneCfg::File { path } => {
            let gt = pnm::read_depth_pfm(path)?;
            if gt.width() != width || gt.height() != height {
                return Err(CliError::Config(format!(
                    "depth file {} is {}x{}, config wants {width}x{height}",
                    path.display(),
                    gt.width(),
                    gt.height()
                )));
            }
            return Ok(gt);
        }
    }
    GroundTruthDepth::new(width, height, depth).map_err(|e| CliError::Config(e.to_string()))
}

pub fn generate_texture(cfg: &TextureCfg, width: usize, height: usize) -> Result<GrayImage> {
    match cfg {
        TextureCfg::Noise { seed, smooth_sigma } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let raw: Vec<f64> = (0..width * height)
                .map(|_| (rng.next_u64() >> 11) as f64 / 9007199254740992.0)
                .collect();
            let img = GrayImage::new(width, height, raw).expect("noise values are finite");
            let spec = BlurSpec::new(*smooth_sigma).map_err(|e| CliError::Config(e.to_string()))?;
            let smoothed = gaussian_kernel(spec).convolve(&img);
            // rescale to [0.1, 0.9] for contrast with sensor headroom
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in smoothed.as_slice() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            let span = if hi > lo { hi - lo } else { 1.0 };
            let data = smoothed
                .as_slice()
                .iter()
                .map(|v| 0.1 + 0.8 * (v - lo) / span)
                .collect();
            Ok(GrayImage::new(width, height, data).expect("rescaled values are finite"))
        }
        TextureCfg::File { path } => {
            let img = pnm::read_image(path)?;
            if img.width() != width || img.height() != height {
                return Err(CliError::Config(format!(
                    "texture {} is {}x{}, config wants {width}x{height}",
                    path.display(),
                    img.width(),
                    img.height()
                )));
            }
            Ok(img)
        }
    }
}
