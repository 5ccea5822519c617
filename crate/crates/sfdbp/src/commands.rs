//! The four CLI commands: synth, estimate, eval, oracle.
//!
//! Every run writes a `manifest.json` echoing the resolved config so the
//! run can be reproduced exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfd_core::{
    build_label_set, exhaustive_map, run_bp, CostVolume, GrayImage, PriorParams, Schedule,
    TinyInstance,
};

use crate::config::{ObsFormat, PriorCfg, RunConfig, ScheduleCfg};
use crate::error::{CliError, Result};
use crate::eval::{evaluate, texture_mask, EvalReport};
use crate::pipeline::{estimate, worker_count};
use crate::pnm::{self, Pgm};
use crate::scenes;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Manifest<'a> {
    artifact_version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    /// Uniform label depths used by the run (estimate only).
    #[serde(skip_serializing_if = "Option::is_none")]
    label_depths: Option<Vec<f64>>,
    /// Noise seed actually applied (synth only).
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct ManifestIn {
    artifact_version: String,
    command: String,
    #[serde(default)]
    label_depths: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Diagnostics {
    iterations: usize,
    final_delta: f64,
    energy: f64,
    wall_time_ms: f64,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io("writing", path, e))
}

fn write_manifest(
    cfg: &RunConfig,
    command: &str,
    label_depths: Option<Vec<f64>>,
    noise_seed: Option<u64>,
) -> Result<()> {
    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION,
        command,
        config: cfg,
        label_depths,
        noise_seed,
    };
    write_json(&cfg.output_dir.join("manifest.json"), &manifest)
}

fn observation_paths(cfg: &RunConfig, format: ObsFormat) -> Vec<PathBuf> {
    if !cfg.observations.is_empty() {
        return cfg
            .observations
            .iter()
            .map(|p| resolve(&cfg.output_dir, p))
            .collect();
    }
    let ext = match format {
        ObsFormat::Pfm => "pfm",
        ObsFormat::Pgm8 | ObsFormat::Pgm16 => "pgm",
    };
    (0..cfg.cameras.len())
        .map(|i| cfg.output_dir.join(format!("obs_{i}.{ext}")))
        .collect()
}

/// Renders synthetic observations plus ground truth from the configured
/// scene and cameras.
pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    cfg.validate_common()?;
    let synth = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Config("synth command needs a 'synth' config section".into()))?;
    if !cfg.observations.is_empty() && cfg.observations.len() != cfg.cameras.len() {
        return Err(CliError::Config(format!(
            "{} observation paths for {} cameras",
            cfg.observations.len(),
            cfg.cameras.len()
        )));
    }
    let cams = cfg.core_cameras()?;
    // fail early on an ambiguous label range, before rendering
    build_label_set(
        cfg.depth_min_m,
        cfg.depth_max_m,
        cfg.label_count,
        &cams,
        cfg.reference_index,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let texture = scenes::generate_texture(&synth.texture, synth.width, synth.height)?;
    let depth = scenes::generate_depth(&synth.scene, synth.width, synth.height)?;
    let noise = synth.noise.map(|n| sfd_core::NoiseSpec {
        sigma: n.sigma,
        seed: n.seed,
    });
    let stack = sfd_core::render_observation_stack(&texture, &depth, &cams, noise)?;

    ensure_output_dir(cfg)?;
    let paths = observation_paths(cfg, synth.observation_format);
    for (img, path) in stack.iter().zip(&paths) {
        match synth.observation_format {
            ObsFormat::Pfm => {
                let data: Vec<f32> = img.as_slice().iter().map(|v| *v as f32).collect();
                pnm::write_pfm(path, img.width(), img.height(), &data)?;
            }
            ObsFormat::Pgm8 => pnm::write_pgm(path, &Pgm::from_gray(img, 255))?,
            ObsFormat::Pgm16 => pnm::write_pgm(path, &Pgm::from_gray(img, 65535))?,
        }
    }
    let gt_path = resolve(&cfg.output_dir, &synth.ground_truth);
    pnm::write_depth_pfm(&gt_path, depth.width(), depth.height(), depth.as_slice())?;
    write_manifest(cfg, "synth", None, synth.noise.map(|n| n.seed))
}

fn dump_cost_volume(cfg: &RunConfig, volume: &CostVolume, label_depths: &[f64]) -> Result<()> {
    let raw_path = cfg.output_dir.join("cost_volume.raw");
    let mut bytes = Vec::with_capacity(volume.as_slice().len() * 4);
    for v in volume.as_slice() {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(&raw_path, bytes).map_err(|e| CliError::io("writing", &raw_path, e))?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        width: usize,
        height: usize,
        label_count: usize,
        label_depths: &'a [f64],
        layout: &'static str,
        dtype: &'static str,
    }
    write_json(
        &cfg.output_dir.join("cost_volume.json"),
        &Sidecar {
            width: volume.width(),
            height: volume.height(),
            label_count: volume.label_count(),
            label_depths,
            layout: "row-major pixels, label-contiguous",
            dtype: "float32 little-endian",
        },
    )
}

/// Runs the full pipeline on the configured observations and writes the
/// label map (16-bit PGM), metric depth (PFM), a min-max normalized
/// preview (8-bit PGM), and diagnostics.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    cfg.validate_common()?;
    if cfg.observations.len() < 2 {
        return Err(CliError::Config(format!(
            "estimate needs at least 2 observation paths, got {}",
            cfg.observations.len()
        )));
    }
    if cfg.observations.len() != cfg.cameras.len() {
        return Err(CliError::Config(format!(
            "{} observation paths for {} cameras",
            cfg.observations.len(),
            cfg.cameras.len()
        )));
    }
    if cfg.label_count > 65536 {
        return Err(CliError::Config(format!(
            "label_count {} exceeds the 16-bit label map limit",
            cfg.label_count
        )));
    }
    let cams = cfg.core_cameras()?;
    let label_set = build_label_set(
        cfg.depth_min_m,
        cfg.depth_max_m,
        cfg.label_count,
        &cams,
        cfg.reference_index,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let mut observations = Vec::with_capacity(cfg.observations.len());
    for p in &cfg.observations {
        observations.push(pnm::read_image(&resolve(&cfg.output_dir, p))?);
    }
    let prior = cfg.prior.to_core()?;
    let run = estimate(
        &observations,
        label_set,
        &prior,
        cfg.schedule.to_core(),
        cfg.max_iters,
        cfg.convergence_eps,
        cfg.aggregation_radius,
        worker_count(),
    )?;

    ensure_output_dir(cfg)?;
    let labels = &run.depth_map.labels;
    let (w, h) = (labels.width(), labels.height());
    let label_raster: Vec<u16> = labels.as_slice().iter().map(|l| *l as u16).collect();
    pnm::write_pgm(
        &cfg.output_dir.join("labels.pgm"),
        &Pgm::new(w, h, 65535, label_raster)?,
    )?;
    let depths = run.depth_map.metric_depths();
    pnm::write_depth_pfm(&cfg.output_dir.join("depth.pfm"), w, h, &depths)?;
    // preview: min-max normalized over the label range, near = bright
    let l_max = (run.depth_map.label_set.len() - 1) as f64;
    let preview_data: Vec<f64> = labels
        .as_slice()
        .iter()
        .map(|l| 1.0 - *l as f64 / l_max)
        .collect();
    let preview = GrayImage::new(w, h, preview_data)?;
    pnm::write_pgm(
        &cfg.output_dir.join("preview.pgm"),
        &Pgm::from_gray(&preview, 255),
    )?;
    write_json(
        &cfg.output_dir.join("diagnostics.json"),
        &Diagnostics {
            iterations: run.diagnostics.iterations,
            final_delta: run.diagnostics.final_delta,
            energy: run.diagnostics.energy,
            wall_time_ms: run.wall_time_ms,
        },
    )?;
    let label_depths: Vec<f64> = run
        .depth_map
        .label_set
        .labels()
        .iter()
        .map(|l| l.depth)
        .collect();
    if cfg.dump_cost_volume {
        dump_cost_volume(cfg, &run.cost_volume, &label_depths)?;
    }
    write_manifest(cfg, "estimate", Some(label_depths), None)
}

/// Scores an estimate directory against ground truth and writes
/// `eval.json`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    let eval_cfg = cfg
        .eval
        .as_ref()
        .ok_or_else(|| CliError::Config("eval command needs an 'eval' config section".into()))?;
    let est_dir = resolve(&cfg.output_dir, &eval_cfg.estimate_dir);
    let manifest_path = est_dir.join("manifest.json");
    let manifest_text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::io("reading", &manifest_path, e))?;
    let manifest: ManifestIn = serde_json::from_str(&manifest_text)
        .map_err(|e| CliError::Runtime(format!("bad manifest {}: {e}", manifest_path.display())))?;
    let label_depths = manifest.label_depths.ok_or_else(|| {
        CliError::Runtime(format!(
            "{} was not written by an estimate run (no label_depths)",
            manifest_path.display()
        ))
    })?;
    if label_depths.len() < 2 {
        return Err(CliError::Runtime("manifest label_depths too short".into()));
    }
    let labels_pgm = pnm::read_pgm(&est_dir.join("labels.pgm"))?;
    let labels = sfd_core::LabelMap::new(
        labels_pgm.width,
        labels_pgm.height,
        labels_pgm.data.iter().map(|v| *v as usize).collect(),
    )?;
    let gt = pnm::read_depth_pfm(&resolve(&cfg.output_dir, &eval_cfg.ground_truth))?;

    let n = labels_pgm.width * labels_pgm.height;
    let mut mask: Option<Vec<bool>> = None;
    if let Some(mask_path) = &eval_cfg.mask {
        let m = pnm::read_pgm(&resolve(&cfg.output_dir, mask_path))?;
        if m.width * m.height != n {
            return Err(CliError::Runtime(
                "mask size disagrees with estimate".into(),
            ));
        }
        mask = Some(m.data.iter().map(|v| *v > 0).collect());
    }
    if let Some(tm) = &eval_cfg.texture_mask {
        let img = pnm::read_image(&resolve(&cfg.output_dir, &tm.image))?;
        if img.width() * img.height() != n {
            return Err(CliError::Runtime(
                "texture-mask image size disagrees with estimate".into(),
            ));
        }
        let t = texture_mask(&img, tm.window_radius, tm.variance_threshold);
        mask = Some(match mask {
            Some(m) => m.iter().zip(&t).map(|(a, b)| *a && *b).collect(),
            None => t,
        });
    }

    let depth_min = label_depths[0];
    let depth_step =
        (label_depths[label_depths.len() - 1] - depth_min) / (label_depths.len() - 1) as f64;
    let report = evaluate(
        &labels,
        &label_depths,
        depth_min,
        depth_step,
        &gt,
        mask.as_deref(),
        eval_cfg.bad_k,
    )?;
    ensure_output_dir(cfg)?;
    write_json(&cfg.output_dir.join("eval.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub width: usize,
    pub height: usize,
    pub label_count: usize,
    /// Row-major pixels, label-contiguous.
    pub costs: Vec<f64>,
    pub prior: PriorCfg,
    #[serde(default = "default_instance_iters")]
    pub max_iters: usize,
    #[serde(default = "default_instance_eps")]
    pub convergence_eps: f64,
    #[serde(default)]
    pub schedule: ScheduleCfg,
}

fn default_instance_iters() -> usize {
    50
}

fn default_instance_eps() -> f64 {
    1e-9
}

#[derive(Serialize)]
pub struct OracleReport {
    pub exhaustive_energy: f64,
    pub bp_energy: f64,
    pub energy_gap: f64,
    /// True when BP reached the exact optimum energy (within 1e-9).
    pub energies_match: bool,
    pub bp_iterations: usize,
    pub exhaustive_labels: Vec<usize>,
    pub bp_labels: Vec<usize>,
}

/// Runs the exhaustive oracle and BP on a tiny instance file and reports
/// both energies.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let oracle_cfg = cfg.oracle.as_ref().ok_or_else(|| {
        CliError::Config("oracle command needs an 'oracle' config section".into())
    })?;
    let inst_path = resolve(&cfg.output_dir, &oracle_cfg.instance);
    let text = fs::read_to_string(&inst_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", inst_path.display())))?;
    let file: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad instance {}: {e}", inst_path.display())))?;
    let volume = CostVolume::new(file.width, file.height, file.label_count, file.costs)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let prior: PriorParams = file.prior.to_core()?;
    let inst =
        TinyInstance::new(volume.clone(), prior).map_err(|e| CliError::Config(e.to_string()))?;
    let (exh_labels, exh_energy) = exhaustive_map(&inst);
    let (bp_labels, diag) = run_bp(
        &volume,
        &prior,
        match file.schedule {
            ScheduleCfg::RedBlack => Schedule::RedBlack,
            ScheduleCfg::Synchronous => Schedule::Synchronous,
        },
        file.max_iters,
        file.convergence_eps,
    )?;
    let report = OracleReport {
        exhaustive_energy: exh_energy,
        bp_energy: diag.energy,
        energy_gap: diag.energy - exh_energy,
        energies_match: (diag.energy - exh_energy).abs() <= 1e-9,
        bp_iterations: diag.iterations,
        exhaustive_labels: exh_labels.as_slice().to_vec(),
        bp_labels: bp_labels.as_slice().to_vec(),
    };
    ensure_output_dir(cfg)?;
    write_json(&cfg.output_dir.join("oracle_report.json"), &report)?;
    Ok(report)
}
