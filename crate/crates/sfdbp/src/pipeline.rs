//! Estimation pipeline glue: parallel cost-volume construction and the
//! observations -> depth map run.

use std::time::Instant;

use sfd_core::{
    box_filter, cost_slice_for_label, run_bp, volume_from_slices, BpDiagnostics, CostVolume,
    DepthMap, GrayImage, LabelSet, PriorParams, Schedule,
};

use crate::error::{CliError, Result};

/// Worker count: `SFDBP_THREADS` caps it, otherwise the available
/// parallelism (at most 8; the per-label slices are coarse units).
pub fn worker_count() -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8);
    match std::env::var("SFDBP_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => n.min(available.max(1)),
            _ => available,
        },
        Err(_) => available,
    }
}

/// Builds the cost volume with per-label slices computed across worker
/// threads. Slices are independent, so the result is identical to the
/// serial `build_cost_volume` for any thread count.
pub fn build_cost_volume_parallel(
    observations: &[GrayImage],
    labels: &LabelSet,
    aggregation_radius: usize,
    threads: usize,
) -> Result<CostVolume> {
    if observations.len() < 2 {
        return Err(CliError::Runtime(format!(
            "need at least 2 observations, got {}",
            observations.len()
        )));
    }
    let l_count = labels.len();
    let threads = threads.max(1).min(l_count);
    let mut slices: Vec<Option<GrayImage>> = vec![None; l_count];
    if threads == 1 {
        for (l, slot) in slices.iter_mut().enumerate() {
            let s = cost_slice_for_label(observations, labels, l)?;
            *slot = Some(box_filter(&s, aggregation_radius));
        }
    } else {
        let results: Vec<(usize, sfd_core::Result<GrayImage>)> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk_start in (0..l_count).step_by(l_count.div_ceil(threads)) {
                let chunk_end = (chunk_start + l_count.div_ceil(threads)).min(l_count);
                handles.push(scope.spawn(move || {
                    (chunk_start..chunk_end)
                        .map(|l| {
                            (
                                l,
                                cost_slice_for_label(observations, labels, l)
                                    .map(|s| box_filter(&s, aggregation_radius)),
                            )
                        })
                        .collect::<Vec<_>>()
                }));
            }
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("cost slice worker panicked"))
                .collect()
        });
        for (l, r) in results {
            slices[l] = Some(r?);
        }
    }
    let slices: Vec<GrayImage> = slices.into_iter().map(|s| s.unwrap()).collect();
    volume_from_slices(&slices).map_err(CliError::from)
}

pub struct EstimateRun {
    pub depth_map: DepthMap,
    pub diagnostics: BpDiagnostics,
    pub cost_volume: CostVolume,
    pub wall_time_ms: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn estimate(
    observations: &[GrayImage],
    label_set: LabelSet,
    prior: &PriorParams,
    schedule: Schedule,
    max_iters: usize,
    convergence_eps: f64,
    aggregation_radius: usize,
    threads: usize,
) -> Result<EstimateRun> {
    let start = Instant::now();
    let cost_volume =
        build_cost_volume_parallel(observations, &label_set, aggregation_radius, threads)?;
    let (labels, diagnostics) = run_bp(&cost_volume, prior, schedule, max_iters, convergence_eps)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let depth_map = DepthMap::new(labels, label_set)?;
    Ok(EstimateRun {
        depth_map,
        diagnostics,
        cost_volume,
        wall_time_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sfd_core::{build_cost_volume, build_label_set, CameraConfig};

    fn cams() -> Vec<CameraConfig> {
        vec![
            CameraConfig::new(0.002, 0.0396, 0.035, 2e4).unwrap(),
            CameraConfig::new(0.002, 0.0364, 0.035, 2e4).unwrap(),
        ]
    }

    fn texture(w: usize, h: usize) -> GrayImage {
        let data = (0..w * h)
            .map(|i| 0.5 + 0.4 * ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.2)
            .collect();
        GrayImage::new(w, h, data).unwrap()
    }

    #[test]
    fn parallel_matches_serial_for_any_thread_count() {
        let cams = cams();
        let set = build_label_set(0.34, 0.48, 6, &cams, 0).unwrap();
        let obs = [texture(24, 20), texture(24, 20)];
        let serial = build_cost_volume(&obs, &set, 2).unwrap();
        for threads in [1, 2, 3, 7] {
            let par = build_cost_volume_parallel(&obs, &set, 2, threads).unwrap();
            assert_eq!(serial, par, "threads = {threads}");
        }
    }

    #[test]
    fn worker_count_respects_env_cap() {
        // temp-env style manipulation; serial with other env tests is not
        // needed since this is the only test touching the variable
        std::env::set_var("SFDBP_THREADS", "1");
        assert_eq!(worker_count(), 1);
        std::env::set_var("SFDBP_THREADS", "garbage");
        assert!(worker_count() >= 1);
        std::env::remove_var("SFDBP_THREADS");
    }
}
