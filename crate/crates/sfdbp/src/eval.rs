//! Depth-map evaluation against synthetic ground truth.

use serde::Serialize;
use sfd_core::{GrayImage, GroundTruthDepth, LabelMap};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub rmse_depth_m: f64,
    pub mae_depth_m: f64,
    /// Fraction of pixels with exactly the correct label.
    pub label_accuracy: f64,
    pub bad_k: usize,
    /// Fraction of pixels off by more than `bad_k` labels.
    pub bad_k_fraction: f64,
    pub evaluated_pixels: usize,
}

/// Nearest label index for a metric depth on a uniform label grid.
fn quantize(depth: f64, depth_min: f64, depth_step: f64, label_count: usize) -> usize {
    let idx = ((depth - depth_min) / depth_step).round();
    (idx.max(0.0) as usize).min(label_count - 1)
}

/// Metrics over the mask (all pixels when `mask` is `None`). Depth
/// errors compare the estimate's metric depths against raw ground truth;
/// label metrics compare against the nearest-label quantization of the
/// ground truth.
pub fn evaluate(
    labels: &LabelMap,
    label_depths: &[f64],
    depth_min: f64,
    depth_step: f64,
    gt: &GroundTruthDepth,
    mask: Option<&[bool]>,
    bad_k: usize,
) -> Result<EvalReport> {
    if labels.width() != gt.width() || labels.height() != gt.height() {
        return Err(CliError::Runtime(format!(
            "estimate {}x{} and ground truth {}x{} shapes disagree",
            labels.width(),
            labels.height(),
            gt.width(),
            gt.height()
        )));
    }
    let n = labels.width() * labels.height();
    if let Some(m) = mask {
        if m.len() != n {
            return Err(CliError::Runtime(format!(
                "mask length {} does not match {n} pixels",
                m.len()
            )));
        }
    }
    let label_count = label_depths.len();
    let mut count = 0usize;
    let mut sq = 0.0f64;
    let mut abs = 0.0f64;
    let mut exact = 0usize;
    let mut bad = 0usize;
    for (i, &l) in labels.as_slice().iter().enumerate() {
        if let Some(m) = mask {
            if !m[i] {
                continue;
            }
        }
        if l >= label_count {
            return Err(CliError::Runtime(format!(
                "label {l} outside the {label_count}-entry label set"
            )));
        }
        let d_est = label_depths[l];
        let d_gt = gt.as_slice()[i];
        let e = d_est - d_gt;
        sq += e * e;
        abs += e.abs();
        let l_gt = quantize(d_gt, depth_min, depth_step, label_count);
        if l == l_gt {
            exact += 1;
        }
        if l.abs_diff(l_gt) > bad_k {
            bad += 1;
        }
        count += 1;
    }
    if count == 0 {
        return Err(CliError::Runtime(
            "evaluation mask excludes every pixel".into(),
        ));
    }
    Ok(EvalReport {
        rmse_depth_m: (sq / count as f64).sqrt(),
        mae_depth_m: abs / count as f64,
        label_accuracy: exact as f64 / count as f64,
        bad_k,
        bad_k_fraction: bad as f64 / count as f64,
        evaluated_pixels: count,
    })
}

/// Low-texture exclusion mask: true where the local intensity variance
/// in a `(2r+1)^2` window reaches the threshold.
pub fn texture_mask(img: &GrayImage, window_radius: usize, variance_threshold: f64) -> Vec<bool> {
    let (w, h) = (img.width(), img.height());
    let r = window_radius as isize;
    let src = img.as_slice();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let x0 = (x as isize - r).max(0) as usize;
            let x1 = ((x as isize + r) as usize).min(w - 1);
            let y0 = (y as isize - r).max(0) as usize;
            let y1 = ((y as isize + r) as usize).min(h - 1);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let mut c = 0.0;
            for yi in y0..=y1 {
                for xi in x0..=x1 {
                    let v = src[yi * w + xi];
                    s += v;
                    s2 += v * v;
                    c += 1.0;
                }
            }
            let mean = s / c;
            out.push(s2 / c - mean * mean >= variance_threshold);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(w: usize, h: usize, v: Vec<usize>) -> LabelMap {
        LabelMap::new(w, h, v).unwrap()
    }

    #[test]
    fn perfect_estimate_scores_clean() {
        let depths = [0.4, 0.5, 0.6];
        let gt = GroundTruthDepth::new(3, 1, vec![0.4, 0.5, 0.6]).unwrap();
        let map = labels(3, 1, vec![0, 1, 2]);
        let r = evaluate(&map, &depths, 0.4, 0.1, &gt, None, 1).unwrap();
        assert_eq!(r.rmse_depth_m, 0.0);
        assert_eq!(r.label_accuracy, 1.0);
        assert_eq!(r.bad_k_fraction, 0.0);
    }

    #[test]
    fn one_label_off_everywhere_gives_step_mae() {
        let depths = [0.4, 0.5, 0.6, 0.7];
        let gt = GroundTruthDepth::new(2, 2, vec![0.5; 4]).unwrap();
        let map = labels(2, 2, vec![2, 2, 2, 2]);
        let r = evaluate(&map, &depths, 0.4, 0.1, &gt, None, 1).unwrap();
        assert!((r.mae_depth_m - 0.1).abs() < 1e-12);
        assert_eq!(r.label_accuracy, 0.0);
        assert_eq!(r.bad_k_fraction, 0.0); // off by exactly 1 = not bad at k=1
    }

    #[test]
    fn mask_restricts_pixel_count() {
        let depths = [0.4, 0.5];
        let gt = GroundTruthDepth::new(4, 1, vec![0.4, 0.4, 0.5, 0.5]).unwrap();
        let map = labels(4, 1, vec![0, 0, 1, 1]);
        let mask = vec![true, true, false, false];
        let r = evaluate(&map, &depths, 0.4, 0.1, &gt, Some(&mask), 1).unwrap();
        assert_eq!(r.evaluated_pixels, 2);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let depths = [0.4, 0.5];
        let gt = GroundTruthDepth::new(3, 1, vec![0.4; 3]).unwrap();
        let map = labels(2, 1, vec![0, 1]);
        assert!(evaluate(&map, &depths, 0.4, 0.1, &gt, None, 1).is_err());
    }

    #[test]
    fn texture_mask_flags_flat_regions() {
        // left half flat, right half checkered
        let w = 10;
        let data: Vec<f64> = (0..w * 4)
            .map(|i| {
                let x = i % w;
                if x < 5 {
                    0.5
                } else if (x + i / w) % 2 == 0 {
                    0.1
                } else {
                    0.9
                }
            })
            .collect();
        let img = GrayImage::new(w, 4, data).unwrap();
        let mask = texture_mask(&img, 1, 1e-3);
        assert!(!mask[1]); // deep in the flat half
        assert!(mask[w - 2]); // in the checkered half
    }
}
