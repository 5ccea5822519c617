//! Relative-blur data-cost volume under the equi-focal approximation.
//!
//! For a hypothesized depth label, the sharper image of each
//! (reference, other) pair is convolved with the label's relative-blur
//! kernel and the absolute residual is the data cost.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bp::LabelMap;
use crate::defocus::{
    gaussian_kernel, relative_sigma, sigma_from_depth, BlurDirection, BlurSpec, CameraConfig,
    RelativeBlur,
};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// One depth hypothesis: metric depth, per-observation absolute blur, and
/// relative blur of each observation against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub depth: f64,
    pub sigmas: Vec<BlurSpec>,
    pub relative: Vec<RelativeBlur>,
}

/// Ordered, uniformly spaced depth-label table.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    labels: Vec<Label>,
    depth_step: f64,
    reference: usize,
}

impl LabelSet {
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn depth_step(&self) -> f64 {
        self.depth_step
    }

    #[inline]
    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn depth_of(&self, index: usize) -> f64 {
        self.labels[index].depth
    }
}

/// Uniform depth discretization over `[depth_min, depth_max]` with blur
/// parameters for every camera and relative blurs against the reference
/// observation.
///
/// The range must lie on one side of every camera's focus distance;
/// otherwise the two-sided sigma ambiguity would alias two depths onto
/// one blur parameter.
pub fn build_label_set(
    depth_min: f64,
    depth_max: f64,
    count: usize,
    cams: &[CameraConfig],
    reference: usize,
) -> Result<LabelSet> {
    if !(depth_min.is_finite() && depth_max.is_finite()) || depth_min <= 0.0 {
        return Err(Error::Domain(format!(
            "depth range [{depth_min}, {depth_max}] must be finite and positive"
        )));
    }
    if depth_min >= depth_max {
        return Err(Error::Domain(format!(
            "depth_min ({depth_min}) must be strictly below depth_max ({depth_max})"
        )));
    }
    if count < 2 {
        return Err(Error::Usage(format!("need at least 2 labels, got {count}")));
    }
    if cams.is_empty() {
        return Err(Error::Usage("need at least one camera config".into()));
    }
    if reference >= cams.len() {
        return Err(Error::Usage(format!(
            "reference index {reference} out of range for {} cameras",
            cams.len()
        )));
    }
    for (i, cam) in cams.iter().enumerate() {
        let u = cam.focus_distance();
        if depth_min < u && depth_max > u {
            return Err(Error::Domain(format!(
                "depth range [{depth_min}, {depth_max}] straddles camera {i}'s focus \
                 distance {u}; blur is ambiguous across focus"
            )));
        }
    }
    let depth_step = (depth_max - depth_min) / (count - 1) as f64;
    let mut labels = Vec::with_capacity(count);
    for k in 0..count {
        let depth = if k + 1 == count {
            depth_max
        } else {
            depth_min + k as f64 * depth_step
        };
        let sigmas: Vec<BlurSpec> = cams
            .iter()
            .map(|cam| sigma_from_depth(depth, cam))
            .collect::<Result<_>>()?;
        let relative = sigmas
            .iter()
            .map(|s| relative_sigma(sigmas[reference], *s))
            .collect();
        labels.push(Label {
            depth,
            sigmas,
            relative,
        });
    }
    Ok(LabelSet {
        labels,
        depth_step,
        reference,
    })
}

/// H x W x L stack of non-negative data costs, label-contiguous per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    label_count: usize,
    data: Vec<f64>,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, label_count: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * label_count {
            return Err(Error::Structural(format!(
                "cost data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                label_count
            )));
        }
        if data.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Structural(
                "cost volume entries must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            label_count,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn label_count(&self) -> usize {
        self.label_count
    }

    /// Cost vector over labels at one pixel.
    #[inline]
    pub fn costs_at(&self, x: usize, y: usize) -> &[f64] {
        let base = (y * self.width + x) * self.label_count;
        &self.data[base..base + self.label_count]
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, label: usize) -> f64 {
        self.data[(y * self.width + x) * self.label_count + label]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Per-pixel argmin labeling, ties toward the smaller index.
    pub fn argmin_labels(&self) -> LabelMap {
        let mut labels = Vec::with_capacity(self.width * self.height);
        for px in 0..self.width * self.height {
            let base = px * self.label_count;
            let mut best = 0usize;
            let mut best_cost = self.data[base];
            for l in 1..self.label_count {
                let c = self.data[base + l];
                if c < best_cost {
                    best_cost = c;
                    best = l;
                }
            }
            labels.push(best);
        }
        LabelMap::new(self.width, self.height, labels).expect("argmin labels are in range")
    }

    /// One H x W slice as an image (for dumps and inspection).
    pub fn slice_image(&self, label: usize) -> GrayImage {
        let mut out = Vec::with_capacity(self.width * self.height);
        for px in 0..self.width * self.height {
            out.push(self.data[px * self.label_count + label]);
        }
        GrayImage::new(self.width, self.height, out).expect("slice has valid shape")
    }
}

/// Absolute residual between the reference and one other observation
/// under a hypothesized relative blur. The sharper image of the pair is
/// convolved (reflect-101 borders) so the residual vanishes when the
/// hypothesis matches the true relative blur.
pub fn data_cost_plane(
    g_ref: &GrayImage,
    g_other: &GrayImage,
    rel: RelativeBlur,
) -> Result<GrayImage> {
    if !g_ref.same_size(g_other) {
        return Err(Error::Structural(format!(
            "reference {}x{} and observation {}x{} sizes disagree",
            g_ref.width(),
            g_ref.height(),
            g_other.width(),
            g_other.height()
        )));
    }
    let (a, b) = match rel.direction {
        BlurDirection::Equal => (g_ref.clone(), g_other.clone()),
        BlurDirection::RefIsSharper => {
            let k = gaussian_kernel(BlurSpec::new(rel.sigma_r)?);
            (k.convolve(g_ref), g_other.clone())
        }
        BlurDirection::RefIsBlurrier => {
            let k = gaussian_kernel(BlurSpec::new(rel.sigma_r)?);
            (g_ref.clone(), k.convolve(g_other))
        }
    };
    let data: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| libm::fabs(x - y))
        .collect();
    GrayImage::new(g_ref.width(), g_ref.height(), data)
}

/// Sum of `data_cost_plane` over all non-reference views for one label.
pub fn cost_slice_for_label(
    observations: &[GrayImage],
    labels: &LabelSet,
    label_index: usize,
) -> Result<GrayImage> {
    let reference = labels.reference();
    let g_ref = &observations[reference];
    let mut acc = vec![0.0f64; g_ref.width() * g_ref.height()];
    let label = &labels.labels()[label_index];
    for (i, g) in observations.iter().enumerate() {
        if i == reference {
            continue;
        }
        let plane = data_cost_plane(g_ref, g, label.relative[i])?;
        for (a, p) in acc.iter_mut().zip(plane.as_slice()) {
            *a += p;
        }
    }
    GrayImage::new(g_ref.width(), g_ref.height(), acc)
}

/// Box mean with the given radius; windows are clipped at the borders and
/// normalized by the in-bounds pixel count. Radius 0 is the identity.
pub fn box_filter(img: &GrayImage, radius: usize) -> GrayImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;
    let src = img.as_slice();
    let mut sum = vec![0.0f64; w * h];
    let mut cnt = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let x0 = (x as isize - r).max(0) as usize;
            let x1 = ((x as isize + r) as usize).min(w - 1);
            let mut s = 0.0;
            for xi in x0..=x1 {
                s += src[y * w + xi];
            }
            sum[y * w + x] = s;
            cnt[y * w + x] = (x1 - x0 + 1) as f64;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        let y0 = (y as isize - r).max(0) as usize;
        let y1 = ((y as isize + r) as usize).min(h - 1);
        for x in 0..w {
            let mut s = 0.0;
            let mut c = 0.0;
            for yi in y0..=y1 {
                s += sum[yi * w + x];
                c += cnt[yi * w + x];
            }
            out[y * w + x] = s / c;
        }
    }
    GrayImage::new(w, h, out).expect("box filter preserves shape")
}

/// Full data-cost volume: per label, residuals summed over views, then
/// optionally box-aggregated. Radius 0 keeps the pointwise residuals.
pub fn build_cost_volume(
    observations: &[GrayImage],
    labels: &LabelSet,
    aggregation_radius: usize,
) -> Result<CostVolume> {
    if observations.len() < 2 {
        return Err(Error::Usage(format!(
            "need at least 2 observations, got {}",
            observations.len()
        )));
    }
    if labels.reference() >= observations.len() {
        return Err(Error::Usage(format!(
            "reference index {} out of range for {} observations",
            labels.reference(),
            observations.len()
        )));
    }
    let g_ref = &observations[labels.reference()];
    for (i, g) in observations.iter().enumerate() {
        if !g.same_size(g_ref) {
            return Err(Error::Structural(format!(
                "observation {i} size {}x{} disagrees with reference {}x{}",
                g.width(),
                g.height(),
                g_ref.width(),
                g_ref.height()
            )));
        }
    }
    for label in labels.labels() {
        if label.sigmas.len() != observations.len() {
            return Err(Error::Structural(format!(
                "label set built for {} cameras but {} observations given",
                label.sigmas.len(),
                observations.len()
            )));
        }
    }
    let (w, h) = (g_ref.width(), g_ref.height());
    let l_count = labels.len();
    let mut data = vec![0.0f64; w * h * l_count];
    for l in 0..l_count {
        let slice = cost_slice_for_label(observations, labels, l)?;
        let slice = box_filter(&slice, aggregation_radius);
        for (px, v) in slice.as_slice().iter().enumerate() {
            data[px * l_count + l] = *v;
        }
    }
    CostVolume::new(w, h, l_count, data)
}

/// Assembles a volume from per-label slices (produced by
/// `cost_slice_for_label` + `box_filter`), in label order.
pub fn volume_from_slices(slices: &[GrayImage]) -> Result<CostVolume> {
    if slices.is_empty() {
        return Err(Error::Usage("no cost slices given".into()));
    }
    let (w, h) = (slices[0].width(), slices[0].height());
    let l_count = slices.len();
    let mut data = vec![0.0f64; w * h * l_count];
    for (l, slice) in slices.iter().enumerate() {
        if slice.width() != w || slice.height() != h {
            return Err(Error::Structural("cost slice sizes disagree".into()));
        }
        for (px, v) in slice.as_slice().iter().enumerate() {
            data[px * l_count + l] = *v;
        }
    }
    CostVolume::new(w, h, l_count, data)
}

/// Label-index map plus the label set that defines its metric meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub labels: LabelMap,
    pub label_set: LabelSet,
}

impl DepthMap {
    pub fn new(labels: LabelMap, label_set: LabelSet) -> Result<Self> {
        if labels.as_slice().iter().any(|l| *l >= label_set.len()) {
            return Err(Error::Structural(
                "label map contains indices outside the label set".into(),
            ));
        }
        Ok(Self { labels, label_set })
    }

    /// Metric depth per pixel, row-major.
    pub fn metric_depths(&self) -> Vec<f64> {
        self.labels
            .as_slice()
            .iter()
            .map(|l| self.label_set.depth_of(*l))
            .collect()
    }
}
