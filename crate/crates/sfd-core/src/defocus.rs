//! Thin-lens optics: depth -> Gaussian blur parameter, relative blur
//! between a pair of observations, and the discrete Gaussian PSF.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Blur parameters below this are indistinguishable from a delta PSF once
/// truncated, so they snap to zero.
pub const SIGMA_SNAP: f64 = 0.3;

/// Kernel support is truncated at this many standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 3.0;

/// Thin-lens and sensor parameters for one observation.
///
/// `pixel_scale` maps the physical blur-circle radius to a blur parameter
/// in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    aperture_radius: f64,
    lens_to_image: f64,
    focal_length: f64,
    pixel_scale: f64,
}

impl CameraConfig {
    /// All lengths in meters, `pixel_scale` in pixels per meter.
    /// Requires every parameter strictly positive and `lens_to_image >
    /// focal_length` so a real image forms behind the lens.
    pub fn new(
        aperture_radius: f64,
        lens_to_image: f64,
        focal_length: f64,
        pixel_scale: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("aperture_radius", aperture_radius),
            ("lens_to_image", lens_to_image),
            ("focal_length", focal_length),
            ("pixel_scale", pixel_scale),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if lens_to_image <= focal_length {
            return Err(Error::Domain(format!(
                "lens_to_image ({lens_to_image}) must exceed focal_length ({focal_length})"
            )));
        }
        Ok(Self {
            aperture_radius,
            lens_to_image,
            focal_length,
            pixel_scale,
        })
    }

    #[inline]
    pub fn aperture_radius(&self) -> f64 {
        self.aperture_radius
    }

    #[inline]
    pub fn lens_to_image(&self) -> f64 {
        self.lens_to_image
    }

    #[inline]
    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    #[inline]
    pub fn pixel_scale(&self) -> f64 {
        self.pixel_scale
    }

    /// Depth at which the blur vanishes: `1/U = 1/F - 1/V`.
    pub fn focus_distance(&self) -> f64 {
        1.0 / (1.0 / self.focal_length - 1.0 / self.lens_to_image)
    }
}

/// Gaussian blur standard deviation in pixels; `0` is the in-focus
/// (delta) PSF.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BlurSpec {
    sigma: f64,
}

impl BlurSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Domain(format!(
                "blur sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Which image of a pair must be convolved with the relative-blur kernel
/// so the pair matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlurDirection {
    /// The reference is the sharper image: convolve the reference.
    RefIsSharper,
    /// The reference is the blurrier image: convolve the other image.
    RefIsBlurrier,
    /// Equal blur; no convolution needed.
    Equal,
}

/// Relative blur between a reference observation and another one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeBlur {
    pub sigma_r: f64,
    pub direction: BlurDirection,
}

/// Blur parameter for a scene point at depth `depth` (meters):
/// `sigma = rho * |r * V * (1/F - 1/V - 1/D)|`.
///
/// The absolute value is taken because the Gaussian PSF depends only on
/// the magnitude of the blur-circle radius; depth on either side of focus
/// yields the same kernel.
pub fn sigma_from_depth(depth: f64, cam: &CameraConfig) -> Result<BlurSpec> {
    if !depth.is_finite() || depth <= 0.0 {
        return Err(Error::Domain(format!(
            "depth must be finite and strictly positive, got {depth}"
        )));
    }
    let radius = cam.aperture_radius
        * cam.lens_to_image
        * (1.0 / cam.focal_length - 1.0 / cam.lens_to_image - 1.0 / depth);
    BlurSpec::new(cam.pixel_scale * libm::fabs(radius))
}

/// Relative blur between two absolute blur parameters, reference first:
/// `sigma_r = sqrt(|sigma_b^2 - sigma_a^2|)` with a direction tag that
/// records which image is sharper.
pub fn relative_sigma(reference: BlurSpec, other: BlurSpec) -> RelativeBlur {
    let a = reference.sigma;
    let b = other.sigma;
    if a == b {
        return RelativeBlur {
            sigma_r: 0.0,
            direction: BlurDirection::Equal,
        };
    }
    let sigma_r = libm::sqrt(libm::fabs(b * b - a * a));
    let direction = if a < b {
        BlurDirection::RefIsSharper
    } else {
        BlurDirection::RefIsBlurrier
    };
    RelativeBlur { sigma_r, direction }
}

/// Discrete isotropic Gaussian sampled at integer offsets, truncated at
/// radius `ceil(3*sigma)` and renormalized to unit sum.
///
/// The kernel is separable: 2D weights are products of a normalized 1D
/// profile, which also makes the renormalized 2D grid sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    radius: usize,
    profile: Vec<f64>,
}

impl GaussianKernel {
    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Normalized 1D profile of length `2 * radius + 1`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// 2D weight at offset `(dx, dy)`, `|dx|, |dy| <= radius`.
    #[inline]
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.profile[(dx + r) as usize] * self.profile[(dy + r) as usize]
    }

    /// Materialized `(2r+1) x (2r+1)` grid, row-major.
    pub fn values_2d(&self) -> Vec<f64> {
        let n = 2 * self.radius + 1;
        let mut out = Vec::with_capacity(n * n);
        for py in &self.profile {
            for px in &self.profile {
                out.push(py * px);
            }
        }
        out
    }

    /// Separable convolution with reflect-101 border extension.
    pub fn convolve(&self, img: &GrayImage) -> GrayImage {
        if self.radius == 0 {
            return img.clone();
        }
        let (w, h) = (img.width(), img.height());
        let r = self.radius as isize;
        let src = img.as_slice();
        let mut mid = vec![0.0f64; w * h];
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = 0.0;
                for d in -r..=r {
                    let xi = reflect101(x as isize + d, w);
                    acc += self.profile[(d + r) as usize] * row[xi];
                }
                mid[y * w + x] = acc;
            }
        }
        let mut out = vec![0.0f64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for d in -r..=r {
                    let yi = reflect101(y as isize + d, h);
                    acc += self.profile[(d + r) as usize] * mid[yi * w + x];
                }
                out[y * w + x] = acc;
            }
        }
        GrayImage::new(w, h, out).expect("convolution preserves shape and finiteness")
    }
}

/// Reflect-101 index fold: the border pixel is the mirror axis and is not
/// repeated.
#[inline]
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

/// Discrete Gaussian PSF for the given blur parameter. Sub-`SIGMA_SNAP`
/// parameters yield the 1x1 identity kernel.
pub fn gaussian_kernel(spec: BlurSpec) -> GaussianKernel {
    let sigma = spec.sigma;
    if sigma < SIGMA_SNAP {
        return GaussianKernel {
            radius: 0,
            profile: vec![1.0],
        };
    }
    let radius = libm::ceil(TRUNCATION_SIGMAS * sigma) as usize;
    let mut profile = Vec::with_capacity(2 * radius + 1);
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    for i in 0..=2 * radius {
        let x = i as f64 - radius as f64;
        profile.push(libm::exp(-x * x * inv_two_sigma2));
    }
    let sum: f64 = profile.iter().sum();
    for p in &mut profile {
        *p /= sum;
    }
    GaussianKernel { radius, profile }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_cam() -> CameraConfig {
        // r = 2 mm, V = 40 mm, F = 35 mm, rho = 1e5 px/m
        CameraConfig::new(0.002, 0.040, 0.035, 1e5).unwrap()
    }

    #[test]
    fn camera_rejects_bad_params() {
        assert!(CameraConfig::new(0.0, 0.04, 0.035, 1e5).is_err());
        assert!(CameraConfig::new(0.002, 0.03, 0.035, 1e5).is_err());
        assert!(CameraConfig::new(0.002, 0.04, 0.035, -1.0).is_err());
    }

    #[test]
    fn focus_distance_matches_lens_equation() {
        let cam = test_cam();
        let u = cam.focus_distance();
        assert!(u > 0.0);
        let err = (1.0 / u - (1.0 / 0.035 - 1.0 / 0.040)).abs();
        assert!(err < 1e-12);
    }

    #[test]
    fn sigma_zero_at_focus_distance() {
        let cam = test_cam();
        let s = sigma_from_depth(cam.focus_distance(), &cam).unwrap();
        assert!(s.sigma() < 1e-9, "sigma at focus = {}", s.sigma());
    }

    #[test]
    fn sigma_limit_at_infinite_depth() {
        let cam = test_cam();
        let limit = 1e5 * 0.002 * 0.040 * (1.0 / 0.035 - 1.0 / 0.040);
        let s = sigma_from_depth(1e12, &cam).unwrap();
        assert!((s.sigma() - limit).abs() < 1e-6);
    }

    #[test]
    fn sigma_regression_value() {
        // Frozen direct evaluation of the thin-lens relation at D = 0.5 m:
        // 1e5 * 0.002 * 0.040 * (1/0.035 - 1/0.040 - 1/0.5)
        let cam = test_cam();
        let s = sigma_from_depth(0.5, &cam).unwrap();
        assert!((s.sigma() - 12.571_428_571_428_57).abs() < 1e-10);
    }

    #[test]
    fn sigma_rejects_non_positive_depth() {
        let cam = test_cam();
        assert!(sigma_from_depth(0.0, &cam).is_err());
        assert!(sigma_from_depth(-1.0, &cam).is_err());
    }

    #[test]
    fn relative_sigma_cases() {
        let s = |v| BlurSpec::new(v).unwrap();
        let r = relative_sigma(s(0.0), s(2.0));
        assert_eq!(r.direction, BlurDirection::RefIsSharper);
        assert!((r.sigma_r - 2.0).abs() < 1e-15);

        let r = relative_sigma(s(3.0), s(5.0));
        assert_eq!(r.direction, BlurDirection::RefIsSharper);
        assert!((r.sigma_r - 4.0).abs() < 1e-12);

        let r = relative_sigma(s(5.0), s(3.0));
        assert_eq!(r.direction, BlurDirection::RefIsBlurrier);
        assert!((r.sigma_r - 4.0).abs() < 1e-12);

        let r = relative_sigma(s(1.7), s(1.7));
        assert_eq!(r.direction, BlurDirection::Equal);
        assert_eq!(r.sigma_r, 0.0);
    }

    #[test]
    fn kernel_delta() {
        let k = gaussian_kernel(BlurSpec::new(0.0).unwrap());
        assert_eq!(k.radius(), 0);
        assert_eq!(k.values_2d(), vec![1.0]);
        // sub-snap sigma also collapses to the delta
        let k = gaussian_kernel(BlurSpec::new(0.2).unwrap());
        assert_eq!(k.radius(), 0);
    }

    #[test]
    fn kernel_normalized_and_symmetric() {
        for sigma in [0.5, 1.0, 2.3, 5.0] {
            let k = gaussian_kernel(BlurSpec::new(sigma).unwrap());
            let vals = k.values_2d();
            let sum: f64 = vals.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum} at sigma {sigma}");
            let n = 2 * k.radius() + 1;
            for y in 0..n {
                for x in 0..n {
                    assert_eq!(vals[y * n + x], vals[y * n + (n - 1 - x)]);
                    assert_eq!(vals[y * n + x], vals[(n - 1 - y) * n + x]);
                }
            }
        }
    }

    #[test]
    fn kernel_sigma_one_center() {
        // Independent direct 2D evaluation over the 7x7 grid.
        let k = gaussian_kernel(BlurSpec::new(1.0).unwrap());
        assert_eq!(k.radius(), 3);
        let mut z = 0.0;
        for y in -3i32..=3 {
            for x in -3i32..=3 {
                z += (-(x * x + y * y) as f64 / 2.0).exp();
            }
        }
        let expected_center = 1.0 / z;
        let vals = k.values_2d();
        assert!((vals[3 * 7 + 3] - expected_center).abs() < 1e-14);
    }

    #[test]
    fn reflect101_fold() {
        assert_eq!(reflect101(-1, 5), 1);
        assert_eq!(reflect101(-2, 5), 2);
        assert_eq!(reflect101(5, 5), 3);
        assert_eq!(reflect101(6, 5), 2);
        assert_eq!(reflect101(0, 1), 0);
        assert_eq!(reflect101(-7, 1), 0);
    }
}
