use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Single-channel floating-point raster, row-major.
///
/// Observations use the `[0, 1]` intensity convention; intermediate
/// residual planes may exceed it. All values must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Structural(format!(
                "image data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structural("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
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
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_size(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Metric ground-truth depth map paired with a texture image of the same
/// dimensions. Depths are in meters, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthDepth {
    width: usize,
    height: usize,
    depth: Vec<f64>,
}

impl GroundTruthDepth {
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::Structural(format!(
                "depth data length {} does not match {}x{}",
                depth.len(),
                width,
                height
            )));
        }
        if depth.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::Domain(
                "depth map entries must be finite and strictly positive".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            depth,
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
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.depth
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &d in &self.depth {
            if d < lo {
                lo = d;
            }
            if d > hi {
                hi = d;
            }
        }
        (lo, hi)
    }
}
