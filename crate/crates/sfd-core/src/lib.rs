//! Depth-from-defocus core.
//!
//! Estimates a per-pixel depth-label map from two or more differently
//! defocused images of the same scene. Blur is modeled as an isotropic
//! Gaussian whose standard deviation follows the thin-lens relation,
//! matching between observations uses the relative-blur kernel under the
//! local space-invariance (equi-focal) approximation, and inference is
//! min-sum loopy belief propagation on the 4-connected grid with a
//! truncated-absolute smoothness prior.
//!
//! The crate is `no_std` + `alloc`; all IO lives in the companion `sfdbp`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bp;
pub mod cost;
pub mod defocus;
pub mod error;
pub mod forward;
pub mod image;
pub mod oracle;

pub use bp::{
    labeling_energy, pairwise_cost, run_bp, BpDiagnostics, LabelMap, MessageField, PriorParams,
    Schedule,
};
pub use cost::{
    box_filter, build_cost_volume, build_label_set, cost_slice_for_label, data_cost_plane,
    volume_from_slices, CostVolume, DepthMap, Label, LabelSet,
};
pub use defocus::{
    gaussian_kernel, relative_sigma, sigma_from_depth, BlurDirection, BlurSpec, CameraConfig,
    GaussianKernel, RelativeBlur,
};
pub use error::{Error, Result};
pub use forward::{render_observation_stack, space_variant_blur, NoiseSpec};
pub use image::{GrayImage, GroundTruthDepth};
pub use oracle::{chain_dp, exhaustive_map, TinyInstance};
