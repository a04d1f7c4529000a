//! Synthesizes bi-temporal change-detection training samples (pre-event
//! image, post-event image, binary change label) from single-temporal images
//! with object masks. Three source manipulations generate the change: random
//! disjoint crops with rotation, instance erasure via fast-marching
//! inpainting, and instance copy-paste with Fourier or Gaussian blending.
//! The change label is always the xor of the two semantic labels.

pub mod blend;
pub mod copypaste;
pub mod dataset_io;
pub mod error;
pub mod geometry;
pub mod inpaint;
pub mod instances;
pub mod labelgen;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod rng;

pub use error::{Error, Result};
pub use raster::{RasterImage, SemanticMask};
