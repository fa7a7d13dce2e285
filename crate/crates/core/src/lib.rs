//! Lesion border detection in dermoscopy images.
//!
//! The blue channel is thresholded by four global methods, their binary
//! maps are fused under a Markov random field energy, and the fused mask is
//! hole-filled, reduced to its largest component and dilated in proportion
//! to the lesion diameter. [`metrics`] scores a result against a manual
//! border with the XOR error.

pub mod cli;
pub mod error;
pub mod fusion;
pub mod imgcore;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod thresholders;

pub use error::{Error, Result};
pub use fusion::FusionConfig;
pub use imgcore::{BinaryMask, Channel, ColorImage, GrayImage, Histogram};
pub use pipeline::{segment, SegmentConfig, Segmentation};
pub use thresholders::{Ensemble, Method, Polarity, ThresholdResult};
