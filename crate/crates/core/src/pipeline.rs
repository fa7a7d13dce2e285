//! End-to-end border detection on one image.

use crate::error::Result;
use crate::fusion::{fuse, FusionConfig};
use crate::imgcore::{BinaryMask, Channel, ColorImage};
use crate::morphology::{postprocess, Postprocessed, DEFAULT_EXPAND_K};
use crate::thresholders::{run_ensemble, Ensemble, Method, Polarity};

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentConfig {
    pub channel: Channel,
    pub methods: Vec<Method>,
    pub polarity: Polarity,
    pub fusion: FusionConfig,
    /// Dilation scale `k`; `None` disables the expansion.
    pub expand_k: Option<f64>,
}

impl Default for SegmentConfig {
    /// Blue channel, all four methods, gamma 0.1, no spatial sweeps, k = 7.
    fn default() -> Self {
        Self {
            channel: Channel::Blue,
            methods: Method::ALL.to_vec(),
            polarity: Polarity::DarkForeground,
            fusion: FusionConfig::default(),
            expand_k: Some(DEFAULT_EXPAND_K),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub ensemble: Ensemble,
    /// Raw fusion output, before postprocessing.
    pub fused: BinaryMask,
    pub post: Postprocessed,
}

impl Segmentation {
    /// The final lesion mask.
    pub fn mask(&self) -> &BinaryMask {
        &self.post.mask
    }
}

pub fn segment(img: &ColorImage, cfg: &SegmentConfig) -> Result<Segmentation> {
    cfg.fusion.validate()?;
    let gray = img.extract_channel(cfg.channel);
    let ensemble = run_ensemble(&gray, &cfg.methods, cfg.polarity)?;
    let fused = fuse(&gray, &ensemble, &cfg.fusion)?;
    let post = postprocess(&fused, cfg.expand_k)?;
    Ok(Segmentation {
        ensemble,
        fused,
        post,
    })
}
