//! Markov random field fusion of an ensemble of binary threshold maps.
//!
//! The label of each pixel minimizes a local energy made of an inter-image
//! term (agreement with every method's decisions in the 3x3 window, weighted
//! per pixel by `alpha_i` and per method by `beta_i`) and, during the
//! optional refinement sweeps, a spatial term (agreement with the current
//! labels of the 8 neighbors, weighted by `beta_sp`).
//!
//! Windows are clipped at the image border. The inter-image window includes
//! the center pixel; the spatial window excludes it. Ties go to lesion.

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage, LEVELS};
use crate::thresholders::Ensemble;

#[derive(Clone, Debug, PartialEq)]
pub struct FusionConfig {
    /// Decay rate of the weights, per gray level.
    pub gamma: f64,
    /// Weight of the spatial term; only used when `iterations > 0`.
    pub beta_sp: f64,
    /// Maximum number of spatial refinement sweeps. Zero stops after the
    /// initialization.
    pub iterations: usize,
    /// A sweep that changes fewer than this fraction of labels ends the
    /// refinement.
    pub convergence_fraction: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            beta_sp: 1.0,
            iterations: 0,
            convergence_fraction: 0.001,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.beta_sp >= 0.0 && self.beta_sp.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta_sp must be non-negative, got {}",
                self.beta_sp
            )));
        }
        if !(self.convergence_fraction > 0.0 && self.convergence_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "convergence fraction must lie in (0, 1), got {}",
                self.convergence_fraction
            )));
        }
        Ok(())
    }
}

/// Precomputed per-method weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionWeights {
    /// `beta_i = exp(-gamma |t_bar - T_i|)`
    pub beta: Vec<f64>,
    /// `alpha_i[g] = 1 - exp(-gamma |g - T_i|)`
    pub alpha: Vec<[f64; LEVELS]>,
    pub t_bar: f64,
}

pub fn compute_weights(ensemble: &Ensemble, cfg: &FusionConfig) -> FusionWeights {
    let thresholds = ensemble.thresholds();
    let t_bar = thresholds.iter().map(|&t| t as f64).sum::<f64>() / thresholds.len() as f64;
    let beta = thresholds
        .iter()
        .map(|&t| (-cfg.gamma * (t_bar - t as f64).abs()).exp())
        .collect();
    let alpha = thresholds
        .iter()
        .map(|&t| {
            let mut table = [0.0; LEVELS];
            for (g, a) in table.iter_mut().enumerate() {
                *a = 1.0 - (-cfg.gamma * (g as f64 - t as f64).abs()).exp();
            }
            table
        })
        .collect();
    FusionWeights { beta, alpha, t_bar }
}

/// Clipped 3x3 window bounds around `(row, col)`, as half-open ranges.
#[inline]
fn window(row: usize, col: usize, width: usize, height: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    (
        row.saturating_sub(1)..(row + 2).min(height),
        col.saturating_sub(1)..(col + 2).min(width),
    )
}

/// Inter-image energy of assigning `label` at `pos = (row, col)`.
pub fn inter_image_energy(
    label: bool,
    pos: (usize, usize),
    ensemble: &Ensemble,
    weights: &FusionWeights,
    img: &GrayImage,
) -> f64 {
    let (rows, cols) = window(pos.0, pos.1, img.width(), img.height());
    let mut energy = 0.0;
    for (i, member) in ensemble.members().iter().enumerate() {
        let alpha = &weights.alpha[i];
        let mut agreement = 0.0;
        for r in rows.clone() {
            for c in cols.clone() {
                if member.mask.get(r, c) == label {
                    agreement += alpha[img.get(r, c) as usize];
                }
            }
        }
        energy += weights.beta[i] * -agreement;
    }
    energy
}

/// Spatial energy of assigning `label` at `pos`: minus the number of
/// 8-neighbors currently carrying the same label.
pub fn spatial_energy(label: bool, pos: (usize, usize), current: &BinaryMask) -> f64 {
    let (rows, cols) = window(pos.0, pos.1, current.width(), current.height());
    let mut same = 0u32;
    for r in rows {
        for c in cols.clone() {
            if (r, c) != pos && current.get(r, c) == label {
                same += 1;
            }
        }
    }
    -(same as f64)
}

/// Fuses the ensemble's masks into one mask.
///
/// The initialization takes, at every pixel, the label of lowest
/// inter-image energy. Each of the `cfg.iterations` refinement sweeps then
/// relabels all pixels synchronously against the previous sweep's labels,
/// adding the spatial term. Refinement stops early once a sweep changes
/// fewer than `cfg.convergence_fraction` of the pixels.
pub fn fuse(img: &GrayImage, ensemble: &Ensemble, cfg: &FusionConfig) -> Result<BinaryMask> {
    cfg.validate()?;
    for member in ensemble.members() {
        member.mask.ensure_same_dims(img.dims())?;
    }
    let weights = compute_weights(ensemble, cfg);
    let (width, height) = img.dims();
    let (lesion, skin) = inter_image_energies(img, ensemble, &weights);

    let labels: Vec<bool> = lesion.iter().zip(&skin).map(|(e1, e0)| e1 <= e0).collect();
    let mut current = BinaryMask::new(width, height, labels)?;

    let total = (width * height) as f64;
    for _ in 0..cfg.iterations {
        let mut next = Vec::with_capacity(width * height);
        let mut changed = 0usize;
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                let e1 = cfg.beta_sp * spatial_energy(true, (r, c), &current) + lesion[i];
                let e0 = cfg.beta_sp * spatial_energy(false, (r, c), &current) + skin[i];
                let label = e1 <= e0;
                changed += usize::from(label != current.get(r, c));
                next.push(label);
            }
        }
        current = BinaryMask::new(width, height, next)?;
        if (changed as f64) / total < cfg.convergence_fraction {
            break;
        }
    }
    Ok(current)
}

/// Per-pixel inter-image energies for the lesion and skin labels.
///
/// Same accumulation order as [`inter_image_energy`], so both agree bit for
/// bit; `alpha` is looked up once per pixel and method instead of once per
/// window visit.
fn inter_image_energies(img: &GrayImage, ensemble: &Ensemble, weights: &FusionWeights) -> (Vec<f64>, Vec<f64>) {
    let (width, height) = img.dims();
    let n = width * height;
    let mut lesion = vec![0.0; n];
    let mut skin = vec![0.0; n];
    let mut pixel_alpha = vec![0.0; n];
    for (i, member) in ensemble.members().iter().enumerate() {
        let table = &weights.alpha[i];
        for (a, &g) in pixel_alpha.iter_mut().zip(img.pixels()) {
            *a = table[g as usize];
        }
        let labels = member.mask.labels();
        let beta = weights.beta[i];
        for r in 0..height {
            for c in 0..width {
                let (rows, cols) = window(r, c, width, height);
                let (mut agree1, mut agree0) = (0.0, 0.0);
                for rr in rows {
                    let base = rr * width;
                    for cc in cols.clone() {
                        let j = base + cc;
                        if labels[j] {
                            agree1 += pixel_alpha[j];
                        } else {
                            agree0 += pixel_alpha[j];
                        }
                    }
                }
                let k = r * width + c;
                lesion[k] += beta * -agree1;
                skin[k] += beta * -agree0;
            }
        }
    }
    (lesion, skin)
}
