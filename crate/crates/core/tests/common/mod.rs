//! Independent oracles and fixture generators shared by the integration
//! tests and the acceptance suite. Nothing here calls into the code paths
//! it is used to check.

#![allow(dead_code)]

use dermfuse::imgcore::{BinaryMask, ColorImage, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// thresholding: O(L^2) scans straight from the pixel list

fn is_candidate(pixels: &[u8], t: u8) -> bool {
    pixels.iter().any(|&v| v <= t) && pixels.iter().any(|&v| v > t)
}

fn split(pixels: &[u8], t: u8) -> (Vec<f64>, Vec<f64>) {
    let lower = pixels.iter().filter(|&&v| v <= t).map(|&v| v as f64).collect();
    let upper = pixels.iter().filter(|&&v| v > t).map(|&v| v as f64).collect();
    (lower, upper)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Scans every candidate; `better(new, best)` decides replacement, so the
/// first (smallest) T wins ties.
fn scan(pixels: &[u8], criterion: impl Fn(u8) -> f64, better: impl Fn(f64, f64) -> bool) -> Option<u8> {
    let mut best: Option<(u8, f64)> = None;
    for t in 0..=254u8 {
        if !is_candidate(pixels, t) {
            continue;
        }
        let v = criterion(t);
        if best.is_none_or(|(_, b)| better(v, b)) {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
}

pub fn oracle_otsu(pixels: &[u8]) -> Option<u8> {
    let n = pixels.len() as f64;
    scan(
        pixels,
        |t| {
            let (lo, hi) = split(pixels, t);
            let (p0, p1) = (lo.len() as f64 / n, hi.len() as f64 / n);
            let d = mean(&lo) - mean(&hi);
            p0 * p1 * d * d
        },
        |v, b| v > b,
    )
}

fn level_probabilities(pixels: &[u8]) -> Vec<f64> {
    (0..256)
        .map(|g| pixels.iter().filter(|&&v| v as usize == g).count() as f64 / pixels.len() as f64)
        .collect()
}

pub fn oracle_kapur(pixels: &[u8]) -> Option<u8> {
    let p = level_probabilities(pixels);
    let entropy = |levels: &[f64]| {
        let mass: f64 = levels.iter().sum();
        -levels
            .iter()
            .filter(|&&q| q > 0.0)
            .map(|&q| (q / mass) * (q / mass).ln())
            .sum::<f64>()
    };
    scan(
        pixels,
        |t| {
            let t = t as usize;
            entropy(&p[..=t]) + entropy(&p[t + 1..])
        },
        |v, b| v > b,
    )
}

pub fn oracle_kittler(pixels: &[u8]) -> Option<u8> {
    let n = pixels.len() as f64;
    scan(
        pixels,
        |t| {
            let (lo, hi) = split(pixels, t);
            let (p1, p2) = (lo.len() as f64 / n, hi.len() as f64 / n);
            let s1 = variance(&lo).max(1.0 / 12.0).sqrt();
            let s2 = variance(&hi).max(1.0 / 12.0).sqrt();
            1.0 + 2.0 * (p1 * s1.ln() + p2 * s2.ln()) - 2.0 * (p1 * p1.ln() + p2 * p2.ln())
        },
        |v, b| v < b,
    )
}

pub fn oracle_huang_wang(pixels: &[u8]) -> Option<u8> {
    let gmin = *pixels.iter().min()? as f64;
    let gmax = *pixels.iter().max()? as f64;
    let c = gmax - gmin;
    let s = |mu: f64| {
        if mu >= 1.0 {
            0.0
        } else {
            -mu * mu.ln() - (1.0 - mu) * (1.0 - mu).ln()
        }
    };
    scan(
        pixels,
        |t| {
            let (lo, hi) = split(pixels, t);
            let (m0, m1) = (mean(&lo), mean(&hi));
            pixels
                .iter()
                .map(|&v| {
                    let m = if v <= t { m0 } else { m1 };
                    s(1.0 / (1.0 + (v as f64 - m).abs() / c))
                })
                .sum()
        },
        |v, b| v < b,
    )
}

// ---------------------------------------------------------------------------
// fusion: direct per-pixel evaluation of the local energy with beta_sp = 0

/// Fused label per pixel from the raw definitions. `masks[i]` is method i's
/// binary decision map, `thresholds[i]` its threshold.
pub fn oracle_fuse(img: &GrayImage, thresholds: &[u8], masks: &[BinaryMask], gamma: f64) -> Vec<bool> {
    let p = thresholds.len() as f64;
    let t_bar = thresholds.iter().map(|&t| t as f64).sum::<f64>() / p;
    let beta: Vec<f64> = thresholds.iter().map(|&t| (-gamma * (t_bar - t as f64).abs()).exp()).collect();
    let alpha = |x: u8, t: u8| 1.0 - (-gamma * (x as f64 - t as f64).abs()).exp();
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for m in 0..h {
        for n in 0..w {
            let energy = |y: bool| {
                let mut u = 0.0;
                for (i, mask) in masks.iter().enumerate() {
                    let mut s = 0.0;
                    for p in m.saturating_sub(1)..=(m + 1).min(h - 1) {
                        for q in n.saturating_sub(1)..=(n + 1).min(w - 1) {
                            if mask.get(p, q) == y {
                                s += alpha(img.get(p, q), thresholds[i]);
                            }
                        }
                    }
                    u += beta[i] * -s;
                }
                u
            };
            out.push(energy(true) <= energy(false));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// morphology

pub fn oracle_dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = radius as i64;
    BinaryMask::from_fn(w, h, |row, col| {
        for dy in -r..=r {
            for dx in -r..=r {
                if dy * dy + dx * dx > r * r {
                    continue;
                }
                let (rr, cc) = (row as i64 + dy, col as i64 + dx);
                if rr >= 0 && cc >= 0 && rr < h as i64 && cc < w as i64 && mask.get(rr as usize, cc as usize) {
                    return true;
                }
            }
        }
        false
    })
    .unwrap()
}

pub fn oracle_diameter(mask: &BinaryMask) -> f64 {
    let pts: Vec<(f64, f64)> = (0..mask.height())
        .flat_map(|r| (0..mask.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| mask.get(r, c))
        .map(|(r, c)| (r as f64, c as f64))
        .collect();
    let mut best: f64 = 0.0;
    for a in &pts {
        for b in &pts {
            best = best.max(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
        }
    }
    best
}

pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density)).unwrap()
}

// ---------------------------------------------------------------------------
// manual borders: dense sampling + crossing-number point-in-polygon

pub fn oracle_border_area(points: &[(f64, f64)], width: usize, height: usize, samples_per_span: usize) -> usize {
    let n = points.len();
    let mut poly = Vec::new();
    for j in 0..n {
        let (a, b, c) = (points[j], points[(j + 1) % n], points[(j + 2) % n]);
        for s in 0..samples_per_span {
            let t = s as f64 / samples_per_span as f64;
            let w0 = (1.0 - t).powi(2) / 2.0;
            let w2 = t * t / 2.0;
            let w1 = 1.0 - w0 - w2;
            poly.push((w0 * a.0 + w1 * b.0 + w2 * c.0, w0 * a.1 + w1 * b.1 + w2 * c.1));
        }
    }
    let mut area = 0;
    for r in 0..height {
        for c in 0..width {
            let (x, y) = (c as f64, r as f64);
            let mut inside = false;
            let mut j = poly.len() - 1;
            for i in 0..poly.len() {
                let (pi, pj) = (poly[i], poly[j]);
                if (pi.1 > y) != (pj.1 > y) && x < (pj.0 - pi.0) * (y - pi.1) / (pj.1 - pi.1) + pi.0 {
                    inside = !inside;
                }
                j = i;
            }
            area += usize::from(inside);
        }
    }
    area
}

// ---------------------------------------------------------------------------
// synthetic dermoscopy-like images

pub const SYN_WIDTH: usize = 768;
pub const SYN_HEIGHT: usize = 512;

/// Dark disk on light skin with additive Gaussian noise on every channel.
pub fn synthetic_lesion(
    seed: u64,
    width: usize,
    height: usize,
    center: (f64, f64),
    radius: f64,
    noise_sigma: f64,
) -> (ColorImage, BinaryMask) {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, noise_sigma).unwrap();
    let skin = [225.0, 180.0, 170.0];
    let lesion = [120.0, 80.0, 60.0];
    let truth = disk_mask(width, height, center, radius);
    let mut pixels = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let base = if truth.get(r, c) { lesion } else { skin };
            let px = base.map(|v| (v + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8);
            pixels.push(px);
        }
    }
    (ColorImage::new(width, height, pixels).unwrap(), truth)
}

/// Pixels whose centers lie within `radius` of `center = (x, y)`.
pub fn disk_mask(width: usize, height: usize, center: (f64, f64), radius: f64) -> BinaryMask {
    BinaryMask::from_fn(width, height, |r, c| {
        let (dx, dy) = (c as f64 - center.0, r as f64 - center.1);
        dx * dx + dy * dy <= radius * radius
    })
    .unwrap()
}

/// Random test image: even seeds give uniform noise over a random sub-range,
/// odd seeds a two-mode mixture, so both flat and bimodal histograms occur.
pub fn random_gray(seed: u64, width: usize, height: usize) -> GrayImage {
    let mut rng = rng(seed);
    let n = width * height;
    let pixels: Vec<u8> = if seed.is_multiple_of(2) {
        let lo: u8 = rng.random_range(0..200);
        let hi: u8 = rng.random_range(lo + 2..=255);
        (0..n).map(|_| rng.random_range(lo..=hi)).collect()
    } else {
        let m0 = rng.random_range(20.0..120.0);
        let m1 = rng.random_range(130.0..235.0);
        let s0 = rng.random_range(2.0..30.0);
        let s1 = rng.random_range(2.0..30.0);
        let w0 = rng.random_range(0.2..0.8);
        let d0 = Normal::new(m0, s0).unwrap();
        let d1 = Normal::new(m1, s1).unwrap();
        (0..n)
            .map(|_| {
                let v: f64 = if rng.random_bool(w0) { d0.sample(&mut rng) } else { d1.sample(&mut rng) };
                v.round().clamp(0.0, 255.0) as u8
            })
            .collect()
    };
    GrayImage::new(width, height, pixels).unwrap()
}

/// A random fusion instance: image, thresholds and masks of a 2-4 method
/// ensemble. Half the instances binarize the image, half use free masks.
pub fn random_fusion_instance(seed: u64, w: usize, h: usize) -> (GrayImage, Vec<u8>, Vec<BinaryMask>) {
    let mut rng = rng(seed ^ 0x5eed);
    let img = GrayImage::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap();
    let p = rng.random_range(2..=4);
    let mut thresholds = Vec::new();
    let mut masks = Vec::new();
    for _ in 0..p {
        let t: u8 = rng.random_range(0..=254);
        thresholds.push(t);
        let mask = if seed.is_multiple_of(2) {
            BinaryMask::from_fn(w, h, |r, c| img.get(r, c) <= t).unwrap()
        } else {
            random_mask(&mut rng, w, h, 0.5)
        };
        masks.push(mask);
    }
    (img, thresholds, masks)
}

pub fn ensemble_from(thresholds: &[u8], masks: &[BinaryMask]) -> dermfuse::Ensemble {
    use dermfuse::thresholders::{EnsembleMember, Method, ThresholdResult};
    dermfuse::Ensemble::new(
        thresholds
            .iter()
            .zip(masks)
            .map(|(&t, m)| EnsembleMember {
                result: ThresholdResult { method: Method::Otsu, threshold: t, criterion_values: vec![] },
                mask: m.clone(),
            })
            .collect(),
    )
    .unwrap()
}

/// Random image, 1–4 thresholds and one mask shared by every method.
pub fn unanimous_instance(seed: u64) -> (GrayImage, Vec<u8>, BinaryMask) {
    let mut rng = rng(seed);
    let (w, h) = (rng.random_range(3..12), rng.random_range(3..12));
    let p = rng.random_range(1..=4);
    let thresholds: Vec<u8> = (0..p).map(|_| rng.random_range(0..=254)).collect();
    let density = rng.random_range(0.1..0.9);
    let common = random_mask(&mut rng, w, h, density);
    let img = GrayImage::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap();
    (img, thresholds, common)
}

/// Some method carries nonzero alpha somewhere in the 3×3 window.
pub fn window_has_weight(img: &GrayImage, thresholds: &[u8], r: usize, c: usize) -> bool {
    let (w, h) = img.dims();
    (r.saturating_sub(1)..=(r + 1).min(h - 1))
        .flat_map(|p| (c.saturating_sub(1)..=(c + 1).min(w - 1)).map(move |q| (p, q)))
        .any(|(p, q)| thresholds.iter().any(|&t| img.get(p, q) != t))
}

/// Every pixel in the clipped 3×3 window has the center's label.
pub fn window_is_uniform(mask: &BinaryMask, r: usize, c: usize) -> bool {
    let (w, h) = mask.dims();
    let label = mask.get(r, c);
    (r.saturating_sub(1)..=(r + 1).min(h - 1))
        .all(|p| (c.saturating_sub(1)..=(c + 1).min(w - 1)).all(|q| mask.get(p, q) == label))
}
