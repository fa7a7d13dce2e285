//! Raster types shared by the whole pipeline: color and gray images,
//! gray-level histograms and binary masks, plus file I/O.
//!
//! All rasters are stored row-major and addressed as `(row, col)`.

mod io;

pub use io::{overlay, read_image, read_mask, write_color_png, write_mask, write_overlay, write_ppm, MaskFormat};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Number of gray levels in every [`GrayImage`].
pub const LEVELS: usize = 256;

pub type Rgb = [u8; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Red,
    Green,
    Blue,
}

impl Channel {
    fn index(self) -> usize {
        match self {
            Channel::Red => 0,
            Channel::Green => 1,
            Channel::Blue => 2,
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "red" => Ok(Channel::Red),
            "green" => Ok(Channel::Green),
            "blue" => Ok(Channel::Blue),
            other => Err(Error::InvalidConfig(format!("unknown channel '{other}'"))),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Red => "red",
            Channel::Green => "green",
            Channel::Blue => "blue",
        })
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "zero-sized raster {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidImage(format!(
            "{len} pixels do not fill a {width}x{height} raster"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    /// Replicates a gray image into all three channels.
    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            width: gray.width,
            height: gray.height,
            pixels: gray.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, color: Rgb) {
        self.pixels[row * self.width + col] = color;
    }

    /// Projects one channel out as a gray image of the same size.
    pub fn extract_channel(&self, channel: Channel) -> GrayImage {
        let c = channel.index();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|px| px[c]).collect(),
        }
    }
}

/// Single-channel 8-bit image; the `u8` storage pins it to [`LEVELS`] gray levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn histogram(&self) -> Histogram {
        let mut counts = [0u64; LEVELS];
        for &v in &self.pixels {
            counts[v as usize] += 1;
        }
        Histogram {
            counts,
            total: self.pixels.len() as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; LEVELS],
    total: u64,
}

impl Histogram {
    /// Builds a histogram from `(level, count)` pairs; repeated levels accumulate.
    pub fn from_pairs(pairs: &[(u8, u64)]) -> Self {
        let mut counts = [0u64; LEVELS];
        for &(level, count) in pairs {
            counts[level as usize] += count;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: [u64; LEVELS]) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Lowest and highest populated levels, `None` for an empty histogram.
    pub fn populated_range(&self) -> Option<(usize, usize)> {
        let lo = self.counts.iter().position(|&c| c > 0)?;
        let hi = self.counts.iter().rposition(|&c| c > 0)?;
        Some((lo, hi))
    }
}

/// Lesion/background labeling; `true` is lesion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    labels: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, labels: Vec<bool>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Builds a mask from 0/1 bytes; any other value is rejected.
    pub fn from_bits(width: usize, height: usize, bits: &[u8]) -> Result<Self> {
        let labels = bits
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidImage(format!("non-binary label {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, labels)
    }

    /// Builds a mask by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut labels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                labels.push(f(r, c));
            }
        }
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.labels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.labels[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.labels.iter().any(|&v| v)
    }

    pub(crate) fn ensure_same_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: self.dims(),
            });
        }
        Ok(())
    }

    /// Foreground pixels that have at least one 4-neighbor in the background.
    /// Pixels on the image edge only look at in-bounds neighbors.
    pub fn boundary(&self) -> BinaryMask {
        let (w, h) = (self.width, self.height);
        let mut out = vec![false; w * h];
        for r in 0..h {
            for c in 0..w {
                if !self.get(r, c) {
                    continue;
                }
                let bg = (r > 0 && !self.get(r - 1, c))
                    || (r + 1 < h && !self.get(r + 1, c))
                    || (c > 0 && !self.get(r, c - 1))
                    || (c + 1 < w && !self.get(r, c + 1));
                out[r * w + c] = bg;
            }
        }
        BinaryMask {
            width: w,
            height: h,
            labels: out,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extract_single_pixel_channels() {
        let img = ColorImage::new(1, 1, vec![[10, 20, 30]]).unwrap();
        assert_eq!(img.extract_channel(Channel::Blue).pixels(), &[30]);
        assert_eq!(img.extract_channel(Channel::Red).pixels(), &[10]);
        assert_eq!(img.extract_channel(Channel::Green).pixels(), &[20]);
    }

    #[test]
    fn extract_constant_blue() {
        let img = ColorImage::filled(2, 2, [0, 0, 255]).unwrap();
        let gray = img.extract_channel(Channel::Blue);
        assert_eq!(gray.dims(), (2, 2));
        assert!(gray.pixels().iter().all(|&v| v == 255));
    }

    #[test]
    fn histogram_counts() {
        let img = GrayImage::new(2, 2, vec![0, 0, 255, 255]).unwrap();
        let h = img.histogram();
        assert_eq!(h.counts()[0], 2);
        assert_eq!(h.counts()[255], 2);
        assert_eq!(h.total(), 4);

        let h = GrayImage::new(1, 1, vec![128]).unwrap().histogram();
        assert_eq!(h.counts()[128], 1);
        assert_eq!(h.total(), 1);
        assert_eq!(h.populated_range(), Some((128, 128)));
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![1, 2, 3]).is_err());
        assert!(BinaryMask::from_bits(1, 2, &[0, 2]).is_err());
    }

    #[test]
    fn boundary_of_solid_square() {
        let mask = BinaryMask::from_fn(5, 5, |r, c| (1..4).contains(&r) && (1..4).contains(&c)).unwrap();
        let b = mask.boundary();
        assert_eq!(b.count(), 8);
        assert!(!b.get(2, 2));
    }

    proptest! {
        #[test]
        fn histogram_conserves_pixels(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
            let hist = GrayImage::new(w, h, pixels).unwrap().histogram();
            prop_assert_eq!(hist.counts().iter().sum::<u64>(), (w * h) as u64);
            prop_assert_eq!(hist.total(), (w * h) as u64);
        }

        #[test]
        fn channel_projection_is_idempotent(px in proptest::collection::vec(any::<[u8; 3]>(), 12)) {
            let img = ColorImage::new(4, 3, px).unwrap();
            for ch in [Channel::Red, Channel::Green, Channel::Blue] {
                let once = img.extract_channel(ch);
                let twice = ColorImage::from_gray(&once).extract_channel(ch);
                prop_assert_eq!(once, twice);
            }
        }
    }
}
