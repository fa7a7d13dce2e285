//! Raster file I/O: PNG (8-bit) and binary PPM/PGM with maxval 255.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;

use super::{BinaryMask, ColorImage, GrayImage, Rgb};
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaskFormat {
    /// Binary PGM (P5), 0 = background, 255 = lesion.
    #[default]
    Pgm,
    /// 8-bit grayscale PNG with the same value convention.
    Png,
}

/// Reads a PNG, PPM (P6) or PGM (P5) file. Gray inputs are replicated into
/// all three channels.
pub fn read_image(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub(crate) fn decode_image(bytes: &[u8]) -> Result<ColorImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") {
        decode_pnm(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "expected PNG or binary PPM/PGM".into(),
        ))
    }
}

/// Reads a mask file: any nonzero sample is lesion.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = read_image(path)?;
    let labels = img.pixels().iter().map(|px| px.iter().any(|&v| v != 0)).collect();
    BinaryMask::new(img.width(), img.height(), labels)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask, format: MaskFormat) -> Result<()> {
    let data: Vec<u8> = mask.labels().iter().map(|&v| if v { 255 } else { 0 }).collect();
    let gray = GrayImage::new(mask.width(), mask.height(), data)?;
    match format {
        MaskFormat::Pgm => write_file(path.as_ref(), |w| {
            write!(w, "P5\n{} {}\n255\n", gray.width(), gray.height())?;
            w.write_all(gray.pixels())
        }),
        MaskFormat::Png => write_png(path.as_ref(), gray.width(), gray.height(), png::ColorType::Grayscale, gray.pixels()),
    }
}

pub fn write_ppm(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    write_file(path.as_ref(), |w| {
        write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
        w.write_all(img.pixels().as_flattened())
    })
}

pub fn write_color_png(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    write_png(
        path.as_ref(),
        img.width(),
        img.height(),
        png::ColorType::Rgb,
        img.pixels().as_flattened(),
    )
}

/// Draws the 4-adjacency boundary of each mask over a copy of `img`, later
/// masks painting over earlier ones.
pub fn overlay(img: &ColorImage, contours: &[(BinaryMask, Rgb)]) -> Result<ColorImage> {
    let dims = (img.width(), img.height());
    for (mask, _) in contours {
        mask.ensure_same_dims(dims)?;
    }
    let mut out = img.clone();
    for (mask, color) in contours {
        let boundary = mask.boundary();
        for r in 0..img.height() {
            for c in 0..img.width() {
                if boundary.get(r, c) {
                    out.set(r, c, *color);
                }
            }
        }
    }
    Ok(out)
}

pub fn write_overlay(path: impl AsRef<Path>, img: &ColorImage, contours: &[(BinaryMask, Rgb)]) -> Result<()> {
    write_color_png(path, &overlay(img, contours)?)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_png(path: &Path, width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::InvalidImage(other.to_string()),
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(data).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

fn decode_png(bytes: &[u8]) -> Result<ColorImage> {
    let corrupt = |e: png::DecodingError| Error::CorruptFile(e.to_string());
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    let header = decoder.read_header_info().map_err(corrupt)?;
    if header.bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat("16-bit PNG".into()));
    }
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptFile("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (w, h) = (info.width as usize, info.height as usize);
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!("PNG bit depth {:?}", info.bit_depth)));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded palette PNG".into()))
        }
    };
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            pixels.push(if channels < 3 {
                [px[0]; 3]
            } else {
                [px[0], px[1], px[2]]
            });
        }
    }
    ColorImage::new(w, h, pixels)
}

/// Header tokenizer for the binary netpbm formats.
struct PnmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmHeader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptFile("malformed PNM header".into()))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<ColorImage> {
    let channels = if bytes[1] == b'6' { 3 } else { 1 };
    let mut header = PnmHeader { bytes, pos: 2 };
    let width = header.number()?;
    let height = header.number()?;
    let maxval = header.number()?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("PNM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if !header.bytes.get(header.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::CorruptFile("malformed PNM header".into()));
    }
    let data = &bytes[header.pos + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::CorruptFile("PNM dimensions overflow".into()))?;
    if data.len() < expected {
        return Err(Error::CorruptFile(format!(
            "PNM raster truncated: {} of {expected} bytes",
            data.len()
        )));
    }
    let pixels = data[..expected]
        .chunks_exact(channels)
        .map(|px| if channels == 3 { [px[0], px[1], px[2]] } else { [px[0]; 3] })
        .collect();
    ColorImage::new(width, height, pixels)
}
