//! Grayscale image representation, PGM/PNG I/O, and basic raster ops.
//!
//! Everything downstream works on [`GrayImage`]: row-major `f32` luminance
//! in `[0, 1]`. Sources are normalized on load (8-bit ÷ 255, 16-bit ÷ 65535,
//! color via Rec.601 luma) and quantized back to bytes only at well-defined
//! boundaries (PGM output, the SIFT front end, Otsu histograms).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Immutable grayscale raster with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl GrayImage {
    /// Builds an image from row-major data, validating the type invariants:
    /// `data.len() == width * height` and every value finite in `[0, 1]`.
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero dimension: {width}x{height}"
            )));
        }
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidImage(format!(
                "data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidImage(format!("value {v} outside [0,1]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(row, col)`; values are clamped to `[0, 1]`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Self {
        let mut data = Vec::with_capacity((width as usize) * (height as usize));
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Value at (row, col). Row-major addressing everywhere.
    #[inline]
    pub fn get(&self, row: u32, col: u32) -> f32 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row as usize * self.width as usize + col as usize]
    }

    /// Deterministic 8-bit quantization (round half-up), row-major.
    ///
    /// This is the only path from `[0,1]` floats to bytes; it feeds the
    /// SIFT front end, PGM output, and the Otsu histogram.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }

    /// Exact 90° counter-clockwise rotation (pixel permutation).
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |r, c| self.get(c, w - 1 - r))
    }
}

/// Round-half-up quantization of `v ∈ [0,1]` to a byte.
#[inline]
pub fn quantize_u8(v: f32) -> u8 {
    // f32::round is half-away-from-zero, which is half-up for non-negatives.
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reference to one frame inside a steady-state pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRef {
    pub frame_set_id: String,
    pub frame_index: usize,
    pub source_path: PathBuf,
    /// External label map for this frame, when the run supplies one.
    pub mask_path: Option<PathBuf>,
}

/// Raw PGM payload as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PgmData {
    U8 {
        width: u32,
        height: u32,
        data: Vec<u8>,
    },
    U16 {
        width: u32,
        height: u32,
        data: Vec<u16>,
    },
}

/// Parses a binary PGM (P5, maxval 255 or 65535, 16-bit big-endian).
pub fn read_pgm(path: &Path) -> Result<PgmData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<PgmData> {
    let malformed = |reason: &str| Error::MalformedImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::UnsupportedFormat(path.to_path_buf()));
    }
    // Header tokens separated by whitespace; '#' starts a comment to EOL.
    let mut pos = 2usize;
    let next_token = |pos: &mut usize| -> Result<u64> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err(malformed("expected integer token in header"));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad integer in header"))
    };
    let width = next_token(&mut pos)?;
    let height = next_token(&mut pos)?;
    let maxval = next_token(&mut pos)?;
    if width == 0 || height == 0 {
        return Err(malformed("zero image dimension"));
    }
    if width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(malformed("dimension overflow"));
    }
    // Exactly one whitespace byte between maxval and the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing raster separator"));
    }
    pos += 1;
    let npix = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| malformed("pixel count overflow"))?;
    let raster = &bytes[pos..];
    match maxval {
        255 => {
            if raster.len() < npix {
                return Err(malformed("truncated raster"));
            }
            Ok(PgmData::U8 {
                width: width as u32,
                height: height as u32,
                data: raster[..npix].to_vec(),
            })
        }
        65535 => {
            if raster.len() < npix * 2 {
                return Err(malformed("truncated raster"));
            }
            let data = raster[..npix * 2]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect();
            Ok(PgmData::U16 {
                width: width as u32,
                height: height as u32,
                data,
            })
        }
        other => Err(malformed(&format!("unsupported maxval {other}"))),
    }
}

/// Writes a binary 8-bit PGM (P5, maxval 255).
pub fn write_pgm_u8(path: &Path, width: u32, height: u32, data: &[u8]) -> Result<()> {
    debug_assert_eq!(data.len(), width as usize * height as usize);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "P5\n{width} {height}\n255\n").map_err(io)?;
    w.write_all(data).map_err(io)?;
    w.flush().map_err(io)
}

/// Writes a binary 16-bit PGM (P5, maxval 65535, big-endian).
pub fn write_pgm_u16(path: &Path, width: u32, height: u32, data: &[u16]) -> Result<()> {
    debug_assert_eq!(data.len(), width as usize * height as usize);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "P5\n{width} {height}\n65535\n").map_err(io)?;
    let mut buf = Vec::with_capacity(data.len() * 2);
    for v in data {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    w.write_all(&buf).map_err(io)?;
    w.flush().map_err(io)
}

/// Loads a grayscale image from PGM (8/16-bit) or PNG, normalized to `[0,1]`.
///
/// Format is sniffed from the file content, not the extension. Color PNG is
/// converted with Rec.601 luma weights.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        return match parse_pgm(&bytes, path)? {
            PgmData::U8 {
                width,
                height,
                data,
            } => GrayImage::new(
                width,
                height,
                data.iter().map(|&v| v as f32 / 255.0).collect(),
            ),
            PgmData::U16 {
                width,
                height,
                data,
            } => GrayImage::new(
                width,
                height,
                data.iter().map(|&v| v as f32 / 65535.0).collect(),
            ),
        };
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return load_png(&bytes, path);
    }
    Err(Error::UnsupportedFormat(path.to_path_buf()))
}

fn load_png(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    use image::DynamicImage;
    let img = image::load_from_memory(bytes).map_err(|e| Error::MalformedImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Err(Error::MalformedImage {
            path: path.to_path_buf(),
            reason: "zero image dimension".into(),
        });
    }
    let data: Vec<f32> = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0] as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.into_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(b) => b.pixels().map(|p| p.0[0] as f32 / 65535.0).collect(),
        DynamicImage::ImageRgb8(b) => b.pixels().map(|p| rec601(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(b) => b.pixels().map(|p| rec601(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            let b = other.to_rgba16();
            b.pixels()
                .map(|p| {
                    let (r, g, bl) = (
                        p.0[0] as f32 / 65535.0,
                        p.0[1] as f32 / 65535.0,
                        p.0[2] as f32 / 65535.0,
                    );
                    (0.299 * r + 0.587 * g + 0.114 * bl).clamp(0.0, 1.0)
                })
                .collect()
        }
    };
    GrayImage::new(w, h, data)
}

#[inline]
fn rec601(r: u8, g: u8, b: u8) -> f32 {
    let (r, g, b) = (r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0);
    (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
}

/// Saves as 8-bit PGM, quantizing with round half-up.
///
/// `load_gray(save_gray(img))` is the identity on 8-bit-quantized images.
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    write_pgm_u8(path, img.width(), img.height(), &img.to_u8())
}
