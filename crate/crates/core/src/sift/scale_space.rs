//! Gaussian scale space and difference-of-Gaussians pyramids.

use crate::imgcore::GrayImage;
use crate::{Error, Result};

use super::SiftParams;

/// Smallest octave short side under the auto-octave rule.
pub const MIN_OCTAVE_DIM: u32 = 16;
/// Assumed blur of the source image, in source pixels.
const SIGMA_INPUT: f64 = 0.5;

/// One image plane inside an octave.
#[derive(Debug, Clone)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl Plane {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }
}

#[derive(Debug)]
pub struct Octave {
    /// `scales_per_octave + 3` progressively blurred planes.
    pub gaussian: Vec<Plane>,
    /// `scales_per_octave + 2` adjacent differences.
    pub dog: Vec<Plane>,
}

#[derive(Debug)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub scales_per_octave: u32,
    pub base_sigma: f64,
    /// Coordinate scale from octave-0 pixels back to source pixels
    /// (0.5 when the input was upsampled, 1.0 otherwise).
    pub input_scale: f64,
}

impl ScaleSpace {
    /// Absolute keypoint sigma in source-image pixels.
    pub fn sigma_at(&self, octave: usize, level: f64) -> f64 {
        self.base_sigma
            * 2f64.powf(level / self.scales_per_octave as f64)
            * 2f64.powi(octave as i32)
            * self.input_scale
    }
}

/// Number of octaves under the stop-at-16px rule: `floor(log2(d/16)) + 1`
/// where `d` is the seed image's short side.
pub fn auto_octaves(min_dim: u32) -> u32 {
    debug_assert!(min_dim >= MIN_OCTAVE_DIM);
    ((min_dim / MIN_OCTAVE_DIM) as f64).log2().floor() as u32 + 1
}

/// Builds the Gaussian and DoG pyramids.
///
/// The image is quantized to 8 bits first (the SIFT boundary convention)
/// and processed as `f32` in `[0,1]`. Each octave holds
/// `scales_per_octave + 3` Gaussian planes; octave `o+1` starts from a 2×
/// decimation of octave `o`'s plane at level `scales_per_octave`.
pub fn build_scale_space(img: &GrayImage, p: &SiftParams) -> Result<ScaleSpace> {
    p.validate()?;
    let mut seed = Plane {
        width: img.width() as usize,
        height: img.height() as usize,
        values: img.to_u8().iter().map(|&b| b as f32 / 255.0).collect(),
    };
    let mut sigma_seed = SIGMA_INPUT;
    let mut input_scale = 1.0;
    if p.upsample {
        seed = upsample2x(&seed);
        sigma_seed *= 2.0;
        input_scale = 0.5;
    }
    let min_dim = seed.width.min(seed.height) as u32;
    if min_dim < MIN_OCTAVE_DIM {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_OCTAVE_DIM,
        });
    }
    let auto = auto_octaves(min_dim);
    let n_octaves = p.n_octaves.unwrap_or(auto).clamp(1, auto).max(1);

    let s = p.scales_per_octave as usize;
    // Bring the seed to the base blur level.
    if p.base_sigma > sigma_seed {
        let delta = (p.base_sigma * p.base_sigma - sigma_seed * sigma_seed).sqrt();
        seed = gaussian_blur(&seed, delta);
    }
    // Incremental blur from level i-1 to level i: sigma_0 * 2^((i-1)/S) * k,
    // with k = sqrt(2^(2/S) - 1).
    let k = (2f64.powf(2.0 / s as f64) - 1.0).sqrt();
    let increments: Vec<f64> = (1..s + 3)
        .map(|i| p.base_sigma * 2f64.powf((i - 1) as f64 / s as f64) * k)
        .collect();

    let mut octaves = Vec::with_capacity(n_octaves as usize);
    let mut current = seed;
    for _ in 0..n_octaves {
        let mut gaussian = Vec::with_capacity(s + 3);
        gaussian.push(current);
        for inc in &increments {
            gaussian.push(gaussian_blur(gaussian.last().unwrap(), *inc));
        }
        let dog = gaussian
            .windows(2)
            .map(|w| Plane {
                width: w[0].width,
                height: w[0].height,
                values: w[1]
                    .values
                    .iter()
                    .zip(&w[0].values)
                    .map(|(a, b)| a - b)
                    .collect(),
            })
            .collect();
        current = decimate2x(&gaussian[s]);
        octaves.push(Octave { gaussian, dog });
    }
    Ok(ScaleSpace {
        octaves,
        scales_per_octave: p.scales_per_octave,
        base_sigma: p.base_sigma,
        input_scale,
    })
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    if sigma < 1e-6 {
        return src.clone();
    }
    let radius = (4.0 * sigma).ceil().max(1.0) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let denom = 2.0 * sigma * sigma;
    for i in -(radius as i64)..=(radius as i64) {
        kernel.push((-(i * i) as f64 / denom).exp());
    }
    let sum: f64 = kernel.iter().sum();
    let kernel: Vec<f32> = kernel.iter().map(|v| (v / sum) as f32).collect();

    let (w, h) = (src.width, src.height);
    let mut tmp = vec![0f32; w * h];
    // Horizontal pass.
    for r in 0..h {
        let row = &src.values[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0f32;
            for (ki, kv) in kernel.iter().enumerate() {
                let cc = (c as i64 + ki as i64 - radius as i64).clamp(0, w as i64 - 1) as usize;
                acc += kv * row[cc];
            }
            tmp[r * w + c] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![0f32; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0f32;
            for (ki, kv) in kernel.iter().enumerate() {
                let rr = (r as i64 + ki as i64 - radius as i64).clamp(0, h as i64 - 1) as usize;
                acc += kv * tmp[rr * w + c];
            }
            out[r * w + c] = acc;
        }
    }
    Plane {
        width: w,
        height: h,
        values: out,
    }
}

/// Every-other-pixel decimation.
fn decimate2x(src: &Plane) -> Plane {
    let w = (src.width / 2).max(1);
    let h = (src.height / 2).max(1);
    let mut values = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            values.push(src.get(r * 2, c * 2));
        }
    }
    Plane {
        width: w,
        height: h,
        values,
    }
}

/// Bilinear 2× upsampling (used only when `SiftParams::upsample` is on).
fn upsample2x(src: &Plane) -> Plane {
    let w = src.width * 2;
    let h = src.height * 2;
    let mut values = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let fr = (r as f64 / 2.0).min(src.height as f64 - 1.0);
            let fc = (c as f64 / 2.0).min(src.width as f64 - 1.0);
            let r0 = fr.floor() as usize;
            let c0 = fc.floor() as usize;
            let r1 = (r0 + 1).min(src.height - 1);
            let c1 = (c0 + 1).min(src.width - 1);
            let (ar, ac) = ((fr - r0 as f64) as f32, (fc - c0 as f64) as f32);
            let top = src.get(r0, c0) * (1.0 - ac) + src.get(r0, c1) * ac;
            let bot = src.get(r1, c0) * (1.0 - ac) + src.get(r1, c1) * ac;
            values.push(top * (1.0 - ar) + bot * ar);
        }
    }
    Plane {
        width: w,
        height: h,
        values,
    }
}
