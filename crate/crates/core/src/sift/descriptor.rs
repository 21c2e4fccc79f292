//! Orientation assignment and 128-element descriptor extraction.

use std::f64::consts::PI;

use super::detect::RawKeypoint;
use super::scale_space::{Plane, ScaleSpace};
use super::KeypointDescriptor;

const N_ORI_BINS: usize = 36;
/// Secondary orientation peaks at or above this fraction of the maximum
/// spawn duplicate keypoints.
const PEAK_RATIO: f64 = 0.8;
const N_HIST: usize = 4;
const N_DESC_BINS: usize = 8;
/// Gaussian window factor for the orientation histogram.
const LAMBDA_ORI: f64 = 1.5;
/// Spatial bin width factor for the descriptor grid.
const LAMBDA_DESC: f64 = 3.0;
const DESC_CLAMP: f64 = 0.2;

/// Computes oriented descriptors for refined keypoints.
///
/// One keypoint yields one copy per accepted orientation peak. Keypoints
/// whose descriptor window exits the image are discarded entirely (border
/// policy: no padding).
pub fn compute_descriptors(
    ss: &ScaleSpace,
    keypoints: &[RawKeypoint],
    src_width: u32,
    src_height: u32,
) -> Vec<KeypointDescriptor> {
    let mut out = Vec::new();
    for kp in keypoints {
        let plane = &ss.octaves[kp.octave].gaussian[kp.level];
        let ci = kp.col.round() as i64;
        let ri = kp.row.round() as i64;
        let hist_width = LAMBDA_DESC * kp.sigma_octave;
        let desc_radius =
            (hist_width * std::f64::consts::SQRT_2 * (N_HIST as f64 + 1.0) * 0.5).round() as i64;
        // Descriptor window (plus the 1 px gradient margin) must fit.
        if ci - desc_radius < 1
            || ci + desc_radius > plane.width as i64 - 2
            || ri - desc_radius < 1
            || ri + desc_radius > plane.height as i64 - 2
        {
            continue;
        }
        let coord_scale = 2f64.powi(kp.octave as i32) * ss.input_scale;
        let x_img = kp.col * coord_scale;
        let y_img = kp.row * coord_scale;
        if x_img < 0.0 || x_img >= src_width as f64 || y_img < 0.0 || y_img >= src_height as f64 {
            continue;
        }
        let scale_img = kp.sigma_octave * coord_scale;
        for theta in orientation_peaks(plane, ri, ci, kp.sigma_octave) {
            if let Some(descriptor) = describe(plane, ri, ci, hist_width, desc_radius, theta) {
                out.push(KeypointDescriptor {
                    x: x_img,
                    y: y_img,
                    scale: scale_img,
                    orientation: theta,
                    descriptor,
                });
            }
        }
    }
    out
}

#[inline]
fn gradient(plane: &Plane, r: i64, c: i64) -> (f64, f64) {
    let dx =
        plane.get(r as usize, c as usize + 1) as f64 - plane.get(r as usize, c as usize - 1) as f64;
    let dy =
        plane.get(r as usize + 1, c as usize) as f64 - plane.get(r as usize - 1, c as usize) as f64;
    (dx, dy)
}

#[inline]
fn angle_of(dx: f64, dy: f64) -> f64 {
    let a = dy.atan2(dx);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// 36-bin gradient orientation histogram around (ri, ci); returns the
/// reference orientations: every smoothed local maximum at ≥ 80% of the
/// global maximum, parabolically refined.
fn orientation_peaks(plane: &Plane, ri: i64, ci: i64, sigma_octave: f64) -> Vec<f64> {
    let sigma_ori = LAMBDA_ORI * sigma_octave;
    let radius = (3.0 * sigma_ori).round().max(1.0) as i64;
    let denom = 2.0 * sigma_ori * sigma_ori;
    let mut hist = [0f64; N_ORI_BINS];
    for dr in -radius..=radius {
        let r = ri + dr;
        if r < 1 || r >= plane.height as i64 - 1 {
            continue;
        }
        for dc in -radius..=radius {
            let c = ci + dc;
            if c < 1 || c >= plane.width as i64 - 1 {
                continue;
            }
            let (dx, dy) = gradient(plane, r, c);
            let mag = (dx * dx + dy * dy).sqrt();
            let w = (-((dr * dr + dc * dc) as f64) / denom).exp();
            let bin =
                (angle_of(dx, dy) * N_ORI_BINS as f64 / (2.0 * PI)).round() as usize % N_ORI_BINS;
            hist[bin] += mag * w;
        }
    }
    // Two passes of circular [1,4,6,4,1]/16 smoothing.
    for _ in 0..2 {
        let src = hist;
        for k in 0..N_ORI_BINS {
            let at = |off: i64| src[((k as i64 + off).rem_euclid(N_ORI_BINS as i64)) as usize];
            hist[k] = (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0;
        }
    }
    let max = hist.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for k in 0..N_ORI_BINS {
        let prev = hist[(k + N_ORI_BINS - 1) % N_ORI_BINS];
        let next = hist[(k + 1) % N_ORI_BINS];
        if hist[k] > prev && hist[k] > next && hist[k] >= PEAK_RATIO * max {
            let delta = 0.5 * (prev - next) / (prev - 2.0 * hist[k] + next);
            let mut theta = (k as f64 + delta) * 2.0 * PI / N_ORI_BINS as f64;
            if theta < 0.0 {
                theta += 2.0 * PI;
            } else if theta >= 2.0 * PI {
                theta -= 2.0 * PI;
            }
            peaks.push(theta);
        }
    }
    peaks
}

/// 4×4×8 gradient histogram descriptor with trilinear interpolation,
/// L2-normalized, clamped at 0.2, and renormalized.
fn describe(
    plane: &Plane,
    ri: i64,
    ci: i64,
    hist_width: f64,
    radius: i64,
    theta: f64,
) -> Option<Vec<f32>> {
    let (sin_t, cos_t) = theta.sin_cos();
    // Padded (N_HIST+2)^2 spatial grid so border contributions spill
    // into discarded cells instead of branching.
    let mut hist = [0f64; (N_HIST + 2) * (N_HIST + 2) * N_DESC_BINS];
    let weight_denom = 2.0 * (0.5 * N_HIST as f64) * (0.5 * N_HIST as f64);
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            let c_rot = (dc as f64 * cos_t + dr as f64 * sin_t) / hist_width;
            let r_rot = (-(dc as f64) * sin_t + dr as f64 * cos_t) / hist_width;
            let rbin = r_rot + N_HIST as f64 / 2.0 - 0.5;
            let cbin = c_rot + N_HIST as f64 / 2.0 - 0.5;
            if rbin <= -1.0 || rbin >= N_HIST as f64 || cbin <= -1.0 || cbin >= N_HIST as f64 {
                continue;
            }
            let (dx, dy) = gradient(plane, ri + dr, ci + dc);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let w = (-(r_rot * r_rot + c_rot * c_rot) / weight_denom).exp();
            let mut rel = angle_of(dx, dy) - theta;
            if rel < 0.0 {
                rel += 2.0 * PI;
            }
            let obin = rel * N_DESC_BINS as f64 / (2.0 * PI);

            let r0 = rbin.floor();
            let c0 = cbin.floor();
            let o0 = obin.floor();
            let fr = rbin - r0;
            let fc = cbin - c0;
            let fo = obin - o0;
            let contribution = mag * w;
            let o0 = (o0 as usize) % N_DESC_BINS;
            for (ir, wr) in [(0usize, 1.0 - fr), (1, fr)] {
                for (ic, wc) in [(0usize, 1.0 - fc), (1, fc)] {
                    for (io, wo) in [(0usize, 1.0 - fo), (1, fo)] {
                        let rr = (r0 as i64 + 1 + ir as i64) as usize;
                        let cc = (c0 as i64 + 1 + ic as i64) as usize;
                        let oo = (o0 + io) % N_DESC_BINS;
                        hist[(rr * (N_HIST + 2) + cc) * N_DESC_BINS + oo] +=
                            contribution * wr * wc * wo;
                    }
                }
            }
        }
    }
    // Flatten the inner 4×4 grid.
    let mut vec = [0f64; N_HIST * N_HIST * N_DESC_BINS];
    for r in 0..N_HIST {
        for c in 0..N_HIST {
            for o in 0..N_DESC_BINS {
                vec[(r * N_HIST + c) * N_DESC_BINS + o] =
                    hist[((r + 1) * (N_HIST + 2) + (c + 1)) * N_DESC_BINS + o];
            }
        }
    }
    let norm = vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return None;
    }
    for v in vec.iter_mut() {
        *v = (*v / norm).min(DESC_CLAMP);
    }
    let norm2 = vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm2 <= 0.0 {
        return None;
    }
    Some(vec.iter().map(|v| (v / norm2) as f32).collect())
}
