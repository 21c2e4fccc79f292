//! DoG extremum detection with sub-pixel refinement.

use super::scale_space::{Plane, ScaleSpace};
use super::SiftParams;

/// Margin (in octave pixels) inside which extrema are not considered.
pub const DETECTION_BORDER: usize = 5;
const MAX_REFINE_STEPS: usize = 5;

/// Refined scale-space extremum, before orientation assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawKeypoint {
    pub octave: usize,
    /// DoG level the extremum was found on (1..=scales_per_octave).
    pub level: usize,
    /// Refined position in octave coordinates.
    pub row: f64,
    pub col: f64,
    /// Keypoint sigma in octave pixel units.
    pub sigma_octave: f64,
    /// |refined DoG value|.
    pub response: f64,
}

/// Scans every DoG plane for 3×3×3 extrema, refines them with a quadratic
/// fit, and applies the contrast and edge-curvature gates.
///
/// Output order is canonical (octave, level, row, col) by construction.
pub fn detect_keypoints(ss: &ScaleSpace, p: &SiftParams) -> Vec<RawKeypoint> {
    let s = ss.scales_per_octave as usize;
    let prefilter = (0.5 * p.contrast_threshold) as f32;
    let mut out = Vec::new();
    for (oct_idx, oct) in ss.octaves.iter().enumerate() {
        let (w, h) = (oct.dog[0].width, oct.dog[0].height);
        if w < 2 * DETECTION_BORDER + 1 || h < 2 * DETECTION_BORDER + 1 {
            continue;
        }
        for level in 1..=s {
            let prev = &oct.dog[level - 1];
            let curr = &oct.dog[level];
            let next = &oct.dog[level + 1];
            for r in DETECTION_BORDER..h - DETECTION_BORDER {
                for c in DETECTION_BORDER..w - DETECTION_BORDER {
                    let v = curr.get(r, c);
                    if v.abs() < prefilter {
                        continue;
                    }
                    if !is_extremum(prev, curr, next, r, c, v) {
                        continue;
                    }
                    if let Some(kp) = refine(ss, oct_idx, level, r, c, p) {
                        out.push(kp);
                    }
                }
            }
        }
    }
    out
}

#[inline]
fn is_extremum(prev: &Plane, curr: &Plane, next: &Plane, r: usize, c: usize, v: f32) -> bool {
    let mut max = f32::NEG_INFINITY;
    let mut min = f32::INFINITY;
    for plane in [prev, curr, next] {
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if std::ptr::eq(plane, curr) && dr == 0 && dc == 0 {
                    continue;
                }
                let nv = plane.get((r as i64 + dr) as usize, (c as i64 + dc) as usize);
                max = max.max(nv);
                min = min.min(nv);
            }
        }
    }
    (v >= max && v > 0.0) || (v <= min && v < 0.0)
}

/// Quadratic sub-pixel refinement: fits a 3-D Taylor expansion around the
/// discrete extremum and walks toward the continuous one, up to
/// [`MAX_REFINE_STEPS`] moves. Accepts when all offsets are ≤ 0.5.
fn refine(
    ss: &ScaleSpace,
    octave: usize,
    mut level: usize,
    mut r: usize,
    mut c: usize,
    p: &SiftParams,
) -> Option<RawKeypoint> {
    let oct = &ss.octaves[octave];
    let s = ss.scales_per_octave as usize;
    let (w, h) = (oct.dog[0].width, oct.dog[0].height);
    for _ in 0..MAX_REFINE_STEPS {
        let prev = &oct.dog[level - 1];
        let curr = &oct.dog[level];
        let next = &oct.dog[level + 1];

        let g_s = (next.get(r, c) - prev.get(r, c)) as f64 / 2.0;
        let g_r = (curr.get(r + 1, c) - curr.get(r - 1, c)) as f64 / 2.0;
        let g_c = (curr.get(r, c + 1) - curr.get(r, c - 1)) as f64 / 2.0;

        let v2 = 2.0 * curr.get(r, c) as f64;
        let h_ss = next.get(r, c) as f64 + prev.get(r, c) as f64 - v2;
        let h_rr = curr.get(r + 1, c) as f64 + curr.get(r - 1, c) as f64 - v2;
        let h_cc = curr.get(r, c + 1) as f64 + curr.get(r, c - 1) as f64 - v2;
        let h_sr =
            (next.get(r + 1, c) as f64 - next.get(r - 1, c) as f64 - prev.get(r + 1, c) as f64
                + prev.get(r - 1, c) as f64)
                / 4.0;
        let h_sc =
            (next.get(r, c + 1) as f64 - next.get(r, c - 1) as f64 - prev.get(r, c + 1) as f64
                + prev.get(r, c - 1) as f64)
                / 4.0;
        let h_rc = (curr.get(r + 1, c + 1) as f64
            - curr.get(r + 1, c - 1) as f64
            - curr.get(r - 1, c + 1) as f64
            + curr.get(r - 1, c - 1) as f64)
            / 4.0;

        let det = h_ss * (h_rr * h_cc - h_rc * h_rc) - h_sr * (h_sr * h_cc - h_rc * h_sc)
            + h_sc * (h_sr * h_rc - h_rr * h_sc);
        if det.abs() < 1e-30 {
            return None;
        }
        // Solve H * delta = -g via the adjugate.
        let inv_ss = (h_rr * h_cc - h_rc * h_rc) / det;
        let inv_sr = (h_sc * h_rc - h_sr * h_cc) / det;
        let inv_sc = (h_sr * h_rc - h_sc * h_rr) / det;
        let inv_rr = (h_ss * h_cc - h_sc * h_sc) / det;
        let inv_rc = (h_sr * h_sc - h_ss * h_rc) / det;
        let inv_cc = (h_ss * h_rr - h_sr * h_sr) / det;

        let off_s = -(inv_ss * g_s + inv_sr * g_r + inv_sc * g_c);
        let off_r = -(inv_sr * g_s + inv_rr * g_r + inv_rc * g_c);
        let off_c = -(inv_sc * g_s + inv_rc * g_r + inv_cc * g_c);

        if off_s.abs() <= 0.5 && off_r.abs() <= 0.5 && off_c.abs() <= 0.5 {
            let refined = curr.get(r, c) as f64 + 0.5 * (g_s * off_s + g_r * off_r + g_c * off_c);
            if refined.abs() < p.contrast_threshold {
                return None;
            }
            if on_edge(curr, r, c, p.edge_ratio_threshold) {
                return None;
            }
            let sigma_octave =
                ss.base_sigma * 2f64.powf((level as f64 + off_s) / ss.scales_per_octave as f64);
            return Some(RawKeypoint {
                octave,
                level,
                row: r as f64 + off_r,
                col: c as f64 + off_c,
                sigma_octave,
                response: refined.abs(),
            });
        }
        // Extremum belongs to a neighboring sample; move and retry.
        let nr = r as i64 + off_r.round() as i64;
        let nc = c as i64 + off_c.round() as i64;
        let nl = level as i64 + off_s.round() as i64;
        if nl < 1
            || nl > s as i64
            || nr < DETECTION_BORDER as i64
            || nr >= (h - DETECTION_BORDER) as i64
            || nc < DETECTION_BORDER as i64
            || nc >= (w - DETECTION_BORDER) as i64
        {
            return None;
        }
        level = nl as usize;
        r = nr as usize;
        c = nc as usize;
    }
    None
}

/// Principal-curvature ratio test on the 2×2 spatial Hessian.
fn on_edge(curr: &Plane, r: usize, c: usize, edge_ratio: f64) -> bool {
    let v2 = 2.0 * curr.get(r, c) as f64;
    let h_rr = curr.get(r + 1, c) as f64 + curr.get(r - 1, c) as f64 - v2;
    let h_cc = curr.get(r, c + 1) as f64 + curr.get(r, c - 1) as f64 - v2;
    let h_rc = (curr.get(r + 1, c + 1) as f64
        - curr.get(r + 1, c - 1) as f64
        - curr.get(r - 1, c + 1) as f64
        + curr.get(r - 1, c - 1) as f64)
        / 4.0;
    let tr = h_rr + h_cc;
    let det = h_rr * h_cc - h_rc * h_rc;
    if det <= 0.0 {
        return true;
    }
    tr * tr * edge_ratio >= (edge_ratio + 1.0) * (edge_ratio + 1.0) * det
}
