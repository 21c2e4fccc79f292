//! Bubble mask provision and vapor-area accounting.
//!
//! Masks come from one of two routes: a classical segmenter (global
//! threshold + connected-component labeling) or externally produced label
//! maps ingested as 16-bit PGM files. Downstream arithmetic is identical:
//! per-instance pixel areas, the above-average-area filter, and the
//! physical similarity between consecutive heat fluxes.

use std::path::Path;

use crate::imgcore::{self, GrayImage, PgmData};
use crate::{Error, Result};

/// Per-frame instance segmentation: one label per pixel, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: u32,
    height: u32,
    labels: Vec<u32>,
}

impl LabelMask {
    pub fn new(width: u32, height: u32, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "label data length {} != {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> u32 {
        self.labels[row as usize * self.width as usize + col as usize]
    }

    /// Errors unless the mask dimensions match the frame's.
    pub fn check_dims(&self, frame: &GrayImage) -> Result<()> {
        if self.width != frame.width() || self.height != frame.height() {
            return Err(Error::MaskDimensionMismatch {
                mask_w: self.width,
                mask_h: self.height,
                frame_w: frame.width(),
                frame_h: frame.height(),
            });
        }
        Ok(())
    }
}

/// Threshold selection for the classical segmenter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    /// Otsu's method on the 256-bin histogram of the quantized image.
    #[serde(with = "otsu_tag")]
    Otsu,
    /// Fixed threshold τ ∈ (0, 1) applied to the float image.
    Fixed(f64),
}

mod otsu_tag {
    pub fn serialize<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str("otsu")
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<(), D::Error> {
        let tag = <String as serde::Deserialize>::deserialize(d)?;
        if tag == "otsu" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!(
                "unknown threshold mode {tag:?}, expected \"otsu\" or a number"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// Bubbles brighter than the threshold (front-lit frames).
    BrightBubbles,
    /// Bubbles darker than the threshold (shadowgraph silhouettes).
    DarkBubbles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    #[serde(rename = "8")]
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmenterMode {
    /// Built-in threshold + connected-components segmenter.
    Classical,
    /// Ingest `<frame_stem>.mask.pgm` label maps produced elsewhere.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub mode: SegmenterMode,
    pub threshold: Threshold,
    pub polarity: Polarity,
    pub min_instance_px: usize,
    pub connectivity: Connectivity,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            mode: SegmenterMode::Classical,
            threshold: Threshold::Otsu,
            polarity: Polarity::BrightBubbles,
            min_instance_px: 5,
            connectivity: Connectivity::Eight,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if let Threshold::Fixed(tau) = self.threshold {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "fixed threshold must be in (0,1), got {tau}"
                )));
            }
        }
        if self.min_instance_px < 1 {
            return Err(Error::InvalidParams("min_instance_px must be >= 1".into()));
        }
        Ok(())
    }
}

/// Classical segmentation result; `otsu_degenerate` marks a constant image
/// where no threshold separates anything (empty mask emitted).
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub mask: LabelMask,
    pub otsu_degenerate: bool,
}

/// Otsu threshold bin on a 256-bin histogram, or `None` when the histogram
/// is degenerate (all mass in one bin). Smallest argmax bin wins ties.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    if total == 0 || occupied < 2 {
        return None;
    }
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let mut w0 = 0f64;
    let mut sum0 = 0f64;
    let mut best = (0u8, f64::NEG_INFINITY);
    for (t, &count) in hist.iter().enumerate().take(255) {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total as f64 - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best.1 {
            best = (t as u8, between);
        }
    }
    Some(best.0)
}

/// Thresholds, labels connected components, and drops small instances.
///
/// Labels are assigned in raster-scan order of each component's first
/// pixel, so the output is deterministic and worker-count independent.
pub fn segment_classical(img: &GrayImage, cfg: &SegmenterConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    let mut degenerate = false;
    let fg: Vec<bool> = match cfg.threshold {
        Threshold::Fixed(tau) => {
            let tau = tau as f32;
            img.data()
                .iter()
                .map(|&v| match cfg.polarity {
                    Polarity::BrightBubbles => v > tau,
                    Polarity::DarkBubbles => v < tau,
                })
                .collect()
        }
        Threshold::Otsu => {
            let q = img.to_u8();
            let mut hist = [0u64; 256];
            for &b in &q {
                hist[b as usize] += 1;
            }
            match otsu_threshold(&hist) {
                Some(t) => q
                    .iter()
                    .map(|&b| match cfg.polarity {
                        Polarity::BrightBubbles => b > t,
                        Polarity::DarkBubbles => b <= t,
                    })
                    .collect(),
                None => {
                    degenerate = true;
                    vec![false; w as usize * h as usize]
                }
            }
        }
    };
    let mask = label_components(&fg, w, h, cfg.connectivity, cfg.min_instance_px);
    Ok(Segmentation {
        mask,
        otsu_degenerate: degenerate,
    })
}

/// Connected-component labeling on a boolean foreground, dropping
/// components smaller than `min_px` and relabeling survivors 1..k in
/// raster order of their first pixel.
pub fn label_components(
    fg: &[bool],
    width: u32,
    height: u32,
    connectivity: Connectivity,
    min_px: usize,
) -> LabelMask {
    let (w, h) = (width as usize, height as usize);
    debug_assert_eq!(fg.len(), w * h);
    let mut labels = vec![0u32; w * h];
    let mut sizes: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start_r in 0..h {
        for start_c in 0..w {
            let idx = start_r * w + start_c;
            if !fg[idx] || labels[idx] != 0 {
                continue;
            }
            let provisional = sizes.len() as u32 + 1;
            let mut size = 0usize;
            labels[idx] = provisional;
            stack.push((start_r, start_c));
            while let Some((r, c)) = stack.pop() {
                size += 1;
                let mut visit = |rr: isize, cc: isize| {
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        return;
                    }
                    let j = rr as usize * w + cc as usize;
                    if fg[j] && labels[j] == 0 {
                        labels[j] = provisional;
                        stack.push((rr as usize, cc as usize));
                    }
                };
                let (ri, ci) = (r as isize, c as isize);
                visit(ri - 1, ci);
                visit(ri + 1, ci);
                visit(ri, ci - 1);
                visit(ri, ci + 1);
                if connectivity == Connectivity::Eight {
                    visit(ri - 1, ci - 1);
                    visit(ri - 1, ci + 1);
                    visit(ri + 1, ci - 1);
                    visit(ri + 1, ci + 1);
                }
            }
            sizes.push(size);
        }
    }
    // Remap: drop undersized components, keep raster order for the rest.
    let mut remap = vec![0u32; sizes.len() + 1];
    let mut next = 0u32;
    for (i, &size) in sizes.iter().enumerate() {
        if size >= min_px {
            next += 1;
            remap[i + 1] = next;
        }
    }
    for l in labels.iter_mut() {
        *l = remap[*l as usize];
    }
    LabelMask {
        width,
        height,
        labels,
    }
}

/// Loads an external 16-bit PGM label map (pixel value = instance id).
pub fn load_label_mask(path: &Path) -> Result<LabelMask> {
    match imgcore::read_pgm(path)? {
        PgmData::U16 {
            width,
            height,
            data,
        } => LabelMask::new(width, height, data.iter().map(|&v| v as u32).collect()),
        PgmData::U8 { .. } => Err(Error::MalformedImage {
            path: path.to_path_buf(),
            reason: "label maps must be 16-bit PGM (maxval 65535)".into(),
        }),
    }
}

/// Writes a label mask as 16-bit PGM. Ids above 65535 are rejected.
pub fn save_label_mask(mask: &LabelMask, path: &Path) -> Result<()> {
    let mut data = Vec::with_capacity(mask.labels.len());
    for &l in &mask.labels {
        if l > u16::MAX as u32 {
            return Err(Error::InvalidImage(format!(
                "label id {l} exceeds 16-bit PGM range"
            )));
        }
        data.push(l as u16);
    }
    imgcore::write_pgm_u16(path, mask.width, mask.height, &data)
}

/// Per-frame bubble-area statistics.
///
/// `areas` holds per-instance pixel counts ordered by ascending label id;
/// `filtered_total` is the vapor area after the strict above-average
/// filter (instances with area > mean). When every instance has the same
/// area the filter removes all of them; that is reported, not patched.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleAreas {
    pub areas: Vec<u64>,
    pub mean_area: f64,
    pub filtered_total: u64,
    /// No instances at all in the mask.
    pub empty: bool,
    /// Instances exist but all have equal area, so the strict filter
    /// leaves nothing.
    pub all_equal: bool,
}

/// Counts per-instance pixel areas and applies the above-average filter.
pub fn bubble_areas(mask: &LabelMask) -> BubbleAreas {
    let mut counts: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
    for &l in &mask.labels {
        if l != 0 {
            *counts.entry(l).or_insert(0) += 1;
        }
    }
    let areas: Vec<u64> = counts.values().copied().collect();
    if areas.is_empty() {
        return BubbleAreas {
            areas,
            mean_area: 0.0,
            filtered_total: 0,
            empty: true,
            all_equal: false,
        };
    }
    let mean = areas.iter().sum::<u64>() as f64 / areas.len() as f64;
    let filtered: u64 = areas.iter().filter(|&&a| a as f64 > mean).sum();
    BubbleAreas {
        all_equal: filtered == 0,
        areas,
        mean_area: mean,
        filtered_total: filtered,
        empty: false,
    }
}

/// Filtered vapor area averaged over the two sampled frames of one heat flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgVaporArea {
    pub value: f64,
    /// Both frames produced an empty (or fully filtered) vapor area.
    pub both_empty: bool,
}

pub fn avg_vapor_area(frame_1: &LabelMask, frame_2: &LabelMask) -> AvgVaporArea {
    avg_vapor_from_areas(&bubble_areas(frame_1), &bubble_areas(frame_2))
}

pub fn avg_vapor_from_areas(a: &BubbleAreas, b: &BubbleAreas) -> AvgVaporArea {
    let value = (a.filtered_total as f64 + b.filtered_total as f64) / 2.0;
    AvgVaporArea {
        value,
        both_empty: a.filtered_total == 0 && b.filtered_total == 0,
    }
}

/// Physical similarity between two consecutive heat fluxes, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysSim {
    pub value: f64,
    /// Denominator (lower-flux vapor area) was zero; value forced to 0.
    pub zero_denominator: bool,
    /// Area more than doubled, so the raw value went negative.
    pub out_of_range: bool,
}

/// `100 − |a_n − a_n1|·100/a_n`, where `a_n` is the vapor area at the
/// LOWER heat flux. The result is reported raw: values below 0 are
/// possible when the area more than doubles and are flagged, not clamped.
pub fn physical_similarity(a_n: f64, a_n1: f64) -> PhysSim {
    if a_n <= 0.0 {
        return PhysSim {
            value: 0.0,
            zero_denominator: true,
            out_of_range: false,
        };
    }
    let value = 100.0 - (a_n - a_n1).abs() * 100.0 / a_n;
    PhysSim {
        value,
        zero_denominator: false,
        out_of_range: value < 0.0,
    }
}
