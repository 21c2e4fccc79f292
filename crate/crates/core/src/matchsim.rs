//! Brute-force descriptor matching, Lowe's ratio test, and the
//! morphological similarity scores.
//!
//! Matching is exhaustive (k = 2 nearest neighbors by Euclidean distance,
//! no approximate index) with distances compared squared — monotone
//! equivalent and square-root free. The pair score is the ratio of good
//! matches to the descriptor count of the FIRST image, which by convention
//! is always the image from the lower heat flux.

use crate::imgcore::GrayImage;
use crate::sift::{self, KeypointDescriptor, SiftParams};
use crate::Result;
use crate::{util::fmt_f64, Error};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Neighbors per query; the method is defined for k = 2.
    pub k: usize,
    /// Lowe ratio: keep a match when d1 < ratio_threshold · d2 (strict).
    pub ratio_threshold: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            k: 2,
            ratio_threshold: 0.88,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.k != 2 {
            return Err(Error::InvalidParams("k is fixed at 2".into()));
        }
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "ratio_threshold must be in (0,1), got {}",
                self.ratio_threshold
            )));
        }
        Ok(())
    }
}

/// Two nearest neighbors of one query descriptor, squared distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnMatch {
    pub index_a: usize,
    pub best_b: usize,
    /// `None` when the candidate list has a single descriptor; `d2_sq` is
    /// +∞ in that case.
    pub second_b: Option<usize>,
    pub d1_sq: f64,
    pub d2_sq: f64,
}

#[inline]
fn dist_sq(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0f64;
    for (x, y) in a.iter().zip(b) {
        let d = *x as f64 - *y as f64;
        acc += d * d;
    }
    acc
}

/// Exhaustive 2-NN scan of `desc_b` for every descriptor in `desc_a`.
/// Distance ties keep the lower b index.
pub fn match_knn(
    desc_a: &[KeypointDescriptor],
    desc_b: &[KeypointDescriptor],
    params: &MatchParams,
) -> Vec<KnnMatch> {
    debug_assert!(params.k == 2);
    if desc_b.is_empty() {
        return Vec::new();
    }
    desc_a
        .iter()
        .enumerate()
        .map(|(ia, a)| {
            let mut d1 = f64::INFINITY;
            let mut i1 = 0usize;
            let mut d2 = f64::INFINITY;
            let mut i2: Option<usize> = None;
            for (ib, b) in desc_b.iter().enumerate() {
                let d = dist_sq(&a.descriptor, &b.descriptor);
                if d < d1 {
                    d2 = d1;
                    i2 = if ib == 0 { None } else { Some(i1) };
                    d1 = d;
                    i1 = ib;
                } else if d < d2 {
                    d2 = d;
                    i2 = Some(ib);
                }
            }
            KnnMatch {
                index_a: ia,
                best_b: i1,
                second_b: i2,
                d1_sq: d1,
                d2_sq: d2,
            }
        })
        .collect()
}

/// Lowe's ratio test: retain matches with d1 < ratio · d2 (applied as
/// d1² < ratio²·d2², strict). Exact duplicates (d1 = 0) are retained even
/// when d2 = 0.
pub fn ratio_filter(matches: &[KnnMatch], params: &MatchParams) -> Vec<KnnMatch> {
    let t_sq = params.ratio_threshold * params.ratio_threshold;
    matches
        .iter()
        .filter(|m| m.d1_sq == 0.0 || m.d1_sq < t_sq * m.d2_sq)
        .copied()
        .collect()
}

/// Morphological similarity of one ordered image pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    /// good_matches / keypoints_first; 0 when the first image has no
    /// descriptors (flagged).
    pub score: f64,
    pub good_matches: usize,
    /// Oriented descriptor count of the first (lower heat flux) image.
    pub keypoints_first: usize,
    pub zero_keypoints: bool,
}

pub fn pair_score_from_descriptors(
    desc_a: &[KeypointDescriptor],
    desc_b: &[KeypointDescriptor],
    params: &MatchParams,
) -> PairScore {
    let keypoints_first = desc_a.len();
    if keypoints_first == 0 {
        return PairScore {
            score: 0.0,
            good_matches: 0,
            keypoints_first: 0,
            zero_keypoints: true,
        };
    }
    let good = ratio_filter(&match_knn(desc_a, desc_b, params), params).len();
    PairScore {
        score: good as f64 / keypoints_first as f64,
        good_matches: good,
        keypoints_first,
        zero_keypoints: false,
    }
}

/// Extracts descriptors and scores the ordered pair. `img_a` must be the
/// lower-heat-flux image.
pub fn pair_score(
    img_a: &GrayImage,
    img_b: &GrayImage,
    sift_params: &SiftParams,
    match_params: &MatchParams,
) -> Result<PairScore> {
    match_params.validate()?;
    let a = sift::extract(img_a, sift_params)?;
    let b = sift::extract(img_b, sift_params)?;
    Ok(pair_score_from_descriptors(&a, &b, match_params))
}

/// Averaged similarity score M̄ between two heat fluxes for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MbarScore {
    /// Mean of the four pairing scores.
    pub value: f64,
    /// Any pairing had a descriptor-less first image.
    pub zero_keypoints: bool,
    /// The four pairings in (a1,b1), (a1,b2), (a2,b1), (a2,b2) order.
    pub pairings: Vec<PairScore>,
}

/// All four pairings between the two lower-flux images `frames_n` and the
/// two higher-flux images `frames_n1`, averaged. The lower-flux image is
/// the first argument in every pairing, so the result is invariant to the
/// order of images within either heat flux.
pub fn mbar_from_descriptors(
    frames_n: [&[KeypointDescriptor]; 2],
    frames_n1: [&[KeypointDescriptor]; 2],
    params: &MatchParams,
) -> MbarScore {
    let mut pairings = Vec::with_capacity(4);
    for a in frames_n {
        for b in frames_n1 {
            pairings.push(pair_score_from_descriptors(a, b, params));
        }
    }
    MbarScore {
        value: pairings.iter().map(|p| p.score).sum::<f64>() / 4.0,
        zero_keypoints: pairings.iter().any(|p| p.zero_keypoints),
        pairings,
    }
}

pub fn mbar(
    frames_n: [&GrayImage; 2],
    frames_n1: [&GrayImage; 2],
    sift_params: &SiftParams,
    match_params: &MatchParams,
) -> Result<MbarScore> {
    match_params.validate()?;
    let d: Vec<Vec<KeypointDescriptor>> = frames_n
        .iter()
        .chain(frames_n1.iter())
        .map(|img| sift::extract(img, sift_params))
        .collect::<Result<_>>()?;
    Ok(mbar_from_descriptors(
        [&d[0], &d[1]],
        [&d[2], &d[3]],
        match_params,
    ))
}

/// Debug dump: per-pairing match counts of one heat-flux pair.
pub fn write_match_counts_csv(rows: &[(String, MbarScore)], path: &std::path::Path) -> Result<()> {
    let mut text = String::from("pair,pairing,good_matches,keypoints_first,score\n");
    for (label, mbar) in rows {
        for (i, p) in mbar.pairings.iter().enumerate() {
            text.push_str(&format!(
                "{label},{i},{},{},{}\n",
                p.good_matches,
                p.keypoints_first,
                fmt_f64(p.score)
            ));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
