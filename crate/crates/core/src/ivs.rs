//! The Index of Visual Similarity pipeline.
//!
//! For every consecutive heat-flux pair (Qₙ, Qₙ₊₁) and every trial, two
//! frames are sampled per flux from deterministic per-(set, trial)
//! streams; the same samples feed both the morphological path (SIFT +
//! matching, M̄ over four pairings) and the physical path (masks → vapor
//! areas → percent change). Per-pair trial means are then max-normalized
//! across the whole run (two-pass by construction) and blended 50/50 into
//! the IVS at the midpoint heat flux.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::imgcore::{load_gray, FrameRef};
use crate::matchsim::{mbar_from_descriptors, MatchParams};
use crate::segment::{
    avg_vapor_from_areas, bubble_areas, load_label_mask, physical_similarity, segment_classical,
    BubbleAreas, SegmenterConfig, SegmenterMode,
};
use crate::sift::{self, KeypointDescriptor, SiftParams};
use crate::{rng, Error, Result};

/// Flag strings carried on IVS records (also surfaced in run logs).
pub mod flags {
    /// Some pairing's first image produced no descriptors.
    pub const ZERO_KEYPOINTS: &str = "zero_keypoints";
    /// A vapor-area denominator was zero (Eq. (8) undefined).
    pub const ZERO_VAPOR_AREA: &str = "zero_vapor_area";
    /// A frame's instances all had equal area; the strict filter emptied it.
    pub const ALL_AREAS_EQUAL: &str = "all_areas_equal";
    /// A frame segmented to zero instances.
    pub const EMPTY_MASK: &str = "empty_mask";
    /// Otsu had a degenerate (constant) histogram.
    pub const OTSU_DEGENERATE: &str = "otsu_degenerate";
    /// Physical similarity below 0 (area more than doubled); raw value kept.
    pub const PHYS_OUT_OF_RANGE: &str = "phys_out_of_range";
    /// No usable M̄ maximum; morphological normalization degenerate.
    pub const NORMALIZATION_DEGENERATE: &str = "normalization_degenerate";

    /// Flags that mark a record as degenerate for the exit-code contract.
    pub const DEGENERATE: &[&str] = &[ZERO_KEYPOINTS, ZERO_VAPOR_AREA, NORMALIZATION_DEGENERATE];
}

/// One steady-state heat-flux level and its frame pool.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatFluxFrameSet {
    /// Stable identifier; keys the sampling stream.
    pub id: String,
    /// Heat flux, W/cm².
    pub q: f64,
    pub frames: Vec<FrameRef>,
    /// Raw thermocouple triple (t1, t2, t3) when carried alongside.
    pub thermal: Option<[f64; 3]>,
}

impl HeatFluxFrameSet {
    /// Builds a set with `id` derived from the heat flux value.
    pub fn from_paths(
        q: f64,
        paths: Vec<std::path::PathBuf>,
        mask_dir: Option<&std::path::Path>,
    ) -> Self {
        let id = format!("q{q}");
        let frames = paths
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mask_path = mask_dir.map(|d| {
                    let stem = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    d.join(format!("{stem}.mask.pgm"))
                });
                FrameRef {
                    frame_set_id: id.clone(),
                    frame_index: i,
                    source_path: p,
                    mask_path,
                }
            })
            .collect();
        Self {
            id,
            q,
            frames,
            thermal: None,
        }
    }
}

/// Trial repetition plan. Seven trials is where the running mean settles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrialPlan {
    pub n_trials: usize,
    pub rng_seed: u64,
    /// Fixed at 2 by the method.
    pub images_per_flux: usize,
    /// One sampling feeds both similarity paths by default; turn this on
    /// to draw the physical-path images from an independent stream.
    pub independent_phys_sampling: bool,
}

impl Default for TrialPlan {
    fn default() -> Self {
        Self {
            n_trials: 7,
            rng_seed: 0,
            images_per_flux: 2,
            independent_phys_sampling: false,
        }
    }
}

impl TrialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::InvalidParams("n_trials must be >= 1".into()));
        }
        if self.images_per_flux != 2 {
            return Err(Error::InvalidParams("images_per_flux is fixed at 2".into()));
        }
        Ok(())
    }
}

/// Per-trial raw scores of one heat-flux pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrialValue {
    /// M̄ for this trial.
    pub morph: f64,
    /// Physical similarity (percent) for this trial.
    pub phys: f64,
}

/// Result at one midpoint heat flux.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IvsRecord {
    /// (Qₙ + Qₙ₊₁)/2, W/cm².
    pub q_mid: f64,
    /// Qₙ₊₁ − Qₙ, W/cm².
    pub delta_q: f64,
    /// Trial-mean M̄, before normalization.
    pub morph_raw: f64,
    /// Percent, max-normalized across the run.
    pub morph_norm: f64,
    /// Percent, trial-mean physical similarity.
    pub phys: f64,
    /// 0.5·phys + 0.5·morph_norm.
    pub ivs: f64,
    pub trial_values: Vec<TrialValue>,
    /// Prefix means of per-trial IVS contributions (convergence trace).
    pub running_mean: Vec<f64>,
    pub flags: Vec<String>,
}

impl IvsRecord {
    /// Running means over trials 1..n; the last entry equals `ivs`.
    pub fn convergence_trace(&self) -> &[f64] {
        &self.running_mean
    }

    pub fn is_degenerate(&self) -> bool {
        self.flags
            .iter()
            .any(|f| flags::DEGENERATE.contains(&f.as_str()))
    }
}

/// Draws two distinct frames from the set's pool for one trial.
///
/// The stream is keyed by (rng_seed, frame set id, trial): the same inputs
/// reproduce the same sample regardless of scheduling or worker count.
pub fn sample_pairs<'a>(
    set: &'a HeatFluxFrameSet,
    trial: usize,
    plan: &TrialPlan,
) -> Result<[&'a FrameRef; 2]> {
    let [i, j] = sample_pair_indices(set.frames.len(), &set.id, trial, plan, SampleDomain::Shared)?;
    Ok([&set.frames[i], &set.frames[j]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleDomain {
    /// The default stream, shared by both similarity paths.
    Shared,
    /// Separate stream for the physical path when
    /// `independent_phys_sampling` is on.
    Physical,
}

fn sample_pair_indices(
    pool: usize,
    set_id: &str,
    trial: usize,
    plan: &TrialPlan,
    domain: SampleDomain,
) -> Result<[usize; 2]> {
    if pool < 2 {
        return Err(Error::InvalidRun(format!(
            "frame set {set_id} has {pool} frames; sampling needs at least 2"
        )));
    }
    let label = match domain {
        SampleDomain::Shared => "ivs.sample",
        SampleDomain::Physical => "ivs.sample.phys",
    };
    let mut stream = rng::stream(plan.rng_seed, label, set_id, trial as u64);
    let first = rng::uniform_index(&mut stream, pool);
    let mut second = rng::uniform_index(&mut stream, pool - 1);
    if second >= first {
        second += 1;
    }
    Ok([first, second])
}

/// Prefix means of a value sequence.
pub fn prefix_means(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0f64;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        out.push(sum / (i + 1) as f64);
    }
    out
}

/// Batch max-normalization to percent: 100·raw/max over non-excluded
/// entries. Returns the normalized vector and the max used (None when no
/// usable entry exists; all outputs are then 0).
///
/// This is the hook the scale-invariance checks drive: multiplying every
/// raw value by c > 0 rescales the max by the same factor and leaves the
/// reported percentages unchanged.
pub fn max_normalize(raw: &[f64], excluded: &[bool]) -> (Vec<f64>, Option<f64>) {
    debug_assert_eq!(raw.len(), excluded.len());
    let max = raw
        .iter()
        .zip(excluded)
        .filter(|(_, &ex)| !ex)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || max <= 0.0 {
        return (vec![0.0; raw.len()], None);
    }
    (raw.iter().map(|&v| 100.0 * v / max).collect(), Some(max))
}

/// Per-frame analysis products shared by both similarity paths.
struct FrameData {
    descriptors: Vec<KeypointDescriptor>,
    areas: BubbleAreas,
    flags: Vec<&'static str>,
}

fn analyze_frame(
    frame: &FrameRef,
    sift_params: &SiftParams,
    seg: &SegmenterConfig,
) -> Result<FrameData> {
    let img = load_gray(&frame.source_path)?;
    let descriptors = sift::extract(&img, sift_params)?;
    let mut frame_flags = Vec::new();
    let mask = match seg.mode {
        SegmenterMode::Classical => {
            let s = segment_classical(&img, seg)?;
            if s.otsu_degenerate {
                frame_flags.push(flags::OTSU_DEGENERATE);
            }
            s.mask
        }
        SegmenterMode::External => {
            let path = frame.mask_path.as_ref().ok_or_else(|| {
                Error::MissingConfig(format!(
                    "external segmenter mode but no mask path for {}",
                    frame.source_path.display()
                ))
            })?;
            let mask = load_label_mask(path)?;
            mask.check_dims(&img)?;
            mask
        }
    };
    let areas = bubble_areas(&mask);
    if areas.empty {
        frame_flags.push(flags::EMPTY_MASK);
    }
    if areas.all_equal {
        frame_flags.push(flags::ALL_AREAS_EQUAL);
    }
    Ok(FrameData {
        descriptors,
        areas,
        flags: frame_flags,
    })
}

fn validate_run(run: &[HeatFluxFrameSet], plan: &TrialPlan) -> Result<()> {
    plan.validate()?;
    if run.len() < 2 {
        return Err(Error::InvalidRun(format!(
            "IVS needs at least 2 frame sets, got {}",
            run.len()
        )));
    }
    for set in run {
        if set.q <= 0.0 {
            return Err(Error::InvalidRun(format!(
                "frame set {} has non-positive q {}",
                set.id, set.q
            )));
        }
        if set.frames.len() < 2 {
            return Err(Error::InvalidRun(format!(
                "frame set {} has {} frames; need at least 2",
                set.id,
                set.frames.len()
            )));
        }
        for (i, f) in set.frames.iter().enumerate() {
            if f.frame_index != i {
                return Err(Error::InvalidRun(format!(
                    "frame set {}: frame_index {} out of order at position {i}",
                    set.id, f.frame_index
                )));
            }
        }
    }
    if !run.windows(2).all(|w| w[1].q > w[0].q) {
        return Err(Error::InvalidRun(
            "frame sets must be strictly increasing in q".into(),
        ));
    }
    Ok(())
}

/// Runs the full two-pass IVS computation over consecutive set pairs.
///
/// Pass 1 (parallel, order-independent): per-frame descriptors and vapor
/// areas, then per-(pair, trial) M̄ and physical similarity. Pass 2
/// (sequential): trial averaging, batch max-normalization of M̄ (records
/// whose M̄ is the degenerate zero-with-warning value are excluded from
/// the max), and the 50/50 blend.
pub fn compute_pair_ivs(
    run: &[HeatFluxFrameSet],
    plan: &TrialPlan,
    sift_params: &SiftParams,
    match_params: &MatchParams,
    seg: &SegmenterConfig,
) -> Result<Vec<IvsRecord>> {
    validate_run(run, plan)?;
    sift_params.validate()?;
    match_params.validate()?;
    seg.validate()?;

    // Per-set, per-trial samples (deterministic, scheduling-independent).
    // The same samples feed both similarity paths unless the plan asks
    // for an independent physical-path stream.
    let mut samples: Vec<Vec<[usize; 2]>> = Vec::with_capacity(run.len());
    let mut phys_samples: Vec<Vec<[usize; 2]>> = Vec::with_capacity(run.len());
    for set in run {
        let per_trial: Result<Vec<[usize; 2]>> = (0..plan.n_trials)
            .map(|t| sample_pair_indices(set.frames.len(), &set.id, t, plan, SampleDomain::Shared))
            .collect();
        let per_trial = per_trial?;
        let phys_per_trial = if plan.independent_phys_sampling {
            (0..plan.n_trials)
                .map(|t| {
                    sample_pair_indices(set.frames.len(), &set.id, t, plan, SampleDomain::Physical)
                })
                .collect::<Result<Vec<[usize; 2]>>>()?
        } else {
            per_trial.clone()
        };
        samples.push(per_trial);
        phys_samples.push(phys_per_trial);
    }

    // Analyze each distinct sampled frame once, in parallel.
    let mut wanted: Vec<(usize, usize)> = Vec::new();
    for (si, trials) in samples
        .iter()
        .enumerate()
        .chain(phys_samples.iter().enumerate())
    {
        for pair in trials {
            wanted.extend(pair.iter().map(|&fi| (si, fi)));
        }
    }
    wanted.sort_unstable();
    wanted.dedup();
    let analyzed: Result<Vec<((usize, usize), FrameData)>> = wanted
        .par_iter()
        .map(|&(si, fi)| {
            analyze_frame(&run[si].frames[fi], sift_params, seg).map(|d| ((si, fi), d))
        })
        .collect();
    let frame_data: BTreeMap<(usize, usize), FrameData> = analyzed?.into_iter().collect();

    // Per-(pair, trial) scores, parallel with canonical collection order.
    let n_pairs = run.len() - 1;
    let tasks: Vec<(usize, usize)> = (0..n_pairs)
        .flat_map(|p| (0..plan.n_trials).map(move |t| (p, t)))
        .collect();
    struct TrialOutcome {
        morph: f64,
        phys: f64,
        flags: Vec<&'static str>,
    }
    let outcomes: Vec<TrialOutcome> = tasks
        .par_iter()
        .map(|&(pair, trial)| {
            let [a0, a1] = samples[pair][trial];
            let [b0, b1] = samples[pair + 1][trial];
            let fa0 = &frame_data[&(pair, a0)];
            let fa1 = &frame_data[&(pair, a1)];
            let fb0 = &frame_data[&(pair + 1, b0)];
            let fb1 = &frame_data[&(pair + 1, b1)];
            let [pa0, pa1] = phys_samples[pair][trial];
            let [pb0, pb1] = phys_samples[pair + 1][trial];
            let pha0 = &frame_data[&(pair, pa0)];
            let pha1 = &frame_data[&(pair, pa1)];
            let phb0 = &frame_data[&(pair + 1, pb0)];
            let phb1 = &frame_data[&(pair + 1, pb1)];
            let mut trial_flags: Vec<&'static str> = Vec::new();
            for fd in [fa0, fa1, fb0, fb1, pha0, pha1, phb0, phb1] {
                trial_flags.extend(&fd.flags);
            }
            let m = mbar_from_descriptors(
                [&fa0.descriptors, &fa1.descriptors],
                [&fb0.descriptors, &fb1.descriptors],
                match_params,
            );
            if m.zero_keypoints {
                trial_flags.push(flags::ZERO_KEYPOINTS);
            }
            let a_n = avg_vapor_from_areas(&pha0.areas, &pha1.areas);
            let a_n1 = avg_vapor_from_areas(&phb0.areas, &phb1.areas);
            let phys = physical_similarity(a_n.value, a_n1.value);
            if phys.zero_denominator || a_n.both_empty || a_n1.both_empty {
                trial_flags.push(flags::ZERO_VAPOR_AREA);
            }
            if phys.out_of_range {
                trial_flags.push(flags::PHYS_OUT_OF_RANGE);
            }
            TrialOutcome {
                morph: m.value,
                phys: phys.value,
                flags: trial_flags,
            }
        })
        .collect();

    // Trial aggregation per pair.
    struct PairAgg {
        morph_raw: f64,
        phys: f64,
        trial_values: Vec<TrialValue>,
        flags: Vec<String>,
        degenerate_morph: bool,
    }
    let mut pairs: Vec<PairAgg> = Vec::with_capacity(n_pairs);
    for p in 0..n_pairs {
        let slice = &outcomes[p * plan.n_trials..(p + 1) * plan.n_trials];
        let trial_values: Vec<TrialValue> = slice
            .iter()
            .map(|o| TrialValue {
                morph: o.morph,
                phys: o.phys,
            })
            .collect();
        let morph_raw = slice.iter().map(|o| o.morph).sum::<f64>() / plan.n_trials as f64;
        let phys = slice.iter().map(|o| o.phys).sum::<f64>() / plan.n_trials as f64;
        let mut flag_set: Vec<String> = Vec::new();
        for o in slice {
            for f in &o.flags {
                if !flag_set.iter().any(|e| e == f) {
                    flag_set.push((*f).to_string());
                }
            }
        }
        let degenerate_morph =
            morph_raw == 0.0 && flag_set.iter().any(|f| f == flags::ZERO_KEYPOINTS);
        pairs.push(PairAgg {
            morph_raw,
            phys,
            trial_values,
            flags: flag_set,
            degenerate_morph,
        });
    }

    // Pass 2: batch normalization and blending.
    let raw: Vec<f64> = pairs.iter().map(|p| p.morph_raw).collect();
    let excluded: Vec<bool> = pairs.iter().map(|p| p.degenerate_morph).collect();
    let (morph_norm, max) = max_normalize(&raw, &excluded);

    let mut records = Vec::with_capacity(n_pairs);
    for (p, agg) in pairs.into_iter().enumerate() {
        let (q_n, q_n1) = (run[p].q, run[p + 1].q);
        let mut record_flags = agg.flags;
        if max.is_none()
            && !record_flags
                .iter()
                .any(|f| f == flags::NORMALIZATION_DEGENERATE)
        {
            record_flags.push(flags::NORMALIZATION_DEGENERATE.to_string());
        }
        let contributions: Vec<f64> = agg
            .trial_values
            .iter()
            .map(|tv| {
                let morph_pct = match max {
                    Some(m) => 100.0 * tv.morph / m,
                    None => 0.0,
                };
                0.5 * tv.phys + 0.5 * morph_pct
            })
            .collect();
        records.push(IvsRecord {
            q_mid: (q_n + q_n1) / 2.0,
            delta_q: q_n1 - q_n,
            morph_raw: agg.morph_raw,
            morph_norm: morph_norm[p],
            phys: agg.phys,
            ivs: 0.5 * agg.phys + 0.5 * morph_norm[p],
            running_mean: prefix_means(&contributions),
            trial_values: agg.trial_values,
            flags: record_flags,
        });
    }
    Ok(records)
}
