//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured value next to its pinned tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::time::Instant;

use ivskit_core::cli::{self, IvsOptions, OutputFormat};
use ivskit_core::imgcore::save_gray;
use ivskit_core::ivs::{compute_pair_ivs, max_normalize, HeatFluxFrameSet, TrialPlan};
use ivskit_core::matchsim::{match_knn, MatchParams};
use ivskit_core::segment::{
    bubble_areas, physical_similarity, segment_classical, SegmenterConfig, Threshold,
};
use ivskit_core::sift::{KeypointDescriptor, SiftParams};
use ivskit_core::synth::{render_scene, BubbleSpec, LevelSpec, RegimeSchedule, SceneSpec};
use ivskit_core::thermal::{
    phi_series, propagate_uncertainty, reduce, ThermalRecord, ThermoSample,
};
use ivskit_core::util::fmt_f64;

/// Deterministic pseudo-random stream for test inputs (splitmix64).
struct Mix(u64);

impl Mix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn fixture_sample() -> ThermoSample {
    ThermoSample {
        t1: 114.0,
        t2: 112.0,
        t3: 110.0,
        t_sat: 100.0,
        u_t: 0.5,
        dx: 0.005,
        u_dx: 0.25e-3,
        l: 0.002,
        k_cu: 390.0,
    }
}

fn rel_err(got: f64, expect: f64) -> f64 {
    (got - expect).abs() / expect.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_thermal_exactness() {
    let s = fixture_sample();
    // Warm-up, then timed call.
    let _ = reduce(&s).unwrap();
    let t0 = Instant::now();
    let r = reduce(&s).unwrap();
    let elapsed = t0.elapsed();
    let h = r.h_wcm2k.unwrap();
    let h_expect = 15.6 / 9.2;
    assert!(rel_err(r.q_wcm2, 15.6) <= 1e-9, "q {}", r.q_wcm2);
    assert!(rel_err(r.t_w, 109.2) <= 1e-9, "t_w {}", r.t_w);
    assert!(rel_err(h, h_expect) <= 1e-9, "h {h}");
    assert!(elapsed.as_micros() < 1000, "reduce took {elapsed:?}");
    println!(
        "criterion 01 thermal exactness: PASS (q={} t_w={} h={} in {elapsed:?}, tol 1e-9 rel, < 1 ms)",
        fmt_f64(r.q_wcm2),
        fmt_f64(r.t_w),
        fmt_f64(h)
    );
}

#[test]
fn criterion_02_uncertainty_closed_form() {
    let sqrt26 = 26f64.sqrt();
    let mut mix = Mix(0x0202);
    let mut worst = 0f64;
    for _ in 0..100 {
        let u_t = 1e-3 + mix.uniform() * 5.0;
        let mut s = fixture_sample();
        s.u_t = u_t;
        let r = reduce(&s).unwrap();
        let p = propagate_uncertainty(&s, &r);
        worst = worst.max(rel_err(p.u_dt_star, sqrt26 * u_t));
    }
    assert!(worst <= 1e-12, "worst relative error {worst}");
    println!("criterion 02 uncertainty closed form: PASS (u_dT* == sqrt(26)*u_T, worst rel err {worst:.3e}, tol 1e-12)");
}

fn records_with_h(h: &[f64]) -> Vec<ThermalRecord> {
    h.iter()
        .enumerate()
        .map(|(i, &h)| ThermalRecord {
            q: (i + 1) as f64,
            u_q: None,
            t_w: 0.0,
            dt_wall: 1.0,
            u_dt_wall: None,
            h: Some(h),
            u_h: Some(0.0),
            dh: None,
            u_dh: None,
            phi: None,
            u_phi: None,
            flags: Vec::new(),
        })
        .collect()
}

#[test]
fn criterion_03_phi_arithmetic() {
    let mut recs = records_with_h(&[1.0, 2.0, 4.0, 5.0]);
    phi_series(&mut recs).unwrap();
    let dh: Vec<f64> = recs[1..].iter().map(|r| r.dh.unwrap()).collect();
    let phi: Vec<f64> = recs[1..].iter().map(|r| r.phi.unwrap()).collect();
    assert_eq!(dh, vec![1.0, 2.0, 1.0]);
    assert_eq!(phi, vec![1.0, 0.0, 1.0]);

    let mut mix = Mix(0x0303);
    for _ in 0..1000 {
        let n = 3 + (mix.next_u64() % 10) as usize;
        let h: Vec<f64> = (0..n).map(|_| mix.uniform() * 40.0 + 0.1).collect();
        let mut recs = records_with_h(&h);
        phi_series(&mut recs).unwrap();
        let dh: Vec<f64> = recs[1..].iter().map(|r| r.dh.unwrap()).collect();
        let phi: Vec<f64> = recs[1..].iter().map(|r| r.phi.unwrap()).collect();
        let argmax_dh = dh
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| {
                    if v > acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            )
            .0;
        let argmin_phi = phi
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, &v)| {
                    if v < acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            )
            .0;
        assert_eq!(argmin_phi, argmax_dh);
    }
    println!("criterion 03 phi arithmetic: PASS (exact {{1,0,1}} pattern; argmin phi == argmax dh on 1000 random series)");
}

/// Textured 256x256 fixture with central bubbles (descriptor windows must
/// stay inside the frame).
fn textured_256(seed: u64) -> ivskit_core::imgcore::GrayImage {
    let mut mix = Mix(seed);
    let mut bubbles = Vec::new();
    for _ in 0..26 {
        let r = 4.0 + 7.0 * mix.uniform();
        bubbles.push(BubbleSpec {
            cx: 48.0 + mix.uniform() * 160.0,
            cy: 48.0 + mix.uniform() * 160.0,
            radius: r,
            intensity: 0.5 + 0.5 * mix.uniform(),
        });
    }
    render_scene(&SceneSpec {
        width: 256,
        height: 256,
        bubbles,
        background: 0.05,
        noise_sigma: 0.03,
        blur_sigma: 1.0,
        seed,
    })
    .unwrap()
    .image
}

#[test]
fn criterion_04_self_similarity() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    // Two distinct textured frames shared by all three sets.
    let mut paths = Vec::new();
    for fi in 0..2u64 {
        let img = textured_256(1000 + fi);
        let p = dir.path().join(format!("f{fi}.pgm"));
        save_gray(&img, &p).unwrap();
        paths.push(p);
    }
    let sets: Vec<HeatFluxFrameSet> = [10.0, 20.0, 30.0]
        .iter()
        .map(|&q| HeatFluxFrameSet::from_paths(q, paths.clone(), None))
        .collect();
    let plan = TrialPlan {
        n_trials: 7,
        rng_seed: 4,
        ..TrialPlan::default()
    };
    let seg = SegmenterConfig {
        threshold: Threshold::Fixed(0.3),
        ..SegmenterConfig::default()
    };
    let records = compute_pair_ivs(
        &sets,
        &plan,
        &SiftParams::default(),
        &MatchParams::default(),
        &seg,
    )
    .unwrap();
    let elapsed = t0.elapsed();
    for r in &records {
        assert_eq!(r.phys, 100.0, "phys must be exactly 100, got {}", r.phys);
        assert!(
            (r.morph_norm - 100.0).abs() <= 1e-9,
            "morph_norm {}",
            r.morph_norm
        );
        assert!(
            (r.ivs - 100.0).abs() <= 2.5,
            "ivs {} outside 100 +/- 2.5",
            r.ivs
        );
        assert!(!r.is_degenerate(), "flags {:?}", r.flags);
    }
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 04 self-similarity: PASS (phys == 100 exact, morph_norm == 100 +/- 1e-9, ivs within 100 +/- 2.5, {elapsed:?} < 60 s)"
    );
}

#[test]
fn criterion_05_regime_transition_localization() {
    let schedule = RegimeSchedule {
        width: 192,
        height: 192,
        frames_per_level: 3,
        background: 0.05,
        bubble_intensity: 0.9,
        noise_sigma: 0.02,
        blur_sigma: 0.8,
        levels: vec![
            LevelSpec {
                q_nominal: 10.0,
                n_bubbles: 6,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 1,
                h_target: None,
            },
            LevelSpec {
                q_nominal: 20.0,
                n_bubbles: 6,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 1,
                h_target: None,
            },
            LevelSpec {
                q_nominal: 30.0,
                n_bubbles: 6,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 1,
                h_target: None,
            },
            LevelSpec {
                q_nominal: 40.0,
                n_bubbles: 16,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 2,
                h_target: None,
            },
        ],
    };
    let transition_pair = 2; // between level 2 and level 3
    let seg = SegmenterConfig {
        threshold: Threshold::Fixed(0.475),
        ..SegmenterConfig::default()
    };
    let plan_proto = TrialPlan {
        n_trials: 3,
        rng_seed: 0,
        ..TrialPlan::default()
    };
    let t0 = Instant::now();
    use rayon::prelude::*;
    let outcomes: Vec<(bool, f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let dir = tempfile::tempdir().unwrap();
            let run = ivskit_core::synth::generate_run(&schedule, seed, dir.path()).unwrap();
            let sets: Vec<HeatFluxFrameSet> = run
                .frame_paths
                .iter()
                .zip(&schedule.levels)
                .map(|(paths, level)| {
                    HeatFluxFrameSet::from_paths(level.q_nominal, paths.clone(), None)
                })
                .collect();
            let plan = TrialPlan {
                rng_seed: seed,
                ..plan_proto
            };
            let records = compute_pair_ivs(
                &sets,
                &plan,
                &SiftParams::default(),
                &MatchParams::default(),
                &seg,
            )
            .unwrap();
            let argmin = records
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.ivs.total_cmp(&b.1.ivs))
                .unwrap()
                .0;
            let transition_ivs = records[transition_pair].ivs;
            let in_regime_mean = records
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != transition_pair)
                .map(|(_, r)| r.ivs)
                .sum::<f64>()
                / (records.len() - 1) as f64;
            (argmin == transition_pair, in_regime_mean, transition_ivs)
        })
        .collect();
    let elapsed = t0.elapsed();
    let hits = outcomes.iter().filter(|(ok, _, _)| *ok).count();
    let mean_in_regime = outcomes.iter().map(|(_, m, _)| m).sum::<f64>() / outcomes.len() as f64;
    let mean_transition = outcomes.iter().map(|(_, _, t)| t).sum::<f64>() / outcomes.len() as f64;
    assert!(hits >= 95, "localized in {hits}/100 runs");
    let gap = mean_in_regime - mean_transition;
    assert!(gap >= 15.0, "in-regime vs transition gap {gap}");
    println!(
        "criterion 05 regime-transition localization: PASS ({hits}/100 runs (>= 95), gap {} points (>= 15), {elapsed:?})",
        fmt_f64(gap)
    );
}

#[test]
fn criterion_06_segmentation_oracle() {
    let mut worst = 0f64;
    for &radius in &[10.0f64, 20.0, 40.0] {
        let canvas = ((4.0 * radius) as u32).max(128);
        let center = canvas as f64 / 2.0;
        let analytic = std::f64::consts::PI * radius * radius;
        for draw in 0..50u64 {
            let scene = SceneSpec {
                width: canvas,
                height: canvas,
                bubbles: vec![BubbleSpec {
                    cx: center,
                    cy: center,
                    radius,
                    intensity: 0.9,
                }],
                background: 0.1,
                noise_sigma: 0.05,
                blur_sigma: 0.5,
                seed: 600 + draw,
            };
            let img = render_scene(&scene).unwrap().image;
            let seg = segment_classical(&img, &SegmenterConfig::default()).unwrap();
            let areas = bubble_areas(&seg.mask);
            assert_eq!(
                areas.areas.len(),
                1,
                "r={radius} draw={draw}: {} instances",
                areas.areas.len()
            );
            let err = (areas.areas[0] as f64 - analytic).abs() / analytic;
            worst = worst.max(err);
            assert!(err <= 0.03, "r={radius} draw={draw}: error {err}");
        }
    }
    println!(
        "criterion 06 segmentation oracle: PASS (otsu classical segmenter, worst area error {:.4} <= 0.03 over r in {{10,20,40}} x 50 draws)",
        worst
    );
}

#[test]
fn criterion_07_scale_invariance_of_normalization() {
    // Raw trial-mean scores from a real (small) run would do; arbitrary
    // positive values exercise the same path.
    let raw = vec![0.412_356_789, 0.104_2, 0.333_333_333_3, 0.728_13, 0.5];
    let excluded = vec![false; raw.len()];
    let (base, _) = max_normalize(&raw, &excluded);
    let base_bytes: Vec<String> = base.iter().map(|&v| fmt_f64(v)).collect();
    for c in [0.5f64, 2.0, 10.0] {
        let scaled: Vec<f64> = raw.iter().map(|&v| v * c).collect();
        let (got, _) = max_normalize(&scaled, &excluded);
        let got_bytes: Vec<String> = got.iter().map(|&v| fmt_f64(v)).collect();
        assert_eq!(base_bytes, got_bytes, "scale factor {c}");
    }
    println!(
        "criterion 07 scale invariance: PASS (morph_norm byte-identical under c in {{0.5, 2, 10}})"
    );
}

#[test]
fn criterion_08_physical_similarity_identity_and_asymmetry() {
    assert_eq!(physical_similarity(123.456, 123.456).value, 100.0);
    assert_eq!(physical_similarity(1000.0, 900.0).value, 90.0);
    let p = physical_similarity(1000.0, 2500.0);
    assert_eq!(p.value, -50.0);
    assert!(p.out_of_range, "must be flagged out of range");
    println!("criterion 08 eq(8) identity/asymmetry: PASS (100, 90, -50 flagged)");
}

#[test]
fn criterion_09_jobs_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = RegimeSchedule {
        width: 160,
        height: 160,
        frames_per_level: 3,
        levels: vec![
            LevelSpec {
                q_nominal: 10.0,
                n_bubbles: 7,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 1,
                h_target: None,
            },
            LevelSpec {
                q_nominal: 20.0,
                n_bubbles: 9,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 1,
                h_target: None,
            },
            LevelSpec {
                q_nominal: 30.0,
                n_bubbles: 12,
                radius_min: 5.0,
                radius_max: 9.0,
                elongation: 1,
                h_target: None,
            },
        ],
        ..RegimeSchedule::default()
    };
    let run = ivskit_core::synth::generate_run(&schedule, 11, dir.path()).unwrap();
    let mut outputs = Vec::new();
    for jobs in [1usize, 4] {
        let out = dir.path().join(format!("out_j{jobs}"));
        let code = cli::run_ivs(&IvsOptions {
            manifest: run.manifest_path.clone(),
            seed: Some(99),
            trials: Some(5),
            jobs,
            out: Some(out.clone()),
            format: OutputFormat::Csv,
            debug_dumps: false,
        })
        .unwrap();
        assert!(code == 0 || code == 2, "exit code {code}");
        outputs.push(std::fs::read(out.join("ivs.csv")).unwrap());
    }
    assert_eq!(
        outputs[0], outputs[1],
        "CSV bytes differ between --jobs 1 and --jobs 4"
    );
    println!(
        "criterion 09 determinism: PASS (ivs.csv byte-identical across --jobs 1 and --jobs 4, {} bytes)",
        outputs[0].len()
    );
}

#[test]
fn criterion_10_matching_oracle() {
    fn desc(values: Vec<f32>) -> KeypointDescriptor {
        KeypointDescriptor {
            x: 0.0,
            y: 0.0,
            scale: 1.0,
            orientation: 0.0,
            descriptor: values,
        }
    }
    /// Independent oracle: full distance matrix with a stable
    /// (distance, index) sort.
    fn oracle(
        a: &[KeypointDescriptor],
        b: &[KeypointDescriptor],
    ) -> Vec<(usize, usize, Option<usize>)> {
        a.iter()
            .enumerate()
            .map(|(ia, da)| {
                let mut dists: Vec<(f64, usize)> = b
                    .iter()
                    .enumerate()
                    .map(|(ib, db)| {
                        let d: f64 = da
                            .descriptor
                            .iter()
                            .zip(&db.descriptor)
                            .map(|(x, y)| {
                                let diff = *x as f64 - *y as f64;
                                diff * diff
                            })
                            .sum();
                        (d, ib)
                    })
                    .collect();
                dists.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                (ia, dists[0].1, dists.get(1).map(|d| d.1))
            })
            .collect()
    }

    let params = MatchParams::default();
    let mut mix = Mix(0x1010);
    let mut total_queries = 0usize;
    for case in 0..200 {
        let na = 1 + (mix.next_u64() % 500) as usize;
        let nb = 1 + (mix.next_u64() % 500) as usize;
        // Coarse quantization forces plenty of exact distance ties.
        let gen_set = |mix: &mut Mix, n: usize| -> Vec<KeypointDescriptor> {
            (0..n)
                .map(|_| {
                    desc(
                        (0..128)
                            .map(|_| ((mix.next_u64() % 5) as f32) / 4.0)
                            .collect(),
                    )
                })
                .collect()
        };
        let a = gen_set(&mut mix, na);
        let b = gen_set(&mut mix, nb);
        let got = match_knn(&a, &b, &params);
        let expect = oracle(&a, &b);
        assert_eq!(got.len(), expect.len());
        for (g, e) in got.iter().zip(&expect) {
            assert_eq!((g.index_a, g.best_b, g.second_b), *e, "case {case}");
        }
        total_queries += a.len();
    }
    println!(
        "criterion 10 matching oracle: PASS (200 random sets, {total_queries} queries, exact index agreement)"
    );
}
