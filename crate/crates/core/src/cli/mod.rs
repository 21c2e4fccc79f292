//! Command layer behind the `ivskit` binary.
//!
//! The CLI is a thin shell: every command is a library function here,
//! testable without spawning a process. Exit-code contract: 0 success,
//! 1 error, 2 success with flagged-degenerate records.

use std::fs;
use std::path::{Path, PathBuf};

use crate::imgcore::load_gray;
use crate::ivs::{compute_pair_ivs, sample_pairs, IvsRecord};
use crate::matchsim::{mbar_from_descriptors, write_match_counts_csv, MbarScore};
use crate::segment::{
    bubble_areas, load_label_mask, save_label_mask, segment_classical, SegmenterConfig,
    SegmenterMode, Threshold,
};
use crate::sift::{self, write_keypoints_csv};
use crate::synth::RegimeSchedule;
use crate::thermal::{phi_series, reduce_record, ThermalRecord};
use crate::util::fmt_f64;
use crate::{Error, Result};

pub mod manifest;
pub mod plot;
pub mod report;

pub use manifest::{load_manifest, Geometry, GeometrySection, RunManifest};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DEGENERATE: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Runs a closure on a worker pool of the requested size (0 = logical
/// cores). All parallelism lives below the library boundary and never
/// affects outputs.
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("worker pool")
        .install(f)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone)]
pub struct IvsOptions {
    pub manifest: PathBuf,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub debug_dumps: bool,
}

/// The two-pass IVS pipeline over a manifest; emits the report bundle's
/// visual part (table, plots, flag log).
pub fn run_ivs(opts: &IvsOptions) -> Result<u8> {
    let mut m = load_manifest(&opts.manifest)?;
    if let Some(seed) = opts.seed {
        m.plan.rng_seed = seed;
    }
    if let Some(trials) = opts.trials {
        m.plan.n_trials = trials;
    }
    let out_dir = opts.out.clone().unwrap_or_else(|| m.output_dir.clone());
    ensure_dir(&out_dir)?;

    let records = with_pool(opts.jobs, || {
        compute_pair_ivs(&m.sets, &m.plan, &m.sift, &m.matching, &m.segment)
    })?;

    match opts.format {
        OutputFormat::Csv => report::write_ivs_csv(&records, &out_dir.join("ivs.csv"))?,
        OutputFormat::Json => {
            report::write_ivs_json(&records, &m.run_id, &out_dir.join("ivs.json"))?
        }
    }
    write_ivs_plots(&records, &out_dir)?;

    // Frame resolution is whatever the input provides; record it per set.
    let mut log_lines: Vec<String> = Vec::new();
    for set in &m.sets {
        let first = load_gray(&set.frames[0].source_path)?;
        log_lines.push(format!(
            "set id={} q={} frames={} resolution={}x{}",
            set.id,
            fmt_f64(set.q),
            set.frames.len(),
            first.width(),
            first.height()
        ));
    }
    log_lines.extend(records.iter().filter(|r| !r.flags.is_empty()).map(|r| {
        format!(
            "flag q_mid={} degenerate={} flags={}",
            fmt_f64(r.q_mid),
            r.is_degenerate(),
            r.flags.join(";")
        )
    }));
    report::write_flag_log(&out_dir.join("run.log"), &m.run_id, &log_lines)?;

    if opts.debug_dumps {
        write_debug_dumps(&m, &out_dir)?;
    }

    if records.iter().any(IvsRecord::is_degenerate) {
        log::warn!("run produced degenerate records; see run.log");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(EXIT_OK)
}

fn write_ivs_plots(records: &[IvsRecord], out_dir: &Path) -> Result<()> {
    let ivs_pts: Vec<(f64, f64)> = records.iter().map(|r| (r.q_mid, r.ivs)).collect();
    plot::line_chart(
        &out_dir.join("ivs_vs_q.svg"),
        "Index of Visual Similarity",
        "q (W/cm^2)",
        "IVS (percent)",
        &[plot::Series {
            label: "IVS".into(),
            points: ivs_pts,
        }],
    )?;
    plot::line_chart(
        &out_dir.join("components_vs_q.svg"),
        "Morphological and physical similarity",
        "q (W/cm^2)",
        "similarity (percent)",
        &[
            plot::Series {
                label: "morphological".into(),
                points: records.iter().map(|r| (r.q_mid, r.morph_norm)).collect(),
            },
            plot::Series {
                label: "physical".into(),
                points: records.iter().map(|r| (r.q_mid, r.phys)).collect(),
            },
        ],
    )
}

/// Debug artifacts: per-frame keypoint CSVs, per-frame bubble areas, and
/// trial-0 match counts per heat-flux pair. Recomputed from scratch; only
/// for inspection.
fn write_debug_dumps(m: &RunManifest, out_dir: &Path) -> Result<()> {
    let debug_dir = out_dir.join("debug");
    let kp_dir = debug_dir.join("keypoints");
    ensure_dir(&kp_dir)?;
    let mut areas_csv = String::from("frame,n_instances,mean_area,vapor_area\n");
    let mut descriptors = Vec::new();
    for set in &m.sets {
        let mut per_set = Vec::new();
        for frame in &set.frames {
            let img = load_gray(&frame.source_path)?;
            let desc = sift::extract(&img, &m.sift)?;
            write_keypoints_csv(
                &desc,
                &kp_dir.join(format!("{}_{:02}.csv", set.id, frame.frame_index)),
            )?;
            let mask = match m.segment.mode {
                SegmenterMode::Classical => segment_classical(&img, &m.segment)?.mask,
                SegmenterMode::External => {
                    let p = frame.mask_path.as_ref().ok_or_else(|| {
                        Error::MissingConfig(format!(
                            "no mask path for {}",
                            frame.source_path.display()
                        ))
                    })?;
                    load_label_mask(p)?
                }
            };
            let stats = bubble_areas(&mask);
            areas_csv.push_str(&format!(
                "{}_{:02},{},{},{}\n",
                set.id,
                frame.frame_index,
                stats.areas.len(),
                fmt_f64(stats.mean_area),
                stats.filtered_total
            ));
            per_set.push(desc);
        }
        descriptors.push(per_set);
    }
    let areas_path = debug_dir.join("areas.csv");
    fs::write(&areas_path, areas_csv).map_err(|e| Error::io(&areas_path, e))?;

    // Trial-0 match counts per consecutive pair.
    let mut rows: Vec<(String, MbarScore)> = Vec::new();
    for p in 0..m.sets.len() - 1 {
        let [a0, a1] = sample_pairs(&m.sets[p], 0, &m.plan)?;
        let [b0, b1] = sample_pairs(&m.sets[p + 1], 0, &m.plan)?;
        let d = &descriptors;
        let score = mbar_from_descriptors(
            [&d[p][a0.frame_index], &d[p][a1.frame_index]],
            [&d[p + 1][b0.frame_index], &d[p + 1][b1.frame_index]],
            &m.matching,
        );
        rows.push((format!("{}-{}", m.sets[p].id, m.sets[p + 1].id), score));
    }
    write_match_counts_csv(&rows, &debug_dir.join("match_counts.csv"))
}

#[derive(Debug, Clone)]
pub struct ThermalOptions {
    pub input: PathBuf,
    pub dx: Option<f64>,
    pub l: Option<f64>,
    pub k_cu: Option<f64>,
    pub u_t: Option<f64>,
    pub u_dx: Option<f64>,
    pub out: PathBuf,
    pub format: OutputFormat,
}

/// Thermocouple reduction over an input CSV (q_nominal, t1, t2, t3,
/// t_sat per row) with geometry from flags; Δx and l are mandatory.
pub fn run_thermal(opts: &ThermalOptions) -> Result<u8> {
    let geometry = GeometrySection {
        dx: opts.dx,
        l: opts.l,
        k_cu: opts.k_cu,
        u_t: opts.u_t,
        u_dx: opts.u_dx,
    }
    .resolve()?;
    let rows = report::read_thermal_input(&opts.input)?;
    if rows.len() < 2 {
        return Err(Error::InvalidRun(format!(
            "thermal input has {} rows; need at least 2",
            rows.len()
        )));
    }
    let mut records: Vec<ThermalRecord> = rows
        .iter()
        .map(|r| reduce_record(&geometry.sample(r.t1, r.t2, r.t3, r.t_sat)))
        .collect::<Result<_>>()?;
    phi_series(&mut records)?;
    ensure_dir(&opts.out)?;
    match opts.format {
        OutputFormat::Csv => report::write_thermal_csv(&records, &opts.out.join("thermal.csv"))?,
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&records).expect("records serialize");
            let p = opts.out.join("thermal.json");
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
    }
    let phi_pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.phi.map(|phi| (r.q, phi)))
        .collect();
    if !phi_pts.is_empty() {
        plot::line_chart(
            &opts.out.join("phi_vs_q.svg"),
            "Complement of HTC change",
            "q (W/cm^2)",
            "phi (W/cm^2.K)",
            &[plot::Series {
                label: "phi".into(),
                points: phi_pts,
            }],
        )?;
    }
    let flag_lines: Vec<String> = records
        .iter()
        .filter(|r| !r.flags.is_empty())
        .map(|r| format!("flag q={} flags={}", fmt_f64(r.q), r.flags.join(";")))
        .collect();
    report::write_flag_log(&opts.out.join("thermal.log"), "thermal", &flag_lines)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub ivs: PathBuf,
    pub thermal: Option<PathBuf>,
    pub out: PathBuf,
}

/// Aligns an IVS report with a thermal report on the q grid and emits the
/// comparison table plus the twin-axis overlay. The thermal side may be
/// absent; the table is then emitted with empty φ columns.
pub fn run_compare(opts: &CompareOptions) -> Result<u8> {
    let ivs_rows = report::read_ivs_csv(&opts.ivs)?;
    let thermal_rows = match &opts.thermal {
        Some(p) => report::read_thermal_csv(p)?,
        None => Vec::new(),
    };
    let rows = report::align_compare(&ivs_rows, &thermal_rows)?;
    ensure_dir(&opts.out)?;
    report::write_compare_csv(&rows, &opts.out.join("compare.csv"))?;

    let ivs_series = plot::Series {
        label: "IVS".into(),
        points: rows.iter().map(|r| (r.q_mid, r.ivs)).collect(),
    };
    let phi_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.phi.map(|phi| (r.q_mid, phi)))
        .collect();
    if phi_pts.is_empty() {
        plot::line_chart(
            &opts.out.join("compare_overlay.svg"),
            "IVS (no thermal data)",
            "q (W/cm^2)",
            "IVS (percent)",
            &[ivs_series],
        )?;
    } else {
        plot::twin_axis_chart(
            &opts.out.join("compare_overlay.svg"),
            "IVS vs complement of HTC change",
            "q (W/cm^2)",
            &ivs_series,
            "IVS (percent)",
            &plot::Series {
                label: "phi".into(),
                points: phi_pts,
            },
            "phi (W/cm^2.K)",
        )?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

/// Generates a synthetic fixture run (frames, masks, manifest, thermal CSV).
pub fn run_synth(opts: &SynthOptions) -> Result<u8> {
    let schedule = RegimeSchedule::from_toml_path(&opts.config)?;
    let run = crate::synth::generate_run(&schedule, opts.seed, &opts.out)?;
    println!("{}", run.manifest_path.display());
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct SegmentOptions {
    pub input: PathBuf,
    pub threshold: String,
    pub polarity: crate::segment::Polarity,
    pub min_instance_px: usize,
    pub connectivity: u8,
    pub out_mask: PathBuf,
    pub areas_csv: Option<PathBuf>,
}

/// Debug single-frame segmentation: writes the label mask and prints the
/// area summary.
pub fn run_segment(opts: &SegmentOptions) -> Result<u8> {
    let threshold = if opts.threshold == "otsu" {
        Threshold::Otsu
    } else {
        let tau: f64 = opts.threshold.parse().map_err(|_| {
            Error::InvalidParams(format!(
                "threshold must be \"otsu\" or a number in (0,1), got {:?}",
                opts.threshold
            ))
        })?;
        Threshold::Fixed(tau)
    };
    let connectivity = match opts.connectivity {
        4 => crate::segment::Connectivity::Four,
        8 => crate::segment::Connectivity::Eight,
        other => {
            return Err(Error::InvalidParams(format!(
                "connectivity must be 4 or 8, got {other}"
            )))
        }
    };
    let cfg = SegmenterConfig {
        mode: SegmenterMode::Classical,
        threshold,
        polarity: opts.polarity,
        min_instance_px: opts.min_instance_px,
        connectivity,
    };
    let img = load_gray(&opts.input)?;
    let seg = segment_classical(&img, &cfg)?;
    save_label_mask(&seg.mask, &opts.out_mask)?;
    let stats = bubble_areas(&seg.mask);
    let stem = opts
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let row = format!(
        "{stem},{},{},{}",
        stats.areas.len(),
        fmt_f64(stats.mean_area),
        stats.filtered_total
    );
    println!("frame,n_instances,mean_area,vapor_area");
    println!("{row}");
    if let Some(csv) = &opts.areas_csv {
        fs::write(
            csv,
            format!("frame,n_instances,mean_area,vapor_area\n{row}\n"),
        )
        .map_err(|e| Error::io(csv, e))?;
    }
    if seg.otsu_degenerate {
        log::warn!("otsu histogram degenerate: constant image, empty mask emitted");
    }
    Ok(EXIT_OK)
}
