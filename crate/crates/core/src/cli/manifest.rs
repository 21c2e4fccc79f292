//! Run manifests: one structured TOML file describing frame sets,
//! configs, and outputs. All paths are relative to the manifest's
//! directory so runs are relocatable.

use std::fs;
use std::path::{Path, PathBuf};

use crate::ivs::{HeatFluxFrameSet, TrialPlan};
use crate::matchsim::MatchParams;
use crate::segment::SegmenterConfig;
use crate::sift::SiftParams;
use crate::thermal;
use crate::{Error, Result};

/// Thermocouple-rig geometry required for thermal reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dx: f64,
    pub l: f64,
    pub k_cu: f64,
    pub u_t: f64,
    pub u_dx: f64,
}

impl Geometry {
    pub fn sample(&self, t1: f64, t2: f64, t3: f64, t_sat: f64) -> thermal::ThermoSample {
        thermal::ThermoSample {
            t1,
            t2,
            t3,
            t_sat,
            u_t: self.u_t,
            dx: self.dx,
            u_dx: self.u_dx,
            l: self.l,
            k_cu: self.k_cu,
        }
    }
}

/// Geometry as written in config: Δx and l carry no defaults on purpose
/// (silent defaults would fabricate physics); the rest have conventional
/// defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub dx: Option<f64>,
    pub l: Option<f64>,
    pub k_cu: Option<f64>,
    pub u_t: Option<f64>,
    pub u_dx: Option<f64>,
}

impl GeometrySection {
    pub fn resolve(&self) -> Result<Geometry> {
        let mut missing = Vec::new();
        if self.dx.is_none() {
            missing.push("thermal.dx");
        }
        if self.l.is_none() {
            missing.push("thermal.l");
        }
        if !missing.is_empty() {
            return Err(Error::MissingConfig(missing.join(", ")));
        }
        Ok(Geometry {
            dx: self.dx.unwrap(),
            l: self.l.unwrap(),
            k_cu: self.k_cu.unwrap_or(thermal::DEFAULT_K_CU),
            u_t: self.u_t.unwrap_or(thermal::DEFAULT_U_T),
            u_dx: self.u_dx.unwrap_or(thermal::DEFAULT_U_DX),
        })
    }
}

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    run_id: String,
    output_dir: Option<String>,
    thermal_csv: Option<String>,
    #[serde(default)]
    trial: TrialPlan,
    #[serde(default)]
    sift: SiftParams,
    #[serde(default, rename = "match")]
    matching: MatchParams,
    #[serde(default)]
    segment: SegmenterConfig,
    thermal: Option<GeometrySection>,
    #[serde(default, rename = "frame_set")]
    frame_sets: Vec<FrameSetSection>,
}

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameSetSection {
    q: f64,
    frames: Vec<String>,
    mask_dir: Option<String>,
}

/// Parsed, path-resolved run description.
#[derive(Debug)]
pub struct RunManifest {
    pub run_id: String,
    /// Directory the manifest lives in; all relative paths resolve here.
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
    pub thermal_csv: Option<PathBuf>,
    pub geometry: Option<GeometrySection>,
    pub plan: TrialPlan,
    pub sift: SiftParams,
    pub matching: MatchParams,
    pub segment: SegmenterConfig,
    pub sets: Vec<HeatFluxFrameSet>,
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: ManifestFile = toml::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let manifest_err = |reason: String| Error::Manifest {
        path: path.to_path_buf(),
        reason,
    };
    if parsed.frame_sets.is_empty() {
        return Err(manifest_err("no [[frame_set]] entries".into()));
    }
    let mut sets = Vec::with_capacity(parsed.frame_sets.len());
    for fs_section in &parsed.frame_sets {
        if fs_section.frames.is_empty() {
            return Err(manifest_err(format!(
                "frame set q={} has no frames",
                fs_section.q
            )));
        }
        let mask_dir = fs_section.mask_dir.as_ref().map(|d| base_dir.join(d));
        let paths: Vec<PathBuf> = fs_section.frames.iter().map(|f| base_dir.join(f)).collect();
        sets.push(HeatFluxFrameSet::from_paths(
            fs_section.q,
            paths,
            mask_dir.as_deref(),
        ));
    }
    if !sets.windows(2).all(|w| w[1].q > w[0].q) {
        return Err(manifest_err(
            "frame sets must be strictly increasing in q".into(),
        ));
    }
    let output_dir = base_dir.join(parsed.output_dir.as_deref().unwrap_or("out"));
    Ok(RunManifest {
        run_id: parsed.run_id,
        base_dir: base_dir.clone(),
        output_dir,
        thermal_csv: parsed.thermal_csv.as_ref().map(|p| base_dir.join(p)),
        geometry: parsed.thermal,
        plan: parsed.trial,
        sift: parsed.sift,
        matching: parsed.matching,
        segment: parsed.segment,
        sets,
    })
}
