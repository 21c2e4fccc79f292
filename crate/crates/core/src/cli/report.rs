//! Report emission and re-ingestion: CSV/JSON tables, flag logs.
//!
//! Every float is written through one canonical formatter, so a run's
//! outputs are byte-stable under fixed seed and worker count.

use std::fs;
use std::path::Path;

use crate::ivs::IvsRecord;
use crate::thermal::ThermalRecord;
use crate::util::fmt_f64;
use crate::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub const IVS_CSV_HEADER: &str =
    "q_mid,delta_q,morph_raw,morph_norm,phys,ivs,trial_morph,trial_phys,running_mean,flags";

pub fn write_ivs_csv(records: &[IvsRecord], path: &Path) -> Result<()> {
    let mut text = String::from(IVS_CSV_HEADER);
    text.push('\n');
    for r in records {
        let trial_morph: Vec<String> = r.trial_values.iter().map(|t| fmt_f64(t.morph)).collect();
        let trial_phys: Vec<String> = r.trial_values.iter().map(|t| fmt_f64(t.phys)).collect();
        let running: Vec<String> = r.running_mean.iter().map(|&v| fmt_f64(v)).collect();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.q_mid),
            fmt_f64(r.delta_q),
            fmt_f64(r.morph_raw),
            fmt_f64(r.morph_norm),
            fmt_f64(r.phys),
            fmt_f64(r.ivs),
            trial_morph.join(";"),
            trial_phys.join(";"),
            running.join(";"),
            r.flags.join(";")
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_ivs_json(records: &[IvsRecord], run_id: &str, path: &Path) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        run_id: &'a str,
        records: &'a [IvsRecord],
    }
    let doc = Doc { run_id, records };
    let text = serde_json::to_string_pretty(&doc).expect("ivs records serialize");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Subset of an IVS report needed by `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct IvsRow {
    pub q_mid: f64,
    pub ivs: f64,
}

pub fn read_ivs_csv(path: &Path) -> Result<Vec<IvsRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 6 {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: ln + 1,
                reason: format!("expected >= 6 columns, got {}", cols.len()),
            });
        }
        let parse = |i: usize| -> Result<f64> {
            cols[i].parse().map_err(|_| Error::Csv {
                path: path.to_path_buf(),
                line: ln + 1,
                reason: format!("bad float {:?}", cols[i]),
            })
        };
        rows.push(IvsRow {
            q_mid: parse(0)?,
            ivs: parse(5)?,
        });
    }
    Ok(rows)
}

pub const THERMAL_CSV_HEADER: &str =
    "q_wcm2,u_q_wcm2,t_w_c,dt_wall_c,u_dt_wall_c,h_wcm2k,u_h_wcm2k,dh_wcm2k,u_dh_wcm2k,phi_wcm2k,u_phi_wcm2k,flags";

pub fn write_thermal_csv(records: &[ThermalRecord], path: &Path) -> Result<()> {
    let mut text = String::from(THERMAL_CSV_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.q),
            opt(r.u_q),
            fmt_f64(r.t_w),
            fmt_f64(r.dt_wall),
            opt(r.u_dt_wall),
            opt(r.h),
            opt(r.u_h),
            opt(r.dh),
            opt(r.u_dh),
            opt(r.phi),
            opt(r.u_phi),
            r.flags.join(";")
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Subset of a thermal report needed by `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalRow {
    pub q: f64,
    pub phi: Option<f64>,
    pub u_phi: Option<f64>,
}

pub fn read_thermal_csv(path: &Path) -> Result<Vec<ThermalRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 11 {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: ln + 1,
                reason: format!("expected >= 11 columns, got {}", cols.len()),
            });
        }
        let parse_req = |i: usize| -> Result<f64> {
            cols[i].parse().map_err(|_| Error::Csv {
                path: path.to_path_buf(),
                line: ln + 1,
                reason: format!("bad float {:?}", cols[i]),
            })
        };
        let parse_opt = |i: usize| -> Option<f64> {
            if cols[i].is_empty() {
                None
            } else {
                cols[i].parse().ok()
            }
        };
        rows.push(ThermalRow {
            q: parse_req(0)?,
            phi: parse_opt(9),
            u_phi: parse_opt(10),
        });
    }
    Ok(rows)
}

/// Raw thermal input row: one steady-state level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalInputRow {
    pub q_nominal: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t_sat: f64,
}

/// Reads the 5-column thermal input CSV; a single header row is allowed.
pub fn read_thermal_input(path: &Path) -> Result<Vec<ThermalInputRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if ln == 0 && cols[0].parse::<f64>().is_err() {
            continue; // header
        }
        if cols.len() != 5 {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: ln + 1,
                reason: format!("expected 5 columns, got {}", cols.len()),
            });
        }
        let parse = |i: usize| -> Result<f64> {
            cols[i].parse().map_err(|_| Error::Csv {
                path: path.to_path_buf(),
                line: ln + 1,
                reason: format!("bad float {:?}", cols[i]),
            })
        };
        rows.push(ThermalInputRow {
            q_nominal: parse(0)?,
            t1: parse(1)?,
            t2: parse(2)?,
            t3: parse(3)?,
            t_sat: parse(4)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 0,
            reason: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// One aligned comparison row: IVS at a midpoint with the associated φ.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub q_mid: f64,
    pub ivs: f64,
    pub phi: Option<f64>,
    pub u_phi: Option<f64>,
}

/// Associates each IVS midpoint with the nearest thermal level carrying a
/// φ value; equidistant ties resolve to the higher level (the one whose
/// Δh spans the midpoint). Thermal data may be absent entirely; disjoint
/// q ranges are an error.
pub fn align_compare(ivs: &[IvsRow], thermal: &[ThermalRow]) -> Result<Vec<CompareRow>> {
    let candidates: Vec<&ThermalRow> = thermal.iter().filter(|r| r.phi.is_some()).collect();
    if ivs.is_empty() {
        return Err(Error::InvalidRun("IVS report has no records".into()));
    }
    if !candidates.is_empty() {
        let (q_lo, q_hi) = (
            candidates.iter().map(|r| r.q).fold(f64::INFINITY, f64::min),
            candidates
                .iter()
                .map(|r| r.q)
                .fold(f64::NEG_INFINITY, f64::max),
        );
        let (m_lo, m_hi) = (
            ivs.iter().map(|r| r.q_mid).fold(f64::INFINITY, f64::min),
            ivs.iter()
                .map(|r| r.q_mid)
                .fold(f64::NEG_INFINITY, f64::max),
        );
        if q_hi < m_lo || q_lo > m_hi {
            return Err(Error::InvalidRun(format!(
                "disjoint q ranges: thermal [{}, {}] vs IVS midpoints [{}, {}]",
                fmt_f64(q_lo),
                fmt_f64(q_hi),
                fmt_f64(m_lo),
                fmt_f64(m_hi)
            )));
        }
    }
    // Report round-tripping rounds q at 9 decimals, so exact midpoints
    // come back with ~1e-9 distance noise; distances within this band of
    // the minimum count as ties, resolved to the upper level (whose Δh
    // spans the midpoint).
    const TIE_BAND: f64 = 1e-6;
    Ok(ivs
        .iter()
        .map(|row| {
            let d_min = candidates
                .iter()
                .map(|r| (r.q - row.q_mid).abs())
                .fold(f64::INFINITY, f64::min);
            let nearest = candidates
                .iter()
                .filter(|r| (r.q - row.q_mid).abs() <= d_min + TIE_BAND)
                .max_by(|a, b| a.q.total_cmp(&b.q));
            CompareRow {
                q_mid: row.q_mid,
                ivs: row.ivs,
                phi: nearest.and_then(|r| r.phi),
                u_phi: nearest.and_then(|r| r.u_phi),
            }
        })
        .collect())
}

pub const COMPARE_CSV_HEADER: &str = "q_mid,ivs,phi_wcm2k,u_phi_wcm2k";

pub fn write_compare_csv(rows: &[CompareRow], path: &Path) -> Result<()> {
    let mut text = String::from(COMPARE_CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(r.q_mid),
            fmt_f64(r.ivs),
            opt(r.phi),
            opt(r.u_phi)
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Run log: metadata lines plus one `flag ...` line per flagged record,
/// no timestamps.
pub fn write_flag_log(path: &Path, run_id: &str, lines: &[String]) -> Result<()> {
    let flagged = lines.iter().filter(|l| l.starts_with("flag ")).count();
    let mut text = format!("run_id={run_id} flagged_records={flagged}\n");
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
