//! C ABI for the IVS toolkit.
//!
//! Conventions:
//! - Every fallible call returns an [`IvsKitStatus`]; `IVS_KIT_STATUS_OK`
//!   is 0. On failure, a thread-local message is readable via
//!   [`ivskit_last_error_message`] until the next failing call on the
//!   same thread.
//! - Run results live behind the opaque [`IvsKitReport`] handle; free it
//!   with [`ivskit_report_free`]. Strings returned as `char*` are freed
//!   with [`ivskit_string_free`].
//! - Quantities that can be undefined (h at zero superheat, uncertainties
//!   at ΔT* = 0, φ on the first record) come back as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};

use ivskit_core::cli::report::write_ivs_csv;
use ivskit_core::cli::{load_manifest, RunManifest};
use ivskit_core::ivs::{compute_pair_ivs, IvsRecord};
use ivskit_core::matchsim::pair_score;
use ivskit_core::segment::physical_similarity;
use ivskit_core::sift::SiftParams;
use ivskit_core::thermal::{
    phi_series, propagate_uncertainty, reduce, ThermalRecord, ThermoSample,
};
use ivskit_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvsKitStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Utf8Error = 3,
    IoError = 4,
    ParseError = 5,
    /// The run finished but produced flagged-degenerate records.
    Degenerate = 6,
    InternalError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> IvsKitStatus {
    match err {
        Error::Io { .. } => IvsKitStatus::IoError,
        Error::UnsupportedFormat(_)
        | Error::MalformedImage { .. }
        | Error::Csv { .. }
        | Error::Manifest { .. } => IvsKitStatus::ParseError,
        _ => IvsKitStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> IvsKitStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Last error message for this thread, or NULL when none was recorded.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ivskit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Toolkit version as a static string.
#[no_mangle]
pub extern "C" fn ivskit_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have been returned by an ivskit function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn ivskit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// One thermocouple reading plus rig geometry. Temperatures in degC,
/// lengths in m, k in W/(m K).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IvsKitThermoSample {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t_sat: f64,
    pub u_t: f64,
    pub dx: f64,
    pub u_dx: f64,
    pub l: f64,
    pub k_cu: f64,
}

/// Reduced quantities; undefined values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IvsKitThermalResult {
    pub q_wcm2: f64,
    pub t_w_c: f64,
    pub dt_wall_c: f64,
    pub h_wcm2k: f64,
    pub u_dt_star_c: f64,
    pub u_q_wcm2: f64,
    pub u_dt_wall_c: f64,
    pub u_h_wcm2k: f64,
}

/// Fourier-law reduction with RSS uncertainty propagation.
///
/// # Safety
/// `sample` and `out` must be valid, aligned, non-null pointers.
#[no_mangle]
pub unsafe extern "C" fn ivskit_thermal_reduce(
    sample: *const IvsKitThermoSample,
    out: *mut IvsKitThermalResult,
) -> IvsKitStatus {
    if sample.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return IvsKitStatus::NullArgument;
    }
    let s = &*sample;
    let core_sample = ThermoSample {
        t1: s.t1,
        t2: s.t2,
        t3: s.t3,
        t_sat: s.t_sat,
        u_t: s.u_t,
        dx: s.dx,
        u_dx: s.u_dx,
        l: s.l,
        k_cu: s.k_cu,
    };
    let reduced = match reduce(&core_sample) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let u = propagate_uncertainty(&core_sample, &reduced);
    *out = IvsKitThermalResult {
        q_wcm2: reduced.q_wcm2,
        t_w_c: reduced.t_w,
        dt_wall_c: reduced.dt_wall,
        h_wcm2k: reduced.h_wcm2k.unwrap_or(f64::NAN),
        u_dt_star_c: u.u_dt_star,
        u_q_wcm2: u.u_q_wcm2.unwrap_or(f64::NAN),
        u_dt_wall_c: u.u_dt_wall.unwrap_or(f64::NAN),
        u_h_wcm2k: u.u_h_wcm2k.unwrap_or(f64::NAN),
    };
    IvsKitStatus::Ok
}

/// φ over an h series: phi_out[i] = max_j(Δh_j) − Δh_i, NaN at i = 0.
/// `u_h` and `u_phi_out` may be NULL to skip uncertainty propagation.
///
/// # Safety
/// `h` and `phi_out` must point to `n` readable/writable doubles; when
/// non-null, `u_h`/`u_phi_out` likewise.
#[no_mangle]
pub unsafe extern "C" fn ivskit_phi_series(
    h: *const f64,
    u_h: *const f64,
    n: usize,
    phi_out: *mut f64,
    u_phi_out: *mut f64,
) -> IvsKitStatus {
    if h.is_null() || phi_out.is_null() {
        set_error("null pointer argument".into());
        return IvsKitStatus::NullArgument;
    }
    if n < 2 {
        set_error(format!("phi series needs at least 2 points, got {n}"));
        return IvsKitStatus::InvalidArgument;
    }
    let h_slice = std::slice::from_raw_parts(h, n);
    let u_slice = if u_h.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(u_h, n))
    };
    let mut records: Vec<ThermalRecord> = (0..n)
        .map(|i| ThermalRecord {
            q: (i + 1) as f64,
            u_q: None,
            t_w: 0.0,
            dt_wall: 1.0,
            u_dt_wall: None,
            h: Some(h_slice[i]),
            u_h: u_slice.map(|u| u[i]),
            dh: None,
            u_dh: None,
            phi: None,
            u_phi: None,
            flags: Vec::new(),
        })
        .collect();
    if let Err(e) = phi_series(&mut records) {
        return fail(e);
    }
    for (i, rec) in records.iter().enumerate() {
        *phi_out.add(i) = rec.phi.unwrap_or(f64::NAN);
        if !u_phi_out.is_null() {
            *u_phi_out.add(i) = rec.u_phi.unwrap_or(f64::NAN);
        }
    }
    IvsKitStatus::Ok
}

/// Physical similarity 100 − |a_n − a_n1|·100/a_n. A zero denominator
/// reports `Degenerate` and writes 0.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ivskit_physical_similarity(
    a_n: f64,
    a_n1: f64,
    out: *mut f64,
) -> IvsKitStatus {
    if out.is_null() {
        set_error("null pointer argument".into());
        return IvsKitStatus::NullArgument;
    }
    let p = physical_similarity(a_n, a_n1);
    *out = p.value;
    if p.zero_denominator {
        set_error("zero vapor-area denominator".into());
        return IvsKitStatus::Degenerate;
    }
    IvsKitStatus::Ok
}

/// Morphological pair score between two image files (lower heat flux
/// first) with default SIFT/matching parameters.
///
/// # Safety
/// Paths must be valid NUL-terminated strings; `score_out` non-null.
#[no_mangle]
pub unsafe extern "C" fn ivskit_pair_score(
    img_a: *const c_char,
    img_b: *const c_char,
    score_out: *mut f64,
) -> IvsKitStatus {
    if img_a.is_null() || img_b.is_null() || score_out.is_null() {
        set_error("null pointer argument".into());
        return IvsKitStatus::NullArgument;
    }
    let (path_a, path_b) = match (path_from(img_a), path_from(img_b)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return IvsKitStatus::Utf8Error,
    };
    let load = |p: &Path| ivskit_core::imgcore::load_gray(p);
    let (a, b) = match (load(&path_a), load(&path_b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    match pair_score(
        &a,
        &b,
        &SiftParams::default(),
        &ivskit_core::matchsim::MatchParams::default(),
    ) {
        Ok(s) => {
            *score_out = s.score;
            IvsKitStatus::Ok
        }
        Err(e) => fail(e),
    }
}

fn path_from(p: *const c_char) -> Result<PathBuf, ()> {
    unsafe {
        CStr::from_ptr(p)
            .to_str()
            .map(PathBuf::from)
            .map_err(|e| set_error(format!("invalid utf-8 in path: {e}")))
    }
}

/// Opaque result of a full IVS run.
pub struct IvsKitReport {
    records: Vec<IvsRecord>,
}

/// Scalar view of one IVS record.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IvsKitIvsRecord {
    pub q_mid: f64,
    pub delta_q: f64,
    pub morph_raw: f64,
    pub morph_norm: f64,
    pub phys: f64,
    pub ivs: f64,
    pub n_trials: usize,
    pub n_flags: usize,
    pub degenerate: bool,
}

/// Runs the IVS pipeline over a manifest file.
///
/// `out_dir` may be NULL (no CSV written) or a directory to receive
/// `ivs.csv`. `seed`/`trials` override the manifest when `use_seed` /
/// `trials > 0`. `jobs = 0` uses all logical cores; the worker count
/// never changes results. Returns NULL on error with `*status` set; a
/// non-NULL report with `*status == Degenerate` means the run finished
/// but carries flagged-degenerate records.
///
/// # Safety
/// `manifest_path` must be a valid NUL-terminated string; `status`
/// non-null; `out_dir` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn ivskit_run_ivs(
    manifest_path: *const c_char,
    out_dir: *const c_char,
    seed: u64,
    use_seed: bool,
    trials: usize,
    jobs: usize,
    status: *mut IvsKitStatus,
) -> *mut IvsKitReport {
    if status.is_null() {
        return std::ptr::null_mut();
    }
    if manifest_path.is_null() {
        set_error("null manifest path".into());
        *status = IvsKitStatus::NullArgument;
        return std::ptr::null_mut();
    }
    let Ok(path) = path_from(manifest_path) else {
        *status = IvsKitStatus::Utf8Error;
        return std::ptr::null_mut();
    };
    let mut manifest: RunManifest = match load_manifest(&path) {
        Ok(m) => m,
        Err(e) => {
            *status = fail(e);
            return std::ptr::null_mut();
        }
    };
    if use_seed {
        manifest.plan.rng_seed = seed;
    }
    if trials > 0 {
        manifest.plan.n_trials = trials;
    }
    let result = ivskit_core::cli::with_pool(jobs, || {
        compute_pair_ivs(
            &manifest.sets,
            &manifest.plan,
            &manifest.sift,
            &manifest.matching,
            &manifest.segment,
        )
    });
    let records = match result {
        Ok(r) => r,
        Err(e) => {
            *status = fail(e);
            return std::ptr::null_mut();
        }
    };
    if !out_dir.is_null() {
        let Ok(dir) = path_from(out_dir) else {
            *status = IvsKitStatus::Utf8Error;
            return std::ptr::null_mut();
        };
        if let Err(e) = std::fs::create_dir_all(&dir) {
            *status = fail(Error::Io {
                path: dir,
                source: e,
            });
            return std::ptr::null_mut();
        }
        if let Err(e) = write_ivs_csv(&records, &dir.join("ivs.csv")) {
            *status = fail(e);
            return std::ptr::null_mut();
        }
    }
    *status = if records.iter().any(IvsRecord::is_degenerate) {
        IvsKitStatus::Degenerate
    } else {
        IvsKitStatus::Ok
    };
    Box::into_raw(Box::new(IvsKitReport { records }))
}

/// Number of records in a report.
///
/// # Safety
/// `report` must be a live handle from [`ivskit_run_ivs`].
#[no_mangle]
pub unsafe extern "C" fn ivskit_report_len(report: *const IvsKitReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).records.len()
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `report` must be a live handle; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn ivskit_report_record(
    report: *const IvsKitReport,
    index: usize,
    out: *mut IvsKitIvsRecord,
) -> IvsKitStatus {
    if report.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return IvsKitStatus::NullArgument;
    }
    let records = &(*report).records;
    let Some(r) = records.get(index) else {
        set_error(format!(
            "record index {index} out of range ({} records)",
            records.len()
        ));
        return IvsKitStatus::InvalidArgument;
    };
    *out = IvsKitIvsRecord {
        q_mid: r.q_mid,
        delta_q: r.delta_q,
        morph_raw: r.morph_raw,
        morph_norm: r.morph_norm,
        phys: r.phys,
        ivs: r.ivs,
        n_trials: r.trial_values.len(),
        n_flags: r.flags.len(),
        degenerate: r.is_degenerate(),
    };
    IvsKitStatus::Ok
}

/// Returns record `index`'s flags joined with ';' (empty string when
/// unflagged), or NULL on error. Free with [`ivskit_string_free`].
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ivskit_report_flags(
    report: *const IvsKitReport,
    index: usize,
) -> *mut c_char {
    if report.is_null() {
        return std::ptr::null_mut();
    }
    let records = &(*report).records;
    let Some(r) = records.get(index) else {
        return std::ptr::null_mut();
    };
    CString::new(r.flags.join(";")).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// Frees a report handle.
///
/// # Safety
/// `report` must come from [`ivskit_run_ivs`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ivskit_report_free(report: *mut IvsKitReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
