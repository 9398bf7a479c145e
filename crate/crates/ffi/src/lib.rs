//! C ABI over `crowd_cluster`.
//!
//! Every fallible function returns a [`CcStatus`]. On failure the message is
//! kept per thread and can be fetched with [`cc_last_error_message`]. Handles
//! are opaque and must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crowd_cluster::harness::{csv_string, run_experiment, summarize_groups, ExperimentConfig};
use crowd_cluster::oracle::{OracleSession, OracleSpec};
use crowd_cluster::synth::example2_pmfs;
use crowd_cluster::{gen_instance, gen_sideinfo, Error, Instance, SideInfoMatrix, SizeProfile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Oracle = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcProfile {
    Balanced = 0,
    /// `param` is the largest/smallest size ratio.
    Skewed = 1,
    /// `param` is the exponent.
    Powerlaw = 2,
}

/// Hidden ground-truth partition.
pub struct CcInstance(Instance);

/// Similarity matrix `W`.
pub struct CcSideInfo(SideInfoMatrix);

/// Oracle session with its query ledger.
pub struct CcSession(OracleSession);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CcStatus {
    match e {
        Error::Config(_) | Error::Json(_) => CcStatus::InvalidConfig,
        Error::Io(_) | Error::Format(_) => CcStatus::Io,
        Error::SelfQuery(_)
        | Error::VertexOutOfRange { .. }
        | Error::BatchExceedsCap { .. }
        | Error::NoRoundCap
        | Error::WrongOracleMode(_) => CcStatus::Oracle,
        _ => CcStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CcStatus, String)>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CcStatus, String) {
    (CcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (CcStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (CcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, (CcStatus, String)> {
    CString::new(s).map(CString::into_raw).map_err(|_| (CcStatus::InvalidArgument, "output contains a nul byte".into()))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Draws a planted partition.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn cc_instance_generate(
    n: usize,
    k: usize,
    profile: CcProfile,
    param: f64,
    seed: u64,
    out: *mut *mut CcInstance,
) -> CcStatus {
    guard(|| {
        let profile = match profile {
            CcProfile::Balanced => SizeProfile::Balanced,
            CcProfile::Skewed => SizeProfile::Skewed { ratio: param },
            CcProfile::Powerlaw => SizeProfile::Powerlaw { alpha: param },
        };
        let inst = gen_instance(n, k, profile, seed).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CcInstance(inst))))
    })
}

/// # Safety
/// `inst` must be null or a live handle from [`cc_instance_generate`].
#[no_mangle]
pub unsafe extern "C" fn cc_instance_free(inst: *mut CcInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_instance_n(inst: *const CcInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n)
}

/// Number of clusters, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_instance_k(inst: *const CcInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.k)
}

/// Copies the `n` cluster labels into `labels`.
///
/// # Safety
/// `inst` must be a live handle and `labels` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cc_instance_labels(inst: *const CcInstance, labels: *mut usize, len: usize) -> CcStatus {
    guard(|| {
        let inst = as_ref(inst, "instance")?;
        if labels.is_null() {
            return Err(null("labels"));
        }
        if len < inst.0.n {
            return Err((
                CcStatus::InvalidArgument,
                format!("buffer of {len} holds fewer than n = {} labels", inst.0.n),
            ));
        }
        ptr::copy_nonoverlapping(inst.0.labels.as_ptr(), labels, inst.0.n);
        Ok(())
    })
}

/// Draws `W` for `inst` from the quantized perturbed-uniform pair `(eps, grid)`.
///
/// # Safety
/// `inst` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn cc_sideinfo_example2(
    inst: *const CcInstance,
    eps: f64,
    grid: usize,
    seed: u64,
    out: *mut *mut CcSideInfo,
) -> CcStatus {
    guard(|| {
        let inst = as_ref(inst, "instance")?;
        let (fp, fm) = example2_pmfs(eps, grid).map_err(lib_err)?;
        let w = gen_sideinfo(&inst.0, &fp, &fm, seed).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CcSideInfo(w))))
    })
}

/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_sideinfo_free(w: *mut CcSideInfo) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Reads `w(u, v)` for `u ≠ v`.
///
/// # Safety
/// `w` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cc_sideinfo_value(w: *const CcSideInfo, u: usize, v: usize, out: *mut f64) -> CcStatus {
    guard(|| {
        let w = as_ref(w, "side info")?;
        let n = w.0.n();
        if u == v || u >= n || v >= n {
            return Err((CcStatus::InvalidArgument, format!("pair ({u}, {v}) invalid for n = {n}")));
        }
        write_out(out, w.0.value(u, v))
    })
}

/// Opens an oracle over `inst`; `p = 0` gives a perfect oracle, otherwise
/// answers are flipped with probability `p`.
///
/// # Safety
/// `inst` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn cc_session_new(
    inst: *const CcInstance,
    p: f64,
    seed: u64,
    out: *mut *mut CcSession,
) -> CcStatus {
    guard(|| {
        let inst = as_ref(inst, "instance")?;
        let spec = if p == 0.0 { OracleSpec::perfect(seed) } else { OracleSpec::faulty(p, seed).map_err(lib_err)? };
        let session = OracleSession::new(spec, &inst.0).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CcSession(session))))
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_session_free(s: *mut CcSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Asks whether `u` and `v` share a cluster.
///
/// # Safety
/// `s` must be a live handle and `same` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cc_session_query(s: *mut CcSession, u: usize, v: usize, same: *mut bool) -> CcStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("session"))?;
        let answer = s.0.query(u, v).map_err(lib_err)?;
        write_out(same, answer.is_same())
    })
}

/// Distinct pairs asked so far, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_session_query_count(s: *const CcSession) -> usize {
    s.as_ref().map_or(0, |s| s.0.query_count())
}

/// Runs a JSON experiment config and returns the report CSV in `csv_out`.
/// Free the result with [`cc_string_free`].
///
/// # Safety
/// `config_json` must be a nul-terminated string and `csv_out` valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn cc_run_experiment(config_json: *const c_char, csv_out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(read_str(config_json, "config")?).map_err(lib_err)?;
        let reports = run_experiment(&cfg).map_err(lib_err)?;
        write_out(csv_out, to_c_string(csv_string(&reports))?)
    })
}

/// Like [`cc_run_experiment`] but returns per-configuration summaries as JSON.
///
/// # Safety
/// Same as [`cc_run_experiment`].
#[no_mangle]
pub unsafe extern "C" fn cc_summarize_experiment(config_json: *const c_char, json_out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(read_str(config_json, "config")?).map_err(lib_err)?;
        let reports = run_experiment(&cfg).map_err(lib_err)?;
        let groups = summarize_groups(&reports).map_err(lib_err)?;
        let text = serde_json::to_string(&groups).map_err(|e| lib_err(e.into()))?;
        write_out(json_out, to_c_string(text)?)
    })
}
