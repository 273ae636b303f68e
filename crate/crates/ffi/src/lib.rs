//! C ABI over `cubex`.
//!
//! Every entry point returns a [`CubexStatus`]; on failure the message is
//! kept per thread and can be fetched with [`cubex_last_error`]. Results are
//! written through out-pointers, which are left untouched on failure. Panics
//! never cross the boundary; they surface as `CUBEX_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cubex::arcs::{classify, Alpha, ArcKind};
use cubex::complete_sums::{gauss_quad, hua_sum, kappa, paired_sum_w, KappaSpec};
use cubex::config::{Command, ExperimentConfig};
use cubex::major::{MajorContext, WeightSpec};
use cubex::numeric::SumValue;
use cubex::{experiments, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotCoprime = 3,
    MinorArc = 4,
    Config = 5,
    Internal = 6,
}

/// A complex sum with its term count and accumulated rounding budget.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CubexSum {
    pub re: f64,
    pub im: f64,
    pub terms: u64,
    pub err_budget: f64,
}

/// The frequency `num/den + offset`. With `den == 0` only `offset` is used
/// (a plain double); otherwise the rational part is kept exact.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CubexAlpha {
    pub num: i64,
    pub den: u64,
    pub offset: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubexArcKind {
    MajorM = 0,
    MajorN = 1,
    Minor = 2,
}

/// `a`, `q`, `beta` are meaningful only when `has_approximant` is nonzero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubexArcLabel {
    pub kind: CubexArcKind,
    pub has_approximant: i32,
    pub a: i64,
    pub q: u64,
    pub beta: f64,
    pub upsilon: f64,
    pub xi: f64,
    pub boundary_ambiguous: i32,
}

/// Opaque: precomputed state for `F_w` and its major-arc approximation at
/// one `(P, w)`.
pub struct CubexMajor {
    ctx: MajorContext,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CubexStatus {
    match e {
        Error::NotCoprime { .. } => CubexStatus::NotCoprime,
        Error::MinorArc { .. } => CubexStatus::MinorArc,
        Error::Config(_) => CubexStatus::Config,
        _ => CubexStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic for `cubex_last_error`.
fn guard(f: impl FnOnce() -> Result<(), (CubexStatus, String)>) -> CubexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CubexStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            CubexStatus::Internal
        }
    }
}

fn lib<T>(r: cubex::Result<T>) -> Result<T, (CubexStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CubexStatus, String) {
    (CubexStatus::NullPointer, format!("`{what}` is null"))
}

fn weight_of(w: u64) -> WeightSpec {
    if w == 0 {
        WeightSpec::Primorial
    } else {
        WeightSpec::Fixed(w)
    }
}

fn alpha_of(a: CubexAlpha) -> Result<Alpha, (CubexStatus, String)> {
    if !a.offset.is_finite() {
        return Err((CubexStatus::InvalidArgument, "alpha offset must be finite".into()));
    }
    Ok(if a.den == 0 {
        Alpha::Float(a.offset)
    } else if a.offset == 0.0 {
        Alpha::Rational { num: a.num, den: a.den }
    } else {
        Alpha::Offset { a: a.num, q: a.den, beta: a.offset }
    })
}

fn sum_of(v: SumValue) -> CubexSum {
    CubexSum {
        re: v.value.re,
        im: v.value.im,
        terms: v.terms,
        err_budget: v.err_budget,
    }
}

unsafe fn write<T>(out: *mut T, v: T) {
    // SAFETY: callers check `out` for null; validity is the C caller's contract
    unsafe { out.write(v) }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cubex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message
/// length excluding the NUL. Returns 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cubex_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` has room for `len >= n + 1` bytes
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Quadratic Gauss sum `S(q, a1, a2)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_gauss_quad(q: u64, a1: i64, a2: i64, out: *mut CubexSum) -> CubexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = lib(gauss_quad(q, a1, a2))?;
        unsafe { write(out, sum_of(v)) };
        Ok(())
    })
}

/// Complete cubic sum `U(q, a, b)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_hua_sum(q: u64, a: i64, b: i64, out: *mut CubexSum) -> CubexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = lib(hua_sum(q, a, b))?;
        unsafe { write(out, sum_of(v)) };
        Ok(())
    })
}

/// Paired restricted sum `W(r, b)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_paired_sum_w(r: u64, b: i64, out: *mut CubexSum) -> CubexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = lib(paired_sum_w(r, b))?;
        unsafe { write(out, sum_of(v)) };
        Ok(())
    })
}

/// `kappa_w(q)` for squarefree `w >= 1`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_kappa(q: u64, w: u64, out: *mut f64) -> CubexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lib(KappaSpec::concrete(w))?;
        let v = lib(kappa(q, &spec))?;
        unsafe { write(out, v) };
        Ok(())
    })
}

/// Classifies `alpha` at size `p`; `w == 0` selects the primorial weight.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_classify(alpha: CubexAlpha, p: f64, w: u64, out: *mut CubexArcLabel) -> CubexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lib(weight_of(w).kappa_spec(p))?;
        let l = lib(classify(&alpha_of(alpha)?, p, &spec))?;
        let (has, a, q, beta) = match l.approximant {
            Some(ap) => (1, ap.a, ap.q, ap.beta),
            None => (0, 0, 0, 0.0),
        };
        let label = CubexArcLabel {
            kind: match l.kind {
                ArcKind::MajorM => CubexArcKind::MajorM,
                ArcKind::MajorN => CubexArcKind::MajorN,
                ArcKind::Minor => CubexArcKind::Minor,
            },
            has_approximant: has,
            a,
            q,
            beta,
            upsilon: l.upsilon,
            xi: l.xi,
            boundary_ambiguous: l.boundary_ambiguous as i32,
        };
        unsafe { write(out, label) };
        Ok(())
    })
}

/// Builds a handle for size `p`; `w == 0` selects the primorial weight.
/// Release it with [`cubex_major_free`].
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_major_new(p: f64, w: u64, out: *mut *mut CubexMajor) -> CubexStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ctx = lib(MajorContext::new(p, weight_of(w)))?;
        unsafe { write(out, Box::into_raw(Box::new(CubexMajor { ctx }))) };
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`cubex_major_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cubex_major_free(h: *mut CubexMajor) {
    if !h.is_null() {
        // SAFETY: `h` came from `Box::into_raw` and is freed once
        drop(unsafe { Box::from_raw(h) });
    }
}

/// `F_w(alpha)` evaluated directly.
///
/// # Safety
/// `h` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_major_f(h: *const CubexMajor, alpha: CubexAlpha, out: *mut CubexSum) -> CubexStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle
        let h = unsafe { h.as_ref() }.ok_or_else(|| null("h"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = h.ctx.f_true(&alpha_of(alpha)?);
        unsafe { write(out, sum_of(v)) };
        Ok(())
    })
}

/// The major-arc approximation `S(a/q, w) K(beta)`; fails with
/// `CUBEX_STATUS_MINOR_ARC` off the major arcs.
///
/// # Safety
/// `h` must be a live handle; `out_re`, `out_im` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cubex_major_singular_term(
    h: *const CubexMajor,
    alpha: CubexAlpha,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CubexStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(|| null("h"))?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("out_re/out_im"));
        }
        let z = lib(h.ctx.singular_term(&alpha_of(alpha)?))?;
        unsafe {
            write(out_re, z.re);
            write(out_im, z.im);
        }
        Ok(())
    })
}

/// Runs an experiment command with a flat `key = value` configuration and
/// returns its JSON report in `*out_json` (free with [`cubex_string_free`]).
/// `*out_passed` (if non-null) is set to 1 when every check passed.
///
/// # Safety
/// `command` and `config` must be NUL-terminated strings (`config` may be
/// null); `out_json` must be valid for writes; `out_passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn cubex_run(
    command: *const c_char,
    config: *const c_char,
    out_json: *mut *mut c_char,
    out_passed: *mut i32,
) -> CubexStatus {
    guard(|| {
        if command.is_null() {
            return Err(null("command"));
        }
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let utf8 = |p: *const c_char| {
            // SAFETY: non-null, NUL-terminated per the contract
            unsafe { CStr::from_ptr(p) }
                .to_str()
                .map_err(|_| (CubexStatus::InvalidArgument, "string is not UTF-8".to_string()))
        };
        let cmd: Command = lib(utf8(command)?.parse())?;
        let kv = if config.is_null() { Vec::new() } else { lib(ExperimentConfig::parse_file(utf8(config)?))? };
        let cfg = lib(ExperimentConfig::resolve(cmd, kv.iter().map(|(k, v)| (k.as_str(), v.as_str()))))?;
        let report = lib(experiments::run(&cfg))?;
        let json = CString::new(report.to_json()).map_err(|e| (CubexStatus::Internal, e.to_string()))?;
        unsafe {
            write(out_json, json.into_raw());
            if !out_passed.is_null() {
                write(out_passed, report.passed() as i32);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cubex_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw`
        drop(unsafe { CString::from_raw(s) });
    }
}
