//! C ABI over the `cyclia` library.
//!
//! Every function returns a [`CycliaStatus`]. On failure the message is
//! available from [`cyclia_last_error`] on the same thread. Strings returned
//! through out-pointers are owned by the caller and released with
//! [`cyclia_string_free`]; models are released with [`cyclia_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cyclia::focus::{self, FocusError, FreePolicy};
use cyclia::model::{self, ModelError, ModelParams};
use cyclia::oracle::{self, OracleError};
use cyclia::rational::{self, Q};
use cyclia::spectral;

/// Result codes shared with the command-line exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycliaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Region = 3,
    Spectral = 4,
    Numerical = 5,
    Panic = 6,
}

/// Model parameters rounded to binary64.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CycliaParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub eps: f64,
}

/// Opaque model handle.
pub struct CycliaModel {
    params: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CycliaStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CycliaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CycliaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CycliaStatus::Panic
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure(CycliaStatus::Spectral, e.to_string())
    }
}

impl From<FocusError> for Failure {
    fn from(e: FocusError) -> Self {
        let status = match e {
            FocusError::SpectralHypothesisViolated { .. } | FocusError::Model(_) => CycliaStatus::Spectral,
            _ => CycliaStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let status = match e {
            OracleError::Pole { .. } => CycliaStatus::Numerical,
            _ => CycliaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null() -> Failure {
    Failure(CycliaStatus::NullPointer, "null pointer argument".into())
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn opt_rational(p: *const c_char) -> Result<Option<Q>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CycliaStatus::InvalidArgument, "argument is not UTF-8".into()))?;
    rational::parse(s)
        .map(Some)
        .map_err(|e| Failure(CycliaStatus::InvalidArgument, e.to_string()))
}

/// # Safety
/// `p` is a valid NUL-terminated string.
unsafe fn rational_arg(p: *const c_char) -> Result<Q, Failure> {
    opt_rational(p)?.ok_or_else(null)
}

/// # Safety
/// `model` is null or a live handle.
unsafe fn model_ref<'a>(model: *const CycliaModel) -> Result<&'a CycliaModel, Failure> {
    model.as_ref().ok_or_else(null)
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn cyclia_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cyclia_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cyclia_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a model from exact rational strings (`"1/10"`, `"0.065"`).
/// `eps`, `k2` and `k1` may be null, in which case the normalizations
/// derive them. The region is checked before normalization.
///
/// # Safety
/// String arguments are null or valid NUL-terminated strings; `out` is
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cyclia_model_new(
    k3: *const c_char,
    k4: *const c_char,
    k5: *const c_char,
    eps: *const c_char,
    k2: *const c_char,
    k1: *const c_char,
    out: *mut *mut CycliaModel,
) -> CycliaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let (k3, k4, k5) = (rational_arg(k3)?, rational_arg(k4)?, rational_arg(k5)?);
        let region = model::center_region_check(&k3, &k4, &k5);
        if !region.inside {
            let failed: Vec<&str> = region.checks.iter().filter(|c| !c.holds).map(|c| c.label).collect();
            return Err(Failure(
                CycliaStatus::Region,
                format!("region violated: {}", failed.join(", ")),
            ));
        }
        let params = ModelParams::with_overrides(k3, k4, k5, opt_rational(eps)?, opt_rational(k2)?, opt_rational(k1)?)?;
        *out = Box::into_raw(Box::new(CycliaModel { params }));
        Ok(())
    })
}

/// Releases a model.
///
/// # Safety
/// `model` is null or was created by [`cyclia_model_new`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cyclia_model_free(model: *mut CycliaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the parameters rounded to binary64.
///
/// # Safety
/// `model` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cyclia_model_params(model: *const CycliaModel, out: *mut CycliaParams) -> CycliaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(null)?;
        let p = m.params.to_f64();
        *out = CycliaParams {
            k1: p.k1,
            k2: p.k2,
            k3: p.k3,
            k4: p.k4,
            k5: p.k5,
            eps: p.eps,
        };
        Ok(())
    })
}

/// Real part of the complex eigenvalue pair at the equilibrium.
///
/// # Safety
/// `model` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cyclia_model_alpha(model: *const CycliaModel, out: *mut f64) -> CycliaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = spectral::spectrum(&model::shift_to_equilibrium(&m.params)?.jacobian).alpha;
        Ok(())
    })
}

/// Computes `g_1 .. g_n` exactly and writes their binary64 values to
/// `out[0 .. n]`.
///
/// # Safety
/// `model` is a live handle; `out` is valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn cyclia_model_focus_quantities(
    model: *const CycliaModel,
    n: usize,
    out: *mut f64,
) -> CycliaStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null());
        }
        if n == 0 {
            return Err(Failure(CycliaStatus::InvalidArgument, "n must be positive".into()));
        }
        let f = focus::model_focus(&m.params, n, None, &FreePolicy::default())?;
        for (i, g) in f.quantities.g.iter().enumerate() {
            *out.add(i) = rational::to_f64(g);
        }
        Ok(())
    })
}

/// Computes `g_1 .. g_n` and returns them as a JSON array of
/// `{"exact": "n/d", "decimal": x}` objects in `*out`.
///
/// # Safety
/// `model` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cyclia_model_focus_quantities_json(
    model: *const CycliaModel,
    n: usize,
    out: *mut *mut c_char,
) -> CycliaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = ptr::null_mut();
        if n == 0 {
            return Err(Failure(CycliaStatus::InvalidArgument, "n must be positive".into()));
        }
        let f = focus::model_focus(&m.params, n, None, &FreePolicy::default())?;
        let values: Vec<serde_json::Value> = f
            .quantities
            .g
            .iter()
            .map(|g| serde_json::json!({ "exact": rational::to_exact_string(g), "decimal": rational::to_f64(g) }))
            .collect();
        *out = to_c_string(serde_json::Value::Array(values).to_string());
        Ok(())
    })
}

/// Evaluates the closed form of `g_1` at exact rational strings.
///
/// # Safety
/// String arguments are valid NUL-terminated strings; `out` is valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn cyclia_g1_closed_form(
    k3: *const c_char,
    k4: *const c_char,
    k5: *const c_char,
    out: *mut f64,
) -> CycliaStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        let v = oracle::g1_closed_form(&rational_arg(k3)?, &rational_arg(k4)?, &rational_arg(k5)?)?;
        *out = rational::to_f64(&v);
        Ok(())
    })
}
