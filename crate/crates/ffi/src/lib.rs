//! C interface to `vsc_lab`.
//!
//! Objects are opaque heap handles released with their `*_free` function. Every fallible call
//! returns a [`VscStatus`]; on failure the message is kept per thread and can be read with
//! [`vsc_last_error_message`]. Complex arrays are interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vsc_lab::experiment::ball_phantom;
use vsc_lab::forward::{data_distance, ForwardOperator, ScatterData, SolverConfig};
use vsc_lab::regularization::{alpha_rule, psi_eval, PsiFunction};
use vsc_lab::spectral::{load_field, project_to_d, save_field, sobolev_norm, ContrastField, Lattice};
use vsc_lab::{Complex64, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VscStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    NotAdmissible = 3,
    NoConvergence = 4,
    Numerical = 5,
    Io = 6,
    Format = 7,
    NullPointer = 8,
    Panic = 9,
}

/// Contrast on a Fourier lattice.
pub struct VscField(ContrastField);

/// Near-field or far-field forward map.
pub struct VscOperator(ForwardOperator);

/// Data matrix (rows: sources or incident directions).
pub struct VscData(ScatterData);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VscStatus {
    match e {
        Error::InvalidArgument(_) | Error::CriticalExponent => VscStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => VscStatus::DimensionMismatch,
        Error::NotAdmissible(_) => VscStatus::NotAdmissible,
        Error::NoConvergence { .. } => VscStatus::NoConvergence,
        Error::Numerical(_) | Error::LineSearch(_) | Error::EmptyActiveSet => VscStatus::Numerical,
        Error::Io(_) => VscStatus::Io,
        Error::Format(_) | Error::Json(_) => VscStatus::Format,
    }
}

/// Runs `f`, converting errors and panics into a status plus the thread-local message.
fn guard(f: impl FnOnce() -> Result<(), (VscStatus, String)>) -> VscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            VscStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            VscStatus::Panic
        }
    }
}

fn lib<T>(r: vsc_lab::Result<T>) -> Result<T, (VscStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (VscStatus, String) {
    (VscStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (VscStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (VscStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<String, (VscStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (VscStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn vsc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn vsc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Zero contrast on the minimal grid of degree `max_degree`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_zeros(max_degree: usize, out: *mut *mut VscField) -> VscStatus {
    guard(|| {
        let lat = lib(Lattice::minimal(max_degree))?;
        put(out, VscField(ContrastField::zeros(lat)))
    })
}

/// Smoothed ball phantom (contrast 0.4, edge between 0.3 pi and 0.8 pi).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_ball_phantom(max_degree: usize, out: *mut *mut VscField) -> VscStatus {
    guard(|| {
        let lat = lib(Lattice::minimal(max_degree))?;
        put(out, VscField(lib(ball_phantom(lat))?))
    })
}

/// Field from `2 (2N+1)^3` interleaved coefficients in lexicographic order of `g`.
///
/// # Safety
/// `coeffs` must point to `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_from_coeffs(
    max_degree: usize,
    grid_size: usize,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut VscField,
) -> VscStatus {
    guard(|| {
        if coeffs.is_null() {
            return Err(null("coeffs"));
        }
        let lat = lib(Lattice::new(max_degree, grid_size))?;
        if len != 2 * lat.n_modes() {
            return Err((VscStatus::DimensionMismatch, format!("expected {} doubles, got {len}", 2 * lat.n_modes())));
        }
        let raw = std::slice::from_raw_parts(coeffs, len);
        let c = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        put(out, VscField(lib(ContrastField::from_coeffs(lat, c))?))
    })
}

/// Number of lattice modes `(2N+1)^3`; 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_n_modes(field: *const VscField) -> usize {
    field.as_ref().map_or(0, |f| f.0.lattice().n_modes())
}

/// Copies the interleaved coefficients into `buf` (`len` must equal `2 n_modes`).
///
/// # Safety
/// `field` must be live and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_coeffs(field: *const VscField, buf: *mut f64, len: usize) -> VscStatus {
    guard(|| {
        let f = get(field, "field")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let c = f.0.coeffs();
        if len != 2 * c.len() {
            return Err((VscStatus::DimensionMismatch, format!("expected {} doubles, got {len}", 2 * c.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (o, v) in out.chunks_exact_mut(2).zip(c) {
            o[0] = v.re;
            o[1] = v.im;
        }
        Ok(())
    })
}

/// Whether the field lies in the admissible set (1) or not (0); -1 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_is_admissible(field: *const VscField) -> i32 {
    match field.as_ref() {
        Some(f) => i32::from(f.0.flags().in_d && f.0.flags().supported_in_ball),
        None => -1,
    }
}

/// Projection onto the admissible set.
///
/// # Safety
/// `field` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_project(field: *const VscField, out: *mut *mut VscField) -> VscStatus {
    guard(|| {
        let f = get(field, "field")?;
        put(out, VscField(project_to_d(&f.0)))
    })
}

/// Truncated `H^m` norm.
///
/// # Safety
/// `field` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_sobolev_norm(field: *const VscField, m: f64, out: *mut f64) -> VscStatus {
    guard(|| {
        let f = get(field, "field")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = sobolev_norm(&f.0, m);
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_load(path: *const c_char, out: *mut *mut VscField) -> VscStatus {
    guard(|| {
        let p = path_arg(path)?;
        put(out, VscField(lib(load_field(p))?))
    })
}

/// # Safety
/// `field` must be live and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_save(field: *const VscField, path: *const c_char) -> VscStatus {
    guard(|| {
        let f = get(field, "field")?;
        let p = path_arg(path)?;
        lib(save_field(&f.0, p))
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vsc_field_free(field: *mut VscField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

fn solver(grid_size: usize) -> SolverConfig {
    SolverConfig::default().with_grid(grid_size)
}

/// Near-field map: sources and receivers on the sphere of radius `radius`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_operator_near(
    kappa: f64,
    radius: f64,
    n_points: usize,
    grid_size: usize,
    out: *mut *mut VscOperator,
) -> VscStatus {
    guard(|| put(out, VscOperator(lib(ForwardOperator::near(kappa, radius, n_points, &solver(grid_size)))?)))
}

/// Far-field map with `n_dirs` incident and observation directions.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_operator_far(
    kappa: f64,
    n_dirs: usize,
    grid_size: usize,
    out: *mut *mut VscOperator,
) -> VscStatus {
    guard(|| put(out, VscOperator(lib(ForwardOperator::far(kappa, n_dirs, &solver(grid_size)))?)))
}

/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vsc_operator_free(op: *mut VscOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Data `F(f)`.
///
/// # Safety
/// `op` and `field` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_operator_evaluate(
    op: *const VscOperator,
    field: *const VscField,
    out: *mut *mut VscData,
) -> VscStatus {
    guard(|| {
        let o = get(op, "operator")?;
        let f = get(field, "field")?;
        put(out, VscData(lib(o.0.evaluate(&f.0))?))
    })
}

/// # Safety
/// `data` must be live and `rows`, `cols` valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_data_shape(data: *const VscData, rows: *mut usize, cols: *mut usize) -> VscStatus {
    guard(|| {
        let d = get(data, "data")?;
        if rows.is_null() || cols.is_null() {
            return Err(null("output pointer"));
        }
        *rows = d.0.rows();
        *cols = d.0.cols();
        Ok(())
    })
}

/// Copies the row-major interleaved values into `buf` (`len` must equal `2 rows cols`).
///
/// # Safety
/// `data` must be live and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vsc_data_values(data: *const VscData, buf: *mut f64, len: usize) -> VscStatus {
    guard(|| {
        let d = get(data, "data")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let v = &d.0.values;
        if len != 2 * v.len() {
            return Err((VscStatus::DimensionMismatch, format!("expected {} doubles, got {len}", 2 * v.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (o, z) in out.chunks_exact_mut(2).zip(v) {
            o[0] = z.re;
            o[1] = z.im;
        }
        Ok(())
    })
}

/// Weighted `L^2` distance of two data sets on the same point sets.
///
/// # Safety
/// `a`, `b` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_data_distance(a: *const VscData, b: *const VscData, out: *mut f64) -> VscStatus {
    guard(|| {
        let (a, b) = (get(a, "data")?, get(b, "data")?);
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = lib(data_distance(&a.0, &b.0))?;
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vsc_data_free(data: *mut VscData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// `a (ln(3 + 1/t))^(-2 mu)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_psi(a: f64, mu: f64, t: f64, out: *mut f64) -> VscStatus {
    guard(|| {
        let psi = lib(PsiFunction::near(a, mu))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = psi_eval(&psi, t);
        Ok(())
    })
}

/// Regularization parameter `alpha = 1 / (2 psi'(4 delta^2))`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vsc_alpha_rule(a: f64, mu: f64, delta: f64, out: *mut f64) -> VscStatus {
    guard(|| {
        let psi = lib(PsiFunction::near(a, mu))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = lib(alpha_rule(&psi, delta))?;
        Ok(())
    })
}
