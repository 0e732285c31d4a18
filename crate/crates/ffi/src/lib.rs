//! C ABI for marker angle inference.
//!
//! Every object crosses the boundary as an opaque handle created by a
//! constructor (`*_load`, `*_default`, `*_from_rgb`) and released by the
//! matching `*_free`. Calls return `ML_OK` (0) or a status code: positive
//! codes mirror `markerlens::Error::code()`, negative codes are boundary
//! failures. `ml_last_error` holds the message of the most recent failure
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use markerlens::raster::{load_image, RgbImage};
use markerlens::regressor::{load_model, predict_angle, RegressionModel};
use markerlens::vision::{run_baseline, PipelineConfig};
use markerlens::Error;

/// Success.
pub const ML_OK: i32 = 0;
/// A required pointer argument was null.
pub const ML_ERR_NULL: i32 = -1;
/// A string argument was not valid UTF-8.
pub const ML_ERR_UTF8: i32 = -2;
/// A panic was caught at the boundary.
pub const ML_ERR_PANIC: i32 = -3;
/// Pixel buffer length does not match width * height * 3.
pub const ML_ERR_BUFFER: i32 = -4;
/// Status code of a failed detection (`error=detection_failed` in the CLI).
pub const ML_ERR_DETECTION_FAILED: i32 = 10;

/// An RGB8 image.
pub struct MlImage(RgbImage);

/// Parameters of the classical pipeline.
pub struct MlConfig(PipelineConfig);

/// A trained regressor (frozen extractor plus head).
pub struct MlModel(RegressionModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let text = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(e: Error) -> i32 {
    set_error(e.to_string());
    e.code()
}

/// Runs `f`, converting panics into `ML_ERR_PANIC`.
fn guard(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("panic inside markerlens");
            ML_ERR_PANIC
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, i32> {
    if path.is_null() {
        set_error("null path");
        return Err(ML_ERR_NULL);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(ML_ERR_UTF8)
        }
    }
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> i32 {
    *out = Box::into_raw(Box::new(value));
    ML_OK
}

macro_rules! require {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null argument");
            return ML_ERR_NULL;
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a PNG, PPM or PGM file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_image_load(path: *const c_char, out: *mut *mut MlImage) -> i32 {
    guard(|| {
        require!(out);
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match load_image(path) {
            Ok(img) => emit(out, MlImage(img)),
            Err(e) => fail(e),
        }
    })
}

/// Copies an interleaved RGB8 buffer of `len` bytes into a new image.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_image_from_rgb(
    width: usize,
    height: usize,
    data: *const u8,
    len: usize,
    out: *mut *mut MlImage,
) -> i32 {
    guard(|| {
        require!(data, out);
        if width.checked_mul(height).and_then(|n| n.checked_mul(3)) != Some(len) {
            set_error(format!("buffer of {len} bytes does not hold {width}x{height} RGB"));
            return ML_ERR_BUFFER;
        }
        let bytes = std::slice::from_raw_parts(data, len).to_vec();
        match RgbImage::from_raw(width, height, bytes) {
            Ok(img) => emit(out, MlImage(img)),
            Err(e) => fail(e),
        }
    })
}

/// Width in pixels, or 0 for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_image_width(img: *const MlImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// Height in pixels, or 0 for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_image_height(img: *const MlImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `img` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_image_free(img: *mut MlImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Default pipeline parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_config_default(out: *mut *mut MlConfig) -> i32 {
    guard(|| {
        require!(out);
        emit(out, MlConfig(PipelineConfig::default()))
    })
}

/// Reads a `key = value` pipeline configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_config_load(path: *const c_char, out: *mut *mut MlConfig) -> i32 {
    guard(|| {
        require!(out);
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match PipelineConfig::load(path) {
            Ok(cfg) => emit(out, MlConfig(cfg)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_config_free(cfg: *mut MlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Loads a model file written by `markerlens train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_load(path: *const c_char, out: *mut *mut MlModel) -> i32 {
    guard(|| {
        require!(out);
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match load_model(&path) {
            Ok(m) => emit(out, MlModel(m)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_model_free(model: *mut MlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classical estimate in degrees. Returns `ML_ERR_DETECTION_FAILED` when
/// no marker is found; `theta_deg` is written only on success.
///
/// # Safety
/// Handles must be live; `theta_deg` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_estimate_baseline(
    img: *const MlImage,
    cfg: *const MlConfig,
    theta_deg: *mut f64,
) -> i32 {
    guard(|| {
        require!(img, cfg, theta_deg);
        match run_baseline(&(*img).0, &(*cfg).0) {
            Ok(est) => {
                *theta_deg = est.theta_deg;
                ML_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Regressor estimate in degrees; always succeeds for live handles. A
/// shared model may be used from several threads at once.
///
/// # Safety
/// Handles must be live; `theta_deg` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_predict_angle(
    model: *const MlModel,
    img: *const MlImage,
    theta_deg: *mut f64,
) -> i32 {
    guard(|| {
        require!(model, img, theta_deg);
        *theta_deg = predict_angle(&(*model).0, &(*img).0).theta_deg;
        ML_OK
    })
}
