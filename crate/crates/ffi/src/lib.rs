//! C ABI over the ROM embedding library. Objects cross the boundary as
//! opaque handles; every fallible call returns a status code and stores a
//! message retrievable with `romembed_last_error`. All functions are
//! panic-safe.
//!
//! Ownership: every `*_new`/`*_build`-style constructor returns a handle
//! the caller must release with the matching `*_free`; strings returned
//! as `char*` are released with `romembed_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use romembed::embed_kn;
use romembed::forward;
use romembed::medium::MediumProfile;
use romembed::passivity;
use romembed::rom::{self, GridWeights, LanczosOptions, TridiagonalROM};
use romembed::spectral::SpectralData;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomembedStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ComputeFailed = 3,
    IndexOutOfRange = 4,
    Panic = 5,
}

/// Opaque truth-medium handle.
pub struct RomembedProfile(MediumProfile);

/// Opaque pole-residue data handle.
pub struct RomembedSpectral(SpectralData);

/// Opaque ROM handle: tridiagonal coefficients plus extracted grid weights.
pub struct RomembedModel {
    rom: TridiagonalROM,
    weights: GridWeights,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard<T>(f: impl FnOnce() -> T, on_panic: T) -> T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(_) => {
            set_error("internal panic");
            on_panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, RomembedStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(RomembedStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        RomembedStatus::InvalidUtf8
    })
}

macro_rules! deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(v) => v,
            None => {
                set_error("null handle");
                return RomembedStatus::NullArgument;
            }
        }
    };
}

macro_rules! out_param {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(v) => v,
            None => {
                set_error("null output pointer");
                return RomembedStatus::NullArgument;
            }
        }
    };
}

/// Message describing the most recent failure on this thread. Borrowed;
/// valid until the next failing call.
#[no_mangle]
pub extern "C" fn romembed_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned by this library.
#[no_mangle]
pub extern "C" fn romembed_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

/// Build a preset truth medium (constant | smooth-bump | smoothed-step |
/// bump-plus-reflector). Returns null on failure.
#[no_mangle]
pub extern "C" fn romembed_profile_preset(name: *const c_char) -> *mut RomembedProfile {
    guard(
        || {
            let name = match unsafe { read_str(name) } {
                Ok(v) => v,
                Err(_) => return ptr::null_mut(),
            };
            match MediumProfile::preset(name) {
                Ok(p) => Box::into_raw(Box::new(RomembedProfile(p))),
                Err(e) => {
                    set_error(&e.to_string());
                    ptr::null_mut()
                }
            }
        },
        ptr::null_mut(),
    )
}

/// Parse a medium from its JSON description. Returns null on failure.
#[no_mangle]
pub extern "C" fn romembed_profile_from_json(json: *const c_char) -> *mut RomembedProfile {
    guard(
        || {
            let text = match unsafe { read_str(json) } {
                Ok(v) => v,
                Err(_) => return ptr::null_mut(),
            };
            match MediumProfile::from_json(text) {
                Ok(p) => Box::into_raw(Box::new(RomembedProfile(p))),
                Err(e) => {
                    set_error(&e.to_string());
                    ptr::null_mut()
                }
            }
        },
        ptr::null_mut(),
    )
}

#[no_mangle]
pub extern "C" fn romembed_profile_free(p: *mut RomembedProfile) {
    if !p.is_null() {
        unsafe { drop(Box::from_raw(p)) };
    }
}

/// Impedance f(s) of the fine-grid forward model.
#[no_mangle]
pub extern "C" fn romembed_impedance(
    profile: *const RomembedProfile,
    n_cells: usize,
    s_re: f64,
    s_im: f64,
    f_re: *mut f64,
    f_im: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let profile = deref!(profile);
            let f_re = out_param!(f_re);
            let f_im = out_param!(f_im);
            let result = forward::discretize(&profile.0, n_cells)
                .and_then(|sys| sys.impedance(Complex64::new(s_re, s_im)));
            match result {
                Ok(f) => {
                    *f_re = f.re;
                    *f_im = f.im;
                    RomembedStatus::Ok
                }
                Err(e) => {
                    set_error(&e.to_string());
                    RomembedStatus::ComputeFailed
                }
            }
        },
        RomembedStatus::Panic,
    )
}

/// Truncated spectral data of a bounded medium. Returns null on failure.
#[no_mangle]
pub extern "C" fn romembed_exact_spectrum(
    profile: *const RomembedProfile,
    n_cells: usize,
    n_pairs: usize,
) -> *mut RomembedSpectral {
    guard(
        || {
            let profile = match unsafe { profile.as_ref() } {
                Some(v) => v,
                None => {
                    set_error("null handle");
                    return ptr::null_mut();
                }
            };
            match forward::exact_spectrum(&profile.0, n_cells, n_pairs) {
                Ok(d) => Box::into_raw(Box::new(RomembedSpectral(d))),
                Err(e) => {
                    set_error(&e.to_string());
                    ptr::null_mut()
                }
            }
        },
        ptr::null_mut(),
    )
}

/// Parse spectral data from `re_lambda,im_lambda,re_y,im_y` CSV text.
#[no_mangle]
pub extern "C" fn romembed_spectral_from_csv(csv: *const c_char) -> *mut RomembedSpectral {
    guard(
        || {
            let text = match unsafe { read_str(csv) } {
                Ok(v) => v,
                Err(_) => return ptr::null_mut(),
            };
            match SpectralData::from_csv(text) {
                Ok(d) => Box::into_raw(Box::new(RomembedSpectral(d))),
                Err(e) => {
                    set_error(&e.to_string());
                    ptr::null_mut()
                }
            }
        },
        ptr::null_mut(),
    )
}

/// Serialize spectral data to CSV; free with `romembed_string_free`.
#[no_mangle]
pub extern "C" fn romembed_spectral_to_csv(data: *const RomembedSpectral) -> *mut c_char {
    guard(
        || {
            let data = match unsafe { data.as_ref() } {
                Some(v) => v,
                None => {
                    set_error("null handle");
                    return ptr::null_mut();
                }
            };
            CString::new(data.0.to_csv())
                .map(CString::into_raw)
                .unwrap_or(ptr::null_mut())
        },
        ptr::null_mut(),
    )
}

/// Number of conjugate pole-residue pairs.
#[no_mangle]
pub extern "C" fn romembed_spectral_n(data: *const RomembedSpectral) -> usize {
    guard(
        || unsafe { data.as_ref() }.map_or(0, |d| d.0.poles.len()),
        0,
    )
}

/// Pole-residue sum at s.
#[no_mangle]
pub extern "C" fn romembed_spectral_eval(
    data: *const RomembedSpectral,
    s_re: f64,
    s_im: f64,
    f_re: *mut f64,
    f_im: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let data = deref!(data);
            let f_re = out_param!(f_re);
            let f_im = out_param!(f_im);
            match rom::eval_pole_residue(&data.0, Complex64::new(s_re, s_im)) {
                Ok(f) => {
                    *f_re = f.re;
                    *f_im = f.im;
                    RomembedStatus::Ok
                }
                Err(e) => {
                    set_error(&e.to_string());
                    RomembedStatus::ComputeFailed
                }
            }
        },
        RomembedStatus::Panic,
    )
}

#[no_mangle]
pub extern "C" fn romembed_spectral_free(data: *mut RomembedSpectral) {
    if !data.is_null() {
        unsafe { drop(Box::from_raw(data)) };
    }
}

/// Lanczos ROM and grid weights from spectral data. Null on breakdown.
#[no_mangle]
pub extern "C" fn romembed_model_build(data: *const RomembedSpectral) -> *mut RomembedModel {
    guard(
        || {
            let data = match unsafe { data.as_ref() } {
                Some(v) => v,
                None => {
                    set_error("null handle");
                    return ptr::null_mut();
                }
            };
            let opts = LanczosOptions::for_depth(data.0.poles.len());
            match rom::build(&data.0, &opts) {
                Ok((rom, weights)) => Box::into_raw(Box::new(RomembedModel { rom, weights })),
                Err(e) => {
                    set_error(&e.to_string());
                    ptr::null_mut()
                }
            }
        },
        ptr::null_mut(),
    )
}

/// Pair count n of the model.
#[no_mangle]
pub extern "C" fn romembed_model_n(model: *const RomembedModel) -> usize {
    guard(
        || unsafe { model.as_ref() }.map_or(0, |m| m.weights.n()),
        0,
    )
}

/// Grid weights of cell j (0-based, j < n).
#[no_mangle]
pub extern "C" fn romembed_model_weights(
    model: *const RomembedModel,
    j: usize,
    gamma_re: *mut f64,
    gamma_im: *mut f64,
    gamma_hat_re: *mut f64,
    gamma_hat_im: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let model = deref!(model);
            let g_re = out_param!(gamma_re);
            let g_im = out_param!(gamma_im);
            let gh_re = out_param!(gamma_hat_re);
            let gh_im = out_param!(gamma_hat_im);
            if j >= model.weights.n() {
                set_error("weight index out of range");
                return RomembedStatus::IndexOutOfRange;
            }
            *g_re = model.weights.gamma[j].re;
            *g_im = model.weights.gamma[j].im;
            *gh_re = model.weights.gamma_hat[j].re;
            *gh_im = model.weights.gamma_hat[j].im;
            RomembedStatus::Ok
        },
        RomembedStatus::Panic,
    )
}

/// Transfer function of the tridiagonal form at s (diagonal included).
#[no_mangle]
pub extern "C" fn romembed_model_eval(
    model: *const RomembedModel,
    s_re: f64,
    s_im: f64,
    f_re: *mut f64,
    f_im: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let model = deref!(model);
            let f_re = out_param!(f_re);
            let f_im = out_param!(f_im);
            match rom::eval_tridiagonal(&model.weights, Some(&model.rom.alpha), Complex64::new(s_re, s_im))
            {
                Ok(f) => {
                    *f_re = f.re;
                    *f_im = f.im;
                    RomembedStatus::Ok
                }
                Err(e) => {
                    set_error(&e.to_string());
                    RomembedStatus::ComputeFailed
                }
            }
        },
        RomembedStatus::Panic,
    )
}

/// Krein node j (0..=n): position and cumulative mass through node j.
#[no_mangle]
pub extern "C" fn romembed_model_krein_node(
    model: *const RomembedModel,
    j: usize,
    x: *mut f64,
    mass: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let model = deref!(model);
            let x = out_param!(x);
            let mass = out_param!(mass);
            let curve = romembed::embed_krein::krein_curve(&model.weights);
            if j >= curve.nodes.len() {
                set_error("node index out of range");
                return RomembedStatus::IndexOutOfRange;
            }
            *x = curve.nodes[j];
            *mass = curve.mass[j.min(curve.mass.len() - 1)];
            RomembedStatus::Ok
        },
        RomembedStatus::Panic,
    )
}

/// Integrated loss pair i (0-based): primary loss at node i, dual loss at
/// the following segment midpoint (real parts).
#[no_mangle]
pub extern "C" fn romembed_model_loss(
    model: *const RomembedModel,
    i: usize,
    r: *mut f64,
    r_hat: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let model = deref!(model);
            let r = out_param!(r);
            let r_hat = out_param!(r_hat);
            let losses = match embed_kn::loss_coefficients(&model.rom, &model.weights) {
                Ok(v) => v,
                Err(e) => {
                    set_error(&e.to_string());
                    return RomembedStatus::ComputeFailed;
                }
            };
            if i >= losses.n() {
                set_error("loss index out of range");
                return RomembedStatus::IndexOutOfRange;
            }
            *r = losses.r[i].re;
            *r_hat = losses.r_hat[i].re;
            RomembedStatus::Ok
        },
        RomembedStatus::Panic,
    )
}

#[no_mangle]
pub extern "C" fn romembed_model_free(model: *mut RomembedModel) {
    if !model.is_null() {
        unsafe { drop(Box::from_raw(model)) };
    }
}

/// Passivity criteria over `count` points on [w_min, w_max] with shift
/// epsilon. Outputs: criterion flags (0/1) and the minimum sampled real
/// part.
#[no_mangle]
pub extern "C" fn romembed_check_passive(
    data: *const RomembedSpectral,
    w_min: f64,
    w_max: f64,
    count: usize,
    epsilon: f64,
    stable_poles: *mut i32,
    conjugate_symmetric: *mut i32,
    min_real_part: *mut f64,
) -> RomembedStatus {
    guard(
        || {
            let data = deref!(data);
            let c1 = out_param!(stable_poles);
            let c2 = out_param!(conjugate_symmetric);
            let c3 = out_param!(min_real_part);
            match passivity::check_passive(&data.0, [w_min, w_max], count, epsilon) {
                Ok(report) => {
                    *c1 = report.criterion1_ok as i32;
                    *c2 = report.criterion2_ok as i32;
                    *c3 = report.criterion3_min;
                    RomembedStatus::Ok
                }
                Err(e) => {
                    set_error(&e.to_string());
                    RomembedStatus::ComputeFailed
                }
            }
        },
        RomembedStatus::Panic,
    )
}
