//! C ABI over `sdi-core`.
//!
//! Every function returns an [`SdiStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`sdi_last_error`]. Datasets are opaque and must be released with
//! [`sdi_dataset_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use sdi_core::bench::{self, NoiseModel};
use sdi_core::em::{self, Backing, ComplexPermittivity, SlabGeometry};
use sdi_core::estimator::{self, FitBounds, SdiDataset, StageDirection, Starts};
use sdi_core::SdiError;

/// Status codes. The non-zero values match the `sdi` exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdiStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    InvalidInput = 2,
    NumericalFailure = 3,
    DegenerateData = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

impl From<&SdiError> for SdiStatus {
    fn from(e: &SdiError) -> Self {
        match e.exit_code() {
            2 => SdiStatus::InvalidInput,
            3 => SdiStatus::NumericalFailure,
            4 => SdiStatus::DegenerateData,
            _ => SdiStatus::Internal,
        }
    }
}

/// Stage motion between successive measurements.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdiDirection {
    Receding = 0,
    Approaching = 1,
}

impl From<SdiDirection> for StageDirection {
    fn from(d: SdiDirection) -> Self {
        match d {
            SdiDirection::Receding => StageDirection::Receding,
            SdiDirection::Approaching => StageDirection::Approaching,
        }
    }
}

/// Opaque calibrated sweep.
pub struct SdiDatasetHandle {
    inner: SdiDataset,
}

/// Output of [`sdi_fit`]. `eps_imag` is the loss part of ε = ε′ − jε″.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdiFitResult {
    pub eps_real: f64,
    pub eps_imag: f64,
    /// Radians, wrapped into [−π, π).
    pub phase_offset: f64,
    pub residual_norm: f64,
    pub iterations: u32,
    /// 1 if the solver met a convergence test, else 0.
    pub converged: i32,
    pub start_index: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), SdiStatus>) -> SdiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SdiStatus::Internal
        }
    }
}

fn fail(e: SdiError) -> SdiStatus {
    let s = SdiStatus::from(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> SdiStatus {
    set_error(format!("{what} is null"));
    SdiStatus::NullPointer
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next `sdi_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sdi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a dataset from `count` samples `re[m] + j·im[m]`.
///
/// # Safety
/// `re` and `im` must point to `count` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_dataset_new(
    re: *const f64,
    im: *const f64,
    count: usize,
    step_m: f64,
    carrier_hz: f64,
    direction: SdiDirection,
    out: *mut *mut SdiDatasetHandle,
) -> SdiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if count > 0 && (re.is_null() || im.is_null()) {
            return Err(null("sample array"));
        }
        let gammas: Vec<Complex64> = if count == 0 {
            Vec::new()
        } else {
            let re = std::slice::from_raw_parts(re, count);
            let im = std::slice::from_raw_parts(im, count);
            re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
        };
        let inner = SdiDataset::new(gammas, step_m, carrier_hz, direction.into()).map_err(fail)?;
        *out = Box::into_raw(Box::new(SdiDatasetHandle { inner }));
        Ok(())
    })
}

/// Noiseless synthetic sweep for material `eps_real − j·eps_imag`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_dataset_synthetic(
    eps_real: f64,
    eps_imag: f64,
    phase_offset: f64,
    count: usize,
    step_m: f64,
    carrier_hz: f64,
    direction: SdiDirection,
    out: *mut *mut SdiDatasetHandle,
) -> SdiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let truth = ComplexPermittivity::new(eps_real, eps_imag).map_err(fail)?;
        let inner = bench::generate_dataset(
            truth,
            phase_offset,
            count,
            step_m,
            carrier_hz,
            direction.into(),
            &NoiseModel::none(),
            0,
        )
        .map_err(fail)?;
        *out = Box::into_raw(Box::new(SdiDatasetHandle { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from `sdi_dataset_new` or `sdi_dataset_synthetic` and not be
/// freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sdi_dataset_free(ds: *mut SdiDatasetHandle) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sdi_dataset_len(ds: *const SdiDatasetHandle) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.step_count())
}

/// Copies sample `m` into `re`, `im`.
///
/// # Safety
/// `ds` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_dataset_get(ds: *const SdiDatasetHandle, m: usize, re: *mut f64, im: *mut f64) -> SdiStatus {
    guard(|| {
        let d = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let g = *d
            .inner
            .gammas()
            .get(m)
            .ok_or_else(|| fail(SdiError::InvalidInput(format!("index {m} out of range"))))?;
        *re = g.re;
        *im = g.im;
        Ok(())
    })
}

/// Fits permittivity and phase offset with the default starts.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_fit(ds: *const SdiDatasetHandle, a_max: f64, b_max: f64, out: *mut SdiFitResult) -> SdiStatus {
    guard(|| {
        let d = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bounds = FitBounds::new(a_max, b_max).map_err(fail)?;
        let fit = estimator::fit_permittivity(&d.inner, &bounds, &Starts::Auto).map_err(fail)?;
        *out = SdiFitResult {
            eps_real: fit.permittivity.real_part(),
            eps_imag: fit.permittivity.imag_part(),
            phase_offset: fit.phase_offset,
            residual_norm: fit.residual_norm,
            iterations: fit.iterations as u32,
            converged: fit.converged as i32,
            start_index: fit.start_index as u32,
        };
        Ok(())
    })
}

/// Model reflection at step `m`: `(1 − √ε)/(1 + √ε)·e^{j(c − c1·m)}`.
///
/// # Safety
/// `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_model_gamma(
    eps_real: f64,
    eps_imag: f64,
    phase_offset: f64,
    m: usize,
    c1: f64,
    re: *mut f64,
    im: *mut f64,
) -> SdiStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        ComplexPermittivity::new(eps_real, eps_imag).map_err(fail)?;
        let g = estimator::model_gamma(eps_real, eps_imag, phase_offset, m, c1);
        *re = g.re;
        *im = g.im;
        Ok(())
    })
}

/// Front-face reflection of a slab with every internal bounce. With
/// `metal_backing` non-zero the backing permittivity is ignored.
///
/// # Safety
/// `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_effective_reflection(
    eps_real: f64,
    eps_imag: f64,
    thickness_m: f64,
    metal_backing: i32,
    backing_real: f64,
    backing_imag: f64,
    frequency_hz: f64,
    re: *mut f64,
    im: *mut f64,
) -> SdiStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let eps = ComplexPermittivity::new(eps_real, eps_imag).map_err(fail)?;
        let backing = if metal_backing != 0 {
            Backing::Metal
        } else {
            Backing::Dielectric(ComplexPermittivity::new(backing_real, backing_imag).map_err(fail)?)
        };
        // the standoff does not enter the face reflection
        let geom = SlabGeometry::new(thickness_m, 1.0, backing).map_err(fail)?;
        if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
            return Err(fail(SdiError::InvalidInput(format!("frequency {frequency_hz} Hz must be positive"))));
        }
        let g = em::effective_reflection(eps, &geom, frequency_hz).map_err(fail)?;
        *re = g.re;
        *im = g.im;
        Ok(())
    })
}

/// `2D²/λ` in meters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdi_fraunhofer_distance(aperture_m: f64, wavelength_m: f64, out: *mut f64) -> SdiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = em::fraunhofer_distance(aperture_m, wavelength_m).map_err(fail)?;
        Ok(())
    })
}
