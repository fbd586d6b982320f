//! C ABI over `spinphase`.
//!
//! Objects are opaque heap handles released with their `_free` function.
//! Every fallible call returns an [`SpStatus`]; on failure the message is
//! kept per thread and read with [`sp_last_error_message`]. Complex arrays
//! are interleaved (re, im) doubles, state amplitudes ordered m = J..−J and
//! coefficients in the packed order j² + j + m.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spinphase::convolution::transform_s;
use spinphase::parity::parity_operator;
use spinphase::phasespace::{evaluate_direct, evaluate_series, to_spherical_coeffs, SphericalFunction};
use spinphase::radon::radon_forward;
use spinphase::spinstates::{random_hs, DensityMatrix, PureState};
use spinphase::tomography::probabilities;
use spinphase::{Error, HalfInteger, RotationAngles};

use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Conditioning = 3,
    Integrity = 4,
    Contract = 5,
    Io = 6,
    Parse = 7,
    /// Output buffer has the wrong length.
    BufferSize = 8,
    Panic = 9,
}

/// Density matrix handle.
pub struct SpDensity(DensityMatrix);

/// Spherical-harmonic expansion handle.
pub struct SpFunction(SphericalFunction);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SpStatus {
    match e {
        Error::Domain { .. } => SpStatus::Domain,
        Error::Conditioning { .. } => SpStatus::Conditioning,
        Error::Integrity { .. } => SpStatus::Integrity,
        Error::Contract { .. } => SpStatus::Contract,
        Error::Io(_) => SpStatus::Io,
        Error::Parse(_) => SpStatus::Parse,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Size { expected: usize, got: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(format!("E:{}:{}: {e}", e.module(), e.code()));
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            SpStatus::NullPointer
        }
        Ok(Err(Failure::Size { expected, got })) => {
            set_error(format!("buffer holds {got} elements, {expected} needed"));
            SpStatus::BufferSize
        }
        Err(_) => {
            set_error("internal panic".into());
            SpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, expected: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null("out"));
    }
    if len != expected {
        return Err(Failure::Size { expected, got: len });
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn point(theta: f64, phi: f64) -> Result<RotationAngles, Failure> {
    Ok(RotationAngles::new(theta, phi)?)
}

/// Density matrix |ψ⟩⟨ψ| from `len` interleaved amplitudes (2·len doubles).
///
/// # Safety
/// `amplitudes` must point to 2·`len` readable doubles and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_density_from_pure(
    twice_j: i32,
    amplitudes: *const f64,
    len: usize,
    out: *mut *mut SpDensity,
) -> SpStatus {
    guard(|| {
        let raw = std::slice::from_raw_parts(deref(amplitudes, "amplitudes")?, 2 * len);
        let amps = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let psi = PureState::new(HalfInteger::spin(twice_j)?, amps)?;
        write_out(out, SpDensity(psi.density()))
    })
}

/// Hilbert-Schmidt random density matrix.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_density_random_hs(twice_j: i32, seed: u64, out: *mut *mut SpDensity) -> SpStatus {
    guard(|| {
        let j = HalfInteger::spin(twice_j)?;
        write_out(out, SpDensity(random_hs(j, seed)))
    })
}

/// # Safety
/// `rho` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_density_free(rho: *mut SpDensity) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// 2J + 1, or 0 for a null handle.
///
/// # Safety
/// `rho` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_density_dim(rho: *const SpDensity) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

/// F_ρ(θ, φ; s) from the parity operator.
///
/// # Safety
/// `rho` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_eval_direct(
    rho: *const SpDensity,
    s: f64,
    theta: f64,
    phi: f64,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let rho = deref(rho, "rho")?;
        let v = evaluate_direct(&rho.0, &point(theta, phi)?, s)?;
        *out_slice(out, 1, 1)?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// Stern-Gerlach probabilities p_m(θ, φ), m = J..−J; `len` must be 2J + 1.
///
/// # Safety
/// `rho` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_probabilities(
    rho: *const SpDensity,
    theta: f64,
    phi: f64,
    out: *mut f64,
    len: usize,
) -> SpStatus {
    guard(|| {
        let rho = deref(rho, "rho")?;
        let p = probabilities(&rho.0, &point(theta, phi)?)?;
        out_slice(out, len, p.len())?.copy_from_slice(&p);
        Ok(())
    })
}

/// Parity diagonal [M_s]_mm, m = J..−J; `len` must be 2J + 1.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_parity_diag(twice_j: i32, s: f64, out: *mut f64, len: usize) -> SpStatus {
    guard(|| {
        let op = parity_operator(HalfInteger::spin(twice_j)?, s)?;
        out_slice(out, len, op.diag().len())?.copy_from_slice(op.diag());
        Ok(())
    })
}

/// Coefficients of F_ρ(·, s).
///
/// # Safety
/// `rho` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_coeffs(rho: *const SpDensity, s: f64, out: *mut *mut SpFunction) -> SpStatus {
    guard(|| {
        let rho = deref(rho, "rho")?;
        write_out(out, SpFunction(to_spherical_coeffs(&rho.0, s)?))
    })
}

/// Number of complex coefficients, (2J + 1)², or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_function_coeff_count(f: *const SpFunction) -> usize {
    f.as_ref().map_or(0, |f| f.0.coeffs().len())
}

/// Copies the coefficients as interleaved doubles; `len` counts doubles.
///
/// # Safety
/// `f` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_function_coeffs(f: *const SpFunction, out: *mut f64, len: usize) -> SpStatus {
    guard(|| {
        let f = deref(f, "f")?;
        let buf = out_slice(out, len, 2 * f.0.coeffs().len())?;
        for (dst, c) in buf.chunks_exact_mut(2).zip(f.0.coeffs()) {
            dst[0] = c.re;
            dst[1] = c.im;
        }
        Ok(())
    })
}

/// Series value Σ c_jm Y_jm(θ, φ).
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_function_eval(f: *const SpFunction, theta: f64, phi: f64, out: *mut f64) -> SpStatus {
    guard(|| {
        let f = deref(f, "f")?;
        let v = evaluate_series(&f.0, &point(theta, phi)?)?;
        *out_slice(out, 1, 1)?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// Convolution with the spin-up kernel of parameter `s_prime`; the result
/// has parameter s + s' − 1.
///
/// # Safety
/// `f` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_function_transform_s(
    f: *const SpFunction,
    s_prime: f64,
    out: *mut *mut SpFunction,
) -> SpStatus {
    guard(|| {
        let f = deref(f, "f")?;
        write_out(out, SpFunction(transform_s(&f.0, s_prime)?))
    })
}

/// Great-circle (Funk) transform.
///
/// # Safety
/// `f` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_function_radon(f: *const SpFunction, out: *mut *mut SpFunction) -> SpStatus {
    guard(|| {
        let f = deref(f, "f")?;
        write_out(out, SpFunction(radon_forward(&f.0)))
    })
}

/// # Safety
/// `f` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_function_free(f: *mut SpFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to fit. Returns the full length in bytes without the NUL, so
/// a call with `len` = 0 sizes the buffer.
///
/// # Safety
/// `buf` must hold `len` bytes, or be null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn sp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}
