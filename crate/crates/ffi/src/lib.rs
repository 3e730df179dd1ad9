//! C ABI for betalab.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a
//! [`BetalabStatus`], and the message of the last failure on the calling
//! thread is available from [`betalab_last_error`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use betalab::diagnostics::wasserstein1;
use betalab::equilibrium::{EquilibriumMeasure, SolveOptions};
use betalab::potential::Potential;
use betalab::sampler::{sample, tridiagonal_sample, GibbsModel, SampleOptions};
use betalab::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetalabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// A polynomial potential.
pub struct BetalabPotential(Potential);

/// A solved equilibrium measure.
pub struct BetalabEquilibrium(EquilibriumMeasure);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl ToString) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string().into_bytes());
}

fn status_of(e: &Error) -> BetalabStatus {
    match betalab::cli::exit_code(e) {
        3 => BetalabStatus::NumericFailure,
        _ => BetalabStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), BetalabStatus>) -> BetalabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BetalabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BetalabStatus::Panic
        }
    }
}

fn check<T>(r: betalab::Result<T>) -> Result<T, BetalabStatus> {
    r.map_err(|e| {
        set_error(&e);
        status_of(&e)
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, BetalabStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument");
        BetalabStatus::NullPointer
    })
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], BetalabStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null pointer argument");
        return Err(BetalabStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), BetalabStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(BetalabStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

unsafe fn write_all(out: *mut f64, len: usize, values: &[f64]) -> Result<(), BetalabStatus> {
    if len < values.len() {
        set_error(format!("output buffer holds {len} values, need {}", values.len()));
        return Err(BetalabStatus::BufferTooSmall);
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        set_error("null output pointer");
        return Err(BetalabStatus::NullPointer);
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Copies the last error message on this thread, NUL-terminated and
/// truncated to `len` bytes, and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn betalab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn betalab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Potential with ascending coefficients `coefficients[0..len]`. When
/// `auto_offset` is nonzero the offset is chosen so that `min V > 1`.
///
/// # Safety
/// `coefficients` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_potential_new(
    coefficients: *const f64,
    len: usize,
    offset: f64,
    auto_offset: i32,
    out: *mut *mut BetalabPotential,
) -> BetalabStatus {
    guard(|| {
        let c = slice(coefficients, len)?.to_vec();
        let p = if auto_offset != 0 {
            check(Potential::with_auto_offset(c, "ffi"))?
        } else {
            check(Potential::new(c, offset, "ffi"))?
        };
        write(out, Box::into_raw(Box::new(BetalabPotential(p))))
    })
}

/// # Safety
/// `p` must be null or a handle from [`betalab_potential_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn betalab_potential_free(p: *mut BetalabPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_potential_eval(p: *const BetalabPotential, x: f64, out: *mut f64) -> BetalabStatus {
    guard(|| write(out, deref(p)?.0.eval(x)))
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_solve(
    p: *const BetalabPotential,
    out: *mut *mut BetalabEquilibrium,
) -> BetalabStatus {
    guard(|| {
        let eqm = check(EquilibriumMeasure::solve(&deref(p)?.0, &SolveOptions::default()))?;
        write(out, Box::into_raw(Box::new(BetalabEquilibrium(eqm))))
    })
}

/// # Safety
/// `e` must be null or a handle from [`betalab_equilibrium_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_free(e: *mut BetalabEquilibrium) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of cuts `q`.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_cut_count(e: *const BetalabEquilibrium, out: *mut usize) -> BetalabStatus {
    guard(|| write(out, deref(e)?.0.q()))
}

/// Writes `A_1, B_1, …, A_q, B_q` into `out[0..2q]`.
///
/// # Safety
/// `e` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_edges(
    e: *const BetalabEquilibrium,
    out: *mut f64,
    len: usize,
) -> BetalabStatus {
    guard(|| {
        let flat: Vec<f64> = deref(e)?.0.edges().iter().flat_map(|&(a, b)| [a, b]).collect();
        write_all(out, len, &flat)
    })
}

/// Writes `R_1, …, R_q` into `out[0..q]`.
///
/// # Safety
/// `e` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_filling_fractions(
    e: *const BetalabEquilibrium,
    out: *mut f64,
    len: usize,
) -> BetalabStatus {
    guard(|| write_all(out, len, deref(e)?.0.filling_fractions()))
}

/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_density(e: *const BetalabEquilibrium, x: f64, out: *mut f64) -> BetalabStatus {
    guard(|| write(out, deref(e)?.0.density(x)))
}

/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_cdf(e: *const BetalabEquilibrium, x: f64, out: *mut f64) -> BetalabStatus {
    guard(|| write(out, deref(e)?.0.cdf(x)))
}

/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_quantile(e: *const BetalabEquilibrium, p: f64, out: *mut f64) -> BetalabStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&p) {
            set_error(format!("probability {p} outside [0, 1]"));
            return Err(BetalabStatus::InvalidArgument);
        }
        write(out, deref(e)?.0.quantile(p))
    })
}

/// Stieltjes transform `m(re + i·im)`.
///
/// # Safety
/// `e` must be a live handle; `out_re` and `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_equilibrium_stieltjes(
    e: *const BetalabEquilibrium,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> BetalabStatus {
    guard(|| {
        let m = check(deref(e)?.0.stieltjes(Complex64::new(re, im)))?;
        write(out_re, m.re)?;
        write(out_im, m.im)
    })
}

/// `W₁` between the empirical measure of `config[0..n]` and the equilibrium measure.
///
/// # Safety
/// `e` must be a live handle, `config` must hold `n` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn betalab_wasserstein1(
    e: *const BetalabEquilibrium,
    config: *const f64,
    n: usize,
    out: *mut f64,
) -> BetalabStatus {
    guard(|| {
        let eqm = &deref(e)?.0;
        let c = slice(config, n)?;
        if c.is_empty() {
            set_error("empty configuration");
            return Err(BetalabStatus::InvalidArgument);
        }
        write(out, wasserstein1(c, eqm))
    })
}

/// One exact draw for `V = x²/2`, sorted, into `out[0..n]`.
///
/// # Safety
/// `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn betalab_tridiagonal_sample(beta: f64, n: usize, seed: u64, out: *mut f64) -> BetalabStatus {
    guard(|| {
        let s = check(tridiagonal_sample(beta, n, seed))?;
        write_all(out, n, &s)
    })
}

/// Metropolis samples of the full-line model: `samples` sorted
/// configurations of length `n`, row by row, into `out[0..samples·n]`.
///
/// # Safety
/// `p` must be a live handle and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn betalab_mcmc_sample(
    p: *const BetalabPotential,
    beta: f64,
    n: usize,
    samples: usize,
    burn_in: usize,
    thinning: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> BetalabStatus {
    guard(|| {
        if out_len < samples.saturating_mul(n) {
            set_error(format!("output buffer holds {out_len} values, need {}", samples.saturating_mul(n)));
            return Err(BetalabStatus::BufferTooSmall);
        }
        let model = check(GibbsModel::full(deref(p)?.0.clone(), beta, n))?;
        let run = check(sample(
            &model,
            &SampleOptions {
                n_samples: samples,
                thinning,
                burn_in,
                seed,
                start: None,
            },
        ))?;
        let flat: Vec<f64> = run.samples.concat();
        write_all(out, out_len, &flat)
    })
}
