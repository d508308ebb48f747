//! C ABI over the `decompound` library.
//!
//! Every fallible function returns a [`DcStatus`]; on failure a message is
//! stored per thread and can be read with [`dc_last_error_message`]. Handles
//! are opaque and must be released with their matching `*_free` function.
//! Output buffers are caller-allocated; their required lengths are documented
//! per function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use decompound::diagnostics;
use decompound::gibbs::{self, PosteriorSamples, PriorConfig, SamplerConfig, DEFAULT_M_CAP};
use decompound::model::{self, BaseDistribution, IncrementData};
use decompound::{datasets, io, plugin, simulate, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    BufferTooSmall = 3,
    DegenerateInput = 4,
    ResourceLimit = 5,
    NotApplicable = 6,
    Breakdown = 7,
    InputError = 8,
    IoError = 9,
    Internal = 10,
    Panic = 11,
}

/// Opaque increment dataset.
pub struct DcData {
    inner: IncrementData,
}

/// Opaque set of posterior draws.
pub struct DcSamples {
    inner: PosteriorSamples,
}

/// Prior and sampler settings for [`dc_fit`]. `m = 0` selects
/// `min(15, largest increment)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcFitOptions {
    pub m: usize,
    pub a: f64,
    pub c: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub pi_neighbor: f64,
    pub sweeps: usize,
    pub threads: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DcStatus {
    match e {
        Error::InvalidArgument(_) | Error::UnknownPreset(_) => DcStatus::InvalidArgument,
        Error::DegenerateInput(_) | Error::DegenerateEstimate(_) => DcStatus::DegenerateInput,
        Error::ResourceLimit { .. } => DcStatus::ResourceLimit,
        Error::NotApplicable(_) => DcStatus::NotApplicable,
        Error::Breakdown(_) => DcStatus::Breakdown,
        Error::Input(_) | Error::Csv(_) | Error::Json(_) => DcStatus::InputError,
        Error::Io(_) => DcStatus::IoError,
        Error::NoNeighbors | Error::NotFound(_) | Error::InvalidState(_) => DcStatus::Internal,
    }
}

struct Failure(DcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: DcStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside decompound".into());
            DcStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DcStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(
    p: *mut T,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [T], Failure> {
    if len < need {
        return Err(fail(
            DcStatus::BufferTooSmall,
            format!("{what} needs {need} entries, got {len}"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(DcStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(DcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(DcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes (without the terminator).
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dc_last_error_message(buf: *mut c_char, len: usize) -> usize {
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

/// Builds a dataset from `n` gaps and increments.
///
/// # Safety
/// `deltas` and `z` must be valid for `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_data_new(
    deltas: *const f64,
    z: *const u32,
    n: usize,
    out: *mut *mut DcData,
) -> DcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = IncrementData::from_parts(input(deltas, n, "deltas")?, input(z, n, "z")?)?;
        *out = Box::into_raw(Box::new(DcData { inner: data }));
        Ok(())
    })
}

/// Reads a `delta,z` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_data_from_csv(path: *const c_char, out: *mut *mut DcData) -> DcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = io::read_increments_file(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(DcData { inner: data }));
        Ok(())
    })
}

/// Loads an embedded dataset (`horse_kick` or `plant`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_data_embedded(name: *const c_char, out: *mut *mut DcData) -> DcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = datasets::by_name(c_str(name, "name")?)?;
        *out = Box::into_raw(Box::new(DcData { inner: data }));
        Ok(())
    })
}

/// Number of increments, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_data_len(data: *const DcData) -> usize {
    data.as_ref().map_or(0, |d| d.inner.len())
}

/// Copies gaps and increments into caller buffers of length `dc_data_len`.
///
/// # Safety
/// `data` must be a live handle; buffers must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn dc_data_copy(
    data: *const DcData,
    deltas: *mut f64,
    z: *mut u32,
    len: usize,
) -> DcStatus {
    guard(|| {
        let data = &handle(data, "data")?.inner;
        let d = output(deltas, len, data.len(), "deltas")?;
        let zz = output(z, len, data.len(), "z")?;
        for (i, r) in data.records().iter().enumerate() {
            d[i] = r.delta;
            zz[i] = r.z;
        }
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_data_free(data: *mut DcData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Simulates increments with intensity `lambda`, jump pmf `p` on
/// `1..=p_len` (renormalised) and the given gaps.
///
/// # Safety
/// `p` must be valid for `p_len` elements, `deltas` for `n`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_simulate(
    lambda: f64,
    p: *const f64,
    p_len: usize,
    deltas: *const f64,
    n: usize,
    seed: u64,
    out: *mut *mut DcData,
) -> DcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let base = BaseDistribution::new_renormalised(input(p, p_len, "p")?.to_vec())?;
        let data = simulate::simulate_increments(lambda, &base, input(deltas, n, "deltas")?, seed)?;
        *out = Box::into_raw(Box::new(DcData { inner: data }));
        Ok(())
    })
}

/// Compound pmf `q_0..q_{k_max}` of intensity `lambda` and jump pmf `p` on
/// `1..=p_len`. `q` must hold `k_max + 1` values.
///
/// # Safety
/// `p` must be valid for `p_len` elements and `q` for `q_len`.
#[no_mangle]
pub unsafe extern "C" fn dc_panjer_forward(
    lambda: f64,
    p: *const f64,
    p_len: usize,
    k_max: usize,
    q: *mut f64,
    q_len: usize,
) -> DcStatus {
    guard(|| {
        let base = BaseDistribution::new(input(p, p_len, "p")?.to_vec())?;
        let pmf = model::panjer_forward(lambda, &base, k_max)?;
        output(q, q_len, k_max + 1, "q")?.copy_from_slice(pmf.probs());
        Ok(())
    })
}

/// Recovers `lambda` and `p_1..p_{k_max}` from `q_0..q_{q_len-1}`. `p` must
/// hold `k_max` values; entries may be negative when `q` is not a compound
/// Poisson law.
///
/// # Safety
/// `q` must be valid for `q_len` elements, `p` for `p_len`, `lambda` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_panjer_inverse(
    q: *const f64,
    q_len: usize,
    k_max: usize,
    lambda: *mut f64,
    p: *mut f64,
    p_len: usize,
) -> DcStatus {
    guard(|| {
        let lambda = out_ptr(lambda, "lambda")?;
        let pmf = model::CompoundPmf::new(input(q, q_len, "q")?.to_vec())?;
        let (l, raw) = model::panjer_inverse(&pmf, k_max)?;
        output(p, p_len, k_max, "p")?.copy_from_slice(&raw);
        *lambda = l;
        Ok(())
    })
}

/// Plug-in estimate. Writes `lambda_hat` and up to `nu_len` entries of
/// `nu_hat`; `nu_written` receives the full length (the largest increment).
/// Fails with `BufferTooSmall` when `nu_len` is short.
///
/// # Safety
/// `data` must be a live handle; `nu` valid for `nu_len`; other outputs writable.
#[no_mangle]
pub unsafe extern "C" fn dc_plugin_estimate(
    data: *const DcData,
    lambda_hat: *mut f64,
    nu: *mut f64,
    nu_len: usize,
    nu_written: *mut usize,
) -> DcStatus {
    guard(|| {
        let data = &handle(data, "data")?.inner;
        let lambda_hat = out_ptr(lambda_hat, "lambda_hat")?;
        let nu_written = out_ptr(nu_written, "nu_written")?;
        let est = plugin::estimate(data, None)?;
        *nu_written = est.nu_hat.len();
        output(nu, nu_len, est.nu_hat.len(), "nu")?.copy_from_slice(&est.nu_hat);
        *lambda_hat = est.lambda_hat;
        Ok(())
    })
}

/// Default settings: data-driven `m`, `a = 0.01`, `c = 2`, 500,000
/// iterations with 250,000 burn-in, neighbour probability 0.8.
#[no_mangle]
pub extern "C" fn dc_fit_options_default() -> DcFitOptions {
    let s = SamplerConfig::default();
    DcFitOptions {
        m: 0,
        a: 0.01,
        c: 2.0,
        iterations: s.iterations,
        burn_in: s.burn_in,
        thin: s.thin,
        seed: s.seed,
        pi_neighbor: s.proposal.pi_neighbor,
        sweeps: s.proposal.sweeps,
        threads: s.threads,
    }
}

/// Runs the Gibbs sampler.
///
/// # Safety
/// `data` must be a live handle, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_fit(
    data: *const DcData,
    options: *const DcFitOptions,
    out: *mut *mut DcSamples,
) -> DcStatus {
    guard(|| {
        let data = &handle(data, "data")?.inner;
        let o = *handle(options, "options")?;
        let out = out_ptr(out, "out")?;
        let m = if o.m == 0 {
            gibbs::default_m(data, DEFAULT_M_CAP)
        } else {
            o.m
        };
        let prior = PriorConfig::new(m, o.a, o.c)?;
        let mut cfg = SamplerConfig {
            iterations: o.iterations,
            burn_in: o.burn_in,
            thin: o.thin,
            seed: o.seed,
            threads: o.threads,
            ..SamplerConfig::default()
        };
        cfg.proposal.pi_neighbor = o.pi_neighbor;
        cfg.proposal.sweeps = o.sweeps;
        let samples = gibbs::run_chain(data, &prior, &cfg)?;
        *out = Box::into_raw(Box::new(DcSamples { inner: samples }));
        Ok(())
    })
}

/// Number of retained draws, or 0 for a null handle.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_samples_rows(samples: *const DcSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.inner.rows())
}

/// Number of coordinates per draw, or 0 for a null handle.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_samples_m(samples: *const DcSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.inner.m())
}

/// Copies all draws row-major into `out` (`rows × m` values).
///
/// # Safety
/// `samples` must be a live handle; `out` valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn dc_samples_copy(
    samples: *const DcSamples,
    out: *mut f64,
    len: usize,
) -> DcStatus {
    guard(|| {
        let s = &handle(samples, "samples")?.inner;
        let buf = output(out, len, s.rows() * s.m(), "out")?;
        for (dst, row) in buf.chunks_exact_mut(s.m().max(1)).zip(s.iter_rows()) {
            dst.copy_from_slice(row);
        }
        Ok(())
    })
}

/// Posterior mean of each coordinate (`m` values).
///
/// # Safety
/// `samples` must be a live handle; `out` valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn dc_samples_mean(
    samples: *const DcSamples,
    out: *mut f64,
    len: usize,
) -> DcStatus {
    guard(|| {
        let s = &handle(samples, "samples")?.inner;
        output(out, len, s.m(), "out")?.copy_from_slice(&diagnostics::posterior_mean(s));
        Ok(())
    })
}

/// # Safety
/// `samples` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_samples_free(samples: *mut DcSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// `∑_{k=1}^{50} |est_k − truth_k|` with missing entries read as 0; NaN on
/// null input.
///
/// # Safety
/// Both arrays must be valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn dc_err_l1(
    truth: *const f64,
    truth_len: usize,
    estimate: *const f64,
    estimate_len: usize,
) -> f64 {
    match (
        input(truth, truth_len, "truth"),
        input(estimate, estimate_len, "estimate"),
    ) {
        (Ok(t), Ok(e)) => diagnostics::err_l1_vec(e, t),
        _ => f64::NAN,
    }
}
