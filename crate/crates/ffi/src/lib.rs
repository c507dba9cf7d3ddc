//! C ABI over the `phototherm` library.
//!
//! Every fallible function returns a [`PtStatus`]. On failure the message is
//! kept per thread and can be copied out with [`pt_last_error`]. Objects are
//! opaque handles created by `pt_*_new` and released by the matching
//! `pt_*_free`; passing a null handle to a free function is a no-op.

use phototherm::lattice_walk::{LatticeSpec, Source, WalkerEnsemble};
use phototherm::resolution::{self, PsfGrid, PsfImage};
use phototherm::saft;
use phototherm::virtual_wave::{
    invert_admm, invert_tsvd, retarded_grid, time_grid, AdmmConfig, KernelMatrix, Lambda, RegularizerConfig,
};
use phototherm::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    /// Unstable step, diverged solver or an unmeasurable lobe.
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> PtStatus {
    match err {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::NotNormalized { .. } => PtStatus::InvalidArgument,
        Error::ShapeMismatch(_) => PtStatus::ShapeMismatch,
        Error::Unstable { .. } | Error::Diverged { .. } | Error::GridTooCoarse { .. } | Error::MainLobe(_) => {
            PtStatus::Numerical
        }
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => PtStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> PtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PtStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PtStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PtStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> std::result::Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, what: &'static str) -> std::result::Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> std::result::Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> std::result::Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> Outcome {
    if dst.len() != src.len() {
        return Err(Error::ShapeMismatch(format!("buffer holds {}, need {}", dst.len(), src.len())).into());
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL, or
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Spatial cut-off wavenumber for a time-domain measurement.
///
/// # Safety
/// `out_k` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_k_cut(snr: f64, alpha: f64, t: f64, out_k: *mut f64) -> PtStatus {
    guard(|| {
        *out(out_k, "out_k")? = resolution::k_cut(snr, alpha, t)?;
        Ok(())
    })
}

/// Resolution limit of a time-domain measurement.
///
/// # Safety
/// `out_dr` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_delta_r_time(alpha: f64, t: f64, snr: f64, out_dr: *mut f64) -> PtStatus {
    guard(|| {
        *out(out_dr, "out_dr")? = resolution::delta_r_time(alpha, t, snr)?;
        Ok(())
    })
}

/// Resolution limit at depth `x` for a frequency-domain measurement.
///
/// # Safety
/// `out_dr` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_delta_r_depth(x: f64, snr: f64, out_dr: *mut f64) -> PtStatus {
    guard(|| {
        *out(out_dr, "out_dr")? = resolution::delta_r_depth(x, snr)?;
        Ok(())
    })
}

/// SNR and resolution factors from averaging over `n_detectors`.
///
/// # Safety
/// Both outputs must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_averaging_gain(n_detectors: usize, out_snr: *mut f64, out_resolution: *mut f64) -> PtStatus {
    guard(|| {
        let g = saft::averaging_gain(n_detectors)?;
        *out(out_snr, "out_snr")? = g.snr_factor;
        *out(out_resolution, "out_resolution")? = g.resolution_factor;
        Ok(())
    })
}

/// Virtual-wave kernel on uniform grids `t = dt, 2dt, ...` and `tp = 0, dtp, ...`.
pub struct PtKernel(KernelMatrix);

/// # Safety
/// `out_kernel` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_kernel_new(
    nt: usize,
    dt: f64,
    ntp: usize,
    dtp: f64,
    c: f64,
    alpha: f64,
    out_kernel: *mut *mut PtKernel,
) -> PtStatus {
    guard(|| {
        let slot = out(out_kernel, "out_kernel")?;
        *slot = ptr::null_mut();
        let k = KernelMatrix::build(&time_grid(nt, dt), &retarded_grid(ntp, dtp), c, alpha)?;
        *slot = Box::into_raw(Box::new(PtKernel(k)));
        Ok(())
    })
}

/// # Safety
/// `kernel` must be null or a handle from [`pt_kernel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_kernel_free(kernel: *mut PtKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// # Safety
/// `kernel` must be a live handle; outputs must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_kernel_dims(kernel: *const PtKernel, out_nt: *mut usize, out_ntp: *mut usize) -> PtStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        *out(out_nt, "out_nt")? = k.t_grid().len();
        *out(out_ntp, "out_ntp")? = k.n_tp();
        Ok(())
    })
}

fn check_len(what: &str, got: usize, want: usize) -> Outcome {
    if got != want {
        return Err(Error::ShapeMismatch(format!("{what} has {got} samples, expected {want}")).into());
    }
    Ok(())
}

/// Temperature signal `y = K x`.
///
/// # Safety
/// `x` must hold `nx` values and `y` room for `ny`.
#[no_mangle]
pub unsafe extern "C" fn pt_kernel_apply(kernel: *const PtKernel, x: *const f64, nx: usize, y: *mut f64, ny: usize) -> PtStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        check_len("x", nx, k.n_tp())?;
        let x = slice(x, nx, "x")?;
        copy_into(slice_mut(y, ny, "y")?, &k.apply(x))
    })
}

/// Truncated-SVD virtual wave. `out_rank` may be null.
///
/// # Safety
/// `y` must hold `ny` values, `x` room for `nx`, and `out_rank` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pt_kernel_invert_tsvd(
    kernel: *const PtKernel,
    y: *const f64,
    ny: usize,
    rel_threshold: f64,
    x: *mut f64,
    nx: usize,
    out_rank: *mut usize,
) -> PtStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        check_len("y", ny, k.t_grid().len())?;
        let sol = invert_tsvd(k, slice(y, ny, "y")?, rel_threshold)?;
        copy_into(slice_mut(x, nx, "x")?, &sol.x)?;
        if let Some(r) = out_rank.as_mut() {
            *r = sol.rank;
        }
        Ok(())
    })
}

/// Nonnegative l1-regularised virtual wave with `lambda = fraction * lambda_max`.
/// `out_converged` may be null.
///
/// # Safety
/// `y` must hold `ny` values, `x` room for `nx`, and `out_converged` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pt_kernel_invert_admm(
    kernel: *const PtKernel,
    y: *const f64,
    ny: usize,
    fraction: f64,
    max_iters: usize,
    x: *mut f64,
    nx: usize,
    out_converged: *mut bool,
) -> PtStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        check_len("y", ny, k.t_grid().len())?;
        let cfg = AdmmConfig { lambda: Lambda::FractionOfMax(fraction), max_iters, ..AdmmConfig::default() };
        let sol = invert_admm(k, slice(y, ny, "y")?, &RegularizerConfig::admm(cfg))?;
        copy_into(slice_mut(x, nx, "x")?, &sol.x)?;
        if let Some(c) = out_converged.as_mut() {
            *c = sol.converged;
        }
        Ok(())
    })
}

/// Walker start positions.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtSource {
    /// Every walker in `cell`.
    Cell = 0,
    /// Middle cell; on an even lattice each walker picks one of the two middle cells.
    Center = 1,
    Uniform = 2,
}

/// Reflecting random walk ensemble.
pub struct PtWalk {
    lattice: LatticeSpec,
    ensemble: WalkerEnsemble,
}

/// `cell` is read only for [`PtSource::Cell`].
///
/// # Safety
/// `out_walk` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_walk_new(
    n_cells: usize,
    n_walkers: usize,
    source: PtSource,
    cell: usize,
    seed: u64,
    out_walk: *mut *mut PtWalk,
) -> PtStatus {
    guard(|| {
        let slot = out(out_walk, "out_walk")?;
        *slot = ptr::null_mut();
        let lattice = LatticeSpec::new(n_cells)?;
        let source = match source {
            PtSource::Cell => Source::Cell(cell),
            PtSource::Center => Source::Center,
            PtSource::Uniform => Source::Uniform,
        };
        let ensemble = WalkerEnsemble::new(&lattice, n_walkers, source, seed)?;
        *slot = Box::into_raw(Box::new(PtWalk { lattice, ensemble }));
        Ok(())
    })
}

/// # Safety
/// `walk` must be null or a handle from [`pt_walk_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_walk_free(walk: *mut PtWalk) {
    if !walk.is_null() {
        drop(Box::from_raw(walk));
    }
}

/// # Safety
/// `walk` must be a live handle, not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn pt_walk_step(walk: *mut PtWalk, n_steps: usize) -> PtStatus {
    guard(|| {
        let w = walk.as_mut().ok_or(Failure::Null("walk"))?;
        for _ in 0..n_steps {
            w.ensemble.step(&w.lattice);
        }
        Ok(())
    })
}

/// Steps taken so far.
///
/// # Safety
/// `walk` must be a live handle and `out_time` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_walk_time(walk: *const PtWalk, out_time: *mut u64) -> PtStatus {
    guard(|| {
        *out(out_time, "out_time")? = handle(walk, "walk")?.ensemble.time();
        Ok(())
    })
}

/// Walker count per cell; `counts` must have room for `n_cells` entries.
///
/// # Safety
/// `walk` must be a live handle and `counts` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pt_walk_histogram(walk: *const PtWalk, counts: *mut u64, n: usize) -> PtStatus {
    guard(|| {
        let w = handle(walk, "walk")?;
        let h = w.ensemble.histogram(&w.lattice);
        check_len("counts", n, h.len())?;
        slice_mut(counts, n, "counts")?.copy_from_slice(&h);
        Ok(())
    })
}

/// Two-dimensional point-spread function of a square grid.
pub struct PtPsf(PsfImage);

/// Grid of `n x n` samples over `[-half, half]` in both directions.
///
/// # Safety
/// `out_psf` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pt_psf_new(snr: f64, depth: f64, n: usize, half: f64, out_psf: *mut *mut PtPsf) -> PtStatus {
    guard(|| {
        let slot = out(out_psf, "out_psf")?;
        *slot = ptr::null_mut();
        if n < 3 || !(half.is_finite() && half > 0.0) {
            return Err(Error::InvalidParameter { name: "grid", reason: "need n >= 3 and a positive half extent".into() }.into());
        }
        let img = resolution::psf_2d(snr, depth, &PsfGrid::square(n, half))?;
        *slot = Box::into_raw(Box::new(PtPsf(img)));
        Ok(())
    })
}

/// # Safety
/// `psf` must be null or a handle from [`pt_psf_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_psf_free(psf: *mut PtPsf) {
    if !psf.is_null() {
        drop(Box::from_raw(psf));
    }
}

/// Samples in row-major `[z][x]` order.
///
/// # Safety
/// `psf` must be a live handle and `values` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pt_psf_values(psf: *const PtPsf, values: *mut f64, n: usize) -> PtStatus {
    guard(|| copy_into(slice_mut(values, n, "values")?, &handle(psf, "psf")?.0.values))
}

/// Main-lobe full widths at half maximum.
///
/// # Safety
/// `psf` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_psf_fwhm(psf: *const PtPsf, out_lateral: *mut f64, out_axial: *mut f64) -> PtStatus {
    guard(|| {
        let e = handle(psf, "psf")?.0.extents()?;
        *out(out_lateral, "out_lateral")? = e.lateral_fwhm;
        *out(out_axial, "out_axial")? = e.axial_fwhm;
        Ok(())
    })
}

/// Depth interval covered by the axial main lobe.
///
/// # Safety
/// `psf` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_psf_axial_window(psf: *const PtPsf, out_lo: *mut f64, out_hi: *mut f64) -> PtStatus {
    guard(|| {
        let (lo, hi) = handle(psf, "psf")?.0.axial_window()?;
        *out(out_lo, "out_lo")? = lo;
        *out(out_hi, "out_hi")? = hi;
        Ok(())
    })
}
