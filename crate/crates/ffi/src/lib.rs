//! C interface to `covbound`.
//!
//! Datasets and networks cross the boundary as opaque handles created by a
//! `*_new`/`*_load` function and released with the matching `*_free`.
//! Every fallible call returns a [`CbStatus`]; on failure the message is
//! available from [`covbound_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use covbound::bounds::thm_lower_bound;
use covbound::cover::{cover_report, empirical_separation_gap};
use covbound::dataset::{load_csv_dataset, synth_1d, LabelSet, LabeledDataset};
use covbound::error::Error;
use covbound::mlp::{load_checkpoint, save_checkpoint, train, Control, Mlp, TrainConfig};
use covbound::smoothness::{delta_f_grid, Grid};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Parse = 3,
    Format = 4,
    Range = 5,
    Undefined = 6,
    Numerical = 7,
    Run = 8,
    Io = 9,
    Serialization = 10,
    Panic = 11,
}

/// Opaque labeled dataset.
pub struct CbDataset(LabeledDataset);

/// Opaque multilayer perceptron.
pub struct CbMlp(Mlp);

/// Cover quantities of a train/test pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CbCoverSummary {
    pub rho_t: f64,
    pub cd: f64,
    /// NaN when the cover difference is zero.
    pub cc: f64,
    pub delta_t: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::Validation(_) => CbStatus::Validation,
        Error::Parse { .. } => CbStatus::Parse,
        Error::Format { .. } => CbStatus::Format,
        Error::Range(_) => CbStatus::Range,
        Error::Undefined(_) => CbStatus::Undefined,
        Error::Numerical(_) => CbStatus::Numerical,
        Error::Run { .. } => CbStatus::Run,
        Error::Io { .. } => CbStatus::Io,
        Error::Serde(_) => CbStatus::Serialization,
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

type Res<T> = std::result::Result<T, Failure>;

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Res<()>>(f: F) -> CbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CbStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CbStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CbStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Res<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Res<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Res<&'a str> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Validation("path is not valid UTF-8".into())))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Res<()> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn covbound_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Schema version of the library's JSON reports.
#[no_mangle]
pub extern "C" fn covbound_schema_version() -> u32 {
    covbound::SCHEMA_VERSION
}

/// Builds a single-label dataset from `n` row-major points of dimension
/// `dim` in `[0,1]` and labels in `1..=classes`.
///
/// # Safety
/// `points` must hold `n * dim` values and `labels` `n` values.
#[no_mangle]
pub unsafe extern "C" fn covbound_dataset_new(
    dim: usize,
    classes: usize,
    points: *const f64,
    labels: *const u32,
    n: usize,
    out: *mut *mut CbDataset,
) -> CbStatus {
    guard(|| {
        let pts = slice(points, n.saturating_mul(dim), "points")?.to_vec();
        let tags = slice(labels, n, "labels")?
            .iter()
            .map(|&l| LabelSet::single(l))
            .collect();
        let ds = LabeledDataset::new("ffi", dim, classes, pts, tags)?;
        write_out(out, Box::into_raw(Box::new(CbDataset(ds))), "out")
    })
}

/// Loads a CSV dataset (`x1,...,xd,label` rows).
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn covbound_dataset_load_csv(
    path_: *const c_char,
    classes: usize,
    out: *mut *mut CbDataset,
) -> CbStatus {
    guard(|| {
        let ds = load_csv_dataset(path(path_)?, classes)?;
        write_out(out, Box::into_raw(Box::new(CbDataset(ds))), "out")
    })
}

/// The separated-interval problem: `n` training points and `n_test`
/// equispaced test points.
///
/// # Safety
/// `train` and `test` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn covbound_dataset_synth_1d(
    n: usize,
    gap: f64,
    n_test: usize,
    train: *mut *mut CbDataset,
    test: *mut *mut CbDataset,
) -> CbStatus {
    guard(|| {
        if train.is_null() || test.is_null() {
            return Err(Failure::Null("out"));
        }
        let (a, b) = synth_1d(n, gap, n_test)?;
        write_out(train, Box::into_raw(Box::new(CbDataset(a))), "train")?;
        write_out(test, Box::into_raw(Box::new(CbDataset(b))), "test")
    })
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn covbound_dataset_free(ds: *mut CbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn covbound_dataset_len(ds: *const CbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Dimension, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn covbound_dataset_dim(ds: *const CbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// Total cover, cover difference, cover complexity and separation gap.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn covbound_cover(
    train: *const CbDataset,
    test: *const CbDataset,
    out: *mut CbCoverSummary,
) -> CbStatus {
    guard(|| {
        let r = cover_report(&as_ref(train, "train")?.0, &as_ref(test, "test")?.0)?;
        let s = CbCoverSummary {
            rho_t: r.rho_t,
            cd: r.cd,
            cc: r.cc.unwrap_or(f64::NAN),
            delta_t: r.delta_t,
        };
        write_out(out, s, "out")
    })
}

/// Smallest distance between differently labeled points.
///
/// # Safety
/// `ds` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn covbound_separation_gap(ds: *const CbDataset, out: *mut f64) -> CbStatus {
    guard(|| {
        let gap = empirical_separation_gap(&as_ref(ds, "dataset")?.0)?;
        write_out(out, gap, "out")
    })
}

/// He-initialized network with layer sizes `sizes[0..n_sizes]` (input
/// dimension first, class count last).
///
/// # Safety
/// `sizes` must hold `n_sizes` values.
#[no_mangle]
pub unsafe extern "C" fn covbound_mlp_new(
    sizes: *const usize,
    n_sizes: usize,
    seed: u64,
    out: *mut *mut CbMlp,
) -> CbStatus {
    guard(|| {
        let net = Mlp::new(slice(sizes, n_sizes, "sizes")?, seed)?;
        write_out(out, Box::into_raw(Box::new(CbMlp(net))), "out")
    })
}

/// Loads a JSON checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn covbound_mlp_load(path_: *const c_char, out: *mut *mut CbMlp) -> CbStatus {
    guard(|| {
        let net = load_checkpoint(path(path_)?)?;
        write_out(out, Box::into_raw(Box::new(CbMlp(net))), "out")
    })
}

/// Writes a JSON checkpoint.
///
/// # Safety
/// `net` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn covbound_mlp_save(net: *const CbMlp, path_: *const c_char) -> CbStatus {
    guard(|| Ok(save_checkpoint(&as_ref(net, "net")?.0, path(path_)?)?))
}

/// Releases a network. NULL is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn covbound_mlp_free(net: *mut CbMlp) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Class probabilities at one input. `x` holds the input dimension's
/// values; `probs` receives `probs_len` values, which must equal the class
/// count.
///
/// # Safety
/// Buffers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn covbound_mlp_forward(
    net: *const CbMlp,
    x: *const f64,
    x_len: usize,
    probs: *mut f64,
    probs_len: usize,
) -> CbStatus {
    guard(|| {
        let net = &as_ref(net, "net")?.0;
        if probs_len != net.classes() {
            return Err(Error::Validation(format!(
                "output buffer holds {probs_len} values for {} classes",
                net.classes()
            ))
            .into());
        }
        if probs.is_null() {
            return Err(Failure::Null("probs"));
        }
        let p = net.forward(slice(x, x_len, "x")?)?;
        std::slice::from_raw_parts_mut(probs, probs_len).copy_from_slice(&p);
        Ok(())
    })
}

/// Full-batch Adam training on a single-label dataset.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn covbound_mlp_train(
    net: *mut CbMlp,
    data: *const CbDataset,
    learning_rate: f64,
    iterations: usize,
    seed: u64,
) -> CbStatus {
    guard(|| {
        let data = &as_ref(data, "data")?.0;
        let net = &mut net.as_mut().ok_or(Failure::Null("net"))?.0;
        let cfg = TrainConfig {
            learning_rate,
            iterations,
            eval_interval: 0,
            seed,
            ..TrainConfig::default()
        };
        train(net, data, &cfg, |_, _| Ok(Control::Continue))?;
        Ok(())
    })
}

/// Grid estimate of `delta_f(eps)` on `[0,1]^d` (`d` = 1 or 2) with
/// `resolution` points per axis.
///
/// # Safety
/// `net` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn covbound_delta_f_grid(
    net: *const CbMlp,
    resolution: usize,
    eps: f64,
    out: *mut f64,
) -> CbStatus {
    guard(|| {
        let net = &as_ref(net, "net")?.0;
        let grid = Grid::new(net.input_dim(), resolution)?;
        write_out(out, delta_f_grid(net, &grid, eps)?, "out")
    })
}

/// `1 - (sqrt(dim) / delta)(1 - rho)`; negative values are vacuous bounds.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn covbound_lower_bound(
    rho: f64,
    dim: usize,
    delta: f64,
    out: *mut f64,
) -> CbStatus {
    guard(|| write_out(out, thm_lower_bound(rho, dim, delta)?.value, "out"))
}
