//! C ABI over the `unicls` library.
//!
//! Every fallible function returns a [`UcStatus`]; on failure the message is
//! available from [`uc_last_error_message`] on the same thread. Objects are
//! opaque handles created by `*_new` / `*_load_*` functions and released with
//! the matching `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use unicls::evaluation::class_wise_uniform_accuracy;
use unicls::io::{load_features_csv, load_report};
use unicls::theory::{corollary_condition, stationary_bias, BoundedMetricModel};
use unicls::{
    compute_metrics, evaluate, loss_value, softmax_transform, BiasMode, ClassifierHead, Error,
    Family, LabeledDataset, LossSpec, MetricBatch,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ZeroNorm = 4,
    ParseError = 5,
    IoError = 6,
    NoCorrectSamples = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcFamily {
    Linear = 0,
    Normalized = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcBiasMode {
    Zero = 0,
    Diverse = 1,
    Unified = 2,
}

/// Accuracies in percent and the optimal unified threshold.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UcAccuracy {
    pub a_sw: f64,
    pub a_cw: f64,
    pub a_uni: f64,
    pub t_star: f64,
    pub num_samples: usize,
    pub sw_count: usize,
    pub cw_count: usize,
    pub uni_count: usize,
}

pub struct UcDataset(LabeledDataset);

pub struct UcHead(ClassifierHead);

pub struct UcMetricBatch(MetricBatch);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

#[derive(Debug)]
struct Failure(UcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => UcStatus::DimensionMismatch,
            Error::ZeroNorm { .. } => UcStatus::ZeroNorm,
            Error::Parse { .. } | Error::Json { .. } => UcStatus::ParseError,
            Error::Io { .. } => UcStatus::IoError,
            Error::NoCorrectSamples => UcStatus::NoCorrectSamples,
            _ => UcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(UcStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(UcStatus::InvalidArgument, message.into())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> UcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => UcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            UcStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

fn checked_len(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b).ok_or_else(|| invalid("size overflow"))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `features` holds `num_samples × dim` values row by row; `labels` holds
/// `num_samples` class indices below `num_classes`.
#[no_mangle]
pub unsafe extern "C" fn uc_dataset_new(
    features: *const f64,
    labels: *const usize,
    num_samples: usize,
    dim: usize,
    num_classes: usize,
    out: *mut *mut UcDataset,
) -> UcStatus {
    guard(|| {
        let values = slice(features, checked_len(num_samples, dim)?, "features")?;
        let labels = slice(labels, num_samples, "labels")?;
        let rows = if dim == 0 {
            vec![Vec::new(); num_samples]
        } else {
            values.chunks_exact(dim).map(<[f64]>::to_vec).collect()
        };
        let data = LabeledDataset::from_rows(rows, labels.to_vec(), num_classes)?;
        write_out(out, Box::into_raw(Box::new(UcDataset(data))))
    })
}

/// Loads a feature CSV (`id,label,f0,...`).
#[no_mangle]
pub unsafe extern "C" fn uc_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut UcDataset,
) -> UcStatus {
    guard(|| {
        let loaded = load_features_csv(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(UcDataset(loaded.dataset))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn uc_dataset_len(data: *const UcDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn uc_dataset_free(data: *mut UcDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// `weights` holds `num_classes × dim` values: row `j` is the weight
/// vector of class `j`.
#[no_mangle]
pub unsafe extern "C" fn uc_head_new(
    weights: *const f64,
    bias: *const f64,
    num_classes: usize,
    dim: usize,
    family: UcFamily,
    bias_mode: UcBiasMode,
    gamma: f64,
    out: *mut *mut UcHead,
) -> UcStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let w = slice(weights, checked_len(num_classes, dim)?, "weights")?;
        let b = slice(bias, num_classes, "bias")?;
        let family = match family {
            UcFamily::Linear => Family::Linear,
            UcFamily::Normalized => Family::Normalized,
        };
        let mode = match bias_mode {
            UcBiasMode::Zero => BiasMode::Zero,
            UcBiasMode::Diverse => BiasMode::Diverse,
            UcBiasMode::Unified => BiasMode::Unified,
        };
        let columns = w.chunks_exact(dim).map(<[f64]>::to_vec).collect();
        let head = ClassifierHead::new(columns, b.to_vec(), mode, family, gamma)?;
        write_out(out, Box::into_raw(Box::new(UcHead(head))))
    })
}

/// Loads a head saved as JSON by the command-line tool.
#[no_mangle]
pub unsafe extern "C" fn uc_head_load_json(path: *const c_char, out: *mut *mut UcHead) -> UcStatus {
    guard(|| {
        let head: ClassifierHead = load_report(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(UcHead(head))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn uc_head_free(head: *mut UcHead) {
    if !head.is_null() {
        drop(Box::from_raw(head));
    }
}

/// Wraps precomputed metrics: `values` holds `num_samples × num_classes`
/// entries row by row.
#[no_mangle]
pub unsafe extern "C" fn uc_metric_batch_new(
    values: *const f64,
    labels: *const usize,
    num_samples: usize,
    num_classes: usize,
    out: *mut *mut UcMetricBatch,
) -> UcStatus {
    guard(|| {
        let v = slice(values, checked_len(num_samples, num_classes)?, "values")?;
        let l = slice(labels, num_samples, "labels")?;
        let batch = MetricBatch::from_flat(v.to_vec(), l.to_vec(), num_classes, true)?;
        write_out(out, Box::into_raw(Box::new(UcMetricBatch(batch))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn uc_compute_metrics(
    head: *const UcHead,
    data: *const UcDataset,
    include_bias: bool,
    out: *mut *mut UcMetricBatch,
) -> UcStatus {
    guard(|| {
        let head = deref(head, "head")?;
        let data = deref(data, "dataset")?;
        let batch = compute_metrics(&head.0, &data.0, include_bias)?;
        write_out(out, Box::into_raw(Box::new(UcMetricBatch(batch))))
    })
}

/// Row-wise SoftMax of every sample's metrics, as a new batch.
#[no_mangle]
pub unsafe extern "C" fn uc_metric_batch_softmax(
    batch: *const UcMetricBatch,
    out: *mut *mut UcMetricBatch,
) -> UcStatus {
    guard(|| {
        let batch = deref(batch, "batch")?;
        write_out(
            out,
            Box::into_raw(Box::new(UcMetricBatch(softmax_transform(&batch.0)))),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn uc_metric_batch_len(batch: *const UcMetricBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.len())
}

/// Copies all `len × num_classes` metric values into `out`, which must
/// hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn uc_metric_batch_values(
    batch: *const UcMetricBatch,
    out: *mut f64,
    capacity: usize,
) -> UcStatus {
    guard(|| {
        let batch = deref(batch, "batch")?;
        let values = batch.0.values();
        if capacity < values.len() {
            return Err(Failure(
                UcStatus::DimensionMismatch,
                format!("buffer holds {capacity} values, {} needed", values.len()),
            ));
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn uc_metric_batch_free(batch: *mut UcMetricBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

#[no_mangle]
pub unsafe extern "C" fn uc_evaluate(
    batch: *const UcMetricBatch,
    out: *mut UcAccuracy,
) -> UcStatus {
    guard(|| {
        let r = evaluate(&deref(batch, "batch")?.0);
        write_out(
            out,
            UcAccuracy {
                a_sw: r.a_sw,
                a_cw: r.a_cw,
                a_uni: r.a_uni,
                t_star: r.t_star,
                num_samples: r.num_samples,
                sw_count: r.sw_count,
                cw_count: r.cw_count,
                uni_count: r.uni_count,
            },
        )
    })
}

/// Optimal per-class thresholds. `has_threshold[i]` is 0 for classes without
/// samples, in which case `thresholds[i]` is NaN.
#[no_mangle]
pub unsafe extern "C" fn uc_class_thresholds(
    batch: *const UcMetricBatch,
    thresholds: *mut f64,
    has_threshold: *mut u8,
    num_classes: usize,
) -> UcStatus {
    guard(|| {
        let batch = &deref(batch, "batch")?.0;
        if num_classes != batch.num_classes() {
            return Err(Failure(
                UcStatus::DimensionMismatch,
                format!(
                    "batch has {} classes, caller passed {num_classes}",
                    batch.num_classes()
                ),
            ));
        }
        if thresholds.is_null() || has_threshold.is_null() {
            return Err(null("output buffer"));
        }
        let (_, ts) = class_wise_uniform_accuracy(batch);
        for (i, t) in ts.iter().enumerate() {
            thresholds.add(i).write(t.unwrap_or(f64::NAN));
            has_threshold.add(i).write(t.is_some() as u8);
        }
        Ok(())
    })
}

/// Loss of one sample from its bias-free metrics. `loss` is one of the
/// twelve table names such as `"bce-nu"`.
#[no_mangle]
pub unsafe extern "C" fn uc_loss_value(
    loss: *const c_char,
    gamma: f64,
    raw_metrics: *const f64,
    bias: *const f64,
    num_classes: usize,
    label: usize,
    out: *mut f64,
) -> UcStatus {
    guard(|| {
        if loss.is_null() {
            return Err(null("loss name"));
        }
        let name = CStr::from_ptr(loss)
            .to_str()
            .map_err(|_| invalid("loss name is not UTF-8"))?;
        let spec = LossSpec::from_name(name, gamma)?;
        let metrics = slice(raw_metrics, num_classes, "metrics")?;
        let bias = slice(bias, num_classes, "bias")?;
        write_out(out, loss_value(&spec, metrics, label, bias)?)
    })
}

/// Minimizer of the unified-bias BCE loss with positives at `upper` and
/// negatives at `lower`.
#[no_mangle]
pub unsafe extern "C" fn uc_stationary_bias(
    lower: f64,
    upper: f64,
    num_classes: usize,
    out: *mut f64,
) -> UcStatus {
    guard(|| {
        let model = BoundedMetricModel::new(lower, upper, num_classes)?;
        write_out(out, stationary_bias(&model))
    })
}

#[no_mangle]
pub unsafe extern "C" fn uc_corollary_condition(
    lower: f64,
    upper: f64,
    num_classes: usize,
    out: *mut bool,
) -> UcStatus {
    guard(|| {
        let model = BoundedMetricModel::new(lower, upper, num_classes)?;
        write_out(out, corollary_condition(&model))
    })
}
