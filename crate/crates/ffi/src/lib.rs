//! C ABI over `mms-core`.
//!
//! Every entry point returns an [`MmsStatus`]. On failure a description is
//! stored per thread and can be read with [`mms_last_error`]. Objects are
//! opaque handles released by their `_free` function; strings returned
//! through out-parameters are released with [`mms_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mms_core::counts::CountsConfig;
use mms_core::io::csv::read_rankings_csv;
use mms_core::io::result::{CountsRecord, FitResultDocument};
use mms_core::mixture::{em_fit_partial, select_g, BicConvention, EmConfig};
use mms_core::partition::{DistanceModel, PartitionEvaluator};
use mms_core::ranking::{default_labels, PartialRanking, RankingDataset};
use mms_core::sim::StudySpec;
use mms_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidRanking = 3,
    DimensionMismatch = 4,
    EmptyDataset = 5,
    Parse = 6,
    CompletionCapExceeded = 7,
    ExactRangeExceeded = 8,
    Numerical = 9,
    Io = 10,
    Config = 11,
    Panic = 99,
}

impl From<&Error> for MmsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::RejectionBudget(_) => MmsStatus::InvalidArgument,
            Error::InvalidRanking(_) | Error::PartialRow { .. } => MmsStatus::InvalidRanking,
            Error::DimensionMismatch { .. } => MmsStatus::DimensionMismatch,
            Error::EmptyDataset => MmsStatus::EmptyDataset,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => MmsStatus::Parse,
            Error::CompletionCapExceeded { .. } => MmsStatus::CompletionCapExceeded,
            Error::ExactRangeExceeded { .. } => MmsStatus::ExactRangeExceeded,
            Error::NonFinite(_) | Error::ZeroWeight => MmsStatus::Numerical,
            Error::Io(_) | Error::Cache(_) => MmsStatus::Io,
            Error::Config(_) => MmsStatus::Config,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MmsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MmsStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MmsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MmsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            MmsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(MmsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(MmsStatus::InvalidArgument, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Opaque ranking dataset.
pub struct MmsDataset(RankingDataset);

/// Opaque distance model: the Spearman distance distribution for a fixed
/// number of items, exact or approximate according to the counts settings.
pub struct MmsModel {
    evaluator: PartitionEvaluator,
    counts: CountsConfig,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL if the last
/// call succeeded. The pointer stays valid until the next call into the
/// library on the same thread.
#[no_mangle]
pub extern "C" fn mms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses rankings from CSV text: a header of item labels, one ranking per
/// row, empty or `NA` cells for unranked items, and an optional `freq`
/// column of multiplicities.
///
/// # Safety
/// `csv` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mms_dataset_from_csv(csv: *const c_char, out: *mut *mut MmsDataset) -> MmsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(csv, "csv")?;
        let data = read_rankings_csv(text.as_bytes(), Path::new("<memory>"))?;
        *out = Box::into_raw(Box::new(MmsDataset(data)));
        Ok(())
    })
}

/// Builds a dataset from a row-major `n_rows x n_items` array of ranks,
/// where 0 marks an unranked item. Items are labelled `item1..itemN`.
///
/// # Safety
/// `ranks` must point to `n_rows * n_items` readable values and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn mms_dataset_from_ranks(
    ranks: *const u32,
    n_rows: usize,
    n_items: usize,
    out: *mut *mut MmsDataset,
) -> MmsStatus {
    guard(|| {
        if ranks.is_null() {
            return Err(null("ranks"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n_rows
            .checked_mul(n_items)
            .ok_or_else(|| Failure(MmsStatus::InvalidArgument, "array size overflows".into()))?;
        let values = std::slice::from_raw_parts(ranks, len);
        let rows = values
            .chunks(n_items.max(1))
            .take(n_rows)
            .map(|r| PartialRanking::new(r.iter().map(|&x| (x != 0).then_some(x)).collect()).map(|p| (p, 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let data = RankingDataset::new(default_labels(n_items), rows)?;
        *out = Box::into_raw(Box::new(MmsDataset(data)));
        Ok(())
    })
}

/// Number of items, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mms_dataset_n_items(data: *const MmsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_items())
}

/// Total sample size counting multiplicities, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mms_dataset_total(data: *const MmsDataset) -> u64 {
    data.as_ref().map_or(0, |d| d.0.total())
}

/// # Safety
/// `data` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mms_dataset_free(data: *mut MmsDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Builds the distance model for `n` items. Exact counts are used up to
/// `exact_max` items and the rate-function approximation above it; pass 0
/// for the default threshold.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mms_model_new(n: usize, exact_max: usize, out: *mut *mut MmsModel) -> MmsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut counts = CountsConfig::default();
        if exact_max > 0 {
            counts.exact_max = exact_max;
        }
        let evaluator = PartitionEvaluator::new(counts.build(n)?);
        *out = Box::into_raw(Box::new(MmsModel { evaluator, counts }));
        Ok(())
    })
}

/// Whether the model's counts are exact rather than approximated.
///
/// # Safety
/// `model` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn mms_model_is_exact(model: *const MmsModel) -> bool {
    model.as_ref().is_some_and(|m| m.evaluator.distribution().exact_counts().is_some())
}

/// Writes `log Z(theta)` to `out`.
///
/// # Safety
/// `model` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mms_model_log_partition(model: *const MmsModel, theta: f64, out: *mut f64) -> MmsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Failure(MmsStatus::InvalidArgument, format!("theta {theta} must be finite and nonnegative")));
        }
        *out = m.evaluator.log_partition(theta);
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mms_model_free(model: *mut MmsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fits mixtures with `g_min..=g_max` components by EM and selects `G` by
/// the BIC elbow rule. On success `*json_out` holds the fit-result document
/// (release it with [`mms_string_free`]).
///
/// # Safety
/// `data` and `model` must be live handles and `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn mms_fit(
    data: *const MmsDataset,
    model: *const MmsModel,
    g_min: usize,
    g_max: usize,
    n_starts: usize,
    seed: u64,
    json_out: *mut *mut c_char,
) -> MmsStatus {
    guard(|| {
        let data = &data.as_ref().ok_or_else(|| null("data"))?.0;
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if json_out.is_null() {
            return Err(null("json_out"));
        }
        if g_min == 0 || g_max < g_min {
            return Err(Failure(MmsStatus::InvalidArgument, format!("G range {g_min}..={g_max} is empty")));
        }
        let mut cfg = EmConfig { seed, ..EmConfig::default() };
        if n_starts > 0 {
            cfg.n_starts = n_starts;
        }
        let convention = BicConvention::default();
        let (fits, selected) = if g_min == g_max {
            (vec![(g_min, em_fit_partial(data, g_min, &model.evaluator, &cfg)?)], g_min)
        } else {
            let range: Vec<usize> = (g_min..=g_max).collect();
            let sel = select_g(data, &range, &model.evaluator, &cfg, convention)?;
            (sel.g_values.iter().copied().zip(sel.fits).collect(), sel.g_hat)
        };
        let counts =
            CountsRecord { provenance: model.evaluator.distribution().provenance(), config: model.counts.clone() };
        let doc = FitResultDocument::new(data, &fits, selected, convention, &cfg, counts, false);
        write_string(json_out, doc.to_json()?)
    })
}

/// Runs a simulation study described by TOML text and writes the report
/// as JSON to `*json_out`.
///
/// # Safety
/// `spec_toml` must be a NUL-terminated string and `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn mms_simulate(spec_toml: *const c_char, json_out: *mut *mut c_char) -> MmsStatus {
    guard(|| {
        let text = str_arg(spec_toml, "spec_toml")?;
        if json_out.is_null() {
            return Err(null("json_out"));
        }
        let report = StudySpec::from_toml(text)?.run()?;
        write_string(json_out, serde_json::to_string_pretty(&report).map_err(Error::from)?)
    })
}
