//! C ABI for the fall-risk assessment library.
//!
//! Conventions:
//! - Handles (`IfraCatalog`, `IfraDataset`, `IfraScale`) are opaque; free
//!   them with the matching `*_free` function exactly once.
//! - Functions return [`IfraStatus`]; on any non-`Ok` status the
//!   thread-local message from [`ifra_last_error_message`] describes the
//!   failure. Strings returned by this library are NUL-terminated copies
//!   owned by the caller and released with [`ifra_string_free`].
//! - Strata are encoded 0 = low, 1 = medium, 2 = high; splits are
//!   0 = train, 1 = validation, 2 = test, 3 = all.

use ifra_core::augment::{augment_fallers, AugmentationConfig};
use ifra_core::catalog::{load_catalog, FeatureCatalog};
use ifra_core::dataset::{load_dataset, save_dataset, Dataset, Split};
use ifra_core::error::Error;
use ifra_core::evaluation::evaluate_scale;
use ifra_core::scale::{
    assess, builtin_clinical_scales, builtin_ifra_scale, derive_scale, load_scales, RiskScale,
};
use ifra_core::selection::{run_selection, SelectionConfig, SelectionReport};
use ifra_core::svm::SvmConfig;
use libc::c_char;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfraStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// File could not be read or written.
    Io = 3,
    /// File contents failed to parse or validate.
    Parse = 4,
    /// Input data violates a precondition.
    Data = 5,
    /// A numeric routine failed.
    Numeric = 6,
    /// Unexpected internal failure.
    Internal = 7,
}

/// Opaque feature catalog handle.
pub struct IfraCatalog(FeatureCatalog);
/// Opaque cohort handle.
pub struct IfraDataset(Dataset);
/// Opaque risk-scale handle.
pub struct IfraScale(RiskScale);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> IfraStatus {
    match err {
        Error::Io(_) => IfraStatus::Io,
        Error::Csv(_) | Error::Json(_) => IfraStatus::Parse,
        Error::Catalog(_) | Error::Dataset(_) | Error::Scale(_) => IfraStatus::Data,
        Error::Augmentation(_) | Error::Evaluation(_) => IfraStatus::Data,
        Error::Stats(_) | Error::Svm(_) | Error::Selection(_) => IfraStatus::Numeric,
    }
}

fn fail(err: Error) -> IfraStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Run a closure, translating panics and errors into status codes.
fn guarded(f: impl FnOnce() -> Result<IfraStatus, Error>) -> IfraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic".into());
            IfraStatus::Internal
        }
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, IfraStatus> {
    if ptr.is_null() {
        set_error("NULL string argument".into());
        return Err(IfraStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        IfraStatus::InvalidUtf8
    })
}

fn give_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "?"))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

fn split_from(code: i32) -> Result<Option<Split>, IfraStatus> {
    match code {
        0 => Ok(Some(Split::Train)),
        1 => Ok(Some(Split::Validation)),
        2 => Ok(Some(Split::Test)),
        3 => Ok(None),
        _ => {
            set_error(format!("invalid split code {code}"));
            Err(IfraStatus::Data)
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ifra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread, or NULL if none.
/// The caller owns the returned string.
#[no_mangle]
pub extern "C" fn ifra_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|c| give_string(c.to_string_lossy().into_owned()))
            .unwrap_or(ptr::null_mut())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a function of this library and not yet
/// freed; NULL is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn ifra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a feature catalog from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_catalog_load(
    path: *const c_char,
    out: *mut *mut IfraCatalog,
) -> IfraStatus {
    if out.is_null() {
        set_error("NULL output pointer".into());
        return IfraStatus::NullArgument;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| {
        let catalog = load_catalog(path)?;
        *out = Box::into_raw(Box::new(IfraCatalog(catalog)));
        Ok(IfraStatus::Ok)
    })
}

/// Number of features in the catalog; 0 for NULL.
///
/// # Safety
/// `catalog` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ifra_catalog_feature_count(catalog: *const IfraCatalog) -> usize {
    if catalog.is_null() {
        return 0;
    }
    unsafe { (*catalog).0.len() }
}

/// # Safety
/// `catalog` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ifra_catalog_free(catalog: *mut IfraCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Load a cohort CSV against a catalog. Rows with missing feature cells
/// are excluded; `excluded_out` (optional) receives how many.
///
/// # Safety
/// Pointer arguments must be valid; `catalog` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ifra_dataset_load(
    path: *const c_char,
    catalog: *const IfraCatalog,
    out: *mut *mut IfraDataset,
    excluded_out: *mut usize,
) -> IfraStatus {
    if out.is_null() || catalog.is_null() {
        set_error("NULL argument".into());
        return IfraStatus::NullArgument;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let catalog = &(*catalog).0;
    guarded(|| {
        let (dataset, log) = load_dataset(path, catalog)?;
        if !excluded_out.is_null() {
            *excluded_out = log.excluded.len();
        }
        *out = Box::into_raw(Box::new(IfraDataset(dataset)));
        Ok(IfraStatus::Ok)
    })
}

/// Number of subjects; 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ifra_dataset_subject_count(dataset: *const IfraDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { (*dataset).0.len() }
}

/// Write the cohort back to CSV.
///
/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ifra_dataset_save(
    dataset: *const IfraDataset,
    path: *const c_char,
) -> IfraStatus {
    if dataset.is_null() {
        set_error("NULL dataset".into());
        return IfraStatus::NullArgument;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let dataset = &(*dataset).0;
    guarded(|| {
        save_dataset(dataset, path)?;
        Ok(IfraStatus::Ok)
    })
}

/// # Safety
/// `dataset` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ifra_dataset_free(dataset: *mut IfraDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Append `count` Gaussian-perturbed synthetic training fallers.
///
/// # Safety
/// `dataset` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_augment(
    dataset: *const IfraDataset,
    count: usize,
    noise_scale: f64,
    seed: u64,
    out: *mut *mut IfraDataset,
) -> IfraStatus {
    if dataset.is_null() || out.is_null() {
        set_error("NULL argument".into());
        return IfraStatus::NullArgument;
    }
    let dataset = &(*dataset).0;
    guarded(|| {
        let augmented = augment_fallers(
            dataset,
            &AugmentationConfig {
                count,
                noise_scale,
                seed,
            },
        )?;
        *out = Box::into_raw(Box::new(IfraDataset(augmented)));
        Ok(IfraStatus::Ok)
    })
}

/// Load scale number `index` from a JSON file (0 for single-scale files).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_scale_load(
    path: *const c_char,
    index: usize,
    out: *mut *mut IfraScale,
) -> IfraStatus {
    if out.is_null() {
        set_error("NULL output pointer".into());
        return IfraStatus::NullArgument;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| {
        let mut scales = load_scales(path)?;
        if index >= scales.len() {
            return Err(Error::Scale(format!(
                "scale index {index} out of range ({} scales in file)",
                scales.len()
            )));
        }
        *out = Box::into_raw(Box::new(IfraScale(scales.swap_remove(index))));
        Ok(IfraStatus::Ok)
    })
}

/// The bundled 22-feature instrumented scale.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_scale_builtin_ifra(out: *mut *mut IfraScale) -> IfraStatus {
    if out.is_null() {
        set_error("NULL output pointer".into());
        return IfraStatus::NullArgument;
    }
    *out = Box::into_raw(Box::new(IfraScale(builtin_ifra_scale().clone())));
    IfraStatus::Ok
}

/// Number of bundled clinical scales.
#[no_mangle]
pub extern "C" fn ifra_builtin_clinical_count() -> usize {
    builtin_clinical_scales().len()
}

/// One of the bundled clinical scales.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_scale_builtin_clinical(
    index: usize,
    out: *mut *mut IfraScale,
) -> IfraStatus {
    if out.is_null() {
        set_error("NULL output pointer".into());
        return IfraStatus::NullArgument;
    }
    let scales = builtin_clinical_scales();
    if index >= scales.len() {
        set_error(format!(
            "clinical scale index {index} out of range ({})",
            scales.len()
        ));
        return IfraStatus::Data;
    }
    *out = Box::into_raw(Box::new(IfraScale(scales[index].clone())));
    IfraStatus::Ok
}

/// Scale name as a caller-owned string.
///
/// # Safety
/// `scale` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ifra_scale_name(scale: *const IfraScale) -> *mut c_char {
    if scale.is_null() {
        return ptr::null_mut();
    }
    give_string(unsafe { (*scale).0.name.clone() })
}

/// Number of feature entries; 0 for NULL.
///
/// # Safety
/// `scale` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ifra_scale_entry_count(scale: *const IfraScale) -> usize {
    if scale.is_null() {
        return 0;
    }
    unsafe { (*scale).0.entries.len() }
}

/// # Safety
/// `scale` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ifra_scale_free(scale: *mut IfraScale) {
    if !scale.is_null() {
        drop(Box::from_raw(scale));
    }
}

/// Stratify one subject with a scale. Writes 0/1/2 (low/medium/high) to
/// `out_stratum`.
///
/// # Safety
/// Handles must be live; `subject_id` NUL-terminated; `out_stratum` valid.
#[no_mangle]
pub unsafe extern "C" fn ifra_assess_subject(
    dataset: *const IfraDataset,
    scale: *const IfraScale,
    subject_id: *const c_char,
    out_stratum: *mut i32,
) -> IfraStatus {
    if dataset.is_null() || scale.is_null() || out_stratum.is_null() {
        set_error("NULL argument".into());
        return IfraStatus::NullArgument;
    }
    let subject_id = match utf8_arg(subject_id) {
        Ok(s) => s,
        Err(s) => return s,
    };
    let dataset = &(*dataset).0;
    let scale = &(*scale).0;
    guarded(|| {
        let subject = dataset
            .subject(subject_id)
            .ok_or_else(|| Error::Dataset(format!("unknown subject_id: {subject_id}")))?;
        let assessment = assess(subject, scale)?;
        *out_stratum = assessment.stratum.index() as i32;
        Ok(IfraStatus::Ok)
    })
}

/// Evaluate a scale on one split (0/1/2, or 3 for all subjects). Writes
/// the exact-test p-value and, when `out_counts` is non-NULL, the 2 x 3
/// contingency counts row-major (non-fallers low/medium/high, then
/// fallers).
///
/// # Safety
/// Handles must be live; output pointers valid (`out_counts` NULL or
/// pointing at six u64 slots).
#[no_mangle]
pub unsafe extern "C" fn ifra_evaluate_scale(
    dataset: *const IfraDataset,
    scale: *const IfraScale,
    alpha: f64,
    split: i32,
    out_p_value: *mut f64,
    out_counts: *mut u64,
) -> IfraStatus {
    if dataset.is_null() || scale.is_null() || out_p_value.is_null() {
        set_error("NULL argument".into());
        return IfraStatus::NullArgument;
    }
    let split = match split_from(split) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let dataset = &(*dataset).0;
    let scale = &(*scale).0;
    guarded(|| {
        let subjects = match split {
            Some(s) => dataset.subjects_in(s),
            None => dataset.subjects().iter().collect(),
        };
        let report = evaluate_scale(&subjects, scale, alpha)?;
        *out_p_value = report.p_value;
        if !out_counts.is_null() {
            for (i, &c) in report.counts.iter().flatten().enumerate() {
                *out_counts.add(i) = c;
            }
        }
        Ok(IfraStatus::Ok)
    })
}

/// Run the feature-selection loop with default SVM settings and return
/// the report as a caller-owned JSON string.
///
/// # Safety
/// `dataset` must be a live handle; `out_report_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_run_selection(
    dataset: *const IfraDataset,
    iterations: usize,
    accuracy_gate: f64,
    alpha: f64,
    relevance_threshold: f64,
    seed: u64,
    out_report_json: *mut *mut c_char,
) -> IfraStatus {
    if dataset.is_null() || out_report_json.is_null() {
        set_error("NULL argument".into());
        return IfraStatus::NullArgument;
    }
    let dataset = &(*dataset).0;
    guarded(|| {
        let config = SelectionConfig {
            iterations,
            accuracy_gate,
            alpha,
            relevance_fraction: relevance_threshold,
            seed,
            ..SelectionConfig::default()
        };
        let report = run_selection(dataset, &SvmConfig::default(), &config)?;
        *out_report_json = give_string(serde_json::to_string(&report).map_err(Error::from)?);
        Ok(IfraStatus::Ok)
    })
}

/// Derive tertile thresholds from the dataset's training split for the
/// features selected in `report_json` (the output of
/// [`ifra_run_selection`]).
///
/// # Safety
/// `dataset` must be a live handle; `report_json` and `name`
/// NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ifra_derive_scale(
    dataset: *const IfraDataset,
    report_json: *const c_char,
    name: *const c_char,
    out: *mut *mut IfraScale,
) -> IfraStatus {
    if dataset.is_null() || out.is_null() {
        set_error("NULL argument".into());
        return IfraStatus::NullArgument;
    }
    let report_json = match utf8_arg(report_json) {
        Ok(s) => s,
        Err(s) => return s,
    };
    let name = match utf8_arg(name) {
        Ok(s) => s,
        Err(s) => return s,
    };
    let dataset = &(*dataset).0;
    guarded(|| {
        let report: SelectionReport = serde_json::from_str(report_json).map_err(Error::from)?;
        let train = dataset.subjects_in(Split::Train);
        let derivation = derive_scale(&train, &report, dataset.catalog(), name)?;
        *out = Box::into_raw(Box::new(IfraScale(derivation.scale)));
        Ok(IfraStatus::Ok)
    })
}
