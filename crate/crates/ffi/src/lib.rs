//! C ABI over the experiment harness.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns an
//! [`IgpStatus`] and leaves a message for [`igp_last_error`] on failure.
//! Strings handed out by the library are NUL-terminated and must be
//! released with [`igp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use islandgp::apps::{feed, localisation};
use islandgp::harness::{compare_runs, run_experiment, ConfigFile, Dataset, ExperimentConfig, HarnessError};
use islandgp::program::{deserialize, serialize, PrimitiveSet};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IgpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Parse = 4,
    RunFailed = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IgpApp {
    Feed = 0,
    Localisation = 1,
}

/// One CSV row of a dataset.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IgpRow {
    pub iteration: usize,
    pub generation: u64,
    pub island: usize,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    pub mean_size: f64,
    pub mean_depth: f64,
    pub immigrants_admitted: usize,
    pub emigrants_sent: usize,
    pub helper_rejections: usize,
}

/// Generations at which the mean max-fitness curve first reaches the
/// threshold; the `has_*` flags are false when it never does.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IgpComparison {
    pub threshold: f64,
    pub has_baseline: bool,
    pub baseline: u64,
    pub has_treatment: bool,
    pub treatment: u64,
    pub has_improvement: bool,
    pub improvement: f64,
}

/// Experiment configuration handle.
pub struct IgpConfig(ExperimentConfig);

/// Result of a run.
pub struct IgpDataset(Dataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: IgpStatus, msg: impl Into<String>) -> IgpStatus {
    set_error(msg);
    status
}

fn harness_status(e: &HarnessError) -> IgpStatus {
    match e {
        HarnessError::Config(_) => IgpStatus::InvalidConfig,
        _ => IgpStatus::RunFailed,
    }
}

/// Runs `body`, turning a panic into `IgpStatus::Panic`.
fn guard(body: impl FnOnce() -> IgpStatus) -> IgpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| fail(IgpStatus::Panic, "internal panic"))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, IgpStatus> {
    if s.is_null() {
        return Err(fail(IgpStatus::NullArgument, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(IgpStatus::InvalidUtf8, "string is not UTF-8"))
}

fn hand_out(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message describing the last failure on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn igp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn igp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn igp_feed_fitness(displayed: usize, desired_qty: usize, clicked: usize) -> f64 {
    feed::feed_fitness(displayed, desired_qty, clicked)
}

/// Accuracy score of a position `distance` metres from the reference whose
/// accuracy radius is `radius`.
#[no_mangle]
pub extern "C" fn igp_accuracy_fitness(distance: f64, radius: f64) -> f64 {
    localisation::accuracy_fitness(Some((distance, 0.0)), (0.0, 0.0), radius)
}

/// Energy score of a mean draw against a budget current, both in mA.
#[no_mangle]
pub extern "C" fn igp_energy_fitness(power_ma: f64, budget_ma: f64) -> f64 {
    let budget = localisation::EnergyBudget {
        budget_ma,
        ..localisation::EnergyBudget::default()
    };
    localisation::energy_fitness(power_ma, &budget)
}

fn primitives(app: IgpApp) -> PrimitiveSet {
    match app {
        IgpApp::Feed => feed::primitive_set(&feed::FeedCatalog::default()),
        IgpApp::Localisation => localisation::primitive_set(),
    }
}

/// Parses and validates a program for `app`'s default primitives and writes
/// its canonical text to `*canonical` (free with `igp_string_free`).
///
/// # Safety
/// `program` must be a NUL-terminated string; `canonical` must be writable.
#[no_mangle]
pub unsafe extern "C" fn igp_program_canonical(
    app: IgpApp,
    program: *const c_char,
    canonical: *mut *mut c_char,
) -> IgpStatus {
    guard(|| {
        if canonical.is_null() {
            return fail(IgpStatus::NullArgument, "null output pointer");
        }
        let src = match text(program) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match deserialize(src, &primitives(app)) {
            Ok(tree) => {
                *canonical = hand_out(serialize(&tree));
                IgpStatus::Ok
            }
            Err(e) => fail(IgpStatus::Parse, e.to_string()),
        }
    })
}

/// A configuration holding the defaults.
#[no_mangle]
pub extern "C" fn igp_config_new() -> *mut IgpConfig {
    Box::into_raw(Box::new(IgpConfig(ExperimentConfig::default())))
}

/// Overlays TOML settings (the CLI's `--config` format) onto `config`.
/// Relative file paths resolve against the working directory. On error the
/// configuration is left unchanged.
///
/// # Safety
/// `config` must come from `igp_config_new`; `toml` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn igp_config_apply_toml(config: *mut IgpConfig, toml: *const c_char) -> IgpStatus {
    guard(|| {
        let Some(cfg) = config.as_mut() else {
            return fail(IgpStatus::NullArgument, "null config");
        };
        let src = match text(toml) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let mut next = cfg.0.clone();
        let applied = ConfigFile::from_toml(src).and_then(|file| file.apply(&mut next));
        match applied.and_then(|()| next.validate()) {
            Ok(()) => {
                cfg.0 = next;
                IgpStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `config` must be NULL or come from `igp_config_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn igp_config_free(config: *mut IgpConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the experiment and stores a new dataset in `*out`.
///
/// # Safety
/// `config` must come from `igp_config_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn igp_run(config: *const IgpConfig, out: *mut *mut IgpDataset) -> IgpStatus {
    guard(|| {
        let (Some(cfg), false) = (config.as_ref(), out.is_null()) else {
            return fail(IgpStatus::NullArgument, "null config or output pointer");
        };
        match run_experiment(&cfg.0) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(IgpDataset(ds)));
                IgpStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// Number of rows, 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn igp_dataset_len(dataset: *const IgpDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.rows.len())
}

/// # Safety
/// `dataset` must be a live dataset handle; `row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn igp_dataset_row(dataset: *const IgpDataset, index: usize, row: *mut IgpRow) -> IgpStatus {
    guard(|| {
        let (Some(ds), false) = (dataset.as_ref(), row.is_null()) else {
            return fail(IgpStatus::NullArgument, "null dataset or row pointer");
        };
        let Some(r) = ds.0.rows.get(index) else {
            return fail(IgpStatus::OutOfRange, format!("row {index} of {}", ds.0.rows.len()));
        };
        *row = IgpRow {
            iteration: r.iteration,
            generation: r.generation,
            island: r.island,
            max_fitness: r.max_fitness,
            mean_fitness: r.mean_fitness,
            mean_size: r.mean_size,
            mean_depth: r.mean_depth,
            immigrants_admitted: r.immigrants_admitted,
            emigrants_sent: r.emigrants_sent,
            helper_rejections: r.helper_rejections,
        };
        IgpStatus::Ok
    })
}

/// The dataset as CSV text (free with `igp_string_free`).
///
/// # Safety
/// `dataset` must be a live dataset handle; `csv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn igp_dataset_csv(dataset: *const IgpDataset, csv: *mut *mut c_char) -> IgpStatus {
    guard(|| {
        let (Some(ds), false) = (dataset.as_ref(), csv.is_null()) else {
            return fail(IgpStatus::NullArgument, "null dataset or output pointer");
        };
        match ds.0.to_csv().map(String::from_utf8) {
            Ok(Ok(text)) => {
                *csv = hand_out(text);
                IgpStatus::Ok
            }
            Ok(Err(e)) => fail(IgpStatus::RunFailed, e.to_string()),
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// Generations-to-threshold of two datasets.
///
/// # Safety
/// Both datasets must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn igp_compare(
    baseline: *const IgpDataset,
    treatment: *const IgpDataset,
    threshold: f64,
    out: *mut IgpComparison,
) -> IgpStatus {
    guard(|| {
        let (Some(b), Some(t), false) = (baseline.as_ref(), treatment.as_ref(), out.is_null()) else {
            return fail(IgpStatus::NullArgument, "null dataset or output pointer");
        };
        match compare_runs(&b.0.rows, &t.0.rows, threshold) {
            Ok(c) => {
                *out = IgpComparison {
                    threshold: c.threshold,
                    has_baseline: c.baseline.is_some(),
                    baseline: c.baseline.unwrap_or(0),
                    has_treatment: c.treatment.is_some(),
                    treatment: c.treatment.unwrap_or(0),
                    has_improvement: c.improvement.is_some(),
                    improvement: c.improvement.unwrap_or(0.0),
                };
                IgpStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `dataset` must be NULL or a dataset handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn igp_dataset_free(dataset: *mut IgpDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}
