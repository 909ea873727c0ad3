//! C ABI over gedkit. Every entry point returns a [`GedStatus`]; on failure
//! the message is available from [`ged_last_error_message`] on the same
//! thread. Strings handed out by the library must be released with
//! [`ged_string_free`], models with [`ged_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gedkit::baseline::{predict, train, LinearModel};
use gedkit::corpus::{parse_conllu, LabelScheme, LabeledSentence, SchemeKind};
use gedkit::eval::{compute_prf, score};
use gedkit::feedback::{annotate, write_annotations, TemplateSet};
use gedkit::inject::Injector;
use gedkit::record::{read_labeled, serialize_labeled, serialize_outcomes};
use gedkit::GedError;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed CoNLL-U, JSON or JSON-lines input.
    Parse = 3,
    /// Well-formed input that violates a precondition.
    Contract = 4,
    Io = 5,
    Internal = 6,
}

/// Trained detector. Opaque to C.
pub struct GedModel {
    inner: LinearModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GedStatus, String);

impl From<GedError> for Failure {
    fn from(e: GedError) -> Self {
        let status = match e {
            GedError::Io(_) => GedStatus::Io,
            GedError::Json(_) | GedError::Csv(_) | GedError::Format { .. } => GedStatus::Parse,
            _ => GedStatus::Contract,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure and converts panics to `Internal`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GedStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GedStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GedStatus::Internal
        }
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(GedStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(GedStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// # Safety
/// `out` must be null or valid for a pointer write.
unsafe fn hand_out(out: *mut *mut c_char, bytes: Vec<u8>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(GedStatus::NullPointer, "output pointer is null".into()));
    }
    let s = CString::new(bytes).map_err(|_| Failure(GedStatus::Internal, "output contains NUL".into()))?;
    *out = s.into_raw();
    Ok(())
}

fn scheme_from(name: Option<&str>) -> Result<Option<SchemeKind>, Failure> {
    name.map(|n| n.parse().map_err(Failure::from)).transpose()
}

/// Reads labeled JSON-lines under `kind`, or under whichever scheme fits.
fn labeled(jsonl: &str, kind: Option<SchemeKind>) -> Result<Vec<LabeledSentence>, Failure> {
    let read = |k| read_labeled(jsonl.as_bytes(), &LabelScheme::of_kind(k));
    Ok(match kind {
        Some(k) => read(k)?,
        None => read(SchemeKind::Typed).or_else(|_| read(SchemeKind::Binary))?,
    })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ged_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn ged_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Injects errors into a CoNLL-U document and writes the outcomes as
/// JSON-lines to `*out_jsonl`.
///
/// # Safety
/// `conllu` must be a NUL-terminated string; `out_jsonl` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ged_inject_conllu(conllu: *const c_char, seed: u64, out_jsonl: *mut *mut c_char) -> GedStatus {
    guard(|| {
        let doc = parse_conllu(text(conllu, "conllu")?.as_bytes(), "ffi")?;
        let generation = Injector::default().generate(&doc.sentences, seed)?;
        let mut buf = Vec::new();
        serialize_outcomes(&generation.outcomes, &mut buf)?;
        hand_out(out_jsonl, buf)
    })
}

/// Trains the baseline on labeled JSON-lines. `scheme` is "binary",
/// "typed", or null for typed.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out_model` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ged_model_train_jsonl(
    jsonl: *const c_char,
    scheme: *const c_char,
    epochs: u32,
    seed: u64,
    out_model: *mut *mut GedModel,
) -> GedStatus {
    guard(|| {
        if out_model.is_null() {
            return Err(Failure(GedStatus::NullPointer, "output pointer is null".into()));
        }
        let kind = scheme_from(if scheme.is_null() {
            None
        } else {
            Some(text(scheme, "scheme")?)
        })?;
        let data = labeled(text(jsonl, "jsonl")?, Some(kind.unwrap_or(SchemeKind::Typed)))?;
        let inner = train(&data, epochs as usize, seed)?;
        *out_model = Box::into_raw(Box::new(GedModel { inner }));
        Ok(())
    })
}

/// Loads a model from its JSON text.
///
/// # Safety
/// `json` must be NUL-terminated; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ged_model_load(json: *const c_char, out_model: *mut *mut GedModel) -> GedStatus {
    guard(|| {
        if out_model.is_null() {
            return Err(Failure(GedStatus::NullPointer, "output pointer is null".into()));
        }
        let inner: LinearModel = serde_json::from_str(text(json, "json")?).map_err(GedError::from)?;
        *out_model = Box::into_raw(Box::new(GedModel { inner }));
        Ok(())
    })
}

/// Serialises a model to JSON.
///
/// # Safety
/// `model` must come from this library; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ged_model_save(model: *const GedModel, out_json: *mut *mut c_char) -> GedStatus {
    guard(|| {
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(GedStatus::NullPointer, "model is null".into()))?;
        hand_out(out_json, serde_json::to_vec(&model.inner).map_err(GedError::from)?)
    })
}

/// # Safety
/// `model` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ged_model_free(model: *mut GedModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Labels every sentence of a JSON-lines file; the output uses the model's
/// scheme and keeps input ids and order.
///
/// # Safety
/// `model` must come from this library; `jsonl` must be NUL-terminated;
/// `out_jsonl` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ged_model_predict_jsonl(
    model: *const GedModel,
    jsonl: *const c_char,
    out_jsonl: *mut *mut c_char,
) -> GedStatus {
    guard(|| {
        let model = &model
            .as_ref()
            .ok_or_else(|| Failure(GedStatus::NullPointer, "model is null".into()))?
            .inner;
        let input = labeled(text(jsonl, "jsonl")?, Some(model.scheme.kind()))?;
        let predictions: Vec<_> = input.iter().map(|s| predict(model, &s.sentence)).collect();
        let mut buf = Vec::new();
        serialize_labeled(&predictions, &mut buf)?;
        hand_out(out_jsonl, buf)
    })
}

/// Scores predictions against gold and writes the metrics report as JSON.
/// `scheme` may be null to use the gold file's scheme.
///
/// # Safety
/// String arguments must be null (scheme only) or NUL-terminated;
/// `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ged_score_jsonl(
    pred: *const c_char,
    gold: *const c_char,
    scheme: *const c_char,
    out_report: *mut *mut c_char,
) -> GedStatus {
    guard(|| {
        let kind = scheme_from(if scheme.is_null() {
            None
        } else {
            Some(text(scheme, "scheme")?)
        })?;
        let gold = labeled(text(gold, "gold")?, kind)?;
        let kind = kind.or_else(|| gold.first().map(|s| s.scheme.kind()));
        let pred = labeled(text(pred, "pred")?, kind)?;
        let gold = match kind {
            Some(k) if gold.first().is_some_and(|s| s.scheme.kind() != k) => gold
                .iter()
                .map(|s| s.with_scheme(&LabelScheme::of_kind(k)))
                .collect::<Result<_, _>>()?,
            _ => gold,
        };
        let report = compute_prf(&score(&pred, &gold)?);
        hand_out(out_report, serde_json::to_vec(&report).map_err(GedError::from)?)
    })
}

/// Feedback comments for typed predictions. `templates_json` may be null
/// for the built-in templates.
///
/// # Safety
/// String arguments must be null (templates only) or NUL-terminated;
/// `out_jsonl` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ged_feedback_jsonl(
    pred: *const c_char,
    templates_json: *const c_char,
    out_jsonl: *mut *mut c_char,
) -> GedStatus {
    guard(|| {
        let templates = if templates_json.is_null() {
            TemplateSet::default()
        } else {
            TemplateSet::from_json(text(templates_json, "templates")?.as_bytes())?
        };
        let detections = labeled(text(pred, "pred")?, Some(SchemeKind::Typed))?;
        let mut buf = Vec::new();
        write_annotations(&annotate(&detections, &templates)?, &mut buf)?;
        hand_out(out_jsonl, buf)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ged_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
