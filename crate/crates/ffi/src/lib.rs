//! C ABI over `kpa-core`.
//!
//! Conventions:
//! - every fallible function returns a [`KpaStatus`] and writes its result
//!   through an out-pointer, which is left untouched on failure;
//! - after a failure, [`kpa_last_error`] describes it (per thread);
//! - strings are UTF-8 and NUL-terminated; strings returned by the library
//!   are owned by the caller and released with [`kpa_string_free`];
//! - a [`KpaScorer`] is immutable once built and may be shared across
//!   threads.
//!
//! The JSON entry points take the same records the `kpa` tool reads and
//! writes, so one engine serves both.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use serde::Deserialize;

use kpa_core::config::SummaryConfig;
use kpa_core::corpus::{segment_sentences, Review};
use kpa_core::evaluate::cohen_kappa;
use kpa_core::mining::{extract_key_points, Candidate, Comment, KeyPoint};
use kpa_core::scoring::{LexicalScorer, ScoreCache, ScoreTable, Scorer, TableScorer};
use kpa_core::sentiment::{classify_sentence, SentimentLabel};
use kpa_core::summarize::{match_business, summarize_business};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A numeric argument was out of range.
    InvalidArgument = 3,
    /// A JSON argument did not parse or did not fit the expected shape.
    InvalidJson = 4,
    /// The scorer failed or does not support the request.
    Scorer = 5,
    /// Key point extraction rejected its input.
    Mining = 6,
    /// A bug: the library panicked. The call had no effect.
    Internal = 7,
}

/// Sentence sentiment label.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpaLabel {
    Neg = 0,
    Neut = 1,
    Pos = 2,
}

impl From<SentimentLabel> for KpaLabel {
    fn from(l: SentimentLabel) -> Self {
        match l {
            SentimentLabel::Neg => KpaLabel::Neg,
            SentimentLabel::Neut => KpaLabel::Neut,
            SentimentLabel::Pos => KpaLabel::Pos,
        }
    }
}

/// Opaque scorer handle.
pub struct KpaScorer {
    scorer: Scorer,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(KpaStatus, String);

type Outcome<T> = Result<T, Failure>;

fn fail<T>(status: KpaStatus, message: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, message.into()))
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, writing its value to `out` on success and recording the error
/// otherwise. Panics become [`KpaStatus::Internal`].
fn guard<T>(out: *mut T, f: impl FnOnce() -> Outcome<T>) -> KpaStatus {
    if out.is_null() {
        set_last_error("output pointer is null");
        return KpaStatus::NullArgument;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            // SAFETY: `out` is non-null and the caller guarantees it is writable.
            unsafe { out.write(v) };
            set_last_error("");
            KpaStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal error (panic)");
            KpaStatus::Internal
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return fail(KpaStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(KpaStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// # Safety
/// `p` is null or a pointer from one of the scorer constructors.
unsafe fn scorer_arg<'a>(p: *const KpaScorer) -> Outcome<&'a Scorer> {
    match p.as_ref() {
        Some(s) => Ok(&s.scorer),
        None => fail(KpaStatus::NullArgument, "scorer is null"),
    }
}

fn json_arg<'a, T: Deserialize<'a>>(s: &'a str, what: &str) -> Outcome<T> {
    serde_json::from_str(s).or_else(|e| fail(KpaStatus::InvalidJson, format!("{what}: {e}")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON output has no NULs").into_raw()
}

fn handle(backend: Arc<dyn kpa_core::scoring::ScorerBackend>) -> *mut KpaScorer {
    let scorer = Scorer::new(backend).with_cache(Arc::new(ScoreCache::new()));
    Box::into_raw(Box::new(KpaScorer { scorer }))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn kpa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn kpa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Term-overlap scorer; supports match scoring only.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_scorer_new_lexical(out: *mut *mut KpaScorer) -> KpaStatus {
    guard(out, || Ok(handle(Arc::new(LexicalScorer::new()))))
}

/// Lookup-table scorer from a score table document (the format of the
/// `--table` files).
///
/// # Safety
/// `table_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_scorer_new_table(table_json: *const c_char, out: *mut *mut KpaScorer) -> KpaStatus {
    guard(out, || {
        let table: ScoreTable = json_arg(str_arg(table_json, "table_json")?, "score table")?;
        Ok(handle(Arc::new(TableScorer::from_table(table))))
    })
}

/// Releases a scorer. Null is ignored.
///
/// # Safety
/// `scorer` must come from a constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kpa_scorer_free(scorer: *mut KpaScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kpa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Match score of `sentence` (comment role) against key point `kp`, in [0, 1].
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kpa_match_score(
    scorer: *const KpaScorer,
    sentence: *const c_char,
    kp: *const c_char,
    out: *mut f64,
) -> KpaStatus {
    guard(out, || {
        let s = scorer_arg(scorer)?;
        let (sentence, kp) = (str_arg(sentence, "sentence")?, str_arg(kp, "kp")?);
        s.match_score(sentence, kp)
            .map(|v| v.value())
            .or_else(|e| fail(KpaStatus::Scorer, e.to_string()))
    })
}

/// Sentence label at sentiment threshold `t_s`.
///
/// # Safety
/// Pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kpa_classify_sentence(
    scorer: *const KpaScorer,
    text: *const c_char,
    t_s: f64,
    out: *mut KpaLabel,
) -> KpaStatus {
    guard(out, || {
        let s = scorer_arg(scorer)?;
        let text = str_arg(text, "text")?;
        if !(0.0..=1.0).contains(&t_s) {
            return fail(KpaStatus::InvalidArgument, format!("t_s {t_s} outside [0, 1]"));
        }
        classify_sentence(s, t_s, text)
            .map(KpaLabel::from)
            .or_else(|e| fail(KpaStatus::Scorer, e.to_string()))
    })
}

/// Cohen's kappa of two binary label arrays of length `n` (nonzero = yes).
///
/// # Safety
/// `a` and `b` must each point to `n` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn kpa_cohen_kappa(a: *const u8, b: *const u8, n: usize, out: *mut f64) -> KpaStatus {
    guard(out, || {
        if a.is_null() || b.is_null() {
            return fail(KpaStatus::NullArgument, "label array is null");
        }
        let a: Vec<bool> = std::slice::from_raw_parts(a, n).iter().map(|&x| x != 0).collect();
        let b: Vec<bool> = std::slice::from_raw_parts(b, n).iter().map(|&x| x != 0).collect();
        cohen_kappa(&a, &b).or_else(|e| fail(KpaStatus::InvalidArgument, e.to_string()))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRequest {
    candidates: Vec<Candidate>,
    comments: Vec<Comment>,
    t_match: f64,
    k: usize,
}

/// Greedy key point extraction.
///
/// Request: `{"candidates": [{id, text, quality, kp_quality?, polarity?}],
/// "comments": [{id, text, polarity?}], "t_match": 0.99, "k": 70}`.
/// Response: `{key_points, mapping, removed, scan_order}`.
///
/// # Safety
/// Pointers must be valid; `request_json` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_extract_key_points_json(
    scorer: *const KpaScorer,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> KpaStatus {
    guard(out_json, || {
        let s = scorer_arg(scorer)?;
        let req: ExtractRequest = json_arg(str_arg(request_json, "request_json")?, "extraction request")?;
        let e = extract_key_points(&req.candidates, &req.comments, s, req.t_match, req.k)
            .or_else(|e| fail(KpaStatus::Mining, e.to_string()))?;
        Ok(owned_string(serde_json::to_string(&e).expect("extraction serializes")))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewInput {
    review_id: String,
    text: String,
    #[serde(default)]
    stars: u8,
}

fn default_t_match() -> f64 {
    SummaryConfig::default().t_match
}

fn default_top_k() -> usize {
    SummaryConfig::default().top_k
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SummarizeRequest {
    business_id: String,
    reviews: Vec<ReviewInput>,
    key_points: Vec<KeyPoint>,
    #[serde(default = "default_t_match")]
    t_match: f64,
    /// Absent or null: match without sentiment.
    #[serde(default)]
    t_s: Option<f64>,
    #[serde(default = "default_top_k")]
    top_k: usize,
}

/// Matches one business's reviews to key points and summarizes them.
///
/// Request: `{"business_id", "reviews": [{review_id, text, stars?}],
/// "key_points": [...], "t_match"?: 0.99, "t_s"?: 0.79, "top_k"?: 10}`.
/// Response: `{"summary": {...}, "matches": [...]}`.
///
/// # Safety
/// Pointers must be valid; `request_json` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_summarize_json(
    scorer: *const KpaScorer,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> KpaStatus {
    guard(out_json, || {
        let s = scorer_arg(scorer)?;
        let req: SummarizeRequest = json_arg(str_arg(request_json, "request_json")?, "summarize request")?;
        for (name, t) in [("t_match", Some(req.t_match)), ("t_s", req.t_s)] {
            if let Some(t) = t.filter(|t| !(0.0..=1.0).contains(t)) {
                return fail(KpaStatus::InvalidArgument, format!("{name} {t} outside [0, 1]"));
            }
        }
        let reviews: Vec<Review> = req
            .reviews
            .into_iter()
            .map(|r| Review {
                sentences: segment_sentences(&r.review_id, &r.text),
                review_id: r.review_id,
                business_id: req.business_id.clone(),
                stars: r.stars,
                text: r.text,
            })
            .collect();
        let refs: Vec<&Review> = reviews.iter().collect();
        let matches = match_business(&refs, &req.key_points, s, req.t_match, req.t_s)
            .or_else(|e| fail(KpaStatus::Scorer, e.to_string()))?;
        let summary = summarize_business(&req.business_id, &matches, &refs, &req.key_points, req.top_k);
        let body = serde_json::json!({"summary": summary, "matches": matches});
        Ok(owned_string(body.to_string()))
    })
}
