//! C ABI over styloforge.
//!
//! Every fallible call returns an [`SfStatus`]; on failure the message is
//! available from [`sf_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings are
//! UTF-8 and NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use styloforge::attribution::{extract_char_ngrams, Attributor};
use styloforge::corpus::{segment_sentences, Document, DocumentSet, Provenance, Sentence};
use styloforge::generator::{generate_seeded_sentence, Rejection, SeededGeneration, SentenceOutcome};
use styloforge::lm::{apply_temperature, perplexity, CharDistribution, GenParams, LanguageModel, Vocabulary};
use styloforge::nglm::NgramModel;
use styloforge::rnnlm::RnnlmModel;
use styloforge::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Numeric = 5,
    /// Generation produced no sentence (overlength, empty or unseen context).
    Rejected = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Failure = 9,
}

/// Opaque n-gram language model.
pub struct SfNglm {
    model: NgramModel,
}

/// Opaque LSTM language model.
pub struct SfRnnlm {
    model: RnnlmModel,
}

/// Opaque feature space plus linear classifier.
pub struct SfAttributor {
    inner: Attributor,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SfStatus, message: impl Into<String>) -> SfStatus {
    set_error(message);
    status
}

fn from_error(err: Error) -> SfStatus {
    let status = match &err {
        Error::Io { .. } | Error::NoAuthors(_) | Error::MissingArtifact { .. } => SfStatus::Io,
        Error::Format { .. } | Error::Json(_) => SfStatus::Format,
        Error::Numeric(_) | Error::RankDeficient { .. } => SfStatus::Numeric,
        Error::UnseenContext(_) => SfStatus::Rejected,
        Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::EmptyInput(_)
        | Error::SingleClass(_)
        | Error::UnknownAuthor(_)
        | Error::TooFewDocuments { .. }
        | Error::PoolTooSmall { .. }
        | Error::RosterMismatch(_)
        | Error::Leakage(_) => SfStatus::InvalidArgument,
        _ => SfStatus::Failure,
    };
    fail(status, err.to_string())
}

/// Run `body`, turning errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), SfStatus>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SfStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(SfStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, SfStatus>;
}

impl<T> OrStatus<T> for styloforge::Result<T> {
    fn or_status(self) -> Result<T, SfStatus> {
        self.map_err(from_error)
    }
}

unsafe fn string_arg(p: *const c_char, name: &str) -> Result<String, SfStatus> {
    if p.is_null() {
        return Err(fail(SfStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_string)
        .map_err(|_| fail(SfStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn string_array(p: *const *const c_char, n: usize, name: &str) -> Result<Vec<String>, SfStatus> {
    if n == 0 {
        return Err(fail(SfStatus::InvalidArgument, format!("{name} is empty")));
    }
    if p.is_null() {
        return Err(fail(SfStatus::NullPointer, format!("{name} is null")));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .enumerate()
        .map(|(i, s)| string_arg(*s, &format!("{name}[{i}]")))
        .collect()
}

unsafe fn out_ptr<T>(p: *mut T, name: &str) -> Result<&'static mut T, SfStatus> {
    p.as_mut().ok_or_else(|| fail(SfStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SfStatus> {
    p.as_ref().ok_or_else(|| fail(SfStatus::NullPointer, "handle is null"))
}

/// Copy `text` plus a NUL into `buf`. `out_len` receives the byte length
/// without the NUL, also when the buffer is too small.
unsafe fn write_string(text: &str, buf: *mut c_char, buf_len: usize, out_len: *mut usize) -> Result<(), SfStatus> {
    *out_ptr(out_len, "out_len")? = text.len();
    if buf.is_null() || buf_len < text.len() + 1 {
        return Err(fail(
            SfStatus::BufferTooSmall,
            format!("buffer of {buf_len} bytes, {} needed", text.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

fn to_sentences(texts: &[String]) -> Vec<Sentence> {
    texts.iter().map(|t| Sentence::new(t.trim())).collect()
}

/// NUL-terminated library version; never freed.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on this thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Temperature transform of a probability vector into `out` (same length).
///
/// # Safety
/// `probs` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_apply_temperature(probs: *const f64, len: usize, temperature: f64, out: *mut f64) -> SfStatus {
    guard(|| {
        if probs.is_null() || out.is_null() {
            return Err(fail(SfStatus::NullPointer, "probs or out is null"));
        }
        let dist = CharDistribution::new(std::slice::from_raw_parts(probs, len).to_vec()).or_status()?;
        let result = apply_temperature(&dist, temperature).or_status()?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&result.probs);
        Ok(())
    })
}

fn generate<M: SeededGeneration>(
    model: &M,
    seed_text: &str,
    temperature: f64,
    max_chars: usize,
    rng_seed: u64,
) -> Result<String, SfStatus> {
    let params = GenParams {
        temperature,
        seed_reset: 1,
        max_chars,
    };
    let mut rng = styloforge::seeding::rng(rng_seed);
    match generate_seeded_sentence(model, seed_text, &params, &mut rng).or_status()? {
        SentenceOutcome::Accepted(s) => Ok(s.text),
        SentenceOutcome::Rejected(r) => Err(fail(
            SfStatus::Rejected,
            match r {
                Rejection::Overlength { chars } => format!("no end of sentence within {chars} characters"),
                Rejection::Empty => "empty sentence".to_string(),
                Rejection::UnseenContext(c) => format!("unseen context {c:?}"),
            },
        )),
    }
}

fn model_perplexity<M: LanguageModel>(model: &M, texts: &[String]) -> Result<f64, SfStatus> {
    perplexity(model, &to_sentences(texts)).or_status()
}

/// Fit an unsmoothed n-gram model on `n` sentences.
///
/// # Safety
/// `sentences` must point to `n` NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_fit(sentences: *const *const c_char, n: usize, order: usize, out: *mut *mut SfNglm) -> SfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let texts = string_array(sentences, n, "sentences")?;
        let s = to_sentences(&texts);
        let vocab = Vocabulary::build(&s, 1).or_status()?;
        let model = NgramModel::fit(&s, vocab, order).or_status()?;
        *out = Box::into_raw(Box::new(SfNglm { model }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_load(path: *const c_char, out: *mut *mut SfNglm) -> SfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = PathBuf::from(string_arg(path, "path")?);
        let model = NgramModel::load(&path).or_status()?;
        *out = Box::into_raw(Box::new(SfNglm { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_save(model: *const SfNglm, path: *const c_char) -> SfStatus {
    guard(|| {
        let model = handle(model)?;
        model.model.save(&PathBuf::from(string_arg(path, "path")?)).or_status()
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_free(model: *mut SfNglm) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_vocab_size(model: *const SfNglm, out: *mut usize) -> SfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(model)?.model.vocab().size();
        Ok(())
    })
}

/// Per-character perplexity of `n` sentences.
///
/// # Safety
/// `model` must be a live handle, `sentences` must point to `n` strings and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_perplexity(
    model: *const SfNglm,
    sentences: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        let model = handle(model)?;
        let out = out_ptr(out, "out")?;
        *out = model_perplexity(&model.model, &string_array(sentences, n, "sentences")?)?;
        Ok(())
    })
}

/// Sample one sentence started from the seed sentence `seed_text`, as the
/// first sentence of a synthetic document would be.
///
/// # Safety
/// `model` must be a live handle, `seed_text` a NUL-terminated string, `buf`
/// writable for `buf_len` bytes and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_nglm_generate(
    model: *const SfNglm,
    seed_text: *const c_char,
    temperature: f64,
    max_chars: usize,
    rng_seed: u64,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> SfStatus {
    guard(|| {
        let model = handle(model)?;
        let text = generate(&model.model, &string_arg(seed_text, "seed_text")?, temperature, max_chars, rng_seed)?;
        write_string(&text, buf, buf_len, out_len)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_rnnlm_load(path: *const c_char, out: *mut *mut SfRnnlm) -> SfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = PathBuf::from(string_arg(path, "path")?);
        let model = RnnlmModel::load(&path).or_status()?;
        *out = Box::into_raw(Box::new(SfRnnlm { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_rnnlm_free(model: *mut SfRnnlm) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_rnnlm_vocab_size(model: *const SfRnnlm, out: *mut usize) -> SfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(model)?.model.vocab().size();
        Ok(())
    })
}

/// # Safety
/// As for [`sf_nglm_perplexity`].
#[no_mangle]
pub unsafe extern "C" fn sf_rnnlm_perplexity(
    model: *const SfRnnlm,
    sentences: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        let model = handle(model)?;
        let out = out_ptr(out, "out")?;
        *out = model_perplexity(&model.model, &string_array(sentences, n, "sentences")?)?;
        Ok(())
    })
}

/// # Safety
/// As for [`sf_nglm_generate`].
#[no_mangle]
pub unsafe extern "C" fn sf_rnnlm_generate(
    model: *const SfRnnlm,
    seed_text: *const c_char,
    temperature: f64,
    max_chars: usize,
    rng_seed: u64,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> SfStatus {
    guard(|| {
        let model = handle(model)?;
        let text = generate(&model.model, &string_arg(seed_text, "seed_text")?, temperature, max_chars, rng_seed)?;
        write_string(&text, buf, buf_len, out_len)
    })
}

fn document(author: &str, text: &str) -> Document {
    Document::new(author, Provenance::RealAlpha, segment_sentences(text))
}

/// Train on `n` labeled documents with a fixed feature size and C.
///
/// # Safety
/// `texts` and `labels` must each point to `n` strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_attributor_fit(
    texts: *const *const c_char,
    labels: *const *const c_char,
    n: usize,
    max_features: usize,
    c: f64,
    seed: u64,
    out: *mut *mut SfAttributor,
) -> SfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let texts = string_array(texts, n, "texts")?;
        let labels = string_array(labels, n, "labels")?;
        let docs = DocumentSet::new(texts.iter().zip(&labels).map(|(t, l)| document(l, t)).collect());
        let inner = Attributor::fit(&docs, max_features, c, seed).or_status()?;
        *out = Box::into_raw(Box::new(SfAttributor { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_attributor_load(path: *const c_char, out: *mut *mut SfAttributor) -> SfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = PathBuf::from(string_arg(path, "path")?);
        let inner: Attributor = styloforge::io::read_json(&path).or_status()?;
        *out = Box::into_raw(Box::new(SfAttributor { inner }));
        Ok(())
    })
}

/// # Safety
/// `attributor` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sf_attributor_save(attributor: *const SfAttributor, path: *const c_char) -> SfStatus {
    guard(|| {
        let a = handle(attributor)?;
        styloforge::io::write_json(&PathBuf::from(string_arg(path, "path")?), &a.inner).or_status()
    })
}

/// # Safety
/// `attributor` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_attributor_free(attributor: *mut SfAttributor) {
    if !attributor.is_null() {
        drop(Box::from_raw(attributor));
    }
}

/// # Safety
/// `attributor` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_attributor_class_count(attributor: *const SfAttributor, out: *mut usize) -> SfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(attributor)?.inner.model.classes.len();
        Ok(())
    })
}

/// Predicted author of `text`, written into `buf`.
///
/// # Safety
/// `attributor` must be a live handle, `text` a NUL-terminated string, `buf`
/// writable for `buf_len` bytes and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_attributor_predict(
    attributor: *const SfAttributor,
    text: *const c_char,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> SfStatus {
    guard(|| {
        let a = handle(attributor)?;
        let doc = document("", &string_arg(text, "text")?);
        let author = a.inner.predict_counts(&extract_char_ngrams(&doc)).to_string();
        write_string(&author, buf, buf_len, out_len)
    })
}
