//! C ABI over the ctxdecomp library.
//!
//! Every function returns a [`CdStatus`]. On failure a message is kept per
//! thread and can be read with [`cd_last_error`]. Strings handed out through
//! `out` parameters are owned by the caller and released with
//! [`cd_string_free`]. Structured results are JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ctxdecomp::asmnorm::{canonicalize_source, normalize_asm_text};
use ctxdecomp::context::{build_rule_prompt, RuleRegistry};
use ctxdecomp::corpus::{FunctionTag, TagSet};
use ctxdecomp::harness::ExecStatus;
use ctxdecomp::index::embed::embed;
use ctxdecomp::index::{Index, Query, RetrievalConfig, RetrievalMode};
use ctxdecomp::orchestrator::embedder_for;
use ctxdecomp::triage::Classifier;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Input rejected by the library: malformed assembly, unknown flag, ...
    InvalidInput = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

/// Opaque retrieval index.
pub struct CdIndex {
    inner: Index,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CdStatus, String);

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure(CdStatus::InvalidInput, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            CdStatus::Internal
        }
    }
}

unsafe fn arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CdStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CdStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        arg(p, name).map(Some)
    }
}

unsafe fn put(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(CdStatus::Internal, "result contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(CdStatus::NullArgument, "out is null".into()));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn cd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalizes one function's assembly. `out` receives
/// `{"func_name", "body", "placeholder_map"}`.
///
/// # Safety
/// `asm_text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_normalize_asm(asm_text: *const c_char, out: *mut *mut c_char) -> CdStatus {
    guard(|| {
        check_out(out)?;
        let text = arg(asm_text, "asm_text")?;
        let norm = normalize_asm_text(text).map_err(Failure::input)?;
        put(out, serde_json::to_string(&norm).map_err(Failure::input)?)
    })
}

/// Canonical form of a single-function C source. `out` receives
/// `{"func_name", "body", "original_name"}`.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_canonicalize_source(src: *const c_char, out: *mut *mut c_char) -> CdStatus {
    guard(|| {
        check_out(out)?;
        let canon = canonicalize_source(arg(src, "src")?).map_err(Failure::input)?;
        put(out, serde_json::to_string(&canon).map_err(Failure::input)?)
    })
}

/// Classifies a failed outcome with the built-in patterns. `status` is one
/// of `pass`, `compile_fail`, `run_fail`, `output_mismatch`,
/// `compile_timeout`, `run_timeout`. `out` receives
/// `{"category", "pattern"}`, or `null` for `pass`.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_classify_stderr(
    stderr_text: *const c_char,
    status: *const c_char,
    out: *mut *mut c_char,
) -> CdStatus {
    guard(|| {
        check_out(out)?;
        let stderr = arg(stderr_text, "stderr_text")?;
        let status: ExecStatus = arg(status, "status")?.parse().map_err(Failure::input)?;
        let json = match Classifier::default().classify(stderr, status) {
            None => serde_json::Value::Null,
            Some((cat, pattern)) => serde_json::json!({ "category": cat.key(), "pattern": pattern }),
        };
        put(out, json.to_string())
    })
}

/// Loads an index file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_index_load(path: *const c_char, out: *mut *mut CdIndex) -> CdStatus {
    guard(|| {
        check_out(out)?;
        let path = arg(path, "path")?;
        let inner = Index::load(Path::new(path)).map_err(|e| {
            let code = match e {
                ctxdecomp::index::IndexError::IoFailure { .. } => CdStatus::Io,
                _ => CdStatus::InvalidInput,
            };
            Failure(code, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(CdIndex { inner }));
        Ok(())
    })
}

/// # Safety
/// `index` must be NULL or a handle from [`cd_index_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cd_index_free(index: *mut CdIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of entries; 0 for NULL.
///
/// # Safety
/// `index` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cd_index_len(index: *const CdIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.len())
}

/// Top-`k` exemplars for raw target assembly. `tags` is a comma-separated
/// tag list or NULL. `service_url` names the embedding service when the
/// index was not built with the built-in embedder. `out` receives a JSON
/// array of `{"pair_id", "raw_csls", "adjusted", "category_match"}`.
///
/// # Safety
/// `index` must be a live handle; string arguments must be NUL-terminated
/// or, where allowed, NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_index_retrieve(
    index: *const CdIndex,
    asm_text: *const c_char,
    tags: *const c_char,
    k: usize,
    alpha: f64,
    service_url: *const c_char,
    out: *mut *mut c_char,
) -> CdStatus {
    guard(|| {
        check_out(out)?;
        let index = &index
            .as_ref()
            .ok_or_else(|| Failure(CdStatus::NullArgument, "index is null".into()))?
            .inner;
        let asm = normalize_asm_text(arg(asm_text, "asm_text")?).map_err(Failure::input)?;
        let tags: TagSet = match opt_arg(tags, "tags")? {
            None => TagSet::new(),
            Some(s) => s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.parse::<FunctionTag>())
                .collect::<Result<_, _>>()
                .map_err(Failure::input)?,
        };
        let embedder = embedder_for(index, opt_arg(service_url, "service_url")?).map_err(Failure::input)?;
        let vector = embed(&asm, embedder.as_ref()).map_err(Failure::input)?;
        let cfg = RetrievalConfig {
            k,
            alpha,
            csls_neighborhood: index.neighborhood(),
        };
        let query = Query {
            vector: &vector,
            tags: &tags,
            self_id: None,
        };
        let picks = index.retrieve_topk(&query, &cfg, RetrievalMode::Similar, 0).map_err(Failure::input)?;
        put(out, serde_json::to_string(&picks).map_err(Failure::input)?)
    })
}

/// Renders the rule prompt for a built-in flag over raw target assembly.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_render_rule_prompt(
    flag: *const c_char,
    asm_text: *const c_char,
    token_cap: usize,
    out: *mut *mut c_char,
) -> CdStatus {
    guard(|| {
        check_out(out)?;
        let flag = arg(flag, "flag")?;
        let asm = normalize_asm_text(arg(asm_text, "asm_text")?).map_err(Failure::input)?;
        let registry = RuleRegistry::builtin();
        let rule = registry
            .get(flag)
            .ok_or_else(|| Failure::input(format!("no rule for flag {flag}")))?;
        let prompt = build_rule_prompt(&asm.body, rule, token_cap).map_err(Failure::input)?;
        put(out, prompt.text)
    })
}
