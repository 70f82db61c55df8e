//! C interface to the tokenization pipeline.
//!
//! Strings go in as NUL-terminated UTF-8. Structured results come back as
//! JSON text allocated here; release them with [`bite_string_free`]. Every
//! fallible call returns a [`BiteStatus`] and, on failure, leaves a message
//! for [`bite_last_error`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use bite::pipeline::{PerturbOptions, Pipeline, PipelineConfig};
use bite::{BiteMode, Error};

/// Loaded models. Immutable after load, so one handle may serve several
/// threads at once.
pub struct BitePipeline {
    inner: Pipeline,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiteStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Bad mode, options or settings.
    Config = 3,
    Io = 4,
    /// A model file is missing or unreadable.
    Model = 5,
    /// Input that cannot be processed, such as undecodable ids.
    Data = 6,
    Panic = 7,
}

struct Failure(BiteStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => BiteStatus::Config,
            Error::Path { .. } | Error::Io(_) => BiteStatus::Io,
            Error::Data(_) => BiteStatus::Data,
            Error::Model(_) => BiteStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BiteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BiteStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BiteStatus::Panic
        }
    }
}

unsafe fn arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(BiteStatus::NullArgument, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BiteStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn opt_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        arg(p, name).map(Some)
    }
}

unsafe fn handle<'a>(p: *const BitePipeline) -> Result<&'a Pipeline, Failure> {
    p.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| Failure(BiteStatus::NullArgument, "`pipeline` is NULL".into()))
}

fn mode_of(pipe: &Pipeline, mode: Option<&str>) -> Result<BiteMode, Failure> {
    match mode {
        None => Ok(pipe.mode),
        Some(m) => m.parse().map_err(|e: bite::bite::UnknownMode| Failure(BiteStatus::Config, e.to_string())),
    }
}

unsafe fn put_json<T: serde::Serialize>(out: *mut *mut c_char, value: &T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(BiteStatus::NullArgument, "`out` is NULL".into()));
    }
    let s = serde_json::to_string(value).expect("plain data serializes");
    *out = CString::new(s).expect("JSON has no NUL").into_raw();
    Ok(())
}

unsafe fn clear_out<T>(out: *mut *mut T) {
    if !out.is_null() {
        *out = ptr::null_mut();
    }
}

fn load(config: &PipelineConfig) -> Result<Pipeline, Failure> {
    let need_subword = config.subword_path().is_some_and(|p| p.exists());
    Ok(Pipeline::load(config, need_subword)?)
}

/// Loads `tagger.json` and, when present, `subword.json` from `model_dir`.
/// `mode` is `off`, `standard` or `ablated`; NULL means `standard`.
///
/// # Safety
/// `model_dir` and `mode` must be NULL or valid NUL-terminated strings;
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn bite_pipeline_load(
    model_dir: *const c_char,
    mode: *const c_char,
    out: *mut *mut BitePipeline,
) -> BiteStatus {
    clear_out(out);
    guard(|| {
        if out.is_null() {
            return Err(Failure(BiteStatus::NullArgument, "`out` is NULL".into()));
        }
        let dir = arg(model_dir, "model_dir")?;
        let bite_mode = match opt_arg(mode, "mode")? {
            None => BiteMode::default(),
            Some(m) => m.parse().map_err(|e: bite::bite::UnknownMode| Failure(BiteStatus::Config, e.to_string()))?,
        };
        let config = PipelineConfig {
            model_dir: Some(PathBuf::from(dir)),
            bite_mode,
            ..PipelineConfig::default()
        };
        *out = Box::into_raw(Box::new(BitePipeline { inner: load(&config)? }));
        Ok(())
    })
}

/// Loads models named by a TOML configuration file.
///
/// # Safety
/// As for [`bite_pipeline_load`].
#[no_mangle]
pub unsafe extern "C" fn bite_pipeline_load_config(path: *const c_char, out: *mut *mut BitePipeline) -> BiteStatus {
    clear_out(out);
    guard(|| {
        if out.is_null() {
            return Err(Failure(BiteStatus::NullArgument, "`out` is NULL".into()));
        }
        let config = PipelineConfig::from_toml_file(arg(path, "path")?.as_ref())?;
        *out = Box::into_raw(Box::new(BitePipeline { inner: load(&config)? }));
        Ok(())
    })
}

/// # Safety
/// `pipeline` must be NULL or a handle from a load call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bite_pipeline_free(pipeline: *mut BitePipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Encodes one line. `*out` receives `{"symbols": [...], "ids": [...]}`.
/// A NULL `mode` uses the mode given at load time.
///
/// # Safety
/// `pipeline` must be a live handle; `text` a valid string; `mode` NULL or
/// a valid string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bite_encode(
    pipeline: *const BitePipeline,
    text: *const c_char,
    mode: *const c_char,
    out: *mut *mut c_char,
) -> BiteStatus {
    clear_out(out);
    guard(|| {
        let pipe = handle(pipeline)?;
        let text = arg(text, "text")?;
        let mode = mode_of(pipe, opt_arg(mode, "mode")?)?;
        let enc = pipe.encode_line_as(text, mode)?;
        put_json(out, &serde_json::json!({ "symbols": enc.symbols, "ids": enc.ids }))
    })
}

/// Decodes a JSON array of ids. `*out` receives a JSON array of tokens.
///
/// # Safety
/// As for [`bite_encode`].
#[no_mangle]
pub unsafe extern "C" fn bite_decode(
    pipeline: *const BitePipeline,
    ids_json: *const c_char,
    mode: *const c_char,
    out: *mut *mut c_char,
) -> BiteStatus {
    clear_out(out);
    guard(|| {
        let pipe = handle(pipeline)?;
        let ids: Vec<u32> = serde_json::from_str(arg(ids_json, "ids_json")?)
            .map_err(|e| Failure(BiteStatus::Data, format!("ids_json: {e}")))?;
        let mode = mode_of(pipe, opt_arg(mode, "mode")?)?;
        put_json(out, &pipe.decode_ids_as(&ids, mode)?)
    })
}

/// Tags one line. `*out` receives `[{"surface": ..., "tag": ...}, ...]`.
///
/// # Safety
/// As for [`bite_encode`].
#[no_mangle]
pub unsafe extern "C" fn bite_tag(pipeline: *const BitePipeline, text: *const c_char, out: *mut *mut c_char) -> BiteStatus {
    clear_out(out);
    guard(|| {
        let pipe = handle(pipeline)?;
        put_json(out, &pipe.tag(arg(text, "text")?))
    })
}

/// Perturbs one line. `options_json` may set `strategy` (`greedy` or
/// `sample`), `k`, `seed`, `scorer` (`encoding-divergence` or `hamming`)
/// and `retag`; NULL takes every default. `*out` receives a JSON array of
/// `{clean, adversarial, score}` records.
///
/// # Safety
/// As for [`bite_encode`].
#[no_mangle]
pub unsafe extern "C" fn bite_perturb(
    pipeline: *const BitePipeline,
    text: *const c_char,
    options_json: *const c_char,
    out: *mut *mut c_char,
) -> BiteStatus {
    clear_out(out);
    guard(|| {
        let pipe = handle(pipeline)?;
        let text = arg(text, "text")?;
        let opts: PerturbOptions = match opt_arg(options_json, "options_json")? {
            None => PerturbOptions::default(),
            Some(j) => serde_json::from_str(j).map_err(|e| Failure(BiteStatus::Config, format!("options_json: {e}")))?,
        };
        put_json(out, &pipe.perturb(text, &opts)?)
    })
}

/// Splits text into words and punctuation. `*out` receives
/// `[{"surface": ..., "byte_span": {"start": .., "end": ..}, "is_punct": ..}, ...]`.
///
/// # Safety
/// `text` must be a valid string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bite_pretokenize(text: *const c_char, out: *mut *mut c_char) -> BiteStatus {
    clear_out(out);
    guard(|| put_json(out, &bite::pretok::pretokenize(arg(text, "text")?)))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bite_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or NULL after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bite_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn bite_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
