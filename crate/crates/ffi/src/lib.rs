//! C ABI over `cvn-core`.
//!
//! Every call returns a [`CvnStatus`]; results come back through out
//! pointers. Objects are opaque handles released with their `_free`
//! function, strings returned by the library are released with
//! [`cvn_string_free`]. After a failure, [`cvn_last_error_message`] gives
//! a description for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cvn::graph::MarkedGraph;
use cvn::morphism::lipschitz_constant;
use cvn::random::{random_graph, rng};
use cvn::rational::{format_q, qi};
use cvn::skora::{FoldingPath, Mode};
use cvn::whitehead::is_primitive;
use cvn::{Error, Word};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Budget = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Opaque marked metric graph.
pub struct CvnGraph(MarkedGraph);

/// Opaque folding path.
pub struct CvnPath(FoldingPath);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CvnStatus {
    match e {
        Error::Parse(_) => CvnStatus::Parse,
        Error::IterationCap(_) => CvnStatus::Budget,
        Error::OutOfRange(_) | Error::RankTooSmall(_) => CvnStatus::OutOfRange,
        _ => CvnStatus::Validation,
    }
}

fn fail(status: CvnStatus, msg: impl Into<String>) -> CvnStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (CvnStatus, String)>) -> CvnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvnStatus::Ok,
        Ok(Err((s, m))) => fail(s, m),
        Err(_) => fail(CvnStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (CvnStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (CvnStatus, String) {
    (CvnStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (CvnStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (CvnStatus::InvalidUtf8, "string is not UTF-8".into()))
}

unsafe fn graph_ref<'a>(g: *const CvnGraph) -> Result<&'a MarkedGraph, (CvnStatus, String)> {
    g.as_ref().map(|g| &g.0).ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), (CvnStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), (CvnStatus, String)> {
    let c = CString::new(s).map_err(|_| (CvnStatus::Panic, "interior nul".to_string()))?;
    put(out, c.into_raw())
}

/// Copy of the calling thread's last error message, or null if none.
#[no_mangle]
pub extern "C" fn cvn_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cvn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static version string; do not free.
#[no_mangle]
pub extern "C" fn cvn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses and validates a graph from JSON.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_from_json(json: *const c_char, out: *mut *mut CvnGraph) -> CvnStatus {
    guard(|| {
        let g = MarkedGraph::from_json(read_str(json)?).map_err(lib_err)?;
        let bad = g.validate();
        if let Some(v) = bad.first() {
            return Err((CvnStatus::Validation, v.to_string()));
        }
        put(out, Box::into_raw(Box::new(CvnGraph(g))))
    })
}

/// Rose with `rank` petals of length `1/rank`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_rose(rank: usize, out: *mut *mut CvnGraph) -> CvnStatus {
    guard(|| {
        if rank < 2 {
            return Err(lib_err(Error::RankTooSmall(rank)));
        }
        let len = qi(1) / qi(rank as i64);
        let g = MarkedGraph::rose(rank, &vec![len; rank]).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(CvnGraph(g))))
    })
}

/// Seeded random valid volume-one graph.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_random(seed: u64, rank: usize, out: *mut *mut CvnGraph) -> CvnStatus {
    guard(|| {
        if rank < 2 {
            return Err(lib_err(Error::RankTooSmall(rank)));
        }
        let g = random_graph(&mut rng(seed), rank, 2 * rank);
        put(out, Box::into_raw(Box::new(CvnGraph(g))))
    })
}

/// # Safety
/// `g` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_free(g: *mut CvnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_to_json(g: *const CvnGraph, out: *mut *mut c_char) -> CvnStatus {
    guard(|| put_string(out, graph_ref(g)?.to_json()))
}

/// # Safety
/// `g` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_shape(g: *const CvnGraph, rank: *mut usize, vertices: *mut usize, edges: *mut usize) -> CvnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        put(rank, g.rank())?;
        put(vertices, g.vertex_count())?;
        put(edges, g.edge_count())
    })
}

/// Volume as a `"p/q"` string.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_graph_volume(g: *const CvnGraph, out: *mut *mut c_char) -> CvnStatus {
    guard(|| put_string(out, format_q(&graph_ref(g)?.volume())))
}

/// Translation length of a word such as `"abAB"`, as `"p/q"`.
///
/// # Safety
/// `g` must be a live handle, `word` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_translation_length(g: *const CvnGraph, word: *const c_char, out: *mut *mut c_char) -> CvnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let w = Word::parse(read_str(word)?).map_err(lib_err)?;
        let l = g.translation_length(&w).map_err(lib_err)?;
        put_string(out, format_q(&l))
    })
}

/// Lipschitz constant from `s` to `t`, as `"p/q"`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_lipschitz_constant(s: *const CvnGraph, t: *const CvnGraph, out: *mut *mut c_char) -> CvnStatus {
    guard(|| {
        let l = lipschitz_constant(graph_ref(s)?, graph_ref(t)?).map_err(lib_err)?;
        put_string(out, format_q(&l))
    })
}

/// Folding path from `s` to `t`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_skora_path(s: *const CvnGraph, t: *const CvnGraph, out: *mut *mut CvnPath) -> CvnStatus {
    guard(|| {
        let p = FoldingPath::skora(graph_ref(s)?, graph_ref(t)?, Mode::Unnormalized).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(CvnPath(p))))
    })
}

/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_path_fold_count(p: *const CvnPath, out: *mut usize) -> CvnStatus {
    guard(|| put(out, p.as_ref().ok_or_else(null)?.0.len()))
}

/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_path_to_json(p: *const CvnPath, out: *mut *mut c_char) -> CvnStatus {
    guard(|| put_string(out, p.as_ref().ok_or_else(null)?.0.to_json()))
}

/// Stage `k` of the path as a new graph handle.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_path_stage(p: *const CvnPath, k: usize, out: *mut *mut CvnGraph) -> CvnStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(null)?.0;
        if k >= p.stages.len() {
            return Err(lib_err(Error::OutOfRange(format!("stage {k} of {}", p.stages.len()))));
        }
        put(out, Box::into_raw(Box::new(CvnGraph(p.stage_graph(k)))))
    })
}

/// # Safety
/// `p` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cvn_path_free(p: *mut CvnPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Primitivity of a word in the free group of the given rank.
///
/// # Safety
/// `word` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvn_is_primitive(word: *const c_char, rank: usize, out: *mut bool) -> CvnStatus {
    guard(|| {
        let w = Word::parse(read_str(word)?).map_err(lib_err)?;
        if w.is_trivial() {
            return Err(lib_err(Error::TrivialWord));
        }
        put(out, is_primitive(&w, rank.max(w.max_generator())))
    })
}
