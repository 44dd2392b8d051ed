//! C ABI for `sis-hubs`.
//!
//! Objects cross the boundary as opaque handles (`SisGraph`, `SisEventLog`)
//! that the caller releases with the matching `*_free` function. Every
//! fallible call returns a [`SisStatus`]; on failure a human-readable message
//! is available from [`sis_last_error_message`] on the same thread. Panics are
//! caught at the boundary and reported as `SIS_STATUS_PANIC`.
//!
//! Vertex sets are returned through caller-owned buffers: pass the capacity,
//! receive the required length in `*out_len`. If the buffer is too small the
//! call returns `SIS_STATUS_BUFFER_TOO_SMALL` and writes nothing else.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sis_hubs::estimator::{estimate_threshold, estimate_top_m, theorem_h, theorem_k};
use sis_hubs::sim::simulate;
use sis_hubs::{EpidemicParams, Error, EventKind, EventLog, Graph, GraphSpec, InitialCondition, Vertex};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Format = 3,
    Io = 4,
    State = 5,
    Data = 6,
    Capacity = 7,
    Internal = 8,
    Panic = 9,
    BufferTooSmall = 10,
}

/// Opaque graph handle.
pub struct SisGraph(Graph);

/// Opaque event-log handle.
pub struct SisEventLog(EventLog);

/// One state change. `kind` is 1 for an infection, 0 for a recovery.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisEvent {
    pub time: f64,
    pub vertex: u32,
    pub kind: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SisStatus {
    match err {
        Error::Parameter(_) => SisStatus::InvalidParameter,
        Error::Format { .. } => SisStatus::Format,
        Error::Io { .. } => SisStatus::Io,
        Error::State(_) => SisStatus::State,
        Error::Data(_) => SisStatus::Data,
        Error::Capacity(_) => SisStatus::Capacity,
        Error::Internal(_) => SisStatus::Internal,
    }
}

/// Runs `f` behind a panic guard and records any error message.
fn guard(f: impl FnOnce() -> Result<(), (SisStatus, String)>) -> SisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SisStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {msg}"));
            SisStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (SisStatus, String)>;

fn lift<T>(r: sis_hubs::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SisStatus, String) {
    (SisStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> FfiResult<String> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (SisStatus::InvalidParameter, "path is not valid UTF-8".to_string()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_vertices(list: &[Vertex], buf: *mut u32, cap: usize, out_len: *mut usize) -> FfiResult<()> {
    write_out(out_len, list.len())?;
    if list.is_empty() {
        return Ok(());
    }
    if list.len() > cap {
        return Err((
            SisStatus::BufferTooSmall,
            format!("buffer holds {cap} vertices, {} needed", list.len()),
        ));
    }
    if buf.is_null() {
        return Err(null("vertex buffer"));
    }
    std::ptr::copy_nonoverlapping(list.as_ptr(), buf, list.len());
    Ok(())
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sis_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Generates `n_low` vertices of degree `d` plus `hubs` hubs of degree
/// `hub_degree`.
///
/// # Safety
/// `out` must be a valid pointer to a `SisGraph*`.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_generate(
    n_low: usize,
    d: usize,
    hubs: usize,
    hub_degree: usize,
    seed: u64,
    out: *mut *mut SisGraph,
) -> SisStatus {
    guard(|| {
        let spec = GraphSpec { n_low, d, m: hubs, hub_degree, seed };
        let g = lift(spec.build())?;
        write_out(out, Box::into_raw(Box::new(SisGraph(g))))
    })
}

/// Loads an edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_load(path: *const c_char, out: *mut *mut SisGraph) -> SisStatus {
    guard(|| {
        let g = lift(Graph::load(path_arg(path)?))?;
        write_out(out, Box::into_raw(Box::new(SisGraph(g))))
    })
}

/// Writes the graph as an edge-list file.
///
/// # Safety
/// `graph` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_save(graph: *const SisGraph, path: *const c_char) -> SisStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        lift(g.0.save(path_arg(path)?))
    })
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_vertex_count(graph: *const SisGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n())
}

/// # Safety
/// `graph` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_degree(graph: *const SisGraph, vertex: u32, out: *mut usize) -> SisStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        if vertex as usize >= g.n() {
            return Err((SisStatus::InvalidParameter, format!("vertex {vertex} out of range")));
        }
        write_out(out, g.degree(vertex))
    })
}

/// Copies the hub labels into `buf`.
///
/// # Safety
/// `buf` must hold `cap` elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_hubs(
    graph: *const SisGraph,
    buf: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> SisStatus {
    guard(|| write_vertices(deref(graph, "graph")?.0.hub_labels(), buf, cap, out_len))
}

/// # Safety
/// `graph` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sis_graph_free(graph: *mut SisGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Simulates on `[0, horizon]` from a random initial set: a `init_fraction`
/// share of vertices, plus every hub if `force_hubs` is non-zero.
/// `horizon` may be `INFINITY`.
///
/// # Safety
/// `graph` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_simulate(
    graph: *const SisGraph,
    beta: f64,
    gamma: f64,
    horizon: f64,
    init_fraction: f64,
    force_hubs: u8,
    seed: u64,
    out: *mut *mut SisEventLog,
) -> SisStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let params = lift(EpidemicParams::new(beta, gamma))?;
        let init = InitialCondition::RandomFraction {
            fraction: init_fraction,
            force_hubs: force_hubs != 0,
            seed: sis_hubs::seeds::derive_seed(seed, "init"),
        };
        let log = lift(simulate(g, params, &init, horizon, seed))?;
        write_out(out, Box::into_raw(Box::new(SisEventLog(log))))
    })
}

/// Simulates from the explicit initial set `initial[0..len]`.
///
/// # Safety
/// `initial` must hold `len` elements (may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn sis_simulate_explicit(
    graph: *const SisGraph,
    beta: f64,
    gamma: f64,
    horizon: f64,
    initial: *const u32,
    len: usize,
    seed: u64,
    out: *mut *mut SisEventLog,
) -> SisStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let params = lift(EpidemicParams::new(beta, gamma))?;
        let set = if len == 0 {
            Vec::new()
        } else if initial.is_null() {
            return Err(null("initial set"));
        } else {
            std::slice::from_raw_parts(initial, len).to_vec()
        };
        let log = lift(simulate(g, params, &InitialCondition::Explicit(set), horizon, seed))?;
        write_out(out, Box::into_raw(Box::new(SisEventLog(log))))
    })
}

/// Loads an event-log file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_event_log_load(path: *const c_char, out: *mut *mut SisEventLog) -> SisStatus {
    guard(|| {
        let log = lift(EventLog::load(path_arg(path)?))?;
        write_out(out, Box::into_raw(Box::new(SisEventLog(log))))
    })
}

/// # Safety
/// `log` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sis_event_log_save(log: *const SisEventLog, path: *const c_char) -> SisStatus {
    guard(|| lift(deref(log, "event log")?.0.save(path_arg(path)?)))
}

/// Number of events, or 0 for a null handle.
///
/// # Safety
/// `log` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sis_event_log_len(log: *const SisEventLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `log` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_event_log_event(log: *const SisEventLog, index: usize, out: *mut SisEvent) -> SisStatus {
    guard(|| {
        let l = &deref(log, "event log")?.0;
        let e = l.events().get(index).ok_or_else(|| {
            (SisStatus::InvalidParameter, format!("event {index} out of range ({} events)", l.len()))
        })?;
        write_out(
            out,
            SisEvent {
                time: e.time,
                vertex: e.vertex,
                kind: u8::from(e.kind == EventKind::Infection),
            },
        )
    })
}

/// # Safety
/// `log` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sis_event_log_free(log: *mut SisEventLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// The `m` eligible vertices with the smallest `R_K`, sorted by id.
///
/// # Safety
/// `buf` must hold `cap` elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_estimate_top_m(
    log: *const SisEventLog,
    k: usize,
    m: usize,
    buf: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> SisStatus {
    guard(|| {
        let est = lift(estimate_top_m(&deref(log, "event log")?.0, k, m))?;
        write_vertices(&est.selected, buf, cap, out_len)
    })
}

/// Eligible vertices with `R_K <= h`, sorted by id.
///
/// # Safety
/// `buf` must hold `cap` elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_estimate_threshold(
    log: *const SisEventLog,
    k: usize,
    h: f64,
    buf: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> SisStatus {
    guard(|| {
        let est = lift(estimate_threshold(&deref(log, "event log")?.0, k, h))?;
        write_vertices(&est.selected, buf, cap, out_len)
    })
}

/// `K = ceil(3 / alpha)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_theorem_k(alpha: f64, out: *mut usize) -> SisStatus {
    guard(|| write_out(out, lift(theorem_k(alpha))?))
}

/// `h = n^(-alpha / 2)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sis_theorem_h(n: usize, alpha: f64, out: *mut f64) -> SisStatus {
    guard(|| write_out(out, lift(theorem_h(n, alpha))?))
}
