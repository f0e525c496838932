//! C interface to spanlab.
//!
//! Graphs and embeddings cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns an [`SplStatus`]; on anything but `SPL_STATUS_OK` the message is
//! kept per thread and can be fetched with [`spl_last_error`]. Vertex ids
//! are 0-based `size_t`. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use spanlab::adversary::{build_adversarial_instance_k, verify_no_f_on_x};
use spanlab::bandwidth::{exact_bandwidth, heuristic_labelling};
use spanlab::colouring::proper_colouring;
use spanlab::embed::{greedy_embed, verify_embedding, EmbedResult, Embedding, GreedyConfig};
use spanlab::experiment::{concentration_check, thin_to_min_degree};
use spanlab::graph::generate_gnp;
use spanlab::io::parse_graph;
use spanlab::regularity::{p_density, test_lower_regular, PairParams, VerdictKind};
use spanlab::{Error, GnpParams, Graph};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    VertexOutOfRange = 3,
    /// Search or lookup came back empty (no embedding, unmapped vertex).
    NotFound = 4,
    Parse = 5,
    TooLarge = 6,
    /// Any other library error.
    Failed = 7,
    Panic = 8,
}

/// Opaque graph handle.
pub struct SplGraph(Graph);

/// Opaque (possibly partial) embedding handle.
pub struct SplEmbedding(Embedding);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SplStatus {
    match e {
        Error::InvalidParameter(_) | Error::SelfLoop(_) | Error::BadVertexSets(_) | Error::InfeasibleTarget { .. } => {
            SplStatus::InvalidParameter
        }
        Error::VertexOutOfRange { .. } => SplStatus::VertexOutOfRange,
        Error::Parse { .. } => SplStatus::Parse,
        Error::TooLarge { .. } => SplStatus::TooLarge,
        _ => SplStatus::Failed,
    }
}

/// Runs `f`, turning errors and panics into a status plus a message.
fn guard(f: impl FnOnce() -> Result<(), (SplStatus, String)>) -> SplStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SplStatus::Panic
        }
    }
}

fn lib<T>(r: spanlab::Result<T>) -> Result<T, (SplStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SplStatus, String) {
    (SplStatus::NullPointer, format!("{what} is null"))
}

unsafe fn graph_ref<'a>(g: *const SplGraph, what: &str) -> Result<&'a Graph, (SplStatus, String)> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null(what))
}

unsafe fn ids<'a>(p: *const usize, len: usize, what: &str) -> Result<&'a [usize], (SplStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (SplStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), (SplStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

/// The message of the last failed call on this thread, or NULL. The string
/// is a fresh copy; release it with [`spl_string_free`].
#[no_mangle]
pub extern "C" fn spl_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not be freed yet. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn spl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn spl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` vertices from `m` pairs stored flat in `edges`
/// (`2m` entries).
///
/// # Safety
/// `edges` must point to `2 * m` readable values (or be NULL with `m = 0`);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_new(n: usize, edges: *const usize, m: usize, out: *mut *mut SplGraph) -> SplStatus {
    guard(|| {
        let flat = ids(edges, 2 * m, "edges")?;
        let g = lib(Graph::from_edges(n, flat.chunks_exact(2).map(|e| (e[0], e[1]))))?;
        write(out, Box::into_raw(Box::new(SplGraph(g))), "out")
    })
}

/// `G(n, p)` under the seeded stream.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_gnp(n: usize, p: f64, seed: u64, out: *mut *mut SplGraph) -> SplStatus {
    guard(|| {
        let g = generate_gnp(lib(GnpParams::new(n, p, seed))?);
        write(out, Box::into_raw(Box::new(SplGraph(g))), "out")
    })
}

/// Parses an edge list or DIMACS text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_parse(text: *const c_char, out: *mut *mut SplGraph) -> SplStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| (SplStatus::Parse, e.to_string()))?;
        let g = lib(parse_graph(s))?;
        write(out, Box::into_raw(Box::new(SplGraph(g))), "out")
    })
}

/// # Safety
/// `g` must come from this library and not be freed yet. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_free(g: *mut SplGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_vertex_count(g: *const SplGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Edge count, 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_edge_count(g: *const SplGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Minimum degree, 0 for NULL or the empty graph.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_min_degree(g: *const SplGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.min_degree())
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_has_edge(g: *const SplGraph, u: usize, v: usize, out: *mut bool) -> SplStatus {
    guard(|| {
        let g = graph_ref(g, "g")?;
        if let Some(&bad) = [u, v].iter().find(|&&x| x >= g.n()) {
            return Err((SplStatus::VertexOutOfRange, format!("vertex {bad} out of range for {} vertices", g.n())));
        }
        write(out, g.has_edge(u, v), "out")
    })
}

/// Deletes random edges while keeping `δ ≥ ⌈αpn⌉`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_graph_thin(g: *const SplGraph, alpha: f64, p: f64, seed: u64, out: *mut *mut SplGraph) -> SplStatus {
    guard(|| {
        let thinned = lib(thin_to_min_degree(graph_ref(g, "g")?, alpha, p, seed))?;
        write(out, Box::into_raw(Box::new(SplGraph(thinned))), "out")
    })
}

/// Writes the position of every vertex into `positions` (length `n`) and
/// the bandwidth of that labelling into `bandwidth`. With `exact` the
/// branch and bound runs (at most 12 vertices, else `SPL_STATUS_TOO_LARGE`).
///
/// # Safety
/// `g` must be a live handle; `positions` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn spl_bandwidth(
    g: *const SplGraph,
    exact: bool,
    positions: *mut usize,
    bandwidth: *mut usize,
) -> SplStatus {
    guard(|| {
        let g = graph_ref(g, "g")?;
        let lab = if exact { lib(exact_bandwidth(g))?.1 } else { heuristic_labelling(g) };
        out_slice(positions, g.n(), "positions")?.copy_from_slice(lab.positions());
        write(bandwidth, lab.bandwidth(), "bandwidth")
    })
}

/// Proper colouring with colours `0..=k` along the heuristic labelling;
/// `colours` must hold `n` values.
///
/// # Safety
/// `g` must be a live handle; `colours` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn spl_colour(g: *const SplGraph, k: usize, colours: *mut usize) -> SplStatus {
    guard(|| {
        let g = graph_ref(g, "g")?;
        let col = lib(proper_colouring(g, k, &heuristic_labelling(g)))?;
        out_slice(colours, g.n(), "colours")?.copy_from_slice(col.colours());
        Ok(())
    })
}

/// p-density of the pair `(x, y)`.
///
/// # Safety
/// `g` must be a live handle; `x`, `y` must hold `nx`, `ny` ids.
#[no_mangle]
pub unsafe extern "C" fn spl_p_density(
    g: *const SplGraph,
    p: f64,
    x: *const usize,
    nx: usize,
    y: *const usize,
    ny: usize,
    out: *mut f64,
) -> SplStatus {
    guard(|| {
        let d = lib(p_density(graph_ref(g, "g")?, p, ids(x, nx, "x")?, ids(y, ny, "y")?))?;
        write(out, d, "out")
    })
}

/// Lower-regularity verdict: 0 verified, 1 witness found, 2 no witness
/// found by randomized search.
///
/// # Safety
/// `g` must be a live handle; `x`, `y` must hold `nx`, `ny` ids.
#[no_mangle]
pub unsafe extern "C" fn spl_lower_regular(
    g: *const SplGraph,
    eps: f64,
    d: f64,
    p: f64,
    x: *const usize,
    nx: usize,
    y: *const usize,
    ny: usize,
    verdict: *mut i32,
) -> SplStatus {
    guard(|| {
        let pp = lib(PairParams::new(eps, d, p))?;
        let v = lib(test_lower_regular(graph_ref(g, "g")?, &pp, ids(x, nx, "x")?, ids(y, ny, "y")?))?;
        let code = match v.kind {
            VerdictKind::Verified => 0,
            VerdictKind::Witness => 1,
            VerdictKind::ProbablyRegular => 2,
        };
        write(verdict, code, "verdict")
    })
}

/// Greedy embedding of `h` into `g` under a backtrack budget. On success
/// `out` receives a handle; when the budget runs out or the search is
/// exhausted the status is `SPL_STATUS_NOT_FOUND` and `out` is left alone.
///
/// # Safety
/// `h`, `g` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_embed_greedy(
    h: *const SplGraph,
    g: *const SplGraph,
    budget: u64,
    seed: u64,
    out: *mut *mut SplEmbedding,
) -> SplStatus {
    guard(|| {
        let (h, g) = (graph_ref(h, "h")?, graph_ref(g, "g")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = GreedyConfig { backtrack_budget: budget, seed };
        match lib(greedy_embed(h, g, &heuristic_labelling(h), None, &[], None, &cfg))? {
            EmbedResult::Embedded { embedding, .. } => write(out, Box::into_raw(Box::new(SplEmbedding(embedding))), "out"),
            EmbedResult::Failed(c) => Err((
                SplStatus::NotFound,
                format!("no embedding: {} at H-vertex {} after {} backtracks", c.reason, c.vertex, c.backtracks),
            )),
        }
    })
}

/// Image of H-vertex `x`; `SPL_STATUS_NOT_FOUND` when unmapped.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_embedding_get(e: *const SplEmbedding, x: usize, out: *mut usize) -> SplStatus {
    guard(|| {
        let e = &e.as_ref().ok_or_else(|| null("e"))?.0;
        if x >= e.h_vertices() {
            return Err((SplStatus::VertexOutOfRange, format!("H-vertex {x} out of range")));
        }
        let v = e.get(x).ok_or((SplStatus::NotFound, format!("H-vertex {x} is not embedded")))?;
        write(out, v, "out")
    })
}

/// Number of embedded vertices, 0 for NULL.
///
/// # Safety
/// `e` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spl_embedding_len(e: *const SplEmbedding) -> usize {
    e.as_ref().map_or(0, |e| e.0.len())
}

/// Whether `e` is an injective edge-preserving map from `h` into `g`;
/// false on NULL.
///
/// # Safety
/// Every argument must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spl_embedding_verify(h: *const SplGraph, g: *const SplGraph, e: *const SplEmbedding) -> bool {
    match (h.as_ref(), g.as_ref(), e.as_ref()) {
        (Some(h), Some(g), Some(e)) => verify_embedding(&h.0, &g.0, &e.0),
        _ => false,
    }
}

/// # Safety
/// `e` must come from this library and not be freed yet. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn spl_embedding_free(e: *mut SplEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Builds the counterexample for `F_k` and certifies that no copy is
/// rooted in `X`. Either output pointer may be NULL.
///
/// # Safety
/// Non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_adversary_certify(
    n: usize,
    p: f64,
    eps: f64,
    k: usize,
    seed: u64,
    absent: *mut bool,
    min_degree: *mut usize,
) -> SplStatus {
    guard(|| {
        let inst = lib(build_adversarial_instance_k(n, p, eps, k, seed))?;
        let ok = lib(verify_no_f_on_x(&inst))?;
        if !absent.is_null() {
            *absent = ok;
        }
        if !min_degree.is_null() {
            *min_degree = inst.g.min_degree();
        }
        Ok(())
    })
}

/// Edge-count concentration of `G(n, p)` over `runs` seeds. Either output
/// pointer may be NULL.
///
/// # Safety
/// Non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn spl_concentration_check(
    n: usize,
    p: f64,
    runs: usize,
    seed: u64,
    pass: *mut bool,
    exceedances: *mut usize,
) -> SplStatus {
    guard(|| {
        let rep = lib(concentration_check(n, p, runs, seed))?;
        if !pass.is_null() {
            *pass = rep.pass;
        }
        if !exceedances.is_null() {
            *exceedances = rep.exceedances;
        }
        Ok(())
    })
}
