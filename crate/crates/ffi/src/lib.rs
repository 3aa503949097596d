//! C ABI over the `adjflow` toolkit.
//!
//! Every object crosses the boundary as an opaque handle created by an
//! `adjflow_*` constructor and released by the matching `*_free`. Fallible
//! calls return an [`AdjflowStatus`]; on failure the message is kept per
//! thread and can be copied out with [`adjflow_last_error`].
//!
//! Buffers are caller-owned. Functions that fill a buffer take its length in
//! elements and fail with `ADJFLOW_STATUS_BUFFER_TOO_SMALL` when it is short;
//! string getters also report the size they need, terminator included.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use adjflow::adjoint::solve_adjoint;
use adjflow::cli::config::{load_config, parse_config, RunConfig};
use adjflow::cli::export::history_csv;
use adjflow::flow::{dissipated_energy, solve_flow, FlowState};
use adjflow::mesh::{gen_channel, load_mesh, save_mesh, Mesh2D};
use adjflow::shape_opt::{optimize, OptimReport};
use adjflow::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdjflowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    InvalidMesh = 5,
    MissingTag = 6,
    InvertedElement = 7,
    InvalidDisplacement = 8,
    Singular = 9,
    SolveAccuracy = 10,
    NewtonDiverged = 11,
    Mismatch = 12,
    InvalidArgument = 13,
    Io = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

impl From<&Error> for AdjflowStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => AdjflowStatus::Parse,
            Error::InvalidMesh(_) => AdjflowStatus::InvalidMesh,
            Error::MissingTag(_) => AdjflowStatus::MissingTag,
            Error::InvertedElement { .. } => AdjflowStatus::InvertedElement,
            Error::InvalidDisplacement(_) => AdjflowStatus::InvalidDisplacement,
            Error::Config { .. } => AdjflowStatus::Config,
            Error::Singular(_) => AdjflowStatus::Singular,
            Error::SolveAccuracy { .. } => AdjflowStatus::SolveAccuracy,
            Error::NewtonDiverged { .. } => AdjflowStatus::NewtonDiverged,
            Error::Mismatch(_) => AdjflowStatus::Mismatch,
            Error::InvalidArgument(_) => AdjflowStatus::InvalidArgument,
            Error::Io(_) => AdjflowStatus::Io,
        }
    }
}

/// Triangulation with tagged boundary edges.
pub struct AdjflowMesh {
    inner: Mesh2D,
}

/// Parsed and validated run configuration.
pub struct AdjflowConfig {
    inner: RunConfig,
}

/// Converged flow together with the mesh and settings it was computed on.
pub struct AdjflowState {
    mesh: Mesh2D,
    config: RunConfig,
    state: FlowState,
}

/// Outcome of a shape optimization run.
pub struct AdjflowOptim {
    inner: OptimReport,
}

struct Failure {
    status: AdjflowStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            status: AdjflowStatus::from(&e),
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn new(status: AdjflowStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Failure::new(AdjflowStatus::NullPointer, format!("`{name}` is null"))
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AdjflowStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(AdjflowStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            AdjflowStatus::Ok
        }
        Err(f) => {
            set_last_error(&f.message);
            f.status
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a live handle or null.
    unsafe { p.as_ref() }.ok_or_else(|| Failure::null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|e| Failure::new(AdjflowStatus::InvalidUtf8, format!("`{name}` is not UTF-8: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(name));
    }
    // SAFETY: `out` is non-null and writable per the API contract.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn put_f64(out: *mut f64, value: f64, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(name));
    }
    // SAFETY: as above.
    unsafe { *out = value };
    Ok(())
}

unsafe fn fill(buf: *mut f64, len: usize, values: &[f64], name: &str) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure::null(name));
    }
    if len < values.len() {
        return Err(Failure::new(
            AdjflowStatus::BufferTooSmall,
            format!("`{name}` holds {len} values, {} needed", values.len()),
        ));
    }
    // SAFETY: `buf` points to at least `len >= values.len()` doubles.
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
    Ok(())
}

/// Copies `s` plus a terminator into `buf`. `needed` (optional) receives the full size.
unsafe fn fill_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Failure> {
    let size = s.len() + 1;
    if !needed.is_null() {
        // SAFETY: optional out-parameter, writable when non-null.
        unsafe { *needed = size };
    }
    if cap < size || buf.is_null() {
        return Err(Failure::new(
            AdjflowStatus::BufferTooSmall,
            format!("string needs {size} bytes, buffer has {cap}"),
        ));
    }
    // SAFETY: `buf` holds at least `size` bytes.
    unsafe {
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
        *buf.add(s.len()) = 0;
    }
    Ok(())
}

fn flatten(v: impl Iterator<Item = [f64; 2]>) -> Vec<f64> {
    v.flatten().collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adjflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// Returns the size the message needs including its terminator, or 0 when
/// the last call on this thread succeeded. The copy is truncated to `cap`.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn adjflow_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap) - 1;
            // SAFETY: `buf` holds `cap > n` bytes.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Parses a mesh from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_from_json(json: *const c_char, out: *mut *mut AdjflowMesh) -> AdjflowStatus {
    guard(|| {
        let json = unsafe { c_str(json, "json") }?;
        let inner = load_mesh(json.as_bytes())?;
        unsafe { put(out, AdjflowMesh { inner }, "out") }
    })
}

/// Structured channel `[0, length] x [0, height]` with `nx * ny * 2` triangles.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_channel(
    length: f64,
    height: f64,
    nx: usize,
    ny: usize,
    out: *mut *mut AdjflowMesh,
) -> AdjflowStatus {
    guard(|| {
        let inner = gen_channel(length, height, nx, ny)?;
        unsafe { put(out, AdjflowMesh { inner }, "out") }
    })
}

/// Serializes a mesh to JSON. See the module notes on string buffers.
///
/// # Safety
/// `mesh` must be a live handle, `buf` null or `cap` bytes, `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_to_json(
    mesh: *const AdjflowMesh,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AdjflowStatus {
    guard(|| {
        let mesh = unsafe { borrow(mesh, "mesh") }?;
        let json = String::from_utf8(save_mesh(&mesh.inner)).expect("mesh JSON is UTF-8");
        unsafe { fill_str(&json, buf, cap, needed) }
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_node_count(mesh: *const AdjflowMesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.inner.node_count())
}

/// Number of triangles, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_triangle_count(mesh: *const AdjflowMesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.inner.triangle_count())
}

/// Area of the meshed domain.
///
/// # Safety
/// `mesh` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_volume(mesh: *const AdjflowMesh, out: *mut f64) -> AdjflowStatus {
    guard(|| {
        let mesh = unsafe { borrow(mesh, "mesh") }?;
        unsafe { put_f64(out, mesh.inner.volume(), "out") }
    })
}

/// Node coordinates as interleaved `x0 y0 x1 y1 ...`; `len >= 2 * node_count`.
///
/// # Safety
/// `mesh` must be a live handle and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_nodes(mesh: *const AdjflowMesh, buf: *mut f64, len: usize) -> AdjflowStatus {
    guard(|| {
        let mesh = unsafe { borrow(mesh, "mesh") }?;
        let xy = flatten(mesh.inner.nodes().iter().copied());
        unsafe { fill(buf, len, &xy, "buf") }
    })
}

/// # Safety
/// `mesh` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn adjflow_mesh_free(mesh: *mut AdjflowMesh) {
    if !mesh.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(mesh) });
    }
}

/// Parses a run configuration. Relative mesh paths resolve against the process directory.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_config_from_json(json: *const c_char, out: *mut *mut AdjflowConfig) -> AdjflowStatus {
    guard(|| {
        let json = unsafe { c_str(json, "json") }?;
        let inner = parse_config(json.as_bytes())?;
        unsafe { put(out, AdjflowConfig { inner }, "out") }
    })
}

/// Reads a run configuration file; relative mesh paths resolve against its directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_config_load(path: *const c_char, out: *mut *mut AdjflowConfig) -> AdjflowStatus {
    guard(|| {
        let path = unsafe { c_str(path, "path") }?;
        let inner = load_config(Path::new(path))?;
        unsafe { put(out, AdjflowConfig { inner }, "out") }
    })
}

/// Loads or generates the mesh named by the configuration.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_config_build_mesh(
    config: *const AdjflowConfig,
    out: *mut *mut AdjflowMesh,
) -> AdjflowStatus {
    guard(|| {
        let config = unsafe { borrow(config, "config") }?;
        let inner = config.inner.build_mesh()?;
        unsafe { put(out, AdjflowMesh { inner }, "out") }
    })
}

/// # Safety
/// `config` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn adjflow_config_free(config: *mut AdjflowConfig) {
    if !config.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Solves the configured flow problem on `mesh`. The state keeps copies of
/// both inputs, which may be freed afterwards.
///
/// # Safety
/// `mesh` and `config` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_solve(
    mesh: *const AdjflowMesh,
    config: *const AdjflowConfig,
    out: *mut *mut AdjflowState,
) -> AdjflowStatus {
    guard(|| {
        let mesh = unsafe { borrow(mesh, "mesh") }?;
        let config = unsafe { borrow(config, "config") }?;
        let state = solve_flow(&mesh.inner, &config.inner.flow, None)?;
        let value = AdjflowState {
            mesh: mesh.inner.clone(),
            config: config.inner.clone(),
            state,
        };
        unsafe { put(out, value, "out") }
    })
}

/// Dissipated energy of the flow.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_state_energy(state: *const AdjflowState, out: *mut f64) -> AdjflowStatus {
    guard(|| {
        let s = unsafe { borrow(state, "state") }?;
        let j = dissipated_energy(&s.mesh, &s.state, s.config.flow.viscosity);
        unsafe { put_f64(out, j, "out") }
    })
}

/// Nodal velocities, interleaved; `len >= 2 * node_count`.
///
/// # Safety
/// `state` must be a live handle and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adjflow_state_velocity(
    state: *const AdjflowState,
    buf: *mut f64,
    len: usize,
) -> AdjflowStatus {
    guard(|| {
        let s = unsafe { borrow(state, "state") }?;
        let u = flatten((0..s.mesh.node_count()).map(|i| s.state.velocity(i)));
        unsafe { fill(buf, len, &u, "buf") }
    })
}

/// Nodal pressures; `len >= node_count`.
///
/// # Safety
/// `state` must be a live handle and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adjflow_state_pressure(
    state: *const AdjflowState,
    buf: *mut f64,
    len: usize,
) -> AdjflowStatus {
    guard(|| {
        let s = unsafe { borrow(state, "state") }?;
        let p: Vec<f64> = (0..s.mesh.node_count()).map(|i| s.state.pressure(i)).collect();
        unsafe { fill(buf, len, &p, "buf") }
    })
}

/// Linear solves spent by Newton, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adjflow_state_newton_iterations(state: *const AdjflowState) -> usize {
    unsafe { state.as_ref() }.map_or(0, |s| s.state.report.iterations)
}

/// Solves the adjoint problem of the flow and writes its nodal velocities.
///
/// # Safety
/// `state` must be a live handle and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adjflow_state_adjoint_velocity(
    state: *const AdjflowState,
    buf: *mut f64,
    len: usize,
) -> AdjflowStatus {
    guard(|| {
        let s = unsafe { borrow(state, "state") }?;
        let adj = solve_adjoint(&s.mesh, &s.state, &s.config.flow)?;
        let v = flatten((0..s.mesh.node_count()).map(|i| adj.velocity(i)));
        unsafe { fill(buf, len, &v, "buf") }
    })
}

/// # Safety
/// `state` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn adjflow_state_free(state: *mut AdjflowState) {
    if !state.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Runs the shape optimizer from `mesh` with the configured flow and optimizer settings.
///
/// # Safety
/// `mesh` and `config` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optimize(
    mesh: *const AdjflowMesh,
    config: *const AdjflowConfig,
    out: *mut *mut AdjflowOptim,
) -> AdjflowStatus {
    guard(|| {
        let mesh = unsafe { borrow(mesh, "mesh") }?;
        let config = unsafe { borrow(config, "config") }?;
        let inner = optimize(&mesh.inner, &config.inner.flow, &config.inner.optimize)?;
        unsafe { put(out, AdjflowOptim { inner }, "out") }
    })
}

/// # Safety
/// `optim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_initial_energy(optim: *const AdjflowOptim, out: *mut f64) -> AdjflowStatus {
    guard(|| {
        let o = unsafe { borrow(optim, "optim") }?;
        unsafe { put_f64(out, o.inner.initial_energy, "out") }
    })
}

/// Energy of the last accepted shape.
///
/// # Safety
/// `optim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_final_energy(optim: *const AdjflowOptim, out: *mut f64) -> AdjflowStatus {
    guard(|| {
        let o = unsafe { borrow(optim, "optim") }?;
        unsafe { put_f64(out, o.inner.final_energy(), "out") }
    })
}

/// Relative energy reduction `1 - J_final / J_initial`.
///
/// # Safety
/// `optim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_reduction(optim: *const AdjflowOptim, out: *mut f64) -> AdjflowStatus {
    guard(|| {
        let o = unsafe { borrow(optim, "optim") }?;
        unsafe { put_f64(out, o.inner.reduction(), "out") }
    })
}

/// Attempted moves recorded in the history, or 0 for a null handle.
///
/// # Safety
/// `optim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_history_len(optim: *const AdjflowOptim) -> usize {
    unsafe { optim.as_ref() }.map_or(0, |o| o.inner.history.len())
}

/// Whether the run stopped after exhausting its retries. False for a null handle.
///
/// # Safety
/// `optim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_terminated_early(optim: *const AdjflowOptim) -> bool {
    unsafe { optim.as_ref() }.is_some_and(|o| o.inner.terminated_early)
}

/// Iteration history as CSV, the same text the command line writes.
///
/// # Safety
/// `optim` must be a live handle, `buf` null or `cap` bytes, `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_history_csv(
    optim: *const AdjflowOptim,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AdjflowStatus {
    guard(|| {
        let o = unsafe { borrow(optim, "optim") }?;
        unsafe { fill_str(&history_csv(&o.inner.history), buf, cap, needed) }
    })
}

/// Copies the optimized mesh into a new handle.
///
/// # Safety
/// `optim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_mesh(optim: *const AdjflowOptim, out: *mut *mut AdjflowMesh) -> AdjflowStatus {
    guard(|| {
        let o = unsafe { borrow(optim, "optim") }?;
        unsafe {
            put(
                out,
                AdjflowMesh {
                    inner: o.inner.mesh.clone(),
                },
                "out",
            )
        }
    })
}

/// # Safety
/// `optim` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn adjflow_optim_free(optim: *mut AdjflowOptim) {
    if !optim.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(optim) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let mut buf = [0 as c_char; 256];
        let n = unsafe { adjflow_last_error(buf.as_mut_ptr(), buf.len()) };
        if n == 0 {
            return String::new();
        }
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn error_mapping_is_total() {
        let e = Error::NewtonDiverged { trace: vec![1.0] };
        assert_eq!(AdjflowStatus::from(&e), AdjflowStatus::NewtonDiverged);
        assert_eq!(
            AdjflowStatus::from(&Error::InvertedElement { triangle: 3 }),
            AdjflowStatus::InvertedElement
        );
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, AdjflowStatus::Panic);
        assert_eq!(last_error(), "panic: boom");
        assert_eq!(guard(|| Ok(())), AdjflowStatus::Ok);
        assert_eq!(last_error(), "");
    }

    #[test]
    fn truncated_last_error_is_terminated() {
        set_last_error("abcdef");
        let mut buf = [1 as c_char; 4];
        assert_eq!(unsafe { adjflow_last_error(buf.as_mut_ptr(), 4) }, 7);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "abc");
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(adjflow_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
