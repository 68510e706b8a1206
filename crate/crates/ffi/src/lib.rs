//! C ABI over the simptopo core.
//!
//! Every fallible call returns a [`SimptopoStatus`]; on failure a message is
//! available from [`simptopo_last_error`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use simptopo::fea::{DensityField, GridDomain, LoadCase, MaterialModel, PointForce};
use simptopo::metrics;
use simptopo::persistence::{self, PersistenceDiagram};
use simptopo::simp::{self, SimpConfig};
use simptopo::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimptopoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    SolveFailed = 4,
    Numeric = 5,
    Io = 6,
    Format = 7,
    Panic = 8,
}

impl From<&Error> for SimptopoStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter(_) => SimptopoStatus::InvalidArgument,
            Error::Solve(_) => SimptopoStatus::SolveFailed,
            Error::Numeric(_) => SimptopoStatus::Numeric,
            Error::Shape { .. } => SimptopoStatus::ShapeMismatch,
            Error::Format { .. } => SimptopoStatus::Format,
            Error::Io { .. } => SimptopoStatus::Io,
        }
    }
}

/// A density field on an `nely` x `nelx` element grid.
pub struct SimptopoField(DensityField);

/// Superlevel-set persistence diagram of a field.
pub struct SimptopoDiagram(PersistenceDiagram);

/// One persistence pair. Essential pairs have `death = -INFINITY`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SimptopoPair {
    pub birth: f64,
    pub death: f64,
    pub essential: bool,
}

/// A point load on grid node `node` (column-major numbering, row 0 on top).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SimptopoPointLoad {
    pub node: usize,
    pub fx: f64,
    pub fy: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SimptopoSimpParams {
    pub volfrac: f64,
    pub rmin: f64,
    pub penal: f64,
    pub move_limit: f64,
    pub change_tol: f64,
    pub max_iters: usize,
    pub e0: f64,
    pub emin: f64,
    pub nu: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SimptopoSimpSummary {
    pub iterations: usize,
    pub converged: bool,
    pub compliance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (SimptopoStatus, String)>) -> SimptopoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SimptopoStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SimptopoStatus::Panic
        }
    }
}

type Fail = (SimptopoStatus, String);

fn lift<T>(r: simptopo::Result<T>) -> Result<T, Fail> {
    r.map_err(|e| (SimptopoStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> Fail {
    (SimptopoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn array<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(slice::from_raw_parts(p, len))
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn simptopo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `nelx * nely` row-major values (row 0 on top) into a new field.
///
/// # Safety
/// `values` must point to `nelx * nely` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_field_new(
    nelx: usize,
    nely: usize,
    values: *const f64,
    out_field: *mut *mut SimptopoField,
) -> SimptopoStatus {
    guard(|| {
        let slot = out(out_field, "out_field")?;
        let n = nelx.checked_mul(nely).ok_or_else(|| {
            (
                SimptopoStatus::InvalidArgument,
                "grid size overflows".to_string(),
            )
        })?;
        let v = array(values, n, "values")?;
        let field = lift(DensityField::new(nelx, nely, v.to_vec()))?;
        *slot = Box::into_raw(Box::new(SimptopoField(field)));
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn simptopo_field_free(field: *mut SimptopoField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` must be a live handle; `nelx` and `nely` must be writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_field_shape(
    field: *const SimptopoField,
    nelx: *mut usize,
    nely: *mut usize,
) -> SimptopoStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        *out(nelx, "nelx")? = f.nelx();
        *out(nely, "nely")? = f.nely();
        Ok(())
    })
}

/// Copies the row-major values into `dst`, which must hold exactly `len` doubles.
///
/// # Safety
/// `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn simptopo_field_values(
    field: *const SimptopoField,
    dst: *mut f64,
    len: usize,
) -> SimptopoStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if len != f.len() {
            return Err((
                SimptopoStatus::ShapeMismatch,
                format!("buffer holds {len} values, field has {}", f.len()),
            ));
        }
        if dst.is_null() {
            return Err(null("dst"));
        }
        slice::from_raw_parts_mut(dst, len).copy_from_slice(f.values());
        Ok(())
    })
}

/// # Safety
/// `field` must be a live handle and `out_diagram` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_diagram_compute(
    field: *const SimptopoField,
    out_diagram: *mut *mut SimptopoDiagram,
) -> SimptopoStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        let slot = out(out_diagram, "out_diagram")?;
        let d = lift(persistence::compute_diagram(f))?;
        *slot = Box::into_raw(Box::new(SimptopoDiagram(d)));
        Ok(())
    })
}

/// # Safety
/// `diagram` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn simptopo_diagram_free(diagram: *mut SimptopoDiagram) {
    if !diagram.is_null() {
        drop(Box::from_raw(diagram));
    }
}

/// Number of pairs in dimension `dim` (0 or 1).
///
/// # Safety
/// `diagram` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_diagram_len(
    diagram: *const SimptopoDiagram,
    dim: usize,
    len: *mut usize,
) -> SimptopoStatus {
    guard(|| {
        let d = &deref(diagram, "diagram")?.0;
        *out(len, "len")? = lift(d.dim(dim))?.len();
        Ok(())
    })
}

/// Pair `index` of dimension `dim`, sorted by birth then death, both descending.
///
/// # Safety
/// `diagram` must be a live handle and `pair` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_diagram_get(
    diagram: *const SimptopoDiagram,
    dim: usize,
    index: usize,
    pair: *mut SimptopoPair,
) -> SimptopoStatus {
    guard(|| {
        let d = &deref(diagram, "diagram")?.0;
        let pairs = lift(d.dim(dim))?;
        let p = pairs.get(index).ok_or_else(|| {
            (
                SimptopoStatus::InvalidArgument,
                format!("pair {index} out of range for {} pairs", pairs.len()),
            )
        })?;
        *out(pair, "pair")? = SimptopoPair {
            birth: p.birth,
            death: p.death,
            essential: p.essential,
        };
        Ok(())
    })
}

/// Betti numbers of the superlevel set `{ρ >= t}`.
///
/// # Safety
/// `diagram` must be a live handle; `b0` and `b1` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_betti(
    diagram: *const SimptopoDiagram,
    t: f64,
    b0: *mut usize,
    b1: *mut usize,
) -> SimptopoStatus {
    guard(|| {
        let d = &deref(diagram, "diagram")?.0;
        let b = lift(persistence::betti_at_threshold(d, t))?;
        *out(b0, "b0")? = b.b0;
        *out(b1, "b1")? = b.b1;
        Ok(())
    })
}

/// Exact bottleneck distance in dimension `dim`. Writes `INFINITY` when the
/// essential class counts differ.
///
/// # Safety
/// Both diagrams must be live handles; `distance` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_bottleneck(
    a: *const SimptopoDiagram,
    b: *const SimptopoDiagram,
    dim: usize,
    distance: *mut f64,
) -> SimptopoStatus {
    guard(|| {
        let (a, b) = (&deref(a, "a")?.0, &deref(b, "b")?.0);
        *out(distance, "distance")? = lift(persistence::bottleneck_distance(a, b, dim))?;
        Ok(())
    })
}

unsafe fn pair_metric(
    pred: *const SimptopoField,
    truth: *const SimptopoField,
    value: *mut f64,
    f: impl FnOnce(&DensityField, &DensityField) -> simptopo::Result<f64>,
) -> SimptopoStatus {
    guard(|| {
        let (p, t) = (&deref(pred, "pred")?.0, &deref(truth, "truth")?.0);
        *out(value, "value")? = lift(f(p, t))?;
        Ok(())
    })
}

/// # Safety
/// Both fields must be live handles; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_mse(
    pred: *const SimptopoField,
    truth: *const SimptopoField,
    value: *mut f64,
) -> SimptopoStatus {
    pair_metric(pred, truth, value, metrics::mse)
}

/// # Safety
/// Both fields must be live handles; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_binary_accuracy(
    pred: *const SimptopoField,
    truth: *const SimptopoField,
    value: *mut f64,
) -> SimptopoStatus {
    pair_metric(pred, truth, value, metrics::binary_accuracy)
}

/// # Safety
/// Both fields must be live handles; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_binary_cross_entropy(
    pred: *const SimptopoField,
    truth: *const SimptopoField,
    value: *mut f64,
) -> SimptopoStatus {
    pair_metric(pred, truth, value, metrics::binary_cross_entropy)
}

/// Cross-entropy plus `lambda` times the summed bottleneck distances.
///
/// # Safety
/// Both fields must be live handles; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_total_loss(
    pred: *const SimptopoField,
    truth: *const SimptopoField,
    lambda: f64,
    value: *mut f64,
) -> SimptopoStatus {
    pair_metric(pred, truth, value, |p, t| metrics::total_loss(p, t, lambda))
}

/// Default optimizer and material parameters.
#[no_mangle]
pub extern "C" fn simptopo_simp_params_default() -> SimptopoSimpParams {
    let s = SimpConfig::default();
    let m = MaterialModel::default();
    SimptopoSimpParams {
        volfrac: s.volfrac,
        rmin: s.rmin,
        penal: s.penal,
        move_limit: s.move_limit,
        change_tol: s.change_tol,
        max_iters: s.max_iters,
        e0: m.e0,
        emin: m.emin,
        nu: m.nu,
    }
}

/// Runs the optimizer and returns the final density as a new field.
/// Hitting `max_iters` is not an error; check `summary.converged`.
///
/// # Safety
/// `params` must be readable, the arrays must hold the given counts, and
/// `out_field` and `summary` must be writable.
#[no_mangle]
pub unsafe extern "C" fn simptopo_simp_run(
    nelx: usize,
    nely: usize,
    params: *const SimptopoSimpParams,
    fixed_dofs: *const usize,
    n_fixed: usize,
    loads: *const SimptopoPointLoad,
    n_loads: usize,
    out_field: *mut *mut SimptopoField,
    summary: *mut SimptopoSimpSummary,
) -> SimptopoStatus {
    guard(|| {
        let p = *deref(params, "params")?;
        let fixed = array(fixed_dofs, n_fixed, "fixed_dofs")?;
        let loads = array(loads, n_loads, "loads")?;
        let slot = out(out_field, "out_field")?;
        let summary = out(summary, "summary")?;
        let grid = lift(GridDomain::new(nelx, nely))?;
        let config = SimpConfig {
            volfrac: p.volfrac,
            rmin: p.rmin,
            penal: p.penal,
            move_limit: p.move_limit,
            change_tol: p.change_tol,
            max_iters: p.max_iters,
            ..SimpConfig::default()
        };
        let material = MaterialModel {
            e0: p.e0,
            emin: p.emin,
            nu: p.nu,
            penal: p.penal,
        };
        let forces = loads
            .iter()
            .map(|l| PointForce {
                node: l.node,
                fx: l.fx,
                fy: l.fy,
            })
            .collect();
        let lc = LoadCase::new(forces, fixed.to_vec(), "custom");
        let result = lift(simp::run_simp(&grid, &material, &lc, &config))?;
        *summary = SimptopoSimpSummary {
            iterations: result.iterations,
            converged: result.converged,
            compliance: result.final_compliance(),
        };
        *slot = Box::into_raw(Box::new(SimptopoField(result.density)));
        Ok(())
    })
}
