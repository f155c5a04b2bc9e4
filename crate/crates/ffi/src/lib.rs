//! C ABI over the `lw2d` crate.
//!
//! Fields are opaque heap handles created by [`lw2d_field_new`] and released
//! by [`lw2d_field_free`]. Every other function returns an [`Lw2dStatus`];
//! on failure a description is available from [`lw2d_last_error_message`]
//! until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lw2d::harness::{run_experiment, BlowUpReason, ExperimentConfig};
use lw2d::{
    BoundarySpec, CornerRule, Error, Field, Geometry, GeometryKind, MixedCorner, Params, SideRule,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lw2dStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Precondition = 4,
    BlowUp = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lw2dGeometry {
    Periodic = 0,
    HalfSpace = 1,
    QuarterSpace = 2,
    Rectangle = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lw2dSideKind {
    Extrapolation = 0,
    Dirichlet = 1,
    Periodic = 2,
}

/// One side of the box. `value` is used only by `Dirichlet`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct Lw2dSide {
    pub kind: Lw2dSideKind,
    pub value: f64,
}

/// Boundary rules. `has_corner` selects whether `corner_delta` applies;
/// `mixed_extrapolate` nonzero makes Dirichlet/extrapolation corners copy
/// the interior neighbour instead of the Dirichlet value.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct Lw2dBoundary {
    pub left: Lw2dSide,
    pub right: Lw2dSide,
    pub bottom: Lw2dSide,
    pub top: Lw2dSide,
    pub has_corner: c_int,
    pub corner_delta: f64,
    pub mixed_extrapolate: c_int,
}

/// `a`, `b` velocities; `lambda = dt/dx`, `mu = dt/dy`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct Lw2dParams {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Opaque grid function.
pub struct Lw2dField {
    inner: Field,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> Lw2dStatus {
    match e {
        Error::Config { .. } => Lw2dStatus::Config,
        Error::Io { .. } => Lw2dStatus::Io,
        Error::Precondition(_) | Error::Membership { .. } | Error::OutOfRange { .. } => {
            Lw2dStatus::Precondition
        }
        Error::NonFinite { .. } => Lw2dStatus::BlowUp,
        _ => Lw2dStatus::InvalidArgument,
    }
}

struct Failure(Lw2dStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(Lw2dStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Lw2dStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Lw2dStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            Lw2dStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn kind_of(g: Lw2dGeometry) -> GeometryKind {
    match g {
        Lw2dGeometry::Periodic => GeometryKind::Periodic,
        Lw2dGeometry::HalfSpace => GeometryKind::HalfSpace,
        Lw2dGeometry::QuarterSpace => GeometryKind::QuarterSpace,
        Lw2dGeometry::Rectangle => GeometryKind::Rectangle,
    }
}

fn side_of(s: Lw2dSide) -> SideRule {
    match s.kind {
        Lw2dSideKind::Extrapolation => SideRule::Extrapolation,
        Lw2dSideKind::Dirichlet => SideRule::Dirichlet(s.value),
        Lw2dSideKind::Periodic => SideRule::Periodic,
    }
}

fn side_to_c(s: SideRule) -> Lw2dSide {
    match s {
        SideRule::Extrapolation => Lw2dSide { kind: Lw2dSideKind::Extrapolation, value: 0.0 },
        SideRule::Dirichlet(v) => Lw2dSide { kind: Lw2dSideKind::Dirichlet, value: v },
        SideRule::Periodic => Lw2dSide { kind: Lw2dSideKind::Periodic, value: 0.0 },
    }
}

fn spec_of(b: &Lw2dBoundary) -> BoundarySpec {
    BoundarySpec {
        left: side_of(b.left),
        right: side_of(b.right),
        bottom: side_of(b.bottom),
        top: side_of(b.top),
        corner_rule: (b.has_corner != 0).then_some(CornerRule::ScaledCorner(b.corner_delta)),
        mixed_corner: if b.mixed_extrapolate != 0 {
            MixedCorner::Extrapolate
        } else {
            MixedCorner::Dirichlet
        },
    }
}

fn params_of(p: &Lw2dParams) -> Result<Params, Failure> {
    Ok(Params::new(p.a, p.b, p.lambda, p.mu)?)
}

/// Allocates a zero field. `out` receives the handle.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_new(
    geometry: Lw2dGeometry,
    nx: usize,
    ny: usize,
    out: *mut *mut Lw2dField,
) -> Lw2dStatus {
    guard(|| {
        let slot = deref_mut(out, "out")?;
        let g = Geometry::new(kind_of(geometry), nx, ny)?;
        *slot = Box::into_raw(Box::new(Lw2dField { inner: Field::zeros(g) }));
        Ok(())
    })
}

/// Releases a handle from [`lw2d_field_new`]. Null is ignored.
///
/// # Safety
/// `field` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_free(field: *mut Lw2dField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

fn check_cell(f: &Field, j: isize, k: isize) -> Result<(), Failure> {
    if f.geometry().in_storage(j, k) {
        Ok(())
    } else {
        Err(Failure(
            Lw2dStatus::InvalidArgument,
            format!("cell ({j}, {k}) is outside the grid and its ghost ring"),
        ))
    }
}

/// Writes one value. Ghost cells `-1` and `n` are addressable.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_set(field: *mut Lw2dField, j: isize, k: isize, value: f64) -> Lw2dStatus {
    guard(|| {
        let f = &mut deref_mut(field, "field")?.inner;
        check_cell(f, j, k)?;
        f.set(j, k, value);
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_get(field: *const Lw2dField, j: isize, k: isize, out: *mut f64) -> Lw2dStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        let slot = deref_mut(out, "out")?;
        check_cell(f, j, k)?;
        *slot = f.get(j, k);
        Ok(())
    })
}

/// Replaces the interior with `len = nx * ny` values in row-major order
/// (`j` fastest). Ghost cells are cleared.
///
/// # Safety
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_set_interior(field: *mut Lw2dField, values: *const f64, len: usize) -> Lw2dStatus {
    guard(|| {
        let f = deref_mut(field, "field")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let data = std::slice::from_raw_parts(values, len);
        f.inner = Field::from_interior(*f.inner.geometry(), data)?;
        Ok(())
    })
}

/// Copies the interior into `out`, which holds `len = nx * ny` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_copy_interior(field: *const Lw2dField, out: *mut f64, len: usize) -> Lw2dStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let values = f.interior();
        if values.len() != len {
            return Err(Failure(
                Lw2dStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&values);
        Ok(())
    })
}

/// The rule set the energy analysis uses for `geometry`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lw2d_boundary_canonical(geometry: Lw2dGeometry, out: *mut Lw2dBoundary) -> Lw2dStatus {
    guard(|| {
        let slot = deref_mut(out, "out")?;
        let s = BoundarySpec::canonical(kind_of(geometry));
        *slot = Lw2dBoundary {
            left: side_to_c(s.left),
            right: side_to_c(s.right),
            bottom: side_to_c(s.bottom),
            top: side_to_c(s.top),
            has_corner: c_int::from(s.corner_rule.is_some()),
            corner_delta: s.corner_rule.map_or(0.0, |c| c.delta()),
            mixed_extrapolate: 0,
        };
        Ok(())
    })
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lw2d_field_fill_ghosts(field: *mut Lw2dField, boundary: *const Lw2dBoundary) -> Lw2dStatus {
    guard(|| {
        let f = &mut deref_mut(field, "field")?.inner;
        let spec = spec_of(deref(boundary, "boundary")?);
        spec.validate(f.geometry())?;
        f.fill_ghosts(&spec)?;
        Ok(())
    })
}

/// One time step from `u` into `out`, which must share its geometry.
/// `u` gets its ghost ring from `boundary` first if it has none.
///
/// # Safety
/// Pointers must be null or valid; `u` and `out` must be distinct handles.
#[no_mangle]
pub unsafe extern "C" fn lw2d_step(
    u: *const Lw2dField,
    params: *const Lw2dParams,
    boundary: *const Lw2dBoundary,
    out: *mut Lw2dField,
) -> Lw2dStatus {
    guard(|| {
        if std::ptr::eq(u, out) {
            return Err(Failure(Lw2dStatus::InvalidArgument, "u and out must differ".into()));
        }
        let src = &deref(u, "u")?.inner;
        let dst = deref_mut(out, "out")?;
        if src.geometry() != dst.inner.geometry() {
            return Err(Error::GeometryMismatch.into());
        }
        let p = params_of(deref(params, "params")?)?;
        let spec = spec_of(deref(boundary, "boundary")?);
        dst.inner = lw2d::lw_step(src, &p, &spec)?;
        Ok(())
    })
}

/// Unweighted sum of squares over the interior.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lw2d_l2_sq(field: *const Lw2dField, out: *mut f64) -> Lw2dStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        *deref_mut(out, "out")? = lw2d::norm_sq(f)?;
        Ok(())
    })
}

/// Amplification factor at `(xi, eta)`, clamped to `[-pi, pi]`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lw2d_amplification(
    params: *const Lw2dParams,
    xi: f64,
    eta: f64,
    re: *mut f64,
    im: *mut f64,
) -> Lw2dStatus {
    guard(|| {
        let p = params_of(deref(params, "params")?)?;
        let g = lw2d::amplification_factor(&p, lw2d::Frequency::new(xi, eta));
        *deref_mut(re, "re")? = g.re;
        *deref_mut(im, "im")? = g.im;
        Ok(())
    })
}

/// Runs the energy checks for the field's geometry.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lw2d_verify(
    field: *const Lw2dField,
    params: *const Lw2dParams,
    max_identity_residual: *mut f64,
    min_inequality_slack: *mut f64,
) -> Lw2dStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        let p = params_of(deref(params, "params")?)?;
        let v = lw2d::verify(f, &p)?;
        *deref_mut(max_identity_residual, "max_identity_residual")? = v.report.max_identity_residual();
        *deref_mut(min_inequality_slack, "min_inequality_slack")? = v.report.min_inequality_slack();
        Ok(())
    })
}

/// Runs a config file and writes its outputs. `steps_run` receives the
/// number of completed steps; on blow-up the status is `BlowUp`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `steps_run` null or writable.
#[no_mangle]
pub unsafe extern "C" fn lw2d_run_config(path: *const c_char, steps_run: *mut usize) -> Lw2dStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(Lw2dStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let slot = deref_mut(steps_run, "steps_run")?;
        let out = run_experiment(&ExperimentConfig::from_file(path)?)?;
        *slot = out.trace.rows.len() - 1;
        match out.trace.blowup {
            None => Ok(()),
            Some(b) => Err(Failure(
                Lw2dStatus::BlowUp,
                match b.reason {
                    BlowUpReason::Growth { ratio } => format!("norm grew by {ratio:e} at step {}", b.step),
                    BlowUpReason::NonFinite { j, k } => format!("non-finite value at ({j}, {k}) in step {}", b.step),
                },
            )),
        }
    })
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lw2d_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
