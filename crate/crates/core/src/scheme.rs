//! The nine-point Lax-Wendroff update with stabilizer, split as
//! `u+ = u - w + v` where `v` collects the centred first differences and `w`
//! the second-order terms.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySpec, Field, Geometry, GeometryKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    /// `dt / dx`
    pub lambda: f64,
    /// `dt / dy`
    pub mu: f64,
}

impl Params {
    pub fn new(a: f64, b: f64, lambda: f64, mu: f64) -> Result<Self> {
        let p = Params { a, b, lambda, mu };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the given Courant numbers and unit grid ratios.
    pub fn from_courant(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, 1.0)
    }

    /// Grid ratios from a single time step chosen so that
    /// `alpha^2 + beta^2 = cfl_target`.
    pub fn from_cfl_target(a: f64, b: f64, cfl_target: f64, dx: f64, dy: f64) -> Result<Self> {
        if !(cfl_target > 0.0 && cfl_target.is_finite()) {
            return Err(Error::Params(format!(
                "cfl_target must be positive and finite, got {cfl_target}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::Params(format!("cell sizes must be positive, got {dx}, {dy}")));
        }
        let rate = (a / dx).powi(2) + (b / dy).powi(2);
        if rate == 0.0 {
            return Err(Error::Params(
                "both velocities are zero, so no time step meets a positive cfl_target".into(),
            ));
        }
        let dt = cfl_target.sqrt() / rate.sqrt();
        Self::new(a, b, dt / dx, dt / dy)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("a", self.a), ("b", self.b), ("lambda", self.lambda), ("mu", self.mu)] {
            if !x.is_finite() {
                return Err(Error::Params(format!("{name} = {x} is not finite")));
            }
        }
        if self.lambda <= 0.0 || self.mu <= 0.0 {
            return Err(Error::Params(format!(
                "grid ratios must be positive, got lambda = {}, mu = {}",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.lambda * self.a
    }

    pub fn beta(&self) -> f64 {
        self.mu * self.b
    }

    /// `alpha^2 + beta^2`
    pub fn courant_sq(&self) -> f64 {
        self.alpha().powi(2) + self.beta().powi(2)
    }

    pub fn cfl_satisfied(&self) -> bool {
        self.courant_sq() <= 0.5
    }

    /// The margin `delta` with `alpha^2 + beta^2 = (1 - delta) / 2`; lies in
    /// `[0, 1]` exactly when the CFL condition holds.
    pub fn delta(&self) -> f64 {
        1.0 - 2.0 * self.courant_sq()
    }

    /// Outflow sign requirements of the bounded geometries.
    pub fn check_geometry(&self, geometry: &Geometry) -> Result<()> {
        match geometry.kind() {
            GeometryKind::HalfSpace if self.a >= 0.0 => Err(Error::Precondition(format!(
                "half-space analysis needs a < 0, got a = {}",
                self.a
            ))),
            GeometryKind::QuarterSpace if self.a >= 0.0 || self.b >= 0.0 => {
                Err(Error::Precondition(format!(
                    "quarter-space analysis needs a < 0 and b < 0, got a = {}, b = {}",
                    self.a, self.b
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Coeffs {
    half_alpha: f64,
    half_beta: f64,
    half_alpha_sq: f64,
    half_beta_sq: f64,
    quarter_ab: f64,
    eighth_s: f64,
}

impl Coeffs {
    fn new(p: &Params) -> Self {
        let (alpha, beta) = (p.alpha(), p.beta());
        Coeffs {
            half_alpha: alpha / 2.0,
            half_beta: beta / 2.0,
            half_alpha_sq: alpha * alpha / 2.0,
            half_beta_sq: beta * beta / 2.0,
            quarter_ab: alpha * beta / 4.0,
            eighth_s: (alpha * alpha + beta * beta) / 8.0,
        }
    }
}

// `s`, `m`, `n` are the storage rows k-1, k, k+1; `i` is the storage column of j.

#[inline(always)]
fn v_at(s: &[f64], m: &[f64], n: &[f64], i: usize, c: &Coeffs) -> f64 {
    -c.half_alpha * (m[i + 1] - m[i - 1]) - c.half_beta * (n[i] - s[i])
}

#[inline(always)]
fn w_at(s: &[f64], m: &[f64], n: &[f64], i: usize, c: &Coeffs) -> f64 {
    -c.half_alpha_sq * (m[i + 1] - 2.0 * m[i] + m[i - 1])
        - c.half_beta_sq * (n[i] - 2.0 * m[i] + s[i])
        - c.quarter_ab * (n[i + 1] - s[i + 1] - n[i - 1] + s[i - 1])
        + c.eighth_s
            * (n[i + 1] - 2.0 * m[i + 1] + s[i + 1] - 2.0 * n[i] + 4.0 * m[i] - 2.0 * s[i]
                + n[i - 1]
                - 2.0 * m[i - 1]
                + s[i - 1])
}

#[derive(Clone, Copy)]
enum Part {
    V,
    W,
    Update,
}

/// Storage view of `u` whose ghost ring is fully populated, periodic ghosts
/// included.
fn prepared(u: &Field) -> Result<std::borrow::Cow<'_, Field>> {
    if !u.covers_ring() {
        return Err(Error::Precondition(
            "ghost cells must be filled before applying the scheme".into(),
        ));
    }
    let g = u.geometry();
    if !(g.periodic_x() || g.periodic_y()) {
        return Ok(std::borrow::Cow::Borrowed(u));
    }
    let mut synced = u.clone();
    sync_periodic(&mut synced);
    Ok(std::borrow::Cow::Owned(synced))
}

/// Copies wrapped values into the ghost storage of periodic axes.
pub(crate) fn sync_periodic(u: &mut Field) {
    let g = *u.geometry();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    if g.periodic_x() {
        for k in 0..ny {
            let (first, last) = (u.get(0, k), u.get(nx - 1, k));
            let (l, r) = (g.offset(-1, k), g.offset(nx, k));
            u.values_mut()[l] = last;
            u.values_mut()[r] = first;
        }
    }
    if g.periodic_y() {
        let stride = g.stride();
        let values = u.values_mut();
        let (bottom, first) = (0, stride);
        let (last, top) = (ny as usize * stride, (ny as usize + 1) * stride);
        values.copy_within(last..last + stride, bottom);
        values.copy_within(first..first + stride, top);
        if g.periodic_x() {
            // Corner storage, after the row copies.
            for k in [-1, ny] {
                let wl = values[g.offset(nx - 1, k)];
                let wr = values[g.offset(0, k)];
                values[g.offset(-1, k)] = wl;
                values[g.offset(nx, k)] = wr;
            }
        }
    }
}

fn kernel(u: &Field, params: &Params, part: Part, out: &mut Field) -> Result<()> {
    let g = *u.geometry();
    debug_assert_eq!(g, *out.geometry());
    let (nx, ny) = (g.nx(), g.ny());
    let stride = g.stride();
    let c = Coeffs::new(params);
    let src = u.values();
    let first_bad = out.values_mut()[stride..(ny + 1) * stride]
        .par_chunks_mut(stride)
        .with_min_len(8)
        .enumerate()
        .map(|(r, row)| {
            let base = (r + 1) * stride;
            let s = &src[base - stride..base];
            let m = &src[base..base + stride];
            let n = &src[base + stride..base + 2 * stride];
            let mut bad = None;
            for i in 1..=nx {
                let value = match part {
                    Part::V => v_at(s, m, n, i, &c),
                    Part::W => w_at(s, m, n, i, &c),
                    Part::Update => m[i] - w_at(s, m, n, i, &c) + v_at(s, m, n, i, &c),
                };
                if bad.is_none() && !value.is_finite() {
                    bad = Some((i as isize - 1, r as isize));
                }
                row[i] = value;
            }
            bad
        })
        .find_first(|b| b.is_some())
        .flatten();
    if let Some((j, k)) = first_bad {
        return Err(Error::NonFinite { j, k });
    }
    out.set_region(g.interior_region());
    Ok(())
}

fn interior_output(u: &Field, params: &Params, part: Part) -> Result<Field> {
    params.validate()?;
    let u = prepared(u)?;
    let g = *u.geometry();
    let mut out = Field::zeros(g);
    kernel(&u, params, part, &mut out)?;
    Ok(out)
}

/// `v = -alpha D1,0 u - beta D2,0 u` on the interior.
pub fn compute_v(u: &Field, params: &Params) -> Result<Field> {
    interior_output(u, params, Part::V)
}

/// Second-order part of the update on the interior, in expanded nine-point form.
pub fn compute_w(u: &Field, params: &Params) -> Result<Field> {
    interior_output(u, params, Part::W)
}

/// Interior update `u - w + v` without touching the ghost cells of the result.
pub fn interior_update(u: &Field, params: &Params) -> Result<Field> {
    interior_output(u, params, Part::Update)
}

/// One time step: the interior is updated from level n, then the ghost ring
/// of level n+1 is set from `spec`.
///
/// If `u` has no ghost ring yet it is filled from `spec` first; a ring that
/// is already present is used as given.
pub fn lw_step(u: &Field, params: &Params, spec: &BoundarySpec) -> Result<Field> {
    params.validate()?;
    spec.validate(u.geometry())?;
    params.check_geometry(u.geometry())?;
    let filled;
    let u = if u.covers_ring() {
        u
    } else {
        filled = crate::geometry::fill_ghosts(u, spec)?;
        &filled
    };
    let mut out = interior_update(u, params)?;
    out.fill_ghosts(spec)?;
    Ok(out)
}

/// Allocation-free stepping for long runs. `u` must already carry a ghost
/// ring produced by [`Field::fill_ghosts`] with the same `spec`.
pub fn lw_step_into(
    u: &Field,
    params: &Params,
    spec: &BoundarySpec,
    out: &mut Field,
) -> Result<()> {
    if u.geometry() != out.geometry() {
        return Err(Error::GeometryMismatch);
    }
    let src = prepared(u)?;
    kernel(&src, params, Part::Update, out)?;
    out.fill_ghosts(spec)
}
