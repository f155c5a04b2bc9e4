//! Inner products, boundary traces, and numerical checks of the discrete
//! energy identities and inequalities satisfied by the scheme.
//!
//! Every check is stored as a pair `lhs`, `rhs` with a scale. Identities
//! report `|lhs - rhs| / scale`; inequalities of the form `lhs <= rhs` report
//! the signed slack `(rhs - lhs) / scale`. The scale is the larger of `|u|^2`
//! and the sum of the magnitudes of the individual terms, where an inner
//! product term contributes its Cauchy-Schwarz bound.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySpec, Field, GeometryKind};
use crate::scheme::{compute_v, compute_w, lw_step, Params};
use crate::stencil::{compose, Op};

/// Sum with a fixed binary-tree topology. The result depends only on the
/// order of `xs`, never on the number of worker threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    const PARALLEL: usize = 1 << 15;
    if xs.len() <= BLOCK {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let (left, right) = xs.split_at(xs.len() / 2);
    if xs.len() >= PARALLEL {
        let (l, r) = rayon::join(|| pairwise_sum(left), || pairwise_sum(right));
        l + r
    } else {
        pairwise_sum(left) + pairwise_sum(right)
    }
}

fn first_uncovered(f: &Field) -> Option<(isize, isize)> {
    if f.covers_interior() {
        return None;
    }
    let g = f.geometry();
    let region = f.region();
    for k in 0..g.ny() as isize {
        for j in 0..g.nx() as isize {
            if !region.contains(j, k) {
                return Some((j, k));
            }
        }
    }
    None
}

/// Sum over interior cells of `f * g`.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    if f.geometry() != g.geometry() {
        return Err(Error::GeometryMismatch);
    }
    for h in [f, g] {
        if let Some((j, k)) = first_uncovered(h) {
            return Err(Error::OutOfRange { j, k });
        }
    }
    let ny = f.geometry().ny() as isize;
    let mut products = Vec::with_capacity(f.geometry().interior_len());
    for k in 0..ny {
        products.extend(
            f.interior_row(k)
                .iter()
                .zip(g.interior_row(k))
                .map(|(a, b)| a * b),
        );
    }
    Ok(pairwise_sum(&products))
}

pub fn norm_sq(f: &Field) -> Result<f64> {
    inner_product(f, f)
}

/// Boundary sums along the sides `j = 0` and `k = 0`.
///
/// The second differences use the ghost values, so on a field satisfying
/// the extrapolation rules `lap2(u)_{0,0} = u_{0,1} - u_{0,0}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Traces {
    /// `sum_k u_{0,k}^2`
    pub trace_x: f64,
    /// `sum_j u_{j,0}^2`
    pub trace_y: f64,
    /// `sum_j (lap1 u_{j,0})^2`
    pub trace_lap1: f64,
    /// `sum_k (lap2 u_{0,k})^2`
    pub trace_lap2: f64,
    /// `u_{0,0}^2`
    pub corner_sq: f64,
}

pub fn traces(u: &Field) -> Traces {
    let g = u.geometry();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let col: Vec<f64> = (0..ny).map(|k| u.get(0, k).powi(2)).collect();
    let row: Vec<f64> = (0..nx).map(|j| u.get(j, 0).powi(2)).collect();
    let lap2: Vec<f64> = (0..ny)
        .map(|k| (u.get_or_zero(0, k + 1) - 2.0 * u.get(0, k) + u.get_or_zero(0, k - 1)).powi(2))
        .collect();
    let lap1: Vec<f64> = (0..nx)
        .map(|j| (u.get_or_zero(j + 1, 0) - 2.0 * u.get(j, 0) + u.get_or_zero(j - 1, 0)).powi(2))
        .collect();
    Traces {
        trace_x: pairwise_sum(&col),
        trace_y: pairwise_sum(&row),
        trace_lap1: pairwise_sum(&lap1),
        trace_lap2: pairwise_sum(&lap2),
        corner_sq: u.get(0, 0).powi(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl Check {
    pub fn residual(&self) -> f64 {
        if self.scale > 0.0 {
            (self.lhs - self.rhs).abs() / self.scale
        } else {
            0.0
        }
    }

    pub fn slack(&self) -> f64 {
        if self.scale > 0.0 {
            (self.rhs - self.lhs) / self.scale
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub geometry: GeometryKind,
    pub l2_sq: f64,
    pub trace_x: f64,
    pub trace_y: f64,
    pub trace_lap1: f64,
    pub trace_lap2: f64,
    pub corner_sq: f64,
    pub cfl_satisfied: bool,
    pub identities: BTreeMap<String, Check>,
    pub inequalities: BTreeMap<String, Check>,
}

impl EnergyReport {
    pub fn identity_residuals(&self) -> BTreeMap<String, f64> {
        self.identities
            .iter()
            .map(|(k, c)| (k.clone(), c.residual()))
            .collect()
    }

    pub fn inequality_slacks(&self) -> BTreeMap<String, f64> {
        self.inequalities
            .iter()
            .map(|(k, c)| (k.clone(), c.slack()))
            .collect()
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.identities.values().map(Check::residual).fold(0.0, f64::max)
    }

    pub fn min_inequality_slack(&self) -> f64 {
        self.inequalities
            .values()
            .map(Check::slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.identities.get(name).map(Check::residual)
    }

    pub fn slack(&self, name: &str) -> Option<f64> {
        self.inequalities.get(name).map(Check::slack)
    }
}

/// Intermediate quantities of the bound on `|w|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProofDiagnostics {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub report: EnergyReport,
    pub diagnostics: ProofDiagnostics,
}

impl Verification {
    /// Flat `key = value` block, one entry per line, keys sorted within
    /// each group. Floats use the shortest representation that round-trips.
    pub fn to_key_value(&self) -> String {
        let r = &self.report;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("geometry", r.geometry.name().to_string());
        line("cfl_satisfied", r.cfl_satisfied.to_string());
        for (k, v) in self.scalar_entries() {
            line(&k, format!("{v:e}"));
        }
        out
    }

    /// Numeric entries of [`Verification::to_key_value`], in output order.
    pub fn scalar_entries(&self) -> Vec<(String, f64)> {
        let r = &self.report;
        let mut entries = vec![
            ("l2_sq".to_string(), r.l2_sq),
            ("trace_x".to_string(), r.trace_x),
            ("trace_y".to_string(), r.trace_y),
            ("trace_lap1".to_string(), r.trace_lap1),
            ("trace_lap2".to_string(), r.trace_lap2),
            ("corner_sq".to_string(), r.corner_sq),
        ];
        entries.extend(
            r.identity_residuals()
                .into_iter()
                .map(|(k, v)| (format!("identity.{k}"), v)),
        );
        entries.extend(
            r.inequality_slacks()
                .into_iter()
                .map(|(k, v)| (format!("slack.{k}"), v)),
        );
        entries.push(("diag.A".to_string(), self.diagnostics.a));
        entries.push(("diag.B1".to_string(), self.diagnostics.b1));
        entries.push(("diag.B2".to_string(), self.diagnostics.b2));
        entries
    }
}

/// Parsed form of a `key = value` report block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportSummary {
    pub geometry: Option<String>,
    pub cfl_satisfied: Option<bool>,
    pub values: BTreeMap<String, f64>,
}

impl ReportSummary {
    pub fn of(verification: &Verification) -> Self {
        ReportSummary {
            geometry: Some(verification.report.geometry.name().to_string()),
            cfl_satisfied: Some(verification.report.cfl_satisfied),
            values: verification.scalar_entries().into_iter().collect(),
        }
    }
}

pub fn parse_key_value(text: &str) -> Result<ReportSummary> {
    let mut summary = ReportSummary::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "geometry" => summary.geometry = Some(value.to_string()),
            "cfl_satisfied" => {
                summary.cfl_satisfied = Some(value.parse().map_err(|_| {
                    Error::config(i + 1, format!("cfl_satisfied must be true or false, got `{value}`"))
                })?)
            }
            _ => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::config(i + 1, format!("`{key}` has non-numeric value `{value}`")))?;
                summary.values.insert(key.to_string(), v);
            }
        }
    }
    Ok(summary)
}

#[derive(Clone, Copy)]
struct Term {
    value: f64,
    magnitude: f64,
}

fn term(value: f64) -> Term {
    Term {
        value,
        magnitude: value.abs(),
    }
}

/// Lazily computed operator images of `u` with cached norms.
struct Ctx<'a> {
    u: &'a Field,
    fields: HashMap<Vec<Op>, Rc<Field>>,
    norms: HashMap<Vec<Op>, f64>,
    base: f64,
}

impl<'a> Ctx<'a> {
    fn new(u: &'a Field) -> Result<Self> {
        let base = norm_sq(u)?;
        Ok(Ctx {
            u,
            fields: HashMap::new(),
            norms: HashMap::new(),
            base,
        })
    }

    fn f(&mut self, ops: &[Op]) -> Result<Rc<Field>> {
        if let Some(f) = self.fields.get(ops) {
            return Ok(Rc::clone(f));
        }
        let f = Rc::new(compose(ops, self.u)?);
        self.fields.insert(ops.to_vec(), Rc::clone(&f));
        Ok(f)
    }

    /// `|ops u|^2` over the interior.
    fn sq(&mut self, ops: &[Op]) -> Result<f64> {
        if let Some(&n) = self.norms.get(ops) {
            return Ok(n);
        }
        let f = self.f(ops)?;
        let n = norm_sq(&f)?;
        self.norms.insert(ops.to_vec(), n);
        Ok(n)
    }

    /// `coef * |ops u|^2`
    fn nt(&mut self, coef: f64, ops: &[Op]) -> Result<Term> {
        Ok(term(coef * self.sq(ops)?))
    }

    /// `coef * <p u, q u>`, with its Cauchy-Schwarz magnitude.
    fn ip(&mut self, coef: f64, p: &[Op], q: &[Op]) -> Result<Term> {
        let fp = self.f(p)?;
        let fq = self.f(q)?;
        let value = coef * inner_product(&fp, &fq)?;
        let magnitude = coef.abs() * (self.sq(p)? * self.sq(q)?).sqrt();
        Ok(Term { value, magnitude })
    }
}

fn ip_fields(coef: f64, f: &Field, g: &Field) -> Result<Term> {
    let value = coef * inner_product(f, g)?;
    let magnitude = coef.abs() * (norm_sq(f)? * norm_sq(g)?).sqrt();
    Ok(Term { value, magnitude })
}

#[derive(Default)]
struct Checks {
    identities: BTreeMap<String, Check>,
    inequalities: BTreeMap<String, Check>,
}

fn make_check(base: f64, lhs: &[Term], rhs: &[Term]) -> Check {
    let mag: f64 = lhs.iter().chain(rhs).map(|t| t.magnitude).sum();
    Check {
        lhs: lhs.iter().map(|t| t.value).sum(),
        rhs: rhs.iter().map(|t| t.value).sum(),
        scale: base.max(mag),
    }
}

impl Checks {
    fn identity(&mut self, base: f64, name: &str, lhs: &[Term], rhs: &[Term]) {
        self.identities.insert(name.to_string(), make_check(base, lhs, rhs));
    }

    fn inequality(&mut self, base: f64, name: &str, lhs: &[Term], rhs: &[Term]) {
        self.inequalities.insert(name.to_string(), make_check(base, lhs, rhs));
    }
}

use Op::{
    A1Minus, A1Plus, A2Minus, A2Plus, D1Minus, D1Plus, D1Zero, D2Minus, D2Plus, D2Zero, Lap1,
    Lap2,
};

/// Level-n quantities shared by all geometries.
struct Step {
    uu: f64,
    up: f64,
    vv: f64,
    ww: f64,
    uw: Term,
    uv: Term,
    vw: Term,
}

fn step_quantities(u: &Field, params: &Params, spec: &BoundarySpec) -> Result<Step> {
    let v = compute_v(u, params)?;
    let w = compute_w(u, params)?;
    let next = lw_step(u, params, spec)?;
    Ok(Step {
        uu: norm_sq(u)?,
        up: norm_sq(&next)?,
        vv: norm_sq(&v)?,
        ww: norm_sq(&w)?,
        uw: ip_fields(1.0, u, &w)?,
        uv: ip_fields(1.0, u, &v)?,
        vw: ip_fields(1.0, &v, &w)?,
    })
}

fn scaled(t: Term, c: f64) -> Term {
    Term {
        value: c * t.value,
        magnitude: c.abs() * t.magnitude,
    }
}

/// Checks that hold verbatim on every geometry treated here, hence shared
/// by the three unbounded domains.
fn common_checks(ctx: &mut Ctx, params: &Params, checks: &mut Checks) -> Result<ProofDiagnostics> {
    let (alpha, beta) = (params.alpha(), params.beta());
    let (a2, b2) = (alpha * alpha, beta * beta);
    let s = a2 + b2;
    let base = ctx.base;

    // 4|w|^2 expanded term by term.
    let w = compute_w(ctx.u, params)?;
    let ww4 = term(4.0 * norm_sq(&w)?);
    let expansion = [
        ctx.nt(a2 * a2, &[Lap1])?,
        ctx.nt(b2 * b2, &[Lap2])?,
        ctx.ip(2.0 * a2 * b2, &[Lap1], &[Lap2])?,
        ctx.nt(4.0 * a2 * b2, &[D1Zero, D2Zero])?,
        ctx.nt(s * s / 16.0, &[Lap1, Lap2])?,
        ctx.ip(-s / 2.0 * a2, &[Lap1, Lap2], &[Lap1])?,
        ctx.ip(-s / 2.0 * b2, &[Lap1, Lap2], &[Lap2])?,
        ctx.ip(4.0 * alpha * beta * a2, &[D1Zero, D2Zero], &[Lap1])?,
        ctx.ip(4.0 * alpha * beta * b2, &[D1Zero, D2Zero], &[Lap2])?,
        ctx.ip(-s * alpha * beta, &[D1Zero, D2Zero], &[Lap1, Lap2])?,
    ];
    checks.identity(base, "w_expansion", &[ww4], &expansion);

    // Mixed centred difference split into one-sided pieces.
    let split = [
        ctx.nt(1.0, &[D1Plus, D2Plus])?,
        ctx.nt(-0.25, &[D1Plus, Lap2])?,
        ctx.nt(-0.25, &[D2Plus, Lap1])?,
        ctx.nt(1.0 / 16.0, &[Lap1, Lap2])?,
    ];
    let d1020 = ctx.nt(1.0, &[D1Zero, D2Zero])?;
    checks.identity(base, "d10d20_split", &[d1020], &split);

    let n_l1 = ctx.sq(&[Lap1])?;
    let n_l2 = ctx.sq(&[Lap2])?;
    let n_pp = ctx.sq(&[D1Plus, D2Plus])?;
    let n_d2pl1 = ctx.sq(&[D2Plus, Lap1])?;
    let n_d1pl2 = ctx.sq(&[D1Plus, Lap2])?;

    let cross = ctx.ip(4.0 * alpha * beta, &[D1Zero, Lap2], &[D2Zero, Lap1])?;
    let a_terms = [
        term((a2 - b2) * n_d2pl1),
        term(-(a2 - b2) * n_d1pl2),
        cross,
    ];
    let a_value = a_terms.iter().map(|t| t.value).sum::<f64>();
    checks.inequality(
        base,
        "bound_A",
        &a_terms,
        &[
            term(2.0 * a2 * n_d2pl1),
            term(2.0 * b2 * n_d1pl2),
            ctx.nt(-s / 2.0, &[Lap1, Lap2])?,
        ],
    );

    let dd_l1 = ctx.ip(4.0 * alpha * beta, &[D1Zero, D2Zero], &[Lap1])?;
    let dd_l2 = ctx.ip(4.0 * alpha * beta, &[D1Zero, D2Zero], &[Lap2])?;
    let b1_terms = [term(s / 2.0 * n_d2pl1), dd_l1];
    let b2_terms = [term(s / 2.0 * n_d1pl2), dd_l2];
    let diagnostics = ProofDiagnostics {
        a: a_value,
        b1: b1_terms.iter().map(|t| t.value).sum(),
        b2: b2_terms.iter().map(|t| t.value).sum(),
    };

    checks.inequality(
        base,
        "w_norm_bound",
        &[ww4],
        &[
            term(s * a2 * n_l1),
            term(s * b2 * n_l2),
            term(s * s * n_pp),
            term(s / 2.0 * a2 * n_d2pl1),
            term(s / 2.0 * b2 * n_d1pl2),
            scaled(dd_l1, a2),
            scaled(dd_l2, b2),
        ],
    );
    Ok(diagnostics)
}

fn b_terms(ctx: &mut Ctx, params: &Params, which: Op) -> Result<[Term; 2]> {
    let (alpha, beta) = (params.alpha(), params.beta());
    let s = params.courant_sq();
    let norm = match which {
        Lap1 => ctx.nt(s / 2.0, &[D2Plus, Lap1])?,
        _ => ctx.nt(s / 2.0, &[D1Plus, Lap2])?,
    };
    Ok([norm, ctx.ip(4.0 * alpha * beta, &[D1Zero, D2Zero], &[which])?])
}

fn vv_uw_rhs(ctx: &mut Ctx, params: &Params) -> Result<Vec<Term>> {
    let (a2, b2) = (params.alpha().powi(2), params.beta().powi(2));
    let s = a2 + b2;
    Ok(vec![
        ctx.nt(-a2 / 4.0, &[Lap1])?,
        ctx.nt(-b2 / 4.0, &[Lap2])?,
        ctx.nt(-s / 4.0, &[D1Plus, D2Plus])?,
    ])
}

fn prop_rhs(ctx: &mut Ctx, params: &Params) -> Result<Vec<Term>> {
    let (a2, b2) = (params.alpha().powi(2), params.beta().powi(2));
    let s = a2 + b2;
    Ok(vec![
        ctx.nt(2.0 * s * a2, &[Lap1])?,
        ctx.nt(2.0 * s * b2, &[Lap2])?,
        ctx.nt(2.0 * s * s, &[D1Plus, D2Plus])?,
    ])
}

/// `|A W|^2 + |D W|^2 / 4` against `|W|^2` for an average/difference pair
/// along the same axis, with `W = ops u`.
fn average_split(
    ctx: &mut Ctx,
    avg: Op,
    diff: Op,
    ops: &[Op],
) -> Result<(Vec<Term>, Term)> {
    let with = |op: Op| {
        let mut v = vec![op];
        v.extend_from_slice(ops);
        v
    };
    let a = with(avg);
    let d = with(diff);
    Ok((vec![ctx.nt(1.0, &a)?, ctx.nt(0.25, &d)?], ctx.nt(1.0, ops)?))
}

fn finish(
    kind: GeometryKind,
    params: &Params,
    base: f64,
    tr: Traces,
    checks: Checks,
    diagnostics: ProofDiagnostics,
) -> Verification {
    Verification {
        report: EnergyReport {
            geometry: kind,
            l2_sq: base,
            trace_x: tr.trace_x,
            trace_y: tr.trace_y,
            trace_lap1: tr.trace_lap1,
            trace_lap2: tr.trace_lap2,
            corner_sq: tr.corner_sq,
            cfl_satisfied: params.cfl_satisfied(),
            identities: checks.identities,
            inequalities: checks.inequalities,
        },
        diagnostics,
    }
}

/// Whole-plane checks, evaluated on the periodic torus.
pub fn verify_whole_space(u: &Field, params: &Params) -> Result<Verification> {
    if u.geometry().kind() != GeometryKind::Periodic {
        return Err(Error::Precondition(format!(
            "whole-space checks need periodic geometry, got {}",
            u.geometry().kind()
        )));
    }
    params.validate()?;
    let spec = BoundarySpec::periodic();
    let st = step_quantities(u, params, &spec)?;
    let mut ctx = Ctx::new(u)?;
    let base = ctx.base;
    let mut checks = Checks::default();
    let (a2, b2) = (params.alpha().powi(2), params.beta().powi(2));

    checks.identity(
        base,
        "energy_balance",
        &[term(st.up), term(-st.uu)],
        &[term(st.ww), term(st.vv), scaled(st.uw, -2.0)],
    );
    checks.identity(base, "orthogonality_uv", &[st.uv], &[]);
    checks.identity(base, "orthogonality_vw", &[st.vw], &[]);
    let rhs = vv_uw_rhs(&mut ctx, params)?;
    checks.identity(base, "vv_uw_expansion", &[term(st.vv), scaled(st.uw, -2.0)], &rhs);

    for (name, zero, plus, lap) in [
        ("centered_d1", D1Zero, D1Plus, Lap1),
        ("centered_d2", D2Zero, D2Plus, Lap2),
    ] {
        let lhs = ctx.nt(1.0, &[zero])?;
        let rhs = [ctx.nt(1.0, &[plus])?, ctx.nt(-0.25, &[lap])?];
        checks.identity(base, name, &[lhs], &rhs);
    }
    let lhs = ctx.nt(1.0, &[D1Zero, D2Zero])?;
    let rhs = [
        ctx.nt(1.0, &[D1Plus, D2Plus])?,
        ctx.nt(-0.25, &[D1Plus, Lap2])?,
        ctx.nt(-0.25, &[D2Plus, Lap1])?,
        ctx.nt(1.0 / 16.0, &[Lap1, Lap2])?,
    ];
    checks.identity(base, "centered_d1d2", &[lhs], &rhs);

    let (lhs, rhs) = average_split(&mut ctx, A1Minus, D1Minus, &[D1Plus, D2Plus])?;
    checks.identity(base, "average_split_a1m", &lhs, &[rhs]);
    let (lhs, rhs) = average_split(&mut ctx, A2Plus, D2Plus, &[Lap1])?;
    checks.identity(base, "average_split_a2p", &lhs, &[rhs]);

    let diagnostics = common_checks(&mut ctx, params, &mut checks)?;
    let s = params.courant_sq();

    let rhs = prop_rhs(&mut ctx, params)?;
    checks.inequality(base, "w_bound", &[term(4.0 * st.ww)], &rhs);
    let delta = params.delta();
    checks.inequality(
        base,
        "cfl_energy",
        &[term(st.up), term(-st.uu)],
        &[ctx.nt(-delta / 4.0 * a2, &[Lap1])?, ctx.nt(-delta / 4.0 * b2, &[Lap2])?],
    );
    let n_l1 = ctx.sq(&[Lap1])?;
    let n_l2 = ctx.sq(&[Lap2])?;
    let n_pp = ctx.sq(&[D1Plus, D2Plus])?;
    let b1 = b_terms(&mut ctx, params, Lap1)?;
    checks.inequality(base, "bound_B1", &b1, &[term(s * n_l1), term(s * n_pp)]);
    let b2t = b_terms(&mut ctx, params, Lap2)?;
    checks.inequality(base, "bound_B2", &b2t, &[term(s * n_l2), term(s * n_pp)]);

    Ok(finish(GeometryKind::Periodic, params, base, traces(u), checks, diagnostics))
}

fn check_half_space_membership(u: &Field) -> Result<()> {
    if !u.covers_ring() {
        return Err(Error::Precondition("ghost cells are not filled".into()));
    }
    for k in 0..u.geometry().ny() as isize {
        let (ghost, expected) = (u.get(-1, k), u.get(0, k));
        if ghost != expected {
            return Err(Error::Membership { j: -1, k, ghost, expected });
        }
    }
    Ok(())
}

fn check_quarter_space_membership(u: &Field) -> Result<()> {
    check_half_space_membership(u)?;
    for j in 0..u.geometry().nx() as isize {
        let (ghost, expected) = (u.get(j, -1), u.get(j, 0));
        if ghost != expected {
            return Err(Error::Membership { j, k: -1, ghost, expected });
        }
    }
    let (ghost, expected) = (u.get(-1, -1), u.get(0, 0));
    if ghost != expected {
        return Err(Error::Membership { j: -1, k: -1, ghost, expected });
    }
    Ok(())
}

/// The four one-sided adjointness relations for `U = pre u` along axis `p`,
/// with `V = U * U` as second operand.
fn one_sided_relations(
    ctx: &mut Ctx,
    checks: &mut Checks,
    tag: &str,
    pre: &[Op],
    (zero, plus, lap): (Op, Op, Op),
) -> Result<()> {
    let base = ctx.base;
    let big_u = ctx.f(pre)?;
    let big_v = big_u.map(|x| x * x);
    let lap_v = compose(&[lap], &big_v)?;
    let lap_u = ctx.f(&with_prefix(lap, pre))?;
    checks.identity(
        base,
        &format!("{tag}_1"),
        &[ip_fields(1.0, &big_u, &lap_v)?],
        &[ip_fields(1.0, &lap_u, &big_v)?],
    );
    let t = ctx.ip(1.0, &with_prefix(zero, pre), &with_prefix(lap, pre))?;
    checks.identity(base, &format!("{tag}_2"), &[t], &[]);
    let t = ctx.ip(1.0, pre, &with_prefix(lap, pre))?;
    let r = ctx.nt(-1.0, &with_prefix(plus, pre))?;
    checks.identity(base, &format!("{tag}_3"), &[t], &[r]);
    let l = ctx.nt(1.0, &with_prefix(zero, pre))?;
    let r = [
        ctx.nt(1.0, &with_prefix(plus, pre))?,
        ctx.nt(-0.25, &with_prefix(lap, pre))?,
    ];
    checks.identity(base, &format!("{tag}_4"), &[l], &r);
    Ok(())
}

fn with_prefix(op: Op, pre: &[Op]) -> Vec<Op> {
    let mut v = vec![op];
    v.extend_from_slice(pre);
    v
}

/// Sum and absolute sum of `f(i)` over `0..n`.
fn boundary_sum(n: isize, f: impl Fn(isize) -> f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..n).map(f).collect();
    let abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    (pairwise_sum(&xs), pairwise_sum(&abs))
}

/// Half-space checks: `j >= 0` with extrapolation at `j = -1`, periodic in `k`.
pub fn verify_half_space(u: &Field, params: &Params) -> Result<Verification> {
    if u.geometry().kind() != GeometryKind::HalfSpace {
        return Err(Error::Precondition(format!(
            "half-space checks need half-space geometry, got {}",
            u.geometry().kind()
        )));
    }
    params.validate()?;
    params.check_geometry(u.geometry())?;
    check_half_space_membership(u)?;

    let spec = BoundarySpec::half_space();
    let st = step_quantities(u, params, &spec)?;
    let mut ctx = Ctx::new(u)?;
    let base = ctx.base;
    let mut checks = Checks::default();
    let tr = traces(u);
    let (alpha, beta) = (params.alpha(), params.beta());
    let (a2, b2) = (alpha * alpha, beta * beta);
    let s = a2 + b2;
    let la = params.lambda * params.a.abs();
    let ny = u.geometry().ny() as isize;

    checks.identity(base, "boundary_uv", &[scaled(st.uv, 2.0)], &[term(-la * tr.trace_x)]);
    let lap2_0 = |k: isize| u.get(0, k + 1) - 2.0 * u.get(0, k) + u.get(0, k - 1);
    let (x, x_abs) = boundary_sum(ny, |k| u.get(0, k) * lap2_0(k + 1));
    let c = -la * b2 / 2.0;
    checks.identity(
        base,
        "boundary_vw",
        &[scaled(st.vw, 2.0)],
        &[Term { value: c * x, magnitude: c.abs() * x_abs }],
    );

    one_sided_relations(&mut ctx, &mut checks, "one_sided", &[], (D1Zero, D1Plus, Lap1))?;
    one_sided_relations(&mut ctx, &mut checks, "one_sided_d2u", &[D2Plus], (D1Zero, D1Plus, Lap1))?;

    let rhs = vv_uw_rhs(&mut ctx, params)?;
    checks.identity(base, "vv_uw_boundary", &[term(st.vv), scaled(st.uw, -2.0)], &rhs);

    let (lhs, rhs) = average_split(&mut ctx, A2Minus, D2Minus, &[D1Plus, D2Plus])?;
    checks.identity(base, "average_split_a2m", &lhs, &[rhs]);
    let (lhs, rhs) = average_split(&mut ctx, A1Plus, D1Plus, &[Lap2])?;
    checks.identity(
        base,
        "average_split_boundary",
        &lhs,
        &[rhs, term(-0.5 * tr.trace_lap2)],
    );
    let lhs = ctx.nt(1.0, &[A2Plus, Lap1])?;
    let rhs = [ctx.nt(1.0, &[Lap1])?, ctx.nt(-0.25, &[D2Plus, Lap1])?];
    checks.identity(base, "average_a2p_lap1", &[lhs], &rhs);
    let lhs = ctx.nt(1.0, &[A1Minus, D1Plus, D2Plus])?;
    let rhs = [ctx.nt(1.0, &[D1Plus, D2Plus])?, ctx.nt(-0.25, &[D2Plus, Lap1])?];
    checks.identity(base, "average_a1m_mixed", &[lhs], &rhs);

    checks.identity(
        base,
        "energy_balance",
        &[term(st.up), term(-st.uu)],
        &[
            term(st.ww),
            term(st.vv),
            scaled(st.uw, -2.0),
            scaled(st.uv, 2.0),
            scaled(st.vw, -2.0),
        ],
    );

    let diagnostics = common_checks(&mut ctx, params, &mut checks)?;

    checks.inequality(
        base,
        "cfl_energy",
        &[term(la / 2.0 * tr.trace_x), term(-b2 * s / 16.0 * tr.trace_lap2)],
        &[scaled(st.vw, 2.0), scaled(st.uv, -2.0)],
    );
    let n_l1 = ctx.sq(&[Lap1])?;
    let n_l2 = ctx.sq(&[Lap2])?;
    let n_pp = ctx.sq(&[D1Plus, D2Plus])?;
    let b1 = b_terms(&mut ctx, params, Lap1)?;
    checks.inequality(base, "bound_B1", &b1, &[term(s * n_l1), term(s * n_pp)]);
    let b2t = b_terms(&mut ctx, params, Lap2)?;
    checks.inequality(
        base,
        "bound_B2",
        &b2t,
        &[term(s * n_l2), term(s * n_pp), term(-s / 2.0 * tr.trace_lap2)],
    );
    let rhs = prop_rhs(&mut ctx, params)?;
    checks.inequality(
        base,
        "w_bound",
        &[term(4.0 * st.ww), term(b2 * s / 2.0 * tr.trace_lap2)],
        &rhs,
    );
    checks.inequality(
        base,
        "symmetric_part",
        &[term(st.ww), term(st.vv), scaled(st.uw, -2.0)],
        &[term(-b2 * s / 8.0 * tr.trace_lap2)],
    );
    checks.inequality(
        base,
        "stability_estimate",
        &[
            term(st.up),
            term(-st.uu),
            term(la / 2.0 * tr.trace_x),
            term(b2 * s / 16.0 * tr.trace_lap2),
        ],
        &[],
    );

    Ok(finish(GeometryKind::HalfSpace, params, base, tr, checks, diagnostics))
}

/// Quarter-space checks: `j, k >= 0` with extrapolation on both outflow sides
/// and the corner ghost equal to `u_{0,0}`.
pub fn verify_quarter_space(u: &Field, params: &Params) -> Result<Verification> {
    if u.geometry().kind() != GeometryKind::QuarterSpace {
        return Err(Error::Precondition(format!(
            "quarter-space checks need quarter-space geometry, got {}",
            u.geometry().kind()
        )));
    }
    params.validate()?;
    params.check_geometry(u.geometry())?;
    check_quarter_space_membership(u)?;

    let spec = BoundarySpec::canonical(GeometryKind::QuarterSpace);
    let st = step_quantities(u, params, &spec)?;
    let mut ctx = Ctx::new(u)?;
    let base = ctx.base;
    let mut checks = Checks::default();
    let tr = traces(u);
    let (alpha, beta) = (params.alpha(), params.beta());
    let (a2, b2) = (alpha * alpha, beta * beta);
    let s = a2 + b2;
    let la = params.lambda * params.a.abs();
    let mb = params.mu * params.b.abs();
    let (nx, ny) = (u.geometry().nx() as isize, u.geometry().ny() as isize);

    checks.identity(
        base,
        "corner_uv",
        &[scaled(st.uv, 2.0)],
        &[term(-la * tr.trace_x), term(-mb * tr.trace_y)],
    );

    let lap2_0 = |k: isize| u.get_or_zero(0, k + 1) - 2.0 * u.get(0, k) + u.get(0, k - 1);
    let lap1_0 = |j: isize| u.get_or_zero(j + 1, 0) - 2.0 * u.get(j, 0) + u.get(j - 1, 0);
    let (xk, xk_abs) = boundary_sum(ny, |k| u.get(0, k) * lap2_0(k + 1));
    let (xj, xj_abs) = boundary_sum(nx, |j| u.get(j, 0) * lap1_0(j + 1));
    let c00 = u.get(0, 0);
    let (ck, cj) = (-la * b2 / 2.0, -a2 * mb / 2.0);
    let corner2 = c00 * lap2_0(0);
    let corner1 = c00 * lap1_0(0);
    checks.identity(
        base,
        "corner_vw",
        &[scaled(st.vw, 2.0)],
        &[
            Term { value: ck * xk, magnitude: ck.abs() * xk_abs },
            Term { value: cj * xj, magnitude: cj.abs() * xj_abs },
            term(ck * corner2),
            term(cj * corner1),
        ],
    );

    let mut rhs = vv_uw_rhs(&mut ctx, params)?;
    rhs.push(term(la * mb * tr.corner_sq));
    checks.identity(base, "vv_uw_corner", &[term(st.vv), scaled(st.uw, -2.0)], &rhs);

    one_sided_relations(&mut ctx, &mut checks, "one_sided_x", &[], (D1Zero, D1Plus, Lap1))?;
    one_sided_relations(&mut ctx, &mut checks, "one_sided_y", &[], (D2Zero, D2Plus, Lap2))?;

    let (lhs, rhs) = average_split(&mut ctx, A2Minus, D2Minus, &[D1Plus, D2Plus])?;
    checks.identity(base, "average_split_a2m", &lhs, &[rhs]);

    checks.identity(
        base,
        "energy_balance",
        &[term(st.up), term(-st.uu)],
        &[
            term(st.ww),
            term(st.vv),
            scaled(st.uw, -2.0),
            scaled(st.uv, 2.0),
            scaled(st.vw, -2.0),
        ],
    );

    let diagnostics = common_checks(&mut ctx, params, &mut checks)?;

    let r2 = std::f64::consts::SQRT_2;
    checks.inequality(
        base,
        "young_vw",
        &[Term { value: (2.0 * st.vw.value).abs(), magnitude: 2.0 * st.vw.magnitude }],
        &[
            term(la / 2.0 * tr.trace_x),
            term(mb / 2.0 * tr.trace_y),
            term(b2 * s / (8.0 * r2) * tr.trace_lap2),
            term(a2 * s / (8.0 * r2) * tr.trace_lap1),
        ],
    );
    let n_l1 = ctx.sq(&[Lap1])?;
    let n_l2 = ctx.sq(&[Lap2])?;
    let n_pp = ctx.sq(&[D1Plus, D2Plus])?;
    let b1 = b_terms(&mut ctx, params, Lap1)?;
    checks.inequality(
        base,
        "bound_B1",
        &b1,
        &[term(s * n_l1), term(s * n_pp), term(-s / 2.0 * tr.trace_lap1)],
    );
    let b2t = b_terms(&mut ctx, params, Lap2)?;
    checks.inequality(
        base,
        "bound_B2",
        &b2t,
        &[term(s * n_l2), term(s * n_pp), term(-s / 2.0 * tr.trace_lap2)],
    );
    let rhs = prop_rhs(&mut ctx, params)?;
    checks.inequality(
        base,
        "w_bound",
        &[
            term(4.0 * st.ww),
            term(b2 * s / 2.0 * tr.trace_lap2),
            term(a2 * s / 2.0 * tr.trace_lap1),
        ],
        &rhs,
    );
    let m = s - 0.5;
    checks.inequality(
        base,
        "corner_trace_bound",
        &[
            term(st.ww),
            term(st.vv),
            scaled(st.uw, -2.0),
            term(-la * mb * tr.corner_sq),
        ],
        &[
            term(a2 / 2.0 * m * n_l1),
            term(b2 / 2.0 * m * n_l2),
            term(s / 2.0 * m * n_pp),
            term(-b2 * s / 8.0 * tr.trace_lap2),
            term(-a2 * s / 8.0 * tr.trace_lap1),
        ],
    );
    checks.inequality(
        base,
        "stability_estimate",
        &[
            term(st.up),
            term(-st.uu),
            term(la / 8.0 * tr.trace_x),
            term(mb / 8.0 * tr.trace_y),
            term(b2 * s / 32.0 * tr.trace_lap2),
            term(a2 * s / 32.0 * tr.trace_lap1),
        ],
        &[],
    );

    Ok(finish(GeometryKind::QuarterSpace, params, base, tr, checks, diagnostics))
}

/// Runs the checks matching the field's geometry. Rectangles have no
/// analysed energy estimate and are rejected.
pub fn verify(u: &Field, params: &Params) -> Result<Verification> {
    match u.geometry().kind() {
        GeometryKind::Periodic => verify_whole_space(u, params),
        GeometryKind::HalfSpace => verify_half_space(u, params),
        GeometryKind::QuarterSpace => verify_quarter_space(u, params),
        GeometryKind::Rectangle => Err(Error::Precondition(
            "no energy checks are defined for rectangle geometry".into(),
        )),
    }
}
