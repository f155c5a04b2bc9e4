//! Difference and average operators on grid functions.
//!
//! Each operator is a literal one-cell stencil. Compositions are applied one
//! operator at a time; along a non-periodic axis every application shrinks
//! the defined region by the operator's reach, so a composition that would
//! need a second ghost ring is reported on the smaller region it can cover.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Extent, Field, GeometryKind, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    D1Plus,
    D1Minus,
    D2Plus,
    D2Minus,
    D1Zero,
    D2Zero,
    Lap1,
    Lap2,
    A1Plus,
    A1Minus,
    A2Plus,
    A2Minus,
}

impl Op {
    pub const ALL: [Op; 12] = [
        Op::D1Plus,
        Op::D1Minus,
        Op::D2Plus,
        Op::D2Minus,
        Op::D1Zero,
        Op::D2Zero,
        Op::Lap1,
        Op::Lap2,
        Op::A1Plus,
        Op::A1Minus,
        Op::A2Plus,
        Op::A2Minus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::D1Plus => "d1_plus",
            Op::D1Minus => "d1_minus",
            Op::D2Plus => "d2_plus",
            Op::D2Minus => "d2_minus",
            Op::D1Zero => "d1_zero",
            Op::D2Zero => "d2_zero",
            Op::Lap1 => "lap1",
            Op::Lap2 => "lap2",
            Op::A1Plus => "a1_plus",
            Op::A1Minus => "a1_minus",
            Op::A2Plus => "a2_plus",
            Op::A2Minus => "a2_minus",
        }
    }

    /// Offsets read along x and y, as inclusive `(min, max)` pairs.
    fn reach(self) -> ((isize, isize), (isize, isize)) {
        match self {
            Op::D1Plus | Op::A1Plus => ((0, 1), (0, 0)),
            Op::D1Minus | Op::A1Minus => ((-1, 0), (0, 0)),
            Op::D1Zero | Op::Lap1 => ((-1, 1), (0, 0)),
            Op::D2Plus | Op::A2Plus => ((0, 0), (0, 1)),
            Op::D2Minus | Op::A2Minus => ((0, 0), (-1, 0)),
            Op::D2Zero | Op::Lap2 => ((0, 0), (-1, 1)),
        }
    }

    /// Value of the operator at a cell given its neighbours along the
    /// operator's axis: `lo` at offset -1, `c` at 0, `hi` at +1.
    #[inline]
    fn eval(self, lo: f64, c: f64, hi: f64) -> f64 {
        match self {
            Op::D1Plus | Op::D2Plus => hi - c,
            Op::D1Minus | Op::D2Minus => c - lo,
            Op::D1Zero | Op::D2Zero => (hi - lo) / 2.0,
            Op::Lap1 | Op::Lap2 => hi - 2.0 * c + lo,
            Op::A1Plus | Op::A2Plus => (hi + c) / 2.0,
            Op::A1Minus | Op::A2Minus => (c + lo) / 2.0,
        }
    }

    fn along_x(self) -> bool {
        matches!(
            self,
            Op::D1Plus | Op::D1Minus | Op::D1Zero | Op::Lap1 | Op::A1Plus | Op::A1Minus
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StencilKind {
    Single(Op),
    /// Applied in list order: the first element acts on the field first.
    Composite(Vec<Op>),
}

impl StencilKind {
    pub fn ops(&self) -> &[Op] {
        match self {
            StencilKind::Single(op) => std::slice::from_ref(op),
            StencilKind::Composite(ops) => ops,
        }
    }
}

impl From<Op> for StencilKind {
    fn from(op: Op) -> Self {
        StencilKind::Single(op)
    }
}

pub fn apply_stencil(kind: &StencilKind, field: &Field) -> Result<Field> {
    let mut ops = kind.ops().iter();
    let Some(&first) = ops.next() else {
        return Ok(field.clone());
    };
    let mut out = apply(first, field)?;
    for &op in ops {
        out = apply(op, &out)?;
    }
    Ok(out)
}

/// Applies the operators right to left, as in the usual operator notation:
/// `compose(&[Op::D2Plus, Op::Lap1], u)` is `D2+ (Lap1 u)`.
pub fn compose(ops: &[Op], field: &Field) -> Result<Field> {
    let mut out = field.clone();
    for &op in ops.iter().rev() {
        out = apply(op, &out)?;
    }
    Ok(out)
}

/// Single operator application.
pub fn apply(op: Op, field: &Field) -> Result<Field> {
    let geometry = *field.geometry();
    let (nx, ny) = (geometry.nx() as isize, geometry.ny() as isize);
    let ((xmin, xmax), (ymin, ymax)) = op.reach();
    let input = field.region();
    let region = Region {
        x: clip(input.x.shrink(xmin, xmax), nx),
        y: clip(input.y.shrink(ymin, ymax), ny),
    };
    let (jlo, jhi) = bounds(region.x, nx);
    let (klo, khi) = bounds(region.y, ny);
    if jlo >= jhi || klo >= khi {
        let (j, k) = (jlo.min(nx - 1), klo.min(ny - 1));
        return Err(Error::OutOfRange { j, k });
    }

    let mut out = Field::with_region(geometry, region);
    let stride = geometry.stride();
    let x = op.along_x();
    let (reads_lo, reads_hi) = if x { (xmin < 0, xmax > 0) } else { (ymin < 0, ymax > 0) };
    let first_row = (klo + 1) as usize;
    let rows = (khi - klo) as usize;
    out.values_mut()[first_row * stride..(first_row + rows) * stride]
        .par_chunks_mut(stride)
        .with_min_len(16)
        .enumerate()
        .for_each(|(r, row)| {
            let k = klo + r as isize;
            for j in jlo..jhi {
                let (dj, dk) = if x { (1, 0) } else { (0, 1) };
                let lo = if reads_lo { field.get(j - dj, k - dk) } else { 0.0 };
                let hi = if reads_hi { field.get(j + dj, k + dk) } else { 0.0 };
                let c = field.get(j, k);
                row[(j + 1) as usize] = op.eval(lo, c, hi);
            }
        });
    Ok(out)
}

fn clip(extent: Extent, n: isize) -> Extent {
    match extent {
        Extent::Wrap => Extent::Wrap,
        Extent::Span { lo, hi } => {
            let lo = lo.max(-1);
            Extent::Span {
                lo,
                hi: hi.min(n + 1).max(lo),
            }
        }
    }
}

fn bounds(extent: Extent, n: isize) -> (isize, isize) {
    match extent {
        Extent::Wrap => (0, n),
        Extent::Span { lo, hi } => (lo, hi),
    }
}

/// Normalised residuals of the operator relations on a periodic field.
///
/// The second operand of the adjointness checks is built from `u` as
/// `v(j, k) = u(j, k)^2 + u(j - 1, k - 2)`, so the report depends on `u`
/// alone. Inner-product residuals are divided by `|u| |v|`, pointwise ones
/// by `max |u|`, and norm identities by `|u|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraReport {
    pub residuals: BTreeMap<String, f64>,
}

impl AlgebraReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

pub fn check_operator_algebra(u: &Field) -> Result<AlgebraReport> {
    let geometry = *u.geometry();
    if geometry.kind() != GeometryKind::Periodic {
        return Err(Error::Precondition(format!(
            "operator algebra checks need periodic geometry, got {}",
            geometry.kind()
        )));
    }
    let (nx, ny) = (geometry.nx() as isize, geometry.ny() as isize);
    let mut v = Field::zeros(geometry);
    for k in 0..ny {
        for j in 0..nx {
            let x = u.get(j, k);
            v.set(j, k, x * x + u.get(j - 1, k - 2));
        }
    }

    let dot = |f: &Field, g: &Field| -> Result<f64> {
        crate::energy::inner_product(f, g)
    };
    let uu = dot(u, u)?;
    let vv = dot(&v, &v)?;
    let ip_scale = (uu * vv).sqrt();
    let sup = u.interior().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ratio = |r: f64, s: f64| if s > 0.0 { r.abs() / s } else { 0.0 };

    let mut residuals = BTreeMap::new();
    let mut put = |name: &str, value: f64| {
        residuals.insert(name.to_string(), value);
    };

    for (name, op, sign) in [
        ("skew_d1_zero", Op::D1Zero, 1.0),
        ("skew_d2_zero", Op::D2Zero, 1.0),
        ("self_lap1", Op::Lap1, -1.0),
        ("self_lap2", Op::Lap2, -1.0),
    ] {
        let r = dot(&apply(op, u)?, &v)? + sign * dot(u, &apply(op, &v)?)?;
        put(name, ratio(r, ip_scale));
    }
    for (name, op, adj, sign) in [
        ("adjoint_d1", Op::D1Minus, Op::D1Plus, 1.0),
        ("adjoint_d2", Op::D2Minus, Op::D2Plus, 1.0),
        ("adjoint_a1", Op::A1Plus, Op::A1Minus, -1.0),
        ("adjoint_a2", Op::A2Plus, Op::A2Minus, -1.0),
    ] {
        let r = dot(&apply(op, u)?, &v)? + sign * dot(u, &apply(adj, &v)?)?;
        put(name, ratio(r, ip_scale));
    }

    let max_diff = |f: &Field, g: &Field| -> f64 {
        f.interior()
            .iter()
            .zip(g.interior().iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    for (name, zero, plus, minus, avg_minus, avg_plus, lap) in [
        ("1", Op::D1Zero, Op::D1Plus, Op::D1Minus, Op::A1Minus, Op::A1Plus, Op::Lap1),
        ("2", Op::D2Zero, Op::D2Plus, Op::D2Minus, Op::A2Minus, Op::A2Plus, Op::Lap2),
    ] {
        let d0 = apply(zero, u)?;
        let mean = apply(plus, u)?.combine(0.5, &apply(minus, u)?, 0.5)?;
        put(&format!("d{name}_zero_mean"), ratio(max_diff(&d0, &mean), sup));
        let lap_u = apply(lap, u)?;
        put(
            &format!("lap{name}_factor"),
            ratio(max_diff(&lap_u, &compose(&[plus, minus], u)?), sup),
        );
        put(
            &format!("d{name}_zero_factor_plus"),
            ratio(max_diff(&d0, &compose(&[plus, avg_minus], u)?), sup),
        );
        put(
            &format!("d{name}_zero_factor_minus"),
            ratio(max_diff(&d0, &compose(&[minus, avg_plus], u)?), sup),
        );
        for (avg, diff, tag) in [(avg_minus, minus, "minus"), (avg_plus, plus, "plus")] {
            let a = apply(avg, u)?;
            let d = apply(diff, u)?;
            let r = dot(&a, &a)? + 0.25 * dot(&d, &d)? - uu;
            put(&format!("average_split_{name}_{tag}"), ratio(r, uu));
        }
    }

    let mut commutator = 0.0f64;
    for (i, &p) in Op::ALL.iter().enumerate() {
        let pu = apply(p, u)?;
        for &q in &Op::ALL[i + 1..] {
            let pq = apply(q, &pu)?;
            let qp = apply(p, &apply(q, u)?)?;
            commutator = commutator.max(max_diff(&pq, &qp));
        }
    }
    put("commutator", ratio(commutator, sup));

    for (name, r) in centered_difference_residuals(u)? {
        put(&name, r);
    }
    Ok(AlgebraReport { residuals })
}

/// Relative residuals of the three norm identities linking centred and
/// one-sided differences, on a periodic field.
pub fn centered_difference_residuals(u: &Field) -> Result<Vec<(String, f64)>> {
    let sq = |ops: &[Op]| -> Result<f64> {
        let f = compose(ops, u)?;
        crate::energy::norm_sq(&f)
    };
    let uu = crate::energy::norm_sq(u)?;
    let rel = |lhs: f64, rhs: f64, mag: f64| {
        let scale = uu.max(mag);
        if scale > 0.0 {
            (lhs - rhs).abs() / scale
        } else {
            0.0
        }
    };
    let d10 = sq(&[Op::D1Zero])?;
    let d1p = sq(&[Op::D1Plus])?;
    let l1 = sq(&[Op::Lap1])?;
    let d20 = sq(&[Op::D2Zero])?;
    let d2p = sq(&[Op::D2Plus])?;
    let l2 = sq(&[Op::Lap2])?;
    let d1020 = sq(&[Op::D1Zero, Op::D2Zero])?;
    let d1p2p = sq(&[Op::D1Plus, Op::D2Plus])?;
    let d1pl2 = sq(&[Op::D1Plus, Op::Lap2])?;
    let d2pl1 = sq(&[Op::D2Plus, Op::Lap1])?;
    let l1l2 = sq(&[Op::Lap1, Op::Lap2])?;
    let rhs3 = d1p2p - 0.25 * d1pl2 - 0.25 * d2pl1 + l1l2 / 16.0;
    Ok(vec![
        ("centered_d1".into(), rel(d10, d1p - 0.25 * l1, d10 + d1p + 0.25 * l1)),
        ("centered_d2".into(), rel(d20, d2p - 0.25 * l2, d20 + d2p + 0.25 * l2)),
        (
            "centered_d1d2".into(),
            rel(
                d1020,
                rhs3,
                d1020 + d1p2p + 0.25 * d1pl2 + 0.25 * d2pl1 + l1l2 / 16.0,
            ),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fill_ghosts, BoundarySpec, Geometry};

    #[test]
    fn constant_field() {
        let g = Geometry::periodic(6, 5).unwrap();
        let mut u = Field::zeros(g);
        for k in 0..5 {
            for j in 0..6 {
                u.set(j, k, 3.0);
            }
        }
        assert!(apply(Op::D1Plus, &u).unwrap().interior().iter().all(|&x| x == 0.0));
        assert!(apply(Op::A1Plus, &u).unwrap().interior().iter().all(|&x| x == 3.0));
    }

    #[test]
    fn affine_in_j() {
        let g = Geometry::rectangle(8, 4).unwrap();
        let mut u = Field::zeros(g);
        for k in 0..4 {
            for j in 0..8 {
                u.set(j, k, j as f64);
            }
        }
        let d0 = apply(Op::D1Zero, &u).unwrap();
        let lap = apply(Op::Lap1, &u).unwrap();
        for k in 0..4 {
            for j in 1..7 {
                assert_eq!(d0.get(j, k), 1.0);
                assert_eq!(lap.get(j, k), 0.0);
            }
        }
        // Without ghosts the valid region loses one column on each side.
        assert_eq!(d0.region().x, Extent::Span { lo: 1, hi: 7 });
        assert_eq!(d0.try_get(0, 0), None);
    }

    #[test]
    fn impulse_laplacian() {
        let g = Geometry::periodic(8, 8).unwrap();
        let mut u = Field::zeros(g);
        u.set(0, 0, 1.0);
        let lap = apply(Op::Lap1, &u).unwrap();
        assert_eq!(lap.get(0, 0), -2.0);
        assert_eq!(lap.get(1, 0), 1.0);
        assert_eq!(lap.get(-1, 0), 1.0);
        for j in 2..7 {
            assert_eq!(lap.get(j, 0), 0.0);
        }
    }

    #[test]
    fn composite_order_is_list_order() {
        let g = Geometry::periodic(6, 6).unwrap();
        let mut u = Field::zeros(g);
        u.set(2, 3, 1.0);
        let a = apply_stencil(&StencilKind::Composite(vec![Op::D1Plus, Op::D2Minus]), &u).unwrap();
        let b = apply(Op::D2Minus, &apply(Op::D1Plus, &u).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = compose(&[Op::D2Minus, Op::D1Plus], &u).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn ghost_ring_keeps_interior_defined() {
        let g = Geometry::quarter_space(6, 6).unwrap();
        let u = fill_ghosts(&Field::zeros(g), &BoundarySpec::canonical(g.kind())).unwrap();
        let f = compose(&[Op::D1Zero, Op::Lap2], &u).unwrap();
        assert!(f.covers_interior());
        // A second x-stencil on top of the first one cannot reach column 0.
        let h = compose(&[Op::D1Zero, Op::Lap1], &u).unwrap();
        assert!(!h.covers_interior());
    }

    #[test]
    fn algebra_rejects_bounded_geometry() {
        let g = Geometry::rectangle(6, 6).unwrap();
        assert!(matches!(
            check_operator_algebra(&Field::zeros(g)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn algebra_on_zero_field_is_exact() {
        let g = Geometry::periodic(6, 6).unwrap();
        let report = check_operator_algebra(&Field::zeros(g)).unwrap();
        assert!(report.residuals.values().all(|&r| r == 0.0));
    }

    #[test]
    fn pointwise_centred_split() {
        // (U+ - U-)^2/4 + (U+ - 2U + U-)^2/4 == (U+ - U)^2/2 + (U - U-)^2/2
        let triples = [(0.3, -1.2, 2.5), (1e3, 1e3 + 1.0, -7.0), (0.0, 0.0, 1.0)];
        for (lo, c, hi) in triples {
            let lhs = Op::D1Zero.eval(lo, c, hi).powi(2) + Op::Lap1.eval(lo, c, hi).powi(2) / 4.0;
            let rhs = 0.5 * Op::D1Plus.eval(lo, c, hi).powi(2) + 0.5 * Op::D1Minus.eval(lo, c, hi).powi(2);
            let ulp = f64::EPSILON * lhs.abs().max(rhs.abs());
            assert!((lhs - rhs).abs() <= 2.0 * ulp, "{lo} {c} {hi}");
        }
    }
}
