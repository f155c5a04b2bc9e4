//! Index sets, grid functions with a one-cell ghost ring, and boundary rules.
//!
//! Every [`Field`] stores `(nx + 2) * (ny + 2)` values: the `nx * ny` interior
//! cells plus one ghost ring. Storage is row-major over `(k, j)`, so the cell
//! `(j, k)` with `-1 <= j <= nx` and `-1 <= k <= ny` lives at offset
//! `(k + 1) * (nx + 2) + (j + 1)`. Interior cells are `0 <= j < nx`,
//! `0 <= k < ny`; the physical cell `(j, k)` covers
//! `[j dx, (j + 1) dx) x [k dy, (k + 1) dy)`.
//!
//! Periodic axes never read their ghost storage: reads wrap around modulo the
//! interior extent. The ghost storage of a periodic axis is still kept in sync
//! by [`Field::fill_ghosts`] so that raw dumps of the storage are meaningful.

use std::fmt;

use crate::error::{Error, Result};

/// Shape of the index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    /// Torus, periodic in both directions. Stands in for the whole plane.
    Periodic,
    /// `j >= 0`, periodic in `k`. Ghost column at `j = -1`.
    HalfSpace,
    /// `j >= 0`, `k >= 0`, truncated at `j = nx` and `k = ny`.
    QuarterSpace,
    /// Bounded box with an independent rule on each side.
    Rectangle,
}

impl GeometryKind {
    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Periodic => "periodic",
            GeometryKind::HalfSpace => "half_space",
            GeometryKind::QuarterSpace => "quarter_space",
            GeometryKind::Rectangle => "rectangle",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Geometry {
    kind: GeometryKind,
    nx: usize,
    ny: usize,
}

impl Geometry {
    /// Smallest interior extent that fits the nine-point stencil.
    pub const MIN_CELLS: usize = 3;

    pub fn new(kind: GeometryKind, nx: usize, ny: usize) -> Result<Self> {
        if nx < Self::MIN_CELLS || ny < Self::MIN_CELLS {
            return Err(Error::Geometry(format!(
                "{kind} grid needs at least {m}x{m} interior cells, got {nx}x{ny}",
                m = Self::MIN_CELLS
            )));
        }
        if nx > isize::MAX as usize / 4 || ny > isize::MAX as usize / 4 {
            return Err(Error::Geometry(format!("grid {nx}x{ny} is too large")));
        }
        Ok(Geometry { kind, nx, ny })
    }

    pub fn periodic(nx: usize, ny: usize) -> Result<Self> {
        Self::new(GeometryKind::Periodic, nx, ny)
    }

    pub fn half_space(nx: usize, ny: usize) -> Result<Self> {
        Self::new(GeometryKind::HalfSpace, nx, ny)
    }

    pub fn quarter_space(nx: usize, ny: usize) -> Result<Self> {
        Self::new(GeometryKind::QuarterSpace, nx, ny)
    }

    pub fn rectangle(nx: usize, ny: usize) -> Result<Self> {
        Self::new(GeometryKind::Rectangle, nx, ny)
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn periodic_x(&self) -> bool {
        self.kind == GeometryKind::Periodic
    }

    pub fn periodic_y(&self) -> bool {
        matches!(self.kind, GeometryKind::Periodic | GeometryKind::HalfSpace)
    }

    /// Row length of the storage block, ghosts included.
    pub fn stride(&self) -> usize {
        self.nx + 2
    }

    pub fn storage_len(&self) -> usize {
        (self.nx + 2) * (self.ny + 2)
    }

    pub fn interior_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn in_storage(&self, j: isize, k: isize) -> bool {
        j >= -1 && k >= -1 && j <= self.nx as isize && k <= self.ny as isize
    }

    /// Storage offset of `(j, k)`. Panics outside the ghost ring.
    pub fn offset(&self, j: isize, k: isize) -> usize {
        assert!(
            self.in_storage(j, k),
            "cell ({j}, {k}) outside {}x{} storage",
            self.nx,
            self.ny
        );
        (k + 1) as usize * self.stride() + (j + 1) as usize
    }

    /// Maps `(j, k)` back into the interior along periodic axes.
    pub fn wrap(&self, j: isize, k: isize) -> (isize, isize) {
        let j = if self.periodic_x() {
            j.rem_euclid(self.nx as isize)
        } else {
            j
        };
        let k = if self.periodic_y() {
            k.rem_euclid(self.ny as isize)
        } else {
            k
        };
        (j, k)
    }

    pub(crate) fn full_region(&self) -> Region {
        Region {
            x: if self.periodic_x() {
                Extent::Wrap
            } else {
                Extent::Span {
                    lo: -1,
                    hi: self.nx as isize + 1,
                }
            },
            y: if self.periodic_y() {
                Extent::Wrap
            } else {
                Extent::Span {
                    lo: -1,
                    hi: self.ny as isize + 1,
                }
            },
        }
    }

    pub(crate) fn interior_region(&self) -> Region {
        Region {
            x: if self.periodic_x() {
                Extent::Wrap
            } else {
                Extent::Span {
                    lo: 0,
                    hi: self.nx as isize,
                }
            },
            y: if self.periodic_y() {
                Extent::Wrap
            } else {
                Extent::Span {
                    lo: 0,
                    hi: self.ny as isize,
                }
            },
        }
    }
}

/// Range of indices along one axis on which a field is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extent {
    /// Periodic axis: every index is defined through wrap-around.
    Wrap,
    /// Half-open range `lo..hi`.
    Span { lo: isize, hi: isize },
}

impl Extent {
    pub fn contains(&self, i: isize) -> bool {
        match *self {
            Extent::Wrap => true,
            Extent::Span { lo, hi } => lo <= i && i < hi,
        }
    }

    pub fn covers(&self, lo: isize, hi: isize) -> bool {
        match *self {
            Extent::Wrap => true,
            Extent::Span { lo: a, hi: b } => a <= lo && hi <= b,
        }
    }

    /// Extent of an output whose stencil reads offsets `min..=max` of this one.
    pub(crate) fn shrink(&self, min: isize, max: isize) -> Extent {
        match *self {
            Extent::Wrap => Extent::Wrap,
            Extent::Span { lo, hi } => {
                let lo = lo - min;
                let hi = (hi - max).max(lo);
                Extent::Span { lo, hi }
            }
        }
    }

    fn bounds(&self, n: usize) -> (isize, isize) {
        match *self {
            Extent::Wrap => (0, n as isize),
            Extent::Span { lo, hi } => (lo, hi),
        }
    }
}

/// The rectangle of cells on which a field's values are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x: Extent,
    pub y: Extent,
}

impl Region {
    pub fn contains(&self, j: isize, k: isize) -> bool {
        self.x.contains(j) && self.y.contains(k)
    }
}

/// Rule for one side of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideRule {
    /// Zeroth-order copy of the adjacent interior value into the ghost cell.
    Extrapolation,
    /// Ghost cells hold a fixed value.
    Dirichlet(f64),
    Periodic,
}

/// Rule for the ghost cell where two extrapolation sides meet.
#[derive(Debug, Clone, Copy)]
pub enum CornerRule {
    /// Corner ghost equals the diagonal interior neighbour.
    ExtrapolationCorner,
    /// Corner ghost equals `delta` times the diagonal interior neighbour.
    ScaledCorner(f64),
}

impl CornerRule {
    pub fn delta(&self) -> f64 {
        match *self {
            CornerRule::ExtrapolationCorner => 1.0,
            CornerRule::ScaledCorner(delta) => delta,
        }
    }
}

impl PartialEq for CornerRule {
    fn eq(&self, other: &Self) -> bool {
        self.delta() == other.delta()
    }
}

/// Rule for a corner where a Dirichlet side meets an extrapolation side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixedCorner {
    /// Corner ghost takes the Dirichlet value.
    #[default]
    Dirichlet,
    /// Corner ghost copies the diagonal interior neighbour.
    Extrapolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub left: SideRule,
    pub right: SideRule,
    pub bottom: SideRule,
    pub top: SideRule,
    pub corner_rule: Option<CornerRule>,
    pub mixed_corner: MixedCorner,
}

impl BoundarySpec {
    pub fn periodic() -> Self {
        BoundarySpec {
            left: SideRule::Periodic,
            right: SideRule::Periodic,
            bottom: SideRule::Periodic,
            top: SideRule::Periodic,
            corner_rule: None,
            mixed_corner: MixedCorner::Dirichlet,
        }
    }

    /// Extrapolation at `j = -1`, homogeneous Dirichlet at the truncation
    /// `j = nx`, periodic in `k`.
    pub fn half_space() -> Self {
        BoundarySpec {
            left: SideRule::Extrapolation,
            right: SideRule::Dirichlet(0.0),
            bottom: SideRule::Periodic,
            top: SideRule::Periodic,
            corner_rule: None,
            mixed_corner: MixedCorner::Dirichlet,
        }
    }

    /// Extrapolation on the left and bottom sides with the given corner rule,
    /// homogeneous Dirichlet on the right and top sides.
    pub fn outflow_corner(corner: CornerRule) -> Self {
        BoundarySpec {
            left: SideRule::Extrapolation,
            right: SideRule::Dirichlet(0.0),
            bottom: SideRule::Extrapolation,
            top: SideRule::Dirichlet(0.0),
            corner_rule: Some(corner),
            mixed_corner: MixedCorner::Dirichlet,
        }
    }

    /// The rule set each geometry is analysed with.
    pub fn canonical(kind: GeometryKind) -> Self {
        match kind {
            GeometryKind::Periodic => Self::periodic(),
            GeometryKind::HalfSpace => Self::half_space(),
            GeometryKind::QuarterSpace | GeometryKind::Rectangle => {
                Self::outflow_corner(CornerRule::ExtrapolationCorner)
            }
        }
    }

    pub fn side(&self, side: Side) -> SideRule {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    /// True when at least one corner has extrapolation on both adjacent sides.
    pub fn has_outflow_corner(&self) -> bool {
        let ex = |r: SideRule| r == SideRule::Extrapolation;
        (ex(self.left) || ex(self.right)) && (ex(self.bottom) || ex(self.top))
    }

    /// True when every rule is homogeneous (zero Dirichlet data), so the
    /// step operator is linear.
    pub fn is_homogeneous(&self) -> bool {
        [self.left, self.right, self.bottom, self.top]
            .iter()
            .all(|r| !matches!(r, SideRule::Dirichlet(c) if *c != 0.0))
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        let pair = |name: &str, lo: SideRule, hi: SideRule, periodic: bool| -> Result<()> {
            let lo_p = lo == SideRule::Periodic;
            let hi_p = hi == SideRule::Periodic;
            if lo_p != hi_p {
                return Err(Error::Boundary(format!(
                    "periodic {name} sides must come in opposite pairs"
                )));
            }
            if lo_p != periodic {
                return Err(Error::Boundary(format!(
                    "{} geometry is {}periodic in {name} but the rules say otherwise",
                    geometry.kind(),
                    if periodic { "" } else { "not " }
                )));
            }
            for rule in [lo, hi] {
                if let SideRule::Dirichlet(c) = rule {
                    if !c.is_finite() {
                        return Err(Error::Boundary(format!(
                            "Dirichlet value {c} on {name} side is not finite"
                        )));
                    }
                }
            }
            Ok(())
        };
        pair("x", self.left, self.right, geometry.periodic_x())?;
        pair("y", self.bottom, self.top, geometry.periodic_y())?;

        match (geometry.kind(), self.corner_rule) {
            (GeometryKind::Periodic | GeometryKind::HalfSpace, Some(_)) => {
                return Err(Error::Boundary(format!(
                    "corner rule given for {} geometry, which has no corner",
                    geometry.kind()
                )));
            }
            (_, Some(rule)) if !rule.delta().is_finite() => {
                return Err(Error::Boundary(format!(
                    "corner coefficient {} is not finite",
                    rule.delta()
                )));
            }
            (_, None) if self.has_outflow_corner() => {
                return Err(Error::Boundary(
                    "two extrapolation sides meet but no corner rule is given".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Grid function over the interior plus ghost ring of a [`Geometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    geometry: Geometry,
    values: Vec<f64>,
    region: Region,
}

impl Field {
    /// All-zero field defined on the interior.
    pub fn zeros(geometry: Geometry) -> Self {
        Field {
            geometry,
            values: vec![0.0; geometry.storage_len()],
            region: geometry.interior_region(),
        }
    }

    /// Builds a field from interior values listed row by row (`k` outer).
    pub fn from_interior(geometry: Geometry, interior: &[f64]) -> Result<Self> {
        if interior.len() != geometry.interior_len() {
            return Err(Error::Precondition(format!(
                "expected {} interior values, got {}",
                geometry.interior_len(),
                interior.len()
            )));
        }
        let mut field = Field::zeros(geometry);
        let nx = geometry.nx();
        for (i, &value) in interior.iter().enumerate() {
            let (j, k) = ((i % nx) as isize, (i / nx) as isize);
            if !value.is_finite() {
                return Err(Error::Initialization { j, k, value });
            }
            field.set(j, k, value);
        }
        Ok(field)
    }

    pub(crate) fn with_region(geometry: Geometry, region: Region) -> Self {
        Field {
            geometry,
            values: vec![0.0; geometry.storage_len()],
            region,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Raw storage, ghosts included; see the module docs for the layout.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `(j, k)`, wrapping periodic axes. Panics outside storage.
    #[inline]
    pub fn get(&self, j: isize, k: isize) -> f64 {
        let (j, k) = self.geometry.wrap(j, k);
        self.values[self.geometry.offset(j, k)]
    }

    /// Like [`Field::get`], but cells beyond the ghost ring read as zero.
    pub fn get_or_zero(&self, j: isize, k: isize) -> f64 {
        let (j, k) = self.geometry.wrap(j, k);
        if self.geometry.in_storage(j, k) {
            self.values[self.geometry.offset(j, k)]
        } else {
            0.0
        }
    }

    /// Value at `(j, k)` if it lies in the defined region.
    pub fn try_get(&self, j: isize, k: isize) -> Option<f64> {
        if self.region.contains(j, k) && {
            let (wj, wk) = self.geometry.wrap(j, k);
            self.geometry.in_storage(wj, wk)
        } {
            Some(self.get(j, k))
        } else {
            None
        }
    }

    /// Writes a raw storage cell. Periodic axes wrap.
    #[inline]
    pub fn set(&mut self, j: isize, k: isize, value: f64) {
        let (j, k) = self.geometry.wrap(j, k);
        let i = self.geometry.offset(j, k);
        self.values[i] = value;
    }

    /// Interior values, row by row (`k` outer).
    pub fn interior(&self) -> Vec<f64> {
        let (nx, ny) = (self.geometry.nx(), self.geometry.ny());
        let mut out = Vec::with_capacity(nx * ny);
        for k in 0..ny as isize {
            let row = self.geometry.offset(0, k);
            out.extend_from_slice(&self.values[row..row + nx]);
        }
        out
    }

    pub(crate) fn interior_row(&self, k: isize) -> &[f64] {
        let row = self.geometry.offset(0, k);
        &self.values[row..row + self.geometry.nx()]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn set_region(&mut self, region: Region) {
        self.region = region;
    }

    /// True when the interior and the ghost ring are both defined.
    pub fn covers_ring(&self) -> bool {
        let (nx, ny) = (self.geometry.nx() as isize, self.geometry.ny() as isize);
        self.region.x.covers(-1, nx + 1) && self.region.y.covers(-1, ny + 1)
    }

    pub fn covers_interior(&self) -> bool {
        let (nx, ny) = (self.geometry.nx() as isize, self.geometry.ny() as isize);
        self.region.x.covers(0, nx) && self.region.y.covers(0, ny)
    }

    /// Sets every ghost cell from `spec`; interior values are untouched.
    pub fn fill_ghosts(&mut self, spec: &BoundarySpec) -> Result<()> {
        spec.validate(&self.geometry)?;
        if !self.covers_interior() {
            return Err(Error::Precondition(
                "cannot fill ghosts of a field whose interior is not fully defined".into(),
            ));
        }
        let (nx, ny) = (self.geometry.nx() as isize, self.geometry.ny() as isize);

        for k in 0..ny {
            let left = side_value(spec.left, self.get(0, k), self.get(nx - 1, k));
            let right = side_value(spec.right, self.get(nx - 1, k), self.get(0, k));
            self.set_raw(-1, k, left);
            self.set_raw(nx, k, right);
        }
        for j in 0..nx {
            let bottom = side_value(spec.bottom, self.get(j, 0), self.get(j, ny - 1));
            let top = side_value(spec.top, self.get(j, ny - 1), self.get(j, 0));
            self.set_raw(j, -1, bottom);
            self.set_raw(j, ny, top);
        }
        for (cj, ck) in [(-1, -1), (nx, -1), (-1, ny), (nx, ny)] {
            let value = self.corner_value(spec, cj, ck);
            self.set_raw(cj, ck, value);
        }
        self.region = self.geometry.full_region();
        Ok(())
    }

    fn corner_value(&self, spec: &BoundarySpec, cj: isize, ck: isize) -> f64 {
        let (nx, ny) = (self.geometry.nx() as isize, self.geometry.ny() as isize);
        let x_rule = if cj < 0 { spec.left } else { spec.right };
        let y_rule = if ck < 0 { spec.bottom } else { spec.top };
        let wrap_j = cj.rem_euclid(nx);
        let wrap_k = ck.rem_euclid(ny);
        // Diagonal interior neighbour.
        let near_j = if cj < 0 { 0 } else { nx - 1 };
        let near_k = if ck < 0 { 0 } else { ny - 1 };
        let storage = |j: isize, k: isize| self.values[self.geometry.offset(j, k)];

        match (x_rule, y_rule) {
            (_, SideRule::Periodic) => storage(cj, wrap_k),
            (SideRule::Periodic, _) => storage(wrap_j, ck),
            (SideRule::Extrapolation, SideRule::Extrapolation) => {
                let delta = spec
                    .corner_rule
                    .map_or(1.0, |rule| rule.delta());
                delta * storage(near_j, near_k)
            }
            (SideRule::Dirichlet(cx), SideRule::Dirichlet(cy)) => 0.5 * (cx + cy),
            (SideRule::Dirichlet(c), SideRule::Extrapolation)
            | (SideRule::Extrapolation, SideRule::Dirichlet(c)) => match spec.mixed_corner {
                MixedCorner::Dirichlet => c,
                MixedCorner::Extrapolate => storage(near_j, near_k),
            },
        }
    }

    fn set_raw(&mut self, j: isize, k: isize, value: f64) {
        let i = self.geometry.offset(j, k);
        self.values[i] = value;
    }

    /// Checks that every value in the defined region is finite.
    pub fn check_finite(&self) -> Result<()> {
        let (nx, ny) = (self.geometry.nx(), self.geometry.ny());
        let (jlo, jhi) = self.region.x.bounds(nx);
        let (klo, khi) = self.region.y.bounds(ny);
        for k in klo.max(-1)..khi.min(ny as isize + 1) {
            for j in jlo.max(-1)..jhi.min(nx as isize + 1) {
                if !self.values[self.geometry.offset(j, k)].is_finite() {
                    return Err(Error::NonFinite { j, k });
                }
            }
        }
        Ok(())
    }

    /// Pointwise linear combination `a * self + b * other` on the common region.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch);
        }
        let mut out = self.clone();
        for (o, (&x, &y)) in out
            .values
            .iter_mut()
            .zip(self.values.iter().zip(other.values.iter()))
        {
            *o = a * x + b * y;
        }
        out.region = intersect(self.region, other.region);
        Ok(out)
    }

    /// Pointwise map over storage, keeping the region.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            geometry: self.geometry,
            values: self.values.iter().map(|&x| f(x)).collect(),
            region: self.region,
        }
    }

    /// Copy of the field translated by `(p, q)` cells: `out(j, k) = self(j - p, k - q)`.
    /// Only meaningful on the periodic torus.
    pub fn translated(&self, p: isize, q: isize) -> Result<Field> {
        if self.geometry.kind() != GeometryKind::Periodic {
            return Err(Error::Precondition(
                "translation is only defined on periodic geometry".into(),
            ));
        }
        let mut out = Field::zeros(self.geometry);
        let (nx, ny) = (self.geometry.nx() as isize, self.geometry.ny() as isize);
        for k in 0..ny {
            for j in 0..nx {
                out.set(j, k, self.get(j - p, k - q));
            }
        }
        out.region = self.region;
        Ok(out)
    }
}

fn side_value(rule: SideRule, adjacent: f64, opposite: f64) -> f64 {
    match rule {
        SideRule::Extrapolation => adjacent,
        SideRule::Dirichlet(c) => c,
        SideRule::Periodic => opposite,
    }
}

fn intersect(a: Region, b: Region) -> Region {
    let axis = |x: Extent, y: Extent| match (x, y) {
        (Extent::Wrap, e) | (e, Extent::Wrap) => e,
        (Extent::Span { lo: a, hi: b }, Extent::Span { lo: c, hi: d }) => Extent::Span {
            lo: a.max(c),
            hi: b.min(d).max(a.max(c)),
        },
    };
    Region {
        x: axis(a.x, b.x),
        y: axis(a.y, b.y),
    }
}

/// Samples `init` at cell centres `((j + 1/2) dx, (k + 1/2) dy)`.
/// Ghost cells are left at zero until [`Field::fill_ghosts`].
pub fn make_field(
    geometry: Geometry,
    init: impl Fn(f64, f64) -> f64,
    dx: f64,
    dy: f64,
) -> Result<Field> {
    if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
        return Err(Error::Precondition(format!(
            "cell sizes must be positive and finite, got dx={dx}, dy={dy}"
        )));
    }
    let mut field = Field::zeros(geometry);
    for k in 0..geometry.ny() as isize {
        let y = (k as f64 + 0.5) * dy;
        for j in 0..geometry.nx() as isize {
            let x = (j as f64 + 0.5) * dx;
            let value = init(x, y);
            if !value.is_finite() {
                return Err(Error::Initialization { j, k, value });
            }
            field.set(j, k, value);
        }
    }
    Ok(field)
}

/// Non-mutating form of [`Field::fill_ghosts`].
pub fn fill_ghosts(field: &Field, spec: &BoundarySpec) -> Result<Field> {
    let mut out = field.clone();
    out.fill_ghosts(spec)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(geometry: Geometry) -> Field {
        let mut f = Field::zeros(geometry);
        for k in 0..geometry.ny() as isize {
            for j in 0..geometry.nx() as isize {
                f.set(j, k, 1.0 + j as f64 + 10.0 * k as f64);
            }
        }
        f
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Geometry::periodic(2, 8).is_err());
        assert!(Geometry::quarter_space(3, 3).is_ok());
    }

    #[test]
    fn storage_layout_is_row_major_over_k_then_j() {
        let g = Geometry::rectangle(4, 3).unwrap();
        assert_eq!(g.offset(-1, -1), 0);
        assert_eq!(g.offset(0, -1), 1);
        assert_eq!(g.offset(-1, 0), 6);
        assert_eq!(g.offset(3, 2), 3 * 6 + 4);
        assert_eq!(g.storage_len(), 30);
    }

    #[test]
    fn zero_and_constant_initialisation() {
        let g = Geometry::periodic(8, 8).unwrap();
        let zero = make_field(g, |_, _| 0.0, 0.1, 0.1).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let c = make_field(g, |_, _| 2.5, 0.1, 0.1).unwrap();
        assert!(c.interior().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn non_finite_sample_names_the_cell() {
        let g = Geometry::rectangle(4, 4).unwrap();
        let err = make_field(g, |x, y| if x > 0.2 && y > 0.3 { f64::NAN } else { 0.0 }, 0.1, 0.1)
            .unwrap_err();
        match err {
            Error::Initialization { j, k, .. } => assert_eq!((j, k), (2, 3)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn half_space_extrapolation_copies_column_zero() {
        let g = Geometry::half_space(5, 6).unwrap();
        let f = fill_ghosts(&ramp(g), &BoundarySpec::half_space()).unwrap();
        for k in -1..=6 {
            assert_eq!(f.get(-1, k), f.get(0, k), "k = {k}");
        }
        for k in 0..6 {
            assert_eq!(f.get(5, k), 0.0);
        }
        // Periodic tangential ghosts mirror the opposite row.
        assert_eq!(f.values()[g.offset(2, -1)], f.get(2, 5));
        assert_eq!(f.values()[g.offset(-1, -1)], f.get(0, 5));
    }

    #[test]
    fn dirichlet_side_sets_every_ghost() {
        let g = Geometry::rectangle(4, 5).unwrap();
        let mut spec = BoundarySpec::outflow_corner(CornerRule::ExtrapolationCorner);
        spec.right = SideRule::Dirichlet(0.0);
        let f = fill_ghosts(&ramp(g), &spec).unwrap();
        for k in -1..=5 {
            assert_eq!(f.get(4, k), 0.0);
        }
    }

    #[test]
    fn scaled_corner_multiplies_diagonal_neighbour() {
        let g = Geometry::quarter_space(4, 4).unwrap();
        let f = fill_ghosts(&ramp(g), &BoundarySpec::outflow_corner(CornerRule::ScaledCorner(290.0)))
            .unwrap();
        assert_eq!(f.get(-1, -1), 290.0 * f.get(0, 0));
    }

    #[test]
    fn extrapolation_corner_matches_its_three_neighbours() {
        let g = Geometry::quarter_space(4, 4).unwrap();
        let f = fill_ghosts(&ramp(g), &BoundarySpec::canonical(GeometryKind::QuarterSpace)).unwrap();
        let c = f.get(-1, -1);
        assert_eq!(c, f.get(-1, 0));
        assert_eq!(c, f.get(0, 0));
        assert_eq!(c, f.get(0, -1));
        assert_eq!(CornerRule::ExtrapolationCorner, CornerRule::ScaledCorner(1.0));
    }

    #[test]
    fn mixed_corner_options() {
        let g = Geometry::rectangle(4, 4).unwrap();
        let mut spec = BoundarySpec::outflow_corner(CornerRule::ExtrapolationCorner);
        spec.right = SideRule::Dirichlet(3.0);
        let f = fill_ghosts(&ramp(g), &spec).unwrap();
        // right (Dirichlet 3) meets bottom (extrapolation)
        assert_eq!(f.get(4, -1), 3.0);
        spec.mixed_corner = MixedCorner::Extrapolate;
        let f = fill_ghosts(&ramp(g), &spec).unwrap();
        assert_eq!(f.get(4, -1), f.get(3, 0));
    }

    #[test]
    fn corner_rule_on_periodic_geometry_is_rejected() {
        let g = Geometry::periodic(4, 4).unwrap();
        let mut spec = BoundarySpec::periodic();
        spec.corner_rule = Some(CornerRule::ExtrapolationCorner);
        assert!(matches!(
            fill_ghosts(&Field::zeros(g), &spec),
            Err(Error::Boundary(_))
        ));
    }

    #[test]
    fn unpaired_periodic_sides_are_rejected() {
        let g = Geometry::rectangle(4, 4).unwrap();
        let mut spec = BoundarySpec::canonical(GeometryKind::Rectangle);
        spec.left = SideRule::Periodic;
        assert!(spec.validate(&g).is_err());
        let h = Geometry::half_space(4, 4).unwrap();
        assert!(BoundarySpec::periodic().validate(&h).is_err());
    }

    #[test]
    fn missing_corner_rule_is_rejected_when_needed() {
        let g = Geometry::quarter_space(4, 4).unwrap();
        let mut spec = BoundarySpec::canonical(GeometryKind::QuarterSpace);
        spec.corner_rule = None;
        assert!(spec.validate(&g).is_err());
    }

    #[test]
    fn periodic_reads_wrap() {
        let g = Geometry::periodic(4, 3).unwrap();
        let f = ramp(g);
        assert_eq!(f.get(-1, 0), f.get(3, 0));
        assert_eq!(f.get(4, 3), f.get(0, 0));
        assert_eq!(f.try_get(-7, 11), Some(f.get(1, 2)));
    }
}
