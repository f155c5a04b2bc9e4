//! Literal-loop reference computations over raw cell values. Nothing here
//! goes through the crate's stencil or energy code.

use lw2d::{Field, Params};

/// Interior values plus ghost ring as a dense `(nx + 2) x (ny + 2)` array,
/// indexed `[k + 1][j + 1]`. Periodic axes are wrapped explicitly.
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    cells: Vec<Vec<f64>>,
}

impl Grid {
    pub fn of(u: &Field) -> Self {
        let g = u.geometry();
        let (nx, ny) = (g.nx(), g.ny());
        let mut cells = vec![vec![0.0; nx + 2]; ny + 2];
        for (r, row) in cells.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = u.get(c as isize - 1, r as isize - 1);
            }
        }
        Grid { nx, ny, cells }
    }

    pub fn at(&self, j: isize, k: isize) -> f64 {
        self.cells[(k + 1) as usize][(j + 1) as usize]
    }
}

/// The nine-point update at every interior cell, written out from the
/// scheme's coefficients.
pub fn step_interior(u: &Grid, p: &Params) -> Vec<f64> {
    let (al, be) = (p.alpha(), p.beta());
    let s = al * al + be * be;
    let mut out = Vec::with_capacity(u.nx * u.ny);
    for k in 0..u.ny as isize {
        for j in 0..u.nx as isize {
            let c = u.at(j, k);
            let (e, w) = (u.at(j + 1, k), u.at(j - 1, k));
            let (n, so) = (u.at(j, k + 1), u.at(j, k - 1));
            let (ne, nw) = (u.at(j + 1, k + 1), u.at(j - 1, k + 1));
            let (se, sw) = (u.at(j + 1, k - 1), u.at(j - 1, k - 1));
            let next = c - al / 2.0 * (e - w) - be / 2.0 * (n - so)
                + al * al / 2.0 * (e - 2.0 * c + w)
                + be * be / 2.0 * (n - 2.0 * c + so)
                + al * be / 4.0 * (ne - se - nw + sw)
                - s / 8.0 * (ne - 2.0 * e + se - 2.0 * n + 4.0 * c - 2.0 * so + nw - 2.0 * w + sw);
            out.push(next);
        }
    }
    out
}

pub fn v_interior(u: &Grid, p: &Params) -> Vec<f64> {
    let (al, be) = (p.alpha(), p.beta());
    let mut out = Vec::new();
    for k in 0..u.ny as isize {
        for j in 0..u.nx as isize {
            out.push(-al / 2.0 * (u.at(j + 1, k) - u.at(j - 1, k)) - be / 2.0 * (u.at(j, k + 1) - u.at(j, k - 1)));
        }
    }
    out
}

pub fn w_interior(u: &Grid, p: &Params) -> Vec<f64> {
    let (al, be) = (p.alpha(), p.beta());
    let s = al * al + be * be;
    let mut out = Vec::new();
    for k in 0..u.ny as isize {
        for j in 0..u.nx as isize {
            let at = |dj: isize, dk: isize| u.at(j + dj, k + dk);
            let lap1 = at(1, 0) - 2.0 * at(0, 0) + at(-1, 0);
            let lap2 = at(0, 1) - 2.0 * at(0, 0) + at(0, -1);
            let mixed = at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1);
            let box9 = at(1, 1) - 2.0 * at(1, 0) + at(1, -1) - 2.0 * at(0, 1) + 4.0 * at(0, 0)
                - 2.0 * at(0, -1)
                + at(-1, 1)
                - 2.0 * at(-1, 0)
                + at(-1, -1);
            out.push(-al * al / 2.0 * lap1 - be * be / 2.0 * lap2 - al * be / 4.0 * mixed + s / 8.0 * box9);
        }
    }
    out
}

pub fn interior(u: &Grid) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..u.ny as isize {
        for j in 0..u.nx as isize {
            out.push(u.at(j, k));
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The boundary form of `2 <v, w>` on the quarter space: sums along both
/// outflow sides plus the two corner products.
pub fn quarter_space_vw_display(u: &Grid, p: &Params) -> f64 {
    let (al, be) = (p.alpha(), p.beta());
    let la = p.lambda * p.a.abs();
    let mb = p.mu * p.b.abs();
    let lap2 = |j: isize, k: isize| u.at(j, k + 1) - 2.0 * u.at(j, k) + u.at(j, k - 1);
    let lap1 = |j: isize, k: isize| u.at(j + 1, k) - 2.0 * u.at(j, k) + u.at(j - 1, k);
    let mut side_x = 0.0;
    for k in 0..u.ny as isize - 1 {
        side_x += u.at(0, k) * lap2(0, k + 1);
    }
    let mut side_y = 0.0;
    for j in 0..u.nx as isize - 1 {
        side_y += u.at(j, 0) * lap1(j + 1, 0);
    }
    let c = u.at(0, 0);
    -la * be * be / 2.0 * side_x - al * al * mb / 2.0 * side_y
        - la * be * be / 2.0 * c * lap2(0, 0)
        - al * al * mb / 2.0 * c * lap1(0, 0)
}
