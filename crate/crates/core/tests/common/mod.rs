#![allow(dead_code)]

pub mod oracle;

use lw2d::{fill_ghosts, BoundarySpec, Field, Geometry, GeometryKind, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random field with values in `[-1, 1)`, zero within `margin` cells of
/// every non-periodic far side, ghosts filled canonically.
pub fn random_field(kind: GeometryKind, nx: usize, ny: usize, margin: usize, rng: &mut ChaCha8Rng) -> Field {
    let g = Geometry::new(kind, nx, ny).unwrap();
    let mut u = Field::zeros(g);
    let far_x = !g.periodic_x();
    let far_y = !g.periodic_y();
    for k in 0..ny {
        for j in 0..nx {
            if (far_x && j + margin >= nx) || (far_y && k + margin >= ny) {
                continue;
            }
            u.set(j as isize, k as isize, rng.gen_range(-1.0..1.0));
        }
    }
    fill_ghosts(&u, &BoundarySpec::canonical(kind)).unwrap()
}

/// Courant numbers with `alpha^2 + beta^2 = s` at a random angle, signs
/// forced where the geometry demands outflow.
pub fn random_params(kind: GeometryKind, s: f64, rng: &mut ChaCha8Rng) -> Params {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (mut alpha, mut beta) = (s.sqrt() * theta.cos(), s.sqrt() * theta.sin());
    if kind != GeometryKind::Periodic {
        alpha = -alpha.abs();
    }
    if kind == GeometryKind::QuarterSpace {
        beta = -beta.abs();
    }
    Params::from_courant(alpha, beta).unwrap()
}
