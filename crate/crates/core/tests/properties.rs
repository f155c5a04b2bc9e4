use lw2d::energy::{parse_key_value, ReportSummary};
use lw2d::spectral::{amplification_factor, max_amplification, Frequency};
use lw2d::{
    check_operator_algebra, fill_ghosts, lw_step, verify, BoundarySpec, CornerRule, Field,
    Geometry, GeometryKind, Params,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = GeometryKind> {
    prop_oneof![
        Just(GeometryKind::Periodic),
        Just(GeometryKind::HalfSpace),
        Just(GeometryKind::QuarterSpace),
        Just(GeometryKind::Rectangle),
    ]
}

/// Grid size and interior values.
fn grid() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (4usize..11, 4usize..11).prop_flat_map(|(nx, ny)| {
        (Just(nx), Just(ny), prop::collection::vec(-1.0f64..1.0, nx * ny))
    })
}

/// Courant numbers inside the stability disc, signs fixed for outflow.
fn courant(kind: GeometryKind) -> impl Strategy<Value = Params> {
    (0.0f64..=0.5, 0.0f64..std::f64::consts::TAU).prop_map(move |(s, th)| {
        let (mut a, mut b) = (s.sqrt() * th.cos(), s.sqrt() * th.sin());
        if kind != GeometryKind::Periodic {
            a = -a.abs() - 1e-3;
        }
        if matches!(kind, GeometryKind::QuarterSpace | GeometryKind::Rectangle) {
            b = -b.abs() - 1e-3;
        }
        Params::from_courant(a, b).unwrap()
    })
}

fn spec_for(kind: GeometryKind, delta: f64) -> BoundarySpec {
    match kind {
        GeometryKind::QuarterSpace | GeometryKind::Rectangle => {
            BoundarySpec::outflow_corner(CornerRule::ScaledCorner(delta))
        }
        _ => BoundarySpec::canonical(kind),
    }
}

fn field(kind: GeometryKind, nx: usize, ny: usize, values: &[f64]) -> Field {
    Field::from_interior(Geometry::new(kind, nx, ny).unwrap(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ghost_filling_is_idempotent(k in kind(), (nx, ny, vals) in grid(), delta in -5.0f64..300.0) {
        let spec = spec_for(k, delta);
        let once = fill_ghosts(&field(k, nx, ny, &vals), &spec).unwrap();
        let twice = fill_ghosts(&once, &spec).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn one_step_reaches_only_the_nine_point_neighbourhood(
        (nx, ny) in (6usize..12, 6usize..12),
        j in 0usize..6, k in 0usize..6,
        p in courant(GeometryKind::Periodic),
    ) {
        let g = Geometry::periodic(nx, ny).unwrap();
        let mut u = Field::zeros(g);
        u.set(j as isize, k as isize, 1.0);
        let next = lw_step(&u, &p, &BoundarySpec::periodic()).unwrap();
        for kk in 0..ny as isize {
            for jj in 0..nx as isize {
                let dj = (jj - j as isize).rem_euclid(nx as isize);
                let dk = (kk - k as isize).rem_euclid(ny as isize);
                let near = |d: isize, n: isize| d <= 1 || d == n - 1;
                if !(near(dj, nx as isize) && near(dk, ny as isize)) {
                    prop_assert_eq!(next.get(jj, kk), 0.0);
                }
            }
        }
    }

    #[test]
    fn step_is_linear(
        k in kind(), (nx, ny, a) in grid(), seed in any::<u64>(),
        c1 in -2.0f64..2.0, c2 in -2.0f64..2.0,
    ) {
        let p = Params::from_courant(-0.31, -0.22).unwrap();
        let spec = spec_for(k, 1.7);
        let b: Vec<f64> = (0..a.len()).map(|i| ((seed as f64 + i as f64) * 0.37).sin()).collect();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| c1 * x + c2 * y).collect();
        let step = |v: &[f64]| lw_step(&field(k, nx, ny, v), &p, &spec).unwrap().interior();
        let (sa, sb, sm) = (step(&a), step(&b), step(&mix));
        for i in 0..sm.len() {
            prop_assert!((sm[i] - (c1 * sa[i] + c2 * sb[i])).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_step_commutes_with_translation(
        (nx, ny, vals) in grid(), p in courant(GeometryKind::Periodic),
        dj in -5isize..5, dk in -5isize..5,
    ) {
        let u = field(GeometryKind::Periodic, nx, ny, &vals);
        let spec = BoundarySpec::periodic();
        let a = lw_step(&u, &p, &spec).unwrap().translated(dj, dk).unwrap();
        let b = lw_step(&u.translated(dj, dk).unwrap(), &p, &spec).unwrap();
        prop_assert_eq!(a.interior(), b.interior());
    }

    #[test]
    fn symbol_has_conjugate_symmetry(
        alpha in -1.0f64..1.0, beta in -1.0f64..1.0,
        xi in -3.2f64..3.2, eta in -3.2f64..3.2,
    ) {
        let p = Params::from_courant(alpha, beta).unwrap();
        let g = amplification_factor(&p, Frequency::new(xi, eta));
        let h = amplification_factor(&p, Frequency::new(-xi, -eta));
        prop_assert!((g - h.conj()).norm() < 1e-15);
    }

    #[test]
    fn symbol_is_bounded_inside_the_cfl_disc(p in courant(GeometryKind::Periodic)) {
        prop_assert!(max_amplification(&p, 64) <= 1.0 + 1e-12);
    }

    #[test]
    fn operator_algebra_holds_on_random_periodic_fields((nx, ny, vals) in grid()) {
        let report = check_operator_algebra(&field(GeometryKind::Periodic, nx, ny, &vals)).unwrap();
        prop_assert!(report.max_residual() < 1e-12, "{:?}", report.residuals);
    }

    #[test]
    fn report_block_round_trips(
        k in prop_oneof![Just(GeometryKind::Periodic), Just(GeometryKind::HalfSpace), Just(GeometryKind::QuarterSpace)],
        (nx, ny, vals) in grid(),
        seed in 0.0f64..1.0,
    ) {
        let p = Params::from_courant(-0.2 - 0.2 * seed, -0.1 - 0.3 * seed).unwrap();
        let u = fill_ghosts(&field(k, nx, ny, &vals), &BoundarySpec::canonical(k)).unwrap();
        let v = verify(&u, &p).unwrap();
        prop_assert_eq!(parse_key_value(&v.to_key_value()).unwrap(), ReportSummary::of(&v));
    }
}
