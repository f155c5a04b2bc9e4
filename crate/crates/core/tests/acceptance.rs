//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{random_field, rng};
use lw2d::harness::{convergence_study, run_experiment, simulate, ExperimentConfig};
use lw2d::spectral::{amplification_factor, max_amplification, Frequency};
use lw2d::stencil::centered_difference_residuals;
use lw2d::{
    lw_step, lw_step_into, norm_sq, traces, verify_half_space, verify_quarter_space,
    verify_whole_space, BoundarySpec, Field, Geometry, GeometryKind, Params,
};
use rand::Rng;

/// Ignition step of the reduced rectangle run with corner coefficient 290,
/// frozen from the first calibrated run.
const IGNITION_STEP_290: usize = 738;

const RECTANGLE: &str = "geometry = rectangle
lx = 3
ly = 5
nx = 125
ny = 200
a = -2
b = -4
cfl_target = 0.25
n_steps = 2000
left = extrapolation
bottom = extrapolation
right = dirichlet(0)
top = dirichlet(0)
initial = gaussian(1.5, 2.5, 10)
";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn courant_at(s: f64, theta: f64) -> Params {
    Params::from_courant(s.sqrt() * theta.cos(), s.sqrt() * theta.sin()).unwrap()
}

fn operator_algebra() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = random_field(GeometryKind::Periodic, 32, 32, 0, &mut r);
        for (_, res) in centered_difference_residuals(&u).unwrap() {
            worst = worst.max(res);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-11 && secs < 5.0, format!("max residual {worst:.2e}, {secs:.2}s"))
}

fn whole_space_energy() -> Outcome {
    let mut r = rng(102);
    let (mut id, mut prop, mut cor): (f64, f64, f64) = (0.0, f64::INFINITY, f64::INFINITY);
    for t in 0..60 {
        let delta = [0.0, 0.5, 1.0][t % 3];
        let p = courant_at((1.0 - delta) / 2.0, r.gen_range(0.0..2.0 * PI));
        let u = random_field(GeometryKind::Periodic, 24, 20, 0, &mut r);
        let v = verify_whole_space(&u, &p).unwrap();
        let uu = v.report.l2_sq;
        for name in ["energy_balance", "vv_uw_expansion"] {
            let c = v.report.identities[name];
            id = id.max((c.lhs - c.rhs).abs() / uu);
        }
        let c = v.report.inequalities["w_bound"];
        prop = prop.min((c.rhs - c.lhs) / uu);
        let c = v.report.inequalities["cfl_energy"];
        cor = cor.min((c.rhs - c.lhs) / uu);
    }
    outcome(
        id <= 1e-11 && prop >= -1e-11 && cor >= -1e-11,
        format!("identity {id:.2e}, w bound slack {prop:.2e}, cfl energy slack {cor:.2e} (relative to |u|^2)"),
    )
}

fn cfl_sharpness() -> Outcome {
    let mut r = rng(103);
    let mut max_amp: f64 = 0.0;
    let mut corner_err: f64 = 0.0;
    for t in 0..40 {
        let s = if t == 0 { 0.5 } else { r.gen_range(0.0..=0.5) };
        let p = courant_at(s, r.gen_range(0.0..2.0 * PI));
        max_amp = max_amp.max(max_amplification(&p, 64));
        let g = amplification_factor(&p, Frequency::new(PI, PI));
        corner_err = corner_err.max((g - (1.0 - 4.0 * p.courant_sq())).norm());
    }
    let g = Geometry::periodic(16, 16).unwrap();
    let mut u = Field::zeros(g);
    for k in 0..16 {
        for j in 0..16 {
            u.set(j, k, if (j + k) % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    let p = courant_at(0.6, 0.7);
    let next = lw_step(&u, &p, &BoundarySpec::periodic()).unwrap();
    let (before, after) = (norm_sq(&u).unwrap(), norm_sq(&next).unwrap());
    outcome(
        max_amp <= 1.0 + 1e-12 && corner_err <= 1e-12 && after > before,
        format!(
            "max |g| {max_amp:.15}, g(pi,pi) error {corner_err:.1e}, checkerboard |u|^2 {before} -> {after:.4}"
        ),
    )
}

/// Steps `u` and accumulates `sup |u^n|^2 + sum of trace terms`.
fn summed_bound(
    mut u: Field,
    p: &Params,
    spec: &BoundarySpec,
    steps: usize,
    per_step: impl Fn(&Field) -> f64,
    mut check: impl FnMut(&Field),
) -> (f64, f64) {
    let u0 = norm_sq(&u).unwrap();
    let (mut sup, mut sum) = (u0, 0.0);
    let mut next = u.clone();
    for _ in 0..steps {
        check(&u);
        sum += per_step(&u);
        lw_step_into(&u, p, spec, &mut next).unwrap();
        std::mem::swap(&mut u, &mut next);
        sup = sup.max(norm_sq(&u).unwrap());
    }
    (sup + sum, 2.0 * u0)
}

/// Random values on `[0, sx) x [ky0, ky1)`, zero elsewhere.
fn supported(kind: GeometryKind, nx: usize, ny: usize, sx: usize, ky: (usize, usize), r: &mut impl Rng) -> Field {
    let mut u = Field::zeros(Geometry::new(kind, nx, ny).unwrap());
    for k in ky.0..ky.1 {
        for j in 0..sx {
            u.set(j as isize, k as isize, r.gen_range(-1.0..1.0));
        }
    }
    lw2d::fill_ghosts(&u, &BoundarySpec::canonical(kind)).unwrap()
}

fn half_space() -> Outcome {
    let mut r = rng(104);
    let mut slack = f64::INFINITY;
    for t in 0..100 {
        let theta = r.gen_range(0.05..PI / 2.0 - 0.05);
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        // a = -1, b = +-1; the grid ratios carry the angle.
        let p = Params::new(-1.0, sign, 0.5 * theta.cos(), 0.5 * theta.sin()).unwrap();
        let u = supported(GeometryKind::HalfSpace, 24, 24, 20, (3, 21), &mut r);
        let v = verify_half_space(&u, &p).unwrap();
        slack = slack.min(v.report.slack("stability_estimate").unwrap());
    }
    let mut worst_ratio: f64 = 0.0;
    for t in 0..4 {
        let p = Params::new(-1.0, if t % 2 == 0 { 1.0 } else { -1.0 }, 0.4, 0.3).unwrap();
        let u = supported(GeometryKind::HalfSpace, 96, 48, 40, (8, 40), &mut r);
        let (a2, b2) = (p.alpha().powi(2), p.beta().powi(2));
        let la = p.lambda * p.a.abs();
        let (lhs, bound) = summed_bound(u, &p, &BoundarySpec::half_space(), 50, |u| {
            let t = traces(u);
            la / 2.0 * t.trace_x + b2 * (a2 + b2) / 16.0 * t.trace_lap2
        }, |_| {});
        worst_ratio = worst_ratio.max(lhs / bound);
    }
    outcome(
        slack >= -1e-10 && worst_ratio <= 1.0 + 1e-9,
        format!("per-step slack {slack:.2e}, 50-step bound ratio {worst_ratio:.6}"),
    )
}

fn quarter_space() -> Outcome {
    let mut r = rng(105);
    let mut id: f64 = 0.0;
    let mut slack = f64::INFINITY;
    for _ in 0..100 {
        let theta = r.gen_range(0.05..PI / 2.0 - 0.05);
        let p = courant_at(r.gen_range(0.01..=0.5), theta);
        let p = Params::from_courant(-p.alpha(), -p.beta()).unwrap();
        let u = random_field(GeometryKind::QuarterSpace, 20, 18, 3, &mut r);
        let v = verify_quarter_space(&u, &p).unwrap();
        for (name, res) in v.report.identity_residuals() {
            if name.starts_with("corner_") || name == "vv_uw_corner" || name.starts_with("one_sided_") {
                id = id.max(res);
            }
        }
        slack = slack.min(v.report.slack("stability_estimate").unwrap());
    }
    let p = Params::new(-1.0, -1.5, 0.3, 0.25).unwrap();
    let u = supported(GeometryKind::QuarterSpace, 160, 160, 40, (0, 40), &mut r);
    let (a2, b2) = (p.alpha().powi(2), p.beta().powi(2));
    let s = a2 + b2;
    let (la, mb) = (p.lambda * p.a.abs(), p.mu * p.b.abs());
    let spec = BoundarySpec::canonical(GeometryKind::QuarterSpace);
    let mut run_slack = f64::INFINITY;
    let (lhs, bound) = summed_bound(
        u,
        &p,
        &spec,
        100,
        |u| {
            let t = traces(u);
            la / 8.0 * t.trace_x + mb / 8.0 * t.trace_y + b2 * s / 32.0 * t.trace_lap2 + a2 * s / 32.0 * t.trace_lap1
        },
        |u| {
            let v = verify_quarter_space(u, &p).unwrap();
            run_slack = run_slack.min(v.report.slack("stability_estimate").unwrap());
        },
    );
    let ratio = lhs / bound;
    outcome(
        id <= 1e-11 && slack >= -1e-10 && run_slack >= -1e-10 && ratio <= 1.0 + 1e-9,
        format!(
            "identity {id:.2e}, per-step slack {:.2e}, 100-step bound ratio {ratio:.6}",
            slack.min(run_slack)
        ),
    )
}

fn rectangle_reproduction() -> Outcome {
    let start = Instant::now();
    let good = ExperimentConfig::parse(&format!("{RECTANGLE}corner_delta = 1\n")).unwrap();
    let out = simulate(&good).unwrap();
    let steps = out.trace.rows.len() - 1;
    let monotone = out.trace.is_nonincreasing() && steps == 2000 && out.trace.blowup.is_none();
    let bad = ExperimentConfig::parse(&format!("{RECTANGLE}corner_delta = 290\n")).unwrap();
    let out = simulate(&bad).unwrap();
    let ignition = out.trace.blowup.map(|b| b.step);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        monotone && ignition == Some(IGNITION_STEP_290) && secs < 60.0,
        format!("delta=1 nonincreasing over {steps} steps: {monotone}; delta=290 blow-up at {ignition:?}; {secs:.2}s"),
    )
}

fn convergence() -> Outcome {
    let mut orders = Vec::new();
    for cfl in [0.25, 0.49] {
        let text = format!(
            "geometry = periodic\nnx = 32\nny = 32\na = 1\nb = 0.5\ncfl_target = {cfl}\nn_steps = 16\ninitial = sine(1, 1)\n"
        );
        let table = convergence_study(&ExperimentConfig::parse(&text).unwrap(), 2).unwrap();
        orders.extend(table.rows.iter().filter_map(|r| r.order));
    }
    let pass = orders.len() == 4 && orders.iter().all(|o| (1.8..=2.2).contains(o));
    let list: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
    outcome(pass, format!("observed orders {}", list.join(", ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for threads in [1, 2, 4, 8, 4] {
        let path = dir.path().join(format!("t{threads}_{}.csv", csvs.len()));
        let text = format!(
            "{}corner_delta = 290\nthreads = {threads}\noutput_csv = {}\n",
            RECTANGLE.replace("n_steps = 2000", "n_steps = 600"),
            path.display()
        );
        run_experiment(&ExperimentConfig::parse(&text).unwrap()).unwrap();
        csvs.push(std::fs::read(&path).unwrap());
    }
    let same = csvs.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("{} runs over 1, 2, 4, 8 threads, {} bytes each", csvs.len(), csvs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("operator algebra", operator_algebra),
        ("whole-space energy", whole_space_energy),
        ("CFL sharpness", cfl_sharpness),
        ("half-space trace estimate", half_space),
        ("quarter-space trace estimate", quarter_space),
        ("rectangle reproduction", rectangle_reproduction),
        ("convergence order", convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("criterion {}: {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
