//! Experiment configuration, time stepping with norm traces, convergence
//! studies and corner-coefficient scans.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::energy::{pairwise_sum, traces, verify, Verification};
use crate::error::{Error, Result};
use crate::geometry::{
    make_field, BoundarySpec, CornerRule, Field, Geometry, GeometryKind, MixedCorner, SideRule,
};
use crate::scheme::{lw_step_into, Params};
use crate::spectral::amplification_grid;

/// Environment variable that redirects relative output paths.
pub const OUTPUT_DIR_ENV: &str = "LW2D_OUTPUT_DIR";

/// Identity residuals above this, or slacks below its negative, fail `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

pub const CSV_HEADER: &str = "step,time,l2,trace_x,trace_y,corner";

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `exp(-k ((x - cx)^2 + (y - cy)^2))`
    Gaussian { cx: f64, cy: f64, k: f64 },
    /// `sin(2 pi mx x / lx) sin(2 pi my y / ly)`
    Sine { mx: f64, my: f64 },
    /// `cos(2 pi (p x / lx + q y / ly))`
    PlaneWave { p: f64, q: f64 },
    /// One at cell `(j, k)`, zero elsewhere.
    Impulse { j: usize, k: usize },
    Constant(f64),
    Zero,
    /// Whitespace- or comma-separated interior values, one row per `k`.
    File(PathBuf),
}

impl InitialCondition {
    fn parse(text: &str, line: usize) -> Result<Self> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(open) => {
                let close = text
                    .strip_suffix(')')
                    .ok_or_else(|| Error::config(line, format!("missing `)` in `{text}`")))?;
                (&text[..open], &close[open + 1..])
            }
            None => (text, ""),
        };
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(line, format!("bad number `{}` in initial", s.trim())))
                })
                .collect()
        };
        let want = |n: usize| -> Result<Vec<f64>> {
            let v = nums()?;
            if v.len() != n {
                return Err(Error::config(
                    line,
                    format!("`{}` takes {n} arguments, got {}", name.trim(), v.len()),
                ));
            }
            Ok(v)
        };
        let index = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::config(line, format!("impulse index {x} is not a nonnegative integer")))
            }
        };
        Ok(match name.trim() {
            "gaussian" => {
                let v = want(3)?;
                InitialCondition::Gaussian { cx: v[0], cy: v[1], k: v[2] }
            }
            "sine" => {
                let v = want(2)?;
                InitialCondition::Sine { mx: v[0], my: v[1] }
            }
            "plane_wave" => {
                let v = want(2)?;
                InitialCondition::PlaneWave { p: v[0], q: v[1] }
            }
            "impulse" => {
                let v = want(2)?;
                InitialCondition::Impulse { j: index(v[0])?, k: index(v[1])? }
            }
            "constant" => InitialCondition::Constant(want(1)?[0]),
            "zero" => InitialCondition::Zero,
            "file" if !args.trim().is_empty() => InitialCondition::File(PathBuf::from(args.trim())),
            other => {
                return Err(Error::config(line, format!("unknown initial condition `{other}`")))
            }
        })
    }

    /// Smooth and periodic on `[0, lx) x [0, ly)`.
    pub fn is_smooth_periodic(&self) -> bool {
        match self {
            InitialCondition::Sine { mx, my } => mx.fract() == 0.0 && my.fract() == 0.0,
            InitialCondition::PlaneWave { p, q } => p.fract() == 0.0 && q.fract() == 0.0,
            InitialCondition::Constant(_) | InitialCondition::Zero => true,
            _ => false,
        }
    }
}

/// Piecewise-constant function defined by cell values on a base grid.
struct CellFunction {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    values: Vec<f64>,
}

impl CellFunction {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let j = (x / self.dx).floor();
        let k = (y / self.dy).floor();
        if j < 0.0 || k < 0.0 || j >= self.nx as f64 || k >= self.ny as f64 {
            return 0.0;
        }
        self.values[k as usize * self.nx + j as usize]
    }
}

fn read_value_file(path: &Path, nx: usize, ny: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::with_capacity(nx * ny);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = values.len();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| {
                Error::config(i + 1, format!("{}: bad value `{tok}`", path.display()))
            })?;
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(Error::config(
                i + 1,
                format!("{}: expected {nx} values per row, got {}", path.display(), values.len() - before),
            ));
        }
    }
    if values.len() != nx * ny {
        return Err(Error::Precondition(format!(
            "{}: expected {ny} rows of {nx} values, got {} values",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: GeometryKind,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub a: f64,
    pub b: f64,
    /// Target value of `alpha^2 + beta^2`.
    pub cfl_target: f64,
    /// Explicit grid ratios; when set they override `cfl_target`.
    pub ratios: Option<(f64, f64)>,
    pub n_steps: usize,
    pub boundary: BoundarySpec,
    pub initial: InitialCondition,
    pub output_csv: Option<PathBuf>,
    pub output_report: Option<PathBuf>,
    pub spectrum_csv: Option<PathBuf>,
    /// Run the energy checks at every step.
    pub diagnostics: bool,
    pub blowup_threshold: f64,
    pub threads: Option<usize>,
}

const KEYS: &[&str] = &[
    "geometry",
    "lx",
    "ly",
    "nx",
    "ny",
    "a",
    "b",
    "cfl_target",
    "lambda",
    "mu",
    "n_steps",
    "left",
    "right",
    "bottom",
    "top",
    "corner_delta",
    "mixed_corner",
    "initial",
    "output_csv",
    "output_report",
    "spectrum_csv",
    "diagnostics",
    "blowup_threshold",
    "threads",
];

fn parse_side(value: &str, line: usize) -> Result<SideRule> {
    let v = value.trim();
    match v {
        "extrapolation" => return Ok(SideRule::Extrapolation),
        "periodic" => return Ok(SideRule::Periodic),
        "dirichlet" => return Ok(SideRule::Dirichlet(0.0)),
        _ => {}
    }
    if let Some(inner) = v.strip_prefix("dirichlet(").and_then(|r| r.strip_suffix(')')) {
        let c: f64 = inner
            .trim()
            .parse()
            .map_err(|_| Error::config(line, format!("bad Dirichlet value `{inner}`")))?;
        return Ok(SideRule::Dirichlet(c));
    }
    Err(Error::config(
        line,
        format!("unknown side rule `{v}` (extrapolation, dirichlet(c), periodic)"),
    ))
}

fn parse_geometry(value: &str, line: usize) -> Result<GeometryKind> {
    Ok(match value {
        "periodic" => GeometryKind::Periodic,
        "half_space" => GeometryKind::HalfSpace,
        "quarter_space" => GeometryKind::QuarterSpace,
        "rectangle" => GeometryKind::Rectangle,
        other => return Err(Error::config(line, format!("unknown geometry `{other}`"))),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (String, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(Error::config(line, format!("unknown key `{key}`")));
            };
            if let Some((_, first)) = entries.get(known) {
                return Err(Error::config(line, format!("`{key}` already set on line {first}")));
            }
            entries.insert(known, (value.trim().to_string(), line));
        }
        let last_line = text.lines().count().max(1);

        let get = |k: &str| entries.get(k).map(|(v, l)| (v.as_str(), *l));
        let num = |k: &str| -> Result<Option<f64>> {
            match get(k) {
                None => Ok(None),
                Some((v, l)) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(Some)
                    .ok_or_else(|| Error::config(l, format!("`{k}` must be a finite number, got `{v}`"))),
            }
        };
        let count = |k: &str| -> Result<Option<usize>> {
            match get(k) {
                None => Ok(None),
                Some((v, l)) => v
                    .parse::<usize>()
                    .map(Some)
                    .map_err(|_| Error::config(l, format!("`{k}` must be a nonnegative integer, got `{v}`"))),
            }
        };
        let required = |k: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::config(last_line, format!("missing required key `{k}`")))
        };
        let line_of = |k: &str| get(k).map_or(last_line, |(_, l)| l);

        let geometry = match get("geometry") {
            Some((v, l)) => parse_geometry(v, l)?,
            None => return Err(Error::config(last_line, "missing required key `geometry`")),
        };
        let nx = count("nx")?.ok_or_else(|| Error::config(last_line, "missing required key `nx`"))?;
        let ny = count("ny")?.ok_or_else(|| Error::config(last_line, "missing required key `ny`"))?;
        let a = required("a", num("a")?)?;
        let b = required("b", num("b")?)?;
        let lx = num("lx")?.unwrap_or(1.0);
        let ly = num("ly")?.unwrap_or(1.0);
        for (k, v) in [("lx", lx), ("ly", ly)] {
            if v <= 0.0 {
                return Err(Error::config(line_of(k), format!("`{k}` must be positive, got {v}")));
            }
        }
        let cfl_target = num("cfl_target")?.unwrap_or(0.25);
        if cfl_target <= 0.0 {
            return Err(Error::config(line_of("cfl_target"), "`cfl_target` must be positive"));
        }
        let ratios = match (num("lambda")?, num("mu")?) {
            (Some(l), Some(m)) => Some((l, m)),
            (None, None) => None,
            _ => {
                let l = line_of("lambda").min(line_of("mu"));
                return Err(Error::config(l, "`lambda` and `mu` must be given together"));
            }
        };
        let n_steps = count("n_steps")?.unwrap_or(100);

        let mut boundary = BoundarySpec::canonical(geometry);
        for (k, slot) in [
            ("left", &mut boundary.left),
            ("right", &mut boundary.right),
            ("bottom", &mut boundary.bottom),
            ("top", &mut boundary.top),
        ] {
            if let Some((v, l)) = get(k) {
                *slot = parse_side(v, l)?;
            }
        }
        let delta = num("corner_delta")?;
        boundary.corner_rule = match delta {
            Some(d) if d == 1.0 => Some(CornerRule::ExtrapolationCorner),
            Some(d) => Some(CornerRule::ScaledCorner(d)),
            None if boundary.has_outflow_corner() => Some(CornerRule::ExtrapolationCorner),
            None => None,
        };
        if let Some((v, l)) = get("mixed_corner") {
            boundary.mixed_corner = match v {
                "dirichlet" => MixedCorner::Dirichlet,
                "extrapolate" => MixedCorner::Extrapolate,
                other => {
                    return Err(Error::config(
                        l,
                        format!("mixed_corner must be dirichlet or extrapolate, got `{other}`"),
                    ))
                }
            };
        }
        let g = Geometry::new(geometry, nx, ny)
            .map_err(|e| Error::config(line_of("nx"), e.to_string()))?;
        boundary
            .validate(&g)
            .map_err(|e| Error::config(line_of("corner_delta"), e.to_string()))?;

        let initial = match get("initial") {
            Some((v, l)) => InitialCondition::parse(v, l)?,
            None => InitialCondition::Zero,
        };
        if let InitialCondition::Impulse { j, k } = initial {
            if j >= nx || k >= ny {
                return Err(Error::config(
                    line_of("initial"),
                    format!("impulse cell ({j}, {k}) is outside the {nx}x{ny} grid"),
                ));
            }
        }
        let path = |k: &str| get(k).map(|(v, _)| PathBuf::from(v));
        let diagnostics = match get("diagnostics") {
            None => false,
            Some(("true" | "on", _)) => true,
            Some(("false" | "off", _)) => false,
            Some((v, l)) => {
                return Err(Error::config(l, format!("diagnostics must be true or false, got `{v}`")))
            }
        };
        let blowup_threshold = num("blowup_threshold")?.unwrap_or(10.0);
        if blowup_threshold <= 1.0 {
            return Err(Error::config(
                line_of("blowup_threshold"),
                format!("blowup_threshold must exceed 1, got {blowup_threshold}"),
            ));
        }
        let threads = count("threads")?;
        if threads == Some(0) {
            return Err(Error::config(line_of("threads"), "threads must be at least 1"));
        }

        let config = ExperimentConfig {
            geometry,
            lx,
            ly,
            nx,
            ny,
            a,
            b,
            cfl_target,
            ratios,
            n_steps,
            boundary,
            initial,
            output_csv: path("output_csv"),
            output_report: path("output_report"),
            spectrum_csv: path("spectrum_csv"),
            diagnostics,
            blowup_threshold,
            threads,
        };
        config
            .params()
            .and_then(|p| p.check_geometry(&g))
            .map_err(|e| Error::config(line_of("a"), e.to_string()))?;
        Ok(config)
    }

    /// Reads a config file. A relative `file(...)` initial condition is
    /// resolved against the config file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        if let InitialCondition::File(f) = &config.initial {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    config.initial = InitialCondition::File(dir.join(f));
                }
            }
        }
        Ok(config)
    }

    pub fn grid(&self) -> Result<Geometry> {
        Geometry::new(self.geometry, self.nx, self.ny)
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Explicit ratios if given, otherwise a common time step meeting
    /// `cfl_target`.
    pub fn params(&self) -> Result<Params> {
        match self.ratios {
            Some((l, m)) => Params::new(self.a, self.b, l, m),
            None => Params::from_cfl_target(self.a, self.b, self.cfl_target, self.dx(), self.dy()),
        }
    }

    pub fn dt(&self) -> Result<f64> {
        Ok(self.params()?.lambda * self.dx())
    }

    /// The initial condition as a function of `(x, y)`.
    pub fn initial_function(&self) -> Result<Box<dyn Fn(f64, f64) -> f64 + Send + Sync>> {
        let (lx, ly, dx, dy) = (self.lx, self.ly, self.dx(), self.dy());
        Ok(match self.initial.clone() {
            InitialCondition::Gaussian { cx, cy, k } => {
                Box::new(move |x, y| (-k * ((x - cx).powi(2) + (y - cy).powi(2))).exp())
            }
            InitialCondition::Sine { mx, my } => {
                Box::new(move |x, y| (2.0 * PI * mx * x / lx).sin() * (2.0 * PI * my * y / ly).sin())
            }
            InitialCondition::PlaneWave { p, q } => {
                Box::new(move |x, y| (2.0 * PI * (p * x / lx + q * y / ly)).cos())
            }
            InitialCondition::Impulse { j, k } => {
                let mut values = vec![0.0; self.nx * self.ny];
                values[k * self.nx + j] = 1.0;
                let f = CellFunction { nx: self.nx, ny: self.ny, dx, dy, values };
                Box::new(move |x, y| f.eval(x, y))
            }
            InitialCondition::Constant(c) => Box::new(move |_, _| c),
            InitialCondition::Zero => Box::new(|_, _| 0.0),
            InitialCondition::File(path) => {
                let values = read_value_file(&path, self.nx, self.ny)?;
                let f = CellFunction { nx: self.nx, ny: self.ny, dx, dy, values };
                Box::new(move |x, y| f.eval(x, y))
            }
        })
    }

    /// Initial field with its ghost ring filled.
    pub fn initial_field(&self) -> Result<Field> {
        let f = self.initial_function()?;
        let mut u = make_field(self.grid()?, f, self.dx(), self.dy())?;
        u.fill_ghosts(&self.boundary)?;
        Ok(u)
    }
}

/// One row of the norm trace, for time level `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    /// `sqrt(dx dy sum u^2)` over the interior.
    pub l2: f64,
    /// `dy sum_k u_{0,k}^2`
    pub trace_x: f64,
    /// `dx sum_j u_{j,0}^2`
    pub trace_y: f64,
    /// `u_{0,0}`
    pub corner: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowUpReason {
    /// Norm exceeded the threshold multiple of the initial norm.
    Growth { ratio: f64 },
    NonFinite { j: isize, k: isize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUp {
    /// First time level at which the blow-up was detected.
    pub step: usize,
    pub reason: BlowUpReason,
}

/// Running form of the summed trace bound: at level `n`,
/// `lhs = max_{m <= n} |u^m|^2 + sum_{m < n} T(u^m)` with `T` the per-step
/// trace terms of the matching stability estimate, to be compared with `bound = 2 |u^0|^2`.
/// Norms here are unweighted sums over cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTrace {
    pub lhs: Vec<f64>,
    pub bound: f64,
}

impl StabilityTrace {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let limit = self.bound * (1.0 + rel_tol);
        self.lhs.iter().all(|&x| x <= limit)
    }

    pub fn max_lhs(&self) -> f64 {
        self.lhs.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTrace {
    pub rows: Vec<TraceRow>,
    pub blowup: Option<BlowUp>,
    pub stability: Option<StabilityTrace>,
}

impl NormTrace {
    pub fn l2(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2).collect()
    }

    /// True when every step satisfies `l2[n+1] <= l2[n]` exactly.
    pub fn is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].l2 <= w[0].l2)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.step, r.time, r.l2, r.trace_x, r.trace_y, r.corner
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: NormTrace,
    pub final_field: Field,
    /// Energy checks on each level before its step, when enabled.
    pub reports: Vec<Verification>,
}

impl RunOutcome {
    pub fn blew_up(&self) -> bool {
        self.trace.blowup.is_some()
    }
}

/// Relative paths are placed under `$LW2D_OUTPUT_DIR` when it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let path = resolve_output(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot build a {n}-thread pool: {e}")))?
            .install(f),
    }
}

fn interior_sum_sq(u: &Field) -> f64 {
    let g = u.geometry();
    let mut sq = Vec::with_capacity(g.interior_len());
    for k in 0..g.ny() as isize {
        sq.extend(u.interior_row(k).iter().map(|x| x * x));
    }
    pairwise_sum(&sq)
}

fn trace_row(step: usize, dt: f64, dx: f64, dy: f64, u: &Field) -> (TraceRow, f64) {
    let sum_sq = interior_sum_sq(u);
    let tr = traces(u);
    let row = TraceRow {
        step,
        time: step as f64 * dt,
        l2: (dx * dy * sum_sq).sqrt(),
        trace_x: dy * tr.trace_x,
        trace_y: dx * tr.trace_y,
        corner: u.get(0, 0),
    };
    (row, sum_sq)
}

/// Per-step trace terms of the bound that applies to this setup, if any.
fn stability_terms(config: &ExperimentConfig, params: &Params) -> Option<Box<dyn Fn(&Field) -> f64>> {
    let (a2, b2) = (params.alpha().powi(2), params.beta().powi(2));
    let s = a2 + b2;
    let la = params.lambda * params.a.abs();
    let mb = params.mu * params.b.abs();
    let spec = &config.boundary;
    match config.geometry {
        GeometryKind::HalfSpace if params.a < 0.0 && spec.left == SideRule::Extrapolation => {
            Some(Box::new(move |u: &Field| {
                let t = traces(u);
                la / 2.0 * t.trace_x + b2 * s / 16.0 * t.trace_lap2
            }))
        }
        GeometryKind::QuarterSpace | GeometryKind::Rectangle
            if params.a < 0.0
                && params.b < 0.0
                && spec.left == SideRule::Extrapolation
                && spec.bottom == SideRule::Extrapolation =>
        {
            Some(Box::new(move |u: &Field| {
                let t = traces(u);
                la / 8.0 * t.trace_x
                    + mb / 8.0 * t.trace_y
                    + b2 * s / 32.0 * t.trace_lap2
                    + a2 * s / 32.0 * t.trace_lap1
            }))
        }
        _ => None,
    }
}

/// Whether the per-step energy checks apply to this configuration.
pub fn diagnostics_apply(config: &ExperimentConfig) -> bool {
    config.geometry != GeometryKind::Rectangle
        && config.boundary == BoundarySpec::canonical(config.geometry)
}

/// Runs the configured experiment and writes any configured outputs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = with_threads(config.threads, || simulate(config))?;
    if let Some(path) = &config.output_csv {
        write_file(path, &outcome.trace.to_csv())?;
    }
    if let Some(path) = &config.output_report {
        let mut text = String::new();
        for (n, v) in outcome.reports.iter().enumerate() {
            let _ = writeln!(text, "# step {n}");
            text.push_str(&v.to_key_value());
        }
        write_file(path, &text)?;
    }
    if let Some(path) = &config.spectrum_csv {
        write_file(path, &spectrum_csv(&config.params()?, 64))?;
    }
    Ok(outcome)
}

/// The time loop without file output.
pub fn simulate(config: &ExperimentConfig) -> Result<RunOutcome> {
    let params = config.params()?;
    let spec = config.boundary;
    let (dx, dy, dt) = (config.dx(), config.dy(), config.dt()?);
    let mut u = config.initial_field()?;
    let mut next = u.clone();
    let check = config.diagnostics && diagnostics_apply(config);
    let terms = stability_terms(config, &params);

    let (row0, sum0) = trace_row(0, dt, dx, dy, &u);
    let initial_l2 = row0.l2;
    let mut rows = vec![row0];
    let mut reports = Vec::new();
    let mut stability = terms.as_ref().map(|_| StabilityTrace { lhs: vec![sum0], bound: 2.0 * sum0 });
    let (mut running_max, mut running_sum) = (sum0, 0.0);
    let mut blowup = None;

    for n in 0..config.n_steps {
        if check {
            reports.push(verify(&u, &params)?);
        }
        match lw_step_into(&u, &params, &spec, &mut next) {
            Ok(()) => {}
            Err(Error::NonFinite { j, k }) => {
                blowup = Some(BlowUp { step: n + 1, reason: BlowUpReason::NonFinite { j, k } });
                break;
            }
            Err(e) => return Err(e),
        }
        if let (Some(th), Some(t)) = (stability.as_mut(), terms.as_ref()) {
            running_sum += t(&u);
            running_max = running_max.max(interior_sum_sq(&next));
            th.lhs.push(running_max + running_sum);
        }
        std::mem::swap(&mut u, &mut next);
        let (row, _) = trace_row(n + 1, dt, dx, dy, &u);
        rows.push(row);
        if initial_l2 > 0.0 && row.l2 > config.blowup_threshold * initial_l2 {
            blowup = Some(BlowUp {
                step: n + 1,
                reason: BlowUpReason::Growth { ratio: row.l2 / initial_l2 },
            });
            break;
        }
    }
    Ok(RunOutcome {
        trace: NormTrace { rows, blowup, stability },
        final_field: u,
        reports,
    })
}

/// Energy checks on the configured initial field.
pub fn verify_config(config: &ExperimentConfig) -> Result<Verification> {
    if !diagnostics_apply(config) {
        return Err(Error::Precondition(format!(
            "energy checks need the canonical boundary rules of a periodic, half-space or \
             quarter-space geometry; got {} with {:?}",
            config.geometry, config.boundary
        )));
    }
    with_threads(config.threads, || verify(&config.initial_field()?, &config.params()?))
}

/// Names of checks that fail [`VERIFY_TOLERANCE`].
pub fn verification_failures(v: &Verification) -> Vec<String> {
    let mut out = Vec::new();
    for (name, r) in v.report.identity_residuals() {
        if !(r <= VERIFY_TOLERANCE) {
            out.push(format!("identity.{name} residual {r:e}"));
        }
    }
    for (name, s) in v.report.inequality_slacks() {
        if !(s >= -VERIFY_TOLERANCE) {
            out.push(format!("slack.{name} {s:e}"));
        }
    }
    out
}

pub fn spectrum_csv(params: &Params, samples: usize) -> String {
    let mut out = String::from("xi,eta,abs_g\n");
    for (xi, eta, g) in amplification_grid(params, samples) {
        let _ = writeln!(out, "{xi:.16e},{eta:.16e},{g:.16e}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub steps: usize,
    /// `sqrt(dx dy sum (u - exact)^2)` at the final time.
    pub error: f64,
    /// `log2` of the error ratio to the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub final_time: f64,
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
}

/// Refines the periodic grid `refinements` times by a factor of two with the
/// grid ratios held fixed, comparing with the exact translate of the initial
/// data at the final time of the base run.
pub fn convergence_study(config: &ExperimentConfig, refinements: usize) -> Result<ConvergenceTable> {
    if config.geometry != GeometryKind::Periodic {
        return Err(Error::Precondition(format!(
            "convergence studies need periodic geometry, got {}",
            config.geometry
        )));
    }
    let mut warnings = Vec::new();
    if !config.initial.is_smooth_periodic() {
        warnings.push(format!(
            "initial condition {:?} is not smooth and periodic; the observed order is not meaningful",
            config.initial
        ));
    }
    let params = config.params()?;
    let final_time = config.n_steps as f64 * config.dt()?;
    let u0 = config.initial_function()?;
    let (lx, ly) = (config.lx, config.ly);
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for r in 0..=refinements {
        let scale = 1usize << r;
        let level = ExperimentConfig {
            nx: config.nx * scale,
            ny: config.ny * scale,
            n_steps: config.n_steps * scale,
            ratios: Some((params.lambda, params.mu)),
            initial: config.initial.clone(),
            output_csv: None,
            output_report: None,
            spectrum_csv: None,
            diagnostics: false,
            ..config.clone()
        };
        let g = level.grid()?;
        let (dx, dy) = (level.dx(), level.dy());
        let u = with_threads(config.threads, || {
            let mut u = make_field(g, &u0, dx, dy)?;
            u.fill_ghosts(&level.boundary)?;
            let mut next = u.clone();
            for _ in 0..level.n_steps {
                lw_step_into(&u, &params, &level.boundary, &mut next)?;
                std::mem::swap(&mut u, &mut next);
            }
            Ok(u)
        })?;
        let (sx, sy) = (config.a * final_time, config.b * final_time);
        let exact = make_field(
            g,
            |x, y| u0((x - sx).rem_euclid(lx), (y - sy).rem_euclid(ly)),
            dx,
            dy,
        )?;
        let diff = u.combine(1.0, &exact, -1.0)?;
        let error = (dx * dy * interior_sum_sq(&diff)).sqrt();
        let order = rows
            .last()
            .filter(|p| p.error > 0.0 && error > 0.0)
            .map(|p| (p.error / error).log2());
        rows.push(ConvergenceRow {
            nx: level.nx,
            ny: level.ny,
            h: dx,
            steps: level.n_steps,
            error,
            order,
        });
    }
    Ok(ConvergenceTable { final_time, rows, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// Norm nonincreasing at every step.
    Stable,
    /// Blow-up, or final norm above the initial one.
    Unstable,
    /// Neither: the norm rose at some step but ended below its start.
    NonMonotone,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::NonMonotone => "non_monotone",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub delta: f64,
    pub stability: Stability,
    /// Least-squares slope of `ln l2` per step over the final quarter.
    pub growth_rate: Option<f64>,
    pub blowup: Option<BlowUp>,
    pub steps_run: usize,
}

fn log_slope(l2: &[f64]) -> Option<f64> {
    let start = l2.len() - l2.len() / 4;
    let tail: Vec<(f64, f64)> = l2[start.min(l2.len().saturating_sub(2))..]
        .iter()
        .enumerate()
        .map(|(i, &y)| (i as f64, y.ln()))
        .collect();
    if tail.len() < 2 || tail.iter().any(|(_, y)| !y.is_finite()) {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = tail.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn classify(trace: &NormTrace) -> Stability {
    let l2 = trace.l2();
    if trace.blowup.is_some() || l2.last() > l2.first() {
        Stability::Unstable
    } else if trace.is_nonincreasing() {
        Stability::Stable
    } else {
        Stability::NonMonotone
    }
}

/// Runs the base experiment once per corner coefficient, in parallel, and
/// returns rows in the order of `deltas`.
pub fn corner_scan(base: &ExperimentConfig, deltas: &[f64]) -> Result<Vec<ScanRow>> {
    let kind_ok = matches!(base.geometry, GeometryKind::QuarterSpace | GeometryKind::Rectangle);
    if !kind_ok || !base.boundary.has_outflow_corner() {
        return Err(Error::Precondition(
            "corner scans need a quarter-space or rectangle geometry with an outflow corner".into(),
        ));
    }
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::Params(format!("corner coefficient {d} is not finite")));
    }
    let job = || {
        deltas
            .par_iter()
            .map(|&delta| {
                let mut config = base.clone();
                config.boundary.corner_rule = Some(CornerRule::ScaledCorner(delta));
                config.diagnostics = false;
                config.threads = None;
                let out = simulate(&config)?;
                Ok(ScanRow {
                    delta,
                    stability: classify(&out.trace),
                    growth_rate: log_slope(&out.trace.l2()),
                    blowup: out.trace.blowup,
                    steps_run: out.trace.rows.len() - 1,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    with_threads(base.threads, job)
}
