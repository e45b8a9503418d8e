//! Refinement studies driven by a flat `key = value` configuration, and a
//! fast self test of the numerical building blocks.
//!
//! Level `L` uses `cells0 · 2^L` cells per side and the step `tau0 / 2^L`.
//! Configuration keys, all optional (defaults reproduce the benchmark):
//!
//! ```text
//! scheme = equal-order        # or taylor-hood (vector order r+1)
//! k = 2                       # polynomial degree in time
//! r = 2                       # spatial order (pressure order for taylor-hood)
//! levels = 0..3               # inclusive range, or a single level
//! T = 2
//! tau0 = 0.1
//! cells0 = 4
//! rho = 1
//! alpha = 0.9
//! c0 = 1e-3
//! K_diag = 1e-2               # one value or two comma-separated values
//! E = 100
//! nu = 0.35
//! omega1 = 3.141592653589793
//! omega2 = 3.141592653589793
//! output_dir = results
//! initial_values = ritz-displacement
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{FieldKind, NodalState, SlabLoads};
use crate::error::{Error, Result};
use crate::fespace::build_space;
use crate::mesh::build_mesh;
use crate::model::{strain, ManufacturedForcing, ManufacturedSolution, MaterialParams};
use crate::postprocess::{l2l2_error, linf_l2_error, ErrorReport, LevelRecord};
use crate::projection::{ScalarProjector, VectorProjector};
use crate::solver::{initial_values, march, Discretization, InitialStrategy};
use crate::timedisc::{build_time_mesh, gauss_lobatto, TimeMesh};

/// Pairing of spatial orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Order `r` for `u`, `v` and `p`.
    #[default]
    EqualOrder,
    /// Order `r+1` for `u`, `v` and `r` for `p`.
    TaylorHood,
}

impl Scheme {
    /// `(vector order, pressure order)` for spatial order `r`.
    pub fn orders(self, r: usize) -> (usize, usize) {
        match self {
            Scheme::EqualOrder => (r, r),
            Scheme::TaylorHood => (r + 1, r),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::EqualOrder => "equal-order",
            Scheme::TaylorHood => "taylor-hood",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-order" => Ok(Scheme::EqualOrder),
            "taylor-hood" => Ok(Scheme::TaylorHood),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected equal-order or taylor-hood)"
            ))),
        }
    }
}

/// Parameters of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub scheme: Scheme,
    pub k: usize,
    pub r: usize,
    /// Inclusive level range.
    pub levels: (u32, u32),
    pub final_time: f64,
    pub tau0: f64,
    pub cells0: usize,
    pub params: MaterialParams,
    pub solution: ManufacturedSolution,
    pub output_dir: PathBuf,
    pub initial_values: InitialStrategy,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::EqualOrder,
            k: 2,
            r: 2,
            levels: (0, 3),
            final_time: 2.0,
            tau0: 0.1,
            cells0: 4,
            params: MaterialParams::default(),
            solution: ManufacturedSolution::default(),
            output_dir: PathBuf::from("results"),
            initial_values: InitialStrategy::default(),
        }
    }
}

/// Parses `a..b` (inclusive) or a single level.
pub fn parse_levels(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::InvalidArgument(format!("invalid level range '{s}' (expected e.g. 0..3)"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let l = num(s)?;
            (l, l)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

impl StudyConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses and validates a configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(|e| err(format!("key '{key}': {}", strip_kind(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns one configuration key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = |v: &str| -> Result<f64> {
            let x = v.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("'{v}' is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::InvalidArgument(format!("'{v}' is not finite")))
            }
        };
        let int = |v: &str| v.parse::<usize>().map_err(|_| Error::InvalidArgument(format!("'{v}' is not a non-negative integer")));
        let p = &mut self.params;
        match key {
            "scheme" => self.scheme = value.parse()?,
            "k" => self.k = int(value)?,
            "r" => self.r = int(value)?,
            "levels" => self.levels = parse_levels(value)?,
            "T" => self.final_time = float(value)?,
            "tau0" => self.tau0 = float(value)?,
            "cells0" => self.cells0 = int(value)?,
            "rho" => p.rho = float(value)?,
            "alpha" => p.alpha = float(value)?,
            "c0" => p.c0 = float(value)?,
            "K_diag" => {
                let parts: Vec<f64> = value.split(',').map(|s| float(s.trim())).collect::<Result<_>>()?;
                let (kx, ky) = match parts[..] {
                    [a] => (a, a),
                    [a, b] => (a, b),
                    _ => return Err(Error::InvalidArgument("expected one or two values".into())),
                };
                p.permeability = [[kx, 0.0], [0.0, ky]];
            }
            "E" => p.youngs_modulus = float(value)?,
            "nu" => p.poisson_ratio = float(value)?,
            "omega1" => self.solution.omega1 = float(value)?,
            "omega2" => self.solution.omega2 = float(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "initial_values" => self.initial_values = value.parse()?,
            other => return Err(Error::InvalidArgument(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.r == 0 {
            return Err(Error::InvalidArgument("r must be at least 1".into()));
        }
        if self.cells0 == 0 {
            return Err(Error::InvalidArgument("cells0 must be at least 1".into()));
        }
        self.params.validate()?;
        build_time_mesh(self.final_time, self.tau0, 0)?;
        Ok(())
    }

    /// `(vector order, pressure order)`.
    pub fn orders(&self) -> (usize, usize) {
        self.scheme.orders(self.r)
    }

    pub fn cells(&self, level: u32) -> usize {
        self.cells0 << level
    }
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Result of one refinement level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub record: LevelRecord,
    pub n_slabs: usize,
    /// Unknowns per slab system.
    pub slab_unknowns: usize,
    pub max_residual: f64,
    pub factorizations: usize,
    pub elapsed: Duration,
}

/// Solves one level of the study and evaluates all error norms.
pub fn run_level(cfg: &StudyConfig, level: u32) -> Result<LevelOutcome> {
    let start = Instant::now();
    let wrap = |e: Error| Error::Level { level, source: Box::new(e) };
    let mesh = Arc::new(build_mesh(cfg.cells(level)).map_err(wrap)?);
    let tm = build_time_mesh(cfg.final_time, cfg.tau0, level).map_err(wrap)?;
    let (ou, op) = cfg.orders();
    let disc = Discretization::new(mesh.clone(), ou, op, cfg.k, &cfg.params, tm).map_err(wrap)?;
    let msol = cfg.solution;
    let init = initial_values(&disc, &msol, cfg.initial_values).map_err(wrap)?;
    let forcing = ManufacturedForcing { params: cfg.params.clone(), solution: msol };
    let sol = march(&disc, &disc.forcing_loads(&forcing), &init).map_err(wrap)?;
    let fields = [FieldKind::Displacement, FieldKind::Velocity, FieldKind::Pressure];
    let record = LevelRecord {
        level,
        tau: disc.time_mesh.tau(),
        h: mesh.h(),
        l2l2: fields.map(|f| l2l2_error(&sol, &msol, f, &disc)),
        linf_l2: fields.map(|f| linf_l2_error(&sol, &msol, f, &disc)),
    };
    Ok(LevelOutcome {
        record,
        n_slabs: disc.time_mesh.n_slabs(),
        slab_unknowns: disc.k() * (2 * disc.blocks.n_u() + disc.blocks.n_p()),
        max_residual: sol.max_residual,
        factorizations: sol.factorizations,
        elapsed: start.elapsed(),
    })
}

/// Runs every configured level in order; `progress` sees each finished level.
pub fn run_study(cfg: &StudyConfig, mut progress: impl FnMut(&LevelOutcome)) -> Result<ErrorReport> {
    cfg.validate()?;
    let mut records = Vec::new();
    for level in cfg.levels.0..=cfg.levels.1 {
        let outcome = run_level(cfg, level)?;
        progress(&outcome);
        records.push(outcome.record);
    }
    Ok(ErrorReport { scheme: cfg.scheme, k: cfg.k, r: cfg.r, records })
}

/// Writes `<stem>.csv` and `<stem>.txt` (and `<stem>.md` on request) into
/// `dir`, returning the paths written.
pub fn write_report(report: &ErrorReport, dir: &Path, markdown: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = report.file_stem();
    let mut files = vec![(dir.join(format!("{stem}.csv")), report.to_csv()), (dir.join(format!("{stem}.txt")), report.to_table())];
    if markdown {
        files.push((dir.join(format!("{stem}.md")), report.to_markdown()));
    }
    for (path, text) in &files {
        std::fs::write(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Outcome of one self-test property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelfTestReport {
    pub checks: Vec<PropertyCheck>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }
}

/// Fault injection for the self test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SelfTestOptions {
    /// Flip the sign of the pressure coupling block inside the solver only.
    pub corrupt_coupling_sign: bool,
}

pub fn self_test() -> SelfTestReport {
    self_test_with(SelfTestOptions::default())
}

pub fn self_test_with(options: SelfTestOptions) -> SelfTestReport {
    let mut report = SelfTestReport::default();
    let mut push = |name, value: Result<f64>, tol: f64| {
        let (passed, detail) = match value {
            Ok(v) => (v <= tol, format!("{v:.3e} (tolerance {tol:.0e})")),
            Err(e) => (false, format!("error: {e}")),
        };
        report.checks.push(PropertyCheck { name, passed, detail });
    };
    push("gauss-lobatto exactness", Ok(gauss_lobatto_exactness_defect(6)), 1e-13);
    push("elliptic projection orthogonality", projection_orthogonality_defect(4, 2), 1e-9);
    push(
        "manufactured forcing residual",
        Ok(forcing_residual_defect(&MaterialParams::default(), &ManufacturedSolution::default(), 100, 1e-4, 7)),
        1e-6,
    );
    push("discrete reproduction k=2", discrete_reproduction_defect(3, 2, 2, 3, options.corrupt_coupling_sign), 1e-8);
    push("discrete reproduction k=1", discrete_reproduction_defect(3, 1, 1, 4, options.corrupt_coupling_sign), 1e-8);
    report
}

/// Largest relative error of the Gauss–Lobatto rules with `2..=max_k` points
/// on the monomials of degree `<= 2k-1` over `[-1, 1]`.
pub fn gauss_lobatto_exactness_defect(max_k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=max_k {
        let rule = gauss_lobatto(k).expect("k >= 1");
        for d in 0..2 * k {
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            let q = rule.integrate(-1.0, 1.0, |t| t.powi(d as i32));
            worst = worst.max((q - exact).abs());
        }
    }
    worst
}

/// Galerkin orthogonality defect of both elliptic projections of smooth
/// fields on an `n × n` mesh, relative to the size of the right-hand side.
pub fn projection_orthogonality_defect(n: usize, r: usize) -> Result<f64> {
    let mesh = Arc::new(build_mesh(n)?);
    let params = MaterialParams::default();
    let vs = build_space(mesh.clone(), r, 2)?;
    let ss = build_space(mesh, r, 1)?;
    let w = crate::model::FnField(
        |x: [f64; 2]| [(3.0 * x[0]).sin() * x[1] * (1.0 - x[1]), x[0] * x[0] * (x[1] - 0.5)],
        |x: [f64; 2]| {
            [
                [3.0 * (3.0 * x[0]).cos() * x[1] * (1.0 - x[1]), (3.0 * x[0]).sin() * (1.0 - 2.0 * x[1])],
                [2.0 * x[0] * (x[1] - 0.5), x[0] * x[0]],
            ]
        },
    );
    let q = crate::model::FnField(
        |x: [f64; 2]| (x[0] * x[1]).exp() * x[0] * (1.0 - x[0]),
        |x: [f64; 2]| {
            let e = (x[0] * x[1]).exp();
            [e * (x[1] * x[0] * (1.0 - x[0]) + 1.0 - 2.0 * x[0]), e * x[0] * x[0] * (1.0 - x[0])]
        },
    );
    let rv = VectorProjector::new(&vs, &params)?;
    let rs = ScalarProjector::new(&ss, &params)?;
    let cv = rv.project(&w)?;
    let cs = rs.project(&q)?;
    let scale = |b: Vec<f64>| b.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    Ok((rv.orthogonality_defect(&w, &cv) / scale(rv.rhs(&w))).max(rs.orthogonality_defect(&q, &cs) / scale(rs.rhs(&q))))
}

/// Compares the closed-form forcing with central finite differences (step
/// `h`) of the exact fields at `samples` random points of `(0,1)² × (0,2)`.
/// Each defect is scaled by `1 +` the sum of the magnitudes of the terms in
/// the balance it checks.
pub fn forcing_residual_defect(
    params: &MaterialParams,
    msol: &ManufacturedSolution,
    samples: usize,
    h: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
        let t = rng.random_range(0.05..1.95);
        worst = worst.max(fd_forcing_defect(params, msol, x, t, h));
    }
    worst
}

/// Finite-difference check of both forcing terms at one point.
pub fn fd_forcing_defect(params: &MaterialParams, msol: &ManufacturedSolution, x: [f64; 2], t: f64, h: f64) -> f64 {
    let u = |x: [f64; 2], t: f64| msol.exact_fields(x, t).u;
    let p = |x: [f64; 2], t: f64| msol.exact_fields(x, t).p;
    let shift = |x: [f64; 2], d: usize, s: f64| {
        let mut y = x;
        y[d] += s;
        y
    };
    let grad_u = |x: [f64; 2], t: f64| {
        let mut g = [[0.0; 2]; 2];
        for d in 0..2 {
            let (a, b) = (u(shift(x, d, h), t), u(shift(x, d, -h), t));
            for c in 0..2 {
                g[c][d] = (a[c] - b[c]) / (2.0 * h);
            }
        }
        g
    };
    let grad_p = |x: [f64; 2], t: f64| [0, 1].map(|d| (p(shift(x, d, h), t) - p(shift(x, d, -h), t)) / (2.0 * h));
    let stress = |x: [f64; 2]| params.stress(strain(grad_u(x, t)));

    let (um, u0, up) = (u(x, t - h), u(x, t), u(x, t + h));
    let mut div_sigma = [0.0; 2];
    for d in 0..2 {
        let (a, b) = (stress(shift(x, d, h)), stress(shift(x, d, -h)));
        for c in 0..2 {
            div_sigma[c] += (a[c][d] - b[c][d]) / (2.0 * h);
        }
    }
    let gp = grad_p(x, t);
    let f = msol.forcing_f(params, x, t);
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let acc = (up[c] - 2.0 * u0[c] + um[c]) / (h * h);
        let terms = [acc, -div_sigma[c] / params.rho, params.alpha * gp[c] / params.rho];
        let scale = 1.0 + terms.iter().map(|v| v.abs()).sum::<f64>();
        worst = worst.max((terms.iter().sum::<f64>() - f[c]).abs() / scale);
    }

    let dp = (p(x, t + h) - p(x, t - h)) / (2.0 * h);
    let mut div_du = 0.0;
    for d in 0..2 {
        let g = |s: f64| u(shift(x, d, s), t + h)[d] - u(shift(x, d, s), t - h)[d];
        div_du += (g(h) - g(-h)) / (4.0 * h * h);
    }
    let kk = &params.permeability;
    let mut div_flux = 0.0;
    for d in 0..2 {
        let flux = |y: [f64; 2]| {
            let g = grad_p(y, t);
            kk[d][0] * g[0] + kk[d][1] * g[1]
        };
        div_flux += (flux(shift(x, d, h)) - flux(shift(x, d, -h))) / (2.0 * h);
    }
    let terms = [params.c0 * dp, params.alpha * div_du, -div_flux];
    let scale = 1.0 + terms.iter().map(|v| v.abs()).sum::<f64>();
    let g = msol.forcing_g(params, x, t);
    worst.max((terms.iter().sum::<f64>() - g).abs() / scale)
}

/// Builds loads for which `u_h(t) = a(t) U`, `v_h = a'(t) U`,
/// `p_h(t) = b(t) P` (polynomials of degree `k` in time, fixed finite element
/// vectors `U`, `P`) solve the discrete problem exactly, runs the solver and
/// returns the largest nodal error relative to the largest nodal value.
/// `corrupt_coupling` flips the coupling block inside the solver only.
pub fn discrete_reproduction_defect(
    cells: usize,
    r: usize,
    k: usize,
    n_slabs: usize,
    corrupt_coupling: bool,
) -> Result<f64> {
    let params = MaterialParams::default();
    let mesh = Arc::new(build_mesh(cells)?);
    let tm = TimeMesh::uniform(0.6, n_slabs)?;
    let mut disc = Discretization::new(mesh, r, r, k, &params, tm)?;
    let bubble = |x: [f64; 2]| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    let uvec = disc.space_u.interpolate_vector(|x| [bubble(x) * (1.0 + x[0]), -2.0 * bubble(x) * x[1]]);
    let pvec = disc.space_p.interpolate_scalar(|x| bubble(x) * (3.0 - x[0] - 2.0 * x[1]));

    // a(t) = Σ_{j<=k} t^j / j!,  b(t) = Σ_{j<=k} (-t)^j / (j+1)
    let poly = |c: &[f64], t: f64, der: usize| -> f64 {
        let mut s = 0.0;
        for (j, &cj) in c.iter().enumerate().skip(der) {
            let fall: f64 = (0..der).map(|i| (j - i) as f64).product();
            s += cj * fall * t.powi((j - der) as i32);
        }
        s
    };
    let mut a = vec![1.0; k + 1];
    for j in 1..=k {
        a[j] = a[j - 1] / j as f64;
    }
    let b: Vec<f64> = (0..=k).map(|j| (-1f64).powi(j as i32) / (j as f64 + 1.0)).collect();

    let blocks = disc.blocks.clone();
    let scale_vec = |v: &[f64], s: f64| v.iter().map(|x| s * x).collect::<Vec<_>>();
    let loads = |_n: usize, times: &[f64]| -> SlabLoads {
        let mut f = Vec::with_capacity(times.len());
        let mut g = Vec::with_capacity(times.len());
        for &t in times {
            // ρ M v' + A u − α B p = ρ f
            let mut fv = blocks.mass_u.mul_vec(&scale_vec(&uvec, poly(&a, t, 2)));
            blocks.stiffness_u.mul_vec_add(poly(&a, t, 0), &uvec, &mut fv);
            blocks.coupling.mul_vec_add(-params.alpha * poly(&b, t, 0), &pvec, &mut fv);
            fv.iter_mut().for_each(|x| *x /= params.rho);
            // c0 M_p p' + α Bᵀ v + A_p p = g
            let mut gv = blocks.mass_p.mul_vec(&scale_vec(&pvec, params.c0 * poly(&b, t, 1)));
            blocks.coupling.mul_transpose_vec_add(params.alpha * poly(&a, t, 1), &uvec, &mut gv);
            blocks.stiffness_p.mul_vec_add(poly(&b, t, 0), &pvec, &mut gv);
            f.push(fv);
            g.push(gv);
        }
        SlabLoads { f, g }
    };
    if corrupt_coupling {
        disc.blocks.coupling = disc.blocks.coupling.scaled(-1.0);
    }
    let init = NodalState { u: uvec.clone(), v: scale_vec(&uvec, poly(&a, 0.0, 1)), p: scale_vec(&pvec, poly(&b, 0.0, 0)) };
    let sol = march(&disc, &loads, &init)?;
    if !(sol.u.is_continuous() && sol.v.is_continuous() && sol.p.is_continuous()) {
        return Ok(f64::INFINITY);
    }
    let mut err: f64 = 0.0;
    let mut size: f64 = 0.0;
    let tm = &disc.time_mesh;
    for n in 0..tm.n_slabs() {
        for (j, &s) in disc.basis.nodes().iter().enumerate() {
            let t = tm.map(n, s);
            let pairs = [
                (&sol.u.slab_nodes(n)[j], &uvec, poly(&a, t, 0)),
                (&sol.v.slab_nodes(n)[j], &uvec, poly(&a, t, 1)),
                (&sol.p.slab_nodes(n)[j], &pvec, poly(&b, t, 0)),
            ];
            for (got, base, c) in pairs {
                for (g, e) in got.iter().zip(base.iter()) {
                    err = err.max((g - c * e).abs());
                    size = size.max((c * e).abs());
                }
            }
        }
    }
    Ok(err / size)
}
