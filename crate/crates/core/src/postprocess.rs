//! Error norms, experimental orders of convergence, energies and result
//! tables.
//!
//! Spatial integrals use the `(r+1)`-point Gauss rule per axis of the space
//! being measured, the same rule that assembles its matrices. The L²(L²)
//! norm uses `k+3` Gauss points per slab; the L∞(L²) norm is the maximum
//! over 100 Gauss points per slab.

use std::fmt::Write as _;

use crate::assembly::{FieldKind, NodalState, OperatorBlocks};
use crate::error::{Error, Result};
use crate::fespace::{gauss_quadrature_2d, FESpace, Tabulation};
use crate::model::{strain, ManufacturedSolution, MaterialParams};
use crate::quadrature::gauss_legendre;
use crate::solver::{Discretization, SpaceTimeSolution};
use crate::study::Scheme;
use crate::timedisc::TimeMesh;
use crate::trajectory::Trajectory;

/// Gauss points per slab for the L∞(L²) sampling.
pub const LINF_SAMPLES: usize = 100;

/// Extra Gauss points per slab, beyond `k`, for the L²(L²) rule.
pub const L2_EXTRA_POINTS: usize = 3;

/// A reference field `w(x, t)` with one or two components.
pub trait ExactField {
    fn components(&self) -> usize;

    fn value(&self, x: [f64; 2], t: f64) -> [f64; 2];

    /// `w(x, t) = a(t) b(x)` when available; lets the norms tabulate `b` once.
    fn separated(&self) -> Option<Separated<'_>> {
        None
    }
}

pub struct Separated<'a> {
    pub time: Box<dyn Fn(f64) -> f64 + 'a>,
    pub space: Box<dyn Fn([f64; 2]) -> [f64; 2] + 'a>,
}

/// One field of the manufactured solution.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedField {
    pub solution: ManufacturedSolution,
    pub field: FieldKind,
}

impl ExactField for ManufacturedField {
    fn components(&self) -> usize {
        match self.field {
            FieldKind::Pressure => 1,
            _ => 2,
        }
    }

    fn value(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let e = self.solution.exact_fields(x, t);
        match self.field {
            FieldKind::Displacement => e.u,
            FieldKind::Velocity => e.v,
            FieldKind::Pressure => [e.p, 0.0],
        }
    }

    fn separated(&self) -> Option<Separated<'_>> {
        let which = usize::from(self.field == FieldKind::Velocity);
        let scalar = self.field == FieldKind::Pressure;
        let msol = self.solution;
        Some(Separated {
            time: Box::new(move |t| msol.time_factor(t)[which]),
            space: Box::new(move |x| {
                let s = msol.space_factor(x);
                if scalar {
                    [s, 0.0]
                } else {
                    [s, s]
                }
            }),
        })
    }
}

/// Closure-backed reference field.
pub struct ExactFn<F> {
    pub components: usize,
    pub f: F,
}

impl<F: Fn([f64; 2], f64) -> [f64; 2]> ExactField for ExactFn<F> {
    fn components(&self) -> usize {
        self.components
    }

    fn value(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        (self.f)(x, t)
    }
}

/// Evaluates finite element functions at a tensor Gauss rule on every cell.
/// Points are stored cell by cell.
pub struct NormEvaluator<'a> {
    space: &'a FESpace,
    tab: Tabulation,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl<'a> NormEvaluator<'a> {
    /// `(r+1)` points per axis for a space of order `r`.
    pub fn new(space: &'a FESpace) -> Self {
        Self::with_points(space, space.order() + 1)
    }

    pub fn with_points(space: &'a FESpace, points_per_axis: usize) -> Self {
        let quad = gauss_quadrature_2d(points_per_axis);
        let mesh = space.mesh();
        let area = mesh.cell_size() * mesh.cell_size();
        let points = (0..mesh.n_cells())
            .flat_map(|c| quad.points().iter().map(move |&p| mesh.map_to_cell(c, p)))
            .collect();
        let weights = quad.weights().iter().map(|w| w * area).collect();
        Self { space, tab: space.tabulate(&quad), points, weights }
    }

    pub fn space(&self) -> &FESpace {
        self.space
    }

    /// Physical quadrature points, cell-major.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    fn nq(&self) -> usize {
        self.weights.len()
    }

    /// Quadrature weight of global point `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i % self.nq()]
    }

    /// Values of the function with coefficients `coeffs` at every point;
    /// scalar functions fill the first slot.
    pub fn values(&self, coeffs: &[f64]) -> Vec<[f64; 2]> {
        let s = self.space;
        let ns = s.n_scalar_dofs();
        let nc = s.components();
        let mut out = Vec::with_capacity(self.points.len());
        for cell in 0..s.mesh().n_cells() {
            let dofs = s.cell_dofs(cell);
            for q in 0..self.nq() {
                let mut v = [0.0; 2];
                for (a, phi) in self.tab.values(q).iter().enumerate() {
                    for (c, vc) in v.iter_mut().enumerate().take(nc) {
                        *vc += phi * coeffs[c * ns + dofs[a]];
                    }
                }
                out.push(v);
            }
        }
        out
    }

    /// Physical gradients at every point; row `c` is `∇w_c`.
    pub fn gradients(&self, coeffs: &[f64]) -> Vec<[[f64; 2]; 2]> {
        let s = self.space;
        let ns = s.n_scalar_dofs();
        let nc = s.components();
        let scale = s.gradient_scale();
        let mut out = Vec::with_capacity(self.points.len());
        for cell in 0..s.mesh().n_cells() {
            let dofs = s.cell_dofs(cell);
            for q in 0..self.nq() {
                let mut g = [[0.0; 2]; 2];
                for (a, dphi) in self.tab.gradients(q).iter().enumerate() {
                    for (c, gc) in g.iter_mut().enumerate().take(nc) {
                        let w = coeffs[c * ns + dofs[a]] * scale;
                        gc[0] += w * dphi[0];
                        gc[1] += w * dphi[1];
                    }
                }
                out.push(g);
            }
        }
        out
    }

    /// `∫_Ω Σ_c |w_c|²` for pointwise values `w(i)` at the quadrature points.
    pub fn integrate_sq(&self, w: impl Fn(usize) -> [f64; 2]) -> f64 {
        (0..self.points.len())
            .map(|i| {
                let v = w(i);
                self.weight(i) * (v[0] * v[0] + v[1] * v[1])
            })
            .sum()
    }

    /// Squared spatial L² distance between `coeffs` and `exact(·, t)`.
    pub fn error_sq(&self, coeffs: &[f64], exact: &ExactSampler<'_>, t: f64) -> f64 {
        let discrete = self.values(coeffs);
        let e = exact.at(self, t);
        self.integrate_sq(|i| [discrete[i][0] - e[i][0], discrete[i][1] - e[i][1]])
    }
}

/// Pointwise evaluation of an [`ExactField`] on the points of a
/// [`NormEvaluator`], reusing the spatial profile of separated fields.
pub struct ExactSampler<'a> {
    field: &'a dyn ExactField,
    separated: Option<(Separated<'a>, Vec<[f64; 2]>)>,
}

impl<'a> ExactSampler<'a> {
    pub fn new(field: &'a dyn ExactField, eval: &NormEvaluator<'_>) -> Self {
        let separated = field.separated().map(|s| {
            let profile = eval.points().iter().map(|&x| (s.space)(x)).collect();
            (s, profile)
        });
        Self { field, separated }
    }

    pub fn at(&self, eval: &NormEvaluator<'_>, t: f64) -> Vec<[f64; 2]> {
        match &self.separated {
            Some((s, profile)) => {
                let a = (s.time)(t);
                profile.iter().map(|v| [a * v[0], a * v[1]]).collect()
            }
            None => {
                let nc = self.field.components();
                eval.points()
                    .iter()
                    .map(|&x| {
                        let mut v = self.field.value(x, t);
                        if nc == 1 {
                            v[1] = 0.0;
                        }
                        v
                    })
                    .collect()
            }
        }
    }
}

/// `‖w − w_h‖_{L²(0,T; L²)}` with `points` Gauss points per slab.
pub fn trajectory_l2l2_error(traj: &Trajectory, space: &FESpace, exact: &dyn ExactField, points: usize) -> f64 {
    let eval = NormEvaluator::new(space);
    let sampler = ExactSampler::new(exact, &eval);
    let tm = traj.time_mesh();
    let (nodes, weights) = gauss_legendre(points);
    let mut total = 0.0;
    for n in 0..tm.n_slabs() {
        let half = 0.5 * tm.tau_n(n);
        for (&s, &w) in nodes.iter().zip(&weights) {
            total += half * w * eval.error_sq(&traj.eval_on_slab(n, s), &sampler, tm.map(n, s));
        }
    }
    total.sqrt()
}

/// `max ‖w(t) − w_h(t)‖_{L²}` over `samples` Gauss points of every slab.
pub fn trajectory_linf_l2_error(traj: &Trajectory, space: &FESpace, exact: &dyn ExactField, samples: usize) -> f64 {
    let eval = NormEvaluator::new(space);
    let sampler = ExactSampler::new(exact, &eval);
    let tm = traj.time_mesh();
    let (nodes, _) = gauss_legendre(samples);
    let mut worst: f64 = 0.0;
    for n in 0..tm.n_slabs() {
        for &s in &nodes {
            worst = worst.max(eval.error_sq(&traj.eval_on_slab(n, s), &sampler, tm.map(n, s)));
        }
    }
    worst.sqrt()
}

fn field_space(disc: &Discretization, field: FieldKind) -> &FESpace {
    match field {
        FieldKind::Pressure => &disc.space_p,
        _ => &disc.space_u,
    }
}

/// L²(L²) error of one field against the manufactured solution.
pub fn l2l2_error(
    solution: &SpaceTimeSolution,
    msol: &ManufacturedSolution,
    field: FieldKind,
    disc: &Discretization,
) -> f64 {
    l2l2_error_with_points(solution, msol, field, disc, disc.k() + L2_EXTRA_POINTS)
}

/// As [`l2l2_error`] with an explicit number of temporal Gauss points.
pub fn l2l2_error_with_points(
    solution: &SpaceTimeSolution,
    msol: &ManufacturedSolution,
    field: FieldKind,
    disc: &Discretization,
    points: usize,
) -> f64 {
    let exact = ManufacturedField { solution: *msol, field };
    trajectory_l2l2_error(solution.field(field), field_space(disc, field), &exact, points)
}

/// L∞(L²) error of one field, sampled at [`LINF_SAMPLES`] Gauss points per slab.
pub fn linf_l2_error(
    solution: &SpaceTimeSolution,
    msol: &ManufacturedSolution,
    field: FieldKind,
    disc: &Discretization,
) -> f64 {
    let exact = ManufacturedField { solution: *msol, field };
    trajectory_linf_l2_error(solution.field(field), field_space(disc, field), &exact, LINF_SAMPLES)
}

/// `EOC_L = log2(e_{L-1} / e_L)`; `None` at the first level.
pub fn eoc(errors: &[f64]) -> Result<Vec<Option<f64>>> {
    if let Some((level, &value)) = errors.iter().enumerate().find(|(_, &e)| !(e > 0.0)) {
        return Err(Error::NonPositiveError { level, value });
    }
    Ok(std::iter::once(None)
        .chain(errors.windows(2).map(|w| Some((w[0] / w[1]).log2())))
        .take(errors.len())
        .collect())
}

/// Energy density `ρ/2 |∂t u|² + C ε(u) : ε(u) + c0/2 p²` integrated over
/// `(0, t]` and the domain, where `fields(n, s)` returns `(∂t u, ∇u, p)` at
/// the points of `eval_u` (and `eval_p` for `p`) at reference time `s` of
/// slab `n`.
fn cumulative_energy(
    params: &MaterialParams,
    time_mesh: &TimeMesh,
    points: usize,
    t: f64,
    eval_u: &NormEvaluator<'_>,
    eval_p: &NormEvaluator<'_>,
    mut fields: impl FnMut(usize, f64) -> (Vec<[f64; 2]>, Vec<[[f64; 2]; 2]>, Vec<[f64; 2]>),
) -> f64 {
    let (nodes, weights) = gauss_legendre(points);
    let mut total = 0.0;
    for n in 0..time_mesh.n_slabs() {
        let (a, b) = time_mesh.slab(n);
        if a >= t {
            break;
        }
        let end = b.min(t);
        let half = 0.5 * (end - a);
        let tau = time_mesh.tau_n(n);
        for (&x, &w) in nodes.iter().zip(&weights) {
            // reference coordinate on the slab of the point `a + half (x + 1)`
            let s = -1.0 + 2.0 * half * (x + 1.0) / tau;
            let (du, grad, p) = fields(n, s);
            let kinetic = 0.5 * params.rho * eval_u.integrate_sq(|i| du[i]);
            let elastic: f64 = grad
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let e = strain(*g);
                    let sig = params.stress(e);
                    eval_u.weight(i) * (sig[0][0] * e[0][0] + 2.0 * sig[0][1] * e[0][1] + sig[1][1] * e[1][1])
                })
                .sum();
            let storage = 0.5 * params.c0 * eval_p.integrate_sq(|i| p[i]);
            total += half * w * (kinetic + elastic + storage);
        }
    }
    total
}

/// Energy of the discrete solution accumulated over `(0, t]`, with `∂t u`
/// taken from the displacement trajectory.
pub fn energy(solution: &SpaceTimeSolution, disc: &Discretization, t: f64) -> f64 {
    let eu = NormEvaluator::new(&disc.space_u);
    let ep = NormEvaluator::new(&disc.space_p);
    cumulative_energy(disc.params(), &disc.time_mesh, disc.k() + L2_EXTRA_POINTS, t, &eu, &ep, |n, s| {
        (
            eu.values(&solution.u.derivative_on_slab(n, s)),
            eu.gradients(&solution.u.eval_on_slab(n, s)),
            ep.values(&solution.p.eval_on_slab(n, s)),
        )
    })
}

/// Energy of the manufactured solution accumulated over `(0, t]`, with the
/// same quadrature as [`energy`].
pub fn exact_energy(msol: &ManufacturedSolution, disc: &Discretization, t: f64) -> f64 {
    let eu = NormEvaluator::new(&disc.space_u);
    let ep = NormEvaluator::new(&disc.space_p);
    let tm = &disc.time_mesh;
    cumulative_energy(disc.params(), tm, disc.k() + L2_EXTRA_POINTS, t, &eu, &ep, |n, s| {
        let time = tm.map(n, s);
        let du = eu.points().iter().map(|&x| msol.exact_fields(x, time).v).collect();
        let grad = eu.points().iter().map(|&x| msol.grad_u(x, time)).collect();
        let p = ep.points().iter().map(|&x| [msol.exact_fields(x, time).p, 0.0]).collect();
        (du, grad, p)
    })
}

/// Instantaneous mechanical energy
/// `ρ/2 vᵀ M v + 1/2 uᵀ A u + c0/2 pᵀ M_p p` of a nodal state; Dirichlet
/// entries are ignored.
pub fn mechanical_energy(state: &NodalState, blocks: &OperatorBlocks) -> f64 {
    let mask = |x: &[f64], fixed: &[bool]| -> Vec<f64> {
        x.iter().zip(fixed).map(|(&v, &f)| if f { 0.0 } else { v }).collect()
    };
    let quad = |m: &crate::assembly::SparseMatrix, x: &[f64]| -> f64 {
        m.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    };
    let u = mask(&state.u, &blocks.dirichlet_u);
    let v = mask(&state.v, &blocks.dirichlet_u);
    let p = mask(&state.p, &blocks.dirichlet_p);
    0.5 * quad(&blocks.mass_u, &v) + 0.5 * quad(&blocks.stiffness_u, &u) + 0.5 * blocks.params.c0 * quad(&blocks.mass_p, &p)
}

/// Inputs of [`split_norms`].
pub struct SplitInput<'a> {
    pub disc: &'a Discretization,
    pub solution: &'a SpaceTimeSolution,
    pub msol: &'a ManufacturedSolution,
    pub w1: &'a Trajectory,
    pub w2: &'a Trajectory,
    pub p_interp: &'a Trajectory,
}

/// L²(L²) norms of the error splitting against the special approximation.
pub fn split_norms(input: &SplitInput<'_>) -> crate::projection::SplitReport {
    let disc = input.disc;
    let eu = NormEvaluator::new(&disc.space_u);
    let ep = NormEvaluator::new(&disc.space_p);
    let tm = &disc.time_mesh;
    let (nodes, weights) = gauss_legendre(disc.k() + L2_EXTRA_POINTS);
    let mut acc = [0.0; 7];
    let sol = input.solution;
    for n in 0..tm.n_slabs() {
        let half = 0.5 * tm.tau_n(n);
        for (&s, &w) in nodes.iter().zip(&weights) {
            let t = tm.map(n, s);
            let exact_u: Vec<_> = eu.points().iter().map(|&x| input.msol.exact_fields(x, t)).collect();
            let exact_p: Vec<_> = ep.points().iter().map(|&x| input.msol.exact_fields(x, t).p).collect();
            let uh = eu.values(&sol.u.eval_on_slab(n, s));
            let vh = eu.values(&sol.v.eval_on_slab(n, s));
            let ph = ep.values(&sol.p.eval_on_slab(n, s));
            let w1 = eu.values(&input.w1.eval_on_slab(n, s));
            let w2 = eu.values(&input.w2.eval_on_slab(n, s));
            let ip = ep.values(&input.p_interp.eval_on_slab(n, s));
            let d = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];
            let terms = [
                eu.integrate_sq(|i| d(exact_u[i].u, w1[i])),
                eu.integrate_sq(|i| d(exact_u[i].v, w2[i])),
                eu.integrate_sq(|i| d(w1[i], uh[i])),
                eu.integrate_sq(|i| d(w2[i], vh[i])),
                ep.integrate_sq(|i| [exact_p[i] - ip[i][0], 0.0]),
                ep.integrate_sq(|i| [ip[i][0] - ph[i][0], 0.0]),
                eu.integrate_sq(|i| {
                    let eta = d(exact_u[i].u, w1[i]);
                    let e = d(w1[i], uh[i]);
                    let total = d(exact_u[i].u, uh[i]);
                    [eta[0] + e[0] - total[0], eta[1] + e[1] - total[1]]
                }) + ep.integrate_sq(|i| [(exact_p[i] - ip[i][0]) + (ip[i][0] - ph[i][0]) - (exact_p[i] - ph[i][0]), 0.0]),
            ];
            for (a, v) in acc.iter_mut().zip(terms) {
                *a += half * w * v;
            }
        }
    }
    let [eta1, eta2, e1, e2, omega, e, defect] = acc.map(f64::sqrt);
    crate::projection::SplitReport { eta1, eta2, e1, e2, omega, e, reconstruction_defect: defect }
}

/// Norm of an error column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2L2,
    LinfL2,
}

impl Norm {
    fn label(self) -> &'static str {
        match self {
            Norm::L2L2 => "l2l2",
            Norm::LinfL2 => "linfl2",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Norm::L2L2 => "L2(L2)",
            Norm::LinfL2 => "Linf(L2)",
        }
    }
}

const FIELDS: [(FieldKind, &str); 3] =
    [(FieldKind::Displacement, "u"), (FieldKind::Velocity, "v"), (FieldKind::Pressure, "p")];

fn field_index(field: FieldKind) -> usize {
    match field {
        FieldKind::Displacement => 0,
        FieldKind::Velocity => 1,
        FieldKind::Pressure => 2,
    }
}

/// Errors of one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: u32,
    pub tau: f64,
    pub h: f64,
    /// `[u, v, p]`
    pub l2l2: [f64; 3],
    /// `[u, v, p]`
    pub linf_l2: [f64; 3],
}

impl LevelRecord {
    pub fn error(&self, norm: Norm, field: FieldKind) -> f64 {
        let i = field_index(field);
        match norm {
            Norm::L2L2 => self.l2l2[i],
            Norm::LinfL2 => self.linf_l2[i],
        }
    }
}

/// Errors and EOCs of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub scheme: Scheme,
    pub k: usize,
    pub r: usize,
    pub records: Vec<LevelRecord>,
}

/// Scientific notation with 10 significant digits and a two-digit exponent.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.9e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mant}e{sign}{:02}", e.abs())
        }
        None => s,
    }
}

fn format_eoc(e: Option<f64>) -> String {
    e.map_or_else(|| "--".to_string(), |v| format!("{v:.2}"))
}

impl ErrorReport {
    pub fn errors(&self, norm: Norm, field: FieldKind) -> Vec<f64> {
        self.records.iter().map(|r| r.error(norm, field)).collect()
    }

    /// EOC column; entries whose errors are not positive are `None`.
    pub fn eocs(&self, norm: Norm, field: FieldKind) -> Vec<Option<f64>> {
        let e = self.errors(norm, field);
        eoc(&e).unwrap_or_else(|_| {
            std::iter::once(None)
                .chain(e.windows(2).map(|w| (w[0] > 0.0 && w[1] > 0.0).then(|| (w[0] / w[1]).log2())))
                .take(e.len())
                .collect()
        })
    }

    /// File name stem, e.g. `equal-order_k2_r2`.
    pub fn file_stem(&self) -> String {
        format!("{}_k{}_r{}", self.scheme, self.k, self.r)
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["scheme", "k", "r", "level", "tau", "h"].into_iter().map(String::from).collect::<Vec<_>>();
        for norm in [Norm::L2L2, Norm::LinfL2] {
            for (_, name) in FIELDS {
                cols.push(format!("{name}_{}", norm.label()));
                cols.push(format!("{name}_{}_eoc", norm.label()));
            }
        }
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        let eocs: Vec<Vec<Option<f64>>> = [Norm::L2L2, Norm::LinfL2]
            .iter()
            .flat_map(|&n| FIELDS.iter().map(move |&(f, _)| (n, f)))
            .map(|(n, f)| self.eocs(n, f))
            .collect();
        for (i, r) in self.records.iter().enumerate() {
            let _ = write!(out, "{},{},{},{},{},{}", self.scheme, self.k, self.r, r.level, format_sci(r.tau), format_sci(r.h));
            let mut col = 0;
            for norm in [Norm::L2L2, Norm::LinfL2] {
                for (f, _) in FIELDS {
                    let _ = write!(out, ",{},{}", format_sci(r.error(norm, f)), format_eoc(eocs[col][i]));
                    col += 1;
                }
            }
            out.push('\n');
        }
        out
    }

    fn rows(&self, norm: Norm) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["level".to_string(), "tau".into(), "h".into()];
        for (_, name) in FIELDS {
            header.push(format!("{name} {}", norm.title()));
            header.push("EOC".into());
        }
        let eocs: Vec<_> = FIELDS.iter().map(|&(f, _)| self.eocs(norm, f)).collect();
        let rows = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = vec![r.level.to_string(), format!("{:.6}", r.tau), format!("{:.6}", r.h)];
                for (j, (f, _)) in FIELDS.iter().enumerate() {
                    row.push(format_sci(r.error(norm, *f)));
                    row.push(format_eoc(eocs[j][i]));
                }
                row
            })
            .collect();
        (header, rows)
    }

    fn title(&self) -> String {
        format!("scheme {}, k = {}, r = {}", self.scheme, self.k, self.r)
    }

    /// Aligned plain-text tables, one per norm.
    pub fn to_table(&self) -> String {
        let mut out = self.title();
        out.push('\n');
        for norm in [Norm::L2L2, Norm::LinfL2] {
            let (header, rows) = self.rows(norm);
            let widths: Vec<usize> = (0..header.len())
                .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            out.push('\n');
            out.push_str(&line(&header));
            out.push('\n');
            for r in &rows {
                out.push_str(&line(r));
                out.push('\n');
            }
        }
        out
    }

    /// Markdown tables, one per norm.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n", self.title());
        for norm in [Norm::L2L2, Norm::LinfL2] {
            let (header, rows) = self.rows(norm);
            out.push('\n');
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---:|".repeat(header.len()));
            for r in rows {
                let _ = writeln!(out, "| {} |", r.join(" | "));
            }
        }
        out
    }
}
