//! Elliptic projections in space and interpolation/projection operators in
//! time, as used to split the discretization error.
//!
//! * `R_h` (vector): `⟨C ε(R_h w), ε(φ_h)⟩ = ⟨C ε(w), ε(φ_h)⟩` for all `φ_h`.
//! * `R_h` (scalar): `⟨K ∇R_h w, ∇ψ_h⟩ = ⟨K ∇w, ∇ψ_h⟩` for all `ψ_h`.
//! * `I_τ`: Lagrange interpolation at the Gauss–Lobatto nodes of each slab.
//! * `Π_τ^{k-1}`: slabwise L² projection onto polynomials of degree `k-1`.
//!
//! Right-hand sides with continuous data are integrated with `r+3` Gauss
//! points per axis directly from the analytic field.

use crate::assembly::{assemble_diffusion, assemble_elasticity, SparseMatrix};
use crate::error::Result;
use crate::fespace::{gauss_quadrature_2d, FESpace, SpatialQuadrature};
use crate::model::{strain, ManufacturedSolution, MaterialParams, ScalarField, VectorField};
use crate::quadrature::{gauss_legendre, legendre_values};
use crate::solver::{Discretization, LuSolver, SpaceTimeSolution};
use crate::timedisc::{SlabBasis, TimeMesh};
use crate::trajectory::Trajectory;

fn rhs_quadrature(space: &FESpace) -> SpatialQuadrature {
    gauss_quadrature_2d(space.order() + 3)
}

/// Factorized elasticity operator for repeated vector projections.
pub struct VectorProjector {
    space: FESpace,
    params: MaterialParams,
    stiffness: SparseMatrix,
    lu: LuSolver,
    quad: SpatialQuadrature,
}

impl VectorProjector {
    pub fn new(space: &FESpace, params: &MaterialParams) -> Result<Self> {
        let stiffness = assemble_elasticity(space, params, &gauss_quadrature_2d(space.order() + 1))?;
        let lu = LuSolver::factorize(&stiffness)?;
        Ok(Self { space: space.clone(), params: params.clone(), stiffness, lu, quad: rhs_quadrature(space) })
    }

    /// `⟨C ε(w), ε(φ_i)⟩` for every test function; zero at Dirichlet DOFs.
    pub fn rhs(&self, field: &dyn VectorField) -> Vec<f64> {
        let s = &self.space;
        let tab = s.tabulate(&self.quad);
        let mesh = s.mesh();
        let h = mesh.cell_size();
        let ns = s.n_scalar_dofs();
        let mut b = vec![0.0; s.n_dofs()];
        for cell in 0..mesh.n_cells() {
            let dofs = s.cell_dofs(cell);
            for (q, (&p, &w)) in self.quad.points().iter().zip(self.quad.weights()).enumerate() {
                let x = mesh.map_to_cell(cell, p);
                let sigma = self.params.stress(strain(field.gradient(x)));
                let jxw = w * h * h;
                for (a, g) in tab.gradients(q).iter().enumerate() {
                    let g = [g[0] / h, g[1] / h];
                    // σ : ε(φ e_c) = σ_c · ∇φ for symmetric σ
                    for c in 0..2 {
                        b[c * ns + dofs[a]] += jxw * (sigma[c][0] * g[0] + sigma[c][1] * g[1]);
                    }
                }
            }
        }
        for &d in s.dirichlet_dofs() {
            b[d] = 0.0;
        }
        b
    }

    pub fn project(&self, field: &dyn VectorField) -> Result<Vec<f64>> {
        self.lu.solve(&self.rhs(field))
    }

    /// `max_i |⟨C ε(w − w_h), ε(φ_i)⟩|` over interior test functions.
    pub fn orthogonality_defect(&self, field: &dyn VectorField, coeffs: &[f64]) -> f64 {
        defect(&self.stiffness, &self.rhs(field), coeffs, self.space.is_dirichlet())
    }
}

/// Factorized diffusion operator for repeated scalar projections.
pub struct ScalarProjector {
    space: FESpace,
    params: MaterialParams,
    stiffness: SparseMatrix,
    lu: LuSolver,
    quad: SpatialQuadrature,
}

impl ScalarProjector {
    pub fn new(space: &FESpace, params: &MaterialParams) -> Result<Self> {
        let stiffness = assemble_diffusion(space, params, &gauss_quadrature_2d(space.order() + 1))?;
        let lu = LuSolver::factorize(&stiffness)?;
        Ok(Self { space: space.clone(), params: params.clone(), stiffness, lu, quad: rhs_quadrature(space) })
    }

    pub fn rhs(&self, field: &dyn ScalarField) -> Vec<f64> {
        let s = &self.space;
        let tab = s.tabulate(&self.quad);
        let mesh = s.mesh();
        let h = mesh.cell_size();
        let mut b = vec![0.0; s.n_dofs()];
        for cell in 0..mesh.n_cells() {
            let dofs = s.cell_dofs(cell);
            for (q, (&p, &w)) in self.quad.points().iter().zip(self.quad.weights()).enumerate() {
                let x = mesh.map_to_cell(cell, p);
                let flux = self.params.flux(field.gradient(x));
                let jxw = w * h * h;
                for (a, g) in tab.gradients(q).iter().enumerate() {
                    b[dofs[a]] += jxw * (flux[0] * g[0] + flux[1] * g[1]) / h;
                }
            }
        }
        for &d in s.dirichlet_dofs() {
            b[d] = 0.0;
        }
        b
    }

    pub fn project(&self, field: &dyn ScalarField) -> Result<Vec<f64>> {
        self.lu.solve(&self.rhs(field))
    }

    pub fn orthogonality_defect(&self, field: &dyn ScalarField, coeffs: &[f64]) -> f64 {
        defect(&self.stiffness, &self.rhs(field), coeffs, self.space.is_dirichlet())
    }
}

fn defect(stiffness: &SparseMatrix, rhs: &[f64], coeffs: &[f64], fixed: &[bool]) -> f64 {
    let a = stiffness.mul_vec(coeffs);
    a.iter()
        .zip(rhs)
        .zip(fixed)
        .filter(|(_, &f)| !f)
        .map(|((a, b), _)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub fn elliptic_projection_vector(space: &FESpace, params: &MaterialParams, w: &dyn VectorField) -> Result<Vec<f64>> {
    VectorProjector::new(space, params)?.project(w)
}

pub fn elliptic_projection_scalar(space: &FESpace, params: &MaterialParams, w: &dyn ScalarField) -> Result<Vec<f64>> {
    ScalarProjector::new(space, params)?.project(w)
}

/// `I_τ w`: collocation of `w` at the Gauss–Lobatto nodes of every slab.
/// Interface values are evaluated once and shared, so the result is
/// continuous.
pub fn interpolate_time(basis: &SlabBasis, time_mesh: &TimeMesh, w: impl Fn(f64) -> Vec<f64>) -> Trajectory {
    let k = basis.degree();
    let mut slabs = Vec::with_capacity(time_mesh.n_slabs());
    let mut left = w(0.0);
    for n in 0..time_mesh.n_slabs() {
        let mut nodes = Vec::with_capacity(k + 1);
        nodes.push(left.clone());
        for &s in &basis.nodes()[1..k] {
            nodes.push(w(time_mesh.map(n, s)));
        }
        let right = w(time_mesh.slab(n).1);
        nodes.push(right.clone());
        left = right;
        slabs.push(nodes);
    }
    Trajectory::new(time_mesh.clone(), basis.clone(), slabs)
}

/// Slabwise Legendre expansion `Σ_m c_m L_m(s)` of degree `degree`.
#[derive(Debug, Clone)]
pub struct PiecewiseLegendre {
    time_mesh: TimeMesh,
    degree: usize,
    /// `coeffs[n][m]`
    coeffs: Vec<Vec<Vec<f64>>>,
}

impl PiecewiseLegendre {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self, n: usize) -> &[Vec<f64>] {
        &self.coeffs[n]
    }

    pub fn eval_on_slab(&self, n: usize, s: f64) -> Vec<f64> {
        let l = legendre_values(self.degree + 1, s);
        let mut out = vec![0.0; self.coeffs[n][0].len()];
        for (c, lm) in self.coeffs[n].iter().zip(&l) {
            out.iter_mut().zip(c).for_each(|(o, c)| *o += lm * c);
        }
        out
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let (n, s) = self.time_mesh.locate(t);
        self.eval_on_slab(n, s)
    }

    /// Largest moment defect `|∫_{I_n} (Π w − w) q dt|` over the Legendre
    /// basis of the target space, integrated with `points` Gauss points.
    pub fn moment_defect(&self, w: &dyn Fn(f64) -> Vec<f64>, points: usize) -> f64 {
        let (x, wq) = gauss_legendre(points);
        let mut worst: f64 = 0.0;
        for n in 0..self.time_mesh.n_slabs() {
            let half = 0.5 * self.time_mesh.tau_n(n);
            let dim = self.coeffs[n][0].len();
            let mut m = vec![vec![0.0; dim]; self.degree + 1];
            for (s, ws) in x.iter().zip(&wq) {
                let diff: Vec<f64> = self
                    .eval_on_slab(n, *s)
                    .iter()
                    .zip(w(self.time_mesh.map(n, *s)))
                    .map(|(a, b)| a - b)
                    .collect();
                for (mm, l) in m.iter_mut().zip(legendre_values(self.degree + 1, *s)) {
                    mm.iter_mut().zip(&diff).for_each(|(a, d)| *a += half * ws * l * d);
                }
            }
            worst = worst.max(m.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs())));
        }
        worst
    }
}

/// `Π_τ^{degree} w` with moments computed by a `points`-point Gauss rule per
/// slab.
pub fn project_time(
    degree: usize,
    time_mesh: &TimeMesh,
    w: impl Fn(f64) -> Vec<f64>,
    points: usize,
) -> PiecewiseLegendre {
    let (x, wq) = gauss_legendre(points.max(degree + 1));
    let mut coeffs = Vec::with_capacity(time_mesh.n_slabs());
    for n in 0..time_mesh.n_slabs() {
        let mut c: Vec<Vec<f64>> = Vec::new();
        for (s, ws) in x.iter().zip(&wq) {
            let val = w(time_mesh.map(n, *s));
            if c.is_empty() {
                c = vec![vec![0.0; val.len()]; degree + 1];
            }
            for (m, l) in legendre_values(degree + 1, *s).iter().enumerate() {
                // orthogonality: ∫ L_m² ds = 2/(2m+1)
                let scale = (2 * m + 1) as f64 / 2.0 * ws * l;
                c[m].iter_mut().zip(&val).for_each(|(a, v)| *a += scale * v);
            }
        }
        coeffs.push(c);
    }
    PiecewiseLegendre { time_mesh: time_mesh.clone(), degree, coeffs }
}

/// The special approximation `(w1, w2)` of `(u, ∂t u)`:
/// `w2 = I_τ(R_h ∂t u)` and, on each slab,
/// `w1 = I_τ(∫_{t_{n-1}}^t w2 ds + R_h u(t_{n-1}))`.
///
/// `projected_u(t)` and `projected_du(t)` return `R_h u(t)` and
/// `R_h ∂t u(t)`. The antiderivative of the nodal polynomial `w2` is
/// integrated exactly. `w1` may jump at slab interfaces.
pub fn special_approximation_from(
    basis: &SlabBasis,
    time_mesh: &TimeMesh,
    projected_u: impl Fn(f64) -> Vec<f64>,
    projected_du: impl Fn(f64) -> Vec<f64>,
) -> (Trajectory, Trajectory) {
    let w2 = interpolate_time(basis, time_mesh, projected_du);
    let k = basis.degree();
    let antider: Vec<Vec<f64>> = basis.nodes().iter().map(|&s| basis.trial_antiderivative(s)).collect();
    let mut slabs = Vec::with_capacity(time_mesh.n_slabs());
    for n in 0..time_mesh.n_slabs() {
        let half = 0.5 * time_mesh.tau_n(n);
        let base = projected_u(time_mesh.slab(n).0);
        let nodes2 = w2.slab_nodes(n);
        let mut nodes = Vec::with_capacity(k + 1);
        for a in &antider {
            let mut v = base.clone();
            for (j, wj) in nodes2.iter().enumerate() {
                let c = half * a[j];
                v.iter_mut().zip(wj).for_each(|(x, y)| *x += c * y);
            }
            nodes.push(v);
        }
        slabs.push(nodes);
    }
    (Trajectory::new(time_mesh.clone(), basis.clone(), slabs), w2)
}

/// Special approximation of the manufactured displacement.
pub fn special_approximation(
    msol: &ManufacturedSolution,
    space: &FESpace,
    params: &MaterialParams,
    basis: &SlabBasis,
    time_mesh: &TimeMesh,
) -> Result<(Trajectory, Trajectory)> {
    let proj = VectorProjector::new(space, params)?;
    let pu = |t: f64| proj.project(&msol.displacement_at(t)).expect("factorized projector");
    let pdu = |t: f64| proj.project(&msol.velocity_at(t)).expect("factorized projector");
    Ok(special_approximation_from(basis, time_mesh, pu, pdu))
}

/// L²(L²) norms of the error splitting
/// `U − U_τh = η + E` with `η = (u − w1, v − w2)`, `E = (w1 − u_τh, w2 − v_τh)`
/// and `p − p_τh = ω + e` with `ω = p − I_τ R_h p`, `e = I_τ R_h p − p_τh`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub eta1: f64,
    pub eta2: f64,
    pub e1: f64,
    pub e2: f64,
    pub omega: f64,
    pub e: f64,
    /// `‖(η + E) − (U − U_τh)‖ + ‖(ω + e) − (p − p_τh)‖` in L²(L²).
    pub reconstruction_defect: f64,
}

/// Computes the error splitting of a discrete solution against the
/// manufactured solution.
pub fn error_split(
    solution: &SpaceTimeSolution,
    disc: &Discretization,
    msol: &ManufacturedSolution,
) -> Result<SplitReport> {
    use crate::postprocess::{split_norms, SplitInput};
    let (w1, w2) = special_approximation(msol, &disc.space_u, disc.params(), &disc.basis, &disc.time_mesh)?;
    let rs = ScalarProjector::new(&disc.space_p, disc.params())?;
    let ip = interpolate_time(&disc.basis, &disc.time_mesh, |t| {
        rs.project(&msol.pressure_at(t)).expect("factorized projector")
    });
    Ok(split_norms(&SplitInput { disc, solution, msol, w1: &w1, w2: &w2, p_interp: &ip }))
}
