//! Sparse direct solves and the slab-by-slab time marching driver.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::assembly::{
    assemble_blocks, assemble_loads, assemble_slab_rhs, build_slab_system, FieldKind, NodalState,
    OperatorBlocks, SlabLoads, SlabSystem, SparseMatrix,
};
use crate::error::{Error, Result};
use crate::fespace::{build_space, gauss_quadrature_2d, FESpace, SpatialQuadrature};
use crate::mesh::Mesh;
use crate::model::{Forcing, ManufacturedSolution, MaterialParams};
use crate::projection::{ScalarProjector, VectorProjector};
use crate::timedisc::{slab_basis, SlabBasis, TimeMesh};
use crate::trajectory::Trajectory;

/// LU factorization with partial pivoting and a column approximate minimum
/// degree ordering.
pub struct LuSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for LuSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuSolver").field("n", &self.n).finish()
    }
}

impl LuSolver {
    pub fn factorize(matrix: &SparseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch("LU needs a square matrix".into()));
        }
        let n = matrix.nrows();
        let triplets: Vec<_> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularMatrix { pivot: Some(index) },
            LuError::Generic(e) => Error::Solver(format!("{e:?}")),
        })?;
        Ok(Self { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch(format!("rhs has length {}, expected {}", rhs.len(), self.n)));
        }
        let mut b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| b[(i, 0)]).collect();
        if let Some(p) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix { pivot: Some(p) });
        }
        Ok(x)
    }
}

/// Solves `A x = b` with a fresh factorization.
pub fn lu_solve(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    LuSolver::factorize(matrix)?.solve(rhs)
}

/// `‖Ax − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
pub fn relative_residual(matrix: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    relative_residual_with_norm(matrix, matrix.norm_inf(), x, b)
}

fn relative_residual_with_norm(matrix: &SparseMatrix, a_norm: f64, x: &[f64], b: &[f64]) -> f64 {
    let ax = matrix.mul_vec(x);
    let r = ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let xn = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let bn = b.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let den = a_norm * xn + bn;
    if den == 0.0 {
        r
    } else {
        r / den
    }
}

/// Everything fixed for one refinement level: spaces, operator blocks and
/// the temporal discretization.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space_u: FESpace,
    pub space_p: FESpace,
    pub blocks: OperatorBlocks,
    pub time_mesh: TimeMesh,
    pub basis: SlabBasis,
    /// Spatial rule for matrices and load vectors (`max order + 1` points per axis).
    pub quadrature: SpatialQuadrature,
}

impl Discretization {
    /// Vector space of order `order_u` for `u`, `v` and scalar space of
    /// order `order_p` for `p`, cG(`k`) in time.
    pub fn new(
        mesh: Arc<Mesh>,
        order_u: usize,
        order_p: usize,
        k: usize,
        params: &MaterialParams,
        time_mesh: TimeMesh,
    ) -> Result<Self> {
        let space_u = build_space(mesh.clone(), order_u, 2)?;
        let space_p = build_space(mesh, order_p, 1)?;
        let quadrature = gauss_quadrature_2d(order_u.max(order_p) + 1);
        let blocks = assemble_blocks(&space_u, &space_p, params, &quadrature)?;
        let basis = slab_basis(k)?;
        Ok(Self { space_u, space_p, blocks, time_mesh, basis, quadrature })
    }

    pub fn params(&self) -> &MaterialParams {
        &self.blocks.params
    }

    pub fn k(&self) -> usize {
        self.basis.degree()
    }

    /// Loads of an analytic forcing, assembled with the discretization's rule.
    pub fn forcing_loads<'a>(&'a self, forcing: &'a dyn Forcing) -> ForcingLoads<'a> {
        ForcingLoads { disc: self, forcing }
    }
}

/// Source of the load vectors of every slab.
pub trait LoadProvider {
    /// Loads at the physical Gauss–Lobatto times `times` of slab `slab`.
    fn slab_loads(&self, slab: usize, times: &[f64]) -> SlabLoads;
}

impl<F> LoadProvider for F
where
    F: Fn(usize, &[f64]) -> SlabLoads,
{
    fn slab_loads(&self, slab: usize, times: &[f64]) -> SlabLoads {
        self(slab, times)
    }
}

pub struct ForcingLoads<'a> {
    disc: &'a Discretization,
    forcing: &'a dyn Forcing,
}

impl LoadProvider for ForcingLoads<'_> {
    fn slab_loads(&self, _slab: usize, times: &[f64]) -> SlabLoads {
        assemble_loads(self.forcing, &self.disc.space_u, &self.disc.space_p, &self.disc.quadrature, times)
    }
}

/// Discrete `(u, v, p)` over `(0, T]`, continuous in time.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    pub u: Trajectory,
    pub v: Trajectory,
    pub p: Trajectory,
    /// Largest relative residual of any slab solve.
    pub max_residual: f64,
    /// Number of slab matrix factorizations performed.
    pub factorizations: usize,
}

impl SpaceTimeSolution {
    pub fn field(&self, field: FieldKind) -> &Trajectory {
        match field {
            FieldKind::Displacement => &self.u,
            FieldKind::Velocity => &self.v,
            FieldKind::Pressure => &self.p,
        }
    }

    pub fn time_mesh(&self) -> &TimeMesh {
        self.u.time_mesh()
    }

    /// Nodal state at `t`.
    pub fn state(&self, t: f64) -> NodalState {
        NodalState { u: self.u.eval(t), v: self.v.eval(t), p: self.p.eval(t) }
    }
}

/// Solves the slab problems one after another, starting from `initial`.
///
/// The slab matrix is factorized once and reused while the step length is
/// unchanged.
pub fn march(disc: &Discretization, loads: &dyn LoadProvider, initial: &NodalState) -> Result<SpaceTimeSolution> {
    let k = disc.k();
    let tm = &disc.time_mesh;
    let (n_u, n_p) = (disc.blocks.n_u(), disc.blocks.n_p());
    if initial.u.len() != n_u || initial.v.len() != n_u || initial.p.len() != n_p {
        return Err(Error::DimensionMismatch("initial values do not match the spaces".into()));
    }
    let mut u_slabs = Vec::with_capacity(tm.n_slabs());
    let mut v_slabs = Vec::with_capacity(tm.n_slabs());
    let mut p_slabs = Vec::with_capacity(tm.n_slabs());
    let mut current: Option<(SlabSystem, LuSolver, f64)> = None;
    let mut factorizations = 0;
    let mut max_residual: f64 = 0.0;
    let mut start = initial.clone();

    for n in 0..tm.n_slabs() {
        let tau = tm.tau_n(n);
        let wrap = |e: Error| Error::Slab { slab: n, source: Box::new(e) };
        let refactor = match &current {
            Some((sys, _, _)) => (sys.tau - tau).abs() > 1e-12 * tau,
            None => true,
        };
        if refactor {
            let sys = build_slab_system(&disc.blocks, &disc.basis, tau).map_err(wrap)?;
            let lu = LuSolver::factorize(&sys.matrix).map_err(wrap)?;
            let norm = sys.matrix.norm_inf();
            factorizations += 1;
            current = Some((sys, lu, norm));
        }
        let (sys, lu, a_norm) = current.as_ref().unwrap();
        let times: Vec<f64> = disc.basis.nodes().iter().map(|&s| tm.map(n, s)).collect();
        let slab_loads = loads.slab_loads(n, &times);
        let rhs = assemble_slab_rhs(sys, &disc.blocks, &slab_loads, &start).map_err(wrap)?;
        let x = lu.solve(&rhs).map_err(wrap)?;
        max_residual = max_residual.max(relative_residual_with_norm(&sys.matrix, *a_norm, &x, &rhs));

        let layout = sys.layout;
        let mut us = vec![start.u.clone()];
        let mut vs = vec![start.v.clone()];
        let mut ps = vec![start.p.clone()];
        for j in 1..=k {
            let iu = layout.index(FieldKind::Displacement, j, 0);
            let iv = layout.index(FieldKind::Velocity, j, 0);
            let ip = layout.index(FieldKind::Pressure, j, 0);
            us.push(x[iu..iu + n_u].to_vec());
            vs.push(x[iv..iv + n_u].to_vec());
            ps.push(x[ip..ip + n_p].to_vec());
        }
        start = NodalState { u: us[k].clone(), v: vs[k].clone(), p: ps[k].clone() };
        u_slabs.push(us);
        v_slabs.push(vs);
        p_slabs.push(ps);
    }
    let traj = |s| Trajectory::new(tm.clone(), disc.basis.clone(), s);
    Ok(SpaceTimeSolution {
        u: traj(u_slabs),
        v: traj(v_slabs),
        p: traj(p_slabs),
        max_residual,
        factorizations,
    })
}

/// How discrete initial values are obtained from the exact ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialStrategy {
    /// `u_{0,h} = R_h u_0`; `v` and `p` by nodal interpolation.
    #[default]
    RitzDisplacement,
    /// Elliptic projection of all three fields.
    EllipticProjection,
    /// Nodal interpolation of all three fields.
    NodalInterpolation,
}

impl std::str::FromStr for InitialStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ritz-displacement" | "default" => Ok(Self::RitzDisplacement),
            "elliptic-projection" => Ok(Self::EllipticProjection),
            "nodal-interpolation" => Ok(Self::NodalInterpolation),
            other => Err(Error::InvalidArgument(format!("unknown initial value strategy '{other}'"))),
        }
    }
}

/// Discrete initial values at `t = 0` of the manufactured solution.
pub fn initial_values(
    disc: &Discretization,
    msol: &ManufacturedSolution,
    strategy: InitialStrategy,
) -> Result<NodalState> {
    let t0 = 0.0;
    let nodal_u = || disc.space_u.interpolate_vector(|x| msol.exact_fields(x, t0).u);
    let nodal_v = || disc.space_u.interpolate_vector(|x| msol.exact_fields(x, t0).v);
    let nodal_p = || disc.space_p.interpolate_scalar(|x| msol.exact_fields(x, t0).p);
    Ok(match strategy {
        InitialStrategy::NodalInterpolation => NodalState { u: nodal_u(), v: nodal_v(), p: nodal_p() },
        InitialStrategy::RitzDisplacement => {
            let rv = VectorProjector::new(&disc.space_u, disc.params())?;
            NodalState { u: rv.project(&msol.displacement_at(t0))?, v: nodal_v(), p: nodal_p() }
        }
        InitialStrategy::EllipticProjection => {
            let rv = VectorProjector::new(&disc.space_u, disc.params())?;
            let rs = ScalarProjector::new(&disc.space_p, disc.params())?;
            NodalState {
                u: rv.project(&msol.displacement_at(t0))?,
                v: rv.project(&msol.velocity_at(t0))?,
                p: rs.project(&msol.pressure_at(t0))?,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn identity_and_two_by_two() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(lu_solve(&SparseMatrix::identity(3), &b).unwrap(), b);
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let x = lu_solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(relative_residual(&a, &x, &[3.0, 3.0]) < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0)]).unwrap();
        let err = lu_solve(&a, &[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { pivot: Some(_) }), "{err}");
    }

    #[test]
    fn rhs_length_is_checked() {
        let lu = LuSolver::factorize(&SparseMatrix::identity(2)).unwrap();
        assert!(lu.solve(&[1.0]).is_err());
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let mesh = Arc::new(build_mesh(2).unwrap());
        let tm = TimeMesh::uniform(0.4, 4).unwrap();
        let disc = Discretization::new(mesh, 2, 2, 2, &MaterialParams::default(), tm).unwrap();
        let zero = crate::model::ZeroForcing;
        let init = NodalState::zeros(disc.blocks.n_u(), disc.blocks.n_p());
        let sol = march(&disc, &disc.forcing_loads(&zero), &init).unwrap();
        for tr in [&sol.u, &sol.v, &sol.p] {
            assert!(tr.slabs().iter().flatten().flatten().all(|&x| x == 0.0));
            assert!(tr.is_continuous());
        }
        assert_eq!(sol.factorizations, 1);
    }

    #[test]
    fn zero_initial_values_for_benchmark() {
        let mesh = Arc::new(build_mesh(2).unwrap());
        let tm = TimeMesh::uniform(1.0, 2).unwrap();
        let disc = Discretization::new(mesh, 2, 2, 1, &MaterialParams::default(), tm).unwrap();
        let msol = ManufacturedSolution::default();
        for s in [
            InitialStrategy::RitzDisplacement,
            InitialStrategy::EllipticProjection,
            InitialStrategy::NodalInterpolation,
        ] {
            let iv = initial_values(&disc, &msol, s).unwrap();
            assert!(iv.u.iter().chain(&iv.v).chain(&iv.p).all(|x| x.abs() < 1e-15));
        }
        assert_eq!("default".parse::<InitialStrategy>().unwrap(), InitialStrategy::RitzDisplacement);
        assert!("bogus".parse::<InitialStrategy>().is_err());
    }
}
