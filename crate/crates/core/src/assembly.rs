//! Spatial operator blocks and the coupled cG(k) slab system.
//!
//! On a slab with reference coordinate `s ∈ [-1, 1]`, every field is
//! expanded in the Lagrange trial basis `ℓ_j` through the Gauss–Lobatto
//! nodes, `u(t) = Σ_j U_j ℓ_j(s)`, and tested against the Legendre
//! polynomials `L_m`, `m = 0..k-1`. With the Gauss–Lobatto weights `ŵ_μ`
//! the temporal coefficients are
//!
//! ```text
//! D[m][j] = Σ_μ ŵ_μ L_m(s_μ) ℓ_j'(s_μ)          (τ/2 · 2/τ cancels)
//! W[m][j] = (τ/2) ŵ_j L_m(s_j)
//! ```
//!
//! and the slab equations read, for each test index `m`,
//!
//! ```text
//! Σ_j D[m][j] M U_j        − W[m][j] M V_j                    = 0
//! Σ_j D[m][j] ρM V_j       + W[m][j] (A_e U_j − α B P_j)      = ρ Σ_μ W[m][μ] F_μ
//! Σ_j D[m][j] c0 M_p P_j   + W[m][j] (α Bᵀ V_j + A_p P_j)     = Σ_μ W[m][μ] G_μ
//! ```
//!
//! where `B_{iq} = ⟨∇·χ_i, ψ_q⟩`. The left end point values (`j = 0`) are
//! known from the previous slab and move to the right-hand side.

use crate::error::{Error, Result};
use crate::fespace::{FESpace, SpatialQuadrature, Tabulation};
use crate::model::{Forcing, MaterialParams};
use crate::timedisc::SlabBasis;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// in input order so the result is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            let (a, b) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(a..b);
            order.sort_by_key(|&e| cols[e]);
            for &e in &order {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == cols[e] {
                    *values.last_mut().unwrap() += vals[e];
                } else {
                    col_idx.push(cols[e]);
                    values.push(vals[e]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut m = Self { nrows, ncols, row_ptr, col_idx, values, symmetric: false };
        m.symmetric = nrows == ncols && m.asymmetry() < 1e-12;
        Ok(m)
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, &[]).expect("empty matrix")
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t).expect("identity")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Set when `max |A - Aᵀ| < 1e-12` was verified at construction.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y += a * A x`
    pub fn mul_vec_add(&self, a: f64, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>();
        }
    }

    /// `y += a * Aᵀ x`
    pub fn mul_transpose_vec_add(&self, a: f64, x: &[f64], y: &mut [f64]) {
        for (i, xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += a * v * xi;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("transpose")
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= a);
        m
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Bit-level equality of pattern and values.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Spatial operators of the Biot system after Dirichlet elimination.
///
/// Square blocks have zero rows and columns at Dirichlet DOFs except for a
/// unit diagonal. The coupling block has its Dirichlet rows and columns
/// zeroed.
#[derive(Debug, Clone)]
pub struct OperatorBlocks {
    /// `ρ ⟨u, χ⟩`
    pub mass_u: SparseMatrix,
    /// `⟨u, χ⟩`
    pub mass_u_plain: SparseMatrix,
    /// `⟨C ε(u), ε(χ)⟩`
    pub stiffness_u: SparseMatrix,
    /// `B_{iq} = ⟨∇·χ_i, ψ_q⟩`, without the factor α.
    pub coupling: SparseMatrix,
    /// `⟨p, ψ⟩`, without the factor c0.
    pub mass_p: SparseMatrix,
    /// `⟨K ∇p, ∇ψ⟩`
    pub stiffness_p: SparseMatrix,
    pub dirichlet_u: Vec<bool>,
    pub dirichlet_p: Vec<bool>,
    pub params: MaterialParams,
}

impl OperatorBlocks {
    pub fn n_u(&self) -> usize {
        self.mass_u.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.mass_p.nrows()
    }
}

/// Local matrices shared by every cell of the uniform mesh.
struct ElementMatrices {
    nu: usize,
    np: usize,
    mass_u: Vec<f64>,
    /// `stiff[c][d][a * nu + b]`: test `φ_a e_c`, trial `φ_b e_d`.
    stiff: [[Vec<f64>; 2]; 2],
    /// `coup[c][a * np + q] = ∫ ∂_c φ_a ψ_q`
    coup: [Vec<f64>; 2],
    mass_p: Vec<f64>,
    stiff_p: Vec<f64>,
}

fn local_mass(tab: &Tabulation, quad: &SpatialQuadrature, area: f64) -> Vec<f64> {
    let n = tab.n_local();
    let mut m = vec![0.0; n * n];
    for (q, w) in quad.weights().iter().enumerate() {
        let v = tab.values(q);
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] += w * area * v[a] * v[b];
            }
        }
    }
    m
}

fn local_elasticity(tab: &Tabulation, quad: &SpatialQuadrature, h: f64, params: &MaterialParams) -> [[Vec<f64>; 2]; 2] {
    let n = tab.n_local();
    let (lambda, mu) = params.lame();
    let mut s: [[Vec<f64>; 2]; 2] = Default::default();
    s.iter_mut().flatten().for_each(|b| *b = vec![0.0; n * n]);
    for (q, w) in quad.weights().iter().enumerate() {
        let jxw = w * h * h;
        let g = tab.gradients(q);
        for a in 0..n {
            let ga = [g[a][0] / h, g[a][1] / h];
            for b in 0..n {
                let gb = [g[b][0] / h, g[b][1] / h];
                // C ε(φ_b e_d) : ε(φ_a e_c) = μ (δ_cd ∇φ_b·∇φ_a + ∂_c φ_b ∂_d φ_a) + λ ∂_d φ_b ∂_c φ_a
                let dot = ga[0] * gb[0] + ga[1] * gb[1];
                for c in 0..2 {
                    for d in 0..2 {
                        let mut v = mu * gb[c] * ga[d] + lambda * gb[d] * ga[c];
                        if c == d {
                            v += mu * dot;
                        }
                        s[c][d][a * n + b] += jxw * v;
                    }
                }
            }
        }
    }
    s
}

fn local_diffusion(tab: &Tabulation, quad: &SpatialQuadrature, h: f64, params: &MaterialParams) -> Vec<f64> {
    let n = tab.n_local();
    let mut s = vec![0.0; n * n];
    for (q, w) in quad.weights().iter().enumerate() {
        let jxw = w * h * h;
        let g = tab.gradients(q);
        for a in 0..n {
            let kga = params.flux([g[a][0] / h, g[a][1] / h]);
            for b in 0..n {
                s[a * n + b] += jxw * (kga[0] * g[b][0] + kga[1] * g[b][1]) / h;
            }
        }
    }
    s
}

fn local_divergence(tu: &Tabulation, tp: &Tabulation, quad: &SpatialQuadrature, h: f64) -> [Vec<f64>; 2] {
    let (nu, np) = (tu.n_local(), tp.n_local());
    let mut c = [vec![0.0; nu * np], vec![0.0; nu * np]];
    for (q, w) in quad.weights().iter().enumerate() {
        let jxw = w * h * h;
        let (gu, vp) = (tu.gradients(q), tp.values(q));
        for a in 0..nu {
            for b in 0..np {
                for comp in 0..2 {
                    c[comp][a * np + b] += jxw * gu[a][comp] / h * vp[b];
                }
            }
        }
    }
    c
}

fn element_matrices(
    space_u: &FESpace,
    space_p: &FESpace,
    params: &MaterialParams,
    quad: &SpatialQuadrature,
) -> ElementMatrices {
    let tu = space_u.tabulate(quad);
    let tp = space_p.tabulate(quad);
    let h = space_u.mesh().cell_size();
    ElementMatrices {
        nu: tu.n_local(),
        np: tp.n_local(),
        mass_u: local_mass(&tu, quad, h * h),
        stiff: local_elasticity(&tu, quad, h, params),
        coup: local_divergence(&tu, &tp, quad, h),
        mass_p: local_mass(&tp, quad, h * h),
        stiff_p: local_diffusion(&tp, quad, h, params),
    }
}

/// Constrained elasticity stiffness `⟨C ε(u), ε(χ)⟩` on a vector space.
pub fn assemble_elasticity(space: &FESpace, params: &MaterialParams, quad: &SpatialQuadrature) -> Result<SparseMatrix> {
    if space.components() != 2 {
        return Err(Error::InvalidArgument("elasticity needs a vector space".into()));
    }
    let tab = space.tabulate(quad);
    let n = tab.n_local();
    let s = local_elasticity(&tab, quad, space.mesh().cell_size(), params);
    let ns = space.n_scalar_dofs();
    let mut t = Vec::with_capacity(space.mesh().n_cells() * 4 * n * n);
    for cell in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(cell);
        for a in 0..n {
            for b in 0..n {
                for c in 0..2 {
                    for d in 0..2 {
                        t.push((c * ns + dofs[a], d * ns + dofs[b], s[c][d][a * n + b]));
                    }
                }
            }
        }
    }
    let fixed = space.is_dirichlet();
    constrained(space.n_dofs(), space.n_dofs(), t.into_iter(), fixed, fixed, true)
}

/// Constrained diffusion stiffness `⟨K ∇p, ∇ψ⟩` on a scalar space.
pub fn assemble_diffusion(space: &FESpace, params: &MaterialParams, quad: &SpatialQuadrature) -> Result<SparseMatrix> {
    if space.components() != 1 {
        return Err(Error::InvalidArgument("diffusion needs a scalar space".into()));
    }
    let tab = space.tabulate(quad);
    let n = tab.n_local();
    let s = local_diffusion(&tab, quad, space.mesh().cell_size(), params);
    let mut t = Vec::with_capacity(space.mesh().n_cells() * n * n);
    for cell in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(cell);
        for a in 0..n {
            for b in 0..n {
                t.push((dofs[a], dofs[b], s[a * n + b]));
            }
        }
    }
    let fixed = space.is_dirichlet();
    constrained(space.n_dofs(), space.n_dofs(), t.into_iter(), fixed, fixed, true)
}

/// Unconstrained scalar mass matrix `⟨φ_j, φ_i⟩` (boundary DOFs included).
pub fn assemble_mass(space: &FESpace, quad: &SpatialQuadrature) -> Result<SparseMatrix> {
    if space.components() != 1 {
        return Err(Error::InvalidArgument("mass matrix needs a scalar space".into()));
    }
    let tab = space.tabulate(quad);
    let n = tab.n_local();
    let h = space.mesh().cell_size();
    let m = local_mass(&tab, quad, h * h);
    let mut t = Vec::with_capacity(space.mesh().n_cells() * n * n);
    for cell in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(cell);
        for a in 0..n {
            for b in 0..n {
                t.push((dofs[a], dofs[b], m[a * n + b]));
            }
        }
    }
    SparseMatrix::from_triplets(space.n_dofs(), space.n_dofs(), &t)
}

/// Symmetric elimination of homogeneous Dirichlet DOFs with a unit diagonal.
fn constrained(
    nrows: usize,
    ncols: usize,
    triplets: impl Iterator<Item = (usize, usize, f64)>,
    row_fixed: &[bool],
    col_fixed: &[bool],
    unit_diagonal: bool,
) -> Result<SparseMatrix> {
    let mut t: Vec<_> = triplets.filter(|&(i, j, _)| !row_fixed[i] && !col_fixed[j]).collect();
    if unit_diagonal {
        t.extend(row_fixed.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| (i, i, 1.0)));
    }
    SparseMatrix::from_triplets(nrows, ncols, &t)
}

/// Assembles all operator blocks on a pair of spaces sharing one mesh.
///
/// `space_u` is the vector space for `u` and `v`, `space_p` the scalar
/// pressure space; equal order and Taylor–Hood pairs are both accepted.
pub fn assemble_blocks(
    space_u: &FESpace,
    space_p: &FESpace,
    params: &MaterialParams,
    quad: &SpatialQuadrature,
) -> Result<OperatorBlocks> {
    if space_u.mesh().as_ref() != space_p.mesh().as_ref() {
        return Err(Error::MeshMismatch);
    }
    if space_u.components() != 2 || space_p.components() != 1 {
        return Err(Error::InvalidArgument("expected a vector space for u and a scalar space for p".into()));
    }
    params.validate()?;
    let em = element_matrices(space_u, space_p, params, quad);
    let (nu, np) = (em.nu, em.np);
    let ns = space_u.n_scalar_dofs();
    let n_u = space_u.n_dofs();
    let n_p = space_p.n_dofs();
    let n_cells = space_u.mesh().n_cells();

    let mut t_mass_u = Vec::with_capacity(n_cells * 2 * nu * nu);
    let mut t_stiff_u = Vec::with_capacity(n_cells * 4 * nu * nu);
    let mut t_coup = Vec::with_capacity(n_cells * 2 * nu * np);
    let mut t_mass_p = Vec::with_capacity(n_cells * np * np);
    let mut t_stiff_p = Vec::with_capacity(n_cells * np * np);
    for cell in 0..n_cells {
        let du = space_u.cell_dofs(cell);
        let dp = space_p.cell_dofs(cell);
        for a in 0..nu {
            for b in 0..nu {
                for c in 0..2 {
                    t_mass_u.push((c * ns + du[a], c * ns + du[b], em.mass_u[a * nu + b]));
                    for d in 0..2 {
                        t_stiff_u.push((c * ns + du[a], d * ns + du[b], em.stiff[c][d][a * nu + b]));
                    }
                }
            }
            for q in 0..np {
                for c in 0..2 {
                    t_coup.push((c * ns + du[a], dp[q], em.coup[c][a * np + q]));
                }
            }
        }
        for a in 0..np {
            for b in 0..np {
                t_mass_p.push((dp[a], dp[b], em.mass_p[a * np + b]));
                t_stiff_p.push((dp[a], dp[b], em.stiff_p[a * np + b]));
            }
        }
    }
    let du = space_u.is_dirichlet();
    let dp = space_p.is_dirichlet();
    let mass_u_plain = constrained(n_u, n_u, t_mass_u.iter().copied(), du, du, true)?;
    let mass_u = constrained(
        n_u,
        n_u,
        t_mass_u.iter().map(|&(i, j, v)| (i, j, params.rho * v)),
        du,
        du,
        true,
    )?;
    Ok(OperatorBlocks {
        mass_u,
        mass_u_plain,
        stiffness_u: constrained(n_u, n_u, t_stiff_u.into_iter(), du, du, true)?,
        coupling: constrained(n_u, n_p, t_coup.into_iter(), du, dp, false)?,
        mass_p: constrained(n_p, n_p, t_mass_p.into_iter(), dp, dp, true)?,
        stiffness_p: constrained(n_p, n_p, t_stiff_p.into_iter(), dp, dp, true)?,
        dirichlet_u: du.to_vec(),
        dirichlet_p: dp.to_vec(),
        params: params.clone(),
    })
}

/// Which unknown of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Displacement,
    Velocity,
    Pressure,
}

/// Index map of the slab unknowns: for each temporal node `j = 1..=k` the
/// block `[u | v | p]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlabLayout {
    pub k: usize,
    pub n_u: usize,
    pub n_p: usize,
}

impl SlabLayout {
    pub fn block_size(&self) -> usize {
        2 * self.n_u + self.n_p
    }

    pub fn size(&self) -> usize {
        self.k * self.block_size()
    }

    /// Row/column of `(field, temporal node, spatial dof)`, `node ∈ 1..=k`.
    pub fn index(&self, field: FieldKind, node: usize, dof: usize) -> usize {
        debug_assert!(node >= 1 && node <= self.k);
        let base = (node - 1) * self.block_size();
        match field {
            FieldKind::Displacement => base + dof,
            FieldKind::Velocity => base + self.n_u + dof,
            FieldKind::Pressure => base + 2 * self.n_u + dof,
        }
    }

    fn offset(&self, field: FieldKind, node: usize) -> usize {
        self.index(field, node, 0)
    }
}

/// Temporal coefficient tables `D` and `W` of one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalCoefficients {
    /// `d[m][j] = Σ_μ ŵ_μ L_m(s_μ) ℓ_j'(s_μ)`
    pub d: Vec<Vec<f64>>,
    /// `w[m][j] = (τ/2) ŵ_j L_m(s_j)`
    pub w: Vec<Vec<f64>>,
}

pub fn temporal_coefficients(basis: &SlabBasis, tau: f64) -> TemporalCoefficients {
    let k = basis.degree();
    let weights = basis.rule().weights();
    let der = basis.derivative_table();
    let test = basis.test_table();
    let mut d = vec![vec![0.0; k + 1]; k];
    let mut w = vec![vec![0.0; k + 1]; k];
    for m in 0..k {
        for j in 0..=k {
            d[m][j] = (0..=k).map(|mu| weights[mu] * test[mu][m] * der[mu][j]).sum();
            w[m][j] = 0.5 * tau * weights[j] * test[j][m];
        }
    }
    TemporalCoefficients { d, w }
}

/// The linear system of one slab.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub matrix: SparseMatrix,
    pub layout: SlabLayout,
    pub tau: f64,
    pub coefficients: TemporalCoefficients,
}

/// Builds the slab matrix for step length `tau`.
///
/// Rows for Dirichlet DOFs are replaced by identity rows on the matching
/// unknown; their right-hand side is zero.
pub fn build_slab_system(blocks: &OperatorBlocks, basis: &SlabBasis, tau: f64) -> Result<SlabSystem> {
    let (n_u, n_p) = (blocks.n_u(), blocks.n_p());
    if blocks.coupling.nrows() != n_u
        || blocks.coupling.ncols() != n_p
        || blocks.stiffness_u.nrows() != n_u
        || blocks.stiffness_p.nrows() != n_p
        || blocks.dirichlet_u.len() != n_u
        || blocks.dirichlet_p.len() != n_p
    {
        return Err(Error::DimensionMismatch("inconsistent operator blocks".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("slab length must be positive".into()));
    }
    let k = basis.degree();
    let layout = SlabLayout { k, n_u, n_p };
    let coef = temporal_coefficients(basis, tau);
    let p = &blocks.params;
    let fu = &blocks.dirichlet_u;
    let fp = &blocks.dirichlet_p;
    use FieldKind::*;

    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    let push_block = |t: &mut Vec<(usize, usize, f64)>,
                          a: &SparseMatrix,
                          scale: f64,
                          row0: usize,
                          col0: usize,
                          rfix: &[bool],
                          cfix: &[bool],
                          transpose: bool| {
        if scale == 0.0 {
            return;
        }
        for (i, j, v) in a.triplets() {
            let (i, j) = if transpose { (j, i) } else { (i, j) };
            if !rfix[i] && !cfix[j] {
                t.push((row0 + i, col0 + j, scale * v));
            }
        }
    };

    for m in 0..k {
        let row_u = layout.offset(Displacement, m + 1);
        let row_v = layout.offset(Velocity, m + 1);
        let row_p = layout.offset(Pressure, m + 1);
        for j in 1..=k {
            let (dmj, wmj) = (coef.d[m][j], coef.w[m][j]);
            let col_u = layout.offset(Displacement, j);
            let col_v = layout.offset(Velocity, j);
            let col_p = layout.offset(Pressure, j);
            // ∂t u − v = 0
            push_block(&mut t, &blocks.mass_u_plain, dmj, row_u, col_u, fu, fu, false);
            push_block(&mut t, &blocks.mass_u_plain, -wmj, row_u, col_v, fu, fu, false);
            // ρ ∂t v + A_e u − α B p
            push_block(&mut t, &blocks.mass_u, dmj, row_v, col_v, fu, fu, false);
            push_block(&mut t, &blocks.stiffness_u, wmj, row_v, col_u, fu, fu, false);
            push_block(&mut t, &blocks.coupling, -p.alpha * wmj, row_v, col_p, fu, fp, false);
            // c0 ∂t p + α Bᵀ v + A_p p
            push_block(&mut t, &blocks.mass_p, p.c0 * dmj, row_p, col_p, fp, fp, false);
            push_block(&mut t, &blocks.coupling, p.alpha * wmj, row_p, col_v, fp, fu, true);
            push_block(&mut t, &blocks.stiffness_p, wmj, row_p, col_p, fp, fp, false);
        }
        for (i, _) in fu.iter().enumerate().filter(|(_, &f)| f) {
            t.push((row_u + i, row_u + i, 1.0));
            t.push((row_v + i, row_v + i, 1.0));
        }
        for (i, _) in fp.iter().enumerate().filter(|(_, &f)| f) {
            t.push((row_p + i, row_p + i, 1.0));
        }
    }
    let n = layout.size();
    let matrix = SparseMatrix::from_triplets(n, n, &t)?;
    Ok(SlabSystem { matrix, layout, tau, coefficients: coef })
}

/// Load vectors `F_μ = ⟨f(t_μ), χ_i⟩` and `G_μ = ⟨g(t_μ), ψ_q⟩` at the
/// `k+1` Gauss–Lobatto nodes of a slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabLoads {
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

impl SlabLoads {
    pub fn zero(k: usize, n_u: usize, n_p: usize) -> Self {
        Self { f: vec![vec![0.0; n_u]; k + 1], g: vec![vec![0.0; n_p]; k + 1] }
    }
}

/// Spatial load vectors of `forcing` at the given times.
pub fn assemble_loads(
    forcing: &dyn Forcing,
    space_u: &FESpace,
    space_p: &FESpace,
    quad: &SpatialQuadrature,
    times: &[f64],
) -> SlabLoads {
    let tu = space_u.tabulate(quad);
    let tp = space_p.tabulate(quad);
    let mesh = space_u.mesh();
    let area = mesh.cell_size().powi(2);
    let ns = space_u.n_scalar_dofs();
    let mut f = vec![vec![0.0; space_u.n_dofs()]; times.len()];
    let mut g = vec![vec![0.0; space_p.n_dofs()]; times.len()];
    for cell in 0..mesh.n_cells() {
        let du = space_u.cell_dofs(cell);
        let dp = space_p.cell_dofs(cell);
        for (q, (&pt, &w)) in quad.points().iter().zip(quad.weights()).enumerate() {
            let x = mesh.map_to_cell(cell, pt);
            let jxw = w * area;
            for (n, &t) in times.iter().enumerate() {
                let fv = forcing.f(x, t);
                let gv = forcing.g(x, t);
                for (a, &d) in du.iter().enumerate() {
                    let phi = tu.values(q)[a] * jxw;
                    f[n][d] += fv[0] * phi;
                    f[n][ns + d] += fv[1] * phi;
                }
                for (a, &d) in dp.iter().enumerate() {
                    g[n][d] += gv * tp.values(q)[a] * jxw;
                }
            }
        }
    }
    SlabLoads { f, g }
}

/// Nodal values `(u, v, p)` of one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl NodalState {
    pub fn zeros(n_u: usize, n_p: usize) -> Self {
        Self { u: vec![0.0; n_u], v: vec![0.0; n_u], p: vec![0.0; n_p] }
    }
}

/// Right-hand side of a slab: `Q_n`-weighted loads minus the contribution of
/// the known left end point values.
pub fn assemble_slab_rhs(
    system: &SlabSystem,
    blocks: &OperatorBlocks,
    loads: &SlabLoads,
    start: &NodalState,
) -> Result<Vec<f64>> {
    let layout = system.layout;
    let k = layout.k;
    if loads.f.len() != k + 1 || loads.g.len() != k + 1 {
        return Err(Error::DimensionMismatch(format!("expected loads at {} temporal nodes", k + 1)));
    }
    if start.u.len() != layout.n_u || start.v.len() != layout.n_u || start.p.len() != layout.n_p {
        return Err(Error::DimensionMismatch("start values do not match the spaces".into()));
    }
    let p = &blocks.params;
    let coef = &system.coefficients;
    let mut rhs = vec![0.0; layout.size()];
    use FieldKind::*;
    for m in 0..k {
        let ru = layout.offset(Displacement, m + 1);
        let rv = layout.offset(Velocity, m + 1);
        let rp = layout.offset(Pressure, m + 1);
        let (d0, w0) = (coef.d[m][0], coef.w[m][0]);
        {
            let r = &mut rhs[ru..ru + layout.n_u];
            blocks.mass_u_plain.mul_vec_add(-d0, &start.u, r);
            blocks.mass_u_plain.mul_vec_add(w0, &start.v, r);
        }
        {
            let r = &mut rhs[rv..rv + layout.n_u];
            for (mu, f) in loads.f.iter().enumerate() {
                let c = p.rho * coef.w[m][mu];
                r.iter_mut().zip(f).for_each(|(r, f)| *r += c * f);
            }
            blocks.mass_u.mul_vec_add(-d0, &start.v, r);
            blocks.stiffness_u.mul_vec_add(-w0, &start.u, r);
            blocks.coupling.mul_vec_add(p.alpha * w0, &start.p, r);
        }
        {
            let r = &mut rhs[rp..rp + layout.n_p];
            for (mu, g) in loads.g.iter().enumerate() {
                let c = coef.w[m][mu];
                r.iter_mut().zip(g).for_each(|(r, g)| *r += c * g);
            }
            blocks.mass_p.mul_vec_add(-p.c0 * d0, &start.p, r);
            blocks.coupling.mul_transpose_vec_add(-p.alpha * w0, &start.v, r);
            blocks.stiffness_p.mul_vec_add(-w0, &start.p, r);
        }
        for (i, _) in blocks.dirichlet_u.iter().enumerate().filter(|(_, &f)| f) {
            rhs[ru + i] = 0.0;
            rhs[rv + i] = 0.0;
        }
        for (i, _) in blocks.dirichlet_p.iter().enumerate().filter(|(_, &f)| f) {
            rhs[rp + i] = 0.0;
        }
    }
    Ok(rhs)
}
