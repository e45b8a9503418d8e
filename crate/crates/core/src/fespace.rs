//! Continuous tensor-product Lagrange spaces `Q_r` on the structured mesh.
//!
//! Local nodes are the Gauss–Lobatto points of degree `r` per axis, mapped to
//! the reference cell `[0,1]²`. Because the mesh is structured, the global
//! nodes form an `(rN+1) × (rN+1)` grid numbered lexicographically by `(y, x)`;
//! neighbouring cells address shared nodes through the same grid index, which
//! gives C⁰ continuity for free.
//!
//! Vector spaces use block numbering: all x-component DOFs first, then all
//! y-component DOFs, each block ordered like the scalar space.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{ScalarField, VectorField};
use crate::quadrature::{gauss_legendre, lagrange_derivatives, lagrange_values};
use crate::timedisc::gauss_lobatto;

/// Tensor-product Gauss–Legendre rule on the reference cell `[0,1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialQuadrature {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    exact_degree: usize,
}

impl SpatialQuadrature {
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree per axis integrated exactly.
    pub fn exact_degree(&self) -> usize {
        self.exact_degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `m × m` Gauss rule on `[0,1]²`, exact for degree `2m-1` per axis.
pub fn gauss_quadrature_2d(points_per_axis: usize) -> SpatialQuadrature {
    let m = points_per_axis.max(1);
    let (x, w) = gauss_legendre(m);
    let x: Vec<f64> = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let w: Vec<f64> = w.iter().map(|w| 0.5 * w).collect();
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    SpatialQuadrature { points, weights, exact_degree: 2 * m - 1 }
}

/// Shape function values and reference gradients at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

/// Scalar shape functions tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    n_local: usize,
    values: Vec<f64>,
    gradients: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_local..(q + 1) * self.n_local]
    }

    /// Gradients with respect to reference coordinates.
    pub fn gradients(&self, q: usize) -> &[[f64; 2]] {
        &self.gradients[q * self.n_local..(q + 1) * self.n_local]
    }
}

#[derive(Debug, Clone)]
pub struct FESpace {
    mesh: Arc<Mesh>,
    order: usize,
    components: usize,
    ref_nodes: Vec<f64>,
    dof_coords: Vec<[f64; 2]>,
    cell_dofs: Vec<Vec<usize>>,
    dirichlet: Vec<bool>,
    dirichlet_dofs: Vec<usize>,
}

pub fn build_space(mesh: Arc<Mesh>, order: usize, components: usize) -> Result<FESpace> {
    if order == 0 {
        return Err(Error::InvalidArgument("polynomial order must be at least 1".into()));
    }
    if components != 1 && components != 2 {
        return Err(Error::InvalidArgument(format!("components must be 1 or 2, got {components}")));
    }
    let r = order;
    let n = mesh.cells_per_side();
    let ref_nodes: Vec<f64> = gauss_lobatto(r)?.nodes().iter().map(|s| 0.5 * (s + 1.0)).collect();
    let side = r * n + 1;
    let h = mesh.cell_size();

    let coord = |g: usize| {
        let cell = (g / r).min(n - 1);
        let a = g - cell * r;
        if g == side - 1 {
            1.0
        } else {
            (cell as f64 + ref_nodes[a]) * h
        }
    };
    let mut dof_coords = Vec::with_capacity(side * side);
    let mut boundary = Vec::with_capacity(side * side);
    for gy in 0..side {
        for gx in 0..side {
            dof_coords.push([coord(gx), coord(gy)]);
            boundary.push(gx == 0 || gy == 0 || gx == side - 1 || gy == side - 1);
        }
    }

    let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
    for j in 0..n {
        for i in 0..n {
            let mut dofs = Vec::with_capacity((r + 1) * (r + 1));
            for b in 0..=r {
                for a in 0..=r {
                    dofs.push((j * r + b) * side + i * r + a);
                }
            }
            cell_dofs.push(dofs);
        }
    }

    let n_scalar = side * side;
    let mut dirichlet = Vec::with_capacity(components * n_scalar);
    for _ in 0..components {
        dirichlet.extend_from_slice(&boundary);
    }
    let dirichlet_dofs = dirichlet.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();

    Ok(FESpace { mesh, order, components, ref_nodes, dof_coords, cell_dofs, dirichlet, dirichlet_dofs })
}

impl FESpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Local scalar node positions per axis on `[0, 1]`.
    pub fn reference_nodes(&self) -> &[f64] {
        &self.ref_nodes
    }

    /// Number of DOFs of one component.
    pub fn n_scalar_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.components * self.dof_coords.len()
    }

    /// Node coordinates of the scalar DOFs (shared by all components).
    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    /// Node of global DOF `dof` (any component).
    pub fn dof_coord(&self, dof: usize) -> [f64; 2] {
        self.dof_coords[dof % self.dof_coords.len()]
    }

    /// Scalar DOFs of `cell`; add `c * n_scalar_dofs()` for component `c`.
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    /// Number of scalar shape functions per cell, `(r+1)²`.
    pub fn n_local(&self) -> usize {
        (self.order + 1) * (self.order + 1)
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    pub fn is_dirichlet(&self) -> &[bool] {
        &self.dirichlet
    }

    fn shape_1d(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        // nodes live on [0,1]; lagrange helpers are agnostic to the interval
        (lagrange_values(&self.ref_nodes, x), lagrange_derivatives(&self.ref_nodes, x))
    }

    fn reference_basis(&self, p: [f64; 2]) -> BasisValues {
        let (vx, dx) = self.shape_1d(p[0]);
        let (vy, dy) = self.shape_1d(p[1]);
        let n1 = self.order + 1;
        let mut values = Vec::with_capacity(n1 * n1);
        let mut gradients = Vec::with_capacity(n1 * n1);
        for b in 0..n1 {
            for a in 0..n1 {
                values.push(vx[a] * vy[b]);
                gradients.push([dx[a] * vy[b], vx[a] * dy[b]]);
            }
        }
        BasisValues { values, gradients }
    }

    /// Scalar shape functions of `cell` at a point of the reference cell
    /// `[0,1]²`, with gradients in reference coordinates. Vector spaces use
    /// the same functions for every component.
    pub fn eval_basis(&self, cell: usize, ref_point: [f64; 2]) -> Result<BasisValues> {
        if cell >= self.mesh.n_cells() {
            return Err(Error::CellOutOfRange { index: cell, count: self.mesh.n_cells() });
        }
        Ok(self.reference_basis(ref_point))
    }

    /// Tabulates the shape functions at the points of `quad`. All cells are
    /// translated copies of one square, so a single table serves every cell.
    pub fn tabulate(&self, quad: &SpatialQuadrature) -> Tabulation {
        let n_local = self.n_local();
        let mut values = Vec::with_capacity(quad.len() * n_local);
        let mut gradients = Vec::with_capacity(quad.len() * n_local);
        for &p in quad.points() {
            let b = self.reference_basis(p);
            values.extend(b.values);
            gradients.extend(b.gradients);
        }
        Tabulation { n_local, values, gradients }
    }

    /// Factor converting reference gradients into physical gradients.
    pub fn gradient_scale(&self) -> f64 {
        self.mesh.cells_per_side() as f64
    }

    pub fn interpolate_scalar(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.dof_coords.iter().map(|&x| f(x)).collect();
        if self.components == 2 {
            out.extend(std::iter::repeat(0.0).take(self.n_scalar_dofs()));
        }
        out
    }

    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let vals: Vec<[f64; 2]> = self.dof_coords.iter().map(|&x| f(x)).collect();
        let mut out = Vec::with_capacity(self.n_dofs());
        for c in 0..self.components {
            out.extend(vals.iter().map(|v| v[c]));
        }
        out
    }

    /// Nodal interpolation of `f`; component `c` of the result is taken from
    /// `f(x)[c]`.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        self.interpolate_vector(f)
    }

    /// Values of the discrete function at a reference point of `cell`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, ref_point: [f64; 2]) -> [f64; 2] {
        let b = self.reference_basis(ref_point);
        let dofs = &self.cell_dofs[cell];
        let ns = self.n_scalar_dofs();
        let mut out = [0.0; 2];
        for c in 0..self.components {
            out[c] = dofs.iter().zip(&b.values).map(|(&d, &v)| coeffs[c * ns + d] * v).sum();
        }
        out
    }

    /// Physical gradient rows `[∂x f_c, ∂y f_c]` per component.
    pub fn evaluate_gradient(&self, coeffs: &[f64], cell: usize, ref_point: [f64; 2]) -> [[f64; 2]; 2] {
        let b = self.reference_basis(ref_point);
        let dofs = &self.cell_dofs[cell];
        let ns = self.n_scalar_dofs();
        let s = self.gradient_scale();
        let mut out = [[0.0; 2]; 2];
        for c in 0..self.components {
            for (&d, g) in dofs.iter().zip(&b.gradients) {
                let w = coeffs[c * ns + d];
                out[c][0] += w * g[0] * s;
                out[c][1] += w * g[1] * s;
            }
        }
        out
    }

    /// View of a coefficient vector as a function on Ω.
    pub fn function<'a>(&'a self, coeffs: &'a [f64]) -> DiscreteFunction<'a> {
        DiscreteFunction { space: self, coeffs }
    }
}

/// A finite element function, evaluable at arbitrary points of Ω.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteFunction<'a> {
    space: &'a FESpace,
    coeffs: &'a [f64],
}

impl ScalarField for DiscreteFunction<'_> {
    fn value(&self, x: [f64; 2]) -> f64 {
        let (cell, r) = self.space.mesh.locate(x);
        self.space.evaluate(self.coeffs, cell, r)[0]
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let (cell, r) = self.space.mesh.locate(x);
        self.space.evaluate_gradient(self.coeffs, cell, r)[0]
    }
}

impl VectorField for DiscreteFunction<'_> {
    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        let (cell, r) = self.space.mesh.locate(x);
        self.space.evaluate(self.coeffs, cell, r)
    }

    fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (cell, r) = self.space.mesh.locate(x);
        self.space.evaluate_gradient(self.coeffs, cell, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    fn space(n: usize, r: usize, c: usize) -> FESpace {
        build_space(Arc::new(build_mesh(n).unwrap()), r, c).unwrap()
    }

    /// L2 norm of `coeffs - f` by an independent high-order rule.
    fn l2_interp_error(s: &FESpace, coeffs: &[f64], f: impl Fn([f64; 2]) -> f64) -> f64 {
        let q = gauss_quadrature_2d(8);
        let area = s.mesh().cell_size().powi(2);
        let mut sum = 0.0;
        for cell in 0..s.mesh().n_cells() {
            for (p, w) in q.points().iter().zip(q.weights()) {
                let x = s.mesh().map_to_cell(cell, *p);
                let d = s.evaluate(coeffs, cell, *p)[0] - f(x);
                sum += w * area * d * d;
            }
        }
        sum.sqrt()
    }

    #[test]
    fn dof_counts() {
        let s = space(1, 1, 1);
        assert_eq!(s.n_dofs(), 4);
        assert_eq!(s.dirichlet_dofs().len(), 4);
        assert_eq!(space(4, 2, 1).n_dofs(), 81);
        let v = space(2, 1, 2);
        assert_eq!(v.n_dofs(), 18);
        assert_eq!(v.dirichlet_dofs().len(), 16);
        for (n, r) in [(1, 1), (3, 2), (4, 3), (5, 4)] {
            assert_eq!(space(n, r, 1).n_dofs(), (r * n + 1).pow(2));
        }
    }

    #[test]
    fn rejects_order_zero() {
        assert!(build_space(Arc::new(build_mesh(2).unwrap()), 0, 1).is_err());
        assert!(build_space(Arc::new(build_mesh(2).unwrap()), 1, 3).is_err());
    }

    #[test]
    fn shared_nodes_have_matching_coordinates() {
        let s = space(3, 3, 1);
        for cell in 0..s.mesh().n_cells() {
            for (a, &d) in s.cell_dofs(cell).iter().enumerate() {
                let r = s.order();
                let p = [s.reference_nodes()[a % (r + 1)], s.reference_nodes()[a / (r + 1)]];
                let x = s.mesh().map_to_cell(cell, p);
                let y = s.dof_coords()[d];
                assert!((x[0] - y[0]).abs() < 1e-15 && (x[1] - y[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dirichlet_dofs_are_boundary_nodes() {
        let s = space(3, 2, 2);
        for d in 0..s.n_dofs() {
            let x = s.dof_coord(d);
            let on = x.iter().any(|&c| c == 0.0 || c == 1.0);
            assert_eq!(on, s.is_dirichlet()[d]);
        }
        // refining and re-identifying boundary nodes keeps the coarse boundary nodes
        let coarse = space(2, 2, 1);
        let fine = space(4, 2, 1);
        let fine_boundary: Vec<[f64; 2]> = fine.dirichlet_dofs().iter().map(|&d| fine.dof_coord(d)).collect();
        for &d in coarse.dirichlet_dofs() {
            let x = coarse.dof_coord(d);
            assert!(fine_boundary.iter().any(|y| (x[0] - y[0]).abs() < 1e-15 && (x[1] - y[1]).abs() < 1e-15));
        }
    }

    #[test]
    fn lagrange_property_q1() {
        let s = space(1, 1, 1);
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        for (j, &p) in corners.iter().enumerate() {
            let b = s.eval_basis(0, p).unwrap();
            for (i, v) in b.values.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(matches!(s.eval_basis(1, [0.5, 0.5]), Err(Error::CellOutOfRange { .. })));
    }

    #[test]
    fn partition_of_unity() {
        for r in 1..=4 {
            let s = space(2, r, 1);
            for p in [[0.1, 0.7], [0.5, 0.5], [0.93, 0.02]] {
                let b = s.eval_basis(0, p).unwrap();
                assert!((b.values.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                let g = b.gradients.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
                assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let s = space(2, 3, 1);
        let p = [0.37, 0.61];
        let b = s.eval_basis(0, p).unwrap();
        let h = 1e-6;
        let bx = s.eval_basis(0, [p[0] + h, p[1]]).unwrap();
        let bx2 = s.eval_basis(0, [p[0] - h, p[1]]).unwrap();
        let by = s.eval_basis(0, [p[0], p[1] + h]).unwrap();
        let by2 = s.eval_basis(0, [p[0], p[1] - h]).unwrap();
        for i in 0..s.n_local() {
            assert!((b.gradients[i][0] - (bx.values[i] - bx2.values[i]) / (2.0 * h)).abs() < 1e-7);
            assert!((b.gradients[i][1] - (by.values[i] - by2.values[i]) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn interpolation_basics() {
        let s = space(3, 2, 1);
        assert!(s.interpolate_scalar(|_| 0.0).iter().all(|&c| c == 0.0));
        let c = s.interpolate_scalar(|x| x[0]);
        let q = gauss_quadrature_2d(4);
        for cell in 0..s.mesh().n_cells() {
            for &p in q.points() {
                let x = s.mesh().map_to_cell(cell, p);
                assert!((s.evaluate(&c, cell, p)[0] - x[0]).abs() < 1e-14);
            }
        }
        let v = space(2, 2, 2);
        let c = v.interpolate_vector(|x| [x[0], 2.0 * x[1]]);
        for (d, &x) in v.dof_coords().iter().enumerate() {
            assert_eq!(c[d], x[0]);
            assert_eq!(c[v.n_scalar_dofs() + d], 2.0 * x[1]);
        }
    }

    #[test]
    fn interpolation_rate_q2() {
        use std::f64::consts::PI;
        let f = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let coarse = space(4, 2, 1);
        let fine = space(8, 2, 1);
        let e0 = l2_interp_error(&coarse, &coarse.interpolate_scalar(f), f);
        let e1 = l2_interp_error(&fine, &fine.interpolate_scalar(f), f);
        let rate = (e0 / e1).log2();
        assert!((rate - 3.0).abs() < 0.15, "rate {rate}");
    }

    #[test]
    fn quadrature_rules() {
        let q = gauss_quadrature_2d(1);
        assert_eq!(q.points(), &[[0.5, 0.5]]);
        assert_eq!(q.weights(), &[1.0]);
        assert_eq!(q.exact_degree(), 1);
        let integrate = |q: &SpatialQuadrature, a: i32, b: i32| -> f64 {
            q.points().iter().zip(q.weights()).map(|(p, w)| w * p[0].powi(a) * p[1].powi(b)).sum()
        };
        let q2 = gauss_quadrature_2d(2);
        assert!((integrate(&q2, 3, 3) - 1.0 / 16.0).abs() < 1e-15);
        let q3 = gauss_quadrature_2d(3);
        assert!((integrate(&q3, 5, 0) - 1.0 / 6.0).abs() < 1e-14);
        for m in 1..=6 {
            let q = gauss_quadrature_2d(m);
            assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=q.exact_degree() as i32 {
                for b in 0..=q.exact_degree() as i32 {
                    let exact = 1.0 / ((a + 1) as f64 * (b + 1) as f64);
                    assert!((integrate(&q, a, b) - exact).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn discrete_function_view() {
        let s = space(3, 2, 2);
        let c = s.interpolate_vector(|x| [x[0] * x[1], x[0] - x[1] * x[1]]);
        let f = s.function(&c);
        let x = [0.41, 0.77];
        let v = VectorField::value(&f, x);
        assert!((v[0] - x[0] * x[1]).abs() < 1e-14);
        let g = VectorField::gradient(&f, x);
        assert!((g[1][1] + 2.0 * x[1]).abs() < 1e-12);
        assert!((g[0][0] - x[1]).abs() < 1e-12);
    }
}
