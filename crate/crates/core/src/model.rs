//! Material parameters, the manufactured benchmark solution and the forcing
//! terms it induces.
//!
//! The model is the first-order-in-time Biot system
//!
//! ```text
//! ∂t u − v = 0
//! ρ ∂t v − ∇·(C ε(u)) + α ∇p = ρ f
//! c0 ∂t p + α ∇·∂t u − ∇·(K ∇p) = g
//! ```
//!
//! with homogeneous Dirichlet data for `u`, `v` and `p`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A scalar function on Ω with its gradient.
pub trait ScalarField {
    fn value(&self, x: [f64; 2]) -> f64;
    fn gradient(&self, x: [f64; 2]) -> [f64; 2];
}

/// A 2-vector function on Ω with its Jacobian; row `c` of the gradient holds
/// `[∂x w_c, ∂y w_c]`.
pub trait VectorField {
    fn value(&self, x: [f64; 2]) -> [f64; 2];
    fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2];
}

/// Source terms of the momentum and mass balance equations.
pub trait Forcing: Sync {
    /// Momentum source `f` (the equation carries `ρ f`).
    fn f(&self, x: [f64; 2], t: f64) -> [f64; 2];
    /// Mass balance source `g`.
    fn g(&self, x: [f64; 2], t: f64) -> f64;
}

/// Homogeneous problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForcing;

impl Forcing for ZeroForcing {
    fn f(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn g(&self, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub rho: f64,
    pub alpha: f64,
    pub c0: f64,
    /// Symmetric positive definite permeability tensor.
    pub permeability: [[f64; 2]; 2],
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialParams {
    /// Parameters of the convergence benchmark.
    fn default() -> Self {
        Self {
            rho: 1.0,
            alpha: 0.9,
            c0: 1e-3,
            permeability: [[1e-2, 0.0], [0.0, 1e-2]],
            youngs_modulus: 100.0,
            poisson_ratio: 0.35,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.rho > 0.0) {
            return bad("rho must be positive");
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be non-negative");
        }
        if !(self.c0 > 0.0) {
            return bad("c0 must be positive");
        }
        let k = &self.permeability;
        if k[0][1] != k[1][0] {
            return bad("permeability must be symmetric");
        }
        if !(k[0][0] > 0.0 && k[0][0] * k[1][1] - k[0][1] * k[1][0] > 0.0) {
            return bad("permeability must be positive definite");
        }
        if !(self.youngs_modulus > 0.0) {
            return bad("Young's modulus must be positive");
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return bad("Poisson ratio must lie in (0, 0.5)");
        }
        Ok(())
    }

    /// Lamé constants `(λ, μ)` from `(E, ν)` (plane strain).
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        let mu = e / (2.0 * (1.0 + nu));
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        (lambda, mu)
    }

    /// `C ε = 2μ ε + λ tr(ε) I` applied to a symmetric strain.
    pub fn stress(&self, strain: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let (lambda, mu) = self.lame();
        let tr = strain[0][0] + strain[1][1];
        [
            [2.0 * mu * strain[0][0] + lambda * tr, 2.0 * mu * strain[0][1]],
            [2.0 * mu * strain[1][0], 2.0 * mu * strain[1][1] + lambda * tr],
        ]
    }

    /// `K ∇q`.
    pub fn flux(&self, grad: [f64; 2]) -> [f64; 2] {
        let k = &self.permeability;
        [k[0][0] * grad[0] + k[0][1] * grad[1], k[1][0] * grad[0] + k[1][1] * grad[1]]
    }
}

/// Symmetrized gradient of a vector field from its Jacobian.
pub fn strain(grad: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let off = 0.5 * (grad[0][1] + grad[1][0]);
    [[grad[0][0], off], [off, grad[1][1]]]
}

/// Derivatives of `φ(x, t) = sin(ω1 t²) sin(ω2 x1) sin(ω2 x2)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiJet {
    pub phi: f64,
    pub dt: f64,
    pub dtt: f64,
    pub grad: [f64; 2],
    pub grad_dt: [f64; 2],
    /// `[φ_xx, φ_xy, φ_yy]`
    pub hessian: [f64; 3],
    /// `[∂t φ_xx, ∂t φ_xy, ∂t φ_yy]`
    pub hessian_dt: [f64; 3],
}

/// `u = φ (1, 1)`, `v = ∂t u`, `p = φ` with
/// `φ = sin(ω1 t²) sin(ω2 x1) sin(ω2 x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub omega1: f64,
    pub omega2: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self { omega1: PI, omega2: PI }
    }
}

/// Exact `(u, v, p)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub p: f64,
}

impl ManufacturedSolution {
    /// Temporal factor `sin(ω1 t²)` and its first two derivatives.
    pub fn time_factor(&self, t: f64) -> [f64; 3] {
        let w = self.omega1;
        let (s, c) = (w * t * t).sin_cos();
        [s, 2.0 * w * t * c, 2.0 * w * c - 4.0 * w * w * t * t * s]
    }

    /// Spatial factor `sin(ω2 x1) sin(ω2 x2)`.
    pub fn space_factor(&self, x: [f64; 2]) -> f64 {
        (self.omega2 * x[0]).sin() * (self.omega2 * x[1]).sin()
    }

    pub fn jet(&self, x: [f64; 2], t: f64) -> PhiJet {
        let w = self.omega2;
        let (sx, cx) = (w * x[0]).sin_cos();
        let (sy, cy) = (w * x[1]).sin_cos();
        let [tt, dt, dtt] = self.time_factor(t);
        let s = sx * sy;
        let grad_s = [w * cx * sy, w * sx * cy];
        let hess_s = [-w * w * s, w * w * cx * cy, -w * w * s];
        PhiJet {
            phi: tt * s,
            dt: dt * s,
            dtt: dtt * s,
            grad: [tt * grad_s[0], tt * grad_s[1]],
            grad_dt: [dt * grad_s[0], dt * grad_s[1]],
            hessian: hess_s.map(|h| tt * h),
            hessian_dt: hess_s.map(|h| dt * h),
        }
    }

    pub fn exact_fields(&self, x: [f64; 2], t: f64) -> ExactFields {
        let [tt, dt, _] = self.time_factor(t);
        let s = self.space_factor(x);
        ExactFields { u: [tt * s; 2], v: [dt * s; 2], p: tt * s }
    }

    /// Jacobian of `u`; both rows equal `∇φ`.
    pub fn grad_u(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let j = self.jet(x, t);
        [j.grad, j.grad]
    }

    pub fn grad_v(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let j = self.jet(x, t);
        [j.grad_dt, j.grad_dt]
    }

    pub fn grad_p(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self.jet(x, t).grad
    }

    /// `f = ∂t² u − (1/ρ) ∇·(C ε(u)) + (α/ρ) ∇p`.
    pub fn forcing_f(&self, params: &MaterialParams, x: [f64; 2], t: f64) -> [f64; 2] {
        let j = self.jet(x, t);
        let (lambda, mu) = params.lame();
        let [pxx, pxy, pyy] = j.hessian;
        // ∇·(C ε(u)) = μ Δu + (λ + μ) ∇(∇·u) with u = φ (1, 1)
        let lap = pxx + pyy;
        let div_stress = [mu * lap + (lambda + mu) * (pxx + pxy), mu * lap + (lambda + mu) * (pxy + pyy)];
        let rho = params.rho;
        [
            j.dtt - div_stress[0] / rho + params.alpha / rho * j.grad[0],
            j.dtt - div_stress[1] / rho + params.alpha / rho * j.grad[1],
        ]
    }

    /// `g = c0 ∂t p + α ∇·∂t u − ∇·(K ∇p)`.
    pub fn forcing_g(&self, params: &MaterialParams, x: [f64; 2], t: f64) -> f64 {
        let j = self.jet(x, t);
        let k = &params.permeability;
        let [pxx, pxy, pyy] = j.hessian;
        let div_k_grad = k[0][0] * pxx + (k[0][1] + k[1][0]) * pxy + k[1][1] * pyy;
        params.c0 * j.dt + params.alpha * (j.grad_dt[0] + j.grad_dt[1]) - div_k_grad
    }

    /// The solution frozen at time `t` as spatial fields.
    pub fn displacement_at(&self, t: f64) -> impl VectorField + '_ {
        FrozenVector { msol: *self, t, which: VectorKind::Displacement }
    }

    pub fn velocity_at(&self, t: f64) -> impl VectorField + '_ {
        FrozenVector { msol: *self, t, which: VectorKind::Velocity }
    }

    pub fn pressure_at(&self, t: f64) -> impl ScalarField + '_ {
        FrozenPressure { msol: *self, t }
    }
}

#[derive(Debug, Clone, Copy)]
enum VectorKind {
    Displacement,
    Velocity,
}

#[derive(Debug, Clone, Copy)]
struct FrozenVector {
    msol: ManufacturedSolution,
    t: f64,
    which: VectorKind,
}

impl VectorField for FrozenVector {
    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        let e = self.msol.exact_fields(x, self.t);
        match self.which {
            VectorKind::Displacement => e.u,
            VectorKind::Velocity => e.v,
        }
    }

    fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match self.which {
            VectorKind::Displacement => self.msol.grad_u(x, self.t),
            VectorKind::Velocity => self.msol.grad_v(x, self.t),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct FrozenPressure {
    msol: ManufacturedSolution,
    t: f64,
}

impl ScalarField for FrozenPressure {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.msol.exact_fields(x, self.t).p
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        self.msol.grad_p(x, self.t)
    }
}

/// Forcing induced by a manufactured solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedForcing {
    pub params: MaterialParams,
    pub solution: ManufacturedSolution,
}

impl Forcing for ManufacturedForcing {
    fn f(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self.solution.forcing_f(&self.params, x, t)
    }

    fn g(&self, x: [f64; 2], t: f64) -> f64 {
        self.solution.forcing_g(&self.params, x, t)
    }
}

/// Wraps closures as a spatial field with gradient.
pub struct FnField<F, G>(pub F, pub G);

impl<F, G> ScalarField for FnField<F, G>
where
    F: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> [f64; 2],
{
    fn value(&self, x: [f64; 2]) -> f64 {
        (self.0)(x)
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        (self.1)(x)
    }
}

impl<F, G> VectorField for FnField<F, G>
where
    F: Fn([f64; 2]) -> [f64; 2],
    G: Fn([f64; 2]) -> [[f64; 2]; 2],
{
    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        (self.0)(x)
    }

    fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        (self.1)(x)
    }
}
