//! Temporal discretization: time meshes, the Gauss–Lobatto rule and the
//! trial/test bases of the cG(k) slab problem.
//!
//! Every slab `I_n = (t_{n-1}, t_n]` is the image of the reference interval
//! `[-1, 1]` under `t = (t_{n-1} + t_n)/2 + (τ_n/2) s`.

use crate::error::{Error, Result};
use crate::quadrature::{lagrange_derivatives, lagrange_values, legendre, legendre_values};

const NEWTON_TOL: f64 = 1e-15;

/// `(k+1)`-point Gauss–Lobatto rule on `[-1, 1]`, exact on `P_{2k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLobattoRule {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLobattoRule {
    /// Temporal polynomial degree `k`; the rule has `k+1` points.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule to `f` on `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * f(mid + half * s))
            .sum::<f64>()
    }
}

pub fn gauss_lobatto(k: usize) -> Result<GaussLobattoRule> {
    if k == 0 {
        return Err(Error::InvalidArgument("Gauss–Lobatto degree must be at least 1".into()));
    }
    let n = k + 1;
    let kf = k as f64;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[k] = 1.0;
    // interior nodes are the roots of P_k'
    for i in 1..k {
        let mut x = -(std::f64::consts::PI * i as f64 / kf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(k, x);
            // (1 - x²) P_k'' = 2x P_k' - k(k+1) P_k
            let d2p = (2.0 * x * dp - kf * (kf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        nodes[i] = x;
    }
    for i in 0..n / 2 {
        let sym = 0.5 * (nodes[k - i] - nodes[i]);
        nodes[i] = -sym;
        nodes[k - i] = sym;
    }
    if n % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = legendre(k, x).0;
            2.0 / (kf * (kf + 1.0) * p * p)
        })
        .collect();
    Ok(GaussLobattoRule { degree: k, nodes, weights })
}

/// Partition of `(0, T]` into slabs.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    points: Vec<f64>,
}

impl TimeMesh {
    /// Time mesh through the given increasing points `0 = t_0 < … < t_N = T`.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::InvalidArgument("time mesh must start at 0 and have at least one slab".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time mesh points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n_slabs` uniform slabs on `(0, final_time]`.
    pub fn uniform(final_time: f64, n_slabs: usize) -> Result<Self> {
        if !(final_time > 0.0) || n_slabs == 0 {
            return Err(Error::InvalidArgument("need T > 0 and at least one slab".into()));
        }
        let tau = final_time / n_slabs as f64;
        let mut points: Vec<f64> = (0..n_slabs).map(|n| n as f64 * tau).collect();
        points.push(final_time);
        Ok(Self { points })
    }

    pub fn final_time(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn n_slabs(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// End points `(t_{n-1}, t_n)` of slab `n` (zero based).
    pub fn slab(&self, n: usize) -> (f64, f64) {
        (self.points[n], self.points[n + 1])
    }

    pub fn tau_n(&self, n: usize) -> f64 {
        self.points[n + 1] - self.points[n]
    }

    /// Largest slab length.
    pub fn tau(&self) -> f64 {
        (0..self.n_slabs()).map(|n| self.tau_n(n)).fold(0.0, f64::max)
    }

    /// Physical time of reference coordinate `s ∈ [-1, 1]` on slab `n`.
    pub fn map(&self, n: usize, s: f64) -> f64 {
        let (a, b) = self.slab(n);
        0.5 * (a + b) + 0.5 * (b - a) * s
    }

    /// Slab containing `t` (slabs are closed on the right) and the reference
    /// coordinate of `t` in it.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let n = match self.points[1..].iter().position(|&tn| t <= tn) {
            Some(n) => n,
            None => self.n_slabs() - 1,
        };
        let (a, b) = self.slab(n);
        (n, (2.0 * t - a - b) / (b - a))
    }
}

/// Uniform time mesh with step `tau0 / 2^level` on `(0, T]`.
///
/// The step must divide `T` evenly; a shortened last slab is rejected.
pub fn build_time_mesh(final_time: f64, tau0: f64, level: u32) -> Result<TimeMesh> {
    if !(final_time > 0.0) || !(tau0 > 0.0) {
        return Err(Error::InvalidArgument("need T > 0 and tau0 > 0".into()));
    }
    let step = tau0 / 2f64.powi(level as i32);
    let ratio = final_time / step;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::NonIntegralSteps { length: final_time, step });
    }
    TimeMesh::uniform(final_time, n as usize)
}

/// Trial and test bases of the cG(k) slab problem on `[-1, 1]`.
///
/// Trial functions are the Lagrange polynomials of degree `k` through the
/// Gauss–Lobatto nodes. Test functions are the Legendre polynomials
/// `P_0 .. P_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabBasis {
    rule: GaussLobattoRule,
    /// `derivatives[mu][j]` = d/ds of trial `j` at node `mu`.
    derivatives: Vec<Vec<f64>>,
    /// `test_values[mu][m]` = test `m` at node `mu`.
    test_values: Vec<Vec<f64>>,
}

impl SlabBasis {
    pub fn degree(&self) -> usize {
        self.rule.degree
    }

    pub fn rule(&self) -> &GaussLobattoRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn trial(&self, s: f64) -> Vec<f64> {
        lagrange_values(&self.rule.nodes, s)
    }

    /// d/ds of the trial functions at `s`.
    pub fn trial_derivative(&self, s: f64) -> Vec<f64> {
        lagrange_derivatives(&self.rule.nodes, s)
    }

    pub fn test(&self, s: f64) -> Vec<f64> {
        legendre_values(self.rule.degree, s)
    }

    pub fn derivative_table(&self) -> &[Vec<f64>] {
        &self.derivatives
    }

    pub fn test_table(&self) -> &[Vec<f64>] {
        &self.test_values
    }

    /// `∫_{-1}^{s} trial_j(σ) dσ` for every `j`, exact in the polynomial sense.
    pub fn trial_antiderivative(&self, s: f64) -> Vec<f64> {
        let k = self.degree();
        let (x, w) = crate::quadrature::gauss_legendre(k / 2 + 1);
        let half = 0.5 * (s + 1.0);
        let mut out = vec![0.0; k + 1];
        for (xq, wq) in x.iter().zip(&w) {
            let sigma = -1.0 + half * (xq + 1.0);
            for (o, l) in out.iter_mut().zip(self.trial(sigma)) {
                *o += half * wq * l;
            }
        }
        out
    }
}

pub fn slab_basis(k: usize) -> Result<SlabBasis> {
    let rule = gauss_lobatto(k)?;
    let derivatives = rule.nodes.iter().map(|&s| lagrange_derivatives(&rule.nodes, s)).collect();
    let test_values = rule.nodes.iter().map(|&s| legendre_values(k, s)).collect();
    Ok(SlabBasis { rule, derivatives, test_values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(deg: usize) -> f64 {
        if deg % 2 == 1 {
            0.0
        } else {
            2.0 / (deg as f64 + 1.0)
        }
    }

    #[test]
    fn trapezoidal_rule_for_k1() {
        let r = gauss_lobatto(1).unwrap();
        assert_eq!(r.nodes(), &[-1.0, 1.0]);
        assert_eq!(r.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn simpson_rule_for_k2() {
        // oracle: solve the 3x3 moment system for nodes (-1, 0, 1) on t^0..t^2
        // and check t^3 as well
        let r = gauss_lobatto(2).unwrap();
        let expect_nodes = [-1.0, 0.0, 1.0];
        let expect_weights = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        for i in 0..3 {
            assert!((r.nodes()[i] - expect_nodes[i]).abs() < 1e-15);
            assert!((r.weights()[i] - expect_weights[i]).abs() < 1e-15);
        }
        for deg in 0..=3 {
            let q: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((q - monomial_integral(deg as usize)).abs() < 1e-15);
        }
    }

    #[test]
    fn k3_integrates_t5() {
        let r = gauss_lobatto(3).unwrap();
        let q: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(5)).sum();
        assert!(q.abs() < 1e-15);
        // nodes ±1/sqrt(5), weights 1/6, 5/6
        assert!((r.nodes()[2] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((r.weights()[1] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_degree_is_sharp() {
        for k in 1..=8 {
            let r = gauss_lobatto(k).unwrap();
            assert_eq!(r.nodes()[0], -1.0);
            assert_eq!(r.nodes()[k], 1.0);
            assert!((r.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
            assert!(r.weights().iter().all(|&w| w > 0.0));
            for deg in 0..2 * k {
                let q: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - monomial_integral(deg)).abs() < 1e-13, "k={k} deg={deg}");
            }
            let q: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(2 * k as i32)).sum();
            assert!((q - monomial_integral(2 * k)).abs() > 1e-6);
        }
    }

    #[test]
    fn rejects_degree_zero() {
        assert!(gauss_lobatto(0).is_err());
        assert!(slab_basis(0).is_err());
    }

    #[test]
    fn slab_rule_on_physical_interval() {
        for k in 1..=5 {
            let r = gauss_lobatto(k).unwrap();
            let (a, b) = (0.3, 0.425);
            let p = 2 * k as i32 - 1;
            let q = r.integrate(a, b, |t| t.powi(p));
            let exact = (b.powi(p + 1) - a.powi(p + 1)) / (p as f64 + 1.0);
            assert!((q - exact).abs() < 1e-13);
            let q2 = r.integrate(a, b, |t| t.powi(p + 1));
            let exact2 = (b.powi(p + 2) - a.powi(p + 2)) / (p as f64 + 2.0);
            assert!((q2 - exact2).abs() > 1e-16);
        }
    }

    #[test]
    fn time_meshes() {
        assert_eq!(build_time_mesh(2.0, 0.1, 0).unwrap().n_slabs(), 20);
        let m = build_time_mesh(2.0, 0.1, 3).unwrap();
        assert_eq!(m.n_slabs(), 160);
        assert!((m.tau() - 0.0125).abs() < 1e-15);
        assert_eq!(build_time_mesh(1.0, 1.0, 0).unwrap().n_slabs(), 1);
        assert!(matches!(build_time_mesh(1.0, 0.3, 0), Err(Error::NonIntegralSteps { .. })));
        assert_eq!(m.final_time(), 2.0);
        let (n, s) = m.locate(0.0125);
        assert_eq!((n, s), (0, 1.0));
        assert_eq!(m.locate(0.0).0, 0);
    }

    #[test]
    fn linear_trial_basis() {
        let b = slab_basis(1).unwrap();
        let s = 0.3;
        let t = b.trial(s);
        assert!((t[0] - (1.0 - s) / 2.0).abs() < 1e-15);
        assert!((t[1] - (1.0 + s) / 2.0).abs() < 1e-15);
        assert_eq!(b.trial_derivative(s), vec![-0.5, 0.5]);
    }

    #[test]
    fn quadratic_trial_basis() {
        let b = slab_basis(2).unwrap();
        assert_eq!(b.trial(0.0)[1], 1.0);
        assert_eq!(b.trial(1.0)[1], 0.0);
        assert_eq!(b.trial(-1.0)[1], 0.0);
        for row in b.derivative_table() {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn lagrange_property_and_partition_of_unity() {
        for k in 1..=5 {
            let b = slab_basis(k).unwrap();
            for (i, &s) in b.nodes().iter().enumerate() {
                let v = b.trial(s);
                for (j, vj) in v.iter().enumerate() {
                    assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                // derivative table equals analytic differentiation
                let d = b.trial_derivative(s);
                for j in 0..=k {
                    assert!((d[j] - b.derivative_table()[i][j]).abs() < 1e-14);
                }
            }
            assert_eq!(b.test(0.2).len(), k);
        }
    }

    #[test]
    fn antiderivative_of_trial_basis() {
        let b = slab_basis(3).unwrap();
        // the trial functions sum to one, so their antiderivatives sum to s + 1
        let a = b.trial_antiderivative(0.4);
        assert!((a.iter().sum::<f64>() - 1.4).abs() < 1e-14);
        // ∫ s over [-1,1] is reproduced by nodal interpolation of s
        let a = b.trial_antiderivative(1.0);
        let v: f64 = a.iter().zip(b.nodes()).map(|(w, s)| w * s).sum();
        assert!(v.abs() < 1e-14);
    }
}
