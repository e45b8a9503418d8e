//! Slabwise polynomial trajectories with values in a coefficient space.

use crate::timedisc::{SlabBasis, TimeMesh};

/// A function of time that is a polynomial of degree `k` on every slab,
/// stored by its values at the `k+1` Gauss–Lobatto nodes of each slab.
///
/// Trajectories produced by the time-marching solver are continuous: the
/// last node of slab `n` and the first node of slab `n+1` are bit-equal.
/// Trajectories built slabwise (for instance by the special approximation of
/// the projection module) may jump at slab interfaces.
#[derive(Debug, Clone)]
pub struct Trajectory {
    time_mesh: TimeMesh,
    basis: SlabBasis,
    /// `slabs[n][j]` = coefficient vector at node `j` of slab `n`.
    slabs: Vec<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn new(time_mesh: TimeMesh, basis: SlabBasis, slabs: Vec<Vec<Vec<f64>>>) -> Self {
        assert_eq!(slabs.len(), time_mesh.n_slabs());
        assert!(slabs.iter().all(|s| s.len() == basis.degree() + 1));
        Self { time_mesh, basis, slabs }
    }

    pub fn time_mesh(&self) -> &TimeMesh {
        &self.time_mesh
    }

    pub fn basis(&self) -> &SlabBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn dim(&self) -> usize {
        self.slabs[0][0].len()
    }

    pub fn slab_nodes(&self, n: usize) -> &[Vec<f64>] {
        &self.slabs[n]
    }

    pub fn slabs(&self) -> &[Vec<Vec<f64>>] {
        &self.slabs
    }

    /// Value on slab `n` at reference coordinate `s`.
    pub fn eval_on_slab(&self, n: usize, s: f64) -> Vec<f64> {
        let l = self.basis.trial(s);
        combine(&self.slabs[n], &l)
    }

    /// Time derivative on slab `n` at reference coordinate `s`.
    pub fn derivative_on_slab(&self, n: usize, s: f64) -> Vec<f64> {
        let d = self.basis.trial_derivative(s);
        let scale = 2.0 / self.time_mesh.tau_n(n);
        let mut v = combine(&self.slabs[n], &d);
        v.iter_mut().for_each(|x| *x *= scale);
        v
    }

    /// Value at time `t`; at slab interfaces the left slab is used.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let (n, s) = self.time_mesh.locate(t);
        self.eval_on_slab(n, s)
    }

    /// Value at `t = 0`.
    pub fn initial(&self) -> &[f64] {
        &self.slabs[0][0]
    }

    /// Value at `t = T`.
    pub fn terminal(&self) -> &[f64] {
        self.slabs.last().unwrap().last().unwrap()
    }

    /// Largest jump across slab interfaces (zero for continuous trajectories).
    pub fn max_interface_jump(&self) -> f64 {
        self.slabs
            .windows(2)
            .map(|w| {
                let a = w[0].last().unwrap();
                let b = &w[1][0];
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// True when every interface value is bit-identical on both sides.
    pub fn is_continuous(&self) -> bool {
        self.slabs.windows(2).all(|w| {
            let a = w[0].last().unwrap();
            a.iter().zip(&w[1][0]).all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }

    /// Pointwise linear combination `a * self + b * other` on matching meshes.
    pub fn axpby(&self, a: f64, other: &Trajectory, b: f64) -> Trajectory {
        assert_eq!(self.slabs.len(), other.slabs.len());
        let slabs = self
            .slabs
            .iter()
            .zip(&other.slabs)
            .map(|(s, o)| {
                s.iter()
                    .zip(o)
                    .map(|(x, y)| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect())
                    .collect()
            })
            .collect();
        Trajectory { time_mesh: self.time_mesh.clone(), basis: self.basis.clone(), slabs }
    }
}

fn combine(nodes: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; nodes[0].len()];
    for (node, &w) in nodes.iter().zip(weights) {
        if w != 0.0 {
            out.iter_mut().zip(node).for_each(|(o, x)| *o += w * x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timedisc::slab_basis;

    #[test]
    fn evaluates_polynomials_and_derivatives() {
        let mesh = TimeMesh::uniform(1.0, 4).unwrap();
        let basis = slab_basis(2).unwrap();
        let f = |t: f64| vec![t * t, 1.0 - t];
        let slabs = (0..4)
            .map(|n| basis.nodes().iter().map(|&s| f(mesh.map(n, s))).collect())
            .collect();
        let tr = Trajectory::new(mesh, basis, slabs);
        assert!(tr.is_continuous());
        assert_eq!(tr.max_interface_jump(), 0.0);
        for t in [0.0, 0.1, 0.25, 0.6, 1.0] {
            let v = tr.eval(t);
            assert!((v[0] - t * t).abs() < 1e-14 && (v[1] - 1.0 + t).abs() < 1e-14);
        }
        let d = tr.derivative_on_slab(2, 0.3);
        let t = tr.time_mesh().map(2, 0.3);
        assert!((d[0] - 2.0 * t).abs() < 1e-12 && (d[1] + 1.0).abs() < 1e-12);
        let z = tr.axpby(1.0, &tr, -1.0);
        assert!(z.eval(0.7).iter().all(|&x| x == 0.0));
    }
}
