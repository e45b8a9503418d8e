use std::f64::consts::PI;
use std::sync::Arc;

use biot_core::fespace::{build_space, gauss_quadrature_2d};
use biot_core::mesh::build_mesh;
use biot_core::model::{FnField, ManufacturedForcing, ManufacturedSolution};
use biot_core::postprocess::{trajectory_l2l2_error, trajectory_linf_l2_error, ExactFn};
use biot_core::projection::{
    elliptic_projection_scalar, elliptic_projection_vector, error_split, interpolate_time, project_time,
    special_approximation, special_approximation_from, ScalarProjector, VectorProjector,
};
use biot_core::quadrature::gauss_legendre;
use biot_core::solver::{initial_values, march};
use biot_core::study::projection_orthogonality_defect;
use biot_core::timedisc::{build_time_mesh, slab_basis};
use biot_core::{Discretization, FESpace, InitialStrategy, MaterialParams, SpaceTimeSolution, TimeMesh, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(n: usize, r: usize, c: usize) -> FESpace {
    build_space(Arc::new(build_mesh(n).unwrap()), r, c).unwrap()
}

/// `‖w_h − w‖_{L²}` with an 8-point tensor Gauss rule per cell.
fn l2_error(s: &FESpace, coeffs: &[f64], w: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let q = gauss_quadrature_2d(8);
    let area = s.mesh().cell_size().powi(2);
    let mut sum = 0.0;
    for cell in 0..s.mesh().n_cells() {
        for (p, wq) in q.points().iter().zip(q.weights()) {
            let x = s.mesh().map_to_cell(cell, *p);
            let (a, b) = (s.evaluate(coeffs, cell, *p), w(x));
            for c in 0..s.components() {
                sum += wq * area * (a[c] - b[c]).powi(2);
            }
        }
    }
    sum.sqrt()
}

fn sine(x: [f64; 2]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

fn sine_grad(x: [f64; 2]) -> [f64; 2] {
    [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()]
}

#[test]
fn zero_field_projects_to_zero() {
    let params = MaterialParams::default();
    let zero_v = FnField(|_: [f64; 2]| [0.0; 2], |_: [f64; 2]| [[0.0; 2]; 2]);
    let zero_s = FnField(|_: [f64; 2]| 0.0, |_: [f64; 2]| [0.0; 2]);
    assert!(elliptic_projection_vector(&space(3, 2, 2), &params, &zero_v).unwrap().iter().all(|&v| v == 0.0));
    assert!(elliptic_projection_scalar(&space(3, 2, 1), &params, &zero_s).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn projections_are_idempotent() {
    let params = MaterialParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for r in [1, 2, 3] {
        let vs = space(3, r, 2);
        let mut w: Vec<f64> = (0..vs.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for &d in vs.dirichlet_dofs() {
            w[d] = 0.0;
        }
        let pw = elliptic_projection_vector(&vs, &params, &vs.function(&w)).unwrap();
        let diff = pw.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "vector r={r}: {diff:e}");

        let ss = space(3, r, 1);
        let mut q: Vec<f64> = (0..ss.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for &d in ss.dirichlet_dofs() {
            q[d] = 0.0;
        }
        let pq = elliptic_projection_scalar(&ss, &params, &ss.function(&q)).unwrap();
        let diff = pq.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "scalar r={r}: {diff:e}");
    }
}

#[test]
fn galerkin_orthogonality() {
    for (n, r) in [(4, 1), (4, 2), (3, 3)] {
        let d = projection_orthogonality_defect(n, r).unwrap();
        assert!(d < 1e-9, "({n},{r}): {d:e}");
    }
    let params = MaterialParams::default();
    let vs = space(4, 2, 2);
    let w = FnField(|x: [f64; 2]| [sine(x), sine(x)], |x: [f64; 2]| [sine_grad(x), sine_grad(x)]);
    let proj = VectorProjector::new(&vs, &params).unwrap();
    let c = proj.project(&w).unwrap();
    let scale = proj.rhs(&w).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(proj.orthogonality_defect(&w, &c) < 1e-9 * scale);
}

#[test]
fn ritz_projection_converges_at_order_three() {
    let params = MaterialParams::default();
    let w = FnField(|x: [f64; 2]| [sine(x), sine(x)], |x: [f64; 2]| [sine_grad(x), sine_grad(x)]);
    let q = FnField(sine, sine_grad);
    let mut ev = Vec::new();
    let mut es = Vec::new();
    for n in [4, 8, 16] {
        let vs = space(n, 2, 2);
        let c = VectorProjector::new(&vs, &params).unwrap().project(&w).unwrap();
        ev.push(l2_error(&vs, &c, |x| [sine(x), sine(x)]));
        let ss = space(n, 2, 1);
        let c = ScalarProjector::new(&ss, &params).unwrap().project(&q).unwrap();
        es.push(l2_error(&ss, &c, |x| [sine(x), 0.0]));
    }
    for e in [&ev, &es] {
        let rate = (e[1] / e[2]).log2();
        assert!((rate - 3.0).abs() < 0.2, "{e:?}: {rate}");
    }
}

/// `‖I_τ w − w‖_{L²(0,T)}` with 20 Gauss points per slab.
fn time_l2_error(traj: &Trajectory, w: impl Fn(f64) -> f64) -> f64 {
    let tm = traj.time_mesh();
    let (s, wq) = gauss_legendre(20);
    let mut sum = 0.0;
    for n in 0..tm.n_slabs() {
        for (&s, &wq) in s.iter().zip(&wq) {
            sum += 0.5 * tm.tau_n(n) * wq * (traj.eval_on_slab(n, s)[0] - w(tm.map(n, s))).powi(2);
        }
    }
    sum.sqrt()
}

#[test]
fn time_interpolation_exact_on_polynomials() {
    let tm = TimeMesh::uniform(2.0, 7).unwrap();
    for k in 1..=4 {
        let basis = slab_basis(k).unwrap();
        let poly = |t: f64| (0..=k).map(|j| (j as f64 + 0.5) * t.powi(j as i32)).sum::<f64>();
        let it = interpolate_time(&basis, &tm, |t| vec![poly(t), 3.0]);
        for i in 0..=97 {
            let t = 2.0 * i as f64 / 97.0;
            let v = it.eval(t);
            assert!((v[0] - poly(t)).abs() < 1e-12 * poly(t).abs().max(1.0), "k={k} t={t}");
            assert!((v[1] - 3.0).abs() < 1e-13);
        }
        assert!(it.is_continuous());
    }
}

#[test]
fn time_interpolation_converges_at_order_k_plus_one() {
    let w = |t: f64| (PI * t * t).sin();
    for k in [1, 2, 3] {
        let basis = slab_basis(k).unwrap();
        let e: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| time_l2_error(&interpolate_time(&basis, &TimeMesh::uniform(2.0, n).unwrap(), |t| vec![w(t)]), w))
            .collect();
        let rate = (e[1] / e[2]).log2();
        assert!((rate - (k + 1) as f64).abs() < 0.15, "k={k}: {e:?} {rate}");
    }
}

#[test]
fn time_interpolation_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tm = TimeMesh::uniform(1.0, 10).unwrap();
    let (s, wq) = gauss_legendre(30);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (a, b, c) = (rng.random_range(0.0..40.0), rng.random_range(0.0..6.0), rng.random_range(-2.0..2.0));
        let w = move |t: f64| (a * t + b).sin() + c * t;
        let dw = move |t: f64| a * (a * t + b).cos() + c;
        for k in [1, 2, 3] {
            let it = interpolate_time(&slab_basis(k).unwrap(), &tm, |t| vec![w(t)]);
            for n in 0..tm.n_slabs() {
                let half = 0.5 * tm.tau_n(n);
                let mut norms = [0.0; 3];
                for (&s, &q) in s.iter().zip(&wq) {
                    let t = tm.map(n, s);
                    norms[0] += half * q * it.eval_on_slab(n, s)[0].powi(2);
                    norms[1] += half * q * w(t).powi(2);
                    norms[2] += half * q * dw(t).powi(2);
                }
                let [i, w0, w1] = norms.map(f64::sqrt);
                worst = worst.max(i / (w0 + tm.tau_n(n) * w1));
            }
        }
    }
    assert!(worst <= 10.0, "{worst}");
}

#[test]
fn time_projection_examples() {
    let unit = TimeMesh::uniform(1.0, 1).unwrap();
    let p = project_time(0, &unit, |t| vec![t], 10);
    for t in [0.1, 0.5, 0.9] {
        assert!((p.eval(t)[0] - 0.5).abs() < 1e-14);
    }
    let p = project_time(1, &unit, |t| vec![t * t], 10);
    for t in [0.05, 0.3, 0.77, 1.0] {
        assert!((p.eval(t)[0] - (t - 1.0 / 6.0)).abs() < 1e-14, "{t}");
    }
    // projection onto P_{k-1} leaves P_{k-1} unchanged
    let tm = TimeMesh::uniform(2.0, 5).unwrap();
    let q = |t: f64| vec![1.0 - 2.0 * t + 0.5 * t * t, t];
    let p = project_time(2, &tm, q, 8);
    for i in 1..40 {
        let t = 2.0 * i as f64 / 40.0;
        let (a, b) = (p.eval(t), q(t));
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
}

#[test]
fn time_projection_moments_and_contraction() {
    let tm = TimeMesh::uniform(2.0, 13).unwrap();
    let w = |t: f64| vec![(PI * t * t).sin(), (3.0 * t).exp() * 1e-2];
    let (s, wq) = gauss_legendre(30);
    for degree in 0..=3 {
        let p = project_time(degree, &tm, w, 30);
        assert!(p.moment_defect(&w, 30) < 1e-10, "degree {degree}");
        for n in 0..tm.n_slabs() {
            let (mut a, mut b) = (0.0, 0.0);
            for (&s, &q) in s.iter().zip(&wq) {
                a += q * p.eval_on_slab(n, s)[0].powi(2);
                b += q * w(tm.map(n, s))[0].powi(2);
            }
            assert!(a.sqrt() <= b.sqrt() + 1e-10);
        }
    }
}

#[test]
fn special_approximation_of_discrete_motion_is_exact() {
    let vs = space(3, 2, 2);
    let w: Vec<f64> = vs.interpolate_vector(|x| [x[0] * (1.0 - x[0]) * x[1], x[1] * (1.0 - x[1])]);
    let tm = TimeMesh::uniform(1.0, 4).unwrap();
    for k in [1, 2, 3] {
        let a = move |t: f64| (0..=k).map(|j| t.powi(j as i32) / (j + 1) as f64).sum::<f64>();
        let da = move |t: f64| (1..=k).map(|j| j as f64 * t.powi(j as i32 - 1) / (j + 1) as f64).sum::<f64>();
        let scaled = |c: f64| w.iter().map(|x| c * x).collect::<Vec<_>>();
        let (w1, w2) = special_approximation_from(&slab_basis(k).unwrap(), &tm, |t| scaled(a(t)), |t| scaled(da(t)));
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let (e1, e2) = (scaled(a(t)), scaled(da(t)));
            for (x, y) in w1.eval(t).iter().zip(&e1).chain(w2.eval(t).iter().zip(&e2)) {
                assert!((x - y).abs() < 1e-10, "k={k} t={t}");
            }
        }
    }
}

#[test]
fn special_approximation_of_zero_motion() {
    let vs = space(2, 1, 2);
    let tm = TimeMesh::uniform(1.0, 3).unwrap();
    let n = vs.n_dofs();
    let (w1, w2) = special_approximation_from(&slab_basis(2).unwrap(), &tm, |_| vec![0.0; n], |_| vec![0.0; n]);
    assert!(w1.slabs().iter().chain(w2.slabs()).flatten().flatten().all(|&v| v == 0.0));
}

#[test]
fn special_approximation_converges() {
    let params = MaterialParams::default();
    let msol = ManufacturedSolution::default();
    let basis = slab_basis(2).unwrap();
    let exact = ExactFn { components: 2, f: move |x: [f64; 2], t: f64| msol.exact_fields(x, t).u };
    let mut errs = Vec::new();
    for level in 0..3u32 {
        let vs = space(4 << level, 2, 2);
        let tm = build_time_mesh(1.0, 0.1, level).unwrap();
        let (w1, _) = special_approximation(&msol, &vs, &params, &basis, &tm).unwrap();
        errs.push(trajectory_linf_l2_error(&w1, &vs, &exact, 10));
    }
    let rate = (errs[1] / errs[2]).log2();
    assert!(rate >= 2.9, "{errs:?}: {rate}");
}

fn coarse_run() -> (Discretization, SpaceTimeSolution, ManufacturedSolution) {
    let params = MaterialParams::default();
    let msol = ManufacturedSolution::default();
    let d = Discretization::new(Arc::new(build_mesh(4).unwrap()), 2, 2, 2, &params, TimeMesh::uniform(0.5, 5).unwrap())
        .unwrap();
    let init = initial_values(&d, &msol, InitialStrategy::default()).unwrap();
    let sol = march(&d, &d.forcing_loads(&ManufacturedForcing { params, solution: msol }), &init).unwrap();
    (d, sol, msol)
}

#[test]
fn error_split_reconstructs_the_error() {
    let (d, sol, msol) = coarse_run();
    let rep = error_split(&sol, &d, &msol).unwrap();
    assert!(rep.reconstruction_defect < 1e-9, "{:e}", rep.reconstruction_defect);
    for v in [rep.eta1, rep.eta2, rep.e1, rep.e2, rep.omega, rep.e] {
        assert!(v.is_finite() && v >= 0.0);
    }

    // nodal interpolant of the exact solution in place of the discrete one
    let basis = &d.basis;
    let tm = &d.time_mesh;
    let interp = SpaceTimeSolution {
        u: interpolate_time(basis, tm, |t| d.space_u.interpolate_vector(|x| msol.exact_fields(x, t).u)),
        v: interpolate_time(basis, tm, |t| d.space_u.interpolate_vector(|x| msol.exact_fields(x, t).v)),
        p: interpolate_time(basis, tm, |t| d.space_p.interpolate_scalar(|x| msol.exact_fields(x, t).p)),
        max_residual: 0.0,
        factorizations: 0,
    };
    let rep = error_split(&interp, &d, &msol).unwrap();
    assert!(rep.reconstruction_defect < 1e-9);
}

#[test]
fn zero_solution_recovers_the_special_approximation() {
    let (d, sol, msol) = coarse_run();
    let zero = |t: &Trajectory| t.axpby(0.0, t, 0.0);
    let z = SpaceTimeSolution { u: zero(&sol.u), v: zero(&sol.v), p: zero(&sol.p), max_residual: 0.0, factorizations: 0 };
    let rep = error_split(&z, &d, &msol).unwrap();
    let (w1, w2) = special_approximation(&msol, &d.space_u, d.params(), &d.basis, &d.time_mesh).unwrap();
    let nothing = ExactFn { components: 2, f: |_: [f64; 2], _: f64| [0.0; 2] };
    let points = d.k() + 3;
    let n1 = trajectory_l2l2_error(&w1, &d.space_u, &nothing, points);
    let n2 = trajectory_l2l2_error(&w2, &d.space_u, &nothing, points);
    assert!((rep.e1 - n1).abs() < 1e-12 * n1.max(1.0), "{} vs {n1}", rep.e1);
    assert!((rep.e2 - n2).abs() < 1e-12 * n2.max(1.0));
}
