use std::sync::Arc;

use biot_core::assembly::{NodalState, SlabLoads};
use biot_core::mesh::build_mesh;
use biot_core::model::{ManufacturedForcing, ManufacturedSolution, ZeroForcing};
use biot_core::postprocess::linf_l2_error;
use biot_core::solver::{initial_values, lu_solve, march, relative_residual};
use biot_core::study::discrete_reproduction_defect;
use biot_core::timedisc::build_time_mesh;
use biot_core::{
    Discretization, Error, InitialStrategy, LuSolver, MaterialParams, SparseMatrix, TimeMesh,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disc(cells: usize, r: usize, k: usize, params: &MaterialParams, tm: TimeMesh) -> Discretization {
    Discretization::new(Arc::new(build_mesh(cells).unwrap()), r, r, k, params, tm).unwrap()
}

#[test]
fn sparse_lu_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 50;
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let a = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            t.push((i, j, a[(i, j)]));
        }
    }
    let sparse = SparseMatrix::from_triplets(n, n, &t).unwrap();
    let x = lu_solve(&sparse, b.as_slice()).unwrap();
    let oracle = a.lu().solve(&b).unwrap();
    let diff = x.iter().zip(oracle.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff:e}");
    assert!(relative_residual(&sparse, &x, b.as_slice()) < 1e-10);
}

#[test]
fn nonsymmetric_system_is_solved() {
    let a = SparseMatrix::from_triplets(3, 3, &[(0, 1, 2.0), (1, 0, 1.0), (1, 2, -1.0), (2, 2, 4.0), (2, 0, 1.0)])
        .unwrap();
    let x = lu_solve(&a, &[2.0, 0.0, 5.0]).unwrap();
    assert!(relative_residual(&a, &x, &[2.0, 0.0, 5.0]) < 1e-15);
    assert!((x[1] - 1.0).abs() < 1e-14);
}

#[test]
fn singular_matrix_is_reported() {
    let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
    let r = LuSolver::factorize(&a).and_then(|lu| lu.solve(&[1.0, 2.0]));
    assert!(matches!(r, Err(Error::SingularMatrix { .. })), "{r:?}");
}

#[test]
fn rhs_length_is_checked() {
    let lu = LuSolver::factorize(&SparseMatrix::identity(3)).unwrap();
    assert!(matches!(lu.solve(&[1.0]), Err(Error::DimensionMismatch(_))));
}

#[test]
fn homogeneous_problem_stays_zero() {
    let d = disc(3, 2, 2, &MaterialParams::default(), TimeMesh::uniform(0.5, 5).unwrap());
    let start = NodalState::zeros(d.blocks.n_u(), d.blocks.n_p());
    let sol = march(&d, &d.forcing_loads(&ZeroForcing), &start).unwrap();
    for traj in [&sol.u, &sol.v, &sol.p] {
        assert!(traj.slabs().iter().flatten().flatten().all(|&v| v == 0.0));
    }
}

#[test]
fn trajectory_is_continuous_and_starts_at_initial_values() {
    let params = MaterialParams::default();
    let d = disc(4, 2, 2, &params, TimeMesh::uniform(0.4, 4).unwrap());
    let msol = ManufacturedSolution::default();
    let mut init = initial_values(&d, &msol, InitialStrategy::default()).unwrap();
    // nonzero start to make the check meaningful
    init.p = d.space_p.interpolate_scalar(|x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
    let forcing = ManufacturedForcing { params, solution: msol };
    let sol = march(&d, &d.forcing_loads(&forcing), &init).unwrap();
    for traj in [&sol.u, &sol.v, &sol.p] {
        assert_eq!(traj.max_interface_jump(), 0.0);
        for w in traj.slabs().windows(2) {
            assert_eq!(w[0].last().unwrap(), &w[1][0]);
        }
    }
    assert_eq!(sol.p.initial(), init.p.as_slice());
    assert!(sol.max_residual < 1e-10, "{:e}", sol.max_residual);
    assert_eq!(sol.factorizations, 1);
}

#[test]
fn nonuniform_steps_refactorize() {
    let d = disc(2, 1, 1, &MaterialParams::default(), TimeMesh::from_points(vec![0.0, 0.1, 0.2, 0.4, 0.6]).unwrap());
    let start = NodalState::zeros(d.blocks.n_u(), d.blocks.n_p());
    let sol = march(&d, &d.forcing_loads(&ZeroForcing), &start).unwrap();
    assert_eq!(sol.factorizations, 2);
}

#[test]
fn mismatched_initial_values_are_rejected() {
    let d = disc(2, 1, 1, &MaterialParams::default(), TimeMesh::uniform(1.0, 2).unwrap());
    let bad = NodalState::zeros(3, 3);
    assert!(march(&d, &d.forcing_loads(&ZeroForcing), &bad).is_err());
}

/// Diagonal Padé approximant of `exp(τJ)` of order `k ∈ {1, 2}`; cG(k)
/// reproduces it at the slab end points for linear autonomous systems.
fn pade(j: &DMatrix<f64>, tau: f64, k: usize) -> DMatrix<f64> {
    let n = j.nrows();
    let i = DMatrix::<f64>::identity(n, n);
    let x = j * tau;
    let (num, den) = match k {
        1 => (&i + &x * 0.5, &i - &x * 0.5),
        2 => {
            let x2 = &x * &x / 12.0;
            (&i + &x * 0.5 + &x2, &i - &x * 0.5 + &x2)
        }
        _ => unreachable!(),
    };
    den.try_inverse().unwrap() * num
}

/// Decoupled problem (α = 0, c0 = 1, K = I) on a 2 × 2 mesh with linear
/// elements: compares the marched free DOFs with the matrix propagator.
#[test]
fn decoupled_modes_follow_the_discrete_propagator() {
    let params = MaterialParams { alpha: 0.0, c0: 1.0, permeability: [[1.0, 0.0], [0.0, 1.0]], ..Default::default() };
    for k in [1, 2] {
        let n_slabs = 8;
        let d = disc(2, 1, k, &params, TimeMesh::uniform(0.4, n_slabs).unwrap());
        let b = &d.blocks;
        let fu: Vec<usize> = (0..b.n_u()).filter(|&i| !b.dirichlet_u[i]).collect();
        let fp: Vec<usize> = (0..b.n_p()).filter(|&i| !b.dirichlet_p[i]).collect();
        let sub = |m: &SparseMatrix, idx: &[usize]| DMatrix::from_fn(idx.len(), idx.len(), |a, c| m.get(idx[a], idx[c]));

        let mut start = NodalState::zeros(b.n_u(), b.n_p());
        for (a, &i) in fu.iter().enumerate() {
            start.u[i] = 0.3 + a as f64;
            start.v[i] = -0.7 * a as f64 + 0.1;
        }
        for &i in &fp {
            start.p[i] = 1.5;
        }
        let sol = march(&d, &d.forcing_loads(&ZeroForcing), &start).unwrap();
        let end = sol.state(0.4);

        // pressure: M p' = -A p
        let jp = -sub(&b.mass_p, &fp).try_inverse().unwrap() * sub(&b.stiffness_p, &fp);
        let stepp = pade(&jp, 0.05, k);
        let mut p = DVector::from_iterator(fp.len(), fp.iter().map(|&i| start.p[i]));
        // (u, v)' = (v, -ρM⁻¹ A u)
        let nf = fu.len();
        let minv_a = sub(&b.mass_u, &fu).try_inverse().unwrap() * sub(&b.stiffness_u, &fu);
        let mut ju = DMatrix::zeros(2 * nf, 2 * nf);
        ju.view_mut((0, nf), (nf, nf)).copy_from(&DMatrix::identity(nf, nf));
        ju.view_mut((nf, 0), (nf, nf)).copy_from(&(-minv_a));
        let stepu = pade(&ju, 0.05, k);
        let mut y = DVector::from_iterator(2 * nf, fu.iter().map(|&i| start.u[i]).chain(fu.iter().map(|&i| start.v[i])));
        for _ in 0..n_slabs {
            p = &stepp * p;
            y = &stepu * y;
        }
        for (a, &i) in fp.iter().enumerate() {
            assert!((end.p[i] - p[a]).abs() < 1e-8, "k={k}: p {} vs {}", end.p[i], p[a]);
        }
        for (a, &i) in fu.iter().enumerate() {
            assert!((end.u[i] - y[a]).abs() < 1e-8, "k={k}: u");
            assert!((end.v[i] - y[nf + a]).abs() < 1e-8, "k={k}: v");
        }
    }
}

#[test]
fn custom_loads_reproduce_polynomial_motion() {
    for (cells, r, k, slabs) in [(3, 1, 1, 4), (3, 2, 2, 3), (2, 2, 3, 2)] {
        let d = discrete_reproduction_defect(cells, r, k, slabs, false).unwrap();
        assert!(d < 1e-8, "({cells},{r},{k}): {d:e}");
    }
}

#[test]
fn closure_load_provider_is_accepted() {
    let d = disc(2, 1, 1, &MaterialParams::default(), TimeMesh::uniform(0.2, 2).unwrap());
    let (nu, np) = (d.blocks.n_u(), d.blocks.n_p());
    let loads = |_n: usize, _t: &[f64]| SlabLoads::zero(1, nu, np);
    let sol = march(&d, &loads, &NodalState::zeros(nu, np)).unwrap();
    assert_eq!(sol.time_mesh().n_slabs(), 2);
}

#[test]
fn initial_values_of_benchmark_vanish() {
    let d = disc(4, 2, 2, &MaterialParams::default(), TimeMesh::uniform(0.2, 2).unwrap());
    let msol = ManufacturedSolution::default();
    for s in [InitialStrategy::RitzDisplacement, InitialStrategy::EllipticProjection, InitialStrategy::NodalInterpolation] {
        let st = initial_values(&d, &msol, s).unwrap();
        assert!(st.u.iter().chain(&st.v).chain(&st.p).all(|v| v.abs() < 1e-14), "{s:?}");
    }
}

#[test]
fn coarsest_benchmark_level_is_close_to_reference() {
    let params = MaterialParams::default();
    let msol = ManufacturedSolution::default();
    let d = disc(4, 2, 2, &params, build_time_mesh(2.0, 0.1, 0).unwrap());
    let init = initial_values(&d, &msol, InitialStrategy::default()).unwrap();
    let sol = march(&d, &d.forcing_loads(&ManufacturedForcing { params, solution: msol }), &init).unwrap();
    let e = linf_l2_error(&sol, &msol, biot_core::assembly::FieldKind::Displacement, &d);
    let reference = 7.7356665842e-03;
    assert!((e / reference - 1.0).abs() < 0.1, "{e:e}");
}
