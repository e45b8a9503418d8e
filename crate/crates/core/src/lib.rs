//! Space-time finite elements for dynamic poroelasticity.
//!
//! The solver discretizes the first-order-in-time Biot system for displacement
//! `u`, velocity `v = ∂t u` and pore pressure `p` on the unit square with
//! tensor-product Lagrange elements in space and a continuous Galerkin–Petrov
//! method cG(k) in time. Every temporal integral of the slab problem is
//! evaluated with the (k+1)-point Gauss–Lobatto rule.
//!
//! Module map:
//!
//! * [`mesh`]: structured quadrilateral meshes of (0,1)².
//! * [`fespace`]: scalar and vector `Q_r` spaces, DOF maps, spatial quadrature.
//! * [`timedisc`]: time meshes, Gauss–Lobatto rules, slab trial/test bases.
//! * [`model`]: material parameters, manufactured solution and forcing.
//! * [`assembly`]: sparse operator blocks and the coupled slab system.
//! * [`solver`]: sparse LU and the time-marching driver.
//! * [`projection`]: elliptic projections and temporal interpolation operators.
//! * [`postprocess`]: error norms, convergence orders, energy and tables.
//! * [`study`]: configuration-driven refinement studies and the self test.

pub mod assembly;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod model;
pub mod postprocess;
pub mod projection;
pub mod quadrature;
pub mod solver;
pub mod study;
pub mod timedisc;
pub mod trajectory;

pub use assembly::{OperatorBlocks, SlabLayout, SlabLoads, SlabSystem, SparseMatrix};
pub use error::{Error, Result};
pub use fespace::{FESpace, SpatialQuadrature};
pub use mesh::Mesh;
pub use model::{ManufacturedSolution, MaterialParams};
pub use solver::{Discretization, InitialStrategy, LuSolver, SpaceTimeSolution};
pub use postprocess::{ErrorReport, LevelRecord};
pub use study::{Scheme, StudyConfig};
pub use timedisc::{GaussLobattoRule, SlabBasis, TimeMesh};
pub use trajectory::Trajectory;
