//! Heat equations on low-dimensional structures: unions of transversally
//! intersecting segments and discs in `R^3` carrying the sum of the
//! component Hausdorff measures.
//!
//! The crate builds junction-conforming simplicial meshes over such
//! structures, assembles measure-weighted mass/stiffness operators for the
//! junction-coupled P1 space, and provides stationary solves, theta-scheme
//! time stepping, per-class Poincare constants, and an independent spectral
//! oracle (Bessel bases on the disc, cosine bases on the interval).

pub mod assembly;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod meshing;
pub mod scenario;
pub mod solvers;
pub mod sparse;
pub mod spectral;
pub mod vec3;
pub mod vtk;

pub use geometry::{
    compute_junctions, coupling_classes, validate_structure, ComponentShape, GeometryError,
    Junction, JunctionLocus, KernelClasses, ShapeKind, ValidatedStructure,
};
pub use meshing::{build_mesh, interpolate, mesh_quality, DiscreteField, Mesh, MeshError};
pub use sparse::SparseMatrixSym;
