//! Finite element solver for the variable-order fractional diffusion
//! problem on planar domains with near-linear assembly cost.

pub mod density;
pub mod error;
pub mod farfield;
pub mod fields;
pub mod geometry;
pub mod h2;
pub mod harness;
pub mod mesh;
pub mod nearfield;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use fields::{BumpOrder, Diffusivity, Kernel, OrderField, OrderSpec};
pub use geometry::{Box2, Point2};
pub use mesh::{disk_mesh, square_mesh, Mesh, PairType, Region, Triangle};
pub use nearfield::{assemble_b, InterfacePairs, LocalMatrix, SingularRule, Substitution};
pub use quadrature::{gauss01, GaussRule, TriangleRule};
pub use sparse::CsrMatrix;
