//! Hierarchical (H²) matrices on point clusters: KD-tree cluster trees,
//! admissible block partitions, tensor Chebyshev interpolation with nested
//! transfer matrices and the linear-cost matrix-vector product.

mod cluster;
mod interp;
mod matrix;

pub use cluster::{admissible, partition_blocks, AdmMode, Admissibility, BlockPartition, Cluster, ClusterTree};
pub use interp::{interp_box, ChebInterp};
pub use matrix::{H2Matrix, H2Stats, NestedBasis};
