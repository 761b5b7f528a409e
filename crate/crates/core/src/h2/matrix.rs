//! Nested cluster bases and the stored H² matrix.

use crate::error::{Error, Result};
use crate::geometry::{Box2, Point2};

use super::cluster::{BlockPartition, ClusterTree};
use super::interp::ChebInterp;

/// Cluster basis with explicit leaf matrices and transfer matrices for
/// every non-root cluster.
#[derive(Clone, Debug)]
pub struct NestedBasis {
    pub tree: ClusterTree,
    /// Interpolation box of every cluster.
    pub boxes: Vec<Box2>,
    pub rank: usize,
    /// Leaf matrices, `|cluster| x rank`, row-major; empty for inner clusters.
    pub leaf: Vec<Vec<f64>>,
    /// `rank x rank` matrices `[beta_child][alpha_parent]`; empty for the root.
    pub transfer: Vec<Vec<f64>>,
}

impl NestedBasis {
    /// `leaf_fn(c)` returns the leaf matrix of leaf cluster `c`, or an empty
    /// vector when leaf products are supplied on the fly through
    /// [`NestedBasis::forward_with`] and [`NestedBasis::backward_with`].
    pub fn new(tree: ClusterTree, boxes: Vec<Box2>, interp: &ChebInterp, mut leaf_fn: impl FnMut(usize) -> Vec<f64>) -> Self {
        let rank = interp.rank();
        let n = tree.clusters.len();
        let mut leaf = vec![Vec::new(); n];
        let mut transfer = vec![Vec::new(); n];
        for c in 0..n {
            let cl = &tree.clusters[c];
            if cl.is_leaf() {
                let m = leaf_fn(c);
                debug_assert!(m.is_empty() || m.len() == cl.len() * rank);
                leaf[c] = m;
            }
            if let Some(p) = cl.parent {
                transfer[c] = interp.transfer(&boxes[p], &boxes[c]);
            }
        }
        Self { tree, boxes, rank, leaf, transfer }
    }

    pub fn n_clusters(&self) -> usize {
        self.tree.clusters.len()
    }

    /// Upward pass: expansion coefficients of `x` (tree order) in every cluster.
    pub fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let k = self.rank;
        self.forward_with(x, |c, xs, out| {
            let basis = &self.leaf[c];
            for (i, &xi) in xs.iter().enumerate() {
                if xi != 0.0 {
                    for (o, b) in out.iter_mut().zip(&basis[i * k..(i + 1) * k]) {
                        *o += b * xi;
                    }
                }
            }
        })
    }

    /// Upward pass with a caller-supplied leaf product:
    /// `leaf_t(c, x_c, out)` must add `V_c^T x_c` to `out`.
    pub fn forward_with(&self, x: &[f64], mut leaf_t: impl FnMut(usize, &[f64], &mut [f64])) -> Vec<Vec<f64>> {
        let k = self.rank;
        let mut xhat = vec![vec![0.0; k]; self.n_clusters()];
        for c in (0..self.n_clusters()).rev() {
            let cl = &self.tree.clusters[c];
            match cl.children {
                None => leaf_t(c, &x[cl.start..cl.end], &mut xhat[c]),
                Some(children) => {
                    let mut acc = vec![0.0; k];
                    for ch in children {
                        let e = &self.transfer[ch];
                        for (beta, &v) in xhat[ch].iter().enumerate() {
                            if v != 0.0 {
                                for (a, t) in acc.iter_mut().zip(&e[beta * k..(beta + 1) * k]) {
                                    *a += t * v;
                                }
                            }
                        }
                    }
                    xhat[c] = acc;
                }
            }
        }
        xhat
    }

    /// Downward pass: pushes `yhat` through the transfers and adds the leaf
    /// expansions to `y` (tree order).
    pub fn backward(&self, yhat: &mut [Vec<f64>], y: &mut [f64]) {
        let k = self.rank;
        self.backward_with(yhat, y, |c, coef, ys| {
            let basis = &self.leaf[c];
            for (i, yi) in ys.iter_mut().enumerate() {
                *yi += basis[i * k..(i + 1) * k].iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
            }
        })
    }

    /// Downward pass with a caller-supplied leaf product:
    /// `leaf(c, yhat_c, y_c)` must add `U_c yhat_c` to `y_c`.
    pub fn backward_with(&self, yhat: &mut [Vec<f64>], y: &mut [f64], mut leaf: impl FnMut(usize, &[f64], &mut [f64])) {
        let k = self.rank;
        for c in 0..self.n_clusters() {
            let cl = &self.tree.clusters[c];
            if let Some(p) = cl.parent {
                let (head, tail) = yhat.split_at_mut(c);
                let parent = &head[p];
                let e = &self.transfer[c];
                for (beta, out) in tail[0].iter_mut().enumerate() {
                    let row = &e[beta * k..(beta + 1) * k];
                    *out += row.iter().zip(parent).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            if cl.is_leaf() {
                leaf(c, &yhat[c], &mut y[cl.start..cl.end]);
            }
        }
    }

    pub fn stored_reals(&self) -> usize {
        self.leaf.iter().chain(&self.transfer).map(Vec::len).sum()
    }
}

/// Size counters of an H² matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct H2Stats {
    pub far_blocks: usize,
    pub near_blocks: usize,
    pub stored_reals: usize,
}

/// H² matrix with stored coupling and near-field blocks.
#[derive(Clone, Debug)]
pub struct H2Matrix {
    pub rows: NestedBasis,
    /// `None` for a symmetric matrix sharing the row basis.
    pub cols: Option<NestedBasis>,
    pub partition: BlockPartition,
    /// Per far block, `rank x rank` row-major `[alpha_row][beta_col]`.
    pub coupling: Vec<Vec<f64>>,
    /// Per near block, `|r| x |c|` row-major in tree order.
    pub near: Vec<Vec<f64>>,
}

impl H2Matrix {
    /// Fills the blocks of `partition`.
    ///
    /// `coupling_fn(row_nodes, col_nodes)` returns the kernel matrix on the
    /// interpolation nodes; `near_fn(row_ids, col_ids)` the dense block on
    /// original indices.
    pub fn build(
        rows: NestedBasis,
        cols: Option<NestedBasis>,
        partition: BlockPartition,
        interp: &ChebInterp,
        mut coupling_fn: impl FnMut(&[Point2], &[Point2]) -> Vec<f64>,
        mut near_fn: impl FnMut(&[usize], &[usize]) -> Vec<f64>,
    ) -> Self {
        assert_eq!(partition.symmetric, cols.is_none(), "symmetric partitions share the row basis");
        let colb = cols.as_ref().unwrap_or(&rows);
        let row_nodes: Vec<Vec<Point2>> = rows.boxes.iter().map(|b| interp.nodes(b)).collect();
        let col_nodes: Vec<Vec<Point2>> = match &cols {
            Some(c) => c.boxes.iter().map(|b| interp.nodes(b)).collect(),
            None => row_nodes.clone(),
        };
        let coupling = partition.far.iter().map(|&(r, c)| coupling_fn(&row_nodes[r], &col_nodes[c])).collect();
        let near = partition
            .near
            .iter()
            .map(|&(r, c)| near_fn(rows.tree.indices(r), colb.tree.indices(c)))
            .collect();
        Self { rows, cols, partition, coupling, near }
    }

    pub fn col_basis(&self) -> &NestedBasis {
        self.cols.as_ref().unwrap_or(&self.rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.tree.n_points()
    }

    pub fn n_cols(&self) -> usize {
        self.col_basis().tree.n_points()
    }

    /// `y = H x` in original index order.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols() {
            return Err(Error::DimensionMismatch { expected: self.n_cols(), got: x.len() });
        }
        let cb = self.col_basis();
        let sym = self.partition.symmetric;
        let k = self.rows.rank;
        let xt = cb.tree.to_tree_order(x);
        let xhat = cb.forward(&xt);
        let mut yhat = vec![vec![0.0; k]; self.rows.n_clusters()];
        for (s, &(r, c)) in self.coupling.iter().zip(&self.partition.far) {
            for a in 0..k {
                let row = &s[a * k..(a + 1) * k];
                yhat[r][a] += row.iter().zip(&xhat[c]).map(|(u, v)| u * v).sum::<f64>();
            }
            if sym {
                let xr = &xhat[r];
                for a in 0..k {
                    let v = xr[a];
                    if v != 0.0 {
                        for (o, u) in yhat[c].iter_mut().zip(&s[a * k..(a + 1) * k]) {
                            *o += u * v;
                        }
                    }
                }
            }
        }
        let mut yt = vec![0.0; self.n_rows()];
        self.rows.backward(&mut yhat, &mut yt);
        for (d, &(r, c)) in self.near.iter().zip(&self.partition.near) {
            let rc = &self.rows.tree.clusters[r];
            let cc = &cb.tree.clusters[c];
            let nc = cc.len();
            let xc = &xt[cc.start..cc.end];
            for i in 0..rc.len() {
                let row = &d[i * nc..(i + 1) * nc];
                yt[rc.start + i] += row.iter().zip(xc).map(|(u, v)| u * v).sum::<f64>();
            }
            if sym && r != c {
                let xr = &xt[rc.start..rc.end];
                for (i, &v) in xr.iter().enumerate() {
                    if v != 0.0 {
                        for (o, u) in yt[cc.start..cc.end].iter_mut().zip(&d[i * nc..(i + 1) * nc]) {
                            *o += u * v;
                        }
                    }
                }
            }
        }
        Ok(self.rows.tree.from_tree_order(&yt))
    }

    pub fn stats(&self) -> H2Stats {
        let bases = self.rows.stored_reals() + self.cols.as_ref().map_or(0, NestedBasis::stored_reals);
        let blocks: usize = self.coupling.iter().chain(&self.near).map(Vec::len).sum();
        H2Stats {
            far_blocks: self.partition.far.len(),
            near_blocks: self.partition.near.len(),
            stored_reals: bases + blocks,
        }
    }

    /// Dense matrix implied by the H² representation (for tests on small sizes).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let (n, m) = (self.n_rows(), self.n_cols());
        let mut out = vec![vec![0.0; m]; n];
        let mut e = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = self.matvec(&e).expect("dimensions match");
            for i in 0..n {
                out[i][j] = col[i];
            }
            e[j] = 0.0;
        }
        out
    }
}
