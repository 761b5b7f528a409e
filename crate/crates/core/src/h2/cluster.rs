//! KD-tree cluster trees and block partitions.

use crate::geometry::{Box2, Point2};

#[derive(Clone, Debug)]
pub struct Cluster {
    /// Range of positions in the permuted index list.
    pub start: usize,
    pub end: usize,
    /// Tight bounding box of the cluster's points.
    pub bbox: Box2,
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
    pub level: usize,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary cluster tree built by median splits along the longest box axis.
///
/// Clusters are stored in pre-order, so every parent precedes its children
/// and cluster 0 is the root.
#[derive(Clone, Debug)]
pub struct ClusterTree {
    pub clusters: Vec<Cluster>,
    /// `perm[k]` is the original index of the point at tree position `k`.
    pub perm: Vec<usize>,
    pub leaf_size: usize,
}

impl ClusterTree {
    /// Builds the tree; clusters with more than `leaf_size` points are split.
    ///
    /// # Panics
    /// If `points` is empty or `leaf_size` is zero.
    pub fn build(points: &[Point2], leaf_size: usize) -> Self {
        assert!(!points.is_empty(), "cluster tree needs at least one point");
        assert!(leaf_size > 0, "leaf size must be positive");
        let mut perm: Vec<usize> = (0..points.len()).collect();
        let mut clusters = Vec::new();
        // (start, end, parent, level); processed depth first so ids are pre-order.
        let mut stack = vec![(0, points.len(), None, 0)];
        while let Some((start, end, parent, level)) = stack.pop() {
            let id = clusters.len();
            let bbox = Box2::from_points(perm[start..end].iter().map(|&i| points[i]));
            clusters.push(Cluster { start, end, bbox, children: None, parent, level });
            if let Some(p) = parent {
                let c: &mut Cluster = &mut clusters[p];
                match &mut c.children {
                    None => c.children = Some([id, usize::MAX]),
                    Some(ch) => ch[1] = id,
                }
            }
            if end - start > leaf_size {
                let axis = if bbox.width(0) >= bbox.width(1) { 0 } else { 1 };
                let mid = (end - start) / 2;
                perm[start..end].select_nth_unstable_by(mid, |&a, &b| {
                    points[a].coord(axis).total_cmp(&points[b].coord(axis)).then(a.cmp(&b))
                });
                // Push the right half first so the left child gets the smaller id.
                stack.push((start + mid, end, Some(id), level + 1));
                stack.push((start, start + mid, Some(id), level + 1));
            }
        }
        Self { clusters, perm, leaf_size }
    }

    pub fn n_points(&self) -> usize {
        self.perm.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Original indices of the points of cluster `c`.
    pub fn indices(&self, c: usize) -> &[usize] {
        let cl = &self.clusters[c];
        &self.perm[cl.start..cl.end]
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.clusters.len()).filter(|&c| self.clusters[c].is_leaf())
    }

    pub fn depth(&self) -> usize {
        self.clusters.iter().map(|c| c.level).max().unwrap_or(0) + 1
    }

    /// Gathers `x` (original order) into tree order.
    pub fn to_tree_order(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&i| x[i]).collect()
    }

    /// Scatters `y` (tree order) back into original order.
    pub fn from_tree_order(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = y[k];
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmMode {
    /// `lambda * |C - C'| >= (D + D') / 2` on box centers and diagonals.
    Geometric,
    /// `max(D, D') <= lambda * dist`.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility {
    pub lambda: f64,
    pub mode: AdmMode,
    /// Boxes closer than this are never admissible.
    pub guard: f64,
}

impl Admissibility {
    pub fn new(lambda: f64, mode: AdmMode) -> Self {
        Self { lambda, mode, guard: 0.0 }
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    /// Admissibility of two boxes. Boxes that touch or overlap are never
    /// admissible, whatever `lambda` is.
    pub fn admissible(&self, a: &Box2, b: &Box2) -> bool {
        let dist = a.distance(b);
        if dist <= 0.0 || dist < self.guard {
            return false;
        }
        admissible(a, b, self.lambda, self.mode)
    }
}

/// The bare admissibility formula of the selected mode.
pub fn admissible(a: &Box2, b: &Box2, lambda: f64, mode: AdmMode) -> bool {
    match mode {
        AdmMode::Geometric => lambda * a.center().dist(b.center()) >= 0.5 * (a.diameter() + b.diameter()),
        AdmMode::Strict => a.diameter().max(b.diameter()) <= lambda * a.distance(b),
    }
}

/// Far (admissible) and near (inadmissible leaf) cluster pairs.
#[derive(Clone, Debug, Default)]
pub struct BlockPartition {
    pub far: Vec<(usize, usize)>,
    pub near: Vec<(usize, usize)>,
    /// Only pairs on or above the block diagonal are listed; the rest follow
    /// by transposition. Requires identical row and column trees.
    pub symmetric: bool,
}

impl BlockPartition {
    /// Number of matrix entries covered, counting mirrored blocks of a
    /// symmetric partition twice.
    pub fn coverage(&self, rows: &ClusterTree, cols: &ClusterTree) -> u128 {
        self.far
            .iter()
            .chain(&self.near)
            .map(|&(r, c)| {
                let n = (rows.clusters[r].len() * cols.clusters[c].len()) as u128;
                if self.symmetric && r != c {
                    2 * n
                } else {
                    n
                }
            })
            .sum()
    }
}

/// Recursive block partition starting from the root pair. Admissible pairs
/// are kept whole; inadmissible pairs are split (only the non-leaf side if
/// one of them is a leaf) until both are leaves.
///
/// `row_boxes`/`col_boxes` are indexed by cluster id. With `symmetric` the
/// trees must be the same and only pairs `(r, c)` not below the diagonal are
/// produced.
pub fn partition_blocks(
    rows: &ClusterTree,
    row_boxes: &[Box2],
    cols: &ClusterTree,
    col_boxes: &[Box2],
    adm: &Admissibility,
    symmetric: bool,
) -> BlockPartition {
    let mut part = BlockPartition { symmetric, ..Default::default() };
    let mut stack = vec![(rows.root(), cols.root())];
    while let Some((r, c)) = stack.pop() {
        if adm.admissible(&row_boxes[r], &col_boxes[c]) {
            part.far.push((r, c));
            continue;
        }
        let rc = rows.clusters[r].children;
        let cc = cols.clusters[c].children;
        if rc.is_none() && cc.is_none() {
            part.near.push((r, c));
            continue;
        }
        let rs: Vec<usize> = rc.map_or(vec![r], |c| c.to_vec());
        let cs: Vec<usize> = cc.map_or(vec![c], |c| c.to_vec());
        for &a in rs.iter().rev() {
            for &b in cs.iter().rev() {
                if symmetric && r == c && a > b {
                    continue;
                }
                stack.push((a, b));
            }
        }
    }
    part
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(lo: (f64, f64), hi: (f64, f64)) -> Box2 {
        Box2::new(Point2::new(lo.0, lo.1), Point2::new(hi.0, hi.1))
    }

    #[test]
    fn single_point_is_one_leaf() {
        let t = ClusterTree::build(&[Point2::new(0.3, 0.1)], 128);
        assert_eq!(t.clusters.len(), 1);
        assert!(t.clusters[0].is_leaf());
    }

    #[test]
    fn collinear_points_split_at_median() {
        let pts: Vec<Point2> = (0..256).map(|i| Point2::new(i as f64, 0.0)).collect();
        let t = ClusterTree::build(&pts, 128);
        let leaves: Vec<usize> = t.leaves().collect();
        assert_eq!(leaves.len(), 2);
        let left = t.indices(leaves[0]);
        assert_eq!(left.len(), 128);
        assert!(left.iter().all(|&i| i < 128));
    }

    #[test]
    fn admissibility_examples() {
        let a = unit((0.0, 0.0), (1.0, 1.0));
        let b = unit((3.0, 3.0), (4.0, 4.0));
        assert!(admissible(&a, &b, 0.75, AdmMode::Geometric));
        assert!(!Admissibility::new(0.75, AdmMode::Geometric).admissible(&a, &a));
        assert!(!Admissibility::new(0.75, AdmMode::Strict).admissible(&a, &a));
        let c = unit((1.5, 1.5), (2.5, 2.5));
        assert!(!admissible(&a, &c, 0.75, AdmMode::Strict));
    }

    #[test]
    fn far_apart_unit_clusters_form_one_far_block() {
        let left: Vec<Point2> = (0..4).map(|i| Point2::new(0.1 * i as f64, 0.0)).collect();
        let right: Vec<Point2> = (0..4).map(|i| Point2::new(10.0 + 0.1 * i as f64, 0.0)).collect();
        let tl = ClusterTree::build(&left, 8);
        let tr = ClusterTree::build(&right, 8);
        let bl: Vec<Box2> = tl.clusters.iter().map(|c| c.bbox).collect();
        let br: Vec<Box2> = tr.clusters.iter().map(|c| c.bbox).collect();
        let p = partition_blocks(&tl, &bl, &tr, &br, &Admissibility::new(0.75, AdmMode::Geometric), false);
        assert_eq!(p.far, vec![(0, 0)]);
        assert!(p.near.is_empty());
    }
}
