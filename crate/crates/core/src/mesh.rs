//! Conforming triangulations of the computational domain.
//!
//! A mesh covers the interior region, where the unknowns live, and a layer of
//! exterior elements around it. Vertices are numbered so that the free
//! degrees of freedom (vertices strictly inside the interior region) come
//! first. Meshes are refined uniformly by splitting every triangle into four.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::quadrature::signed_area;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Interior,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    /// Vertex indices in counter-clockwise order.
    pub v: [usize; 3],
    pub region: Region,
}

/// Curved geometry honoured by refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurvedBoundary {
    None,
    /// Interface circle of radius `interface` and outer circle of radius
    /// `outer`, both centred at the origin. Edges touching exterior elements
    /// are bisected in polar coordinates.
    Disk { interface: f64, outer: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairType {
    Identical,
    SharedEdge,
    SharedVertex,
    Separated,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<Triangle>,
    /// Vertices `0..n_free` are the degrees of freedom.
    pub n_free: usize,
    pub level: usize,
    /// Largest element diameter.
    pub h: f64,
    pub curved: CurvedBoundary,
    /// For refined meshes, the index of the coarse triangle each element came from.
    pub parent: Option<Vec<usize>>,
    vertex_elements: Vec<Vec<usize>>,
    patches: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh from raw vertices and triangles.
    ///
    /// Triangles are reoriented counter-clockwise, degenerate elements are
    /// rejected and vertices are renumbered so that free vertices come first
    /// (preserving relative order within each group).
    pub fn from_parts(
        vertices: Vec<Point2>,
        mut triangles: Vec<Triangle>,
        curved: CurvedBoundary,
        level: usize,
    ) -> Result<Mesh> {
        if triangles.is_empty() {
            return Err(Error::InvalidGeometry("mesh has no triangles".into()));
        }
        let nv = vertices.len();
        for (k, t) in triangles.iter_mut().enumerate() {
            if t.v.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidGeometry(format!("triangle {k} references a missing vertex")));
            }
            let [a, b, c] = t.v.map(|i| vertices[i]);
            let area = signed_area(a, b, c);
            let scale = (b - a).norm2().max((c - a).norm2());
            if area.abs() <= 1e-14 * scale {
                return Err(Error::InvalidGeometry(format!("triangle {k} is degenerate")));
            }
            if area < 0.0 {
                t.v.swap(1, 2);
            }
        }

        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for (a, b) in edges_of(&t.v) {
                *edge_count.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        if edge_count.values().any(|&c| c > 2) {
            return Err(Error::InvalidGeometry("an edge is shared by more than two triangles".into()));
        }
        let mut on_boundary = vec![false; nv];
        for (&(a, b), &c) in &edge_count {
            if c == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        let mut used = vec![false; nv];
        let mut touches_exterior = vec![false; nv];
        for t in &triangles {
            for &i in &t.v {
                used[i] = true;
                if t.region == Region::Exterior {
                    touches_exterior[i] = true;
                }
            }
        }
        if used.iter().any(|u| !u) {
            return Err(Error::InvalidGeometry("mesh has isolated vertices".into()));
        }
        let is_free = |i: usize| !touches_exterior[i] && !on_boundary[i];

        let mut order: Vec<usize> = (0..nv).filter(|&i| is_free(i)).collect();
        let n_free = order.len();
        order.extend((0..nv).filter(|&i| !is_free(i)));
        let mut new_index = vec![0; nv];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let vertices: Vec<Point2> = order.iter().map(|&i| vertices[i]).collect();
        for t in &mut triangles {
            t.v = t.v.map(|i| new_index[i]);
        }

        let mut mesh = Mesh {
            vertices,
            triangles,
            n_free,
            level,
            h: 0.0,
            curved,
            parent: None,
            vertex_elements: vec![],
            patches: vec![],
        };
        mesh.build_adjacency();
        Ok(mesh)
    }

    fn build_adjacency(&mut self) {
        let mut ve = vec![Vec::new(); self.vertices.len()];
        for (k, t) in self.triangles.iter().enumerate() {
            for &i in &t.v {
                ve[i].push(k);
            }
        }
        let patches = self
            .triangles
            .iter()
            .map(|t| {
                let mut p: Vec<usize> = t.v.iter().flat_map(|&i| ve[i].iter().copied()).collect();
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect();
        self.h = (0..self.triangles.len())
            .map(|k| self.diameter(k))
            .fold(0.0, f64::max);
        self.vertex_elements = ve;
        self.patches = patches;
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_free(&self, v: usize) -> bool {
        v < self.n_free
    }

    pub fn element_vertices(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].v.map(|i| self.vertices[i])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_vertices(t);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_vertices(t);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    pub fn is_interior(&self, t: usize) -> bool {
        self.triangles[t].region == Region::Interior
    }

    pub fn interior_elements(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.triangles.len()).filter(|&t| self.is_interior(t))
    }

    /// Elements containing vertex `v`.
    pub fn support(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    /// Elements sharing at least one vertex with `t` (including `t`), sorted.
    pub fn patch(&self, t: usize) -> &[usize] {
        &self.patches[t]
    }

    pub fn shared_vertex_count(&self, t1: usize, t2: usize) -> usize {
        let a = &self.triangles[t1].v;
        let b = &self.triangles[t2].v;
        a.iter().filter(|i| b.contains(i)).count()
    }

    pub fn touching(&self, t1: usize, t2: usize) -> bool {
        let a = &self.triangles[t1].v;
        let b = &self.triangles[t2].v;
        a.iter().any(|i| b.contains(i))
    }

    pub fn classify_pair(&self, t1: usize, t2: usize) -> PairType {
        match self.shared_vertex_count(t1, t2) {
            3 => PairType::Identical,
            2 => PairType::SharedEdge,
            1 => PairType::SharedVertex,
            _ => PairType::Separated,
        }
    }

    /// Uniform refinement: every triangle is split into four by its edge
    /// midpoints (polar midpoints in the annulus of a disk mesh).
    pub fn refine(&self) -> Result<Mesh> {
        let mut vertices = self.vertices.clone();
        let mut edge_regions: HashMap<(usize, usize), Vec<Region>> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in edges_of(&t.v) {
                edge_regions.entry(edge_key(a, b)).or_default().push(t.region);
            }
        }
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut keys: Vec<_> = edge_regions.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let regions = &edge_regions[&key];
            let (p, q) = (vertices[key.0], vertices[key.1]);
            let mut m = (p + q) * 0.5;
            if let CurvedBoundary::Disk { .. } = self.curved {
                // Edges of the annulus are split in polar coordinates, so
                // interface and outer boundary midpoints land on their circles
                // and the annulus stays a refined polar grid.
                if regions.contains(&Region::Exterior) {
                    let radius = 0.5 * (p.norm() + q.norm());
                    let dir = p * (1.0 / p.norm()) + q * (1.0 / q.norm());
                    m = dir * (radius / dir.norm());
                }
            }
            midpoint.insert(key, vertices.len());
            vertices.push(m);
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut parent = Vec::with_capacity(4 * self.triangles.len());
        for (k, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = t.v;
            let ab = midpoint[&edge_key(a, b)];
            let bc = midpoint[&edge_key(b, c)];
            let ca = midpoint[&edge_key(c, a)];
            for v in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(Triangle { v, region: t.region });
                parent.push(k);
            }
        }
        let mut fine = Mesh::from_parts(vertices, triangles, self.curved, self.level + 1)?;
        fine.parent = Some(parent);
        Ok(fine)
    }

    pub fn refine_times(&self, times: usize) -> Result<Mesh> {
        let mut m = self.clone();
        for _ in 0..times {
            m = m.refine()?;
        }
        Ok(m)
    }

    /// Writes the mesh in the plain text format:
    /// a header `n_nodes n_triangles n_free`, one `x y` line per vertex,
    /// then one `v0 v1 v2 region` line per triangle (region 0 = interior,
    /// 1 = exterior).
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_vertices(), self.n_triangles(), self.n_free)?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", p.x, p.y)?;
        }
        for t in &self.triangles {
            let r = match t.region {
                Region::Interior => 0,
                Region::Exterior => 1,
            };
            writeln!(w, "{} {} {} {}", t.v[0], t.v[1], t.v[2], r)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Mesh> {
        let mut lines = r.lines();
        let mut next = || -> Result<Vec<String>> {
            loop {
                match lines.next() {
                    Some(l) => {
                        let l = l?;
                        let toks: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
                        if !toks.is_empty() {
                            return Ok(toks);
                        }
                    }
                    None => return Err(Error::Parse("unexpected end of mesh file".into())),
                }
            }
        };
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse(format!("expected integer, found {s:?}")))
        };
        let real = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse(format!("expected number, found {s:?}")))
        };
        let head = next()?;
        if head.len() != 3 {
            return Err(Error::Parse("header must be `n_nodes n_triangles n_free`".into()));
        }
        let (nv, nt, nf) = (num(&head[0])?, num(&head[1])?, num(&head[2])?);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let t = next()?;
            if t.len() != 2 {
                return Err(Error::Parse("vertex line must have two coordinates".into()));
            }
            vertices.push(Point2::new(real(&t[0])?, real(&t[1])?));
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let t = next()?;
            if t.len() != 4 {
                return Err(Error::Parse("triangle line must have four integers".into()));
            }
            let region = match num(&t[3])? {
                0 => Region::Interior,
                1 => Region::Exterior,
                other => return Err(Error::Parse(format!("unknown region {other}"))),
            };
            triangles.push(Triangle { v: [num(&t[0])?, num(&t[1])?, num(&t[2])?], region });
        }
        let mesh = Mesh::from_parts(vertices, triangles, CurvedBoundary::None, 0)?;
        if mesh.n_free != nf {
            return Err(Error::Parse(format!(
                "header declares {nf} free vertices but the mesh has {}",
                mesh.n_free
            )));
        }
        Ok(mesh)
    }

    /// Locates every vertex of this (fine) mesh in the coarse mesh it was
    /// refined from: returns the coarse triangle and barycentric coordinates.
    pub fn locate_in_parent(&self, coarse: &Mesh) -> Result<Vec<(usize, [f64; 3])>> {
        let parent = self.parent.as_ref().ok_or(Error::IncompatibleMeshes)?;
        if parent.len() != self.n_triangles() || 4 * coarse.n_triangles() != self.n_triangles() {
            return Err(Error::IncompatibleMeshes);
        }
        let mut out = vec![(usize::MAX, [0.0; 3]); self.n_vertices()];
        for (k, t) in self.triangles.iter().enumerate() {
            let c = parent[k];
            for &v in &t.v {
                if out[v].0 == usize::MAX {
                    out[v] = (c, barycentric(&coarse.element_vertices(c), self.vertices[v]));
                }
            }
        }
        Ok(out)
    }
}

/// Barycentric coordinates of `p` with respect to triangle `v`.
pub fn barycentric(v: &[Point2; 3], p: Point2) -> [f64; 3] {
    let area = signed_area(v[0], v[1], v[2]);
    let l1 = signed_area(v[0], p, v[2]) / area;
    let l2 = signed_area(v[0], v[1], p) / area;
    [1.0 - l1 - l2, l1, l2]
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn edges_of(v: &[usize; 3]) -> [(usize, usize); 3] {
    [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]
}

/// Square domain `(-outer, outer)^2` with interior region `(-inner, inner)^2`.
///
/// The coarse mesh is a uniform quad grid whose spacing divides both
/// half-widths, each quad split by its rising diagonal; `level` uniform
/// refinements follow.
pub fn square_mesh(outer: f64, inner: f64, level: usize) -> Result<Mesh> {
    if !(inner > 0.0 && outer > inner) {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < inner < outer, got inner={inner}, outer={outer}"
        )));
    }
    let ratio = outer / inner;
    let k = (1..=64)
        .find(|&k| {
            let cells = ratio * k as f64;
            (cells - cells.round()).abs() < 1e-9
        })
        .ok_or_else(|| {
            Error::InvalidGeometry(format!("half-widths {outer} and {inner} share no common grid spacing"))
        })?;
    let spacing = inner / k as f64;
    let n = (2.0 * outer / spacing).round() as usize;
    let coord = |i: usize| -outer + spacing * i as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(coord(i), coord(j)));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = Point2::new(coord(i) + 0.5 * spacing, coord(j) + 0.5 * spacing);
            let region = if c.x.abs() < inner && c.y.abs() < inner {
                Region::Interior
            } else {
                Region::Exterior
            };
            let (p00, p10, p11, p01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push(Triangle { v: [p00, p10, p11], region });
            triangles.push(Triangle { v: [p00, p11, p01], region });
        }
    }
    Mesh::from_parts(vertices, triangles, CurvedBoundary::None, 0)?.refine_times(level)
}

/// Disk of radius `outer` with interior region the disk of radius `interface`.
///
/// The coarse mesh has a centre vertex, rings of 6 and 12 vertices inside the
/// interior disk and one layer of 12 quads (24 triangles) in the annulus.
pub fn disk_mesh(interface: f64, outer: f64, level: usize) -> Result<Mesh> {
    if !(interface > 0.0 && outer > interface) {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < interface < outer, got {interface} and {outer}"
        )));
    }
    if outer - interface < 0.01 * interface {
        return Err(Error::InvalidGeometry(format!(
            "annulus of width {} is too thin for one element layer",
            outer - interface
        )));
    }
    use std::f64::consts::PI;
    let ring = |r: f64, n: usize| -> Vec<Point2> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect()
    };
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    vertices.extend(ring(0.5 * interface, 6));
    vertices.extend(ring(interface, 12));
    vertices.extend(ring(outer, 12));
    let a = |k: usize| 1 + k % 6;
    let b = |k: usize| 7 + k % 12;
    let c = |k: usize| 19 + k % 12;
    let mut triangles = Vec::with_capacity(48);
    let int = Region::Interior;
    for k in 0..6 {
        triangles.push(Triangle { v: [0, a(k), a(k + 1)], region: int });
    }
    for k in 0..6 {
        triangles.push(Triangle { v: [a(k), b(2 * k), b(2 * k + 1)], region: int });
        triangles.push(Triangle { v: [a(k), b(2 * k + 1), a(k + 1)], region: int });
        triangles.push(Triangle { v: [a(k + 1), b(2 * k + 1), b(2 * k + 2)], region: int });
    }
    for j in 0..12 {
        triangles.push(Triangle { v: [b(j), c(j), c(j + 1)], region: Region::Exterior });
        triangles.push(Triangle { v: [b(j), c(j + 1), b(j + 1)], region: Region::Exterior });
    }
    Mesh::from_parts(vertices, triangles, CurvedBoundary::Disk { interface, outer }, 0)?
        .refine_times(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_mesh_counts() {
        for level in 0..4 {
            let m = square_mesh(2.0, 1.0, level).unwrap();
            assert_eq!(m.n_triangles(), 32 << (2 * level));
            let k = 2usize << level;
            assert_eq!(m.n_free, (k - 1) * (k - 1));
            assert!((m.h - 2f64.sqrt() / (1 << level) as f64).abs() < 1e-12);
        }
        assert_eq!(square_mesh(2.0, 1.0, 6).unwrap().n_free, 16129);
    }

    #[test]
    fn square_rejects_bad_dimensions() {
        assert!(square_mesh(1.0, 2.0, 0).is_err());
        assert!(square_mesh(2.0, 0.0, 0).is_err());
        assert!(square_mesh(std::f64::consts::PI, 1.0, 0).is_err());
    }

    #[test]
    fn structured_patch_and_support_sizes() {
        let m = square_mesh(2.0, 1.0, 3).unwrap();
        let centre = (0..m.n_free)
            .find(|&v| m.vertices[v].norm() < 1e-12)
            .unwrap();
        assert_eq!(m.support(centre).len(), 6);
        let t = m.support(centre)[0];
        assert_eq!(m.patch(t).len(), 13);
    }

    #[test]
    fn disk_mesh_geometry() {
        let m = disk_mesh(1.0, 1.1, 3).unwrap();
        assert_eq!(m.n_triangles(), 48 * 64);
        for t in 0..m.n_triangles() {
            assert!(m.area(t) > 0.0);
            let [a, b, c] = m.element_vertices(t);
            let r = a.norm().max(b.norm()).max(c.norm());
            assert!(r <= 1.1 + 1e-12);
            if m.is_interior(t) {
                assert!(r <= 1.0 + 1e-12);
            }
        }
        for v in m.n_free..m.n_vertices() {
            let r = m.vertices[v].norm();
            assert!(r >= 1.0 - 1e-12);
        }
        assert!(disk_mesh(1.0, 1.005, 0).is_err());
        assert!(disk_mesh(1.0, 0.9, 0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = square_mesh(2.0, 1.0, 1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = Mesh::read_text(&buf[..]).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.n_free, m.n_free);
        let bad = b"3 1 0\n0 0\n1 0\n";
        assert!(Mesh::read_text(&bad[..]).is_err());
    }

    #[test]
    fn pair_classification() {
        let m = square_mesh(2.0, 1.0, 0).unwrap();
        for t1 in 0..m.n_triangles() {
            assert_eq!(m.classify_pair(t1, t1), PairType::Identical);
            for &t2 in m.patch(t1) {
                assert_ne!(m.classify_pair(t1, t2), PairType::Separated);
            }
        }
    }

    #[test]
    fn parent_location_reproduces_vertices() {
        let c = disk_mesh(1.0, 1.1, 1).unwrap();
        let f = c.refine().unwrap();
        let loc = f.locate_in_parent(&c).unwrap();
        for (v, (t, l)) in loc.iter().enumerate() {
            let p = c.element_vertices(*t);
            let q = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
            // Midpoints projected onto a circle move off the coarse chord.
            assert!(q.dist(f.vertices[v]) < 0.02);
        }
        assert!(f.locate_in_parent(&f).is_err());
    }
}
