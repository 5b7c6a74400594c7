//! Conforming triangulations of convex polygons.
//!
//! Triangles are stored counter-clockwise as `[newest, a, b]`: the first
//! vertex is the newest vertex and `(a, b)` is the refinement edge used by
//! newest-vertex bisection. Meshes are immutable; refinement and coarsening
//! produce a new mesh that shares lineage with its parent through the
//! refinement forest.

mod io;
mod refine;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use io::{read_mesh, write_mesh};
pub(crate) use refine::Forest;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Identity stamp carried by fields so that mixing meshes is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshId(u64);

/// A convex polygon given by its corners in counter-clockwise order.
/// Side `i` runs from corner `i` to corner `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    corners: Vec<Point>,
}

impl Polygon {
    pub fn new(corners: Vec<Point>) -> Result<Self> {
        if corners.len() < 3 {
            return Err(Error::InvalidMesh("polygon needs at least three corners".into()));
        }
        let n = corners.len();
        for i in 0..n {
            let (a, b, c) = (corners[i], corners[(i + 1) % n], corners[(i + 2) % n]);
            if cross(sub(b, a), sub(c, b)) <= 0.0 {
                return Err(Error::InvalidMesh("polygon must be strictly convex and counter-clockwise".into()));
            }
        }
        Ok(Polygon { corners })
    }

    pub fn unit_square() -> Self {
        Polygon { corners: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }
    }

    pub fn corners(&self) -> &[Point] {
        &self.corners
    }

    pub fn num_sides(&self) -> usize {
        self.corners.len()
    }

    pub fn side(&self, i: usize) -> (Point, Point) {
        (self.corners[i], self.corners[(i + 1) % self.corners.len()])
    }

    pub fn side_length(&self, i: usize) -> f64 {
        let (a, b) = self.side(i);
        norm(sub(b, a))
    }

    /// Unit tangent in the counter-clockwise direction.
    pub fn tangent(&self, i: usize) -> Point {
        let (a, b) = self.side(i);
        let d = sub(b, a);
        let l = norm(d);
        [d[0] / l, d[1] / l]
    }

    pub fn outward_normal(&self, i: usize) -> Point {
        let t = self.tangent(i);
        [t[1], -t[0]]
    }

    /// Arc length of `p` along side `i`, measured from the side's first corner.
    pub fn arc_length(&self, i: usize, p: Point) -> f64 {
        let (a, _) = self.side(i);
        dot(sub(p, a), self.tangent(i))
    }

    pub fn point_on_side(&self, i: usize, s: f64) -> Point {
        let (a, _) = self.side(i);
        let t = self.tangent(i);
        [a[0] + s * t[0], a[1] + s * t[1]]
    }

    /// Sides that contain `p` (one for a side interior, two at a corner).
    pub fn sides_containing(&self, p: Point) -> Vec<usize> {
        let scale = self.corners.iter().map(|c| c[0].abs().max(c[1].abs())).fold(1.0, f64::max);
        let tol = 1e-10 * scale;
        (0..self.num_sides())
            .filter(|&i| {
                let (a, _) = self.side(i);
                let dist = dot(sub(p, a), self.outward_normal(i)).abs();
                let s = self.arc_length(i, p);
                dist <= tol && s >= -tol && s <= self.side_length(i) + tol
            })
            .collect()
    }

    pub fn area(&self) -> f64 {
        let n = self.corners.len();
        0.5 * (0..n).map(|i| cross(self.corners[i], self.corners[(i + 1) % n])).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints in counter-clockwise order along the boundary.
    pub vertices: [usize; 2],
    pub triangle: usize,
    pub normal: Point,
    pub length: f64,
    pub side: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorEdge {
    pub vertices: [usize; 2],
    /// `triangles[0]` sees the edge as `vertices[0] → vertices[1]`.
    pub triangles: [usize; 2],
    pub length: f64,
}

/// Refinement and coarsening requests, as triangle indices of one mesh.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkSet {
    pub refine: BTreeSet<usize>,
    pub coarsen: BTreeSet<usize>,
}

impl MarkSet {
    pub fn refine_all(mesh: &TriMesh) -> Self {
        MarkSet { refine: (0..mesh.num_triangles()).collect(), coarsen: BTreeSet::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.refine.is_empty() && self.coarsen.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    id: MeshId,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    interior_edges: Vec<InteriorEdge>,
    patch_offsets: Vec<usize>,
    patch_triangles: Vec<usize>,
    vertex_sides: Vec<Vec<usize>>,
    polygon: Polygon,
    theta: f64,
    forest: Arc<Forest>,
    leaf_nodes: Vec<usize>,
    pool_ids: Vec<usize>,
}

impl TriMesh {
    /// Builds a mesh from vertices and counter-clockwise triangles. The first
    /// vertex of each triangle is taken as its newest vertex.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, polygon: Polygon) -> Result<Self> {
        let forest = Forest::from_roots(&vertices, &triangles);
        let leaf_nodes = (0..triangles.len()).collect();
        let pool_ids = (0..vertices.len()).collect();
        let mut mesh = Self::assemble(vertices, triangles, polygon, Arc::new(forest), leaf_nodes, pool_ids)?;
        Arc::get_mut(&mut mesh.forest).expect("fresh forest").set_root_theta(mesh.theta);
        Ok(mesh)
    }

    /// Structured mesh of `[0, 1]²` with `n × n` cells, each split along the
    /// bottom-left to top-right diagonal. The right-angle vertex is the newest
    /// vertex, so the hypotenuse is the refinement edge of every triangle.
    pub fn structured_unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("subdivision count must be positive".into()));
        }
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let x = if i == n { 1.0 } else { i as f64 * h };
                let y = if j == n { 1.0 } else { j as f64 * h };
                vertices.push([x, y]);
            }
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([b, c, a]);
                triangles.push([d, a, c]);
            }
        }
        TriMesh::new(vertices, triangles, Polygon::unit_square())
    }

    pub(crate) fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        polygon: Polygon,
        forest: Arc<Forest>,
        leaf_nodes: Vec<usize>,
        pool_ids: Vec<usize>,
    ) -> Result<Self> {
        let nv = vertices.len();
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {k} references a missing vertex")));
            }
            if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
                return Err(Error::DegenerateTriangle(k));
            }
        }

        // Edge table by sorting (min, max, triangle, local orientation).
        let mut half: Vec<(usize, usize, usize, bool)> = Vec::with_capacity(3 * triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            for l in 0..3 {
                let (a, b) = (t[l], t[(l + 1) % 3]);
                half.push((a.min(b), a.max(b), k, a < b));
            }
        }
        half.sort_unstable();
        let mut boundary_edges = Vec::new();
        let mut interior_edges = Vec::new();
        let mut i = 0;
        while i < half.len() {
            let mut j = i + 1;
            while j < half.len() && half[j].0 == half[i].0 && half[j].1 == half[i].1 {
                j += 1;
            }
            let (lo, hi) = (half[i].0, half[i].1);
            let length = norm(sub(vertices[hi], vertices[lo]));
            match j - i {
                1 => {
                    let (_, _, k, forward) = half[i];
                    let verts = if forward { [lo, hi] } else { [hi, lo] };
                    let d = sub(vertices[verts[1]], vertices[verts[0]]);
                    let normal = [d[1] / length, -d[0] / length];
                    let mid = [0.5 * (vertices[lo][0] + vertices[hi][0]), 0.5 * (vertices[lo][1] + vertices[hi][1])];
                    let side = *polygon.sides_containing(mid).first().ok_or_else(|| {
                        Error::InvalidMesh(format!("boundary edge ({lo}, {hi}) is not on the domain boundary"))
                    })?;
                    boundary_edges.push(BoundaryEdge { vertices: verts, triangle: k, normal, length, side });
                }
                2 => {
                    let (a, b) = (half[i], half[i + 1]);
                    if a.3 == b.3 {
                        return Err(Error::InvalidMesh(format!("edge ({lo}, {hi}) has inconsistent orientation")));
                    }
                    let triangles = if a.3 { [a.2, b.2] } else { [b.2, a.2] };
                    interior_edges.push(InteriorEdge { vertices: [lo, hi], triangles, length });
                }
                _ => return Err(Error::InvalidMesh(format!("edge ({lo}, {hi}) shared by more than two triangles"))),
            }
            i = j;
        }

        let mut counts = vec![0usize; nv + 1];
        for t in &triangles {
            for &v in t {
                counts[v + 1] += 1;
            }
        }
        for v in 0..nv {
            counts[v + 1] += counts[v];
        }
        let patch_offsets = counts.clone();
        let mut fill = counts;
        let mut patch_triangles = vec![0usize; patch_offsets[nv]];
        for (k, t) in triangles.iter().enumerate() {
            for &v in t {
                patch_triangles[fill[v]] = k;
                fill[v] += 1;
            }
        }
        if (0..nv).any(|v| patch_offsets[v] == patch_offsets[v + 1]) {
            return Err(Error::InvalidMesh("mesh has isolated vertices".into()));
        }

        let mut on_boundary = vec![false; nv];
        for e in &boundary_edges {
            on_boundary[e.vertices[0]] = true;
            on_boundary[e.vertices[1]] = true;
        }
        let vertex_sides =
            (0..nv).map(|v| if on_boundary[v] { polygon.sides_containing(vertices[v]) } else { Vec::new() }).collect();

        let theta =
            triangles.iter().map(|t| shape_ratio(vertices[t[0]], vertices[t[1]], vertices[t[2]])).fold(0.0, f64::max);

        Ok(TriMesh {
            id: MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed)),
            vertices,
            triangles,
            boundary_edges,
            interior_edges,
            patch_offsets,
            patch_triangles,
            vertex_sides,
            polygon,
            theta,
            forest,
            leaf_nodes,
            pool_ids,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, k: usize) -> [usize; 3] {
        self.triangles[k]
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        self.triangles[k].map(|v| self.vertices[v])
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.interior_edges
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    /// Polygon sides a vertex lies on; empty for interior vertices.
    pub fn vertex_sides(&self, v: usize) -> &[usize] {
        &self.vertex_sides[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        !self.vertex_sides[v].is_empty()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| self.is_boundary_vertex(v)).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| !self.is_boundary_vertex(v)).collect()
    }

    /// Triangles incident to `v`.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.patch_triangles[self.patch_offsets[v]..self.patch_offsets[v + 1]]
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|k| self.area(k)).sum()
    }

    /// Diameter `h_K` (longest edge).
    pub fn diameter(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        norm(sub(b, a)).max(norm(sub(c, b))).max(norm(sub(a, c)))
    }

    pub fn centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.triangle_points(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three P1 basis functions on triangle `k`, in the
    /// triangle's vertex order.
    pub fn basis_gradients(&self, k: usize) -> [Point; 3] {
        let p = self.triangle_points(k);
        let two_area = 2.0 * signed_area(p[0], p[1], p[2]);
        std::array::from_fn(|i| {
            let (pj, pk) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            [(pj[1] - pk[1]) / two_area, (pk[0] - pj[0]) / two_area]
        })
    }

    /// `(h_max, h_min)` over all triangles.
    pub fn mesh_size(&self) -> (f64, f64) {
        (0..self.num_triangles())
            .map(|k| self.diameter(k))
            .fold((0.0, f64::INFINITY), |(hi, lo), h| (hi.max(h), lo.min(h)))
    }

    /// Largest `h_K / ρ_K`, with `ρ_K` the inscribed-circle diameter.
    pub fn shape_regularity(&self) -> f64 {
        self.theta
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .map(|k| {
                let p = self.triangle_points(k);
                (0..3)
                    .map(|i| {
                        let u = sub(p[(i + 1) % 3], p[i]);
                        let w = sub(p[(i + 2) % 3], p[i]);
                        (dot(u, w) / (norm(u) * norm(w))).clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertices of the `ring`-th neighbourhood of `z` (including `z`), sorted.
    pub fn vertex_patch(&self, z: usize, ring: usize) -> Vec<usize> {
        let mut set: BTreeSet<usize> = BTreeSet::from([z]);
        let mut frontier = vec![z];
        for _ in 0..ring {
            let mut next = Vec::new();
            for &v in &frontier {
                for &k in self.vertex_triangles(v) {
                    for &w in &self.triangles[k] {
                        if set.insert(w) {
                            next.push(w);
                        }
                    }
                }
            }
            frontier = next;
        }
        set.into_iter().collect()
    }

    /// Checks orientation, manifoldness and conformity. Meshes built through
    /// the public constructors always pass; the check exists for tests and
    /// post-refinement assertions.
    pub fn check_conformity(&self) -> Result<()> {
        for k in 0..self.num_triangles() {
            if self.area(k) <= 0.0 {
                return Err(Error::DegenerateTriangle(k));
            }
        }
        // Hanging nodes: a vertex lying in the interior of some edge.
        for e in &self.interior_edges {
            let (a, b) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
            for &k in &e.triangles {
                for &v in &self.triangles[k] {
                    if v != e.vertices[0] && v != e.vertices[1] && on_open_segment(self.vertices[v], a, b) {
                        return Err(Error::InvalidMesh(format!("hanging node {v}")));
                    }
                }
            }
        }
        let boundary_len: f64 = self.boundary_edges.iter().map(|e| e.length).sum();
        let perimeter: f64 = (0..self.polygon.num_sides()).map(|i| self.polygon.side_length(i)).sum();
        if (boundary_len - perimeter).abs() > 1e-10 * perimeter {
            return Err(Error::InvalidMesh(format!(
                "boundary length {boundary_len} differs from perimeter {perimeter}: non-conforming"
            )));
        }
        let area = self.total_area();
        if (area - self.polygon.area()).abs() > 1e-12 * self.polygon.area() {
            return Err(Error::InvalidMesh(format!("covered area {area} differs from domain area")));
        }
        Ok(())
    }

    pub(crate) fn forest(&self) -> &Arc<Forest> {
        &self.forest
    }

    pub(crate) fn leaf_nodes(&self) -> &[usize] {
        &self.leaf_nodes
    }

    pub(crate) fn pool_ids(&self) -> &[usize] {
        &self.pool_ids
    }

    /// Number of bisections separating triangle `k` from its root.
    pub fn level(&self, k: usize) -> usize {
        self.forest.depth(self.leaf_nodes[k])
    }
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

fn shape_ratio(a: Point, b: Point, c: Point) -> f64 {
    let (ab, bc, ca) = (norm(sub(b, a)), norm(sub(c, b)), norm(sub(a, c)));
    let h = ab.max(bc).max(ca);
    let rho = 4.0 * signed_area(a, b, c) / (ab + bc + ca);
    h / rho
}

fn on_open_segment(p: Point, a: Point, b: Point) -> bool {
    let d = sub(b, a);
    let l2 = dot(d, d);
    let t = dot(sub(p, a), d) / l2;
    let dist = cross(d, sub(p, a)).abs() / l2.sqrt();
    t > 1e-12 && t < 1.0 - 1e-12 && dist <= 1e-12 * l2.sqrt()
}
