//! Newest-vertex bisection with closure, sibling-merge coarsening and P1
//! transfer between meshes of one refinement family.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{MarkSet, Point, TriMesh};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Post-refinement bound on `h_K / ρ_K` relative to the root mesh.
const SHAPE_FACTOR: f64 = 4.0;

static NEXT_LINEAGE: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone)]
struct Node {
    verts: [usize; 3],
    parent: usize,
    children: Option<[usize; 2]>,
}

/// Every point and triangle ever created from one root mesh.
#[derive(Debug, Clone)]
pub(crate) struct Forest {
    lineage: u64,
    points: Vec<Point>,
    /// Endpoints of the edge a point bisects; `None` for root vertices.
    origin: Vec<Option<[usize; 2]>>,
    midpoints: HashMap<(usize, usize), usize>,
    nodes: Vec<Node>,
    root_theta: f64,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Forest {
    pub(crate) fn from_roots(vertices: &[Point], triangles: &[[usize; 3]]) -> Self {
        Forest {
            lineage: NEXT_LINEAGE.fetch_add(1, Ordering::Relaxed),
            points: vertices.to_vec(),
            origin: vec![None; vertices.len()],
            midpoints: HashMap::new(),
            nodes: triangles.iter().map(|&verts| Node { verts, parent: NONE, children: None }).collect(),
            root_theta: f64::NAN,
        }
    }

    pub(crate) fn set_root_theta(&mut self, theta: f64) {
        self.root_theta = theta;
    }

    pub(crate) fn depth(&self, mut node: usize) -> usize {
        let mut d = 0;
        while self.nodes[node].parent != NONE {
            node = self.nodes[node].parent;
            d += 1;
        }
        d
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        if let Some(&m) = self.midpoints.get(&key(a, b)) {
            return m;
        }
        let (pa, pb) = (self.points[a], self.points[b]);
        let m = self.points.len();
        self.points.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        self.origin.push(Some([a, b]));
        self.midpoints.insert(key(a, b), m);
        m
    }

    fn bisect_into(&mut self, node: usize, marked: &BTreeSet<(usize, usize)>, out: &mut Vec<usize>) {
        let [v0, v1, v2] = self.nodes[node].verts;
        if !marked.contains(&key(v1, v2)) {
            out.push(node);
            return;
        }
        let m = self.midpoint(v1, v2);
        let first = self.nodes.len();
        self.nodes.push(Node { verts: [m, v0, v1], parent: node, children: None });
        self.nodes.push(Node { verts: [m, v2, v0], parent: node, children: None });
        self.nodes[node].children = Some([first, first + 1]);
        self.bisect_into(first, marked, out);
        self.bisect_into(first + 1, marked, out);
    }
}

impl TriMesh {
    /// Bisects every triangle in `marks.refine` (plus the closure needed
    /// for conformity), then merges complete sibling groups from
    /// `marks.coarsen` by one level.
    ///
    /// Fails with [`Error::RatioGuard`] when the result would have
    /// `h_max / h_min` above `ratio_cap`.
    pub fn refine(&self, marks: &MarkSet, ratio_cap: Option<f64>) -> Result<TriMesh> {
        let nt = self.num_triangles();
        if let Some(&k) = marks.refine.iter().chain(&marks.coarsen).find(|&&k| k >= nt) {
            return Err(Error::BadMark(k));
        }
        if let Some(&k) = marks.refine.intersection(&marks.coarsen).next() {
            return Err(Error::ConflictingMarks(k));
        }
        if marks.is_empty() {
            return Ok(self.clone());
        }

        let mut forest = Forest::clone(self.forest());
        let leaves = self.leaf_nodes();

        let mut marked: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &k in &marks.refine {
            let [_, a, b] = forest.nodes[leaves[k]].verts;
            marked.insert(key(a, b));
        }
        loop {
            let mut changed = false;
            for &leaf in leaves {
                let [v0, v1, v2] = forest.nodes[leaf].verts;
                let re = key(v1, v2);
                if !marked.contains(&re) && (marked.contains(&key(v0, v1)) || marked.contains(&key(v2, v0))) {
                    marked.insert(re);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // Bisection produces new edges that may carry marks of their own
        // (a marked non-refinement edge becomes a child's refinement edge).
        let mut out = Vec::with_capacity(leaves.len() + 2 * marks.refine.len());
        for &leaf in leaves {
            forest.bisect_into(leaf, &marked, &mut out);
        }

        let coarsen: BTreeSet<usize> = marks.coarsen.iter().map(|&k| leaves[k]).collect();
        let out = coarsen_once(&mut forest, out, &coarsen);

        let mesh = build_from_leaves(self, Arc::new(forest), out)?;
        mesh.check_conformity()?;
        let bound = SHAPE_FACTOR * mesh.forest().root_theta;
        if mesh.shape_regularity() > bound {
            return Err(Error::ShapeRegularity { theta: mesh.shape_regularity(), bound });
        }
        if let Some(cap) = ratio_cap {
            let (hmax, hmin) = mesh.mesh_size();
            if hmax / hmin > cap {
                return Err(Error::RatioGuard { ratio: hmax / hmin, cap });
            }
        }
        Ok(mesh)
    }

    /// `times` rounds of bisecting every triangle.
    pub fn refine_uniform(&self, times: usize) -> Result<TriMesh> {
        let mut mesh = self.clone();
        for _ in 0..times {
            mesh = mesh.refine(&MarkSet::refine_all(&mesh), None)?;
        }
        Ok(mesh)
    }

    /// P1 interpolation of nodal `values` onto `target`, which must come
    /// from the same root mesh.
    pub fn transfer(&self, values: &[f64], target: &TriMesh) -> Result<Vec<f64>> {
        if values.len() != self.num_vertices() {
            return Err(Error::DimensionMismatch { expected: self.num_vertices(), got: values.len() });
        }
        let (src_forest, dst_forest) = (self.forest(), target.forest());
        if src_forest.lineage != dst_forest.lineage {
            return Err(Error::MeshMismatch);
        }
        // The target forest extends (or equals) the source forest.
        let forest = if dst_forest.points.len() >= src_forest.points.len() { dst_forest } else { src_forest };
        let mut known: Vec<Option<f64>> = vec![None; forest.points.len()];
        for (v, &p) in self.pool_ids().iter().enumerate() {
            known[p] = Some(values[v]);
        }
        fn value(p: usize, forest: &Forest, known: &mut [Option<f64>]) -> Option<f64> {
            if let Some(x) = known[p] {
                return Some(x);
            }
            let [a, b] = forest.origin[p]?;
            let x = 0.5 * (value(a, forest, known)? + value(b, forest, known)?);
            known[p] = Some(x);
            Some(x)
        }
        target
            .pool_ids()
            .iter()
            .map(|&p| {
                if p >= forest.points.len() {
                    return Err(Error::MeshMismatch);
                }
                value(p, forest, &mut known).ok_or(Error::MeshMismatch)
            })
            .collect()
    }
}

/// Merges sibling pairs around removable vertices. A vertex `m` is removable
/// when every leaf touching it is marked, has `m` as newest vertex, and the
/// leaves pair up into complete sibling groups whose parent bisected at `m`.
fn coarsen_once(forest: &mut Forest, leaves: Vec<usize>, marked: &BTreeSet<usize>) -> Vec<usize> {
    if marked.is_empty() {
        return leaves;
    }
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for &leaf in &leaves {
        for &v in &forest.nodes[leaf].verts {
            incident.entry(v).or_default().push(leaf);
        }
    }
    let mut replace: HashMap<usize, usize> = HashMap::new();
    let mut remove: BTreeSet<usize> = BTreeSet::new();
    let mut done: BTreeSet<usize> = BTreeSet::new();
    for &leaf in &leaves {
        if !marked.contains(&leaf) {
            continue;
        }
        let m = forest.nodes[leaf].verts[0];
        if !done.insert(m) {
            continue;
        }
        let Some(edge) = forest.origin[m] else { continue };
        let around = &incident[&m];
        if !(around.len() == 2 || around.len() == 4) {
            continue;
        }
        if !around.iter().all(|n| marked.contains(n) && forest.nodes[*n].verts[0] == m) {
            continue;
        }
        let mut parents: Vec<usize> = around.iter().map(|&n| forest.nodes[n].parent).collect();
        parents.sort_unstable();
        parents.dedup();
        let complete = parents.iter().all(|&p| {
            p != NONE
                && forest.nodes[p].children.is_some_and(|c| c.iter().all(|x| around.contains(x)))
                && key(forest.nodes[p].verts[1], forest.nodes[p].verts[2]) == key(edge[0], edge[1])
        });
        if !complete || parents.len() * 2 != around.len() {
            continue;
        }
        for &p in &parents {
            let [c0, c1] = forest.nodes[p].children.take().expect("checked above");
            replace.insert(c0, p);
            remove.insert(c1);
        }
    }
    leaves.into_iter().filter(|n| !remove.contains(n)).map(|n| replace.get(&n).copied().unwrap_or(n)).collect()
}

fn build_from_leaves(parent: &TriMesh, forest: Arc<Forest>, leaves: Vec<usize>) -> Result<TriMesh> {
    let used: BTreeSet<usize> = leaves.iter().flat_map(|&n| forest.nodes[n].verts).collect();
    let pool_ids: Vec<usize> = used.into_iter().collect();
    let mut local = vec![NONE; forest.points.len()];
    for (i, &p) in pool_ids.iter().enumerate() {
        local[p] = i;
    }
    let vertices = pool_ids.iter().map(|&p| forest.points[p]).collect();
    let triangles = leaves.iter().map(|&n| forest.nodes[n].verts.map(|p| local[p])).collect();
    TriMesh::assemble(vertices, triangles, parent.polygon().clone(), forest, leaves, pool_ids)
}
