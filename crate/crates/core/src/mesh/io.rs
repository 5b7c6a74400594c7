//! Plain-text mesh dump.
//!
//! ```text
//! MALS-MESH 1
//! N_v N_t
//! x y          (N_v lines, 17 significant digits)
//! i j k        (N_t lines, 0-based)
//! ```

use std::fmt::Write as _;

use super::{Point, Polygon, TriMesh};
use crate::error::{Error, Result};

const MAGIC: &str = "MALS-MESH 1";

pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(48 * (mesh.num_vertices() + mesh.num_triangles()));
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "{} {}", mesh.num_vertices(), mesh.num_triangles()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    s
}

/// Reads a dump. The domain polygon is rebuilt from the boundary edges.
pub fn read_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };

    let (n0, magic) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    if magic.trim() != MAGIC {
        return Err(parse_err(n0, "missing MALS-MESH 1 header"));
    }
    let (n1, counts) = lines.next().ok_or_else(|| parse_err(n0 + 1, "missing counts"))?;
    let counts: Vec<usize> =
        counts.split_whitespace().map(|t| t.parse().map_err(|_| parse_err(n1, "bad count"))).collect::<Result<_>>()?;
    let [nv, nt] = counts[..] else {
        return Err(parse_err(n1, "expected `N_v N_t`"));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n1, "too few vertex lines"))?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(n, "bad coordinate")))
            .collect::<Result<_>>()?;
        let [x, y] = xy[..] else {
            return Err(parse_err(n, "expected `x y`"));
        };
        vertices.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n1, "too few triangle lines"))?;
        let ijk: Vec<usize> =
            l.split_whitespace().map(|t| t.parse().map_err(|_| parse_err(n, "bad index"))).collect::<Result<_>>()?;
        let [i, j, k] = ijk[..] else {
            return Err(parse_err(n, "expected `i j k`"));
        };
        triangles.push([i, j, k]);
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "trailing content"));
    }
    let polygon = boundary_polygon(&vertices, &triangles)?;
    TriMesh::new(vertices, triangles, polygon)
}

fn boundary_polygon(vertices: &[Point], triangles: &[[usize; 3]]) -> Result<Polygon> {
    use std::collections::HashMap;
    let nv = vertices.len();
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        if t.iter().any(|&v| v >= nv) {
            return Err(Error::InvalidMesh("triangle references a missing vertex".into()));
        }
        for l in 0..3 {
            let (a, b) = (t[l], t[(l + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut next = vec![usize::MAX; nv];
    for t in triangles {
        for l in 0..3 {
            let (a, b) = (t[l], t[(l + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                next[a] = b;
            }
        }
    }
    let start = (0..nv)
        .filter(|&v| next[v] != usize::MAX)
        .min_by(|&a, &b| {
            let (p, q) = (vertices[a], vertices[b]);
            (p[1], p[0]).partial_cmp(&(q[1], q[0])).unwrap()
        })
        .ok_or_else(|| Error::InvalidMesh("no boundary".into()))?;
    let mut corners = Vec::new();
    let mut v = start;
    let mut prev = previous(&next, start)?;
    for _ in 0..=nv {
        let w = next[v];
        let d0 = super::sub(vertices[v], vertices[prev]);
        let d1 = super::sub(vertices[w], vertices[v]);
        if super::cross(d0, d1) > 1e-12 * super::norm(d0) * super::norm(d1) {
            corners.push(vertices[v]);
        }
        prev = v;
        v = w;
        if v == start {
            return Polygon::new(corners);
        }
    }
    Err(Error::InvalidMesh("boundary is not a single closed loop".into()))
}

fn previous(next: &[usize], v: usize) -> Result<usize> {
    next.iter().position(|&w| w == v).ok_or_else(|| Error::InvalidMesh("open boundary".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = TriMesh::structured_unit_square(3).unwrap().refine_uniform(1).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.polygon(), m.polygon());
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn awkward_coordinates_survive() {
        let s = 0.1f64 + 0.2;
        let poly = Polygon::new(vec![[0.0, 0.0], [s, 0.0], [0.0, s]]).unwrap();
        let m = TriMesh::new(vec![[0.0, 0.0], [s, 0.0], [0.0, s]], vec![[0, 1, 2]], poly).unwrap();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.vertex(1)[0].to_bits(), s.to_bits());
    }

    #[test]
    fn malformed_input() {
        assert!(read_mesh("").is_err());
        assert!(read_mesh("MESH 2\n").is_err());
        assert!(read_mesh("MALS-MESH 1\n1 0\n0.0\n").is_err());
        assert!(read_mesh("MALS-MESH 1\n3 1\n0 0\n1 0\n0 1\n0 1 5\n").is_err());
    }
}
