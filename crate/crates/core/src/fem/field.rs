use crate::error::{Error, Result};
use crate::mesh::{MeshId, Point, TriMesh};
use crate::projection::Sym2;

/// One value per mesh vertex, tagged with the mesh it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    mesh: MeshId,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: &TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch { expected: mesh.num_vertices(), got: values.len() });
        }
        Ok(NodalField { mesh: mesh.id(), values })
    }

    pub fn zeros(mesh: &TriMesh) -> Self {
        NodalField { mesh: mesh.id(), values: vec![0.0; mesh.num_vertices()] }
    }

    pub fn interpolate(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Self {
        NodalField { mesh: mesh.id(), values: mesh.vertices().iter().map(|&p| f(p)).collect() }
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        if self.mesh == mesh.id() {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        NodalField { mesh: self.mesh, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self − other`.
    pub fn sub(&self, other: &NodalField) -> Result<Self> {
        if self.mesh != other.mesh {
            return Err(Error::MeshMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(NodalField { mesh: self.mesh, values })
    }
}

impl std::ops::Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, v: usize) -> &f64 {
        &self.values[v]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalVec2Field {
    pub x: NodalField,
    pub y: NodalField,
}

impl NodalVec2Field {
    pub fn new(x: NodalField, y: NodalField) -> Result<Self> {
        if x.mesh != y.mesh {
            return Err(Error::MeshMismatch);
        }
        Ok(NodalVec2Field { x, y })
    }

    pub fn interpolate(mesh: &TriMesh, f: impl Fn(Point) -> Point) -> Self {
        let v: Vec<Point> = mesh.vertices().iter().map(|&p| f(p)).collect();
        NodalVec2Field {
            x: NodalField { mesh: mesh.id(), values: v.iter().map(|g| g[0]).collect() },
            y: NodalField { mesh: mesh.id(), values: v.iter().map(|g| g[1]).collect() },
        }
    }

    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        self.x.check(mesh)?;
        self.y.check(mesh)
    }

    pub fn get(&self, v: usize) -> Point {
        [self.x[v], self.y[v]]
    }
}

/// Symmetric tensor field with a single off-diagonal store.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalSym2Field {
    pub xx: NodalField,
    pub xy: NodalField,
    pub yy: NodalField,
}

impl NodalSym2Field {
    pub fn new(xx: NodalField, xy: NodalField, yy: NodalField) -> Result<Self> {
        if xx.mesh != xy.mesh || xx.mesh != yy.mesh {
            return Err(Error::MeshMismatch);
        }
        Ok(NodalSym2Field { xx, xy, yy })
    }

    pub fn from_values(mesh: &TriMesh, v: Vec<Sym2>) -> Self {
        let id = mesh.id();
        NodalSym2Field {
            xx: NodalField { mesh: id, values: v.iter().map(|s| s.a11).collect() },
            xy: NodalField { mesh: id, values: v.iter().map(|s| s.a12).collect() },
            yy: NodalField { mesh: id, values: v.iter().map(|s| s.a22).collect() },
        }
    }

    pub fn interpolate(mesh: &TriMesh, f: impl Fn(Point) -> Sym2) -> Self {
        Self::from_values(mesh, mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    pub fn zeros(mesh: &TriMesh) -> Self {
        Self::from_values(mesh, vec![Sym2::default(); mesh.num_vertices()])
    }

    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        self.xx.check(mesh)?;
        self.xy.check(mesh)?;
        self.yy.check(mesh)
    }

    pub fn len(&self) -> usize {
        self.xx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xx.is_empty()
    }

    pub fn get(&self, v: usize) -> Sym2 {
        Sym2::new(self.xx[v], self.xy[v], self.yy[v])
    }

    pub fn to_vec(&self) -> Vec<Sym2> {
        (0..self.len()).map(|v| self.get(v)).collect()
    }

    pub fn sub(&self, other: &NodalSym2Field) -> Result<Self> {
        NodalSym2Field::new(self.xx.sub(&other.xx)?, self.xy.sub(&other.xy)?, self.yy.sub(&other.yy)?)
    }

    pub fn map(&self, f: impl Fn(Sym2) -> Sym2) -> Self {
        let v = self.to_vec().into_iter().map(f).collect::<Vec<_>>();
        let id = self.xx.mesh;
        NodalSym2Field {
            xx: NodalField { mesh: id, values: v.iter().map(|s| s.a11).collect() },
            xy: NodalField { mesh: id, values: v.iter().map(|s| s.a12).collect() },
            yy: NodalField { mesh: id, values: v.iter().map(|s| s.a22).collect() },
        }
    }
}
