//! Indexed triangle meshes and adjacency queries.

use std::collections::BTreeSet;

use nalgebra::Point3;

use crate::{Error, Result};

/// An immutable indexed triangle surface.
///
/// Faces store counterclockwise vertex triples; adjacency tables are built
/// once at construction so meshes can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub id: String,
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    /// Faces incident to each vertex, ascending.
    vertex_faces: Vec<Vec<usize>>,
    /// 1-ring vertex neighbors of each vertex, ascending.
    vertex_neighbors: Vec<Vec<usize>>,
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl BBox {
    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}

impl TriMesh {
    /// Build a mesh, validating face indices and vertex coordinates.
    ///
    /// Faces must reference existing vertices with three distinct indices,
    /// and every coordinate must be finite.
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::Mesh(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!(
                    "face {i} references vertex {} but mesh has {n} vertices",
                    f.iter().max().unwrap()
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Mesh(format!("face {i} is degenerate: {f:?}")));
            }
        }

        let mut vertex_faces = vec![Vec::new(); n];
        let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                vertex_faces[f[k]].push(fi);
                neighbors[f[k]].insert(f[(k + 1) % 3]);
                neighbors[f[k]].insert(f[(k + 2) % 3]);
            }
        }
        let vertex_neighbors = neighbors
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();

        Ok(TriMesh {
            id: id.into(),
            vertices,
            faces,
            vertex_faces,
            vertex_neighbors,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex(&self, v: usize) -> Point3<f64> {
        self.vertices[v]
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    /// Faces incident to vertex `v`.
    pub fn faces_around(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// 1-ring vertex neighbors of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    /// Corner positions of face `f`.
    pub fn triangle(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Axis-aligned bounding box of all vertices.
    pub fn bbox(&self) -> Result<BBox> {
        if self.vertices.is_empty() {
            return Err(Error::Mesh("bounding box of empty mesh".into()));
        }
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            for k in 0..3 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        Ok(BBox { min, max })
    }

    /// Vertices reachable from `v` in at most `k` edge hops, excluding `v`.
    ///
    /// `k = 0` returns the empty set.
    pub fn vertex_rings(&self, v: usize, k: usize) -> Result<BTreeSet<usize>> {
        if v >= self.vertices.len() {
            return Err(Error::Arg(format!(
                "vertex {v} out of range (mesh has {})",
                self.vertices.len()
            )));
        }
        let mut seen = BTreeSet::new();
        seen.insert(v);
        let mut frontier = vec![v];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.neighbors(u) {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen.remove(&v);
        Ok(seen)
    }

    /// Number of faces containing the undirected edge (a, b).
    pub fn edge_face_count(&self, a: usize, b: usize) -> usize {
        self.vertex_faces[a]
            .iter()
            .filter(|&&f| self.faces[f].contains(&b))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn tetrahedron() -> TriMesh {
        shapes::tetrahedron()
    }

    #[test]
    fn bbox_unit_cube_diagonal() {
        let verts: Vec<Point3<f64>> = (0..8)
            .map(|i| {
                Point3::new(
                    (i & 1) as f64,
                    ((i >> 1) & 1) as f64,
                    ((i >> 2) & 1) as f64,
                )
            })
            .collect();
        // faces irrelevant for the bbox; use a single valid one
        let mesh = TriMesh::new("cube", verts, vec![[0, 1, 2]]).unwrap();
        let d = mesh.bbox().unwrap().diagonal();
        assert!((d - 3f64.sqrt()).abs() < 1e-12, "diagonal {d}");
    }

    #[test]
    fn bbox_single_vertex_is_degenerate() {
        let mesh = TriMesh {
            id: "pt".into(),
            vertices: vec![Point3::new(1.0, 2.0, 3.0)],
            faces: vec![],
            vertex_faces: vec![vec![]],
            vertex_neighbors: vec![vec![]],
        };
        assert_eq!(mesh.bbox().unwrap().diagonal(), 0.0);
    }

    #[test]
    fn bbox_3_4_12_pythagorean() {
        let verts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(3.0, 4.0, 12.0)];
        let mesh = TriMesh {
            id: "box".into(),
            vertices: verts,
            faces: vec![],
            vertex_faces: vec![vec![]; 2],
            vertex_neighbors: vec![vec![]; 2],
        };
        assert!((mesh.bbox().unwrap().diagonal() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn bbox_empty_mesh_errors() {
        let mesh = TriMesh {
            id: "empty".into(),
            vertices: vec![],
            faces: vec![],
            vertex_faces: vec![],
            vertex_neighbors: vec![],
        };
        assert!(mesh.bbox().is_err());
    }

    #[test]
    fn bbox_diagonal_translation_and_scale() {
        let mesh = shapes::icosphere(1.0, 2);
        let d0 = mesh.bbox().unwrap().diagonal();

        let moved: Vec<_> = mesh
            .vertices()
            .iter()
            .map(|p| p + nalgebra::Vector3::new(5.0, -2.0, 9.0))
            .collect();
        let moved = TriMesh::new("moved", moved, mesh.faces().to_vec()).unwrap();
        assert!((moved.bbox().unwrap().diagonal() - d0).abs() < 1e-9);

        let scaled: Vec<_> = mesh.vertices().iter().map(|p| p * 2.5).collect();
        let scaled = TriMesh::new("scaled", scaled, mesh.faces().to_vec()).unwrap();
        assert!((scaled.bbox().unwrap().diagonal() - 2.5 * d0).abs() < 1e-9);
    }

    #[test]
    fn rings_tetrahedron_one_hop() {
        let tet = tetrahedron();
        for v in 0..4 {
            let ring = tet.vertex_rings(v, 1).unwrap();
            assert_eq!(ring.len(), 3);
            assert!(!ring.contains(&v));
        }
    }

    #[test]
    fn rings_zero_hops_empty() {
        let tet = tetrahedron();
        assert!(tet.vertex_rings(2, 0).unwrap().is_empty());
    }

    #[test]
    fn rings_fan_center() {
        let fan = shapes::triangle_fan(6);
        let ring = fan.vertex_rings(0, 1).unwrap();
        assert_eq!(ring.len(), 6);
    }

    #[test]
    fn rings_nested() {
        let sphere = shapes::icosphere(1.0, 2);
        for k in 0..4 {
            let inner = sphere.vertex_rings(7, k).unwrap();
            let outer = sphere.vertex_rings(7, k + 1).unwrap();
            assert!(inner.is_subset(&outer), "ring {k} not nested in {}", k + 1);
        }
    }

    #[test]
    fn rings_invalid_vertex_errors() {
        let tet = tetrahedron();
        assert!(tet.vertex_rings(99, 1).is_err());
    }

    #[test]
    fn new_rejects_bad_faces() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert!(TriMesh::new("m", verts.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriMesh::new("m", verts.clone(), vec![[0, 1, 1]]).is_err());
        let mut bad = verts;
        bad[1].x = f64::NAN;
        assert!(TriMesh::new("m", bad, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn tetrahedron_every_edge_shared_by_two_faces() {
        let tet = tetrahedron();
        for a in 0..4 {
            for b in (a + 1)..4 {
                assert_eq!(tet.edge_face_count(a, b), 2);
            }
        }
    }
}
