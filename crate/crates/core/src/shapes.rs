//! Parametric test meshes: spheres, grids, cylinders, tori.
//!
//! Closed shapes are wound counterclockwise seen from outside, so face
//! normals point outward. These meshes back the analytic-surface tests
//! and the bundled toy dataset generator.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::mesh::TriMesh;

/// Regular tetrahedron with unit-ish edge length, wound outward.
pub fn tetrahedron() -> TriMesh {
    let verts = vec![
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(1.0, -1.0, -1.0),
        Point3::new(-1.0, 1.0, -1.0),
        Point3::new(-1.0, -1.0, 1.0),
    ];
    let faces = orient_outward(
        &verts,
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    );
    TriMesh::new("tetrahedron", verts, faces).unwrap()
}

/// Icosahedron subdivided `subdivisions` times and projected onto a sphere.
///
/// Vertex count is `10 * 4^subdivisions + 2`.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3<f64>> = vec![
        Point3::new(-1.0, phi, 0.0),
        Point3::new(1.0, phi, 0.0),
        Point3::new(-1.0, -phi, 0.0),
        Point3::new(1.0, -phi, 0.0),
        Point3::new(0.0, -1.0, phi),
        Point3::new(0.0, 1.0, phi),
        Point3::new(0.0, -1.0, -phi),
        Point3::new(0.0, 1.0, -phi),
        Point3::new(phi, 0.0, -1.0),
        Point3::new(phi, 0.0, 1.0),
        Point3::new(-phi, 0.0, -1.0),
        Point3::new(-phi, 0.0, 1.0),
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];

    for v in &mut verts {
        let n = v.coords.norm();
        v.coords *= radius / n;
    }

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mids = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = Point3::from((verts[a].coords + verts[b].coords) / 2.0);
                    let m = Point3::from(m.coords * (radius / m.coords.norm()));
                    verts.push(m);
                    verts.len() - 1
                });
            }
            next.push([f[0], mids[0], mids[2]]);
            next.push([f[1], mids[1], mids[0]]);
            next.push([f[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        faces = next;
    }

    let faces = orient_outward(&verts, faces);
    TriMesh::new("icosphere", verts, faces).unwrap()
}

/// Icosphere scaled per-axis into an ellipsoid with semi-axes (a, b, c).
pub fn ellipsoid(a: f64, b: f64, c: f64, subdivisions: usize) -> TriMesh {
    let sphere = icosphere(1.0, subdivisions);
    let verts = sphere
        .vertices()
        .iter()
        .map(|p| Point3::new(p.x * a, p.y * b, p.z * c))
        .collect();
    TriMesh::new("ellipsoid", verts, sphere.faces().to_vec()).unwrap()
}

/// Flat triangulated grid in the z = 0 plane, `cells x cells` quads over
/// `[-extent/2, extent/2]^2`, wound so normals point toward +z.
pub fn grid(cells: usize, extent: f64) -> TriMesh {
    let (verts, faces) = grid_arrays(cells, extent, |_, _| 0.0);
    TriMesh::new("grid", verts, faces).unwrap()
}

/// Flat grid with a centered Gaussian bump `z = height * exp(-(x^2+y^2)/(2 width^2))`.
///
/// Returns the mesh and the index of the apex vertex. `cells` must be even
/// so a vertex sits exactly at the origin.
pub fn bump_plane(cells: usize, extent: f64, height: f64, width: f64) -> (TriMesh, usize) {
    assert!(cells % 2 == 0, "cells must be even so a vertex sits at the apex");
    let (verts, faces) = grid_arrays(cells, extent, |x, y| {
        height * (-(x * x + y * y) / (2.0 * width * width)).exp()
    });
    let apex = (cells / 2) * (cells + 1) + cells / 2;
    let mesh = TriMesh::new("bump_plane", verts, faces).unwrap();
    (mesh, apex)
}

fn grid_arrays(
    cells: usize,
    extent: f64,
    z: impl Fn(f64, f64) -> f64,
) -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
    let n = cells + 1;
    let h = extent / cells as f64;
    let mut verts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = -extent / 2.0 + i as f64 * h;
            let y = -extent / 2.0 + j as f64 * h;
            verts.push(Point3::new(x, y, z(x, y)));
        }
    }
    let mut faces = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let v00 = j * n + i;
            let v10 = v00 + 1;
            let v01 = v00 + n;
            let v11 = v01 + 1;
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    (verts, faces)
}

/// Fan of `n` triangles around a center vertex (index 0) in the z = 0 plane.
pub fn triangle_fan(n: usize) -> TriMesh {
    let mut verts = vec![Point3::new(0.0, 0.0, 0.0)];
    for i in 0..n {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        verts.push(Point3::new(t.cos(), t.sin(), 0.0));
    }
    let faces = (0..n).map(|i| [0, 1 + i, 1 + (i + 1) % n]).collect();
    TriMesh::new("fan", verts, faces).unwrap()
}

/// Closed cylinder of the given radius and height, axis along z, with flat
/// triangle-fan caps. `segments` vertices per ring, `rows + 1` rings.
pub fn cylinder(radius: f64, height: f64, segments: usize, rows: usize) -> TriMesh {
    let mut verts = Vec::new();
    for r in 0..=rows {
        let z = -height / 2.0 + height * r as f64 / rows as f64;
        for s in 0..segments {
            let t = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            verts.push(Point3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    let bottom_center = verts.len();
    verts.push(Point3::new(0.0, 0.0, -height / 2.0));
    let top_center = verts.len();
    verts.push(Point3::new(0.0, 0.0, height / 2.0));

    let ring = |r: usize, s: usize| r * segments + (s % segments);
    let mut faces = Vec::new();
    for r in 0..rows {
        for s in 0..segments {
            let a = ring(r, s);
            let b = ring(r, s + 1);
            let c = ring(r + 1, s + 1);
            let d = ring(r + 1, s);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for s in 0..segments {
        faces.push([bottom_center, ring(0, s + 1), ring(0, s)]);
        faces.push([top_center, ring(rows, s), ring(rows, s + 1)]);
    }
    TriMesh::new("cylinder", verts, faces).unwrap()
}

/// Torus with major radius `major` and tube radius `minor`, wound outward.
pub fn torus(major: f64, minor: f64, major_segments: usize, minor_segments: usize) -> TriMesh {
    let mut verts = Vec::with_capacity(major_segments * minor_segments);
    for u in 0..major_segments {
        let theta = 2.0 * std::f64::consts::PI * u as f64 / major_segments as f64;
        for v in 0..minor_segments {
            let phi = 2.0 * std::f64::consts::PI * v as f64 / minor_segments as f64;
            let ring_r = major + minor * phi.cos();
            verts.push(Point3::new(
                ring_r * theta.cos(),
                ring_r * theta.sin(),
                minor * phi.sin(),
            ));
        }
    }
    let idx = |u: usize, v: usize| (u % major_segments) * minor_segments + (v % minor_segments);
    let mut faces = Vec::new();
    for u in 0..major_segments {
        for v in 0..minor_segments {
            let a = idx(u, v);
            let b = idx(u + 1, v);
            let c = idx(u + 1, v + 1);
            let d = idx(u, v + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new("torus", verts, faces).unwrap()
}

/// Flip faces of a star-shaped mesh (centered near the origin) so normals
/// point away from the centroid.
fn orient_outward(verts: &[Point3<f64>], faces: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
    let centroid = verts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / verts.len() as f64;
    faces
        .into_iter()
        .map(|[a, b, c]| {
            let n = (verts[b] - verts[a]).cross(&(verts[c] - verts[a]));
            let outward = (verts[a].coords + verts[b].coords + verts[c].coords) / 3.0 - centroid;
            if n.dot(&outward) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_vertex_counts() {
        assert_eq!(icosphere(1.0, 0).vertex_count(), 12);
        assert_eq!(icosphere(1.0, 2).vertex_count(), 162);
        assert_eq!(icosphere(2.0, 4).vertex_count(), 2562);
    }

    #[test]
    fn icosphere_vertices_on_sphere() {
        let m = icosphere(2.0, 3);
        for v in m.vertices() {
            assert!((v.coords.norm() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_shapes_are_watertight() {
        for mesh in [icosphere(1.0, 1), cylinder(0.5, 2.0, 16, 8), torus(1.0, 0.3, 16, 8)] {
            // Euler characteristic: V - E + F = 2 for sphere-like, 0 for torus
            let v = mesh.vertex_count() as i64;
            let f = mesh.face_count() as i64;
            let e = 3 * f / 2; // every edge shared by exactly two faces
            let chi = v - e + f;
            assert!(chi == 2 || chi == 0, "unexpected Euler characteristic {chi} for {}", mesh.id);
            for face in mesh.faces() {
                for k in 0..3 {
                    assert_eq!(mesh.edge_face_count(face[k], face[(k + 1) % 3]), 2);
                }
            }
        }
    }

    #[test]
    fn grid_counts() {
        let g = grid(4, 2.0);
        assert_eq!(g.vertex_count(), 25);
        assert_eq!(g.face_count(), 32);
    }

    #[test]
    fn bump_apex_is_highest() {
        let (m, apex) = bump_plane(20, 2.0, 0.5, 0.3);
        let zmax = m.vertices().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert_eq!(m.vertex(apex).z, zmax);
        assert!((m.vertex(apex).z - 0.5).abs() < 1e-12);
    }
}
