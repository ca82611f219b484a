//! Per-vertex differential geometry: area-weighted normals and principal
//! curvatures from a quadratic patch fit.
//!
//! Curvatures are estimated by fitting `z = a x^2 + b xy + c y^2` over the
//! 2-ring neighborhood expressed in the tangent frame of the vertex normal,
//! then taking eigenvalues of the negated Hessian. With outward-wound
//! meshes a sphere of radius r gets positive curvature 1/r.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{Matrix2, Matrix3, Vector3};
use rayon::prelude::*;

use crate::mesh::TriMesh;
use crate::{Error, Result};

const GEOMETRY_MAGIC: &[u8; 4] = b"SRVG";
const GEOMETRY_VERSION: u32 = 1;

/// Per-vertex normals and principal curvatures, `kappa1 >= kappa2`.
#[derive(Debug, Clone)]
pub struct VertexGeometry {
    pub normals: Vec<Vector3<f64>>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    /// False where the estimate is degenerate (isolated vertex, rank-deficient
    /// neighborhood); such vertices carry zero curvature.
    pub reliable: Vec<bool>,
}

impl VertexGeometry {
    pub fn mean_curvature(&self, v: usize) -> f64 {
        (self.kappa1[v] + self.kappa2[v]) / 2.0
    }

    pub fn gaussian_curvature(&self, v: usize) -> f64 {
        self.kappa1[v] * self.kappa2[v]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GEOMETRY_MAGIC)?;
        w.write_u32::<LittleEndian>(GEOMETRY_VERSION)?;
        w.write_u64::<LittleEndian>(self.normals.len() as u64)?;
        for i in 0..self.normals.len() {
            for k in 0..3 {
                w.write_f64::<LittleEndian>(self.normals[i][k])?;
            }
            w.write_f64::<LittleEndian>(self.kappa1[i])?;
            w.write_f64::<LittleEndian>(self.kappa2[i])?;
            w.write_u8(self.reliable[i] as u8)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != GEOMETRY_MAGIC {
            return Err(Error::Format("not a vertex geometry file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != GEOMETRY_VERSION {
            return Err(Error::Format(format!("unsupported geometry version {version}")));
        }
        let n = r.read_u64::<LittleEndian>()? as usize;
        let mut out = VertexGeometry {
            normals: Vec::with_capacity(n),
            kappa1: Vec::with_capacity(n),
            kappa2: Vec::with_capacity(n),
            reliable: Vec::with_capacity(n),
        };
        for _ in 0..n {
            let mut nrm = Vector3::zeros();
            for k in 0..3 {
                nrm[k] = r.read_f64::<LittleEndian>()?;
            }
            out.normals.push(nrm);
            out.kappa1.push(r.read_f64::<LittleEndian>()?);
            out.kappa2.push(r.read_f64::<LittleEndian>()?);
            out.reliable.push(r.read_u8()? != 0);
        }
        Ok(out)
    }
}

/// Estimate normals and principal curvatures for every vertex.
pub fn estimate_geometry(mesh: &TriMesh) -> Result<VertexGeometry> {
    let normals = vertex_normals(mesh);

    let rows: Vec<(f64, f64, bool)> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| curvature_at(mesh, &normals, v))
        .collect();

    let mut kappa1 = Vec::with_capacity(rows.len());
    let mut kappa2 = Vec::with_capacity(rows.len());
    let mut reliable = Vec::with_capacity(rows.len());
    for (k1, k2, ok) in rows {
        kappa1.push(k1);
        kappa2.push(k2);
        reliable.push(ok);
    }
    Ok(VertexGeometry {
        normals,
        kappa1,
        kappa2,
        reliable,
    })
}

/// Area-weighted vertex normals from face windings.
pub fn vertex_normals(mesh: &TriMesh) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); mesh.vertex_count()];
    for f in mesh.faces() {
        let [a, b, c] = *f;
        // cross product length is twice the face area
        let n = (mesh.vertex(b) - mesh.vertex(a)).cross(&(mesh.vertex(c) - mesh.vertex(a)));
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 1e-30 {
                n / len
            } else {
                Vector3::new(0.0, 0.0, 1.0)
            }
        })
        .collect()
}

/// Orthonormal tangent basis (e1, e2) for a unit normal.
pub fn tangent_basis(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = if normal.x.abs() <= normal.y.abs() && normal.x.abs() <= normal.z.abs() {
        Vector3::x()
    } else if normal.y.abs() <= normal.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (axis - normal * axis.dot(normal)).normalize();
    let e2 = normal.cross(&e1);
    (e1, e2)
}

fn curvature_at(mesh: &TriMesh, normals: &[Vector3<f64>], v: usize) -> (f64, f64, bool) {
    if mesh.faces_around(v).is_empty() {
        return (0.0, 0.0, false);
    }
    let ring = match mesh.vertex_rings(v, 2) {
        Ok(r) => r,
        Err(_) => return (0.0, 0.0, false),
    };
    if ring.len() < 3 {
        return (0.0, 0.0, false);
    }

    let p = mesh.vertex(v);
    let n = normals[v];
    let (e1, e2) = tangent_basis(&n);

    // normal equations for z = a x^2 + b xy + c y^2
    let mut ata = Matrix3::zeros();
    let mut atz = Vector3::zeros();
    for &q in &ring {
        let d = mesh.vertex(q) - p;
        let x = d.dot(&e1);
        let y = d.dot(&e2);
        let z = d.dot(&n);
        let row = Vector3::new(x * x, x * y, y * y);
        ata += row * row.transpose();
        atz += row * z;
    }
    let coeffs = match ata.lu().solve(&atz) {
        Some(c) => c,
        None => return (0.0, 0.0, false),
    };
    let (a, b, c) = (coeffs[0], coeffs[1], coeffs[2]);

    let shape = Matrix2::new(-2.0 * a, -b, -b, -2.0 * c);
    let eig = shape.symmetric_eigen();
    let (k1, k2) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    if k1 >= k2 {
        (k1, k2, true)
    } else {
        (k2, k1, true)
    }
}
