//! 3D Harris corner response on triangle meshes (Sipiran–Bustos style).
//!
//! Per vertex, the neighborhood (fixed ring count or adaptively grown to a
//! fraction of the bounding box diagonal) is centered on its centroid and
//! rotated so the PCA best-fit plane becomes the xy-plane with the vertex
//! at the origin. A full quadratic height field is fit and the structure
//! matrix E is integrated in closed form against a Gaussian of half the
//! neighborhood extent. Salient points are local maxima of
//! `det(E) - k tr(E)^2` joined with the globally highest responders.

use nalgebra::{Matrix2, SMatrix, SVector, Vector3};
use rayon::prelude::*;

use crate::geometry::{tangent_basis, vertex_normals};
use crate::mesh::TriMesh;
use crate::{Error, Result};

use super::{sorted_set, SamplePointSet};

/// How a vertex's neighborhood is gathered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighborhood {
    /// Grow rings until the farthest vertex exceeds this fraction of the
    /// bounding box diagonal.
    Adaptive { diagonal_fraction: f64 },
    /// A fixed number of rings.
    Rings { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisParams {
    pub neighborhood: Neighborhood,
    /// The Harris constant k in det(E) - k tr(E)^2.
    pub k: f64,
    /// Rings considered when testing for local maxima.
    pub ring_maxima: usize,
    /// Fraction of all vertices returned by global response rank.
    pub selection_fraction: f64,
}

impl HarrisParams {
    /// Default adaptive preset: 1% of the diagonal, k = 0.04, 1% selected.
    pub fn adaptive_default() -> Self {
        HarrisParams {
            neighborhood: Neighborhood::Adaptive {
                diagonal_fraction: 0.01,
            },
            k: 0.04,
            ring_maxima: 1,
            selection_fraction: 0.01,
        }
    }

    /// Rings preset: one-ring neighborhoods, k = 0.01, 5% selected.
    pub fn rings_default() -> Self {
        HarrisParams {
            neighborhood: Neighborhood::Rings { count: 1 },
            k: 0.01,
            ring_maxima: 1,
            selection_fraction: 0.05,
        }
    }

    fn method_tag(&self) -> &'static str {
        match self.neighborhood {
            Neighborhood::Adaptive { .. } => "harris-adaptive",
            Neighborhood::Rings { .. } => "harris-rings",
        }
    }

    fn validate(&self) -> Result<()> {
        match self.neighborhood {
            Neighborhood::Adaptive { diagonal_fraction } if diagonal_fraction <= 0.0 => {
                return Err(Error::Arg("adaptive fraction must be positive".into()))
            }
            Neighborhood::Rings { count } if count == 0 => {
                return Err(Error::Arg("ring neighborhood needs at least one ring".into()))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.selection_fraction) {
            return Err(Error::Arg(format!(
                "selection fraction must be in [0, 1], got {}",
                self.selection_fraction
            )));
        }
        Ok(())
    }
}

/// Harris operator value for a structure matrix.
pub fn harris_response(e: &Matrix2<f64>, k: f64) -> f64 {
    e.determinant() - k * e.trace() * e.trace()
}

/// Detect salient points with the Harris response.
pub fn harris3d(mesh: &TriMesh, params: &HarrisParams) -> Result<SamplePointSet> {
    params.validate()?;
    let n = mesh.vertex_count();
    let diagonal = mesh.bbox()?.diagonal();
    let normals = vertex_normals(mesh);

    let response: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| vertex_response(mesh, &normals, v, params, diagonal))
        .collect();

    // local maxima over ring_maxima rings
    let mut selected: Vec<(usize, f64)> = (0..n)
        .filter(|&v| {
            mesh.vertex_rings(v, params.ring_maxima)
                .map(|ring| !ring.is_empty() && ring.iter().all(|&u| response[v] > response[u]))
                .unwrap_or(false)
        })
        .map(|v| (v, response[v]))
        .collect();

    // plus the top fraction of all vertices by response
    let take = ((params.selection_fraction * n as f64).ceil() as usize).min(n);
    let mut by_response: Vec<usize> = (0..n).collect();
    by_response.sort_by(|&a, &b| response[b].total_cmp(&response[a]).then(a.cmp(&b)));
    selected.extend(by_response.into_iter().take(take).map(|v| (v, response[v])));

    Ok(sorted_set(mesh, params.method_tag(), selected, false))
}

fn vertex_response(
    mesh: &TriMesh,
    normals: &[Vector3<f64>],
    v: usize,
    params: &HarrisParams,
    diagonal: f64,
) -> f64 {
    let points = match neighborhood(mesh, v, params, diagonal) {
        Some(p) => p,
        None => return 0.0,
    };
    if points.len() < 6 {
        return 0.0; // quadratic fit underdetermined
    }

    let p = mesh.vertex(v);
    let centroid = points
        .iter()
        .fold(Vector3::zeros(), |acc, &q| acc + mesh.vertex(q).coords)
        / points.len() as f64;

    // best-fit plane normal from the neighborhood covariance
    let mut cov = nalgebra::Matrix3::zeros();
    for &q in &points {
        let d = mesh.vertex(q).coords - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut min_i = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
            min_i = i;
        }
    }
    let mut plane_normal: Vector3<f64> = eig.eigenvectors.column(min_i).into();
    if plane_normal.dot(&normals[v]) < 0.0 {
        plane_normal = -plane_normal;
    }
    let (e1, e2) = tangent_basis(&plane_normal);

    // quadratic height field around the vertex at the origin
    let mut ata = SMatrix::<f64, 6, 6>::zeros();
    let mut atz = SVector::<f64, 6>::zeros();
    let mut extent2: f64 = 0.0;
    for &q in &points {
        let d = mesh.vertex(q) - p;
        extent2 = extent2.max(d.norm_squared());
        let x = d.dot(&e1);
        let y = d.dot(&e2);
        let z = d.dot(&plane_normal);
        let row = SVector::<f64, 6>::from([x * x, x * y, y * y, x, y, 1.0]);
        ata += row * row.transpose();
        atz += row * z;
    }
    let coeffs = match ata.lu().solve(&atz) {
        Some(c) => c,
        None => return 0.0,
    };
    let (p1, p2, p3, p4, p5) = (coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4]);

    let sigma = extent2.sqrt() / 2.0;
    let s2 = sigma * sigma;
    // Gaussian moments of the derivative products: E[x^2] = E[y^2] = s^2
    let exx = 4.0 * p1 * p1 * s2 + p2 * p2 * s2 + p4 * p4;
    let eyy = p2 * p2 * s2 + 4.0 * p3 * p3 * s2 + p5 * p5;
    let exy = 2.0 * p1 * p2 * s2 + 2.0 * p2 * p3 * s2 + p4 * p5;
    harris_response(&Matrix2::new(exx, exy, exy, eyy), params.k)
}

fn neighborhood(
    mesh: &TriMesh,
    v: usize,
    params: &HarrisParams,
    diagonal: f64,
) -> Option<Vec<usize>> {
    const MAX_ADAPTIVE_RINGS: usize = 24;
    let ring_count = match params.neighborhood {
        Neighborhood::Rings { count } => count,
        Neighborhood::Adaptive { diagonal_fraction } => {
            let reach = diagonal_fraction * diagonal;
            let p = mesh.vertex(v);
            let mut k = 1;
            loop {
                let ring = mesh.vertex_rings(v, k).ok()?;
                if ring.is_empty() {
                    break k;
                }
                let farthest = ring
                    .iter()
                    .map(|&u| (mesh.vertex(u) - p).norm())
                    .fold(0.0, f64::max);
                if farthest > reach || k >= MAX_ADAPTIVE_RINGS {
                    break k;
                }
                k += 1;
            }
        }
    };
    let ring = mesh.vertex_rings(v, ring_count).ok()?;
    let mut points = vec![v];
    points.extend(ring);
    Some(points)
}
