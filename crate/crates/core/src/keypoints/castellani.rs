//! Multi-scale salient points repeatable across decimation levels
//! (Castellani et al. style).
//!
//! For each decimation level the vertex positions are smoothed by two
//! Gaussians per scale; the difference vector projected on the vertex
//! normal gives a scale map. Normalized scale maps are sharpened by an
//! inhibition step (values keep only when above the 85th percentile of
//! their 2-ring), summed over six scales, and reduced to strict 1-ring
//! maxima. Vertices salient on at least three of the five levels survive.
//!
//! The scale unit is 0.1% of the bounding box diagonal, which assumes a
//! densely tessellated surface; scales whose fine filter cannot resolve
//! any neighbor are skipped, so coarse meshes legitimately yield empty
//! (flagged) sets.

use crate::decimate::decimate;
use crate::geometry::vertex_normals;
use crate::mesh::TriMesh;
use crate::spatial::SpatialGrid;
use crate::Result;

use super::{normalize_unit, sorted_set, strict_local_maxima, SamplePointSet};

/// Decimation levels d = {0, h, 2h, 3h, 4h} with h = 0.20.
pub const DECIMATION_FRACTIONS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];
/// Scale unit as a fraction of the bounding box diagonal (0.1%).
const EPSILON_FACTOR: f64 = 0.001;
/// Scales in units of epsilon.
const SCALES: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
/// A vertex's scale-map value survives inhibition only above this quantile
/// of its 2-ring neighborhood.
const INHIBITION_QUANTILE: f64 = 0.85;
/// Levels a vertex must be salient on to make the final set.
const REQUIRED_LEVELS: usize = 3;

/// Points salient on at least three of the five decimation levels.
pub fn castellani_points(mesh: &TriMesh) -> Result<SamplePointSet> {
    let mut votes = vec![0usize; mesh.vertex_count()];
    for fraction in DECIMATION_FRACTIONS {
        let Ok(level) = decimate(mesh, fraction) else {
            continue; // failed level; the 3-of-5 requirement still applies
        };
        for v in level_salient_vertices(&level.mesh)? {
            votes[level.source_vertices[v]] += 1;
        }
    }
    let selected: Vec<(usize, f64)> = votes
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= REQUIRED_LEVELS)
        .map(|(v, &c)| (v, c as f64))
        .collect();
    let degenerate = selected.is_empty();
    Ok(sorted_set(mesh, "castellani", selected, degenerate))
}

/// Salient vertices of one (possibly decimated) mesh, in its own indexing.
fn level_salient_vertices(mesh: &TriMesh) -> Result<Vec<usize>> {
    let n = mesh.vertex_count();
    let diagonal = mesh.bbox()?.diagonal();
    let epsilon = EPSILON_FACTOR * diagonal;
    let normals = vertex_normals(mesh);
    let grid = SpatialGrid::new(mesh.vertices(), 8.0 * epsilon);

    let mut total = vec![0.0; n];
    for scale_mult in SCALES {
        let sigma = scale_mult * epsilon;
        let fine: Vec<(nalgebra::Vector3<f64>, usize)> = (0..n)
            .map(|v| smoothed_position(mesh, &grid, v, sigma))
            .collect();
        // a scale whose fine filter sees no neighbor for most vertices is
        // below the mesh resolution; its map would carry sampling
        // artifacts instead of geometry
        let resolved = fine.iter().filter(|(_, count)| *count >= 2).count();
        if resolved * 2 < n {
            continue;
        }
        let mut map: Vec<f64> = (0..n)
            .map(|v| {
                let (coarse, _) = smoothed_position(mesh, &grid, v, 2.0 * sigma);
                (fine[v].0 - coarse).dot(&normals[v])
            })
            .collect();
        normalize_unit(&mut map);
        let inhibited = inhibit(mesh, &map);
        for v in 0..n {
            total[v] += map[v] + inhibited[v];
        }
    }
    Ok(strict_local_maxima(mesh, &total))
}

/// Keep a value only when it exceeds the 85th percentile of its 2-ring.
fn inhibit(mesh: &TriMesh, map: &[f64]) -> Vec<f64> {
    (0..mesh.vertex_count())
        .map(|v| {
            let Ok(ring) = mesh.vertex_rings(v, 2) else {
                return 0.0;
            };
            if ring.is_empty() {
                return 0.0;
            }
            let below = ring.iter().filter(|&&u| map[u] < map[v]).count();
            if (below as f64) >= INHIBITION_QUANTILE * (ring.len() as f64) {
                map[v]
            } else {
                0.0
            }
        })
        .collect()
}

/// Gaussian-weighted average position over the ball of radius 2*sigma,
/// with the number of contributing vertices.
fn smoothed_position(
    mesh: &TriMesh,
    grid: &SpatialGrid,
    center: usize,
    sigma: f64,
) -> (nalgebra::Vector3<f64>, usize) {
    let p = mesh.vertex(center);
    let mut num = nalgebra::Vector3::zeros();
    let mut den = 0.0;
    let members = grid.query_ball(&p, 2.0 * sigma);
    let count = members.len();
    for u in members {
        let d2 = (mesh.vertex(u) - p).norm_squared();
        let w = (-d2 / (2.0 * sigma * sigma)).exp();
        num += w * mesh.vertex(u).coords;
        den += w;
    }
    if den > 0.0 {
        (num / den, count)
    } else {
        (p.coords, count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn decimation_schedule_is_fixed() {
        assert_eq!(DECIMATION_FRACTIONS, [0.0, 0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn inhibition_zeroes_below_percentile() {
        let mesh = shapes::grid(10, 2.0);
        // a single hot vertex; everything else below its own neighborhood's
        // 85th percentile must map to exactly zero
        let mut map = vec![0.0; mesh.vertex_count()];
        map[60] = 1.0;
        let inhibited = inhibit(&mesh, &map);
        for (v, &x) in inhibited.iter().enumerate() {
            if v == 60 {
                assert_eq!(x, 1.0, "hot vertex survives");
            } else {
                assert_eq!(x, 0.0, "vertex {v} must be inhibited");
            }
        }
    }

    #[test]
    fn icosphere_yields_almost_nothing() {
        let mesh = shapes::icosphere(1.0, 3);
        let set = castellani_points(&mesh).unwrap();
        assert!(
            set.len() <= 5,
            "constant-curvature sphere produced {} repeatable points",
            set.len()
        );
    }

    #[test]
    fn bump_plane_detects_the_bump() {
        // dense enough that the filter scales resolve the surface
        let (mesh, apex) = shapes::bump_plane(120, 2.0, 0.5, 0.2);
        let set = castellani_points(&mesh).unwrap();
        assert!(!set.is_empty(), "bump should be repeatable across levels");
        // the detection lands on or next to the apex
        let mut near_apex: Vec<usize> = mesh.vertex_rings(apex, 2).unwrap().into_iter().collect();
        near_apex.push(apex);
        assert!(
            set.indices.iter().any(|i| near_apex.contains(i)),
            "no selected point near apex: {:?}",
            set.indices
        );
    }

    #[test]
    fn coarse_meshes_are_sub_resolution() {
        // filter scales are far below this mesh's vertex spacing: every
        // scale map is skipped and no artifact points appear
        let mesh = shapes::torus(1.0, 0.3, 32, 16);
        let set = castellani_points(&mesh).unwrap();
        assert!(set.is_empty());
        assert!(set.degenerate);
    }

    #[test]
    fn deterministic() {
        let (mesh, _) = shapes::bump_plane(60, 2.0, 0.5, 0.2);
        let a = castellani_points(&mesh).unwrap();
        let b = castellani_points(&mesh).unwrap();
        assert_eq!(a.indices, b.indices);
    }
}
