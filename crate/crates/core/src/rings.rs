//! Concentric surface rings around a vertex.
//!
//! A ring is the closed intersection curve of a sphere centered on a vertex
//! with the mesh surface, approximated by clipping each triangle against
//! the sphere and chaining the resulting segments into loops. Rings are
//! resampled at fixed arc-length spacing, and per-ring value sets are
//! compressed by percentile ("histogram") sampling.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{Point3, Vector3};

use crate::geometry;
use crate::mesh::TriMesh;
use crate::spatial::SpatialGrid;
use crate::{Error, Result};

/// Number of rings used by the descriptors.
pub const DEFAULT_RING_COUNT: usize = 5;
/// Outermost ring radius as a fraction of the bounding-box diagonal.
pub const RING_RADIUS_FACTOR: f64 = 0.0375;
/// Values retained per ring by histogram sampling.
pub const SAMPLES_PER_RING: usize = 7;
/// Percentiles retained by histogram sampling.
pub const PERCENTILES: [f64; 7] = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
/// Arc-length samples per full ring circumference.
pub const ARC_SAMPLES_PER_RING: f64 = 20.0;

/// Ring sphere radii: step `diagonal * 0.0375 / ring_count`, radii are the
/// step's first `ring_count` multiples, so the outermost radius is
/// `0.0375 * diagonal` for any ring count.
pub fn ring_radii(diagonal: f64, ring_count: usize) -> Result<Vec<f64>> {
    if diagonal <= 0.0 {
        return Err(Error::Arg(format!(
            "bounding box diagonal must be positive, got {diagonal}"
        )));
    }
    if ring_count == 0 {
        return Err(Error::Arg("ring count must be at least 1".into()));
    }
    let step = diagonal * RING_RADIUS_FACTOR / ring_count as f64;
    Ok((1..=ring_count).map(|j| j as f64 * step).collect())
}

/// A point of the intersection curve, pinned to a mesh edge.
#[derive(Debug, Clone)]
pub struct RingPoint {
    pub position: Point3<f64>,
    /// Mesh edge (low index, high index) carrying this point.
    pub edge: (usize, usize),
    /// Parameter along the edge from the low-index vertex.
    pub t: f64,
}

/// A closed intersection loop, ordered counterclockwise about the center
/// vertex normal. Segment `i` connects `points[i]` to `points[(i+1) % n]`
/// and lies inside `segment_faces[i]`.
#[derive(Debug, Clone)]
pub struct RingPolyline {
    pub points: Vec<RingPoint>,
    pub segment_faces: Vec<usize>,
    pub radius: f64,
}

impl RingPolyline {
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n].position - self.points[i].position).norm())
            .sum()
    }
}

/// A resampled ring point with barycentric coordinates for attribute
/// interpolation.
#[derive(Debug, Clone)]
pub struct SamplePoint {
    pub position: Point3<f64>,
    pub face: usize,
    pub bary: [f64; 3],
}

/// The rings of one vertex. `rings[i]` is `None` where the sphere of
/// `radii[i]` produced no closed intersection loop.
#[derive(Debug, Clone)]
pub struct RingSet {
    pub center: usize,
    pub rings: Vec<Option<RingPolyline>>,
    pub radii: Vec<f64>,
}

/// Extract the ring around `center` at one radius. `None` is the
/// empty-ring signal (no closed intersection loop).
pub fn extract_ring(mesh: &TriMesh, center: usize, radius: f64) -> Option<RingPolyline> {
    RingExtractor::new(mesh).extract(center, radius)
}

/// Reusable extraction context for one mesh: spatial index plus vertex
/// normals for loop orientation.
pub struct RingExtractor<'a> {
    mesh: &'a TriMesh,
    grid: SpatialGrid,
    normals: Vec<Vector3<f64>>,
    max_edge_len: f64,
}

impl<'a> RingExtractor<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut max_edge_len: f64 = 0.0;
        for f in mesh.faces() {
            for k in 0..3 {
                let len = (mesh.vertex(f[(k + 1) % 3]) - mesh.vertex(f[k])).norm();
                max_edge_len = max_edge_len.max(len);
            }
        }
        let cell = if max_edge_len > 0.0 { max_edge_len } else { 1.0 };
        RingExtractor {
            mesh,
            grid: SpatialGrid::new(mesh.vertices(), cell),
            normals: geometry::vertex_normals(mesh),
            max_edge_len,
        }
    }

    /// Rings at every radius of the schedule.
    pub fn ring_set(&self, center: usize, radii: &[f64]) -> RingSet {
        RingSet {
            center,
            rings: radii.iter().map(|&r| self.extract(center, r)).collect(),
            radii: radii.to_vec(),
        }
    }

    pub fn extract(&self, center: usize, radius: f64) -> Option<RingPolyline> {
        // A sphere passing exactly through mesh vertices breaks segment
        // chaining (the crossing belongs to several edges at once). Nudge
        // the radius off the degenerate configuration and retry; the
        // perturbation is far below the point-distance tolerance.
        for bump in [1.0, 1.0 + 2.7e-12, 1.0 - 3.1e-12] {
            let got = self.extract_exact(center, radius * bump);
            if got.is_some() {
                return got;
            }
        }
        None
    }

    fn extract_exact(&self, center: usize, radius: f64) -> Option<RingPolyline> {
        let p = self.mesh.vertex(center);

        // any edge crossing the sphere has an endpoint within radius + edge length
        let local = self.grid.query_ball(&p, radius + self.max_edge_len);
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut faces: BTreeSet<usize> = BTreeSet::new();
        for &v in &local {
            for &w in self.mesh.neighbors(v) {
                edges.insert((v.min(w), v.max(w)));
            }
            faces.extend(self.mesh.faces_around(v).iter().copied());
        }

        // intersection points per edge, keyed for exact chaining
        let mut points: Vec<RingPoint> = Vec::new();
        let mut edge_points: HashMap<(usize, usize), Vec<(f64, usize)>> = HashMap::new();
        for &(a, b) in &edges {
            let pa = self.mesh.vertex(a);
            let pb = self.mesh.vertex(b);
            let roots = sphere_edge_roots(&p, radius, &pa, &pb);
            if roots.is_empty() {
                continue;
            }
            let entry = edge_points.entry((a, b)).or_default();
            for t in roots {
                let pos = pa + (pb - pa) * t;
                entry.push((t, points.len()));
                points.push(RingPoint {
                    position: pos,
                    edge: (a, b),
                    t,
                });
            }
        }
        if points.is_empty() {
            return None;
        }

        // clip each candidate face: pair its boundary points into segments
        let mut segments: Vec<(usize, usize, usize)> = Vec::new(); // (pid, pid, face)
        for &f in &faces {
            let tri = self.mesh.face(f);
            let mut on_face: Vec<usize> = Vec::new();
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if let Some(list) = edge_points.get(&(a.min(b), a.max(b))) {
                    on_face.extend(list.iter().map(|&(_, pid)| pid));
                }
            }
            match on_face.len() {
                2 => segments.push((on_face[0], on_face[1], f)),
                4 => {
                    let pairs = pair_four(self.mesh, f, &p, &points, &on_face);
                    for (x, y) in pairs {
                        segments.push((x, y, f));
                    }
                }
                _ => {} // 0/1 no crossing; odd counts are tangency noise
            }
        }

        let loops = chain_loops(points.len(), &segments);
        let best = loops
            .into_iter()
            .filter(|l| l.len() >= 3)
            .min_by(|a, b| {
                let da = centroid_distance(&points, a, &p);
                let db = centroid_distance(&points, b, &p);
                da.total_cmp(&db)
            })?;

        // face of each consecutive point pair
        let seg_face: HashMap<(usize, usize), usize> = segments
            .iter()
            .map(|&(x, y, f)| ((x.min(y), x.max(y)), f))
            .collect();

        let mut ordered: Vec<RingPoint> = best.iter().map(|&pid| points[pid].clone()).collect();
        let mut ids = best;

        // orient counterclockwise around the center vertex normal
        let n = self.normals[center];
        let c = ordered
            .iter()
            .fold(Vector3::zeros(), |acc, q| acc + q.position.coords)
            / ordered.len() as f64;
        let mut winding = 0.0;
        for i in 0..ordered.len() {
            let a = ordered[i].position.coords - c;
            let b = ordered[(i + 1) % ordered.len()].position.coords - c;
            winding += a.cross(&b).dot(&n);
        }
        if winding < 0.0 {
            ordered.reverse();
            ids.reverse();
        }

        let m = ids.len();
        let segment_faces = (0..m)
            .map(|i| seg_face[&key(ids[i], ids[(i + 1) % m])])
            .collect();
        Some(RingPolyline {
            points: ordered,
            segment_faces,
            radius,
        })
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn centroid_distance(points: &[RingPoint], ids: &[usize], p: &Point3<f64>) -> f64 {
    let c = ids
        .iter()
        .fold(Vector3::zeros(), |acc, &i| acc + points[i].position.coords)
        / ids.len() as f64;
    (c - p.coords).norm()
}

/// Roots of |pa + t (pb - pa) - center|^2 = radius^2 strictly inside (0, 1).
fn sphere_edge_roots(center: &Point3<f64>, radius: f64, pa: &Point3<f64>, pb: &Point3<f64>) -> Vec<f64> {
    let d = pb - pa;
    let m = pa - center;
    let a = d.norm_squared();
    if a == 0.0 {
        return Vec::new();
    }
    let b = 2.0 * m.dot(&d);
    let c = m.norm_squared() - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return Vec::new(); // tangency counts as no crossing
    }
    let sq = disc.sqrt();
    // numerically stable quadratic roots
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [q / a, if q != 0.0 { c / q } else { f64::INFINITY }];
    roots.sort_by(f64::total_cmp);
    // a nearly-tangent edge yields a root pair spanning a zero-length
    // detour whose presence flips under rounding noise; drop the pair
    if roots[1] - roots[0] < 1e-6 {
        return Vec::new();
    }
    const EPS: f64 = 1e-12;
    roots
        .into_iter()
        .filter(|t| (EPS..1.0 - EPS).contains(t))
        .collect()
}

/// Pair four sphere crossings of one triangle into the two chords that
/// run inside it.
///
/// Walking the in-plane intersection circle, crossings alternate between
/// entering and leaving the triangle; the circle tangent against the
/// crossed edge's inward normal tells which. Pairing each entry with the
/// next crossing in angular order is robust far from tangency (where the
/// dot product would vanish), unlike a midpoint-in-triangle test which
/// flips under rounding when chords hug the boundary.
fn pair_four(
    mesh: &TriMesh,
    face: usize,
    center: &Point3<f64>,
    points: &[RingPoint],
    ids: &[usize],
) -> Vec<(usize, usize)> {
    let [a, b, c] = mesh.face(face);
    let (pa, pb, pc) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
    let n = (pb - pa).cross(&(pc - pa));
    // in-plane circle center: projection of the sphere center onto the plane
    let o = center - n * ((center - pa).dot(&n) / n.norm_squared());
    let e1 = (pb - pa).normalize();
    let e2 = n.cross(&e1).normalize();

    let corners = [pa, pb, pc];
    let corner_idx = [a, b, c];
    let inward_normal = |pid: usize| -> Vector3<f64> {
        let (ea, eb) = points[pid].edge;
        let k = (0..3)
            .find(|&k| {
                let (x, y) = (corner_idx[k], corner_idx[(k + 1) % 3]);
                (x == ea && y == eb) || (x == eb && y == ea)
            })
            .expect("point's edge belongs to the face");
        let edge_dir = corners[(k + 1) % 3] - corners[k];
        let opposite = corners[(k + 2) % 3];
        let m = n.cross(&edge_dir);
        if m.dot(&(opposite - corners[k])) >= 0.0 {
            m
        } else {
            -m
        }
    };

    let mut by_angle: Vec<(f64, usize)> = ids
        .iter()
        .map(|&pid| {
            let d = points[pid].position - o;
            (d.dot(&e2).atan2(d.dot(&e1)), pid)
        })
        .collect();
    by_angle.sort_by(|x, y| x.0.total_cmp(&y.0));
    let ordered: Vec<usize> = by_angle.iter().map(|&(_, pid)| pid).collect();

    // entering iff the circle tangent heads into the triangle
    let entering = |pid: usize| -> bool {
        let tangent = n.cross(&(points[pid].position - o));
        tangent.dot(&inward_normal(pid)) > 0.0
    };
    let flags: Vec<bool> = ordered.iter().map(|&pid| entering(pid)).collect();
    let start = if flags == [true, false, true, false] {
        0
    } else if flags == [false, true, false, true] {
        1
    } else {
        // tangency noise: fall back to the shorter-chords pairing
        let chord = |x: usize, y: usize| (points[x].position - points[y].position).norm();
        let even = chord(ordered[0], ordered[1]) + chord(ordered[2], ordered[3]);
        let odd = chord(ordered[1], ordered[2]) + chord(ordered[3], ordered[0]);
        usize::from(odd < even)
    };
    vec![
        (ordered[start], ordered[(start + 1) % 4]),
        (ordered[(start + 2) % 4], ordered[(start + 3) % 4]),
    ]
}

/// Barycentric coordinates of a point in a triangle's plane.
pub fn barycentric(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<[f64; 3]> {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    if denom.abs() < 1e-300 {
        return None;
    }
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    Some([1.0 - v - w, v, w])
}

/// Chain segments into closed loops of point ids. Only loops where every
/// visited point has exactly two incident segments are returned.
fn chain_loops(point_count: usize, segments: &[(usize, usize, usize)]) -> Vec<Vec<usize>> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); point_count];
    for (si, &(a, b, _)) in segments.iter().enumerate() {
        incident[a].push(si);
        incident[b].push(si);
    }
    let mut seg_used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..point_count {
        if incident[start].len() != 2 || incident[start].iter().any(|&s| seg_used[s]) {
            continue;
        }
        let mut walk = vec![start];
        let mut current = start;
        let mut closed = false;
        loop {
            let Some(&si) = incident[current].iter().find(|&&s| !seg_used[s]) else {
                break;
            };
            seg_used[si] = true;
            let (a, b, _) = segments[si];
            let next = if a == current { b } else { a };
            if next == start {
                closed = true;
                break;
            }
            if incident[next].len() != 2 {
                break; // dangling chain, not a loop
            }
            walk.push(next);
            current = next;
        }
        if closed {
            loops.push(walk);
        }
    }
    loops
}

/// Resample a closed ring at fixed arc-length spacing from a deterministic
/// start point (the point with the lexicographically smallest edge key, so
/// resampling commutes with rigid motion). Returns `None` when the
/// perimeter is below three spacings (degenerate-ring signal).
pub fn resample_ring(mesh: &TriMesh, ring: &RingPolyline, spacing: f64) -> Option<Vec<SamplePoint>> {
    if spacing <= 0.0 || ring.points.len() < 2 {
        return None;
    }
    let n = ring.points.len();
    let perimeter = ring.perimeter();
    if perimeter < 3.0 * spacing {
        return None;
    }
    // guard floor() against round-off when L is an exact multiple of s
    let count = ((perimeter / spacing) + 1e-9).floor() as usize;

    let start = (0..n)
        .min_by(|&i, &j| {
            let a = &ring.points[i];
            let b = &ring.points[j];
            (a.edge, a.t).partial_cmp(&(b.edge, b.t)).unwrap()
        })
        .unwrap();

    let seg_len: Vec<f64> = (0..n)
        .map(|i| {
            let a = start + i;
            (ring.points[(a + 1) % n].position - ring.points[a % n].position).norm()
        })
        .collect();

    let mut samples = Vec::with_capacity(count);
    let mut seg = 0usize;
    let mut seg_start_arc = 0.0;
    for k in 0..count {
        let target = k as f64 * spacing;
        while seg + 1 < n && seg_start_arc + seg_len[seg] < target {
            seg_start_arc += seg_len[seg];
            seg += 1;
        }
        let i = (start + seg) % n;
        let j = (start + seg + 1) % n;
        let u = if seg_len[seg] > 0.0 {
            ((target - seg_start_arc) / seg_len[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        samples.push(interpolate_on_segment(mesh, ring, i, j, u));
    }
    Some(samples)
}

fn interpolate_on_segment(
    mesh: &TriMesh,
    ring: &RingPolyline,
    i: usize,
    j: usize,
    u: f64,
) -> SamplePoint {
    let face = ring.segment_faces[i];
    let corners = mesh.face(face);
    let a = &ring.points[i];
    let b = &ring.points[j];
    let position = Point3::from(a.position.coords * (1.0 - u) + b.position.coords * u);
    SamplePoint {
        position,
        face,
        bary: lerp_bary(edge_bary(a, corners), edge_bary(b, corners), u),
    }
}

fn lerp_bary(a: [f64; 3], b: [f64; 3], u: f64) -> [f64; 3] {
    [
        a[0] * (1.0 - u) + b[0] * u,
        a[1] * (1.0 - u) + b[1] * u,
        a[2] * (1.0 - u) + b[2] * u,
    ]
}

/// Barycentric coordinates of an edge point in a face's corner order.
/// The face must contain the point's edge.
fn edge_bary(pt: &RingPoint, corners: [usize; 3]) -> [f64; 3] {
    let (a, b) = pt.edge;
    let mut bary = [0.0; 3];
    for (k, &v) in corners.iter().enumerate() {
        if v == a {
            bary[k] = 1.0 - pt.t;
        } else if v == b {
            bary[k] = pt.t;
        }
    }
    bary
}

/// Interpolate per-vertex scalars at a resampled point.
pub fn interpolate_vertex_values(mesh: &TriMesh, sample: &SamplePoint, values: &[f64]) -> f64 {
    let f = mesh.face(sample.face);
    sample.bary[0] * values[f[0]] + sample.bary[1] * values[f[1]] + sample.bary[2] * values[f[2]]
}

/// Interpolate per-vertex vectors (e.g. normals) at a resampled point.
pub fn interpolate_vertex_vectors(
    mesh: &TriMesh,
    sample: &SamplePoint,
    vectors: &[Vector3<f64>],
) -> Vector3<f64> {
    let f = mesh.face(sample.face);
    vectors[f[0]] * sample.bary[0] + vectors[f[1]] * sample.bary[1] + vectors[f[2]] * sample.bary[2]
}

/// Histogram sampling: keep the sorted values at the percentile indices
/// `round(p * (n - 1))`, rounding half away from zero.
pub fn histogram_sample(values: &[f64]) -> Result<[f64; SAMPLES_PER_RING]> {
    if values.is_empty() {
        return Err(Error::Arg("histogram sampling of an empty value set".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out = [0.0; SAMPLES_PER_RING];
    for (k, &p) in PERCENTILES.iter().enumerate() {
        let idx = (p * (n - 1) as f64).round() as usize;
        out[k] = sorted[idx.min(n - 1)];
    }
    Ok(out)
}
