//! Sample point selection: uniform random vertices and three salient
//! point detectors.
//!
//! Every method returns a deterministic set of distinct vertex indices.
//! Detectors that can legitimately come up empty (degenerate geometry)
//! mark the set instead of failing.

mod castellani;
mod harris;
mod saliency;

pub use castellani::{castellani_points, DECIMATION_FRACTIONS};
pub use harris::{harris3d, harris_response, HarrisParams, Neighborhood};
pub use saliency::mesh_saliency;

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Vertices selected on one mesh by one method.
#[derive(Debug, Clone)]
pub struct SamplePointSet {
    pub mesh_id: String,
    pub method: String,
    /// Distinct vertex indices, ascending.
    pub indices: Vec<usize>,
    /// Optional per-point score, parallel to `indices`.
    pub scores: Option<Vec<f64>>,
    /// Set when degenerate geometry produced an empty (or unreliable) set.
    pub degenerate: bool,
}

impl SamplePointSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// One header line, then one vertex index (and optional score) per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# mesh={} method={} degenerate={}",
            self.mesh_id, self.method, self.degenerate as u8
        )?;
        match &self.scores {
            Some(scores) => {
                for (i, s) in self.indices.iter().zip(scores) {
                    writeln!(w, "{i} {s}")?;
                }
            }
            None => {
                for i in &self.indices {
                    writeln!(w, "{i}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty point set file"))??;
        let mut mesh_id = None;
        let mut method = None;
        let mut degenerate = false;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("mesh", v)) => mesh_id = Some(v.to_string()),
                Some(("method", v)) => method = Some(v.to_string()),
                Some(("degenerate", v)) => degenerate = v == "1",
                _ => {}
            }
        }
        let (Some(mesh_id), Some(method)) = (mesh_id, method) else {
            return Err(Error::parse(1, "point set header missing mesh= or method="));
        };

        let mut indices = Vec::new();
        let mut scores = Vec::new();
        for (ln, line) in lines.enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(first) = parts.next() else { continue };
            let idx: usize = first
                .parse()
                .map_err(|_| Error::parse(ln + 2, format!("bad vertex index {first:?}")))?;
            indices.push(idx);
            if let Some(second) = parts.next() {
                let s: f64 = second
                    .parse()
                    .map_err(|_| Error::parse(ln + 2, format!("bad score {second:?}")))?;
                scores.push(s);
            }
        }
        let scores = if scores.len() == indices.len() && !indices.is_empty() {
            Some(scores)
        } else {
            None
        };
        Ok(SamplePointSet {
            mesh_id,
            method,
            indices,
            scores,
            degenerate,
        })
    }
}

/// Sort indices ascending, carrying scores along.
pub(crate) fn sorted_set(
    mesh: &TriMesh,
    method: &str,
    mut pairs: Vec<(usize, f64)>,
    degenerate: bool,
) -> SamplePointSet {
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    pairs.dedup_by_key(|p| p.0);
    SamplePointSet {
        mesh_id: mesh.id.clone(),
        method: method.to_string(),
        scores: Some(pairs.iter().map(|p| p.1).collect()),
        indices: pairs.into_iter().map(|p| p.0).collect(),
        degenerate,
    }
}

/// `n` distinct vertices drawn uniformly without replacement.
pub fn random_points(mesh: &TriMesh, n: usize, seed: u64) -> Result<SamplePointSet> {
    let v = mesh.vertex_count();
    if n == 0 || n > v {
        return Err(Error::Arg(format!(
            "cannot sample {n} distinct vertices from {v}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, v, n).into_vec();
    indices.sort_unstable();
    Ok(SamplePointSet {
        mesh_id: mesh.id.clone(),
        method: "random".to_string(),
        indices,
        scores: None,
        degenerate: false,
    })
}

/// Strict local maxima of a per-vertex field over the 1-ring.
pub(crate) fn strict_local_maxima(mesh: &TriMesh, field: &[f64]) -> Vec<usize> {
    (0..mesh.vertex_count())
        .filter(|&v| {
            let nbrs = mesh.neighbors(v);
            !nbrs.is_empty() && nbrs.iter().all(|&u| field[v] > field[u])
        })
        .collect()
}

/// Min-max normalize a field into [0, 1]; constant fields become zeros.
pub(crate) fn normalize_unit(field: &mut [f64]) {
    let min = field.iter().copied().fold(f64::INFINITY, f64::min);
    let max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span > 0.0 {
        for x in field.iter_mut() {
            *x = (*x - min) / span;
        }
    } else {
        field.iter_mut().for_each(|x| *x = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn random_all_vertices() {
        let mesh = shapes::icosphere(1.0, 1);
        let set = random_points(&mesh, mesh.vertex_count(), 3).unwrap();
        assert_eq!(set.indices, (0..mesh.vertex_count()).collect::<Vec<_>>());
    }

    #[test]
    fn random_is_deterministic() {
        let mesh = shapes::icosphere(1.0, 2);
        let a = random_points(&mesh, 40, 99).unwrap();
        let b = random_points(&mesh, 40, 99).unwrap();
        assert_eq!(a.indices, b.indices);
        let c = random_points(&mesh, 40, 100).unwrap();
        assert_ne!(a.indices, c.indices, "different seed should differ");
    }

    #[test]
    fn random_rejects_oversampling() {
        let mesh = shapes::tetrahedron();
        assert!(random_points(&mesh, 5, 0).is_err());
        assert!(random_points(&mesh, 0, 0).is_err());
        assert!(random_points(&mesh, 4, 0).is_ok());
    }

    #[test]
    fn random_indices_distinct_and_valid() {
        let mesh = shapes::icosphere(1.0, 2);
        let set = random_points(&mesh, 100, 7).unwrap();
        assert_eq!(set.len(), 100);
        for w in set.indices.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(*set.indices.last().unwrap() < mesh.vertex_count());
    }

    #[test]
    fn point_set_text_round_trip() {
        let mesh = shapes::tetrahedron();
        let set = SamplePointSet {
            mesh_id: mesh.id.clone(),
            method: "harris-rings".into(),
            indices: vec![0, 2, 3],
            scores: Some(vec![0.5, 0.25, 0.125]),
            degenerate: false,
        };
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        let back = SamplePointSet::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.mesh_id, set.mesh_id);
        assert_eq!(back.method, set.method);
        assert_eq!(back.indices, set.indices);
        assert_eq!(back.scores, set.scores);
        assert!(!back.degenerate);
    }
}
