//! Mesh simplification by shortest-edge half-collapse.
//!
//! Each collapse merges the higher-index endpoint into the lower one, so
//! every surviving vertex keeps its original position and maps back to an
//! original vertex id. Collapses are rejected when they would break the
//! link condition (create a non-manifold configuration or flatten a closed
//! surface below the tetrahedron minimum).

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::mesh::TriMesh;
use crate::{Error, Result};

/// A simplified mesh together with its vertex provenance.
#[derive(Debug, Clone)]
pub struct Decimated {
    pub mesh: TriMesh,
    /// Original vertex id of each decimated vertex.
    pub source_vertices: Vec<usize>,
    /// False when collapses ran out before the requested vertex budget.
    pub reached_target: bool,
}

#[derive(PartialEq)]
struct HeapEdge {
    length: f64,
    a: usize,
    b: usize,
}

impl Eq for HeapEdge {}

impl PartialOrd for HeapEdge {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEdge {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.length
            .total_cmp(&other.length)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Remove approximately `fraction_removed * V` vertices.
pub fn decimate(mesh: &TriMesh, fraction_removed: f64) -> Result<Decimated> {
    if !(0.0..1.0).contains(&fraction_removed) {
        return Err(Error::Arg(format!(
            "fraction_removed must be in [0, 1), got {fraction_removed}"
        )));
    }
    let target = (fraction_removed * mesh.vertex_count() as f64).round() as usize;
    if target == 0 {
        return Ok(Decimated {
            mesh: mesh.clone(),
            source_vertices: (0..mesh.vertex_count()).collect(),
            reached_target: true,
        });
    }

    let mut state = CollapseState::new(mesh);
    let mut removed = 0usize;
    while removed < target {
        let before = removed;
        let mut heap: BinaryHeap<Reverse<HeapEdge>> = state.live_edges().collect();
        while removed < target {
            let Some(Reverse(e)) = heap.pop() else { break };
            if !state.edge_alive(e.a, e.b) {
                continue;
            }
            if !state.link_condition(e.a, e.b) {
                continue; // may become legal later; retried next pass
            }
            for w in state.collapse(e.a, e.b) {
                heap.push(Reverse(state.heap_edge(e.a, w)));
            }
            removed += 1;
        }
        if removed == before {
            break; // no legal collapse anywhere
        }
    }

    let (verts, faces, source_vertices) = state.compact(mesh);
    Ok(Decimated {
        mesh: TriMesh::new(mesh.id.clone(), verts, faces)?,
        source_vertices,
        reached_target: removed >= target,
    })
}

struct CollapseState<'a> {
    mesh: &'a TriMesh,
    alive: Vec<bool>,
    neighbors: Vec<BTreeSet<usize>>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<BTreeSet<usize>>,
}

impl<'a> CollapseState<'a> {
    fn new(mesh: &'a TriMesh) -> Self {
        let n = mesh.vertex_count();
        let mut neighbors = vec![BTreeSet::new(); n];
        let mut vertex_faces = vec![BTreeSet::new(); n];
        for (fi, f) in mesh.faces().iter().enumerate() {
            for k in 0..3 {
                neighbors[f[k]].insert(f[(k + 1) % 3]);
                neighbors[f[k]].insert(f[(k + 2) % 3]);
                vertex_faces[f[k]].insert(fi);
            }
        }
        CollapseState {
            mesh,
            alive: vec![true; n],
            neighbors,
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.face_count()],
            vertex_faces,
        }
    }

    fn heap_edge(&self, a: usize, b: usize) -> HeapEdge {
        let (a, b) = (a.min(b), a.max(b));
        HeapEdge {
            length: (self.mesh.vertex(a) - self.mesh.vertex(b)).norm(),
            a,
            b,
        }
    }

    fn live_edges(&self) -> impl Iterator<Item = Reverse<HeapEdge>> + '_ {
        (0..self.alive.len())
            .filter(|&v| self.alive[v])
            .flat_map(move |v| {
                self.neighbors[v]
                    .iter()
                    .filter(move |&&w| w > v)
                    .map(move |&w| Reverse(self.heap_edge(v, w)))
            })
    }

    fn edge_alive(&self, a: usize, b: usize) -> bool {
        self.alive[a] && self.alive[b] && self.neighbors[a].contains(&b)
    }

    /// Third vertices of faces containing the edge (a, b).
    fn edge_opposites(&self, a: usize, b: usize) -> Vec<usize> {
        self.vertex_faces[a]
            .intersection(&self.vertex_faces[b])
            .map(|&f| {
                *self.faces[f]
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .expect("face on edge has a third vertex")
            })
            .collect()
    }

    fn has_face(&self, a: usize, b: usize, c: usize) -> bool {
        self.vertex_faces[a].iter().any(|&f| {
            self.face_alive[f] && self.faces[f].contains(&b) && self.faces[f].contains(&c)
        })
    }

    /// Link condition for a half-collapse of edge (a, b): shared vertex
    /// neighbors must be exactly the opposite vertices of the shared faces,
    /// and the opposite pair must not span faces on both sides (which would
    /// pinch a tetrahedron-like region into a doubled face).
    fn link_condition(&self, a: usize, b: usize) -> bool {
        let mut opposites = self.edge_opposites(a, b);
        opposites.sort_unstable();
        opposites.dedup();
        if opposites.is_empty() || opposites.len() > 2 {
            return false;
        }
        let common: Vec<usize> = self.neighbors[a]
            .intersection(&self.neighbors[b])
            .copied()
            .collect();
        if common != opposites {
            return false;
        }
        if let [w, x] = opposites[..] {
            if self.has_face(a, w, x) && self.has_face(b, w, x) {
                return false;
            }
        }
        true
    }

    /// Merge the higher-index endpoint into the lower one. Returns the
    /// surviving vertex's new neighbors (for heap updates).
    fn collapse(&mut self, a: usize, b: usize) -> Vec<usize> {
        let (keep, gone) = (a.min(b), a.max(b));
        let gone_faces: Vec<usize> = self.vertex_faces[gone].iter().copied().collect();
        for f in gone_faces {
            if self.faces[f].contains(&keep) {
                // face spanned the collapsed edge; drop it
                self.face_alive[f] = false;
                for v in self.faces[f] {
                    self.vertex_faces[v].remove(&f);
                }
            } else {
                for v in self.faces[f].iter_mut() {
                    if *v == gone {
                        *v = keep;
                    }
                }
                self.vertex_faces[keep].insert(f);
            }
        }
        self.vertex_faces[gone].clear();

        let mut fresh = Vec::new();
        let gone_neighbors: Vec<usize> = self.neighbors[gone].iter().copied().collect();
        for w in gone_neighbors {
            self.neighbors[w].remove(&gone);
            if w != keep {
                self.neighbors[w].insert(keep);
                if self.neighbors[keep].insert(w) {
                    fresh.push(w);
                }
            }
        }
        self.neighbors[gone].clear();
        self.neighbors[keep].remove(&gone);
        self.alive[gone] = false;
        fresh
    }

    fn compact(&self, mesh: &TriMesh) -> (Vec<nalgebra::Point3<f64>>, Vec<[usize; 3]>, Vec<usize>) {
        let mut remap = vec![usize::MAX; self.alive.len()];
        let mut verts = Vec::new();
        let mut source = Vec::new();
        for (v, &alive) in self.alive.iter().enumerate() {
            if alive {
                remap[v] = verts.len();
                verts.push(mesh.vertex(v));
                source.push(v);
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(f, _)| [remap[f[0]], remap[f[1]], remap[f[2]]])
            .collect();
        (verts, faces, source)
    }
}
