//! Bag-of-words machinery: k-means dictionaries, word histograms,
//! descriptor combination and the pairwise dissimilarity matrix.
//!
//! Clustering is k-means++ seeded and fully deterministic: the assignment
//! step is a pure parallel map and all accumulation runs in fixed order,
//! so dictionaries are bit-identical regardless of worker count.

use std::collections::HashSet;
use std::io::{BufRead, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::{read_string, write_string};
use crate::{Error, Result};

const DICT_MAGIC: &[u8; 4] = b"SRDC";
const DICT_VERSION: u32 = 1;
const MATRIX_MAGIC: &[u8; 4] = b"SRDX";
const MATRIX_VERSION: u32 = 1;

pub const DEFAULT_MAX_ITER: usize = 100;

/// A visual dictionary: cluster centers in reduced descriptor space.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub kind_tag: String,
    pub dim: usize,
    /// Row-major `len x dim` centers.
    pub centers: Vec<f64>,
    pub seed: u64,
    /// Completed Lloyd iterations.
    pub iterations: usize,
    /// Final sum of squared distances to assigned centers.
    pub objective: f64,
    /// Objective after seeding and after each iteration (non-increasing).
    pub objective_history: Vec<f64>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.centers.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DICT_MAGIC)?;
        w.write_u32::<LittleEndian>(DICT_VERSION)?;
        write_string(&mut w, &self.kind_tag)?;
        w.write_u64::<LittleEndian>(self.len() as u64)?;
        w.write_u64::<LittleEndian>(self.dim as u64)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        for &x in &self.centers {
            w.write_f64::<LittleEndian>(x)?;
        }
        Ok(())
    }

    /// Read a dictionary cache file. Training metadata (iterations,
    /// objective) is not part of the format and comes back zeroed.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DICT_MAGIC {
            return Err(Error::Format("not a dictionary file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != DICT_VERSION {
            return Err(Error::Format(format!("unsupported dictionary version {version}")));
        }
        let kind_tag = read_string(&mut r)?;
        let count = r.read_u64::<LittleEndian>()? as usize;
        let dim = r.read_u64::<LittleEndian>()? as usize;
        let seed = r.read_u64::<LittleEndian>()?;
        let mut centers = vec![0f64; count * dim];
        for x in centers.iter_mut() {
            *x = r.read_f64::<LittleEndian>()?;
        }
        Ok(Dictionary {
            kind_tag,
            dim,
            centers,
            seed,
            iterations: 0,
            objective: 0.0,
            objective_history: Vec::new(),
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center index (ties to the lowest index) and squared distance.
fn nearest_center(vector: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(vector, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// Cluster `vectors` (row-major, `dim` columns) into `d` centers.
///
/// k-means++ seeding from `seed`, Lloyd iterations to an assignment
/// fixpoint or `max_iter`. Emptied clusters are re-seeded to the point
/// farthest from its assigned center so exactly `d` words survive.
pub fn kmeans(vectors: &[f64], dim: usize, d: usize, seed: u64, max_iter: usize) -> Result<Dictionary> {
    if dim == 0 || vectors.len() % dim != 0 {
        return Err(Error::Arg("vector data does not match dimension".into()));
    }
    let n = vectors.len() / dim;
    if max_iter == 0 {
        return Err(Error::Arg("max_iter must be at least 1".into()));
    }
    let distinct = {
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for row in vectors.chunks_exact(dim) {
            seen.insert(row.iter().map(|x| x.to_bits()).collect());
        }
        seen.len()
    };
    if d == 0 || d > distinct {
        return Err(Error::Arg(format!(
            "cannot build {d} words from {distinct} distinct vectors"
        )));
    }

    let row = |i: usize| &vectors[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centers: Vec<f64> = Vec::with_capacity(d * dim);
    let first = rng.gen_range(0..n);
    centers.extend_from_slice(row(first));
    let mut best_d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    while centers.len() / dim < d {
        let total: f64 = best_d2.iter().sum();
        // total > 0 is guaranteed while fewer than `distinct` centers exist
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = n - 1;
        for (i, &w) in best_d2.iter().enumerate() {
            pick -= w;
            if pick <= 0.0 && w > 0.0 {
                chosen = i;
                break;
            }
        }
        let c_start = centers.len();
        centers.extend_from_slice(row(chosen));
        let new_center = centers[c_start..].to_vec();
        for i in 0..n {
            let d2 = sq_dist(row(i), &new_center);
            if d2 < best_d2[i] {
                best_d2[i] = d2;
            }
        }
    }

    // Lloyd iterations
    let mut assignment = vec![0usize; n];
    let mut distances = vec![0f64; n];
    let assign = |centers: &[f64], assignment: &mut [usize], distances: &mut [f64]| {
        let results: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| nearest_center(row(i), centers, dim))
            .collect();
        let mut changed = false;
        for (i, (a, dist)) in results.into_iter().enumerate() {
            if assignment[i] != a {
                changed = true;
            }
            assignment[i] = a;
            distances[i] = dist;
        }
        changed
    };

    assign(&centers, &mut assignment, &mut distances);
    let mut history = vec![distances.iter().sum::<f64>()];
    let mut iterations = 0usize;

    for _ in 0..max_iter {
        // center update: means accumulated in point order
        let mut sums = vec![0f64; d * dim];
        let mut counts = vec![0usize; d];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        // re-seed empty clusters to the farthest points from their centers
        let mut by_distance: Vec<usize> = (0..n).collect();
        by_distance.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]).then(a.cmp(&b)));
        let mut steal = by_distance.into_iter();
        for c in 0..d {
            if counts[c] == 0 {
                let p = steal.next().expect("more points than clusters");
                sums[c * dim..(c + 1) * dim].copy_from_slice(row(p));
                counts[c] = 1;
            }
        }
        for c in 0..d {
            for s in sums[c * dim..(c + 1) * dim].iter_mut() {
                *s /= counts[c] as f64;
            }
        }
        centers = sums;

        let changed = assign(&centers, &mut assignment, &mut distances);
        history.push(distances.iter().sum::<f64>());
        iterations += 1;
        if !changed {
            break;
        }
    }

    Ok(Dictionary {
        kind_tag: String::new(),
        dim,
        centers,
        seed,
        iterations,
        objective: *history.last().unwrap(),
        objective_history: history,
    })
}

/// Index of the Euclidean-nearest word; ties break to the lowest index.
pub fn assign_word(vector: &[f64], dictionary: &Dictionary) -> Result<usize> {
    if vector.len() != dictionary.dim {
        return Err(Error::Dim {
            expected: dictionary.dim,
            got: vector.len(),
        });
    }
    Ok(nearest_center(vector, &dictionary.centers, dictionary.dim).0)
}

/// Normalized word histogram of one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub mesh_id: String,
    pub histogram: Vec<f64>,
    pub sample_count: usize,
}

/// Histogram of word counts over the sample vectors, divided by the
/// sample count so entries sum to one.
pub fn build_signature(
    mesh_id: impl Into<String>,
    vectors: &[f64],
    dim: usize,
    dictionary: &Dictionary,
) -> Result<Signature> {
    if dim == 0 || vectors.is_empty() || vectors.len() % dim != 0 {
        return Err(Error::Arg("signature needs at least one sample vector".into()));
    }
    let n = vectors.len() / dim;
    let mut histogram = vec![0f64; dictionary.len()];
    for v in vectors.chunks_exact(dim) {
        histogram[assign_word(v, dictionary)?] += 1.0;
    }
    for h in histogram.iter_mut() {
        *h /= n as f64;
    }
    Ok(Signature {
        mesh_id: mesh_id.into(),
        histogram,
        sample_count: n,
    })
}

/// Euclidean distance between signatures.
pub fn dissimilarity(a: &Signature, b: &Signature) -> Result<f64> {
    if a.histogram.len() != b.histogram.len() {
        return Err(Error::Dim {
            expected: a.histogram.len(),
            got: b.histogram.len(),
        });
    }
    Ok(sq_dist(&a.histogram, &b.histogram).sqrt())
}

/// Concatenate two same-size histograms into a 2D-word signature.
/// Halves are not renormalized; each keeps summing to one.
pub fn combine_histograms(a: &Signature, b: &Signature) -> Result<Signature> {
    if a.histogram.len() != b.histogram.len() {
        return Err(Error::Dim {
            expected: a.histogram.len(),
            got: b.histogram.len(),
        });
    }
    if a.mesh_id != b.mesh_id {
        return Err(Error::Arg(format!(
            "combining histograms of different meshes: {} vs {}",
            a.mesh_id, b.mesh_id
        )));
    }
    let mut histogram = a.histogram.clone();
    histogram.extend_from_slice(&b.histogram);
    Ok(Signature {
        mesh_id: a.mesh_id.clone(),
        histogram,
        sample_count: a.sample_count + b.sample_count,
    })
}

/// Reduced descriptor vectors evaluated at chosen sample points of one mesh.
#[derive(Debug, Clone)]
pub struct SampleVectors {
    pub mesh_id: String,
    pub points: Vec<usize>,
    pub dim: usize,
    /// Row-major `points.len() x dim`.
    pub data: Vec<f64>,
}

impl SampleVectors {
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// How two descriptors' vectors are paired before concatenation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    /// Both descriptors sampled at the same points.
    SamePoints,
    /// Independent draws of equal count, paired by position.
    DifferentPoints,
}

/// Concatenate two vector populations point-by-point. With `SamePoints`
/// the point lists must be identical; with `DifferentPoints` the i-th
/// points are paired and the counts must agree.
pub fn combine_vectors(
    a: &SampleVectors,
    b: &SampleVectors,
    mode: CombineMode,
) -> Result<SampleVectors> {
    match mode {
        CombineMode::SamePoints => {
            if a.points != b.points {
                return Err(Error::Arg(
                    "same-point combination requires identical sample points".into(),
                ));
            }
        }
        CombineMode::DifferentPoints => {
            if a.points.len() != b.points.len() {
                return Err(Error::Arg(format!(
                    "paired combination needs equal counts, got {} and {}",
                    a.points.len(),
                    b.points.len()
                )));
            }
        }
    }
    let dim = a.dim + b.dim;
    let mut data = Vec::with_capacity(a.points.len() * dim);
    for i in 0..a.points.len() {
        data.extend_from_slice(a.vector(i));
        data.extend_from_slice(b.vector(i));
    }
    Ok(SampleVectors {
        mesh_id: a.mesh_id.clone(),
        points: a.points.clone(),
        dim,
        data,
    })
}

/// Symmetric zero-diagonal matrix of pairwise signature distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(ids: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * ids.len() {
            return Err(Error::Arg("distance matrix data is not M x M".into()));
        }
        Ok(DistanceMatrix { ids, data })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ids.len() + j]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// First row and column carry the mesh ids.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "id")?;
        for id in &self.ids {
            write!(w, ",{id}")?;
        }
        writeln!(w)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{id}")?;
            for j in 0..self.ids.len() {
                write!(w, ",{}", self.get(i, j))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty distance matrix file"))??;
        let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        if ids.is_empty() {
            return Err(Error::parse(1, "distance matrix header has no ids"));
        }
        let m = ids.len();
        let mut data = vec![0f64; m * m];
        let mut row = 0usize;
        for (ln, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if row >= m {
                return Err(Error::parse(ln + 2, "more rows than declared ids"));
            }
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or_default();
            if id != ids[row] {
                return Err(Error::parse(
                    ln + 2,
                    format!("row id {id:?} does not match column id {:?}", ids[row]),
                ));
            }
            for j in 0..m {
                let field = fields
                    .next()
                    .ok_or_else(|| Error::parse(ln + 2, "short matrix row"))?;
                data[row * m + j] = field
                    .parse()
                    .map_err(|_| Error::parse(ln + 2, format!("bad distance {field:?}")))?;
            }
            row += 1;
        }
        if row != m {
            return Err(Error::Format(format!("expected {m} matrix rows, got {row}")));
        }
        DistanceMatrix::new(ids, data)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MATRIX_MAGIC)?;
        w.write_u32::<LittleEndian>(MATRIX_VERSION)?;
        w.write_u64::<LittleEndian>(self.ids.len() as u64)?;
        for id in &self.ids {
            write_string(&mut w, id)?;
        }
        for &x in &self.data {
            w.write_f64::<LittleEndian>(x)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(Error::Format("not a distance matrix file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != MATRIX_VERSION {
            return Err(Error::Format(format!("unsupported matrix version {version}")));
        }
        let m = r.read_u64::<LittleEndian>()? as usize;
        let mut ids = Vec::with_capacity(m);
        for _ in 0..m {
            ids.push(read_string(&mut r)?);
        }
        let mut data = vec![0f64; m * m];
        for x in data.iter_mut() {
            *x = r.read_f64::<LittleEndian>()?;
        }
        DistanceMatrix::new(ids, data)
    }
}

/// Pairwise distances between all signatures; exactly symmetric with a
/// zero diagonal by construction.
pub fn distance_matrix(signatures: &[Signature]) -> Result<DistanceMatrix> {
    let m = signatures.len();
    let mut data = vec![0f64; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = dissimilarity(&signatures[i], &signatures[j])?;
            data[i * m + j] = d;
            data[j * m + i] = d;
        }
    }
    DistanceMatrix::new(signatures.iter().map(|s| s.mesh_id.clone()).collect(), data)
}
