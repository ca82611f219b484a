//! Dataset-wide PCA reduction with 10% eigenvalue truncation and per-
//! dimension [0, 1] normalization.
//!
//! The model is fit once over the raw descriptor vectors of every vertex
//! of every mesh (in a deterministic order), keeping leading principal
//! directions while their eigenvalue stays at or above 10% of the largest,
//! and recording the projected training range per kept dimension.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};

use crate::descriptor::DescriptorField;
use crate::{Error, Result};

const MODEL_MAGIC: &[u8; 4] = b"SRRM";
const MODEL_VERSION: u32 = 1;

/// Eigenvalues below this fraction of the largest are dropped (ties kept).
pub const TRUNCATION_RATIO: f64 = 0.10;

/// A fitted PCA basis with [0, 1] normalization ranges.
#[derive(Debug, Clone)]
pub struct ReductionModel {
    pub mean: DVector<f64>,
    /// input_dim x kept, orthonormal columns, leading eigenvalue first.
    pub basis: DMatrix<f64>,
    /// Sample-covariance eigenvalues of the kept directions, descending.
    pub eigenvalues: Vec<f64>,
    /// Projected training minima and maxima per kept dimension.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ReductionModel {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn kept_dims(&self) -> usize {
        self.basis.ncols()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_u32::<LittleEndian>(MODEL_VERSION)?;
        w.write_u64::<LittleEndian>(self.input_dim() as u64)?;
        w.write_u64::<LittleEndian>(self.kept_dims() as u64)?;
        for &x in self.mean.iter() {
            w.write_f64::<LittleEndian>(x)?;
        }
        for &x in self.basis.iter() {
            w.write_f64::<LittleEndian>(x)?; // column-major
        }
        for list in [&self.eigenvalues, &self.min, &self.max] {
            for &x in list {
                w.write_f64::<LittleEndian>(x)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format("not a reduction model file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let input_dim = r.read_u64::<LittleEndian>()? as usize;
        let kept = r.read_u64::<LittleEndian>()? as usize;
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut v = vec![0f64; n];
            for x in v.iter_mut() {
                *x = r.read_f64::<LittleEndian>()?;
            }
            Ok(v)
        };
        let mean = DVector::from_vec(read_f64s(input_dim)?);
        let basis = DMatrix::from_vec(input_dim, kept, read_f64s(input_dim * kept)?);
        let eigenvalues = read_f64s(kept)?;
        let min = read_f64s(kept)?;
        let max = read_f64s(kept)?;
        Ok(ReductionModel {
            mean,
            basis,
            eigenvalues,
            min,
            max,
        })
    }

    /// Project a raw vector and normalize each dimension to [0, 1].
    /// Out-of-sample values are clamped.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_dim() {
            return Err(Error::Dim {
                expected: self.input_dim(),
                got: raw.len(),
            });
        }
        let centered = DVector::from_row_slice(raw) - &self.mean;
        let projected = self.basis.transpose() * centered;
        Ok((0..self.kept_dims())
            .map(|k| normalize_dim(projected[k], self.min[k], self.max[k]))
            .collect())
    }

    /// Project without normalization (used by tests of the affine map).
    pub fn project(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_dim() {
            return Err(Error::Dim {
                expected: self.input_dim(),
                got: raw.len(),
            });
        }
        let centered = DVector::from_row_slice(raw) - &self.mean;
        Ok((self.basis.transpose() * centered).iter().copied().collect())
    }
}

fn normalize_dim(x: f64, min: f64, max: f64) -> f64 {
    let span = max - min;
    if span <= f64::EPSILON * min.abs().max(max.abs()).max(1.0) {
        return 0.5; // zero-variance dimension
    }
    ((x - min) / span).clamp(0.0, 1.0)
}

/// Flatten descriptor fields into one row-major population, ordered by
/// mesh id then vertex index so fits are reproducible.
pub fn gather_rows(fields: &[&DescriptorField]) -> Result<(Vec<f64>, usize)> {
    if fields.is_empty() {
        return Err(Error::Arg("no descriptor fields to reduce".into()));
    }
    let dim = fields[0].dim;
    let mut order: Vec<&&DescriptorField> = fields.iter().collect();
    order.sort_by(|a, b| a.mesh_id.cmp(&b.mesh_id));
    let mut flat = Vec::new();
    for f in order {
        if f.dim != dim {
            return Err(Error::Dim {
                expected: dim,
                got: f.dim,
            });
        }
        for v in f.vectors() {
            flat.extend_from_slice(v);
        }
    }
    Ok((flat, dim))
}

/// Streaming accumulator for the mean and covariance of a large vector
/// population: feed rows once, `finish`, then feed rows again through the
/// returned [`RangeAccumulator`] for the normalization ranges.
pub struct FitAccumulator {
    dim: usize,
    count: usize,
    sum: DVector<f64>,
    outer: DMatrix<f64>,
}

impl FitAccumulator {
    pub fn new(dim: usize) -> Self {
        FitAccumulator {
            dim,
            count: 0,
            sum: DVector::zeros(dim),
            outer: DMatrix::zeros(dim, dim),
        }
    }

    pub fn add(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        let x = DVector::from_row_slice(row);
        self.sum += &x;
        self.outer += &x * x.transpose();
        self.count += 1;
    }

    /// Eigendecompose the sample covariance and truncate at 10% of the
    /// leading eigenvalue.
    pub fn finish(self) -> Result<PartialReduction> {
        let n = self.count;
        if n < 2 {
            return Err(Error::Arg(format!("need at least 2 vectors, got {n}")));
        }
        let dim = self.dim;
        let mean = self.sum / n as f64;
        let cov = (self.outer - (&mean * mean.transpose()) * n as f64) / (n - 1) as f64;

        let eig = cov.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let largest = eig.eigenvalues[order[0]].max(0.0);
        let kept = if largest <= 0.0 {
            1 // zero-variance population keeps one (arbitrary) direction
        } else {
            let threshold = TRUNCATION_RATIO * largest * (1.0 - 1e-9);
            order
                .iter()
                .take_while(|&&i| eig.eigenvalues[i] >= threshold)
                .count()
                .max(1)
        };

        let mut basis = DMatrix::zeros(dim, kept);
        let mut eigenvalues = Vec::with_capacity(kept);
        for (k, &i) in order.iter().take(kept).enumerate() {
            let mut col: DVector<f64> = eig.eigenvectors.column(i).into();
            // deterministic sign: largest-magnitude component positive
            let lead = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            if col[lead] < 0.0 {
                col = -col;
            }
            basis.set_column(k, &col);
            eigenvalues.push(eig.eigenvalues[i]);
        }

        Ok(PartialReduction {
            mean,
            basis,
            eigenvalues,
        })
    }
}

/// Mean and truncated basis, awaiting the normalization range pass.
pub struct PartialReduction {
    mean: DVector<f64>,
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl PartialReduction {
    pub fn range_accumulator(self) -> RangeAccumulator {
        let kept = self.basis.ncols();
        RangeAccumulator {
            partial: self,
            min: vec![f64::INFINITY; kept],
            max: vec![f64::NEG_INFINITY; kept],
        }
    }
}

/// Second pass: projected minima and maxima of the training population.
pub struct RangeAccumulator {
    partial: PartialReduction,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl RangeAccumulator {
    pub fn add(&mut self, row: &[f64]) {
        let proj = self.partial.basis.transpose() * (DVector::from_row_slice(row) - &self.partial.mean);
        for k in 0..self.min.len() {
            self.min[k] = self.min[k].min(proj[k]);
            self.max[k] = self.max[k].max(proj[k]);
        }
    }

    pub fn finish(self) -> ReductionModel {
        ReductionModel {
            mean: self.partial.mean,
            basis: self.partial.basis,
            eigenvalues: self.partial.eigenvalues,
            min: self.min,
            max: self.max,
        }
    }
}

/// Fit a reduction model over `rows` (row-major, `dim` columns).
pub fn fit_reduction(rows: &[f64], dim: usize) -> Result<ReductionModel> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(Error::Arg("row data does not match dimension".into()));
    }
    let mut fit = FitAccumulator::new(dim);
    for row in rows.chunks_exact(dim) {
        fit.add(row);
    }
    let mut ranges = fit.finish()?.range_accumulator();
    for row in rows.chunks_exact(dim) {
        ranges.add(row);
    }
    Ok(ranges.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    /// Axis-aligned six-point cloud with exact sample eigenvalues, then a
    /// fixed rotation so nothing is axis-aligned.
    fn data_with_spectrum(spectrum: &[f64]) -> Vec<f64> {
        assert!(spectrum.len() <= 3);
        let n = 6.0;
        let rot = Rotation3::from_euler_angles(0.5, 1.1, -0.8);
        let mut rows = Vec::new();
        let scale: Vec<f64> = spectrum
            .iter()
            .map(|&l| (l * (n - 1.0) / 2.0).sqrt())
            .collect();
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut v = Vector3::zeros();
                if axis < spectrum.len() {
                    v[axis] = sign * scale[axis];
                }
                let w = rot * v;
                rows.extend_from_slice(&[w.x, w.y, w.z]);
            }
        }
        rows
    }

    #[test]
    fn truncation_drops_below_ten_percent() {
        let rows = data_with_spectrum(&[100.0, 50.0, 9.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        assert_eq!(model.kept_dims(), 2, "9 < 10% of 100 must be dropped");
    }

    #[test]
    fn truncation_keeps_boundary_tie() {
        let rows = data_with_spectrum(&[100.0, 10.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        assert_eq!(model.kept_dims(), 2, "exactly 10% is retained");
    }

    #[test]
    fn collinear_points_keep_one_dim() {
        let rows = data_with_spectrum(&[42.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        assert_eq!(model.kept_dims(), 1);
    }

    #[test]
    fn basis_is_orthonormal() {
        let rows = data_with_spectrum(&[100.0, 40.0, 20.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        let gram = model.basis.transpose() * &model.basis;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn training_data_maps_into_unit_interval() {
        let rows = data_with_spectrum(&[100.0, 40.0, 20.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        let mut hit_zero = vec![false; model.kept_dims()];
        let mut hit_one = vec![false; model.kept_dims()];
        for row in rows.chunks_exact(3) {
            let out = model.apply(row).unwrap();
            for (k, &x) in out.iter().enumerate() {
                assert!((0.0..=1.0).contains(&x));
                if x == 0.0 {
                    hit_zero[k] = true;
                }
                if x == 1.0 {
                    hit_one[k] = true;
                }
            }
        }
        assert!(hit_zero.iter().all(|&b| b), "per-dim minimum maps to 0");
        assert!(hit_one.iter().all(|&b| b), "per-dim maximum maps to 1");
    }

    #[test]
    fn mean_vector_maps_to_normalized_zero_projection() {
        // ten-point synthetic set
        let mut rows = Vec::new();
        for i in 0..10 {
            let t = i as f64;
            rows.extend_from_slice(&[t, 2.0 * t + 1.0, (t - 4.0) * (t - 4.0) * 0.1]);
        }
        let model = fit_reduction(&rows, 3).unwrap();
        let mean: Vec<f64> = model.mean.iter().copied().collect();
        let out = model.apply(&mean).unwrap();
        for (k, &x) in out.iter().enumerate() {
            let want = (0.0 - model.min[k]) / (model.max[k] - model.min[k]);
            assert!((x - want).abs() < 1e-12, "dim {k}: {x} vs {want}");
        }
    }

    #[test]
    fn zero_variance_population_maps_to_half() {
        let rows = vec![3.0, -1.0, 2.0, 3.0, -1.0, 2.0, 3.0, -1.0, 2.0];
        let model = fit_reduction(&rows, 3).unwrap();
        assert_eq!(model.kept_dims(), 1);
        assert_eq!(model.apply(&[3.0, -1.0, 2.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn out_of_sample_values_clamp() {
        let rows = data_with_spectrum(&[100.0, 40.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        let far = [1e6, 1e6, 1e6];
        for x in model.apply(&far).unwrap() {
            assert!((0.0..=1.0).contains(&x));
        }
        assert!(model.apply(&[1.0, 2.0]).is_err(), "length mismatch");
    }

    #[test]
    fn normalization_is_monotone_along_kept_directions() {
        let rows = data_with_spectrum(&[100.0, 40.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        let dir: Vec<f64> = model.basis.column(0).iter().copied().collect();
        let mut prev = f64::NEG_INFINITY;
        for step in -5..=5 {
            let t = step as f64 * 3.0;
            let raw: Vec<f64> = model
                .mean
                .iter()
                .zip(&dir)
                .map(|(m, d)| m + t * d)
                .collect();
            let out = model.apply(&raw).unwrap();
            assert!(out[0] >= prev, "not monotone: {} after {prev}", out[0]);
            prev = out[0];
        }
    }

    #[test]
    fn reconstruction_loses_only_dropped_energy() {
        // synthetic gaussian-ish data with a known spectrum: residual energy
        // after projection equals the dropped eigenvalue mass (n-1)/n
        let spectrum = [100.0, 50.0, 9.0];
        let rows = data_with_spectrum(&spectrum);
        let n = rows.len() as f64 / 3.0;
        let model = fit_reduction(&rows, 3).unwrap();
        assert_eq!(model.kept_dims(), 2);

        let mut total_residual = 0.0;
        for row in rows.chunks_exact(3) {
            let centered = DVector::from_row_slice(row) - &model.mean;
            let proj = model.basis.transpose() * &centered;
            let back = &model.basis * proj;
            total_residual += (centered - back).norm_squared();
        }
        let mean_residual = total_residual / n;
        let dropped: f64 = 9.0;
        let want = dropped * (n - 1.0) / n;
        assert!(
            (mean_residual - want).abs() < 1e-9 * want.max(1.0),
            "residual {mean_residual}, want {want}"
        );
    }

    #[test]
    fn model_file_round_trip() {
        let rows = data_with_spectrum(&[100.0, 40.0, 20.0]);
        let model = fit_reduction(&rows, 3).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = ReductionModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.mean, model.mean);
        assert_eq!(back.basis, model.basis);
        assert_eq!(back.min, model.min);
        assert_eq!(back.max, model.max);
    }

    #[test]
    fn needs_two_vectors() {
        assert!(fit_reduction(&[1.0, 2.0, 3.0], 3).is_err());
    }
}
