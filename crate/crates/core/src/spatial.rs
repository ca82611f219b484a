//! Uniform hash grid for Euclidean ball queries over point sets.

use std::collections::HashMap;

use nalgebra::Point3;

/// Buckets points into cubic cells of a fixed size.
pub struct SpatialGrid {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
    points: Vec<Point3<f64>>,
}

impl SpatialGrid {
    pub fn new(points: &[Point3<f64>], cell: f64) -> Self {
        let cell = if cell > 0.0 { cell } else { 1.0 };
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        SpatialGrid {
            cell,
            buckets,
            points: points.to_vec(),
        }
    }

    fn key(p: &Point3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// Indices of points within `radius` of `center`, ascending.
    pub fn query_ball(&self, center: &Point3<f64>, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let lo = Self::key(&Point3::new(center.x - radius, center.y - radius, center.z - radius), self.cell);
        let hi = Self::key(&Point3::new(center.x + radius, center.y + radius, center.z + radius), self.cell);
        let mut out = Vec::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if let Some(bucket) = self.buckets.get(&[x, y, z]) {
                        for &i in bucket {
                            if (self.points[i] - center).norm_squared() <= r2 {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
