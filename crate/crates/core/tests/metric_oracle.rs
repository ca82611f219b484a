//! Retrieval statistics against an independent exhaustive oracle.
//!
//! The oracle below re-derives every statistic from the definitions by
//! explicit counting over brute-force ranked lists. It shares no code
//! with the library implementation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shaperet_core::bow::DistanceMatrix;
use shaperet_core::eval::{self, Labeling};

// ---------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------

struct Oracle<'a> {
    ids: Vec<String>,
    dist: &'a [f64],
    class: Vec<String>,
}

impl<'a> Oracle<'a> {
    fn class_size(&self, q: usize) -> usize {
        self.class.iter().filter(|c| **c == self.class[q]).count()
    }

    /// All indices except the query, ordered by (distance, id).
    fn ranking(&self, q: usize) -> Vec<usize> {
        let m = self.ids.len();
        let mut rest: Vec<usize> = (0..m).filter(|&i| i != q).collect();
        rest.sort_by(|&a, &b| {
            let da = self.dist[q * m + a];
            let db = self.dist[q * m + b];
            da.partial_cmp(&db)
                .unwrap()
                .then_with(|| self.ids[a].cmp(&self.ids[b]))
        });
        rest
    }

    fn hits_in_top(&self, q: usize, k: usize) -> usize {
        self.ranking(q)
            .into_iter()
            .take(k)
            .filter(|&i| self.class[i] == self.class[q])
            .count()
    }

    fn nn(&self) -> f64 {
        let queries: Vec<usize> = (0..self.ids.len()).filter(|&q| self.class_size(q) > 1).collect();
        let sum: f64 = queries.iter().map(|&q| self.hits_in_top(q, 1) as f64).sum();
        sum / queries.len() as f64
    }

    fn tier(&self, multiple: usize) -> f64 {
        let queries: Vec<usize> = (0..self.ids.len()).filter(|&q| self.class_size(q) > 1).collect();
        let sum: f64 = queries
            .iter()
            .map(|&q| {
                let classmates = self.class_size(q) - 1;
                self.hits_in_top(q, multiple * classmates) as f64 / classmates as f64
            })
            .sum();
        sum / queries.len() as f64
    }

    fn e_measure(&self) -> f64 {
        let m = self.ids.len();
        let queries: Vec<usize> = (0..m).filter(|&q| self.class_size(q) > 1).collect();
        let sum: f64 = queries
            .iter()
            .map(|&q| {
                let k = 32.min(m - 1);
                let hits = self.hits_in_top(q, k) as f64;
                if hits == 0.0 {
                    return 0.0;
                }
                let p = hits / k as f64;
                let r = hits / (self.class_size(q) - 1) as f64;
                2.0 * p * r / (p + r)
            })
            .sum();
        sum / queries.len() as f64
    }

    fn dcg(&self) -> f64 {
        let m = self.ids.len();
        let mut total = 0.0;
        for q in 0..m {
            // query-inclusive list: rank 1 is the query itself
            let mut gain = 1.0;
            for (pos, &i) in self.ranking(q).iter().enumerate() {
                if self.class[i] == self.class[q] {
                    gain += 1.0 / ((pos + 2) as f64).log2();
                }
            }
            let mut ideal = 1.0;
            for j in 2..=self.class_size(q) {
                ideal += 1.0 / (j as f64).log2();
            }
            total += gain / ideal;
        }
        total / m as f64
    }

    fn pr_curve(&self) -> Vec<(f64, f64)> {
        let m = self.ids.len();
        let queries: Vec<usize> = (0..m).filter(|&q| self.class_size(q) > 1).collect();
        let mut mean_curve = Vec::new();
        for k in 1..m {
            let mut p = 0.0;
            let mut r = 0.0;
            for &q in &queries {
                let hits = self.hits_in_top(q, k) as f64;
                p += hits / k as f64;
                r += hits / (self.class_size(q) - 1) as f64;
            }
            mean_curve.push((r / queries.len() as f64, p / queries.len() as f64));
        }

        let mut sizes: Vec<usize> = queries.iter().map(|&q| self.class_size(q) - 1).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut levels: Vec<f64> = Vec::new();
        for c in sizes {
            for j in 1..=c {
                levels.push(j as f64 / c as f64);
            }
        }
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        levels
            .into_iter()
            .map(|level| {
                let best = mean_curve
                    .iter()
                    .filter(|(r, _)| *r >= level - 1e-12)
                    .map(|&(_, p)| p)
                    .fold(0.0f64, f64::max);
                (level, best)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------
// instances
// ---------------------------------------------------------------------

fn random_instance(seed: u64, m: usize, classes: usize) -> (DistanceMatrix, Labeling, Vec<f64>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..m).map(|i| format!("m{i:02}")).collect();
    let per_class = m / classes;
    let mut data = vec![0f64; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d: f64 = rng.gen_range(0.01..1.0);
            data[i * m + j] = d;
            data[j * m + i] = d;
        }
    }
    let mut map = BTreeMap::new();
    let mut class = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let c = format!("c{}", i / per_class);
        map.insert(id.clone(), c.clone());
        class.push(c);
    }
    (
        DistanceMatrix::new(ids.clone(), data.clone()).unwrap(),
        Labeling::new(map),
        data,
        class,
    )
}

#[test]
fn fifty_random_matrices_match_the_oracle() {
    let start = std::time::Instant::now();
    for seed in 0..50u64 {
        let (dm, labeling, data, class) = random_instance(seed, 20, 4);
        let oracle = Oracle {
            ids: dm.ids.clone(),
            dist: &data,
            class,
        };

        let stats = eval::evaluate(&dm, &labeling).unwrap();
        let tol = 1e-12;
        assert!((stats.nn - oracle.nn()).abs() <= tol, "nn seed {seed}");
        assert!((stats.tier1 - oracle.tier(1)).abs() <= tol, "tier1 seed {seed}");
        assert!((stats.tier2 - oracle.tier(2)).abs() <= tol, "tier2 seed {seed}");
        assert!(
            (stats.e_measure - oracle.e_measure()).abs() <= tol,
            "e-measure seed {seed}: {} vs {}",
            stats.e_measure,
            oracle.e_measure()
        );
        assert!(
            (stats.dcg - oracle.dcg()).abs() <= tol,
            "dcg seed {seed}: {} vs {}",
            stats.dcg,
            oracle.dcg()
        );

        let oracle_pr = oracle.pr_curve();
        assert_eq!(stats.pr_curve.len(), oracle_pr.len(), "pr length seed {seed}");
        for ((r1, p1), (r2, p2)) in stats.pr_curve.iter().zip(&oracle_pr) {
            assert!((r1 - r2).abs() <= tol && (p1 - p2).abs() <= tol, "pr point seed {seed}");
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 5.0,
        "oracle comparison took {:?}",
        start.elapsed()
    );
}

#[test]
fn ranked_lists_match_oracle_orderings() {
    for seed in [3u64, 17, 40] {
        let (dm, _, data, class) = random_instance(seed, 20, 4);
        let oracle = Oracle {
            ids: dm.ids.clone(),
            dist: &data,
            class,
        };
        for q in 0..dm.len() {
            let got = eval::ranked_list(&dm, &dm.ids[q]).unwrap();
            let want: Vec<String> = oracle.ranking(q).into_iter().map(|i| dm.ids[i].clone()).collect();
            assert_eq!(got, want, "ranking of query {q} seed {seed}");
        }
    }
}
