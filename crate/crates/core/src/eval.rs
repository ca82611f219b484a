//! Retrieval statistics over a distance matrix with class labels,
//! following Princeton Shape Benchmark conventions.
//!
//! Rankings are deterministic: ties in distance break by ascending mesh
//! id. Nearest-neighbor, tier and E-measure scores rank the query-excluded
//! list; DCG places the query itself at rank 1, which makes perfect
//! retrieval score exactly 1.

use std::collections::BTreeMap;

use crate::bow::DistanceMatrix;
use crate::{Error, Result};

/// Retrieval depth for the E-measure.
pub const E_MEASURE_DEPTH: usize = 32;

/// Mesh id to class name mapping.
#[derive(Debug, Clone, Default)]
pub struct Labeling {
    map: BTreeMap<String, String>,
}

impl Labeling {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Labeling { map }
    }

    pub fn insert(&mut self, id: impl Into<String>, class: impl Into<String>) {
        self.map.insert(id.into(), class.into());
    }

    pub fn class_of(&self, id: &str) -> Option<&str> {
        self.map.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn class_sizes(&self) -> BTreeMap<&str, usize> {
        let mut sizes = BTreeMap::new();
        for class in self.map.values() {
            *sizes.entry(class.as_str()).or_insert(0) += 1;
        }
        sizes
    }

    /// Every matrix id must be labeled.
    pub fn validate_against(&self, dm: &DistanceMatrix) -> Result<()> {
        for id in &dm.ids {
            if !self.map.contains_key(id) {
                return Err(Error::Arg(format!("mesh {id:?} has no class label")));
            }
        }
        Ok(())
    }
}

/// Parse a Princeton Shape Benchmark .cla classification file. Nested
/// classes flatten to the leaf class each model is listed under.
pub fn parse_cla(bytes: &[u8]) -> Result<Labeling> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::parse(0, "classification file is not UTF-8"))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut pos = 0usize;

    let (ln, header) = *lines
        .first()
        .ok_or_else(|| Error::parse(1, "empty classification file"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("PSB") {
        return Err(Error::parse(ln, "expected PSB header"));
    }
    pos += 1;

    let (ln, counts) = *lines
        .get(pos)
        .ok_or_else(|| Error::parse(ln, "missing class/model count line"))?;
    let mut it = counts.split_whitespace();
    let n_classes: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(ln, "bad class count"))?;
    let n_models: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(ln, "bad model count"))?;
    pos += 1;

    let mut labeling = Labeling::default();
    let mut classes_seen = 0usize;
    let mut models_seen = 0usize;
    while pos < lines.len() {
        let (ln, line) = lines[pos];
        pos += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                ln,
                format!("expected class header `name parent count`, found {line:?}"),
            ));
        }
        let class = fields[0];
        let count: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad model count {:?}", fields[2])))?;
        classes_seen += 1;
        for _ in 0..count {
            let (ln, id) = *lines
                .get(pos)
                .ok_or_else(|| Error::parse(ln, "file ends inside a class block"))?;
            pos += 1;
            if id.split_whitespace().count() != 1 {
                return Err(Error::parse(ln, format!("expected a model id, found {id:?}")));
            }
            if labeling.map.insert(id.to_string(), class.to_string()).is_some() {
                return Err(Error::parse(ln, format!("model {id:?} listed twice")));
            }
            models_seen += 1;
        }
    }

    if classes_seen != n_classes {
        return Err(Error::Format(format!(
            "declared {n_classes} classes but found {classes_seen}"
        )));
    }
    if models_seen != n_models {
        return Err(Error::Format(format!(
            "declared {n_models} models but found {models_seen}"
        )));
    }
    Ok(labeling)
}

/// Parse `id,class` CSV lines into a labeling.
pub fn parse_label_csv(bytes: &[u8]) -> Result<Labeling> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::parse(0, "label file is not UTF-8"))?;
    let mut labeling = Labeling::default();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, class) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(ln + 1, format!("expected `id,class`, found {line:?}")))?;
        labeling.insert(id.trim(), class.trim());
    }
    if labeling.is_empty() {
        return Err(Error::Format("label file contains no labels".into()));
    }
    Ok(labeling)
}

/// Parse labels from either format (PSB header sniffing, CSV fallback).
pub fn parse_labels(bytes: &[u8]) -> Result<Labeling> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::parse(0, "label file is not UTF-8"))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with("PSB") {
        parse_cla(bytes)
    } else {
        parse_label_csv(bytes)
    }
}

/// The five scalar retrieval statistics plus the precision/recall curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalStats {
    pub nn: f64,
    pub tier1: f64,
    pub tier2: f64,
    pub e_measure: f64,
    pub dcg: f64,
    /// (recall level, interpolated precision), recall ascending.
    pub pr_curve: Vec<(f64, f64)>,
}

/// Matrix ids ranked by ascending dissimilarity to the query, query
/// excluded, ties by ascending id.
pub fn ranked_list(dm: &DistanceMatrix, query: &str) -> Result<Vec<String>> {
    let q = dm
        .index_of(query)
        .ok_or_else(|| Error::Arg(format!("query {query:?} not in matrix")))?;
    Ok(ranked_indices(dm, q)
        .into_iter()
        .map(|i| dm.ids[i].clone())
        .collect())
}

fn ranked_indices(dm: &DistanceMatrix, q: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dm.len()).filter(|&i| i != q).collect();
    order.sort_by(|&a, &b| dm.get(q, a).total_cmp(&dm.get(q, b)).then(dm.ids[a].cmp(&dm.ids[b])));
    order
}

struct QueryContext<'a> {
    dm: &'a DistanceMatrix,
    /// class index per matrix position
    class: Vec<usize>,
    /// class member count per class index
    size: Vec<usize>,
}

impl<'a> QueryContext<'a> {
    fn new(dm: &'a DistanceMatrix, labels: &Labeling) -> Result<Self> {
        labels.validate_against(dm)?;
        let mut class_ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut class = Vec::with_capacity(dm.len());
        for id in &dm.ids {
            let name = labels.class_of(id).unwrap();
            let next = class_ids.len();
            class.push(*class_ids.entry(name).or_insert(next));
        }
        let mut size = vec![0usize; class_ids.len()];
        for &c in &class {
            size[c] += 1;
        }
        Ok(QueryContext { dm, class, size })
    }

    fn classmates(&self, q: usize) -> usize {
        self.size[self.class[q]] - 1
    }

    /// Ranked classmate indicator per query-excluded rank.
    fn relevance(&self, q: usize) -> Vec<bool> {
        ranked_indices(self.dm, q)
            .into_iter()
            .map(|i| self.class[i] == self.class[q])
            .collect()
    }
}

/// Nearest-neighbor, first-tier and second-tier scores. Queries whose
/// class has a single member are skipped.
pub fn nn_tier_scores(dm: &DistanceMatrix, labels: &Labeling) -> Result<(f64, f64, f64)> {
    let ctx = QueryContext::new(dm, labels)?;
    let mut sums = (0.0, 0.0, 0.0);
    let mut queries = 0usize;
    for q in 0..dm.len() {
        let classmates = ctx.classmates(q);
        if classmates == 0 {
            continue;
        }
        let rel = ctx.relevance(q);
        let hits = |k: usize| rel.iter().take(k).filter(|&&r| r).count() as f64;
        sums.0 += hits(1); // top result in class, 0 or 1
        sums.1 += hits(classmates) / classmates as f64;
        sums.2 += hits(2 * classmates) / classmates as f64;
        queries += 1;
    }
    if queries == 0 {
        return Err(Error::Arg("no query has classmates".into()));
    }
    let n = queries as f64;
    Ok((sums.0 / n, sums.1 / n, sums.2 / n))
}

/// Mean harmonic precision/recall score over the top 32 results (capped
/// at the list length on tiny databases).
pub fn e_measure(dm: &DistanceMatrix, labels: &Labeling) -> Result<f64> {
    let ctx = QueryContext::new(dm, labels)?;
    let mut sum = 0.0;
    let mut queries = 0usize;
    for q in 0..dm.len() {
        let classmates = ctx.classmates(q);
        if classmates == 0 {
            continue;
        }
        let rel = ctx.relevance(q);
        let k = E_MEASURE_DEPTH.min(rel.len());
        let hits = rel.iter().take(k).filter(|&&r| r).count() as f64;
        let precision = hits / k as f64;
        let recall = hits / classmates as f64;
        sum += if hits > 0.0 {
            2.0 / (1.0 / precision + 1.0 / recall)
        } else {
            0.0
        };
        queries += 1;
    }
    if queries == 0 {
        return Err(Error::Arg("no query has classmates".into()));
    }
    Ok(sum / queries as f64)
}

/// Discounted cumulative gain, normalized so the ideal ranking scores 1.
/// The ranked list includes the query itself at rank 1.
pub fn dcg(dm: &DistanceMatrix, labels: &Labeling) -> Result<f64> {
    let ctx = QueryContext::new(dm, labels)?;
    let mut sum = 0.0;
    for q in 0..dm.len() {
        let rel = ctx.relevance(q);
        let mut gain = 1.0; // the query occupies rank 1
        for (pos, &r) in rel.iter().enumerate() {
            if r {
                gain += 1.0 / ((pos + 2) as f64).log2();
            }
        }
        let class_size = ctx.size[ctx.class[q]];
        let ideal: f64 = 1.0 + (2..=class_size).map(|j| 1.0 / (j as f64).log2()).sum::<f64>();
        sum += gain / ideal;
    }
    Ok(sum / dm.len() as f64)
}

/// Mean precision/recall over the K-sweep, reported at the distinct
/// per-class recall levels with interpolated precision (the maximum mean
/// precision at or beyond each recall level).
pub fn precision_recall(dm: &DistanceMatrix, labels: &Labeling) -> Result<Vec<(f64, f64)>> {
    let ctx = QueryContext::new(dm, labels)?;
    let m = dm.len();
    let queries: Vec<usize> = (0..m).filter(|&q| ctx.classmates(q) > 0).collect();
    if queries.is_empty() {
        return Err(Error::Arg("no query has classmates".into()));
    }
    let relevances: Vec<Vec<bool>> = queries.iter().map(|&q| ctx.relevance(q)).collect();

    // mean precision and recall at each cutoff K
    let mut curve = Vec::with_capacity(m - 1);
    let mut hits = vec![0usize; queries.len()];
    for k in 1..m {
        let mut precision = 0.0;
        let mut recall = 0.0;
        for (qi, &q) in queries.iter().enumerate() {
            if relevances[qi][k - 1] {
                hits[qi] += 1;
            }
            precision += hits[qi] as f64 / k as f64;
            recall += hits[qi] as f64 / ctx.classmates(q) as f64;
        }
        curve.push((recall / queries.len() as f64, precision / queries.len() as f64));
    }

    // recall levels from the distinct class sizes
    let mut levels: Vec<f64> = Vec::new();
    let mut sizes: Vec<usize> = queries.iter().map(|&q| ctx.classmates(q)).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for classmates in sizes {
        for j in 1..=classmates {
            levels.push(j as f64 / classmates as f64);
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    Ok(levels
        .into_iter()
        .map(|level| {
            let best = curve
                .iter()
                .filter(|(r, _)| *r >= level - 1e-12)
                .map(|&(_, p)| p)
                .fold(0.0, f64::max);
            (level, best)
        })
        .collect())
}

/// All five statistics and the PR curve in one pass.
pub fn evaluate(dm: &DistanceMatrix, labels: &Labeling) -> Result<RetrievalStats> {
    let (nn, tier1, tier2) = nn_tier_scores(dm, labels)?;
    Ok(RetrievalStats {
        nn,
        tier1,
        tier2,
        e_measure: e_measure(dm, labels)?,
        dcg: dcg(dm, labels)?,
        pr_curve: precision_recall(dm, labels)?,
    })
}

/// Labeled meshes ids missing classmates (used by callers to warn).
pub fn singleton_classes(labels: &Labeling) -> Vec<String> {
    let sizes = labels.class_sizes();
    sizes
        .into_iter()
        .filter(|(_, n)| *n == 1)
        .map(|(c, _)| c.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bow::DistanceMatrix;

    fn matrix(ids: &[&str], rows: &[&[f64]]) -> DistanceMatrix {
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DistanceMatrix::new(ids.iter().map(|s| s.to_string()).collect(), data).unwrap()
    }

    fn labels(pairs: &[(&str, &str)]) -> Labeling {
        let mut l = Labeling::default();
        for (id, c) in pairs {
            l.insert(*id, *c);
        }
        l
    }

    #[test]
    fn ranked_list_sorts_by_distance_then_id() {
        let dm = matrix(
            &["a", "b", "c"],
            &[&[0.0, 0.2, 0.1], &[0.2, 0.0, 0.3], &[0.1, 0.3, 0.0]],
        );
        assert_eq!(ranked_list(&dm, "a").unwrap(), vec!["c", "b"]);
        assert_eq!(ranked_list(&dm, "a").unwrap().len(), dm.len() - 1);
        assert!(ranked_list(&dm, "zz").is_err());

        let zeros = matrix(&["z", "m", "a"], &[&[0.0; 3], &[0.0; 3], &[0.0; 3]]);
        assert_eq!(ranked_list(&zeros, "m").unwrap(), vec!["a", "z"], "total tie sorts by id");
    }

    /// Block matrix: distance 0 within class, 1 across.
    fn block_matrix(classes: usize, per_class: usize) -> (DistanceMatrix, Labeling) {
        let m = classes * per_class;
        let ids: Vec<String> = (0..m).map(|i| format!("m{i:03}")).collect();
        let mut data = vec![0f64; m * m];
        let mut labeling = Labeling::default();
        for i in 0..m {
            labeling.insert(ids[i].clone(), format!("c{}", i / per_class));
            for j in 0..m {
                data[i * m + j] = if i / per_class == j / per_class { 0.0 } else { 1.0 };
            }
        }
        (DistanceMatrix::new(ids, data).unwrap(), labeling)
    }

    #[test]
    fn perfect_block_matrix_scores_ones() {
        let (dm, labeling) = block_matrix(4, 5);
        let stats = evaluate(&dm, &labeling).unwrap();
        assert_eq!(stats.nn, 1.0);
        assert_eq!(stats.tier1, 1.0);
        assert_eq!(stats.tier2, 1.0);
        assert_eq!(stats.dcg, 1.0);
        // with 19 < 32 results examined, recall is 1 but precision is 4/19
        assert!(stats.e_measure > 0.0 && stats.e_measure <= 1.0);
        for (_, p) in &stats.pr_curve {
            assert_eq!(*p, 1.0, "perfect retrieval has precision 1 at all levels");
        }
    }

    #[test]
    fn adversarial_matrix_scores_zero_nn() {
        // classmates pushed to the very end of every ranking
        let m = 8;
        let per_class = 2;
        let ids: Vec<String> = (0..m).map(|i| format!("m{i}")).collect();
        let mut data = vec![0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    data[i * m + j] = if i / per_class == j / per_class { 10.0 } else { 1.0 };
                }
            }
        }
        let dm = DistanceMatrix::new(ids.clone(), data).unwrap();
        let mut labeling = Labeling::default();
        for (i, id) in ids.iter().enumerate() {
            labeling.insert(id.clone(), format!("c{}", i / per_class));
        }
        let (nn, _, _) = nn_tier_scores(&dm, &labeling).unwrap();
        assert_eq!(nn, 0.0);
    }

    #[test]
    fn e_measure_hand_case() {
        // two classes of 20 in a database of 40: every query finds all 19
        // classmates in its top 32, so P = 19/32, R = 1, E = 38/51
        let (dm, labeling) = block_matrix(2, 20);
        let e = e_measure(&dm, &labeling).unwrap();
        let want = 38.0 / 51.0;
        assert!((e - want).abs() < 1e-12, "{e} vs {want}");
    }

    #[test]
    fn e_measure_zero_when_no_classmates_in_window() {
        // 40 meshes; meshes 0 and 1 are classmates but rank each other
        // dead last, beyond the top-32 window, so their E terms are 0
        let m = 40;
        let ids: Vec<String> = (0..m).map(|i| format!("m{i:02}")).collect();
        let mut data = vec![0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let pair = (i < 2) && (j < 2);
                    data[i * m + j] = if pair { 100.0 } else { 1.0 + ((i * 7 + j) % 5) as f64 };
                }
            }
        }
        // symmetrize
        for i in 0..m {
            for j in (i + 1)..m {
                let d = 0.5 * (data[i * m + j] + data[j * m + i]);
                data[i * m + j] = d;
                data[j * m + i] = d;
            }
        }
        let dm = DistanceMatrix::new(ids.clone(), data).unwrap();
        let mut labeling = Labeling::default();
        for (i, id) in ids.iter().enumerate() {
            labeling.insert(id.clone(), if i < 2 { "pair".into() } else { format!("c{}", i % 2 + 1) });
        }
        // queries m00 and m01 contribute 0; verify by comparing against
        // the mean with those two terms removed
        let e_all = e_measure(&dm, &labeling).unwrap();
        let rest: Vec<f64> = (2..m)
            .map(|q| {
                let rel: Vec<bool> = ranked_list(&dm, &ids[q])
                    .unwrap()
                    .iter()
                    .map(|r| labeling.class_of(r) == labeling.class_of(&ids[q]))
                    .collect();
                let k = 32.min(m - 1);
                let hits = rel.iter().take(k).filter(|&&r| r).count() as f64;
                let classmates = (m - 2) / 2 - 1;
                if hits == 0.0 {
                    0.0
                } else {
                    let p = hits / k as f64;
                    let r = hits / classmates as f64;
                    2.0 * p * r / (p + r)
                }
            })
            .collect();
        let want = rest.iter().sum::<f64>() / m as f64; // zeros for m00, m01
        assert!((e_all - want).abs() < 1e-12, "{e_all} vs {want}");
    }

    #[test]
    fn dcg_hand_case() {
        // classmate of every query lands at rank 3 of the query-inclusive
        // list: DCG = (1 + 1/log2(3)) / (1 + 1/log2(2))
        let dm = matrix(
            &["a", "b", "c", "d"],
            &[
                &[0.0, 2.0, 1.0, 3.0],
                &[2.0, 0.0, 3.0, 1.0],
                &[1.0, 3.0, 0.0, 2.0],
                &[3.0, 1.0, 2.0, 0.0],
            ],
        );
        let labeling = labels(&[("a", "x"), ("b", "x"), ("c", "y"), ("d", "y")]);
        let got = dcg(&dm, &labeling).unwrap();
        let want = (1.0 + 1.0 / 3f64.log2()) / 2.0;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((want - 0.8154648767857287).abs() < 1e-12);
    }

    #[test]
    fn stats_invariant_under_monotone_transform() {
        let (dm, labeling) = block_matrix(3, 4);
        // perturb to break ties deterministically
        let m = dm.len();
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let bump = if i == j { 0.0 } else { 0.01 * ((i * 31 + j * 17) % 7) as f64 };
                data.push(dm.get(i, j) + bump);
            }
        }
        // symmetrize
        let mut sym = data.clone();
        for i in 0..m {
            for j in 0..m {
                sym[i * m + j] = 0.5 * (data[i * m + j] + data[j * m + i]);
            }
        }
        let base = DistanceMatrix::new(dm.ids.clone(), sym.clone()).unwrap();
        let warped = DistanceMatrix::new(
            dm.ids.clone(),
            sym.iter().map(|&x| (x * 3.0).exp() - 1.0).collect(),
        )
        .unwrap();

        let a = evaluate(&base, &labeling).unwrap();
        let b = evaluate(&warped, &labeling).unwrap();
        assert_eq!(a.nn, b.nn);
        assert_eq!(a.tier1, b.tier1);
        assert_eq!(a.tier2, b.tier2);
        assert_eq!(a.e_measure, b.e_measure);
        assert_eq!(a.dcg, b.dcg);
        assert_eq!(a.pr_curve, b.pr_curve);
    }

    #[test]
    fn singleton_classes_are_skipped() {
        let dm = matrix(
            &["a", "b", "c"],
            &[&[0.0, 0.5, 0.9], &[0.5, 0.0, 0.4], &[0.9, 0.4, 0.0]],
        );
        let labeling = labels(&[("a", "x"), ("b", "x"), ("c", "lonely")]);
        assert_eq!(singleton_classes(&labeling), vec!["lonely".to_string()]);
        let (nn, t1, t2) = nn_tier_scores(&dm, &labeling).unwrap();
        // only a and b are queries; their top result is each other? a's
        // nearest is b (0.5 < 0.9) and b's nearest is c (0.4 < 0.5)
        assert_eq!(nn, 0.5);
        assert_eq!(t1, 0.5);
        assert!(t2 >= t1);
    }

    #[test]
    fn pr_recall_reaches_one() {
        let (dm, labeling) = block_matrix(4, 5);
        let curve = precision_recall(&dm, &labeling).unwrap();
        assert_eq!(curve.len(), 4, "|C|-1 recall levels for uniform classes");
        let (last_r, _) = curve.last().unwrap();
        assert_eq!(*last_r, 1.0);
        for w in curve.windows(2) {
            assert!(w[0].0 < w[1].0, "recall levels ascend");
        }
    }

    #[test]
    fn cla_minimal_and_errors() {
        let src = "PSB 1\n1 2\n\nchair 0 2\nm1\nm2\n";
        let labeling = parse_cla(src.as_bytes()).unwrap();
        assert_eq!(labeling.len(), 2);
        assert_eq!(labeling.class_of("m1"), Some("chair"));
        assert_eq!(labeling.class_of("m2"), Some("chair"));

        let bad = "PSB 1\n1 3\n\nchair 0 2\nm1\nm2\n";
        assert!(parse_cla(bad.as_bytes()).is_err(), "model count mismatch");

        let bad = "1 2\nchair 0 2\nm1\nm2\n";
        assert!(parse_cla(bad.as_bytes()).is_err(), "missing PSB header");
    }

    #[test]
    fn cla_nested_classes_flatten_to_leaves() {
        let src = "PSB 1\n3 4\n\nfurniture 0 0\nchair furniture 2\nm1\nm2\ntable furniture 2\nm3\nm4\n";
        let labeling = parse_cla(src.as_bytes()).unwrap();
        assert_eq!(labeling.class_of("m1"), Some("chair"));
        assert_eq!(labeling.class_of("m3"), Some("table"));
    }

    #[test]
    fn csv_fallback() {
        let src = "m1,chair\nm2,chair\nm3,table\n";
        let labeling = parse_labels(src.as_bytes()).unwrap();
        assert_eq!(labeling.class_of("m3"), Some("table"));
        assert_eq!(labeling.len(), 3);

        let psb = "PSB 1\n1 1\nchair 0 1\nm9\n";
        assert_eq!(parse_labels(psb.as_bytes()).unwrap().class_of("m9"), Some("chair"));
    }

    #[test]
    fn unlabeled_matrix_id_is_an_error() {
        let dm = matrix(&["a", "b"], &[&[0.0, 1.0], &[1.0, 0.0]]);
        let labeling = labels(&[("a", "x")]);
        assert!(nn_tier_scores(&dm, &labeling).is_err());
    }
}
