//! Staged pipeline execution with content-addressed caching.
//!
//! Stage order: ingest -> geometry -> descriptor fields at all vertices ->
//! PCA reduction -> keypoints -> [combination] -> dictionary ->
//! signatures -> distance matrix -> evaluation. Every artifact is keyed by
//! the hashes of its inputs, so re-running with identical inputs is a
//! pure cache hit and modifying one mesh invalidates exactly the stages
//! depending on it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use shaperet_core::bow::{self, CombineMode, Dictionary, DistanceMatrix, SampleVectors, Signature};
use shaperet_core::descriptor::{self, DescriptorField, DescriptorKind};
use shaperet_core::eval::{self, Labeling, RetrievalStats};
use shaperet_core::geometry::{estimate_geometry, VertexGeometry};
use shaperet_core::keypoints::{self, SamplePointSet};
use shaperet_core::mesh::TriMesh;
use shaperet_core::off;
use shaperet_core::reduction::{self, ReductionModel};
use shaperet_core::rings::DEFAULT_RING_COUNT;

use crate::cache::{derive_seed, hash_bytes, hash_parts, Cache, RunManifest};
use crate::config::{Combination, RunConfig, Sampler};

/// One parsed dataset mesh.
pub struct MeshEntry {
    pub id: String,
    pub path: PathBuf,
    pub content_hash: String,
    pub mesh: TriMesh,
}

/// Parsed dataset plus labels.
pub struct Ingested {
    pub meshes: Vec<MeshEntry>,
    pub labels: Labeling,
    pub labels_hash: String,
}

pub struct PipelineOutput {
    pub matrix: DistanceMatrix,
    pub stats: RetrievalStats,
    pub manifest: RunManifest,
}

/// Pipeline context: configuration, cache handle and the set of stages a
/// subcommand expects to find already cached.
pub struct Ctx<'a> {
    pub config: &'a RunConfig,
    pub cache: &'a mut Cache,
    strict: BTreeSet<&'static str>,
}

impl<'a> Ctx<'a> {
    pub fn new(config: &'a RunConfig, cache: &'a mut Cache) -> Self {
        Ctx {
            config,
            cache,
            strict: BTreeSet::new(),
        }
    }

    /// Stages that must already be cached (with the subcommand producing
    /// them, for the error message).
    pub fn require_stages(mut self, stages: &[&'static str]) -> Self {
        self.strict.extend(stages);
        self
    }

    fn stage_bytes<F>(
        &mut self,
        stage: &'static str,
        key: &str,
        ext: &str,
        produced_by: &'static str,
        compute: F,
    ) -> Result<Vec<u8>>
    where
        F: FnOnce() -> Result<Vec<u8>>,
    {
        if self.strict.contains(stage) {
            self.cache.require(stage, key, ext, produced_by)?;
        }
        self.cache.bytes_or(stage, key, ext, compute)
    }

    /// Like `stage_bytes`, for computations that themselves use the cache:
    /// the artifact is prepared with `&mut Ctx` when missing.
    fn stage_bytes_prepared<F>(
        &mut self,
        stage: &'static str,
        key: &str,
        ext: &str,
        produced_by: &'static str,
        prepare: F,
    ) -> Result<Vec<u8>>
    where
        F: FnOnce(&mut Ctx) -> Result<Vec<u8>>,
    {
        if self.strict.contains(stage) {
            self.cache.require(stage, key, ext, produced_by)?;
        }
        if !self.cache.path(stage, key, ext).exists() {
            let bytes = prepare(self)?;
            return self.cache.bytes_or(stage, key, ext, || Ok(bytes));
        }
        self.cache
            .bytes_or(stage, key, ext, || unreachable!("artifact exists"))
    }
}

// ---------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------

/// Parse every OFF file in the dataset directory (sorted by file stem)
/// and the classification file; verify all meshes are labeled.
pub fn ingest(config: &RunConfig) -> Result<Ingested> {
    let mut off_paths = Vec::new();
    for entry in std::fs::read_dir(&config.dataset)
        .with_context(|| format!("stage ingest: reading {}", config.dataset.display()))?
    {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "off") {
            off_paths.push(path);
        }
    }
    off_paths.sort();
    if off_paths.is_empty() {
        bail!("stage ingest: no .off files in {}", config.dataset.display());
    }

    let mut meshes = Vec::with_capacity(off_paths.len());
    for path in off_paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let bytes =
            std::fs::read(&path).with_context(|| format!("stage ingest: reading {}", path.display()))?;
        let mesh = off::parse_off(id.clone(), &bytes)
            .with_context(|| format!("stage ingest: mesh {id}"))?;
        meshes.push(MeshEntry {
            content_hash: hash_bytes(&bytes),
            id,
            path,
            mesh,
        });
    }

    let label_path = match &config.labels {
        Some(p) => p.clone(),
        None => discover_labels(config)?,
    };
    let label_bytes = std::fs::read(&label_path)
        .with_context(|| format!("stage ingest: reading labels {}", label_path.display()))?;
    let labels =
        eval::parse_labels(&label_bytes).context("stage ingest: parsing classification file")?;
    for entry in &meshes {
        if labels.class_of(&entry.id).is_none() {
            bail!("stage ingest: mesh {} has no class label", entry.id);
        }
    }
    Ok(Ingested {
        meshes,
        labels,
        labels_hash: hash_bytes(&label_bytes),
    })
}

fn discover_labels(config: &RunConfig) -> Result<PathBuf> {
    for ext in ["cla", "csv"] {
        let mut found = Vec::new();
        for entry in std::fs::read_dir(&config.dataset)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == ext) {
                found.push(path);
            }
        }
        match found.len() {
            1 => return Ok(found.pop().unwrap()),
            0 => continue,
            _ => bail!(
                "stage ingest: multiple .{ext} files in {}; set `labels = ...`",
                config.dataset.display()
            ),
        }
    }
    bail!(
        "stage ingest: no classification file found in {}; set `labels = ...`",
        config.dataset.display()
    )
}

// ---------------------------------------------------------------------
// cache keys
// ---------------------------------------------------------------------

fn geometry_key(entry: &MeshEntry) -> String {
    hash_parts(&["geometry-v1", &entry.content_hash])
}

fn field_key(entry: &MeshEntry, kind: DescriptorKind) -> String {
    let rings = DEFAULT_RING_COUNT.to_string();
    hash_parts(&["field-v1", &entry.content_hash, kind.tag(), &rings])
}

fn reduction_key(ingested: &Ingested, kind: DescriptorKind) -> String {
    let mut parts = vec!["reduction-v1".to_string(), kind.tag().to_string()];
    for entry in &ingested.meshes {
        parts.push(field_key(entry, kind));
    }
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    hash_parts(&refs)
}

fn keypoints_key(config: &RunConfig, entry: &MeshEntry, draw: u32) -> String {
    let mut parts = vec![
        "keypoints-v1".to_string(),
        entry.content_hash.clone(),
        config.sampler.describe(),
    ];
    if matches!(config.sampler, Sampler::Random) {
        parts.push(config.samples.to_string());
        parts.push(derive_seed(config.seed, &entry.id, draw).to_string());
    }
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    hash_parts(&refs)
}

// ---------------------------------------------------------------------
// geometry + fields
// ---------------------------------------------------------------------

pub fn load_geometry(ctx: &mut Ctx, entry: &MeshEntry) -> Result<VertexGeometry> {
    let key = geometry_key(entry);
    let mesh = &entry.mesh;
    let bytes = ctx.cache.bytes_or("geometry", &key, "bin", || {
        let geometry = estimate_geometry(mesh)
            .with_context(|| format!("stage geometry: mesh {}", entry.id))?;
        let mut buf = Vec::new();
        geometry.write_to(&mut buf)?;
        Ok(buf)
    })?;
    Ok(VertexGeometry::read_from(bytes.as_slice())?)
}

pub fn load_field(ctx: &mut Ctx, entry: &MeshEntry, kind: DescriptorKind) -> Result<DescriptorField> {
    let key = field_key(entry, kind);
    let bytes = ctx.stage_bytes_prepared("fields", &key, "bin", "describe", |ctx| {
        let geometry = load_geometry(ctx, entry)?;
        let field = descriptor::compute_field(&entry.mesh, &geometry, kind, DEFAULT_RING_COUNT)
            .with_context(|| format!("stage describe: mesh {}", entry.id))?;
        let mut buf = Vec::new();
        field.write_to(&mut buf)?;
        Ok(buf)
    })?;
    Ok(DescriptorField::read_from(bytes.as_slice())?)
}

/// Compute (or reuse) descriptor fields for every mesh and kind.
pub fn stage_fields(ctx: &mut Ctx, ingested: &Ingested) -> Result<()> {
    let kinds = ctx.config.kinds.clone();
    for kind in kinds {
        for entry in &ingested.meshes {
            load_field(ctx, entry, kind)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// reduction
// ---------------------------------------------------------------------

pub fn load_reduction(
    ctx: &mut Ctx,
    ingested: &Ingested,
    kind: DescriptorKind,
) -> Result<ReductionModel> {
    let key = reduction_key(ingested, kind);
    let bytes = ctx.stage_bytes_prepared("reduction", &key, "bin", "reduce", |ctx| {
        // stream every mesh's field through the accumulators in id order
        let mut fit = reduction::FitAccumulator::new(kind.raw_len(DEFAULT_RING_COUNT));
        for entry in &ingested.meshes {
            let field = load_field(ctx, entry, kind)?;
            for row in field.vectors() {
                fit.add(row);
            }
        }
        let partial = fit
            .finish()
            .with_context(|| format!("stage reduce: descriptor {}", kind.tag()))?;
        let mut ranges = partial.range_accumulator();
        for entry in &ingested.meshes {
            let field = load_field(ctx, entry, kind)?;
            for row in field.vectors() {
                ranges.add(row);
            }
        }
        let model = ranges.finish();
        let mut buf = Vec::new();
        model.write_to(&mut buf)?;
        Ok(buf)
    })?;
    Ok(ReductionModel::read_from(bytes.as_slice())?)
}

pub fn stage_reduce(ctx: &mut Ctx, ingested: &Ingested) -> Result<BTreeMap<&'static str, ReductionModel>> {
    let kinds = ctx.config.kinds.clone();
    let mut models = BTreeMap::new();
    for kind in kinds {
        models.insert(kind.tag(), load_reduction(ctx, ingested, kind)?);
    }
    Ok(models)
}

// ---------------------------------------------------------------------
// keypoints
// ---------------------------------------------------------------------

/// Number of independent point draws the combination mode needs.
fn draw_count(config: &RunConfig) -> u32 {
    if config.combination.uses_two_draws() {
        2
    } else {
        1
    }
}

pub fn load_keypoints(ctx: &mut Ctx, entry: &MeshEntry, draw: u32) -> Result<SamplePointSet> {
    let key = keypoints_key(ctx.config, entry, draw);
    let config = ctx.config;
    let mesh = &entry.mesh;
    let need_geometry = matches!(config.sampler, Sampler::Saliency);
    let geometry = if need_geometry && !ctx.cache.path("keypoints", &key, "txt").exists() {
        Some(load_geometry(ctx, entry)?)
    } else {
        None
    };
    let sampler = config.sampler;
    let samples = config.samples;
    let seed = derive_seed(config.seed, &entry.id, draw);
    let id = entry.id.clone();
    let bytes = ctx.stage_bytes("keypoints", &key, "txt", "keypoints", || {
        let set = match sampler {
            Sampler::Random => keypoints::random_points(mesh, samples, seed),
            Sampler::Saliency => keypoints::mesh_saliency(mesh, geometry.as_ref().unwrap()),
            Sampler::Castellani => keypoints::castellani_points(mesh),
            Sampler::Harris(params) => keypoints::harris3d(mesh, &params),
        }
        .with_context(|| format!("stage keypoints: mesh {id}"))?;
        let mut buf = Vec::new();
        set.write_to(&mut buf)?;
        Ok(buf)
    })?;
    Ok(SamplePointSet::read_from(bytes.as_slice())?)
}

pub fn stage_keypoints(ctx: &mut Ctx, ingested: &Ingested) -> Result<Vec<SamplePointSet>> {
    let draws = draw_count(ctx.config);
    let mut sets = Vec::new();
    for entry in &ingested.meshes {
        for draw in 0..draws {
            sets.push(load_keypoints(ctx, entry, draw)?);
        }
    }
    Ok(sets)
}

// ---------------------------------------------------------------------
// sample vectors and dictionaries
// ---------------------------------------------------------------------

/// Reduced vectors of one kind at one mesh's sample points.
fn reduced_samples(
    field: &DescriptorField,
    model: &ReductionModel,
    points: &SamplePointSet,
) -> Result<SampleVectors> {
    if points.is_empty() {
        bail!(
            "mesh {}: sampler {} produced no points (degenerate: {})",
            points.mesh_id,
            points.method,
            points.degenerate
        );
    }
    let mut data = Vec::with_capacity(points.len() * model.kept_dims());
    for &v in &points.indices {
        if v >= field.vertex_count() {
            bail!("mesh {}: sample vertex {v} out of range", points.mesh_id);
        }
        data.extend(model.apply(field.vector(v)).map_err(anyhow::Error::from)?);
    }
    Ok(SampleVectors {
        mesh_id: points.mesh_id.clone(),
        points: points.indices.clone(),
        dim: model.kept_dims(),
        data,
    })
}

/// Per-mesh vector populations that feed one dictionary. For histogram
/// combinations this is called once per kind.
fn vector_population(
    ctx: &mut Ctx,
    ingested: &Ingested,
    kind_index: usize,
    draw: u32,
) -> Result<Vec<SampleVectors>> {
    let kind = ctx.config.kinds[kind_index];
    let model = load_reduction(ctx, ingested, kind)?;
    let mut out = Vec::new();
    for entry in &ingested.meshes {
        let field = load_field(ctx, entry, kind)?;
        let points = load_keypoints(ctx, entry, draw)?;
        out.push(
            reduced_samples(&field, &model, &points)
                .with_context(|| format!("stage signatures: mesh {}", entry.id))?,
        );
    }
    Ok(out)
}

/// Combined (or single-kind) vector populations for vector-space modes.
fn combined_population(ctx: &mut Ctx, ingested: &Ingested) -> Result<Vec<SampleVectors>> {
    match ctx.config.combination {
        Combination::None => vector_population(ctx, ingested, 0, 0),
        Combination::VectorsSame => {
            let a = vector_population(ctx, ingested, 0, 0)?;
            let b = vector_population(ctx, ingested, 1, 0)?;
            a.iter()
                .zip(&b)
                .map(|(x, y)| {
                    bow::combine_vectors(x, y, CombineMode::SamePoints)
                        .with_context(|| format!("stage signatures: mesh {}", x.mesh_id))
                })
                .collect()
        }
        Combination::VectorsDifferent => {
            let a = vector_population(ctx, ingested, 0, 0)?;
            let b = vector_population(ctx, ingested, 1, 1)?;
            a.iter()
                .zip(&b)
                .map(|(x, y)| {
                    bow::combine_vectors(x, y, CombineMode::DifferentPoints)
                        .with_context(|| format!("stage signatures: mesh {}", x.mesh_id))
                })
                .collect()
        }
        _ => bail!("combined_population called for a histogram combination"),
    }
}

fn dictionary_key(ctx: &Ctx, ingested: &Ingested, label: &str, kinds: &[DescriptorKind], draws: &[u32]) -> String {
    let config = ctx.config;
    let mut parts = vec![
        "dictionary-v1".to_string(),
        label.to_string(),
        config.dict_size.to_string(),
        config.seed.to_string(),
    ];
    for &kind in kinds {
        parts.push(reduction_key(ingested, kind));
    }
    for entry in &ingested.meshes {
        for &draw in draws {
            parts.push(keypoints_key(config, entry, draw));
        }
    }
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    hash_parts(&refs)
}

fn train_dictionary(
    ctx: &mut Ctx,
    key: &str,
    label: &str,
    population: &[SampleVectors],
) -> Result<Dictionary> {
    let dict_size = ctx.config.dict_size;
    let seed = ctx.config.seed;
    let bytes = ctx.stage_bytes("dictionary", key, "bin", "dictionary", || {
        let dim = population.first().map(|p| p.dim).unwrap_or(0);
        let mut flat = Vec::new();
        for p in population {
            flat.extend_from_slice(&p.data);
        }
        let mut dict = bow::kmeans(&flat, dim, dict_size, seed, bow::DEFAULT_MAX_ITER)
            .with_context(|| format!("stage dictionary: {label}"))?;
        dict.kind_tag = label.to_string();
        let mut buf = Vec::new();
        dict.write_to(&mut buf)?;
        Ok(buf)
    })?;
    Ok(Dictionary::read_from(bytes.as_slice())?)
}

// ---------------------------------------------------------------------
// signatures
// ---------------------------------------------------------------------

fn signatures_key(ctx: &Ctx, ingested: &Ingested) -> String {
    let config = ctx.config;
    let combo = config.combination;
    let mut parts = vec!["signatures-v1".to_string(), combo.tag().to_string()];
    let (kinds, draws): (Vec<DescriptorKind>, Vec<u32>) = population_plan(config);
    parts.push(dictionary_key(ctx, ingested, "population", &kinds, &draws));
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    hash_parts(&refs)
}

/// Which kinds and draws feed dictionary training, canonically.
fn population_plan(config: &RunConfig) -> (Vec<DescriptorKind>, Vec<u32>) {
    match config.combination {
        Combination::None => (config.kinds.clone(), vec![0]),
        Combination::VectorsSame | Combination::HistogramsSame => (config.kinds.clone(), vec![0]),
        Combination::VectorsDifferent | Combination::HistogramsDifferent => {
            (config.kinds.clone(), vec![0, 1])
        }
    }
}

pub fn stage_signatures(ctx: &mut Ctx, ingested: &Ingested) -> Result<(String, Vec<Signature>)> {
    let key = signatures_key(ctx, ingested);
    let bytes = ctx.stage_bytes_prepared("signatures", &key, "csv", "signatures", |ctx| {
        let signatures = compute_signatures(ctx, ingested)?;
        let mut buf = Vec::new();
        write_signature_csv(&mut buf, &signatures)?;
        Ok(buf)
    })?;
    Ok((key, parse_signature_csv(&bytes)?))
}

/// Trained dictionaries with the populations that produced them.
pub enum TrainedDictionaries {
    /// One dictionary over a single (possibly vector-combined) population.
    Single {
        dict: Dictionary,
        population: Vec<SampleVectors>,
    },
    /// Histogram combinations: one dictionary per descriptor kind.
    Pair {
        dicts: Box<[Dictionary; 2]>,
        populations: Box<[Vec<SampleVectors>; 2]>,
    },
}

/// Train every dictionary the configured combination needs.
pub fn stage_dictionary(ctx: &mut Ctx, ingested: &Ingested) -> Result<TrainedDictionaries> {
    match ctx.config.combination {
        Combination::None | Combination::VectorsSame | Combination::VectorsDifferent => {
            let population = combined_population(ctx, ingested)?;
            let label = ctx
                .config
                .kinds
                .iter()
                .map(|k| k.tag())
                .collect::<Vec<_>>()
                .join("+");
            let (kinds, draws) = population_plan(ctx.config);
            let key = dictionary_key(ctx, ingested, "population", &kinds, &draws);
            let dict = train_dictionary(ctx, &key, &label, &population)?;
            Ok(TrainedDictionaries::Single { dict, population })
        }
        Combination::HistogramsSame | Combination::HistogramsDifferent => {
            let draws = if ctx.config.combination.uses_two_draws() {
                [0u32, 1]
            } else {
                [0u32, 0]
            };
            let mut dicts = Vec::new();
            let mut populations = Vec::new();
            for kind_index in 0..2 {
                let kind = ctx.config.kinds[kind_index];
                let population = vector_population(ctx, ingested, kind_index, draws[kind_index])?;
                let key = dictionary_key(ctx, ingested, kind.tag(), &[kind], &[draws[kind_index]]);
                dicts.push(train_dictionary(ctx, &key, kind.tag(), &population)?);
                populations.push(population);
            }
            let second_pop = populations.pop().unwrap();
            let first_pop = populations.pop().unwrap();
            let second = dicts.pop().unwrap();
            let first = dicts.pop().unwrap();
            Ok(TrainedDictionaries::Pair {
                dicts: Box::new([first, second]),
                populations: Box::new([first_pop, second_pop]),
            })
        }
    }
}

fn compute_signatures(ctx: &mut Ctx, ingested: &Ingested) -> Result<Vec<Signature>> {
    let sign = |population: &[SampleVectors], dict: &Dictionary| -> Result<Vec<Signature>> {
        population
            .iter()
            .map(|p| {
                bow::build_signature(p.mesh_id.clone(), &p.data, p.dim, dict)
                    .map_err(anyhow::Error::from)
                    .with_context(|| format!("stage signatures: mesh {}", p.mesh_id))
            })
            .collect()
    };
    match stage_dictionary(ctx, ingested)? {
        TrainedDictionaries::Single { dict, population } => sign(&population, &dict),
        TrainedDictionaries::Pair { dicts, populations } => {
            let first = sign(&populations[0], &dicts[0])?;
            let second = sign(&populations[1], &dicts[1])?;
            first
                .iter()
                .zip(&second)
                .map(|(a, b)| {
                    bow::combine_histograms(a, b)
                        .map_err(anyhow::Error::from)
                        .with_context(|| format!("stage signatures: mesh {}", a.mesh_id))
                })
                .collect()
        }
    }
}

fn write_signature_csv<W: Write>(mut w: W, signatures: &[Signature]) -> Result<()> {
    for s in signatures {
        write!(w, "{},{}", s.mesh_id, s.sample_count)?;
        for h in &s.histogram {
            write!(w, ",{h}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn parse_signature_csv(bytes: &[u8]) -> Result<Vec<Signature>> {
    let text = std::str::from_utf8(bytes).context("signature csv is not UTF-8")?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mesh_id = fields.next().unwrap_or_default().to_string();
        let sample_count: usize = fields
            .next()
            .context("signature row missing sample count")?
            .parse()?;
        let histogram: Vec<f64> = fields.map(|f| f.parse()).collect::<std::result::Result<_, _>>()?;
        out.push(Signature {
            mesh_id,
            histogram,
            sample_count,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// distance matrix and evaluation
// ---------------------------------------------------------------------

pub fn stage_distmat(ctx: &mut Ctx, ingested: &Ingested) -> Result<(String, DistanceMatrix)> {
    let (sig_key, signatures) = stage_signatures(ctx, ingested)?;
    let key = hash_parts(&["distmat-v1", &sig_key]);
    let bytes = ctx.stage_bytes("distmat", &key, "csv", "distmat", || {
        let matrix = bow::distance_matrix(&signatures).context("stage distmat")?;
        let mut buf = Vec::new();
        matrix.to_csv(&mut buf)?;
        Ok(buf)
    })?;
    let matrix = DistanceMatrix::from_csv(bytes.as_slice())?;
    // binary twin alongside the CSV
    let bin_path = ctx.cache.path("distmat", &key, "bin");
    if !bin_path.exists() {
        let mut buf = Vec::new();
        matrix.write_to(&mut buf)?;
        std::fs::create_dir_all(bin_path.parent().unwrap())?;
        std::fs::write(&bin_path, buf)?;
    }
    Ok((key, matrix))
}

pub fn stage_evaluate(
    ctx: &mut Ctx,
    ingested: &Ingested,
) -> Result<(DistanceMatrix, RetrievalStats)> {
    let (matrix_key, matrix) = stage_distmat(ctx, ingested)?;
    let key = hash_parts(&["evaluate-v1", &matrix_key, &ingested.labels_hash]);
    let labels = &ingested.labels;
    let config_row = stats_row(ctx.config);
    let bytes = ctx.stage_bytes("evaluate", &key, "csv", "evaluate", || {
        let stats = eval::evaluate(&matrix, labels).context("stage evaluate")?;
        let mut buf = Vec::new();
        write_stats_csv(&mut buf, &config_row, &stats)?;
        Ok(buf)
    })?;
    let stats = parse_stats_csv(&bytes)?;
    // PR curve artifact next to the stats
    let pr_path = ctx.cache.path("evaluate", &key, "pr.csv");
    if !pr_path.exists() {
        let full = eval::evaluate(&matrix, labels).context("stage evaluate")?;
        let mut buf = Vec::new();
        write_pr_csv(&mut buf, &full.pr_curve)?;
        std::fs::write(&pr_path, buf)?;
    }
    let pr_curve = parse_pr_csv(&std::fs::read(&pr_path)?)?;
    Ok((
        matrix,
        RetrievalStats {
            pr_curve,
            ..stats
        },
    ))
}

/// Identification columns of the stats CSV.
pub fn stats_row(config: &RunConfig) -> Vec<(String, String)> {
    vec![
        ("method".into(), config.sampler.tag().to_string()),
        (
            "descriptor".into(),
            config.kinds.iter().map(|k| k.tag()).collect::<Vec<_>>().join("+"),
        ),
        ("combination".into(), config.combination.tag().to_string()),
        ("samples".into(), config.samples.to_string()),
        ("dictionary".into(), config.dict_size.to_string()),
        ("seed".into(), config.seed.to_string()),
    ]
}

pub fn write_stats_csv<W: Write>(
    mut w: W,
    id_columns: &[(String, String)],
    stats: &RetrievalStats,
) -> Result<()> {
    let mut header: Vec<&str> = id_columns.iter().map(|(k, _)| k.as_str()).collect();
    header.extend(["nn", "tier1", "tier2", "e_measure", "dcg"]);
    writeln!(w, "{}", header.join(","))?;
    let mut row: Vec<String> = id_columns.iter().map(|(_, v)| v.clone()).collect();
    row.push(stats.nn.to_string());
    row.push(stats.tier1.to_string());
    row.push(stats.tier2.to_string());
    row.push(stats.e_measure.to_string());
    row.push(stats.dcg.to_string());
    writeln!(w, "{}", row.join(","))?;
    Ok(())
}

pub fn parse_stats_csv(bytes: &[u8]) -> Result<RetrievalStats> {
    let text = std::str::from_utf8(bytes).context("stats csv is not UTF-8")?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().context("stats csv has no header")?.split(',').collect();
    let row: Vec<&str> = lines.next().context("stats csv has no data row")?.split(',').collect();
    let col = |name: &str| -> Result<f64> {
        let idx = header
            .iter()
            .position(|h| *h == name)
            .with_context(|| format!("stats csv missing column {name}"))?;
        Ok(row[idx].parse()?)
    };
    Ok(RetrievalStats {
        nn: col("nn")?,
        tier1: col("tier1")?,
        tier2: col("tier2")?,
        e_measure: col("e_measure")?,
        dcg: col("dcg")?,
        pr_curve: Vec::new(),
    })
}

pub fn write_pr_csv<W: Write>(mut w: W, curve: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "recall,precision")?;
    for (r, p) in curve {
        writeln!(w, "{r},{p}")?;
    }
    Ok(())
}

pub fn parse_pr_csv(bytes: &[u8]) -> Result<Vec<(f64, f64)>> {
    let text = std::str::from_utf8(bytes).context("pr csv is not UTF-8")?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (r, p) = line.split_once(',').context("pr row needs two fields")?;
        out.push((r.parse()?, p.parse()?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// full pipeline
// ---------------------------------------------------------------------

/// Run every stage and write matrix, stats, PR curve and manifest into
/// the output directory.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    let mut cache = Cache::open(&config.cache)?;
    let ingested = ingest(config)?;
    let mut ctx = Ctx::new(config, &mut cache);

    stage_fields(&mut ctx, &ingested)?;
    stage_reduce(&mut ctx, &ingested)?;
    stage_keypoints(&mut ctx, &ingested)?;
    let (matrix, stats) = stage_evaluate(&mut ctx, &ingested)?;

    std::fs::create_dir_all(&config.out)
        .with_context(|| format!("creating output directory {}", config.out.display()))?;
    let mut csv = Vec::new();
    matrix.to_csv(&mut csv)?;
    std::fs::write(config.out.join("matrix.csv"), csv)?;
    let mut bin = Vec::new();
    matrix.write_to(&mut bin)?;
    std::fs::write(config.out.join("matrix.bin"), bin)?;

    let mut stats_csv = Vec::new();
    write_stats_csv(&mut stats_csv, &stats_row(config), &stats)?;
    std::fs::write(config.out.join("stats.csv"), stats_csv)?;
    let mut pr_csv = Vec::new();
    write_pr_csv(&mut pr_csv, &stats.pr_curve)?;
    std::fs::write(config.out.join("pr.csv"), pr_csv)?;

    for class in eval::singleton_classes(&ingested.labels) {
        eprintln!("warning: class {class:?} has a single member; its query is skipped");
    }

    let manifest = RunManifest::new(config.snapshot(), &cache);
    manifest.write_to(&config.out.join("manifest.json"))?;

    Ok(PipelineOutput {
        matrix,
        stats,
        manifest,
    })
}
