use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shaperet::cache::Cache;
use shaperet::config::{Overrides, RunConfig};
use shaperet::pipeline::{self, Ctx, TrainedDictionaries};
use shaperet::{plot, toygen};
use shaperet_core::bow::DistanceMatrix;
use shaperet_core::eval;

/// Bag-of-words shape retrieval over triangle mesh datasets.
#[derive(Parser)]
#[command(name = "shaperet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cache directory override (default also honors $SHAPERET_CACHE).
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        self.load_with_sampler(None)
    }

    fn load_with_sampler(&self, sampler: Option<String>) -> Result<RunConfig> {
        RunConfig::from_file(
            &self.config,
            &Overrides {
                seed: self.seed,
                out: self.out.clone(),
                cache: self.cache.clone(),
                sampler,
            },
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline: ingest through evaluation.
    Run(ConfigArgs),
    /// Parse the dataset and labels, reporting a summary.
    Ingest(ConfigArgs),
    /// Compute descriptor fields at all vertices (plus vertex geometry).
    Describe(ConfigArgs),
    /// Fit the dataset-wide PCA reduction per descriptor.
    Reduce(ConfigArgs),
    /// Select sample points on every mesh.
    Keypoints {
        #[command(flatten)]
        config: ConfigArgs,
        /// Override the configured sampler
        /// (random|saliency|castellani|harris-adaptive|harris-rings).
        #[arg(long)]
        method: Option<String>,
    },
    /// Train the visual dictionary (or one per kind for histogram modes).
    Dictionary(ConfigArgs),
    /// Build normalized word histograms per mesh.
    Signatures(ConfigArgs),
    /// Assemble the pairwise dissimilarity matrix.
    Distmat(ConfigArgs),
    /// Compute retrieval statistics, either from the cached pipeline or
    /// from an explicit matrix and label file.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Distance matrix file (.csv or .bin) for standalone evaluation.
        #[arg(long, requires = "labels")]
        matrix: Option<PathBuf>,
        /// Label file (.cla or id,class CSV) for standalone evaluation.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Time each pipeline stage on the configured dataset (fresh cache).
    Bench(ConfigArgs),
    /// Render SVG figures from stage CSV outputs.
    Plot {
        /// Figure type: `pr` (recall/precision files) or `sweep`
        /// (stats files over a parameter).
        #[arg(long)]
        kind: String,
        /// Stats column for the sweep x-axis (e.g. `dictionary`).
        #[arg(long, default_value = "dictionary")]
        x: String,
        #[arg(long)]
        out: PathBuf,
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Generate the bundled toy dataset (spheres, ellipsoids, tori).
    Toygen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Meshes per class.
        #[arg(long, default_value_t = toygen::DEFAULT_PER_CLASS)]
        per_class: usize,
    },
}

fn main() {
    if let Err(err) = real_main() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(&args.load()?),
        Command::Ingest(args) => cmd_ingest(&args.load()?),
        Command::Describe(args) => cmd_describe(&args.load()?),
        Command::Reduce(args) => cmd_reduce(&args.load()?),
        Command::Keypoints { config, method } => cmd_keypoints(&config.load_with_sampler(method)?),
        Command::Dictionary(args) => cmd_dictionary(&args.load()?),
        Command::Signatures(args) => cmd_signatures(&args.load()?),
        Command::Distmat(args) => cmd_distmat(&args.load()?),
        Command::Evaluate {
            config,
            seed,
            out,
            cache,
            matrix,
            labels,
        } => cmd_evaluate(config, seed, out, cache, matrix, labels),
        Command::Bench(args) => cmd_bench(&args.load()?),
        Command::Plot { kind, x, out, inputs } => cmd_plot(&kind, &x, &out, &inputs),
        Command::Toygen { out, seed, per_class } => {
            let count = toygen::write_dataset(&out, seed, per_class)?;
            println!("wrote {count} meshes and labels.cla to {}", out.display());
            Ok(())
        }
    }
}

fn print_stats(stats: &eval::RetrievalStats) {
    println!(
        "nn={:.4} tier1={:.4} tier2={:.4} e_measure={:.4} dcg={:.4}",
        stats.nn, stats.tier1, stats.tier2, stats.e_measure, stats.dcg
    );
}

fn cmd_run(config: &RunConfig) -> Result<()> {
    let output = pipeline::run_pipeline(config)?;
    println!(
        "evaluated {} meshes -> {}",
        output.matrix.len(),
        config.out.display()
    );
    print_stats(&output.stats);
    Ok(())
}

fn cmd_ingest(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let vertices: usize = ingested.meshes.iter().map(|m| m.mesh.vertex_count()).sum();
    let classes = ingested.labels.class_sizes().len();
    println!(
        "{} meshes, {classes} classes, {vertices} vertices total",
        ingested.meshes.len()
    );
    Ok(())
}

fn cmd_describe(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx = Ctx::new(config, &mut cache);
    pipeline::stage_fields(&mut ctx, &ingested)?;
    println!(
        "descriptor fields ready for {} meshes x {} kind(s)",
        ingested.meshes.len(),
        config.kinds.len()
    );
    Ok(())
}

fn cmd_reduce(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx = Ctx::new(config, &mut cache).require_stages(&["fields"]);
    let models = pipeline::stage_reduce(&mut ctx, &ingested)?;
    for (tag, model) in models {
        println!("{tag}: kept {} of {} dimensions", model.kept_dims(), model.input_dim());
    }
    Ok(())
}

fn cmd_keypoints(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx = Ctx::new(config, &mut cache);
    let sets = pipeline::stage_keypoints(&mut ctx, &ingested)?;

    let dir = config.out.join("keypoints");
    std::fs::create_dir_all(&dir)?;
    for set in &sets {
        let path = dir.join(format!("{}.{}.txt", set.mesh_id, set.method));
        let mut buf = Vec::new();
        set.write_to(&mut buf).map_err(anyhow::Error::from)?;
        std::fs::write(&path, buf)?;
        println!(
            "{}: {} points{}",
            set.mesh_id,
            set.len(),
            if set.degenerate { " (degenerate)" } else { "" }
        );
    }
    println!("point sets written to {}", dir.display());
    Ok(())
}

fn cmd_dictionary(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx =
        Ctx::new(config, &mut cache).require_stages(&["fields", "reduction", "keypoints"]);
    match pipeline::stage_dictionary(&mut ctx, &ingested)? {
        TrainedDictionaries::Single { dict, population } => {
            let total: usize = population.iter().map(|p| p.points.len()).sum();
            println!(
                "dictionary `{}`: {} words of dim {} from {total} vectors",
                dict.kind_tag,
                dict.len(),
                dict.dim
            );
        }
        TrainedDictionaries::Pair { dicts, .. } => {
            for dict in dicts.iter() {
                println!(
                    "dictionary `{}`: {} words of dim {}",
                    dict.kind_tag,
                    dict.len(),
                    dict.dim
                );
            }
        }
    }
    Ok(())
}

fn cmd_signatures(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx = Ctx::new(config, &mut cache)
        .require_stages(&["fields", "reduction", "keypoints", "dictionary"]);
    let (key, signatures) = pipeline::stage_signatures(&mut ctx, &ingested)?;
    println!(
        "{} signatures of length {} (artifact {key})",
        signatures.len(),
        signatures.first().map(|s| s.histogram.len()).unwrap_or(0)
    );
    Ok(())
}

fn cmd_distmat(config: &RunConfig) -> Result<()> {
    let ingested = pipeline::ingest(config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx = Ctx::new(config, &mut cache).require_stages(&["signatures"]);
    let (_, matrix) = pipeline::stage_distmat(&mut ctx, &ingested)?;

    std::fs::create_dir_all(&config.out)?;
    let mut csv = Vec::new();
    matrix.to_csv(&mut csv).map_err(anyhow::Error::from)?;
    std::fs::write(config.out.join("matrix.csv"), csv)?;
    let mut bin = Vec::new();
    matrix.write_to(&mut bin).map_err(anyhow::Error::from)?;
    std::fs::write(config.out.join("matrix.bin"), bin)?;
    println!("{0}x{0} matrix written to {1}", matrix.len(), config.out.display());
    Ok(())
}

fn cmd_evaluate(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    cache: Option<PathBuf>,
    matrix: Option<PathBuf>,
    labels: Option<PathBuf>,
) -> Result<()> {
    if let Some(matrix_path) = matrix {
        // standalone: explicit matrix + labels
        let labels_path = labels.expect("clap enforces --labels with --matrix");
        let matrix = read_matrix(&matrix_path)?;
        let labeling = eval::parse_labels(&std::fs::read(&labels_path)?)
            .with_context(|| format!("parsing {}", labels_path.display()))?;
        for class in eval::singleton_classes(&labeling) {
            eprintln!("warning: class {class:?} has a single member; its query is skipped");
        }
        let stats = eval::evaluate(&matrix, &labeling).map_err(anyhow::Error::from)?;

        let out = out.unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out)?;
        let id_columns = vec![("matrix".to_string(), matrix_path.display().to_string())];
        let mut buf = Vec::new();
        pipeline::write_stats_csv(&mut buf, &id_columns, &stats)?;
        std::fs::write(out.join("stats.csv"), buf)?;
        let mut pr = Vec::new();
        pipeline::write_pr_csv(&mut pr, &stats.pr_curve)?;
        std::fs::write(out.join("pr.csv"), pr)?;
        print_stats(&stats);
        return Ok(());
    }

    let Some(config_path) = config else {
        bail!("evaluate needs either --config or --matrix with --labels");
    };
    let config = RunConfig::from_file(
        &config_path,
        &Overrides {
            seed,
            out,
            cache,
            sampler: None,
        },
    )?;
    let ingested = pipeline::ingest(&config)?;
    let mut cache = Cache::open(&config.cache)?;
    let mut ctx = Ctx::new(&config, &mut cache).require_stages(&["distmat"]);
    let (_, stats) = pipeline::stage_evaluate(&mut ctx, &ingested)?;

    std::fs::create_dir_all(&config.out)?;
    let mut buf = Vec::new();
    pipeline::write_stats_csv(&mut buf, &pipeline::stats_row(&config), &stats)?;
    std::fs::write(config.out.join("stats.csv"), buf)?;
    let mut pr = Vec::new();
    pipeline::write_pr_csv(&mut pr, &stats.pr_curve)?;
    std::fs::write(config.out.join("pr.csv"), pr)?;
    print_stats(&stats);
    Ok(())
}

fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let matrix = if bytes.starts_with(b"SRDX") {
        DistanceMatrix::read_from(bytes.as_slice())
    } else {
        DistanceMatrix::from_csv(bytes.as_slice())
    };
    matrix.with_context(|| format!("parsing distance matrix {}", path.display()))
}

fn cmd_bench(config: &RunConfig) -> Result<()> {
    // fresh cache and scratch output so timings reflect real computation
    let scratch = config.cache.join(format!(
        "bench-{}",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    let mut bench_config = config.clone();
    bench_config.cache = scratch.join("cache");
    bench_config.out = scratch.join("out");
    let output = pipeline::run_pipeline(&bench_config)?;

    println!("{:<12} {:>12}", "stage", "time (ms)");
    for (stage, ms) in &output.manifest.stage_timings_ms {
        println!("{stage:<12} {ms:>12.1}");
    }
    println!("(wall-clock on this machine; no reference timings are claimed)");
    std::fs::remove_dir_all(&scratch).ok();
    Ok(())
}

fn cmd_plot(kind: &str, x: &str, out: &Path, inputs: &[PathBuf]) -> Result<()> {
    let refs: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
    match kind {
        "pr" => plot::plot_pr(&refs, out)?,
        "sweep" => plot::plot_sweep(&refs, x, out)?,
        other => bail!("unknown plot kind {other:?} (expected pr|sweep)"),
    }
    println!("wrote {}", out.display());
    Ok(())
}
