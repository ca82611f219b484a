//! Run configuration: a flat `key = value` text file with CLI overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use shaperet_core::descriptor::DescriptorKind;
use shaperet_core::keypoints::{HarrisParams, Neighborhood};

/// Environment variable holding the default cache directory.
pub const CACHE_ENV: &str = "SHAPERET_CACHE";

/// How two descriptors are combined, if at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    None,
    /// Concatenate vectors sampled at the same points.
    VectorsSame,
    /// Concatenate vectors from two independent point draws.
    VectorsDifferent,
    /// Concatenate histograms built at the same points.
    HistogramsSame,
    /// Concatenate histograms from two independent point draws.
    HistogramsDifferent,
}

impl Combination {
    pub fn tag(&self) -> &'static str {
        match self {
            Combination::None => "none",
            Combination::VectorsSame => "vs",
            Combination::VectorsDifferent => "vd",
            Combination::HistogramsSame => "hists",
            Combination::HistogramsDifferent => "histd",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "none" => Combination::None,
            "vs" => Combination::VectorsSame,
            "vd" => Combination::VectorsDifferent,
            "hists" => Combination::HistogramsSame,
            "histd" => Combination::HistogramsDifferent,
            other => bail!("unknown combination {other:?} (expected none|vs|vd|hists|histd)"),
        })
    }

    /// Whether the two descriptors are sampled at independent point draws.
    pub fn uses_two_draws(&self) -> bool {
        matches!(self, Combination::VectorsDifferent | Combination::HistogramsDifferent)
    }
}

/// Sample point selection method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    Random,
    Saliency,
    Castellani,
    Harris(HarrisParams),
}

impl Sampler {
    pub fn tag(&self) -> &'static str {
        match self {
            Sampler::Random => "random",
            Sampler::Saliency => "saliency",
            Sampler::Castellani => "castellani",
            Sampler::Harris(p) => match p.neighborhood {
                Neighborhood::Adaptive { .. } => "harris-adaptive",
                Neighborhood::Rings { .. } => "harris-rings",
            },
        }
    }

    /// Canonical parameter string for cache keys.
    pub fn describe(&self) -> String {
        match self {
            Sampler::Random => "random".into(),
            Sampler::Saliency => "saliency".into(),
            Sampler::Castellani => "castellani".into(),
            Sampler::Harris(p) => {
                let nbhd = match p.neighborhood {
                    Neighborhood::Adaptive { diagonal_fraction } => format!("adaptive:{diagonal_fraction}"),
                    Neighborhood::Rings { count } => format!("rings:{count}"),
                };
                format!(
                    "harris({nbhd},k={},maxima={},frac={})",
                    p.k, p.ring_maxima, p.selection_fraction
                )
            }
        }
    }
}

/// A validated pipeline run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: PathBuf,
    /// Explicit label file; otherwise the dataset directory is searched for
    /// a single `.cla` (or `.csv`) file.
    pub labels: Option<PathBuf>,
    /// One descriptor, or exactly two when a combination mode is set.
    pub kinds: Vec<DescriptorKind>,
    pub combination: Combination,
    pub sampler: Sampler,
    /// Sample count per mesh (random sampler; detectors choose their own).
    pub samples: usize,
    pub dict_size: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub cache: PathBuf,
}

/// CLI-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub sampler: Option<String>,
}

impl RunConfig {
    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let map = parse_key_values(&text)?;
        Self::from_map(map, overrides)
    }

    pub fn from_map(map: BTreeMap<String, String>, overrides: &Overrides) -> Result<Self> {
        const KNOWN: [&str; 14] = [
            "dataset", "labels", "descriptor", "combination", "sampler", "samples",
            "dictionary", "seed", "out", "cache", "harris_k", "harris_fraction",
            "harris_rings", "harris_ring_maxima",
        ];
        for key in map.keys() {
            if !KNOWN.contains(&key.as_str()) {
                bail!("unknown config key {key:?}");
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let dataset = PathBuf::from(get("dataset").context("config is missing `dataset`")?);
        let labels = get("labels").map(PathBuf::from);

        let kinds: Vec<DescriptorKind> = get("descriptor")
            .unwrap_or("mean")
            .split(',')
            .map(|t| DescriptorKind::from_tag(t.trim()).map_err(anyhow::Error::from))
            .collect::<Result<_>>()?;

        let combination = Combination::from_tag(get("combination").unwrap_or("none"))?;

        let sampler_tag = overrides
            .sampler
            .clone()
            .unwrap_or_else(|| get("sampler").unwrap_or("random").to_string());
        let mut sampler = match sampler_tag.as_str() {
            "random" => Sampler::Random,
            "saliency" => Sampler::Saliency,
            "castellani" => Sampler::Castellani,
            "harris-adaptive" => Sampler::Harris(HarrisParams::adaptive_default()),
            "harris-rings" => Sampler::Harris(HarrisParams::rings_default()),
            other => bail!("unknown sampler {other:?}"),
        };
        if let Sampler::Harris(ref mut p) = sampler {
            if let Some(v) = get("harris_k") {
                p.k = v.parse().context("harris_k")?;
            }
            if let Some(v) = get("harris_fraction") {
                p.selection_fraction = v.parse().context("harris_fraction")?;
            }
            if let Some(v) = get("harris_rings") {
                p.neighborhood = Neighborhood::Rings {
                    count: v.parse().context("harris_rings")?,
                };
            }
            if let Some(v) = get("harris_ring_maxima") {
                p.ring_maxima = v.parse().context("harris_ring_maxima")?;
            }
        }

        let samples: usize = get("samples").unwrap_or("500").parse().context("samples")?;
        let dict_size: usize = get("dictionary").unwrap_or("500").parse().context("dictionary")?;
        let seed: u64 = match overrides.seed {
            Some(s) => s,
            None => get("seed").unwrap_or("0").parse().context("seed")?,
        };
        let out = overrides
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(get("out").unwrap_or("out")));
        let cache = overrides.cache.clone().unwrap_or_else(|| {
            get("cache")
                .map(PathBuf::from)
                .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("cache"))
        });

        let config = RunConfig {
            dataset,
            labels,
            kinds,
            combination,
            sampler,
            samples,
            dict_size,
            seed,
            out,
            cache,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match self.combination {
            Combination::None if self.kinds.len() != 1 => {
                bail!(
                    "without a combination mode exactly one descriptor is expected, got {}",
                    self.kinds.len()
                )
            }
            Combination::None => {}
            _ if self.kinds.len() != 2 => {
                bail!(
                    "combination {:?} requires exactly two descriptors, got {}",
                    self.combination.tag(),
                    self.kinds.len()
                )
            }
            _ => {}
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        if self.dict_size == 0 {
            bail!("dictionary size must be at least 1");
        }
        if !self.dataset.exists() {
            bail!("dataset directory {} does not exist", self.dataset.display());
        }
        if let Some(labels) = &self.labels {
            if !labels.exists() {
                bail!("label file {} does not exist", labels.display());
            }
        }
        Ok(())
    }

    /// Canonical snapshot of the effective configuration.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("dataset".into(), self.dataset.display().to_string());
        if let Some(labels) = &self.labels {
            map.insert("labels".into(), labels.display().to_string());
        }
        map.insert(
            "descriptor".into(),
            self.kinds.iter().map(|k| k.tag()).collect::<Vec<_>>().join(","),
        );
        map.insert("combination".into(), self.combination.tag().into());
        map.insert("sampler".into(), self.sampler.describe());
        map.insert("samples".into(), self.samples.to_string());
        map.insert("dictionary".into(), self.dict_size.to_string());
        map.insert("seed".into(), self.seed.to_string());
        map.insert("out".into(), self.out.display().to_string());
        map.insert("cache".into(), self.cache.display().to_string());
        map
    }
}

fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("config line {}: expected `key = value`, found {raw:?}", ln + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
