use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::ccdm::DEFAULT_BLOCK_LENGTH;
use crate::metrics::DEFAULT_QUADRATURE_NODES;
use crate::shaping::Preset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("format: expected csv or json, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethodName {
    Quadrature,
    MonteCarlo,
}

/// A full run description.
///
/// On disk it is TOML with the sections `[run]`, `[sweep]`, `[link]` and
/// `[metrics]`; every key is optional and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub distributions: Vec<Preset>,
    pub snr_db: Vec<f64>,
    /// Frames per sweep point; zero skips the link simulation.
    pub frames: usize,
    pub seed: u64,
    /// Worker threads; zero uses every core.
    pub workers: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub baud_ghz: f64,
    pub polarizations: u32,
    pub dm_block_length: usize,
    pub max_iterations: usize,
    pub mi_method: MiMethodName,
    pub quadrature_nodes: usize,
    pub mi_samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            distributions: Preset::ALL.to_vec(),
            snr_db: vec![10.0, 12.0, 14.0, 16.0, 18.0, 20.0],
            frames: 0,
            seed: 1,
            workers: 0,
            format: OutputFormat::Csv,
            out: None,
            baud_ghz: 32.0,
            polarizations: 2,
            dm_block_length: DEFAULT_BLOCK_LENGTH,
            max_iterations: crate::fec::DEFAULT_MAX_ITERATIONS,
            mi_method: MiMethodName::Quadrature,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            mi_samples: 100_000,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    link: LinkSection,
    #[serde(default)]
    metrics: MetricsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    seed: Option<u64>,
    frames: Option<usize>,
    workers: Option<usize>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    distributions: Option<Vec<String>>,
    snr_db: Option<Vec<f64>>,
    snr_range: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSection {
    baud_ghz: Option<f64>,
    polarizations: Option<u32>,
    dm_block_length: Option<usize>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsSection {
    method: Option<MiMethodName>,
    quadrature_nodes: Option<usize>,
    samples: Option<usize>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = Config::default();
        let FileConfig { run, sweep, link, metrics } = file;
        set(&mut cfg.seed, run.seed);
        set(&mut cfg.frames, run.frames);
        set(&mut cfg.workers, run.workers);
        set(&mut cfg.format, run.format);
        cfg.out = run.out.or(cfg.out);
        if let Some(names) = sweep.distributions {
            cfg.distributions = names
                .iter()
                .map(|n| parse_preset(n, "sweep.distributions"))
                .collect::<Result<_>>()?;
        }
        match (sweep.snr_db, sweep.snr_range) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "sweep.snr_db and sweep.snr_range are mutually exclusive".into(),
                ))
            }
            (Some(v), None) => cfg.snr_db = v,
            (None, Some(r)) => cfg.snr_db = parse_snr_range(&r).map_err(|e| prefix("sweep.snr_range", e))?,
            (None, None) => {}
        }
        set(&mut cfg.baud_ghz, link.baud_ghz);
        set(&mut cfg.polarizations, link.polarizations);
        set(&mut cfg.dm_block_length, link.dm_block_length);
        set(&mut cfg.max_iterations, link.max_iterations);
        set(&mut cfg.mi_method, metrics.method);
        set(&mut cfg.quadrature_nodes, metrics.quadrature_nodes);
        set(&mut cfg.mi_samples, metrics.samples);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() {
            return Err(Error::Config("sweep.distributions: empty".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("sweep.snr_db: empty".into()));
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("sweep.snr_db: {s} is not finite")));
        }
        if !(self.baud_ghz > 0.0 && self.baud_ghz.is_finite()) {
            return Err(Error::Config(format!("link.baud_ghz: {} must be positive", self.baud_ghz)));
        }
        if !(1..=2).contains(&self.polarizations) {
            return Err(Error::Config(format!("link.polarizations: {} not in 1..=2", self.polarizations)));
        }
        if self.dm_block_length == 0 {
            return Err(Error::Config("link.dm_block_length: must be positive".into()));
        }
        if self.quadrature_nodes < 2 {
            return Err(Error::Config("metrics.quadrature_nodes: need at least 2".into()));
        }
        if self.mi_samples < 2 {
            return Err(Error::Config("metrics.samples: need at least 2".into()));
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn prefix(key: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{key}: {m}")),
        other => other,
    }
}

pub fn parse_preset(name: &str, key: &str) -> Result<Preset> {
    name.parse()
        .map_err(|_| Error::Config(format!("{key}: unknown distribution {name:?}")))
}

/// Parses `start:stop:step` into an inclusive ascending grid.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(Error::Config(format!("expected start:stop:step, got {s:?}")));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Config(format!("{t:?} is not a number")))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step <= 0.0 || b < a {
        return Err(Error::Config(format!("range {s:?} is empty or has a non-positive step")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::Config(format!("range {s:?} has too many points")));
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}
