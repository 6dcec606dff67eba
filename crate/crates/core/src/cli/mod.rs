//! Batch front-end: sweeps, record output and the operating-point table.

mod config;

pub use config::{parse_preset, parse_snr_range, Config, MiMethodName, OutputFormat};

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{add_noise, noise_variance, stream_id, stream_rng};
use crate::fec::{build_code, CodeDefinition, CodeSpec, DecoderConfig};
use crate::metrics::{bit_metric_rate, mutual_information, ErrorStats, MiMethod};
use crate::pas::{TxFrame, Transceiver};
use crate::shaping::{operating_point, transmission_rate, CodeRate, Preset};
use crate::{Error, Result, SCHEMA_VERSION};

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub distribution_id: String,
    pub snr_db: f64,
    /// Symbol-wise mutual information, bits per QAM symbol.
    pub mi_bits: f64,
    /// Bit-metric rate of the bit-wise receiver, bits per QAM symbol.
    pub gmi_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fer: Option<f64>,
    pub frames: usize,
    pub rate_bits: f64,
    pub net_rate_gbps: f64,
    pub seed: u64,
    pub code_hash: String,
}

/// Column order of the CSV output.
pub const RECORD_COLUMNS: [&str; 11] = [
    "distribution_id",
    "snr_db",
    "mi_bits",
    "gmi_bits",
    "ber",
    "fer",
    "frames",
    "rate_bits",
    "net_rate_gbps",
    "seed",
    "code_hash",
];

fn distribution_key(p: Preset) -> u64 {
    let mut b = [0u8; 8];
    for (d, s) in b.iter_mut().zip(p.name().bytes()) {
        *d = s;
    }
    u64::from_le_bytes(b)
}

/// Random data for frame `frame` of a sweep point, and the generator that
/// then supplies its channel noise.
pub fn frame_rng(seed: u64, preset: Preset, snr_db: f64, frame: u64) -> rand_chacha::ChaCha12Rng {
    stream_rng(seed, stream_id(&[distribution_key(preset), snr_db.to_bits(), frame]))
}

fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

/// Transmit frame `frame` of a sweep point.
pub fn generate_frame(txrx: &Transceiver, preset: Preset, seed: u64, snr_db: f64, frame: u64) -> Result<TxFrame> {
    let mut rng = frame_rng(seed, preset, snr_db, frame);
    txrx.tx_chain(&random_bits(&mut rng, txrx.data_bits_per_frame()))
}

/// Runs `frames` frames through tx, channel and rx.
pub fn simulate_point(txrx: &Transceiver, preset: Preset, seed: u64, snr_db: f64, frames: usize) -> Result<ErrorStats> {
    let nv = noise_variance(snr_db);
    let per_frame: Vec<ErrorStats> = (0..frames as u64)
        .into_par_iter()
        .map(|f| {
            let mut rng = frame_rng(seed, preset, snr_db, f);
            let data = random_bits(&mut rng, txrx.data_bits_per_frame());
            let tx = txrx.tx_chain(&data)?;
            let mut rx = tx.symbols;
            add_noise(&mut rng, nv, &mut rx);
            let out = txrx.rx_chain(&rx, nv, Some(&data))?;
            let mut s = ErrorStats::default();
            s.record_frame(data.len() as u64, out.bit_errors.unwrap_or(0) as u64, out.frame_error);
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let mut total = ErrorStats::default();
    for s in &per_frame {
        total.merge(s);
    }
    Ok(total)
}

/// The code shared by every operating point.
pub fn default_code() -> Result<Arc<CodeDefinition>> {
    build_code(&CodeSpec::default()).map(Arc::new)
}

/// Runs every (distribution, SNR) point of `cfg`. Records come out ordered
/// by the configured distribution order, then ascending SNR.
pub fn run_sweep(cfg: &Config) -> Result<Vec<SimulationRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("run.workers: {e}")))?;
    pool.install(|| sweep(cfg))
}

fn sweep(cfg: &Config) -> Result<Vec<SimulationRecord>> {
    let code = default_code()?;
    let code_hash = code.code_hash();
    let code_rate = code.rate();
    let decoder = DecoderConfig {
        max_iterations: cfg.max_iterations,
        ..DecoderConfig::default()
    };
    let transceivers: Vec<Option<Transceiver>> = cfg
        .distributions
        .iter()
        .map(|p| {
            (cfg.frames > 0)
                .then(|| Transceiver::new(p.constellation(), code.clone(), cfg.dm_block_length).map(|t| t.with_decoder(decoder)))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let mut points: Vec<(usize, f64)> = (0..cfg.distributions.len())
        .flat_map(|d| cfg.snr_db.iter().map(move |&s| (d, s)))
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    points
        .par_iter()
        .map(|&(d, snr)| {
            let preset = cfg.distributions[d];
            let c = preset.constellation();
            let method = match cfg.mi_method {
                MiMethodName::Quadrature => MiMethod::Quadrature {
                    nodes: cfg.quadrature_nodes,
                },
                MiMethodName::MonteCarlo => MiMethod::MonteCarlo {
                    samples: cfg.mi_samples,
                    seed: stream_id(&[cfg.seed, distribution_key(preset), snr.to_bits()]),
                },
            };
            let op = operating_point(&c, code_rate, cfg.baud_ghz, cfg.polarizations)?;
            let stats = match &transceivers[d] {
                Some(t) => Some(simulate_point(t, preset, cfg.seed, snr, cfg.frames)?),
                None => None,
            };
            Ok(SimulationRecord {
                distribution_id: preset.name().to_string(),
                snr_db: snr,
                mi_bits: mutual_information(&c, snr, method).value_bits,
                gmi_bits: bit_metric_rate(&c, snr, method).value_bits,
                ber: stats.map(|s| s.ber()),
                fer: stats.map(|s| s.fer()),
                frames: cfg.frames,
                rate_bits: op.rate_bits,
                net_rate_gbps: op.net_rate_gbps,
                seed: cfg.seed,
                code_hash: code_hash.clone(),
            })
        })
        .collect()
}

/// CSV with a leading `# psqam-records schema=N` comment line, then a header
/// of [`RECORD_COLUMNS`]. BER and FER are empty when no frames were run.
pub fn write_csv<W: Write>(records: &[SimulationRecord], mut out: W) -> Result<()> {
    writeln!(out, "# psqam-records schema={SCHEMA_VERSION}").map_err(io_err)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.distribution_id.clone(),
            r.snr_db.to_string(),
            r.mi_bits.to_string(),
            r.gmi_bits.to_string(),
            opt(r.ber),
            opt(r.fer),
            r.frames.to_string(),
            r.rate_bits.to_string(),
            r.net_rate_gbps.to_string(),
            r.seed.to_string(),
            r.code_hash.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Serialize)]
struct JsonRecords<'a> {
    schema_version: u32,
    records: &'a [SimulationRecord],
}

pub fn write_json<W: Write>(records: &[SimulationRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut out,
        &JsonRecords {
            schema_version: SCHEMA_VERSION,
            records,
        },
    )
    .map_err(|e| Error::Config(format!("cannot write output: {e}")))?;
    writeln!(out).map_err(io_err)
}

pub fn write_records<W: Write>(records: &[SimulationRecord], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(records, out),
        OutputFormat::Json => write_json(records, out),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("cannot write output: {e}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("cannot write output: {e}"))
}

/// One line of the operating-point table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub label: String,
    pub constellation: String,
    pub bits_per_symbol: u32,
    pub entropy_bits: f64,
    pub overhead_percent: f64,
    pub rate_bits: f64,
    pub net_rate_gbps: f64,
    /// Net rate reported for the experimental system, if any.
    pub reported_gbps: Option<f64>,
}

const REPORTED_GBPS: [f64; 4] = [300.0, 270.0, 230.0, 200.0];

/// Uniform reference systems: label, bits per symbol, FEC overhead in percent.
pub const REFERENCE_SYSTEMS: [(&str, u32, u64); 4] = [
    ("Ref1", 6, 28),
    ("Ref2", 6, 43),
    ("Ref3", 4, 11),
    ("Ref4", 4, 28),
];

/// Entropy, transmission rate and net rate per distribution, followed by
/// the uniform 64-QAM and 16-QAM reference systems with their own overheads.
pub fn rate_table(baud_ghz: f64, polarizations: u32, code_rate: CodeRate, distributions: &[Preset]) -> Result<Vec<RateRow>> {
    let pol = polarizations as f64;
    let mut rows = Vec::new();
    for &p in distributions {
        let op = operating_point(&p.constellation(), code_rate, baud_ghz, polarizations)?;
        let (label, reported) = match Preset::SHAPED.iter().position(|&s| s == p) {
            Some(i) => (format!("OP{} ({p})", i + 1), Some(REPORTED_GBPS[i])),
            None => (p.name().to_string(), None),
        };
        rows.push(RateRow {
            label,
            constellation: if p == Preset::Uniform { "64-QAM" } else { "PS-64-QAM" }.into(),
            bits_per_symbol: 6,
            entropy_bits: op.entropy_bits,
            overhead_percent: 100.0 * code_rate.overhead(),
            rate_bits: op.rate_bits,
            net_rate_gbps: op.net_rate_gbps,
            reported_gbps: reported,
        });
    }
    for (i, &(label, m, oh)) in REFERENCE_SYSTEMS.iter().enumerate() {
        let c = CodeRate::from_overhead_percent(oh)?;
        let rate = transmission_rate(m as f64, c.value(), m);
        rows.push(RateRow {
            label: label.into(),
            constellation: format!("{}-QAM", 1u32 << m),
            bits_per_symbol: m,
            entropy_bits: m as f64,
            overhead_percent: oh as f64,
            rate_bits: rate,
            net_rate_gbps: rate * baud_ghz * pol,
            reported_gbps: Some(REPORTED_GBPS[i]),
        });
    }
    Ok(rows)
}

/// Fixed-width text rendering of [`rate_table`].
pub fn format_rate_table(rows: &[RateRow]) -> String {
    let mut s = format!(
        "{:<10} {:<10} {:>9} {:>7} {:>10} {:>11} {:>9}\n",
        "point", "format", "H [bit]", "OH [%]", "R [bit]", "net [Gb/s]", "reported"
    );
    for r in rows {
        let reported = r.reported_gbps.map(|v| format!("{v:.0}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>9.3} {:>7.1} {:>10.4} {:>11.2} {:>9}",
            r.label, r.constellation, r.entropy_bits, r.overhead_percent, r.rate_bits, r.net_rate_gbps, reported
        );
    }
    s
}

pub fn write_rate_table<W: Write>(rows: &[RateRow], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| Error::Config(format!("cannot write output: {e}")))?;
            writeln!(out).map_err(io_err)
        }
        OutputFormat::Csv => {
            writeln!(out, "# psqam-rate-table schema={SCHEMA_VERSION}").map_err(io_err)?;
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)
        }
    }
}
