use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use psqam::cli::{
    default_code, generate_frame, parse_preset, parse_snr_range, rate_table, run_sweep, write_rate_table,
    write_records, format_rate_table, Config, OutputFormat,
};
use psqam::pas::Transceiver;
use psqam::{Error, Result, SCHEMA_VERSION};

/// Probabilistically shaped 64-QAM link simulator.
#[derive(Debug, Parser)]
#[command(name = "psqam", disable_version_flag = true)]
struct Args {
    /// Print build and output schema versions.
    #[arg(long)]
    version: bool,
    /// TOML run description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Distribution to simulate; repeat for several (P1..P4, uniform).
    #[arg(long)]
    preset: Vec<String>,
    /// Single SNR point in dB (Es/N0); repeatable.
    #[arg(long, allow_negative_numbers = true)]
    snr: Vec<f64>,
    /// SNR grid as start:stop:step in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_range: Option<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Skip the link simulation and report information rates only.
    #[arg(long)]
    mi_only: bool,
    /// Print the operating-point table instead of sweeping.
    #[arg(long)]
    rate_table: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the parity-check matrix as text and exit.
    #[arg(long)]
    export_code: Option<PathBuf>,
    /// Write frame 0 of the first distribution and SNR as CSV and exit.
    #[arg(long)]
    dump_frame: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<Config> {
    let mut cfg = match &args.config {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    if !args.preset.is_empty() {
        cfg.distributions = args
            .preset
            .iter()
            .map(|p| parse_preset(p, "--preset"))
            .collect::<Result<_>>()?;
    }
    match (&args.snr_range, args.snr.is_empty()) {
        (Some(_), false) => return Err(Error::Config("--snr and --snr-range are mutually exclusive".into())),
        (Some(r), true) => {
            cfg.snr_db = parse_snr_range(r).map_err(|e| Error::Config(format!("--snr-range: {e}")))?
        }
        (None, false) => cfg.snr_db = args.snr.clone(),
        (None, true) => {}
    }
    if let Some(f) = args.frames {
        cfg.frames = f;
    }
    if args.mi_only {
        cfg.frames = 0;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse::<OutputFormat>()?;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(cfg: &Config) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Config(format!("--out {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(args: Args) -> Result<()> {
    if args.version {
        println!("psqam {} (output schema {SCHEMA_VERSION})", env!("CARGO_PKG_VERSION"));
        return Ok(());
    }
    let cfg = build_config(&args)?;
    if let Some(path) = &args.export_code {
        let code = default_code()?;
        std::fs::write(path, code.export()).map_err(|e| Error::Config(format!("--export-code {}: {e}", path.display())))?;
        eprintln!("code_hash {}", code.code_hash());
        return Ok(());
    }
    if let Some(path) = &args.dump_frame {
        let preset = cfg.distributions[0];
        let txrx = Transceiver::new(preset.constellation(), default_code()?, cfg.dm_block_length)?;
        let frame = generate_frame(&txrx, preset, cfg.seed, cfg.snr_db[0], 0)?;
        std::fs::write(path, txrx.frame_csv(&frame)).map_err(|e| Error::Config(format!("--dump-frame {}: {e}", path.display())))?;
        return Ok(());
    }
    if args.rate_table {
        let code = default_code()?;
        let rows = rate_table(cfg.baud_ghz, cfg.polarizations, code.rate(), &cfg.distributions)?;
        let mut out = output(&cfg)?;
        if args.format.is_none() && cfg.out.is_none() {
            out.write_all(format_rate_table(&rows).as_bytes())
                .map_err(|e| Error::Config(format!("cannot write output: {e}")))?;
        } else {
            write_rate_table(&rows, cfg.format, &mut out)?;
        }
        return out.flush().map_err(|e| Error::Config(format!("cannot write output: {e}")));
    }
    let records = run_sweep(&cfg)?;
    let mut out = output(&cfg)?;
    write_records(&records, cfg.format, &mut out)?;
    out.flush().map_err(|e| Error::Config(format!("cannot write output: {e}")))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psqam: {e}");
            ExitCode::from(2)
        }
    }
}
