//! Experiment runner: config resolution, trace generation, single runs,
//! comparative runs, sweeps, and storage reports.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gaze_core::baselines::{IpStridePrefetcher, NAccessConfig, NAccessPrefetcher, NextLinePrefetcher};
use gaze_core::gaze::{storage_report, GazeConfig, GazePrefetcher};
use gaze_core::memsys::NullPrefetcher;
use gaze_core::sim::run_with_baseline;
use gaze_core::trace::{read_trace, write_trace, MemoryAccess, TraceFormat, BINARY_MAGIC};
use gaze_core::{Prefetcher, RunReport};

use config::{Config, ConfigError, OutputFormat, Selection, TraceSource};

/// Output directory for generated files; relative `--out` paths resolve
/// under it when set.
pub const OUTDIR_ENV: &str = "GAZE_SIM_OUTDIR";

#[derive(Parser)]
#[command(name = "gaze-sim", about = "Trace-driven spatial prefetcher simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable), e.g. --set prefetcher=gaze
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Config, ConfigError> {
        Config::resolve(self.config.as_deref(), &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print its report
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic trace file
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output path (resolved under $GAZE_SIM_OUTDIR if relative)
        #[arg(long)]
        out: PathBuf,
        /// Trace file format
        #[arg(long, default_value = "binary", value_parser = ["binary", "text"])]
        trace_format: String,
    },
    /// Sweep one dimension and emit CSV
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sweep dimension
        #[arg(long, value_parser = ["n-access", "region-size", "prefetchers"])]
        dim: String,
        /// Prefetchers for --dim prefetchers (comma-separated)
        #[arg(long)]
        prefetchers: Option<String>,
        /// Write CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the prefetcher storage breakdown as JSON
    Storage {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run several prefetchers on one trace against the no-prefetch baseline
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated prefetcher list
        #[arg(long, default_value = "next-line,ip-stride,offset-table,n-access:2,gaze")]
        prefetchers: String,
    },
}

#[derive(Debug)]
enum CliError {
    Config(ConfigError),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn runtime(message: impl Into<String>) -> CliError {
    CliError::Runtime(message.into())
}

/// Parses and executes a command line, writing machine output to `out`.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage; version and help exit zero
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(CliError::Config(e)) => {
            eprintln!("{e}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("{e}");
            1
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => cmd_run(&config.resolve()?, out),
        Command::Gen { config, out: path, trace_format } => {
            cmd_gen(&config.resolve()?, &path, &trace_format, out)
        }
        Command::Sweep { config, dim, prefetchers, out: path } => {
            cmd_sweep(&config.resolve()?, &dim, prefetchers.as_deref(), path.as_deref(), out)
        }
        Command::Storage { config } => cmd_storage(&config.resolve()?, out),
        Command::Compare { config, prefetchers } => {
            cmd_compare(&config.resolve()?, &prefetchers, out)
        }
    }
}

/// Builds a prefetcher instance for a selection, sized to the configured
/// region geometry.
pub fn build_prefetcher(selection: Selection, gaze: &GazeConfig) -> Box<dyn Prefetcher> {
    match selection {
        Selection::None => Box::new(NullPrefetcher),
        Selection::NextLine => {
            Box::new(NextLinePrefetcher::new(gaze.region_bytes, gaze.block_bytes))
        }
        Selection::IpStride => {
            Box::new(IpStridePrefetcher::new(gaze.region_bytes, gaze.block_bytes))
        }
        Selection::NAccess(n) => {
            let mut cfg = NAccessConfig::new(n);
            cfg.region_bytes = gaze.region_bytes;
            cfg.block_bytes = gaze.block_bytes;
            Box::new(NAccessPrefetcher::new(cfg))
        }
        Selection::Gaze(variant) => Box::new(GazePrefetcher::with_variant(*gaze, variant)),
    }
}

/// Loads the configured trace: from a file (format sniffed by magic) or by
/// running the configured generator.
fn load_trace(cfg: &Config) -> Result<Vec<MemoryAccess>, CliError> {
    match cfg.trace_source()? {
        TraceSource::File(path) => {
            let mut reader = BufReader::new(
                File::open(&path).map_err(|e| runtime(format!("cannot open {}: {e}", path.display())))?,
            );
            let mut magic = [0u8; 4];
            let n = reader
                .read(&mut magic)
                .map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
            // Re-open to parse from the start with the detected format.
            let format = if n == 4 && &magic == BINARY_MAGIC {
                TraceFormat::Binary
            } else {
                TraceFormat::Text
            };
            let reader = BufReader::new(
                File::open(&path).map_err(|e| runtime(format!("cannot open {}: {e}", path.display())))?,
            );
            read_trace(reader, format).map_err(|e| runtime(format!("{}: {e}", path.display())))
        }
        TraceSource::Spec(spec) => spec.generate().map_err(|e| runtime(e.to_string())),
    }
}

fn run_one(cfg: &Config, selection: Selection, trace: &[MemoryAccess]) -> Result<RunReport, CliError> {
    let hierarchy = cfg.hierarchy()?;
    let gaze = cfg.gaze()?;
    let mut prefetcher = build_prefetcher(selection, &gaze);
    Ok(run_with_baseline(trace, hierarchy, prefetcher.as_mut()))
}

#[derive(Serialize)]
struct RunOutput<'a> {
    config: &'a BTreeMap<String, String>,
    report: &'a RunReport,
}

fn cmd_run(cfg: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let trace = load_trace(cfg)?;
    let report = run_one(cfg, cfg.prefetcher()?, &trace)?;
    let rendered = match cfg.output_format()? {
        OutputFormat::Json => {
            let payload = RunOutput { config: cfg.echo(), report: &report };
            serde_json::to_string_pretty(&payload).expect("report serializes") + "\n"
        }
        OutputFormat::Text => report.to_text(),
        OutputFormat::Csv => format!("{}\n{}\n", RunReport::csv_header(), report.csv_row()),
    };
    out.write_all(rendered.as_bytes()).map_err(|e| runtime(e.to_string()))
}

fn out_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTDIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn cmd_gen(
    cfg: &Config,
    path: &Path,
    trace_format: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let source = cfg.trace_source()?;
    let spec = match source {
        TraceSource::Spec(spec) => spec,
        TraceSource::File(_) => return Err(runtime("gen needs a `generator`, not a trace file")),
    };
    let trace = spec.generate().map_err(|e| runtime(e.to_string()))?;
    let format = if trace_format == "text" { TraceFormat::Text } else { TraceFormat::Binary };
    let path = out_path(path);
    let mut sink = BufWriter::new(
        File::create(&path).map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))?,
    );
    write_trace(&mut sink, &trace, format).map_err(|e| runtime(e.to_string()))?;
    sink.flush().map_err(|e| runtime(e.to_string()))?;
    writeln!(out, "wrote {} accesses to {}", trace.len(), path.display())
        .map_err(|e| runtime(e.to_string()))
}

fn cmd_sweep(
    cfg: &Config,
    dim: &str,
    prefetchers: Option<&str>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let trace = load_trace(cfg)?;
    let mut rows = Vec::new();
    match dim {
        "n-access" => {
            for n in 1..=4 {
                let report = run_one(cfg, Selection::NAccess(n), &trace)?;
                rows.push((format!("n-access,{n}"), report));
            }
        }
        "region-size" => {
            let base = cfg.gaze()?;
            let selection = cfg.prefetcher()?;
            for size in [512usize, 1024, 2048, 4096, 8192, 16384, 32768] {
                let mut point = base;
                point.region_bytes = size;
                point.stage1_head = point.blocks_per_region() / 4;
                point.validate().map_err(ConfigError)?;
                let hierarchy = cfg.hierarchy()?;
                let mut prefetcher = build_prefetcher(selection, &point);
                let report = run_with_baseline(&trace, hierarchy, prefetcher.as_mut());
                rows.push((format!("region-size,{size}"), report));
            }
        }
        "prefetchers" => {
            let list = prefetchers
                .ok_or_else(|| runtime("--dim prefetchers needs --prefetchers a,b,c"))?;
            for name in list.split(',') {
                let selection = Selection::parse(name.trim())?;
                let report = run_one(cfg, selection, &trace)?;
                rows.push((format!("prefetcher,{}", name.trim()), report));
            }
        }
        other => return Err(runtime(format!("unknown sweep dimension `{other}`"))),
    }
    let mut csv = format!("dim,value,{}\n", RunReport::csv_header());
    for (prefix, report) in &rows {
        csv.push_str(&format!("{prefix},{}\n", report.csv_row()));
    }
    match path {
        Some(p) => {
            let p = out_path(p);
            std::fs::write(&p, csv)
                .map_err(|e| runtime(format!("cannot write {}: {e}", p.display())))?;
            writeln!(out, "wrote {} sweep rows to {}", rows.len(), p.display())
                .map_err(|e| runtime(e.to_string()))
        }
        None => out.write_all(csv.as_bytes()).map_err(|e| runtime(e.to_string())),
    }
}

fn cmd_storage(cfg: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let report = storage_report(&cfg.gaze()?);
    writeln!(out, "{}", report.to_json()).map_err(|e| runtime(e.to_string()))
}

fn cmd_compare(cfg: &Config, prefetchers: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let trace = load_trace(cfg)?;
    let mut selections = vec![Selection::None];
    for name in prefetchers.split(',') {
        let sel = Selection::parse(name.trim())?;
        if sel != Selection::None {
            selections.push(sel);
        }
    }
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    writeln!(
        out,
        "{:<16} {:>12} {:>9} {:>9} {:>9} {:>7} {:>8}",
        "prefetcher", "cycles", "speedup", "accuracy", "coverage", "late", "issued"
    )
    .map_err(|e| runtime(e.to_string()))?;
    for selection in selections {
        let report = run_one(cfg, selection, &trace)?;
        writeln!(
            out,
            "{:<16} {:>12} {:>9.4} {:>9} {:>9} {:>7} {:>8}",
            report.prefetcher,
            report.cycles,
            report.speedup.unwrap_or(1.0),
            fmt_opt(report.accuracy),
            fmt_opt(report.coverage),
            fmt_opt(report.late_fraction),
            report.counters.issued,
        )
        .map_err(|e| runtime(e.to_string()))?;
    }
    Ok(())
}
