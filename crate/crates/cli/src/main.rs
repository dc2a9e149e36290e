use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use peposd::ep::{read_store, write_store};
use peposd::sim::{
    complexity_report, emit_csv, format_complexity, parse_snr_range, write_csv, ComplexityOptions, DEFAULT_MIN_ERRORS,
};
use peposd::{run_sweep, CodeSpec, DecoderConfig, DecoderKind, EpOrder, EpTable, ExperimentConfig};

#[derive(Parser)]
#[command(name = "peposd", version, about = "PEPOSD decoder workbench for CRC-polar codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Iwhw,
    Pw,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Peposd,
    Cascl,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and sort an error-pattern store.
    EpGen {
        #[arg(long)]
        wi_max: u32,
        #[arg(long)]
        wh_max: u32,
        #[arg(long, value_enum, default_value = "iwhw")]
        order: OrderArg,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3.0)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo BLER and complexity sweep; writes CSV.
    Simulate {
        /// Code configuration file.
        #[arg(long)]
        code: PathBuf,
        #[arg(long, value_enum)]
        decoder: DecoderArg,
        /// Error-pattern store; generated from the budgets when omitted.
        #[arg(long)]
        ep_store: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        delta: usize,
        /// Defaults to the store's budget, or 100.
        #[arg(long)]
        wi_max: Option<u32>,
        /// Defaults to the store's budget, or 4.
        #[arg(long)]
        wh_max: Option<u32>,
        /// Defaults to the store's order, or iwhw.
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3.0)]
        beta: f64,
        #[arg(long, default_value_t = 32)]
        list_size: usize,
        /// Eb/N0 points in dB: `start:step:stop`, a value, or a comma list.
        #[arg(long)]
        snr: String,
        #[arg(long, default_value_t = 10_000)]
        frames: u64,
        #[arg(long, default_value_t = DEFAULT_MIN_ERRORS)]
        min_errors: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; all cores by default.
        #[arg(long)]
        threads: Option<usize>,
        /// Write 0 for wall time so output is byte-reproducible.
        #[arg(long)]
        no_wall_time: bool,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print GE, PEPOSD bit-flip and CA-SCL operation counts.
    ReportComplexity {
        #[arg(long, num_args = 1.., required = true)]
        codes: Vec<PathBuf>,
        /// Es/N0 in dB for the measured bit flips.
        #[arg(long, default_value_t = 5.0)]
        esn0: f64,
        #[arg(long, default_value_t = 1000)]
        frames: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        list_size: usize,
        /// Formula columns only.
        #[arg(long)]
        no_measure: bool,
    },
}

fn order_from(arg: OrderArg, alpha: f64, beta: f64) -> EpOrder {
    match arg {
        OrderArg::Iwhw => EpOrder::IwHw,
        OrderArg::Pw => EpOrder::Pw { alpha, beta },
    }
}

fn read_code(path: &PathBuf) -> Result<CodeSpec> {
    CodeSpec::read_config(path).with_context(|| format!("reading code config {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::EpGen {
            wi_max,
            wh_max,
            order,
            alpha,
            beta,
            out,
        } => {
            if wi_max == 0 || wh_max == 0 {
                bail!("--wi-max and --wh-max must be at least 1");
            }
            let table = EpTable::generate(wi_max, wh_max, order_from(order, alpha, beta));
            write_store(&table, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} patterns to {}", table.len(), out.display());
        }
        Command::Simulate {
            code,
            decoder,
            ep_store,
            delta,
            wi_max,
            wh_max,
            order,
            alpha,
            beta,
            list_size,
            snr,
            frames,
            min_errors,
            seed,
            threads,
            no_wall_time,
            out,
        } => {
            let spec = read_code(&code)?;
            let ebn0_db = parse_snr_range(&snr)?;
            let decoder = match decoder {
                DecoderArg::Cascl => DecoderKind::CaScl { list_size },
                DecoderArg::Peposd => {
                    let stored = match &ep_store {
                        Some(p) => Some(read_store(p).with_context(|| format!("reading EP store {}", p.display()))?),
                        None => None,
                    };
                    let order = match (order, &stored) {
                        (Some(o), _) => order_from(o, alpha, beta),
                        (None, Some(t)) => t.order(),
                        (None, None) => EpOrder::IwHw,
                    };
                    let cfg = DecoderConfig::new(
                        wi_max.or(stored.as_ref().map(EpTable::w_i_max)).unwrap_or(100),
                        wh_max.or(stored.as_ref().map(EpTable::w_h_max)).unwrap_or(4),
                        delta,
                        order,
                    );
                    DecoderKind::Peposd { cfg, ep_store }
                }
            };
            let cfg = ExperimentConfig {
                min_errors,
                record_wall_time: !no_wall_time,
                threads,
                ..ExperimentConfig::new(spec, ebn0_db, decoder, frames, seed)
            };
            let stats = run_sweep(&cfg)?;
            match out {
                Some(path) => emit_csv(&stats, &path).with_context(|| format!("writing {}", path.display()))?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_csv(&stats, &mut lock)?;
                    lock.flush()?;
                }
            }
        }
        Command::ReportComplexity {
            codes,
            esn0,
            frames,
            seed,
            list_size,
            no_measure,
        } => {
            let specs = codes.iter().map(read_code).collect::<Result<Vec<_>>>()?;
            let opts = ComplexityOptions {
                esn0_db: esn0,
                frames,
                seed,
                list_size,
                measure: !no_measure,
                ..ComplexityOptions::default()
            };
            let rows = complexity_report(&specs, &opts)?;
            print!("{}", format_complexity(&rows, &opts));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
