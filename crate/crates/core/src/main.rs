use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use otalink::campaign::{
    budget_from_log, fit_by_order, ingest_csv, run_sweep, summarize, write_fits, write_log_budgets,
    write_plot_data, write_summary, write_sweep_csv, ChannelModel, FitMetric, GroupKey,
    SweepConfig, SweepVariable,
};
use otalink::interference::InterfererKind;
use otalink::stbc::EstimationMode;
use otalink::uncertainty::{Combination, InstrumentTerms};
use otalink::waveform::ConstellationOrder;
use otalink::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_SKIPPED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "otalink",
    version,
    about = "MIMO OTA link simulation: SINR sweeps, EVM fits and uncertainty budgets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep campaign from a TOML config.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Sweep table destination (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Directory for the plot-data tables.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Only points above this SINR enter the plot-data fits.
        #[arg(long, default_value_t = f64::NEG_INFINITY, allow_negative_numbers = true)]
        fit_floor_db: f64,
        /// Evaluate work units on one thread.
        #[arg(long)]
        serial: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit EVM = A/√SINR per modulation order over a sweep table.
    Fit {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = f64::NEG_INFINITY, allow_negative_numbers = true)]
        floor_db: f64,
        #[arg(long, default_value = "normalized_evm_rms_pct")]
        metric: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Channel-power uncertainty budget from a repeat log with a
    /// `channel_power` column and an optional `group` column.
    Budget {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = CombinationArg::Sum)]
        combination: CombinationArg,
        #[arg(long, default_value_t = InstrumentTerms::default().u_fre_resp)]
        u_fre_resp: f64,
        #[arg(long, default_value_t = InstrumentTerms::default().u_input_att)]
        u_input_att: f64,
        #[arg(long, default_value_t = InstrumentTerms::default().u_abs)]
        u_abs: f64,
        #[arg(long, default_value_t = InstrumentTerms::default().u_rbw)]
        u_rbw: f64,
        #[arg(long, default_value_t = InstrumentTerms::default().u_input_mixer)]
        u_input_mixer: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one STBC link and print its per-sub-frame rows.
    Stbc {
        #[arg(long, default_value_t = 4)]
        order: u32,
        #[arg(long, default_value_t = 1)]
        subframes: usize,
        /// Calibrate interference to this in-band SINR.
        #[arg(long, allow_negative_numbers = true)]
        sinr_db: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        signal_dbm: f64,
        #[arg(long, value_enum, default_value_t = InterfererArg::Gwn)]
        interferer: InterfererArg,
        #[arg(long, default_value_t = 1)]
        n_interferers: usize,
        #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
        interferer_dbm: f64,
        #[arg(long, allow_negative_numbers = true)]
        noise_dbm: Option<f64>,
        #[arg(long, value_enum, default_value_t = EstimationArg::KnownH)]
        estimation: EstimationArg,
        #[arg(long, default_value_t = 1)]
        pilot_pairs: usize,
        /// Use the identity-like channel h = [1, 0] instead of Rayleigh.
        #[arg(long)]
        fixed_channel: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Mean, std and k = 2 expanded uncertainty per group of a sweep table.
    Summarize {
        #[arg(short, long)]
        input: PathBuf,
        /// Comma-separated grouping columns.
        #[arg(long, value_delimiter = ',', default_value = "sweep_value,order")]
        by: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CombinationArg {
    Sum,
    Rss,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterfererArg {
    Gwn,
    Ofdm,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimationArg {
    KnownH,
    Realtime,
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p)
                .map_err(Error::from)
                .with_context(|| format!("creating {}", p.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_config(
    cfg: &SweepConfig,
    serial: bool,
    threads: Option<usize>,
) -> anyhow::Result<otalink::campaign::SweepOutcome> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(|| run_sweep(cfg, !serial))?)
        }
        None => Ok(run_sweep(cfg, !serial)?),
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Sweep {
            config,
            output,
            plot_data,
            fit_floor_db,
            serial,
            threads,
        } => {
            let cfg = SweepConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let out = run_config(&cfg, serial, threads)?;
            write_sweep_csv(sink(output.as_deref())?, &out.rows)?;
            eprintln!(
                "{} rows, {} ok, {} skipped",
                out.rows.len(),
                out.n_ok,
                out.n_skipped
            );
            if out.all_skipped() {
                eprintln!("every row was skipped");
                return Ok(EXIT_ALL_SKIPPED);
            }
            if let Some(dir) = plot_data {
                for p in write_plot_data(
                    &dir,
                    &out.rows,
                    &cfg.uncertainty,
                    FitMetric::default(),
                    fit_floor_db,
                )? {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        Command::Fit {
            input,
            floor_db,
            metric,
            output,
        } => {
            let rows =
                ingest_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let fits = fit_by_order(&rows, FitMetric::parse(&metric)?, floor_db)?;
            write_fits(sink(output.as_deref())?, &fits)?;
        }
        Command::Budget {
            input,
            combination,
            u_fre_resp,
            u_input_att,
            u_abs,
            u_rbw,
            u_input_mixer,
            output,
        } => {
            let terms = InstrumentTerms {
                u_fre_resp,
                u_input_att,
                u_abs,
                u_rbw,
                u_input_mixer,
            };
            let combination = match combination {
                CombinationArg::Sum => Combination::Sum,
                CombinationArg::Rss => Combination::Rss,
            };
            let file = File::open(&input)
                .map_err(Error::from)
                .with_context(|| format!("opening {}", input.display()))?;
            let budgets = budget_from_log(file, &terms, combination)?;
            write_log_budgets(sink(output.as_deref())?, &budgets)?;
        }
        Command::Stbc {
            order,
            subframes,
            sinr_db,
            signal_dbm,
            interferer,
            n_interferers,
            interferer_dbm,
            noise_dbm,
            estimation,
            pilot_pairs,
            fixed_channel,
            seed,
            output,
        } => {
            let order =
                ConstellationOrder::try_from(order).map_err(|e| Error::Config(e.to_string()))?;
            let mut cfg = match sinr_db {
                Some(v) => SweepConfig::single(SweepVariable::TargetSinrDb, v),
                None => SweepConfig::single(SweepVariable::SignalPowerDbm, signal_dbm),
            };
            cfg.signal_power_dbm = signal_dbm;
            cfg.subframes = subframes;
            cfg.modulation_orders = vec![order];
            cfg.interferer_kind = match interferer {
                InterfererArg::Gwn => InterfererKind::GwnBandpass,
                InterfererArg::Ofdm => InterfererKind::OfdmLteLike,
            };
            cfg.n_interferers = n_interferers;
            cfg.interferer_power_dbm = interferer_dbm;
            cfg.noise_power_dbm = noise_dbm;
            cfg.estimation_mode = match estimation {
                EstimationArg::KnownH => EstimationMode::KnownH,
                EstimationArg::Realtime => EstimationMode::RealtimeEstimate,
            };
            cfg.n_pilot_pairs = pilot_pairs;
            if fixed_channel {
                cfg.channel = ChannelModel::Fixed {
                    h11: [1.0, 0.0],
                    h12: [0.0, 0.0],
                };
            }
            cfg.master_seed = seed;
            cfg.validate()?;
            let out = run_sweep(&cfg, false)?;
            write_sweep_csv(sink(output.as_deref())?, &out.rows)?;
            if out.all_skipped() {
                eprintln!("every row was skipped");
                return Ok(EXIT_ALL_SKIPPED);
            }
        }
        Command::Summarize { input, by, output } => {
            let rows =
                ingest_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let keys: Vec<GroupKey> = by
                .iter()
                .map(|s| GroupKey::parse(s.trim()))
                .collect::<Result<_, _>>()?;
            let summary = summarize(&rows, &keys)?;
            write_summary(sink(output.as_deref())?, &keys, &summary)?;
        }
    }
    Ok(0)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) => EXIT_CONFIG,
        Some(Error::Io(_) | Error::Csv(_) | Error::Format { .. }) => EXIT_IO,
        _ if e.downcast_ref::<io::Error>().is_some() => EXIT_IO,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
