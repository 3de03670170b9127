use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use volspill_cli::commands::{self, DiagArgs, RegimeArgs};
use volspill_cli::pipeline::{with_workers, worker_count};
use volspill_cli::{parse_run_config, parse_sim_config, run_pipeline, CliError, CliResult, ConfigFile};
use volspill_core::timeseries::{CsvOptions, DateFormat};

#[derive(Parser)]
#[command(name = "volspill", version, about = "Volatility spillover estimation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file.
    Run {
        config: PathBuf,
        /// Full-precision numbers instead of six significant digits.
        #[arg(long)]
        raw: bool,
        /// Overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary statistics and diagnostic tests for a price file.
    Diag {
        csv: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 20)]
        lags: usize,
        #[arg(long, default_value_t = 12)]
        adf_max_lag: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        raw: bool,
    },
    /// Simulate from a DGP config, optionally with a recovery study.
    Sim {
        config: PathBuf,
        #[arg(long, default_value = "sim_output")]
        out: PathBuf,
        #[arg(long)]
        raw: bool,
    },
    /// Classify each day's carbon price into a fuel-switching regime.
    Regime {
        context: PathBuf,
        prices: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        eua_column: Option<String>,
        /// per_tonne or per_kg
        #[arg(long)]
        eua_unit: Option<String>,
        #[arg(long)]
        coal_column: Option<String>,
        #[arg(long)]
        gas_column: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, default_value = "date")]
    date_column: String,
    /// iso (YYYY-MM-DD) or dmy (DD/MM/YYYY)
    #[arg(long, default_value = "iso")]
    date_format: String,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl InputArgs {
    fn options(&self) -> CliResult<CsvOptions> {
        let date_format = match self.date_format.as_str() {
            "iso" => DateFormat::Iso,
            "dmy" => DateFormat::DayMonthYear,
            v => return Err(CliError::Config(format!("unknown date format `{v}`"))),
        };
        if !self.delimiter.is_ascii() {
            return Err(CliError::Config("delimiter must be ASCII".into()));
        }
        Ok(CsvOptions {
            date_column: self.date_column.clone(),
            asset_columns: None,
            date_format,
            delimiter: self.delimiter as u8,
        })
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Run { config, raw, out } => {
            let file = ConfigFile::load(&config)?;
            let mut cfg = parse_run_config(&file)?;
            cfg.raw |= raw;
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let report = run_pipeline(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("wrote {} files to {}", report.files.len(), cfg.out_dir.display());
            Ok(())
        }
        Command::Diag {
            csv,
            input,
            lags,
            adf_max_lag,
            out,
            raw,
        } => commands::diag(&DiagArgs {
            csv,
            options: input.options()?,
            lags,
            adf_max_lag,
            out,
            raw,
        }),
        Command::Sim { config, out, raw } => {
            let file = ConfigFile::load(&config)?;
            let mut cfg = parse_sim_config(&file)?;
            cfg.raw |= raw;
            let files = with_workers(worker_count(None)?, || commands::sim(&cfg, &out))??;
            eprintln!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
        Command::Regime {
            context,
            prices,
            input,
            eua_column,
            eua_unit,
            coal_column,
            gas_column,
            out,
            raw,
        } => commands::regime(&RegimeArgs {
            context,
            prices,
            options: input.options()?,
            eua_column,
            eua_unit,
            coal_column,
            gas_column,
            out,
            raw,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream reader closed early, e.g. `volspill diag x.csv | head`
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", e.to_json());
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
