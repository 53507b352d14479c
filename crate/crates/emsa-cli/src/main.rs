//! `emsa` — desk-scale experiments on eigensystem localization certificates
//! for the Anderson model, with bit-exact CSV/JSON output.

mod config;
mod exec;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{
    CrossDirection, DistributionBlock, ExperimentBlock, MassSpec, ModelBlock, OutputBlock,
    OutputFormat, RunConfig, ScaleBlock, SCHEMA_VERSION,
};
use table::Table;

#[derive(Parser)]
#[command(
    name = "emsa",
    version,
    about = "Eigensystem multiscale analysis laboratory for the Anderson model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Model and bookkeeping flags shared by every experiment subcommand.
#[derive(Args, Debug)]
struct CommonArgs {
    /// Lattice dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Hopping strength (reciprocal disorder).
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Master seed for the counter-based trial streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of Monte Carlo trials.
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Output file path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

/// Scale-exponent overrides (validated as a bundle before any run).
#[derive(Args, Debug)]
struct ScaleArgs {
    #[arg(long, default_value_t = ScaleBlock::default().xi)]
    xi: f64,
    #[arg(long, default_value_t = ScaleBlock::default().zeta)]
    zeta: f64,
    #[arg(long, default_value_t = ScaleBlock::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = ScaleBlock::default().tau)]
    tau: f64,
    #[arg(long, default_value_t = ScaleBlock::default().gamma)]
    gamma: f64,
}

impl ScaleArgs {
    fn block(&self) -> ScaleBlock {
        ScaleBlock {
            xi: self.xi,
            zeta: self.zeta,
            beta: self.beta,
            tau: self.tau,
            gamma: self.gamma,
        }
    }
}

fn parse_mass(s: &str) -> Result<MassSpec, String> {
    if s == "auto" {
        Ok(MassSpec::auto())
    } else {
        s.parse::<f64>().map(MassSpec::Value).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute a JSON run configuration (writes CSV and a JSON summary).
    Run {
        /// Path to the configuration file.
        config: PathBuf,
    },
    /// Per-trial m-localizing certificates for one box.
    Certify {
        /// Box side (decimal; exact rational internally).
        #[arg(long, default_value = "20")]
        l: String,
        /// Localization mass, or `auto` for m_{eps,L}.
        #[arg(long, value_parser = parse_mass, default_value = "auto")]
        m: MassSpec,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Suitable ell-cover of a box with exhaustive invariant checks.
    Cover {
        #[arg(long, default_value = "100")]
        l: String,
        #[arg(long, default_value = "10")]
        ell: String,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Monte Carlo m-localizing probability vs the large-disorder bound.
    McLocalizing {
        #[arg(long, default_value = "20")]
        l: String,
        #[arg(long, value_parser = parse_mass, default_value = "auto")]
        m: MassSpec,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Monte Carlo level-spacing probability vs the Minami-derived bound.
    McSpacing {
        #[arg(long, default_value = "10")]
        l: String,
        /// Spacing scale R (defaults to the box side).
        #[arg(long)]
        r: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Windowed small-interval eigenvalue-count event probability.
    Klm {
        #[arg(long, default_value = "4")]
        l: String,
        #[arg(long, default_value_t = -1.0)]
        i_lo: f64,
        #[arg(long, default_value_t = 2.0)]
        i_hi: f64,
        #[arg(long, default_value_t = 0.001)]
        eta: f64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Second-factorial-moment estimate for eigenvalue counts in an interval.
    Minami {
        #[arg(long, default_value = "1")]
        l: String,
        #[arg(long, default_value_t = 0.0)]
        j_lo: f64,
        #[arg(long, default_value_t = 0.1)]
        j_hi: f64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Wegner-type resolvent bound plus the (m,E)-regularity fraction.
    GreenRegular {
        #[arg(long, default_value = "20")]
        l: String,
        #[arg(long, default_value_t = 0.5)]
        energy: f64,
        #[arg(long, value_parser = parse_mass, default_value = "auto")]
        m: MassSpec,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Cross-implication experiments between localization and regularity.
    GreenCross {
        #[arg(long, value_enum, default_value = "loc-to-reg")]
        direction: CliDirection,
        /// Box side (loc-to-reg) or sub-box side (reg-to-loc).
        #[arg(long, default_value = "40")]
        l: String,
        #[arg(long, value_parser = parse_mass, default_value = "auto")]
        m: MassSpec,
        /// Regularity mass (defaults to m/2).
        #[arg(long)]
        m_prime: Option<f64>,
        /// Probe energies per trial (loc-to-reg).
        #[arg(long, default_value_t = 5)]
        energies: usize,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Multiscale scan over L_{k+1} = L_k^gamma.
    Scan {
        #[arg(long, default_value_t = 20.0)]
        l0: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_parser = parse_mass, default_value = "auto")]
        m0: MassSpec,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Reference decay-rate ladder for given mass and scales.
    DecayRates {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 100.0)]
        ell: f64,
        #[arg(long, default_value_t = 1000.0)]
        l: f64,
        /// Implicit constant in the rate formulas.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum CliDirection {
    LocToReg,
    RegToLoc,
}

impl From<CliDirection> for CrossDirection {
    fn from(d: CliDirection) -> Self {
        match d {
            CliDirection::LocToReg => CrossDirection::LocToReg,
            CliDirection::RegToLoc => CrossDirection::RegToLoc,
        }
    }
}

fn assemble(common: &CommonArgs, scale: &ScaleArgs, experiment: ExperimentBlock) -> RunConfig {
    RunConfig {
        schema_version: SCHEMA_VERSION,
        model: ModelBlock {
            d: common.d,
            eps: common.eps,
            distribution: DistributionBlock::Uniform { lo: 0.0, hi: 1.0 },
            seed: common.seed,
        },
        scale: scale.block(),
        experiment,
        output: OutputBlock::default(),
    }
}

fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(&table.to_json()).expect("JSON rendering");
            text.push('\n');
            text
        }
    }
}

/// Exit 2 when any verdict reports a violated bound; inconclusive results do
/// not alter the exit code.
fn exit_for(table: &Table) -> ExitCode {
    if table.has_bound_violation() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn emit(table: &Table, out: Option<&Path>, format: OutputFormat) -> anyhow::Result<()> {
    let text = render(table, format);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Full config-file run: CSV plus a JSON summary next to it.
fn run_config_file(path: &Path) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(path)?;
    let config = RunConfig::from_json(&text)?;
    let table = exec::execute(&config)?;
    let dir = config
        .output
        .dir
        .clone()
        .or_else(|| std::env::var("EMSA_OUT_DIR").ok())
        .unwrap_or_else(|| ".".to_string());
    let dir = PathBuf::from(dir);
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join(format!("{}.csv", config.output.basename));
    let json_path = dir.join(format!("{}.json", config.output.basename));
    std::fs::write(&csv_path, table.to_csv())?;
    let summary = serde_json::json!({
        "version": exec::VERSION,
        "config": serde_json::to_value(&config)?,
        "rows": table.to_json(),
    });
    let mut summary_text = serde_json::to_string_pretty(&summary)?;
    summary_text.push('\n');
    std::fs::write(&json_path, summary_text)?;
    eprintln!(
        "wrote {} rows to {} and {}",
        table.rows.len(),
        csv_path.display(),
        json_path.display()
    );
    Ok(exit_for(&table))
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let (config, common) = match cli.command {
        Command::Run { config } => return run_config_file(&config),
        Command::Certify { l, m, common, scale } => {
            (assemble(&common, &scale, ExperimentBlock::Certify { l, m, trials: common.trials }), common)
        }
        Command::Cover { l, ell, common, scale } => {
            (assemble(&common, &scale, ExperimentBlock::Cover { l, ell }), common)
        }
        Command::McLocalizing { l, m, common, scale } => (
            assemble(&common, &scale, ExperimentBlock::McLocalizing { l, m, trials: common.trials }),
            common,
        ),
        Command::McSpacing { l, r, common, scale } => (
            assemble(&common, &scale, ExperimentBlock::McSpacing { l, r, trials: common.trials }),
            common,
        ),
        Command::Klm { l, i_lo, i_hi, eta, common, scale } => (
            assemble(
                &common,
                &scale,
                ExperimentBlock::Klm { l, i_lo, i_hi, eta, trials: common.trials },
            ),
            common,
        ),
        Command::Minami { l, j_lo, j_hi, common, scale } => (
            assemble(
                &common,
                &scale,
                ExperimentBlock::Minami { l, j_lo, j_hi, trials: common.trials },
            ),
            common,
        ),
        Command::GreenRegular { l, energy, m, common, scale } => (
            assemble(
                &common,
                &scale,
                ExperimentBlock::GreenRegular { l, energy, m, trials: common.trials },
            ),
            common,
        ),
        Command::GreenCross { direction, l, m, m_prime, energies, common, scale } => (
            assemble(
                &common,
                &scale,
                ExperimentBlock::GreenCross {
                    direction: direction.into(),
                    l,
                    m,
                    m_prime,
                    trials: common.trials,
                    energies,
                },
            ),
            common,
        ),
        Command::Scan { l0, k, m0, common, scale } => (
            assemble(
                &common,
                &scale,
                ExperimentBlock::Scan { l0, k_max: k, m0, trials: common.trials },
            ),
            common,
        ),
        Command::DecayRates { m, ell, l, c, common, scale } => {
            (assemble(&common, &scale, ExperimentBlock::DecayRates { m, ell, l, c }), common)
        }
    };
    let table = exec::execute(&config)?;
    emit(&table, common.out.as_deref(), common.format)?;
    Ok(exit_for(&table))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
