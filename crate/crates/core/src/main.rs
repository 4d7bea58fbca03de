use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dynpath::bootstrap::{bootstrap_bands, BootstrapConfig};
use dynpath::effects::{correct_measurement_error, cumulative_effects, Contrast};
use dynpath::ingest::{load_dir, GapMode, IngestConfig, CONFIG_FILE};
use dynpath::io::{bands_table, effects_table, oracle_table, FitDocument};
use dynpath::simulate::{
    closed_form_effects, mc_effects, simulate_cohort, Regime, SimulationParams,
};
use dynpath::{fit_additive, fit_marginal, write_dataset, Dataset};

/// Dynamic-path mediation analysis for survival data under the additive
/// hazards model.
#[derive(Debug, Parser)]
#[command(name = "dynpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a cohort from a parameter file and write it in ingestion
    /// format (subjects.csv, mediators.csv, config.toml).
    Simulate(SimulateArgs),
    /// Fit the additive hazard and mediator regressions; writes a JSON fit.
    Fit(FitArgs),
    /// Turn a JSON fit into an effect table.
    ///
    /// Columns: time,chde,chie,chte,sde,sie,ste; with --kappa the same six
    /// effect columns follow again with a `_corr` suffix.
    Effects(EffectsArgs),
    /// Percentile bootstrap bands for every effect curve.
    ///
    /// Columns: time, then for each of chde,chie,chte,sde,sie,ste the point
    /// estimate and its `_lower` and `_upper` band.
    Bootstrap(BootstrapArgs),
    /// Closed-form effects beside Monte-Carlo survival ratios.
    ///
    /// Columns: time,chde,chie,chte,sde,sie,ste,sde_mc,sde_mc_se,sie_mc,
    /// sie_mc_se,ste_mc,ste_mc_se.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeKind {
    Observational,
    Intervened,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation parameter file (TOML).
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "observational")]
    regime: RegimeKind,
    /// Treatment acting directly on the hazard (intervened regime).
    #[arg(long, requires = "mediator_arm")]
    direct_arm: Option<f64>,
    /// Treatment acting on the mediator (intervened regime).
    #[arg(long, requires = "direct_arm")]
    mediator_arm: Option<f64>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Cohort directory with subjects.csv and mediators.csv.
    #[arg(long)]
    data: PathBuf,
    /// Ingestion config; defaults to config.toml inside the data directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fill gaps in the mediator record by carrying the last value forward.
    #[arg(long)]
    carry_forward: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EffectsArgs {
    /// JSON fit written by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Treatment contrast `a,a_star`.
    #[arg(long, value_parser = parse_contrast, default_value = "1,0")]
    contrast: Contrast,
    /// Mediator reliability in (0, 1]; adds measurement-error corrected columns.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_contrast, default_value = "1,0")]
    contrast: Contrast,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Comma-separated evaluation times; all event times when omitted.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    params: PathBuf,
    /// Comma-separated evaluation times.
    #[arg(long, value_parser = parse_grid)]
    grid: Grid,
    #[arg(long, default_value_t = 100_000)]
    n_mc: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

fn parse_contrast(s: &str) -> Result<Contrast, String> {
    match parse_numbers(s)?.as_slice() {
        [a, a_star] => Contrast::new(*a, *a_star).map_err(|e| e.to_string()),
        _ => Err("expected two values `a,a_star`".into()),
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    parse_numbers(s).map(Grid)
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn ensure_distinct(input: &Path, out: Option<&PathBuf>) -> anyhow::Result<()> {
    if let Some(out) = out {
        if same_path(input, out) {
            bail!("output path {} must differ from input", out.display());
        }
    }
    Ok(())
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_params(path: &Path) -> anyhow::Result<SimulationParams> {
    SimulationParams::from_toml(&read(path)?)
        .with_context(|| format!("parsing parameters {}", path.display()))
}

fn load(args: &DataArgs) -> anyhow::Result<Dataset> {
    if !args.data.is_dir() {
        bail!("data directory {} does not exist", args.data.display());
    }
    let config_path = args
        .config
        .clone()
        .unwrap_or_else(|| args.data.join(CONFIG_FILE));
    let mut config = IngestConfig::from_toml(&read(&config_path)?)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    if args.carry_forward {
        config.mode = GapMode::CarryForward;
    }
    let dataset = load_dir(&args.data, Some(&config))
        .with_context(|| format!("loading cohort from {}", args.data.display()))?;
    if dataset.carried_forward() > 0 {
        eprintln!(
            "carried forward {} missing mediator values",
            dataset.carried_forward()
        );
    }
    Ok(dataset)
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    ensure_distinct(&args.params, Some(&args.out))?;
    let params = read_params(&args.params)?;
    let regime = match (args.regime, args.direct_arm, args.mediator_arm) {
        (RegimeKind::Observational, None, None) => Regime::Observational,
        (RegimeKind::Intervened, Some(direct), Some(mediator)) => {
            Regime::Intervened { direct, mediator }
        }
        (RegimeKind::Observational, _, _) => {
            bail!("--direct-arm/--mediator-arm require --regime intervened")
        }
        (RegimeKind::Intervened, _, _) => {
            bail!("--regime intervened requires --direct-arm and --mediator-arm")
        }
    };
    let dataset = simulate_cohort(&params, args.n, args.seed, regime)?;
    write_dataset(&dataset, &args.out)
        .with_context(|| format!("writing cohort to {}", args.out.display()))?;
    Ok(())
}

fn fit(args: FitArgs) -> anyhow::Result<()> {
    ensure_distinct(&args.data.data, args.out.as_ref())?;
    let dataset = load(&args.data)?;
    let additive = fit_additive(&dataset).context("fitting additive hazard")?;
    if additive.skipped_events > 0 {
        eprintln!(
            "skipped {} event times with a rank-deficient risk set",
            additive.skipped_events
        );
    }
    let mediator = fit_marginal(&dataset);
    let doc = FitDocument::new(&dataset, additive, mediator);
    emit(args.out.as_ref(), &doc.to_json()?)
}

fn effects(args: EffectsArgs) -> anyhow::Result<()> {
    ensure_distinct(&args.fit, args.out.as_ref())?;
    let doc = FitDocument::from_json(&read(&args.fit)?)
        .with_context(|| format!("parsing fit {}", args.fit.display()))?;
    let raw = cumulative_effects(&doc.additive, &doc.mediator, &doc.schedule, args.contrast)?;
    let corrected = args
        .kappa
        .map(|k| correct_measurement_error(&raw, k))
        .transpose()?;
    emit(args.out.as_ref(), &effects_table(&raw, corrected.as_ref()))
}

fn bootstrap(args: BootstrapArgs) -> anyhow::Result<()> {
    ensure_distinct(&args.data.data, args.out.as_ref())?;
    let dataset = load(&args.data)?;
    let config = BootstrapConfig {
        replicates: args.replicates,
        seed: args.seed,
        grid: args.grid.map(|g| g.0),
        level: args.level,
    };
    let bands = bootstrap_bands(&dataset, args.contrast, &config)?;
    if bands.failed_replicates > 0 {
        eprintln!(
            "{} of {} bootstrap replicates failed and were excluded",
            bands.failed_replicates, bands.replicates
        );
    }
    emit(args.out.as_ref(), &bands_table(&bands))
}

fn oracle(args: OracleArgs) -> anyhow::Result<()> {
    ensure_distinct(&args.params, args.out.as_ref())?;
    let params = read_params(&args.params)?;
    let exact = closed_form_effects(&params, &args.grid.0)?;
    let mc = mc_effects(&params, args.n_mc, args.seed, &args.grid.0)?;
    emit(args.out.as_ref(), &oracle_table(&exact, &mc))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Effects(a) => effects(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
