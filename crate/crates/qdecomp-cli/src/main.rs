use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand};

use qdecomp_cli::config::{
    parse_grid, parse_rank_side, parse_reference, read_config_file, OutputFormat, RunConfig,
};
use qdecomp_cli::diagnose::run_diagnose;
use qdecomp_cli::error::{CliError, Result};
use qdecomp_cli::ingest::ColumnSchema;
use qdecomp_cli::run::run_decompose;
use qdecomp_cli::simulate::{parse_study, run_simulate};
use qdecomp_core::effects::RankConfig;

#[derive(Parser)]
#[command(name = "qdecomp", version, about = "Quantile treatment effect decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate QTE/CQTE/TQTE/SQTE series and average effects with
    /// bootstrap inference.
    Decompose(DataArgs),
    /// Covariate balance and complier-share diagnostics.
    Diagnose(DataArgs),
    /// Monte Carlo studies on the built-in generators.
    Simulate(SimArgs),
}

/// Flags shared by `decompose` and `diagnose`. Every flag can also appear
/// as a `key = value` line in `--config`; flags win.
#[derive(Args)]
struct DataArgs {
    /// Plain-text config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV file with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Outcome column (finite, non-negative).
    #[arg(long)]
    outcome: Option<String>,
    /// Treatment indicator column (0/1).
    #[arg(long)]
    treatment: Option<String>,
    /// Sampling weight column (strictly positive).
    #[arg(long)]
    weight: Option<String>,
    /// Group column; repeat to cross several columns into one label.
    #[arg(long)]
    group: Vec<String>,
    /// Enrollment indicator column (0/1), enables complier shares.
    #[arg(long)]
    enrolled: Option<String>,
    /// Declared group level; repeat to fix the admissible label set.
    #[arg(long = "group-level")]
    group_level: Vec<String>,
    /// Reference distribution: y0, y1, observed, group-y0:<label>,
    /// group-y1:<label>.
    #[arg(long)]
    reference: Option<String>,
    /// Arm whose conditional distribution defines relative ranks: control
    /// or treated.
    #[arg(long)]
    rank_side: Option<String>,
    /// Lower rank trimming bound.
    #[arg(long)]
    clip_lo: Option<f64>,
    /// Upper rank clamping bound.
    #[arg(long)]
    clip_hi: Option<f64>,
    /// Keep grid points below the reference distribution's mass point.
    #[arg(long)]
    no_mass_point_exclusion: bool,
    /// Bootstrap replications for quantile series.
    #[arg(long)]
    reps_quantile: Option<usize>,
    /// Bootstrap replications for average effects.
    #[arg(long)]
    reps_average: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Percentile grid: `all` or comma-separated integers in 1..=99.
    #[arg(long)]
    grid: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Resample within treatment arms instead of pooled.
    #[arg(long)]
    stratify_by_arm: bool,
    /// Extra numeric column for the balance report; repeatable.
    #[arg(long = "covariate")]
    covariate: Vec<String>,
}

#[derive(Args)]
struct SimArgs {
    /// Study: identity-check or size-study.
    #[arg(long)]
    study: String,
    /// Generator: shift, null-structural, fully-structural, mass-point.
    #[arg(long, default_value = "null-structural")]
    dgp: String,
    /// Observations per draw.
    #[arg(long, default_value_t = 50_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo draws (size-study only).
    #[arg(long, default_value_t = 200)]
    draws: usize,
    /// Bootstrap replications per draw (size-study only).
    #[arg(long, default_value_t = 199)]
    reps: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: String,
}

fn parse_format(s: &str) -> Result<OutputFormat> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(CliError::config(format!("invalid --format `{other}` (expected csv or json)"))),
    }
}

/// Merges the config file under the flags, flags winning, and applies
/// defaults.
fn resolve(args: &DataArgs) -> Result<RunConfig> {
    let file: HashMap<String, Vec<String>> = match &args.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };
    let file_get = |key: &str| -> Option<&str> {
        file.get(key).and_then(|v| v.last()).map(String::as_str)
    };
    let file_list = |key: &str| -> Vec<String> { file.get(key).cloned().unwrap_or_default() };
    let parse_with = |key: &str, raw: &str| -> Result<f64> {
        raw.parse().map_err(|_| CliError::config(format!("invalid `{key}` value `{raw}`")))
    };

    let input = args
        .input
        .clone()
        .or_else(|| file_get("input").map(PathBuf::from))
        .ok_or_else(|| CliError::config("missing --input"))?;
    let required = |flag: &Option<String>, key: &str| -> Result<String> {
        flag.clone()
            .or_else(|| file_get(key).map(str::to_string))
            .ok_or_else(|| CliError::config(format!("missing --{key}")))
    };
    let schema = ColumnSchema {
        outcome: required(&args.outcome, "outcome")?,
        treatment: required(&args.treatment, "treatment")?,
        weight: required(&args.weight, "weight")?,
        groups: if args.group.is_empty() { file_list("group") } else { args.group.clone() },
        enrolled: args.enrolled.clone().or_else(|| file_get("enrolled").map(str::to_string)),
    };
    if schema.groups.is_empty() {
        return Err(CliError::config("missing --group (at least one group column is required)"));
    }

    let group_levels = if args.group_level.is_empty() {
        let levels = file_list("group-level");
        if levels.is_empty() { None } else { Some(levels) }
    } else {
        Some(args.group_level.clone())
    };

    let defaults = RankConfig::default();
    let reference = match args.reference.as_deref().or_else(|| file_get("reference")) {
        Some(s) => parse_reference(s)?,
        None => defaults.reference,
    };
    let rank_side = match args.rank_side.as_deref().or_else(|| file_get("rank-side")) {
        Some(s) => parse_rank_side(s)?,
        None => defaults.rank_side,
    };
    let clip_lo = match (args.clip_lo, file_get("clip-lo")) {
        (Some(v), _) => v,
        (None, Some(raw)) => parse_with("clip-lo", raw)?,
        (None, None) => defaults.clip_lo,
    };
    let clip_hi = match (args.clip_hi, file_get("clip-hi")) {
        (Some(v), _) => v,
        (None, Some(raw)) => parse_with("clip-hi", raw)?,
        (None, None) => defaults.clip_hi,
    };
    let mass_point_exclusion = if args.no_mass_point_exclusion {
        false
    } else {
        match file_get("mass-point-exclusion") {
            Some("true") | None => true,
            Some("false") => false,
            Some(other) => {
                return Err(CliError::config(format!(
                    "invalid `mass-point-exclusion` value `{other}` (expected true or false)"
                )))
            }
        }
    };
    let rank = RankConfig { reference, rank_side, clip_lo, clip_hi, mass_point_exclusion };
    rank.validate()?;

    let parse_usize = |key: &str, flag: Option<usize>, default: usize| -> Result<usize> {
        match (flag, file_get(key)) {
            (Some(v), _) => Ok(v),
            (None, Some(raw)) => {
                raw.parse().map_err(|_| CliError::config(format!("invalid `{key}` value `{raw}`")))
            }
            (None, None) => Ok(default),
        }
    };
    let reps_quantile = parse_usize("reps-quantile", args.reps_quantile, 1999)?;
    let reps_average = parse_usize("reps-average", args.reps_average, 499)?;
    if reps_quantile == 0 || reps_average == 0 {
        return Err(CliError::config("replication counts must be positive"));
    }
    let seed = match (args.seed, file_get("seed")) {
        (Some(v), _) => v,
        (None, Some(raw)) => {
            raw.parse().map_err(|_| CliError::config(format!("invalid `seed` value `{raw}`")))?
        }
        (None, None) => 42,
    };
    let grid_percentiles = parse_grid(args.grid.as_deref().or_else(|| file_get("grid")).unwrap_or("all"))?;
    let out_dir =
        args.out.clone().or_else(|| file_get("out").map(PathBuf::from)).unwrap_or_else(|| "out".into());
    let format = parse_format(args.format.as_deref().or_else(|| file_get("format")).unwrap_or("csv"))?;
    let stratify_by_arm = args.stratify_by_arm
        || matches!(file_get("stratify-by-arm"), Some("true"));
    let covariates =
        if args.covariate.is_empty() { file_list("covariate") } else { args.covariate.clone() };

    Ok(RunConfig {
        input,
        schema,
        group_levels,
        rank,
        reps_quantile,
        reps_average,
        seed,
        grid_percentiles,
        out_dir,
        format,
        stratify_by_arm,
        covariates,
    })
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Decompose(args) => {
            let config = resolve(&args)?;
            let written = run_decompose(&config)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Diagnose(args) => {
            let config = resolve(&args)?;
            let written = run_diagnose(&config)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Simulate(args) => {
            let study = parse_study(&args.study)?;
            let format = parse_format(&args.format)?;
            let (written, pass) = run_simulate(
                &args.dgp, study, args.n, args.seed, args.draws, args.reps, &args.out, format,
            )?;
            for path in written {
                println!("wrote {}", path.display());
            }
            println!("{}", if pass { "PASS" } else { "FAIL" });
        }
    }
    Ok(())
}

fn main() -> ProcessExit {
    match real_main() {
        Ok(()) => ProcessExit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ProcessExit::from(e.exit_code() as u8)
        }
    }
}
