use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;

use rpauth::analysis::{corollary2_ahat, corollary3_ab_hat, pmd_approx, pmd_exact, MarcumArgs};
use rpauth::harness::validate::{self, format_table, CheckResult, ValidateOptions};
use rpauth::harness::{
    default_snr_grid, emit_csv, format_significant, run_roc_with_workers, run_sweep, ExperimentPlan,
};
use rpauth::worldmodel::{CsiMode, Fingerprint, RelayMode, SystemConfig};
use rpauth::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rpauth",
    version,
    about = "Reciprocity-fingerprint sender authentication experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a plan and write its ROC as CSV.
    Roc(RocArgs),
    /// Run every analytic-versus-Monte-Carlo cross-check and print a table.
    Validate(RunArgs),
    /// Evaluate the missed-detection probability at given parameters.
    Pmd(PmdArgs),
    /// Check the special functions against reference values.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Af,
    Df,
}

#[derive(Clone, Copy, ValueEnum)]
enum Csi {
    Full,
    Stat,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per hypothesis (default: RPAUTH_TRIALS or 100000).
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RocArgs {
    /// Plan file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    csi: Option<Csi>,
    /// Sweep the default 0/10/20/30 dB grid when the plan has none.
    #[arg(long)]
    sweep: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct PmdArgs {
    /// Alice's fingerprint as `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    mu_a: Complex<f64>,
    /// Eve's fingerprint as `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    mu_e: Complex<f64>,
    /// Estimate-error variance of Eve's link.
    #[arg(long)]
    sigma_be: f64,
    #[arg(long)]
    delta: f64,
    /// Relay mode for the offline approximation.
    #[arg(long, value_enum, default_value = "df")]
    mode: Mode,
    /// Plan file (TOML) whose `[system]` table feeds the AF approximation.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_complex(s: &str) -> std::result::Result<Complex<f64>, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Complex::new(parse(re)?, parse(im)?))
}

fn sweep_path(out: &Path, i: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("roc");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.snr{i}.{ext}"))
}

fn roc(args: RocArgs) -> Result<bool> {
    let mut plan = match &args.config {
        Some(path) => ExperimentPlan::from_file(path)?,
        None => ExperimentPlan::default(),
    };
    if let Some(seed) = args.run.seed {
        plan.seed = seed;
    }
    if let Some(trials) = args.run.trials {
        plan.trials = trials;
    }
    if let Some(mode) = args.mode {
        plan.base.relay_mode = match mode {
            Mode::Af => RelayMode::Af,
            Mode::Df => RelayMode::Df,
        };
    }
    if let Some(csi) = args.csi {
        plan.base.csi_mode = match csi {
            Csi::Full => CsiMode::Full,
            Csi::Stat => CsiMode::Statistical,
        };
    }
    if args.sweep && plan.snr_grid.is_none() {
        plan.snr_grid = Some(default_snr_grid());
    }
    plan.validate()?;

    if plan.snr_grid.is_none() {
        let points = run_roc_with_workers(&plan, args.run.workers)?;
        emit_csv(&points, &args.out)?;
        println!("wrote {} points to {}", points.len(), args.out.display());
        return Ok(true);
    }
    for (i, curve) in run_sweep(&plan, args.run.workers)?.iter().enumerate() {
        let path = sweep_path(&args.out, i);
        emit_csv(&curve.points, &path)?;
        println!(
            "wrote {} points to {} (gamma_ab {}, gamma_eb {})",
            curve.points.len(),
            path.display(),
            format_significant(curve.gamma_ab, 6),
            format_significant(curve.gamma_eb, 6)
        );
    }
    Ok(true)
}

fn report(results: &[CheckResult]) -> bool {
    print!("{}", format_table(results));
    results.iter().all(|r| r.passed)
}

fn run_validate(args: RunArgs) -> Result<bool> {
    let mut opts = ValidateOptions::default();
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Error::Usage("--trials must be at least 1".into()));
        }
        opts.trials = trials;
    }
    opts.workers = args.workers;
    Ok(report(&validate::run_all(&opts)?))
}

fn pmd(args: PmdArgs) -> Result<bool> {
    let mu_a = Fingerprint::new(args.mu_a);
    let mu_e = Fingerprint::new(args.mu_e);
    let exact = pmd_exact(&mu_a, &mu_e, args.sigma_be, args.delta)?;
    let sigma_t = (args.sigma_be / 2.0).sqrt();
    let marcum = match args.mode {
        Mode::Df => MarcumArgs::new(corollary2_ahat(&mu_a, args.sigma_be)?, args.delta / sigma_t)?,
        Mode::Af => {
            let cfg = match &args.config {
                Some(path) => ExperimentPlan::from_file(path)?.base,
                None => SystemConfig::default(),
            };
            corollary3_ab_hat(&cfg.with_relay_mode(RelayMode::Af), &mu_a)?
        }
    };
    let approx = pmd_approx(&marcum)?;
    println!("Pmd={}", format_significant(exact.value(), 10));
    println!(
        "Pmd_approx={} (a={}, b={})",
        format_significant(approx.value(), 10),
        format_significant(marcum.a, 10),
        format_significant(marcum.b, 10)
    );
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Roc(args) => roc(args),
        Command::Validate(args) => run_validate(args),
        Command::Pmd(args) => pmd(args),
        Command::Selftest => validate::special_functions(&ValidateOptions::default()).map(|r| report(&[r])),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rpauth: {e}");
            ExitCode::from(2)
        }
    }
}
