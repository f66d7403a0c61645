use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use gsmfde::sim::{self, config_hash};
use gsmfde::spec::{load_spec, ChannelSpec, FamilySpec, OracleSpec, SweepSpec, Validate};
use gsmfde::Error;

/// Frequency-domain ADMM detection of single-carrier GSM blocks.
#[derive(Parser)]
#[command(name = "gsmfde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against SNR for every configured detector.
    Sweep(RunArgs),
    /// ADMM against exhaustive ML search on tiny instances.
    OracleCompare(RunArgs),
    /// Required SNR at a target BER across a family of loads.
    Fig2(RunArgs),
    /// Print the sample-spaced power-delay profile.
    ProfileDump(ProfileArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// `key.path=value` edit applied before validation; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Replaces the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProfileArgs {
    /// TOML file whose `[channel]` table selects the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Only the `[channel]` table of a run configuration.
#[derive(serde::Deserialize)]
struct ChannelOnly {
    #[serde(default)]
    channel: ChannelSpec,
}

impl Validate for ChannelOnly {
    fn validate(&self) -> Result<(), gsmfde::ConfigError> {
        self.channel.validate_for(None).map_err(|e| e.nested("channel"))
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Profile(_) | Error::ChannelTooLong { .. } => 2,
        Error::GuardExceeded { .. } => 3,
        _ => 1,
    }
}

fn load<T: DeserializeOwned + Validate>(args: &RunArgs) -> gsmfde::Result<T> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    Ok(load_spec(&args.config, &overrides)?)
}

fn configure_workers(workers: Option<usize>) -> gsmfde::Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(gsmfde::ConfigError::single("workers", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| gsmfde::ConfigError::single("workers", e.to_string()))?;
    }
    Ok(())
}

fn stamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn sweep(args: &RunArgs) -> gsmfde::Result<()> {
    let spec: SweepSpec = load(args)?;
    let simulator = sim::Simulator::new(spec)?;
    for kind in &simulator.spec().detectors {
        let result = simulator.run_detector(*kind)?;
        let (csv, _) = sim::persist(&result, &args.out)?;
        println!("{kind}: {}", csv.display());
        for p in &result.points {
            println!(
                "  snr={:>6.2} dB  ber={:.3e} ±{:.1e}  ({} errors / {} bits, {} blocks)",
                p.snr_db, p.ber, p.ci95, p.errors, p.bits, p.blocks
            );
        }
    }
    Ok(())
}

fn oracle_compare(args: &RunArgs) -> gsmfde::Result<()> {
    let spec: OracleSpec = load(args)?;
    let report = sim::run_oracle_compare(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    let stem = format!("oracle_{}_{}", config_hash(&spec), stamp());
    let csv = args.out.join(format!("{stem}.csv"));
    sim::write_oracle_csv(std::fs::File::create(&csv)?, &report)?;
    let summary = serde_json::json!({
        "spec": spec,
        "match_rate": report.match_rate,
        "mean_objective_ratio": report.mean_objective_ratio,
        "admm_below_ml": report.admm_below_ml,
        "version": env!("CARGO_PKG_VERSION"),
    });
    serde_json::to_writer_pretty(std::fs::File::create(args.out.join(format!("{stem}.json")))?, &summary)?;
    println!("match rate          {:.4}", report.match_rate);
    println!("mean f_admm / f_ml  {:.4}", report.mean_objective_ratio);
    println!("f_admm < f_ml       {}", report.admm_below_ml);
    println!("per-instance CSV    {}", csv.display());
    Ok(())
}

fn fig2(args: &RunArgs) -> gsmfde::Result<()> {
    let spec: FamilySpec = load(args)?;
    let rows = sim::run_family(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    let stem = format!("fig2_{}_{}", config_hash(&spec), stamp());
    let csv = args.out.join(format!("{stem}.csv"));
    sim::write_family_csv(std::fs::File::create(&csv)?, &rows)?;
    let sidecar = serde_json::json!({ "spec": spec, "rows": rows, "version": env!("CARGO_PKG_VERSION") });
    serde_json::to_writer_pretty(std::fs::File::create(args.out.join(format!("{stem}.json")))?, &sidecar)?;
    for row in &rows {
        println!(
            "{:<16} user load {:>6.3}  stream load {:>6.3}  SNR@{:e} = {}",
            row.label, row.user_load, row.stream_load, spec.target_ber, row.required_snr
        );
    }
    println!("{}", csv.display());
    Ok(())
}

fn profile_dump(args: &ProfileArgs) -> gsmfde::Result<()> {
    let channel = match &args.config {
        Some(path) => load_spec::<ChannelOnly>(path, &args.overrides)?.channel,
        None => {
            let mut table = toml::Table::new();
            for o in &args.overrides {
                gsmfde::spec::apply_override(&mut table, o)?;
            }
            let parsed: ChannelOnly = toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| gsmfde::ConfigError::single("config", e.message()))?;
            parsed.validate()?;
            parsed.channel
        }
    };
    let sampled = channel.sampled()?;
    let write = |out: &mut dyn std::io::Write| -> std::io::Result<()> {
        writeln!(out, "tap,power")?;
        for (i, p) in sampled.powers.iter().enumerate() {
            writeln!(out, "{i},{p}")?;
        }
        Ok(())
    };
    match &args.out {
        Some(path) => write(&mut std::fs::File::create(path)?)?,
        None => write(&mut std::io::stdout().lock())?,
    }
    eprintln!(
        "{}: {} taps, occupied {:?}, minimum n_cp {}",
        sampled.name,
        sampled.taps(),
        sampled.occupied(),
        sampled.taps() - 1
    );
    Ok(())
}

fn run(cli: &Cli) -> gsmfde::Result<()> {
    match &cli.command {
        Command::Sweep(a) | Command::OracleCompare(a) | Command::Fig2(a) => configure_workers(a.workers)?,
        Command::ProfileDump(_) => {}
    }
    match &cli.command {
        Command::Sweep(a) => sweep(a),
        Command::OracleCompare(a) => oracle_compare(a),
        Command::Fig2(a) => fig2(a),
        Command::ProfileDump(a) => profile_dump(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
