//! `lsnsim`: validate configs, run scenarios and sweeps, and merge reports.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lsn_core::engine::{load_cities, run_scenario, write_outputs, MetricsReport, ScenarioConfig};
use lsn_core::rng::derive_seed;
use std::path::{Path, PathBuf};

/// Output root override: relative `--out` paths are resolved under this
/// directory when the variable is set.
const OUT_ROOT_ENV: &str = "LSNSIM_OUT_ROOT";

#[derive(Parser)]
#[command(name = "lsnsim", version, about = "LEO satellite network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Scenario config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Dotted-key override, e.g. `--set failure.ratio=0.3` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario config (including the city table).
    Validate(ConfigArgs),
    /// Run one scenario and write its report and tables.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario per axis value and merge the results.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Dotted config key to sweep, e.g. `failure.ratio`.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Merge reports found under a directory into one table.
    Report {
        /// Directory containing run directories (or a single run).
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate(args) => validate(&args),
        Command::Run { config, out } => run(&config, &resolve_out(&out)),
        Command::Sweep {
            config,
            out,
            axis,
            values,
        } => sweep(&config, &resolve_out(&out), &axis, &values),
        Command::Report { out } => report(&resolve_out(&out)),
    }
}

fn resolve_out(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) if out.is_relative() => PathBuf::from(root).join(out),
        _ => out.to_path_buf(),
    }
}

fn parse_overrides(set: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    set.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .with_context(|| format!("override {kv:?} is not KEY=VALUE"))
        })
        .collect()
}

fn load(args: &ConfigArgs) -> anyhow::Result<ScenarioConfig> {
    let overrides = parse_overrides(&args.set)?;
    Ok(ScenarioConfig::load(&args.config, &overrides)?)
}

fn validate(args: &ConfigArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let cities = load_cities(&cfg.ground.city_file)?;
    println!(
        "ok: {} satellites, {} cities, {} flows over {} s",
        cfg.shell.satellite_count(),
        cities.len(),
        cfg.traffic.flows,
        cfg.sim.duration_s
    );
    Ok(())
}

fn run(args: &ConfigArgs, out: &Path) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let output = run_scenario(&cfg)?;
    let report_path = write_outputs(&output, out)?;
    println!(
        "run complete: reachability {} ({} attempts) -> {}",
        output
            .report
            .reachability_pct
            .map(|v| format!("{v:.2}%"))
            .unwrap_or_else(|| "n/a".into()),
        output.report.attempts.total,
        report_path.display()
    );
    Ok(())
}

fn sweep(args: &ConfigArgs, out: &Path, axis: &str, values: &[String]) -> anyhow::Result<()> {
    if values.is_empty() {
        bail!("sweep needs at least one value for axis {axis:?}");
    }
    let base = load(args)?;
    let mut rows = Vec::new();
    for value in values {
        // derived seed depends only on the axis value, not its position;
        // masked into TOML's integer range
        let seed = derive_seed(base.sim.seed, &format!("sweep:{axis}={value}"), 0) & (i64::MAX as u64);
        let mut overrides = args.set.clone();
        overrides.push(format!("{axis}={value}"));
        overrides.push(format!("sim.seed={seed}"));
        let cfg = ScenarioConfig::load(&args.config, &parse_overrides(&overrides)?)?;
        let output = run_scenario(&cfg)?;
        let dir = out.join(format!("{}={}", axis.replace('.', "_"), value));
        write_outputs(&output, &dir)?;
        println!(
            "{axis}={value}: reachability {}",
            output
                .report
                .reachability_pct
                .map(|v| format!("{v:.2}%"))
                .unwrap_or_else(|| "n/a".into())
        );
        rows.push((value.clone(), output.report));
    }
    let merged = merged_table(axis, &rows);
    std::fs::create_dir_all(out)?;
    let path = out.join("sweep.csv");
    std::fs::write(&path, merged)?;
    println!("merged table -> {}", path.display());
    Ok(())
}

fn report(out: &Path) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    let direct = out.join("report.json");
    if direct.is_file() {
        rows.push((out.display().to_string(), read_report(&direct)?));
    } else {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(out)
            .with_context(|| format!("reading {}", out.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for entry in entries {
            let report = entry.join("report.json");
            if report.is_file() {
                let name = entry
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                rows.push((name, read_report(&report)?));
            }
        }
    }
    if rows.is_empty() {
        bail!("no report.json found under {}", out.display());
    }
    let merged = merged_table("run", &rows);
    print!("{merged}");
    let path = out.join("merged.csv");
    std::fs::write(&path, &merged)?;
    println!("merged table -> {}", path.display());
    Ok(())
}

fn read_report(path: &Path) -> anyhow::Result<MetricsReport> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?)
}

fn merged_table(axis: &str, rows: &[(String, MetricsReport)]) -> String {
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!(
        "{axis},reachability_pct,reachability_excl_gaps_pct,flow_reachability_pct,\
mean_latency_s,mean_stretch,jitter_s,rediscovery_mean_per_flow,delivered,failed,coverage_gaps,\
ospf_fib,ospf_msgs,aodv_fib,aodv_msgs,dabr_fib,dabr_msgs\n"
    );
    for (value, r) in rows {
        let counts = |m: &str| {
            r.overhead
                .get(m)
                .map(|c| (c.fib_updates, c.control_messages))
                .unwrap_or((0.0, 0.0))
        };
        let (ospf_fib, ospf_msgs) = counts("ospf");
        let (aodv_fib, aodv_msgs) = counts("aodv");
        let (dabr_fib, dabr_msgs) = counts("dabr");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            value,
            fmt(r.reachability_pct),
            fmt(r.reachability_excl_gaps_pct),
            fmt(r.flow_reachability_pct),
            fmt(r.mean_latency_s),
            fmt(r.mean_stretch),
            fmt(r.jitter_s),
            fmt(r.rediscovery_mean_per_flow),
            r.attempts.delivered,
            r.attempts.failed,
            r.attempts.coverage_gaps,
            ospf_fib,
            ospf_msgs,
            aodv_fib,
            aodv_msgs,
            dabr_fib,
            dabr_msgs,
        ));
    }
    out
}
