use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crowd_cluster::harness::{
    run_experiment, summarize_groups, write_csv, Algorithm, ExperimentConfig, SideInfoSpec, Trial,
};
use crowd_cluster::stats::{
    binary_kl, chernoff_exponent, kl, lower_bound_faulty, lower_bound_lasvegas, lower_bound_perfect_side,
    symmetric_divergence, tv,
};
use crowd_cluster::{Error, Extended, Result, RunReport};

#[derive(Parser)]
#[command(name = "crowd-cluster", version, about = "Recover hidden clusterings from pairwise oracle queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the instance and side information of one seed.
    Gen {
        /// Experiment config (JSON).
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write W as `u,v,w` rows.
        #[arg(long)]
        csv: bool,
    },
    /// Run the configured algorithm on every seed.
    Run {
        config: PathBuf,
        /// Override the algorithm named in the config.
        #[arg(long)]
        algorithm: Option<Algorithm>,
        /// CSV destination; defaults to the config's `output`, then stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a config sweep and print per-configuration summaries.
    Bench {
        config: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Summary JSON destination; defaults to stderr.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Print lower-bound reference values.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Oracle error rate.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Side-information preset as JSON, e.g. '{"preset":"example2","eps":0.3,"grid":2}'.
        #[arg(long)]
        side_info: Option<String>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&fs::read_to_string(path)?)
}

fn emit_csv(reports: &[RunReport], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_csv(reports, BufWriter::new(File::create(p)?)),
        None => write_csv(reports, io::stdout().lock()),
    }
}

/// Prints each violation and returns how many runs had any.
fn report_violations(reports: &[RunReport]) -> usize {
    let mut bad = 0;
    for r in reports {
        for v in &r.violations {
            eprintln!("violation: {} n={} k={} seed={}: {v}", r.algorithm, r.n, r.k, r.seed);
        }
        bad += usize::from(!r.violations.is_empty());
    }
    bad
}

fn fmt_ext(x: Extended) -> String {
    match x {
        Extended::Finite(v) => format!("{v}"),
        Extended::Infinite => "inf".into(),
    }
}

fn gen(config: &Path, seed: Option<u64>, out: &Path, csv: bool) -> Result<()> {
    let cfg = load(config)?;
    let seed = seed.unwrap_or_else(|| cfg.seeds.expand()[0]);
    let trial = Trial::build(&cfg, seed)?;
    fs::create_dir_all(out)?;
    let inst_path = out.join(format!("instance-{seed}.json"));
    serde_json::to_writer_pretty(BufWriter::new(File::create(&inst_path)?), &trial.instance)?;
    println!("{}", inst_path.display());
    if let Some((w, _, _)) = &trial.side_info {
        let path = out.join(format!("sideinfo-{seed}.bin"));
        w.write_to(BufWriter::new(File::create(&path)?))?;
        println!("{}", path.display());
        if csv {
            let path = out.join(format!("sideinfo-{seed}.csv"));
            w.write_csv(BufWriter::new(File::create(&path)?))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn bounds(n: usize, k: usize, p: f64, side_info: Option<&str>) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "nk = {}", n * k)?;
    if p > 0.0 {
        writeln!(out, "D(p || 1-p) = {}", fmt_ext(binary_kl(p)?))?;
    }
    writeln!(out, "faulty: nk / D(p || 1-p) = {}", fmt_ext(lower_bound_faulty(n, k, p)?))?;
    if let Some(text) = side_info {
        let spec: SideInfoSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let (fp, fm) = spec.pmfs()?;
        let delta = symmetric_divergence(&fp, &fm)?;
        writeln!(out, "mu+ - mu- = {}", fp.mean() - fm.mean())?;
        writeln!(out, "D(f+ || f-) = {}", fmt_ext(kl(&fp, &fm)?))?;
        writeln!(out, "Delta = {}", fmt_ext(delta))?;
        writeln!(out, "tv = {}", tv(&fp, &fm)?)?;
        writeln!(out, "chernoff exponent = {}", chernoff_exponent(&fp, &fm)?)?;
        writeln!(out, "perfect + side: k^2 / Delta = {}", lower_bound_perfect_side(k, delta))?;
        writeln!(out, "las vegas: n + k^2 / min(1, Delta) = {}", lower_bound_lasvegas(n, k, delta))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Gen { config, seed, out, csv } => gen(&config, seed, &out, csv).map(|_| 0),
        Command::Run { config, algorithm, output } => {
            let mut cfg = load(&config)?;
            if let Some(a) = algorithm {
                cfg.algorithm = a;
            }
            cfg.sweep = None;
            let reports = run_experiment(&cfg)?;
            emit_csv(&reports, output.as_deref().or(cfg.output.as_deref()))?;
            Ok(report_violations(&reports))
        }
        Command::Bench { config, output, summary } => {
            let cfg = load(&config)?;
            let reports = run_experiment(&cfg)?;
            emit_csv(&reports, output.as_deref().or(cfg.output.as_deref()))?;
            let groups = summarize_groups(&reports)?;
            let text = serde_json::to_string_pretty(&groups)?;
            match summary {
                Some(p) => fs::write(p, text + "\n")?,
                None => eprintln!("{text}"),
            }
            Ok(report_violations(&reports))
        }
        Command::Bounds { n, k, p, side_info } => bounds(n, k, p, side_info.as_deref()).map(|_| 0),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(bad) => {
            eprintln!("{bad} run(s) violated a hard assertion");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
