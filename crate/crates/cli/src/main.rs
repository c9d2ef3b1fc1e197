use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qampa::harness::{self, ExperimentConfig, Profile};
use qampa::AnsatzKind;

#[derive(Parser)]
#[command(name = "qampa", version, about = "QAOA / QAMPA benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured instance ensemble to <out>/instances.
    Generate(Common),
    /// Run scanlast for every (instance, kind) cell; skips finished cells.
    Run(Common),
    /// Compile circuits and write <out>/compile_report.csv.
    CompileReport {
        #[command(flatten)]
        common: Common,
        /// Also write one OpenQASM file per circuit here.
        #[arg(long)]
        qasm_dir: Option<PathBuf>,
    },
    /// Median / std per (kind, n, p) and the QAOA vs QAMPA comparison.
    Aggregate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        r: u32,
    },
    /// Scatter and angle tables for plotting.
    ExportPlotData {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        r: u32,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON). Defaults to the selected profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "desk")]
    profile: Profile,
    /// Comma-separated ansatz kinds, e.g. QAOA,QAMPA.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<AnsatzKind>>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::profile(self.profile, self.seed.unwrap_or(0)),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(kinds) = &self.kinds {
            config.kinds = kinds.clone();
        }
        config.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring thread pool")?;
        }
        Ok((config, out))
    }
}

fn save_config(config: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    config.save(&out.join("config.json"))?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(common) => {
            let (config, out) = common.resolve()?;
            save_config(&config, &out)?;
            let paths = harness::generate(&config, &out)?;
            println!("wrote {} instance files to {}", paths.len(), out.join("instances").display());
        }
        Command::Run(common) => {
            let (config, out) = common.resolve()?;
            save_config(&config, &out)?;
            let summary = harness::run(&config, &out)?;
            println!(
                "cells: {} total, {} skipped, {} run; {} records appended",
                summary.cells_total, summary.cells_skipped, summary.cells_run, summary.records_written
            );
        }
        Command::CompileReport { common, qasm_dir } => {
            let (config, out) = common.resolve()?;
            std::fs::create_dir_all(&out)?;
            let rows = harness::compile_report(&config, qasm_dir.as_deref())?;
            let path = out.join("compile_report.csv");
            harness::write_compile_report(&rows, &path)?;
            println!("wrote {} depth reports to {}", rows.len(), path.display());
        }
        Command::Aggregate { common, r } => {
            let (_, out) = common.resolve()?;
            let (rows, report) = harness::aggregate_dir(&out, r)?;
            println!("wrote {} aggregate rows", rows.len());
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::ExportPlotData { common, r } => {
            let (_, out) = common.resolve()?;
            let records = harness::read_records(&out.join("results.jsonl"))?;
            harness::export_plot_data(&records, r, &out)?;
            println!("wrote scatter.csv and angles.csv to {}", out.display());
        }
    }
    Ok(())
}
