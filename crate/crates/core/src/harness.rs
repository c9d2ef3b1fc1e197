//! Experiment orchestration: instance ensembles, benchmark runs, aggregation
//! and plot-data tables.
//!
//! Output directory layout:
//!
//! ```text
//! instances/<id>.json     generated problem instances
//! results.jsonl           one ResultRecord per (instance, kind, p)
//! progress.jsonl          one ProgressRecord per local optimization
//! aggregate.csv           median / std per (kind, n, p)
//! compare.json            QAOA vs QAMPA summary per p
//! compile_report.csv      depth reports
//! scatter.csv, angles.csv plot tables
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{self, angle_domains, AngleSchedule, AnsatzKind};
use crate::compiler::{self, DepthReport, GateSet};
use crate::error::{Error, Result};
use crate::metrics::metric_report;
use crate::optimizer::{scanlast, ProgressRecord, ScanlastConfig};
use crate::problem::{
    energy_table, feasible_basis, generate_instance_with, load_instance, save_instance,
    GeneratorOptions, ProblemInstance, BENCHMARK_COEFFICIENTS,
};
use crate::seeding::{self, derive_seed, fnv1a};
use crate::subspace_sim::{dicke_state, Subspace};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const RESULT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum KappaRule {
    Half,
    Fixed(usize),
}

impl KappaRule {
    pub fn kappa(self, n: usize) -> usize {
        match self {
            KappaRule::Half => n / 2,
            KappaRule::Fixed(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::invalid(format!("unknown profile {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub sizes: Vec<usize>,
    pub kappa_rule: KappaRule,
    pub instances_per_size: usize,
    pub kinds: Vec<AnsatzKind>,
    pub p_max: usize,
    /// `master_seed` and `p_max` inside are overridden by the top-level
    /// values when a run starts.
    pub scanlast: ScanlastConfig,
    pub r_list: Vec<u32>,
    pub master_seed: u64,
    pub coefficient_set: Vec<f64>,
    #[serde(default = "default_gate_sets")]
    pub gate_sets: Vec<GateSet>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_gate_sets() -> Vec<GateSet> {
    GateSet::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn profile(profile: Profile, master_seed: u64) -> Self {
        match profile {
            Profile::Paper => Self {
                schema_version: CONFIG_SCHEMA_VERSION,
                sizes: (4..=16).step_by(2).collect(),
                kappa_rule: KappaRule::Half,
                instances_per_size: 40,
                kinds: vec![AnsatzKind::Qaoa, AnsatzKind::Qampa],
                p_max: 5,
                scanlast: ScanlastConfig::paper(5, master_seed),
                r_list: vec![1, 5],
                master_seed,
                coefficient_set: BENCHMARK_COEFFICIENTS.to_vec(),
                gate_sets: default_gate_sets(),
                output_dir: None,
            },
            Profile::Desk => Self {
                schema_version: CONFIG_SCHEMA_VERSION,
                sizes: vec![8],
                kappa_rule: KappaRule::Half,
                instances_per_size: 10,
                kinds: AnsatzKind::ALL.to_vec(),
                p_max: 4,
                scanlast: ScanlastConfig::desk(4, master_seed),
                r_list: vec![1, 5],
                master_seed,
                coefficient_set: BENCHMARK_COEFFICIENTS.to_vec(),
                gate_sets: default_gate_sets(),
                output_dir: None,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "config schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2 || n % 2 != 0) {
            return Err(Error::invalid("sizes must be a non-empty list of even n >= 2"));
        }
        for &n in &self.sizes {
            let k = self.kappa_rule.kappa(n);
            if k == 0 || k >= n {
                return Err(Error::invalid(format!("kappa {k} is trivial for n = {n}")));
            }
        }
        if self.instances_per_size == 0 || self.kinds.is_empty() || self.p_max == 0 {
            return Err(Error::invalid(
                "instances_per_size, kinds and p_max must be non-empty / positive",
            ));
        }
        if self.r_list.iter().any(|&r| r == 0) {
            return Err(Error::invalid("R values must be positive"));
        }
        self.scanlast_config().validate()
    }

    pub fn scanlast_config(&self) -> ScanlastConfig {
        ScanlastConfig {
            p_max: self.p_max,
            master_seed: self.master_seed,
            ..self.scanlast.clone()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::parse_json(path, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn instance_seed(master_seed: u64, n: usize, index: usize) -> u64 {
    derive_seed(&[master_seed, fnv1a("instance"), n as u64, index as u64])
}

/// The configured ensemble, generated in memory.
pub fn ensemble(config: &ExperimentConfig) -> Result<Vec<ProblemInstance>> {
    let opts = GeneratorOptions {
        coefficient_set: config.coefficient_set.clone(),
        ..GeneratorOptions::default()
    };
    let mut out = Vec::new();
    for &n in &config.sizes {
        for i in 0..config.instances_per_size {
            let seed = instance_seed(config.master_seed, n, i);
            out.push(generate_instance_with(n, config.kappa_rule.kappa(n), seed, &opts)?);
        }
    }
    Ok(out)
}

fn instance_path(out_dir: &Path, id: &str) -> PathBuf {
    out_dir.join("instances").join(format!("{id}.json"))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn generate(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    create_dir(&out_dir.join("instances"))?;
    ensemble(config)?
        .iter()
        .map(|inst| {
            let path = instance_path(out_dir, inst.id());
            save_instance(inst, &path)?;
            Ok(path)
        })
        .collect()
}

/// Loads the configured ensemble from `out_dir/instances`.
pub fn load_ensemble(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<ProblemInstance>> {
    ensemble(config)?
        .iter()
        .map(|expected| {
            let path = instance_path(out_dir, expected.id());
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "missing instance file {} (run `generate` first)",
                    path.display()
                )));
            }
            load_instance(&path)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub instance_id: String,
    pub n: usize,
    pub kappa: usize,
    pub ansatz: AnsatzKind,
    pub p: usize,
    pub schedule: AngleSchedule,
    pub reduced_schedule: AngleSchedule,
    /// `<BEST_R>` keyed by R.
    pub metrics: BTreeMap<u32, f64>,
    pub optimum_probability: f64,
    pub ordering_seed: u64,
    pub master_seed: u64,
    pub evaluations: usize,
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn metric(&self, r: u32) -> Option<f64> {
        self.metrics.get(&r).copied()
    }

    /// Record with the wall-clock field cleared, for determinism checks.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        if rec.schema_version != RESULT_SCHEMA_VERSION {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: format!("unsupported result schema_version {}", rec.schema_version),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Runs scanlast on one instance and turns each layer's best schedule into a
/// record.
pub fn run_cell(
    instance: &ProblemInstance,
    kind: AnsatzKind,
    config: &ExperimentConfig,
) -> Result<(Vec<ResultRecord>, Vec<ProgressRecord>)> {
    let clock = Instant::now();
    let sc = config.scanlast_config();
    let run = scanlast(instance, kind, &sc)?;
    if let Some(err) = &run.error {
        return Err(Error::invalid(format!(
            "scanlast stopped on {} / {kind}: {err}",
            instance.id()
        )));
    }
    let basis = feasible_basis(instance.n(), instance.kappa())?;
    let table = energy_table(instance, &basis)?;
    let space = Subspace::new(basis);
    let start = dicke_state(&space)?;
    let (gmax, bmax) = angle_domains(instance)?;
    let mut r_list = config.r_list.clone();
    r_list.push(sc.r);

    let mut records = Vec::with_capacity(run.layers.len());
    for layer in &run.layers {
        let best = layer.best();
        let plan = ansatz::build(kind, instance, layer.p, run.ordering_seed)?;
        let state = ansatz::execute(&plan, &best.schedule, start.clone())?;
        let report = metric_report(&state, &table, &r_list)?;
        records.push(ResultRecord {
            schema_version: RESULT_SCHEMA_VERSION,
            instance_id: instance.id().to_string(),
            n: instance.n(),
            kappa: instance.kappa(),
            ansatz: kind,
            p: layer.p,
            schedule: best.schedule.clone(),
            reduced_schedule: best.schedule.reduced(gmax, bmax),
            metrics: report.best_r,
            optimum_probability: report.optimum_probability,
            ordering_seed: run.ordering_seed,
            master_seed: config.master_seed,
            evaluations: layer.evaluations,
            wall_time_s: 0.0,
        });
    }
    let elapsed = clock.elapsed().as_secs_f64();
    for r in &mut records {
        r.wall_time_s = elapsed;
    }
    Ok((records, run.progress))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub cells_total: usize,
    pub cells_skipped: usize,
    pub cells_run: usize,
    pub records_written: usize,
}

struct OrderedWriter {
    next: usize,
    pending: BTreeMap<usize, (Vec<ResultRecord>, Vec<ProgressRecord>)>,
    results: File,
    progress: File,
    written: usize,
}

impl OrderedWriter {
    fn commit(
        &mut self,
        idx: usize,
        cell: (Vec<ResultRecord>, Vec<ProgressRecord>),
        paths: (&Path, &Path),
    ) -> Result<()> {
        self.pending.insert(idx, cell);
        while let Some((records, progress)) = self.pending.remove(&self.next) {
            for r in &records {
                writeln!(self.results, "{}", serde_json::to_string(r)?)
                    .map_err(|e| Error::io(paths.0, e))?;
            }
            for p in &progress {
                writeln!(self.progress, "{}", serde_json::to_string(p)?)
                    .map_err(|e| Error::io(paths.1, e))?;
            }
            self.results.flush().map_err(|e| Error::io(paths.0, e))?;
            self.written += records.len();
            self.next += 1;
        }
        Ok(())
    }
}

/// Executes every (instance, kind) cell not already present in
/// `results.jsonl`. Cells run concurrently; records are appended in cell
/// order through a single writer.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    let instances = load_ensemble(config, out_dir)?;
    let results_path = out_dir.join("results.jsonl");
    let progress_path = out_dir.join("progress.jsonl");
    let done: HashSet<(String, AnsatzKind)> = {
        let mut per_cell: BTreeMap<(String, String), HashSet<usize>> = BTreeMap::new();
        let mut kinds = BTreeMap::new();
        for r in read_records(&results_path)? {
            kinds.insert(r.ansatz.name().to_string(), r.ansatz);
            per_cell
                .entry((r.instance_id.clone(), r.ansatz.name().to_string()))
                .or_default()
                .insert(r.p);
        }
        per_cell
            .into_iter()
            .filter(|(_, ps)| (1..=config.p_max).all(|p| ps.contains(&p)))
            .map(|((id, k), _)| (id, kinds[&k]))
            .collect()
    };

    let cells: Vec<(&ProblemInstance, AnsatzKind)> = instances
        .iter()
        .flat_map(|inst| config.kinds.iter().map(move |&k| (inst, k)))
        .collect();
    let todo: Vec<(&ProblemInstance, AnsatzKind)> = cells
        .iter()
        .copied()
        .filter(|(inst, k)| !done.contains(&(inst.id().to_string(), *k)))
        .collect();

    let open = |path: &Path| {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))
    };
    let writer = Mutex::new(OrderedWriter {
        next: 0,
        pending: BTreeMap::new(),
        results: open(&results_path)?,
        progress: open(&progress_path)?,
        written: 0,
    });
    todo.par_iter()
        .enumerate()
        .try_for_each(|(idx, (inst, kind))| -> Result<()> {
            let cell = run_cell(inst, *kind, config)?;
            writer
                .lock()
                .expect("writer poisoned")
                .commit(idx, cell, (&results_path, &progress_path))
        })?;
    let written = writer.into_inner().expect("writer poisoned").written;
    Ok(RunSummary {
        cells_total: cells.len(),
        cells_skipped: cells.len() - todo.len(),
        cells_run: todo.len(),
        records_written: written,
    })
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub ansatz: AnsatzKind,
    pub n: usize,
    pub p: usize,
    pub r: u32,
    pub count: usize,
    pub median: f64,
    pub std: f64,
}

pub fn aggregate(records: &[ResultRecord], r: u32) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, usize, usize), (AnsatzKind, Vec<f64>)> = BTreeMap::new();
    for rec in records {
        if let Some(v) = rec.metric(r) {
            groups
                .entry((rec.ansatz.name().to_string(), rec.n, rec.p))
                .or_insert_with(|| (rec.ansatz, Vec::new()))
                .1
                .push(v);
        }
    }
    groups
        .into_iter()
        .map(|((_, n, p), (ansatz, values))| AggregateRow {
            ansatz,
            n,
            p,
            r,
            count: values.len(),
            median: median(&values),
            std: std_dev(&values),
        })
        .collect()
}

pub fn write_aggregate(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Records keyed by `(instance, p)` for one kind and `R`.
fn values_by_instance(
    records: &[ResultRecord],
    kind: AnsatzKind,
    r: u32,
) -> BTreeMap<(String, usize), f64> {
    records
        .iter()
        .filter(|rec| rec.ansatz == kind)
        .filter_map(|rec| rec.metric(r).map(|v| ((rec.instance_id.clone(), rec.p), v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub p: usize,
    pub instances: usize,
    /// Median over instances of `QAOA - QAMPA`.
    pub median_difference: f64,
    pub qaoa_wins: usize,
    pub qampa_wins: usize,
    pub ties: usize,
    /// Kinds ordered from best (lowest median) to worst.
    pub ranking: Vec<(AnsatzKind, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub r: u32,
    pub rows: Vec<CompareRow>,
}

pub fn compare_report(records: &[ResultRecord], r: u32) -> CompareReport {
    let qaoa = values_by_instance(records, AnsatzKind::Qaoa, r);
    let qampa = values_by_instance(records, AnsatzKind::Qampa, r);
    let ps: std::collections::BTreeSet<usize> = records.iter().map(|rec| rec.p).collect();
    let rows = ps
        .into_iter()
        .map(|p| {
            let diffs: Vec<f64> = qaoa
                .iter()
                .filter(|((_, q), _)| *q == p)
                .filter_map(|(key, a)| qampa.get(key).map(|b| a - b))
                .collect();
            let tol = 1e-12;
            let mut ranking: Vec<(AnsatzKind, f64)> = AnsatzKind::ALL
                .iter()
                .filter_map(|&k| {
                    let v: Vec<f64> = records
                        .iter()
                        .filter(|rec| rec.ansatz == k && rec.p == p)
                        .filter_map(|rec| rec.metric(r))
                        .collect();
                    (!v.is_empty()).then(|| (k, median(&v)))
                })
                .collect();
            ranking.sort_by(|a, b| a.1.total_cmp(&b.1));
            CompareRow {
                p,
                instances: diffs.len(),
                median_difference: median(&diffs),
                qaoa_wins: diffs.iter().filter(|d| **d < -tol).count(),
                qampa_wins: diffs.iter().filter(|d| **d > tol).count(),
                ties: diffs.iter().filter(|d| d.abs() <= tol).count(),
                ranking,
            }
        })
        .collect();
    CompareReport { r, rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub instance_id: String,
    pub n: usize,
    pub p: usize,
    pub qaoa: f64,
    pub qampa: f64,
}

pub fn scatter_rows(records: &[ResultRecord], r: u32) -> Vec<ScatterRow> {
    let qaoa = values_by_instance(records, AnsatzKind::Qaoa, r);
    let qampa = values_by_instance(records, AnsatzKind::Qampa, r);
    let sizes: BTreeMap<&str, usize> = records
        .iter()
        .map(|rec| (rec.instance_id.as_str(), rec.n))
        .collect();
    qaoa.iter()
        .filter_map(|((id, p), a)| {
            qampa.get(&(id.clone(), *p)).map(|b| ScatterRow {
                instance_id: id.clone(),
                n: sizes[id.as_str()],
                p: *p,
                qaoa: *a,
                qampa: *b,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleRow {
    pub instance_id: String,
    pub ansatz: AnsatzKind,
    pub p: usize,
    pub layer: usize,
    pub gamma: f64,
    pub beta: f64,
}

pub fn angle_rows(records: &[ResultRecord]) -> Vec<AngleRow> {
    let mut rows = Vec::new();
    for rec in records {
        for (layer, (gamma, beta)) in rec.reduced_schedule.pairs().enumerate() {
            rows.push(AngleRow {
                instance_id: rec.instance_id.clone(),
                ansatz: rec.ansatz,
                p: rec.p,
                layer: layer + 1,
                gamma,
                beta,
            });
        }
    }
    rows
}

fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `scatter.csv` and `angles.csv`.
pub fn export_plot_data(records: &[ResultRecord], r: u32, out_dir: &Path) -> Result<()> {
    create_dir(out_dir)?;
    write_csv(&scatter_rows(records, r), &out_dir.join("scatter.csv"))?;
    write_csv(&angle_rows(records), &out_dir.join("angles.csv"))
}

/// Writes `aggregate.csv` and `compare.json` from `results.jsonl`.
pub fn aggregate_dir(out_dir: &Path, r: u32) -> Result<(Vec<AggregateRow>, CompareReport)> {
    let records = read_records(&out_dir.join("results.jsonl"))?;
    let rows = aggregate(&records, r);
    write_aggregate(&rows, &out_dir.join("aggregate.csv"))?;
    let report = compare_report(&records, r);
    let path = out_dir.join("compare.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    Ok((rows, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileRow {
    pub instance_id: String,
    pub report: DepthReport,
}

/// Compiles every configured kind and gate set for the first instance of
/// each size at `p = 1..=p_max`, with seeded random angles.
pub fn compile_report(config: &ExperimentConfig, qasm_dir: Option<&Path>) -> Result<Vec<CompileRow>> {
    config.validate()?;
    let mut instances = ensemble(config)?;
    instances.dedup_by_key(|i| i.n());
    if let Some(dir) = qasm_dir {
        create_dir(dir)?;
    }
    let mut rows = Vec::new();
    for inst in &instances {
        let oseed = crate::optimizer::ordering_seed(config.master_seed, inst.id());
        let (gmax, bmax) = angle_domains(inst)?;
        for &kind in &config.kinds {
            for p in 1..=config.p_max {
                let plan = ansatz::build(kind, inst, p, oseed)?;
                let mut rng = seeding::rng(derive_seed(&[
                    config.master_seed,
                    fnv1a(inst.id()),
                    fnv1a(kind.name()),
                    p as u64,
                ]));
                let pairs: Vec<(f64, f64)> = (0..p)
                    .map(|_| (rng.gen::<f64>() * gmax, rng.gen::<f64>() * bmax))
                    .collect();
                let sched = AngleSchedule::from_pairs(&pairs);
                for &set in &config.gate_sets {
                    let circuit = compiler::compile(&plan, &sched, set)?;
                    if let Some(dir) = qasm_dir {
                        let name = format!("{}-{}-p{p}-{}.qasm", inst.id(), kind.name(), set.name());
                        compiler::export_qasm(&circuit, &dir.join(name))?;
                    }
                    rows.push(CompileRow {
                        instance_id: inst.id().to_string(),
                        report: compiler::depth_report(&circuit),
                    });
                }
            }
        }
    }
    Ok(rows)
}

const COMPILE_COLUMNS: [&str; 14] = [
    "instance_id",
    "kind",
    "gate_set",
    "n",
    "p",
    "fused_two_qubit_gates",
    "fused_two_qubit_depth",
    "native_two_qubit_gates",
    "native_two_qubit_depth",
    "cnot_count",
    "single_qubit_gates",
    "total_depth",
    "approx_swap_overhead",
    "approx_depth_increase",
];

pub fn write_compile_report(rows: &[CompileRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(COMPILE_COLUMNS)?;
    for row in rows {
        w.serialize((&row.instance_id, &row.report))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, kind: AnsatzKind, p: usize, value: f64) -> ResultRecord {
        ResultRecord {
            schema_version: RESULT_SCHEMA_VERSION,
            instance_id: id.into(),
            n: 4,
            kappa: 2,
            ansatz: kind,
            p,
            schedule: AngleSchedule::zeros(p),
            reduced_schedule: AngleSchedule::zeros(p),
            metrics: BTreeMap::from([(5, value)]),
            optimum_probability: 0.0,
            ordering_seed: 0,
            master_seed: 0,
            evaluations: 0,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn median_and_std() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(std_dev(&[1.0]), 0.0);
        assert!((std_dev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn qampa_uniformly_worse() {
        let mut recs = Vec::new();
        for i in 0..5 {
            for p in 1..=3 {
                let base = 0.1 * i as f64 + 0.01 * p as f64;
                recs.push(record(&format!("i{i}"), AnsatzKind::Qaoa, p, base));
                recs.push(record(&format!("i{i}"), AnsatzKind::Qampa, p, base + 0.1));
            }
        }
        let rep = compare_report(&recs, 5);
        assert_eq!(rep.rows.len(), 3);
        for row in &rep.rows {
            assert!((row.median_difference + 0.1).abs() < 1e-12);
            assert_eq!(row.qaoa_wins, 5);
            assert_eq!(row.ranking[0].0, AnsatzKind::Qaoa);
        }
    }

    #[test]
    fn single_instance_medians_equal_values() {
        let recs = vec![
            record("a", AnsatzKind::Qaoa, 1, 0.3),
            record("a", AnsatzKind::Qampa, 1, 0.3),
        ];
        let rows = aggregate(&recs, 5);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.median == 0.3 && r.std == 0.0));
        let scatter = scatter_rows(&recs, 5);
        assert_eq!(scatter.len(), 1);
        assert_eq!(scatter[0].qaoa, scatter[0].qampa);
    }

    #[test]
    fn config_round_trip() {
        for profile in [Profile::Paper, Profile::Desk] {
            let cfg = ExperimentConfig::profile(profile, 17);
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }
}
