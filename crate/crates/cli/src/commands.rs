use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use chaosfs::analysis::{format_speedup, speedup, summarize, BatterySummary, ComparisonTable};
use chaosfs::data::{
    read_csv, read_libsvm, standardize, stratified_split, write_csv, CsvOptions, Dataset, LabelColumn, LabelMap,
};
use chaosfs::engine::{self, DatasetInfo, RunReport};

use crate::config::{DataFormat, DataSource, ExperimentConfig};
use crate::synth::{generate, Sidecar, SyntheticSpec};
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads or generates the full dataset. Returns it with its source
/// description and the SHA-256 of its bytes (of the CSV rendering for
/// synthetic data).
pub fn load_source(config: &ExperimentConfig) -> Result<(Dataset, String, String), CliError> {
    match config.data_source()? {
        DataSource::File { path, format } => {
            let bytes = fs::read(&path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
            let ds = match format {
                DataFormat::Csv => {
                    let options = CsvOptions {
                        has_header: config.has_header,
                        label: config.label_column.clone().map_or(LabelColumn::Last, LabelColumn::Name),
                        labels: LabelMap::default(),
                    };
                    read_csv(bytes.as_slice(), &options)
                }
                DataFormat::Libsvm => read_libsvm(bytes.as_slice(), config.libsvm_features, &LabelMap::default()),
            }
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
            Ok((ds, path.display().to_string(), sha256_hex(&bytes)))
        }
        DataSource::Synthetic(spec) => {
            let ds = generate(&spec).dataset;
            let mut bytes = Vec::new();
            write_csv(&ds, &mut bytes).map_err(CliError::runtime)?;
            Ok((ds, spec.source(), sha256_hex(&bytes)))
        }
    }
}

/// Standardized train and test splits plus their provenance.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub info: DatasetInfo,
}

pub fn prepare(config: &ExperimentConfig) -> Result<PreparedData, CliError> {
    let (ds, source, sha256) = load_source(config)?;
    let (train, test) = stratified_split(&ds, config.test_fraction, config.split_seed).map_err(CliError::runtime)?;
    let (train, test, _) = standardize(&train, &test).map_err(CliError::runtime)?;
    let info = DatasetInfo {
        source,
        sha256,
        n_features: ds.n_features(),
        train_rows: train.n_rows(),
        test_rows: test.n_rows(),
        test_fraction: config.test_fraction,
        split_seed: config.split_seed,
    };
    Ok(PreparedData { train, test, info })
}

/// Run `run_index` of the battery, with master seed `base_seed + run_index`.
pub fn run_one(config: &ExperimentConfig, data: &PreparedData, run_index: usize) -> Result<RunReport, CliError> {
    let engine_config = config.engine_config(config.base_seed.wrapping_add(run_index as u64));
    let mut report = engine::run(&engine_config, &data.train, &data.test)
        .map_err(|e| CliError::runtime(format!("run {run_index}: {e}")))?;
    report.dataset = Some(data.info.clone());
    Ok(report)
}

pub fn run_battery(config: &ExperimentConfig, data: &PreparedData) -> Result<Vec<RunReport>, CliError> {
    if !config.parallel_runs {
        return (0..config.runs).map(|r| run_one(config, data, r)).collect();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = config.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().map_err(CliError::runtime)?;
    let single = ExperimentConfig {
        threads: Some(1),
        ..config.clone()
    };
    pool.install(|| (0..config.runs).into_par_iter().map(|r| run_one(&single, data, r)).collect())
}

pub fn report_path(dir: &Path, run_index: usize) -> PathBuf {
    dir.join(format!("run_{run_index:03}.json"))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_table(dir: &Path, stem: &str, table: &ComparisonTable) -> Result<(), CliError> {
    let mut csv = Vec::new();
    table.write_csv(&mut csv).map_err(CliError::runtime)?;
    write_file(&dir.join(format!("{stem}.csv")), &csv)?;
    write_json(&dir.join(format!("{stem}.json")), table)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<RunReport>,
    pub summary: BatterySummary,
}

/// Runs the battery and writes `run_NNN.json` per run plus `summary.csv`
/// and `summary.json` into `config.output`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let data = prepare(config)?;
    let reports = run_battery(config, &data)?;
    create_dir(&config.output)?;
    for (r, report) in reports.iter().enumerate() {
        write_json(&report_path(&config.output, r), report)?;
    }
    let summary = summarize(&reports).map_err(CliError::runtime)?;
    let table = ComparisonTable::build(vec![summary.clone()]).map_err(CliError::runtime)?;
    write_table(&config.output, "summary", &table)?;
    Ok(RunOutcome { reports, summary })
}

/// Reads every `run_*.json` in `dir`, in file name order.
pub fn read_battery(dir: &Path) -> Result<Vec<RunReport>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("run_") && name.ends_with(".json")
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::runtime(format!("{}: no run_*.json reports", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Summarizes each battery directory and t-tests every pair; writes
/// `comparison.csv` and `comparison.json` into `out`.
pub fn cmd_compare(dirs: &[PathBuf], out: &Path) -> Result<ComparisonTable, CliError> {
    if dirs.is_empty() {
        return Err(CliError::Config("compare needs at least one battery directory".into()));
    }
    let batteries = dirs.iter().map(|d| read_battery(d)).collect::<Result<Vec<_>, _>>()?;
    let dataset_of = |runs: &[RunReport]| runs[0].dataset.as_ref().map(|d| d.sha256.clone());
    for (dir, runs) in dirs.iter().zip(&batteries).skip(1) {
        if runs.len() != batteries[0].len() {
            return Err(CliError::runtime(format!(
                "{} holds {} runs, {} holds {}",
                dir.display(),
                runs.len(),
                dirs[0].display(),
                batteries[0].len()
            )));
        }
        if dataset_of(runs) != dataset_of(&batteries[0]) {
            return Err(CliError::runtime(format!(
                "{} was run on a different dataset than {}",
                dir.display(),
                dirs[0].display()
            )));
        }
    }
    let summaries = dirs
        .iter()
        .zip(&batteries)
        .map(|(dir, runs)| summarize(runs).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    let table = ComparisonTable::build(summaries).map_err(CliError::runtime)?;
    create_dir(out)?;
    write_table(out, "comparison", &table)?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub threads: usize,
    pub seconds: f64,
    pub speedup: f64,
}

/// Runs the first battery run once per thread count and reports speedup
/// against the single-threaded run. Fails if results differ.
pub fn cmd_bench(config: &ExperimentConfig, thread_counts: &[usize], out: &Path) -> Result<Vec<BenchRow>, CliError> {
    if !thread_counts.contains(&1) {
        return Err(CliError::Config("thread counts must include 1".into()));
    }
    if thread_counts.contains(&0) {
        return Err(CliError::Config("thread counts must be positive".into()));
    }
    let data = prepare(config)?;
    let mut measured = Vec::new();
    let mut reference: Option<RunReport> = None;
    for &threads in thread_counts {
        let cfg = ExperimentConfig {
            threads: Some(threads),
            ..config.clone()
        };
        let report = run_one(&cfg, &data, 0)?;
        let seconds = report.timings.total;
        let stripped = report.without_timings();
        match &reference {
            Some(r) if *r != stripped => {
                return Err(CliError::runtime(format!("results at {threads} threads differ from the first run")));
            }
            Some(_) => {}
            None => reference = Some(stripped),
        }
        measured.push((threads, seconds));
    }
    let sequential = measured.iter().find(|(t, _)| *t == 1).map(|&(_, s)| s).expect("1 is present");
    let rows = measured
        .into_iter()
        .map(|(threads, seconds)| {
            Ok(BenchRow {
                threads,
                seconds,
                speedup: speedup(sequential, seconds).map_err(CliError::runtime)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    create_dir(out)?;
    let mut csv = String::from("threads,seconds,speedup\n");
    for row in &rows {
        csv.push_str(&format!("{},{},{}\n", row.threads, row.seconds, format_speedup(row.speedup)));
    }
    write_file(&out.join("speedup.csv"), csv.as_bytes())?;
    write_json(&out.join("speedup.json"), &rows)?;
    Ok(rows)
}

/// `data.csv` becomes `data.informative.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("informative.json")
}

/// Writes the dataset as CSV to `out` and the informative indices next to it.
pub fn cmd_synth(spec: &SyntheticSpec, out: &Path) -> Result<Sidecar, CliError> {
    spec.validate()
        .map_err(|(field, message)| CliError::Config(format!("{field}: {message}")))?;
    let synthetic = generate(spec);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut bytes = Vec::new();
    write_csv(&synthetic.dataset, &mut bytes).map_err(CliError::runtime)?;
    write_file(out, &bytes)?;
    let sidecar = Sidecar {
        spec: spec.clone(),
        informative: synthetic.informative,
        weights: synthetic.weights,
    };
    write_json(&sidecar_path(out), &sidecar)?;
    Ok(sidecar)
}
