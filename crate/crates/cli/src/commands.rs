use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use tng_core::cluster::run_experiment_with;
use tng_core::config::{ExperimentConfig, ProblemConfig, RunManifest};
use tng_core::plot::{render_svg, Series, XAxis};
use tng_core::problems::Problem;
use tng_core::trace::{format_float, read_trace, rows_from_logs, write_trace};
use tng_core::{Error, Result};

pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_COLUMNS: [&str; 7] = [
    "cell",
    "seed",
    "run_dir",
    "rounds",
    "cumulative_bits",
    "objective",
    "suboptimality",
];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Decode(format!("{other:?}")),
    }
}

struct RunSummary {
    rounds: usize,
    cumulative_bits: u64,
    objective: Option<f64>,
    suboptimality: Option<f64>,
}

/// Runs `config` and writes its trace and manifest into `dir`.
fn execute(config: &ExperimentConfig, problem: Arc<Problem>, dir: &Path) -> Result<RunSummary> {
    let run = run_experiment_with(config, problem)?;
    fs::create_dir_all(dir)?;
    let rows = rows_from_logs(&config.display_label(), &run.logs);
    let mut trace = BufWriter::new(File::create(dir.join(TRACE_FILE))?);
    write_trace(&mut trace, &rows)?;
    trace.flush()?;
    let manifest = serde_json::to_string_pretty(&RunManifest::new(config)).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
    let last = run.logs.last();
    Ok(RunSummary {
        rounds: run.logs.len(),
        cumulative_bits: last.map_or(0, |l| l.cumulative_bits),
        objective: last.map(|l| l.objective),
        suboptimality: last.and_then(|l| l.suboptimality),
    })
}

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut config = ExperimentConfig::load(config_path)?;
    if !config.grid.is_empty() {
        return Err(Error::config("grid", "a grid needs the `sweep` command"));
    }
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    let problem = config.problem.build()?;
    execute(&config, problem, out)?;
    Ok(())
}

struct Job {
    cell: usize,
    seed: u64,
    dir_name: String,
    config: ExperimentConfig,
}

pub fn sweep(config_path: &Path, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<()> {
    let base = ExperimentConfig::load(config_path)?;
    let seeds = match seed {
        Some(s) => vec![s],
        None if base.seeds.is_empty() => vec![base.master_seed],
        None => base.seeds.clone(),
    };
    if threads == Some(0) {
        return Err(Error::config("TNG_THREADS", "must be at least 1"));
    }
    // Every cell is validated (and its problem built) before any run starts.
    let cells = base.expand_grid()?;
    let mut problems: Vec<(ProblemConfig, Arc<Problem>)> = Vec::new();
    let mut cell_problem = Vec::with_capacity(cells.len());
    for cell in &cells {
        let idx = match problems.iter().position(|(p, _)| *p == cell.config.problem) {
            Some(i) => i,
            None => {
                problems.push((cell.config.problem.clone(), cell.config.problem.build()?));
                problems.len() - 1
            }
        };
        cell_problem.push(idx);
    }

    let base_label = base.display_label();
    let jobs: Vec<Job> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, cell)| {
            let base_label = &base_label;
            seeds.iter().map(move |&seed| {
                let mut config = cell.config.with_seed(seed);
                config.label = Some(format!("{base_label} {} seed={seed}", cell.id));
                Job {
                    cell: i,
                    seed,
                    dir_name: format!("cell{i:03}_seed{seed}"),
                    config,
                }
            })
        })
        .collect();

    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("TNG_THREADS", e.to_string()))?;
    let results: Vec<Result<RunSummary>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let problem = Arc::clone(&problems[cell_problem[job.cell]].1);
                execute(&job.config, problem, &out.join(&job.dir_name))
            })
            .collect()
    });

    let mut summary = csv::Writer::from_path(out.join(SUMMARY_FILE)).map_err(csv_error)?;
    summary.write_record(SUMMARY_COLUMNS).map_err(csv_error)?;
    for (job, result) in jobs.iter().zip(results) {
        let s = result?;
        summary
            .write_record([
                cells[job.cell].id.clone(),
                job.seed.to_string(),
                job.dir_name.clone(),
                s.rounds.to_string(),
                s.cumulative_bits.to_string(),
                s.objective.map(format_float).unwrap_or_default(),
                s.suboptimality.map(format_float).unwrap_or_default(),
            ])
            .map_err(csv_error)?;
    }
    summary.flush()?;
    Ok(())
}

/// The manifest label next to a trace, else the trace's own run id.
fn series_label(path: &Path, run_id: &str) -> String {
    let manifest = path.parent().map(|d| d.join(MANIFEST_FILE)).filter(|p| p.is_file());
    manifest
        .and_then(|p| fs::read_to_string(p).ok())
        .and_then(|text| serde_json::from_str::<RunManifest>(&text).ok())
        .map(|m| m.label)
        .unwrap_or_else(|| run_id.to_string())
}

pub fn plot(traces: &[PathBuf], out: &Path, x_axis: XAxis) -> Result<()> {
    let mut series = Vec::with_capacity(traces.len());
    for path in traces {
        let rows = read_trace(File::open(path)?).map_err(|e| match e {
            Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        series.push(Series::from_trace(series_label(path, &rows[0].run_id), &rows, x_axis));
    }
    fs::write(out, render_svg(&series, x_axis)?)?;
    Ok(())
}
