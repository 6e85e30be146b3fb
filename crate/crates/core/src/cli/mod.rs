//! File formats and the `simulate`, `fit` and `evaluate` commands.

mod args;
mod io;
mod simulate;

pub use args::{Cli, Command, EvaluateArgs, FitArgs, SimulateArgs};
pub use io::{ingest_csv, read_labels, write_dataset_csv, Dataset};
pub use simulate::{sim13_preset, simulate, SimComponent, SimulationSpec};

use crate::aecm::FitConfig;
use crate::error::{Error, Result};
use crate::model::ConstraintId;
use crate::selection::{adjusted_rand_index, confusion_table, grid_search, GridSpec};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Everything needed to rerun a command and get the same files back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub input: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub columns: Vec<String>,
    pub label_column: Option<String>,
    pub grid: Option<GridSpec>,
    pub simulation: Option<SimulationSpec>,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            input: None,
            truth: None,
            columns: Vec::new(),
            label_column: None,
            grid: None,
            simulation: None,
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

/// Run a parsed command line; stdout receives the human-readable summary.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Fit(a) => cmd_fit(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Data(format!("cannot create output directory {}: {e}", dir.display())))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = match (&args.preset, &args.params) {
        (Some(_), Some(_)) => return Err(Error::Usage("give either --preset or --params, not both".into())),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Data(format!("cannot read parameter file {}: {e}", path.display())))?;
            serde_json::from_str::<SimulationSpec>(&text)?
        }
        (Some(name), None) if name == "sim13" => sim13_preset(),
        (Some(name), None) => return Err(Error::Usage(format!("unknown preset '{name}' (available: sim13)"))),
        (None, None) => sim13_preset(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (dataset, labels) = simulate(&spec)?;
    create_dir(&args.out_dir)?;
    let data_path = args.out_dir.join("data.csv");
    let label_path = args.out_dir.join("labels.csv");
    write_dataset_csv(&data_path, &dataset)?;
    let mut w = csv::Writer::from_path(&label_path)?;
    w.write_record(["label"])?;
    for l in &labels {
        w.write_record([l.to_string()])?;
    }
    w.flush()?;
    let mut manifest = RunManifest::new("simulate", spec.seed);
    manifest.columns = dataset.column_names.clone();
    manifest.simulation = Some(spec);
    manifest.outputs = vec![data_path.clone(), label_path.clone()];
    manifest.write(&args.out_dir)?;
    writeln!(
        out,
        "wrote {} rows x {} columns to {} and labels to {}",
        dataset.values.nrows(),
        dataset.values.ncols(),
        data_path.display(),
        label_path.display()
    )?;
    Ok(())
}

/// Parse a `--models` value: a comma list of identifiers or `all`.
pub fn parse_models(s: &str) -> Result<Vec<ConstraintId>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ConstraintId::ALL.to_vec());
    }
    let mut out = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<ConstraintId>>>()?;
    if out.is_empty() {
        return Err(Error::Usage("--models is empty".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn range(lo: usize, hi: usize, name: &str) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo {
        return Err(Error::Usage(format!("invalid {name} range {lo}..={hi}")));
    }
    Ok((lo..=hi).collect())
}

pub fn grid_spec_from_args(args: &FitArgs) -> Result<GridSpec> {
    let config = FitConfig {
        max_iter: args.max_iter,
        aitken_tol: args.aitken_tol,
        seed: args.seed,
        ..FitConfig::default()
    };
    Ok(GridSpec {
        g_values: range(args.g_min, args.g_max, "G")?,
        q_values: range(args.q_min, args.q_max, "q")?,
        constraints: parse_models(&args.models)?,
        config,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let columns: Option<Vec<String>> = args
        .columns
        .as_ref()
        .map(|c| c.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect());
    let spec = grid_spec_from_args(args)?;
    let dataset = ingest_csv(&args.input, columns.as_deref(), args.label_column.as_deref())?;
    let result = grid_search(&dataset.values, &spec)?;
    create_dir(&args.out_dir)?;

    let table_path = args.out_dir.join("bic_table.csv");
    let mut w = csv::Writer::from_path(&table_path)?;
    w.write_record(["g", "q", "model", "rho", "bic", "loglik", "converged", "iterations", "failure"])?;
    for e in &result.entries {
        w.write_record([
            e.g.to_string(),
            e.q.to_string(),
            e.constraint.name(),
            e.rho.to_string(),
            fmt_opt(e.bic),
            fmt_opt(e.loglik),
            e.converged.to_string(),
            e.report.as_ref().map_or(0, |r| r.iterations).to_string(),
            e.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let report = result.best_report();
    let model_path = args.out_dir.join("model.json");
    fs::write(&model_path, report.model.to_json_string()? + "\n")?;

    let class_path = args.out_dir.join("classification.csv");
    let mut w = csv::Writer::from_path(&class_path)?;
    let mut header = vec!["row".to_string(), "label".to_string()];
    header.extend((1..=report.model.g).map(|k| format!("z{k}")));
    w.write_record(&header)?;
    for (i, &l) in report.hard_labels.iter().enumerate() {
        let mut rec = vec![i.to_string(), (l + 1).to_string()];
        rec.extend(report.responsibilities.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut manifest = RunManifest::new("fit", args.seed);
    manifest.input = Some(args.input.clone());
    manifest.columns = dataset.column_names.clone();
    manifest.label_column = args.label_column.clone();
    manifest.grid = Some(spec);
    manifest.outputs = vec![model_path.clone(), table_path, class_path];
    manifest.write(&args.out_dir)?;

    let best = result.best_entry();
    writeln!(
        out,
        "best model: G={} q={} {} BIC={:.2} loglik={:.2} converged={}",
        best.g,
        best.q,
        best.constraint,
        report.model.bic,
        report.model.loglik,
        report.converged
    )?;
    if let Some(labels) = &dataset.labels {
        let ari = adjusted_rand_index(labels, &report.hard_labels)?;
        writeln!(out, "ARI against {}: {ari:.3}", args.label_column.as_deref().unwrap_or("labels"))?;
    }
    writeln!(out, "wrote {}", model_path.display())?;
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let predicted = read_labels(&args.predicted, args.predicted_column.as_deref())?;
    let truth = read_labels(&args.truth, args.truth_column.as_deref())?;
    if predicted.len() != truth.len() {
        return Err(Error::Data(format!(
            "label files differ in length: {} predicted vs {} true",
            predicted.len(),
            truth.len()
        )));
    }
    let ari = adjusted_rand_index(&truth, &predicted)?;
    let table = confusion_table(&truth, &predicted)?;
    writeln!(out, "ARI: {ari:.3}")?;
    let mut lines = vec![std::iter::once("true\\pred".to_string()).chain(table.col_labels.iter().cloned()).collect::<Vec<_>>()];
    for (label, row) in table.row_labels.iter().zip(&table.counts) {
        lines.push(std::iter::once(label.clone()).chain(row.iter().map(|c| c.to_string())).collect());
    }
    for l in &lines {
        writeln!(out, "{}", l.join("\t"))?;
    }
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        let path = dir.join("confusion.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for l in &lines {
            w.write_record(l)?;
        }
        w.flush()?;
        let ari_path = dir.join("ari.csv");
        fs::write(&ari_path, format!("ari\n{ari}\n"))?;
        let mut manifest = RunManifest::new("evaluate", 0);
        manifest.input = Some(args.predicted.clone());
        manifest.truth = Some(args.truth.clone());
        manifest.label_column = args.truth_column.clone();
        manifest.outputs = vec![path, ari_path];
        manifest.write(dir)?;
    }
    Ok(())
}
