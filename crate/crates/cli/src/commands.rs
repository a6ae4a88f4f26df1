use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fsfc_core::dataset::write_csv;
use fsfc_core::pipeline::{
    preprocess, read_metrics_mean, run_pipeline, run_repeated, write_metrics_csv, write_run_outputs, Aggregate,
    Inputs, Repetition, RunReport,
};
use fsfc_core::stats::{comparison_table, read_baselines, BaselineRecord, Measure, Sidedness};
use fsfc_core::Error;

use crate::config::{create_dir, guard, write_file, RunArgs};

const RUN_FILES: [&str; 4] = ["report.json", "mask.txt", "feature.sexp", "norm-params.json"];

pub fn prep(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.effective()?;
    let dir = args.out_dir(&cfg);
    guard(&dir, &["train.csv", "test.csv", "norm-params.json"], args.force)?;
    let inputs = Inputs::load(&cfg.dataset, cfg.seed).map_err(|e| e.in_phase("load"))?;
    let prepared = preprocess(&inputs, &cfg).map_err(|e| e.in_phase("preprocess"))?;
    create_dir(&dir)?;
    write_csv(&prepared.train, dir.join("train.csv"))?;
    write_csv(&prepared.test, dir.join("test.csv"))?;
    write_file(&dir.join("norm-params.json"), &(prepared.normalization.to_json() + "\n"))?;
    println!(
        "wrote {} train and {} test rows with {} features to {}",
        prepared.train.n_rows(),
        prepared.test.n_rows(),
        prepared.train.n_features(),
        dir.display()
    );
    Ok(())
}

fn summary_line(r: &RunReport) -> String {
    format!(
        "{} selected + constructed {} | accuracy {:.4} sensitivity {:.4} specificity {:.4} fpr {:.4} | {:.2}s",
        r.selection.count,
        r.construction.expression_named,
        r.test.metrics.accuracy,
        r.test.metrics.sensitivity,
        r.test.metrics.specificity,
        r.test.metrics.fpr,
        r.runtime.seconds.total
    )
}

pub fn run(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.effective()?;
    let dir = args.out_dir(&cfg);
    guard(&dir, &RUN_FILES, args.force)?;
    let report = run_pipeline(&cfg)?;
    write_run_outputs(&report, &dir)?;
    println!("{}", summary_line(&report));
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of repetitions.
    #[arg(long, default_value_t = 30)]
    pub reps: usize,
}

fn rep_dir(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("rep-{:03}", index + 1))
}

pub fn benchmark(args: &BenchmarkArgs) -> anyhow::Result<()> {
    let cfg = args.run.effective()?;
    let dir = args.run.out_dir(&cfg);
    guard(&dir, &["metrics.csv", "aggregate.json"], args.run.force)?;
    create_dir(&dir)?;
    let mut done: Vec<Repetition> = Vec::new();
    // Every repetition is on disk (and reflected in metrics.csv) before the
    // next one starts.
    let (reps, aggregate) = run_repeated(&cfg, args.reps, |rep| {
        let rdir = rep_dir(&dir, rep.index);
        match &rep.report {
            Some(report) => {
                write_run_outputs(report, &rdir)?;
                println!("rep {}/{}: {}", rep.index + 1, args.reps, summary_line(report));
            }
            None => {
                fs::create_dir_all(&rdir).map_err(|source| Error::Io {
                    path: rdir.clone(),
                    source,
                })?;
                let msg = rep.error.clone().unwrap_or_default();
                fs::write(rdir.join("error.txt"), format!("{msg}\n")).map_err(|source| Error::Io {
                    path: rdir.join("error.txt"),
                    source,
                })?;
                println!("rep {}/{}: failed: {msg}", rep.index + 1, args.reps);
            }
        }
        done.push(rep.clone());
        write_metrics_csv(&done, &Aggregate::from_reps(&done), &dir.join("metrics.csv"))
    })?;
    write_metrics_csv(&reps, &aggregate, &dir.join("metrics.csv"))?;
    let json = serde_json::to_string_pretty(&aggregate)?;
    write_file(&dir.join("aggregate.json"), &(json + "\n"))?;
    println!(
        "mean over {} runs ({} failed): {:.2} features, accuracy {:.4} sensitivity {:.4} specificity {:.4} fpr {:.4}",
        aggregate.runs,
        aggregate.failed,
        aggregate.selected_features,
        aggregate.accuracy,
        aggregate.sensitivity,
        aggregate.specificity,
        aggregate.fpr
    );
    if aggregate.runs == 0 {
        return Err(Error::InvalidArgument("every repetition failed".into()).into());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeasureArg {
    Accuracy,
    Sensitivity,
    Specificity,
    Fpr,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Own results: a benchmark `metrics.csv` or a records CSV in the
    /// baselines format.
    #[arg(long, value_name = "PATH")]
    pub own: PathBuf,
    /// Baseline records CSV.
    #[arg(long, value_name = "PATH")]
    pub baselines: PathBuf,
    /// Dataset name for a `metrics.csv` given as --own.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Method name for a `metrics.csv` given as --own.
    #[arg(long, default_value = "proposed")]
    pub method: String,
    /// Datasets to pair over (default: all datasets of the own records).
    #[arg(long, value_delimiter = ',')]
    pub datasets: Vec<String>,
    /// Measures to pair over.
    #[arg(long, value_delimiter = ',', default_value = "accuracy,sensitivity,specificity,fpr")]
    pub measures: Vec<MeasureArg>,
    #[arg(long, value_enum, default_value = "one")]
    pub sidedness: SideArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Directory for comparison.csv and comparison.md.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

fn read_own(args: &StatsArgs) -> anyhow::Result<Vec<BaselineRecord>> {
    let text = fs::read_to_string(&args.own).map_err(|source| Error::Io {
        path: args.own.clone(),
        source,
    })?;
    let header = text.lines().next().unwrap_or("");
    if header.split(',').any(|h| h.trim() == "status") {
        let dataset = args
            .dataset
            .clone()
            .ok_or_else(|| Error::Config("--dataset is required when --own is a metrics.csv".into()))?;
        let m = read_metrics_mean(&args.own)?;
        return Ok(vec![BaselineRecord {
            method: args.method.clone(),
            dataset,
            features: m.selected,
            accuracy: m.accuracy,
            sensitivity: m.sensitivity,
            specificity: m.specificity,
            fpr: m.fpr,
            time_seconds: Some(m.time_seconds),
        }]);
    }
    Ok(read_baselines(&args.own)?)
}

pub fn stats(args: &StatsArgs) -> anyhow::Result<()> {
    let own = read_own(args)?;
    let baselines = read_baselines(&args.baselines)?;
    let mut datasets: Vec<String> = args.datasets.clone();
    if datasets.is_empty() {
        for r in &own {
            if !datasets.contains(&r.dataset) {
                datasets.push(r.dataset.clone());
            }
        }
    }
    let datasets: Vec<&str> = datasets.iter().map(String::as_str).collect();
    let measures: Vec<Measure> = args
        .measures
        .iter()
        .map(|m| match m {
            MeasureArg::Accuracy => Measure::Accuracy,
            MeasureArg::Sensitivity => Measure::Sensitivity,
            MeasureArg::Specificity => Measure::Specificity,
            MeasureArg::Fpr => Measure::Fpr,
        })
        .collect();
    let sidedness = match args.sidedness {
        SideArg::One => Sidedness::One,
        SideArg::Two => Sidedness::Two,
    };
    let table = comparison_table(&own, &baselines, &datasets, &measures, sidedness, args.alpha)?;
    let md = table.to_markdown();
    print!("{md}");
    let rejected = table.rows.iter().filter(|r| r.rejected).count();
    println!("\n{rejected} of {} baselines rejected at alpha = {}", table.rows.len(), args.alpha);
    if let Some(dir) = &args.out {
        guard(dir, &["comparison.csv", "comparison.md"], args.force)?;
        create_dir(dir)?;
        table.write_csv(dir.join("comparison.csv"))?;
        write_file(&dir.join("comparison.md"), &md)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// A run directory, a benchmark directory or a report.json file.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Write the summary here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

fn read_report(path: &Path) -> anyhow::Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(RunReport::from_json(&text)?)
}

fn run_summary(r: &RunReport) -> String {
    let mut s = String::new();
    let m = &r.test.metrics;
    let _ = writeln!(s, "# Run (seed {})\n", r.seeds.master);
    let _ = writeln!(
        s,
        "- data: {} train / {} test rows, {} features",
        r.data.train_rows, r.data.test_rows, r.data.features
    );
    let _ = writeln!(s, "- selected ({}): {}", r.selection.count, r.selection.features.join(", "));
    let _ = writeln!(s, "- constructed: `{}`", r.construction.expression_named);
    let _ = writeln!(
        s,
        "- internal fitness: selection {:.4}, construction {:.4} (mask only {:.4})\n",
        r.selection.fitness, r.construction.fitness, r.construction.mask_only_fitness
    );
    let _ = writeln!(s, "| | Features | Accuracy | Sensitivity | Specificity | FPR |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    let _ = writeln!(
        s,
        "| augmented | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
        r.augmented_count, m.accuracy, m.sensitivity, m.specificity, m.fpr
    );
    if let Some(b) = &r.baseline {
        let bm = &b.metrics;
        let _ = writeln!(
            s,
            "| all features | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            b.features, bm.accuracy, bm.sensitivity, bm.specificity, bm.fpr
        );
    }
    let t = r.runtime.seconds;
    let _ = writeln!(
        s,
        "\nTime (s): preprocess {:.3}, selection {:.3}, construction {:.3}, evaluation {:.3}, total {:.3}",
        t.preprocess, t.selection, t.construction, t.evaluation, t.total
    );
    s
}

fn benchmark_summary(dir: &Path) -> anyhow::Result<String> {
    let path = dir.join("aggregate.json");
    let text = fs::read_to_string(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
    let a: Aggregate = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut s = String::new();
    let _ = writeln!(s, "# Benchmark ({} runs, {} failed)\n", a.runs, a.failed);
    let _ = writeln!(s, "| Features | Augmented | Accuracy | Sensitivity | Specificity | FPR | Time (s) |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    let _ = writeln!(
        s,
        "| {:.2} | {:.2} | {:.4} | {:.4} | {:.4} | {:.4} | {:.2} |",
        a.selected_features, a.augmented_features, a.accuracy, a.sensitivity, a.specificity, a.fpr, a.total_seconds
    );
    if let Some(b) = a.baseline_accuracy {
        let _ = writeln!(s, "\nAll-features KNN accuracy: {b:.4}");
    }
    Ok(s)
}

pub fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let input = &args.input;
    let text = if input.is_dir() {
        if input.join("aggregate.json").exists() {
            benchmark_summary(input)?
        } else {
            run_summary(&read_report(&input.join("report.json"))?)
        }
    } else {
        run_summary(&read_report(input)?)
    };
    match &args.out {
        Some(path) => {
            if path.exists() && !args.force {
                return Err(Error::Config(format!("{} already exists; pass --force to overwrite", path.display())).into());
            }
            write_file(path, &text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
