//! End-to-end run: preprocess, select features, construct one feature,
//! augment and score on the held-out partition.
//!
//! The held-out partition is touched only by the final evaluation; both
//! search phases see the training partition alone. Each phase's failure is
//! reported with the phase name attached.

mod config;
mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use crate::bqabc::run_bqabc;
use crate::dataset::{
    apply_norm, fit_minmax, fit_zscore, load_csv_with, stratified_split, stratified_subsample, ColumnSchema,
    Dataset, FeatureMask, MinMaxRange, NormParams, Scaling,
};
use crate::error::{Error, Result};
use crate::fitness::{FitnessProtocol, Task, WrapperFitness};
use crate::gp::{run_gp, ConstructionMode, Expr};
use crate::knn::knn_predict;
use crate::metrics::{accuracy, confusion, metrics};
use crate::seed;

pub use config::{
    DatasetConfig, FitnessConfig, OutputConfig, PipelineConfig, PreprocessConfig, Preset, TaskKind,
    NSL_KDD_CATEGORICAL, NSL_KDD_FEATURES,
};
pub use report::{
    read_metrics_mean, write_metrics_csv, write_run_outputs, Aggregate, ConstructionReport, DataSummary,
    Evaluation, MeanRow, Repetition, RunReport, Runtime, SelectionReport, Seeds, Timings, METRICS_HEADER,
};

/// Name given to the constructed column.
pub const CONSTRUCTED_NAME: &str = "constructed";

/// Applies a selection mask and a constructed feature fitted on a training
/// partition: the constructed column is min-max scaled with the range it
/// takes on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmenter {
    mask: FeatureMask,
    tree: Expr,
    range: MinMaxRange,
}

impl Augmenter {
    pub fn fit(train: &Dataset, mask: &FeatureMask, tree: &Expr) -> Result<Self> {
        let selected = train.project(mask)?;
        let column = tree.evaluate(selected.values())?;
        Ok(Augmenter {
            mask: mask.clone(),
            tree: tree.clone(),
            range: MinMaxRange::fit(&column.values),
        })
    }

    pub fn range(&self) -> MinMaxRange {
        self.range
    }

    /// Selected columns followed by the scaled constructed column, plus the
    /// number of clamped non-finite rows.
    pub fn apply(&self, data: &Dataset) -> Result<(Dataset, usize)> {
        let selected = data.project(&self.mask)?;
        let column = self.tree.evaluate(selected.values())?;
        let scaled: Vec<f64> = column.values.iter().map(|&x| self.range.scale(x)).collect();
        let out = selected.with_column(ColumnSchema::numeric(CONSTRUCTED_NAME), &scaled)?;
        Ok((out, column.clamped))
    }
}

/// Augments `data` with a constructed column scaled by its own range.
pub fn augment(data: &Dataset, mask: &FeatureMask, tree: &Expr) -> Result<Dataset> {
    Augmenter::fit(data, mask, tree)?.apply(data).map(|(d, _)| d)
}

/// Raw train and test partitions before any fitting.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub train: Dataset,
    pub test: Dataset,
    pub unseen_test_values: BTreeMap<String, usize>,
}

impl Inputs {
    pub fn new(train: Dataset, test: Dataset) -> Self {
        Inputs {
            train,
            test,
            unseen_test_values: BTreeMap::new(),
        }
    }

    /// Loads the configured files. Without a test file the training file is
    /// split with a stratified holdout keyed by `seed`.
    pub fn load(dataset: &DatasetConfig, seed: u64) -> Result<Self> {
        let opts = dataset.csv_options()?;
        let train = load_csv_with(&dataset.train, &opts, None)?.dataset;
        match &dataset.test {
            Some(test) => {
                let loaded = load_csv_with(test, &opts, Some(&train))?;
                Ok(Inputs {
                    train,
                    test: loaded.dataset,
                    unseen_test_values: loaded.unseen,
                })
            }
            None => {
                let split_seed = seed::derive(seed, &[seed::TAG_SPLIT]);
                let (train, test) = stratified_split(&train, 1.0 - dataset.test_fraction, split_seed)?;
                Ok(Inputs::new(train, test))
            }
        }
    }
}

pub fn derive_seeds(master: u64) -> Seeds {
    Seeds {
        master,
        split: seed::derive(master, &[seed::TAG_SPLIT]),
        subsample_train: seed::derive(master, &[seed::TAG_SUBSAMPLE, 0]),
        subsample_test: seed::derive(master, &[seed::TAG_SUBSAMPLE, 1]),
        fitness: seed::derive(master, &[seed::TAG_FITNESS]),
        bqabc: seed::derive(master, &[seed::TAG_BQABC]),
        gp: seed::derive(master, &[seed::TAG_GP]),
    }
}

fn shrink(data: Dataset, fraction: Option<f64>, limit: Option<usize>, seed: u64) -> Result<Dataset> {
    let mut data = match fraction {
        Some(f) if f < 1.0 => stratified_subsample(&data, f, seed)?,
        _ => data,
    };
    if let Some(limit) = limit {
        if data.n_rows() > limit {
            data = stratified_subsample(&data, limit as f64 / data.n_rows() as f64, seed::derive(seed, &[1]))?;
        }
    }
    Ok(data)
}

fn positive_class(data: &Dataset, pre: &PreprocessConfig) -> Result<u32> {
    let codes = data.label_schema().codes.as_ref();
    let wanted = match (&pre.positive_label, &pre.normal_label) {
        (Some(p), _) => Some(p.as_str()),
        (None, Some(_)) => Some("attack"),
        (None, None) => None,
    };
    match wanted {
        Some(name) => codes
            .and_then(|c| c.code(name))
            .ok_or_else(|| Error::Config(format!("positive class `{name}` is not a label value"))),
        None => Ok(1),
    }
}

fn evaluate(train: &Dataset, test: &Dataset, k: usize, positive: u32) -> Result<Evaluation> {
    let pred = knn_predict(train, test, k)?;
    let counts = confusion(&pred, test.labels(), positive)?;
    Ok(Evaluation {
        features: train.n_features(),
        confusion: counts,
        metrics: metrics(&counts),
        class_accuracy: accuracy(&pred, test.labels())?,
    })
}

/// Partitions after label handling, subsampling and scaling.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub normalization: NormParams,
    /// Class code reported as positive.
    pub positive: u32,
}

/// Binarizes (when configured), subsamples, then fits scaling on the
/// training partition and applies it to both.
pub fn preprocess(inputs: &Inputs, config: &PipelineConfig) -> Result<Prepared> {
    let pre = &config.preprocessing;
    let seeds = derive_seeds(config.seed);
    let (mut train, mut test) = (inputs.train.clone(), inputs.test.clone());
    if let Some(normal) = &pre.normal_label {
        train = train.binarize(normal)?;
        test = test.binarize(normal)?;
    }
    let train = shrink(train, pre.subsample, pre.train_limit, seeds.subsample_train)?;
    let test = shrink(test, pre.subsample, pre.test_limit, seeds.subsample_test)?;
    let normalization = match pre.normalization {
        Scaling::MinMax => fit_minmax(&train),
        Scaling::ZScore => fit_zscore(&train),
    };
    let positive = positive_class(&train, pre)?;
    Ok(Prepared {
        train: apply_norm(&train, &normalization)?,
        test: apply_norm(&test, &normalization)?,
        normalization,
        positive,
    })
}

/// Loads the configured data and runs the pipeline once.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let inputs = Inputs::load(&config.dataset, config.seed).map_err(|e| e.in_phase("load"))?;
    run_pipeline_on(&inputs, config)
}

/// Runs the pipeline on already loaded partitions. Timings exclude loading.
pub fn run_pipeline_on(inputs: &Inputs, config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let seeds = derive_seeds(config.seed);

    let Prepared {
        train,
        test,
        normalization: norm,
        positive,
    } = preprocess(inputs, config).map_err(|e| e.in_phase("preprocess"))?;
    let t_pre = start.elapsed().as_secs_f64();

    let protocol = FitnessProtocol {
        k: config.fitness.k,
        validation: config.fitness.validation,
        task: match config.fitness.task {
            TaskKind::Multiclass => Task::Multiclass,
            TaskKind::Binary => Task::Binary { positive_class: positive },
        },
        seed: seeds.fitness,
    };

    let t0 = Instant::now();
    let selection = (|| {
        let wrapper = WrapperFitness::new(&train, protocol)?;
        let cfg = crate::bqabc::BqabcConfig {
            master_seed: seeds.bqabc,
            ..config.bqabc.clone()
        };
        run_bqabc(&cfg, train.n_features(), |m: &FeatureMask| wrapper.evaluate(m))
    })()
    .map_err(|e| e.in_phase("selection"))?;
    let t_fs = t0.elapsed().as_secs_f64();
    let mask = selection.best_mask.clone();

    let t0 = Instant::now();
    let (construction, mask_only) = (|| {
        let selected = train.project(&mask)?;
        let wrapper = WrapperFitness::new(&selected, protocol)?;
        let cols: Vec<usize> = (0..selected.n_features()).collect();
        let mask_only = wrapper.evaluate_columns(&cols, None)?;
        let mode = config.gp.mode;
        let fitness = |t: &Expr| {
            let column = t.evaluate(selected.values())?;
            match mode {
                ConstructionMode::Augmented => wrapper.evaluate_columns(&cols, Some(&column.values)),
                ConstructionMode::Solo => wrapper.evaluate_columns(&[], Some(&column.values)),
            }
        };
        let cfg = crate::gp::GpConfig {
            master_seed: seeds.gp,
            ..config.gp.clone()
        };
        Ok::<_, Error>((run_gp(&cfg, selected.n_features(), fitness)?, mask_only))
    })()
    .map_err(|e| e.in_phase("construction"))?;
    let t_fc = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let k = config.fitness.k;
    let (test_eval, baseline, clamped) = (|| {
        let augmenter = Augmenter::fit(&train, &mask, &construction.best_tree)?;
        let (train_aug, c1) = augmenter.apply(&train)?;
        let (test_aug, c2) = augmenter.apply(&test)?;
        let test_eval = evaluate(&train_aug, &test_aug, k, positive)?;
        let baseline = if config.output.evaluate_baseline {
            Some(evaluate(&train, &test, k, positive)?)
        } else {
            None
        };
        Ok::<_, Error>((test_eval, baseline, c1 + c2))
    })()
    .map_err(|e| e.in_phase("evaluation"))?;
    let t_eval = t0.elapsed().as_secs_f64();

    let names = train.feature_names();
    let selected_names: Vec<&str> = mask.selected().iter().map(|&j| names[j]).collect();
    let classes = (0..train.label_schema().codes.as_ref().map_or(0, |c| c.len() as u32))
        .map(|c| train.class_name(c))
        .collect();
    let report = RunReport {
        config: config.clone(),
        seeds,
        data: DataSummary {
            train_rows: train.n_rows(),
            test_rows: test.n_rows(),
            features: train.n_features(),
            classes,
            positive_class: train.class_name(positive),
            unseen_test_values: inputs.unseen_test_values.clone(),
        },
        normalization: norm,
        selection: SelectionReport {
            count: mask.count(),
            features: selected_names.iter().map(|s| (*s).to_owned()).collect(),
            mask,
            fitness: selection.best_fitness,
            history: selection.history,
            evaluations: selection.evaluations,
            scouts: selection.scouts,
        },
        construction: ConstructionReport {
            expression_named: construction.best_tree.to_named(&selected_names),
            expression: construction.best_tree,
            fitness: construction.best_fitness,
            mask_only_fitness: mask_only,
            history: construction.history,
            generations: construction.generations,
            evaluations: construction.evaluations,
            clamped_rows: clamped,
        },
        augmented_count: test_eval.features,
        test: test_eval,
        baseline,
        runtime: Runtime {
            workers: rayon::current_num_threads(),
            seconds: Timings {
                preprocess: t_pre,
                selection: t_fs,
                construction: t_fc,
                evaluation: t_eval,
                total: start.elapsed().as_secs_f64(),
            },
        },
    };
    log::info!(
        "run seed {}: {} features + constructed, test accuracy {:.4}",
        config.seed,
        report.selection.count,
        report.test.metrics.accuracy
    );
    Ok(report)
}

/// Master seed of repetition `index` (0-based).
pub fn repetition_seed(master: u64, index: usize) -> u64 {
    seed::derive(master, &[seed::TAG_REPETITION, index as u64])
}

/// Runs `repetitions` independent runs on the same loaded data. A failed
/// repetition is recorded and the loop continues; `on_rep` sees every
/// repetition as soon as it finishes and may abort by returning an error.
pub fn run_repeated_on<F>(
    inputs: &Inputs,
    config: &PipelineConfig,
    repetitions: usize,
    mut on_rep: F,
) -> Result<(Vec<Repetition>, Aggregate)>
where
    F: FnMut(&Repetition) -> Result<()>,
{
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let mut reps = Vec::with_capacity(repetitions);
    for index in 0..repetitions {
        let seed = repetition_seed(config.seed, index);
        let cfg = PipelineConfig {
            seed,
            ..config.clone()
        };
        let rep = match run_pipeline_on(inputs, &cfg) {
            Ok(report) => Repetition {
                index,
                seed,
                report: Some(report),
                error: None,
            },
            Err(e) => {
                log::warn!("repetition {index} failed: {e}");
                Repetition {
                    index,
                    seed,
                    report: None,
                    error: Some(e.to_string()),
                }
            }
        };
        on_rep(&rep)?;
        reps.push(rep);
    }
    let aggregate = Aggregate::from_reps(&reps);
    Ok((reps, aggregate))
}

pub fn run_repeated<F>(config: &PipelineConfig, repetitions: usize, on_rep: F) -> Result<(Vec<Repetition>, Aggregate)>
where
    F: FnMut(&Repetition) -> Result<()>,
{
    config.validate()?;
    let inputs = Inputs::load(&config.dataset, config.seed).map_err(|e| e.in_phase("load"))?;
    run_repeated_on(&inputs, config, repetitions, on_rep)
}
