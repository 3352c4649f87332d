//! The four subcommands as library functions. Each returns a summary for
//! the caller to print; files are written with deterministic contents so
//! reruns overwrite outputs byte for byte.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use timbre_core::audio_io::load_wav;
use timbre_core::dataset::{
    class_index, default_class_names, load_manifest, split_by_subset, split_train_test, DatasetManifest,
    MinMaxScaler, SplitAssignment,
};
use timbre_core::features::{feature_names, FeatureExtractor, FeatureRow, FeatureTable};
use timbre_core::gbt::train;
use timbre_core::{DenseMatrix, Domain, FeatureConfig, TrainConfig, TreeEnsemble};

use crate::config::{RunConfig, SplitSource};
use crate::error::{CliError, CliResult};
use crate::report::{AblationRow, ConfusionMatrix, COMBINATIONS};

/// `<path>.<suffix>`, keeping the original file name intact.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::data(path.display(), e))
}

fn read_manifest(path: &Path) -> CliResult<DatasetManifest> {
    load_manifest(path).map_err(|e| CliError::data(path.display(), e))
}

fn thread_pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))
}

// ---------- extract ----------

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractFailure {
    pub uuid: String,
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ExtractSummary {
    pub rows: usize,
    pub failures: Vec<ExtractFailure>,
    /// Written only when some clips failed.
    pub failure_report: Option<PathBuf>,
}

/// Features for every manifest entry, in manifest order, plus the clips
/// that could not be processed.
pub fn extract_table(
    manifest: &DatasetManifest,
    features: &FeatureConfig,
    workers: Option<usize>,
) -> CliResult<(FeatureTable, Vec<ExtractFailure>)> {
    let extractor = FeatureExtractor::new(features.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let total = manifest.len();
    let done = AtomicUsize::new(0);
    let step = (total / 10).max(1);
    let results: Vec<_> = thread_pool(workers)?.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let r = load_wav(&entry.clip_path).and_then(|clip| extractor.extract(&clip));
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(step) || n == total {
                    log::info!("extracted {n}/{total} clips");
                }
                r
            })
            .collect()
    });

    let mut table = FeatureTable::new(extractor.config().feature_names());
    let mut failures = Vec::new();
    for (entry, result) in manifest.entries.iter().zip(results) {
        match result {
            Ok(v) => table
                .push(FeatureRow {
                    source_id: entry.uuid.clone(),
                    label: manifest.class_names[entry.label].clone(),
                    values: v.into_values(),
                })
                .map_err(|e| CliError::Data(e.to_string()))?,
            Err(e) => {
                log::warn!("{}: {e}", entry.clip_path.display());
                failures.push(ExtractFailure {
                    uuid: entry.uuid.clone(),
                    path: entry.clip_path.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if table.is_empty() {
        return Err(CliError::Data(format!("all {total} clips failed to extract")));
    }
    Ok((table, failures))
}

fn failures_csv(failures: &[ExtractFailure]) -> String {
    let clean = |s: &str| s.replace([',', '\n', '\r'], ";");
    let mut out = String::from("uuid,path,reason\n");
    for f in failures {
        writeln!(out, "{},{},{}", clean(&f.uuid), clean(&f.path.display().to_string()), clean(&f.reason)).unwrap();
    }
    out
}

pub fn cmd_extract(
    manifest_path: &Path,
    config: &RunConfig,
    out: &Path,
    workers: Option<usize>,
) -> CliResult<ExtractSummary> {
    let manifest = read_manifest(manifest_path)?;
    let (table, failures) = extract_table(&manifest, &config.features, workers)?;
    table.write_csv(out).map_err(|e| CliError::data(out.display(), e))?;

    let report = sidecar(out, "failures.csv");
    let failure_report = if failures.is_empty() {
        if report.exists() {
            std::fs::remove_file(&report).map_err(|e| CliError::data(report.display(), e))?;
        }
        None
    } else {
        write_file(&report, &failures_csv(&failures))?;
        Some(report)
    };
    Ok(ExtractSummary {
        rows: table.len(),
        failures,
        failure_report,
    })
}

// ---------- shared training core ----------

fn read_features(path: &Path) -> CliResult<FeatureTable> {
    FeatureTable::read_csv(path).map_err(|e| CliError::data(path.display(), e))
}

/// Class indices of every row, using the fixed instrument list.
pub fn row_labels(table: &FeatureTable) -> CliResult<(Vec<String>, Vec<usize>)> {
    let names = default_class_names();
    let labels = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            class_index(&names, &r.label)
                .ok_or_else(|| CliError::Data(format!("row {}: unknown label {:?}", i + 1, r.label)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((names, labels))
}

/// Train/test assignment over the table's rows.
pub fn make_split(
    table: &FeatureTable,
    source: SplitSource,
    seed: u64,
    ratio: f64,
    manifest: Option<&DatasetManifest>,
) -> CliResult<SplitAssignment> {
    match source {
        SplitSource::Random => {
            split_train_test(table.len(), ratio, seed).map_err(|e| CliError::Data(e.to_string()))
        }
        SplitSource::Subset => {
            let manifest = manifest
                .ok_or_else(|| CliError::Config("split = \"subset\" needs --manifest".into()))?;
            let by_uuid: HashMap<&str, Option<&str>> = manifest
                .entries
                .iter()
                .map(|e| (e.uuid.as_str(), e.subset.as_deref()))
                .collect();
            let subsets = table
                .rows
                .iter()
                .map(|r| {
                    by_uuid
                        .get(r.source_id.as_str())
                        .copied()
                        .ok_or_else(|| CliError::Data(format!("{} is not in the manifest", r.source_id)))
                })
                .collect::<CliResult<Vec<_>>>()?;
            split_by_subset(&subsets).map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: TreeEnsemble,
    pub scaler: MinMaxScaler,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_confusion: ConfusionMatrix,
}

fn predict_classes(model: &TreeEnsemble, data: &DenseMatrix) -> CliResult<Vec<usize>> {
    (0..data.rows())
        .into_par_iter()
        .map(|i| model.predict(data.row(i)).map(|p| p.class))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(e.to_string()))
}

fn accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

/// Scales with training statistics only, trains, and scores both sides.
pub fn fit_and_score(
    data: &DenseMatrix,
    labels: &[usize],
    class_names: &[String],
    split: &SplitAssignment,
    config: &TrainConfig,
) -> CliResult<FitOutcome> {
    let err = |e: timbre_core::Error| CliError::Data(e.to_string());
    let train_x = data.select_rows(&split.train_indices);
    let test_x = data.select_rows(&split.test_indices);
    let train_y: Vec<usize> = split.train_indices.iter().map(|&i| labels[i]).collect();
    let test_y: Vec<usize> = split.test_indices.iter().map(|&i| labels[i]).collect();
    let first = train_y[0];
    if train_y.iter().all(|&l| l == first) {
        return Err(CliError::Data("training data holds a single class".into()));
    }

    let scaler = MinMaxScaler::fit(&train_x).map_err(err)?;
    let train_x = scaler.transform(&train_x).map_err(err)?;
    let test_x = scaler.transform(&test_x).map_err(err)?;
    let model = train(&train_x, &train_y, class_names.len(), config).map_err(err)?;

    let train_pred = predict_classes(&model, &train_x)?;
    let test_pred = predict_classes(&model, &test_x)?;
    Ok(FitOutcome {
        train_accuracy: accuracy(&train_y, &train_pred),
        test_accuracy: accuracy(&test_y, &test_pred),
        test_confusion: ConfusionMatrix::from_predictions(class_names.to_vec(), &test_y, &test_pred),
        model,
        scaler,
    })
}

// ---------- train ----------

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub hyperparameters: Vec<(&'static str, String)>,
}

fn split_csv(table: &FeatureTable, split: &SplitAssignment) -> String {
    let mut set = vec!["train"; table.len()];
    for &i in &split.test_indices {
        set[i] = "test";
    }
    let mut out = String::from("index,source_id,set\n");
    for (i, row) in table.rows.iter().enumerate() {
        writeln!(out, "{i},{},{}", row.source_id, set[i]).unwrap();
    }
    out
}

fn read_split(path: &Path, table: &FeatureTable) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
    let mut test = Vec::new();
    let mut seen = 0;
    for (n, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || CliError::Data(format!("{} line {}: malformed split record", path.display(), n + 1));
        if fields.len() != 3 {
            return Err(bad());
        }
        let i: usize = fields[0].parse().map_err(|_| bad())?;
        if table.rows.get(i).map(|r| r.source_id.as_str()) != Some(fields[1]) {
            return Err(CliError::Data(format!(
                "feature file does not match the split record at row {i}"
            )));
        }
        match fields[2] {
            "test" => test.push(i),
            "train" => {}
            _ => return Err(bad()),
        }
        seen += 1;
    }
    if seen != table.len() {
        return Err(CliError::Data(format!(
            "split record covers {seen} rows, feature file has {}",
            table.len()
        )));
    }
    Ok(test)
}

fn metrics_text(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn cmd_train(
    features_path: &Path,
    config: &RunConfig,
    seed: u64,
    split_ratio: f64,
    model_out: &Path,
    manifest_path: Option<&Path>,
) -> CliResult<TrainSummary> {
    let table = read_features(features_path)?;
    let (names, labels) = row_labels(&table)?;
    let manifest = manifest_path.map(read_manifest).transpose()?;
    let split = make_split(&table, config.split, seed, split_ratio, manifest.as_ref())?;
    let outcome = fit_and_score(&table.to_matrix(), &labels, &names, &split, &config.train)?;

    outcome
        .model
        .save(model_out)
        .map_err(|e| CliError::data(model_out.display(), e))?;
    outcome
        .scaler
        .save(sidecar(model_out, "scaler.csv"))
        .map_err(|e| CliError::data(model_out.display(), e))?;
    write_file(&sidecar(model_out, "split.csv"), &split_csv(&table, &split))?;

    let summary = TrainSummary {
        train_accuracy: outcome.train_accuracy,
        test_accuracy: outcome.test_accuracy,
        n_train: split.train_indices.len(),
        n_test: split.test_indices.len(),
        hyperparameters: config.train.echo(),
    };
    let mut pairs = vec![
        ("train_accuracy", summary.train_accuracy.to_string()),
        ("test_accuracy", summary.test_accuracy.to_string()),
        ("n_train", summary.n_train.to_string()),
        ("n_test", summary.n_test.to_string()),
        ("split_seed", seed.to_string()),
        ("split_ratio", split_ratio.to_string()),
    ];
    pairs.extend(summary.hyperparameters.iter().cloned());
    write_file(&sidecar(model_out, "metrics.txt"), &metrics_text(&pairs))?;
    Ok(summary)
}

// ---------- evaluate ----------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalSubset {
    /// Rows held out by the split recorded at training time.
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
}

pub fn cmd_evaluate(
    model_path: &Path,
    features_path: &Path,
    subset: EvalSubset,
    report_out: &Path,
) -> CliResult<EvalSummary> {
    let model = TreeEnsemble::load(model_path).map_err(|e| CliError::data(model_path.display(), e))?;
    let scaler_path = sidecar(model_path, "scaler.csv");
    let scaler = MinMaxScaler::load(&scaler_path).map_err(|e| CliError::data(scaler_path.display(), e))?;
    let table = read_features(features_path)?;
    if table.dimension() != model.num_features || scaler.dimension() != model.num_features {
        return Err(CliError::Data(format!(
            "model expects {} features, feature file has {}",
            model.num_features,
            table.dimension()
        )));
    }
    let (names, labels) = row_labels(&table)?;
    let rows: Vec<usize> = match subset {
        EvalSubset::All => (0..table.len()).collect(),
        EvalSubset::Test => read_split(&sidecar(model_path, "split.csv"), &table)?,
    };
    if rows.is_empty() {
        return Err(CliError::Data("no rows to evaluate".into()));
    }
    let data = scaler
        .transform(&table.to_matrix().select_rows(&rows))
        .map_err(|e| CliError::Data(e.to_string()))?;
    let predicted = predict_classes(&model, &data)?;
    let truth: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    let confusion = ConfusionMatrix::from_predictions(names, &truth, &predicted);
    let accuracy = confusion.accuracy();

    write_file(report_out, &confusion.to_csv())?;
    write_file(&sidecar(report_out, "per_class.csv"), &confusion.per_class_csv())?;
    let subset_name = match subset {
        EvalSubset::Test => "test",
        EvalSubset::All => "all",
    };
    write_file(
        &sidecar(report_out, "metrics.txt"),
        &metrics_text(&[
            ("accuracy", accuracy.to_string()),
            ("n", truth.len().to_string()),
            ("subset", subset_name.to_string()),
        ]),
    )?;
    Ok(EvalSummary { confusion, accuracy })
}

// ---------- ablate ----------

#[derive(Debug, Clone)]
pub struct AblationSummary {
    pub rows: Vec<AblationRow>,
    pub failures: Vec<ExtractFailure>,
    pub split_seed: u64,
}

/// Extracts every domain once, then trains and scores each feature
/// combination on the same split with the same hyperparameters.
pub fn cmd_ablate(
    manifest_path: &Path,
    config: &RunConfig,
    seed: u64,
    split_ratio: f64,
    workers: Option<usize>,
    out: &Path,
) -> CliResult<AblationSummary> {
    let manifest = read_manifest(manifest_path)?;
    let full_config = config.features.clone().with_domains(&Domain::ALL);
    let (table, failures) = extract_table(&manifest, &full_config, workers)?;
    let (names, labels) = row_labels(&table)?;
    let split = make_split(&table, config.split, seed, split_ratio, Some(&manifest))?;

    let l = config.features.mfcc_coefficients;
    let rows: Vec<AblationRow> = COMBINATIONS
        .iter()
        .map(|combo| {
            let columns = feature_names(combo.domains, l);
            let accuracy = table
                .select_columns(&columns)
                .map_err(|e| e.to_string())
                .and_then(|sub| {
                    fit_and_score(&sub.to_matrix(), &labels, &names, &split, &config.train)
                        .map(|o| o.test_accuracy)
                        .map_err(|e| e.to_string())
                });
            match &accuracy {
                Ok(a) => log::info!("combination {}: {}", combo.id, crate::report::percent(*a)),
                Err(e) => log::warn!("combination {} failed: {e}", combo.id),
            }
            AblationRow {
                combo_id: combo.id,
                domains: combo.domains.to_vec(),
                dimension: columns.len(),
                accuracy,
            }
        })
        .collect();

    let csv = crate::report::ablation_csv(&rows, seed, split_ratio, &config.train.echo());
    write_file(out, &csv)?;
    Ok(AblationSummary {
        rows,
        failures,
        split_seed: seed,
    })
}
