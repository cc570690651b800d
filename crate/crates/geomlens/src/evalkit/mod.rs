//! Intrinsic evaluations (word similarity, word categorization) and the
//! desk-scale extrinsic evaluation (logistic regression over summed word
//! embeddings), plus the suite runner that aggregates them.

pub mod cluster;
pub mod datasets;
pub mod logreg;
pub mod spearman;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub use datasets::{CategorizationDataset, SentenceDataset, SimilarityDataset};
pub use spearman::spearman;

use crate::embio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::cosine_similarity;

pub const DEFAULT_L2: f64 = 1e-3;

/// One evaluation outcome: task, dataset, metric, value and the fraction of
/// dataset items fully covered by the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub task: String,
    pub dataset: String,
    pub metric: String,
    pub value: f64,
    pub coverage: f64,
}

/// Word similarity: Spearman between cosine similarities and gold scores
/// over pairs with both words in vocabulary.
pub fn eval_similarity(set: &EmbeddingSet, data: &SimilarityDataset) -> Result<EvalResult> {
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    for (w1, w2, score) in &data.pairs {
        match (set.vector(w1), set.vector(w2)) {
            (Some(a), Some(b)) => {
                predicted.push(cosine_similarity(a, b));
                gold.push(*score);
            }
            _ => {}
        }
    }
    if predicted.len() < 2 {
        return Err(Error::InsufficientCoverage(format!(
            "{}: only {} of {} pairs in vocabulary",
            data.name,
            predicted.len(),
            data.pairs.len()
        )));
    }
    let rho = spearman(&predicted, &gold)?;
    Ok(EvalResult {
        task: "similarity".into(),
        dataset: data.name.clone(),
        metric: "spearman".into(),
        value: rho,
        coverage: predicted.len() as f64 / data.pairs.len() as f64,
    })
}

/// Word categorization: cluster in-vocabulary words into as many clusters
/// as gold categories with both agglomerative and k-means, report the
/// better purity of the two.
pub fn eval_categorization(set: &EmbeddingSet, data: &CategorizationDataset, seed: u64) -> Result<EvalResult> {
    let mut vectors = Vec::new();
    let mut cat_ids = HashMap::new();
    let mut labels = Vec::new();
    for (word, cat) in &data.items {
        if let Some(v) = set.vector(word) {
            vectors.extend_from_slice(v);
            let next = cat_ids.len();
            labels.push(*cat_ids.entry(cat.clone()).or_insert(next));
        }
    }
    let n = labels.len();
    let c = cat_ids.len();
    if c < 2 {
        return Err(Error::InsufficientCoverage(format!(
            "{}: fewer than 2 categories in vocabulary",
            data.name
        )));
    }
    if n < c {
        return Err(Error::InsufficientCoverage(format!(
            "{}: {n} in-vocabulary items for {c} categories",
            data.name
        )));
    }
    let dim = set.dim();
    let agg = cluster::agglomerative(&vectors, dim, c)?;
    let km = cluster::kmeans(&vectors, dim, c, cluster::KMEANS_RESTARTS, seed)?;
    let value = cluster::purity(&agg, &labels).max(cluster::purity(&km, &labels));
    Ok(EvalResult {
        task: "categorization".into(),
        dataset: data.name.clone(),
        metric: "purity".into(),
        value,
        coverage: n as f64 / data.items.len() as f64,
    })
}

/// Extrinsic task: binary classification of sentences represented as the
/// sum of their in-vocabulary word vectors, by L2-penalized logistic
/// regression. Returns test accuracy.
pub fn eval_extrinsic_logreg(set: &EmbeddingSet, data: &SentenceDataset, l2: f64, _seed: u64) -> Result<EvalResult> {
    let dim = set.dim();
    let featurize = |tokens: &[String]| -> (Vec<f64>, bool, bool) {
        let mut v = vec![0.0; dim];
        let mut any = false;
        let mut all = true;
        for tok in tokens {
            match set.vector(tok) {
                Some(row) => {
                    any = true;
                    for (o, x) in v.iter_mut().zip(row) {
                        *o += x;
                    }
                }
                None => all = false,
            }
        }
        (v, any, all)
    };
    let mut train_x = Vec::with_capacity(data.train.len() * dim);
    let mut train_y = Vec::with_capacity(data.train.len());
    let mut any_train_token = false;
    let mut covered = 0usize;
    for &i in &data.train {
        let (v, any, all) = featurize(&data.examples[i].0);
        any_train_token |= any;
        covered += all as usize;
        train_x.extend(v);
        train_y.push(data.examples[i].1);
    }
    if !any_train_token {
        return Err(Error::InsufficientCoverage(format!(
            "{}: no in-vocabulary token in the training split",
            data.name
        )));
    }
    let model = logreg::train(&train_x, dim, &train_y, l2)?;
    let mut correct = 0usize;
    for &i in &data.test {
        let (v, _, all) = featurize(&data.examples[i].0);
        covered += all as usize;
        if model.predict(&v) == data.examples[i].1 as usize {
            correct += 1;
        }
    }
    if data.test.is_empty() {
        return Err(Error::InvalidArg(format!("{}: empty test split", data.name)));
    }
    Ok(EvalResult {
        task: "extrinsic".into(),
        dataset: data.name.clone(),
        metric: "accuracy".into(),
        value: correct as f64 / data.test.len() as f64,
        coverage: covered as f64 / data.examples.len() as f64,
    })
}

/// The evaluation datasets to run, one entry per (task, file).
#[derive(Debug, Clone, Default)]
pub struct SuiteManifest {
    pub similarity: Vec<PathBuf>,
    pub categorization: Vec<PathBuf>,
    pub sentences: Vec<PathBuf>,
}

impl SuiteManifest {
    pub fn is_empty(&self) -> bool {
        self.similarity.is_empty() && self.categorization.is_empty() && self.sentences.is_empty()
    }

    /// Parse a manifest file: one "task<TAB>path" line per dataset, with
    /// task in {similarity, categorization, sentences}. Relative paths are
    /// resolved against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = SuiteManifest::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (task, file) = line.split_once('\t').ok_or_else(|| Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: "expected 'task<TAB>path'".into(),
            })?;
            let resolved = {
                let p = Path::new(file);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base.join(p)
                }
            };
            match task {
                "similarity" => manifest.similarity.push(resolved),
                "categorization" => manifest.categorization.push(resolved),
                "sentences" => manifest.sentences.push(resolved),
                other => {
                    return Err(Error::FormatLine {
                        path: path.into(),
                        line: lineno + 1,
                        detail: format!("unknown task '{other}'"),
                    })
                }
            }
        }
        Ok(manifest)
    }
}

/// A suite row: a finished evaluation or a per-task failure.
#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub task: String,
    pub dataset: String,
    pub metric: String,
    pub value: Option<f64>,
    pub coverage: f64,
    pub error: Option<String>,
}

impl SuiteRow {
    fn ok(r: EvalResult) -> Self {
        SuiteRow {
            task: r.task,
            dataset: r.dataset,
            metric: r.metric,
            value: Some(r.value),
            coverage: r.coverage,
            error: None,
        }
    }

    fn failed(task: &str, dataset: String, metric: &str, err: &Error) -> Self {
        SuiteRow {
            task: task.into(),
            dataset,
            metric: metric.into(),
            value: None,
            coverage: 0.0,
            error: Some(err.to_string()),
        }
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Run every configured evaluation; failures become failed rows instead of
/// aborting. Appends mean-intrinsic / mean-extrinsic aggregate rows over
/// the successful task values.
pub fn run_suite(set: &EmbeddingSet, manifest: &SuiteManifest, seed: u64) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for path in &manifest.similarity {
        let row = datasets::load_similarity(path)
            .and_then(|ds| eval_similarity(set, &ds))
            .map(SuiteRow::ok)
            .unwrap_or_else(|e| SuiteRow::failed("similarity", stem(path), "spearman", &e));
        rows.push(row);
    }
    for path in &manifest.categorization {
        let row = datasets::load_categorization(path)
            .and_then(|ds| eval_categorization(set, &ds, seed))
            .map(SuiteRow::ok)
            .unwrap_or_else(|e| SuiteRow::failed("categorization", stem(path), "purity", &e));
        rows.push(row);
    }
    for path in &manifest.sentences {
        let row = datasets::load_sentences(path)
            .and_then(|ds| eval_extrinsic_logreg(set, &ds, DEFAULT_L2, seed))
            .map(SuiteRow::ok)
            .unwrap_or_else(|e| SuiteRow::failed("extrinsic", stem(path), "accuracy", &e));
        rows.push(row);
    }
    append_mean_rows(&mut rows);
    rows
}

fn append_mean_rows(rows: &mut Vec<SuiteRow>) {
    let mean_of = |rows: &[SuiteRow], intrinsic: bool| -> Option<(f64, f64)> {
        let selected: Vec<&SuiteRow> = rows
            .iter()
            .filter(|r| (r.task != "extrinsic") == intrinsic && r.value.is_some())
            .collect();
        if selected.is_empty() {
            return None;
        }
        let n = selected.len() as f64;
        let value = selected.iter().map(|r| r.value.unwrap()).sum::<f64>() / n;
        let coverage = selected.iter().map(|r| r.coverage).sum::<f64>() / n;
        Some((value, coverage))
    };
    let has_intrinsic = rows.iter().any(|r| r.task == "similarity" || r.task == "categorization");
    let has_extrinsic = rows.iter().any(|r| r.task == "extrinsic");
    if has_intrinsic {
        let (value, coverage) = mean_of(rows, true).unwrap_or((f64::NAN, 0.0));
        rows.push(SuiteRow {
            task: "mean-intrinsic".into(),
            dataset: "all".into(),
            metric: "mean".into(),
            value: value.is_finite().then_some(value),
            coverage,
            error: None,
        });
    }
    if has_extrinsic {
        let (value, coverage) = mean_of(rows, false).unwrap_or((f64::NAN, 0.0));
        rows.push(SuiteRow {
            task: "mean-extrinsic".into(),
            dataset: "all".into(),
            metric: "mean".into(),
            value: value.is_finite().then_some(value),
            coverage,
            error: None,
        });
    }
}
