//! Pipeline orchestration: apply each configured transform independently to
//! each source embedding set, evaluate the suite, and materialize the
//! result grid.

pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{validate_config, PipelineConfig, SourceSpec};

use crate::affine;
use crate::cde;
use crate::embio::{load_embeddings, save_embeddings, EmbeddingSet, Format};
use crate::error::{Error, Result};
use crate::evalkit::{run_suite, SuiteRow};
use crate::nne::{self, GraphMode};
use crate::randenc::{random_encode, RandomSpec};

/// A vector-valued transform parameter: one of the two library vectors or a
/// file with one float per line.
#[derive(Debug, Clone)]
pub enum VectorParam {
    VDiag,
    VDiagNeg,
    File(PathBuf),
}

impl VectorParam {
    pub fn resolve(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            VectorParam::VDiag => Ok(affine::v_diag(dim)),
            VectorParam::VDiagNeg => Ok(affine::v_diag_neg(dim)),
            VectorParam::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let values: std::result::Result<Vec<f64>, _> =
                    text.lines().filter(|l| !l.is_empty()).map(str::parse).collect();
                let values = values.map_err(|_| {
                    Error::Data(format!("{}: cannot parse vector file", path.display()))
                })?;
                if values.len() != dim {
                    return Err(Error::DimMismatch {
                        expected: dim,
                        got: values.len(),
                    });
                }
                Ok(values)
            }
        }
    }
}

/// One transformation of the comparison grid. Unset parameters fall back to
/// the fixed preset values.
#[derive(Debug, Clone)]
pub enum TransformSpec {
    Identity,
    Translation {
        offset: Option<VectorParam>,
    },
    TranslationNull,
    Reflection {
        normal: Option<VectorParam>,
    },
    Rotation {
        u: Option<VectorParam>,
        x: Option<VectorParam>,
        theta: Option<f64>,
        raw_basis: bool,
    },
    Dilation {
        lambda: Option<f64>,
    },
    Homothety {
        center: Option<VectorParam>,
        lambda: Option<f64>,
    },
    Cde {
        anchors: Option<usize>,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
    },
    Nne {
        mode: GraphMode,
        k: usize,
        t: f64,
        walk_length: usize,
        walks_per_node: usize,
        p: f64,
        q: f64,
        window: usize,
        negatives: usize,
    },
    Random {
        scale: Option<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct NamedTransform {
    pub name: String,
    pub spec: TransformSpec,
}

impl TransformSpec {
    /// Ordering family, in decreasing geometric information retained:
    /// identity, affine, CDE, NNE, random.
    pub fn family_order(&self) -> usize {
        match self {
            TransformSpec::Identity => 0,
            TransformSpec::Translation { .. }
            | TransformSpec::TranslationNull
            | TransformSpec::Reflection { .. }
            | TransformSpec::Rotation { .. }
            | TransformSpec::Dilation { .. }
            | TransformSpec::Homothety { .. } => 1,
            TransformSpec::Cde { .. } => 2,
            TransformSpec::Nne { .. } => 3,
            TransformSpec::Random { .. } => 4,
        }
    }

    pub fn apply(&self, set: &EmbeddingSet, seed: u64) -> Result<EmbeddingSet> {
        let d = set.dim();
        match self {
            TransformSpec::Identity => Ok(set.clone()),
            TransformSpec::Translation { offset } => {
                let x = match offset {
                    Some(p) => p.resolve(d)?,
                    None => affine::v_diag(d),
                };
                affine::translate(set, &x)
            }
            TransformSpec::TranslationNull => affine::apply_preset(set, affine::Preset::TranslationNull),
            TransformSpec::Reflection { normal } => {
                let a = match normal {
                    Some(p) => p.resolve(d)?,
                    None => affine::v_diag(d),
                };
                affine::reflect(set, &a)
            }
            TransformSpec::Rotation { u, x, theta, raw_basis } => {
                let bu = match u {
                    Some(p) => p.resolve(d)?,
                    None => affine::v_diag(d),
                };
                let bx = match x {
                    Some(p) => p.resolve(d)?,
                    None => affine::v_diag_neg(d),
                };
                let theta = theta.unwrap_or(std::f64::consts::FRAC_PI_4);
                affine::rotate(set, &bu, &bx, theta, *raw_basis)
            }
            TransformSpec::Dilation { lambda } => affine::dilate(set, lambda.unwrap_or(2.0)),
            TransformSpec::Homothety { center, lambda } => {
                let a = match center {
                    Some(p) => p.resolve(d)?,
                    None => affine::v_diag(d),
                };
                affine::homothety(set, &a, lambda.unwrap_or(0.25))
            }
            TransformSpec::Cde {
                anchors,
                epochs,
                learning_rate,
                batch_size,
            } => {
                let m = anchors.unwrap_or(cde::DEFAULT_ANCHORS).min(set.len());
                let cfg = cde::TrainConfig {
                    learning_rate: *learning_rate,
                    batch_size: *batch_size,
                    epochs: *epochs,
                    seed,
                };
                cde::cde_encode(set, m, &cfg)
            }
            TransformSpec::Nne {
                mode,
                k,
                t,
                walk_length,
                walks_per_node,
                p,
                q,
                window,
                negatives,
            } => {
                let params = nne::NneParams {
                    mode: *mode,
                    k: *k,
                    t: *t,
                    walks: nne::WalkParams {
                        walk_length: *walk_length,
                        walks_per_node: *walks_per_node,
                        p: *p,
                        q: *q,
                        seed,
                    },
                    window: *window,
                    negatives: *negatives,
                    epochs: 1,
                };
                nne::nne_encode(set, &params)
            }
            TransformSpec::Random { scale } => random_encode(set, &RandomSpec { seed, scale: *scale }),
        }
    }
}

/// One row of the result grid; `error` is set for failed cells.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub source: String,
    pub transform: String,
    pub task: String,
    pub dataset: String,
    pub metric: String,
    pub value: Option<f64>,
    pub coverage: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    /// wall-clock seconds per (source, transform) cell
    pub cell_times: Vec<(String, String, f64)>,
    pub fingerprint: String,
    /// family order of each configured transform, for plot-data ordering
    transform_order: Vec<(String, usize, usize)>,
}

impl RunReport {
    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn fingerprint(config: &PipelineConfig) -> String {
    // stable FNV-1a over the resolved grid shape
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |s: &str| {
        for b in s.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for s in &config.sources {
        eat(&s.name);
        eat(&s.path.display().to_string());
    }
    for t in &config.transforms {
        eat(&t.name);
    }
    eat(&config.seed.to_string());
    format!("geomlens-{}-{h:016x}", env!("CARGO_PKG_VERSION"))
}

/// Execute the full (source x transform) grid. Each transform is applied to
/// the original source set, never chained. Per-cell failures are recorded
/// and do not abort the run.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let mut report = RunReport {
        rows: Vec::new(),
        cell_times: Vec::new(),
        fingerprint: fingerprint(config),
        transform_order: config
            .transforms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.clone(), t.spec.family_order(), i))
            .collect(),
    };
    for source in &config.sources {
        let loaded = match load_embeddings(&source.path, source.format, source.max_vocab) {
            Ok(s) => s,
            Err(e) => {
                for t in &config.transforms {
                    report.rows.push(ReportRow {
                        source: source.name.clone(),
                        transform: t.name.clone(),
                        task: "load".into(),
                        dataset: "-".into(),
                        metric: "-".into(),
                        value: None,
                        coverage: 0.0,
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };
        for t in &config.transforms {
            let started = Instant::now();
            match t.spec.apply(&loaded, config.seed) {
                Ok(transformed) => {
                    if config.keep_transformed {
                        let file = config
                            .out_dir
                            .join(format!("{}__{}.txt", source.name, t.name));
                        if let Err(e) = save_embeddings(&transformed, &file, Format::TextWithHeader) {
                            report.rows.push(ReportRow {
                                source: source.name.clone(),
                                transform: t.name.clone(),
                                task: "persist".into(),
                                dataset: "-".into(),
                                metric: "-".into(),
                                value: None,
                                coverage: 0.0,
                                error: Some(e.to_string()),
                            });
                        }
                    }
                    for row in run_suite(&transformed, &config.suite, config.seed) {
                        report.rows.push(to_report_row(&source.name, &t.name, row));
                    }
                }
                Err(e) => {
                    report.rows.push(ReportRow {
                        source: source.name.clone(),
                        transform: t.name.clone(),
                        task: "transform".into(),
                        dataset: "-".into(),
                        metric: "-".into(),
                        value: None,
                        coverage: 0.0,
                        error: Some(e.to_string()),
                    });
                }
            }
            report.cell_times.push((
                source.name.clone(),
                t.name.clone(),
                started.elapsed().as_secs_f64(),
            ));
        }
    }
    Ok(report)
}

fn to_report_row(source: &str, transform: &str, row: SuiteRow) -> ReportRow {
    ReportRow {
        source: source.into(),
        transform: transform.into(),
        task: row.task,
        dataset: row.dataset,
        metric: row.metric,
        value: row.value,
        coverage: row.coverage,
        error: row.error,
    }
}

fn format_row(r: &ReportRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        r.source,
        r.transform,
        r.task,
        r.dataset,
        r.metric,
        r.value.map(|v| format!("{v:.6}")).unwrap_or_default(),
        format_args!("{:.6}", r.coverage),
        r.error.as_deref().unwrap_or("").replace(',', ";").replace('\n', " "),
    )
}

pub const RESULTS_HEADER: &str = "source,transform,task,dataset,metric,value,coverage,error\n";
pub const PLOT_HEADER: &str = "source,transform,task,dataset,metric,value,coverage\n";

/// Write the full grid, including failed cells, in configuration order.
pub fn write_results_csv(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(RESULTS_HEADER);
    for r in &report.rows {
        out.push_str(&format_row(r));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write plot-ready long-format data, ordered by decreasing geometric
/// information (identity, affine, CDE, NNE, random) and skipping failed
/// cells.
pub fn emit_plot_data(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if report.rows.is_empty() {
        return Err(Error::InvalidArg("cannot emit plot data from an empty report".into()));
    }
    let order = |name: &str| -> (usize, usize) {
        report
            .transform_order
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|&(_, fam, idx)| (fam, idx))
            .unwrap_or((usize::MAX, usize::MAX))
    };
    let mut rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.error.is_none()).collect();
    rows.sort_by(|a, b| {
        order(&a.transform)
            .cmp(&order(&b.transform))
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.task.cmp(&b.task))
            .then_with(|| a.dataset.cmp(&b.dataset))
    });
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(PLOT_HEADER.as_bytes()).map_err(|e| Error::io(path, e))?;
    for r in rows {
        let line = format!(
            "{},{},{},{},{},{},{:.6}\n",
            r.source,
            r.transform,
            r.task,
            r.dataset,
            r.metric,
            r.value.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.coverage
        );
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
