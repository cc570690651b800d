//! Line-oriented key=value experiment configs.
//!
//! A config is a sequence of sections started by `[source]`, `[transform]`,
//! `[suite]` or `[run]` headers, each followed by `key = value` lines.
//! Validation reports every error it finds, not just the first.

use std::path::{Path, PathBuf};

use crate::embio::Format;
use crate::error::{Error, Result};
use crate::evalkit::SuiteManifest;
use crate::nne::GraphMode;
use crate::pipeline::{NamedTransform, TransformSpec, VectorParam};

#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub name: String,
    pub path: PathBuf,
    pub format: Format,
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub sources: Vec<SourceSpec>,
    pub transforms: Vec<NamedTransform>,
    pub suite: SuiteManifest,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub keep_transformed: bool,
}

struct Section {
    kind: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

fn parse_sections(text: &str) -> std::result::Result<Vec<Section>, Vec<String>> {
    let mut sections = Vec::new();
    let mut errors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            sections.push(Section {
                kind: name.trim().to_string(),
                line: lineno,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {lineno}: expected 'key = value' or '[section]'"));
            continue;
        };
        match sections.last_mut() {
            Some(sec) => sec
                .entries
                .push((key.trim().to_string(), value.trim().to_string(), lineno)),
            None => errors.push(format!("line {lineno}: key before any section header")),
        }
    }
    if errors.is_empty() {
        Ok(sections)
    } else {
        Err(errors)
    }
}

struct Entries<'a> {
    section: &'a Section,
    errors: Vec<String>,
}

impl<'a> Entries<'a> {
    fn new(section: &'a Section) -> Self {
        Entries {
            section,
            errors: Vec::new(),
        }
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.section
            .entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    fn all(&self, key: &str) -> Vec<&'a str> {
        self.section
            .entries
            .iter()
            .filter(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
            .collect()
    }

    fn require(&mut self, key: &str) -> Option<&'a str> {
        let v = self.get(key);
        if v.is_none() {
            self.errors.push(format!(
                "[{}] at line {}: missing required key '{key}'",
                self.section.kind, self.section.line
            ));
        }
        v
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let v = self.get(key)?;
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!(
                    "[{}] at line {}: cannot parse {key}='{v}'",
                    self.section.kind, self.section.line
                ));
                None
            }
        }
    }
}

fn parse_vector_param(value: &str, base: &Path) -> VectorParam {
    match value {
        "v_diag" => VectorParam::VDiag,
        "v_diagNeg" | "v_diag_neg" => VectorParam::VDiagNeg,
        path => VectorParam::File(resolve(base, path)),
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_transform(e: &mut Entries, base: &Path) -> Option<TransformSpec> {
    let op = e.require("op")?;
    let spec = match op {
        "identity" => TransformSpec::Identity,
        "translation" => TransformSpec::Translation {
            offset: e.get("vector").map(|v| parse_vector_param(v, base)),
        },
        "translation-null" => TransformSpec::TranslationNull,
        "reflection" => TransformSpec::Reflection {
            normal: e.get("vector").map(|v| parse_vector_param(v, base)),
        },
        "rotation" => TransformSpec::Rotation {
            u: e.get("vector").map(|v| parse_vector_param(v, base)),
            x: e.get("vector2").map(|v| parse_vector_param(v, base)),
            theta: e.parsed("theta"),
            raw_basis: e.get("raw-basis").map(|v| v == "true").unwrap_or(false),
        },
        "dilation" => TransformSpec::Dilation {
            lambda: e.parsed("lambda"),
        },
        "homothety" => TransformSpec::Homothety {
            center: e.get("vector").map(|v| parse_vector_param(v, base)),
            lambda: e.parsed("lambda"),
        },
        "cde" => TransformSpec::Cde {
            anchors: e.parsed("anchors"),
            epochs: e.parsed("epochs").unwrap_or(crate::cde::DEFAULT_EPOCHS),
            learning_rate: e.parsed("learning-rate").unwrap_or(1e-3),
            batch_size: e.parsed("batch-size").unwrap_or(128),
        },
        "nne" => {
            let mode: Option<GraphMode> = match e.require("mode") {
                Some(m) => match m.parse() {
                    Ok(mode) => Some(mode),
                    Err(err) => {
                        e.errors.push(format!(
                            "[transform] at line {}: {err}",
                            e.section.line
                        ));
                        None
                    }
                },
                None => None,
            };
            TransformSpec::Nne {
                mode: mode?,
                k: e.parsed("k").unwrap_or(crate::nne::DEFAULT_K),
                t: e.parsed("t").unwrap_or(crate::nne::DEFAULT_T),
                walk_length: e.parsed("walk-length").unwrap_or(crate::nne::walks::DEFAULT_WALK_LENGTH),
                walks_per_node: e.parsed("walks-per-node").unwrap_or(crate::nne::walks::DEFAULT_WALKS_PER_NODE),
                p: e.parsed("p").unwrap_or(1.0),
                q: e.parsed("q").unwrap_or(1.0),
                window: e.parsed("window").unwrap_or(crate::nne::sgns::DEFAULT_WINDOW),
                negatives: e.parsed("negatives").unwrap_or(crate::nne::sgns::DEFAULT_NEGATIVES),
            }
        }
        "random" => TransformSpec::Random {
            scale: e.parsed("scale"),
        },
        other => {
            e.errors.push(format!(
                "[transform] at line {}: unknown op '{other}'",
                e.section.line
            ));
            return None;
        }
    };
    Some(spec)
}

/// Parse and fully validate a config file, reporting every error found.
pub fn validate_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sections = parse_sections(&text).map_err(Error::Config)?;

    let mut errors: Vec<String> = Vec::new();
    let mut sources: Vec<SourceSpec> = Vec::new();
    let mut transforms: Vec<NamedTransform> = Vec::new();
    let mut suite = SuiteManifest::default();
    let mut seed: Option<u64> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut keep_transformed = false;

    for section in &sections {
        match section.kind.as_str() {
            "source" => {
                let mut e = Entries::new(section);
                let name = e.require("name").map(str::to_owned);
                let file = e.require("path").map(|p| resolve(&base, p));
                let format: Option<Format> = e.require("format").and_then(|f| match f.parse() {
                    Ok(f) => Some(f),
                    Err(err) => {
                        e.errors.push(format!("[source] at line {}: {err}", section.line));
                        None
                    }
                });
                let max_vocab: Option<usize> = e.parsed("max_vocab");
                errors.extend(e.errors);
                if let (Some(name), Some(file), Some(format)) = (name, file, format) {
                    if !file.exists() {
                        errors.push(format!(
                            "[source] '{name}': embedding file {} does not exist",
                            file.display()
                        ));
                    }
                    sources.push(SourceSpec {
                        name,
                        path: file,
                        format,
                        max_vocab,
                    });
                }
            }
            "transform" => {
                let mut e = Entries::new(section);
                let name = e.require("name").map(str::to_owned);
                let spec = parse_transform(&mut e, &base);
                errors.extend(e.errors);
                if let (Some(name), Some(spec)) = (name, spec) {
                    transforms.push(NamedTransform { name, spec });
                }
            }
            "suite" => {
                let e = Entries::new(section);
                if let Some(m) = e.get("manifest") {
                    match SuiteManifest::load(resolve(&base, m)) {
                        Ok(loaded) => {
                            suite.similarity.extend(loaded.similarity);
                            suite.categorization.extend(loaded.categorization);
                            suite.sentences.extend(loaded.sentences);
                        }
                        Err(err) => errors.push(format!("[suite]: {err}")),
                    }
                }
                for p in e.all("similarity") {
                    suite.similarity.push(resolve(&base, p));
                }
                for p in e.all("categorization") {
                    suite.categorization.push(resolve(&base, p));
                }
                for p in e.all("sentences") {
                    suite.sentences.push(resolve(&base, p));
                }
            }
            "run" => {
                let mut e = Entries::new(section);
                seed = e.parsed("seed");
                if seed.is_none() {
                    e.errors.push(format!(
                        "[run] at line {}: a seed is required",
                        section.line
                    ));
                }
                out_dir = e.get("out_dir").map(|p| resolve(&base, p));
                keep_transformed = e.get("keep_transformed").map(|v| v == "true").unwrap_or(false);
                errors.extend(e.errors);
            }
            other => errors.push(format!(
                "line {}: unknown section '[{other}]'",
                section.line
            )),
        }
    }

    // cross-cutting checks
    if sources.is_empty() {
        errors.push("config declares no [source] section".into());
    }
    if transforms.is_empty() {
        errors.push("config declares no [transform] section".into());
    }
    for (label, names) in [
        ("source", sources.iter().map(|s| s.name.clone()).collect::<Vec<_>>()),
        ("transform", transforms.iter().map(|t| t.name.clone()).collect()),
    ] {
        let mut seen = std::collections::HashMap::new();
        for n in &names {
            *seen.entry(n.clone()).or_insert(0usize) += 1;
        }
        for (n, c) in seen {
            if c > 1 {
                errors.push(format!("{label} name '{n}' used {c} times; names must be unique"));
            }
        }
    }
    for p in suite
        .similarity
        .iter()
        .chain(&suite.categorization)
        .chain(&suite.sentences)
    {
        if !p.exists() {
            errors.push(format!("suite dataset {} does not exist", p.display()));
        }
    }
    if seed.is_none() && errors.is_empty() {
        errors.push("config declares no [run] section with a seed".into());
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(PipelineConfig {
        sources,
        transforms,
        suite,
        seed: seed.unwrap_or(0),
        out_dir: out_dir.unwrap_or_else(|| base.join("out")),
        keep_transformed,
    })
}
