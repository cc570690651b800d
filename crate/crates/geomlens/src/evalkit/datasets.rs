//! TSV dataset loaders for the three evaluation task families.
//!
//! similarity:     word1 <TAB> word2 <TAB> gold_score
//! categorization: word <TAB> category
//! sentences:      label <TAB> token token ...

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone)]
pub struct CategorizationDataset {
    pub name: String,
    pub items: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct SentenceDataset {
    pub name: String,
    pub examples: Vec<(Vec<String>, u8)>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn load_similarity(path: impl AsRef<Path>) -> Result<SimilarityDataset> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let score: f64 = fields[2].parse().map_err(|_| Error::FormatLine {
            path: path.into(),
            line: lineno + 1,
            detail: format!("cannot parse score '{}'", fields[2]),
        })?;
        if !score.is_finite() {
            return Err(Error::Data(format!("non-finite gold score at line {}", lineno + 1)));
        }
        pairs.push((fields[0].to_string(), fields[1].to_string(), score));
    }
    if pairs.len() < 2 {
        return Err(Error::Data(format!("{}: need at least 2 pairs", path.display())));
    }
    Ok(SimilarityDataset {
        name: dataset_name(path),
        pairs,
    })
}

pub fn load_categorization(path: impl AsRef<Path>) -> Result<CategorizationDataset> {
    let path = path.as_ref();
    let mut items = Vec::new();
    let mut words = HashSet::new();
    let mut cats = HashSet::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: format!("expected 2 tab-separated fields, got {}", fields.len()),
            });
        }
        if !words.insert(fields[0].to_string()) {
            return Err(Error::Data(format!("duplicate word '{}' at line {}", fields[0], lineno + 1)));
        }
        cats.insert(fields[1].to_string());
        items.push((fields[0].to_string(), fields[1].to_string()));
    }
    if cats.len() < 2 {
        return Err(Error::Data(format!("{}: need at least 2 categories", path.display())));
    }
    Ok(CategorizationDataset {
        name: dataset_name(path),
        items,
    })
}

/// Sentences are split train/test deterministically: every 5th example is
/// held out, the rest train.
pub fn load_sentences(path: impl AsRef<Path>) -> Result<SentenceDataset> {
    let path = path.as_ref();
    let mut examples = Vec::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, rest) = line.split_once('\t').ok_or_else(|| Error::FormatLine {
            path: path.into(),
            line: lineno + 1,
            detail: "expected 'label<TAB>tokens'".into(),
        })?;
        let label: u8 = match label {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::FormatLine {
                    path: path.into(),
                    line: lineno + 1,
                    detail: format!("label must be 0 or 1, got '{other}'"),
                })
            }
        };
        let tokens: Vec<String> = rest.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: "sentence has no tokens".into(),
            });
        }
        examples.push((tokens, label));
    }
    let test: Vec<usize> = (0..examples.len()).filter(|i| i % 5 == 4).collect();
    let train: Vec<usize> = (0..examples.len()).filter(|i| i % 5 != 4).collect();
    let both = train
        .iter()
        .map(|&i| examples[i].1)
        .fold((false, false), |acc, l| (acc.0 || l == 0, acc.1 || l == 1));
    if !(both.0 && both.1) {
        return Err(Error::Data(format!(
            "{}: train split must contain both labels",
            path.display()
        )));
    }
    Ok(SentenceDataset {
        name: dataset_name(path),
        examples,
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        p
    }

    #[test]
    fn similarity_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "sim.tsv", "cat\tdog\t7.5\nsun\tmoon\t4.2\n");
        let ds = load_similarity(&p).unwrap();
        assert_eq!(ds.pairs.len(), 2);
        assert_eq!(ds.pairs[0], ("cat".into(), "dog".into(), 7.5));
        assert_eq!(ds.name, "sim");
    }

    #[test]
    fn similarity_too_few_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "sim.tsv", "cat\tdog\t7.5\n");
        assert!(load_similarity(&p).is_err());
    }

    #[test]
    fn categorization_duplicates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "cat.tsv", "apple\tfruit\napple\tfruit\n");
        assert!(load_categorization(&p).is_err());
    }

    #[test]
    fn categorization_needs_two_categories() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "cat.tsv", "apple\tfruit\npear\tfruit\n");
        assert!(load_categorization(&p).is_err());
        let p2 = write(&dir, "cat2.tsv", "apple\tfruit\ndog\tanimal\n");
        assert!(load_categorization(&p2).is_ok());
    }

    #[test]
    fn sentences_split_disjoint() {
        let dir = tempfile::tempdir().unwrap();
        let mut content = String::new();
        for i in 0..20 {
            content.push_str(&format!("{}\ttok{} tok{}\n", i % 2, i, i + 1));
        }
        let p = write(&dir, "sent.tsv", &content);
        let ds = load_sentences(&p).unwrap();
        assert_eq!(ds.train.len() + ds.test.len(), 20);
        let train: HashSet<_> = ds.train.iter().collect();
        assert!(ds.test.iter().all(|i| !train.contains(i)));
    }

    #[test]
    fn sentences_bad_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "sent.tsv", "2\thello world\n");
        assert!(load_sentences(&p).is_err());
    }
}
