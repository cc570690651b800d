//! Loading, validating and saving word-embedding sets in the three common
//! public release formats: word2vec binary, text with a count/dim header,
//! and bare text (GloVe style, dimensionality inferred from the first row).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

/// On-disk embedding file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Word2vecBinary,
    TextWithHeader,
    TextBare,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec-binary" | "binary" => Ok(Format::Word2vecBinary),
            "text-with-header" | "text" => Ok(Format::TextWithHeader),
            "text-bare" | "glove" => Ok(Format::TextBare),
            other => Err(Error::InvalidArg(format!("unknown format '{other}'"))),
        }
    }
}

/// An ordered vocabulary with a |V| x d row-major matrix of vector components.
///
/// Row order in the source file is treated as frequency rank. The set is
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Vec<f64>,
    dim: usize,
    pub name: String,
}

impl EmbeddingSet {
    /// Build a set from parallel word/row data. Duplicate words and
    /// non-finite components are rejected.
    pub fn new(name: impl Into<String>, words: Vec<String>, matrix: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArg("dimension must be >= 1".into()));
        }
        if matrix.len() != words.len() * dim {
            return Err(Error::DimMismatch {
                expected: words.len() * dim,
                got: matrix.len(),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate token '{w}'")));
            }
        }
        if let Some(bad) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite component at row {} col {}",
                bad / dim,
                bad % dim
            )));
        }
        Ok(EmbeddingSet {
            words,
            index,
            matrix,
            dim,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    /// Row index of a word, if present. Row index doubles as frequency rank.
    pub fn lookup(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.lookup(word).map(|i| self.row(i))
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks_exact(self.dim)
    }

    /// Replace the matrix, keeping the vocabulary. Shape must match.
    pub fn with_matrix(&self, name: impl Into<String>, matrix: Vec<f64>) -> Result<Self> {
        EmbeddingSet::new(name, self.words.clone(), matrix, self.dim)
    }
}

/// Count of duplicate tokens dropped during a load.
#[derive(Debug, Default, Clone, Copy)]
pub struct LoadStats {
    pub duplicates_dropped: usize,
}

/// Load an embedding file, keeping at most `max_vocab` rows in file order.
pub fn load_embeddings(path: impl AsRef<Path>, format: Format, max_vocab: Option<usize>) -> Result<EmbeddingSet> {
    load_embeddings_stats(path, format, max_vocab).map(|(s, _)| s)
}

pub fn load_embeddings_stats(
    path: impl AsRef<Path>,
    format: Format,
    max_vocab: Option<usize>,
) -> Result<(EmbeddingSet, LoadStats)> {
    let path = path.as_ref();
    if let Some(m) = max_vocab {
        if m == 0 {
            return Err(Error::InvalidArg("max_vocab must be positive".into()));
        }
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let (words, matrix, dim, stats) = match format {
        Format::Word2vecBinary => load_binary(path, &mut reader, max_vocab)?,
        Format::TextWithHeader => load_text(path, &mut reader, true, max_vocab)?,
        Format::TextBare => load_text(path, &mut reader, false, max_vocab)?,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".into());
    let set = EmbeddingSet::new(name, words, matrix, dim)?;
    Ok((set, stats))
}

fn load_binary(
    path: &Path,
    reader: &mut BufReader<File>,
    max_vocab: Option<usize>,
) -> Result<(Vec<String>, Vec<f64>, usize, LoadStats)> {
    let mut offset: u64 = 0;
    let mut header = Vec::new();
    // header: "<count> <dim>\n" in ASCII
    loop {
        let mut byte = [0u8; 1];
        reader.read_exact(&mut byte).map_err(|_| Error::Format {
            path: path.into(),
            offset,
            detail: "unexpected end of file in header".into(),
        })?;
        offset += 1;
        if byte[0] == b'\n' {
            break;
        }
        if header.len() > 64 {
            return Err(Error::Format {
                path: path.into(),
                offset,
                detail: "header line too long".into(),
            });
        }
        header.push(byte[0]);
    }
    let header = String::from_utf8(header).map_err(|_| Error::Format {
        path: path.into(),
        offset: 0,
        detail: "header is not ASCII".into(),
    })?;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| Error::Format {
            path: path.into(),
            offset: 0,
            detail: format!("malformed header '{header}'"),
        })?;
    let dim: usize = parts
        .next()
        .and_then(|p| p.parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::Format {
            path: path.into(),
            offset: 0,
            detail: format!("malformed header '{header}'"),
        })?;
    if parts.next().is_some() {
        return Err(Error::Format {
            path: path.into(),
            offset: 0,
            detail: format!("malformed header '{header}': expected '<count> <dim>'"),
        });
    }
    if let Some(m) = max_vocab {
        if m > count {
            return Err(Error::InvalidArg(format!(
                "max_vocab {m} exceeds declared vocabulary size {count}"
            )));
        }
    }
    let take = max_vocab.map_or(count, |m| m.min(count));
    let mut words = Vec::with_capacity(take);
    let mut matrix = Vec::with_capacity(take * dim);
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut stats = LoadStats::default();
    let mut loaded = 0;
    for _ in 0..count {
        if loaded >= take {
            break;
        }
        // token bytes terminated by 0x20
        let mut token = Vec::new();
        loop {
            let mut byte = [0u8; 1];
            reader.read_exact(&mut byte).map_err(|_| Error::Format {
                path: path.into(),
                offset,
                detail: "unexpected end of file in token".into(),
            })?;
            offset += 1;
            if byte[0] == b' ' {
                break;
            }
            // skip leading newlines some writers emit between records
            if byte[0] == b'\n' && token.is_empty() {
                continue;
            }
            token.push(byte[0]);
        }
        let token = String::from_utf8_lossy(&token).into_owned();
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            let v = reader.read_f32::<LittleEndian>().map_err(|_| Error::Format {
                path: path.into(),
                offset,
                detail: format!("unexpected end of file in vector for '{token}'"),
            })?;
            offset += 4;
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite value for token '{token}'")));
            }
            row.push(v as f64);
        }
        if seen.insert(token.clone(), ()).is_some() {
            stats.duplicates_dropped += 1;
            continue;
        }
        words.push(token);
        matrix.extend_from_slice(&row);
        loaded += 1;
    }
    Ok((words, matrix, dim, stats))
}

fn load_text(
    path: &Path,
    reader: &mut BufReader<File>,
    with_header: bool,
    max_vocab: Option<usize>,
) -> Result<(Vec<String>, Vec<f64>, usize, LoadStats)> {
    let mut lines = reader.lines().enumerate();
    let mut declared: Option<(usize, usize)> = None;
    if with_header {
        let (lineno, line) = lines.next().ok_or_else(|| Error::FormatLine {
            path: path.into(),
            line: 1,
            detail: "empty file".into(),
        })?;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: format!("malformed header '{line}'"),
            })?;
        let dim: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: format!("malformed header '{line}'"),
            })?;
        if parts.next().is_some() {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: "header must be '<count> <dim>'".into(),
            });
        }
        if let Some(m) = max_vocab {
            if m > count {
                return Err(Error::InvalidArg(format!(
                    "max_vocab {m} exceeds declared vocabulary size {count}"
                )));
            }
        }
        declared = Some((count, dim));
    }

    let mut dim: Option<usize> = declared.map(|(_, d)| d);
    let take = match (max_vocab, declared) {
        (Some(m), Some((c, _))) => m.min(c),
        (Some(m), None) => m,
        (None, Some((c, _))) => c,
        (None, None) => usize::MAX,
    };
    let mut words = Vec::new();
    let mut matrix = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut stats = LoadStats::default();
    for (lineno, line) in lines {
        if words.len() >= take {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let token = parts.next().unwrap().to_string();
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: "empty or whitespace-containing token".into(),
            });
        }
        let mut row = Vec::with_capacity(dim.unwrap_or(0));
        for p in parts {
            if p.is_empty() {
                continue;
            }
            let v: f64 = p.parse().map_err(|_| Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: format!("cannot parse component '{p}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite value for token '{token}'")));
            }
            row.push(v);
        }
        let d = *dim.get_or_insert(row.len());
        if d == 0 {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: "row has no components".into(),
            });
        }
        if row.len() != d {
            return Err(Error::FormatLine {
                path: path.into(),
                line: lineno + 1,
                detail: format!("row has {} components, expected {d}", row.len()),
            });
        }
        if seen.insert(token.clone(), ()).is_some() {
            stats.duplicates_dropped += 1;
            continue;
        }
        words.push(token);
        matrix.extend_from_slice(&row);
    }
    let dim = dim.ok_or_else(|| Error::FormatLine {
        path: path.into(),
        line: 1,
        detail: "no data rows".into(),
    })?;
    Ok((words, matrix, dim, stats))
}

/// Save an embedding set. Components are written as 32-bit floats (binary)
/// or with enough digits to round-trip 32-bit precision (text).
pub fn save_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    if set.is_empty() {
        return Err(Error::InvalidArg("refusing to write empty vocabulary".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        Format::Word2vecBinary => save_binary(set, &mut w),
        Format::TextWithHeader => save_text(set, &mut w, true),
        Format::TextBare => save_text(set, &mut w, false),
    };
    res.map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn save_binary(set: &EmbeddingSet, w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "{} {}\n", set.len(), set.dim())?;
    for (word, row) in set.words().iter().zip(set.rows()) {
        w.write_all(word.as_bytes())?;
        w.write_all(b" ")?;
        for &v in row {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    Ok(())
}

fn save_text(set: &EmbeddingSet, w: &mut impl Write, with_header: bool) -> std::io::Result<()> {
    if with_header {
        writeln!(w, "{} {}", set.len(), set.dim())?;
    }
    for (word, row) in set.words().iter().zip(set.rows()) {
        debug_assert!(!word.chars().any(char::is_whitespace));
        write!(w, "{word}")?;
        for &v in row {
            // shortest representation that round-trips f32
            write!(w, " {}", v as f32)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EmbeddingSet {
        EmbeddingSet::new(
            "tiny",
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0, 0.5, -0.25, 2.0, 0.0, 1.0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn minimal_text_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "2 3\na 1 0 0\nb 0 1 0\n").unwrap();
        let set = load_embeddings(&p, Format::TextWithHeader, None).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), 3);
        assert_eq!(set.vector("a").unwrap(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn bare_text_infers_dim() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        let mut f = std::fs::File::create(&p).unwrap();
        for i in 0..5 {
            write!(f, "w{i}").unwrap();
            for j in 0..300 {
                write!(f, " {}", (i * 300 + j) as f64 * 0.001).unwrap();
            }
            writeln!(f).unwrap();
        }
        drop(f);
        let set = load_embeddings(&p, Format::TextBare, None).unwrap();
        assert_eq!(set.len(), 5);
        assert_eq!(set.dim(), 300);
        // independent reference parse of the same fixture
        let raw = std::fs::read_to_string(&p).unwrap();
        for (i, line) in raw.lines().enumerate() {
            let mut it = line.split(' ');
            let word = it.next().unwrap();
            let vals: Vec<f64> = it.map(|s| s.parse().unwrap()).collect();
            assert_eq!(set.word(i), word);
            assert_eq!(set.row(i), &vals[..]);
        }
    }

    #[test]
    fn binary_round_trip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");
        let set = tiny();
        save_embeddings(&set, &p, Format::Word2vecBinary).unwrap();
        let loaded = load_embeddings(&p, Format::Word2vecBinary, None).unwrap();
        assert_eq!(loaded.words(), set.words());
        // values chosen representable in f32, so equality is exact
        assert_eq!(loaded.matrix(), set.matrix());
    }

    #[test]
    fn round_trip_all_formats() {
        let dir = tempfile::tempdir().unwrap();
        let set = tiny();
        for (fmt, name) in [
            (Format::Word2vecBinary, "v.bin"),
            (Format::TextWithHeader, "v.txt"),
            (Format::TextBare, "v.vec"),
        ] {
            let p = dir.path().join(name);
            save_embeddings(&set, &p, fmt).unwrap();
            let loaded = load_embeddings(&p, fmt, None).unwrap();
            assert_eq!(loaded.words(), set.words());
            for (a, b) in loaded.matrix().iter().zip(set.matrix()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn save_load_save_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let set = tiny();
        for (fmt, n1, n2) in [
            (Format::Word2vecBinary, "a.bin", "b.bin"),
            (Format::TextWithHeader, "a.txt", "b.txt"),
            (Format::TextBare, "a.vec", "b.vec"),
        ] {
            let p1 = dir.path().join(n1);
            let p2 = dir.path().join(n2);
            save_embeddings(&set, &p1, fmt).unwrap();
            let loaded = load_embeddings(&p1, fmt, None).unwrap();
            save_embeddings(&loaded, &p2, fmt).unwrap();
            assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        }
    }

    #[test]
    fn refuse_empty_vocabulary() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet::new("e", vec![], vec![], 2).unwrap();
        let err = save_embeddings(&set, dir.path().join("x.txt"), Format::TextWithHeader);
        assert!(err.is_err());
    }

    #[test]
    fn binary_file_size_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("big.bin");
        let n = 1000;
        let d = 30;
        let words: Vec<String> = (0..n).map(|i| format!("tok{i}")).collect();
        let matrix = vec![0.125f64; n * d];
        let set = EmbeddingSet::new("big", words.clone(), matrix, d).unwrap();
        save_embeddings(&set, &p, Format::Word2vecBinary).unwrap();
        let header = format!("{n} {d}\n").len() as u64;
        let tokens: u64 = words.iter().map(|w| w.len() as u64 + 1).sum();
        let expected = header + tokens + (n * d * 4) as u64;
        assert_eq!(std::fs::metadata(&p).unwrap().len(), expected);
    }

    #[test]
    fn truncation_is_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "4 2\na 1 2\nb 3 4\nc 5 6\nd 7 8\n").unwrap();
        let full = load_embeddings(&p, Format::TextWithHeader, None).unwrap();
        let cut = load_embeddings(&p, Format::TextWithHeader, Some(2)).unwrap();
        assert_eq!(cut.len(), 2);
        assert_eq!(cut.words(), &full.words()[..2]);
        assert_eq!(cut.matrix(), &full.matrix()[..4]);
    }

    #[test]
    fn max_vocab_above_header_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "2 2\na 1 2\nb 3 4\n").unwrap();
        assert!(load_embeddings(&p, Format::TextWithHeader, Some(5)).is_err());
    }

    #[test]
    fn duplicates_dropped_with_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "a 1 2\nb 3 4\na 5 6\n").unwrap();
        let (set, stats) = load_embeddings_stats(&p, Format::TextBare, None).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(stats.duplicates_dropped, 1);
        assert_eq!(set.vector("a").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn wrong_arity_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "a 1 2\nb 3\n").unwrap();
        let err = load_embeddings(&p, Format::TextBare, None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn non_finite_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "a 1 NaN\n").unwrap();
        assert!(matches!(
            load_embeddings(&p, Format::TextBare, None),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn malformed_binary_header_names_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");
        std::fs::write(&p, b"notaheader\n").unwrap();
        let err = load_embeddings(&p, Format::Word2vecBinary, None).unwrap_err();
        assert!(err.to_string().contains("byte"), "{err}");
    }

    #[test]
    fn lookup_is_bijective() {
        let set = tiny();
        for (i, w) in set.words().iter().enumerate() {
            assert_eq!(set.lookup(w), Some(i));
        }
        assert_eq!(set.lookup("zzz"), None);
    }
}
