//! TSV matrix files and the JSON classifier store.
//!
//! Matrix files start with `#kind=<kind> m=<int>` followed by
//! `i<TAB>j<TAB>value` lines. Review matrices may omit zero entries; every
//! other kind must list all `m * m` pairs exactly once.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ReviewClassifier, SimilarityError, SimilarityKind, SimilarityMatrix, SparseVec, TfIdf,
};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimilarityError + '_ {
    move |source| SimilarityError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), SimilarityError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn write_matrix(path: &Path, s: &SimilarityMatrix) -> Result<(), SimilarityError> {
    let m = s.size();
    let mut out = String::with_capacity(m * m * 24 + 32);
    writeln!(out, "#kind={} m={}", s.kind(), m).unwrap();
    let sparse = s.kind() == SimilarityKind::Review;
    for i in 0..m {
        for j in 0..m {
            let v = s.get(i, j);
            if sparse && v == 0.0 {
                continue;
            }
            // f64 Display is the shortest representation that round-trips
            writeln!(out, "{i}\t{j}\t{v}").unwrap();
        }
    }
    write_file(path, &out)
}

pub fn read_matrix(path: &Path) -> Result<SimilarityMatrix, SimilarityError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let perr = |line: usize, msg: String| SimilarityError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let (kind, m) =
        parse_header(header).ok_or_else(|| perr(1, format!("bad header {header:?}")))?;

    let mut values = vec![0.0; m * m];
    let mut seen = vec![false; m * m];
    let mut count = 0usize;
    for (n, line) in lines {
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(perr(lineno, "expected i<TAB>j<TAB>value".into()));
        }
        let i: usize = f[0]
            .parse()
            .map_err(|_| perr(lineno, "bad row index".into()))?;
        let j: usize = f[1]
            .parse()
            .map_err(|_| perr(lineno, "bad column index".into()))?;
        let v: f64 = f[2].parse().map_err(|_| perr(lineno, "bad value".into()))?;
        if i >= m || j >= m {
            return Err(perr(
                lineno,
                format!("index ({i}, {j}) out of range for m={m}"),
            ));
        }
        if !v.is_finite() {
            return Err(perr(lineno, "non-finite value".into()));
        }
        if std::mem::replace(&mut seen[i * m + j], true) {
            return Err(perr(lineno, format!("duplicate entry ({i}, {j})")));
        }
        values[i * m + j] = v;
        count += 1;
    }
    if kind != SimilarityKind::Review && count != m * m {
        return Err(SimilarityError::Shape {
            got: count,
            expected: m * m,
        });
    }
    SimilarityMatrix::new(kind, m, values)
}

fn parse_header(line: &str) -> Option<(SimilarityKind, usize)> {
    let rest = line.strip_prefix('#')?;
    let (mut kind, mut m) = (None, None);
    for part in rest.split_whitespace() {
        match part.split_once('=')? {
            ("kind", k) => kind = k.parse().ok(),
            ("m", v) => m = v.parse().ok(),
            _ => return None,
        }
    }
    Some((kind?, m?))
}

#[derive(Serialize, Deserialize)]
struct ClassifierRecord {
    venue: String,
    index: usize,
    degenerate: bool,
    bias: f64,
    weights: SparseVec,
}

/// Writes one JSON object per classifier to `store` and the vectorizer to
/// the `vocabulary` sidecar.
pub fn save_classifiers(
    store: &Path,
    vocabulary: &Path,
    venue_ids: &[String],
    classifiers: &[ReviewClassifier],
    vectorizer: &TfIdf,
) -> Result<(), SimilarityError> {
    let mut out = String::new();
    for c in classifiers {
        let rec = ClassifierRecord {
            venue: venue_ids[c.venue].clone(),
            index: c.venue,
            degenerate: c.degenerate,
            bias: c.bias,
            weights: c.weights.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("classifier serializes"));
        out.push('\n');
    }
    write_file(store, &out)?;
    let mut vocab = serde_json::to_string(vectorizer).expect("vocabulary serializes");
    vocab.push('\n');
    write_file(vocabulary, &vocab)
}

pub fn load_classifiers(
    store: &Path,
    vocabulary: &Path,
) -> Result<(Vec<ReviewClassifier>, TfIdf), SimilarityError> {
    let text = fs::read_to_string(store).map_err(io_err(store))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ClassifierRecord =
            serde_json::from_str(line).map_err(|e| SimilarityError::Parse {
                path: store.to_path_buf(),
                line: n + 1,
                msg: e.to_string(),
            })?;
        out.push(ReviewClassifier {
            venue: rec.index,
            weights: rec.weights,
            bias: rec.bias,
            degenerate: rec.degenerate,
        });
    }
    let vtext = fs::read_to_string(vocabulary).map_err(io_err(vocabulary))?;
    let vectorizer: TfIdf = serde_json::from_str(&vtext).map_err(|e| SimilarityError::Parse {
        path: vocabulary.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    Ok((out, vectorizer.reindex()))
}
