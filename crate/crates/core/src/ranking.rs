//! Scoring, ranked lists, and P@k / nDCG@k evaluation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Rating, Split};
use crate::trainer::LatentModel;

pub const DEFAULT_KS: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("unknown venue {0:?}")]
    UnknownVenue(String),
    #[error("empty candidate set for user {0:?}")]
    NoCandidates(String),
    #[error("no evaluable users")]
    NoEvaluableUsers,
    #[error("reports disagree on the evaluated cut-offs")]
    CutoffMismatch,
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub venue: String,
    pub score: f64,
    /// 1-based.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Sorts by score descending, ties by venue id ascending.
    pub fn from_scores(user: impl Into<String>, mut scored: Vec<(String, f64)>) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(user, scored)
    }

    /// Keeps the given order and numbers positions from 1.
    pub fn from_ordered(user: impl Into<String>, ordered: Vec<(String, f64)>) -> Self {
        RankedList {
            user: user.into(),
            entries: ordered
                .into_iter()
                .enumerate()
                .map(|(p, (venue, score))| RankedEntry {
                    venue,
                    score,
                    position: p + 1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn venues(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.venue.as_str())
    }
}

pub fn score(model: &LatentModel, user: &str, venue: &str) -> Result<f64, RankingError> {
    let i = model
        .user_idx(user)
        .ok_or_else(|| RankingError::UnknownUser(user.to_string()))?;
    let j = model
        .venue_idx(venue)
        .ok_or_else(|| RankingError::UnknownVenue(venue.to_string()))?;
    Ok(model.score_idx(i, j))
}

pub fn rank<S: AsRef<str>>(
    model: &LatentModel,
    user: &str,
    candidates: &[S],
) -> Result<RankedList, RankingError> {
    if candidates.is_empty() {
        return Err(RankingError::NoCandidates(user.to_string()));
    }
    let scored = candidates
        .iter()
        .map(|v| score(model, user, v.as_ref()).map(|s| (v.as_ref().to_string(), s)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RankedList::from_scores(user, scored))
}

pub fn precision_at_k(ranked: &RankedList, relevant: &HashSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let hits = ranked
        .venues()
        .take(k)
        .filter(|v| relevant.contains(*v))
        .count();
    hits as f64 / k as f64
}

/// Binary-gain nDCG. The ideal ordering places every relevant candidate first.
pub fn ndcg_at_k(ranked: &RankedList, relevant: &HashSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let discount = |pos: usize| 1.0 / ((pos + 1) as f64).log2();
    let n_rel = ranked.venues().filter(|v| relevant.contains(*v)).count();
    if n_rel == 0 {
        return 0.0;
    }
    let dcg: f64 = ranked
        .entries
        .iter()
        .take(k)
        .filter(|e| relevant.contains(&e.venue))
        .map(|e| discount(e.position))
        .sum();
    let ideal: f64 = (1..=n_rel.min(k)).map(discount).sum();
    dcg / ideal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "P")]
    pub precision: BTreeMap<usize, f64>,
    #[serde(rename = "nDCG")]
    pub ndcg: BTreeMap<usize, f64>,
    pub users_evaluated: usize,
    /// Users with test candidates but no relevant test venue.
    #[serde(default)]
    pub users_skipped: usize,
    pub splits_averaged: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn metric_count(&self) -> usize {
        self.precision.len() + self.ndcg.len()
    }
}

/// Test candidates and relevant venues per user, keyed and ordered by user id.
pub fn test_candidates(
    test: &[Rating],
    threshold: u8,
) -> BTreeMap<String, (Vec<String>, HashSet<String>)> {
    let mut out: BTreeMap<String, (Vec<String>, HashSet<String>)> = BTreeMap::new();
    for r in test {
        let entry = out.entry(r.user.to_string()).or_default();
        entry.0.push(r.venue.clone());
        if r.value >= threshold {
            entry.1.insert(r.venue.clone());
        }
    }
    out
}

/// Ranks every user's test venues with `model`, users in id order.
pub fn rank_test_candidates(
    model: &LatentModel,
    test: &[Rating],
    threshold: u8,
) -> Result<Vec<RankedList>, RankingError> {
    test_candidates(test, threshold)
        .iter()
        .map(|(user, (cands, _))| rank(model, user, cands))
        .collect()
}

/// Macro-averages P@k and nDCG@k over users that have at least one relevant
/// test venue. Lists for users absent from `test` are ignored.
pub fn evaluate_rankings(
    lists: &[RankedList],
    test: &[Rating],
    threshold: u8,
    ks: &[usize],
) -> Result<EvalReport, RankingError> {
    let truth = test_candidates(test, threshold);
    let by_user: HashMap<&str, &RankedList> = lists.iter().map(|l| (l.user.as_str(), l)).collect();

    let mut precision: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, 0.0)).collect();
    let mut ndcg = precision.clone();
    let (mut evaluated, mut skipped) = (0usize, 0usize);
    for (user, (_, relevant)) in &truth {
        let Some(list) = by_user.get(user.as_str()) else {
            continue;
        };
        if relevant.is_empty() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        for &k in ks {
            *precision.get_mut(&k).unwrap() += precision_at_k(list, relevant, k);
            *ndcg.get_mut(&k).unwrap() += ndcg_at_k(list, relevant, k);
        }
    }
    if evaluated == 0 {
        return Err(RankingError::NoEvaluableUsers);
    }
    for v in precision.values_mut().chain(ndcg.values_mut()) {
        *v /= evaluated as f64;
    }
    Ok(EvalReport {
        precision,
        ndcg,
        users_evaluated: evaluated,
        users_skipped: skipped,
        splits_averaged: 1,
    })
}

/// Scores each user's test venues with `model` and evaluates the result.
pub fn evaluate(
    model: &LatentModel,
    split: &Split,
    dataset: &Dataset,
    ks: &[usize],
) -> Result<EvalReport, RankingError> {
    let lists = rank_test_candidates(model, &split.test, dataset.threshold())?;
    evaluate_rankings(&lists, &split.test, dataset.threshold(), ks)
}

/// Mean of each metric across reports; user and split counts are summed.
pub fn average_reports(reports: &[EvalReport]) -> Result<EvalReport, RankingError> {
    let first = reports.first().ok_or(RankingError::NoEvaluableUsers)?;
    let keys: Vec<usize> = first.precision.keys().copied().collect();
    if reports.iter().any(|r| {
        r.precision.keys().copied().ne(keys.iter().copied())
            || r.ndcg.keys().copied().ne(keys.iter().copied())
    }) {
        return Err(RankingError::CutoffMismatch);
    }
    if reports.len() == 1 {
        return Ok(first.clone());
    }
    let n = reports.len() as f64;
    let mean = |pick: fn(&EvalReport) -> &BTreeMap<usize, f64>| {
        keys.iter()
            .map(|k| (*k, reports.iter().map(|r| pick(r)[k]).sum::<f64>() / n))
            .collect::<BTreeMap<_, _>>()
    };
    Ok(EvalReport {
        precision: mean(|r| &r.precision),
        ndcg: mean(|r| &r.ndcg),
        users_evaluated: reports.iter().map(|r| r.users_evaluated).sum(),
        users_skipped: reports.iter().map(|r| r.users_skipped).sum(),
        splits_averaged: reports.iter().map(|r| r.splits_averaged).sum(),
    })
}

/// `user<TAB>position<TAB>venue<TAB>score`, users in id order.
pub fn write_rankings(path: &Path, lists: &[RankedList]) -> Result<(), RankingError> {
    let mut sorted: Vec<&RankedList> = lists.iter().collect();
    sorted.sort_by(|a, b| a.user.cmp(&b.user));
    let mut out = String::new();
    for l in sorted {
        for e in &l.entries {
            writeln!(out, "{}\t{}\t{}\t{}", l.user, e.position, e.venue, e.score).unwrap();
        }
    }
    let io = |source| RankingError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, out).map_err(io)
}

pub fn read_rankings(path: &Path) -> Result<Vec<RankedList>, RankingError> {
    let text = fs::read_to_string(path).map_err(|source| RankingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let perr = |line: usize, msg: String| RankingError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lists: Vec<RankedList> = Vec::new();
    let mut seen_users = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(perr(
                lineno,
                "expected user<TAB>position<TAB>venue<TAB>score".into(),
            ));
        }
        let position: usize = f[1]
            .parse()
            .map_err(|_| perr(lineno, "bad position".into()))?;
        let score: f64 = f[3].parse().map_err(|_| perr(lineno, "bad score".into()))?;
        let continuing = lists.last().is_some_and(|l| l.user == f[0]);
        if !continuing {
            if !seen_users.insert(f[0].to_string()) {
                return Err(perr(lineno, format!("user {:?} is not contiguous", f[0])));
            }
            lists.push(RankedList {
                user: f[0].to_string(),
                entries: Vec::new(),
            });
        }
        let list = lists.last_mut().unwrap();
        if position != list.entries.len() + 1 {
            return Err(perr(
                lineno,
                format!(
                    "expected position {}, got {position}",
                    list.entries.len() + 1
                ),
            ));
        }
        list.entries.push(RankedEntry {
            venue: f[2].to_string(),
            score,
            position,
        });
    }
    Ok(lists)
}
