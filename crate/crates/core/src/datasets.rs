//! Multilabel dataset ingestion in the Extreme Classification repository
//! sparse format, plus per-run shuffling, arm-subset restriction, and a
//! synthetic benchmark generator.
//!
//! Format: a header line `n_rows n_features n_labels`, then one line per row
//! of `l1,l2,... f1:v1 f2:v2 ...` with 0-based indices. A line whose label
//! field is absent (leading space) denotes an empty label set.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::context::Context;
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    HeaderMalformed(String),
    #[error("line {line}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        line: usize,
        index: u64,
        bound: usize,
    },
    #[error("row count mismatch: header says {expected}, found {got}")]
    RowCountMismatch { expected: usize, got: usize },
    #[error("line {line}: unparsable token {token:?}")]
    ValueUnparsable { line: usize, token: String },
    #[error("line {line}: feature indices must be strictly increasing")]
    UnsortedFeatures { line: usize },
    #[error("arm subset {requested} exceeds label count {available}")]
    SubsetTooLarge { requested: usize, available: usize },
}

/// One observation: sparse covariates plus the set of labels (arms) that
/// would pay reward 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DataRow {
    pub x: Arc<Context>,
    /// Sorted, deduplicated label indices. May be empty.
    pub labels: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultilabelDataset {
    pub n_features: usize,
    pub n_labels: usize,
    pub rows: Vec<DataRow>,
}

impl MultilabelDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Occurrence count per label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_labels];
        for row in &self.rows {
            for &l in &row.labels {
                counts[l as usize] += 1;
            }
        }
        counts
    }

    /// Index of the highest-frequency label (lowest index on ties).
    pub fn most_common_label(&self) -> usize {
        let counts = self.label_counts();
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn mean_labels_per_row(&self) -> f64 {
        let total: usize = self.rows.iter().map(|r| r.labels.len()).sum();
        total as f64 / self.rows.len() as f64
    }
}

/// Parse the sparse multilabel format from a reader. `one_based_labels`
/// shifts label indices down by one for files using 1-based numbering.
pub fn parse_xc<R: BufRead>(
    reader: R,
    one_based_labels: bool,
) -> Result<MultilabelDataset, DatasetError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| DatasetError::HeaderMalformed("empty input".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(DatasetError::HeaderMalformed(header.clone()));
    }
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| DatasetError::HeaderMalformed(header.clone()))
    };
    let n_rows = parse_count(parts[0])?;
    let n_features = parse_count(parts[1])?;
    let n_labels = parse_count(parts[2])?;

    let mut rows = Vec::with_capacity(n_rows);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2; // 1-based, after the header
        let line = line?;
        if rows.len() == n_rows && line.trim().is_empty() {
            continue; // tolerate trailing blank lines
        }
        // A leading space means the label field is empty.
        let has_labels = !line.starts_with(char::is_whitespace) && !line.is_empty();
        let mut tokens = line.split_whitespace();
        let mut labels: Vec<u32> = Vec::new();
        if has_labels {
            let field = tokens.next().expect("non-empty line has a first token");
            for tok in field.split(',') {
                if tok.is_empty() {
                    continue;
                }
                let raw: u64 = tok.parse().map_err(|_| DatasetError::ValueUnparsable {
                    line: line_no,
                    token: tok.to_string(),
                })?;
                let l = if one_based_labels {
                    raw.checked_sub(1).ok_or(DatasetError::IndexOutOfRange {
                        line: line_no,
                        index: raw,
                        bound: n_labels,
                    })?
                } else {
                    raw
                };
                if l >= n_labels as u64 {
                    return Err(DatasetError::IndexOutOfRange {
                        line: line_no,
                        index: raw,
                        bound: n_labels,
                    });
                }
                labels.push(l as u32);
            }
            labels.sort_unstable();
            labels.dedup();
        }
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| DatasetError::ValueUnparsable {
                line: line_no,
                token: tok.to_string(),
            })?;
            let idx: u64 = idx.parse().map_err(|_| DatasetError::ValueUnparsable {
                line: line_no,
                token: tok.to_string(),
            })?;
            if idx >= n_features as u64 {
                return Err(DatasetError::IndexOutOfRange {
                    line: line_no,
                    index: idx,
                    bound: n_features,
                });
            }
            let val: f64 = val.parse().map_err(|_| DatasetError::ValueUnparsable {
                line: line_no,
                token: tok.to_string(),
            })?;
            if let Some(&(last, _)) = entries.last() {
                if idx as u32 <= last {
                    return Err(DatasetError::UnsortedFeatures { line: line_no });
                }
            }
            entries.push((idx as u32, val));
        }
        rows.push(DataRow {
            x: Arc::new(Context::new(n_features, entries)),
            labels,
        });
    }
    if rows.len() != n_rows {
        return Err(DatasetError::RowCountMismatch {
            expected: n_rows,
            got: rows.len(),
        });
    }
    Ok(MultilabelDataset {
        n_features,
        n_labels,
        rows,
    })
}

/// Load a dataset from a path; `.gz` files are decompressed transparently.
pub fn load_xc<P: AsRef<Path>>(
    path: P,
    one_based_labels: bool,
) -> Result<MultilabelDataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        parse_xc(BufReader::new(GzDecoder::new(file)), one_based_labels)
    } else {
        parse_xc(BufReader::new(file), one_based_labels)
    }
}

/// Serialize back to the sparse format (always 0-based).
pub fn write_xc<W: Write>(ds: &MultilabelDataset, mut w: W) -> Result<(), DatasetError> {
    writeln!(w, "{} {} {}", ds.rows.len(), ds.n_features, ds.n_labels)?;
    for row in &ds.rows {
        let labels = row
            .labels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        write!(w, "{}", labels)?;
        for &(i, v) in row.x.entries() {
            write!(w, " {}:{}", i, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Uniform random permutation of the rows, deterministic under the stream.
pub fn shuffle_rows(ds: &MultilabelDataset, rng: &mut RngStream) -> MultilabelDataset {
    let mut rows = ds.rows.clone();
    rows.shuffle(rng);
    MultilabelDataset {
        n_features: ds.n_features,
        n_labels: ds.n_labels,
        rows,
    }
}

/// Restrict to a uniformly sampled subset of `k_subset` arms. Kept arms are
/// reindexed to `[0, k_subset)` in ascending original order; rows whose label
/// sets become empty are retained. Returns the kept original indices.
pub fn restrict_arms(
    ds: &MultilabelDataset,
    k_subset: usize,
    rng: &mut RngStream,
) -> Result<(MultilabelDataset, Vec<u32>), DatasetError> {
    if k_subset == 0 || k_subset > ds.n_labels {
        return Err(DatasetError::SubsetTooLarge {
            requested: k_subset,
            available: ds.n_labels,
        });
    }
    let mut kept: Vec<u32> = rand::seq::index::sample(rng, ds.n_labels, k_subset)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    kept.sort_unstable();
    Ok((remap_labels(ds, &kept), kept))
}

/// Deterministically drop the `n_drop` highest-frequency labels (lowest
/// index wins ties) and reindex the remainder. Returns the dropped original
/// indices.
pub fn drop_most_common(
    ds: &MultilabelDataset,
    n_drop: usize,
) -> Result<(MultilabelDataset, Vec<u32>), DatasetError> {
    if n_drop >= ds.n_labels {
        return Err(DatasetError::SubsetTooLarge {
            requested: n_drop,
            available: ds.n_labels,
        });
    }
    let counts = ds.label_counts();
    let mut order: Vec<usize> = (0..ds.n_labels).collect();
    // Descending count, ascending index on ties.
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), i));
    let mut dropped: Vec<u32> = order[..n_drop].iter().map(|&i| i as u32).collect();
    dropped.sort_unstable();
    let kept: Vec<u32> = (0..ds.n_labels as u32)
        .filter(|l| !dropped.contains(l))
        .collect();
    Ok((remap_labels(ds, &kept), dropped))
}

fn remap_labels(ds: &MultilabelDataset, kept_sorted: &[u32]) -> MultilabelDataset {
    let rows = ds
        .rows
        .iter()
        .map(|row| DataRow {
            x: row.x.clone(),
            labels: row
                .labels
                .iter()
                .filter_map(|l| kept_sorted.binary_search(l).ok().map(|r| r as u32))
                .collect(),
        })
        .collect();
    MultilabelDataset {
        n_features: ds.n_features,
        n_labels: kept_sorted.len(),
        rows,
    }
}

// Synthetic benchmark marginals, chosen to match a well-known mid-size
// multilabel text dataset: 7,395 rows, 159 labels, 2.4 labels per row on
// average, most common label present in 1,042 rows (14.09%).
const SYN_ROWS: usize = 7395;
const SYN_FEATURES: usize = 200;
const SYN_LABELS: usize = 159;
const SYN_TOP_COUNT: usize = 1042;
const SYN_TOTAL_INCIDENCES: usize = 17748;

/// Per-label incidence counts: the top label is pinned exactly, the rest
/// follow a smooth exponential frequency profile scaled to hit the exact
/// total.
fn synthetic_label_counts() -> Vec<usize> {
    let remaining = SYN_TOTAL_INCIDENCES - SYN_TOP_COUNT;
    let profile: Vec<f64> = (1..SYN_LABELS)
        .map(|l| (-0.045 * l as f64).exp())
        .collect();
    let total: f64 = profile.iter().sum();
    let scale = remaining as f64 / total;
    let mut counts: Vec<usize> = profile.iter().map(|p| (p * scale) as usize).collect();
    let assigned: usize = counts.iter().sum();
    // Distribute the flooring remainder one incidence at a time.
    let n = counts.len();
    for i in 0..remaining - assigned {
        counts[i % n] += 1;
    }
    let mut all = Vec::with_capacity(SYN_LABELS);
    all.push(SYN_TOP_COUNT);
    all.extend(counts);
    debug_assert_eq!(all.iter().sum::<usize>(), SYN_TOTAL_INCIDENCES);
    all
}

/// Deterministic synthetic multilabel benchmark.
///
/// Covariates are sparse binary, like the bag-of-words corpora this stands
/// in for. Each label has a dedicated rare "marker" feature — present on
/// roughly 70% of the rows carrying that label and a strong indicator of it
/// (as a distinctive word is for a tag) — plus a handful of supporting
/// features drawn from a shared pool. Labels go to exactly the top-`count`
/// rows by a noisy linear score, which fixes every marginal label frequency
/// exactly while leaving the few-shot-learnable structure that lets a
/// per-label classifier generalize from its first positive examples.
pub fn synthetic_benchmark(seed: u64) -> MultilabelDataset {
    let base = RngStream::new(seed, 0x5939_7a6d);
    let mut feat_rng = base.derive(1);
    let normal = StandardNormal;

    // Features 0..SYN_LABELS are the markers; the rest are a shared pool of
    // generic features active on 10% of rows.
    const POOL_P_ACTIVE: f64 = 0.10;
    const MARKER_SHARE: f64 = 0.7;
    const MARKER_COEF: f64 = 8.0;
    const SUPPORT: usize = 6;
    let counts = synthetic_label_counts();
    let probs: Vec<f64> = (0..SYN_FEATURES)
        .map(|j| {
            if j < SYN_LABELS {
                MARKER_SHARE * counts[j] as f64 / SYN_ROWS as f64
            } else {
                POOL_P_ACTIVE
            }
        })
        .collect();
    let xs: Vec<Vec<f64>> = (0..SYN_ROWS)
        .map(|_| {
            probs
                .iter()
                .map(|&p| f64::from(rand::Rng::random::<f64>(&mut feat_rng) < p))
                .collect()
        })
        .collect();

    let mut labels_per_row: Vec<Vec<u32>> = vec![Vec::new(); SYN_ROWS];
    for (l, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut rng = base.derive_tagged(&[2, l as u64]);
        let support = rand::seq::index::sample_array::<_, SUPPORT>(
            &mut rng,
            SYN_FEATURES - SYN_LABELS,
        )
        .expect("pool is larger than the support");
        // Positive coefficients: having a label's indicative features on is
        // what earns the label; the marker dominates.
        let coefs: Vec<f64> = (0..SUPPORT)
            .map(|_| {
                let z: f64 = normal.sample(&mut rng);
                1.0 + z.abs()
            })
            .collect();
        let mut scored: Vec<(f64, usize)> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut lin = MARKER_COEF * x[l];
                lin += support
                    .iter()
                    .zip(&coefs)
                    .map(|(&j, c)| c * x[SYN_LABELS + j])
                    .sum::<f64>();
                let u: f64 = rand::Rng::random::<f64>(&mut rng).clamp(1e-12, 1.0 - 1e-12);
                let noise = (u / (1.0 - u)).ln();
                (lin + 0.25 * noise, i)
            })
            .collect();
        // Exactly `count` rows get this label: the top scorers.
        scored.select_nth_unstable_by(count - 1, |a, b| b.0.partial_cmp(&a.0).unwrap());
        for &(_, i) in &scored[..count] {
            labels_per_row[i].push(l as u32);
        }
    }

    let rows = xs
        .into_iter()
        .zip(labels_per_row)
        .map(|(x, mut labels)| {
            labels.sort_unstable();
            let entries: Vec<(u32, f64)> = x
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, &v)| (i as u32, v))
                .collect();
            DataRow {
                x: Arc::new(Context::new(SYN_FEATURES, entries)),
                labels,
            }
        })
        .collect();
    MultilabelDataset {
        n_features: SYN_FEATURES,
        n_labels: SYN_LABELS,
        rows,
    }
}
