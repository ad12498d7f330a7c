//! Page-level BLEU, average relative distance (ARD), and corpus statistics.
//!
//! Both metrics work on index sequences rather than word strings: indices are
//! unique per page while words repeat.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::heuristic::heuristic_order;
use crate::{Error, OrderPrediction, Page, Result};

pub const BLEU_ORDER: usize = 4;

fn ngram_counts(seq: &[usize], n: usize) -> HashMap<&[usize], u32> {
    let mut counts = HashMap::new();
    for gram in seq.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence-style BLEU-4 of one page: geometric mean of clipped n-gram
/// precisions times the brevity penalty, with no smoothing. Pages shorter
/// than four tokens use n up to the reference length.
pub fn page_bleu(hypothesis: &[usize], reference: &[usize]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Metric("BLEU needs a non-empty reference".into()));
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let max_n = BLEU_ORDER.min(reference.len());
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if hypothesis.len() < n {
            return Ok(0.0);
        }
        let ref_counts = ngram_counts(reference, n);
        let hyp_counts = ngram_counts(hypothesis, n);
        let matched: u32 = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        if matched == 0 {
            return Ok(0.0);
        }
        let total = hypothesis.len() + 1 - n;
        log_sum += (f64::from(matched) / total as f64).ln();
    }
    let ratio = reference.len() as f64 / hypothesis.len() as f64;
    let bp = if ratio > 1.0 { (1.0 - ratio).exp() } else { 1.0 };
    Ok(bp * (log_sum / max_n as f64).exp())
}

/// Average relative distance between a reference `a` and a generated
/// reordering `b`. Each element of `a` contributes `|k - pos_b|`, or `n` when
/// it is missing from `b`; the sum is divided by `n = |a|`.
pub fn ard(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Metric("ARD needs a non-empty reference".into()));
    }
    let mut in_a = HashMap::with_capacity(a.len());
    for &e in a {
        if in_a.insert(e, ()).is_some() {
            return Err(Error::Metric(format!("element {e} repeats in the reference")));
        }
    }
    let mut pos_b = HashMap::with_capacity(b.len());
    for (p, &e) in b.iter().enumerate() {
        if pos_b.insert(e, p).is_some() {
            return Err(Error::Metric(format!("element {e} repeats in the hypothesis")));
        }
    }
    let n = a.len();
    let total: u64 = a
        .iter()
        .enumerate()
        .map(|(k, e)| match pos_b.get(e) {
            Some(&p) => k.abs_diff(p) as u64,
            None => n as u64,
        })
        .sum();
    Ok(total as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageScore {
    pub page_id: String,
    pub bleu: f64,
    pub ard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_page: Vec<PageScore>,
    pub avg_bleu: f64,
    pub avg_ard: f64,
}

impl EvalReport {
    pub fn from_scores(per_page: Vec<PageScore>) -> Result<Self> {
        if per_page.is_empty() {
            return Err(Error::Metric("no pages to evaluate".into()));
        }
        let n = per_page.len() as f64;
        let avg_bleu = per_page.iter().map(|s| s.bleu).sum::<f64>() / n;
        let avg_ard = per_page.iter().map(|s| s.ard).sum::<f64>() / n;
        Ok(Self {
            per_page,
            avg_bleu,
            avg_ard,
        })
    }
}

/// Scores one prediction against its page. Gold is `0..n`; repeated
/// predicted indices are dropped before scoring.
pub fn score_page(page: &Page, pred: &OrderPrediction) -> Result<PageScore> {
    if pred.page_id != page.id {
        return Err(Error::Metric(format!(
            "prediction for {:?} paired with page {:?}",
            pred.page_id, page.id
        )));
    }
    pred.validate(page.len())?;
    let gold: Vec<usize> = (0..page.len()).collect();
    let hyp = pred.deduplicated();
    Ok(PageScore {
        page_id: page.id.clone(),
        bleu: page_bleu(&hyp, &gold)?,
        ard: ard(&gold, &hyp)?,
    })
}

/// Scores predictions against gold pages, pairing them by page id. The
/// report follows the order of `pages`.
pub fn evaluate(pages: &[Page], preds: &[OrderPrediction]) -> Result<EvalReport> {
    let by_id = index_predictions(preds)?;
    let scores = pages
        .iter()
        .map(|p| {
            let pred = by_id
                .get(p.id.as_str())
                .ok_or_else(|| Error::Metric(format!("no prediction for page {:?}", p.id)))?;
            score_page(p, pred)
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_scores(scores)
}

pub fn index_predictions(preds: &[OrderPrediction]) -> Result<HashMap<&str, &OrderPrediction>> {
    let mut by_id = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.page_id.as_str(), p).is_some() {
            return Err(Error::Metric(format!("duplicate prediction for page {:?}", p.page_id)));
        }
    }
    Ok(by_id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBucket {
    /// Bucket label, e.g. `(0.25, 0.50]`.
    pub range: String,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub pages: usize,
    pub avg_words: f64,
    pub avg_heuristic_bleu: f64,
    pub buckets: Vec<BleuBucket>,
}

pub const BUCKET_EDGES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Bucket of a BLEU value; `0.0` lands in the first bucket.
pub fn bucket_of(bleu: f64) -> usize {
    BUCKET_EDGES[1..]
        .iter()
        .position(|&upper| bleu <= upper)
        .unwrap_or(BUCKET_EDGES.len() - 2)
}

/// Word counts and heuristic-order BLEU over a corpus.
pub fn dataset_stats(pages: &[Page]) -> Result<DatasetStats> {
    let bleus = pages
        .iter()
        .map(|p| {
            let gold: Vec<usize> = (0..p.len()).collect();
            page_bleu(&heuristic_order(&p.tokens), &gold)
        })
        .collect::<Result<Vec<f64>>>()?;
    stats_from_parts(pages.iter().map(Page::len), &bleus)
}

/// Folds per-page word counts and heuristic BLEU values into a report.
pub fn stats_from_parts(word_counts: impl Iterator<Item = usize>, bleus: &[f64]) -> Result<DatasetStats> {
    if bleus.is_empty() {
        return Err(Error::Metric("dataset is empty".into()));
    }
    let n = bleus.len();
    let words: usize = word_counts.sum();
    let mut counts = [0usize; 4];
    for &b in bleus {
        counts[bucket_of(b)] += 1;
    }
    let buckets = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| BleuBucket {
            range: format!("({:.2}, {:.2}]", BUCKET_EDGES[i], BUCKET_EDGES[i + 1]),
            lower: BUCKET_EDGES[i],
            upper: BUCKET_EDGES[i + 1],
            count,
            fraction: count as f64 / n as f64,
        })
        .collect();
    Ok(DatasetStats {
        pages: n,
        avg_words: words as f64 / n as f64,
        avg_heuristic_bleu: bleus.iter().sum::<f64>() / n as f64,
        buckets,
    })
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Independent slow references used by tests.

    /// Counts n-grams by linear scans only.
    fn occurrences(seq: &[usize], gram: &[usize]) -> usize {
        if seq.len() < gram.len() {
            return 0;
        }
        (0..=seq.len() - gram.len()).filter(|&i| &seq[i..i + gram.len()] == gram).count()
    }

    pub fn naive_bleu(hyp: &[usize], reference: &[usize]) -> f64 {
        if hyp.is_empty() {
            return 0.0;
        }
        let max_n = 4.min(reference.len());
        let mut precisions = Vec::new();
        for n in 1..=max_n {
            if hyp.len() < n {
                return 0.0;
            }
            let mut distinct: Vec<&[usize]> = Vec::new();
            for i in 0..=hyp.len() - n {
                let g = &hyp[i..i + n];
                if !distinct.contains(&g) {
                    distinct.push(g);
                }
            }
            let clipped: usize = distinct
                .iter()
                .map(|g| occurrences(hyp, g).min(occurrences(reference, g)))
                .sum();
            precisions.push(clipped as f64 / (hyp.len() - n + 1) as f64);
        }
        if precisions.iter().any(|&p| p == 0.0) {
            return 0.0;
        }
        let geo = precisions.iter().product::<f64>().powf(1.0 / max_n as f64);
        let (r, c) = (reference.len() as f64, hyp.len() as f64);
        let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
        bp * geo
    }

    pub fn naive_ard(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let mut s = 0.0;
        for (k, e) in a.iter().enumerate() {
            s += match b.iter().position(|x| x == e) {
                Some(i) => (k as f64 - i as f64).abs(),
                None => n as f64,
            };
        }
        s / n as f64
    }
}
