//! Correlation statistics, the first-word table, length profiles and the combined
//! evaluation report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{label_top_decile, QuestionCorpus, FIRST_WORD_STATS};
use crate::error::{Error, Result};
use crate::textfeat::{first_word, FIRST_WORDS};

mod report;
pub use report::*;

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput(
            "at least three pairs are required".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("values must be finite".into()));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Weighted Pearson correlation.
pub fn weighted_pearson(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if w.len() != x.len() || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(
            "weights must be finite, non-negative, one per pair".into(),
        ));
    }
    let sw: f64 = w.iter().sum();
    if sw == 0.0 {
        return Err(Error::Degenerate("weights sum to zero".into()));
    }
    let mx = x.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for ((a, b), w) in x.iter().zip(y).zip(w) {
        sxy += w * (a - mx) * (b - my);
        sxx += w * (a - mx).powi(2);
        syy += w * (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn weighted_spearman(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    weighted_pearson(&average_ranks(x), &average_ranks(y), w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstWordRow {
    pub word: String,
    pub n_questions: usize,
    pub percentage: f64,
    pub mean_views: f64,
    pub top_decile_percentage: f64,
    pub answer_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstWordTable {
    /// Rows sorted by top-decile percentage, highest first.
    pub rows: Vec<FirstWordRow>,
    /// Share of questions whose first word is not a listed word.
    pub other_percentage: f64,
}

impl FirstWordTable {
    pub fn row(&self, word: &str) -> Option<&FirstWordRow> {
        self.rows.iter().find(|r| r.word == word)
    }

    pub fn covered_percentage(&self) -> f64 {
        self.rows.iter().map(|r| r.percentage).sum()
    }

    /// The table's columns as (percentage, views, top decile, answer rate) vectors.
    pub fn columns(&self) -> [Vec<f64>; 4] {
        [
            self.rows.iter().map(|r| r.percentage).collect(),
            self.rows.iter().map(|r| r.mean_views).collect(),
            self.rows.iter().map(|r| r.top_decile_percentage).collect(),
            self.rows.iter().map(|r| r.answer_rate).collect(),
        ]
    }
}

/// The published first-word table: percentage of questions, mean views, top-decile
/// percentage and answer rate for the 20 most common first words.
pub fn reference_first_word_table() -> FirstWordTable {
    let rows = FIRST_WORD_STATS
        .iter()
        .map(|&(word, pct, views, top, answer)| FirstWordRow {
            word: word.to_owned(),
            n_questions: 0,
            percentage: pct,
            mean_views: views,
            top_decile_percentage: top,
            answer_rate: answer,
        })
        .collect::<Vec<_>>();
    let covered: f64 = rows.iter().map(|r| r.percentage).sum();
    FirstWordTable {
        rows,
        other_percentage: 100.0 - covered,
    }
}

/// First-word statistics over the corpus for the words of the reference vocabulary
/// that occur. Rows with no questions are omitted.
pub fn first_word_table(corpus: &QuestionCorpus) -> Result<FirstWordTable> {
    let labels = label_top_decile(corpus)?;
    #[derive(Default)]
    struct Acc {
        n: usize,
        views: u64,
        top: usize,
        answered: usize,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut other = 0usize;
    for (q, &top) in corpus.questions.iter().zip(&labels.labels) {
        let w = first_word(&q.summary);
        match w
            .as_deref()
            .and_then(|w| FIRST_WORDS.iter().find(|&&f| f == w))
        {
            Some(&word) => {
                let a = acc.entry(word).or_default();
                a.n += 1;
                a.views += q.views;
                a.top += usize::from(top);
                a.answered += usize::from(q.answered);
            }
            None => other += 1,
        }
    }
    let n = corpus.len() as f64;
    let mut rows: Vec<FirstWordRow> = acc
        .into_iter()
        .map(|(word, a)| FirstWordRow {
            word: word.to_owned(),
            n_questions: a.n,
            percentage: 100.0 * a.n as f64 / n,
            mean_views: a.views as f64 / a.n as f64,
            top_decile_percentage: 100.0 * a.top as f64 / a.n as f64,
            answer_rate: 100.0 * a.answered as f64 / a.n as f64,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.top_decile_percentage
            .total_cmp(&a.top_decile_percentage)
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(FirstWordTable {
        rows,
        other_percentage: 100.0 * other as f64 / n,
    })
}

/// The pairs of table columns whose correlations are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub pearson: f64,
    pub spearman: f64,
    /// Whether the percentage-weighted variant was used.
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCorrelations {
    pub views_vs_top_decile: CorrelationPair,
    pub top_decile_vs_answer_rate: CorrelationPair,
}

/// Unweighted correlations over the table rows.
pub fn table_correlations(table: &FirstWordTable) -> Result<TableCorrelations> {
    let [_, views, top, answer] = table.columns();
    Ok(TableCorrelations {
        views_vs_top_decile: CorrelationPair {
            pearson: pearson(&views, &top)?,
            spearman: spearman(&views, &top)?,
            weighted: false,
        },
        top_decile_vs_answer_rate: CorrelationPair {
            pearson: pearson(&top, &answer)?,
            spearman: spearman(&top, &answer)?,
            weighted: false,
        },
    })
}

/// Correlations weighted by each row's percentage of questions.
pub fn weighted_table_correlations(table: &FirstWordTable) -> Result<TableCorrelations> {
    let [w, views, top, answer] = table.columns();
    Ok(TableCorrelations {
        views_vs_top_decile: CorrelationPair {
            pearson: weighted_pearson(&views, &top, &w)?,
            spearman: weighted_spearman(&views, &top, &w)?,
            weighted: true,
        },
        top_decile_vs_answer_rate: CorrelationPair {
            pearson: weighted_pearson(&top, &answer, &w)?,
            spearman: weighted_spearman(&top, &answer, &w)?,
            weighted: true,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBucket {
    /// Inclusive lower bound in characters; the last bucket is open-ended.
    pub lo: usize,
    pub hi: Option<usize>,
    pub with_details: bool,
    pub count: usize,
    pub total_views: u64,
    pub mean_views: Option<f64>,
    pub mean_coherency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthProfile {
    pub bucket_width: usize,
    pub max_len: usize,
    pub buckets: Vec<LengthBucket>,
}

impl LengthProfile {
    pub fn stratum(&self, with_details: bool) -> impl Iterator<Item = &LengthBucket> {
        self.buckets
            .iter()
            .filter(move |b| b.with_details == with_details)
    }

    pub fn total_count(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// Views per question over the buckets of a stratum whose lower bound lies in
    /// `[lo, hi)`.
    pub fn mean_views_between(&self, with_details: bool, lo: usize, hi: usize) -> Option<f64> {
        let (mut n, mut v) = (0usize, 0u64);
        for b in self.stratum(with_details) {
            if (lo..hi).contains(&b.lo) {
                n += b.count;
                v += b.total_views;
            }
        }
        (n > 0).then(|| v as f64 / n as f64)
    }
}

/// Questions bucketed by total length in characters, separately with and without
/// details. Lengths at or beyond `max_len` share the last bucket. `coherency` gives
/// each question's topic entropy when available.
pub fn length_profiles(
    corpus: &QuestionCorpus,
    bucket_width: usize,
    max_len: usize,
    coherency: Option<&[f64]>,
) -> Result<LengthProfile> {
    if bucket_width < 10 {
        return Err(Error::InvalidInput(
            "bucket width must be at least 10 characters".into(),
        ));
    }
    if let Some(c) = coherency {
        if c.len() != corpus.len() {
            return Err(Error::InvalidInput(
                "one coherency value per question is required".into(),
            ));
        }
    }
    let n_buckets = max_len.div_ceil(bucket_width).max(1) + 1;
    let mut count = vec![[0usize; 2]; n_buckets];
    let mut views = vec![[0u64; 2]; n_buckets];
    let mut coh = vec![[0.0f64; 2]; n_buckets];
    for (i, q) in corpus.questions.iter().enumerate() {
        let b = (q.question_len() / bucket_width).min(n_buckets - 1);
        let s = usize::from(q.details.is_some());
        count[b][s] += 1;
        views[b][s] += q.views;
        if let Some(c) = coherency {
            coh[b][s] += c[i];
        }
    }
    let mut buckets = Vec::with_capacity(2 * n_buckets);
    for s in 0..2 {
        for b in 0..n_buckets {
            let n = count[b][s];
            buckets.push(LengthBucket {
                lo: b * bucket_width,
                hi: (b + 1 < n_buckets).then_some((b + 1) * bucket_width),
                with_details: s == 1,
                count: n,
                total_views: views[b][s],
                mean_views: (n > 0).then(|| views[b][s] as f64 / n as f64),
                mean_coherency: (n > 0 && coherency.is_some()).then(|| coh[b][s] / n as f64),
            });
        }
    }
    Ok(LengthProfile {
        bucket_width,
        max_len,
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Question;
    use proptest::prelude::*;

    #[test]
    fn correlation_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let s = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((s - 0.8).abs() < 1e-12);
        assert!(matches!(
            pearson(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 30.0]),
            vec![1.5, 3.0, 1.5, 4.0]
        );
    }

    proptest! {
        #[test]
        fn symmetric_and_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            a in 0.1f64..10.0,
            b in -50.0f64..50.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let (Ok(r), Ok(r2)) = (pearson(&x, &y), pearson(&y, &x)) {
                prop_assert!((r - r2).abs() < 1e-12);
                let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                prop_assert!((pearson(&xt, &y).unwrap() - r).abs() < 1e-9);
                let xe: Vec<f64> = x.iter().map(|v| (v / 50.0).exp()).collect();
                prop_assert!((spearman(&xe, &y).unwrap() - spearman(&x, &y).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_question_table() {
        let mut q = Question::new("a", "Why?", None, 1, "online", "free");
        q.views = 3;
        let t = first_word_table(&QuestionCorpus::in_memory(vec![q])).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].word, "why");
        assert_eq!(t.rows[0].percentage, 100.0);
        assert_eq!(t.other_percentage, 0.0);
    }

    #[test]
    fn reference_table_covers_listed_share() {
        let t = reference_first_word_table();
        assert_eq!(t.rows.len(), 20);
        assert!((t.covered_percentage() + t.other_percentage - 100.0).abs() < 1e-9);
    }

    #[test]
    fn profile_counts_and_absent_strata() {
        let qs = vec![
            Question::new("a", "x".repeat(30), None, 1, "online", "free"),
            Question::new(
                "b",
                "x".repeat(60),
                Some("y".repeat(100)),
                1,
                "online",
                "free",
            ),
        ];
        let p = length_profiles(&QuestionCorpus::in_memory(qs), 25, 1000, None).unwrap();
        assert_eq!(p.total_count(), 2);
        let empty = p.stratum(true).find(|b| b.lo == 0).unwrap();
        assert_eq!(empty.mean_views, None);
        assert!(length_profiles(&QuestionCorpus::in_memory(vec![]), 5, 100, None).is_err());
    }
}
