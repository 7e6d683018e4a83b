//! Uplift of the "add details" treatment on reaching the top decile, for the first
//! question of each user.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{label_top_decile, QuestionCorpus};
use crate::ensemble::{
    fit_forest, permutation_importance, Column, Dataset, EvalRows, Forest, ForestParams,
    ImportanceParams, Metric, Mode, Value,
};
use crate::error::{Error, Result};
use crate::textfeat::{capitalization_flags, first_word, first_word_category};
use crate::topics::{InferenceParams, TopicModel};

pub const UPLIFT_MODEL_VERSION: u32 = 1;

/// Attribute names of the uplift dataset, in column order (topic first when present).
pub const UPLIFT_FEATURES: [&str; 6] = [
    "topic",
    "question_length",
    "week",
    "first_word",
    "capitalization",
    "punctuation",
];

/// One row per user: the user's earliest question.
#[derive(Debug, Clone, PartialEq)]
pub struct UpliftDataset {
    pub ids: Vec<String>,
    /// Target is the top-decile outcome; treatment is "has details".
    pub data: Dataset,
}

impl UpliftDataset {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn treatment(&self) -> &[bool] {
        self.data
            .treatment
            .as_deref()
            .expect("uplift datasets carry treatment")
    }

    pub fn outcome(&self) -> &[bool] {
        &self.data.target
    }

    pub fn treated_fraction(&self) -> f64 {
        let t = self.treatment();
        t.iter().filter(|&&x| x).count() as f64 / t.len().max(1) as f64
    }
}

/// Raw uplift attributes of one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpliftRow {
    pub topic: Option<usize>,
    pub question_length: usize,
    pub week: u32,
    pub first_word: String,
    /// `proper`, `excessive` or `lower`.
    pub capitalization: String,
    /// `question_mark` or `none`.
    pub punctuation: String,
}

impl UpliftRow {
    pub fn from_text(
        summary: &str,
        details: Option<&str>,
        week: u32,
        topic: Option<usize>,
    ) -> UpliftRow {
        let (proper, excessive) = capitalization_flags(summary);
        UpliftRow {
            topic,
            question_length: summary.chars().count() + details.map_or(0, |d| d.chars().count()),
            week,
            first_word: first_word_category(first_word(summary).as_deref()).to_owned(),
            capitalization: if excessive {
                "excessive"
            } else if proper {
                "proper"
            } else {
                "lower"
            }
            .to_owned(),
            punctuation: if summary.contains('?') {
                "question_mark"
            } else {
                "none"
            }
            .to_owned(),
        }
    }

    /// Values in the order of a model's schema.
    pub fn values(&self, with_topic: bool) -> Vec<Value> {
        let mut v = Vec::with_capacity(6);
        if with_topic {
            v.push(Value::Cat(
                self.topic
                    .map_or_else(|| "none".to_owned(), |t| t.to_string()),
            ));
        }
        v.extend([
            Value::Num(self.question_length as f64),
            Value::Num(f64::from(self.week)),
            Value::Cat(self.first_word.clone()),
            Value::Cat(self.capitalization.clone()),
            Value::Cat(self.punctuation.clone()),
        ]);
        v
    }
}

/// Builds the dataset from the first question of every user. Outcome labels use
/// the top-decile threshold of the whole corpus.
pub fn build_uplift_dataset(
    corpus: &QuestionCorpus,
    topic_model: Option<(&TopicModel, &InferenceParams)>,
) -> Result<UpliftDataset> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no questions".into()));
    }
    let labels = label_top_decile(corpus)?.labels;
    let mut first: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, q) in corpus.questions.iter().enumerate() {
        let user = q
            .user_id
            .as_deref()
            .ok_or_else(|| Error::MissingFeature(format!("user_id (question {})", q.id)))?;
        first
            .entry(user)
            .and_modify(|j| {
                let p = &corpus.questions[*j];
                if (q.week, &q.id) < (p.week, &p.id) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut rows_idx: Vec<usize> = first.into_values().collect();
    rows_idx.sort_unstable();

    let rows: Vec<UpliftRow> = rows_idx
        .iter()
        .map(|&i| {
            let q = &corpus.questions[i];
            let topic = topic_model.map(|(m, p)| m.infer_question(q, p).distribution.argmax());
            UpliftRow::from_text(&q.summary, q.details.as_deref(), q.week, topic)
        })
        .collect();
    let mut cols: Vec<(String, Column)> = Vec::new();
    if topic_model.is_some() {
        cols.push((
            "topic".into(),
            Column::Categorical(
                rows.iter()
                    .map(|r| r.topic.unwrap_or(0).to_string())
                    .collect(),
            ),
        ));
    }
    cols.extend([
        (
            "question_length".into(),
            Column::Numeric(rows.iter().map(|r| r.question_length as f64).collect()),
        ),
        (
            "week".into(),
            Column::Numeric(rows.iter().map(|r| f64::from(r.week)).collect()),
        ),
        (
            "first_word".into(),
            Column::Categorical(rows.iter().map(|r| r.first_word.clone()).collect()),
        ),
        (
            "capitalization".into(),
            Column::Categorical(rows.iter().map(|r| r.capitalization.clone()).collect()),
        ),
        (
            "punctuation".into(),
            Column::Categorical(rows.iter().map(|r| r.punctuation.clone()).collect()),
        ),
    ]);
    let treatment = rows_idx
        .iter()
        .map(|&i| corpus.questions[i].details.is_some())
        .collect();
    let target = rows_idx.iter().map(|&i| labels[i]).collect();
    Ok(UpliftDataset {
        ids: rows_idx
            .iter()
            .map(|&i| corpus.questions[i].id.clone())
            .collect(),
        data: Dataset::new(cols, target, Some(treatment))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpliftParams {
    pub forest: ForestParams,
}

impl Default for UpliftParams {
    fn default() -> Self {
        UpliftParams {
            forest: ForestParams {
                n_trees: 100,
                min_leaf: 100,
                mode: Mode::Uplift,
                significance: 0.05,
                min_arm: 20,
                ..ForestParams::default()
            },
        }
    }
}

/// A fitted uplift forest with the attribute layout it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpliftModel {
    pub version: u32,
    pub with_topic: bool,
    pub forest: Forest,
    pub treated_fraction: f64,
    pub n_train: usize,
}

pub fn fit_uplift(data: &UpliftDataset, params: &UpliftParams, seed: u64) -> Result<UpliftModel> {
    let forest = fit_forest(
        &data.data,
        &ForestParams {
            mode: Mode::Uplift,
            seed,
            ..params.forest.clone()
        },
    )?;
    Ok(UpliftModel {
        version: UPLIFT_MODEL_VERSION,
        with_topic: data.data.schema.index_of("topic").is_some(),
        forest,
        treated_fraction: data.treated_fraction(),
        n_train: data.len(),
    })
}

impl UpliftModel {
    pub fn predict(&self, row: &UpliftRow) -> Result<f64> {
        if self.with_topic && row.topic.is_none() {
            return Err(Error::MissingFeature("topic".into()));
        }
        Ok(self.forest.predict(&row.values(self.with_topic))?.value())
    }

    pub fn predict_dataset(&self, data: &UpliftDataset) -> Result<Vec<f64>> {
        self.forest.predict_dataset(&data.data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: UpliftModel = serde_json::from_slice(bytes)?;
        if m.version != UPLIFT_MODEL_VERSION {
            return Err(Error::Version {
                kind: "uplift model",
                found: m.version,
                expected: UPLIFT_MODEL_VERSION,
            });
        }
        // Re-validates the forest document.
        Forest::from_json(&serde_json::to_vec(&m.forest)?)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainsPoint {
    pub phi: f64,
    /// Incremental responders among the top `phi` rows, `(r_T − r_C)·n`; absent when
    /// an arm is empty in the prefix.
    pub gains: Option<f64>,
    /// `gains / N`.
    pub per_population: Option<f64>,
    /// The straight line to the endpoint, per population.
    pub diagonal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsCurve {
    pub points: Vec<GainsPoint>,
    /// Overall `r_T − r_C`.
    pub overall_uplift: f64,
    pub n: usize,
}

impl GainsCurve {
    /// Per-population gains scaled so the endpoint is 1 (undefined for a zero endpoint).
    pub fn normalized(&self) -> Vec<(f64, Option<f64>)> {
        self.points
            .iter()
            .map(|p| {
                let v = p
                    .per_population
                    .filter(|_| self.overall_uplift != 0.0)
                    .map(|g| g / self.overall_uplift);
                (p.phi, v)
            })
            .collect()
    }

    /// Largest absolute gap to the diagonal, per population.
    pub fn max_diagonal_gap(&self) -> f64 {
        self.points
            .iter()
            .filter_map(|p| p.per_population.map(|g| (g - p.diagonal).abs()))
            .fold(0.0, f64::max)
    }

    /// Area between the curve and the diagonal (trapezoids over defined points).
    pub fn area_above_diagonal(&self) -> f64 {
        self.points
            .windows(2)
            .filter_map(|w| match (w[0].per_population, w[1].per_population) {
                (Some(a), Some(b)) => {
                    Some((w[1].phi - w[0].phi) * ((a - w[0].diagonal) + (b - w[1].diagonal)) / 2.0)
                }
                _ => None,
            })
            .sum()
    }

    /// `phi` of the highest defined point.
    pub fn peak_phi(&self) -> f64 {
        self.points
            .iter()
            .filter_map(|p| p.per_population.map(|g| (p.phi, g)))
            .fold((0.0, f64::NEG_INFINITY), |best, x| {
                if x.1 > best.1 {
                    x
                } else {
                    best
                }
            })
            .0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("phi,gains,diagonal\n");
        for p in &self.points {
            let g = p
                .per_population
                .map_or_else(String::new, |g| format!("{g:.6}"));
            s.push_str(&format!("{:.4},{g},{:.6}\n", p.phi, p.diagonal));
        }
        s
    }
}

/// Incremental-gains curve at `n_points` evenly spaced fractions (plus zero). Rows
/// are ranked by score descending, ties by index.
pub fn incremental_gains(
    scores: &[f64],
    treatment: &[bool],
    outcome: &[bool],
    n_points: usize,
) -> Result<GainsCurve> {
    let n = scores.len();
    if treatment.len() != n || outcome.len() != n {
        return Err(Error::InvalidInput(
            "scores, treatment and outcome differ in length".into(),
        ));
    }
    if n_points == 0 {
        return Err(Error::Config("n_points must be positive".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("scores must not be NaN".into()));
    }
    let nt = treatment.iter().filter(|&&t| t).count();
    if nt == 0 || nt == n {
        return Err(Error::Degenerate("a treatment arm is empty".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    // Cumulative (treated, treated responders, control, control responders).
    let mut cum = vec![(0u32, 0u32, 0u32, 0u32); n + 1];
    for (k, &i) in order.iter().enumerate() {
        let (mut a, mut b, mut c, mut d) = cum[k];
        if treatment[i] {
            a += 1;
            b += u32::from(outcome[i]);
        } else {
            c += 1;
            d += u32::from(outcome[i]);
        }
        cum[k + 1] = (a, b, c, d);
    }
    let gains_at = |k: usize| -> Option<f64> {
        let (a, b, c, d) = cum[k];
        if k == 0 {
            return Some(0.0);
        }
        (a > 0 && c > 0)
            .then(|| (f64::from(b) / f64::from(a) - f64::from(d) / f64::from(c)) * k as f64)
    };
    let overall = gains_at(n).expect("both arms present") / n as f64;
    let points = (0..=n_points)
        .map(|j| {
            let phi = j as f64 / n_points as f64;
            let k = ((phi * n as f64).round() as usize).min(n);
            let g = gains_at(k);
            GainsPoint {
                phi,
                gains: g,
                per_population: g.map(|g| g / n as f64),
                diagonal: phi * overall,
            }
        })
        .collect();
    Ok(GainsCurve {
        points,
        overall_uplift: overall,
        n,
    })
}

/// Share of scores above zero.
pub fn persuadable_fraction(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().filter(|&&s| s > 0.0).count() as f64 / scores.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

/// Fixed-width histogram with bin edges at multiples of `width`.
pub fn uplift_histogram(scores: &[f64], width: f64) -> Result<Vec<HistogramBin>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Config("bin width must be positive".into()));
    }
    if scores.is_empty() {
        return Ok(Vec::new());
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let key = |s: f64| (s / width).floor() as i64;
    let lo = scores.iter().map(|&s| key(s)).min().expect("non-empty");
    let hi = scores.iter().map(|&s| key(s)).max().expect("non-empty");
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &s in scores {
        counts[(key(s) - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            center: ((lo + i as i64) as f64 + 0.5) * width,
            count,
        })
        .collect())
}

/// Center of the fullest bin (the lowest on ties).
pub fn histogram_mode(bins: &[HistogramBin]) -> Option<f64> {
    bins.iter()
        .fold(None, |best: Option<&HistogramBin>, b| match best {
            Some(x) if x.count >= b.count => Some(x),
            _ => Some(b),
        })
        .map(|b| b.center)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: usize,
    pub n: usize,
    pub n_treated: usize,
    pub n_control: usize,
    pub mean_predicted: f64,
    /// Observed `r_T − r_C` within the group; absent when an arm is empty.
    pub observed_uplift: Option<f64>,
}

/// Rows ranked by score descending and cut into `groups` equal parts.
pub fn group_table(
    scores: &[f64],
    treatment: &[bool],
    outcome: &[bool],
    groups: usize,
) -> Result<Vec<GroupRow>> {
    let n = scores.len();
    if treatment.len() != n || outcome.len() != n {
        return Err(Error::InvalidInput(
            "scores, treatment and outcome differ in length".into(),
        ));
    }
    if groups == 0 || groups > n {
        return Err(Error::Config(format!(
            "cannot cut {n} rows into {groups} groups"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok((0..groups)
        .map(|g| {
            let part = &order[g * n / groups..(g + 1) * n / groups];
            let (mut a, mut b, mut c, mut d) = (0usize, 0usize, 0usize, 0usize);
            for &i in part {
                if treatment[i] {
                    a += 1;
                    b += usize::from(outcome[i]);
                } else {
                    c += 1;
                    d += usize::from(outcome[i]);
                }
            }
            GroupRow {
                group: g + 1,
                n: part.len(),
                n_treated: a,
                n_control: c,
                mean_predicted: part.iter().map(|&i| scores[i]).sum::<f64>() / part.len() as f64,
                observed_uplift: (a > 0 && c > 0)
                    .then(|| b as f64 / a as f64 - d as f64 / c as f64),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedEffect {
    /// Overall `r_T − r_C`.
    pub naive: f64,
    /// Within-stratum differences averaged with stratum-size weights, over strata
    /// holding both arms.
    pub stratified: f64,
    pub strata_used: usize,
    pub strata_total: usize,
}

/// Arm comparison within week × topic strata, the optional correction for
/// non-random treatment.
pub fn stratified_effect(data: &UpliftDataset) -> Result<StratifiedEffect> {
    let d = &data.data;
    let week = d
        .schema
        .index_of("week")
        .ok_or_else(|| Error::MissingFeature("week".into()))?;
    let topic = d.schema.index_of("topic");
    let t = data.treatment();
    let y = data.outcome();
    let mut strata: HashMap<(u16, u16), [usize; 4]> = HashMap::new();
    let mut all = [0usize; 4];
    for r in 0..d.n_rows() {
        let key = (d.codes(week)[r], topic.map_or(0, |f| d.codes(f)[r]));
        let slot = if t[r] { 0 } else { 2 };
        for acc in [strata.entry(key).or_default(), &mut all] {
            acc[slot] += 1;
            acc[slot + 1] += usize::from(y[r]);
        }
    }
    if all[0] == 0 || all[2] == 0 {
        return Err(Error::Degenerate("a treatment arm is empty".into()));
    }
    let rate = |a: [usize; 4]| a[1] as f64 / a[0] as f64 - a[3] as f64 / a[2] as f64;
    let mut keys: Vec<_> = strata.keys().copied().collect();
    keys.sort_unstable();
    let (mut sum, mut weight, mut used) = (0.0, 0usize, 0);
    for k in &keys {
        let a = strata[k];
        if a[0] > 0 && a[2] > 0 {
            let w = a[0] + a[2];
            sum += rate(a) * w as f64;
            weight += w;
            used += 1;
        }
    }
    Ok(StratifiedEffect {
        naive: rate(all),
        stratified: if weight > 0 {
            sum / weight as f64
        } else {
            f64::NAN
        },
        strata_used: used,
        strata_total: keys.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeImportance {
    pub attribute: String,
    /// Share of the total positive importance, in percent.
    pub percent: f64,
    pub mean_drop: f64,
}

/// Permutation importance on the transformed outcome, as percentages summing to
/// 100 (negative drops count as zero), largest first.
pub fn uplift_importance(
    model: &UpliftModel,
    data: &UpliftDataset,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<AttributeImportance>> {
    let report = permutation_importance(
        &model.forest,
        &data.data,
        &ImportanceParams {
            repetitions,
            seed,
            rows: EvalRows::All,
            metric: Metric::TransformedOutcome,
        },
    )?;
    let total: f64 = report.features.iter().map(|f| f.mean_drop.max(0.0)).sum();
    let mut out: Vec<AttributeImportance> = report
        .features
        .iter()
        .map(|f| AttributeImportance {
            attribute: f.name.clone(),
            percent: if total > 0.0 {
                100.0 * f.mean_drop.max(0.0) / total
            } else {
                0.0
            },
            mean_drop: f.mean_drop,
        })
        .collect();
    out.sort_by(|a, b| {
        b.percent
            .total_cmp(&a.percent)
            .then(a.attribute.cmp(&b.attribute))
    });
    Ok(out)
}
