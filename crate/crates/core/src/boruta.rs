//! All-relevant feature selection with shadow attributes.
//!
//! Every iteration adds a shuffled copy of each live feature, fits a classification
//! forest, and counts a hit for each feature whose importance Z-score beats the best
//! shadow. Hit counts are tested against a fair coin.

use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::ensemble::{
    fit_forest, permutation_importance, splitmix64, Column, Dataset, EvalRows, FeatureKind,
    ForestParams, ImportanceParams, Metric, Mode,
};
use crate::error::{Error, Result};
use crate::textfeat::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaParams {
    pub max_iterations: usize,
    /// Share of rows sampled once before the first iteration.
    pub sample_fraction: f64,
    /// The sample never has fewer rows than this (or than the data has).
    pub min_sample_rows: usize,
    /// Per-tail level of the hit test, Bonferroni-adjusted over the features.
    pub significance: f64,
    pub seed: u64,
    pub forest: ForestParams,
    pub repetitions: usize,
    pub metric: Metric,
}

impl Default for BorutaParams {
    fn default() -> Self {
        BorutaParams {
            max_iterations: 100,
            sample_fraction: 0.1,
            min_sample_rows: 5_000,
            significance: 0.01,
            seed: 0,
            forest: ForestParams {
                n_trees: 30,
                min_leaf: 30,
                ..ForestParams::default()
            },
            repetitions: 5,
            metric: Metric::Accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Confirmed,
    Tentative,
    Rejected,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Confirmed => "confirmed",
            Status::Tentative => "tentative",
            Status::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaFeature {
    pub name: String,
    pub kind: String,
    pub status: Status,
    /// Mean importance Z over the iterations the feature took part in.
    pub mean_z: f64,
    pub hits: usize,
    /// Iterations the feature took part in.
    pub trials: usize,
    /// Iteration at which the test decided it, if it did.
    pub decided_at: Option<usize>,
    /// Set when a tentative feature was resolved by the rough fix.
    pub rough_fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaReport {
    pub features: Vec<BorutaFeature>,
    pub iterations: usize,
    pub sample_rows: usize,
    pub sample_fraction: f64,
    /// Median over iterations of the best shadow Z; the rough-fix reference.
    pub median_max_shadow_z: f64,
}

impl BorutaReport {
    pub fn get(&self, name: &str) -> Option<&BorutaFeature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn with_status(&self, status: Status) -> Vec<&str> {
        self.features
            .iter()
            .filter(|f| f.status == status)
            .map(|f| f.name.as_str())
            .collect()
    }

    /// Feature names by mean Z, largest first.
    pub fn ranking(&self) -> Vec<&str> {
        let mut v: Vec<&BorutaFeature> = self.features.iter().collect();
        v.sort_by(|a, b| b.mean_z.total_cmp(&a.mean_z).then(a.name.cmp(&b.name)));
        v.into_iter().map(|f| f.name.as_str()).collect()
    }
}

fn kind_label(kind: &FeatureKind) -> &'static str {
    match kind {
        FeatureKind::Numeric => "numeric",
        FeatureKind::Categorical { .. } => "categorical",
        FeatureKind::Boolean => "boolean",
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Runs the selection on `data` (its target is the class label).
pub fn run_boruta(data: &Dataset, params: &BorutaParams) -> Result<BorutaReport> {
    let p = data.n_features();
    if p < 2 {
        return Err(Error::InvalidInput(
            "at least two features are required".into(),
        ));
    }
    if params.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be positive".into()));
    }
    if !(0.0 < params.significance && params.significance < 1.0) {
        return Err(Error::Config("significance must lie in (0, 1)".into()));
    }
    if !(0.0 < params.sample_fraction && params.sample_fraction <= 1.0) {
        return Err(Error::Config("sample_fraction must lie in (0, 1]".into()));
    }
    let pos = data.target.iter().filter(|&&y| y).count();
    if pos == 0 || pos == data.n_rows() {
        return Err(Error::Degenerate("target has a single class".into()));
    }
    if data.n_rows() < 2 * params.forest.min_leaf {
        return Err(Error::InvalidInput(format!(
            "{} rows is fewer than twice the minimum leaf size {}",
            data.n_rows(),
            params.forest.min_leaf
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = data.n_rows();
    let target_rows = ((n as f64 * params.sample_fraction).round() as usize)
        .max(params.min_sample_rows)
        .min(n);
    let mut rows: Vec<usize> = (0..n).collect();
    if target_rows < n {
        rows.shuffle(&mut rng);
        rows.truncate(target_rows);
        rows.sort_unstable();
    }
    // Features are processed in name order so the result does not depend on column order.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        data.schema.features[a]
            .name
            .cmp(&data.schema.features[b].name)
    });
    let base = data.subset(&rows).select_features(&order);

    let mut status = vec![Status::Tentative; p];
    let mut hits = vec![0usize; p];
    let mut trials = vec![0usize; p];
    let mut z_sum = vec![0.0; p];
    let mut decided_at = vec![None; p];
    let mut max_shadow = Vec::new();
    let adjusted = params.significance / p as f64;
    let mut iterations = 0;

    for it in 1..=params.max_iterations {
        let live: Vec<usize> = (0..p).filter(|&f| status[f] != Status::Rejected).collect();
        if live.iter().all(|&f| status[f] != Status::Tentative) {
            break;
        }
        iterations = it;
        let it_seed = splitmix64(params.seed ^ (it as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut shadow_rng = ChaCha8Rng::seed_from_u64(it_seed);
        let mut d = base.select_features(&live);
        for (k, &f) in live.iter().enumerate() {
            d.push_shuffled_copy(
                k,
                format!("shadow_{}", base.schema.features[f].name),
                &mut shadow_rng,
            );
        }
        let forest = fit_forest(
            &d,
            &ForestParams {
                mode: Mode::Classify,
                seed: it_seed,
                ..params.forest.clone()
            },
        )?;
        let imp = permutation_importance(
            &forest,
            &d,
            &ImportanceParams {
                repetitions: params.repetitions,
                seed: splitmix64(it_seed),
                rows: EvalRows::OutOfBag,
                metric: params.metric,
            },
        )?;
        let z = |k: usize| imp.features[k].z.unwrap_or(0.0);
        let best_shadow = (live.len()..2 * live.len())
            .map(z)
            .fold(f64::NEG_INFINITY, f64::max);
        max_shadow.push(best_shadow);
        for (k, &f) in live.iter().enumerate() {
            trials[f] += 1;
            z_sum[f] += z(k);
            if z(k) > best_shadow {
                hits[f] += 1;
            }
        }
        for &f in &live {
            if status[f] != Status::Tentative {
                continue;
            }
            let coin = Binomial::new(0.5, trials[f] as u64).expect("valid binomial");
            let upper = if hits[f] == 0 {
                1.0
            } else {
                coin.sf(hits[f] as u64 - 1)
            };
            let lower = coin.cdf(hits[f] as u64);
            if upper < adjusted {
                status[f] = Status::Confirmed;
                decided_at[f] = Some(it);
            } else if lower < adjusted {
                status[f] = Status::Rejected;
                decided_at[f] = Some(it);
            }
        }
    }

    let reference = median(&mut max_shadow.clone());
    let mut features: Vec<BorutaFeature> = (0..p)
        .map(|f| {
            let mean_z = if trials[f] > 0 {
                z_sum[f] / trials[f] as f64
            } else {
                0.0
            };
            let mut st = status[f];
            let rough_fixed = st == Status::Tentative;
            if rough_fixed {
                st = if mean_z > reference {
                    Status::Confirmed
                } else {
                    Status::Rejected
                };
            }
            BorutaFeature {
                name: base.schema.features[f].name.clone(),
                kind: kind_label(&base.schema.features[f].kind).to_owned(),
                status: st,
                mean_z,
                hits: hits[f],
                trials: trials[f],
                decided_at: decided_at[f],
                rough_fixed,
            }
        })
        .collect();
    // Back to the caller's column order.
    let mut by_input = vec![0; p];
    for (k, &orig) in order.iter().enumerate() {
        by_input[orig] = k;
    }
    features = by_input.iter().map(|&k| features[k].clone()).collect();

    Ok(BorutaReport {
        features,
        iterations,
        sample_rows: rows.len(),
        sample_fraction: rows.len() as f64 / n as f64,
        median_max_shadow_z: reference,
    })
}

/// Attribute group (`"I"` or `"II"`) of a popularity-table column.
pub fn attribute_group(name: &str) -> &'static str {
    match name {
        "week" | "platform" | "product_version" | "topic" => "I",
        _ => "II",
    }
}

/// Group I and II attributes as a forest dataset. `topic` and `coherency` are
/// included only when every vector carries them.
pub fn popularity_dataset(features: &[FeatureVector], labels: &[bool]) -> Result<Dataset> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(
            "one label per feature vector is required".into(),
        ));
    }
    let num = |f: &dyn Fn(&FeatureVector) -> f64| Column::Numeric(features.iter().map(f).collect());
    let cat = |f: &dyn Fn(&FeatureVector) -> String| {
        Column::Categorical(features.iter().map(f).collect())
    };
    let flag =
        |f: &dyn Fn(&FeatureVector) -> bool| Column::Boolean(features.iter().map(f).collect());
    let mut cols: Vec<(String, Column)> = vec![
        ("week".into(), num(&|v| f64::from(v.group1.week))),
        ("platform".into(), cat(&|v| v.group1.platform.clone())),
        (
            "product_version".into(),
            cat(&|v| v.group1.product_version.clone()),
        ),
    ];
    if features.iter().all(|v| v.group1.topic.is_some()) {
        cols.push((
            "topic".into(),
            cat(&|v| v.group1.topic.unwrap_or(0).to_string()),
        ));
    }
    cols.extend([
        (
            "log_question_len".into(),
            num(&|v| v.group2.log_question_len),
        ),
        (
            "log_details_len_plus1".into(),
            num(&|v| v.group2.log_details_len_plus1),
        ),
        ("log_summary_len".into(), num(&|v| v.group2.log_summary_len)),
        (
            "first_word_summary".into(),
            cat(&|v| v.group2.first_word_summary.clone()),
        ),
        (
            "first_word_details".into(),
            cat(&|v| v.group2.first_word_details.clone()),
        ),
        ("details_flag".into(), flag(&|v| v.group2.details_flag)),
        (
            "proper_capitalization".into(),
            flag(&|v| v.group2.proper_capitalization),
        ),
        ("question_mark".into(), flag(&|v| v.group2.question_mark)),
        (
            "excessive_capitalization".into(),
            flag(&|v| v.group2.excessive_capitalization),
        ),
    ]);
    if features.iter().all(|v| v.group2.coherency.is_some()) {
        cols.push((
            "coherency".into(),
            num(&|v| v.group2.coherency.unwrap_or(0.0)),
        ));
    }
    Dataset::new(cols, labels.to_vec(), None)
}

/// One row per feature with the attribute table columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub attribute: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub mean_z: f64,
    pub group: String,
    pub status: Status,
}

/// Attribute table sorted by mean Z, largest first.
pub fn attribute_table(report: &BorutaReport) -> Vec<AttributeRow> {
    report
        .ranking()
        .into_iter()
        .map(|name| {
            let f = report.get(name).expect("ranked names exist");
            AttributeRow {
                attribute: f.name.clone(),
                kind: f.kind.clone(),
                mean_z: f.mean_z,
                group: attribute_group(&f.name).to_owned(),
                status: f.status,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Five features that drive the label and five that do not.
    pub(crate) fn planted(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<bool> = (0..n)
            .map(|r| {
                let s: f64 = (0..5).map(|j| x[j][r] * 2.0).sum();
                rng.random::<f64>() < 1.0 / (1.0 + (-s).exp())
            })
            .collect();
        let cols = x
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let name = if j < 5 {
                    format!("rel{j}")
                } else {
                    format!("noise{}", j - 5)
                };
                (name, Column::Numeric(v))
            })
            .collect();
        Dataset::new(cols, y, None).unwrap()
    }

    #[test]
    fn planted_relevance_small() {
        let d = planted(2000, 3);
        let r = run_boruta(
            &d,
            &BorutaParams {
                max_iterations: 30,
                ..Default::default()
            },
        )
        .unwrap();
        for j in 0..5 {
            assert_eq!(
                r.get(&format!("rel{j}")).unwrap().status,
                Status::Confirmed,
                "{r:#?}"
            );
        }
        assert!(r.with_status(Status::Rejected).len() >= 4);
        assert_eq!(r.sample_rows, 2000);
    }

    #[test]
    fn constant_feature_rejected_and_label_copy_confirmed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y: Vec<bool> = (0..600).map(|_| rng.random()).collect();
        let noise: Vec<f64> = (0..600).map(|_| rng.random()).collect();
        let d = Dataset::new(
            vec![
                ("copy".into(), Column::Boolean(y.clone())),
                ("constant".into(), Column::Numeric(vec![1.0; 600])),
                ("noise".into(), Column::Numeric(noise)),
            ],
            y,
            None,
        )
        .unwrap();
        let r = run_boruta(
            &d,
            &BorutaParams {
                max_iterations: 40,
                ..Default::default()
            },
        )
        .unwrap();
        let copy = r.get("copy").unwrap();
        assert_eq!(copy.status, Status::Confirmed);
        // Bonferroni over 3 features at 0.01: 0.5^k < 0.01 / 3 needs k = 9.
        assert!(copy.decided_at.unwrap() <= 9 + 2);
        assert_eq!(r.get("constant").unwrap().status, Status::Rejected);
    }

    #[test]
    fn column_order_does_not_matter() {
        let d = planted(800, 1);
        let params = BorutaParams {
            max_iterations: 8,
            ..Default::default()
        };
        let a = run_boruta(&d, &params).unwrap();
        let rev: Vec<usize> = (0..10).rev().collect();
        let b = run_boruta(&d.select_features(&rev), &params).unwrap();
        for f in &a.features {
            assert_eq!(Some(f), b.get(&f.name));
        }
    }

    #[test]
    fn sample_floor_and_errors() {
        let d = planted(800, 2);
        let params = BorutaParams {
            max_iterations: 1,
            min_sample_rows: 300,
            ..Default::default()
        };
        assert_eq!(run_boruta(&d, &params).unwrap().sample_rows, 300);
        let one = d.select_features(&[0]);
        assert!(matches!(
            run_boruta(&one, &params),
            Err(Error::InvalidInput(_))
        ));
        let mut flat = d.clone();
        flat.target = vec![true; 800];
        assert!(matches!(
            run_boruta(&flat, &params),
            Err(Error::Degenerate(_))
        ));
    }
}
