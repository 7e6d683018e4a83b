//! Top-decile popularity classifier: quantile binning of numeric attributes, one-hot
//! encoding of categorical ones, an optional hashed text bag, and L2-regularized
//! logistic regression.

use std::fmt;
use std::hash::Hasher;
use std::path::Path;
use std::str::FromStr;

use fnv::FnvHasher;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{label_top_decile, QuestionCorpus};
use crate::ensemble::splitmix64;
use crate::error::{Error, Result};
use crate::textfeat::{extract_features, text_bag, FeatureVector, OTHER};
use crate::topics::{InferenceParams, TopicModel};

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.3;
pub const DEFAULT_TEXT_DIM: usize = 1 << 14;

/// Ordered cut points; value `x` falls in bin `#{cuts ≤ x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningMap {
    pub cuts: Vec<f64>,
}

impl BinningMap {
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c <= x)
    }
}

/// Quantile binning. Cut `j` is the `⌊j·n/B⌋`-th smallest value; repeated cuts and
/// cuts at the minimum are dropped, so every bin holds at least one training value.
pub fn fit_binning(values: &[f64], n_bins: usize) -> BinningMap {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() || n_bins <= 1 {
        return BinningMap { cuts: Vec::new() };
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let min = sorted[0];
    let mut cuts: Vec<f64> = (1..n_bins)
        .map(|j| sorted[(j * n / n_bins).min(n - 1)])
        .filter(|&c| c > min)
        .collect();
    cuts.dedup();
    BinningMap { cuts }
}

/// Attribute groups a model may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureGroups {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "I+II")]
    IandII,
    #[serde(rename = "I+III")]
    IandIII,
    #[serde(rename = "I+II+III")]
    All,
}

impl FeatureGroups {
    pub const ALL: [FeatureGroups; 4] = [
        FeatureGroups::I,
        FeatureGroups::IandII,
        FeatureGroups::IandIII,
        FeatureGroups::All,
    ];

    pub fn style(self) -> bool {
        matches!(self, FeatureGroups::IandII | FeatureGroups::All)
    }

    pub fn text(self) -> bool {
        matches!(self, FeatureGroups::IandIII | FeatureGroups::All)
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureGroups::I => "I",
            FeatureGroups::IandII => "I+II",
            FeatureGroups::IandIII => "I+III",
            FeatureGroups::All => "I+II+III",
        }
    }
}

impl fmt::Display for FeatureGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FeatureGroups {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s
            .trim()
            .to_ascii_uppercase()
            .replace([',', ' '], "+")
            .replace("GROUP", "");
        match norm.as_str() {
            "I" | "1" => Ok(FeatureGroups::I),
            "I+II" | "1+2" => Ok(FeatureGroups::IandII),
            "I+III" | "1+3" => Ok(FeatureGroups::IandIII),
            "I+II+III" | "1+2+3" => Ok(FeatureGroups::All),
            _ => Err(Error::InvalidInput(format!("unknown feature groups `{s}`"))),
        }
    }
}

/// A single attribute value pulled out of a [`FeatureVector`].
enum Raw {
    Num(f64),
    Cat(String),
    Flag(bool),
}

const GROUP1: [&str; 4] = ["week", "platform", "product_version", "topic"];
const GROUP2: [&str; 10] = [
    "log_question_len",
    "log_details_len_plus1",
    "log_summary_len",
    "first_word_summary",
    "first_word_details",
    "coherency",
    "details_flag",
    "proper_capitalization",
    "question_mark",
    "excessive_capitalization",
];

fn raw_value(fv: &FeatureVector, name: &str) -> Option<Raw> {
    let g1 = &fv.group1;
    let g2 = &fv.group2;
    Some(match name {
        "week" => Raw::Cat(g1.week.to_string()),
        "platform" => Raw::Cat(g1.platform.clone()),
        "product_version" => Raw::Cat(g1.product_version.clone()),
        "topic" => Raw::Cat(g1.topic?.to_string()),
        "log_question_len" => Raw::Num(g2.log_question_len),
        "log_details_len_plus1" => Raw::Num(g2.log_details_len_plus1),
        "log_summary_len" => Raw::Num(g2.log_summary_len),
        "first_word_summary" => Raw::Cat(g2.first_word_summary.clone()),
        "first_word_details" => Raw::Cat(g2.first_word_details.clone()),
        "coherency" => Raw::Num(g2.coherency?),
        "details_flag" => Raw::Flag(g2.details_flag),
        "proper_capitalization" => Raw::Flag(g2.proper_capitalization),
        "question_mark" => Raw::Flag(g2.question_mark),
        "excessive_capitalization" => Raw::Flag(g2.excessive_capitalization),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Encoding {
    /// One column per quantile bin.
    Binned(BinningMap),
    /// One column per training level plus a final `OTHER` column.
    OneHot {
        levels: Vec<String>,
    },
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub name: String,
    pub offset: usize,
    pub encoding: Encoding,
}

impl EncodedFeature {
    pub fn width(&self) -> usize {
        match &self.encoding {
            Encoding::Binned(b) => b.n_bins(),
            Encoding::OneHot { levels } => levels.len() + 1,
            Encoding::Flag => 1,
        }
    }
}

/// Maps feature vectors to sparse design rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub features: Vec<EncodedFeature>,
    pub dense_dim: usize,
    pub text_dim: Option<usize>,
}

pub type SparseRow = Vec<(u32, f64)>;

impl Encoder {
    /// Builds the encoder from training vectors. Optional attributes (topic,
    /// coherency) are used only when every training vector has them.
    pub fn fit(
        train: &[FeatureVector],
        groups: FeatureGroups,
        n_bins: usize,
        text_dim: usize,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("no training vectors".into()));
        }
        let mut names: Vec<&str> = GROUP1.to_vec();
        if groups.style() {
            names.extend(GROUP2);
        }
        let mut features = Vec::new();
        let mut offset = 0;
        for name in names {
            let values: Option<Vec<Raw>> = train.iter().map(|fv| raw_value(fv, name)).collect();
            let Some(values) = values else { continue };
            let encoding = match &values[0] {
                Raw::Num(_) => {
                    let nums: Vec<f64> = values
                        .iter()
                        .map(|v| match v {
                            Raw::Num(x) => *x,
                            _ => unreachable!(),
                        })
                        .collect();
                    Encoding::Binned(fit_binning(&nums, n_bins))
                }
                Raw::Cat(_) => {
                    let mut levels: Vec<String> = values
                        .iter()
                        .map(|v| match v {
                            Raw::Cat(s) => s.clone(),
                            _ => unreachable!(),
                        })
                        .filter(|s| s != OTHER)
                        .collect();
                    levels.sort();
                    levels.dedup();
                    Encoding::OneHot { levels }
                }
                Raw::Flag(_) => Encoding::Flag,
            };
            let f = EncodedFeature {
                name: name.to_owned(),
                offset,
                encoding,
            };
            offset += f.width();
            features.push(f);
        }
        let text_dim = if groups.text() {
            if train
                .iter()
                .any(|fv| fv.group3.as_ref().is_none_or(|b| b.dim != text_dim))
            {
                return Err(Error::MissingFeature(format!(
                    "text_bag (dimension {text_dim})"
                )));
            }
            Some(text_dim)
        } else {
            None
        };
        Ok(Encoder {
            features,
            dense_dim: offset,
            text_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dense_dim + self.text_dim.unwrap_or(0)
    }

    fn column(&self, f: &EncodedFeature, fv: &FeatureVector) -> Result<(u32, f64)> {
        let raw = raw_value(fv, &f.name).ok_or_else(|| Error::MissingFeature(f.name.clone()))?;
        let local = match (&f.encoding, raw) {
            (Encoding::Binned(b), Raw::Num(x)) => {
                if !x.is_finite() {
                    return Err(Error::InvalidInput(format!("`{}` is not finite", f.name)));
                }
                b.bin(x)
            }
            (Encoding::OneHot { levels }, Raw::Cat(s)) => {
                levels.binary_search(&s).unwrap_or(levels.len())
            }
            (Encoding::Flag, Raw::Flag(b)) => {
                return Ok((f.offset as u32, if b { 1.0 } else { 0.0 }));
            }
            _ => unreachable!("feature kinds are fixed by name"),
        };
        Ok(((f.offset + local) as u32, 1.0))
    }

    pub fn encode(&self, fv: &FeatureVector) -> Result<SparseRow> {
        let mut row = Vec::with_capacity(self.features.len() + 64);
        for f in &self.features {
            let (c, v) = self.column(f, fv)?;
            if v != 0.0 {
                row.push((c, v));
            }
        }
        if let Some(dim) = self.text_dim {
            let bag = fv
                .group3
                .as_ref()
                .ok_or_else(|| Error::MissingFeature("text_bag".into()))?;
            if bag.dim != dim {
                return Err(Error::Schema {
                    field: "text_bag".into(),
                    message: format!("dimension {} instead of {dim}", bag.dim),
                });
            }
            row.extend(
                bag.entries
                    .iter()
                    .map(|&(b, c)| (self.dense_dim as u32 + b, c.ln_1p())),
            );
        }
        Ok(row)
    }

    /// Name of the attribute owning design column `c`.
    pub fn column_owner(&self, c: usize) -> &str {
        if c >= self.dense_dim {
            return "text_bag";
        }
        self.features
            .iter()
            .find(|f| (f.offset..f.offset + f.width()).contains(&c))
            .map_or("unknown", |f| f.name.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lbfgs,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub method: Method,
    /// Stop once the Euclidean gradient norm is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            method: Method::Lbfgs,
            tolerance: 1e-6,
            max_iterations: 5000,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    rows: &'a [SparseRow],
    y: &'a [bool],
    penalty: &'a [f64],
}

impl Problem<'_> {
    /// Objective and gradient at `theta = [w.., b]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.penalty.len();
        let (w, b) = (&theta[..d], theta[d]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.rows.len() as f64;
        let mut loss = 0.0;
        for (row, &y) in self.rows.iter().zip(self.y) {
            let z = b + row.iter().map(|&(c, x)| w[c as usize] * x).sum::<f64>();
            let yf = if y { 1.0 } else { 0.0 };
            loss += softplus(z) - yf * z;
            let r = (sigmoid(z) - yf) / n;
            for &(c, x) in row {
                grad[c as usize] += r * x;
            }
            grad[d] += r;
        }
        let mut obj = loss / n;
        for j in 0..d {
            obj += 0.5 * self.penalty[j] * w[j] * w[j];
            grad[j] += self.penalty[j] * w[j];
        }
        obj
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The objective [`fit_logistic_raw`] minimizes, evaluated at `(weights, intercept)`.
pub fn logistic_objective(
    rows: &[SparseRow],
    y: &[bool],
    penalty: &[f64],
    weights: &[f64],
    intercept: f64,
) -> f64 {
    let loss: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| {
            let z = intercept + r.iter().map(|&(c, x)| weights[c as usize] * x).sum::<f64>();
            // log(1 + e^z) − y z, computed stably.
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - if yi { z } else { 0.0 }
        })
        .sum();
    loss / rows.len() as f64
        + 0.5
            * penalty
                .iter()
                .zip(weights)
                .map(|(p, w)| p * w * w)
                .sum::<f64>()
}

/// Minimizes `mean log-loss + ½ Σ_j penalty_j w_j²` over weights and an unpenalized
/// intercept, with Armijo backtracking along L-BFGS or steepest-descent directions.
pub fn fit_logistic_raw(
    rows: &[SparseRow],
    y: &[bool],
    penalty: &[f64],
    opt: &OptimizerParams,
) -> Result<LogisticFit> {
    if rows.len() != y.len() {
        return Err(Error::InvalidInput("one label per row is required".into()));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Degenerate("labels contain a single class".into()));
    }
    let d = penalty.len();
    if penalty.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Config(
            "penalties must be finite and non-negative".into(),
        ));
    }
    for row in rows {
        for &(c, x) in row {
            if c as usize >= d || !x.is_finite() {
                return Err(Error::InvalidInput(
                    "design matrix entry out of range or not finite".into(),
                ));
            }
        }
    }
    let problem = Problem { rows, y, penalty };
    let mut theta = vec![0.0; d + 1];
    let prev = pos as f64 / y.len() as f64;
    theta[d] = (prev / (1.0 - prev)).ln();
    let mut g = vec![0.0; d + 1];
    let mut f = problem.eval(&theta, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut g_new = vec![0.0; d + 1];
    let mut step_hint = 1.0;

    for it in 0..opt.max_iterations {
        let gn = norm(&g);
        if gn <= opt.tolerance {
            return Ok(LogisticFit {
                weights: theta[..d].to_vec(),
                intercept: theta[d],
                iterations: it,
                grad_norm: gn,
                objective: f,
            });
        }
        let mut dir: Vec<f64> = match opt.method {
            Method::GradientDescent => g.iter().map(|v| -v).collect(),
            Method::Lbfgs => {
                let mut q = g.clone();
                let k = s_hist.len();
                let mut alphas = vec![0.0; k];
                for i in (0..k).rev() {
                    let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
                    alphas[i] = rho * dot(&s_hist[i], &q);
                    for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                        *qj -= alphas[i] * yj;
                    }
                }
                if k > 0 {
                    let gamma =
                        dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
                    q.iter_mut().for_each(|v| *v *= gamma);
                }
                for i in 0..k {
                    let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
                    let beta = rho * dot(&y_hist[i], &q);
                    for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                        *qj += sj * (alphas[i] - beta);
                    }
                }
                q.iter_mut().for_each(|v| *v = -*v);
                q
            }
        };
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let mut step = match opt.method {
            Method::Lbfgs if !s_hist.is_empty() => 1.0,
            Method::Lbfgs => 1.0 / norm(&dir).max(1.0),
            Method::GradientDescent => step_hint,
        };
        let mut trial = vec![0.0; d + 1];
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..=d {
                trial[j] = theta[j] + step * dir[j];
            }
            let ft = problem.eval(&trial, &mut g_new);
            if ft <= f + 1e-4 * step * slope {
                accepted = true;
                let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                if dot(&s, &yv) > 1e-12 * norm(&s) * norm(&yv) {
                    s_hist.push(s);
                    y_hist.push(yv);
                    if s_hist.len() > opt.memory.max(1) {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                }
                theta.copy_from_slice(&trial);
                f = ft;
                std::mem::swap(&mut g, &mut g_new);
                // Gradient descent grows the step after a success.
                step_hint = step * 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No decrease is representable: we are at the optimum up to rounding.
            let gn = norm(&g);
            if gn <= opt.tolerance * 100.0 {
                return Ok(LogisticFit {
                    weights: theta[..d].to_vec(),
                    intercept: theta[d],
                    iterations: it,
                    grad_norm: gn,
                    objective: f,
                });
            }
            return Err(Error::NotConverged {
                iterations: it,
                grad_norm: gn,
                objective: f,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opt.max_iterations,
        grad_norm: norm(&g),
        objective: f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityConfig {
    pub groups: FeatureGroups,
    pub n_bins: usize,
    pub l2: f64,
    /// Penalty on the text-bag weights.
    pub l2_text: f64,
    pub text_dim: usize,
    pub optimizer: OptimizerParams,
    pub seed: u64,
}

impl Default for PopularityConfig {
    fn default() -> Self {
        PopularityConfig {
            groups: FeatureGroups::IandII,
            n_bins: DEFAULT_BINS,
            l2: 1e-4,
            l2_text: 2e-3,
            text_dim: DEFAULT_TEXT_DIM,
            optimizer: OptimizerParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub corpus_sha256: Option<String>,
    pub n_train: usize,
    pub prevalence: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
    /// Set when trained on the non-holdout part of a corpus; the split is
    /// reproducible from `seed` and this fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityModel {
    pub version: u32,
    pub groups: FeatureGroups,
    pub encoder: Encoder,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l2: f64,
    pub l2_text: f64,
    /// Probabilities strictly above this are classified as top decile.
    pub threshold: f64,
    pub meta: TrainingMeta,
}

/// Trains a model on feature vectors and top-decile labels.
pub fn fit_logistic(
    train: &[FeatureVector],
    labels: &[bool],
    config: &PopularityConfig,
) -> Result<PopularityModel> {
    if train.len() != labels.len() {
        return Err(Error::InvalidInput(
            "one label per feature vector is required".into(),
        ));
    }
    let encoder = Encoder::fit(train, config.groups, config.n_bins, config.text_dim)?;
    let rows: Vec<SparseRow> = train
        .iter()
        .map(|fv| encoder.encode(fv))
        .collect::<Result<_>>()?;
    let mut penalty = vec![config.l2; encoder.dense_dim];
    penalty.extend(std::iter::repeat_n(
        config.l2_text,
        encoder.text_dim.unwrap_or(0),
    ));
    let fit = fit_logistic_raw(&rows, labels, &penalty, &config.optimizer)?;
    let mut model = PopularityModel {
        version: MODEL_VERSION,
        groups: config.groups,
        encoder,
        weights: fit.weights,
        intercept: fit.intercept,
        l2: config.l2,
        l2_text: config.l2_text,
        threshold: 0.5,
        meta: TrainingMeta {
            seed: config.seed,
            corpus_sha256: None,
            n_train: train.len(),
            prevalence: labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64,
            iterations: fit.iterations,
            grad_norm: fit.grad_norm,
            objective: fit.objective,
            holdout_fraction: None,
        },
    };
    let scores: Vec<f64> = rows.iter().map(|r| model.score_row(r)).collect();
    model.threshold = prevalence_threshold(&scores, model.meta.prevalence);
    Ok(model)
}

/// Threshold above which the share of `scores` equals `prevalence` as closely as
/// ties allow; midway between the neighbouring scores, kept inside (0, 1).
pub fn prevalence_threshold(scores: &[f64], prevalence: f64) -> f64 {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let k = ((prevalence * s.len() as f64).round() as usize).clamp(1, s.len());
    let t = if k < s.len() {
        (s[k - 1] + s[k]) / 2.0
    } else {
        s[k - 1] / 2.0
    };
    t.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
}

impl PopularityModel {
    fn affine_row(&self, row: &SparseRow) -> f64 {
        self.intercept
            + row
                .iter()
                .map(|&(c, x)| self.weights[c as usize] * x)
                .sum::<f64>()
    }

    /// Probability for an already encoded row.
    pub fn score_row(&self, row: &SparseRow) -> f64 {
        sigmoid(self.affine_row(row))
    }

    /// Pre-sigmoid score.
    pub fn affine(&self, fv: &FeatureVector) -> Result<f64> {
        Ok(self.affine_row(&self.encoder.encode(fv)?))
    }

    /// Probability of the top decile.
    pub fn score(&self, fv: &FeatureVector) -> Result<f64> {
        Ok(sigmoid(self.affine(fv)?))
    }

    pub fn score_batch(&self, fvs: &[FeatureVector]) -> Result<Vec<f64>> {
        fvs.iter().map(|fv| self.score(fv)).collect()
    }

    pub fn classify(&self, fv: &FeatureVector) -> Result<bool> {
        Ok(self.score(fv)? > self.threshold)
    }

    /// Per-attribute contributions to the affine score; they sum to the score minus
    /// the intercept.
    pub fn contributions(&self, fv: &FeatureVector) -> Result<Vec<(String, f64)>> {
        let row = self.encoder.encode(fv)?;
        let mut out: Vec<(String, f64)> = self
            .encoder
            .features
            .iter()
            .map(|f| (f.name.clone(), 0.0))
            .collect();
        if self.encoder.text_dim.is_some() {
            out.push(("text_bag".to_owned(), 0.0));
        }
        for (c, x) in row {
            let c = c as usize;
            let idx = if c >= self.encoder.dense_dim {
                out.len() - 1
            } else {
                self.encoder
                    .features
                    .iter()
                    .position(|f| (f.offset..f.offset + f.width()).contains(&c))
                    .expect("column owned by a feature")
            };
            out[idx].1 += self.weights[c] * x;
        }
        Ok(out)
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
        let m: PopularityModel = serde_json::from_slice(bytes)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Version {
                kind: "popularity model",
                found: m.version,
                expected: MODEL_VERSION,
            });
        }
        if m.weights.len() != m.encoder.dim() || m.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Schema {
                field: "weights".into(),
                message: "length or values inconsistent with the encoder".into(),
            });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub auc: f64,
    /// `(false positive rate, true positive rate)` from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
}

/// Area under the ROC curve as the Mann-Whitney statistic (ties count one half),
/// with the curve through each distinct score.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Roc> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(
            "one label per score is required".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("scores must not be NaN".into()));
    }
    let n1 = labels.iter().filter(|&&y| y).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::Degenerate("ROC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let (tp0, fp0) = (tp, fp);
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        // Pairs inside a tie block count one half.
        area += (fp - fp0) as f64 * (tp0 as f64 + (tp - tp0) as f64 / 2.0);
        points.push((fp as f64 / n0 as f64, tp as f64 / n1 as f64));
        i = j;
    }
    Ok(Roc {
        auc: area / (n0 as f64 * n1 as f64),
        points,
    })
}

/// Whether a question id falls in the holdout set: a seeded FNV-1a hash of the id,
/// mapped to [0, 1), is below `fraction`.
pub fn in_holdout(id: &str, seed: u64, fraction: f64) -> bool {
    let mut h = FnvHasher::default();
    h.write(&seed.to_le_bytes());
    h.write(id.as_bytes());
    // FNV's high bits barely move across short similar ids; mix before taking them.
    ((splitmix64(h.finish()) >> 11) as f64 / (1u64 << 53) as f64) < fraction
}

/// Train and holdout indices.
pub fn holdout_split<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    seed: u64,
    fraction: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, id) in ids.into_iter().enumerate() {
        if in_holdout(id, seed, fraction) {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

/// Feature vectors for every question, in corpus order. `text_dim` adds the text bag.
pub fn corpus_features(
    corpus: &QuestionCorpus,
    topic_model: Option<(&TopicModel, &InferenceParams)>,
    text_dim: Option<usize>,
) -> Vec<FeatureVector> {
    corpus
        .questions
        .par_iter()
        .map(|q| {
            let mut fv = extract_features(q, topic_model);
            fv.group3 = text_dim.map(|d| text_bag(q, d));
            fv
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEvaluation {
    pub groups: FeatureGroups,
    pub auc: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub iterations: usize,
    pub roc: Vec<(f64, f64)>,
}

/// Fits on the questions outside the holdout drawn with `config.seed`.
pub fn fit_with_holdout(
    corpus: &QuestionCorpus,
    features: &[FeatureVector],
    config: &PopularityConfig,
    holdout_fraction: f64,
) -> Result<PopularityModel> {
    if features.len() != corpus.len() {
        return Err(Error::InvalidInput(
            "one feature vector per question is required".into(),
        ));
    }
    let labels = label_top_decile(corpus)?.labels;
    let (train, _) = holdout_split(
        corpus.questions.iter().map(|q| q.id.as_str()),
        config.seed,
        holdout_fraction,
    );
    let x: Vec<FeatureVector> = train.iter().map(|&i| features[i].clone()).collect();
    let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
    let mut model = fit_logistic(&x, &y, config)?;
    model.meta.holdout_fraction = Some(holdout_fraction);
    Ok(model)
}

/// AUC of a saved model on the holdout it was trained without, or on the whole
/// corpus when the model records no holdout.
pub fn evaluate_model(
    model: &PopularityModel,
    corpus: &QuestionCorpus,
    features: &[FeatureVector],
) -> Result<GroupEvaluation> {
    if features.len() != corpus.len() {
        return Err(Error::InvalidInput(
            "one feature vector per question is required".into(),
        ));
    }
    let labels = label_top_decile(corpus)?.labels;
    let (n_train, test): (usize, Vec<usize>) = match model.meta.holdout_fraction {
        Some(f) => {
            let (train, test) = holdout_split(
                corpus.questions.iter().map(|q| q.id.as_str()),
                model.meta.seed,
                f,
            );
            (train.len(), test)
        }
        None => (model.meta.n_train, (0..corpus.len()).collect()),
    };
    let x: Vec<FeatureVector> = test.iter().map(|&i| features[i].clone()).collect();
    let y: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
    let roc = roc_auc(&model.score_batch(&x)?, &y)?;
    Ok(GroupEvaluation {
        groups: model.groups,
        auc: roc.auc,
        n_train,
        n_test: x.len(),
        iterations: model.meta.iterations,
        roc: roc.points,
    })
}

/// Trains one model per group selection on the non-holdout questions and reports
/// holdout AUC. Vectors must carry the text bag when a selection needs it.
pub fn compare_groups(
    corpus: &QuestionCorpus,
    features: &[FeatureVector],
    selections: &[FeatureGroups],
    config: &PopularityConfig,
    holdout_fraction: f64,
) -> Result<Vec<GroupEvaluation>> {
    if features.len() != corpus.len() {
        return Err(Error::InvalidInput(
            "one feature vector per question is required".into(),
        ));
    }
    let labels = label_top_decile(corpus)?.labels;
    let (train, test) = holdout_split(
        corpus.questions.iter().map(|q| q.id.as_str()),
        config.seed,
        holdout_fraction,
    );
    let pick = |idx: &[usize]| -> (Vec<FeatureVector>, Vec<bool>) {
        (
            idx.iter().map(|&i| features[i].clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (xtr, ytr) = pick(&train);
    let (xte, yte) = pick(&test);
    selections
        .iter()
        .map(|&groups| {
            let cfg = PopularityConfig {
                groups,
                ..config.clone()
            };
            let model = fit_logistic(&xtr, &ytr, &cfg)?;
            let roc = roc_auc(&model.score_batch(&xte)?, &yte)?;
            Ok(GroupEvaluation {
                groups,
                auc: roc.auc,
                n_train: xtr.len(),
                n_test: xte.len(),
                iterations: model.meta.iterations,
                roc: roc.points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Question;
    use crate::textfeat::extract_features;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binning_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = fit_binning(&v, 10);
        assert_eq!(b.n_bins(), 10);
        let mut counts = [0; 10];
        for &x in &v {
            counts[b.bin(x)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10));
        assert_eq!(fit_binning(&[3.0; 50], 20).n_bins(), 1);
    }

    proptest! {
        #[test]
        fn bins_nonempty_and_cuts_increasing(v in prop::collection::vec(-5.0f64..5.0, 1..300), k in 1usize..30) {
            let v: Vec<f64> = v.into_iter().map(|x| (x * 4.0).round() / 4.0).collect();
            let b = fit_binning(&v, k);
            prop_assert!(b.cuts.windows(2).all(|w| w[0] < w[1]));
            let mut counts = vec![0; b.n_bins()];
            for &x in &v {
                counts[b.bin(x)] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c > 0));
        }

        #[test]
        fn auc_invariant_to_monotone_transform(s in prop::collection::vec(-3.0f64..3.0, 4..60), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut y: Vec<bool> = s.iter().map(|_| rng.random()).collect();
            y[0] = true;
            y[1] = false;
            let a = roc_auc(&s, &y).unwrap().auc;
            let t: Vec<f64> = s.iter().map(|x| (2.0 * x).exp() + 1.0).collect();
            prop_assert!((roc_auc(&t, &y).unwrap().auc - a).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_examples() {
        let s = [0.9, 0.8, 0.7, 0.6];
        assert_eq!(roc_auc(&s, &[true, true, false, false]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&s, &[true, false, true, false]).unwrap().auc, 0.75);
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]).unwrap().auc, 0.5);
        assert!(roc_auc(&s, &[true; 4]).is_err());
        let r = roc_auc(&s, &[true, false, true, false]).unwrap();
        assert!(r
            .points
            .windows(2)
            .all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn intercept_only_matches_prevalence() {
        let rows: Vec<SparseRow> = vec![Vec::new(); 40];
        let y: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
        let fit = fit_logistic_raw(&rows, &y, &[], &OptimizerParams::default()).unwrap();
        assert!((sigmoid(fit.intercept) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn gradient_descent_agrees_with_lbfgs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<SparseRow> = (0..200)
            .map(|_| vec![(0, rng.random::<f64>() * 2.0 - 1.0), (1, rng.random())])
            .collect();
        let y: Vec<bool> = rows
            .iter()
            .map(|r| r[0].1 + 0.3 * rng.random::<f64>() > 0.1)
            .collect();
        let a = fit_logistic_raw(&rows, &y, &[0.1, 0.1], &OptimizerParams::default()).unwrap();
        let gd = OptimizerParams {
            method: Method::GradientDescent,
            max_iterations: 200_000,
            ..Default::default()
        };
        let b = fit_logistic_raw(&rows, &y, &[0.1, 0.1], &gd).unwrap();
        for (x, z) in a.weights.iter().zip(&b.weights) {
            assert!((x - z).abs() < 1e-4);
        }
    }

    fn one_d_fixture() -> (Vec<SparseRow>, Vec<bool>) {
        let xs: Vec<f64> = (0..20).map(|i| -1.9 + 0.2 * i as f64).collect();
        let y = [
            false, false, false, true, false, false, true, false, false, true, false, true, true,
            false, true, true, false, true, true, true,
        ];
        (xs.iter().map(|&x| vec![(0, x)]).collect(), y.to_vec())
    }

    #[test]
    fn one_d_matches_grid_minimum() {
        let (rows, y) = one_d_fixture();
        let fit = fit_logistic_raw(&rows, &y, &[1.0], &OptimizerParams::default()).unwrap();
        let f = |w: f64, b: f64| logistic_objective(&rows, &y, &[1.0], &[w], b);
        // Coarse grid over [-10, 10]², then a 1e-3 grid around the best cell.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=400 {
                let (w, b) = (-10.0 + 0.05 * i as f64, -10.0 + 0.05 * j as f64);
                let v = f(w, b);
                if v < best.0 {
                    best = (v, w, b);
                }
            }
        }
        let (w0, b0) = (best.1, best.2);
        for i in -100..=100 {
            for j in -100..=100 {
                let (w, b) = (w0 + 1e-3 * i as f64, b0 + 1e-3 * j as f64);
                let v = f(w, b);
                if v < best.0 {
                    best = (v, w, b);
                }
            }
        }
        assert!(
            (fit.weights[0] - best.1).abs() < 1e-2,
            "{} vs {}",
            fit.weights[0],
            best.1
        );
        assert!(
            (fit.intercept - best.2).abs() < 1e-2,
            "{} vs {}",
            fit.intercept,
            best.2
        );
    }

    #[test]
    fn separable_training_auc_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..200 {
            let (a, b): (f64, f64) = (
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            );
            if (a + b).abs() < 0.1 {
                continue;
            }
            rows.push(vec![(0, a), (1, b)]);
            y.push(a + b > 0.0);
        }
        let fit = fit_logistic_raw(&rows, &y, &[1e-3, 1e-3], &OptimizerParams::default()).unwrap();
        let scores: Vec<f64> = rows
            .iter()
            .map(|r| {
                fit.intercept
                    + r.iter()
                        .map(|&(c, x)| fit.weights[c as usize] * x)
                        .sum::<f64>()
            })
            .collect();
        assert_eq!(roc_auc(&scores, &y).unwrap().auc, 1.0);
    }

    #[test]
    fn random_labels_give_chance_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..10_000).map(|_| rng.random::<f64>() < 0.1).collect();
        assert!((roc_auc(&scores, &labels).unwrap().auc - 0.5).abs() < 0.02);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn duplicated_column_never_raises_optimum(seed in 0u64..1000, l2 in 0.01f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<SparseRow> = (0..60).map(|_| vec![(0, rng.random::<f64>() * 2.0 - 1.0), (1, rng.random())]).collect();
            let y: Vec<bool> = rows.iter().map(|r| r[0].1 + 0.5 * (rng.random::<f64>() - 0.5) > 0.0).collect();
            prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let base = fit_logistic_raw(&rows, &y, &[l2, l2], &OptimizerParams::default()).unwrap();
            let dup: Vec<SparseRow> = rows.iter().map(|r| { let mut r = r.clone(); r.push((2, r[0].1)); r }).collect();
            let wide = fit_logistic_raw(&dup, &y, &[l2, l2, l2], &OptimizerParams::default()).unwrap();
            let f0 = logistic_objective(&rows, &y, &[l2, l2], &base.weights, base.intercept);
            let f1 = logistic_objective(&dup, &y, &[l2, l2, l2], &wide.weights, wide.intercept);
            prop_assert!(f1 <= f0 + 1e-8, "{f1} > {f0}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows: Vec<SparseRow> = vec![vec![(0, 1.0)]; 5];
        assert!(matches!(
            fit_logistic_raw(&rows, &[true; 5], &[1.0], &OptimizerParams::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn holdout_is_stable_and_near_fraction() {
        let ids: Vec<String> = (0..10_000).map(|i| format!("q{i:07}")).collect();
        for seed in 0..5 {
            for n in [5_000, 10_000] {
                let (train, test) = holdout_split(ids[..n].iter().map(String::as_str), seed, 0.3);
                assert_eq!(train.len() + test.len(), n);
                let share = test.len() as f64 / n as f64;
                assert!((share - 0.3).abs() < 0.02, "seed {seed}, n {n}: {share}");
            }
        }
        let (_, first) = holdout_split(ids.iter().map(String::as_str), 3, 0.3);
        let (_, again) = holdout_split(ids.iter().map(String::as_str), 3, 0.3);
        assert_eq!(first, again);
    }

    #[test]
    fn groups_parse() {
        assert_eq!(
            "I+II".parse::<FeatureGroups>().unwrap(),
            FeatureGroups::IandII
        );
        assert_eq!(
            "group1,group2".parse::<FeatureGroups>().unwrap(),
            FeatureGroups::IandII
        );
        assert_eq!(
            "i+ii+iii".parse::<FeatureGroups>().unwrap(),
            FeatureGroups::All
        );
        assert!("II".parse::<FeatureGroups>().is_err());
    }

    #[test]
    fn model_scores_and_breakdown() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut fvs = Vec::new();
        let mut y = Vec::new();
        for i in 0..400 {
            let long = rng.random::<bool>();
            let s = if long {
                "How do I file my refund?"
            } else {
                "why is my refund so low and what do i do"
            };
            let q = Question::new(format!("q{i}"), s, None, 1 + i % 15, "online", "free");
            fvs.push(extract_features(&q, None));
            y.push(long && rng.random::<f64>() < 0.6);
        }
        let model = fit_logistic(&fvs, &y, &PopularityConfig::default()).unwrap();
        assert!(model.threshold > 0.0 && model.threshold < 1.0);
        let s = model.score(&fvs[0]).unwrap();
        assert_eq!(model.score_batch(&fvs).unwrap()[0], s);
        assert_eq!(model.score_batch(&fvs[..1]).unwrap()[0], s);
        assert_eq!(model.score_row(&Vec::new()), sigmoid(model.intercept));
        let total: f64 = model
            .contributions(&fvs[0])
            .unwrap()
            .iter()
            .map(|(_, c)| c)
            .sum();
        assert!((total + model.intercept - model.affine(&fvs[0]).unwrap()).abs() < 1e-12);
        let back = PopularityModel::from_json(&serde_json::to_vec(&model).unwrap()).unwrap();
        assert_eq!(back.score(&fvs[3]).unwrap(), model.score(&fvs[3]).unwrap());
        let mut unseen = fvs[0].clone();
        unseen.group1.platform = "watch".into();
        assert!(model.score(&unseen).is_ok());
    }
}
