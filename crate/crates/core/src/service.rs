//! Scoring service logic, independent of transport: the model bundle, scoring with
//! a per-feature breakdown, rule-template suggestions, what-if comparison and the
//! details recommendation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{label_top_decile, Question, QuestionCorpus, SeasonConfig, MAX_SUMMARY_CHARS};
use crate::error::{Error, Result};
use crate::popmodel::{
    corpus_features, fit_logistic, FeatureGroups, PopularityConfig, PopularityModel,
};
use crate::textfeat::{
    capitalization_flags, extract_features, first_word, text_bag, FeatureVector, QUESTION_WORDS,
};
use crate::topics::{fit_lda, InferenceParams, LdaParams, TopicModel};
use crate::uplift::{build_uplift_dataset, fit_uplift, UpliftModel, UpliftParams, UpliftRow};

pub const BUNDLE_VERSION: u32 = 1;
pub const N_QUANTILES: usize = 1001;
pub const DEFAULT_WEEK: u32 = 1;
pub const DEFAULT_PLATFORM: &str = "online";
pub const DEFAULT_PRODUCT_VERSION: &str = "free";

const MANIFEST: &str = "manifest.json";
const TOPICS: &str = "topics.json";
const POPULARITY: &str = "popularity.json";
const UPLIFT: &str = "uplift.json";
const QUANTILES: &str = "quantiles.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    /// Content hash of the component files; echoed by every response.
    pub bundle_version: String,
    pub groups: FeatureGroups,
    pub inference: InferenceParams,
    pub low_percentile: f64,
    pub high_percentile: f64,
    pub corpus_sha256: Option<String>,
}

/// Everything the service needs, immutable once loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    pub topics: TopicModel,
    pub popularity: PopularityModel,
    pub uplift: Option<UpliftModel>,
    /// Training-score quantiles at `k / (N_QUANTILES − 1)`.
    pub quantiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    pub lda: LdaParams,
    /// Documents sampled (evenly spaced) to fit the topic model; the rest are folded in.
    pub lda_sample: usize,
    pub inference: InferenceParams,
    pub popularity: PopularityConfig,
    /// `None` skips the uplift forest.
    pub uplift: Option<UpliftParams>,
    pub low_percentile: f64,
    pub high_percentile: f64,
}

impl Default for BundleConfig {
    fn default() -> Self {
        BundleConfig {
            lda: LdaParams {
                iterations: 150,
                burn_in: 100,
                retained_samples: 10,
                ..LdaParams::default()
            },
            lda_sample: 10_000,
            inference: InferenceParams::default(),
            popularity: PopularityConfig {
                groups: FeatureGroups::IandII,
                ..PopularityConfig::default()
            },
            uplift: Some(UpliftParams::default()),
            low_percentile: 20.0,
            high_percentile: 80.0,
        }
    }
}

/// Empirical quantiles at `k / (m − 1)`, linearly interpolated.
pub fn score_quantiles(scores: &[f64], m: usize) -> Vec<f64> {
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return Vec::new();
    }
    (0..m)
        .map(|k| {
            let pos = k as f64 / (m - 1).max(1) as f64 * (s.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
        })
        .collect()
}

/// Percentile of `p` against quantiles, interpolated between neighbouring entries.
pub fn percentile_of(quantiles: &[f64], p: f64) -> f64 {
    let m = quantiles.len();
    if m < 2 {
        return 50.0;
    }
    let above = quantiles.partition_point(|&q| q <= p);
    if above == 0 {
        return 0.0;
    }
    if above == m {
        return 100.0;
    }
    // Ties: the middle of the run of equal quantiles.
    let below = quantiles.partition_point(|&q| q < p);
    let k = if below < above {
        (below + above - 1) as f64 / 2.0
    } else {
        let (a, b) = (quantiles[above - 1], quantiles[above]);
        (above - 1) as f64 + (p - a) / (b - a)
    };
    100.0 * k / (m - 1) as f64
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())[..16].to_owned()
}

impl Bundle {
    /// Fits every component on `corpus`.
    pub fn build(corpus: &QuestionCorpus, config: &BundleConfig) -> Result<Bundle> {
        if corpus.is_empty() {
            return Err(Error::Empty("corpus has no questions".into()));
        }
        let step = (corpus.len() / config.lda_sample.max(1)).max(1);
        let sample: Vec<usize> = (0..corpus.len()).step_by(step).collect();
        let topics = fit_lda(&corpus.subset(&sample), &config.lda)?.model;
        let groups = config.popularity.groups;
        let features = corpus_features(
            corpus,
            Some((&topics, &config.inference)),
            groups.text().then_some(config.popularity.text_dim),
        );
        let labels = label_top_decile(corpus)?.labels;
        let mut popularity = fit_logistic(&features, &labels, &config.popularity)?;
        let corpus_sha = corpus_sha256(corpus);
        popularity.meta.corpus_sha256 = Some(corpus_sha.clone());
        let quantiles = score_quantiles(&popularity.score_batch(&features)?, N_QUANTILES);
        let uplift = match &config.uplift {
            Some(params) => {
                let data = build_uplift_dataset(corpus, Some((&topics, &config.inference)))?;
                Some(fit_uplift(&data, params, config.popularity.seed)?)
            }
            None => None,
        };
        let mut bundle = Bundle {
            manifest: Manifest {
                version: BUNDLE_VERSION,
                bundle_version: String::new(),
                groups,
                inference: config.inference,
                low_percentile: config.low_percentile,
                high_percentile: config.high_percentile,
                corpus_sha256: Some(corpus_sha),
            },
            topics,
            popularity,
            uplift,
            quantiles,
        };
        bundle.manifest.bundle_version = bundle.content_hash()?;
        Ok(bundle)
    }

    fn component_bytes(&self) -> Result<[Vec<u8>; 4]> {
        Ok([
            serde_json::to_vec(&self.topics)?,
            serde_json::to_vec(&self.popularity)?,
            match &self.uplift {
                Some(u) => serde_json::to_vec(u)?,
                None => Vec::new(),
            },
            serde_json::to_vec(&self.quantiles)?,
        ])
    }

    fn content_hash(&self) -> Result<String> {
        let parts = self.component_bytes()?;
        Ok(hash_parts(&[&parts[0], &parts[1], &parts[2], &parts[3]]))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let [topics, popularity, uplift, quantiles] = self.component_bytes()?;
        let write = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| Error::io(p, e))
        };
        write(TOPICS, &topics)?;
        write(POPULARITY, &popularity)?;
        if self.uplift.is_some() {
            write(UPLIFT, &uplift)?;
        } else if dir.join(UPLIFT).exists() {
            fs::remove_file(dir.join(UPLIFT)).map_err(|e| Error::io(dir.join(UPLIFT), e))?;
        }
        write(QUANTILES, &quantiles)?;
        write(MANIFEST, &serde_json::to_vec_pretty(&self.manifest)?)
    }

    /// Loads a bundle directory. A missing directory or manifest is reported as
    /// [`Error::Unavailable`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Bundle> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST);
        if !manifest_path.is_file() {
            return Err(Error::Unavailable(format!(
                "no model bundle at {}",
                dir.display()
            )));
        }
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read(&p).map_err(|e| Error::io(p, e))
        };
        let manifest: Manifest = serde_json::from_slice(&read(MANIFEST)?)?;
        if manifest.version != BUNDLE_VERSION {
            return Err(Error::Version {
                kind: "bundle",
                found: manifest.version,
                expected: BUNDLE_VERSION,
            });
        }
        let uplift = if dir.join(UPLIFT).is_file() {
            Some(UpliftModel::from_json(&read(UPLIFT)?)?)
        } else {
            None
        };
        let bundle = Bundle {
            topics: TopicModel::from_json(&read(TOPICS)?)?,
            popularity: PopularityModel::from_json(&read(POPULARITY)?)?,
            uplift,
            quantiles: serde_json::from_slice(&read(QUANTILES)?)?,
            manifest,
        };
        let hash = bundle.content_hash()?;
        if hash != bundle.manifest.bundle_version {
            return Err(Error::Validation {
                field: "bundle_version".into(),
                message: format!(
                    "manifest says {} but components hash to {hash}",
                    bundle.manifest.bundle_version
                ),
            });
        }
        Ok(bundle)
    }

    pub fn version(&self) -> &str {
        &self.manifest.bundle_version
    }
}

/// SHA-256 of the corpus in its line-delimited form.
pub fn corpus_sha256(corpus: &QuestionCorpus) -> String {
    let mut h = Sha256::new();
    let mut buf = Vec::new();
    corpus.write_records(&mut buf).expect("writing to memory");
    h.update(&buf);
    hex::encode(h.finalize())
}

fn default_week() -> u32 {
    DEFAULT_WEEK
}

fn default_platform() -> String {
    DEFAULT_PLATFORM.to_owned()
}

fn default_product_version() -> String {
    DEFAULT_PRODUCT_VERSION.to_owned()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionInput {
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
    #[serde(default = "default_week")]
    pub week: u32,
    #[serde(default = "default_platform")]
    pub platform: String,
    #[serde(default = "default_product_version")]
    pub product_version: String,
}

impl QuestionInput {
    pub fn new(summary: impl Into<String>, details: Option<String>) -> Self {
        QuestionInput {
            summary: summary.into(),
            details,
            week: DEFAULT_WEEK,
            platform: default_platform(),
            product_version: default_product_version(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Question::validate_text(&self.summary, self.details.as_deref())?;
        if !SeasonConfig::default().contains(self.week) {
            return Err(Error::Validation {
                field: "week".into(),
                message: format!("week {} is outside the season", self.week),
            });
        }
        for (field, v) in [
            ("platform", &self.platform),
            ("product_version", &self.product_version),
        ] {
            if v.trim().is_empty() {
                return Err(Error::Validation {
                    field: field.into(),
                    message: "must not be empty".into(),
                });
            }
        }
        Ok(())
    }

    pub fn to_question(&self) -> Question {
        Question::new(
            "request",
            self.summary.clone(),
            self.details.clone(),
            self.week,
            self.platform.clone(),
            self.product_version.clone(),
        )
    }

    fn with_text(&self, summary: String, details: Option<String>) -> QuestionInput {
        QuestionInput {
            summary,
            details,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: String,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicInfo {
    pub id: usize,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Low,
    Middle,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub bundle_version: String,
    pub probability: f64,
    pub percentile: f64,
    pub top_decile: bool,
    /// Position against the bundle's low/high percentiles.
    pub segment: Segment,
    pub intercept: f64,
    /// Pre-sigmoid score.
    pub affine: f64,
    pub feature_breakdown: Vec<Contribution>,
    pub topic: TopicInfo,
    pub coherency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    MoveSentenceToDetails,
    StartWithQuestionWord,
    AddQuestionMark,
    FixCapitalization,
    ShortenSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub kind: SuggestionKind,
    pub edited: QuestionInput,
    pub score: f64,
    pub score_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub bundle_version: String,
    pub score: f64,
    /// Some template edit raises the score: the question can be improved by
    /// rewriting alone.
    pub improvable: bool,
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureChange {
    pub feature: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub bundle_version: String,
    pub score_before: f64,
    pub score_after: f64,
    pub delta: f64,
    pub feature_diff: Vec<FeatureChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recommendation {
    AddDetails,
    KeepAsIs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpliftResponse {
    pub bundle_version: String,
    pub uplift_score: f64,
    pub recommendation: Recommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsResponse {
    pub bundle_version: String,
    pub topics: Vec<TopicInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub bundle_version: String,
}

/// Sentences of `text`: split after `.`, `?` or `!` when whitespace follows.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        cur.push(c);
        if matches!(c, '.' | '?' | '!') && chars.peek().is_some_and(|n| n.is_whitespace()) {
            while chars.peek().is_some_and(|n| n.is_whitespace()) {
                chars.next();
            }
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim_end().to_owned());
    }
    out
}

fn capitalize_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn join_details(moved: &str, details: Option<&str>) -> String {
    match details {
        Some(d) => format!("{moved} {d}"),
        None => moved.to_owned(),
    }
}

/// Rule-template edits of a question, before scoring.
pub fn candidate_edits(q: &QuestionInput) -> Vec<(SuggestionKind, QuestionInput)> {
    let mut out = Vec::new();
    let sentences = split_sentences(&q.summary);
    if sentences.len() >= 2 {
        for i in 0..sentences.len() {
            let moved = &sentences[i];
            let rest: Vec<&str> = sentences
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, s)| s.as_str())
                .collect();
            let summary = capitalize_first(&rest.join(" "));
            out.push((
                SuggestionKind::MoveSentenceToDetails,
                q.with_text(summary, Some(join_details(moved, q.details.as_deref()))),
            ));
        }
    } else if q.summary.chars().count() > 100 {
        // Cut at the last word boundary within 100 characters and move the tail.
        let cut: usize = q
            .summary
            .char_indices()
            .take_while(|&(i, _)| q.summary[..i].chars().count() <= 100)
            .filter(|&(_, c)| c == ' ')
            .map(|(i, _)| i)
            .last()
            .unwrap_or(0);
        if cut > 0 {
            let head = q.summary[..cut].trim_end().to_owned();
            let tail = q.summary[cut..].trim_start();
            out.push((
                SuggestionKind::ShortenSummary,
                q.with_text(head, Some(join_details(tail, q.details.as_deref()))),
            ));
        }
    }

    if let Some(fw) = first_word(&q.summary) {
        let start = q.summary.find(|c: char| c.is_alphanumeric()).unwrap_or(0);
        let end = q.summary[start..]
            .find(|c: char| !(c.is_alphanumeric() || c == '\''))
            .map_or(q.summary.len(), |e| start + e);
        let replaceable = fw == "why" || QUESTION_WORDS.contains(&fw.as_str());
        if replaceable {
            for w in QUESTION_WORDS.iter().filter(|&&w| w != fw) {
                let summary = format!(
                    "{}{}{}",
                    &q.summary[..start],
                    capitalize_first(w),
                    &q.summary[end..]
                );
                out.push((
                    SuggestionKind::StartWithQuestionWord,
                    q.with_text(summary, q.details.clone()),
                ));
            }
        }
    }

    if !q.summary.contains('?') {
        let trimmed = q.summary.trim_end().trim_end_matches(['.', '!']);
        out.push((
            SuggestionKind::AddQuestionMark,
            q.with_text(format!("{trimmed}?"), q.details.clone()),
        ));
    }

    let (proper, excessive) = capitalization_flags(&q.summary);
    if !proper {
        let base = if excessive {
            q.summary.to_lowercase()
        } else {
            q.summary.clone()
        };
        let fixed = capitalize_first(base.trim_start());
        if fixed != q.summary {
            out.push((
                SuggestionKind::FixCapitalization,
                q.with_text(fixed, q.details.clone()),
            ));
        }
    }

    out.into_iter()
        .filter(|(_, e)| e.summary.chars().count() <= MAX_SUMMARY_CHARS && e.validate().is_ok())
        .collect()
}

impl Bundle {
    fn features(&self, q: &QuestionInput) -> (FeatureVector, TopicInfo, f64) {
        let question = q.to_question();
        let mut fv = extract_features(&question, Some((&self.topics, &self.manifest.inference)));
        if let Some(dim) = self.popularity.encoder.text_dim {
            fv.group3 = Some(text_bag(&question, dim));
        }
        let topic = fv.group1.topic.expect("topic model present");
        let coherency = fv.group2.coherency.expect("topic model present");
        let info = TopicInfo {
            id: topic,
            keywords: self.topics.top_keywords(topic, 10),
        };
        (fv, info, coherency)
    }

    /// Feature vector exactly as the service builds it.
    pub fn feature_vector(&self, q: &QuestionInput) -> FeatureVector {
        self.features(q).0
    }

    fn probability(&self, q: &QuestionInput) -> Result<f64> {
        self.popularity.score(&self.feature_vector(q))
    }

    pub fn score(&self, q: &QuestionInput) -> Result<ScoreResponse> {
        q.validate()?;
        let (fv, topic, coherency) = self.features(q);
        let affine = self.popularity.affine(&fv)?;
        let probability = self.popularity.score(&fv)?;
        let percentile = percentile_of(&self.quantiles, probability);
        let segment = if percentile < self.manifest.low_percentile {
            Segment::Low
        } else if percentile >= self.manifest.high_percentile {
            Segment::High
        } else {
            Segment::Middle
        };
        Ok(ScoreResponse {
            bundle_version: self.version().to_owned(),
            probability,
            percentile,
            top_decile: probability > self.popularity.threshold,
            segment,
            intercept: self.popularity.intercept,
            affine,
            feature_breakdown: self
                .popularity
                .contributions(&fv)?
                .into_iter()
                .map(|(feature, contribution)| Contribution {
                    feature,
                    contribution,
                })
                .collect(),
            topic,
            coherency,
        })
    }

    /// Re-scored template edits with a positive delta, best first.
    pub fn suggest(&self, q: &QuestionInput, max_n: usize) -> Result<SuggestResponse> {
        q.validate()?;
        let base = self.probability(q)?;
        let mut suggestions = Vec::new();
        for (kind, edited) in candidate_edits(q) {
            let score = self.probability(&edited)?;
            let score_delta = score - base;
            if score_delta > 0.0 {
                suggestions.push(Suggestion {
                    kind,
                    edited,
                    score,
                    score_delta,
                });
            }
        }
        suggestions.sort_by(|a, b| b.score_delta.total_cmp(&a.score_delta));
        let improvable = !suggestions.is_empty();
        suggestions.truncate(max_n);
        Ok(SuggestResponse {
            bundle_version: self.version().to_owned(),
            score: base,
            improvable,
            suggestions,
        })
    }

    pub fn whatif(
        &self,
        original: &QuestionInput,
        edited: &QuestionInput,
    ) -> Result<WhatIfResponse> {
        original.validate()?;
        edited.validate()?;
        let a = self.feature_vector(original);
        let b = self.feature_vector(edited);
        let before = self.popularity.score(&a)?;
        let after = self.popularity.score(&b)?;
        let feature_diff = self.model_feature_diff(&a, &b)?;
        Ok(WhatIfResponse {
            bundle_version: self.version().to_owned(),
            score_before: before,
            score_after: after,
            delta: after - before,
            feature_diff,
        })
    }

    /// Features whose encoded value, as the model sees it, differs. A length change
    /// that stays inside one bin is not a change.
    fn model_feature_diff(
        &self,
        a: &FeatureVector,
        b: &FeatureVector,
    ) -> Result<Vec<FeatureChange>> {
        let enc = &self.popularity.encoder;
        let group = |fv: &FeatureVector| -> Result<BTreeMap<String, Vec<(u32, u64)>>> {
            let mut m: BTreeMap<String, Vec<(u32, u64)>> = BTreeMap::new();
            for (c, v) in enc.encode(fv)? {
                m.entry(enc.column_owner(c as usize).to_owned())
                    .or_default()
                    .push((c, v.to_bits()));
            }
            Ok(m)
        };
        let (ea, eb) = (group(a)?, group(b)?);
        let (na, nb) = (a.named_values(), b.named_values());
        let display = |named: &[(&'static str, String)], name: &str| {
            named
                .iter()
                .find(|(n, _)| *n == name)
                .map_or_else(|| "bag".to_owned(), |(_, v)| v.clone())
        };
        let mut names: Vec<String> = enc.features.iter().map(|f| f.name.clone()).collect();
        if enc.text_dim.is_some() {
            names.push("text_bag".to_owned());
        }
        Ok(names
            .into_iter()
            .filter(|n| ea.get(n) != eb.get(n))
            .map(|n| FeatureChange {
                before: display(&na, &n),
                after: display(&nb, &n),
                feature: n,
            })
            .collect())
    }

    pub fn uplift(&self, q: &QuestionInput) -> Result<UpliftResponse> {
        q.validate()?;
        let model = self
            .uplift
            .as_ref()
            .ok_or_else(|| Error::Unavailable("bundle has no uplift model".into()))?;
        let question = q.to_question();
        let topic = self
            .topics
            .infer_question(&question, &self.manifest.inference)
            .distribution
            .argmax();
        let row = UpliftRow::from_text(&q.summary, q.details.as_deref(), q.week, Some(topic));
        let uplift_score = model.predict(&row)?;
        Ok(UpliftResponse {
            bundle_version: self.version().to_owned(),
            uplift_score,
            recommendation: if uplift_score > 0.0 {
                Recommendation::AddDetails
            } else {
                Recommendation::KeepAsIs
            },
        })
    }

    pub fn topic_list(&self, k: usize) -> TopicsResponse {
        TopicsResponse {
            bundle_version: self.version().to_owned(),
            topics: (0..self.topics.n_topics)
                .map(|id| TopicInfo {
                    id,
                    keywords: self.topics.top_keywords(id, k),
                })
                .collect(),
        }
    }

    pub fn health(&self) -> HealthResponse {
        HealthResponse {
            status: "ok".to_owned(),
            bundle_version: self.version().to_owned(),
        }
    }
}
