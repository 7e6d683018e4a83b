//! Seeded synthetic corpus generator.
//!
//! Each question gets a planted topic mixture, a first word, context attributes and
//! text whose length depends on whether details were added. Views follow
//!
//! ```text
//! log(views + 1) ≈ intercept + week + topic + first word + length/details
//!                  + summary keywords + style + platform + version
//!                  + answered + N(0, sigma) [+ search boost]
//! ```
//!
//! where the search boost is a rare log-normal jump that produces the heavy upper tail.
//! Short summaries without details and long questions with details are the most viewed,
//! so splitting a long summary into summary plus details raises views while splitting a
//! short one lowers them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use super::topics_catalog::CATALOG;
use super::{Provenance, Question, QuestionCorpus, SeasonConfig, Vote, MAX_SUMMARY_CHARS};
use crate::error::{Error, Result};
use crate::textfeat::{tokenize, QUESTION_WORDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub name: String,
    /// Keywords in descending order of weight.
    pub keywords: Vec<String>,
    /// 0 = tax question, 1 = product question.
    pub content_type: f64,
    /// Additive log-view effect.
    pub view_effect: f64,
    pub prevalence: f64,
    /// Relative chance of a search-engine boost.
    pub search_exposure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstWordSpec {
    pub word: String,
    /// Percentage of questions starting with this word.
    pub share: f64,
    /// Average views of questions starting with this word.
    pub mean_views: f64,
    /// Answer rate in percent.
    pub answer_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub name: String,
    pub weight: f64,
    pub view_effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekSpec {
    /// Relative question volume per week of the season.
    pub volume: Vec<f64>,
    /// Log-view effect in the first and last week.
    pub effect_start: f64,
    pub effect_end: f64,
    /// Shape exponent of the decay between the two.
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    /// Probability that a question is its asker's first.
    pub first_question_fraction: f64,
    pub details_prob_first: f64,
    pub details_prob_repeat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSpec {
    /// Chance that a summary without details is typed up to the character limit.
    pub limit_fill_prob: f64,
    pub limit_fill_min: usize,
    pub summary_median: f64,
    pub summary_sdlog: f64,
    pub summary_with_details_median: f64,
    pub details_median: f64,
    pub details_sdlog: f64,
    /// Range of the summary share when a first question is split into summary and details.
    pub split_share: (f64, f64),
    pub min_summary: usize,
    pub min_details: usize,
    pub two_sentence_min: usize,
    pub two_sentence_prob: f64,
    pub keyword_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleSpec {
    pub proper_caps_prob: f64,
    pub excessive_caps_prob: f64,
    pub question_mark_prob_interrogative: f64,
    pub question_mark_prob_other: f64,
    pub question_mark_effect: f64,
    pub proper_caps_effect: f64,
    pub excessive_caps_effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub intercept: f64,
    pub sigma: f64,
    pub answered_effect: f64,
    pub boost_prob: f64,
    pub boost_mean: f64,
    pub boost_sd: f64,
    /// Multiplier on log(first-word mean views / reference).
    pub first_word_scale: f64,
    /// Without details: effect = -no_details_slope * (summary_len - length_pivot) / 100.
    pub no_details_slope: f64,
    pub length_pivot: f64,
    /// With details: effect = details_offset + details_slope * ln(question_len / details_reference).
    pub details_offset: f64,
    pub details_slope: f64,
    pub details_reference: f64,
    /// Scale of the summary-keyword effect.
    pub keyword_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSpec {
    /// Chance an answered question receives an asker vote.
    pub vote_prob: f64,
    pub up_intercept: f64,
    pub up_slope: f64,
    pub content_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_questions: usize,
    pub seed: u64,
    pub season: SeasonConfig,
    pub weeks: WeekSpec,
    pub topics: Vec<TopicSpec>,
    pub filler_words: Vec<String>,
    pub first_words: Vec<FirstWordSpec>,
    pub other_first_words: Vec<String>,
    pub other_answer_rate: f64,
    pub details_first_words: Vec<(String, f64)>,
    pub platforms: Vec<LevelSpec>,
    pub product_versions: Vec<LevelSpec>,
    pub users: UserSpec,
    pub lengths: LengthSpec,
    pub style: StyleSpec,
    pub views: ViewSpec,
    pub votes: VoteSpec,
}

/// Shrinks the catalog's topic view effects.
const TOPIC_EFFECT_SCALE: f64 = 0.5;

fn strings(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| (*w).to_owned()).collect()
}

fn levels(spec: &[(&str, f64, f64)]) -> Vec<LevelSpec> {
    spec.iter()
        .map(|&(name, weight, view_effect)| LevelSpec {
            name: name.to_owned(),
            weight,
            view_effect,
        })
        .collect()
}

/// Published first-word statistics of question summaries:
/// (word, % of questions, mean views, % in top decile, answer rate %).
pub const FIRST_WORD_STATS: [(&str, f64, f64, f64, f64); 20] = [
    ("are", 0.4, 29.1, 17.0, 72.1),
    ("does", 0.7, 40.9, 16.2, 74.5),
    ("where", 3.5, 37.6, 15.6, 73.4),
    ("is", 1.5, 23.4, 14.1, 71.5),
    ("how", 10.8, 30.0, 14.0, 74.3),
    ("turbotax", 1.2, 28.4, 13.5, 65.3),
    ("what", 3.8, 38.1, 13.3, 68.3),
    ("can", 4.1, 23.7, 12.6, 80.5),
    ("do", 1.8, 26.1, 12.1, 76.6),
    ("need", 0.7, 23.6, 11.0, 68.4),
    ("when", 1.4, 31.1, 10.1, 72.0),
    ("on", 0.6, 19.0, 8.8, 57.6),
    ("my", 5.6, 23.9, 8.1, 71.5),
    ("if", 1.9, 18.0, 7.5, 77.3),
    ("the", 1.1, 22.7, 7.3, 60.6),
    ("i", 27.0, 15.6, 7.0, 69.1),
    ("it", 0.6, 11.1, 6.2, 58.5),
    ("in", 0.6, 11.5, 6.1, 61.7),
    ("we", 1.0, 15.0, 6.0, 69.8),
    ("why", 8.0, 8.6, 2.3, 51.4),
];

impl GeneratorConfig {
    /// Configuration calibrated to the published corpus statistics.
    pub fn calibrated(n_questions: usize, seed: u64) -> Self {
        let mut topics: Vec<TopicSpec> = CATALOG
            .iter()
            .map(|t| TopicSpec {
                name: t.name.to_owned(),
                keywords: strings(t.keywords),
                content_type: t.content_type,
                view_effect: TOPIC_EFFECT_SCALE * t.view_effect,
                prevalence: t.prevalence,
                search_exposure: t.search_exposure,
            })
            .collect();
        decorrelate_topic_effects(&mut topics);

        GeneratorConfig {
            n_questions,
            seed,
            season: SeasonConfig::default(),
            weeks: WeekSpec {
                volume: vec![
                    0.55, 0.85, 1.0, 1.1, 1.2, 1.2, 1.1, 1.0, 0.95, 0.9, 0.9, 0.9, 1.0, 1.1, 1.3,
                ],
                effect_start: 0.4,
                effect_end: -0.5,
                curvature: 0.85,
            },
            topics,
            filler_words: strings(&[
                "the", "to", "my", "a", "and", "for", "i", "it", "is", "of", "on", "in", "this",
                "that", "with", "was", "have", "not", "be", "did", "but", "so", "just", "when",
                "from", "about", "after", "should", "would", "will", "we", "our", "me", "an",
                "are", "can", "do", "if", "what", "how", "been", "has", "or", "at", "all", "there",
                "they", "it's", "any", "get", "got", "also", "now", "yet", "no",
            ]),
            first_words: FIRST_WORD_STATS
                .iter()
                .map(|&(word, share, mean_views, _, answer_rate)| FirstWordSpec {
                    word: word.to_owned(),
                    share,
                    mean_views,
                    answer_rate,
                })
                .collect(),
            other_first_words: strings(&[
                "please", "hi", "hello", "question", "federal", "after", "so", "tax", "last",
                "our", "filed", "received", "help", "will", "should", "could", "would", "am",
                "have", "has", "got", "just", "which", "who", "since", "this", "there", "a",
                "trying", "still", "hey", "state", "irs", "wife", "husband", "daughter", "son",
            ]),
            other_answer_rate: 62.5,
            details_first_words: vec![
                ("i".into(), 0.34),
                ("my".into(), 0.12),
                ("we".into(), 0.07),
                ("the".into(), 0.06),
                ("it".into(), 0.05),
                ("when".into(), 0.04),
                ("so".into(), 0.04),
                ("this".into(), 0.04),
                ("also".into(), 0.03),
                ("last".into(), 0.03),
                ("in".into(), 0.03),
                ("how".into(), 0.03),
                ("thanks".into(), 0.02),
            ],
            platforms: levels(&[
                ("online", 0.62, 0.12),
                ("desktop", 0.28, -0.22),
                ("mobile", 0.10, -0.05),
            ]),
            product_versions: levels(&[
                ("free", 0.30, 0.10),
                ("deluxe", 0.33, 0.02),
                ("premier", 0.15, -0.08),
                ("home_business", 0.10, -0.15),
                ("self_employed", 0.06, -0.10),
                ("unknown", 0.06, 0.0),
            ]),
            users: UserSpec {
                first_question_fraction: 0.555,
                details_prob_first: 0.205,
                details_prob_repeat: 0.868,
            },
            lengths: LengthSpec {
                limit_fill_prob: 0.17,
                limit_fill_min: 148,
                summary_median: 84.0,
                summary_sdlog: 0.42,
                summary_with_details_median: 52.0,
                details_median: 215.0,
                details_sdlog: 0.55,
                split_share: (0.35, 0.7),
                min_summary: 12,
                min_details: 12,
                two_sentence_min: 90,
                two_sentence_prob: 0.7,
                keyword_prob: 0.55,
            },
            style: StyleSpec {
                proper_caps_prob: 0.55,
                excessive_caps_prob: 0.03,
                question_mark_prob_interrogative: 0.75,
                question_mark_prob_other: 0.25,
                question_mark_effect: 0.08,
                proper_caps_effect: 0.08,
                excessive_caps_effect: -0.25,
            },
            views: ViewSpec {
                intercept: 0.8,
                sigma: 0.55,
                answered_effect: 0.6,
                boost_prob: 0.03,
                boost_mean: 3.3,
                boost_sd: 0.45,
                first_word_scale: 1.0,
                no_details_slope: 0.8,
                length_pivot: 100.0,
                details_offset: 0.77,
                details_slope: 0.6,
                details_reference: 250.0,
                keyword_scale: 1.2,
            },
            votes: VoteSpec {
                vote_prob: 0.45,
                up_intercept: 0.88,
                up_slope: 0.62,
                content_noise: 0.08,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.topics.is_empty() {
            return bad("at least one topic is required");
        }
        for t in &self.topics {
            if t.keywords.is_empty() {
                return Err(Error::Config(format!(
                    "topic `{}` has an empty vocabulary",
                    t.name
                )));
            }
            if !(t.prevalence > 0.0 && t.search_exposure > 0.0) {
                return Err(Error::Config(format!(
                    "topic `{}` needs positive prevalence and search exposure",
                    t.name
                )));
            }
            if !(0.0..=1.0).contains(&t.content_type) {
                return Err(Error::Config(format!(
                    "topic `{}` content type outside [0, 1]",
                    t.name
                )));
            }
        }
        if self.filler_words.is_empty() || self.other_first_words.is_empty() {
            return bad("filler and other-first-word vocabularies must be non-empty");
        }
        if self.season.first_week < 1 || self.season.last_week < self.season.first_week {
            return bad("season week range is empty");
        }
        if self.weeks.volume.len() != self.season.n_weeks() {
            return bad("week volume must have one entry per season week");
        }
        if self.weeks.volume.iter().any(|&v| v <= 0.0) || self.weeks.curvature <= 0.0 {
            return bad("week volumes and curvature must be positive");
        }
        let shares: f64 = self.first_words.iter().map(|f| f.share).sum();
        if self
            .first_words
            .iter()
            .any(|f| f.share <= 0.0 || f.mean_views <= 0.0)
            || shares >= 100.0
        {
            return bad("first-word shares and mean views must be positive and total below 100%");
        }
        let rates = self
            .first_words
            .iter()
            .map(|f| f.answer_rate)
            .chain([self.other_answer_rate]);
        if rates.into_iter().any(|r| !(0.0..=100.0).contains(&r)) {
            return bad("answer rates must lie in [0, 100]");
        }
        for (name, lv) in [
            ("platforms", &self.platforms),
            ("product_versions", &self.product_versions),
        ] {
            if lv.is_empty() || lv.iter().any(|l| l.weight <= 0.0) {
                return Err(Error::Config(format!("{name} need positive weights")));
            }
        }
        if self.details_first_words.is_empty()
            || self.details_first_words.iter().any(|(_, w)| *w <= 0.0)
        {
            return bad("details first words need positive weights");
        }
        let probs = [
            self.users.first_question_fraction,
            self.users.details_prob_first,
            self.users.details_prob_repeat,
            self.lengths.limit_fill_prob,
            self.lengths.two_sentence_prob,
            self.lengths.keyword_prob,
            self.style.proper_caps_prob,
            self.style.excessive_caps_prob,
            self.style.question_mark_prob_interrogative,
            self.style.question_mark_prob_other,
            self.views.boost_prob,
            self.votes.vote_prob,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.style.proper_caps_prob + self.style.excessive_caps_prob > 1.0 {
            return bad("capitalization style probabilities exceed 1");
        }
        let l = &self.lengths;
        let positive = [
            l.summary_median,
            l.summary_sdlog,
            l.summary_with_details_median,
            l.details_median,
            l.details_sdlog,
            self.views.sigma,
            self.views.boost_sd,
            self.views.details_reference,
            self.views.first_word_scale,
        ];
        if positive.iter().any(|&x| x <= 0.0) {
            return bad("scales, medians and dispersions must be positive");
        }
        if !(0.0 < l.split_share.0 && l.split_share.0 <= l.split_share.1 && l.split_share.1 < 1.0) {
            return bad("split share must satisfy 0 < lo <= hi < 1");
        }
        if l.min_summary == 0
            || l.min_summary > MAX_SUMMARY_CHARS
            || l.limit_fill_min > MAX_SUMMARY_CHARS
        {
            return bad("summary length bounds must lie within the character limit");
        }
        Ok(())
    }

    pub fn sha256(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Share-weighted mean of first-word mean views; first-word effects are relative to it.
    fn first_word_reference(&self) -> f64 {
        let total: f64 = self.first_words.iter().map(|f| f.share).sum();
        self.first_words
            .iter()
            .map(|f| f.share * f.mean_views)
            .sum::<f64>()
            / total
    }

    fn week_effect(&self, week: u32) -> f64 {
        let w = &self.weeks;
        let span = (self.season.n_weeks() - 1).max(1) as f64;
        let t = f64::from(week - self.season.first_week) / span;
        w.effect_start + (w.effect_end - w.effect_start) * t.powf(w.curvature)
    }

    /// Length/details log-view effect.
    pub fn length_effect(&self, summary_len: usize, question_len: usize, has_details: bool) -> f64 {
        let v = &self.views;
        if has_details {
            v.details_offset
                + v.details_slope * (question_len.max(1) as f64 / v.details_reference).ln()
        } else {
            -v.no_details_slope * (summary_len as f64 - v.length_pivot) / 100.0
        }
    }
}

/// Removes the prevalence-weighted linear trend of topic view effects on content type,
/// so topic popularity carries no information about content type.
fn decorrelate_topic_effects(topics: &mut [TopicSpec]) {
    let w: f64 = topics.iter().map(|t| t.prevalence).sum();
    let mean_ct = topics
        .iter()
        .map(|t| t.prevalence * t.content_type)
        .sum::<f64>()
        / w;
    let mean_e = topics
        .iter()
        .map(|t| t.prevalence * t.view_effect)
        .sum::<f64>()
        / w;
    let cov: f64 = topics
        .iter()
        .map(|t| t.prevalence * (t.content_type - mean_ct) * (t.view_effect - mean_e))
        .sum();
    let var: f64 = topics
        .iter()
        .map(|t| t.prevalence * (t.content_type - mean_ct).powi(2))
        .sum();
    let slope = cov / var;
    for t in topics.iter_mut() {
        t.view_effect -= slope * (t.content_type - mean_ct);
    }
}

/// Planted log-view contributions of one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectBreakdown {
    pub week: f64,
    pub topic: f64,
    pub first_word: f64,
    pub length: f64,
    pub keywords: f64,
    pub style: f64,
    pub platform: f64,
    pub product_version: f64,
    pub answered: f64,
}

impl EffectBreakdown {
    pub fn total(&self) -> f64 {
        self.week
            + self.topic
            + self.first_word
            + self.length
            + self.keywords
            + self.style
            + self.platform
            + self.product_version
            + self.answered
    }
}

/// Latent variables planted for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: String,
    pub user_id: String,
    pub first_of_user: bool,
    pub primary_topic: usize,
    pub secondary_topic: usize,
    pub content_type: f64,
    /// Expected log-view location excluding noise and the search boost.
    pub mu: f64,
    pub effects: EffectBreakdown,
    pub boosted: bool,
    /// For first questions: planted change in top-decile probability from moving part of
    /// the summary into details at fixed question length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_uplift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub topic_names: Vec<String>,
    pub records: Vec<TruthRecord>,
}

impl GroundTruth {
    pub fn by_id(&self) -> HashMap<&str, &TruthRecord> {
        self.records.iter().map(|r| (r.id.as_str(), r)).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads records written by [`GroundTruth::save`]. Topic names are not stored
    /// in that file and come back empty.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| Error::Record {
                line: i + 1,
                field: "record".into(),
                message: e.to_string(),
            })?);
        }
        Ok(GroundTruth {
            topic_names: Vec::new(),
            records,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub corpus: QuestionCorpus,
    pub truth: GroundTruth,
}

#[derive(Clone, Copy, PartialEq)]
enum CapStyle {
    Proper,
    Lower,
    Upper,
}

struct Sampler<'a> {
    cfg: &'a GeneratorConfig,
    topic_index: WeightedIndex<f64>,
    keyword_index: Vec<WeightedIndex<f64>>,
    week_index: WeightedIndex<f64>,
    first_word_index: WeightedIndex<f64>,
    first_word_share_other: f64,
    details_first_index: WeightedIndex<f64>,
    platform_index: WeightedIndex<f64>,
    version_index: WeightedIndex<f64>,
    keyword_effects: HashMap<String, f64>,
    first_word_ref: f64,
    mean_exposure: f64,
}

fn connectors(first: &str) -> &'static [&'static str] {
    match first {
        "how" => &[
            "do i",
            "can i",
            "long does it take to",
            "much",
            "do we",
            "should i",
        ],
        "why" => &["is my", "did my", "does it", "is the", "can't i", "was my"],
        "i" => &[
            "need to",
            "have a",
            "filed my",
            "am trying to",
            "can't",
            "received a",
            "want to",
        ],
        "what" => &["is the", "do i do if", "happens if my", "does it mean"],
        "can" => &["i", "we", "my", "i still"],
        "where" => &["is my", "do i enter", "can i find", "do i put"],
        "does" => &["turbotax", "my", "the irs", "it"],
        "is" => &["my", "there", "it", "the"],
        "are" => &["my", "there", "the"],
        "do" => &["i need to", "i have to", "we"],
        "when" => &["will i", "can i", "do i", "will my"],
        "if" => &["i", "my", "we"],
        "need" => &["to", "help with"],
        _ => &[""],
    }
}

fn render_word(word: &str, style: CapStyle, sentence_start: bool) -> String {
    match style {
        CapStyle::Upper => word.to_uppercase(),
        CapStyle::Lower => word.to_owned(),
        CapStyle::Proper => {
            if word == "i" || word.starts_with("i'") {
                let mut s = word.to_owned();
                s.replace_range(0..1, "I");
                s
            } else if word == "turbotax" {
                "TurboTax".to_owned()
            } else if word == "irs" {
                "IRS".to_owned()
            } else if sentence_start {
                let mut c = word.chars();
                match c.next() {
                    Some(f) => f.to_uppercase().chain(c).collect(),
                    None => String::new(),
                }
            } else {
                word.to_owned()
            }
        }
    }
}

impl<'a> Sampler<'a> {
    fn new(cfg: &'a GeneratorConfig) -> Result<Self> {
        let wi = |w: Vec<f64>| WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string()));
        let listed: f64 = cfg.first_words.iter().map(|f| f.share).sum();
        let mut fw_weights: Vec<f64> = cfg.first_words.iter().map(|f| f.share).collect();
        fw_weights.push(100.0 - listed);

        // Keyword effects belong to the vocabulary, not to the sample, so they ignore the seed.
        let mut effects_rng = ChaCha8Rng::seed_from_u64(0x5eed_6b65_7977_6f72);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut keyword_effects = HashMap::new();
        for t in &cfg.topics {
            for k in &t.keywords {
                keyword_effects
                    .entry(k.clone())
                    .or_insert_with(|| normal.sample(&mut effects_rng));
            }
        }
        let total_prev: f64 = cfg.topics.iter().map(|t| t.prevalence).sum();
        let mean_exposure = cfg
            .topics
            .iter()
            .map(|t| t.prevalence * t.search_exposure)
            .sum::<f64>()
            / total_prev;

        Ok(Sampler {
            cfg,
            topic_index: wi(cfg.topics.iter().map(|t| t.prevalence).collect())?,
            keyword_index: cfg
                .topics
                .iter()
                .map(|t| {
                    wi((0..t.keywords.len())
                        .map(|r| 1.0 / (r as f64 + 1.5).powf(0.9))
                        .collect())
                })
                .collect::<Result<_>>()?,
            week_index: wi(cfg.weeks.volume.clone())?,
            first_word_index: wi(fw_weights)?,
            first_word_share_other: 100.0 - listed,
            details_first_index: wi(cfg.details_first_words.iter().map(|(_, w)| *w).collect())?,
            platform_index: wi(cfg.platforms.iter().map(|l| l.weight).collect())?,
            version_index: wi(cfg.product_versions.iter().map(|l| l.weight).collect())?,
            keyword_effects,
            first_word_ref: cfg.first_word_reference(),
            mean_exposure,
        })
    }

    fn keyword(&self, rng: &mut ChaCha8Rng, topic: usize) -> &'a str {
        let t = &self.cfg.topics[topic];
        &t.keywords[self.keyword_index[topic].sample(rng)]
    }

    /// Words of one sentence, starting with `first`, until about `target` characters.
    fn sentence_words(
        &self,
        rng: &mut ChaCha8Rng,
        first: &str,
        topics: (usize, usize, f64),
        target: usize,
    ) -> Vec<String> {
        let mut words: Vec<String> = vec![first.to_owned()];
        let options = connectors(first);
        let connector = options[rng.random_range(0..options.len())];
        words.extend(connector.split_whitespace().map(str::to_owned));
        let mut len: usize = words.iter().map(|w| w.len() + 1).sum::<usize>() - 1;
        let kw_prob = self.cfg.lengths.keyword_prob;
        let mut keyword_seen = false;
        while len < target {
            let w = if !keyword_seen || rng.random::<f64>() < kw_prob {
                keyword_seen = true;
                let topic = if rng.random::<f64>() < topics.2 {
                    topics.0
                } else {
                    topics.1
                };
                self.keyword(rng, topic).to_owned()
            } else {
                self.cfg.filler_words[rng.random_range(0..self.cfg.filler_words.len())].clone()
            };
            len += w.len() + 1;
            words.push(w);
        }
        words
    }

    fn render(sentences: &[(Vec<String>, char)], style: CapStyle) -> String {
        let mut out = String::new();
        for (words, end) in sentences {
            if !out.is_empty() {
                out.push(' ');
            }
            let rendered: Vec<String> = words
                .iter()
                .enumerate()
                .map(|(i, w)| render_word(w, style, i == 0))
                .collect();
            out.push_str(&rendered.join(" "));
            if *end != ' ' {
                out.push(*end);
            }
        }
        out
    }

    fn pick_question_word(&self, rng: &mut ChaCha8Rng) -> &'static str {
        QUESTION_WORDS[rng.random_range(0..QUESTION_WORDS.len())]
    }

    /// Builds a summary of about `target` characters, trimmed to the character limit.
    fn summary_text(
        &self,
        rng: &mut ChaCha8Rng,
        first: &str,
        topics: (usize, usize, f64),
        target: usize,
        style: CapStyle,
    ) -> String {
        let st = &self.cfg.style;
        let interrogative = |w: &str| QUESTION_WORDS.contains(&w) || w == "why";
        let mark = |rng: &mut ChaCha8Rng, w: &str| {
            let p = if interrogative(w) {
                st.question_mark_prob_interrogative
            } else {
                st.question_mark_prob_other
            };
            if rng.random::<f64>() < p {
                '?'
            } else {
                ' '
            }
        };
        let two = target >= self.cfg.lengths.two_sentence_min
            && rng.random::<f64>() < self.cfg.lengths.two_sentence_prob;
        let mut sentences = if two {
            let first_target = (target as f64 * rng.random_range(0.45..0.6)) as usize;
            let a = self.sentence_words(rng, first, topics, first_target);
            let used: usize = a.iter().map(|w| w.len() + 1).sum::<usize>() + 1;
            let qw = self.pick_question_word(rng);
            let b = self.sentence_words(rng, qw, topics, target.saturating_sub(used).max(12));
            let end_b = mark(rng, qw);
            vec![(a, '.'), (b, end_b)]
        } else {
            let a = self.sentence_words(rng, first, topics, target);
            let end = mark(rng, first);
            vec![(a, end)]
        };
        // Contractions on the leading "i".
        if first == "i" && sentences[0].0.len() > 2 {
            let r: f64 = rng.random();
            if r < 0.12 {
                sentences[0].0[0] = "i'm".into();
                sentences[0].0[1] = "not".into();
            } else if r < 0.18 {
                sentences[0].0[0] = "i've".into();
                sentences[0].0[1] = "been".into();
            }
        }
        loop {
            let text = Self::render(&sentences, style);
            if text.chars().count() <= MAX_SUMMARY_CHARS {
                return text;
            }
            let last = sentences.last_mut().expect("non-empty");
            if last.0.len() > 1 {
                last.0.pop();
            } else {
                sentences.pop();
            }
        }
    }

    fn details_text(&self, rng: &mut ChaCha8Rng, topics: (usize, usize), target: usize) -> String {
        let style = if rng.random::<f64>() < 0.7 {
            CapStyle::Proper
        } else {
            CapStyle::Lower
        };
        let mut sentences = Vec::new();
        let mut used = 0usize;
        while used < target {
            let remaining = target - used;
            let len = if remaining < 110 {
                remaining
            } else {
                rng.random_range(50..100)
            };
            let first = if sentences.is_empty() {
                &self.cfg.details_first_words[self.details_first_index.sample(rng)].0
            } else {
                &self.cfg.details_first_words
                    [rng.random_range(0..self.cfg.details_first_words.len())]
                .0
            };
            let words = self.sentence_words(rng, first, (topics.0, topics.1, 0.6), len.max(8));
            used += words.iter().map(|w| w.len() + 1).sum::<usize>() + 1;
            sentences.push((words, '.'));
        }
        Self::render(&sentences, style)
    }

    fn summary_target(&self, rng: &mut ChaCha8Rng, with_details: bool) -> usize {
        let l = &self.cfg.lengths;
        let drawn = if with_details {
            LogNormal::new(l.summary_with_details_median.ln(), l.summary_sdlog)
                .expect("valid")
                .sample(rng)
        } else if rng.random::<f64>() < l.limit_fill_prob {
            rng.random_range(l.limit_fill_min as f64..=MAX_SUMMARY_CHARS as f64)
        } else {
            LogNormal::new(l.summary_median.ln(), l.summary_sdlog)
                .expect("valid")
                .sample(rng)
        };
        (drawn.round() as usize).clamp(l.min_summary, MAX_SUMMARY_CHARS)
    }

    fn details_target(&self, rng: &mut ChaCha8Rng) -> usize {
        let l = &self.cfg.lengths;
        let d = LogNormal::new(l.details_median.ln(), l.details_sdlog)
            .expect("valid")
            .sample(rng);
        (d.round() as usize).clamp(l.min_details, 4000)
    }

    fn keyword_effect(&self, summary: &str, topics: &[usize]) -> f64 {
        let tokens = tokenize(summary);
        let mut seen = HashSet::new();
        let mut sum = 0.0;
        for t in tokens.tokens() {
            if !seen.insert(t.as_str()) {
                continue;
            }
            if topics
                .iter()
                .any(|&k| self.cfg.topics[k].keywords.contains(t))
            {
                if let Some(e) = self.keyword_effects.get(t) {
                    sum += e;
                }
            }
        }
        let n = seen
            .iter()
            .filter(|t| self.keyword_effects.contains_key(**t))
            .count();
        if n == 0 {
            0.0
        } else {
            self.cfg.views.keyword_scale * sum / (n as f64).sqrt()
        }
    }
}

/// Probability that the views of a question with log-location `mu` exceed `threshold`.
fn top_probability(cfg: &GeneratorConfig, mu: f64, boost_prob: f64, threshold: u64) -> f64 {
    let v = &cfg.views;
    let cut = (threshold as f64 + 1.5).ln();
    let plain = StatNormal::new(mu, v.sigma).expect("sigma > 0");
    let boosted = StatNormal::new(
        mu + v.boost_mean,
        (v.sigma.powi(2) + v.boost_sd.powi(2)).sqrt(),
    )
    .expect("positive sd");
    (1.0 - boost_prob) * (1.0 - plain.cdf(cut)) + boost_prob * (1.0 - boosted.cdf(cut))
}

/// Generates a corpus and its ground truth. Output depends only on the configuration
/// (including its seed).
pub fn generate_corpus(cfg: &GeneratorConfig) -> Result<GeneratedCorpus> {
    cfg.validate()?;
    let sampler = Sampler::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_questions;
    let v = &cfg.views;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut weeks: Vec<u32> = (0..n)
        .map(|_| cfg.season.first_week + sampler.week_index.sample(&mut rng) as u32)
        .collect();
    weeks.sort_unstable();

    let mut users: Vec<String> = Vec::new();
    let mut questions = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    // (mu without answered effect, answer probability, boost probability, summary/question lengths)
    let mut uplift_inputs: Vec<Option<(f64, f64, f64, usize)>> = Vec::with_capacity(n);

    for (i, &week) in weeks.iter().enumerate() {
        let id = format!("q{i:07}");
        let first_of_user =
            users.is_empty() || rng.random::<f64>() < cfg.users.first_question_fraction;
        let user_id = if first_of_user {
            users.push(format!("u{:07}", users.len()));
            users.last().expect("pushed").clone()
        } else {
            users[rng.random_range(0..users.len())].clone()
        };

        let primary = sampler.topic_index.sample(&mut rng);
        let mut secondary = sampler.topic_index.sample(&mut rng);
        if secondary == primary {
            secondary = sampler.topic_index.sample(&mut rng);
        }
        let topic = &cfg.topics[primary];

        let fw_slot = sampler.first_word_index.sample(&mut rng);
        let (first_word, fw_effect, answer_rate) = if fw_slot < cfg.first_words.len() {
            let f = &cfg.first_words[fw_slot];
            (
                f.word.clone(),
                v.first_word_scale * (f.mean_views / sampler.first_word_ref).ln(),
                f.answer_rate / 100.0,
            )
        } else {
            let w = &cfg.other_first_words[rng.random_range(0..cfg.other_first_words.len())];
            (w.clone(), 0.0, cfg.other_answer_rate / 100.0)
        };
        debug_assert!(sampler.first_word_share_other > 0.0);

        let platform = &cfg.platforms[sampler.platform_index.sample(&mut rng)];
        let version = &cfg.product_versions[sampler.version_index.sample(&mut rng)];

        let style = {
            let r: f64 = rng.random();
            if r < cfg.style.excessive_caps_prob {
                CapStyle::Upper
            } else if r < cfg.style.excessive_caps_prob + cfg.style.proper_caps_prob {
                CapStyle::Proper
            } else {
                CapStyle::Lower
            }
        };

        let details_prob = if first_of_user {
            cfg.users.details_prob_first
        } else {
            cfg.users.details_prob_repeat
        };
        let has_details = rng.random::<f64>() < details_prob;
        let summary_topics = (primary, secondary, 0.9);
        let (summary, details) = if first_of_user && has_details {
            // The asker split one text of the usual summary length into two fields.
            let total = sampler.summary_target(&mut rng, false);
            let (lo, hi) = cfg.lengths.split_share;
            let share = rng.random_range(lo..=hi);
            let s_target = ((total as f64 * share) as usize).max(cfg.lengths.min_summary);
            let d_target = total.saturating_sub(s_target).max(cfg.lengths.min_details);
            let s = sampler.summary_text(&mut rng, &first_word, summary_topics, s_target, style);
            let d = sampler.details_text(&mut rng, (primary, secondary), d_target);
            (s, Some(d))
        } else if has_details {
            let s_target = sampler.summary_target(&mut rng, true);
            let s = sampler.summary_text(&mut rng, &first_word, summary_topics, s_target, style);
            let d_target = sampler.details_target(&mut rng);
            let d = sampler.details_text(&mut rng, (primary, secondary), d_target);
            (s, Some(d))
        } else {
            let s_target = sampler.summary_target(&mut rng, false);
            (
                sampler.summary_text(&mut rng, &first_word, summary_topics, s_target, style),
                None,
            )
        };

        let summary_len = summary.chars().count();
        let question_len = summary_len + details.as_deref().map_or(0, |d| d.chars().count());
        let (proper, excessive) = crate::textfeat::capitalization_flags(&summary);
        let qmark = summary.contains('?');
        let answered = rng.random::<f64>() < answer_rate;

        let effects = EffectBreakdown {
            week: cfg.week_effect(week),
            topic: topic.view_effect,
            first_word: fw_effect,
            length: cfg.length_effect(summary_len, question_len, details.is_some()),
            keywords: sampler.keyword_effect(&summary, &[primary, secondary]),
            style: if qmark {
                cfg.style.question_mark_effect
            } else {
                0.0
            } + if proper {
                cfg.style.proper_caps_effect
            } else {
                0.0
            } + if excessive {
                cfg.style.excessive_caps_effect
            } else {
                0.0
            },
            platform: platform.view_effect,
            product_version: version.view_effect,
            answered: if answered { v.answered_effect } else { 0.0 },
        };
        let mu = v.intercept + effects.total();
        let boost_prob = (v.boost_prob * topic.search_exposure / sampler.mean_exposure).min(1.0);
        let boosted = rng.random::<f64>() < boost_prob;
        let boost = if boosted {
            (v.boost_mean + v.boost_sd * normal.sample(&mut rng)).max(0.0)
        } else {
            0.0
        };
        let noise = v.sigma * normal.sample(&mut rng);
        let raw = (mu + noise + boost).exp().round() - 1.0;
        let views = if raw.is_finite() {
            raw.clamp(0.0, 1e12) as u64
        } else {
            0
        };

        let google_view_fraction = if boosted {
            1.0 - (-boost).exp()
        } else {
            (0.08 * topic.search_exposure * rng.random::<f64>()).min(1.0)
        };

        let content_type = (topic.content_type + cfg.votes.content_noise * normal.sample(&mut rng))
            .clamp(0.0, 1.0);
        let asker_vote = if answered && rng.random::<f64>() < cfg.votes.vote_prob {
            let p_up =
                (cfg.votes.up_intercept - cfg.votes.up_slope * content_type).clamp(0.02, 0.98);
            Some(if rng.random::<f64>() < p_up {
                Vote::Up
            } else {
                Vote::Down
            })
        } else {
            None
        };

        uplift_inputs.push(first_of_user.then_some((
            mu - effects.answered - effects.length,
            answer_rate,
            boost_prob,
            question_len,
        )));

        questions.push(Question {
            id: id.clone(),
            user_id: Some(user_id.clone()),
            summary,
            details,
            week,
            platform: platform.name.clone(),
            product_version: version.name.clone(),
            answered,
            views,
            asker_vote,
            google_view_fraction,
        });
        records.push(TruthRecord {
            id,
            user_id,
            first_of_user,
            primary_topic: primary,
            secondary_topic: secondary,
            content_type,
            mu,
            effects,
            boosted,
            true_uplift: None,
        });
    }

    let corpus = QuestionCorpus {
        questions,
        season: cfg.season,
        provenance: Provenance::Synthetic {
            seed: cfg.seed,
            config_sha256: cfg.sha256(),
        },
    };

    if !corpus.is_empty() {
        let threshold = super::top_decile_threshold(&corpus.views())?;
        for (rec, inputs) in records.iter_mut().zip(&uplift_inputs) {
            if let Some((base, answer_rate, boost_prob, question_len)) = *inputs {
                let p = |length_effect: f64| {
                    let mu = base + length_effect;
                    answer_rate
                        * top_probability(cfg, mu + v.answered_effect, boost_prob, threshold)
                        + (1.0 - answer_rate) * top_probability(cfg, mu, boost_prob, threshold)
                };
                let control =
                    cfg.length_effect(question_len.min(MAX_SUMMARY_CHARS), question_len, false);
                let treated = cfg.length_effect(0, question_len, true);
                rec.true_uplift = Some(p(treated) - p(control));
            }
        }
    }

    Ok(GeneratedCorpus {
        corpus,
        truth: GroundTruth {
            topic_names: cfg.topics.iter().map(|t| t.name.clone()).collect(),
            records,
        },
    })
}

/// Per-topic question counts of the planted primary topics.
pub fn planted_topic_counts(truth: &GroundTruth) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for r in &truth.records {
        *m.entry(r.primary_topic).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_empty_corpus() {
        let g = generate_corpus(&GeneratorConfig::calibrated(0, 1)).unwrap();
        assert!(g.corpus.is_empty());
        assert!(g.truth.records.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::calibrated(400, 7);
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        assert_eq!(a.corpus.to_jsonl(), b.corpus.to_jsonl());
        assert_eq!(a.truth, b.truth);
        let c = generate_corpus(&GeneratorConfig::calibrated(400, 8)).unwrap();
        assert_ne!(a.corpus.to_jsonl(), c.corpus.to_jsonl());
    }

    #[test]
    fn invalid_configs() {
        let mut c = GeneratorConfig::calibrated(10, 1);
        c.topics[0].keywords.clear();
        assert!(matches!(generate_corpus(&c), Err(Error::Config(_))));
        let mut c = GeneratorConfig::calibrated(10, 1);
        c.topics.clear();
        assert!(generate_corpus(&c).is_err());
        let mut c = GeneratorConfig::calibrated(10, 1);
        c.weeks.volume.pop();
        assert!(generate_corpus(&c).is_err());
        let mut c = GeneratorConfig::calibrated(10, 1);
        c.views.sigma = 0.0;
        assert!(generate_corpus(&c).is_err());
    }

    #[test]
    fn records_satisfy_invariants() {
        let g = generate_corpus(&GeneratorConfig::calibrated(2000, 3)).unwrap();
        let mut ids = HashSet::new();
        for q in &g.corpus.questions {
            assert!(ids.insert(q.id.clone()));
            Question::validate_text(&q.summary, q.details.as_deref()).unwrap();
            assert!(g.corpus.season.contains(q.week));
            assert!((0.0..=1.0).contains(&q.google_view_fraction));
        }
        // Weeks are non-decreasing in id order and each user's first question comes first.
        assert!(g
            .corpus
            .questions
            .windows(2)
            .all(|w| w[0].week <= w[1].week));
        let mut seen = HashSet::new();
        for r in &g.truth.records {
            assert_eq!(r.first_of_user, seen.insert(r.user_id.clone()));
            assert_eq!(r.true_uplift.is_some(), r.first_of_user);
        }
    }

    #[test]
    fn topic_effects_uncorrelated_with_content_type() {
        let cfg = GeneratorConfig::calibrated(0, 1);
        let w: f64 = cfg.topics.iter().map(|t| t.prevalence).sum();
        let m_ct = cfg
            .topics
            .iter()
            .map(|t| t.prevalence * t.content_type)
            .sum::<f64>()
            / w;
        let cov: f64 = cfg
            .topics
            .iter()
            .map(|t| t.prevalence * (t.content_type - m_ct) * t.view_effect)
            .sum();
        assert!(cov.abs() < 1e-12);
    }

    #[test]
    fn truth_round_trips() {
        let g = generate_corpus(&GeneratorConfig::calibrated(50, 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("truth.jsonl");
        g.truth.save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let back: Vec<TruthRecord> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(back, g.truth.records);
    }
}
