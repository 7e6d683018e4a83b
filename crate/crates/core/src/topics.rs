//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling, fold-in inference
//! of per-question topic distributions, normalized topic entropy and per-topic
//! aggregate statistics.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{GroundTruth, Question, QuestionCorpus, Vote};
use crate::error::{Error, Result};
use crate::evalstats::pearson;
use crate::textfeat::tokenize;

pub const MODEL_VERSION: u32 = 1;

/// English function words dropped from LDA documents.
pub const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "can't", "cannot", "could", "couldn't", "d", "did", "didn't", "do", "does",
    "doesn't", "doing", "don't", "down", "during", "each", "few", "for", "from", "further", "get",
    "got", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how", "i",
    "if", "in", "into", "is", "isn't", "it", "it's", "its", "just", "ll", "m", "me", "more",
    "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
    "other", "our", "ours", "out", "over", "own", "re", "s", "same", "she", "should", "so", "some",
    "such", "t", "than", "thanks", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "through", "to", "too", "under", "until", "up", "ve", "very", "was",
    "wasn't", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why",
    "will", "with", "won't", "would", "yet", "you", "your",
];

pub fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

/// LDA document tokens: the summary and details concatenated, stop words removed.
pub fn document_tokens(question: &Question) -> Vec<String> {
    content_tokens(&question.full_text())
}

pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_inner()
        .into_iter()
        .filter(|t| !is_stop_word(t) && t.chars().any(char::is_alphanumeric))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub n_topics: usize,
    /// Symmetric document-topic prior; `None` means 50 / M.
    pub alpha: Option<f64>,
    pub beta: f64,
    /// Sweeps after burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    /// Number of final sweeps whose assignment counts are averaged into the
    /// training-document distributions.
    pub retained_samples: usize,
    /// Words seen in fewer documents are left out of the vocabulary.
    pub min_doc_freq: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            n_topics: 30,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            burn_in: 200,
            retained_samples: 50,
            min_doc_freq: 2,
            seed: 0,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.n_topics as f64)
    }
}

/// Fold-in inference settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceParams {
    pub burn_in: usize,
    pub samples: usize,
}

impl Default for InferenceParams {
    fn default() -> Self {
        InferenceParams {
            burn_in: 20,
            samples: 30,
        }
    }
}

/// Probability vector over topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub probs: Vec<f64>,
}

impl TopicDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_normalized(&probs)?;
        Ok(TopicDistribution { probs })
    }

    pub fn uniform(m: usize) -> Self {
        TopicDistribution {
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn n_topics(&self) -> usize {
        self.probs.len()
    }

    /// Most probable topic, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

fn check_normalized(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidInput("topic distribution is empty".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidInput(
            "topic probabilities must be finite and non-negative".into(),
        ));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "topic probabilities sum to {s}, not 1"
        )));
    }
    Ok(())
}

/// Normalized entropy `-(1/ln M) Σ p ln p`, with `0 ln 0 = 0`. Lies in [0, 1];
/// defined as 0 for a single topic.
pub fn topic_entropy(dist: &TopicDistribution) -> Result<f64> {
    entropy_of(&dist.probs, std::f64::consts::E)
}

/// Same quantity computed with logarithms in `base`; the normalization cancels the base.
pub fn topic_entropy_in_base(dist: &TopicDistribution, base: f64) -> Result<f64> {
    if !(base > 0.0 && base != 1.0) {
        return Err(Error::InvalidInput(format!(
            "invalid logarithm base {base}"
        )));
    }
    entropy_of(&dist.probs, base)
}

fn entropy_of(probs: &[f64], base: f64) -> Result<f64> {
    check_normalized(probs)?;
    let m = probs.len();
    if m == 1 {
        return Ok(0.0);
    }
    // Uniform is exactly 1; summing M rounded terms would not land there.
    if probs.iter().all(|&p| p == probs[0]) {
        return Ok(1.0);
    }
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log(base))
        .sum();
    Ok((h / (m as f64).log(base)).clamp(0.0, 1.0) + 0.0) // + 0.0 drops a negative zero
}

/// Result of fold-in inference for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct InferredTopics {
    pub distribution: TopicDistribution,
    pub n_tokens: usize,
    /// Set when the document had no in-vocabulary tokens and the uniform prior was returned.
    pub uniform_fallback: bool,
}

/// Fitted LDA model. Topic-word counts are stored word-major: entry `w * M + k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicModel {
    pub version: u32,
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub params: LdaParams,
    pub vocabulary: Vec<String>,
    pub topic_word_counts: Vec<u32>,
    pub topic_totals: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    /// Cached `(n_wk + β) / (n_k + Vβ)`, word-major.
    #[serde(skip)]
    phi: Vec<f64>,
}

impl PartialEq for TopicModel {
    fn eq(&self, o: &Self) -> bool {
        self.version == o.version
            && self.n_topics == o.n_topics
            && self.alpha == o.alpha
            && self.beta == o.beta
            && self.seed == o.seed
            && self.params == o.params
            && self.vocabulary == o.vocabulary
            && self.topic_word_counts == o.topic_word_counts
            && self.topic_totals == o.topic_totals
    }
}

fn fnv_tokens(tokens: &[u32]) -> u64 {
    let mut h = FnvHasher::default();
    for t in tokens {
        h.write_u32(*t);
    }
    h.finish()
}

fn sample_index(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("non-empty");
    let u = rng.random::<f64>() * total;
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

impl TopicModel {
    fn rebuild_caches(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let m = self.n_topics;
        let vb = self.vocabulary.len() as f64 * self.beta;
        self.phi = self
            .topic_word_counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (f64::from(c) + self.beta) / (self.topic_totals[i % m] as f64 + vb))
            .collect();
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn word_index(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn count(&self, topic: usize, word: usize) -> u32 {
        self.topic_word_counts[word * self.n_topics + topic]
    }

    /// The `k` highest-probability words of a topic, ties broken alphabetically.
    pub fn top_keywords(&self, topic: usize, k: usize) -> Vec<String> {
        let mut words: Vec<(u32, &str)> = (0..self.vocab_size())
            .map(|w| (self.count(topic, w), self.vocabulary[w].as_str()))
            .filter(|(c, _)| *c > 0)
            .collect();
        words.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        words
            .into_iter()
            .take(k)
            .map(|(_, w)| w.to_owned())
            .collect()
    }

    fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.word_index(t)).collect()
    }

    /// Fold-in Gibbs inference with the topic-word counts held fixed. The sampler
    /// seed is derived from the model seed and the token ids, so the result is a
    /// pure function of the text.
    pub fn infer_tokens(&self, tokens: &[String], params: &InferenceParams) -> InferredTopics {
        let m = self.n_topics;
        let words = self.encode(tokens);
        if words.is_empty() {
            return InferredTopics {
                distribution: TopicDistribution::uniform(m),
                n_tokens: 0,
                uniform_fallback: true,
            };
        }
        if m == 1 {
            return InferredTopics {
                distribution: TopicDistribution { probs: vec![1.0] },
                n_tokens: words.len(),
                uniform_fallback: false,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv_tokens(&words));
        let mut ndk = vec![0u32; m];
        let mut z = Vec::with_capacity(words.len());
        let mut cum = vec![0.0; m];
        // Initialize by sampling from the topic-word probabilities alone.
        for &w in &words {
            let row = &self.phi[w as usize * m..(w as usize + 1) * m];
            let mut acc = 0.0;
            for (c, &p) in cum.iter_mut().zip(row) {
                acc += p;
                *c = acc;
            }
            let k = sample_index(&mut rng, &cum);
            ndk[k] += 1;
            z.push(k);
        }
        let samples = params.samples.max(1);
        let mut avg = vec![0.0; m];
        for sweep in 0..params.burn_in + samples {
            for (i, &w) in words.iter().enumerate() {
                ndk[z[i]] -= 1;
                let row = &self.phi[w as usize * m..(w as usize + 1) * m];
                let mut acc = 0.0;
                for k in 0..m {
                    acc += (f64::from(ndk[k]) + self.alpha) * row[k];
                    cum[k] = acc;
                }
                let k = sample_index(&mut rng, &cum);
                z[i] = k;
                ndk[k] += 1;
            }
            if sweep >= params.burn_in {
                for k in 0..m {
                    avg[k] += f64::from(ndk[k]);
                }
            }
        }
        InferredTopics {
            distribution: normalize(avg),
            n_tokens: words.len(),
            uniform_fallback: false,
        }
    }

    pub fn infer_text(&self, text: &str, params: &InferenceParams) -> InferredTopics {
        self.infer_tokens(&content_tokens(text), params)
    }

    pub fn infer_question(&self, question: &Question, params: &InferenceParams) -> InferredTopics {
        self.infer_tokens(&document_tokens(question), params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_vec(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let mut model: TopicModel = serde_json::from_slice(bytes)?;
        if model.version != MODEL_VERSION {
            return Err(Error::Version {
                kind: "topic model",
                found: model.version,
                expected: MODEL_VERSION,
            });
        }
        if model.n_topics == 0
            || model.topic_totals.len() != model.n_topics
            || model.topic_word_counts.len() != model.n_topics * model.vocabulary.len()
        {
            return Err(Error::Schema {
                field: "topic_word_counts".into(),
                message: "dimensions do not match topic count and vocabulary".into(),
            });
        }
        model.rebuild_caches();
        Ok(model)
    }
}

/// Infers the distribution of an arbitrary text under `model` (convenience wrapper).
pub fn infer_topic_distribution(
    model: &TopicModel,
    question: &Question,
    params: &InferenceParams,
) -> InferredTopics {
    model.infer_question(question, params)
}

fn normalize(v: Vec<f64>) -> TopicDistribution {
    let s: f64 = v.iter().sum();
    let mut probs: Vec<f64> = v.into_iter().map(|x| x / s).collect();
    // Push the rounding residue onto the largest entry so the sum is 1 to within 1e-15.
    let residue = 1.0 - probs.iter().sum::<f64>();
    let k = probs
        .iter()
        .enumerate()
        .fold(0, |b, (i, &p)| if p > probs[b] { i } else { b });
    probs[k] += residue;
    TopicDistribution { probs }
}

/// A fitted model together with the posterior of each training document.
#[derive(Debug, Clone)]
pub struct LdaFit {
    pub model: TopicModel,
    /// Average over the retained samples of each document's topic proportions.
    pub distributions: Vec<TopicDistribution>,
}

/// Fits LDA on pre-tokenized documents.
pub fn fit_lda_documents(docs: &[Vec<String>], params: &LdaParams) -> Result<LdaFit> {
    let m = params.n_topics;
    if m == 0 {
        return Err(Error::Config("topic count must be at least 1".into()));
    }
    let alpha = params.alpha();
    if !(alpha > 0.0 && params.beta > 0.0) {
        return Err(Error::Config("alpha and beta must be positive".into()));
    }
    if params.iterations == 0 {
        return Err(Error::Config("at least one sweep is required".into()));
    }
    if docs.is_empty() {
        return Err(Error::Empty("no documents to fit".into()));
    }
    if m > docs.len() {
        return Err(Error::Degenerate(format!(
            "{m} topics requested for only {} documents",
            docs.len()
        )));
    }

    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        let mut seen: Vec<&str> = d.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for w in seen {
            *doc_freq.entry(w).or_insert(0) += 1;
        }
    }
    let vocabulary: Vec<String> = doc_freq
        .into_iter()
        .filter(|(_, c)| *c >= params.min_doc_freq.max(1))
        .map(|(w, _)| w.to_owned())
        .collect();
    if vocabulary.is_empty() {
        return Err(Error::Empty("vocabulary is empty after filtering".into()));
    }
    let index: HashMap<&str, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();
    let encoded: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| {
            d.iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();

    let v = vocabulary.len();
    let vb = v as f64 * params.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut nwk = vec![0u32; v * m];
    let mut nk = vec![0u64; m];
    let mut ndk = vec![0u32; docs.len() * m];
    let mut z: Vec<Vec<u16>> = Vec::with_capacity(docs.len());
    for (d, words) in encoded.iter().enumerate() {
        let mut zd = Vec::with_capacity(words.len());
        for &w in words {
            let k = rng.random_range(0..m);
            nwk[w as usize * m + k] += 1;
            nk[k] += 1;
            ndk[d * m + k] += 1;
            zd.push(k as u16);
        }
        z.push(zd);
    }

    let total_sweeps = params.burn_in + params.iterations;
    let retained = params.retained_samples.clamp(1, params.iterations);
    let mut sums = vec![0.0f64; docs.len() * m];
    let mut cum = vec![0.0; m];
    for sweep in 0..total_sweeps {
        for (d, words) in encoded.iter().enumerate() {
            let nd = &mut ndk[d * m..(d + 1) * m];
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i] as usize;
                let row = w as usize * m;
                nwk[row + old] -= 1;
                nk[old] -= 1;
                nd[old] -= 1;
                let mut acc = 0.0;
                for k in 0..m {
                    acc += (f64::from(nd[k]) + alpha) * (f64::from(nwk[row + k]) + params.beta)
                        / (nk[k] as f64 + vb);
                    cum[k] = acc;
                }
                let k = sample_index(&mut rng, &cum);
                z[d][i] = k as u16;
                nwk[row + k] += 1;
                nk[k] += 1;
                nd[k] += 1;
            }
        }
        if sweep >= total_sweeps - retained {
            for d in 0..docs.len() {
                let n = encoded[d].len();
                if n == 0 {
                    continue;
                }
                for k in 0..m {
                    sums[d * m + k] += f64::from(ndk[d * m + k]) / n as f64;
                }
            }
        }
    }

    let distributions = (0..docs.len())
        .map(|d| {
            if encoded[d].is_empty() {
                TopicDistribution::uniform(m)
            } else {
                normalize(sums[d * m..(d + 1) * m].to_vec())
            }
        })
        .collect();
    let mut model = TopicModel {
        version: MODEL_VERSION,
        n_topics: m,
        alpha,
        beta: params.beta,
        seed: params.seed,
        params: params.clone(),
        vocabulary,
        topic_word_counts: nwk,
        topic_totals: nk,
        index: HashMap::new(),
        phi: Vec::new(),
    };
    model.rebuild_caches();
    Ok(LdaFit {
        model,
        distributions,
    })
}

/// Fits LDA on the questions of a corpus (summary and details form one document).
pub fn fit_lda(corpus: &QuestionCorpus, params: &LdaParams) -> Result<LdaFit> {
    let docs: Vec<Vec<String>> = corpus.questions.iter().map(document_tokens).collect();
    fit_lda_documents(&docs, params)
}

/// Fraction of documents whose assigned topic is the majority planted topic of its
/// cluster: `Σ_k max_t |{d : assigned = k, truth = t}| / n`.
pub fn alignment_purity(assigned: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(assigned.len(), truth.len());
    if assigned.is_empty() {
        return 1.0;
    }
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&a, &t) in assigned.iter().zip(truth) {
        *table.entry(a).or_default().entry(t).or_insert(0) += 1;
    }
    let hits: usize = table
        .values()
        .map(|row| row.values().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / assigned.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAggregate {
    pub topic: usize,
    pub question_count: usize,
    pub mean_views: Option<f64>,
    /// Up votes over all asker votes; absent without votes.
    pub up_vote_fraction: Option<f64>,
    pub mean_content_type: Option<f64>,
    pub top_keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAggregates {
    pub topics: Vec<TopicAggregate>,
}

impl TopicAggregates {
    fn paired(&self, f: impl Fn(&TopicAggregate) -> Option<f64>) -> (Vec<f64>, Vec<f64>) {
        self.topics
            .iter()
            .filter_map(|t| Some((t.up_vote_fraction?, f(t)?)))
            .unzip()
    }

    /// Pearson correlation across topics of up-vote fraction and mean content type.
    pub fn vote_content_correlation(&self) -> Result<f64> {
        let (x, y) = self.paired(|t| t.mean_content_type);
        pearson(&x, &y)
    }

    /// Pearson correlation across topics of up-vote fraction and mean views.
    pub fn vote_views_correlation(&self) -> Result<f64> {
        let (x, y) = self.paired(|t| t.mean_views);
        pearson(&x, &y)
    }

    pub fn total_questions(&self) -> usize {
        self.topics.iter().map(|t| t.question_count).sum()
    }
}

/// Per-topic statistics over questions hard-assigned to their most probable topic.
/// `content_types` supplies the per-question content-type variable when known.
pub fn topic_aggregates_from_assignments(
    model: &TopicModel,
    corpus: &QuestionCorpus,
    assignments: &[usize],
    content_types: Option<&[f64]>,
    n_keywords: usize,
) -> Result<TopicAggregates> {
    if assignments.len() != corpus.len() {
        return Err(Error::InvalidInput(
            "one assignment per question is required".into(),
        ));
    }
    if let Some(ct) = content_types {
        if ct.len() != corpus.len() {
            return Err(Error::InvalidInput(
                "one content type per question is required".into(),
            ));
        }
    }
    let m = model.n_topics;
    let mut count = vec![0usize; m];
    let mut views = vec![0.0; m];
    let mut up = vec![0usize; m];
    let mut votes = vec![0usize; m];
    let mut ct_sum = vec![0.0; m];
    for (i, (q, &k)) in corpus.questions.iter().zip(assignments).enumerate() {
        if k >= m {
            return Err(Error::InvalidInput(format!(
                "assignment {k} outside {m} topics"
            )));
        }
        count[k] += 1;
        views[k] += q.views as f64;
        if let Some(v) = q.asker_vote {
            votes[k] += 1;
            if v == Vote::Up {
                up[k] += 1;
            }
        }
        if let Some(ct) = content_types {
            ct_sum[k] += ct[i];
        }
    }
    let topics = (0..m)
        .map(|k| {
            let present = count[k] > 0;
            TopicAggregate {
                topic: k,
                question_count: count[k],
                mean_views: present.then(|| views[k] / count[k] as f64),
                up_vote_fraction: (votes[k] > 0).then(|| up[k] as f64 / votes[k] as f64),
                mean_content_type: (present && content_types.is_some())
                    .then(|| ct_sum[k] / count[k] as f64),
                top_keywords: model.top_keywords(k, n_keywords),
            }
        })
        .collect();
    Ok(TopicAggregates { topics })
}

/// Infers every question's topic and aggregates; content types come from the ground
/// truth when supplied.
pub fn topic_aggregates(
    model: &TopicModel,
    corpus: &QuestionCorpus,
    params: &InferenceParams,
    ground_truth: Option<&GroundTruth>,
) -> Result<TopicAggregates> {
    let assignments: Vec<usize> = corpus
        .questions
        .iter()
        .map(|q| model.infer_question(q, params).distribution.argmax())
        .collect();
    let content_types = match ground_truth {
        Some(gt) => {
            let by_id = gt.by_id();
            let ct = corpus
                .questions
                .iter()
                .map(|q| {
                    by_id
                        .get(q.id.as_str())
                        .map(|r| r.content_type)
                        .ok_or_else(|| {
                            Error::InvalidInput(format!("no ground truth for question `{}`", q.id))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(ct)
        }
        None => None,
    };
    topic_aggregates_from_assignments(model, corpus, &assignments, content_types.as_deref(), 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn planted_docs(n: usize, seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut docs = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..n {
            let t = rng.random_range(0..4);
            let len = rng.random_range(8..20);
            docs.push(
                (0..len)
                    .map(|_| format!("t{t}w{}", rng.random_range(0..50)))
                    .collect(),
            );
            truth.push(t);
        }
        (docs, truth)
    }

    fn small_params(m: usize, seed: u64) -> LdaParams {
        LdaParams {
            n_topics: m,
            alpha: Some(0.5),
            iterations: 60,
            burn_in: 40,
            retained_samples: 10,
            min_doc_freq: 1,
            seed,
            ..LdaParams::default()
        }
    }

    #[test]
    fn stop_words_sorted_for_binary_search() {
        assert!(STOP_WORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn entropy_examples() {
        let one_hot = TopicDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(topic_entropy(&one_hot).unwrap(), 0.0);
        let uniform = TopicDistribution::uniform(30);
        assert!((topic_entropy(&uniform).unwrap() - 1.0).abs() < 1e-12);
        let half = TopicDistribution::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((topic_entropy(&half).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(topic_entropy(&TopicDistribution::uniform(1)).unwrap(), 0.0);
        assert!(TopicDistribution::new(vec![0.5, 0.4]).is_err());
        let bad = TopicDistribution {
            probs: vec![0.7, 0.7],
        };
        assert!(topic_entropy(&bad).is_err());
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_base(raw in prop::collection::vec(0.0f64..1.0, 2..40), base in 1.5f64..20.0) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 1e-6);
            let d = normalize(raw);
            let e = topic_entropy(&d).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert!((topic_entropy_in_base(&d, base).unwrap() - e).abs() < 1e-12);
            let mut rev = d.clone();
            rev.probs.reverse();
            prop_assert!((topic_entropy(&rev).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_planted_topics() {
        let (docs, truth) = planted_docs(800, 3);
        let fit = fit_lda_documents(&docs, &small_params(4, 11)).unwrap();
        let assigned: Vec<usize> = fit
            .distributions
            .iter()
            .map(TopicDistribution::argmax)
            .collect();
        assert!(alignment_purity(&assigned, &truth) >= 0.9);
        let total: u64 = fit.model.topic_totals.iter().sum();
        let tokens: usize = docs.iter().map(Vec::len).sum();
        assert_eq!(total as usize, tokens);
        for k in 0..4 {
            let row: u64 = (0..fit.model.vocab_size())
                .map(|w| u64::from(fit.model.count(k, w)))
                .sum();
            assert_eq!(row, fit.model.topic_totals[k]);
        }
    }

    #[test]
    fn fold_in_inference() {
        let (docs, _) = planted_docs(400, 5);
        let model = fit_lda_documents(&docs, &small_params(4, 2)).unwrap().model;
        let doc: Vec<String> = (0..20).map(|i| format!("t2w{}", i % 50)).collect();
        let params = InferenceParams::default();
        let a = model.infer_tokens(&doc, &params);
        assert!(a.distribution.probs[a.distribution.argmax()] > 0.8);
        assert_eq!(a, model.infer_tokens(&doc, &params));
        let empty = model.infer_tokens(&[], &params);
        assert!(empty.uniform_fallback);
        assert_eq!(empty.distribution, TopicDistribution::uniform(4));
        let oov = model.infer_tokens(&["zzz".to_owned()], &params);
        assert!(oov.uniform_fallback);
    }

    #[test]
    fn single_topic_is_certain() {
        let (docs, _) = planted_docs(50, 1);
        let fit = fit_lda_documents(&docs, &small_params(1, 0)).unwrap();
        assert!(fit.distributions.iter().all(|d| d.probs == vec![1.0]));
        let inf = fit
            .model
            .infer_tokens(&docs[0], &InferenceParams::default());
        assert_eq!(inf.distribution.probs, vec![1.0]);
    }

    #[test]
    fn fitting_errors() {
        let (docs, _) = planted_docs(3, 1);
        assert!(matches!(
            fit_lda_documents(&docs, &small_params(5, 0)),
            Err(Error::Degenerate(_))
        ));
        assert!(fit_lda_documents(&[], &small_params(1, 0)).is_err());
        let empty = vec![vec![], vec![]];
        assert!(matches!(
            fit_lda_documents(&empty, &small_params(1, 0)),
            Err(Error::Empty(_))
        ));
        assert!(fit_lda_documents(&docs, &small_params(0, 0)).is_err());
    }

    #[test]
    fn deterministic_and_round_trips() {
        let (docs, _) = planted_docs(200, 9);
        let a = fit_lda_documents(&docs, &small_params(4, 7)).unwrap();
        let b = fit_lda_documents(&docs, &small_params(4, 7)).unwrap();
        assert_eq!(a.model, b.model);
        let json = serde_json::to_vec(&a.model).unwrap();
        let back = TopicModel::from_json(&json).unwrap();
        assert_eq!(back, a.model);
        let p = InferenceParams::default();
        assert_eq!(
            back.infer_tokens(&docs[0], &p),
            a.model.infer_tokens(&docs[0], &p)
        );
    }

    #[test]
    fn stop_words_removed_from_documents() {
        let toks = content_tokens("Why is my refund so LOW? I'm waiting");
        assert_eq!(toks, vec!["refund", "low", "waiting"]);
    }

    #[test]
    fn aggregates_mark_empty_topics_absent() {
        let (docs, _) = planted_docs(100, 2);
        let model = fit_lda_documents(&docs, &small_params(3, 1)).unwrap().model;
        let mut q1 = Question::new("a", "refund", None, 1, "online", "free");
        q1.views = 10;
        q1.asker_vote = Some(Vote::Up);
        let mut q2 = q1.clone();
        q2.id = "b".into();
        q2.views = 20;
        let corpus = QuestionCorpus::in_memory(vec![q1, q2]);
        let agg = topic_aggregates_from_assignments(&model, &corpus, &[0, 0], Some(&[0.2, 0.4]), 5)
            .unwrap();
        assert_eq!(agg.topics[0].up_vote_fraction, Some(1.0));
        assert_eq!(agg.topics[0].mean_views, Some(15.0));
        assert!((agg.topics[0].mean_content_type.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(agg.topics[1].mean_views, None);
        assert_eq!(agg.total_questions(), 2);
    }
}
