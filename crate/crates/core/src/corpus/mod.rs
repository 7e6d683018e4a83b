//! Question data model, corpus files, summary statistics and the top-decile label.

mod generator;
mod topics_catalog;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use generator::{
    generate_corpus, planted_topic_counts, EffectBreakdown, FirstWordSpec, GeneratedCorpus,
    GeneratorConfig, GroundTruth, LengthSpec, LevelSpec, StyleSpec, TopicSpec, TruthRecord,
    UserSpec, ViewSpec, VoteSpec, WeekSpec, FIRST_WORD_STATS,
};

/// Maximum number of characters in a question summary.
pub const MAX_SUMMARY_CHARS: usize = 170;

/// Share of questions that make up the top decile.
pub const TOP_DECILE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    Up,
    Down,
}

/// One Q&A post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
    pub week: u32,
    pub platform: String,
    pub product_version: String,
    pub answered: bool,
    pub views: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asker_vote: Option<Vote>,
    #[serde(default)]
    pub google_view_fraction: f64,
}

impl Question {
    /// A question with no observed outcomes yet (unanswered, zero views).
    pub fn new(
        id: impl Into<String>,
        summary: impl Into<String>,
        details: Option<String>,
        week: u32,
        platform: impl Into<String>,
        product_version: impl Into<String>,
    ) -> Self {
        Question {
            id: id.into(),
            user_id: None,
            summary: summary.into(),
            details,
            week,
            platform: platform.into(),
            product_version: product_version.into(),
            answered: false,
            views: 0,
            asker_vote: None,
            google_view_fraction: 0.0,
        }
    }

    pub fn summary_len(&self) -> usize {
        self.summary.chars().count()
    }

    pub fn details_len(&self) -> usize {
        self.details.as_deref().map_or(0, |d| d.chars().count())
    }

    /// Summary plus details length in characters.
    pub fn question_len(&self) -> usize {
        self.summary_len() + self.details_len()
    }

    /// Summary and details joined with a newline.
    pub fn full_text(&self) -> String {
        match &self.details {
            Some(d) => format!("{}\n{}", self.summary, d),
            None => self.summary.clone(),
        }
    }

    /// Checks the text invariants shared by corpus records and service requests.
    pub fn validate_text(summary: &str, details: Option<&str>) -> Result<()> {
        if summary.trim().is_empty() {
            return Err(Error::Validation {
                field: "summary".into(),
                message: "summary is mandatory".into(),
            });
        }
        let len = summary.chars().count();
        if len > MAX_SUMMARY_CHARS {
            return Err(Error::Validation {
                field: "summary".into(),
                message: format!(
                    "{len} characters exceeds the {MAX_SUMMARY_CHARS}-character limit"
                ),
            });
        }
        if let Some(d) = details {
            if d.is_empty() {
                return Err(Error::Validation {
                    field: "details".into(),
                    message: "empty details must be omitted, not sent as an empty string".into(),
                });
            }
        }
        Ok(())
    }
}

/// Inclusive range of weeks covered by a season.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonConfig {
    pub first_week: u32,
    pub last_week: u32,
}

impl Default for SeasonConfig {
    /// Weeks 1..=15, i.e. January 1st to April 15th.
    fn default() -> Self {
        SeasonConfig {
            first_week: 1,
            last_week: 15,
        }
    }
}

impl SeasonConfig {
    pub fn contains(&self, week: u32) -> bool {
        (self.first_week..=self.last_week).contains(&week)
    }

    pub fn n_weeks(&self) -> usize {
        (self.last_week - self.first_week + 1) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Synthetic { seed: u64, config_sha256: String },
    Loaded { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionCorpus {
    pub questions: Vec<Question>,
    pub season: SeasonConfig,
    pub provenance: Provenance,
}

impl QuestionCorpus {
    /// Corpus built in memory, with the default season.
    pub fn in_memory(questions: Vec<Question>) -> Self {
        QuestionCorpus {
            questions,
            season: SeasonConfig::default(),
            provenance: Provenance::Loaded {
                path: PathBuf::from("<memory>"),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn views(&self) -> Vec<u64> {
        self.questions.iter().map(|q| q.views).collect()
    }

    /// Writes one JSON record per line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_records(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_records<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for q in &self.questions {
            serde_json::to_writer(&mut *w, q)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Serialized records as a string.
    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_records(&mut buf).expect("writing to a vector");
        String::from_utf8(buf).expect("serde_json emits utf-8")
    }

    /// Subset of questions by index, keeping season and provenance.
    pub fn subset(&self, indices: &[usize]) -> QuestionCorpus {
        QuestionCorpus {
            questions: indices.iter().map(|&i| self.questions[i].clone()).collect(),
            season: self.season,
            provenance: self.provenance.clone(),
        }
    }
}

fn field_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Record {
        line,
        field: field.to_owned(),
        message: message.into(),
    }
}

fn req_str(obj: &Map<String, Value>, line: usize, field: &str) -> Result<String> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(field_err(line, field, "expected a string")),
        None => Err(field_err(line, field, "missing required field")),
    }
}

fn opt_str(obj: &Map<String, Value>, line: usize, field: &str) -> Result<Option<String>> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(field_err(line, field, "expected a string")),
    }
}

fn req_u64(obj: &Map<String, Value>, line: usize, field: &str) -> Result<u64> {
    match obj.get(field) {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| field_err(line, field, "expected a non-negative integer")),
        None => Err(field_err(line, field, "missing required field")),
    }
}

fn parse_record(text: &str, line: usize, season: &SeasonConfig) -> Result<Question> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| field_err(line, "<record>", format!("malformed JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| field_err(line, "<record>", "expected a JSON object"))?;

    let id = req_str(obj, line, "id")?;
    if id.is_empty() {
        return Err(field_err(line, "id", "empty id"));
    }
    let summary = req_str(obj, line, "summary")?;
    let details = opt_str(obj, line, "details")?;
    if let Err(Error::Validation { field, message }) =
        Question::validate_text(&summary, details.as_deref())
    {
        return Err(field_err(line, &field, message));
    }
    let week = req_u64(obj, line, "week")?;
    let week = u32::try_from(week)
        .ok()
        .filter(|w| season.contains(*w))
        .ok_or_else(|| {
            field_err(
                line,
                "week",
                format!(
                    "week {week} outside season {}..={}",
                    season.first_week, season.last_week
                ),
            )
        })?;
    let platform = req_str(obj, line, "platform")?;
    let product_version = req_str(obj, line, "product_version")?;
    let answered = match obj.get("answered") {
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(field_err(line, "answered", "expected a boolean")),
        None => return Err(field_err(line, "answered", "missing required field")),
    };
    let views = req_u64(obj, line, "views")?;
    let asker_vote = match obj.get("asker_vote") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value::<Vote>(v.clone())
                .map_err(|_| field_err(line, "asker_vote", "expected \"up\" or \"down\""))?,
        ),
    };
    let google_view_fraction = match obj.get("google_view_fraction") {
        None | Some(Value::Null) => 0.0,
        Some(v) => v
            .as_f64()
            .filter(|f| (0.0..=1.0).contains(f))
            .ok_or_else(|| {
                field_err(line, "google_view_fraction", "expected a number in [0, 1]")
            })?,
    };
    Ok(Question {
        id,
        user_id: opt_str(obj, line, "user_id")?,
        summary,
        details,
        week,
        platform,
        product_version,
        answered,
        views,
        asker_vote,
        google_view_fraction,
    })
}

/// Parses line-delimited records. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    season: SeasonConfig,
    source: PathBuf,
) -> Result<QuestionCorpus> {
    let mut questions = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::io(&source, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let q = parse_record(&text, line_no, &season)?;
        if !seen.insert(q.id.clone()) {
            return Err(Error::DuplicateId {
                line: line_no,
                id: q.id,
            });
        }
        questions.push(q);
    }
    Ok(QuestionCorpus {
        questions,
        season,
        provenance: Provenance::Loaded { path: source },
    })
}

/// Loads a corpus file written by [`QuestionCorpus::save`] (default season).
pub fn load_corpus(path: impl AsRef<Path>) -> Result<QuestionCorpus> {
    load_corpus_with_season(path, SeasonConfig::default())
}

pub fn load_corpus_with_season(
    path: impl AsRef<Path>,
    season: SeasonConfig,
) -> Result<QuestionCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), season, path.to_path_buf())
}

/// Aggregate statistics of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub n_questions: usize,
    pub answer_rate: f64,
    pub mean_views: f64,
    pub mean_views_answered: Option<f64>,
    pub top1_view_share: f64,
    pub top10_view_share: f64,
    pub zero_view_fraction: f64,
    /// Questions with strictly more views than this are in the top decile.
    pub top_decile_view_threshold: u64,
    pub top_decile_fraction: f64,
    pub details_fraction: f64,
    pub details_fraction_top_decile: Option<f64>,
    pub mean_details_len: Option<f64>,
    pub mean_details_len_top_decile: Option<f64>,
    pub mean_summary_len_no_details: Option<f64>,
    /// Mean summary length of top-decile questions without details.
    pub mean_summary_len_top_decile: Option<f64>,
}

fn mean_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Minimal `v` such that strictly more than `v` views selects at most 10% of questions.
pub fn top_decile_threshold(views: &[u64]) -> Result<u64> {
    if views.is_empty() {
        return Err(Error::Empty(
            "cannot compute a threshold for no questions".into(),
        ));
    }
    let mut sorted = views.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let k = (views.len() as f64 * TOP_DECILE).floor() as usize;
    Ok(sorted[k])
}

/// Share of total views held by the `fraction` most viewed questions.
fn top_share(sorted_desc: &[u64], total: u64, fraction: f64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let k = (sorted_desc.len() as f64 * fraction).ceil() as usize;
    sorted_desc[..k.min(sorted_desc.len())].iter().sum::<u64>() as f64 / total as f64
}

pub fn corpus_stats(corpus: &QuestionCorpus) -> Result<CorpusSummary> {
    let qs = &corpus.questions;
    if qs.is_empty() {
        return Err(Error::Empty("corpus has no questions".into()));
    }
    let n = qs.len() as f64;
    let views = corpus.views();
    let threshold = top_decile_threshold(&views)?;
    let mut sorted = views.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let total: u64 = views.iter().sum();
    let top = |q: &Question| q.views > threshold;
    let frac = |pred: &dyn Fn(&Question) -> bool| qs.iter().filter(|q| pred(q)).count() as f64 / n;
    let n_top = qs.iter().filter(|q| top(q)).count();

    Ok(CorpusSummary {
        n_questions: qs.len(),
        answer_rate: frac(&|q| q.answered),
        mean_views: total as f64 / n,
        mean_views_answered: mean_of(qs.iter().filter(|q| q.answered).map(|q| q.views as f64)),
        top1_view_share: top_share(&sorted, total, 0.01),
        top10_view_share: top_share(&sorted, total, 0.10),
        zero_view_fraction: frac(&|q| q.views == 0),
        top_decile_view_threshold: threshold,
        top_decile_fraction: n_top as f64 / n,
        details_fraction: frac(&|q| q.details.is_some()),
        details_fraction_top_decile: mean_of(
            qs.iter()
                .filter(|q| top(q))
                .map(|q| f64::from(u8::from(q.details.is_some()))),
        ),
        mean_details_len: mean_of(
            qs.iter()
                .filter(|q| q.details.is_some())
                .map(|q| q.details_len() as f64),
        ),
        mean_details_len_top_decile: mean_of(
            qs.iter()
                .filter(|q| q.details.is_some() && top(q))
                .map(|q| q.details_len() as f64),
        ),
        mean_summary_len_no_details: mean_of(
            qs.iter()
                .filter(|q| q.details.is_none())
                .map(|q| q.summary_len() as f64),
        ),
        mean_summary_len_top_decile: mean_of(
            qs.iter()
                .filter(|q| q.details.is_none() && top(q))
                .map(|q| q.summary_len() as f64),
        ),
    })
}

/// Top-decile labels aligned with corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopDecileLabels {
    pub threshold: u64,
    pub labels: Vec<bool>,
}

impl TopDecileLabels {
    pub fn positive_rate(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len() as f64
    }
}

/// Labels questions ranked by (views desc, id asc) within the top 10%.
///
/// Questions tied with the cutoff question are all labeled negative, so the
/// positive rate never exceeds 10%.
pub fn label_top_decile(corpus: &QuestionCorpus) -> Result<TopDecileLabels> {
    let threshold = top_decile_threshold(&corpus.views())?;
    Ok(TopDecileLabels {
        threshold,
        labels: corpus
            .questions
            .iter()
            .map(|q| q.views > threshold)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn corpus_from_views(views: &[u64]) -> QuestionCorpus {
        QuestionCorpus {
            questions: views
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let mut q = Question::new(
                        format!("q{i:03}"),
                        "How do I file?",
                        None,
                        1,
                        "online",
                        "free",
                    );
                    q.views = v;
                    q
                })
                .collect(),
            season: SeasonConfig::default(),
            provenance: Provenance::Loaded { path: "mem".into() },
        }
    }

    #[test]
    fn threshold_on_ten_items() {
        let c = corpus_from_views(&(0..10).collect::<Vec<_>>());
        let s = corpus_stats(&c).unwrap();
        assert_eq!(s.top_decile_view_threshold, 8);
        let labels = label_top_decile(&c).unwrap();
        assert_eq!(labels.labels.iter().filter(|&&l| l).count(), 1);
        assert!(labels.labels[9]);
    }

    #[test]
    fn single_outlier_label() {
        let c = corpus_from_views(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 100]);
        let l = label_top_decile(&c).unwrap();
        assert_eq!(
            l.labels,
            [false, false, false, false, false, false, false, false, false, true]
        );
    }

    #[test]
    fn tie_block_at_cutoff_is_negative() {
        // 20 items, the top two slots hold one 50 and a tie block of three 40s.
        let mut views = vec![1u64; 16];
        views.extend([50, 40, 40, 40]);
        let c = corpus_from_views(&views);
        let l = label_top_decile(&c).unwrap();
        // Brute force: k = 2 slots; sorted desc = [50,40,40,40,1,..]; cutoff value 40.
        assert_eq!(l.threshold, 40);
        let positives: Vec<usize> = (0..20).filter(|&i| l.labels[i]).collect();
        assert_eq!(positives, vec![16]);
        assert!(l.positive_rate() <= TOP_DECILE);
    }

    #[test]
    fn degenerate_equal_views() {
        let c = corpus_from_views(&[5; 200]);
        let s = corpus_stats(&c).unwrap();
        assert!((s.top1_view_share - 0.01).abs() < 1e-12);
        assert!((s.top10_view_share - 0.10).abs() < 1e-12);
        assert_eq!(s.zero_view_fraction, 0.0);
        assert_eq!(s.top_decile_fraction, 0.0);
        let z = corpus_stats(&corpus_from_views(&[0; 50])).unwrap();
        assert_eq!(z.zero_view_fraction, 1.0);
        assert_eq!(z.top1_view_share, 0.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let c = corpus_from_views(&[]);
        assert!(matches!(corpus_stats(&c), Err(Error::Empty(_))));
        assert!(label_top_decile(&c).is_err());
    }

    #[test]
    fn rejects_long_summary_with_line() {
        let ok = r#"{"id":"a","summary":"Where is my refund?","week":2,"platform":"online","product_version":"free","answered":true,"views":3}"#;
        let long = format!(
            r#"{{"id":"b","summary":"{}","week":2,"platform":"online","product_version":"free","answered":true,"views":3}}"#,
            "x".repeat(171)
        );
        let text = format!("{ok}\n{long}\n");
        let err = parse_corpus(text.as_bytes(), SeasonConfig::default(), "t".into()).unwrap_err();
        match err {
            Error::Record { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "summary");
            }
            other => panic!("unexpected {other:?}"),
        }
        let exact = text.replace(&"x".repeat(171), &"x".repeat(170));
        assert_eq!(
            parse_corpus(exact.as_bytes(), SeasonConfig::default(), "t".into())
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn three_record_fixture() {
        let text = concat!(
            r#"{"id":"a","summary":"Where is my refund?","details":"Filed in Feb.","week":2,"platform":"online","product_version":"free","answered":true,"views":3,"asker_vote":"up"}"#,
            "\n",
            r#"{"id":"b","summary":"why so slow","week":15,"platform":"desktop","product_version":"deluxe","answered":false,"views":0}"#,
            "\n\n",
            r#"{"id":"c","user_id":"u1","summary":"Can I claim my son?","week":7,"platform":"online","product_version":"premier","answered":true,"views":41,"google_view_fraction":0.25}"#,
            "\n"
        );
        let c = parse_corpus(text.as_bytes(), SeasonConfig::default(), "fixture".into()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.questions[0].details.as_deref(), Some("Filed in Feb."));
        assert_eq!(c.questions[0].asker_vote, Some(Vote::Up));
        assert_eq!(c.questions[1].details, None);
        let fv = crate::textfeat::extract_features(&c.questions[1], None);
        assert!(!fv.group2.details_flag);
        assert_eq!(c.questions[2].user_id.as_deref(), Some("u1"));
        assert_eq!(c.questions[2].google_view_fraction, 0.25);
        assert!(!c.to_jsonl().contains("\"details\":\"\""));
    }

    #[test]
    fn malformed_records() {
        let cases = [
            (
                r#"{"id":"a","summary":"x","week":"2","platform":"o","product_version":"f","answered":true,"views":1}"#,
                "week",
            ),
            (
                r#"{"id":"a","summary":"x","week":2,"platform":"o","product_version":"f","answered":true}"#,
                "views",
            ),
            (
                r#"{"id":"a","summary":"x","week":99,"platform":"o","product_version":"f","answered":true,"views":1}"#,
                "week",
            ),
            (
                r#"{"id":"a","summary":"x","week":2,"platform":"o","product_version":"f","answered":true,"views":-1}"#,
                "views",
            ),
            (
                r#"{"id":"a","summary":"","week":2,"platform":"o","product_version":"f","answered":true,"views":1}"#,
                "summary",
            ),
            (
                r#"{"id":"a","summary":"x","details":"","week":2,"platform":"o","product_version":"f","answered":true,"views":1}"#,
                "details",
            ),
            (
                r#"{"id":"a","summary":"x","week":2,"platform":"o","product_version":"f","answered":"yes","views":1}"#,
                "answered",
            ),
            (r#"not json"#, "<record>"),
        ];
        for (text, want) in cases {
            match parse_corpus(text.as_bytes(), SeasonConfig::default(), "t".into()) {
                Err(Error::Record { field, line, .. }) => {
                    assert_eq!(field, want, "{text}");
                    assert_eq!(line, 1);
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let rec = r#"{"id":"a","summary":"x","week":2,"platform":"o","product_version":"f","answered":true,"views":1}"#;
        let text = format!("{rec}\n{rec}\n");
        assert!(matches!(
            parse_corpus(text.as_bytes(), SeasonConfig::default(), "t".into()),
            Err(Error::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_corpus("/nonexistent/corpus.jsonl"),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn labels_permutation_invariant(views in proptest::collection::vec(0u64..60, 1..120), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let c = corpus_from_views(&views);
            let base = label_top_decile(&c).unwrap();
            let mut shuffled = c.clone();
            shuffled.questions.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let l = label_top_decile(&shuffled).unwrap();
            for (q, lab) in shuffled.questions.iter().zip(&l.labels) {
                let i = c.questions.iter().position(|o| o.id == q.id).unwrap();
                prop_assert_eq!(*lab, base.labels[i]);
            }
            prop_assert!(base.positive_rate() <= TOP_DECILE + 1e-12);
        }

        #[test]
        fn stats_are_reproducible(views in proptest::collection::vec(0u64..1000, 1..200)) {
            let c = corpus_from_views(&views);
            let a = corpus_stats(&c).unwrap();
            let b = corpus_stats(&c).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.top1_view_share <= a.top10_view_share);
            for f in [a.answer_rate, a.top1_view_share, a.top10_view_share, a.zero_view_fraction, a.details_fraction] {
                prop_assert!((0.0..=1.0).contains(&f));
            }
            // Threshold agrees with a brute-force search over candidate values.
            let k = (views.len() as f64 * 0.1).floor() as usize;
            let brute = (0..=1000u64).find(|&v| views.iter().filter(|&&x| x > v).count() <= k).unwrap();
            prop_assert_eq!(a.top_decile_view_threshold, brute);
        }
    }
}
