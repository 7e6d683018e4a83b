//! Tokenization and question attributes.
//!
//! Attributes fall into three groups:
//!
//! * **Group I** (context the asker cannot change): week of the year, platform,
//!   product version and the question topic.
//! * **Group II** (writing style): log lengths, first words of summary and details,
//!   topic-entropy coherency, details flag and the punctuation/capitalization flags.
//! * **Group III** (raw text): a hashed bag of unigrams and bigrams.
//!
//! Nothing here reads views, votes or the answered flag: every attribute is available
//! before a question is published.

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::corpus::Question;
use crate::topics::{topic_entropy, InferenceParams, TopicModel};

/// The twenty most frequent first words of question summaries, in descending
/// order of top-decile rate.
pub const FIRST_WORDS: [&str; 20] = [
    "are", "does", "where", "is", "how", "turbotax", "what", "can", "do", "need", "when", "on",
    "my", "if", "the", "i", "it", "in", "we", "why",
];

/// Category for a first word outside [`FIRST_WORDS`].
pub const OTHER: &str = "OTHER";
/// Category for an absent first word (empty text or no details).
pub const NONE: &str = "NONE";

/// Words that open an interrogative sentence.
pub const QUESTION_WORDS: [&str; 9] = [
    "how", "what", "where", "does", "can", "is", "are", "do", "when",
];

/// Minimum text-bag dimension.
pub const MIN_BAG_DIM: usize = 1 << 10;

/// Lower-cased tokens after contraction splitting and brand merging.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream(pub Vec<String>);

impl TokenStream {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<&str> {
        self.0.first().map(String::as_str)
    }

    /// Space-joined reconstruction; tokenizing it yields the same stream.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}')
}

/// Splits text into lower-cased tokens.
///
/// `I'm` and `I've` become `i` followed by `m`/`ve`; `Turbo Tax` in any case becomes the
/// single token `turbotax`; punctuation is stripped from token edges.
pub fn tokenize(text: &str) -> TokenStream {
    let mut out: Vec<String> = Vec::new();
    for raw in text.split_whitespace() {
        let lowered: String = raw
            .chars()
            .map(|c| if is_apostrophe(c) { '\'' } else { c })
            .flat_map(char::to_lowercase)
            .collect();
        let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
        if trimmed.is_empty() {
            continue;
        }
        match trimmed {
            "i'm" => {
                out.push("i".into());
                out.push("m".into());
            }
            "i've" => {
                out.push("i".into());
                out.push("ve".into());
            }
            "tax" if out.last().map(String::as_str) == Some("turbo") => {
                *out.last_mut().expect("checked") = "turbotax".into();
            }
            t => out.push(t.to_owned()),
        }
    }
    TokenStream(out)
}

/// First token of the text, if any.
pub fn first_word(text: &str) -> Option<String> {
    tokenize(text).0.into_iter().next()
}

/// Maps a first word onto the categorical vocabulary (a [`FIRST_WORDS`] entry,
/// [`OTHER`] or [`NONE`]).
pub fn first_word_category(word: Option<&str>) -> &'static str {
    match word {
        None => NONE,
        Some(w) => FIRST_WORDS
            .iter()
            .find(|&&v| v == w)
            .copied()
            .unwrap_or(OTHER),
    }
}

/// Returns `(proper, excessive)` capitalization flags.
///
/// Excessive: more than half of at least ten alphabetic characters are upper case.
/// Proper: the first alphabetic character is upper case and capitalization is not
/// excessive.
pub fn capitalization_flags(summary: &str) -> (bool, bool) {
    let mut alpha = 0usize;
    let mut upper = 0usize;
    let mut first_upper = None;
    for c in summary.chars().filter(|c| c.is_alphabetic()) {
        alpha += 1;
        if c.is_uppercase() {
            upper += 1;
        }
        if first_upper.is_none() {
            first_upper = Some(c.is_uppercase());
        }
    }
    if alpha == 0 {
        return (false, false);
    }
    let excessive = alpha >= 10 && (upper as f64) / (alpha as f64) > 0.5;
    let proper = first_upper == Some(true) && !excessive;
    (proper, excessive)
}

/// Group I attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextFeatures {
    pub week: u32,
    pub platform: String,
    pub product_version: String,
    /// Most probable topic; absent when no topic model was supplied.
    pub topic: Option<usize>,
}

/// Group II attributes. Lengths are in characters, logs are natural.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleFeatures {
    pub log_question_len: f64,
    pub log_details_len_plus1: f64,
    pub log_summary_len: f64,
    pub first_word_summary: String,
    pub first_word_details: String,
    /// Normalized topic entropy; absent when no topic model was supplied.
    pub coherency: Option<f64>,
    pub details_flag: bool,
    pub proper_capitalization: bool,
    pub question_mark: bool,
    pub excessive_capitalization: bool,
}

/// Sparse hashed term counts. Summary terms occupy `[0, dim/2)`, details terms
/// `[dim/2, dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBag {
    pub dim: usize,
    /// `(bucket, count)` pairs sorted by bucket.
    pub entries: Vec<(u32, f64)>,
}

impl TextBag {
    pub fn get(&self, bucket: u32) -> f64 {
        self.entries
            .binary_search_by_key(&bucket, |&(b, _)| b)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn summary_entries(&self) -> impl Iterator<Item = &(u32, f64)> {
        let half = (self.dim / 2) as u32;
        self.entries.iter().filter(move |(b, _)| *b < half)
    }

    pub fn details_entries(&self) -> impl Iterator<Item = &(u32, f64)> {
        let half = (self.dim / 2) as u32;
        self.entries.iter().filter(move |(b, _)| *b >= half)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub group1: ContextFeatures,
    pub group2: StyleFeatures,
    pub group3: Option<TextBag>,
}

impl FeatureVector {
    /// Flat `(name, display value)` view used for diffs and breakdowns.
    pub fn named_values(&self) -> Vec<(&'static str, String)> {
        let g1 = &self.group1;
        let g2 = &self.group2;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "absent".to_owned());
        vec![
            ("week", g1.week.to_string()),
            ("platform", g1.platform.clone()),
            ("product_version", g1.product_version.clone()),
            ("topic", opt(g1.topic.map(|t| t.to_string()))),
            ("log_question_len", format!("{:.4}", g2.log_question_len)),
            (
                "log_details_len_plus1",
                format!("{:.4}", g2.log_details_len_plus1),
            ),
            ("log_summary_len", format!("{:.4}", g2.log_summary_len)),
            ("first_word_summary", g2.first_word_summary.clone()),
            ("first_word_details", g2.first_word_details.clone()),
            ("coherency", opt(g2.coherency.map(|c| format!("{c:.4}")))),
            ("details_flag", g2.details_flag.to_string()),
            (
                "proper_capitalization",
                g2.proper_capitalization.to_string(),
            ),
            ("question_mark", g2.question_mark.to_string()),
            (
                "excessive_capitalization",
                g2.excessive_capitalization.to_string(),
            ),
        ]
    }
}

/// Extracts Group I and II attributes. With a topic model, the topic and coherency
/// fields come from fold-in inference on the question text.
pub fn extract_features(
    question: &Question,
    topic_model: Option<(&TopicModel, &InferenceParams)>,
) -> FeatureVector {
    let summary_len = question.summary.chars().count();
    let details_len = question.details.as_deref().map_or(0, |d| d.chars().count());
    let (proper, excessive) = capitalization_flags(&question.summary);

    let (topic, coherency) = match topic_model {
        Some((model, params)) => {
            let inferred = model.infer_question(question, params);
            let entropy = topic_entropy(&inferred.distribution)
                .expect("inferred distributions are normalized");
            (Some(inferred.distribution.argmax()), Some(entropy))
        }
        None => (None, None),
    };

    FeatureVector {
        group1: ContextFeatures {
            week: question.week,
            platform: question.platform.clone(),
            product_version: question.product_version.clone(),
            topic,
        },
        group2: StyleFeatures {
            log_question_len: ((summary_len + details_len).max(1) as f64).ln(),
            log_details_len_plus1: ((details_len + 1) as f64).ln(),
            log_summary_len: (summary_len.max(1) as f64).ln(),
            first_word_summary: first_word_category(first_word(&question.summary).as_deref())
                .to_owned(),
            first_word_details: first_word_category(
                question.details.as_deref().and_then(first_word).as_deref(),
            )
            .to_owned(),
            coherency,
            details_flag: question.details.is_some(),
            proper_capitalization: proper,
            question_mark: question.summary.contains('?'),
            excessive_capitalization: excessive,
        },
        group3: None,
    }
}

/// 64-bit FNV-1a hash of the term bytes.
pub fn term_hash(term: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(term.as_bytes());
    h.finish()
}

/// Bucket index of `term` within a namespace of `half` buckets.
pub fn term_bucket(term: &str, half: usize) -> u32 {
    (term_hash(term) % half as u64) as u32
}

fn add_terms(tokens: &[String], offset: u32, half: usize, counts: &mut Vec<(u32, f64)>) {
    for t in tokens {
        counts.push((offset + term_bucket(t, half), 1.0));
    }
    for pair in tokens.windows(2) {
        let bigram = format!("{} {}", pair[0], pair[1]);
        counts.push((offset + term_bucket(&bigram, half), 1.0));
    }
}

/// Hashed unigram+bigram counts of summary and details (Group III).
///
/// # Panics
/// If `dim` is below [`MIN_BAG_DIM`] or odd.
pub fn text_bag(question: &Question, dim: usize) -> TextBag {
    assert!(
        dim >= MIN_BAG_DIM && dim.is_multiple_of(2),
        "text bag dimension must be even and at least {MIN_BAG_DIM}"
    );
    let half = dim / 2;
    let mut raw = Vec::new();
    add_terms(tokenize(&question.summary).tokens(), 0, half, &mut raw);
    if let Some(d) = &question.details {
        add_terms(tokenize(d).tokens(), half as u32, half, &mut raw);
    }
    raw.sort_by_key(|&(b, _)| b);
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
    for (b, c) in raw {
        match entries.last_mut() {
            Some((last, acc)) if *last == b => *acc += c,
            _ => entries.push((b, c)),
        }
    }
    TextBag { dim, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(summary: &str, details: Option<&str>) -> Question {
        Question::new(
            "q1",
            summary,
            details.map(str::to_owned),
            3,
            "online",
            "deluxe",
        )
    }

    #[test]
    fn contractions_split() {
        assert_eq!(tokenize("I'm filing late").0, ["i", "m", "filing", "late"]);
        assert_eq!(
            tokenize("I\u{2019}ve got a W-2").0,
            ["i", "ve", "got", "a", "w-2"]
        );
    }

    #[test]
    fn brand_merge() {
        assert_eq!(
            tokenize("Turbo Tax won't install").first(),
            Some("turbotax")
        );
        assert_eq!(tokenize("TURBO tax").0, ["turbotax"]);
        assert_eq!(tokenize("turbo").0, ["turbo"]);
        assert_eq!(
            first_word("TurboTax deluxe price").as_deref(),
            Some("turbotax")
        );
    }

    #[test]
    fn empty_and_punctuation() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  -- ?? ").is_empty());
        assert_eq!(first_word("   "), None);
        assert_eq!(first_word("Why is my refund low?").as_deref(), Some("why"));
        assert_eq!(tokenize("refund? (status)").0, ["refund", "status"]);
    }

    #[test]
    fn capitalization() {
        assert_eq!(capitalization_flags("Why is my refund low?"), (true, false));
        assert_eq!(capitalization_flags("WHERE IS MY REFUND"), (false, true));
        assert_eq!(capitalization_flags("why is my refund low"), (false, false));
        assert_eq!(capitalization_flags("IRS"), (true, false));
        assert_eq!(capitalization_flags("1234 ?"), (false, false));
    }

    #[test]
    fn first_word_categories() {
        assert_eq!(first_word_category(Some("why")), "why");
        assert_eq!(first_word_category(Some("hello")), OTHER);
        assert_eq!(first_word_category(None), NONE);
    }

    #[test]
    fn features_without_details() {
        let summary = "a".repeat(99) + "?";
        let fv = extract_features(&q(&summary, None), None);
        assert!((fv.group2.log_summary_len - 100f64.ln()).abs() < 1e-12);
        assert!((fv.group2.log_question_len - 100f64.ln()).abs() < 1e-12);
        assert_eq!(fv.group2.log_details_len_plus1, 0.0);
        assert!(!fv.group2.details_flag);
        assert!(fv.group2.question_mark);
        assert_eq!(fv.group2.first_word_details, NONE);
    }

    #[test]
    fn features_with_details() {
        let summary = "b".repeat(87);
        let details = "Where ".to_owned() + &"c".repeat(265);
        let fv = extract_features(&q(&summary, Some(&details)), None);
        assert!((fv.group2.log_question_len - 358f64.ln()).abs() < 1e-12);
        assert!((fv.group2.log_details_len_plus1 - 272f64.ln()).abs() < 1e-12);
        assert!(fv.group2.details_flag);
        assert!(!fv.group2.question_mark);
        assert_eq!(fv.group2.first_word_details, "where");
    }

    #[test]
    fn text_bag_counts() {
        let bag = text_bag(&q("refund refund", None), 1 << 14);
        let half = 1 << 13;
        let refund = term_bucket("refund", half);
        let bigram = term_bucket("refund refund", half);
        assert_ne!(refund, bigram);
        assert_eq!(bag.get(refund), 2.0);
        assert_eq!(bag.get(bigram), 1.0);
        assert_eq!(bag.details_entries().count(), 0);
    }

    #[test]
    fn text_bag_namespaces() {
        let bag = text_bag(&q("refund", Some("refund")), 1 << 12);
        assert_eq!(bag.summary_entries().count(), 1);
        assert_eq!(bag.details_entries().count(), 1);
        let a = text_bag(&q("Where is my refund", Some("Filed in March")), 1 << 12);
        let b = text_bag(&q("Where is my refund", Some("Filed in March")), 1 << 12);
        assert_eq!(a, b);
    }

    #[test]
    fn fnv_reference_value() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(term_hash(""), 0xcbf29ce484222325);
        assert_eq!(term_hash("a"), 0xaf63dc4c8601ec8c);
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(s in "[ -~]{0,80}") {
            let once = tokenize(&s);
            prop_assert_eq!(tokenize(&once.join()), once);
        }

        #[test]
        fn tokenize_case_insensitive(s in "[ -~]{0,80}") {
            prop_assert_eq!(tokenize(&s.to_uppercase()), tokenize(&s));
        }

        #[test]
        fn no_empty_tokens(s in "\\PC{0,60}") {
            prop_assert!(tokenize(&s).tokens().iter().all(|t| !t.is_empty()));
        }
    }
}
