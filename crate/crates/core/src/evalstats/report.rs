//! The combined evaluation report: one versioned document, a plain-text rendering
//! and per-figure CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{first_word_table, length_profiles, table_correlations, weighted_table_correlations};
use super::{CorrelationPair, FirstWordTable, LengthProfile};
use crate::boruta::{attribute_table, AttributeRow, BorutaReport};
use crate::corpus::{corpus_stats, CorpusSummary, GroundTruth, QuestionCorpus};
use crate::error::{Error, Result};
use crate::popmodel::{FeatureGroups, GroupEvaluation};
use crate::topics::{
    topic_aggregates_from_assignments, topic_entropy, InferenceParams, TopicAggregates, TopicModel,
};
use crate::uplift::{
    build_uplift_dataset, histogram_mode, incremental_gains, persuadable_fraction,
    uplift_histogram, GainsCurve, HistogramBin, UpliftModel,
};

pub const REPORT_VERSION: u32 = 1;

/// A report section, or the reason it could not be produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Section<T> {
    Present(T),
    Absent(String),
}

impl<T> Section<T> {
    pub fn present(&self) -> Option<&T> {
        match self {
            Section::Present(v) => Some(v),
            Section::Absent(_) => None,
        }
    }

    fn from_result(r: Result<T>) -> Self {
        r.map_or_else(|e| Section::Absent(e.to_string()), Section::Present)
    }
}

/// Models and settings feeding the report. Every model is optional.
#[derive(Debug, Clone)]
pub struct ReportInputs<'a> {
    pub topics: Option<&'a TopicModel>,
    pub inference: InferenceParams,
    pub truth: Option<&'a GroundTruth>,
    pub auc: Option<&'a [GroupEvaluation]>,
    pub boruta: Option<&'a BorutaReport>,
    pub uplift: Option<&'a UpliftModel>,
    pub bucket_width: usize,
    pub max_len: usize,
    pub gains_points: usize,
    pub histogram_width: f64,
}

impl Default for ReportInputs<'_> {
    fn default() -> Self {
        ReportInputs {
            topics: None,
            inference: InferenceParams::default(),
            truth: None,
            auc: None,
            boruta: None,
            uplift: None,
            bucket_width: 25,
            max_len: 1000,
            gains_points: 100,
            histogram_width: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstWordSection {
    pub table: FirstWordTable,
    pub correlations: TableCorrelationsBoth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCorrelationsBoth {
    pub unweighted: super::TableCorrelations,
    pub weighted: Section<super::TableCorrelations>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub groups: FeatureGroups,
    pub auc: f64,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaSection {
    pub rows: Vec<AttributeRow>,
    pub iterations: usize,
    pub sample_rows: usize,
    pub median_max_shadow_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsSection {
    pub curve: GainsCurve,
    pub n_first_questions: usize,
    pub treated_fraction: f64,
    pub persuadable_fraction: f64,
    pub histogram: Vec<HistogramBin>,
    pub histogram_mode: Option<f64>,
    pub area_above_diagonal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlineCorrelations {
    /// Mean views against top-decile share across first-word groups.
    pub views_vs_top_decile: Section<CorrelationPair>,
    /// Top-decile share against answer rate across first-word groups.
    pub top_decile_vs_answer_rate: Section<CorrelationPair>,
    /// Up-vote fraction against mean content type across topics (Pearson).
    pub vote_vs_content_type: Section<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub version: u32,
    pub corpus_stats: CorpusSummary,
    pub topic_aggregates: Section<TopicAggregates>,
    pub first_words: Section<FirstWordSection>,
    pub length_profiles: Section<LengthProfile>,
    pub auc_table: Section<Vec<AucRow>>,
    pub boruta: Section<BorutaSection>,
    pub gains: Section<GainsSection>,
    pub correlations: HeadlineCorrelations,
}

pub const SECTION_NAMES: [&str; 8] = [
    "corpus_stats",
    "topic_aggregates",
    "first_words",
    "length_profiles",
    "auc_table",
    "boruta",
    "gains",
    "correlations",
];

fn missing<T>(what: &str) -> Section<T> {
    Section::Absent(format!("no {what} supplied"))
}

/// Assembles every section the inputs allow. Deterministic for fixed inputs.
pub fn evaluation_report(
    corpus: &QuestionCorpus,
    inputs: &ReportInputs<'_>,
) -> Result<EvaluationReport> {
    let stats = corpus_stats(corpus)?;

    let inferred: Option<(Vec<usize>, Vec<f64>)> = inputs.topics.map(|m| {
        corpus
            .questions
            .par_iter()
            .map(|q| {
                let d = m.infer_question(q, &inputs.inference).distribution;
                (
                    d.argmax(),
                    topic_entropy(&d).expect("inferred distributions are normalized"),
                )
            })
            .unzip()
    });

    let topic_aggregates = match (inputs.topics, &inferred) {
        (Some(m), Some((assign, _))) => {
            let content = match inputs.truth {
                Some(t) => {
                    let by_id = t.by_id();
                    let ct: Option<Vec<f64>> = corpus
                        .questions
                        .iter()
                        .map(|q| by_id.get(q.id.as_str()).map(|r| r.content_type))
                        .collect();
                    Some(ct.ok_or_else(|| {
                        Error::InvalidInput("ground truth does not cover the corpus".into())
                    })?)
                }
                None => None,
            };
            Section::from_result(topic_aggregates_from_assignments(
                m,
                corpus,
                assign,
                content.as_deref(),
                10,
            ))
        }
        _ => missing("topic model"),
    };

    let first_words = Section::from_result(first_word_table(corpus).and_then(|table| {
        let unweighted = table_correlations(&table)?;
        let weighted = Section::from_result(weighted_table_correlations(&table));
        Ok(FirstWordSection {
            table,
            correlations: TableCorrelationsBoth {
                unweighted,
                weighted,
            },
        })
    }));

    let length = Section::from_result(length_profiles(
        corpus,
        inputs.bucket_width,
        inputs.max_len,
        inferred.as_ref().map(|(_, e)| e.as_slice()),
    ));

    let auc_table = match inputs.auc {
        Some(rows) => Section::Present(
            rows.iter()
                .map(|r| AucRow {
                    groups: r.groups,
                    auc: r.auc,
                    n_train: r.n_train,
                    n_test: r.n_test,
                })
                .collect(),
        ),
        None => missing("AUC evaluation"),
    };

    let boruta = match inputs.boruta {
        Some(b) => Section::Present(BorutaSection {
            rows: attribute_table(b),
            iterations: b.iterations,
            sample_rows: b.sample_rows,
            median_max_shadow_z: b.median_max_shadow_z,
        }),
        None => missing("Boruta report"),
    };

    let gains = match inputs.uplift {
        Some(model) if model.with_topic && inputs.topics.is_none() => {
            Section::Absent("uplift model uses topics but no topic model was supplied".into())
        }
        Some(model) => Section::from_result(gains_section(corpus, model, inputs)),
        None => missing("uplift model"),
    };

    let correlations = HeadlineCorrelations {
        views_vs_top_decile: match &first_words {
            Section::Present(f) => Section::Present(f.correlations.unweighted.views_vs_top_decile),
            Section::Absent(r) => Section::Absent(r.clone()),
        },
        top_decile_vs_answer_rate: match &first_words {
            Section::Present(f) => {
                Section::Present(f.correlations.unweighted.top_decile_vs_answer_rate)
            }
            Section::Absent(r) => Section::Absent(r.clone()),
        },
        vote_vs_content_type: match &topic_aggregates {
            Section::Present(a) if inputs.truth.is_some() => {
                Section::from_result(a.vote_content_correlation())
            }
            Section::Present(_) => missing("ground truth content types"),
            Section::Absent(r) => Section::Absent(r.clone()),
        },
    };

    Ok(EvaluationReport {
        version: REPORT_VERSION,
        corpus_stats: stats,
        topic_aggregates,
        first_words,
        length_profiles: length,
        auc_table,
        boruta,
        gains,
        correlations,
    })
}

fn gains_section(
    corpus: &QuestionCorpus,
    model: &UpliftModel,
    inputs: &ReportInputs<'_>,
) -> Result<GainsSection> {
    let topics = if model.with_topic {
        inputs.topics.map(|m| (m, &inputs.inference))
    } else {
        None
    };
    let data = build_uplift_dataset(corpus, topics)?;
    let scores = model.predict_dataset(&data)?;
    let curve = incremental_gains(
        &scores,
        data.treatment(),
        data.outcome(),
        inputs.gains_points,
    )?;
    let histogram = uplift_histogram(&scores, inputs.histogram_width)?;
    Ok(GainsSection {
        n_first_questions: data.len(),
        treated_fraction: data.treated_fraction(),
        persuadable_fraction: persuadable_fraction(&scores),
        histogram_mode: histogram_mode(&histogram),
        area_above_diagonal: curve.area_above_diagonal(),
        histogram,
        curve,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.prec$}"))
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: EvaluationReport = serde_json::from_str(s)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Version {
                kind: "report",
                found: r.version,
                expected: REPORT_VERSION,
            });
        }
        Ok(r)
    }

    /// Names of sections that could not be produced.
    pub fn absent_sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let checks = [
            (
                "topic_aggregates",
                self.topic_aggregates.present().is_none(),
            ),
            ("first_words", self.first_words.present().is_none()),
            ("length_profiles", self.length_profiles.present().is_none()),
            ("auc_table", self.auc_table.present().is_none()),
            ("boruta", self.boruta.present().is_none()),
            ("gains", self.gains.present().is_none()),
        ];
        for (name, absent) in checks {
            if absent {
                out.push(name);
            }
        }
        out
    }

    /// Plain-text rendering.
    pub fn render_text(&self) -> String {
        let mut o = String::new();
        let s = &self.corpus_stats;
        let _ = writeln!(o, "Corpus");
        let _ = writeln!(o, "  questions              {}", s.n_questions);
        let _ = writeln!(o, "  answer rate            {:.3}", s.answer_rate);
        let _ = writeln!(o, "  mean views             {:.2}", s.mean_views);
        let _ = writeln!(o, "  top 1% view share      {:.3}", s.top1_view_share);
        let _ = writeln!(o, "  top 10% view share     {:.3}", s.top10_view_share);
        let _ = writeln!(o, "  zero-view fraction     {:.3}", s.zero_view_fraction);
        let _ = writeln!(
            o,
            "  top-decile threshold   {}",
            s.top_decile_view_threshold
        );
        let _ = writeln!(
            o,
            "  details fraction       {:.3} (top decile {})",
            s.details_fraction,
            fmt_opt(s.details_fraction_top_decile, 3)
        );

        let _ = writeln!(o, "\nTopics");
        match &self.topic_aggregates {
            Section::Present(a) => {
                let _ = writeln!(
                    o,
                    "  {:>5} {:>8} {:>10} {:>8} {:>8}  keywords",
                    "topic", "count", "views", "up", "content"
                );
                for t in &a.topics {
                    let _ = writeln!(
                        o,
                        "  {:>5} {:>8} {:>10} {:>8} {:>8}  {}",
                        t.topic,
                        t.question_count,
                        fmt_opt(t.mean_views, 2),
                        fmt_opt(t.up_vote_fraction, 3),
                        fmt_opt(t.mean_content_type, 3),
                        t.top_keywords
                            .iter()
                            .take(5)
                            .cloned()
                            .collect::<Vec<_>>()
                            .join(" ")
                    );
                }
            }
            Section::Absent(r) => {
                let _ = writeln!(o, "  absent: {r}");
            }
        }

        let _ = writeln!(o, "\nFirst words");
        match &self.first_words {
            Section::Present(f) => {
                let _ = writeln!(
                    o,
                    "  {:<8} {:>7} {:>8} {:>7} {:>7}",
                    "word", "%", "views", "top%", "answer"
                );
                for r in &f.table.rows {
                    let _ = writeln!(
                        o,
                        "  {:<8} {:>7.2} {:>8.2} {:>7.2} {:>7.2}",
                        r.word, r.percentage, r.mean_views, r.top_decile_percentage, r.answer_rate
                    );
                }
                let _ = writeln!(o, "  other    {:>7.2}", f.table.other_percentage);
            }
            Section::Absent(r) => {
                let _ = writeln!(o, "  absent: {r}");
            }
        }

        let _ = writeln!(o, "\nLength profiles (mean views by total length)");
        match &self.length_profiles {
            Section::Present(p) => {
                let _ = writeln!(
                    o,
                    "  {:>10} {:>12} {:>12}",
                    "length", "no details", "details"
                );
                let no: Vec<_> = p.stratum(false).collect();
                let yes: Vec<_> = p.stratum(true).collect();
                for (a, b) in no.iter().zip(&yes) {
                    if a.count + b.count == 0 {
                        continue;
                    }
                    let label = match a.hi {
                        Some(hi) => format!("{}-{}", a.lo, hi - 1),
                        None => format!("{}+", a.lo),
                    };
                    let _ = writeln!(
                        o,
                        "  {:>10} {:>12} {:>12}",
                        label,
                        fmt_opt(a.mean_views, 2),
                        fmt_opt(b.mean_views, 2)
                    );
                }
            }
            Section::Absent(r) => {
                let _ = writeln!(o, "  absent: {r}");
            }
        }

        let _ = writeln!(o, "\nHoldout AUC");
        match &self.auc_table {
            Section::Present(rows) => {
                for r in rows {
                    let _ = writeln!(
                        o,
                        "  {:<10} {:.4}  (train {}, test {})",
                        r.groups.label(),
                        r.auc,
                        r.n_train,
                        r.n_test
                    );
                }
            }
            Section::Absent(r) => {
                let _ = writeln!(o, "  absent: {r}");
            }
        }

        let _ = writeln!(o, "\nBoruta");
        match &self.boruta {
            Section::Present(b) => {
                let _ = writeln!(o, "  {} iterations on {} rows", b.iterations, b.sample_rows);
                for r in &b.rows {
                    let _ = writeln!(
                        o,
                        "  {:<26} {:<12} {:>8} {:<3} {}",
                        r.attribute,
                        r.kind,
                        format!("{:.2}", r.mean_z),
                        r.group,
                        r.status
                    );
                }
            }
            Section::Absent(r) => {
                let _ = writeln!(o, "  absent: {r}");
            }
        }

        let _ = writeln!(o, "\nUplift of adding details");
        match &self.gains {
            Section::Present(g) => {
                let _ = writeln!(o, "  first questions        {}", g.n_first_questions);
                let _ = writeln!(o, "  treated fraction       {:.3}", g.treated_fraction);
                let _ = writeln!(o, "  overall uplift         {:.4}", g.curve.overall_uplift);
                let _ = writeln!(o, "  persuadable fraction   {:.3}", g.persuadable_fraction);
                let _ = writeln!(
                    o,
                    "  histogram mode         {}",
                    fmt_opt(g.histogram_mode, 3)
                );
                let _ = writeln!(o, "  area above diagonal    {:.5}", g.area_above_diagonal);
            }
            Section::Absent(r) => {
                let _ = writeln!(o, "  absent: {r}");
            }
        }

        let _ = writeln!(o, "\nCorrelations");
        let pair = |o: &mut String, name: &str, s: &Section<CorrelationPair>| {
            let _ = match s {
                Section::Present(p) => writeln!(
                    o,
                    "  {name:<28} pearson {:.3}  spearman {:.3}",
                    p.pearson, p.spearman
                ),
                Section::Absent(r) => writeln!(o, "  {name:<28} absent: {r}"),
            };
        };
        pair(
            &mut o,
            "views vs top decile",
            &self.correlations.views_vs_top_decile,
        );
        pair(
            &mut o,
            "top decile vs answer rate",
            &self.correlations.top_decile_vs_answer_rate,
        );
        let _ = match &self.correlations.vote_vs_content_type {
            Section::Present(r) => {
                writeln!(o, "  {:<28} pearson {r:.3}", "up votes vs content type")
            }
            Section::Absent(r) => writeln!(o, "  {:<28} absent: {r}", "up votes vs content type"),
        };
        o
    }

    /// CSV files keyed by file name, one per plotted series.
    pub fn csv_files(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Section::Present(a) = &self.topic_aggregates {
            let mut s = String::from(
                "topic,question_count,mean_views,up_vote_fraction,mean_content_type\n",
            );
            for t in &a.topics {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    t.topic,
                    t.question_count,
                    opt(t.mean_views),
                    opt(t.up_vote_fraction),
                    opt(t.mean_content_type)
                );
            }
            out.push(("topic_aggregates.csv", s));
        }
        if let Section::Present(f) = &self.first_words {
            let mut s =
                String::from("word,percentage,mean_views,top_decile_percentage,answer_rate\n");
            for r in &f.table.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.word, r.percentage, r.mean_views, r.top_decile_percentage, r.answer_rate
                );
            }
            out.push(("first_words.csv", s));
        }
        if let Section::Present(p) = &self.length_profiles {
            let mut s =
                String::from("lo,hi,with_details,count,total_views,mean_views,mean_coherency\n");
            for b in &p.buckets {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    b.lo,
                    b.hi.map_or_else(String::new, |h| h.to_string()),
                    b.with_details,
                    b.count,
                    b.total_views,
                    opt(b.mean_views),
                    opt(b.mean_coherency)
                );
            }
            out.push(("length_profiles.csv", s));
        }
        if let Section::Present(rows) = &self.auc_table {
            let mut s = String::from("groups,auc,n_train,n_test\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    r.groups.label(),
                    r.auc,
                    r.n_train,
                    r.n_test
                );
            }
            out.push(("auc.csv", s));
        }
        if let Section::Present(b) = &self.boruta {
            let mut s = String::from("attribute,type,mean_z,group,status\n");
            for r in &b.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.attribute, r.kind, r.mean_z, r.group, r.status
                );
            }
            out.push(("boruta.csv", s));
        }
        if let Section::Present(g) = &self.gains {
            out.push(("gains.csv", g.curve.to_csv()));
            let mut s = String::from("bin_center,count\n");
            for b in &g.histogram {
                let _ = writeln!(s, "{},{}", b.center, b.count);
            }
            out.push(("uplift_histogram.csv", s));
        }
        out
    }

    /// Writes `report.json`, `report.txt` and the CSV files into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![
            ("report.json", self.to_json()?),
            ("report.txt", self.render_text()),
        ];
        files.extend(self.csv_files());
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, GeneratorConfig};
    use crate::topics::{fit_lda, LdaParams};
    use crate::uplift::{fit_uplift, UpliftParams};

    #[test]
    fn missing_models_are_marked_absent() {
        let corpus = generate_corpus(&GeneratorConfig::calibrated(800, 3))
            .unwrap()
            .corpus;
        let r = evaluation_report(&corpus, &ReportInputs::default()).unwrap();
        assert_eq!(
            r.absent_sections(),
            vec!["topic_aggregates", "auc_table", "boruta", "gains"]
        );
        assert!(r.render_text().contains("absent: no uplift model supplied"));
        assert_eq!(
            EvaluationReport::from_json(&r.to_json().unwrap()).unwrap(),
            r
        );
    }

    #[test]
    fn full_report_is_deterministic() {
        let generated = generate_corpus(&GeneratorConfig::calibrated(1500, 4)).unwrap();
        let corpus = &generated.corpus;
        let lda = LdaParams {
            n_topics: 8,
            iterations: 30,
            burn_in: 15,
            retained_samples: 5,
            ..LdaParams::default()
        };
        let topics = fit_lda(corpus, &lda).unwrap().model;
        let data =
            build_uplift_dataset(corpus, Some((&topics, &InferenceParams::default()))).unwrap();
        let mut params = UpliftParams::default();
        params.forest.n_trees = 5;
        params.forest.min_leaf = 40;
        let uplift = fit_uplift(&data, &params, 1).unwrap();
        let inputs = ReportInputs {
            topics: Some(&topics),
            truth: Some(&generated.truth),
            uplift: Some(&uplift),
            ..ReportInputs::default()
        };
        let a = evaluation_report(corpus, &inputs).unwrap();
        let b = evaluation_report(corpus, &inputs).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.correlations.vote_vs_content_type.present().is_some());
        let dir = tempfile::tempdir().unwrap();
        a.write(dir.path()).unwrap();
        for f in [
            "report.json",
            "report.txt",
            "gains.csv",
            "uplift_histogram.csv",
            "topic_aggregates.csv",
        ] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
    }
}
