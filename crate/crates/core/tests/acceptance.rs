//! Acceptance criteria, run sequentially with one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines reach the terminal uncaptured.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpop::boruta::{run_boruta, BorutaParams, Status};
use qpop::corpus::{corpus_stats, generate_corpus, GeneratedCorpus, GeneratorConfig};
use qpop::ensemble::{Column, Dataset, ForestParams};
use qpop::evalstats::{
    first_word_table, reference_first_word_table, table_correlations, weighted_table_correlations,
};
use qpop::popmodel::{
    compare_groups, corpus_features, fit_logistic_raw, logistic_objective, roc_auc, sigmoid,
    FeatureGroups, OptimizerParams, PopularityConfig, SparseRow, DEFAULT_HOLDOUT_FRACTION,
    DEFAULT_TEXT_DIM,
};
use qpop::service::{split_sentences, Bundle, BundleConfig, QuestionInput};
use qpop::textfeat::{first_word, QUESTION_WORDS};
use qpop::topics::{
    alignment_purity, fit_lda, fit_lda_documents, topic_entropy, topic_entropy_in_base,
    InferenceParams, LdaParams, TopicDistribution,
};
use qpop::uplift::{
    build_uplift_dataset, fit_uplift, incremental_gains, persuadable_fraction, UpliftDataset,
    UpliftParams,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn calibrated(seed: u64) -> GeneratedCorpus {
    generate_corpus(&GeneratorConfig::calibrated(50_000, seed)).expect("calibrated corpus")
}

/// Seed-42 calibrated corpus and its service bundle, shared by two criteria.
fn calibrated_bundle() -> &'static (GeneratedCorpus, Bundle) {
    static B: OnceLock<(GeneratedCorpus, Bundle)> = OnceLock::new();
    B.get_or_init(|| {
        let g = calibrated(42);
        let mut config = BundleConfig::default();
        config.lda.seed = 42;
        config.popularity.seed = 42;
        let b = Bundle::build(&g.corpus, &config).expect("bundle");
        (g, b)
    })
}

fn table_correlations_criterion() -> Outcome {
    let t = reference_first_word_table();
    let c = table_correlations(&t).map_err(|e| e.to_string())?;
    let ok = |c: &qpop::evalstats::TableCorrelations| {
        (c.views_vs_top_decile.pearson - 0.860).abs() <= 0.03
            && (c.views_vs_top_decile.spearman - 0.846).abs() <= 0.04
            && (c.top_decile_vs_answer_rate.pearson - 0.616).abs() <= 0.05
            && (c.top_decile_vs_answer_rate.spearman - 0.544).abs() <= 0.06
    };
    let describe = |c: &qpop::evalstats::TableCorrelations| {
        format!(
            "views~top r={:.3} rho={:.3}; top~answer r={:.3} rho={:.3}",
            c.views_vs_top_decile.pearson,
            c.views_vs_top_decile.spearman,
            c.top_decile_vs_answer_rate.pearson,
            c.top_decile_vs_answer_rate.spearman
        )
    };
    if ok(&c) {
        return Ok(format!("unweighted {}", describe(&c)));
    }
    let w = weighted_table_correlations(&t).map_err(|e| e.to_string())?;
    check(
        ok(&w),
        format!(
            "unweighted {} missed; weighted {}",
            describe(&c),
            describe(&w)
        ),
    )
}

fn entropy_criterion() -> Outcome {
    let one_hot = TopicDistribution::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    if topic_entropy(&one_hot).unwrap() != 0.0 {
        return Err("one-hot entropy is not 0".into());
    }
    for m in [2, 7, 30, 100] {
        if topic_entropy(&TopicDistribution::uniform(m)).unwrap() != 1.0 {
            return Err(format!("uniform entropy over {m} topics is not exactly 1"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(2..60);
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        let s: f64 = raw.iter().sum();
        let d = TopicDistribution::new(raw.iter().map(|x| x / s).collect()).unwrap();
        let e = topic_entropy(&d).unwrap();
        let mut shuffled = d.probs.clone();
        shuffled.shuffle(&mut rng);
        let p = topic_entropy(&TopicDistribution { probs: shuffled }).unwrap();
        let base = rng.random_range(1.1..50.0);
        let b = topic_entropy_in_base(&d, base).unwrap();
        if !(0.0..=1.0).contains(&e) {
            return Err(format!("entropy {e} outside [0, 1]"));
        }
        worst = worst.max((p - e).abs()).max((b - e).abs());
    }
    check(
        worst < 1e-12,
        format!("1000 random distributions, worst invariance error {worst:.1e}"),
    )
}

fn lda_planted_criterion() -> Outcome {
    let mut purities = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut docs = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..2000 {
            let t = rng.random_range(0..4);
            let len = rng.random_range(8..20);
            docs.push(
                (0..len)
                    .map(|_| format!("t{t}w{}", rng.random_range(0..50)))
                    .collect::<Vec<_>>(),
            );
            truth.push(t);
        }
        let params = LdaParams {
            n_topics: 4,
            alpha: Some(0.5),
            iterations: 100,
            burn_in: 60,
            retained_samples: 10,
            min_doc_freq: 1,
            seed,
            ..LdaParams::default()
        };
        let fit = fit_lda_documents(&docs, &params).map_err(|e| e.to_string())?;
        let assigned: Vec<usize> = fit
            .distributions
            .iter()
            .map(TopicDistribution::argmax)
            .collect();
        purities.push(alignment_purity(&assigned, &truth));
    }
    let min = purities.iter().copied().fold(1.0, f64::min);
    check(min >= 0.9, format!("purity over 5 seeds {purities:.3?}"))
}

fn logistic_oracle_criterion() -> Outcome {
    let xs: Vec<f64> = (0..20).map(|i| -1.9 + 0.2 * i as f64).collect();
    let y = [
        false, false, false, true, false, false, true, false, false, true, false, true, true,
        false, true, true, false, true, true, true,
    ];
    let rows: Vec<SparseRow> = xs.iter().map(|&x| vec![(0, x)]).collect();
    let fit = fit_logistic_raw(&rows, &y, &[1.0], &OptimizerParams::default())
        .map_err(|e| e.to_string())?;
    let f = |w: f64, b: f64| logistic_objective(&rows, &y, &[1.0], &[w], b);
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
    let dw = (fit.weights[0] - best.1).abs();
    let db = (fit.intercept - best.2).abs();

    let empty: Vec<SparseRow> = vec![Vec::new(); 37];
    let labels: Vec<bool> = (0..37).map(|i| i % 5 < 2).collect();
    let prevalence = labels.iter().filter(|&&v| v).count() as f64 / 37.0;
    let b = fit_logistic_raw(&empty, &labels, &[], &OptimizerParams::default())
        .map_err(|e| e.to_string())?;
    let dp = (sigmoid(b.intercept) - prevalence).abs();
    check(
        dw < 1e-2 && db < 1e-2 && dp < 1e-6,
        format!("grid gap w {dw:.1e}, b {db:.1e}; intercept-only gap {dp:.1e}"),
    )
}

fn auc_oracle_criterion() -> Outcome {
    let hand = roc_auc(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false])
        .map_err(|e| e.to_string())?
        .auc;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
    let random = roc_auc(&scores, &labels).map_err(|e| e.to_string())?.auc;
    check(
        hand == 0.75 && (random - 0.5).abs() <= 0.02,
        format!("hand {hand}, random labels {random:.4}"),
    )
}

const PUBLISHED_AUC: [f64; 3] = [0.678, 0.759, 0.793];

fn auc_ordering_criterion() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut in_band = true;
    for seed in 1..=5u64 {
        let corpus = calibrated(seed).corpus;
        let sample: Vec<usize> = (0..corpus.len()).step_by(5).collect();
        let lda = LdaParams {
            iterations: 150,
            burn_in: 100,
            retained_samples: 10,
            seed,
            ..LdaParams::default()
        };
        let topics = fit_lda(&corpus.subset(&sample), &lda)
            .map_err(|e| e.to_string())?
            .model;
        let inference = InferenceParams::default();
        let features =
            corpus_features(&corpus, Some((&topics, &inference)), Some(DEFAULT_TEXT_DIM));
        let config = PopularityConfig {
            seed,
            ..PopularityConfig::default()
        };
        let groups = [
            FeatureGroups::I,
            FeatureGroups::IandII,
            FeatureGroups::IandIII,
        ];
        let evals = compare_groups(
            &corpus,
            &features,
            &groups,
            &config,
            DEFAULT_HOLDOUT_FRACTION,
        )
        .map_err(|e| e.to_string())?;
        let (a, b, c) = (evals[0].auc, evals[1].auc, evals[2].auc);
        ok &= b - a >= 0.02 && c - b >= 0.02;
        // Published values are reported against, not asserted.
        in_band &= [a, b, c]
            .iter()
            .zip(PUBLISHED_AUC)
            .all(|(x, p)| (x - p).abs() <= 0.08);
        lines.push(format!("seed {seed}: {a:.3}/{b:.3}/{c:.3}"));
    }
    let band = if in_band {
        "all within"
    } else {
        "not all within"
    };
    check(
        ok,
        format!(
            "I/I+II/I+III {}; {band} 0.08 of {PUBLISHED_AUC:?}",
            lines.join(", ")
        ),
    )
}

fn planted_boruta(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let y: Vec<bool> = (0..n)
        .map(|r| {
            let s: f64 = (0..5).map(|j| 2.0 * x[j][r]).sum();
            rng.random::<f64>() < sigmoid(s)
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
    Dataset::new(cols, y, None).expect("planted dataset")
}

fn boruta_criterion() -> Outcome {
    let mut good = 0;
    for run in 0..20u64 {
        let data = planted_boruta(5000, 1000 + run);
        let params = BorutaParams {
            seed: run,
            ..BorutaParams::default()
        };
        let r = run_boruta(&data, &params).map_err(|e| e.to_string())?;
        let relevant = (0..5).all(|j| {
            r.get(&format!("rel{j}"))
                .is_some_and(|f| f.status == Status::Confirmed)
        });
        let rejected = (0..5)
            .filter(|j| {
                r.get(&format!("noise{j}"))
                    .is_some_and(|f| f.status == Status::Rejected)
            })
            .count();
        if relevant && rejected >= 4 {
            good += 1;
        }
    }
    check(
        good >= 19,
        format!("{good}/20 runs confirmed all relevant and rejected at least 4 noise features"),
    )
}

fn segment_uplift(n: usize, seed: u64, effects: (f64, f64)) -> (UpliftDataset, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut seg, mut t, mut y, mut noise) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let s: bool = rng.random();
        let treat: bool = rng.random();
        let p = 0.2
            + if treat {
                if s {
                    effects.0
                } else {
                    effects.1
                }
            } else {
                0.0
            };
        seg.push(s);
        t.push(treat);
        y.push(rng.random::<f64>() < p);
        noise.push(rng.random::<f64>());
    }
    let data = Dataset::new(
        vec![
            ("segment".into(), Column::Boolean(seg.clone())),
            ("noise".into(), Column::Numeric(noise)),
        ],
        y,
        Some(t),
    )
    .expect("planted uplift dataset");
    (
        UpliftDataset {
            ids: (0..n).map(|i| i.to_string()).collect(),
            data,
        },
        seg,
    )
}

fn uplift_criterion() -> Outcome {
    let params = UpliftParams {
        forest: ForestParams {
            n_trees: 50,
            ..UpliftParams::default().forest
        },
    };
    let mut notes = Vec::new();
    let mut ok = true;

    // Curves are measured on fresh samples; in-sample predictions track outcome noise.
    let (train, _) = segment_uplift(20_000, 3, (0.10, -0.05));
    let m = fit_uplift(&train, &params, 1).map_err(|e| e.to_string())?;
    let (d, seg) = segment_uplift(20_000, 4, (0.10, -0.05));
    let p = m.predict_dataset(&d).map_err(|e| e.to_string())?;
    let mean = |want: bool| {
        let v: Vec<f64> = p
            .iter()
            .zip(&seg)
            .filter(|(_, &s)| s == want)
            .map(|(x, _)| *x)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (mp, mn) = (mean(true), mean(false));
    ok &= (mp - 0.10).abs() <= 0.03 && (mn + 0.05).abs() <= 0.03;
    notes.push(format!("segment means {mp:.3}/{mn:.3}"));

    let curve =
        incremental_gains(&p, d.treatment(), d.outcome(), 100).map_err(|e| e.to_string())?;
    let persuadable = persuadable_fraction(&p);
    let peak = curve.peak_phi();
    let at_peak = curve
        .points
        .iter()
        .find(|q| q.phi == peak)
        .and_then(|q| q.per_population)
        .unwrap_or(0.0);
    let end = curve
        .points
        .last()
        .and_then(|q| q.per_population)
        .unwrap_or(0.0);
    let above = curve.max_diagonal_gap() > 0.0 && curve.area_above_diagonal() > 0.0;
    ok &= above && (peak - persuadable).abs() <= 0.1 && at_peak > end;
    notes.push(format!(
        "peak at {peak:.2} (persuadable {persuadable:.2}), peak {at_peak:.4} > end {end:.4}"
    ));

    let (h_train, _) = segment_uplift(20_000, 5, (0.10, 0.10));
    let mh = fit_uplift(&h_train, &params, 2).map_err(|e| e.to_string())?;
    let (h, _) = segment_uplift(400_000, 6, (0.10, 0.10));
    let ph = mh.predict_dataset(&h).map_err(|e| e.to_string())?;
    let hc = incremental_gains(&ph, h.treatment(), h.outcome(), 20).map_err(|e| e.to_string())?;
    let band = hc
        .normalized()
        .into_iter()
        .filter_map(|(phi, g)| g.map(|g| (g - phi).abs()))
        .fold(0.0, f64::max);
    ok &= band <= 0.05;
    notes.push(format!("homogeneous max band {band:.3} of endpoint"));

    let (g, bundle) = calibrated_bundle();
    let model = bundle.uplift.as_ref().ok_or("bundle has no uplift model")?;
    let data = build_uplift_dataset(
        &g.corpus,
        Some((&bundle.topics, &bundle.manifest.inference)),
    )
    .map_err(|e| e.to_string())?;
    let frac = persuadable_fraction(&model.predict_dataset(&data).map_err(|e| e.to_string())?);
    ok &= (frac - 0.60).abs() <= 0.08;
    notes.push(format!("calibrated persuadable {frac:.3}"));
    check(ok, notes.join("; "))
}

fn generator_criterion() -> Outcome {
    let start = Instant::now();
    let g = calibrated(42);
    let elapsed = start.elapsed();
    let s = corpus_stats(&g.corpus).map_err(|e| e.to_string())?;
    let i_share = first_word_table(&g.corpus)
        .map_err(|e| e.to_string())?
        .row("i")
        .map_or(0.0, |r| r.percentage);
    let top_details = s.details_fraction_top_decile.unwrap_or(0.0);
    let checks = [
        ("answer rate", (s.answer_rate - 0.675).abs() <= 0.01),
        ("mean views", (s.mean_views / 23.7 - 1.0).abs() <= 0.10),
        ("top-1% share", (s.top1_view_share - 0.45).abs() <= 0.05),
        ("top-10% share", (s.top10_view_share - 0.76).abs() <= 0.03),
        ("zero views", s.zero_view_fraction >= 0.15),
        ("details", (s.details_fraction - 0.50).abs() <= 0.03),
        ("details in top decile", (top_details - 0.68).abs() <= 0.04),
        ("first word i", (i_share - 27.0).abs() <= 3.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    check(
        failed.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "answer {:.3}, views {:.2}, top1 {:.3}, top10 {:.3}, zero {:.3}, details {:.3}/{:.3}, i {:.1}%, {:.1?}{}",
            s.answer_rate,
            s.mean_views,
            s.top1_view_share,
            s.top10_view_share,
            s.zero_view_fraction,
            s.details_fraction,
            top_details,
            i_share,
            elapsed,
            if failed.is_empty() { String::new() } else { format!("; out of band: {}", failed.join(", ")) }
        ),
    )
}

fn capitalized(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn intervention_criterion() -> Outcome {
    let (g, bundle) = calibrated_bundle();
    let input = |q: &qpop::corpus::Question| QuestionInput {
        summary: q.summary.clone(),
        details: q.details.clone(),
        week: q.week,
        platform: q.platform.clone(),
        product_version: q.product_version.clone(),
    };
    let score = |q: &QuestionInput| bundle.score(q).map(|r| r.probability);

    let (mut moved, mut n_move) = (0, 0);
    let (mut rewritten, mut n_pairs, mut n_why) = (0, 0, 0);
    for q in &g.corpus.questions {
        let base = input(q);
        if n_move < 100 && q.details.is_none() && q.summary.chars().count() > 150 {
            let sentences = split_sentences(&q.summary);
            if sentences.len() >= 2 {
                n_move += 1;
                let edited = QuestionInput {
                    summary: capitalized(&sentences[1..].join(" ")),
                    details: Some(sentences[0].clone()),
                    ..base.clone()
                };
                if score(&edited).map_err(|e| e.to_string())?
                    > score(&base).map_err(|e| e.to_string())?
                {
                    moved += 1;
                }
            }
        }
        if n_why < 100 && first_word(&q.summary).as_deref() == Some("why") {
            n_why += 1;
            let before = score(&base).map_err(|e| e.to_string())?;
            let start = q.summary.find(|c: char| c.is_alphanumeric()).unwrap_or(0);
            for w in QUESTION_WORDS {
                let edited = QuestionInput {
                    summary: format!(
                        "{}{}{}",
                        &q.summary[..start],
                        capitalized(w),
                        &q.summary[start + 3..]
                    ),
                    ..base.clone()
                };
                // Rewrites that push the summary past the length limit are not offered.
                if let Ok(after) = score(&edited) {
                    n_pairs += 1;
                    if after > before {
                        rewritten += 1;
                    }
                }
            }
        }
    }
    let move_rate = moved as f64 / n_move.max(1) as f64;
    let why_rate = rewritten as f64 / n_pairs.max(1) as f64;
    check(
        n_move == 100 && n_why == 100 && move_rate >= 0.8 && why_rate >= 0.8,
        format!(
            "sentence move raised score in {moved}/{n_move}; why rewrites raised it in {rewritten}/{n_pairs} over {n_why} questions"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "first-word table correlations",
            table_correlations_criterion,
        ),
        ("entropy properties", entropy_criterion),
        ("LDA planted-topic recovery", lda_planted_criterion),
        ("logistic regression oracle", logistic_oracle_criterion),
        ("AUC oracle", auc_oracle_criterion),
        ("group AUC ordering", auc_ordering_criterion),
        ("Boruta planted relevance", boruta_criterion),
        ("uplift recovery", uplift_criterion),
        ("generator calibration bands", generator_criterion),
        ("intervention direction", intervention_criterion),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name} ({secs:.1}s): {msg}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
