//! Fits topics on a generated corpus, prints keywords and per-topic aggregates, then
//! folds in a new question.
//!
//! ```text
//! cargo run --release --example topic_model -- [n_questions] [seed]
//! ```

use qpop::corpus::{generate_corpus, GeneratorConfig};
use qpop::topics::{fit_lda, topic_aggregates, topic_entropy, InferenceParams, LdaParams};

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args
        .first()
        .map_or(20_000, |s| s.parse().expect("n_questions"));
    let seed: u64 = args.get(1).map_or(42, |s| s.parse().expect("seed"));

    let generated = generate_corpus(&GeneratorConfig::calibrated(n, seed))?;
    let corpus = &generated.corpus;
    let sample: Vec<usize> = (0..corpus.len())
        .step_by((corpus.len() / 5_000).max(1))
        .collect();
    let lda = LdaParams {
        iterations: 150,
        burn_in: 100,
        retained_samples: 10,
        seed,
        ..LdaParams::default()
    };
    let model = fit_lda(&corpus.subset(&sample), &lda)?.model;

    let inference = InferenceParams::default();
    let agg = topic_aggregates(&model, corpus, &inference, Some(&generated.truth))?;
    println!("topic  questions  views  up-votes  keywords");
    for t in &agg.topics {
        println!(
            "{:>5}  {:>9}  {:>5.1}  {:>8}  {}",
            t.topic,
            t.question_count,
            t.mean_views.unwrap_or(f64::NAN),
            t.up_vote_fraction.map_or("-".into(), |f| format!("{f:.3}")),
            t.top_keywords
                .iter()
                .take(6)
                .cloned()
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    if let Ok(r) = agg.vote_content_correlation() {
        println!("up-vote fraction ~ content type: r = {r:.3}");
    }

    let text = "How do I set up wireless printing from my laptop to the office printer?";
    let inferred = model.infer_text(text, &inference);
    let d = &inferred.distribution;
    println!(
        "\n{text}\n  topic {} ({})  entropy {:.3}",
        d.argmax(),
        model.top_keywords(d.argmax(), 5).join(" "),
        topic_entropy(d)?
    );
    Ok(())
}
