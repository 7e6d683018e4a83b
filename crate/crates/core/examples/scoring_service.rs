//! Builds a service bundle in memory, scores a question, asks for suggestions and
//! compares an edit. Also times a batch of score calls.
//!
//! ```text
//! cargo run --release --example scoring_service -- [n_questions] [seed]
//! ```

use std::time::Instant;

use qpop::corpus::{generate_corpus, GeneratorConfig};
use qpop::service::{Bundle, BundleConfig, QuestionInput};

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args
        .first()
        .map_or(20_000, |s| s.parse().expect("n_questions"));
    let seed: u64 = args.get(1).map_or(42, |s| s.parse().expect("seed"));

    let corpus = generate_corpus(&GeneratorConfig::calibrated(n, seed))?.corpus;
    let mut config = BundleConfig::default();
    config.lda.seed = seed;
    config.popularity.seed = seed;
    let start = Instant::now();
    let bundle = Bundle::build(&corpus, &config)?;
    println!(
        "bundle {} built in {:.1?}",
        bundle.version(),
        start.elapsed()
    );

    let q = QuestionInput {
        summary: "why does my laptop keep dropping the wifi connection. it happens every few minutes since the update"
            .into(),
        details: None,
        week: 3,
        platform: "desktop".into(),
        product_version: "free".into(),
    };
    let s = bundle.score(&q)?;
    println!(
        "\np = {:.4}  percentile {:.1}  segment {:?}  topic {} ({})",
        s.probability,
        s.percentile,
        s.segment,
        s.topic.id,
        s.topic.keywords.join(" ")
    );
    for c in s.feature_breakdown.iter().take(5) {
        println!("  {:<24} {:+.4}", c.feature, c.contribution);
    }

    let sug = bundle.suggest(&q, 5)?;
    println!("\nimprovable: {}", sug.improvable);
    for e in &sug.suggestions {
        println!("  {:+.4}  {:?}", e.score_delta, e.kind);
    }

    let edited = QuestionInput {
        summary: "How can I stop my laptop dropping the wifi connection?".into(),
        details: Some("It happens every few minutes since the update.".into()),
        ..q.clone()
    };
    let w = bundle.whatif(&q, &edited)?;
    println!("\nwhat-if: {:.4} -> {:.4}", w.score_before, w.score_after);
    for f in &w.feature_diff {
        println!("  {:<24} {} -> {}", f.feature, f.before, f.after);
    }
    if let Ok(u) = bundle.uplift(&q) {
        println!(
            "uplift of adding details: {:+.4} ({:?})",
            u.uplift_score, u.recommendation
        );
    }

    let mut times: Vec<f64> = corpus
        .questions
        .iter()
        .take(500)
        .map(|q| {
            let input = QuestionInput {
                summary: q.summary.clone(),
                details: q.details.clone(),
                week: q.week,
                platform: q.platform.clone(),
                product_version: q.product_version.clone(),
            };
            let t = Instant::now();
            let _ = bundle.score(&input);
            t.elapsed().as_secs_f64() * 1000.0
        })
        .collect();
    times.sort_by(f64::total_cmp);
    println!(
        "\nscore latency over 500 calls: p50 {:.2} ms, p99 {:.2} ms",
        times[250], times[495]
    );
    Ok(())
}
