//! Holdout AUC of the popularity classifier for each attribute-group selection.
//!
//! ```text
//! cargo run --release --example popularity_groups -- [n_questions] [seed]
//! ```

use std::time::Instant;

use qpop::corpus::{generate_corpus, GeneratorConfig};
use qpop::popmodel::{
    compare_groups, corpus_features, FeatureGroups, PopularityConfig, DEFAULT_TEXT_DIM,
};
use qpop::topics::{fit_lda, InferenceParams, LdaParams};

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args
        .first()
        .map_or(50_000, |s| s.parse().expect("n_questions"));
    let seed: u64 = args.get(1).map_or(42, |s| s.parse().expect("seed"));
    let start = Instant::now();

    let corpus = generate_corpus(&GeneratorConfig::calibrated(n, seed))?.corpus;
    // Topics are learned on a subsample and folded in for everything else.
    let sample: Vec<usize> = (0..corpus.len())
        .step_by((corpus.len() / 10_000).max(1))
        .collect();
    let lda = LdaParams {
        iterations: 150,
        burn_in: 100,
        retained_samples: 10,
        seed,
        ..LdaParams::default()
    };
    let topics = fit_lda(&corpus.subset(&sample), &lda)?.model;
    println!("lda on {} docs: {:.1?}", sample.len(), start.elapsed());

    let inference = InferenceParams::default();
    let features = corpus_features(&corpus, Some((&topics, &inference)), Some(DEFAULT_TEXT_DIM));
    println!("features: {:.1?}", start.elapsed());

    let config = PopularityConfig {
        seed,
        ..PopularityConfig::default()
    };
    for eval in compare_groups(&corpus, &features, &FeatureGroups::ALL, &config, 0.3)? {
        println!(
            "{:<9} auc {:.4}  (train {}, test {}, {} iterations)",
            eval.groups.label(),
            eval.auc,
            eval.n_train,
            eval.n_test,
            eval.iterations
        );
    }
    println!("total: {:.1?}", start.elapsed());
    Ok(())
}
