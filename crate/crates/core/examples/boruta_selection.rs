//! All-relevant feature selection over the context and style attributes, with the
//! attribute table sorted by mean importance.
//!
//! ```text
//! cargo run --release --example boruta_selection -- [n_questions] [seed]
//! ```

use qpop::boruta::{attribute_table, popularity_dataset, run_boruta, BorutaParams};
use qpop::corpus::{generate_corpus, label_top_decile, GeneratorConfig};
use qpop::ensemble::Metric;
use qpop::popmodel::corpus_features;

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args
        .first()
        .map_or(10_000, |s| s.parse().expect("n_questions"));
    let seed: u64 = args.get(1).map_or(42, |s| s.parse().expect("seed"));

    let corpus = generate_corpus(&GeneratorConfig::calibrated(n, seed))?.corpus;
    let features = corpus_features(&corpus, None, None);
    let labels = label_top_decile(&corpus)?.labels;
    let data = popularity_dataset(&features, &labels)?;

    // Accuracy barely moves on a 10% positive class, so importance is scored by Brier.
    let params = BorutaParams {
        seed,
        metric: Metric::Brier,
        ..BorutaParams::default()
    };
    let report = run_boruta(&data, &params)?;
    println!(
        "{} iterations on {} sampled rows; median max shadow Z {:.2}",
        report.iterations, report.sample_rows, report.median_max_shadow_z
    );
    println!(
        "{:<26} {:<11} {:>7}  {:<5} status",
        "attribute", "type", "mean Z", "group"
    );
    for row in attribute_table(&report) {
        println!(
            "{:<26} {:<11} {:>7.2}  {:<5} {:?}",
            row.attribute, row.kind, row.mean_z, row.group, row.status
        );
    }
    Ok(())
}
