//! Generates a calibrated synthetic corpus and prints its summary statistics.
//!
//! ```text
//! cargo run --release --example generate_corpus -- [n_questions] [seed] [out.jsonl]
//! ```

use qpop::corpus::{corpus_stats, generate_corpus, GeneratorConfig};
use qpop::evalstats::first_word_table;

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args
        .first()
        .map_or(50_000, |s| s.parse().expect("n_questions"));
    let seed = args.get(1).map_or(42, |s| s.parse().expect("seed"));

    let generated = generate_corpus(&GeneratorConfig::calibrated(n, seed))?;
    let stats = corpus_stats(&generated.corpus)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);

    let first: Vec<_> = generated
        .truth
        .records
        .iter()
        .filter(|r| r.first_of_user)
        .collect();
    let by_id = generated.truth.by_id();
    let treated = generated
        .corpus
        .questions
        .iter()
        .filter(|q| by_id[q.id.as_str()].first_of_user && q.details.is_some())
        .count();
    let persuadable = first
        .iter()
        .filter(|r| r.true_uplift.unwrap_or(0.0) > 0.0)
        .count();
    println!(
        "first questions: {}  with details: {:.3}  persuadable: {:.3}",
        first.len(),
        treated as f64 / first.len() as f64,
        persuadable as f64 / first.len() as f64
    );

    let table = first_word_table(&generated.corpus)?;
    println!(
        "{:<10} {:>6} {:>7} {:>6} {:>6}",
        "word", "%", "views", "top%", "ans%"
    );
    for r in &table.rows {
        println!(
            "{:<10} {:>6.2} {:>7.1} {:>6.1} {:>6.1}",
            r.word, r.percentage, r.mean_views, r.top_decile_percentage, r.answer_rate
        );
    }
    println!("OTHER      {:>6.2}", table.other_percentage);

    if let Some(path) = args.get(2) {
        generated.corpus.save(path)?;
        generated.truth.save(format!("{path}.truth.jsonl"))?;
        println!("wrote {path}");
    }
    Ok(())
}
