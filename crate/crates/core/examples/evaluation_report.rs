//! Evaluation report with the sections that need no trained models, written to a
//! directory as JSON, text and CSV.
//!
//! ```text
//! cargo run --release --example evaluation_report -- [out_dir] [n_questions] [seed]
//! ```

use qpop::corpus::{generate_corpus, GeneratorConfig};
use qpop::evalstats::{evaluation_report, ReportInputs};

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().map_or("report", String::as_str).to_owned();
    let n = args
        .get(1)
        .map_or(20_000, |s| s.parse().expect("n_questions"));
    let seed: u64 = args.get(2).map_or(42, |s| s.parse().expect("seed"));

    let generated = generate_corpus(&GeneratorConfig::calibrated(n, seed))?;
    let inputs = ReportInputs {
        truth: Some(&generated.truth),
        ..ReportInputs::default()
    };
    let report = evaluation_report(&generated.corpus, &inputs)?;
    print!("{}", report.render_text());
    println!("absent sections: {:?}", report.absent_sections());
    report.write(&out)?;
    println!("wrote {out}");
    Ok(())
}
