//! Uplift of adding details for first-time askers: persuadable share, score
//! histogram, gains curve, decile table and attribute importance.
//!
//! ```text
//! cargo run --release --example uplift_details -- [n_questions] [seed]
//! ```

use qpop::corpus::{generate_corpus, GeneratorConfig};
use qpop::topics::{fit_lda, InferenceParams, LdaParams};
use qpop::uplift::{
    build_uplift_dataset, fit_uplift, group_table, histogram_mode, incremental_gains,
    persuadable_fraction, stratified_effect, uplift_histogram, uplift_importance, UpliftParams,
};

fn main() -> qpop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args
        .first()
        .map_or(50_000, |s| s.parse().expect("n_questions"));
    let seed: u64 = args.get(1).map_or(42, |s| s.parse().expect("seed"));

    let generated = generate_corpus(&GeneratorConfig::calibrated(n, seed))?;
    let corpus = &generated.corpus;
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
    let inference = InferenceParams::default();

    let data = build_uplift_dataset(corpus, Some((&topics, &inference)))?;
    println!(
        "first questions: {}  treated: {:.3}",
        data.len(),
        data.treated_fraction()
    );
    let effect = stratified_effect(&data)?;
    println!(
        "naive effect {:.4}  week x topic stratified {:.4}",
        effect.naive, effect.stratified
    );

    let model = fit_uplift(&data, &UpliftParams::default(), seed)?;
    let scores = model.predict_dataset(&data)?;
    println!("persuadable fraction: {:.3}", persuadable_fraction(&scores));

    let truth = generated.truth.by_id();
    let planted = data
        .ids
        .iter()
        .filter(|id| truth[id.as_str()].true_uplift.unwrap_or(0.0) > 0.0)
        .count();
    println!(
        "planted persuadable:  {:.3}",
        planted as f64 / data.len() as f64
    );

    let hist = uplift_histogram(&scores, 0.02)?;
    println!(
        "histogram mode: {:.2}",
        histogram_mode(&hist).unwrap_or(f64::NAN)
    );
    for b in &hist {
        println!(
            "  {:>6.2} {}",
            b.center,
            "#".repeat(b.count * 60 / data.len().max(1))
        );
    }

    let curve = incremental_gains(&scores, data.treatment(), data.outcome(), 20)?;
    println!("phi   gains   diagonal");
    for p in &curve.points {
        let g = p
            .per_population
            .map_or("   -   ".to_owned(), |g| format!("{g:.4}"));
        println!("{:.2}  {g}  {:.4}", p.phi, p.diagonal);
    }

    println!("decile  n      pred    observed");
    for r in group_table(&scores, data.treatment(), data.outcome(), 10)? {
        let o = r
            .observed_uplift
            .map_or("-".to_owned(), |o| format!("{o:.4}"));
        println!("{:>6}  {:<5}  {:.4}  {o}", r.group, r.n, r.mean_predicted);
    }

    println!("attribute importance (%)");
    for a in uplift_importance(&model, &data, 5, seed)? {
        println!("  {:<16} {:>5.1}", a.attribute, a.percent);
    }
    Ok(())
}
