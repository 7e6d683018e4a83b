use clap::Parser;
use qpop_cli::{run, Cli};

fn qpop(args: &[&str]) {
    let mut argv = vec!["qpop"];
    argv.extend_from_slice(args);
    run(Cli::parse_from(argv)).unwrap_or_else(|e| panic!("qpop {}: {e:#}", args.join(" ")));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let models = p("models");
    std::fs::create_dir(&models).unwrap();
    let m = |name: &str| format!("{models}/{name}");

    qpop(&[
        "generate",
        "--n",
        "3000",
        "--seed",
        "5",
        "--out",
        &p("corpus.jsonl"),
    ]);
    assert!(dir.path().join("corpus.jsonl.truth.jsonl").is_file());
    qpop(&[
        "train-topics",
        "--corpus",
        &p("corpus.jsonl"),
        "--topics",
        "8",
        "--seed",
        "1",
        "--iterations",
        "30",
        "--burn-in",
        "15",
        "--out",
        &m("topics.json"),
    ]);
    qpop(&[
        "train-pop",
        "--corpus",
        &p("corpus.jsonl"),
        "--groups",
        "I+II",
        "--seed",
        "1",
        "--topic-model",
        &m("topics.json"),
        "--out",
        &p("pop_i_ii.json"),
    ]);
    qpop(&[
        "train-pop",
        "--corpus",
        &p("corpus.jsonl"),
        "--groups",
        "I",
        "--seed",
        "1",
        "--topic-model",
        &m("topics.json"),
        "--out",
        &p("pop_i.json"),
    ]);
    qpop(&[
        "evaluate",
        "--model",
        &p("pop_i.json"),
        "--model",
        &p("pop_i_ii.json"),
        "--corpus",
        &p("corpus.jsonl"),
        "--topic-model",
        &m("topics.json"),
        "--out",
        &m("auc.json"),
        "--roc",
        &p("roc.csv"),
    ]);
    let auc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(m("auc.json")).unwrap()).unwrap();
    assert_eq!(auc.as_array().unwrap().len(), 2);
    qpop(&[
        "boruta",
        "--corpus",
        &p("corpus.jsonl"),
        "--features",
        "group1",
        "--seed",
        "2",
        "--max-iterations",
        "8",
        "--out",
        &m("boruta.json"),
    ]);
    qpop(&[
        "train-uplift",
        "--corpus",
        &p("corpus.jsonl"),
        "--seed",
        "3",
        "--trees",
        "10",
        "--topic-model",
        &m("topics.json"),
        "--out",
        &m("uplift.json"),
    ]);
    qpop(&[
        "gains",
        "--model",
        &m("uplift.json"),
        "--corpus",
        &p("corpus.jsonl"),
        "--topic-model",
        &m("topics.json"),
        "--out",
        &p("gains.csv"),
        "--histogram",
        &p("hist.csv"),
    ]);
    let gains = std::fs::read_to_string(p("gains.csv")).unwrap();
    assert!(gains.starts_with("phi,gains,diagonal\n"));
    assert!(std::fs::read_to_string(p("hist.csv"))
        .unwrap()
        .starts_with("bin_center,count\n"));

    qpop(&[
        "report",
        "--corpus",
        &p("corpus.jsonl"),
        "--models",
        &models,
        "--out",
        &p("report"),
    ]);
    let first = std::fs::read(p("report/report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    for section in qpop::evalstats::SECTION_NAMES {
        assert!(report.get(section).is_some(), "{section}");
    }
    for section in ["topic_aggregates", "auc_table", "boruta", "gains"] {
        assert_eq!(report[section]["status"], "present", "{section}");
    }
    qpop(&[
        "report",
        "--corpus",
        &p("corpus.jsonl"),
        "--models",
        &models,
        "--out",
        &p("report"),
    ]);
    assert_eq!(std::fs::read(p("report/report.json")).unwrap(), first);

    qpop(&[
        "build-bundle",
        "--corpus",
        &p("corpus.jsonl"),
        "--seed",
        "4",
        "--out",
        &p("bundle"),
    ]);
    qpop(&[
        "score",
        "--bundle",
        &p("bundle"),
        "--summary",
        "Where is my refund?",
        "--suggest",
    ]);
}
