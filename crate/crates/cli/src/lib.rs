//! The `qpop` command line and HTTP scoring service.

pub mod server;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use qpop::boruta::{
    attribute_group, attribute_table, popularity_dataset, run_boruta, BorutaParams, BorutaReport,
};
use qpop::corpus::{
    generate_corpus, label_top_decile, load_corpus, GeneratorConfig, GroundTruth, QuestionCorpus,
};
use qpop::ensemble::Metric;
use qpop::evalstats::{evaluation_report, ReportInputs};
use qpop::popmodel::{
    corpus_features, evaluate_model, fit_with_holdout, FeatureGroups, GroupEvaluation,
    PopularityConfig, PopularityModel, DEFAULT_HOLDOUT_FRACTION, DEFAULT_TEXT_DIM,
};
use qpop::service::{
    Bundle, BundleConfig, QuestionInput, DEFAULT_PLATFORM, DEFAULT_PRODUCT_VERSION, DEFAULT_WEEK,
};
use qpop::topics::{fit_lda, InferenceParams, LdaParams, TopicModel};
use qpop::uplift::{
    build_uplift_dataset, fit_uplift, incremental_gains, uplift_histogram, UpliftModel,
    UpliftParams,
};

#[derive(Debug, Parser)]
#[command(name = "qpop", version, about = "Question popularity modeling toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and its ground-truth sidecar.
    Generate {
        /// Generator configuration (JSON); defaults to the calibrated configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of questions when no configuration file is given.
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth path; defaults to `<out>.truth.jsonl`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Fit the LDA topic model.
    TrainTopics {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 30)]
        topics: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
        /// Fit on an evenly spaced sample of this many questions (0 = all).
        #[arg(long, default_value_t = 10_000)]
        sample: usize,
    },
    /// All-relevant feature selection over Group I/II attributes.
    Boruta {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "group1,group2")]
        features: FeatureGroups,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        topics: TopicArgs,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
        /// Machine-readable report path.
        #[arg(long, default_value = "boruta.json")]
        out: PathBuf,
    },
    /// Train the top-decile logistic classifier on the non-holdout questions.
    TrainPop {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "I+II")]
        groups: FeatureGroups,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        topics: TopicArgs,
        #[arg(long, default_value_t = DEFAULT_HOLDOUT_FRACTION)]
        holdout: f64,
    },
    /// Holdout AUC of one or more popularity models.
    Evaluate {
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        topics: TopicArgs,
        /// AUC table (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// ROC points (CSV).
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Fit the uplift forest for adding details to a first question.
    TrainUplift {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        topics: TopicArgs,
        #[arg(long, default_value_t = 100)]
        trees: usize,
    },
    /// Incremental gains curve of an uplift model.
    Gains {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        topics: TopicArgs,
        /// Uplift-score histogram (CSV).
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Full evaluation report from a corpus and a directory of model files.
    Report {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory with any of topics.json, auc.json, boruta.json, uplift.json.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth sidecar; `<corpus>.truth.jsonl` is used when present.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Fit topics, popularity and uplift models into a service bundle directory.
    BuildBundle {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "I+II")]
        groups: FeatureGroups,
        #[arg(long)]
        no_uplift: bool,
    },
    /// Run the HTTP scoring service.
    Serve {
        #[arg(long, env = "QPOP_BUNDLE")]
        bundle: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Score one question and print the response.
    Score {
        #[arg(long, env = "QPOP_BUNDLE")]
        bundle: PathBuf,
        #[arg(long)]
        summary: String,
        #[arg(long)]
        details: Option<String>,
        #[arg(long, default_value_t = DEFAULT_WEEK)]
        week: u32,
        #[arg(long, default_value = DEFAULT_PLATFORM)]
        platform: String,
        #[arg(long, default_value = DEFAULT_PRODUCT_VERSION)]
        product_version: String,
        /// Also print suggestions.
        #[arg(long)]
        suggest: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TopicArgs {
    /// Topic model for the topic and coherency attributes.
    #[arg(long = "topic-model")]
    pub topic_model: Option<PathBuf>,
}

impl TopicArgs {
    fn load(&self) -> anyhow::Result<Option<TopicModel>> {
        self.topic_model
            .as_ref()
            .map(|p| {
                TopicModel::load(p).with_context(|| format!("loading topic model {}", p.display()))
            })
            .transpose()
    }
}

fn read_corpus(path: &Path) -> anyhow::Result<QuestionCorpus> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// Creates the parent directories of every output file the command writes.
fn create_output_dirs(command: &Command) -> anyhow::Result<()> {
    let files: Vec<&Path> = match command {
        Command::Generate { out, truth, .. } => [Some(out), truth.as_ref()]
            .into_iter()
            .flatten()
            .map(|p| p.as_path())
            .collect(),
        Command::TrainTopics { out, .. }
        | Command::Boruta { out, .. }
        | Command::TrainPop { out, .. }
        | Command::TrainUplift { out, .. } => vec![out.as_path()],
        Command::Evaluate { out, roc, .. } => [out, roc]
            .into_iter()
            .flatten()
            .map(|p| p.as_path())
            .collect(),
        Command::Gains { out, histogram, .. } => [Some(out), histogram.as_ref()]
            .into_iter()
            .flatten()
            .map(|p| p.as_path())
            .collect(),
        _ => Vec::new(),
    };
    for dir in files
        .iter()
        .filter_map(|f| f.parent())
        .filter(|d| !d.as_os_str().is_empty())
    {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let inference = InferenceParams::default();
    create_output_dirs(&cli.command)?;
    match cli.command {
        Command::Generate {
            config,
            n,
            seed,
            out,
            truth,
        } => {
            let mut cfg = match config {
                Some(p) => GeneratorConfig::load(&p)?,
                None => GeneratorConfig::calibrated(n, seed.unwrap_or(42)),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let g = generate_corpus(&cfg)?;
            g.corpus.save(&out)?;
            let truth = truth.unwrap_or_else(|| sidecar(&out));
            g.truth.save(&truth)?;
            println!(
                "wrote {} questions to {} (truth {})",
                g.corpus.len(),
                out.display(),
                truth.display()
            );
        }
        Command::TrainTopics {
            corpus,
            topics,
            seed,
            out,
            iterations,
            burn_in,
            sample,
        } => {
            let corpus = read_corpus(&corpus)?;
            let params = LdaParams {
                n_topics: topics,
                iterations,
                burn_in,
                seed,
                ..LdaParams::default()
            };
            let fit_on = if sample > 0 && corpus.len() > sample {
                let step = corpus.len() / sample;
                corpus.subset(&(0..corpus.len()).step_by(step).collect::<Vec<_>>())
            } else {
                corpus
            };
            let model = fit_lda(&fit_on, &params)?.model;
            model.save(&out)?;
            for k in 0..model.n_topics {
                println!("{k:>3}  {}", model.top_keywords(k, 8).join(" "));
            }
            println!("wrote {}", out.display());
        }
        Command::Boruta {
            corpus,
            features,
            seed,
            topics,
            max_iterations,
            out,
        } => {
            let corpus = read_corpus(&corpus)?;
            let tm = topics.load()?;
            let fvs = corpus_features(&corpus, tm.as_ref().map(|m| (m, &inference)), None);
            let labels = label_top_decile(&corpus)?.labels;
            let mut data = popularity_dataset(&fvs, &labels)?;
            if !features.style() {
                let keep: Vec<usize> = (0..data.n_features())
                    .filter(|&f| attribute_group(&data.schema.features[f].name) == "I")
                    .collect();
                data = data.select_features(&keep);
            }
            // Accuracy importance is flat on a 10% positive class.
            let params = BorutaParams {
                max_iterations,
                seed,
                metric: Metric::Brier,
                ..BorutaParams::default()
            };
            let report = run_boruta(&data, &params)?;
            print_boruta(&report);
            write(&out, serde_json::to_vec_pretty(&report)?)?;
            println!("wrote {}", out.display());
        }
        Command::TrainPop {
            corpus,
            groups,
            seed,
            out,
            topics,
            holdout,
        } => {
            let corpus = read_corpus(&corpus)?;
            let tm = topics.load()?;
            let fvs = corpus_features(
                &corpus,
                tm.as_ref().map(|m| (m, &inference)),
                groups.text().then_some(DEFAULT_TEXT_DIM),
            );
            let config = PopularityConfig {
                groups,
                seed,
                ..PopularityConfig::default()
            };
            let model = fit_with_holdout(&corpus, &fvs, &config, holdout)?;
            model.save(&out)?;
            println!(
                "{}: trained on {} questions in {} iterations; wrote {}",
                groups.label(),
                model.meta.n_train,
                model.meta.iterations,
                out.display()
            );
        }
        Command::Evaluate {
            model,
            corpus,
            topics,
            out,
            roc,
        } => {
            let corpus = read_corpus(&corpus)?;
            let tm = topics.load()?;
            let models = model
                .iter()
                .map(|p| {
                    PopularityModel::load(p).with_context(|| format!("loading {}", p.display()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let text = models.iter().any(|m| m.encoder.text_dim.is_some());
            let fvs = corpus_features(
                &corpus,
                tm.as_ref().map(|m| (m, &inference)),
                text.then_some(DEFAULT_TEXT_DIM),
            );
            let evals: Vec<GroupEvaluation> = models
                .iter()
                .map(|m| evaluate_model(m, &corpus, &fvs))
                .collect::<qpop::Result<_>>()?;
            println!("{:<10} {:>8} {:>8} {:>8}", "groups", "auc", "train", "test");
            for e in &evals {
                println!(
                    "{:<10} {:>8.4} {:>8} {:>8}",
                    e.groups.label(),
                    e.auc,
                    e.n_train,
                    e.n_test
                );
            }
            if let Some(p) = out {
                write(&p, serde_json::to_vec_pretty(&evals)?)?;
            }
            if let Some(p) = roc {
                let mut s = String::from("groups,fpr,tpr\n");
                for e in &evals {
                    for (x, y) in &e.roc {
                        s.push_str(&format!("{},{x},{y}\n", e.groups.label()));
                    }
                }
                write(&p, s)?;
            }
        }
        Command::TrainUplift {
            corpus,
            seed,
            out,
            topics,
            trees,
        } => {
            let corpus = read_corpus(&corpus)?;
            let tm = topics.load()?;
            let data = build_uplift_dataset(&corpus, tm.as_ref().map(|m| (m, &inference)))?;
            let mut params = UpliftParams::default();
            params.forest.n_trees = trees;
            let model = fit_uplift(&data, &params, seed)?;
            model.save(&out)?;
            println!(
                "{} first questions, {:.3} with details; wrote {}",
                data.len(),
                data.treated_fraction(),
                out.display()
            );
        }
        Command::Gains {
            model,
            corpus,
            out,
            topics,
            histogram,
            points,
        } => {
            let corpus = read_corpus(&corpus)?;
            let model = UpliftModel::load(&model)?;
            let tm = topics.load()?;
            if model.with_topic && tm.is_none() {
                bail!("this uplift model uses topics; pass --topic-model");
            }
            let data = build_uplift_dataset(
                &corpus,
                tm.as_ref()
                    .filter(|_| model.with_topic)
                    .map(|m| (m, &inference)),
            )?;
            let scores = model.predict_dataset(&data)?;
            let curve = incremental_gains(&scores, data.treatment(), data.outcome(), points)?;
            write(&out, curve.to_csv())?;
            if let Some(p) = histogram {
                let mut s = String::from("bin_center,count\n");
                for b in uplift_histogram(&scores, 0.02)? {
                    s.push_str(&format!("{},{}\n", b.center, b.count));
                }
                write(&p, s)?;
            }
            println!(
                "overall uplift {:.4}, peak at phi {:.2}; wrote {}",
                curve.overall_uplift,
                curve.peak_phi(),
                out.display()
            );
        }
        Command::Report {
            corpus,
            models,
            out,
            truth,
        } => {
            let corpus_path = corpus;
            let corpus = read_corpus(&corpus_path)?;
            let opt_file = |name: &str| Some(models.join(name)).filter(|p| p.is_file());
            let topics = opt_file("topics.json").map(TopicModel::load).transpose()?;
            let auc: Option<Vec<GroupEvaluation>> = opt_file("auc.json")
                .map(|p| -> anyhow::Result<_> { Ok(serde_json::from_slice(&fs::read(p)?)?) })
                .transpose()?;
            let boruta: Option<BorutaReport> = opt_file("boruta.json")
                .map(|p| -> anyhow::Result<_> { Ok(serde_json::from_slice(&fs::read(p)?)?) })
                .transpose()?;
            let uplift = opt_file("uplift.json").map(UpliftModel::load).transpose()?;
            let truth_path = truth.or_else(|| Some(sidecar(&corpus_path)).filter(|p| p.is_file()));
            let truth = truth_path.map(GroundTruth::load).transpose()?;
            let inputs = ReportInputs {
                topics: topics.as_ref(),
                truth: truth.as_ref(),
                auc: auc.as_deref(),
                boruta: boruta.as_ref(),
                uplift: uplift.as_ref(),
                ..ReportInputs::default()
            };
            let report = evaluation_report(&corpus, &inputs)?;
            report.write(&out)?;
            print!("{}", report.render_text());
            println!("\nwrote {}", out.display());
        }
        Command::BuildBundle {
            corpus,
            out,
            seed,
            groups,
            no_uplift,
        } => {
            let corpus = read_corpus(&corpus)?;
            let mut config = BundleConfig::default();
            config.lda.seed = seed;
            config.popularity.seed = seed;
            config.popularity.groups = groups;
            if no_uplift {
                config.uplift = None;
            }
            let bundle = Bundle::build(&corpus, &config)?;
            bundle.save(&out)?;
            println!("bundle {} written to {}", bundle.version(), out.display());
        }
        Command::Serve { bundle, port } => {
            let (state, err) = server::AppState::from_dir(&bundle);
            if let Some(e) = err {
                eprintln!("warning: {e}; answering 503 until a bundle is available (send SIGHUP to reload)");
            }
            tokio::runtime::Runtime::new()?.block_on(server::serve(state, port))?;
        }
        Command::Score {
            bundle,
            summary,
            details,
            week,
            platform,
            product_version,
            suggest,
        } => {
            let bundle = Bundle::load(&bundle)?;
            let q = QuestionInput {
                summary,
                details,
                week,
                platform,
                product_version,
            };
            println!("{}", serde_json::to_string_pretty(&bundle.score(&q)?)?);
            if suggest {
                println!("{}", serde_json::to_string_pretty(&bundle.suggest(&q, 5)?)?);
            }
        }
    }
    Ok(())
}

fn sidecar(corpus: &Path) -> PathBuf {
    let mut s = corpus.as_os_str().to_owned();
    s.push(".truth.jsonl");
    PathBuf::from(s)
}

fn print_boruta(report: &BorutaReport) {
    println!(
        "{:<26} {:<12} {:>8} {:<5} status",
        "Attribute", "Type", "Mean Z", "Group"
    );
    for r in attribute_table(report) {
        println!(
            "{:<26} {:<12} {:>8.2} {:<5} {}",
            r.attribute, r.kind, r.mean_z, r.group, r.status
        );
    }
    println!(
        "{} iterations on {} sampled rows",
        report.iterations, report.sample_rows
    );
}
