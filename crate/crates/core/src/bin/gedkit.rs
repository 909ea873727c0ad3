use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gedkit::baseline::{predict, train_epochs, LinearModel};
use gedkit::corpus::{parse_conllu, write_conllu, LabelScheme, LabeledSentence, SchemeKind};
use gedkit::dataset::{
    build_pseudo_split, build_real_split, materialize, train_file_name, LadderKind, LadderSize, PseudoPools,
    RecordIndex, SamplingPlan,
};
use gedkit::eval::{aggregate, compute_prf, emit_curve, score, select_best_epoch, CurvePoint, MetricsReport};
use gedkit::feedback::{annotate, write_annotations, TemplateSet};
use gedkit::inject::{eligible, Injector};
use gedkit::pipeline::{self, CommandManifest, PipelineConfig, RunResult};
use gedkit::record::{read_labeled, read_outcomes, serialize_labeled, serialize_outcomes};
use gedkit::synthetic::SyntheticCorpus;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "gedkit", version, about = "Grammatical error detection experiment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt every eligible sentence of a CoNLL-U corpus once per rule.
    Inject(InjectArgs),
    /// Build the training ladder and dev/test sets.
    Split(SplitArgs),
    /// Train the averaged-perceptron reference detector.
    TrainBaseline(TrainArgs),
    /// Label sentences with a trained model.
    PredictBaseline(PredictArgs),
    /// Token-level precision / recall / F1 of predictions against gold.
    Score(ScoreArgs),
    /// Aggregate per-seed reports into a learning curve.
    Curve(CurveArgs),
    /// Attach a feedback comment to every detected error.
    Feedback(FeedbackArgs),
    /// inject, split, train/predict per size and seed, score, curve.
    Pipeline(PipelineArgs),
    /// Write a synthetic parsed corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InjectArgs {
    /// CoNLL-U corpus.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    /// Outcome JSONL (or an inject output directory) for pseudo plans,
    /// labeled JSONL for real plans.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "pseudo_pow2")]
    plan: LadderKind,
    /// Explicit comma-separated ladder sizes; implies a custom plan.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<String>>,
    /// Error-free sentences for the pseudo test set; defaults to
    /// error_free.jsonl beside the input.
    #[arg(long)]
    error_free: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    dev_per_type: usize,
    #[arg(long, default_value_t = 200)]
    test_per_type: usize,
    #[arg(long, default_value_t = 200)]
    error_free_count: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "typed")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Keep the epoch with the best dev micro F1 instead of the last one.
    #[arg(long)]
    dev: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Scheme to score under; inferred from the files when omitted.
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Directory for report.json and a manifest; the report is printed to
    /// stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    /// A pipeline runs.json, or SIZE=report.json pairs (repeatable).
    #[arg(long = "in", required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeedbackArgs {
    /// Typed predictions JSONL.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON object mapping error types to comment templates.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// CoNLL-U corpus for pseudo plans, labeled JSONL for real plans.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "pseudo_pow2")]
    plan: LadderKind,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<String>>,
    #[arg(long, default_value = "typed")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Number of training runs per ladder size.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 200)]
    dev_per_type: usize,
    #[arg(long, default_value_t = 200)]
    test_per_type: usize,
    #[arg(long, default_value_t = 200)]
    error_free_count: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 15_000)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn create<P: AsRef<Path>>(path: P) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot read {}", path.display()))?,
    ))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn make_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Reads labeled JSONL under `scheme`, or under whichever scheme fits.
fn load_labeled(path: &Path, scheme: Option<SchemeKind>) -> Result<Vec<LabeledSentence>> {
    let read = |s: SchemeKind| read_labeled(open(path)?, &LabelScheme::of_kind(s)).map_err(anyhow::Error::from);
    let sentences = match scheme {
        Some(s) => read(s),
        None => read(SchemeKind::Typed).or_else(|_| read(SchemeKind::Binary)),
    };
    sentences.with_context(|| format!("cannot load {}", path.display()))
}

fn parse_plan(kind: LadderKind, sizes: &Option<Vec<String>>, per_type: bool, seed: u64) -> Result<SamplingPlan> {
    match sizes {
        Some(sizes) => {
            let sizes = sizes
                .iter()
                .map(|s| match s.trim() {
                    "ALL" => Ok(LadderSize::All),
                    n => n
                        .parse()
                        .map(LadderSize::Count)
                        .with_context(|| format!("bad ladder size {n:?}")),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SamplingPlan::custom(sizes, per_type, seed)?)
        }
        None => Ok(SamplingPlan::of_kind(kind, seed)?),
    }
}

fn inject(args: InjectArgs) -> Result<()> {
    let doc = parse_conllu(open(&args.input)?, &args.input.to_string_lossy())?;
    make_out_dir(&args.out)?;
    let generation = Injector::default().generate(&doc.sentences, args.seed)?;

    let outcomes = args.out.join("outcomes.jsonl");
    let mut w = create(&outcomes)?;
    serialize_outcomes(&generation.outcomes, &mut w)?;
    w.flush()?;

    let error_free = args.out.join("error_free.jsonl");
    let clean: Vec<_> = doc
        .sentences
        .iter()
        .filter(|s| eligible(s))
        .map(|s| LabeledSentence::correct(s.clone(), LabelScheme::typed()))
        .collect();
    let mut w = create(&error_free)?;
    serialize_labeled(&clean, &mut w)?;
    w.flush()?;

    let diagnostics = args.out.join("diagnostics.jsonl");
    let mut w = create(&diagnostics)?;
    for d in &doc.diagnostics {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let summary = args.out.join("summary.json");
    write_json(&summary, &generation.summary)?;
    CommandManifest::write(
        &args.out,
        "inject",
        json!({}),
        Some(args.seed),
        &[args.input],
        &[outcomes, error_free, diagnostics, summary],
    )?;
    eprintln!(
        "{} outcomes from {} eligible sentences ({} rejected blocks)",
        generation.outcomes.len(),
        generation.summary.eligible,
        doc.diagnostics.len()
    );
    Ok(())
}

fn split(args: SplitArgs) -> Result<()> {
    let per_type = args.sizes.is_none() && args.plan == LadderKind::PseudoPow2
        || args.sizes.is_some() && args.plan != LadderKind::RealLadder;
    let plan = parse_plan(args.plan, &args.sizes, per_type, args.seed)?;
    make_out_dir(&args.out)?;
    let mut inputs = Vec::new();
    let split = if plan.per_type {
        let (outcomes_path, default_clean) = if args.input.is_dir() {
            (args.input.join("outcomes.jsonl"), args.input.join("error_free.jsonl"))
        } else {
            let dir = args.input.parent().unwrap_or(Path::new("."));
            (args.input.clone(), dir.join("error_free.jsonl"))
        };
        let clean_path = args.error_free.clone().unwrap_or(default_clean);
        let outcomes = read_outcomes(open(&outcomes_path)?)
            .with_context(|| format!("cannot load outcomes from {}", outcomes_path.display()))?;
        let clean: Vec<_> = load_labeled(&clean_path, None)?
            .into_iter()
            .map(|s| s.sentence)
            .collect();
        let pools = PseudoPools {
            dev_per_type: args.dev_per_type,
            test_per_type: args.test_per_type,
            error_free: args.error_free_count,
        };
        let split = build_pseudo_split(&outcomes, &clean, &plan, pools)?;
        materialize(&split, &RecordIndex::from_pseudo(&outcomes, &clean), &args.out)?;
        inputs.extend([outcomes_path, clean_path]);
        split
    } else {
        let corpus = load_labeled(&args.input, None)?;
        let (split, _) = build_real_split(&corpus, &plan)?;
        materialize(&split, &RecordIndex::from_labeled(&corpus), &args.out)?;
        inputs.push(args.input);
        split
    };
    let mut outputs = vec![
        args.out.join("manifest.json"),
        args.out.join("dev.jsonl"),
        args.out.join("test.jsonl"),
    ];
    outputs.extend(split.train_sets().keys().map(|&n| args.out.join(train_file_name(n))));
    CommandManifest::write_as(
        &args.out,
        "provenance.json",
        "split",
        json!({ "plan": &split.plan }),
        Some(args.seed),
        &inputs,
        &outputs,
    )?;
    eprintln!(
        "{} ladder sizes, dev {}, test {}, manifest {}",
        split.train_sets().len(),
        split.dev().len(),
        split.test().len(),
        split.manifest_hash
    );
    Ok(())
}

fn train_baseline(args: TrainArgs) -> Result<()> {
    let data = load_labeled(&args.input, Some(args.scheme))?;
    let mut snapshots = train_epochs(&data, args.epochs, args.seed)?;
    let mut inputs = vec![args.input];
    let chosen = match &args.dev {
        Some(dev_path) => {
            let dev = load_labeled(dev_path, Some(args.scheme))?;
            let reports = snapshots
                .iter()
                .map(|m| {
                    let pred: Vec<_> = dev.iter().map(|s| predict(m, &s.sentence)).collect();
                    Ok((m.metadata.epochs, compute_prf(&score(&pred, &dev)?)))
                })
                .collect::<Result<Vec<_>>>()?;
            inputs.push(dev_path.clone());
            select_best_epoch(&reports)?
        }
        None => snapshots.len(),
    };
    let model = snapshots.swap_remove(chosen - 1);
    make_out_dir(&args.out)?;
    let model_path = args.out.join("model.json");
    let mut w = create(&model_path)?;
    serde_json::to_writer(&mut w, &model)?;
    w.flush()?;
    CommandManifest::write(
        &args.out,
        "train-baseline",
        json!({ "scheme": args.scheme, "epochs": args.epochs, "selected_epoch": chosen }),
        Some(args.seed),
        &inputs,
        &[model_path],
    )?;
    Ok(())
}

fn predict_baseline(args: PredictArgs) -> Result<()> {
    let model: LinearModel = serde_json::from_reader(open(&args.model)?)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    let input = load_labeled(&args.input, Some(model.scheme.kind()))?;
    let predictions: Vec<_> = input.iter().map(|s| predict(&model, &s.sentence)).collect();
    make_out_dir(&args.out)?;
    let path = args.out.join("predictions.jsonl");
    let mut w = create(&path)?;
    serialize_labeled(&predictions, &mut w)?;
    w.flush()?;
    CommandManifest::write(
        &args.out,
        "predict-baseline",
        json!({}),
        None,
        &[args.model, args.input],
        &[path],
    )?;
    Ok(())
}

fn score_cmd(args: ScoreArgs) -> Result<()> {
    let gold = load_labeled(&args.gold, args.scheme)?;
    let scheme = args
        .scheme
        .unwrap_or_else(|| gold.first().map_or(SchemeKind::Typed, |s| s.scheme.kind()));
    let gold = if args.scheme.is_none() {
        load_labeled(&args.gold, Some(scheme))?
    } else {
        gold
    };
    let pred = load_labeled(&args.pred, Some(scheme))?;
    let report = compute_prf(&score(&pred, &gold)?);
    match args.out {
        Some(out) => {
            make_out_dir(&out)?;
            let path = out.join("report.json");
            write_json(&path, &report)?;
            CommandManifest::write(
                &out,
                "score",
                json!({ "scheme": scheme }),
                None,
                &[args.pred, args.gold],
                &[path],
            )?;
            let m = &report.micro;
            println!(
                "micro P={:.4} R={:.4} F1={:.4} tp={} fp={} fn={}",
                m.prf.precision, m.prf.recall, m.prf.f1, m.counts.tp, m.counts.fp, m.counts.fn_
            );
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn curve(args: CurveArgs) -> Result<()> {
    let mut by_size: BTreeMap<usize, Vec<MetricsReport>> = BTreeMap::new();
    let mut inputs = Vec::new();
    for arg in &args.inputs {
        match arg.split_once('=') {
            Some((size, path)) => {
                let size: usize = size.parse().with_context(|| format!("bad train size in {arg:?}"))?;
                let path = PathBuf::from(path);
                let report: MetricsReport = serde_json::from_reader(open(&path)?)
                    .with_context(|| format!("{} is not a metrics report", path.display()))?;
                by_size.entry(size).or_default().push(report);
                inputs.push(path);
            }
            None => {
                let path = PathBuf::from(arg);
                let runs: Vec<RunResult> = serde_json::from_reader(open(&path)?)
                    .with_context(|| format!("{} is not a runs file", path.display()))?;
                for r in runs {
                    by_size.entry(r.train_size).or_default().push(r.test);
                }
                inputs.push(path);
            }
        }
    }
    let points = by_size
        .into_iter()
        .map(|(train_size, reports)| {
            Ok(CurvePoint {
                train_size,
                aggregate: aggregate(&reports)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    make_out_dir(&args.out)?;
    let csv_path = args.out.join("curve.csv");
    let mut w = create(&csv_path)?;
    emit_curve(&points, &mut w)?;
    w.flush()?;
    let json_path = args.out.join("curve.json");
    write_json(&json_path, &points)?;
    CommandManifest::write(&args.out, "curve", json!({}), None, &inputs, &[csv_path, json_path])?;
    Ok(())
}

fn feedback(args: FeedbackArgs) -> Result<()> {
    let templates = match &args.templates {
        Some(path) => {
            TemplateSet::from_json(open(path)?).with_context(|| format!("cannot load templates {}", path.display()))?
        }
        None => TemplateSet::default(),
    };
    let detections = load_labeled(&args.input, Some(SchemeKind::Typed))?;
    let annotated = annotate(&detections, &templates)?;
    make_out_dir(&args.out)?;
    let path = args.out.join("feedback.jsonl");
    let mut w = create(&path)?;
    write_annotations(&annotated, &mut w)?;
    w.flush()?;
    let mut inputs = vec![args.input];
    inputs.extend(args.templates);
    CommandManifest::write(&args.out, "feedback", json!({}), None, &inputs, &[path])?;
    Ok(())
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let per_type = args.plan != LadderKind::RealLadder;
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let config = PipelineConfig {
        seed: args.seed,
        plan: parse_plan(args.plan, &args.sizes, per_type, args.seed)?,
        pools: PseudoPools {
            dev_per_type: args.dev_per_type,
            test_per_type: args.test_per_type,
            error_free: args.error_free_count,
        },
        scheme: args.scheme,
        epochs: args.epochs,
        run_seeds: Vec::new(),
    }
    .with_run_count(args.seeds);
    let output = pipeline::run(&args.input, &args.out, &config)?;
    for p in &output.curve {
        let m = &p.aggregate.micro;
        eprintln!("train {:>6}: micro F1 {:.4} ± {:.4}", p.train_size, m.f1.mean, m.f1.std);
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let sentences = SyntheticCorpus::new(args.seed).generate(args.count);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        make_out_dir(dir)?;
    }
    let mut w = create(&args.out)?;
    write_conllu(&sentences, &mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inject(a) => inject(a),
        Command::Split(a) => split(a),
        Command::TrainBaseline(a) => train_baseline(a),
        Command::PredictBaseline(a) => predict_baseline(a),
        Command::Score(a) => score_cmd(a),
        Command::Curve(a) => curve(a),
        Command::Feedback(a) => feedback(a),
        Command::Pipeline(a) => run_pipeline(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gedkit: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
