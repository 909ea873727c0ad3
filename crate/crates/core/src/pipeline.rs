//! End-to-end runs: generate, split, train the baseline over every ladder
//! rung and run seed, score, aggregate, and write the learning curve.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{predict, train_epochs};
use crate::corpus::{parse_conllu, LabelScheme, LabeledSentence, ParsedSentence, SchemeKind};
use crate::dataset::{
    build_pseudo_split, build_real_split, materialize, DatasetSplit, LadderKind, PseudoPools, RecordIndex, SamplingPlan,
};
use crate::error::{GedError, Result};
use crate::eval::{aggregate, compute_prf, emit_curve, score, select_best_epoch, CurvePoint, MetricsReport};
use crate::inject::{eligible, GenerationSummary, Injector};
use crate::record::{read_labeled, serialize_outcomes};
use crate::seeding::sha256_hex;

pub const DEFAULT_RUN_SEEDS: [u64; 5] = [11, 22, 33, 44, 55];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub plan: SamplingPlan,
    pub pools: PseudoPools,
    pub scheme: SchemeKind,
    pub epochs: usize,
    pub run_seeds: Vec<u64>,
}

impl PipelineConfig {
    pub fn new(kind: LadderKind, seed: u64) -> Result<Self> {
        Ok(PipelineConfig {
            seed,
            plan: SamplingPlan::of_kind(kind, seed)?,
            pools: PseudoPools::default(),
            scheme: SchemeKind::Typed,
            epochs: 10,
            run_seeds: DEFAULT_RUN_SEEDS.to_vec(),
        })
    }

    /// First `n` of 11, 22, 33, ...
    pub fn with_run_count(mut self, n: usize) -> Self {
        self.run_seeds = (1..=n as u64).map(|i| 11 * i).collect();
        self
    }

    fn check(&self) -> Result<()> {
        self.plan.validate()?;
        if self.epochs == 0 {
            return Err(GedError::NoEpochs);
        }
        if self.run_seeds.is_empty() {
            return Err(GedError::EmptyRuns);
        }
        Ok(())
    }
}

/// One trained model scored on the test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub train_size: usize,
    pub run_seed: u64,
    pub best_epoch: usize,
    pub dev_micro_f1: f64,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub config: PipelineConfig,
    pub seed: u64,
    pub input: FileDigest,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generation: Option<GenerationSummary>,
    pub split_hash: String,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub manifest: PipelineManifest,
    pub curve: Vec<CurvePoint>,
    pub runs: Vec<RunResult>,
}

/// Provenance written next to the outputs of a single subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl CommandManifest {
    /// Digests `inputs` and `outputs` (paths under `out_dir` are recorded
    /// relative to it) and writes `manifest.json` into `out_dir`.
    pub fn write(
        out_dir: &Path,
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<Self> {
        Self::write_as(out_dir, "manifest.json", command, config, seed, inputs, outputs)
    }

    pub fn write_as(
        out_dir: &Path,
        file_name: &str,
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<Self> {
        let digest_all = |paths: &[PathBuf]| {
            paths
                .iter()
                .map(|p| digest_file(out_dir, p))
                .collect::<Result<Vec<_>>>()
        };
        let manifest = CommandManifest {
            command: command.to_string(),
            config,
            seed,
            inputs: digest_all(inputs)?,
            outputs: digest_all(outputs)?,
        };
        write_json(&out_dir.join(file_name), &manifest)?;
        Ok(manifest)
    }
}

/// Materialised split, converted to the configured scheme.
struct Prepared {
    train_sets: BTreeMap<usize, Vec<LabeledSentence>>,
    dev: Vec<LabeledSentence>,
    test: Vec<LabeledSentence>,
}

pub fn digest_file(root: &Path, path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path)?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(FileDigest {
        path: rel.to_string_lossy().replace('\\', "/"),
        sha256: sha256_hex(&bytes),
    })
}

fn convert(index: &RecordIndex, ids: &[String], scheme: &LabelScheme) -> Result<Vec<LabeledSentence>> {
    index.select(ids)?.iter().map(|r| r.to_labeled(scheme)).collect()
}

fn prepare(split: &DatasetSplit, index: &RecordIndex, scheme: &LabelScheme) -> Result<Prepared> {
    let train_sets = split
        .train_sets()
        .iter()
        .map(|(size, ids)| Ok((*size, convert(index, ids, scheme)?)))
        .collect::<Result<_>>()?;
    Ok(Prepared {
        train_sets,
        dev: convert(index, split.dev(), scheme)?,
        test: convert(index, split.test(), scheme)?,
    })
}

fn predict_all(model: &crate::baseline::LinearModel, gold: &[LabeledSentence]) -> Vec<LabeledSentence> {
    gold.iter().map(|s| predict(model, &s.sentence)).collect()
}

/// Trains one model, picks its best epoch on dev and scores it on test.
pub fn run_one(
    train: &[LabeledSentence],
    dev: &[LabeledSentence],
    test: &[LabeledSentence],
    epochs: usize,
    run_seed: u64,
) -> Result<RunResult> {
    let snapshots = train_epochs(train, epochs, run_seed)?;
    let dev_reports = snapshots
        .iter()
        .map(|m| Ok((m.metadata.epochs, compute_prf(&score(&predict_all(m, dev), dev)?))))
        .collect::<Result<Vec<_>>>()?;
    let best_epoch = select_best_epoch(&dev_reports)?;
    let dev_micro_f1 = dev_reports[best_epoch - 1].1.micro.prf.f1;
    let model = &snapshots[best_epoch - 1];
    let test_report = compute_prf(&score(&predict_all(model, test), test)?);
    Ok(RunResult {
        train_size: train.len(),
        run_seed,
        best_epoch,
        dev_micro_f1,
        test: test_report,
    })
}

fn evaluate(prepared: &Prepared, config: &PipelineConfig) -> Result<(Vec<CurvePoint>, Vec<RunResult>)> {
    let jobs: Vec<(usize, u64)> = prepared
        .train_sets
        .keys()
        .flat_map(|&size| config.run_seeds.iter().map(move |&s| (size, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(size, run_seed)| {
            let mut r = run_one(
                &prepared.train_sets[&size],
                &prepared.dev,
                &prepared.test,
                config.epochs,
                run_seed,
            )?;
            r.train_size = size;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curve = Vec::new();
    for &size in prepared.train_sets.keys() {
        let reports: Vec<MetricsReport> = results
            .iter()
            .filter(|r| r.train_size == size)
            .map(|r| r.test.clone())
            .collect();
        curve.push(CurvePoint {
            train_size: size,
            aggregate: aggregate(&reports)?,
        });
    }
    Ok((curve, results))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn finish(
    out_dir: &Path,
    config: &PipelineConfig,
    input: FileDigest,
    generation: Option<GenerationSummary>,
    split: &DatasetSplit,
    prepared: Prepared,
) -> Result<PipelineOutput> {
    let (curve, runs) = evaluate(&prepared, config)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let csv_path = out_dir.join("curve.csv");
    let mut w = BufWriter::new(File::create(&csv_path)?);
    emit_curve(&curve, &mut w)?;
    w.flush()?;
    drop(w);
    written.push(csv_path);
    for (name, value) in [
        ("curve.json", serde_json::to_value(&curve)?),
        ("runs.json", serde_json::to_value(&runs)?),
    ] {
        let path = out_dir.join(name);
        write_json(&path, &value)?;
        written.push(path);
    }

    let data_dir = out_dir.join("data");
    let mut data_files: Vec<PathBuf> = fs::read_dir(&data_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    data_files.sort();
    data_files.extend(fs::read_dir(out_dir)?.filter_map(|e| {
        let p = e.ok()?.path();
        (p.file_name()? == "outcomes.jsonl").then_some(p)
    }));
    written.extend(data_files);

    let outputs = written
        .iter()
        .map(|p| digest_file(out_dir, p))
        .collect::<Result<Vec<_>>>()?;
    let manifest = PipelineManifest {
        config: config.clone(),
        seed: config.seed,
        input,
        generation,
        split_hash: split.manifest_hash.clone(),
        outputs,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(PipelineOutput { manifest, curve, runs })
}

/// Pseudo-data run over a CoNLL-U corpus: every eligible sentence is
/// corrupted once per applicable rule, and unused eligible sentences supply
/// the error-free test items.
pub fn run_pseudo(input: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.check()?;
    let bytes = fs::read(input)?;
    let doc = parse_conllu(bytes.as_slice(), &input.to_string_lossy())?;
    let input_digest = FileDigest {
        path: input.to_string_lossy().into_owned(),
        sha256: sha256_hex(&bytes),
    };
    fs::create_dir_all(out_dir)?;

    let injector = Injector::default();
    let generation = injector.generate(&doc.sentences, config.seed)?;
    let mut w = BufWriter::new(File::create(out_dir.join("outcomes.jsonl"))?);
    serialize_outcomes(&generation.outcomes, &mut w)?;
    w.flush()?;
    drop(w);

    let error_free: Vec<ParsedSentence> = doc.sentences.iter().filter(|s| eligible(s)).cloned().collect();
    let split = build_pseudo_split(&generation.outcomes, &error_free, &config.plan, config.pools)?;
    let index = RecordIndex::from_pseudo(&generation.outcomes, &error_free);
    materialize(&split, &index, &out_dir.join("data"))?;

    let scheme = LabelScheme::of_kind(config.scheme);
    let prepared = prepare(&split, &index, &scheme)?;
    finish(
        out_dir,
        config,
        input_digest,
        Some(generation.summary),
        &split,
        prepared,
    )
}

/// Real-data run over labeled JSONL: 85 / 7.5 / 7.5 split, then the ladder
/// is subsampled from the training part.
pub fn run_real(input: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.check()?;
    let bytes = fs::read(input)?;
    let input_digest = FileDigest {
        path: input.to_string_lossy().into_owned(),
        sha256: sha256_hex(&bytes),
    };
    let scheme = LabelScheme::of_kind(config.scheme);
    let corpus = read_labeled(BufReader::new(bytes.as_slice()), &LabelScheme::typed())
        .or_else(|_| read_labeled(BufReader::new(bytes.as_slice()), &scheme))?;
    fs::create_dir_all(out_dir)?;

    let (split, _) = build_real_split(&corpus, &config.plan)?;
    let index = RecordIndex::from_labeled(&corpus);
    materialize(&split, &index, &out_dir.join("data"))?;
    let prepared = prepare(&split, &index, &scheme)?;
    finish(out_dir, config, input_digest, None, &split, prepared)
}

/// Per-type plans run on pseudo data from CoNLL-U; the others take labeled
/// JSONL.
pub fn run(input: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<PipelineOutput> {
    if config.plan.per_type {
        run_pseudo(input, out_dir, config)
    } else {
        run_real(input, out_dir, config)
    }
}
