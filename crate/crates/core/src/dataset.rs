//! Training-size ladders and fixed evaluation pools.
//!
//! Pseudo-data ladders sample `2^k` sentences per error type; real-data
//! ladders sample absolute sentence counts. Smaller training sets are always
//! prefixes of larger ones, and the dev/test pools never change with the
//! training size.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{ErrorType, LabelScheme, LabeledSentence, ParsedSentence};
use crate::error::{GedError, Result};
use crate::inject::{InjectionOutcome, SplitRole};
use crate::record::{write_records, SentenceRecord};
use crate::seeding::{keyed_rng, sha256_hex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    PseudoPow2,
    RealLadder,
    Custom,
}

impl std::str::FromStr for LadderKind {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudo_pow2" => Ok(LadderKind::PseudoPow2),
            "real_ladder" => Ok(LadderKind::RealLadder),
            "custom" => Ok(LadderKind::Custom),
            _ => Err(GedError::InvalidPlan(format!("unknown ladder kind {s:?}"))),
        }
    }
}

/// A ladder rung: an absolute count or the whole training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LadderSize {
    Count(usize),
    All,
}

impl fmt::Display for LadderSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LadderSize::Count(n) => write!(f, "{n}"),
            LadderSize::All => f.write_str("ALL"),
        }
    }
}

impl Serialize for LadderSize {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LadderSize::Count(n) => serializer.serialize_u64(*n as u64),
            LadderSize::All => serializer.serialize_str("ALL"),
        }
    }
}

impl<'de> Deserialize<'de> for LadderSize {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Count(n) => Ok(LadderSize::Count(n)),
            Raw::Text(s) if s == "ALL" => Ok(LadderSize::All),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("invalid ladder size {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub ladder_kind: LadderKind,
    pub sizes: Vec<LadderSize>,
    /// Sizes count sentences per error type rather than in total.
    pub per_type: bool,
    pub seed: u64,
}

pub const REAL_LADDER: [usize; 7] = [100, 300, 500, 1000, 3000, 5000, 10000];

impl SamplingPlan {
    /// `2^1 .. 2^10` sentences per error type.
    pub fn pseudo_pow2(seed: u64) -> Self {
        SamplingPlan {
            ladder_kind: LadderKind::PseudoPow2,
            sizes: (1..=10).map(|k| LadderSize::Count(1 << k)).collect(),
            per_type: true,
            seed,
        }
    }

    /// 100 .. 10000 sentences, then the full training set.
    pub fn real_ladder(seed: u64) -> Self {
        let mut sizes: Vec<_> = REAL_LADDER.iter().map(|&n| LadderSize::Count(n)).collect();
        sizes.push(LadderSize::All);
        SamplingPlan {
            ladder_kind: LadderKind::RealLadder,
            sizes,
            per_type: false,
            seed,
        }
    }

    pub fn custom(sizes: Vec<LadderSize>, per_type: bool, seed: u64) -> Result<Self> {
        let plan = SamplingPlan {
            ladder_kind: LadderKind::Custom,
            sizes,
            per_type,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn of_kind(kind: LadderKind, seed: u64) -> Result<Self> {
        match kind {
            LadderKind::PseudoPow2 => Ok(Self::pseudo_pow2(seed)),
            LadderKind::RealLadder => Ok(Self::real_ladder(seed)),
            LadderKind::Custom => Err(GedError::InvalidPlan("custom plans need explicit sizes".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.ladder_kind {
            LadderKind::PseudoPow2 if *self != Self::pseudo_pow2(self.seed) => {
                return Err(GedError::InvalidPlan("pseudo_pow2 must be 2^1..2^10 per type".into()))
            }
            LadderKind::RealLadder if *self != Self::real_ladder(self.seed) => {
                return Err(GedError::InvalidPlan(
                    "real_ladder must be 100..10000, ALL in total".into(),
                ))
            }
            _ => {}
        }
        if self.sizes.is_empty() {
            return Err(GedError::InvalidPlan("no ladder sizes".into()));
        }
        if self.sizes.contains(&LadderSize::Count(0)) {
            return Err(GedError::InvalidPlan("ladder sizes must be positive".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GedError::InvalidPlan("ladder sizes must be strictly increasing".into()));
        }
        Ok(())
    }

    fn largest_count(&self) -> Option<usize> {
        self.sizes.iter().rev().find_map(|s| match s {
            LadderSize::Count(n) => Some(*n),
            LadderSize::All => None,
        })
    }
}

/// Sizes of the fixed pseudo-data evaluation pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoPools {
    pub dev_per_type: usize,
    pub test_per_type: usize,
    pub error_free: usize,
}

impl Default for PseudoPools {
    fn default() -> Self {
        PseudoPools {
            dev_per_type: 200,
            test_per_type: 200,
            error_free: 200,
        }
    }
}

/// Which sentence ids land in which set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignments {
    /// Keyed by the resolved ladder size (per type for pseudo plans).
    pub train_sets: BTreeMap<usize, Vec<String>>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub plan: SamplingPlan,
    pub assignments: Assignments,
    pub manifest_hash: String,
}

/// On-disk manifest of a split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan: SamplingPlan,
    pub seed: u64,
    pub assignments: Assignments,
    pub manifest_hash: String,
}

impl DatasetSplit {
    fn new(plan: SamplingPlan, assignments: Assignments) -> Result<Self> {
        let canonical = serde_json::to_vec(&(&plan, &assignments))?;
        Ok(DatasetSplit {
            manifest_hash: sha256_hex(&canonical),
            plan,
            assignments,
        })
    }

    pub fn train_sets(&self) -> &BTreeMap<usize, Vec<String>> {
        &self.assignments.train_sets
    }

    pub fn dev(&self) -> &[String] {
        &self.assignments.dev
    }

    pub fn test(&self) -> &[String] {
        &self.assignments.test
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            plan: self.plan.clone(),
            seed: self.plan.seed,
            assignments: self.assignments.clone(),
            manifest_hash: self.manifest_hash.clone(),
        }
    }

    pub fn from_manifest(manifest: Manifest) -> Result<Self> {
        let split = DatasetSplit::new(manifest.plan, manifest.assignments)?;
        if split.manifest_hash != manifest.manifest_hash {
            return Err(GedError::Contract(
                "manifest hash does not match its assignments".into(),
            ));
        }
        Ok(split)
    }

    /// Checks disjointness of the pools and nestedness of the ladder.
    pub fn check_invariants(&self) -> Result<()> {
        let dev: HashSet<&String> = self.assignments.dev.iter().collect();
        let test: HashSet<&String> = self.assignments.test.iter().collect();
        if dev.len() != self.assignments.dev.len() || test.len() != self.assignments.test.len() {
            return Err(GedError::Contract("duplicate ids in an evaluation pool".into()));
        }
        if !dev.is_disjoint(&test) {
            return Err(GedError::Contract("dev and test overlap".into()));
        }
        let mut previous: Option<HashSet<&String>> = None;
        for (size, ids) in &self.assignments.train_sets {
            let set: HashSet<&String> = ids.iter().collect();
            if set.len() != ids.len() {
                return Err(GedError::Contract(format!("duplicate ids in train set {size}")));
            }
            if !set.is_disjoint(&dev) || !set.is_disjoint(&test) {
                return Err(GedError::Contract(format!("train set {size} overlaps dev/test")));
            }
            if let Some(prev) = &previous {
                if !prev.is_subset(&set) {
                    return Err(GedError::Contract(format!(
                        "train set {size} is not a superset of the previous"
                    )));
                }
            }
            previous = Some(set);
        }
        Ok(())
    }
}

/// Identifier-ordered, seeded shuffle.
fn shuffled<T: Clone>(mut items: Vec<T>, seed: u64, key: &str) -> Vec<T> {
    items.shuffle(&mut keyed_rng(seed, key));
    items
}

/// Builds the pseudo-data ladder with fixed dev/test pools.
///
/// For the verb-list rules, training sentences come only from the training
/// verbs and dev/test only from the test verbs. Error-free test sentences are
/// drawn from `error_free`, excluding every source sentence already used.
pub fn build_pseudo_split(
    outcomes: &[InjectionOutcome],
    error_free: &[ParsedSentence],
    plan: &SamplingPlan,
    pools: PseudoPools,
) -> Result<DatasetSplit> {
    plan.validate()?;
    if !plan.per_type || plan.sizes.contains(&LadderSize::All) {
        return Err(GedError::InvalidPlan("pseudo splits need per-type counts".into()));
    }
    let largest = plan.largest_count().unwrap_or(0);
    let eval_needed = pools.dev_per_type + pools.test_per_type;

    let mut by_type: BTreeMap<ErrorType, Vec<&InjectionOutcome>> = BTreeMap::new();
    for o in outcomes {
        by_type.entry(o.error_type).or_default().push(o);
    }

    let mut dev = Vec::new();
    let mut test = Vec::new();
    let mut train_by_type: Vec<Vec<String>> = Vec::new();
    let mut used_sources: HashSet<&str> = HashSet::new();

    for error_type in ErrorType::ALL {
        let mut candidates = by_type.remove(&error_type).unwrap_or_default();
        candidates.sort_by(|a, b| a.id().cmp(b.id()));
        let shortfall = |pool: &str, needed: usize| GedError::InsufficientMaterial {
            error_type: error_type.to_string(),
            pool: pool.to_string(),
            needed,
        };

        let (eval, train) = if error_type.uses_verb_lists() {
            let (eval, train): (Vec<_>, Vec<_>) = candidates
                .into_iter()
                .partition(|o| o.split_role == SplitRole::EvalPool);
            let eval = shuffled(eval, plan.seed, &format!("eval/{error_type}"));
            let train = shuffled(train, plan.seed, &format!("train/{error_type}"));
            if eval.len() < eval_needed {
                return Err(shortfall("eval_pool", eval_needed - eval.len()));
            }
            if train.len() < largest {
                return Err(shortfall("train_pool", largest - train.len()));
            }
            (eval[..eval_needed].to_vec(), train[..largest].to_vec())
        } else {
            let all = shuffled(candidates, plan.seed, &format!("pool/{error_type}"));
            if all.len() < eval_needed + largest {
                return Err(shortfall("outcome", eval_needed + largest - all.len()));
            }
            (
                all[..eval_needed].to_vec(),
                all[eval_needed..eval_needed + largest].to_vec(),
            )
        };

        for o in eval.iter().chain(&train) {
            used_sources.insert(o.source_id.as_str());
        }
        dev.extend(eval[..pools.dev_per_type].iter().map(|o| o.id().to_string()));
        test.extend(eval[pools.dev_per_type..].iter().map(|o| o.id().to_string()));
        train_by_type.push(train.iter().map(|o| o.id().to_string()).collect());
    }

    let mut clean: Vec<&ParsedSentence> = error_free
        .iter()
        .filter(|s| !used_sources.contains(s.id.as_str()))
        .collect();
    clean.sort_by(|a, b| a.id.cmp(&b.id));
    clean.dedup_by(|a, b| a.id == b.id);
    let clean = shuffled(clean, plan.seed, "error_free");
    if clean.len() < pools.error_free {
        return Err(GedError::InsufficientMaterial {
            error_type: "error-free".into(),
            pool: "error_free".into(),
            needed: pools.error_free - clean.len(),
        });
    }
    test.extend(clean[..pools.error_free].iter().map(|s| s.id.clone()));

    let train_sets = plan
        .sizes
        .iter()
        .filter_map(|s| match s {
            LadderSize::Count(n) => Some(*n),
            LadderSize::All => None,
        })
        .map(|n| {
            let ids = train_by_type.iter().flat_map(|ids| ids[..n].iter().cloned()).collect();
            (n, ids)
        })
        .collect();

    DatasetSplit::new(plan.clone(), Assignments { train_sets, dev, test })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealSplit {
    pub train: Vec<LabeledSentence>,
    pub dev: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
}

/// Sizes `(train, dev, test)` for an 85 / 7.5 / 7.5 split: train and dev are
/// rounded half-up, test takes the remainder.
pub fn real_split_sizes(n: usize) -> (usize, usize, usize) {
    let train = ((85 * n + 50) / 100).min(n);
    let dev = ((75 * n + 500) / 1000).min(n - train);
    (train, dev, n - train - dev)
}

/// Random 85 / 7.5 / 7.5 partition of a labeled corpus.
pub fn split_real(corpus: &[LabeledSentence], seed: u64) -> Result<RealSplit> {
    let n = corpus.len();
    if n < 3 {
        return Err(GedError::CorpusTooSmall(n));
    }
    let (n_train, n_dev, _) = real_split_sizes(n);
    let order = shuffled((0..n).collect::<Vec<_>>(), seed, "real-split");
    let pick = |range: std::ops::Range<usize>| order[range].iter().map(|&i| corpus[i].clone()).collect();
    Ok(RealSplit {
        train: pick(0..n_train),
        dev: pick(n_train..n_train + n_dev),
        test: pick(n_train + n_dev..n),
    })
}

/// Nested random subsets of `train`, one per ladder size.
pub fn subsample_ladder(train: &[String], plan: &SamplingPlan) -> Result<BTreeMap<usize, Vec<String>>> {
    plan.validate()?;
    if plan.ladder_kind == LadderKind::PseudoPow2 {
        return Err(GedError::InvalidPlan(
            "use build_pseudo_split for pseudo_pow2 plans".into(),
        ));
    }
    let order = shuffled(train.to_vec(), plan.seed, "ladder");
    let mut sets = BTreeMap::new();
    for size in &plan.sizes {
        let n = match *size {
            LadderSize::All => train.len(),
            LadderSize::Count(n) if n > train.len() => {
                return Err(GedError::LadderTooLarge {
                    size: n,
                    available: train.len(),
                })
            }
            LadderSize::Count(n) => n,
        };
        sets.insert(n, order[..n].to_vec());
    }
    Ok(sets)
}

/// Splits a real corpus and builds its ladder in one step.
pub fn build_real_split(corpus: &[LabeledSentence], plan: &SamplingPlan) -> Result<(DatasetSplit, RealSplit)> {
    let real = split_real(corpus, plan.seed)?;
    let train_ids: Vec<String> = real.train.iter().map(|s| s.id().to_string()).collect();
    let train_sets = subsample_ladder(&train_ids, plan)?;
    let ids = |v: &[LabeledSentence]| v.iter().map(|s| s.id().to_string()).collect();
    let split = DatasetSplit::new(
        plan.clone(),
        Assignments {
            train_sets,
            dev: ids(&real.dev),
            test: ids(&real.test),
        },
    )?;
    Ok((split, real))
}

/// Lookup from sentence id to its record, used to materialise a split.
#[derive(Debug, Default, Clone)]
pub struct RecordIndex {
    records: HashMap<String, SentenceRecord>,
}

impl RecordIndex {
    pub fn insert(&mut self, record: SentenceRecord) {
        self.records.insert(record.id.clone(), record);
    }

    pub fn from_pseudo(outcomes: &[InjectionOutcome], error_free: &[ParsedSentence]) -> Self {
        let mut index = RecordIndex::default();
        for s in error_free {
            index.insert(SentenceRecord::from_labeled(&LabeledSentence::correct(
                s.clone(),
                LabelScheme::typed(),
            )));
        }
        for o in outcomes {
            index.insert(SentenceRecord::from_outcome(o));
        }
        index
    }

    pub fn from_labeled(sentences: &[LabeledSentence]) -> Self {
        let mut index = RecordIndex::default();
        for s in sentences {
            index.insert(SentenceRecord::from_labeled(s));
        }
        index
    }

    pub fn get(&self, id: &str) -> Option<&SentenceRecord> {
        self.records.get(id)
    }

    pub fn select(&self, ids: &[String]) -> Result<Vec<SentenceRecord>> {
        ids.iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| GedError::Contract(format!("sentence {id} is not in the record index")))
            })
            .collect()
    }
}

pub fn train_file_name(size: usize) -> String {
    format!("train_{size}.jsonl")
}

/// Writes `manifest.json`, `dev.jsonl`, `test.jsonl` and one
/// `train_<size>.jsonl` per ladder rung into `dir`.
pub fn materialize(split: &DatasetSplit, index: &RecordIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let write = |name: &str, ids: &[String]| -> Result<()> {
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        write_records(&index.select(ids)?, &mut w)?;
        w.flush()?;
        Ok(())
    };
    write("dev.jsonl", split.dev())?;
    write("test.jsonl", split.test())?;
    for (size, ids) in split.train_sets() {
        write(&train_file_name(*size), ids)?;
    }
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &split.manifest())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inject::Injector;
    use crate::synthetic::SyntheticCorpus;

    fn small_pools() -> PseudoPools {
        PseudoPools {
            dev_per_type: 20,
            test_per_type: 20,
            error_free: 20,
        }
    }

    fn material(n: usize) -> (Vec<InjectionOutcome>, Vec<ParsedSentence>) {
        let corpus = SyntheticCorpus::new(11).generate(n);
        let outcomes = Injector::default().generate(&corpus, 3).unwrap().outcomes;
        (outcomes, corpus)
    }

    #[test]
    fn plans_match_their_kind() {
        let p = SamplingPlan::pseudo_pow2(1);
        assert_eq!(p.sizes.first(), Some(&LadderSize::Count(2)));
        assert_eq!(p.sizes.last(), Some(&LadderSize::Count(1024)));
        assert!(p.per_type);
        let r = SamplingPlan::real_ladder(1);
        assert_eq!(r.sizes.len(), 8);
        assert_eq!(r.sizes.last(), Some(&LadderSize::All));
        assert!(!r.per_type);
        assert!(SamplingPlan::custom(vec![LadderSize::Count(3), LadderSize::Count(3)], false, 0).is_err());
        assert!(SamplingPlan::custom(vec![LadderSize::All, LadderSize::Count(3)], false, 0).is_err());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"ALL\""));
        assert_eq!(serde_json::from_str::<SamplingPlan>(&json).unwrap(), r);
    }

    #[test]
    fn pseudo_split_shape() {
        let (outcomes, corpus) = material(1500);
        let plan = SamplingPlan::custom((1..=4).map(|k| LadderSize::Count(1 << k)).collect(), true, 9).unwrap();
        let split = build_pseudo_split(&outcomes, &corpus, &plan, small_pools()).unwrap();
        split.check_invariants().unwrap();
        assert_eq!(split.dev().len(), 100);
        assert_eq!(split.test().len(), 120);
        assert_eq!(split.train_sets()[&2].len(), 10);
        assert_eq!(split.train_sets()[&16].len(), 80);

        let again = build_pseudo_split(&outcomes, &corpus, &plan, small_pools()).unwrap();
        assert_eq!(split.manifest_hash, again.manifest_hash);
        let other_seed = SamplingPlan { seed: 10, ..plan };
        let different = build_pseudo_split(&outcomes, &corpus, &other_seed, small_pools()).unwrap();
        assert_ne!(split.manifest_hash, different.manifest_hash);
    }

    #[test]
    fn verb_list_types_respect_pools() {
        let (outcomes, corpus) = material(1500);
        let plan = SamplingPlan::custom(vec![LadderSize::Count(4), LadderSize::Count(32)], true, 2).unwrap();
        let split = build_pseudo_split(&outcomes, &corpus, &plan, small_pools()).unwrap();
        let by_id: HashMap<&str, &InjectionOutcome> = outcomes.iter().map(|o| (o.id(), o)).collect();
        for id in &split.train_sets()[&32] {
            let o = by_id[id.as_str()];
            if o.error_type.uses_verb_lists() {
                assert_eq!(o.split_role, SplitRole::TrainPool);
            }
        }
        for id in split.dev().iter().chain(split.test()) {
            if let Some(o) = by_id.get(id.as_str()) {
                if o.error_type.uses_verb_lists() {
                    assert_eq!(o.split_role, SplitRole::EvalPool);
                }
            }
        }
    }

    #[test]
    fn shortfall_names_the_type() {
        let (outcomes, corpus) = material(300);
        let err = build_pseudo_split(
            &outcomes,
            &corpus,
            &SamplingPlan::pseudo_pow2(1),
            PseudoPools::default(),
        )
        .unwrap_err();
        assert!(matches!(err, GedError::InsufficientMaterial { .. }), "{err}");
        assert!(err.to_string().contains("PrepInfinitive"), "{err}");
    }

    #[test]
    fn real_split_sizes_follow_rounding() {
        assert_eq!(real_split_sizes(1000), (850, 75, 75));
        assert_eq!(real_split_sizes(14334), (12184, 1075, 1075));
        for n in 3..2000 {
            let (a, b, c) = real_split_sizes(n);
            assert_eq!(a + b + c, n);
            // independent oracle: f64 rounding, clamped
            let oracle_train = ((0.85 * n as f64) + 1e-9).round() as usize;
            assert!(a.abs_diff(oracle_train.min(n)) <= 1, "n={n}");
        }
    }

    #[test]
    fn split_real_partitions() {
        let corpus: Vec<LabeledSentence> = SyntheticCorpus::new(4)
            .generate(1000)
            .into_iter()
            .map(|s| LabeledSentence::correct(s, LabelScheme::binary()))
            .collect();
        let split = split_real(&corpus, 5).unwrap();
        assert_eq!((split.train.len(), split.dev.len(), split.test.len()), (850, 75, 75));
        let mut ids: Vec<&str> = split
            .train
            .iter()
            .chain(&split.dev)
            .chain(&split.test)
            .map(|s| s.id())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 1000);
        assert_eq!(split, split_real(&corpus, 5).unwrap());
        assert!(matches!(split_real(&corpus[..2], 5), Err(GedError::CorpusTooSmall(2))));
    }

    #[test]
    fn real_ladder_resolves_all() {
        let train: Vec<String> = (0..12163).map(|i| format!("s{i}")).collect();
        let sets = subsample_ladder(&train, &SamplingPlan::real_ladder(0)).unwrap();
        assert_eq!(sets.len(), 8);
        assert_eq!(sets.keys().last(), Some(&12163));

        let one = SamplingPlan::custom(vec![LadderSize::Count(1)], false, 0).unwrap();
        assert_eq!(subsample_ladder(&train[..1], &one).unwrap()[&1], ["s0"]);

        let too_big = SamplingPlan::custom(vec![LadderSize::Count(5)], false, 0).unwrap();
        assert!(matches!(
            subsample_ladder(&train[..3], &too_big),
            Err(GedError::LadderTooLarge { size: 5, available: 3 })
        ));
    }

    #[test]
    fn ladders_are_nested_for_many_seeds() {
        let train: Vec<String> = (0..700).map(|i| format!("s{i}")).collect();
        let sizes = [5, 17, 60, 200, 699].map(LadderSize::Count).to_vec();
        for seed in 0..100 {
            let plan = SamplingPlan::custom(sizes.clone(), false, seed).unwrap();
            let sets = subsample_ladder(&train, &plan).unwrap();
            let ordered: Vec<&Vec<String>> = sets.values().collect();
            for (i, small) in ordered.iter().enumerate() {
                for large in &ordered[i..] {
                    for id in small.iter() {
                        assert!(large.contains(id), "seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn manifest_round_trip_checks_hash() {
        let (outcomes, corpus) = material(1500);
        let plan = SamplingPlan::custom(vec![LadderSize::Count(2)], true, 1).unwrap();
        let split = build_pseudo_split(&outcomes, &corpus, &plan, small_pools()).unwrap();
        let manifest = split.manifest();
        assert_eq!(DatasetSplit::from_manifest(manifest.clone()).unwrap(), split);
        let mut tampered = manifest;
        tampered.assignments.dev.pop();
        assert!(DatasetSplit::from_manifest(tampered).is_err());
    }
}
