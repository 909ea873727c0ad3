//! Token-level scoring and multi-seed aggregation.
//!
//! A token counts as a true positive when prediction and gold carry the same
//! non-`C` label. A wrong-type hit costs one false positive (for the
//! predicted label) and one false negative (for the gold label).

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabelScheme, LabeledSentence};
use crate::error::{GedError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub label: Label,
    #[serde(flatten)]
    pub counts: Counts,
}

/// Confusion counts per error label (scheme order, `C` excluded) plus micro
/// totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub scheme: LabelScheme,
    pub n_sentences: usize,
    pub per_label: Vec<LabelCounts>,
    pub micro: Counts,
}

impl ConfusionCounts {
    pub fn empty(scheme: &LabelScheme) -> Self {
        ConfusionCounts {
            scheme: scheme.clone(),
            n_sentences: 0,
            per_label: scheme
                .error_labels()
                .iter()
                .map(|&label| LabelCounts {
                    label,
                    counts: Counts::default(),
                })
                .collect(),
            micro: Counts::default(),
        }
    }

    pub fn get(&self, label: Label) -> Option<Counts> {
        self.per_label.iter().find(|c| c.label == label).map(|c| c.counts)
    }

    fn slot(&mut self, label: Label) -> &mut Counts {
        let i = self
            .per_label
            .iter()
            .position(|c| c.label == label)
            .expect("label checked against scheme");
        &mut self.per_label[i].counts
    }

    /// Tallies one token.
    pub fn record(&mut self, predicted: Label, gold: Label) {
        if predicted == gold {
            if !gold.is_correct() {
                self.slot(gold).tp += 1;
                self.micro.tp += 1;
            }
            return;
        }
        if !predicted.is_correct() {
            self.slot(predicted).fp += 1;
            self.micro.fp += 1;
        }
        if !gold.is_correct() {
            self.slot(gold).fn_ += 1;
            self.micro.fn_ += 1;
        }
    }

    /// Adds another set of counts over the same scheme.
    pub fn merge(&mut self, other: &ConfusionCounts) -> Result<()> {
        if other.scheme != self.scheme {
            return Err(GedError::MixedSchemes);
        }
        self.n_sentences += other.n_sentences;
        for (mine, theirs) in self.per_label.iter_mut().zip(&other.per_label) {
            mine.counts.add(theirs.counts);
        }
        self.micro.add(other.micro);
        Ok(())
    }
}

/// Counts token-level hits between predictions and gold, pairing sentences
/// by id.
pub fn score(pred: &[LabeledSentence], gold: &[LabeledSentence]) -> Result<ConfusionCounts> {
    let misaligned = |id: &str, reason: &str| GedError::Misaligned {
        id: id.to_string(),
        reason: reason.to_string(),
    };
    let scheme = match gold.first().or(pred.first()) {
        Some(s) => s.scheme.clone(),
        None => return Ok(ConfusionCounts::empty(&LabelScheme::typed())),
    };

    let mut by_id: HashMap<&str, &LabeledSentence> = HashMap::with_capacity(pred.len());
    for p in pred {
        if by_id.insert(p.id(), p).is_some() {
            return Err(misaligned(p.id(), "duplicate prediction id"));
        }
    }
    let mut seen = HashSet::with_capacity(gold.len());
    let mut counts = ConfusionCounts::empty(&scheme);
    for g in gold {
        if !seen.insert(g.id()) {
            return Err(misaligned(g.id(), "duplicate gold id"));
        }
        let p = by_id.get(g.id()).ok_or_else(|| misaligned(g.id(), "no prediction"))?;
        if g.scheme != scheme || p.scheme != scheme {
            return Err(misaligned(g.id(), "label schemes differ"));
        }
        if p.labels.len() != g.labels.len() {
            return Err(misaligned(g.id(), "token counts differ"));
        }
        for (&pl, &gl) in p.labels.iter().zip(&g.labels) {
            counts.record(pl, gl);
        }
        counts.n_sentences += 1;
    }
    if let Some(extra) = pred.iter().find(|p| !seen.contains(p.id())) {
        return Err(misaligned(extra.id(), "prediction without gold"));
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Zero denominators give zero.
    pub fn from_counts(c: Counts) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    /// `None` for the micro average.
    pub label: Option<Label>,
    #[serde(flatten)]
    pub prf: Prf,
    #[serde(flatten)]
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheme: LabelScheme,
    pub n_sentences: usize,
    pub per_label: Vec<LabelMetrics>,
    pub micro: LabelMetrics,
}

impl MetricsReport {
    pub fn label(&self, label: Label) -> Option<&LabelMetrics> {
        self.per_label.iter().find(|m| m.label == Some(label))
    }
}

pub fn compute_prf(counts: &ConfusionCounts) -> MetricsReport {
    MetricsReport {
        scheme: counts.scheme.clone(),
        n_sentences: counts.n_sentences,
        per_label: counts
            .per_label
            .iter()
            .map(|c| LabelMetrics {
                label: Some(c.label),
                prf: Prf::from_counts(c.counts),
                counts: c.counts,
            })
            .collect(),
        micro: LabelMetrics {
            label: None,
            prf: Prf::from_counts(counts.micro),
            counts: counts.micro,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAggregate {
    pub label: Option<Label>,
    pub precision: Stat,
    pub recall: Stat,
    pub f1: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: Vec<MetricsReport>,
    pub per_label: Vec<LabelAggregate>,
    pub micro: LabelAggregate,
}

impl RunAggregate {
    pub fn label(&self, label: Label) -> Option<&LabelAggregate> {
        self.per_label.iter().find(|m| m.label == Some(label))
    }
}

fn aggregate_metric(label: Option<Label>, metrics: &[&LabelMetrics]) -> LabelAggregate {
    let column = |f: fn(&Prf) -> f64| metrics.iter().map(|m| f(&m.prf)).collect::<Vec<_>>();
    LabelAggregate {
        label,
        precision: Stat::of(&column(|p| p.precision)),
        recall: Stat::of(&column(|p| p.recall)),
        f1: Stat::of(&column(|p| p.f1)),
    }
}

/// Mean and sample standard deviation of every metric across runs.
pub fn aggregate(runs: &[MetricsReport]) -> Result<RunAggregate> {
    let first = runs.first().ok_or(GedError::EmptyRuns)?;
    if runs.iter().any(|r| r.scheme != first.scheme) {
        return Err(GedError::MixedSchemes);
    }
    let per_label = first
        .per_label
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let column: Vec<&LabelMetrics> = runs.iter().map(|r| &r.per_label[i]).collect();
            aggregate_metric(m.label, &column)
        })
        .collect();
    let micro: Vec<&LabelMetrics> = runs.iter().map(|r| &r.micro).collect();
    Ok(RunAggregate {
        runs: runs.to_vec(),
        per_label,
        micro: aggregate_metric(None, &micro),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub train_size: usize,
    pub aggregate: RunAggregate,
}

/// One CSV row of a curve file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub train_size: usize,
    pub label: String,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

pub const CURVE_HEADER: [&str; 8] = [
    "train_size",
    "label",
    "precision_mean",
    "precision_std",
    "recall_mean",
    "recall_std",
    "f1_mean",
    "f1_std",
];

impl CurveRow {
    fn new(train_size: usize, a: &LabelAggregate) -> Self {
        CurveRow {
            train_size,
            label: a.label.map_or_else(|| "micro".to_string(), |l| l.to_string()),
            precision_mean: a.precision.mean,
            precision_std: a.precision.std,
            recall_mean: a.recall.mean,
            recall_std: a.recall.std,
            f1_mean: a.f1.mean,
            f1_std: a.f1.std,
        }
    }
}

/// Rows for each point: every error label in scheme order, then `micro`.
pub fn curve_rows(points: &[CurvePoint]) -> Vec<CurveRow> {
    points
        .iter()
        .flat_map(|p| {
            p.aggregate
                .per_label
                .iter()
                .chain(std::iter::once(&p.aggregate.micro))
                .map(move |a| CurveRow::new(p.train_size, a))
        })
        .collect()
}

/// Writes the curve CSV. Points must be sorted by training size.
pub fn emit_curve<W: Write>(points: &[CurvePoint], writer: W) -> Result<()> {
    if points.windows(2).any(|w| w[0].train_size > w[1].train_size) {
        return Err(GedError::UnsortedCurve);
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CURVE_HEADER)?;
    for row in curve_rows(points) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve<R: Read>(reader: R) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != CURVE_HEADER {
        return Err(GedError::Format {
            line: 1,
            message: format!("unexpected curve header {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(GedError::from)).collect()
}

/// Epoch with the highest micro F1; the earliest wins ties.
pub fn select_best_epoch(dev_reports: &[(usize, MetricsReport)]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (epoch, report) in dev_reports {
        let f1 = report.micro.prf.f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((*epoch, f1));
        }
    }
    best.map(|(epoch, _)| epoch).ok_or(GedError::NoEpochs)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::corpus::{ErrorType, ParsedSentence, Token};

    fn sentence(id: &str, labels: &[Label], scheme: &LabelScheme) -> LabeledSentence {
        let tokens = (0..labels.len())
            .map(|i| Token {
                index: i + 1,
                form: format!("w{i}"),
                lemma: format!("w{i}"),
                upos: "X".into(),
                head: if i == 0 { 0 } else { 1 },
                deprel: if i == 0 { "root".into() } else { "dep".into() },
            })
            .collect();
        LabeledSentence::new(
            ParsedSentence {
                id: id.into(),
                tokens,
                source: "t".into(),
            },
            labels.to_vec(),
            scheme.clone(),
        )
        .unwrap()
    }

    const C: Label = Label::Correct;
    const E: Label = Label::Erroneous;

    fn report_with_f1(f1s: &[f64]) -> Vec<(usize, MetricsReport)> {
        f1s.iter()
            .enumerate()
            .map(|(i, &f1)| {
                let mut r = compute_prf(&ConfusionCounts::empty(&LabelScheme::binary()));
                r.micro.prf.f1 = f1;
                (i + 1, r)
            })
            .collect()
    }

    #[test]
    fn direct_count() {
        let b = LabelScheme::binary();
        let counts = score(&[sentence("a", &[C, E, E], &b)], &[sentence("a", &[C, E, C], &b)]).unwrap();
        assert_eq!(counts.micro, Counts { tp: 1, fp: 1, fn_: 0 });
        let r = compute_prf(&counts);
        assert_eq!(r.micro.prf.precision, 0.5);
        assert_eq!(r.micro.prf.recall, 1.0);
        assert!((r.micro.prf.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_has_no_errors() {
        let t = LabelScheme::typed();
        let ps = Label::Typed(ErrorType::PrepSubject);
        let gold = vec![sentence("a", &[ps, C, C], &t), sentence("b", &[C, C], &t)];
        let counts = score(&gold, &gold).unwrap();
        assert_eq!(counts.micro, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(counts.n_sentences, 2);
    }

    #[test]
    fn wrong_type_costs_fp_and_fn() {
        let t = LabelScheme::typed();
        let a = Label::Typed(ErrorType::PrepSubject);
        let b = Label::Typed(ErrorType::TransVerbPrep);
        let counts = score(&[sentence("x", &[a], &t)], &[sentence("x", &[b], &t)]).unwrap();
        assert_eq!(counts.get(a).unwrap(), Counts { tp: 0, fp: 1, fn_: 0 });
        assert_eq!(counts.get(b).unwrap(), Counts { tp: 0, fp: 0, fn_: 1 });
        assert_eq!(counts.micro, Counts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn misalignment_names_id() {
        let b = LabelScheme::binary();
        let err = score(&[sentence("a", &[C, C], &b)], &[sentence("a", &[C], &b)]).unwrap_err();
        assert!(matches!(err, GedError::Misaligned { ref id, .. } if id == "a"));
        let err = score(&[sentence("a", &[C], &b)], &[sentence("z", &[C], &b)]).unwrap_err();
        assert!(matches!(err, GedError::Misaligned { ref id, .. } if id == "z"));
    }

    #[test]
    fn prf_closed_forms() {
        let r = Prf::from_counts(Counts { tp: 0, fp: 0, fn_: 0 });
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r = Prf::from_counts(Counts {
            tp: 100,
            fp: 25,
            fn_: 100,
        });
        assert_eq!(r.precision, 0.8);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 0.8 / 1.3).abs() < 1e-12);
        assert!((r.f1 - 0.615).abs() < 5e-4);
    }

    #[test]
    fn aggregate_single_and_three() {
        let base = compute_prf(&ConfusionCounts::empty(&LabelScheme::binary()));
        let one = aggregate(std::slice::from_ref(&base)).unwrap();
        assert_eq!(one.micro.f1.std, 0.0);
        assert_eq!(one.micro.f1.mean, base.micro.prf.f1);

        let runs: Vec<_> = [0.2, 0.4, 0.6]
            .iter()
            .map(|&f| {
                let mut r = base.clone();
                r.micro.prf.f1 = f;
                r
            })
            .collect();
        let agg = aggregate(&runs).unwrap();
        assert!((agg.micro.f1.mean - 0.4).abs() < 1e-12);
        assert!((agg.micro.f1.std - 0.2).abs() < 1e-12);
        assert!(matches!(aggregate(&[]), Err(GedError::EmptyRuns)));
    }

    #[test]
    fn best_epoch_rules() {
        assert_eq!(select_best_epoch(&report_with_f1(&[0.1, 0.5, 0.3])).unwrap(), 2);
        assert_eq!(select_best_epoch(&report_with_f1(&[0.4, 0.4, 0.4])).unwrap(), 1);
        assert_eq!(select_best_epoch(&report_with_f1(&[0.7])).unwrap(), 1);
        assert!(matches!(select_best_epoch(&[]), Err(GedError::NoEpochs)));
    }

    fn point(size: usize, scheme: &LabelScheme, salt: f64) -> CurvePoint {
        let mut r = compute_prf(&ConfusionCounts::empty(scheme));
        r.micro.prf.precision = 0.1 + salt;
        r.per_label[0].prf.recall = 1.0 / 3.0 + salt;
        let mut r2 = r.clone();
        r2.micro.prf.f1 = 0.123456789 * salt;
        CurvePoint {
            train_size: size,
            aggregate: aggregate(&[r, r2]).unwrap(),
        }
    }

    #[test]
    fn curve_csv_shape_and_round_trip() {
        let mut buf = Vec::new();
        emit_curve(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "train_size,label,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std\n"
        );

        let b = LabelScheme::binary();
        let points = vec![point(2, &b, 0.01), point(4, &b, 0.2)];
        let mut buf = Vec::new();
        emit_curve(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 2);
        let rows = read_curve(buf.as_slice()).unwrap();
        assert_eq!(rows, curve_rows(&points));
        assert_eq!(rows[0].label, "E");
        assert_eq!(rows[1].label, "micro");

        let unsorted = vec![point(4, &b, 0.0), point(2, &b, 0.0)];
        assert!(matches!(
            emit_curve(&unsorted, Vec::new()),
            Err(GedError::UnsortedCurve)
        ));
    }

    /// Reference tally written independently of `ConfusionCounts::record`.
    fn brute_force(pairs: &[(Label, Label)], scheme: &LabelScheme) -> Vec<(Label, u64, u64, u64)> {
        scheme
            .error_labels()
            .iter()
            .map(|&l| {
                let tp = pairs.iter().filter(|(p, g)| *p == l && *g == l).count() as u64;
                let fp = pairs.iter().filter(|(p, g)| *p == l && *g != l).count() as u64;
                let fn_ = pairs.iter().filter(|(p, g)| *g == l && *p != l).count() as u64;
                (l, tp, fp, fn_)
            })
            .collect()
    }

    #[test]
    fn random_pairs_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for scheme in [LabelScheme::binary(), LabelScheme::typed()] {
            let labels = scheme.labels().to_vec();
            let mut pred = Vec::new();
            let mut gold = Vec::new();
            let mut pairs = Vec::new();
            for i in 0..1000 {
                let n = rng.gen_range(1..8);
                let draw = |rng: &mut ChaCha8Rng| {
                    // skew towards C like real data
                    if rng.gen_bool(0.6) {
                        Label::Correct
                    } else {
                        labels[rng.gen_range(0..labels.len())]
                    }
                };
                let p: Vec<Label> = (0..n).map(|_| draw(&mut rng)).collect();
                let g: Vec<Label> = (0..n).map(|_| draw(&mut rng)).collect();
                pairs.extend(p.iter().copied().zip(g.iter().copied()));
                pred.push(sentence(&format!("s{i}"), &p, &scheme));
                gold.push(sentence(&format!("s{i}"), &g, &scheme));
            }
            let counts = score(&pred, &gold).unwrap();
            for (label, tp, fp, fn_) in brute_force(&pairs, &scheme) {
                assert_eq!(counts.get(label).unwrap(), Counts { tp, fp, fn_ });
            }
            let gold_pos = pairs.iter().filter(|(_, g)| !g.is_correct()).count() as u64;
            let pred_pos = pairs.iter().filter(|(p, _)| !p.is_correct()).count() as u64;
            assert_eq!(counts.micro.tp + counts.micro.fn_, gold_pos);
            assert_eq!(counts.micro.tp + counts.micro.fp, pred_pos);

            pred.reverse();
            assert_eq!(score(&pred, &gold).unwrap(), counts);
        }
    }

    #[test]
    fn aggregate_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = compute_prf(&ConfusionCounts::empty(&LabelScheme::typed()));
        for _ in 0..100 {
            let n = rng.gen_range(1..8);
            let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let runs: Vec<_> = values
                .iter()
                .map(|&v| {
                    let mut r = base.clone();
                    r.per_label[2].prf.recall = v;
                    r
                })
                .collect();
            let agg = aggregate(&runs).unwrap();
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let got = agg.per_label[2].recall;
            assert!((got.mean - mean).abs() < 1e-12);
            assert!((got.std - var.sqrt()).abs() < 1e-12);
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(got.mean >= lo - 1e-12 && got.mean <= hi + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn prf_is_bounded_harmonic_mean(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            let r = Prf::from_counts(Counts { tp, fp, fn_ });
            for v in [r.precision, r.recall, r.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(r.f1 <= 2.0 * r.precision.min(r.recall) + 1e-12);
            if r.precision == r.recall {
                prop_assert!((r.f1 - r.precision).abs() < 1e-12);
            }
        }
    }
}
