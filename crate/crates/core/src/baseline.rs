//! Averaged-perceptron token classifier over window features.
//!
//! A non-neural reference detector: each token is labeled independently from
//! sparse indicator features of a five-token window. It is not meant to match
//! a pretrained-encoder detector, only to give the harness a detector that
//! trains and predicts end to end.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelScheme, LabeledSentence, ParsedSentence};
use crate::error::{GedError, Result};
use crate::seeding::keyed_rng;

const WINDOW: isize = 2;

fn column<'a>(sentence: &'a ParsedSentence, i: isize, f: fn(&'a crate::corpus::Token) -> &'a str) -> String {
    if i < 0 {
        "<s>".to_string()
    } else if i as usize >= sentence.len() {
        "</s>".to_string()
    } else {
        f(&sentence.tokens[i as usize]).to_lowercase()
    }
}

/// Indicator features of the token at 0-based `position`, in a fixed order.
pub fn features(sentence: &ParsedSentence, position: usize) -> Vec<String> {
    let i = position as isize;
    let form = |o: isize| column(sentence, i + o, |t| &t.form);
    let lemma = |o: isize| column(sentence, i + o, |t| &t.lemma);
    let upos = |o: isize| column(sentence, i + o, |t| &t.upos);

    let mut out = Vec::with_capacity(21);
    out.push("bias".to_string());
    for o in -WINDOW..=WINDOW {
        out.push(format!("w{o}={}", form(o)));
        out.push(format!("l{o}={}", lemma(o)));
        out.push(format!("p{o}={}", upos(o)));
    }
    out.push(format!("wb-1,0={}|{}", form(-1), form(0)));
    out.push(format!("wb0,1={}|{}", form(0), form(1)));
    out.push(format!("pb-1,0={}|{}", upos(-1), upos(0)));
    out.push(format!("pb0,1={}|{}", upos(0), upos(1)));
    if position == 0 {
        out.push("first".to_string());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub seed: u64,
    pub n_sentences: usize,
}

/// Per-feature label weights. Prediction is the arg-max label; ties go to
/// the earliest label of the scheme, so an empty model predicts `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub scheme: LabelScheme,
    pub weights: BTreeMap<String, Vec<f64>>,
    pub metadata: TrainingMetadata,
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl LinearModel {
    pub fn zero(scheme: LabelScheme) -> Self {
        LinearModel {
            scheme,
            weights: BTreeMap::new(),
            metadata: TrainingMetadata {
                epochs: 0,
                seed: 0,
                n_sentences: 0,
            },
        }
    }

    pub fn scores(&self, sentence: &ParsedSentence, position: usize) -> Vec<f64> {
        let mut scores = vec![0.0; self.scheme.len()];
        for f in features(sentence, position) {
            if let Some(w) = self.weights.get(&f) {
                for (s, w) in scores.iter_mut().zip(w) {
                    *s += w;
                }
            }
        }
        scores
    }

    pub fn predict(&self, sentence: &ParsedSentence) -> LabeledSentence {
        let labels = (0..sentence.len())
            .map(|i| self.scheme.labels()[argmax(&self.scores(sentence, i))])
            .collect();
        LabeledSentence {
            sentence: sentence.clone(),
            labels,
            scheme: self.scheme.clone(),
        }
    }
}

pub fn predict(model: &LinearModel, sentence: &ParsedSentence) -> LabeledSentence {
    model.predict(sentence)
}

/// Running state of averaged-perceptron training with lazy averaging.
struct Perceptron {
    n_labels: usize,
    weights: Vec<f64>,
    totals: Vec<f64>,
    stamps: Vec<u64>,
    step: u64,
}

impl Perceptron {
    fn new(n_features: usize, n_labels: usize) -> Self {
        let cells = n_features * n_labels;
        Perceptron {
            n_labels,
            weights: vec![0.0; cells],
            totals: vec![0.0; cells],
            stamps: vec![0; cells],
            step: 0,
        }
    }

    fn predict(&self, feats: &[usize]) -> usize {
        let mut scores = vec![0.0; self.n_labels];
        for &f in feats {
            let row = &self.weights[f * self.n_labels..(f + 1) * self.n_labels];
            for (s, w) in scores.iter_mut().zip(row) {
                *s += w;
            }
        }
        argmax(&scores)
    }

    fn bump(&mut self, feature: usize, label: usize, delta: f64) {
        let cell = feature * self.n_labels + label;
        self.totals[cell] += (self.step - self.stamps[cell]) as f64 * self.weights[cell];
        self.stamps[cell] = self.step;
        self.weights[cell] += delta;
    }

    fn learn(&mut self, feats: &[usize], gold: usize) {
        self.step += 1;
        let guess = self.predict(feats);
        if guess != gold {
            for &f in feats {
                self.bump(f, gold, 1.0);
                self.bump(f, guess, -1.0);
            }
        }
    }

    fn averaged(&self, names: &[String]) -> BTreeMap<String, Vec<f64>> {
        let step = self.step.max(1) as f64;
        let mut out = BTreeMap::new();
        for (f, name) in names.iter().enumerate() {
            let row: Vec<f64> = (0..self.n_labels)
                .map(|l| {
                    let cell = f * self.n_labels + l;
                    let total = self.totals[cell] + (self.step - self.stamps[cell]) as f64 * self.weights[cell];
                    total / step
                })
                .collect();
            if row.iter().any(|&w| w != 0.0) {
                out.insert(name.clone(), row);
            }
        }
        out
    }
}

struct Instance {
    features: Vec<usize>,
    gold: usize,
}

/// Trains for `epochs` passes and returns the averaged model after each one.
/// Sentence order is reshuffled every epoch from `seed`.
pub fn train_epochs(data: &[LabeledSentence], epochs: usize, seed: u64) -> Result<Vec<LinearModel>> {
    let first = data.first().ok_or(GedError::EmptyTrainingData)?;
    let scheme = first.scheme.clone();
    if data.iter().any(|s| s.scheme != scheme) {
        return Err(GedError::MixedSchemes);
    }

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let sentences: Vec<Vec<Instance>> = data
        .iter()
        .map(|s| {
            (0..s.sentence.len())
                .map(|i| {
                    let features = features(&s.sentence, i)
                        .into_iter()
                        .map(|f| {
                            *ids.entry(f).or_insert_with_key(|k| {
                                names.push(k.clone());
                                names.len() - 1
                            })
                        })
                        .collect();
                    let gold = scheme.index_of(s.labels[i]).expect("labels validated against scheme");
                    Instance { features, gold }
                })
                .collect()
        })
        .collect();

    let mut perceptron = Perceptron::new(names.len(), scheme.len());
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut snapshots = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        order.shuffle(&mut keyed_rng(seed, &format!("epoch-{epoch}")));
        for &i in &order {
            for inst in &sentences[i] {
                perceptron.learn(&inst.features, inst.gold);
            }
        }
        snapshots.push(LinearModel {
            scheme: scheme.clone(),
            weights: perceptron.averaged(&names),
            metadata: TrainingMetadata {
                epochs: epoch,
                seed,
                n_sentences: data.len(),
            },
        });
    }
    Ok(snapshots)
}

/// Trains for `epochs` passes and returns the final averaged model.
pub fn train(data: &[LabeledSentence], epochs: usize, seed: u64) -> Result<LinearModel> {
    let mut snapshots = train_epochs(data, epochs.max(1), seed)?;
    Ok(snapshots.pop().expect("at least one epoch"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ErrorType, Label, Token};

    fn sentence(id: &str, words: &[(&str, &str)]) -> ParsedSentence {
        ParsedSentence {
            id: id.into(),
            tokens: words
                .iter()
                .enumerate()
                .map(|(i, (form, upos))| Token {
                    index: i + 1,
                    form: form.to_string(),
                    lemma: form.to_lowercase(),
                    upos: upos.to_string(),
                    head: if i == 0 { 0 } else { 1 },
                    deprel: if i == 0 { "root".into() } else { "dep".into() },
                })
                .collect(),
            source: "t".into(),
        }
    }

    #[test]
    fn features_are_deterministic_and_padded() {
        let s = sentence("a", &[("We", "PRON"), ("agree", "VERB")]);
        let f = features(&s, 0);
        assert_eq!(f, features(&s, 0));
        assert!(f.contains(&"w-1=<s>".to_string()));
        assert!(f.contains(&"w2=</s>".to_string()));
        assert!(f.contains(&"first".to_string()));
        assert!(!features(&s, 1).contains(&"first".to_string()));
        assert!(features(&s, 1).contains(&"pb-1,0=pron|verb".to_string()));
    }

    #[test]
    fn zero_model_predicts_c() {
        let s = sentence("a", &[("x", "X"), ("y", "Y"), ("z", "Z")]);
        let p = LinearModel::zero(LabelScheme::typed()).predict(&s);
        assert_eq!(p.labels, vec![Label::Correct; 3]);
        assert_eq!(p.labels.len(), s.len());
    }

    #[test]
    fn memorises_all_correct_sentence() {
        let s = sentence("a", &[("The", "DET"), ("dog", "NOUN"), ("barks", "VERB")]);
        let data = vec![LabeledSentence::correct(s.clone(), LabelScheme::binary())];
        let model = train(&data, 1, 0).unwrap();
        assert_eq!(model.predict(&s).labels, vec![Label::Correct; 3]);
    }

    #[test]
    fn empty_and_mixed_data_fail() {
        assert!(matches!(train(&[], 3, 0), Err(GedError::EmptyTrainingData)));
        let s = sentence("a", &[("x", "X")]);
        let data = vec![
            LabeledSentence::correct(s.clone(), LabelScheme::binary()),
            LabeledSentence::correct(s, LabelScheme::typed()),
        ];
        assert!(matches!(train(&data, 3, 0), Err(GedError::MixedSchemes)));
    }

    fn separable(n: usize) -> Vec<LabeledSentence> {
        // "c*" words are always correct, "e*" words always erroneous
        (0..n)
            .map(|i| {
                let words: Vec<(String, bool)> = (0..6)
                    .map(|j| {
                        let err = (i + j) % 4 == 0;
                        let w = if err {
                            format!("e{}", (i * 7 + j) % 40)
                        } else {
                            format!("c{}", (i * 3 + j) % 40)
                        };
                        (w, err)
                    })
                    .collect();
                let pairs: Vec<(&str, &str)> = words.iter().map(|(w, _)| (w.as_str(), "X")).collect();
                let labels = words
                    .iter()
                    .map(|(_, e)| if *e { Label::Erroneous } else { Label::Correct })
                    .collect();
                LabeledSentence::new(sentence(&format!("s{i}"), &pairs), labels, LabelScheme::binary()).unwrap()
            })
            .collect()
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = separable(200);
        let snapshots = train_epochs(&data, 10, 3).unwrap();
        let perfect = snapshots
            .iter()
            .any(|m| data.iter().all(|s| m.predict(&s.sentence).labels == s.labels));
        assert!(perfect);
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable(50);
        let a = train(&data, 3, 8).unwrap();
        let b = train(&data, 3, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn memorised_inserted_preposition_is_flagged() {
        let tvp = Label::Typed(ErrorType::TransVerbPrep);
        let s = sentence(
            "a",
            &[
                ("We", "PRON"),
                ("discussed", "VERB"),
                ("about", "ADP"),
                ("the", "DET"),
                ("matter", "NOUN"),
            ],
        );
        let mut labels = vec![Label::Correct; 5];
        labels[2] = tvp;
        let data = vec![LabeledSentence::new(s.clone(), labels.clone(), LabelScheme::typed()).unwrap()];
        let model = train(&data, 10, 1).unwrap();
        assert_eq!(model.predict(&s).labels[2], tvp);
    }
}
