//! Rule-based pseudo-error injection over dependency parses.
//!
//! Each rule locates sites in a native sentence and perturbs exactly one word
//! (insertion, deletion or replacement). The output sentence carries exactly
//! one non-`C` label: the inserted or replaced token, or the verb when a word
//! was deleted.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ErrorType, Label, LabelScheme, LabeledSentence, ParsedSentence, Token};
use crate::error::{GedError, Result};
use crate::seeding::keyed_rng;

pub const MIN_TOKENS: usize = 4;
pub const MAX_TOKENS: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepositionInventory {
    /// Prepositions drawn uniformly for insertions.
    pub addition_replacement: Vec<String>,
    /// The single word that replaces an infinitival `to`.
    pub infinitive_replacement: String,
}

impl Default for PrepositionInventory {
    fn default() -> Self {
        PrepositionInventory {
            addition_replacement: ["at", "about", "to", "in", "with"].map(String::from).to_vec(),
            infinitive_replacement: "for".to_string(),
        }
    }
}

/// Which side of the train/evaluation verb split an anchor verb falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRole {
    TrainPool,
    EvalPool,
}

/// Target verbs for the two verb-list rules, split into disjoint training
/// and test inventories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbLists {
    pub transitive_train: BTreeSet<String>,
    pub transitive_test: BTreeSet<String>,
    pub intransitive_train: BTreeSet<String>,
    pub intransitive_test: BTreeSet<String>,
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for VerbLists {
    fn default() -> Self {
        VerbLists {
            transitive_train: set(&[
                "answer", "attend", "discuss", "inhabit", "mention", "oppose", "resemble",
            ]),
            transitive_test: set(&["approach", "consider", "enter", "marry", "obey", "reach", "visit"]),
            intransitive_train: set(&["agree", "belong", "disagree", "relate"]),
            intransitive_test: set(&["apply", "graduate", "listen", "specialize", "worry"]),
        }
    }
}

impl VerbLists {
    pub fn new(
        transitive_train: BTreeSet<String>,
        transitive_test: BTreeSet<String>,
        intransitive_train: BTreeSet<String>,
        intransitive_test: BTreeSet<String>,
    ) -> Result<Self> {
        let lower = |s: BTreeSet<String>| s.into_iter().map(|w| w.to_lowercase()).collect::<BTreeSet<_>>();
        let lists = VerbLists {
            transitive_train: lower(transitive_train),
            transitive_test: lower(transitive_test),
            intransitive_train: lower(intransitive_train),
            intransitive_test: lower(intransitive_test),
        };
        if let Some(v) = lists.transitive_train.intersection(&lists.transitive_test).next() {
            return Err(GedError::Contract(format!("transitive verb {v:?} is in both lists")));
        }
        if let Some(v) = lists.intransitive_train.intersection(&lists.intransitive_test).next() {
            return Err(GedError::Contract(format!("intransitive verb {v:?} is in both lists")));
        }
        Ok(lists)
    }

    pub fn transitive_role(&self, lemma: &str) -> Option<SplitRole> {
        role(&self.transitive_train, &self.transitive_test, lemma)
    }

    pub fn intransitive_role(&self, lemma: &str) -> Option<SplitRole> {
        role(&self.intransitive_train, &self.intransitive_test, lemma)
    }

    fn role_for(&self, error_type: ErrorType, lemma: &str) -> Option<SplitRole> {
        match error_type {
            ErrorType::TransVerbPrep => self.transitive_role(lemma),
            ErrorType::IntransVerbObj => self.intransitive_role(lemma),
            _ => None,
        }
    }
}

fn role(train: &BTreeSet<String>, test: &BTreeSet<String>, lemma: &str) -> Option<SplitRole> {
    let lemma = lemma.to_lowercase();
    if train.contains(&lemma) {
        Some(SplitRole::TrainPool)
    } else if test.contains(&lemma) {
        Some(SplitRole::EvalPool)
    } else {
        None
    }
}

/// Rule-specific indices of an injection site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteDetail {
    /// The anchor itself is the infinitival `to`.
    InfinitiveMarker,
    /// Clausal subject introduced by the `to` at `mark`.
    InfinitivalSubject { mark: usize },
    /// Clausal subject headed by a gerund.
    GerundSubject,
    /// Contiguous subtree span of a subject or object.
    Phrase { first: usize, last: usize },
    /// The case preposition attached to the verb's oblique.
    CasePreposition { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InjectionSite {
    pub error_type: ErrorType,
    pub anchor_index: usize,
    pub detail: SiteDetail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Insert,
    Delete,
    Replace,
}

/// The single word-level edit that turns a source sentence into its
/// erroneous counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditRecord {
    pub op: EditOp,
    /// 1-based index in the output sentence (input sentence for deletions).
    pub position: usize,
    pub original: Option<String>,
    pub replacement: Option<String>,
    /// Original form of the neighbouring token when the edit at sentence
    /// start forced it to be re-cased.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displaced_form: Option<String>,
}

impl EditRecord {
    pub fn is_well_formed(&self) -> bool {
        match self.op {
            EditOp::Insert => self.original.is_none() && self.replacement.is_some(),
            EditOp::Delete => self.original.is_some() && self.replacement.is_none(),
            EditOp::Replace => self.original.is_some() && self.replacement.is_some(),
        }
    }

    /// Token-count change caused by the edit.
    pub fn length_delta(&self) -> isize {
        match self.op {
            EditOp::Insert => 1,
            EditOp::Delete => -1,
            EditOp::Replace => 0,
        }
    }

    /// Undoes the edit on a sequence of output forms.
    pub fn invert(&self, forms: &[String]) -> Result<Vec<String>> {
        let bad = |why: &str| GedError::Contract(format!("cannot invert {:?} edit: {why}", self.op));
        let mut out = forms.to_vec();
        let at = self.position.checked_sub(1).ok_or_else(|| bad("position 0"))?;
        match self.op {
            EditOp::Insert => {
                if out.get(at) != self.replacement.as_ref() {
                    return Err(bad("inserted word not found"));
                }
                out.remove(at);
                if let Some(form) = &self.displaced_form {
                    *out.get_mut(at).ok_or_else(|| bad("no displaced token"))? = form.clone();
                }
            }
            EditOp::Delete => {
                if at > out.len() {
                    return Err(bad("position past end"));
                }
                let original = self.original.clone().ok_or_else(|| bad("missing original"))?;
                out.insert(at, original);
                if let Some(form) = &self.displaced_form {
                    *out.get_mut(at + 1).ok_or_else(|| bad("no displaced token"))? = form.clone();
                }
            }
            EditOp::Replace => {
                let slot = out.get_mut(at).ok_or_else(|| bad("position past end"))?;
                if Some(&*slot) != self.replacement.as_ref() {
                    return Err(bad("replacement not found"));
                }
                *slot = self.original.clone().ok_or_else(|| bad("missing original"))?;
                if let Some(form) = &self.displaced_form {
                    *out.get_mut(at + 1).ok_or_else(|| bad("no displaced token"))? = form.clone();
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionOutcome {
    /// Perturbed sentence under the typed scheme.
    pub labeled: LabeledSentence,
    pub edit: EditRecord,
    pub error_type: ErrorType,
    pub source_id: String,
    pub split_role: SplitRole,
    /// Lemma of the anchor token (the verb for the verb-list rules).
    pub anchor_lemma: String,
}

impl InjectionOutcome {
    pub fn id(&self) -> &str {
        self.labeled.id()
    }

    /// Index (1-based) of the single erroneous token.
    pub fn error_index(&self) -> usize {
        self.labeled
            .labels
            .iter()
            .position(|l| !l.is_correct())
            .map(|i| i + 1)
            .unwrap_or(0)
    }
}

/// Sentences with 4 to 25 tokens are used for injection.
pub fn eligible(sentence: &ParsedSentence) -> bool {
    (MIN_TOKENS..=MAX_TOKENS).contains(&sentence.len())
}

fn lower(s: &str) -> String {
    s.to_lowercase()
}

fn is_gerund_of(form: &str, lemma: &str) -> bool {
    let form = lower(form);
    let lemma = lower(lemma);
    if lemma.is_empty() || form == lemma {
        return false;
    }
    if form == format!("{lemma}ing") {
        return true;
    }
    match lemma.strip_suffix('e') {
        Some(stem) if !stem.is_empty() => form == format!("{stem}ing"),
        _ => false,
    }
}

/// Every site in `sentence` where the rule for `error_type` applies.
pub fn find_sites(sentence: &ParsedSentence, error_type: ErrorType, lists: &VerbLists) -> Vec<InjectionSite> {
    let site = |anchor_index, detail| InjectionSite {
        error_type,
        anchor_index,
        detail,
    };
    let is_verb = |index: usize| sentence.token(index).is_some_and(|t| t.upos == "VERB");
    let toks = &sentence.tokens;

    match error_type {
        ErrorType::PrepInfinitive => toks
            .iter()
            .filter(|t| lower(&t.form) == "to" && t.upos == "PART" && t.base_deprel() == "mark" && is_verb(t.head))
            .map(|t| site(t.index, SiteDetail::InfinitiveMarker))
            .collect(),

        ErrorType::SubjectVerb => toks
            .iter()
            .filter(|v| v.upos == "VERB" && v.base_deprel() == "csubj")
            .filter_map(|v| {
                let mark = sentence
                    .children(v.index)
                    .find(|c| lower(&c.form) == "to" && c.base_deprel() == "mark" && c.index < v.index);
                match mark {
                    Some(m) => Some(site(v.index, SiteDetail::InfinitivalSubject { mark: m.index })),
                    None if is_gerund_of(&v.form, &v.lemma) => Some(site(v.index, SiteDetail::GerundSubject)),
                    None => None,
                }
            })
            .collect(),

        ErrorType::PrepSubject => toks
            .iter()
            .filter(|t| t.base_deprel() == "nsubj" && (t.upos == "NOUN" || t.upos == "PROPN"))
            .filter_map(|t| {
                let (first, last) = sentence.subtree_span(t.index)?;
                let leftmost = sentence.token(first)?;
                (leftmost.upos != "ADP").then(|| site(t.index, SiteDetail::Phrase { first, last }))
            })
            .collect(),

        ErrorType::TransVerbPrep => toks
            .iter()
            .filter(|v| v.upos == "VERB" && lists.transitive_role(&v.lemma).is_some())
            .flat_map(|v| {
                sentence
                    .children(v.index)
                    .filter(|o| o.base_deprel() == "obj" && o.index > v.index)
                    .filter_map(|o| {
                        let (first, last) = sentence.subtree_span(o.index)?;
                        if first <= v.index {
                            return None;
                        }
                        let blocked = (v.index + 1..=first)
                            .filter_map(|i| sentence.token(i))
                            .any(|t| t.base_deprel() == "case" || t.upos == "ADP");
                        (!blocked).then(|| site(v.index, SiteDetail::Phrase { first, last }))
                    })
                    .collect::<Vec<_>>()
            })
            .collect(),

        ErrorType::IntransVerbObj => toks
            .iter()
            .filter(|v| v.upos == "VERB" && lists.intransitive_role(&v.lemma).is_some())
            .flat_map(|v| {
                sentence
                    .children(v.index)
                    .filter(|o| o.base_deprel() == "obl")
                    .flat_map(|o| {
                        sentence
                            .children(o.index)
                            .filter(|c| c.base_deprel() == "case" && c.upos == "ADP" && c.index == v.index + 1)
                            .map(|c| site(v.index, SiteDetail::CasePreposition { index: c.index }))
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            })
            .collect(),
    }
}

/// Sites for all five rules, in [`ErrorType::ALL`] order.
pub fn find_all_sites(sentence: &ParsedSentence, lists: &VerbLists) -> Vec<InjectionSite> {
    ErrorType::ALL
        .into_iter()
        .flat_map(|t| find_sites(sentence, t, lists))
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn decapitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

/// Copies the capitalisation of `model`'s first letter onto `word`.
fn match_case(word: &str, model: &str) -> String {
    if starts_upper(model) {
        capitalize(word)
    } else {
        word.to_string()
    }
}

/// Inserts `token` so that it ends up at 1-based position `at`.
fn insert_token(sentence: &ParsedSentence, at: usize, mut token: Token) -> Vec<Token> {
    let shift = |i: usize| if i >= at { i + 1 } else { i };
    let mut tokens: Vec<Token> = sentence
        .tokens
        .iter()
        .map(|t| Token {
            index: shift(t.index),
            head: if t.head == 0 { 0 } else { shift(t.head) },
            ..t.clone()
        })
        .collect();
    token.index = at;
    token.head = if token.head == 0 { 0 } else { shift(token.head) };
    tokens.insert(at - 1, token);
    tokens
}

/// Removes the token at 1-based `at`, reattaching its dependents to its head.
fn delete_token(sentence: &ParsedSentence, at: usize) -> Vec<Token> {
    let removed_head = sentence.tokens[at - 1].head;
    let shift = |i: usize| if i > at { i - 1 } else { i };
    sentence
        .tokens
        .iter()
        .filter(|t| t.index != at)
        .map(|t| {
            let head = if t.head == at { removed_head } else { t.head };
            Token {
                index: shift(t.index),
                head: if head == 0 { 0 } else { shift(head) },
                ..t.clone()
            }
        })
        .collect()
}

fn preposition_token(form: &str, head: usize) -> Token {
    Token {
        index: 0,
        form: form.to_string(),
        lemma: form.to_lowercase(),
        upos: "ADP".to_string(),
        head,
        deprel: "case".to_string(),
    }
}

/// Applies the five rules with a fixed verb list and preposition inventory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Injector {
    pub lists: VerbLists,
    pub inventory: PrepositionInventory,
}

/// Counts reported alongside a generation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub eligible: usize,
    pub skipped_no_site: usize,
    pub per_type_counts: BTreeMap<ErrorType, usize>,
    pub seed: u64,
    pub ineligible: usize,
}

#[derive(Debug, Clone)]
pub struct Generation {
    pub outcomes: Vec<InjectionOutcome>,
    pub summary: GenerationSummary,
}

impl Injector {
    pub fn new(lists: VerbLists, inventory: PrepositionInventory) -> Result<Self> {
        if inventory.addition_replacement.is_empty() {
            return Err(GedError::Contract("preposition inventory is empty".into()));
        }
        Ok(Injector { lists, inventory })
    }

    pub fn find_sites(&self, sentence: &ParsedSentence, error_type: ErrorType) -> Vec<InjectionSite> {
        find_sites(sentence, error_type, &self.lists)
    }

    pub fn find_all_sites(&self, sentence: &ParsedSentence) -> Vec<InjectionSite> {
        find_all_sites(sentence, &self.lists)
    }

    /// Perturbs `sentence` at `site`. The random stream is only consulted to
    /// pick an inserted preposition.
    pub fn apply<R: Rng + ?Sized>(
        &self,
        sentence: &ParsedSentence,
        site: &InjectionSite,
        rng: &mut R,
    ) -> Result<InjectionOutcome> {
        if !self.find_sites(sentence, site.error_type).contains(site) {
            return Err(GedError::StaleSite(sentence.id.clone()));
        }
        let anchor = sentence
            .token(site.anchor_index)
            .ok_or_else(|| GedError::StaleSite(sentence.id.clone()))?;
        let anchor_lemma = lower(&anchor.lemma);
        let mut pick_prep = || {
            let prepositions = &self.inventory.addition_replacement;
            prepositions[rng.gen_range(0..prepositions.len())].clone()
        };

        // (tokens, edit, 1-based index of the labeled token)
        let (tokens, edit, labeled_index) = match (site.error_type, site.detail) {
            (ErrorType::PrepInfinitive, SiteDetail::InfinitiveMarker) => {
                let original = anchor.form.clone();
                let replacement = match_case(&self.inventory.infinitive_replacement, &original);
                let mut tokens = sentence.tokens.clone();
                let t = &mut tokens[site.anchor_index - 1];
                t.form = replacement.clone();
                t.lemma = lower(&self.inventory.infinitive_replacement);
                t.upos = "ADP".to_string();
                let edit = EditRecord {
                    op: EditOp::Replace,
                    position: site.anchor_index,
                    original: Some(original),
                    replacement: Some(replacement),
                    displaced_form: None,
                };
                (tokens, edit, site.anchor_index)
            }
            (ErrorType::SubjectVerb, SiteDetail::InfinitivalSubject { mark }) => {
                let original = sentence.tokens[mark - 1].form.clone();
                let mut tokens = delete_token(sentence, mark);
                let mut displaced_form = None;
                if mark == 1 && starts_upper(&original) {
                    let next = &mut tokens[0];
                    let recased = capitalize(&next.form);
                    if recased != next.form {
                        displaced_form = Some(std::mem::replace(&mut next.form, recased));
                    }
                }
                let edit = EditRecord {
                    op: EditOp::Delete,
                    position: mark,
                    original: Some(original),
                    replacement: None,
                    displaced_form,
                };
                let verb = if site.anchor_index > mark {
                    site.anchor_index - 1
                } else {
                    site.anchor_index
                };
                (tokens, edit, verb)
            }
            (ErrorType::SubjectVerb, SiteDetail::GerundSubject) => {
                let original = anchor.form.clone();
                let replacement = match_case(&lower(&anchor.lemma), &original);
                let mut tokens = sentence.tokens.clone();
                tokens[site.anchor_index - 1].form = replacement.clone();
                let edit = EditRecord {
                    op: EditOp::Replace,
                    position: site.anchor_index,
                    original: Some(original),
                    replacement: Some(replacement),
                    displaced_form: None,
                };
                (tokens, edit, site.anchor_index)
            }
            (ErrorType::PrepSubject | ErrorType::TransVerbPrep, SiteDetail::Phrase { first, .. }) => {
                let phrase_head = match site.error_type {
                    ErrorType::PrepSubject => site.anchor_index,
                    _ => sentence
                        .children(site.anchor_index)
                        .find(|o| {
                            o.base_deprel() == "obj" && sentence.subtree_span(o.index).map(|s| s.0) == Some(first)
                        })
                        .map(|o| o.index)
                        .ok_or_else(|| GedError::StaleSite(sentence.id.clone()))?,
                };
                let prep = pick_prep();
                let displaced = &sentence.tokens[first - 1];
                let mut displaced_form = None;
                let inserted = if first == 1 {
                    if displaced.upos != "PROPN" && starts_upper(&displaced.form) {
                        displaced_form = Some(displaced.form.clone());
                    }
                    capitalize(&prep)
                } else {
                    prep
                };
                let mut tokens = insert_token(sentence, first, preposition_token(&inserted, phrase_head));
                if displaced_form.is_some() {
                    let next = &mut tokens[first];
                    next.form = decapitalize(&next.form);
                }
                let edit = EditRecord {
                    op: EditOp::Insert,
                    position: first,
                    original: None,
                    replacement: Some(inserted),
                    displaced_form,
                };
                (tokens, edit, first)
            }
            (ErrorType::IntransVerbObj, SiteDetail::CasePreposition { index }) => {
                let original = sentence.tokens[index - 1].form.clone();
                let tokens = delete_token(sentence, index);
                let edit = EditRecord {
                    op: EditOp::Delete,
                    position: index,
                    original: Some(original),
                    replacement: None,
                    displaced_form: None,
                };
                (tokens, edit, site.anchor_index)
            }
            _ => return Err(GedError::StaleSite(sentence.id.clone())),
        };

        let split_role = self
            .lists
            .role_for(site.error_type, &anchor_lemma)
            .unwrap_or(SplitRole::TrainPool);
        let mut labels = vec![Label::Correct; tokens.len()];
        labels[labeled_index - 1] = Label::Typed(site.error_type);
        let perturbed = ParsedSentence {
            id: format!("{}/{}", sentence.id, site.error_type),
            tokens,
            source: sentence.source.clone(),
        };
        Ok(InjectionOutcome {
            labeled: LabeledSentence::new(perturbed, labels, LabelScheme::typed())?,
            edit,
            error_type: site.error_type,
            source_id: sentence.id.clone(),
            split_role,
            anchor_lemma,
        })
    }

    /// Injects one error into every eligible sentence that has at least one
    /// site. The random stream of a sentence is keyed by `(seed, id)`, so the
    /// result does not depend on corpus order or thread scheduling; outcomes
    /// follow input order.
    pub fn generate(&self, corpus: &[ParsedSentence], seed: u64) -> Result<Generation> {
        enum Step {
            Ineligible,
            NoSite,
            Injected(Box<InjectionOutcome>),
        }
        let steps = corpus
            .par_iter()
            .map(|sentence| {
                if !eligible(sentence) {
                    return Ok(Step::Ineligible);
                }
                let sites = self.find_all_sites(sentence);
                if sites.is_empty() {
                    return Ok(Step::NoSite);
                }
                let mut rng = keyed_rng(seed, &sentence.id);
                let site = sites[rng.gen_range(0..sites.len())];
                self.apply(sentence, &site, &mut rng)
                    .map(|o| Step::Injected(Box::new(o)))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut summary = GenerationSummary {
            eligible: 0,
            skipped_no_site: 0,
            per_type_counts: ErrorType::ALL.into_iter().map(|t| (t, 0)).collect(),
            seed,
            ineligible: 0,
        };
        let mut outcomes = Vec::new();
        for step in steps {
            match step {
                Step::Ineligible => summary.ineligible += 1,
                Step::NoSite => {
                    summary.eligible += 1;
                    summary.skipped_no_site += 1;
                }
                Step::Injected(outcome) => {
                    summary.eligible += 1;
                    *summary.per_type_counts.entry(outcome.error_type).or_default() += 1;
                    outcomes.push(*outcome);
                }
            }
        }
        Ok(Generation { outcomes, summary })
    }
}
