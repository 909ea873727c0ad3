//! Template grammar producing UD-parsed English sentences.
//!
//! Stands in for a parsed news corpus in tests and demos. Every template
//! yields a valid dependency tree; the mix is tuned so that each injection
//! rule has material, including sentences with no site at all and a few that
//! fail the length filter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ParsedSentence, Token};

struct Verb {
    lemma: &'static str,
    past: &'static str,
    third: &'static str,
}

const fn v(lemma: &'static str, past: &'static str, third: &'static str) -> Verb {
    Verb { lemma, past, third }
}

const LISTED_TRANSITIVE_TRAIN: &[Verb] = &[
    v("answer", "answered", "answers"),
    v("attend", "attended", "attends"),
    v("discuss", "discussed", "discusses"),
    v("inhabit", "inhabited", "inhabits"),
    v("mention", "mentioned", "mentions"),
    v("oppose", "opposed", "opposes"),
    v("resemble", "resembled", "resembles"),
];

const LISTED_TRANSITIVE_TEST: &[Verb] = &[
    v("approach", "approached", "approaches"),
    v("consider", "considered", "considers"),
    v("enter", "entered", "enters"),
    v("marry", "married", "marries"),
    v("obey", "obeyed", "obeys"),
    v("reach", "reached", "reaches"),
    v("visit", "visited", "visits"),
];

/// Intransitive verbs with the preposition they normally take.
const LISTED_INTRANSITIVE_TRAIN: &[(Verb, &str)] = &[
    (v("agree", "agreed", "agrees"), "with"),
    (v("belong", "belonged", "belongs"), "to"),
    (v("disagree", "disagreed", "disagrees"), "with"),
    (v("relate", "related", "relates"), "to"),
];

const LISTED_INTRANSITIVE_TEST: &[(Verb, &str)] = &[
    (v("apply", "applied", "applies"), "for"),
    (v("graduate", "graduated", "graduates"), "from"),
    (v("listen", "listened", "listens"), "to"),
    (v("specialize", "specialized", "specializes"), "in"),
    (v("worry", "worried", "worries"), "about"),
];

const OTHER_TRANSITIVE: &[Verb] = &[
    v("see", "saw", "sees"),
    v("buy", "bought", "buys"),
    v("find", "found", "finds"),
    v("build", "built", "builds"),
    v("open", "opened", "opens"),
    v("sell", "sold", "sells"),
    v("like", "liked", "likes"),
    v("write", "wrote", "writes"),
    v("make", "made", "makes"),
    v("take", "took", "takes"),
    v("bring", "brought", "brings"),
    v("help", "helped", "helps"),
    v("change", "changed", "changes"),
    v("support", "supported", "supports"),
    v("serve", "served", "serves"),
    v("close", "closed", "closes"),
];

const OTHER_INTRANSITIVE: &[Verb] = &[
    v("arrive", "arrived", "arrives"),
    v("leave", "left", "leaves"),
    v("sleep", "slept", "sleeps"),
    v("laugh", "laughed", "laughs"),
    v("wait", "waited", "waits"),
    v("smile", "smiled", "smiles"),
    v("return", "returned", "returns"),
    v("work", "worked", "works"),
    v("stay", "stayed", "stays"),
];

const MOTION: &[Verb] = &[
    v("go", "went", "goes"),
    v("come", "came", "comes"),
    v("travel", "traveled", "travels"),
    v("return", "returned", "returns"),
];

/// Base forms whose gerund is `lemma+ing` or `lemm+ing`.
const INFINITIVES: &[&str] = &[
    "learn", "read", "play", "watch", "cook", "drive", "write", "make", "keep", "study", "build", "clean", "paint",
    "explain", "drink", "speak", "teach", "use", "find", "change",
];

const PREDICATES: &[&str] = &[
    "difficult",
    "easy",
    "important",
    "fun",
    "hard",
    "useful",
    "dangerous",
    "expensive",
    "boring",
    "necessary",
];

const DETERMINERS: &[&str] = &["the", "a", "this", "that", "every", "our", "my", "their", "his", "her"];

const ADJECTIVES: &[&str] = &[
    "new",
    "old",
    "small",
    "large",
    "local",
    "young",
    "famous",
    "important",
    "public",
    "strange",
    "final",
    "recent",
    "whole",
    "quiet",
    "busy",
    "good",
    "open",
];

const NOUNS: &[&str] = &[
    "matter",
    "question",
    "meeting",
    "museum",
    "city",
    "problem",
    "plan",
    "teacher",
    "letter",
    "report",
    "house",
    "village",
    "restaurant",
    "company",
    "idea",
    "proposal",
    "decision",
    "room",
    "country",
    "station",
    "market",
    "game",
    "book",
    "movie",
    "team",
    "school",
    "family",
    "garden",
    "project",
    "issue",
    "friend",
    "doctor",
    "student",
    "manager",
    "story",
    "result",
    "rule",
    "law",
    "contract",
    "offer",
    "church",
    "island",
    "town",
    "language",
    "office",
    "art",
    "event",
    "article",
    "army",
];

const PROPER_NOUNS: &[&str] = &[
    "John", "Mary", "London", "Paris", "Tokyo", "Google", "Smith", "Anna", "Chicago", "Berlin", "Kenji", "Maria",
];

const SUBJECT_PRONOUNS: &[(&str, bool)] = &[
    ("I", false),
    ("we", false),
    ("they", false),
    ("she", true),
    ("he", true),
    ("you", false),
];

const OBJECT_PRONOUNS: &[&str] = &["it", "them", "him", "her", "us"];

const ADVERBS: &[&str] = &[
    "yesterday",
    "early",
    "late",
    "quietly",
    "again",
    "today",
    "often",
    "recently",
];

const PLACES: &[&str] = &["there", "here", "abroad", "home"];

#[derive(Default)]
struct Builder {
    tokens: Vec<Token>,
}

impl Builder {
    /// Adds a token with a placeholder head and returns its 1-based index.
    fn push(&mut self, form: &str, lemma: &str, upos: &str, deprel: &str) -> usize {
        let index = self.tokens.len() + 1;
        self.tokens.push(Token {
            index,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            head: 0,
            deprel: deprel.to_string(),
        });
        index
    }

    fn attach(&mut self, dependent: usize, head: usize) {
        self.tokens[dependent - 1].head = head;
    }

    fn finish(mut self, id: String) -> ParsedSentence {
        if let Some(first) = self.tokens.first_mut() {
            let mut chars = first.form.chars();
            if let Some(c) = chars.next() {
                first.form = c.to_uppercase().chain(chars).collect();
            }
        }
        ParsedSentence {
            id,
            tokens: self.tokens,
            source: "synthetic".to_string(),
        }
    }
}

/// Deterministic generator of parsed sentences.
pub struct SyntheticCorpus {
    rng: ChaCha8Rng,
    /// Share of verb-list sentences drawn from the training verbs.
    pub train_verb_share: f64,
}

impl SyntheticCorpus {
    pub fn new(seed: u64) -> Self {
        SyntheticCorpus {
            rng: ChaCha8Rng::seed_from_u64(seed),
            train_verb_share: 0.65,
        }
    }

    /// `count` sentences with ids `synth-<n>`.
    pub fn generate(&mut self, count: usize) -> Vec<ParsedSentence> {
        (0..count).map(|i| self.sentence(format!("synth-{i}"))).collect()
    }

    pub fn sentence(&mut self, id: String) -> ParsedSentence {
        let mut b = Builder::default();
        let roll: f64 = self.rng.gen();
        match roll {
            r if r < 0.20 => self.transitive_listed(&mut b),
            r if r < 0.40 => self.intransitive_listed(&mut b),
            r if r < 0.56 => self.noun_subject(&mut b),
            r if r < 0.70 => self.infinitive_modifier(&mut b),
            r if r < 0.78 => self.infinitival_subject(&mut b),
            r if r < 0.89 => self.gerund_subject(&mut b),
            r if r < 0.98 => self.plain_intransitive(&mut b, true),
            _ => self.plain_intransitive(&mut b, false),
        }
        b.finish(id)
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("non-empty vocabulary")
    }

    fn pick_ref<T>(&mut self, items: &'static [T]) -> &'static T {
        items.choose(&mut self.rng).expect("non-empty vocabulary")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Subject pronoun; returns (index, takes third-person -s).
    fn pronoun_subject(&mut self, b: &mut Builder) -> (usize, bool) {
        let (form, third) = self.pick(SUBJECT_PRONOUNS);
        (b.push(form, &form.to_lowercase(), "PRON", "nsubj"), third)
    }

    fn finite<'a>(&mut self, verb: &'a Verb, third: bool) -> &'a str {
        if self.chance(0.7) {
            verb.past
        } else if third {
            verb.third
        } else {
            verb.lemma
        }
    }

    /// Noun phrase with its head's relation; returns the head index.
    fn noun_phrase(&mut self, b: &mut Builder, deprel: &str, allow_pronoun: bool) -> usize {
        let roll: f64 = self.rng.gen();
        if allow_pronoun && roll < 0.2 {
            let p = self.pick(OBJECT_PRONOUNS);
            return b.push(p, p, "PRON", deprel);
        }
        if roll < 0.3 {
            let name = self.pick(PROPER_NOUNS);
            return b.push(name, name, "PROPN", deprel);
        }
        let noun = self.pick(NOUNS);
        let adjective = self.chance(0.4).then(|| self.pick(ADJECTIVES));
        let mut det = self.pick(DETERMINERS);
        let next = adjective.unwrap_or(noun);
        if det == "a" && next.starts_with(['a', 'e', 'i', 'o', 'u']) {
            det = "an";
        }
        let det_lemma = if det == "an" { "a" } else { det };
        let d = b.push(det, det_lemma, "DET", "det");
        let a = adjective.map(|adj| b.push(adj, adj, "ADJ", "amod"));
        let n = b.push(noun, noun, "NOUN", deprel);
        b.attach(d, n);
        if let Some(a) = a {
            b.attach(a, n);
        }
        n
    }

    fn punct(&mut self, b: &mut Builder, head: usize) {
        let p = b.push(".", ".", "PUNCT", "punct");
        b.attach(p, head);
    }

    fn maybe_adverb(&mut self, b: &mut Builder, head: usize, p: f64) {
        if self.chance(p) {
            let adv = self.pick(ADVERBS);
            let a = b.push(adv, adv, "ADV", "advmod");
            b.attach(a, head);
        }
    }

    fn listed_side<T>(&mut self, train: &'static [T], test: &'static [T]) -> &'static T {
        let pool = if self.chance(self.train_verb_share) {
            train
        } else {
            test
        };
        self.pick_ref(pool)
    }

    // We discussed the matter yesterday .
    fn transitive_listed(&mut self, b: &mut Builder) {
        let (subj, third) = self.pronoun_subject(b);
        let verb = self.listed_side(LISTED_TRANSITIVE_TRAIN, LISTED_TRANSITIVE_TEST);
        let form = self.finite(verb, third);
        let v = b.push(form, verb.lemma, "VERB", "root");
        b.attach(subj, v);
        let obj = self.noun_phrase(b, "obj", true);
        b.attach(obj, v);
        self.maybe_adverb(b, v, 0.3);
        self.punct(b, v);
    }

    // They agreed with the plan .
    fn intransitive_listed(&mut self, b: &mut Builder) {
        let (subj, third) = self.pronoun_subject(b);
        let (verb, prep) = self.listed_side(LISTED_INTRANSITIVE_TRAIN, LISTED_INTRANSITIVE_TEST);
        let form = self.finite(verb, third);
        let v = b.push(form, verb.lemma, "VERB", "root");
        b.attach(subj, v);
        let case = b.push(prep, prep, "ADP", "case");
        let obl = self.noun_phrase(b, "obl", true);
        b.attach(case, obl);
        b.attach(obl, v);
        self.maybe_adverb(b, v, 0.3);
        self.punct(b, v);
    }

    // The new restaurant serves good food .
    fn noun_subject(&mut self, b: &mut Builder) {
        let subj = self.noun_phrase(b, "nsubj", false);
        if self.chance(0.2) {
            let prep = self.pick(&["in", "near", "from"][..]);
            let case = b.push(prep, prep, "ADP", "case");
            let nmod = self.noun_phrase(b, "nmod", false);
            b.attach(case, nmod);
            b.attach(nmod, subj);
        }
        let verb = self.pick_ref(OTHER_TRANSITIVE);
        let form = if self.chance(0.7) { verb.past } else { verb.third };
        let v = b.push(form, verb.lemma, "VERB", "root");
        b.attach(subj, v);
        let obj = self.noun_phrase(b, "obj", true);
        b.attach(obj, v);
        self.maybe_adverb(b, v, 0.2);
        self.punct(b, v);
    }

    // She bought a book to read .  /  We went there to see the game .
    fn infinitive_modifier(&mut self, b: &mut Builder) {
        let (subj, third) = self.pronoun_subject(b);
        let (main, inf_head, inf_rel) = if self.chance(0.5) {
            let verb = self.pick_ref(OTHER_TRANSITIVE);
            let form = self.finite(verb, third);
            let v = b.push(form, verb.lemma, "VERB", "root");
            let obj = self.noun_phrase(b, "obj", false);
            b.attach(obj, v);
            (v, obj, "acl")
        } else {
            let verb = self.pick_ref(MOTION);
            let form = self.finite(verb, third);
            let v = b.push(form, verb.lemma, "VERB", "root");
            let place = self.pick(PLACES);
            let p = b.push(place, place, "ADV", "advmod");
            b.attach(p, v);
            (v, v, "advcl")
        };
        b.attach(subj, main);
        let to = b.push("to", "to", "PART", "mark");
        let inf = self.pick(INFINITIVES);
        let i = b.push(inf, inf, "VERB", inf_rel);
        b.attach(to, i);
        b.attach(i, inf_head);
        if inf_rel == "advcl" || self.chance(0.3) {
            let obj = self.noun_phrase(b, "obj", true);
            b.attach(obj, i);
        }
        self.punct(b, main);
    }

    // To learn English is difficult .
    fn infinitival_subject(&mut self, b: &mut Builder) {
        let to = b.push("to", "to", "PART", "mark");
        let inf = self.pick(INFINITIVES);
        let i = b.push(inf, inf, "VERB", "csubj");
        b.attach(to, i);
        let obj = self.noun_phrase(b, "obj", false);
        b.attach(obj, i);
        self.copular_predicate(b, i);
    }

    // Learning English is difficult .
    fn gerund_subject(&mut self, b: &mut Builder) {
        let inf = self.pick(INFINITIVES);
        let gerund = match inf.strip_suffix('e') {
            Some(stem) => format!("{stem}ing"),
            None => format!("{inf}ing"),
        };
        let g = b.push(&gerund, inf, "VERB", "csubj");
        let obj = self.noun_phrase(b, "obj", false);
        b.attach(obj, g);
        self.copular_predicate(b, g);
    }

    fn copular_predicate(&mut self, b: &mut Builder, clause: usize) {
        let cop = if self.chance(0.6) { "is" } else { "was" };
        let c = b.push(cop, "be", "AUX", "cop");
        let adj = self.pick(PREDICATES);
        let a = b.push(adj, adj, "ADJ", "root");
        b.attach(clause, a);
        b.attach(c, a);
        self.punct(b, a);
    }

    // They arrived early .   (long = false gives a 3-token sentence)
    fn plain_intransitive(&mut self, b: &mut Builder, long: bool) {
        let (subj, third) = self.pronoun_subject(b);
        let verb = self.pick_ref(OTHER_INTRANSITIVE);
        let form = self.finite(verb, third);
        let v = b.push(form, verb.lemma, "VERB", "root");
        b.attach(subj, v);
        if long {
            self.maybe_adverb(b, v, 1.0);
            self.maybe_adverb(b, v, 0.3);
        }
        self.punct(b, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate;
    use crate::inject::{eligible, find_all_sites, VerbLists};

    #[test]
    fn sentences_are_valid_trees() {
        let corpus = SyntheticCorpus::new(3).generate(2000);
        for s in &corpus {
            assert!(validate(s).is_empty(), "{s:?}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(
            SyntheticCorpus::new(5).generate(50),
            SyntheticCorpus::new(5).generate(50)
        );
        assert_ne!(
            SyntheticCorpus::new(5).generate(50),
            SyntheticCorpus::new(6).generate(50)
        );
    }

    #[test]
    fn every_rule_has_material() {
        let lists = VerbLists::default();
        let corpus = SyntheticCorpus::new(1).generate(3000);
        let mut seen = std::collections::BTreeSet::new();
        let mut no_site = 0;
        let mut short = 0;
        for s in &corpus {
            if !eligible(s) {
                short += 1;
                continue;
            }
            let sites = find_all_sites(s, &lists);
            if sites.is_empty() {
                no_site += 1;
            }
            seen.extend(sites.iter().map(|site| site.error_type));
        }
        assert_eq!(seen.len(), 5);
        assert!(no_site > 0 && short > 0);
    }
}
