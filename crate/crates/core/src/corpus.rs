//! Dependency-parsed sentences, label schemes and CoNLL-U ingestion.
//!
//! Every other module works on [`ParsedSentence`] values produced here. Token
//! indices are 1-based as in CoNLL-U, and a head of `0` marks the root.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GedError, Result};

/// The five error types produced by the injection rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorType {
    /// `to`-infinitive introduced by another preposition (*a book for read).
    PrepInfinitive,
    /// Bare verb phrase used as a subject (*Learn English is difficult).
    SubjectVerb,
    /// Subject introduced by a preposition (*In the restaurant serves good food).
    PrepSubject,
    /// Transitive verb followed by a preposition (*discuss about the matter).
    TransVerbPrep,
    /// Intransitive verb taking a direct object (*agree it).
    IntransVerbObj,
}

impl ErrorType {
    pub const ALL: [ErrorType; 5] = [
        ErrorType::PrepInfinitive,
        ErrorType::SubjectVerb,
        ErrorType::PrepSubject,
        ErrorType::TransVerbPrep,
        ErrorType::IntransVerbObj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::PrepInfinitive => "PrepInfinitive",
            ErrorType::SubjectVerb => "SubjectVerb",
            ErrorType::PrepSubject => "PrepSubject",
            ErrorType::TransVerbPrep => "TransVerbPrep",
            ErrorType::IntransVerbObj => "IntransVerbObj",
        }
    }

    /// Position within [`ErrorType::ALL`].
    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// True for the two rules whose anchors come from the verb lists.
    pub fn uses_verb_lists(self) -> bool {
        matches!(self, ErrorType::TransVerbPrep | ErrorType::IntransVerbObj)
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorType {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        ErrorType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| GedError::Contract(format!("unknown error type {s:?}")))
    }
}

/// A per-token label. Rendered as `C`, `E`, or `E-<ErrorType>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Correct,
    Erroneous,
    Typed(ErrorType),
}

impl Label {
    pub fn is_correct(self) -> bool {
        self == Label::Correct
    }

    /// Collapses a typed label onto the binary scheme.
    pub fn to_binary(self) -> Label {
        match self {
            Label::Correct => Label::Correct,
            _ => Label::Erroneous,
        }
    }

    pub fn error_type(self) -> Option<ErrorType> {
        match self {
            Label::Typed(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Correct => f.write_str("C"),
            Label::Erroneous => f.write_str("E"),
            Label::Typed(t) => write!(f, "E-{t}"),
        }
    }
}

impl FromStr for Label {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" => Ok(Label::Correct),
            "E" => Ok(Label::Erroneous),
            _ => match s.strip_prefix("E-") {
                Some(name) => Ok(Label::Typed(name.parse()?)),
                None => Err(GedError::Contract(format!("unknown label {s:?}"))),
            },
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Binary,
    Typed,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Binary => f.write_str("binary"),
            SchemeKind::Typed => f.write_str("typed"),
        }
    }
}

impl FromStr for SchemeKind {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(SchemeKind::Binary),
            "typed" => Ok(SchemeKind::Typed),
            _ => Err(GedError::Contract(format!("unknown label scheme {s:?}"))),
        }
    }
}

/// Ordered label set. `C` always comes first; ties in prediction go to the
/// earliest label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelScheme {
    kind: SchemeKind,
    labels: Vec<Label>,
}

impl LabelScheme {
    pub fn binary() -> Self {
        LabelScheme {
            kind: SchemeKind::Binary,
            labels: vec![Label::Correct, Label::Erroneous],
        }
    }

    pub fn typed() -> Self {
        let mut labels = vec![Label::Correct];
        labels.extend(ErrorType::ALL.into_iter().map(Label::Typed));
        LabelScheme {
            kind: SchemeKind::Typed,
            labels,
        }
    }

    pub fn of_kind(kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::Binary => Self::binary(),
            SchemeKind::Typed => Self::typed(),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Labels other than `C`, in scheme order.
    pub fn error_labels(&self) -> &[Label] {
        &self.labels[1..]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Maps a label from another scheme into this one.
    pub fn project(&self, label: Label) -> Option<Label> {
        let mapped = match self.kind {
            SchemeKind::Binary => label.to_binary(),
            SchemeKind::Typed => label,
        };
        self.contains(mapped).then_some(mapped)
    }
}

impl Serialize for LabelScheme {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.kind.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelScheme {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        SchemeKind::deserialize(deserializer).map(LabelScheme::of_kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub head: usize,
    pub deprel: String,
}

impl Token {
    /// The universal relation without its language-specific subtype
    /// (`nsubj:pass` -> `nsubj`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub source: String,
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at a 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    /// Indices of the direct dependents of `head`, in sentence order.
    pub fn children(&self, head: usize) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.head == head)
    }

    /// Whether `node` lies in the subtree rooted at `root` (inclusive).
    pub fn dominates(&self, root: usize, node: usize) -> bool {
        let mut current = node;
        for _ in 0..=self.len() {
            if current == root {
                return true;
            }
            match self.token(current) {
                Some(t) if t.head != 0 => current = t.head,
                _ => return false,
            }
        }
        false
    }

    /// Span `(first, last)` covered by the subtree of `root`, or `None` when
    /// the subtree is not contiguous.
    pub fn subtree_span(&self, root: usize) -> Option<(usize, usize)> {
        let members: Vec<usize> = (1..=self.len()).filter(|&i| self.dominates(root, i)).collect();
        let first = *members.first()?;
        let last = *members.last()?;
        (last - first + 1 == members.len()).then_some((first, last))
    }
}

/// A sentence with one label per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub sentence: ParsedSentence,
    pub labels: Vec<Label>,
    pub scheme: LabelScheme,
}

impl LabeledSentence {
    pub fn new(sentence: ParsedSentence, labels: Vec<Label>, scheme: LabelScheme) -> Result<Self> {
        if labels.len() != sentence.len() {
            return Err(GedError::InvalidSentence {
                id: sentence.id.clone(),
                reason: format!("{} labels for {} tokens", labels.len(), sentence.len()),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| !scheme.contains(l)) {
            return Err(GedError::LabelOutsideScheme {
                label: bad.to_string(),
                scheme: scheme.kind().to_string(),
            });
        }
        Ok(LabeledSentence {
            sentence,
            labels,
            scheme,
        })
    }

    /// All tokens labeled `C`.
    pub fn correct(sentence: ParsedSentence, scheme: LabelScheme) -> Self {
        let labels = vec![Label::Correct; sentence.len()];
        LabeledSentence {
            sentence,
            labels,
            scheme,
        }
    }

    pub fn id(&self) -> &str {
        &self.sentence.id
    }

    /// Re-expresses the labels in another scheme (typed -> binary collapses
    /// every error type onto `E`).
    pub fn with_scheme(&self, scheme: &LabelScheme) -> Result<Self> {
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                scheme.project(l).ok_or_else(|| GedError::LabelOutsideScheme {
                    label: l.to_string(),
                    scheme: scheme.kind().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledSentence {
            sentence: self.sentence.clone(),
            labels,
            scheme: scheme.clone(),
        })
    }
}

/// One broken invariant of a parsed sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptySentence,
    IndexMismatch { position: usize, index: usize },
    HeadOutOfRange { index: usize, head: usize },
    SelfHead { index: usize },
    EmptyForm { index: usize },
    EmptyLemma { index: usize },
    NoRoot,
    MultipleRoots,
    CyclicHeads,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySentence => f.write_str("empty sentence"),
            Violation::IndexMismatch { position, index } => {
                write!(f, "token at position {position} has index {index}")
            }
            Violation::HeadOutOfRange { index, head } => {
                write!(f, "token {index} has out-of-range head {head}")
            }
            Violation::SelfHead { index } => write!(f, "token {index} is its own head"),
            Violation::EmptyForm { index } => write!(f, "token {index} has an empty form"),
            Violation::EmptyLemma { index } => write!(f, "token {index} has an empty lemma"),
            Violation::NoRoot => f.write_str("no root"),
            Violation::MultipleRoots => f.write_str("multiple roots"),
            Violation::CyclicHeads => f.write_str("cyclic heads"),
        }
    }
}

/// Checks the token and tree invariants. Returns an empty list for a
/// well-formed sentence.
pub fn validate(sentence: &ParsedSentence) -> Vec<Violation> {
    let n = sentence.len();
    let mut violations = Vec::new();
    if n == 0 {
        violations.push(Violation::EmptySentence);
        return violations;
    }

    let mut heads_ok = true;
    for (pos, token) in sentence.tokens.iter().enumerate() {
        if token.index != pos + 1 {
            violations.push(Violation::IndexMismatch {
                position: pos + 1,
                index: token.index,
            });
            heads_ok = false;
        }
        if token.head > n {
            violations.push(Violation::HeadOutOfRange {
                index: token.index,
                head: token.head,
            });
            heads_ok = false;
        } else if token.head == token.index {
            violations.push(Violation::SelfHead { index: token.index });
            heads_ok = false;
        }
        if token.form.is_empty() {
            violations.push(Violation::EmptyForm { index: token.index });
        }
        if token.lemma.is_empty() {
            violations.push(Violation::EmptyLemma { index: token.index });
        }
    }

    match sentence.tokens.iter().filter(|t| t.head == 0).count() {
        0 => violations.push(Violation::NoRoot),
        1 => {}
        _ => violations.push(Violation::MultipleRoots),
    }

    if heads_ok && has_cycle(sentence) {
        violations.push(Violation::CyclicHeads);
    }
    violations
}

fn has_cycle(sentence: &ParsedSentence) -> bool {
    let n = sentence.len();
    sentence.tokens.iter().any(|start| {
        let mut current = start.head;
        let mut steps = 0;
        while current != 0 {
            if steps > n {
                return true;
            }
            current = sentence.tokens[current - 1].head;
            steps += 1;
        }
        false
    })
}

/// A sentence block that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line where the block starts.
    pub line: usize,
    pub sentence_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConlluDocument {
    pub sentences: Vec<ParsedSentence>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Block {
    start_line: usize,
    sent_id: Option<String>,
    tokens: Vec<Token>,
    error: Option<String>,
}

impl Block {
    fn new(start_line: usize) -> Self {
        Block {
            start_line,
            sent_id: None,
            tokens: Vec::new(),
            error: None,
        }
    }
}

/// Reads CoNLL-U. Malformed blocks are reported as diagnostics and skipped;
/// multiword-token ranges and empty nodes are ignored. Sentences without a
/// `# sent_id` comment are named `<source>:<ordinal>`.
pub fn parse_conllu<R: BufRead>(reader: R, source: &str) -> Result<ConlluDocument> {
    let mut doc = ConlluDocument::default();
    let mut block: Option<Block> = None;
    let mut ordinal = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(b) = block.take() {
                ordinal += 1;
                finish_block(b, ordinal, source, &mut doc);
            }
            continue;
        }
        let current = block.get_or_insert_with(|| Block::new(line_no));
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    current.sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        if current.error.is_some() {
            continue;
        }
        match parse_token_line(line) {
            Ok(Some(token)) => current.tokens.push(token),
            Ok(None) => {}
            Err(message) => current.error = Some(format!("line {line_no}: {message}")),
        }
    }
    if let Some(b) = block.take() {
        ordinal += 1;
        finish_block(b, ordinal, source, &mut doc);
    }
    Ok(doc)
}

fn finish_block(block: Block, ordinal: usize, source: &str, doc: &mut ConlluDocument) {
    let id = block.sent_id.clone().unwrap_or_else(|| format!("{source}:{ordinal}"));
    if block.tokens.is_empty() && block.error.is_none() {
        // comment-only block
        return;
    }
    let reject = |message: String, doc: &mut ConlluDocument| {
        doc.diagnostics.push(Diagnostic {
            line: block.start_line,
            sentence_id: Some(id.clone()),
            message,
        })
    };
    if let Some(message) = block.error.clone() {
        reject(message, doc);
        return;
    }
    let sentence = ParsedSentence {
        id: id.clone(),
        tokens: block.tokens,
        source: source.to_string(),
    };
    let violations = validate(&sentence);
    if violations.is_empty() {
        doc.sentences.push(sentence);
    } else {
        let message = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        reject(message, doc);
    }
}

fn parse_token_line(line: &str) -> std::result::Result<Option<Token>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(format!("expected 10 columns, found {}", cols.len()));
    }
    let id = cols[0];
    if id.contains('-') || id.contains('.') {
        return Ok(None);
    }
    let index: usize = id.parse().map_err(|_| format!("non-integer ID {id:?}"))?;
    let head: usize = cols[6].parse().map_err(|_| format!("non-integer HEAD {:?}", cols[6]))?;
    Ok(Some(Token {
        index,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        head,
        deprel: cols[7].to_string(),
    }))
}

/// Writes sentences as CoNLL-U with a `# sent_id` comment per block. Columns
/// this crate does not track are written as `_`.
pub fn write_conllu<W: Write>(sentences: &[ParsedSentence], mut writer: W) -> Result<()> {
    for sentence in sentences {
        writeln!(writer, "# sent_id = {}", sentence.id)?;
        for t in &sentence.tokens {
            writeln!(
                writer,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                t.index, t.form, t.lemma, t.upos, t.head, t.deprel
            )?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
