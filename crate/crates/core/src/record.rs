//! JSON-lines sentence records shared by every file this crate reads or
//! writes.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{ErrorType, Label, LabelScheme, LabeledSentence, ParsedSentence, Token};
use crate::error::{GedError, Result};
use crate::inject::{EditRecord, InjectionOutcome, SplitRole};

/// One line of a labeled-sentence file. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub upos: Vec<String>,
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
    pub labels: Vec<String>,
    pub error_type: Option<ErrorType>,
    pub edit: Option<EditRecord>,
    pub source: String,
    /// Only present on injection outcomes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_role: Option<SplitRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_lemma: Option<String>,
}

impl SentenceRecord {
    pub fn from_labeled(sentence: &LabeledSentence) -> Self {
        let s = &sentence.sentence;
        let column = |f: fn(&Token) -> String| s.tokens.iter().map(f).collect::<Vec<_>>();
        SentenceRecord {
            id: s.id.clone(),
            tokens: column(|t| t.form.clone()),
            lemmas: column(|t| t.lemma.clone()),
            upos: column(|t| t.upos.clone()),
            heads: s.tokens.iter().map(|t| t.head).collect(),
            deprels: column(|t| t.deprel.clone()),
            labels: sentence.labels.iter().map(ToString::to_string).collect(),
            error_type: None,
            edit: None,
            source: s.source.clone(),
            split_role: None,
            anchor_lemma: None,
        }
    }

    pub fn from_outcome(outcome: &InjectionOutcome) -> Self {
        SentenceRecord {
            error_type: Some(outcome.error_type),
            edit: Some(outcome.edit.clone()),
            split_role: Some(outcome.split_role),
            anchor_lemma: Some(outcome.anchor_lemma.clone()),
            ..Self::from_labeled(&outcome.labeled)
        }
    }

    /// Inverse of [`SentenceRecord::from_outcome`].
    pub fn to_outcome(&self) -> Result<InjectionOutcome> {
        let missing = |field: &str| GedError::InvalidSentence {
            id: self.id.clone(),
            reason: format!("not an injection outcome: missing {field}"),
        };
        let error_type = self.error_type.ok_or_else(|| missing("error_type"))?;
        let edit = self.edit.clone().ok_or_else(|| missing("edit"))?;
        let split_role = self.split_role.ok_or_else(|| missing("split_role"))?;
        let anchor_lemma = self.anchor_lemma.clone().ok_or_else(|| missing("anchor_lemma"))?;
        let source_id = self
            .id
            .strip_suffix(&format!("/{error_type}"))
            .ok_or_else(|| missing("source id prefix"))?
            .to_string();
        Ok(InjectionOutcome {
            labeled: self.to_labeled(&LabelScheme::typed())?,
            edit,
            error_type,
            source_id,
            split_role,
            anchor_lemma,
        })
    }

    pub fn to_parsed(&self) -> Result<ParsedSentence> {
        let n = self.tokens.len();
        let columns = [self.lemmas.len(), self.upos.len(), self.heads.len(), self.deprels.len()];
        if columns.iter().any(|&len| len != n) {
            return Err(GedError::InvalidSentence {
                id: self.id.clone(),
                reason: "token columns differ in length".into(),
            });
        }
        let tokens = (0..n)
            .map(|i| Token {
                index: i + 1,
                form: self.tokens[i].clone(),
                lemma: self.lemmas[i].clone(),
                upos: self.upos[i].clone(),
                head: self.heads[i],
                deprel: self.deprels[i].clone(),
            })
            .collect();
        Ok(ParsedSentence {
            id: self.id.clone(),
            tokens,
            source: self.source.clone(),
        })
    }

    pub fn to_labeled(&self, scheme: &LabelScheme) -> Result<LabeledSentence> {
        let labels = self
            .labels
            .iter()
            .map(|l| {
                let label: Label = l.parse()?;
                scheme.project(label).ok_or_else(|| GedError::LabelOutsideScheme {
                    label: l.clone(),
                    scheme: scheme.kind().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledSentence::new(self.to_parsed()?, labels, scheme.clone())
    }
}

/// Writes one record per line.
pub fn write_records<W: Write>(records: &[SentenceRecord], mut writer: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records, skipping blank lines.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<SentenceRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| GedError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Serializes labeled sentences as JSON lines. All sentences must share one
/// scheme.
pub fn serialize_labeled<W: Write>(sentences: &[LabeledSentence], writer: W) -> Result<()> {
    if let Some(first) = sentences.first() {
        if sentences.iter().any(|s| s.scheme != first.scheme) {
            return Err(GedError::MixedSchemes);
        }
    }
    let records: Vec<_> = sentences.iter().map(SentenceRecord::from_labeled).collect();
    write_records(&records, writer)
}

/// Reads labeled sentences, projecting their labels into `scheme` (typed
/// labels collapse to `E` under the binary scheme).
pub fn read_labeled<R: BufRead>(reader: R, scheme: &LabelScheme) -> Result<Vec<LabeledSentence>> {
    read_records(reader)?.iter().map(|r| r.to_labeled(scheme)).collect()
}

pub fn read_outcomes<R: BufRead>(reader: R) -> Result<Vec<InjectionOutcome>> {
    read_records(reader)?.iter().map(SentenceRecord::to_outcome).collect()
}

pub fn serialize_outcomes<W: Write>(outcomes: &[InjectionOutcome], writer: W) -> Result<()> {
    let records: Vec<_> = outcomes.iter().map(SentenceRecord::from_outcome).collect();
    write_records(&records, writer)
}
