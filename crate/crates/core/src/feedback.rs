//! Feedback comments for typed detections.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{ErrorType, LabeledSentence, ParsedSentence, SchemeKind};
use crate::error::{GedError, Result};

/// Error type -> comment text. `{verb}` and `{prep}` are filled from the
/// flagged token and its governing verb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<ErrorType, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let templates = [
            (
                ErrorType::PrepInfinitive,
                "\"{prep}\" cannot introduce an infinitive. Use \"to\" followed by the base form of the verb.",
            ),
            (
                ErrorType::SubjectVerb,
                "A verb phrase cannot be the subject of a sentence as it is. Turn \"{verb}\" into a \
                 to-infinitive or a gerund.",
            ),
            (
                ErrorType::PrepSubject,
                "A subject does not take a preposition. Remove \"{prep}\" before the subject.",
            ),
            (
                ErrorType::TransVerbPrep,
                "Transitive verbs do not take a preposition. Instead, they take a direct object. \
                 Remove \"{prep}\" after \"{verb}\".",
            ),
            (
                ErrorType::IntransVerbObj,
                "Intransitive verbs such as \"{verb}\" do not take a direct object. Add the preposition \
                 the verb requires before its object.",
            ),
        ]
        .into_iter()
        .map(|(t, text)| (t, text.to_string()))
        .collect();
        TemplateSet { templates }
    }
}

impl TemplateSet {
    /// Reads a JSON object mapping error-type names to comment text. Types
    /// left out have no template.
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_reader(reader)?;
        let mut templates = BTreeMap::new();
        for (name, text) in raw {
            let error_type: ErrorType = name.parse()?;
            if text.trim().is_empty() {
                return Err(GedError::Contract(format!("empty template for {error_type}")));
            }
            templates.insert(error_type, text);
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, error_type: ErrorType) -> Option<&str> {
        self.templates.get(&error_type).map(String::as_str)
    }

    pub fn to_json(&self) -> Result<String> {
        let named: BTreeMap<&str, &str> = self.templates.iter().map(|(t, s)| (t.name(), s.as_str())).collect();
        Ok(serde_json::to_string_pretty(&named)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    /// 1-based index of the flagged token.
    pub token_index: usize,
    pub error_type: ErrorType,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub comments: Vec<Comment>,
}

/// Verb governing the flagged token: the token itself when it is a verb,
/// otherwise the closest verb to its left.
fn governing_verb(sentence: &ParsedSentence, index: usize) -> &str {
    let flagged = &sentence.tokens[index - 1];
    if flagged.upos == "VERB" {
        return &flagged.form;
    }
    sentence.tokens[..index - 1]
        .iter()
        .rev()
        .find(|t| t.upos == "VERB")
        .map_or(&flagged.form, |t| &t.form)
}

/// One comment per non-`C` token, in sentence order.
pub fn annotate(detections: &[LabeledSentence], templates: &TemplateSet) -> Result<Vec<AnnotatedSentence>> {
    detections
        .iter()
        .map(|d| {
            if d.scheme.kind() != SchemeKind::Typed {
                return Err(GedError::Contract(format!(
                    "sentence {} is not under the typed scheme",
                    d.id()
                )));
            }
            let comments = d
                .labels
                .iter()
                .enumerate()
                .filter_map(|(i, label)| label.error_type().map(|t| (i + 1, t)))
                .map(|(index, error_type)| {
                    let text = templates.get(error_type).ok_or(GedError::MissingTemplate(error_type))?;
                    let comment = text
                        .replace("{prep}", &d.sentence.tokens[index - 1].form)
                        .replace("{verb}", governing_verb(&d.sentence, index));
                    Ok(Comment {
                        token_index: index,
                        error_type,
                        comment,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AnnotatedSentence {
                id: d.id().to_string(),
                tokens: d.sentence.forms().map(String::from).collect(),
                comments,
            })
        })
        .collect()
}

pub fn write_annotations<W: Write>(annotated: &[AnnotatedSentence], mut writer: W) -> Result<()> {
    for a in annotated {
        serde_json::to_writer(&mut writer, a)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
