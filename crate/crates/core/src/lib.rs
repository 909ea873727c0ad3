//! Toolkit for grammatical error detection experiments: rule-based
//! pseudo-error generation over dependency parses, nested training-size
//! ladders with fixed evaluation pools, an averaged-perceptron reference
//! detector, token-level scoring with multi-seed aggregation, and
//! error-type feedback comments.

pub mod baseline;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod feedback;
pub mod inject;
pub mod pipeline;
pub mod record;
pub mod seeding;
pub mod synthetic;

pub use corpus::{
    parse_conllu, validate, write_conllu, ErrorType, Label, LabelScheme, LabeledSentence, ParsedSentence, SchemeKind,
    Token,
};
pub use error::{GedError, Result};
pub use feedback::{annotate, TemplateSet};
pub use inject::{eligible, find_sites, EditOp, EditRecord, InjectionOutcome, Injector, SplitRole, VerbLists};
pub use record::{read_labeled, serialize_labeled, SentenceRecord};
