//! Corpus data model: documents, sentences, annotations, JSONL persistence,
//! and validation.
//!
//! All offsets are char indices. Sentences are derived deterministically
//! from document text at load time and are never persisted. Unknown JSON
//! keys on document and annotation objects round-trip untouched.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::textprep::{self, PrepConfig};

pub const RULE_COUNT: usize = 5;

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClinicalNote,
    NewsArticle,
    PressRelease,
    Synthetic,
}

/// Dataset split. Assigned once per document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Three-way sentence label for food-safety event classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentenceLabel {
    Recall,
    Outbreak,
    Neither,
}

impl SentenceLabel {
    pub const ALL: [SentenceLabel; 3] = [
        SentenceLabel::Recall,
        SentenceLabel::Outbreak,
        SentenceLabel::Neither,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SentenceLabel::Recall => "Recall",
            SentenceLabel::Outbreak => "Outbreak",
            SentenceLabel::Neither => "Neither",
        }
    }
}

/// The six food-safety entity types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    Org,
    Prdt,
    Cau,
    Dis,
    NumAffected,
    Loc,
}

impl EntityType {
    pub const ALL: [EntityType; 6] = [
        EntityType::Org,
        EntityType::Prdt,
        EntityType::Cau,
        EntityType::Dis,
        EntityType::NumAffected,
        EntityType::Loc,
    ];

    /// Column heading used in rendered entity reports.
    pub fn short_name(&self) -> &'static str {
        match self {
            EntityType::Org => "Org",
            EntityType::Prdt => "Prdt",
            EntityType::Cau => "Cau",
            EntityType::Dis => "Dis",
            EntityType::NumAffected => "#Aff",
            EntityType::Loc => "Loc",
        }
    }
}

/// A single text with identity, provenance, and split assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: Source,
    pub split: Split,
    /// Unknown keys from the JSONL line, preserved on save.
    pub extra: Map<String, Value>,
}

/// A sentence of a document, with char offsets into the document text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// A char-offset region of a document supporting one diagnostic rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceSpan {
    pub doc_id: String,
    pub rule_id: u8,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// A typed span inside one sentence; offsets are sentence-relative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub doc_id: String,
    pub sentence_index: usize,
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Gold annotations for one document. Which fields are populated depends on
/// the task schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub doc_id: String,
    pub insomnia: Option<bool>,
    pub rule_tags: Option<Vec<bool>>,
    pub sentence_labels: BTreeMap<usize, SentenceLabel>,
    pub evidence_spans: Vec<EvidenceSpan>,
    pub entities: Vec<EntityMention>,
    pub extra: Map<String, Value>,
}

impl AnnotationSet {
    pub fn new(doc_id: impl Into<String>) -> Self {
        AnnotationSet {
            doc_id: doc_id.into(),
            ..AnnotationSet::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.insomnia.is_none()
            && self.rule_tags.is_none()
            && self.sentence_labels.is_empty()
            && self.evidence_spans.is_empty()
            && self.entities.is_empty()
            && self.extra.is_empty()
    }
}

/// Which annotation fields a corpus is allowed to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// Document-level insomnia label, five rule tags, evidence spans.
    Task4,
    /// Sentence labels and entity mentions.
    Task5,
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub doc_id: String,
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "document {:?}, {}: {}", self.doc_id, self.field, self.rule)
    }
}

/// Outcome of [`validate`]; empty means every invariant holds.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// An immutable set of documents with derived sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    sentences: Vec<Vec<Sentence>>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    /// Build a corpus, deriving sentences with the given preprocessing
    /// config. Fails on duplicate ids.
    pub fn from_documents(documents: Vec<Document>, prep: &PrepConfig) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for (i, doc) in documents.iter().enumerate() {
            if by_id.insert(doc.id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(doc.id.clone()));
            }
        }
        let sentences = documents
            .iter()
            .map(|doc| {
                textprep::split_sentences(&doc.text, prep)
                    .into_iter()
                    .enumerate()
                    .map(|(index, span)| Sentence {
                        doc_id: doc.id.clone(),
                        index,
                        start: span.start,
                        end: span.end,
                        text: span.text,
                    })
                    .collect()
            })
            .collect();
        Ok(Corpus {
            documents,
            sentences,
            by_id,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.documents[i])
    }

    pub fn sentences(&self, id: &str) -> Option<&[Sentence]> {
        self.by_id.get(id).map(|&i| self.sentences[i].as_slice())
    }

    /// Documents restricted to a split, in corpus order.
    pub fn split_docs(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    /// All sentences of all documents, in corpus order.
    pub fn all_sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.sentences.iter().flatten()
    }
}

/// Annotation sets keyed by document id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationStore {
    by_doc: BTreeMap<String, AnnotationSet>,
}

impl AnnotationStore {
    pub fn new() -> Self {
        AnnotationStore::default()
    }

    pub fn insert(&mut self, set: AnnotationSet) -> Result<()> {
        if self.by_doc.contains_key(&set.doc_id) {
            return Err(Error::DuplicateDocId(set.doc_id.clone()));
        }
        self.by_doc.insert(set.doc_id.clone(), set);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&AnnotationSet> {
        self.by_doc.get(doc_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AnnotationSet> {
        self.by_doc.values()
    }

    pub fn len(&self) -> usize {
        self.by_doc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_doc.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Wire structs (JSONL schema)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EvidenceSpanWire {
    rule_id: u8,
    start: usize,
    end: usize,
}

#[derive(Serialize, Deserialize)]
struct EntityWire {
    sentence: usize,
    #[serde(rename = "type")]
    entity_type: EntityType,
    start: usize,
    end: usize,
}

#[derive(Serialize, Deserialize, Default)]
struct AnnotationWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    insomnia: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule_tags: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sentence_labels: BTreeMap<String, SentenceLabel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    evidence_spans: Vec<EvidenceSpanWire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    entities: Vec<EntityWire>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct DocumentLine {
    id: String,
    text: String,
    source: Source,
    split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotations: Option<AnnotationWire>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

// ---------------------------------------------------------------------------
// Load / save
// ---------------------------------------------------------------------------

/// Load a JSONL corpus with inline annotations, using default preprocessing
/// for sentence derivation.
pub fn load_corpus(path: impl AsRef<Path>, schema: Schema) -> Result<(Corpus, AnnotationStore)> {
    load_corpus_with(path, schema, &PrepConfig::default())
}

/// Load a JSONL corpus with inline annotations, splitting sentences with the
/// given preprocessing config. Each line must be a document object; a first
/// line holding provenance (`tool_version` and no `id`) is skipped.
pub fn load_corpus_with(
    path: impl AsRef<Path>,
    schema: Schema,
    prep: &PrepConfig,
) -> Result<(Corpus, AnnotationStore)> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut docs = Vec::new();
    let mut wires = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 && is_provenance_header(line) {
            continue;
        }
        let parsed: DocumentLine =
            serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        let DocumentLine {
            id,
            text,
            source,
            split,
            annotations,
            extra,
        } = parsed;
        if let Some(wire) = annotations {
            wires.push((id.clone(), wire));
        }
        docs.push(Document {
            id,
            text,
            source,
            split,
            extra,
        });
    }

    let corpus = Corpus::from_documents(docs, prep)?;
    let mut store = AnnotationStore::new();
    for (doc_id, wire) in wires {
        let set = resolve_annotation(&corpus, &doc_id, wire)?;
        store.insert(set)?;
    }

    let report = validate(&corpus, &store, schema);
    if let Some(v) = report.violations.into_iter().next() {
        return Err(Error::Validation(v));
    }
    Ok((corpus, store))
}

/// Load a standalone annotations JSONL file (one object per line, each with
/// an explicit `doc_id`) against an already-loaded corpus.
pub fn load_annotations(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    schema: Schema,
) -> Result<AnnotationStore> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut store = AnnotationStore::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 && is_provenance_header(line) {
            continue;
        }
        let wire: AnnotationWire =
            serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        let doc_id = wire
            .doc_id
            .clone()
            .ok_or_else(|| Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: "annotation line is missing doc_id".into(),
            })?;
        let set = resolve_annotation(corpus, &doc_id, wire)?;
        store.insert(set)?;
    }
    let report = validate(corpus, &store, schema);
    if let Some(v) = report.violations.into_iter().next() {
        return Err(Error::Validation(v));
    }
    Ok(store)
}

fn is_provenance_header(line: &str) -> bool {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(map)) => map.contains_key("tool_version") && !map.contains_key("id"),
        _ => false,
    }
}

/// Fill span texts from the document/sentence slices. Out-of-range offsets
/// become validation errors naming the document.
fn resolve_annotation(corpus: &Corpus, doc_id: &str, wire: AnnotationWire) -> Result<AnnotationSet> {
    let doc = corpus
        .doc(doc_id)
        .ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))?;
    let sentences = corpus.sentences(doc_id).unwrap_or(&[]);

    let mut set = AnnotationSet::new(doc_id);
    set.insomnia = wire.insomnia;
    set.rule_tags = wire.rule_tags;
    set.extra = wire.extra;

    for (key, label) in wire.sentence_labels {
        let index: usize = key.parse().map_err(|_| {
            Error::Validation(Violation {
                doc_id: doc_id.to_string(),
                field: "sentence_labels".into(),
                rule: format!("key {key:?} is not a sentence index"),
            })
        })?;
        set.sentence_labels.insert(index, label);
    }

    for span in wire.evidence_spans {
        let text = textprep::char_slice(&doc.text, span.start, span.end).ok_or_else(|| {
            Error::Validation(Violation {
                doc_id: doc_id.to_string(),
                field: "evidence_spans".into(),
                rule: format!(
                    "offsets [{},{}) out of range for document of length {}",
                    span.start,
                    span.end,
                    textprep::char_len(&doc.text)
                ),
            })
        })?;
        set.evidence_spans.push(EvidenceSpan {
            doc_id: doc_id.to_string(),
            rule_id: span.rule_id,
            start: span.start,
            end: span.end,
            text,
        });
    }

    for ent in wire.entities {
        let sentence = sentences.get(ent.sentence).ok_or_else(|| {
            Error::Validation(Violation {
                doc_id: doc_id.to_string(),
                field: "entities".into(),
                rule: format!("sentence index {} out of range", ent.sentence),
            })
        })?;
        let text = textprep::char_slice(&sentence.text, ent.start, ent.end).ok_or_else(|| {
            Error::Validation(Violation {
                doc_id: doc_id.to_string(),
                field: "entities".into(),
                rule: format!(
                    "offsets [{},{}) out of range for sentence {} of length {}",
                    ent.start,
                    ent.end,
                    ent.sentence,
                    textprep::char_len(&sentence.text)
                ),
            })
        })?;
        set.entities.push(EntityMention {
            doc_id: doc_id.to_string(),
            sentence_index: ent.sentence,
            entity_type: ent.entity_type,
            start: ent.start,
            end: ent.end,
            text,
        });
    }

    Ok(set)
}

fn annotation_to_wire(set: &AnnotationSet, inline: bool) -> AnnotationWire {
    AnnotationWire {
        doc_id: if inline { None } else { Some(set.doc_id.clone()) },
        insomnia: set.insomnia,
        rule_tags: set.rule_tags.clone(),
        sentence_labels: set
            .sentence_labels
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        evidence_spans: set
            .evidence_spans
            .iter()
            .map(|s| EvidenceSpanWire {
                rule_id: s.rule_id,
                start: s.start,
                end: s.end,
            })
            .collect(),
        entities: set
            .entities
            .iter()
            .map(|e| EntityWire {
                sentence: e.sentence_index,
                entity_type: e.entity_type,
                start: e.start,
                end: e.end,
            })
            .collect(),
        extra: set.extra.clone(),
    }
}

/// Render one corpus line (document plus inline annotations) as canonical
/// JSON with sorted keys.
pub fn document_line_json(doc: &Document, annotations: Option<&AnnotationSet>) -> Result<String> {
    let line = DocumentLine {
        id: doc.id.clone(),
        text: doc.text.clone(),
        source: doc.source,
        split: doc.split,
        annotations: annotations
            .filter(|set| !set.is_empty())
            .map(|set| annotation_to_wire(set, true)),
        extra: doc.extra.clone(),
    };
    // Round-trip through Value so keys come out sorted.
    let value = serde_json::to_value(&line)?;
    Ok(serde_json::to_string(&value)?)
}

/// Write a corpus as JSONL with inline annotations, one document per line,
/// deterministic key order. `load_corpus` inverts this exactly.
pub fn save_corpus(
    corpus: &Corpus,
    annotations: &AnnotationStore,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for doc in corpus.documents() {
        let line = document_line_json(doc, annotations.get(&doc.id))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Check every corpus and annotation invariant; violations are returned as
/// data, never as errors.
pub fn validate(corpus: &Corpus, annotations: &AnnotationStore, schema: Schema) -> ValidationReport {
    let mut v = Vec::new();

    for doc in corpus.documents() {
        if doc.text.is_empty() {
            v.push(Violation {
                doc_id: doc.id.clone(),
                field: "text".into(),
                rule: "text must be non-empty".into(),
            });
        }
        let sentences = corpus.sentences(&doc.id).unwrap_or(&[]);
        let mut prev_end = 0;
        for (i, s) in sentences.iter().enumerate() {
            if s.index != i || s.start < prev_end || s.start >= s.end {
                v.push(Violation {
                    doc_id: doc.id.clone(),
                    field: "sentences".into(),
                    rule: format!("sentence {i} overlaps or is out of order"),
                });
            }
            match textprep::char_slice(&doc.text, s.start, s.end) {
                Some(slice) if slice == s.text => {}
                _ => v.push(Violation {
                    doc_id: doc.id.clone(),
                    field: "sentences".into(),
                    rule: format!("sentence {i} text does not match its offsets"),
                }),
            }
            prev_end = s.end;
        }
    }

    for set in annotations.iter() {
        let doc = match corpus.doc(&set.doc_id) {
            Some(d) => d,
            None => {
                v.push(Violation {
                    doc_id: set.doc_id.clone(),
                    field: "doc_id".into(),
                    rule: "annotation references an unknown document".into(),
                });
                continue;
            }
        };
        let sentences = corpus.sentences(&set.doc_id).unwrap_or(&[]);

        match (set.insomnia, &set.rule_tags) {
            (Some(_), Some(tags)) => {
                if tags.len() != RULE_COUNT {
                    v.push(Violation {
                        doc_id: set.doc_id.clone(),
                        field: "rule_tags".into(),
                        rule: format!("expected {RULE_COUNT} rule tags, got {}", tags.len()),
                    });
                }
                if set.insomnia == Some(false) && tags.iter().any(|t| *t) {
                    v.push(Violation {
                        doc_id: set.doc_id.clone(),
                        field: "rule_tags".into(),
                        rule: "rule_tags must be all false when insomnia is false".into(),
                    });
                }
            }
            (None, None) => {}
            _ => v.push(Violation {
                doc_id: set.doc_id.clone(),
                field: "rule_tags".into(),
                rule: "rule_tags must be present exactly when insomnia is present".into(),
            }),
        }

        for (index, _) in &set.sentence_labels {
            if *index >= sentences.len() {
                v.push(Violation {
                    doc_id: set.doc_id.clone(),
                    field: "sentence_labels".into(),
                    rule: format!("sentence index {index} out of range"),
                });
            }
        }

        for span in &set.evidence_spans {
            if span.rule_id as usize >= RULE_COUNT {
                v.push(Violation {
                    doc_id: set.doc_id.clone(),
                    field: "evidence_spans".into(),
                    rule: format!("rule_id {} out of range", span.rule_id),
                });
            }
            match textprep::char_slice(&doc.text, span.start, span.end) {
                Some(slice) if slice == span.text => {}
                _ => v.push(Violation {
                    doc_id: set.doc_id.clone(),
                    field: "evidence_spans".into(),
                    rule: format!(
                        "span [{},{}) does not match its stored text",
                        span.start, span.end
                    ),
                }),
            }
        }

        for ent in &set.entities {
            match sentences.get(ent.sentence_index) {
                None => v.push(Violation {
                    doc_id: set.doc_id.clone(),
                    field: "entities".into(),
                    rule: format!("sentence index {} out of range", ent.sentence_index),
                }),
                Some(sentence) => match textprep::char_slice(&sentence.text, ent.start, ent.end) {
                    Some(slice) if slice == ent.text => {}
                    _ => v.push(Violation {
                        doc_id: set.doc_id.clone(),
                        field: "entities".into(),
                        rule: format!(
                            "entity span [{},{}) does not match sentence {}",
                            ent.start, ent.end, ent.sentence_index
                        ),
                    }),
                },
            }
        }

        match schema {
            Schema::Task4 => {
                if !set.sentence_labels.is_empty() || !set.entities.is_empty() {
                    v.push(Violation {
                        doc_id: set.doc_id.clone(),
                        field: "annotations".into(),
                        rule: "sentence_labels/entities are not part of the task4 schema".into(),
                    });
                }
            }
            Schema::Task5 => {
                if set.insomnia.is_some() || !set.evidence_spans.is_empty() {
                    v.push(Violation {
                        doc_id: set.doc_id.clone(),
                        field: "annotations".into(),
                        rule: "insomnia/evidence_spans are not part of the task5 schema".into(),
                    });
                }
            }
        }
    }

    ValidationReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str, split: Split) -> Document {
        Document {
            id: id.into(),
            text: text.into(),
            source: Source::NewsArticle,
            split,
            extra: Map::new(),
        }
    }

    #[test]
    fn load_minimal_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            r#"{"id":"d1","text":"No sleep.","source":"clinical_note","split":"train"}"#,
        )
        .unwrap();
        let (corpus, store) = load_corpus(&path, Schema::Task4).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(store.is_empty());
        assert_eq!(corpus.doc("d1").unwrap().text, "No sleep.");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            "{\"id\":\"d1\",\"text\":\"ok\",\"source\":\"synthetic\",\"split\":\"train\"}\n{not json}\n",
        )
        .unwrap();
        match load_corpus(&path, Schema::Task4) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-line error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_span_names_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            r#"{"id":"d1","text":"No sleep.","source":"clinical_note","split":"train","annotations":{"insomnia":true,"rule_tags":[true,false,false,false,false],"evidence_spans":[{"rule_id":0,"start":0,"end":99}]}}"#,
        )
        .unwrap();
        match load_corpus(&path, Schema::Task4) {
            Err(Error::Validation(v)) => {
                assert_eq!(v.doc_id, "d1");
                assert!(v.rule.contains("out of range"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rule_tags_without_insomnia_flagged() {
        let corpus =
            Corpus::from_documents(vec![doc("d1", "text here", Split::Train)], &PrepConfig::default())
                .unwrap();
        let mut set = AnnotationSet::new("d1");
        set.insomnia = Some(false);
        set.rule_tags = Some(vec![true, false, false, false, false]);
        let mut store = AnnotationStore::new();
        store.insert(set).unwrap();
        let report = validate(&corpus, &store, Schema::Task4);
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule.contains("all false")));
    }

    #[test]
    fn empty_corpus_saves_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = Corpus::from_documents(vec![], &PrepConfig::default()).unwrap();
        save_corpus(&corpus, &AnnotationStore::new(), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn save_then_load_round_trips_spans() {
        let text = "Patient reports difficulty falling asleep. Melatonin at bedtime.";
        let corpus = Corpus::from_documents(
            vec![doc("d1", text, Split::Train)],
            &PrepConfig::default(),
        )
        .unwrap();
        let mut set = AnnotationSet::new("d1");
        set.insomnia = Some(true);
        set.rule_tags = Some(vec![true, false, false, false, false]);
        set.evidence_spans.push(EvidenceSpan {
            doc_id: "d1".into(),
            rule_id: 0,
            start: 0,
            end: 42,
            text: textprep::char_slice(text, 0, 42).unwrap(),
        });
        let mut store = AnnotationStore::new();
        store.insert(set).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        save_corpus(&corpus, &store, &path).unwrap();
        let (corpus2, store2) = load_corpus(&path, Schema::Task4).unwrap();
        assert_eq!(corpus, corpus2);
        assert_eq!(store, store2);
    }

    #[test]
    fn unknown_keys_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            r#"{"id":"d1","text":"ok text","source":"synthetic","split":"train","organizer_field":42}"#,
        )
        .unwrap();
        let (corpus, store) = load_corpus(&path, Schema::Task5).unwrap();
        assert_eq!(corpus.doc("d1").unwrap().extra["organizer_field"], 42);
        let path2 = dir.path().join("c2.jsonl");
        save_corpus(&corpus, &store, &path2).unwrap();
        let (corpus2, _) = load_corpus(&path2, Schema::Task5).unwrap();
        assert_eq!(corpus, corpus2);
    }

    #[test]
    fn duplicate_id_rejected() {
        let docs = vec![doc("d1", "a b", Split::Train), doc("d1", "c d", Split::Dev)];
        match Corpus::from_documents(docs, &PrepConfig::default()) {
            Err(Error::DuplicateDocId(id)) => assert_eq!(id, "d1"),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn schema_restricts_fields() {
        let corpus = Corpus::from_documents(
            vec![doc("d1", "A recall happened.", Split::Train)],
            &PrepConfig::default(),
        )
        .unwrap();
        let mut set = AnnotationSet::new("d1");
        set.sentence_labels.insert(0, SentenceLabel::Recall);
        let mut store = AnnotationStore::new();
        store.insert(set).unwrap();
        assert!(validate(&corpus, &store, Schema::Task5).is_empty());
        assert!(!validate(&corpus, &store, Schema::Task4).is_empty());
    }

    proptest! {
        // Random small corpora with annotations derived from the text itself
        // must round-trip exactly.
        #[test]
        fn corpus_round_trip(
            texts in proptest::collection::vec("[a-zA-Z ]{1,40}", 1..5),
            label_seed in any::<u8>(),
        ) {
            let prep = PrepConfig::default();
            let docs: Vec<Document> = texts
                .iter()
                .enumerate()
                .filter(|(_, t)| !t.trim().is_empty())
                .map(|(i, t)| doc(&format!("d{i}"), t.trim(), Split::Train))
                .collect();
            prop_assume!(!docs.is_empty());
            let corpus = Corpus::from_documents(docs, &prep).unwrap();

            let mut store = AnnotationStore::new();
            for d in corpus.documents() {
                let sentences = corpus.sentences(&d.id).unwrap();
                let mut set = AnnotationSet::new(&d.id);
                for s in sentences {
                    let label = SentenceLabel::ALL[(label_seed as usize + s.index) % 3];
                    set.sentence_labels.insert(s.index, label);
                }
                if !set.sentence_labels.is_empty() {
                    store.insert(set).unwrap();
                }
            }

            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c.jsonl");
            save_corpus(&corpus, &store, &path).unwrap();
            let (corpus2, store2) = load_corpus(&path, Schema::Task5).unwrap();
            prop_assert_eq!(corpus, corpus2);
            prop_assert_eq!(store, store2);
        }
    }
}
