//! Rule-based extraction: declarative keyword/regex patterns that yield
//! typed entity mentions in sentences and rule-tagged evidence spans in
//! documents.
//!
//! Patterns live in JSON files, not code, so dictionaries can be swapped
//! without a rebuild. Extraction is pure, deterministic, and idempotent.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    Document, EntityMention, EntityType, EvidenceSpan, Sentence, RULE_COUNT,
};
use crate::error::{Error, Result};

/// What a rule file extracts: typed entities from sentences, or rule-tagged
/// evidence spans from documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleMode {
    Entity,
    Evidence,
}

/// Resolution for overlapping matches of the same type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Keep longer matches; of equal-length overlaps, the earlier one.
    #[default]
    LongestMatch,
    /// Keep the earliest-starting match; ties go to the pattern listed
    /// first.
    FirstMatch,
}

/// How a pattern string is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// Literal phrase, matched at word boundaries.
    Keyword,
    /// Raw regular expression.
    Regex,
}

/// What a pattern produces: an entity type, or an insomnia rule id (0-4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleTarget {
    Entity(EntityType),
    Rule(u8),
}

/// One declarative pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct RulePattern {
    pub id: String,
    pub target: RuleTarget,
    pub kind: PatternKind,
    pub pattern: String,
    pub case_insensitive: bool,
    /// Evidence mode: cap the captured context to this many chars on each
    /// side of the match (within the sentence).
    pub window: Option<usize>,
}

#[derive(Debug)]
struct CompiledPattern {
    spec: RulePattern,
    regex: Regex,
}

/// A compiled, immutable set of patterns.
#[derive(Debug)]
pub struct RuleSet {
    mode: RuleMode,
    overlap_policy: OverlapPolicy,
    patterns: Vec<CompiledPattern>,
    rule_names: Option<Vec<String>>,
}

// --- wire format -----------------------------------------------------------

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct PatternWire {
    id: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    entity_type: Option<EntityType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule_id: Option<u8>,
    kind: PatternKind,
    pattern: String,
    #[serde(default = "default_true")]
    case_insensitive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RuleFileWire {
    mode: RuleMode,
    #[serde(default)]
    overlap_policy: OverlapPolicy,
    /// Optional display names for the five evidence rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule_names: Option<Vec<String>>,
    patterns: Vec<PatternWire>,
}

/// Load and compile a rule file. Regex errors name the offending pattern id.
pub fn compile_rules(path: impl AsRef<Path>) -> Result<RuleSet> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let wire: RuleFileWire = serde_json::from_str(&raw)?;
    compile_rule_file(wire)
}

/// Compile a rule file already parsed from JSON text.
pub fn compile_rules_str(json: &str) -> Result<RuleSet> {
    let wire: RuleFileWire = serde_json::from_str(json)?;
    compile_rule_file(wire)
}

fn compile_rule_file(wire: RuleFileWire) -> Result<RuleSet> {
    let mut seen = BTreeSet::new();
    let mut patterns = Vec::with_capacity(wire.patterns.len());
    for p in wire.patterns {
        if !seen.insert(p.id.clone()) {
            return Err(Error::DuplicateRuleId(p.id));
        }
        let target = match (wire.mode, p.entity_type, p.rule_id) {
            (RuleMode::Entity, Some(t), None) => RuleTarget::Entity(t),
            (RuleMode::Evidence, None, Some(r)) if (r as usize) < RULE_COUNT => {
                RuleTarget::Rule(r)
            }
            (RuleMode::Evidence, None, Some(r)) => {
                return Err(Error::RulePattern {
                    id: p.id,
                    message: format!("rule_id {r} out of range 0..{RULE_COUNT}"),
                })
            }
            _ => {
                return Err(Error::RulePattern {
                    id: p.id,
                    message: "pattern must carry `type` in entity mode or `rule_id` in \
                              evidence mode"
                        .into(),
                })
            }
        };
        if p.pattern.is_empty() {
            return Err(Error::RulePattern {
                id: p.id,
                message: "empty pattern".into(),
            });
        }
        let source = match p.kind {
            PatternKind::Keyword => keyword_to_regex(&p.pattern),
            PatternKind::Regex => p.pattern.clone(),
        };
        let regex = RegexBuilder::new(&source)
            .case_insensitive(p.case_insensitive)
            .build()
            .map_err(|e| Error::RulePattern {
                id: p.id.clone(),
                message: e.to_string(),
            })?;
        patterns.push(CompiledPattern {
            spec: RulePattern {
                id: p.id,
                target,
                kind: p.kind,
                pattern: p.pattern,
                case_insensitive: p.case_insensitive,
                window: p.window,
            },
            regex,
        });
    }
    Ok(RuleSet {
        mode: wire.mode,
        overlap_policy: wire.overlap_policy,
        patterns,
        rule_names: wire.rule_names,
    })
}

/// Escape a keyword phrase and anchor it at word boundaries where its edges
/// are word characters.
fn keyword_to_regex(keyword: &str) -> String {
    let escaped = regex::escape(keyword);
    let first_is_word = keyword.chars().next().map(|c| c.is_alphanumeric()).unwrap_or(false);
    let last_is_word = keyword.chars().last().map(|c| c.is_alphanumeric()).unwrap_or(false);
    format!(
        "{}{}{}",
        if first_is_word { r"\b" } else { "" },
        escaped,
        if last_is_word { r"\b" } else { "" },
    )
}

impl RuleSet {
    pub fn mode(&self) -> RuleMode {
        self.mode
    }

    pub fn overlap_policy(&self) -> OverlapPolicy {
        self.overlap_policy
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &RulePattern> {
        self.patterns.iter().map(|p| &p.spec)
    }

    /// Display names for the five evidence rules, when the file supplies
    /// them.
    pub fn rule_names(&self) -> Option<&[String]> {
        self.rule_names.as_deref()
    }
}

/// A raw match before overlap resolution: char offsets plus the pattern that
/// produced it.
#[derive(Debug, Clone)]
struct RawMatch {
    start: usize,
    end: usize,
    pattern_index: usize,
}

/// Run every pattern over the text, returning char-offset matches. Empty
/// matches are dropped.
fn scan(rules: &RuleSet, text: &str) -> Vec<RawMatch> {
    // Byte offset -> char offset lookup.
    let mut byte_to_char: BTreeMap<usize, usize> = BTreeMap::new();
    for (char_idx, (byte_idx, _)) in text.char_indices().enumerate() {
        byte_to_char.insert(byte_idx, char_idx);
    }
    byte_to_char.insert(text.len(), text.chars().count());

    let mut out = Vec::new();
    for (pattern_index, compiled) in rules.patterns.iter().enumerate() {
        for m in compiled.regex.find_iter(text) {
            if m.start() == m.end() {
                continue;
            }
            out.push(RawMatch {
                start: byte_to_char[&m.start()],
                end: byte_to_char[&m.end()],
                pattern_index,
            });
        }
    }
    out
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Resolve overlapping matches of one target group under the ruleset policy.
fn resolve_overlaps(rules: &RuleSet, mut group: Vec<RawMatch>) -> Vec<RawMatch> {
    match rules.overlap_policy {
        OverlapPolicy::LongestMatch => {
            group.sort_by(|a, b| {
                (b.end - b.start)
                    .cmp(&(a.end - a.start))
                    .then(a.start.cmp(&b.start))
                    .then(a.pattern_index.cmp(&b.pattern_index))
            });
        }
        OverlapPolicy::FirstMatch => {
            group.sort_by(|a, b| {
                a.start
                    .cmp(&b.start)
                    .then(a.pattern_index.cmp(&b.pattern_index))
                    .then(b.end.cmp(&a.end))
            });
        }
    }
    let mut kept: Vec<RawMatch> = Vec::new();
    for cand in group {
        if !kept
            .iter()
            .any(|k| overlaps((k.start, k.end), (cand.start, cand.end)))
        {
            kept.push(cand);
        }
    }
    kept.sort_by(|a, b| a.start.cmp(&b.start).then(a.end.cmp(&b.end)));
    kept
}

/// Extract typed entity mentions from one sentence. Mentions carry
/// sentence-relative char offsets and are ordered by start offset.
pub fn extract_entities(rules: &RuleSet, sentence: &Sentence) -> Vec<EntityMention> {
    let matches = scan(rules, &sentence.text);
    let chars: Vec<char> = sentence.text.chars().collect();

    let mut by_type: BTreeMap<EntityType, Vec<RawMatch>> = BTreeMap::new();
    for m in matches {
        if let RuleTarget::Entity(ty) = rules.patterns[m.pattern_index].spec.target {
            by_type.entry(ty).or_default().push(m);
        }
    }

    let mut mentions = Vec::new();
    for (ty, group) in by_type {
        for m in resolve_overlaps(rules, group) {
            mentions.push(EntityMention {
                doc_id: sentence.doc_id.clone(),
                sentence_index: sentence.index,
                entity_type: ty,
                start: m.start,
                end: m.end,
                text: chars[m.start..m.end].iter().collect(),
            });
        }
    }
    mentions.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(a.end.cmp(&b.end))
            .then(a.entity_type.cmp(&b.entity_type))
    });
    mentions
}

/// Extract evidence spans from a document: each pattern hit expands to its
/// enclosing sentence, capped to `window` chars around the match when set.
/// Identical (rule_id, start, end) spans are deduplicated.
pub fn extract_evidence(
    rules: &RuleSet,
    doc: &Document,
    sentences: &[Sentence],
) -> Vec<EvidenceSpan> {
    let matches = scan(rules, &doc.text);
    let chars: Vec<char> = doc.text.chars().collect();

    let mut seen: BTreeSet<(u8, usize, usize)> = BTreeSet::new();
    let mut spans = Vec::new();
    for m in matches {
        let spec = &rules.patterns[m.pattern_index].spec;
        let rule_id = match spec.target {
            RuleTarget::Rule(r) => r,
            RuleTarget::Entity(_) => continue,
        };
        let sentence = match sentences.iter().find(|s| s.start <= m.start && m.start < s.end) {
            Some(s) => s,
            None => continue,
        };
        let (mut start, mut end) = (sentence.start, sentence.end.min(doc_len(&chars)));
        if let Some(w) = spec.window {
            start = start.max(m.start.saturating_sub(w));
            end = end.min(m.end + w);
        }
        if start >= end {
            continue;
        }
        if seen.insert((rule_id, start, end)) {
            spans.push(EvidenceSpan {
                doc_id: doc.id.clone(),
                rule_id,
                start,
                end,
                text: chars[start..end].iter().collect(),
            });
        }
    }
    spans.sort_by(|a, b| {
        a.rule_id
            .cmp(&b.rule_id)
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });
    spans
}

fn doc_len(chars: &[char]) -> usize {
    chars.len()
}

/// Derive document labels from evidence: tag `r` is true iff any span for
/// rule `r` exists; the insomnia label is the OR of the tags.
pub fn classify_by_rules(
    rules: &RuleSet,
    doc: &Document,
    sentences: &[Sentence],
) -> (bool, [bool; RULE_COUNT]) {
    let spans = extract_evidence(rules, doc, sentences);
    let mut tags = [false; RULE_COUNT];
    for span in spans {
        tags[span.rule_id as usize] = true;
    }
    (tags.iter().any(|t| *t), tags)
}
