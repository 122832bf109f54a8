//! Evaluation protocol: confusion matrices, per-class and averaged P/R/F1,
//! multi-label scoring, entity-level F1 (exact and overlap matching), and
//! ROUGE-1 / ROUGE-L over evidence spans.
//!
//! Zero denominators yield 0.0, never NaN, so aggregates always total.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{EntityMention, EntityType, EvidenceSpan};
use crate::error::{Error, Result};
use crate::textprep::{self, PrepConfig};

/// Gold-by-predicted count matrix. Rows are gold classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|row| row.iter().sum::<usize>()).sum()
    }
}

/// Count (gold, predicted) pairs into a confusion matrix.
pub fn confusion(preds: &[usize], golds: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &g) in preds.iter().zip(golds) {
        if p >= num_classes || g >= num_classes {
            return Err(Error::InvalidInput(format!(
                "label out of range: pred {p}, gold {g}, C={num_classes}"
            )));
        }
        counts[g][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Scores for one class (or one label in multi-label mode).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// True when the class never occurs in gold or predictions; its zero
    /// scores are then vacuous rather than failures.
    pub absent: bool,
}

/// Classification scores: per class, macro- and micro-averaged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassScore>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
}

pub(crate) fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

/// Per-class precision/recall/F1 plus macro, micro, and accuracy from a
/// confusion matrix.
pub fn classification_report(cm: &ConfusionMatrix, class_names: &[String]) -> EvalReport {
    let c = cm.num_classes();
    assert_eq!(class_names.len(), c, "class name count must match matrix");
    let total = cm.total();

    let mut per_class = Vec::with_capacity(c);
    let mut pooled_tp = 0usize;
    let mut pooled_fp = 0usize;
    let mut pooled_fn = 0usize;
    for k in 0..c {
        let tp = cm.counts[k][k];
        let fp: usize = (0..c).filter(|&g| g != k).map(|g| cm.counts[g][k]).sum();
        let fn_: usize = (0..c).filter(|&p| p != k).map(|p| cm.counts[k][p]).sum();
        let support: usize = cm.counts[k].iter().sum();
        let predicted: usize = (0..c).map(|g| cm.counts[g][k]).sum();
        let (precision, recall, f1) = prf(tp, fp, fn_);
        per_class.push(ClassScore {
            precision,
            recall,
            f1,
            support,
            absent: support == 0 && predicted == 0,
        });
        pooled_tp += tp;
        pooled_fp += fp;
        pooled_fn += fn_;
    }

    let macro_precision = per_class.iter().map(|s| s.precision).sum::<f64>() / c as f64;
    let macro_recall = per_class.iter().map(|s| s.recall).sum::<f64>() / c as f64;
    let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / c as f64;
    let (_, _, micro_f1) = prf(pooled_tp, pooled_fp, pooled_fn);
    let trace: usize = (0..c).map(|k| cm.counts[k][k]).sum();
    let accuracy = if total > 0 {
        trace as f64 / total as f64
    } else {
        0.0
    };

    EvalReport {
        class_names: class_names.to_vec(),
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        micro_f1,
        accuracy,
    }
}

/// Score each label as an independent binary task (positive class scored),
/// macro-averaged over labels. Accuracy is exact-match (every label of an
/// example correct).
pub fn multilabel_report(
    preds: &[Vec<bool>],
    golds: &[Vec<bool>],
    label_names: &[String],
) -> Result<EvalReport> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    let l = label_names.len();
    for (p, g) in preds.iter().zip(golds) {
        if p.len() != l || g.len() != l {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: g.len(),
            });
        }
    }

    let mut per_class = Vec::with_capacity(l);
    let mut pooled_tp = 0usize;
    let mut pooled_fp = 0usize;
    let mut pooled_fn = 0usize;
    for k in 0..l {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        let mut support = 0;
        let mut predicted = 0;
        for (p, g) in preds.iter().zip(golds) {
            match (p[k], g[k]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
            support += g[k] as usize;
            predicted += p[k] as usize;
        }
        let (precision, recall, f1) = prf(tp, fp, fn_);
        per_class.push(ClassScore {
            precision,
            recall,
            f1,
            support,
            absent: support == 0 && predicted == 0,
        });
        pooled_tp += tp;
        pooled_fp += fp;
        pooled_fn += fn_;
    }

    let macro_precision = per_class.iter().map(|s| s.precision).sum::<f64>() / l as f64;
    let macro_recall = per_class.iter().map(|s| s.recall).sum::<f64>() / l as f64;
    let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / l as f64;
    let (_, _, micro_f1) = prf(pooled_tp, pooled_fp, pooled_fn);
    let exact = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    let accuracy = if preds.is_empty() {
        0.0
    } else {
        exact as f64 / preds.len() as f64
    };

    Ok(EvalReport {
        class_names: label_names.to_vec(),
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        micro_f1,
        accuracy,
    })
}

// ---------------------------------------------------------------------------
// Entity-level F1
// ---------------------------------------------------------------------------

/// How predicted and gold mentions are matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Same sentence, type, and exact offsets.
    Exact,
    /// Same sentence and type, at least one char of overlap; greedy 1-to-1
    /// matching by descending overlap.
    Overlap,
}

/// Scores for one entity type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityTypeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold: usize,
    pub predicted: usize,
}

/// Per-type entity scores plus their unweighted average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityReport {
    pub mode: MatchMode,
    pub per_type: Vec<(String, EntityTypeScore)>,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
}

impl EntityReport {
    pub fn score_for(&self, ty: EntityType) -> &EntityTypeScore {
        &self
            .per_type
            .iter()
            .find(|(name, _)| name == ty.short_name())
            .expect("all six types present")
            .1
    }
}

fn overlap_len(a: (usize, usize), b: (usize, usize)) -> usize {
    let start = a.0.max(b.0);
    let end = a.1.min(b.1);
    end.saturating_sub(start)
}

/// Entity-level F1 per type with the unweighted mean across the six types.
pub fn entity_f1(preds: &[EntityMention], golds: &[EntityMention], mode: MatchMode) -> EntityReport {
    let mut per_type = Vec::with_capacity(EntityType::ALL.len());
    for ty in EntityType::ALL {
        let p: Vec<&EntityMention> = preds.iter().filter(|m| m.entity_type == ty).collect();
        let g: Vec<&EntityMention> = golds.iter().filter(|m| m.entity_type == ty).collect();
        let tp = match mode {
            MatchMode::Exact => exact_tp(&p, &g),
            MatchMode::Overlap => overlap_tp(&p, &g),
        };
        let (precision, recall, f1) = prf(tp, p.len() - tp, g.len() - tp);
        per_type.push((
            ty.short_name().to_string(),
            EntityTypeScore {
                precision,
                recall,
                f1,
                gold: g.len(),
                predicted: p.len(),
            },
        ));
    }
    let n = per_type.len() as f64;
    let avg_precision = per_type.iter().map(|(_, s)| s.precision).sum::<f64>() / n;
    let avg_recall = per_type.iter().map(|(_, s)| s.recall).sum::<f64>() / n;
    let avg_f1 = per_type.iter().map(|(_, s)| s.f1).sum::<f64>() / n;
    EntityReport {
        mode,
        per_type,
        avg_precision,
        avg_recall,
        avg_f1,
    }
}

/// Multiset matching on (doc, sentence, start, end).
fn exact_tp(preds: &[&EntityMention], golds: &[&EntityMention]) -> usize {
    let mut gold_counts: BTreeMap<(&str, usize, usize, usize), usize> = BTreeMap::new();
    for g in golds {
        *gold_counts
            .entry((g.doc_id.as_str(), g.sentence_index, g.start, g.end))
            .or_insert(0) += 1;
    }
    let mut tp = 0;
    for p in preds {
        let key = (p.doc_id.as_str(), p.sentence_index, p.start, p.end);
        if let Some(count) = gold_counts.get_mut(&key) {
            if *count > 0 {
                *count -= 1;
                tp += 1;
            }
        }
    }
    tp
}

/// Greedy 1-to-1 matching by descending char overlap within the same
/// sentence; ties broken by gold then pred input order.
fn overlap_tp(preds: &[&EntityMention], golds: &[&EntityMention]) -> usize {
    let mut pairs = Vec::new();
    for (gi, g) in golds.iter().enumerate() {
        for (pi, p) in preds.iter().enumerate() {
            if g.doc_id != p.doc_id || g.sentence_index != p.sentence_index {
                continue;
            }
            let ov = overlap_len((g.start, g.end), (p.start, p.end));
            if ov >= 1 {
                pairs.push((ov, gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gold_used = vec![false; golds.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut tp = 0;
    for (_, gi, pi) in pairs {
        if !gold_used[gi] && !pred_used[pi] {
            gold_used[gi] = true;
            pred_used[pi] = true;
            tp += 1;
        }
    }
    tp
}

// ---------------------------------------------------------------------------
// ROUGE
// ---------------------------------------------------------------------------

/// Precision/recall/F1 triple for a ROUGE variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

fn rouge_tokens(text: &str) -> Vec<String> {
    let cfg = PrepConfig::default();
    let normalized = textprep::normalize(text, &cfg);
    textprep::tokenize(&normalized)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Unigram overlap with clipped counts (multiset intersection).
pub fn rouge1(pred_text: &str, gold_text: &str) -> RougeScore {
    let pred = rouge_tokens(pred_text);
    let gold = rouge_tokens(gold_text);
    if pred.is_empty() || gold.is_empty() {
        return RougeScore::ZERO;
    }
    let mut gold_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &gold {
        *gold_counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for t in &pred {
        if let Some(c) = gold_counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    RougeScore {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

// Two-row LCS over token sequences.
fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            curr[j] = if a[i - 1] == b[j - 1] {
                prev[j - 1] + 1
            } else {
                prev[j].max(curr[j - 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Longest-common-subsequence ROUGE over token sequences.
pub fn rouge_l(pred_text: &str, gold_text: &str) -> RougeScore {
    let pred = rouge_tokens(pred_text);
    let gold = rouge_tokens(gold_text);
    if pred.is_empty() || gold.is_empty() {
        return RougeScore::ZERO;
    }
    let lcs = lcs_len(&pred, &gold) as f64;
    let precision = lcs / pred.len() as f64;
    let recall = lcs / gold.len() as f64;
    RougeScore {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

/// Mean best-match ROUGE for one rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceRuleScore {
    pub rouge1_f1: f64,
    pub rouge_l_f1: f64,
    pub gold: usize,
}

/// Evidence-span scoring: per rule and overall mean ROUGE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub per_rule: BTreeMap<u8, EvidenceRuleScore>,
    pub rouge1_f1: f64,
    pub rouge_l_f1: f64,
    pub gold: usize,
}

/// Within each (document, rule), match every gold span to the predicted span
/// maximizing ROUGE-1 F (unmatched golds score 0), then average per rule and
/// over all gold spans.
pub fn evidence_score(preds: &[EvidenceSpan], golds: &[EvidenceSpan]) -> EvidenceReport {
    let mut preds_by_group: BTreeMap<(&str, u8), Vec<&EvidenceSpan>> = BTreeMap::new();
    for p in preds {
        preds_by_group
            .entry((p.doc_id.as_str(), p.rule_id))
            .or_default()
            .push(p);
    }

    // (rule_id, rouge1 F, rougeL F) per gold span
    let mut scored = Vec::with_capacity(golds.len());
    for g in golds {
        let candidates = preds_by_group
            .get(&(g.doc_id.as_str(), g.rule_id))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let mut best_r1 = RougeScore::ZERO;
        let mut best_rl = RougeScore::ZERO;
        for p in candidates {
            let r1 = rouge1(&p.text, &g.text);
            if r1.f1 > best_r1.f1 {
                best_r1 = r1;
                best_rl = rouge_l(&p.text, &g.text);
            }
        }
        scored.push((g.rule_id, best_r1.f1, best_rl.f1));
    }

    let mut per_rule = BTreeMap::new();
    for rule_id in scored.iter().map(|s| s.0).collect::<std::collections::BTreeSet<_>>() {
        let of_rule: Vec<&(u8, f64, f64)> = scored.iter().filter(|s| s.0 == rule_id).collect();
        let n = of_rule.len() as f64;
        per_rule.insert(
            rule_id,
            EvidenceRuleScore {
                rouge1_f1: of_rule.iter().map(|s| s.1).sum::<f64>() / n,
                rouge_l_f1: of_rule.iter().map(|s| s.2).sum::<f64>() / n,
                gold: of_rule.len(),
            },
        );
    }

    let n = scored.len();
    let (r1, rl) = if n > 0 {
        (
            scored.iter().map(|s| s.1).sum::<f64>() / n as f64,
            scored.iter().map(|s| s.2).sum::<f64>() / n as f64,
        )
    } else {
        (0.0, 0.0)
    };

    EvidenceReport {
        per_rule,
        rouge1_f1: r1,
        rouge_l_f1: rl,
        gold: n,
    }
}

// ---------------------------------------------------------------------------
// Text table rendering
// ---------------------------------------------------------------------------

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

/// Render a classification report as a fixed-width table with columns
/// ordered F1-score, Precision, Recall (and optionally Accuracy).
pub fn render_classification_table(report: &EvalReport, with_accuracy: bool) -> String {
    let mut header = vec!["Class".to_string(), "F1-score".into(), "Precision".into(), "Recall".into()];
    if with_accuracy {
        header.push("Accuracy".into());
    }
    let mut rows = vec![header];
    for (name, score) in report.class_names.iter().zip(&report.per_class) {
        let mut row = vec![
            name.clone(),
            fmt3(score.f1),
            fmt3(score.precision),
            fmt3(score.recall),
        ];
        if with_accuracy {
            row.push(String::new());
        }
        if score.absent {
            row[0].push_str(" (absent)");
        }
        rows.push(row);
    }
    let mut macro_row = vec![
        "macro".to_string(),
        fmt3(report.macro_f1),
        fmt3(report.macro_precision),
        fmt3(report.macro_recall),
    ];
    if with_accuracy {
        macro_row.push(fmt3(report.accuracy));
    }
    rows.push(macro_row);
    render_rows(&rows)
}

/// Render an entity report in Avg., Org, Prdt, Cau, Dis, #Aff, Loc column
/// order.
pub fn render_entity_table(exact: &EntityReport, overlap: &EntityReport) -> String {
    let mut header = vec!["Match".to_string(), "Avg.".into()];
    header.extend(EntityType::ALL.iter().map(|t| t.short_name().to_string()));
    let mut rows = vec![header];
    for report in [exact, overlap] {
        let label = match report.mode {
            MatchMode::Exact => "exact",
            MatchMode::Overlap => "overlap",
        };
        let mut row = vec![label.to_string(), fmt3(report.avg_f1)];
        row.extend(
            EntityType::ALL
                .iter()
                .map(|t| fmt3(report.score_for(*t).f1)),
        );
        rows.push(row);
    }
    render_rows(&rows)
}

/// Render an evidence report: one row per rule plus the overall mean.
pub fn render_evidence_table(report: &EvidenceReport) -> String {
    let mut rows = vec![vec![
        "Rule".to_string(),
        "ROUGE-1 F".into(),
        "ROUGE-L F".into(),
        "Gold".into(),
    ]];
    for (rule_id, score) in &report.per_rule {
        rows.push(vec![
            format!("rule_{rule_id}"),
            fmt3(score.rouge1_f1),
            fmt3(score.rouge_l_f1),
            score.gold.to_string(),
        ]);
    }
    rows.push(vec![
        "overall".to_string(),
        fmt3(report.rouge1_f1),
        fmt3(report.rouge_l_f1),
        report.gold.to_string(),
    ]);
    render_rows(&rows)
}

fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for (r, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{:<width$}", cell, width = widths[i]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if r == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn mention(
        doc: &str,
        sentence: usize,
        ty: EntityType,
        start: usize,
        end: usize,
    ) -> EntityMention {
        EntityMention {
            doc_id: doc.into(),
            sentence_index: sentence,
            entity_type: ty,
            start,
            end,
            text: "x".repeat(end - start),
        }
    }

    #[test]
    fn confusion_counts_pairs() {
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn confusion_empty_is_zero_matrix() {
        let cm = confusion(&[], &[], 3).unwrap();
        assert_eq!(cm.total(), 0);
    }

    #[test]
    fn confusion_rejects_length_mismatch() {
        assert!(confusion(&[0], &[0, 1], 2).is_err());
    }

    // preds [A,A,B] vs golds [A,B,B]: both classes P/R = (0.5,1.0) and
    // (1.0,0.5), so F1 = 2/3 each, macro 2/3, accuracy 2/3.
    #[test]
    fn report_hand_counted_example() {
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        let report = classification_report(&cm, &names(2));
        let f = 2.0 * 0.5 * 1.0 / 1.5;
        assert!((report.per_class[0].f1 - f).abs() < 1e-12);
        assert!((report.per_class[1].f1 - f).abs() < 1e-12);
        assert!((report.macro_f1 - f).abs() < 1e-12);
        assert!((report.accuracy - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        let report = classification_report(&cm, &names(3));
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.micro_f1, 1.0);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn absent_class_is_flagged_with_zero_scores() {
        let cm = confusion(&[0, 0], &[0, 0], 2).unwrap();
        let report = classification_report(&cm, &names(2));
        assert!(report.per_class[1].absent);
        assert_eq!(report.per_class[1].f1, 0.0);
    }

    #[test]
    fn multilabel_hand_example() {
        let preds = vec![vec![true, false], vec![true, true]];
        let golds = vec![vec![true, true], vec![false, true]];
        let report = multilabel_report(&preds, &golds, &names(2)).unwrap();
        let f = 2.0 * 0.5 * 1.0 / 1.5;
        assert!((report.per_class[0].precision - 0.5).abs() < 1e-12);
        assert!((report.per_class[0].recall - 1.0).abs() < 1e-12);
        assert!((report.per_class[1].precision - 1.0).abs() < 1e-12);
        assert!((report.per_class[1].recall - 0.5).abs() < 1e-12);
        assert!((report.macro_f1 - f).abs() < 1e-12);
    }

    #[test]
    fn multilabel_identical_is_perfect() {
        let m = vec![vec![true, false], vec![false, true]];
        let report = multilabel_report(&m, &m, &names(2)).unwrap();
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn multilabel_all_false_preds_zero_recall() {
        let preds = vec![vec![false, false]; 3];
        let golds = vec![vec![true, false], vec![true, true], vec![false, false]];
        let report = multilabel_report(&preds, &golds, &names(2)).unwrap();
        assert_eq!(report.per_class[0].recall, 0.0);
        assert_eq!(report.per_class[1].recall, 0.0);
    }

    #[test]
    fn entity_identical_sets_score_one() {
        let ms = vec![
            mention("d1", 0, EntityType::Dis, 0, 8),
            mention("d1", 1, EntityType::Org, 3, 6),
        ];
        let report = entity_f1(&ms, &ms, MatchMode::Exact);
        assert_eq!(report.score_for(EntityType::Dis).f1, 1.0);
        assert_eq!(report.score_for(EntityType::Org).f1, 1.0);
    }

    #[test]
    fn entity_no_predictions_scores_zero() {
        let golds = vec![mention("d1", 0, EntityType::Loc, 0, 4)];
        let report = entity_f1(&[], &golds, MatchMode::Exact);
        assert_eq!(report.score_for(EntityType::Loc).f1, 0.0);
        assert_eq!(report.avg_f1, 0.0);
    }

    #[test]
    fn partial_span_differs_by_mode() {
        let pred = vec![mention("d1", 0, EntityType::Prdt, 0, 8)];
        let gold = vec![mention("d1", 0, EntityType::Prdt, 0, 12)];
        let exact = entity_f1(&pred, &gold, MatchMode::Exact);
        let overlap = entity_f1(&pred, &gold, MatchMode::Overlap);
        assert_eq!(exact.score_for(EntityType::Prdt).f1, 0.0);
        assert_eq!(overlap.score_for(EntityType::Prdt).f1, 1.0);
    }

    #[test]
    fn rouge1_identical_and_disjoint() {
        let same = rouge1("a recall today", "a recall today");
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        let none = rouge1("alpha beta", "gamma delta");
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge1_hand_counted() {
        let score = rouge1("the product recall", "product recall announced today");
        assert!((score.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((score.recall - 0.5).abs() < 1e-12);
        assert!((score.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_lcs_oracle_cases() {
        let s = rouge_l("a c", "a b c");
        assert!((s.precision - 1.0).abs() < 1e-12);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f1 - 0.8).abs() < 1e-12);
        // Reversed order: LCS is a single token.
        let rev = rouge_l("c a", "a c");
        assert!((rev.precision - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rouge_empty_side_scores_zero() {
        assert_eq!(rouge1("", "gold words").f1, 0.0);
        assert_eq!(rouge_l("pred words", "").f1, 0.0);
    }

    fn span(doc: &str, rule: u8, text: &str) -> EvidenceSpan {
        EvidenceSpan {
            doc_id: doc.into(),
            rule_id: rule,
            start: 0,
            end: textprep::char_len(text),
            text: text.into(),
        }
    }

    #[test]
    fn evidence_identical_scores_one() {
        let golds = vec![span("d1", 0, "poor sleep reported"), span("d1", 2, "daytime fatigue")];
        let report = evidence_score(&golds, &golds);
        assert_eq!(report.rouge1_f1, 1.0);
        assert_eq!(report.rouge_l_f1, 1.0);
        assert_eq!(report.per_rule.len(), 2);
    }

    #[test]
    fn evidence_no_preds_scores_zero() {
        let golds = vec![span("d1", 1, "unable to sleep")];
        let report = evidence_score(&[], &golds);
        assert_eq!(report.rouge1_f1, 0.0);
    }

    #[test]
    fn evidence_gold_takes_best_candidate() {
        let golds = vec![span("d1", 0, "difficulty falling asleep at night")];
        let preds = vec![
            span("d1", 0, "entirely unrelated words here"),
            span("d1", 0, "difficulty falling asleep at night again"),
        ];
        let report = evidence_score(&preds, &golds);
        let direct = rouge1(&preds[1].text, &golds[0].text).f1;
        assert!((report.rouge1_f1 - direct).abs() < 1e-12);
    }

    #[test]
    fn entity_table_has_expected_columns() {
        let report = entity_f1(&[], &[], MatchMode::Exact);
        let overlap = entity_f1(&[], &[], MatchMode::Overlap);
        let table = render_entity_table(&report, &overlap);
        let header = table.lines().next().unwrap();
        for col in ["Avg.", "Org", "Prdt", "Cau", "Dis", "#Aff", "Loc"] {
            assert!(header.contains(col), "missing column {col} in {header}");
        }
    }
}
