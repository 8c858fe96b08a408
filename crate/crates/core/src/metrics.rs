//! OCR evaluation: Levenshtein distance at character and word level, CER
//! and WER per line, per-class and weighted-overall aggregation.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::manifest::{self, Difficulty, ManifestError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("reference has no words")]
    EmptyWordReference,
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

/// Minimal number of single-token insertions, deletions, and substitutions
/// transforming `a` into `b`. Two-row dynamic program, unit costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, ai) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, bj) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ai != bj);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Unicode scalar values after NFC normalization.
pub fn normalize_chars(s: &str) -> Vec<char> {
    s.nfc().collect()
}

/// Maximal runs of Unicode whitespace delimit words; no empty tokens.
pub fn tokenize_words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Character error rate: character-level Levenshtein distance divided by
/// the reference character count. May exceed 1.
pub fn cer(hypothesis: &str, reference: &str) -> Result<f64, MetricsError> {
    let r = normalize_chars(reference);
    if r.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h = normalize_chars(hypothesis);
    Ok(levenshtein(&h, &r) as f64 / r.len() as f64)
}

/// Word error rate: word-level Levenshtein distance divided by the
/// reference word count.
pub fn wer(hypothesis: &str, reference: &str) -> Result<f64, MetricsError> {
    let r = tokenize_words(reference);
    if r.is_empty() {
        return Err(MetricsError::EmptyWordReference);
    }
    let h = tokenize_words(hypothesis);
    Ok(levenshtein(&h, &r) as f64 / r.len() as f64)
}

/// Per-line evaluation record with exact integer distances and counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineEval {
    pub id: String,
    pub reference: String,
    pub hypothesis: String,
    pub char_distance: usize,
    pub word_distance: usize,
    pub n_chars: usize,
    pub n_words: usize,
    pub cer: f64,
    pub wer: f64,
    pub difficulty: Difficulty,
}

/// Builds a [`LineEval`]; errors when the reference has no characters or no
/// words.
pub fn evaluate_pair(
    id: &str,
    hypothesis: &str,
    reference: &str,
    difficulty: Difficulty,
) -> Result<LineEval, MetricsError> {
    let ref_chars = normalize_chars(reference);
    if ref_chars.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let ref_words = tokenize_words(reference);
    if ref_words.is_empty() {
        return Err(MetricsError::EmptyWordReference);
    }
    let hyp_chars = normalize_chars(hypothesis);
    let hyp_words = tokenize_words(hypothesis);
    let char_distance = levenshtein(&hyp_chars, &ref_chars);
    let word_distance = levenshtein(&hyp_words, &ref_words);
    Ok(LineEval {
        id: id.to_string(),
        reference: reference.to_string(),
        hypothesis: hypothesis.to_string(),
        char_distance,
        word_distance,
        n_chars: ref_chars.len(),
        n_words: ref_words.len(),
        cer: char_distance as f64 / ref_chars.len() as f64,
        wer: word_distance as f64 / ref_words.len() as f64,
        difficulty,
    })
}

/// Per-class statistics. Macro metrics are unweighted means of per-line
/// rates; micro metrics are pooled distances over pooled lengths. Empty
/// classes report count 0 and null metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub count: usize,
    pub macro_cer: Option<f64>,
    pub macro_wer: Option<f64>,
    pub micro_cer: Option<f64>,
    pub micro_wer: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub reference_manifest: Option<String>,
    pub hypothesis_file: Option<String>,
    pub generated_at_unix: Option<u64>,
}

/// Full evaluation report: per-class records plus the overall values
/// weighted by class line counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: HashMap<Difficulty, ClassReport>,
    pub overall: ClassReport,
    /// Lines with an empty reference, excluded from the rates.
    pub excluded_empty_reference: usize,
    /// Reference lines with no matching hypothesis, scored as empty.
    pub missing_hypotheses: usize,
    pub metadata: ReportMetadata,
}

impl EvalReport {
    pub fn class(&self, difficulty: Difficulty) -> &ClassReport {
        &self.classes[&difficulty]
    }
}

fn class_report(evals: &[&LineEval]) -> ClassReport {
    if evals.is_empty() {
        return ClassReport {
            count: 0,
            macro_cer: None,
            macro_wer: None,
            micro_cer: None,
            micro_wer: None,
        };
    }
    let n = evals.len() as f64;
    let (mut dc, mut nc, mut dw, mut nw) = (0usize, 0usize, 0usize, 0usize);
    for e in evals {
        dc += e.char_distance;
        nc += e.n_chars;
        dw += e.word_distance;
        nw += e.n_words;
    }
    ClassReport {
        count: evals.len(),
        macro_cer: Some(evals.iter().map(|e| e.cer).sum::<f64>() / n),
        macro_wer: Some(evals.iter().map(|e| e.wer).sum::<f64>() / n),
        micro_cer: Some(dc as f64 / nc as f64),
        micro_wer: Some(dw as f64 / nw as f64),
    }
}

/// Aggregates per-line evaluations into per-class and overall statistics.
/// Overall macro values are the count-weighted mean of the class macro
/// values, which equals the grand per-line mean.
pub fn aggregate(evals: &[LineEval]) -> EvalReport {
    let mut classes = HashMap::new();
    let mut weighted_cer = 0.0;
    let mut weighted_wer = 0.0;
    let mut total = 0usize;
    for difficulty in Difficulty::ALL {
        let members: Vec<&LineEval> =
            evals.iter().filter(|e| e.difficulty == difficulty).collect();
        let report = class_report(&members);
        if let (Some(mc), Some(mw)) = (report.macro_cer, report.macro_wer) {
            weighted_cer += report.count as f64 * mc;
            weighted_wer += report.count as f64 * mw;
            total += report.count;
        }
        classes.insert(difficulty, report);
    }
    let all: Vec<&LineEval> = evals.iter().collect();
    let pooled = class_report(&all);
    let overall = ClassReport {
        count: total,
        macro_cer: (total > 0).then(|| weighted_cer / total as f64),
        macro_wer: (total > 0).then(|| weighted_wer / total as f64),
        micro_cer: pooled.micro_cer,
        micro_wer: pooled.micro_wer,
    };
    EvalReport {
        classes,
        overall,
        excluded_empty_reference: 0,
        missing_hypotheses: 0,
        metadata: ReportMetadata::default(),
    }
}

/// Parses a `id<TAB>recognized text` hypothesis file.
pub fn parse_hypotheses(path: &Path) -> Result<HashMap<String, String>, MetricsError> {
    let text = fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, hyp) = line.split_once('\t').ok_or_else(|| MetricsError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: "expected id<TAB>text".into(),
        })?;
        if map.insert(id.to_string(), hyp.to_string()).is_some() {
            return Err(MetricsError::DuplicateId(id.to_string()));
        }
    }
    Ok(map)
}

/// Joins a reference manifest with a hypothesis file and aggregates.
/// References without a hypothesis are scored as empty hypotheses (CER and
/// WER exactly 1); hypothesis ids absent from the manifest are ignored with
/// a warning.
pub fn evaluate_run(
    reference_manifest: &Path,
    hypothesis_file: &Path,
) -> Result<EvalReport, MetricsError> {
    let records = manifest::parse_manifest(reference_manifest)?;
    let mut seen = std::collections::HashSet::new();
    for rec in &records {
        if !seen.insert(rec.id().to_string()) {
            return Err(MetricsError::DuplicateId(rec.id().to_string()));
        }
    }
    let hypotheses = parse_hypotheses(hypothesis_file)?;
    for id in hypotheses.keys() {
        if !seen.contains(id) {
            log::warn!("hypothesis id '{id}' not in reference manifest, ignored");
        }
    }
    let mut evals = Vec::new();
    let mut excluded = 0usize;
    let mut missing = 0usize;
    for rec in &records {
        let hyp = match hypotheses.get(rec.id()) {
            Some(h) => h.as_str(),
            None => {
                missing += 1;
                ""
            }
        };
        match evaluate_pair(rec.id(), hyp, &rec.transcript, rec.difficulty) {
            Ok(eval) => evals.push(eval),
            Err(MetricsError::EmptyReference) | Err(MetricsError::EmptyWordReference) => {
                excluded += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let mut report = aggregate(&evals);
    report.excluded_empty_reference = excluded;
    report.missing_hypotheses = missing;
    report.metadata = ReportMetadata {
        reference_manifest: Some(reference_manifest.display().to_string()),
        hypothesis_file: Some(hypothesis_file.display().to_string()),
        generated_at_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs()),
    };
    Ok(report)
}

/// CSV table mirroring the per-class report layout.
pub fn report_to_csv(report: &EvalReport) -> String {
    let fmt = |v: Option<f64>| v.map(|x| format!("{:.4}", x * 100.0)).unwrap_or_default();
    let mut out = String::from("class,count,macro_cer_pct,macro_wer_pct,micro_cer_pct,micro_wer_pct\n");
    for difficulty in Difficulty::ALL {
        let c = report.class(difficulty);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            difficulty,
            c.count,
            fmt(c.macro_cer),
            fmt(c.macro_wer),
            fmt(c.micro_cer),
            fmt(c.micro_wer)
        ));
    }
    let o = &report.overall;
    out.push_str(&format!(
        "overall,{},{},{},{},{}\n",
        o.count,
        fmt(o.macro_cer),
        fmt(o.macro_wer),
        fmt(o.micro_cer),
        fmt(o.micro_wer)
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein(&chars("abc"), &chars("abc")), 0);
        assert_eq!(levenshtein(&chars(""), &chars("abc")), 3);
        assert_eq!(levenshtein(&chars("kitten"), &chars("sitting")), 3);
    }

    #[test]
    fn cer_examples() {
        assert_eq!(cer("same", "same").unwrap(), 0.0);
        assert_eq!(cer("kitten", "sitting").unwrap(), 3.0 / 7.0);
        assert_eq!(cer("", "abcdef").unwrap(), 1.0);
    }

    #[test]
    fn cer_can_exceed_one() {
        let c = cer("aaaaaaaaaa", "b").unwrap();
        assert_eq!(c, 10.0);
    }

    #[test]
    fn cer_empty_reference_is_error() {
        assert!(matches!(cer("x", ""), Err(MetricsError::EmptyReference)));
    }

    #[test]
    fn cer_uses_nfc() {
        // decomposed e + combining acute vs precomposed é
        assert_eq!(cer("e\u{0301}", "\u{00e9}").unwrap(), 0.0);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize_words("the  quick fox"), vec!["the", "quick", "fox"]);
        assert!(tokenize_words("  ").is_empty());
        assert_eq!(tokenize_words("a\tb"), vec!["a", "b"]);
    }

    #[test]
    fn wer_examples() {
        assert_eq!(wer("the cat sat", "the cat sat on").unwrap(), 0.25);
        assert_eq!(wer("same text", "same text").unwrap(), 0.0);
        assert_eq!(wer("x", "a b").unwrap(), 1.0);
    }

    #[test]
    fn single_char_substitution_scales_by_counts() {
        // one substitution inside one word: d_C = d_W = 1, so the WER is
        // amplified by N_C / N_W relative to the CER
        let e = evaluate_pair("l", "the cat sit", "the cat sat", Difficulty::Easy).unwrap();
        assert_eq!(e.char_distance, 1);
        assert_eq!(e.word_distance, 1);
        assert_eq!(e.wer * e.n_words as f64, 1.0);
        assert_eq!(e.cer * e.n_chars as f64, 1.0);
        assert!(e.n_words < e.n_chars);
    }

    fn eval(cer: f64, difficulty: Difficulty) -> LineEval {
        LineEval {
            id: "x".into(),
            reference: "r".into(),
            hypothesis: "h".into(),
            char_distance: 0,
            word_distance: 0,
            n_chars: 10,
            n_words: 2,
            cer,
            wer: cer,
            difficulty,
        }
    }

    #[test]
    fn aggregate_weighted_mean() {
        let evals = vec![
            eval(0.1, Difficulty::Easy),
            eval(0.1, Difficulty::Easy),
            eval(0.4, Difficulty::Hard),
        ];
        let report = aggregate(&evals);
        assert!((report.overall.macro_cer.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(report.class(Difficulty::Easy).count, 2);
        assert_eq!(report.class(Difficulty::Medium).count, 0);
        assert!(report.class(Difficulty::Medium).macro_cer.is_none());
    }

    #[test]
    fn aggregate_single_line() {
        let report = aggregate(&[eval(0.37, Difficulty::Medium)]);
        assert_eq!(report.overall.macro_cer, Some(0.37));
    }

    #[test]
    fn aggregate_permutation_invariant() {
        let mut evals = vec![
            eval(0.1, Difficulty::Easy),
            eval(0.25, Difficulty::Medium),
            eval(0.4, Difficulty::Hard),
            eval(0.05, Difficulty::Easy),
        ];
        let a = aggregate(&evals);
        evals.reverse();
        let b = aggregate(&evals);
        assert_eq!(a.overall.macro_cer, b.overall.macro_cer);
        assert_eq!(a.overall.micro_wer, b.overall.micro_wer);
    }
}
