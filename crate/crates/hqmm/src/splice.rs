//! Loader for the primate splice-junction DNA data (EI / IE / N labels).
//!
//! Accepts both the UCI line format (`label, name, SEQUENCE`) and the KEEL
//! format (`b, b, ..., b, label`, with `@` header lines). Bases map
//! A, C, G, T → 0, 1, 2, 3.

use std::path::Path;

use serde::Serialize;

use crate::dataset::{Provenance, SequenceDataset};
use crate::error::{Error, Result};
use crate::io::read_text;

pub const LABELS: [&str; 3] = ["EI", "IE", "N"];

/// Label counts of the complete file after sequences with ambiguous bases
/// are dropped.
pub const REFERENCE_COUNTS: [usize; 3] = [762, 765, 1648];

/// Number of records in the complete file.
pub const FULL_RECORDS: usize = 3190;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ambiguity {
    /// Remove every sequence containing a base outside {A, C, G, T}.
    #[default]
    DropSeqs,
    /// Remove the offending characters and keep the sequence.
    StripChars,
}

impl Ambiguity {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "drop-seqs" => Ok(Ambiguity::DropSeqs),
            "strip-chars" => Ok(Ambiguity::StripChars),
            other => Err(Error::Usage(format!(
                "--ambiguous must be strip-chars or drop-seqs, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpliceReport {
    pub records: usize,
    pub counts: Vec<(String, usize)>,
    pub dropped: usize,
    pub stripped_characters: usize,
    /// Set when the complete file was loaded with [`Ambiguity::DropSeqs`].
    pub matches_reference: Option<bool>,
}

fn base(c: char) -> Option<usize> {
    match c.to_ascii_uppercase() {
        'A' => Some(0),
        'C' => Some(1),
        'G' => Some(2),
        'T' => Some(3),
        _ => None,
    }
}

fn label_index(token: &str) -> Option<usize> {
    LABELS.iter().position(|l| l.eq_ignore_ascii_case(token))
}

pub fn load_splice(path: &Path, ambiguity: Ambiguity) -> Result<(SequenceDataset, SpliceReport)> {
    parse_splice(&read_text(path)?, path, ambiguity)
}

pub fn parse_splice(text: &str, path: &Path, ambiguity: Ambiguity) -> Result<(SequenceDataset, SpliceReport)> {
    let mut sequences = Vec::new();
    let mut labels = Vec::new();
    let mut filter_log = Vec::new();
    let mut records = 0;
    let mut dropped = 0;
    let mut stripped_characters = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('@') || line.starts_with('%') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.into(),
            line: lineno + 1,
            message,
        };
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        let (label_token, name, raw): (&str, String, String) = if tokens.len() == 3 {
            (tokens[0], tokens[1].to_string(), tokens[2].to_string())
        } else if tokens.len() > 3 {
            let (last, bases) = tokens.split_last().expect("nonempty");
            if let Some(t) = bases.iter().find(|t| t.chars().count() != 1) {
                return Err(parse_err(format!("expected single-character bases, found `{t}`")));
            }
            (last, format!("line-{}", lineno + 1), bases.concat())
        } else {
            return Err(parse_err(format!("unrecognized record with {} fields", tokens.len())));
        };
        let label = label_index(label_token).ok_or_else(|| parse_err(format!("unknown label `{label_token}`")))?;
        records += 1;
        let mut seq = Vec::with_capacity(raw.len());
        let mut bad = Vec::new();
        for c in raw.chars() {
            match base(c) {
                Some(b) => seq.push(b),
                None => bad.push(c),
            }
        }
        if !bad.is_empty() {
            let bad: String = bad.into_iter().collect();
            match ambiguity {
                Ambiguity::DropSeqs => {
                    filter_log.push(format!("line {}: {name}: dropped (ambiguous `{bad}`)", lineno + 1));
                    dropped += 1;
                    continue;
                }
                Ambiguity::StripChars => {
                    filter_log.push(format!(
                        "line {}: {name}: removed {} ambiguous character(s) `{bad}`",
                        lineno + 1,
                        bad.len()
                    ));
                    stripped_characters += bad.len();
                }
            }
        }
        sequences.push(seq);
        labels.push(label);
    }
    let ds = SequenceDataset {
        alphabet: 4,
        sequences,
        labels: Some(labels),
        label_names: LABELS.iter().map(|s| s.to_string()).collect(),
        burn_in: 0,
        provenance: Provenance {
            source_file: Some(path.display().to_string()),
            filter_log,
            history: vec![format!("load splice (ambiguous: {ambiguity:?})")],
            ..Provenance::default()
        },
    };
    let counts = ds.label_counts();
    let matches_reference = (records == FULL_RECORDS && ambiguity == Ambiguity::DropSeqs)
        .then(|| counts.iter().map(|c| c.1).eq(REFERENCE_COUNTS));
    if matches_reference == Some(false) {
        log::warn!("splice label counts {counts:?} differ from the reference {REFERENCE_COUNTS:?}");
    }
    let report = SpliceReport {
        records,
        counts,
        dropped,
        stripped_characters,
        matches_reference,
    };
    Ok((ds, report))
}
