//! Symbol-sequence datasets: line-oriented text with a JSON sidecar.
//!
//! Each line holds one sequence of space-separated symbols, optionally
//! prefixed by a `label:` token. The sidecar (`name.meta.json`) stores the
//! alphabet size, label order, burn-in and provenance.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use hqmm_core::models::{Hmm, ModelSpec};
use hqmm_core::quantum::seeded_rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, read_text, sibling, write_json, write_text};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Generator description, e.g. `random-hmm(4,4,7)` or a model file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<String>,
    /// One entry per sequence altered or removed on ingestion.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filter_log: Vec<String>,
    /// Transformations applied after creation, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceDataset {
    pub alphabet: usize,
    pub sequences: Vec<Vec<usize>>,
    /// Index into `label_names` for every sequence, when labeled.
    pub labels: Option<Vec<usize>>,
    pub label_names: Vec<String>,
    pub burn_in: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    alphabet: usize,
    sequences: usize,
    #[serde(default)]
    burn_in: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
    #[serde(default)]
    provenance: Provenance,
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    sibling(path, "meta.json")
}

impl SequenceDataset {
    pub fn unlabeled(alphabet: usize, sequences: Vec<Vec<usize>>) -> Result<Self> {
        let ds = Self {
            alphabet,
            sequences,
            labels: None,
            label_names: Vec::new(),
            burn_in: 0,
            provenance: Provenance::default(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet == 0 {
            return Err(hqmm_core::Error::Input("alphabet size must be positive".into()).into());
        }
        for (i, seq) in self.sequences.iter().enumerate() {
            if let Some(&y) = seq.iter().find(|&&y| y >= self.alphabet) {
                return Err(hqmm_core::Error::InSequence {
                    sequence: i,
                    source: Box::new(hqmm_core::Error::SymbolOutOfRange {
                        symbol: y,
                        alphabet: self.alphabet,
                    }),
                }
                .into());
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.sequences.len() {
                return Err(hqmm_core::Error::Input(format!(
                    "{} labels for {} sequences",
                    labels.len(),
                    self.sequences.len()
                ))
                .into());
            }
            if let Some(&l) = labels.iter().find(|&&l| l >= self.label_names.len()) {
                return Err(hqmm_core::Error::Input(format!("label index {l} has no name")).into());
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Sequences carrying label index `label`.
    pub fn with_label(&self, label: usize) -> Vec<Vec<usize>> {
        match &self.labels {
            Some(labels) => self
                .sequences
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == label)
                .map(|(s, _)| s.clone())
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn label_counts(&self) -> Vec<(String, usize)> {
        let labels = self.labels.as_deref().unwrap_or(&[]);
        self.label_names
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), labels.iter().filter(|&&l| l == i).count()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, seq) in self.sequences.iter().enumerate() {
            if let Some(labels) = &self.labels {
                let _ = write!(out, "{}:", self.label_names[labels[i]]);
                if !seq.is_empty() {
                    out.push(' ');
                }
            }
            let symbols: Vec<String> = seq.iter().map(|y| y.to_string()).collect();
            out.push_str(&symbols.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        write_text(path, &self.to_text())?;
        write_json(
            &sidecar_path(path),
            &Sidecar {
                alphabet: self.alphabet,
                sequences: self.sequences.len(),
                burn_in: self.burn_in,
                labels: self.label_names.clone(),
                provenance: self.provenance.clone(),
            },
        )
    }

    /// Loads a dataset; without a sidecar the alphabet is inferred as the
    /// largest symbol plus one and labels are ordered by name. Blank lines
    /// and `#` comments are skipped, so unlabeled empty sequences do not
    /// survive a round trip.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let meta_path = sidecar_path(path);
        let meta: Option<Sidecar> = if meta_path.exists() {
            Some(read_json(&meta_path)?)
        } else {
            None
        };
        let mut sequences = Vec::new();
        let mut raw_labels: Vec<Option<String>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, body) = match line.split_once(':') {
                Some((l, b)) => (Some(l.trim().to_string()), b),
                None => (None, line),
            };
            let seq = body
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|e| Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        message: format!("bad symbol `{tok}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            sequences.push(seq);
            raw_labels.push(label);
        }
        let labeled = raw_labels.iter().filter(|l| l.is_some()).count();
        if labeled != 0 && labeled != raw_labels.len() {
            return Err(Error::format(path, "either every sequence or none must carry a label"));
        }
        let mut label_names: Vec<String> = match &meta {
            Some(m) if !m.labels.is_empty() => m.labels.clone(),
            _ => raw_labels
                .iter()
                .flatten()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        let labels = if labeled == 0 {
            label_names.clear();
            None
        } else {
            let mut out = Vec::with_capacity(raw_labels.len());
            for name in raw_labels.iter().flatten() {
                match label_names.iter().position(|n| n == name) {
                    Some(i) => out.push(i),
                    None => return Err(Error::format(path, format!("label `{name}` missing from sidecar"))),
                }
            }
            Some(out)
        };
        let expected = meta.as_ref().map(|m| m.sequences);
        let inferred = sequences.iter().flatten().max().map_or(1, |&m| m + 1);
        let ds = Self {
            alphabet: meta.as_ref().map_or(inferred, |m| m.alphabet),
            sequences,
            labels,
            label_names,
            burn_in: meta.as_ref().map_or(0, |m| m.burn_in),
            provenance: meta.map(|m| m.provenance).unwrap_or_default(),
        };
        if let Some(m) = expected {
            if m != ds.sequences.len() {
                return Err(Error::format(
                    path,
                    format!("sidecar lists {m} sequences, file has {}", ds.sequences.len()),
                ));
            }
        }
        ds.validate().map_err(|e| match e {
            Error::Core(c) => Error::format(path, c),
            other => other,
        })?;
        Ok(ds)
    }
}

/// Source of generated data.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Seeded random HMM with Dirichlet(1) columns.
    RandomHmm {
        n: usize,
        s: usize,
        seed: u64,
    },
    Model {
        model: ModelSpec,
        source: String,
    },
}

impl Generator {
    /// Parses `random-hmm(n,s,seed)`.
    pub fn parse(text: &str) -> Result<Self> {
        let usage = || Error::Usage(format!("expected random-hmm(n,s,seed), got `{text}`"));
        let inner = text
            .trim()
            .strip_prefix("random-hmm(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(usage)?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(usage());
        }
        let n = parts[0].parse().map_err(|_| usage())?;
        let s = parts[1].parse().map_err(|_| usage())?;
        let seed = parts[2].parse().map_err(|_| usage())?;
        Ok(Generator::RandomHmm { n, s, seed })
    }

    pub fn describe(&self) -> String {
        match self {
            Generator::RandomHmm { n, s, seed } => format!("random-hmm({n},{s},{seed})"),
            Generator::Model { source, .. } => source.clone(),
        }
    }

    pub fn model(&self) -> Result<ModelSpec> {
        match self {
            Generator::RandomHmm { n, s, seed } => Ok(ModelSpec::Hmm(Hmm::random(*n, *s, *seed)?)),
            Generator::Model { model, .. } => Ok(model.clone()),
        }
    }
}

/// Draws `num_sequences` sequences of `length` symbols from one seeded
/// stream.
pub fn generate_dataset(
    generator: &Generator,
    num_sequences: usize,
    length: usize,
    seed: u64,
) -> Result<SequenceDataset> {
    let model = generator.model()?;
    let mut rng = seeded_rng(seed);
    let sequences = (0..num_sequences)
        .map(|_| model.sample_with(length, &mut rng))
        .collect::<hqmm_core::Result<Vec<_>>>()?;
    let mut ds = SequenceDataset::unlabeled(hqmm_core::models::LikelihoodModel::alphabet_size(&model), sequences)?;
    ds.provenance = Provenance {
        generator: Some(generator.describe()),
        seed: Some(seed),
        history: vec![format!("generate {num_sequences} x {length}")],
        ..Provenance::default()
    };
    Ok(ds)
}

/// Train/validation sizes and sequence length for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub train: usize,
    pub validation: usize,
    pub length: usize,
}

impl Default for Protocol {
    /// 20 training and 10 validation sequences of length 3000.
    fn default() -> Self {
        Self {
            train: 20,
            validation: 10,
            length: 3000,
        }
    }
}

/// Training and validation sets drawn from one stream, training first.
pub fn generate_protocol(
    generator: &Generator,
    protocol: Protocol,
    seed: u64,
) -> Result<(SequenceDataset, SequenceDataset)> {
    let all = generate_dataset(generator, protocol.train + protocol.validation, protocol.length, seed)?;
    let mut train = all.clone();
    let mut val = all;
    let rest = train.sequences.split_off(protocol.train);
    val.sequences = rest;
    train
        .provenance
        .history
        .push(format!("first {} sequences (training)", protocol.train));
    val.provenance
        .history
        .push(format!("last {} sequences (validation)", protocol.validation));
    Ok((train, val))
}

/// Cuts every sequence into `⌊L / sub_length⌋` disjoint consecutive pieces
/// (a trailing remainder is dropped) and records `burn_in` for downstream
/// training and evaluation.
pub fn reshape_sequences(ds: &SequenceDataset, sub_length: usize, burn_in: usize) -> Result<SequenceDataset> {
    if sub_length == 0 || sub_length <= burn_in {
        return Err(
            hqmm_core::Error::Input(format!("subsequence length {sub_length} must exceed burn-in {burn_in}")).into(),
        );
    }
    if let Some((i, s)) = ds.sequences.iter().enumerate().find(|(_, s)| s.len() < sub_length) {
        return Err(hqmm_core::Error::Input(format!(
            "sequence {i} has length {}, shorter than the subsequence length {sub_length}",
            s.len()
        ))
        .into());
    }
    let mut sequences = Vec::new();
    let mut labels = ds.labels.as_ref().map(|_| Vec::new());
    for (i, seq) in ds.sequences.iter().enumerate() {
        for chunk in seq.chunks_exact(sub_length) {
            sequences.push(chunk.to_vec());
            if let (Some(out), Some(src)) = (labels.as_mut(), ds.labels.as_ref()) {
                out.push(src[i]);
            }
        }
    }
    let mut provenance = ds.provenance.clone();
    provenance
        .history
        .push(format!("reshape sub_length={sub_length} burn_in={burn_in}"));
    Ok(SequenceDataset {
        alphabet: ds.alphabet,
        sequences,
        labels,
        label_names: ds.label_names.clone(),
        burn_in,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hqmm_core::models::Hmm;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    #[test]
    fn deterministic_generator_gives_constant_sequences() {
        let h = Hmm::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        let g = Generator::Model {
            model: ModelSpec::Hmm(h),
            source: "fixed".into(),
        };
        let ds = generate_dataset(&g, 3, 50, 1).unwrap();
        assert!(ds.sequences.iter().all(|s| s.len() == 50 && s.iter().all(|&y| y == 1)));
    }

    #[test]
    fn default_protocol_sizes() {
        let g = Generator::parse("random-hmm(2,3,1)").unwrap();
        let (train, val) = generate_protocol(&g, Protocol::default(), 9).unwrap();
        assert_eq!(train.len(), 20);
        assert_eq!(val.len(), 10);
        assert!(train.sequences.iter().chain(&val.sequences).all(|s| s.len() == 3000));
        assert_eq!(train.alphabet, 3);
    }

    #[test]
    fn symbol_marginals_match_stationary_emissions() {
        let h = Hmm::new(
            DMatrix::from_row_slice(2, 2, &[0.9, 0.3, 0.1, 0.7]),
            DMatrix::from_row_slice(2, 2, &[0.8, 0.25, 0.2, 0.75]),
            DVector::from_vec(vec![0.75, 0.25]),
        )
        .unwrap();
        let expected = h.emission() * h.stationary_distribution();
        let g = Generator::Model {
            model: ModelSpec::Hmm(h),
            source: "two-state".into(),
        };
        let ds = generate_dataset(&g, 1, 100_000, 3).unwrap();
        let ones = ds.sequences[0].iter().filter(|&&y| y == 1).count() as f64 / 1e5;
        assert!((ones - expected[1]).abs() < 0.01, "{ones} vs {}", expected[1]);
    }

    #[test]
    fn reshape_arithmetic() {
        let ds = SequenceDataset::unlabeled(2, vec![vec![0; 3000], vec![1; 3000]]).unwrap();
        let r = reshape_sequences(&ds, 300, 100).unwrap();
        assert_eq!(r.len(), 20);
        assert_eq!(r.burn_in, 100);
        let same = reshape_sequences(&ds, 3000, 0).unwrap();
        assert_eq!(same.sequences, ds.sequences);
        assert!(reshape_sequences(&ds, 100, 100).is_err());
        assert!(reshape_sequences(&ds, 3001, 0).is_err());
    }

    #[test]
    fn text_roundtrip_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.txt");
        let ds = SequenceDataset {
            alphabet: 4,
            sequences: vec![vec![0, 3, 2], vec![1], vec![]],
            labels: Some(vec![1, 0, 1]),
            label_names: vec!["N".into(), "EI".into()],
            burn_in: 0,
            provenance: Provenance {
                seed: Some(4),
                ..Default::default()
            },
        };
        ds.save(&path).unwrap();
        assert_eq!(SequenceDataset::load(&path).unwrap(), ds);
    }

    #[test]
    fn load_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "0 1\n1 x\n").unwrap();
        match SequenceDataset::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn reshape_concatenates_to_prefix(len in 10usize..200, sub in 2usize..10, seed in 0u64..50) {
            let g = Generator::RandomHmm { n: 2, s: 3, seed };
            let ds = generate_dataset(&g, 1, len, seed).unwrap();
            let r = reshape_sequences(&ds, sub, 1).unwrap();
            let joined: Vec<usize> = r.sequences.concat();
            prop_assert_eq!(r.len(), len / sub);
            prop_assert_eq!(&joined[..], &ds.sequences[0][..joined.len()]);
        }
    }
}
