//! Training configuration and run files.
//!
//! A run is stored as `name.json` plus two model files next to it
//! (`name.best.json`, `name.final.json`) that the run references by file
//! name; the trajectory can also be exported as CSV.

use std::path::{Path, PathBuf};

use hqmm_core::learning::{EpochRecord, TrainingConfig, TrainingRun, UpdateScheme};
use hqmm_core::models::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, read_text, sibling, write_json, write_text};
use crate::model_file::{load_model, save_model};

/// Serializable mirror of [`TrainingConfig`]; also the flat key-value
/// config-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub batches: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub update: String,
    pub reorth_period: usize,
    pub reorth_tolerance: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        (&TrainingConfig::default()).into()
    }
}

impl From<&TrainingConfig> for ConfigFile {
    fn from(c: &TrainingConfig) -> Self {
        Self {
            tau: c.tau,
            alpha: c.alpha,
            beta: c.beta,
            batches: c.batches,
            epochs: c.epochs,
            batch_size: c.batch_size,
            burn_in: c.burn_in,
            seed: c.seed,
            update: c.update.name().into(),
            reorth_period: c.reorth_period,
            reorth_tolerance: c.reorth_tolerance,
        }
    }
}

impl ConfigFile {
    pub fn to_config(&self) -> Result<TrainingConfig> {
        let c = TrainingConfig {
            tau: self.tau,
            alpha: self.alpha,
            beta: self.beta,
            batches: self.batches,
            epochs: self.epochs,
            batch_size: self.batch_size,
            burn_in: self.burn_in,
            seed: self.seed,
            update: UpdateScheme::parse(&self.update)?,
            reorth_period: self.reorth_period,
            reorth_tolerance: self.reorth_tolerance,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Experiment description read from a TOML file: architecture, training
/// hyperparameters and data recipe, all as top-level keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arch: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val: Option<PathBuf>,
    /// Cut sequences into pieces of this length before training.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_length: Option<usize>,
    #[serde(flatten)]
    pub training: ConfigFile,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Recipe {
            arch: Option<[usize; 3]>,
            data: Option<PathBuf>,
            val: Option<PathBuf>,
            sub_length: Option<usize>,
        }
        let bad = |e: toml::de::Error| Error::format(path, e);
        let mut table: toml::Table = toml::from_str(&read_text(path)?).map_err(bad)?;
        let mut recipe = toml::Table::new();
        for key in ["arch", "data", "val", "sub_length"] {
            if let Some(v) = table.remove(key) {
                recipe.insert(key.into(), v);
            }
        }
        let recipe: Recipe = recipe.try_into().map_err(bad)?;
        let training: ConfigFile = table.try_into().map_err(bad)?;
        let cfg = Self {
            arch: recipe.arch,
            data: recipe.data,
            val: recipe.val,
            sub_length: recipe.sub_length,
            training,
        };
        if let Some(sub) = cfg.sub_length {
            if sub <= cfg.training.burn_in {
                return Err(Error::format(
                    path,
                    format!("sub_length {sub} must exceed burn_in {}", cfg.training.burn_in),
                ));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub epoch: usize,
    pub loss: f64,
    pub validation_da: f64,
    pub seconds: f64,
    pub max_feasibility: f64,
    pub tau: f64,
}

impl From<&EpochRecord> for RecordRow {
    fn from(r: &EpochRecord) -> Self {
        Self {
            epoch: r.epoch,
            loss: r.loss,
            validation_da: r.validation_da,
            seconds: r.seconds,
            max_feasibility: r.max_feasibility,
            tau: r.tau,
        }
    }
}

impl From<&RecordRow> for EpochRecord {
    fn from(r: &RecordRow) -> Self {
        Self {
            epoch: r.epoch,
            loss: r.loss,
            validation_da: r.validation_da,
            seconds: r.seconds,
            max_feasibility: r.max_feasibility,
            tau: r.tau,
        }
    }
}

/// Files and seeds that produced a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub arch: [usize; 3],
    pub config: ConfigFile,
    pub inputs: RunInputs,
    pub records: Vec<RecordRow>,
    pub best_epoch: usize,
    pub best_validation_da: f64,
    /// Model files, relative to the run file's directory.
    pub best_model: String,
    pub final_model: String,
    pub skipped_batches: usize,
    pub step_halvings: usize,
    pub reprojections: usize,
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

pub fn save_run(path: &Path, run: &TrainingRun, inputs: &RunInputs) -> Result<()> {
    let best_path = sibling(path, "best.json");
    let final_path = sibling(path, "final.json");
    save_model(&best_path, &ModelSpec::KHqmm(run.best.clone()))?;
    save_model(&final_path, &ModelSpec::KHqmm(run.final_model.clone()))?;
    let (n, s, w) = run.arch;
    let file = RunFile {
        arch: [n, s, w],
        config: (&run.config).into(),
        inputs: inputs.clone(),
        records: run.records.iter().map(Into::into).collect(),
        best_epoch: run.best_epoch,
        best_validation_da: run.best_validation_da,
        best_model: file_name(&best_path),
        final_model: file_name(&final_path),
        skipped_batches: run.skipped_batches,
        step_halvings: run.step_halvings,
        reprojections: run.reprojections,
    };
    write_json(path, &file)
}

pub fn load_run(path: &Path) -> Result<(TrainingRun, RunInputs)> {
    let file: RunFile = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let khqmm = |name: &str| -> Result<_> {
        match load_model(&dir.join(name))? {
            ModelSpec::KHqmm(q) => Ok(q),
            other => Err(Error::format(
                path,
                format!("{name} holds a {} model, expected khqmm", other.family()),
            )),
        }
    };
    let run = TrainingRun {
        config: file.config.to_config()?,
        arch: (file.arch[0], file.arch[1], file.arch[2]),
        records: file.records.iter().map(Into::into).collect(),
        best: khqmm(&file.best_model)?,
        best_epoch: file.best_epoch,
        best_validation_da: file.best_validation_da,
        final_model: khqmm(&file.final_model)?,
        skipped_batches: file.skipped_batches,
        step_halvings: file.step_halvings,
        reprojections: file.reprojections,
    };
    Ok((run, file.inputs))
}

/// `epoch,loss,validation_da,seconds` rows.
pub fn trajectory_csv(records: &[EpochRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss", "validation_da", "seconds"])
        .map_err(|e| Error::format("<trajectory>", e))?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            r.loss.to_string(),
            r.validation_da.to_string(),
            r.seconds.to_string(),
        ])
        .map_err(|e| Error::format("<trajectory>", e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("<trajectory>", e))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_trajectory(path: &Path, records: &[EpochRecord]) -> Result<()> {
    write_text(path, &trajectory_csv(records)?)
}

/// Reads `(seconds, da)` points from a CSV with a `seconds` column and a
/// `da` or `validation_da` column.
pub fn read_trajectory(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read_text(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::format(path, e))?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let t = col(&["seconds"]).ok_or_else(|| Error::format(path, "missing `seconds` column"))?;
    let d = col(&["da", "validation_da"]).ok_or_else(|| Error::format(path, "missing `da` column"))?;
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e))?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j).unwrap_or("").trim().parse().map_err(|e| Error::Parse {
                path: path.into(),
                line: i + 2,
                message: format!("{e}"),
            })
        };
        points.push((num(t)?, num(d)?));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hqmm_core::learning::{train_with_clock, FrozenClock};

    #[test]
    fn run_roundtrips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let data = vec![vec![0, 1, 1, 0, 1, 0], vec![1, 1, 0, 0, 1, 1]];
        let cfg = TrainingConfig {
            epochs: 2,
            burn_in: 1,
            batch_size: 1,
            ..TrainingConfig::default()
        };
        let run = train_with_clock(&data, (2, 2, 2), &cfg, &[], &FrozenClock).unwrap();
        let path = dir.path().join("run.json");
        let inputs = RunInputs {
            data: Some("train.txt".into()),
            ..Default::default()
        };
        save_run(&path, &run, &inputs).unwrap();
        let (back, back_inputs) = load_run(&path).unwrap();
        assert_eq!(back, run);
        assert_eq!(back_inputs, inputs);
    }

    #[test]
    fn experiment_config_flat_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            "arch = [4, 4, 2]\ntau = 0.5\nupdate = \"projection\"\nseed = 9\nsub_length = 300\nburn_in = 100\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.arch, Some([4, 4, 2]));
        let t = cfg.training.to_config().unwrap();
        assert_eq!(
            (t.tau, t.seed, t.update, t.alpha),
            (0.5, 9, UpdateScheme::Projection, 0.92)
        );
        std::fs::write(&path, "taux = 1\n").unwrap();
        assert!(ExperimentConfig::load(&path).is_err());
        std::fs::write(&path, "sub_length = 50\nburn_in = 50\n").unwrap();
        assert!(ExperimentConfig::load(&path).is_err());
    }

    #[test]
    fn trajectory_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let records: Vec<EpochRecord> = (0..3)
            .map(|i| EpochRecord {
                epoch: i,
                loss: 1.0 / (i + 1) as f64,
                validation_da: 0.1 * i as f64,
                seconds: 0.3 * i as f64,
                max_feasibility: 0.0,
                tau: 0.75,
            })
            .collect();
        write_trajectory(&path, &records).unwrap();
        let points = read_trajectory(&path).unwrap();
        assert_eq!(
            points,
            records.iter().map(|r| (r.seconds, r.validation_da)).collect::<Vec<_>>()
        );
    }
}
