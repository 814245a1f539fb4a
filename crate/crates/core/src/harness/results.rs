//! Per-run records and the CSV/JSON files built from them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::w_to_dbm;
use crate::error::{MinnError, Result};
use crate::model::TrainOutcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub power_frozen: bool,
    pub train_loss: f64,
    /// W.
    pub train_power_mean: f64,
    pub test_accuracy: f64,
    /// W.
    pub test_power: f64,
    pub test_ce: f64,
}

/// Outcome of one (point, seed) training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    /// Ordered `(axis, value)` pairs identifying the sweep point.
    pub axes: Vec<(String, String)>,
    pub seed: u64,
    /// Hex SHA-256 of the run's resolved configuration.
    pub config_digest: String,
    pub best_accuracy: f64,
    /// Mean test power in W at the best epoch.
    pub mean_power: f64,
    pub best_epoch: usize,
    /// Wall-clock training time; not part of the CSV output.
    #[serde(default)]
    pub train_seconds: f64,
    pub traces: Vec<TraceRecord>,
}

impl RunRecord {
    pub fn from_outcome(
        experiment: &str,
        axes: Vec<(String, String)>,
        seed: u64,
        config_digest: String,
        out: &TrainOutcome,
    ) -> Self {
        RunRecord {
            experiment: experiment.to_string(),
            axes,
            seed,
            config_digest,
            best_accuracy: out.best_metrics.accuracy,
            mean_power: out.best_metrics.mean_power,
            best_epoch: out.best_epoch,
            train_seconds: 0.0,
            traces: out
                .traces
                .iter()
                .map(|m| TraceRecord {
                    epoch: m.epoch,
                    power_frozen: m.power_frozen,
                    train_loss: m.train_loss,
                    train_power_mean: m.train_power_mean,
                    test_accuracy: m.test.accuracy,
                    test_power: m.test.mean_power,
                    test_ce: m.test.mean_ce,
                })
                .collect(),
        }
    }

    pub fn mean_power_mw(&self) -> f64 {
        self.mean_power * 1e3
    }

    pub fn mean_power_dbm(&self) -> f64 {
        w_to_dbm(self.mean_power)
    }
}

/// File-system-safe identifier of a sweep point.
pub fn point_id(axes: &[(String, String)]) -> String {
    let parts: Vec<String> = axes
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    if parts.is_empty() {
        "run".into()
    } else {
        parts
            .join("_")
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "=-_.".contains(c) {
                    c
                } else {
                    '-'
                }
            })
            .collect()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> MinnError {
    MinnError::io(path, std::io::Error::other(e))
}

fn axis_names(records: &[RunRecord]) -> Vec<String> {
    records
        .first()
        .map(|r| r.axes.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default()
}

/// `results.csv` body: one row per (point, seed) in the given order.
pub fn results_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(axis_names(records));
    header.extend(
        [
            "seed",
            "best_accuracy",
            "mean_power_mW",
            "mean_power_dBm",
            "best_epoch",
        ]
        .map(String::from),
    );
    let err = |e| csv_error(Path::new("results.csv"), e);
    w.write_record(&header).map_err(err)?;
    for r in records {
        let mut row = vec![r.experiment.clone()];
        row.extend(r.axes.iter().map(|(_, v)| v.clone()));
        row.extend([
            r.seed.to_string(),
            r.best_accuracy.to_string(),
            r.mean_power_mw().to_string(),
            r.mean_power_dbm().to_string(),
            r.best_epoch.to_string(),
        ]);
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| MinnError::io("results.csv", std::io::Error::other(e.to_string())))
}

/// `traces.csv` body: one row per (point, seed, epoch).
pub fn traces_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(axis_names(records));
    header.extend(
        [
            "seed",
            "epoch",
            "power_frozen",
            "train_loss",
            "train_power_mW",
            "test_accuracy",
            "test_power_mW",
            "test_ce",
        ]
        .map(String::from),
    );
    let err = |e| csv_error(Path::new("traces.csv"), e);
    w.write_record(&header).map_err(err)?;
    for r in records {
        for t in &r.traces {
            let mut row = vec![r.experiment.clone()];
            row.extend(r.axes.iter().map(|(_, v)| v.clone()));
            row.extend([
                r.seed.to_string(),
                t.epoch.to_string(),
                t.power_frozen.to_string(),
                t.train_loss.to_string(),
                (t.train_power_mean * 1e3).to_string(),
                t.test_accuracy.to_string(),
                (t.test_power * 1e3).to_string(),
                t.test_ce.to_string(),
            ]);
            w.write_record(&row).map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| MinnError::io("traces.csv", std::io::Error::other(e.to_string())))
}

/// Mean and sample standard deviation across seeds of one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub axes: BTreeMap<String, String>,
    pub seeds: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub power_mw_mean: f64,
    pub power_mw_std: f64,
    /// dBm of `power_mw_mean`.
    pub power_dbm_of_mean: f64,
    pub best_epoch_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub points: Vec<PointSummary>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups records by point, keeping first-appearance order.
pub fn summarize(experiment: &str, records: &[RunRecord]) -> Summary {
    let mut order: Vec<&Vec<(String, String)>> = Vec::new();
    for r in records {
        if !order.contains(&&r.axes) {
            order.push(&r.axes);
        }
    }
    let points = order
        .into_iter()
        .map(|axes| {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| &r.axes == axes).collect();
            let acc: Vec<f64> = runs.iter().map(|r| r.best_accuracy).collect();
            let mw: Vec<f64> = runs.iter().map(|r| r.mean_power_mw()).collect();
            let ep: Vec<f64> = runs.iter().map(|r| r.best_epoch as f64).collect();
            let (accuracy_mean, accuracy_std) = mean_std(&acc);
            let (power_mw_mean, power_mw_std) = mean_std(&mw);
            PointSummary {
                axes: axes.iter().cloned().collect(),
                seeds: runs.len(),
                accuracy_mean,
                accuracy_std,
                power_mw_mean,
                power_mw_std,
                power_dbm_of_mean: 10.0 * power_mw_mean.log10(),
                best_epoch_mean: mean_std(&ep).0,
            }
        })
        .collect();
    Summary {
        experiment: experiment.to_string(),
        points,
    }
}

/// Two `N_t × N_r` tables (accuracy, power in mW) of seed-averaged values.
pub fn heatmaps(summary: &Summary, n_t: &[usize], n_r: &[usize]) -> (String, String) {
    let lookup = |t: usize, r: usize| {
        summary.points.iter().find(|p| {
            p.axes.get("N_t").map(String::as_str) == Some(&t.to_string())
                && p.axes.get("N_r").map(String::as_str) == Some(&r.to_string())
        })
    };
    let mut acc = String::from("N_t\\N_r");
    let mut pow = acc.clone();
    for r in n_r {
        acc.push_str(&format!(",{r}"));
        pow.push_str(&format!(",{r}"));
    }
    acc.push('\n');
    pow.push('\n');
    for &t in n_t {
        acc.push_str(&t.to_string());
        pow.push_str(&t.to_string());
        for &r in n_r {
            match lookup(t, r) {
                Some(p) => {
                    acc.push_str(&format!(",{}", p.accuracy_mean));
                    pow.push_str(&format!(",{}", p.power_mw_mean));
                }
                None => {
                    acc.push(',');
                    pow.push(',');
                }
            }
        }
        acc.push('\n');
        pow.push('\n');
    }
    (acc, pow)
}

/// Writes `bytes` to `path` through a temporary file so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| MinnError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| MinnError::io(path, e))
}
