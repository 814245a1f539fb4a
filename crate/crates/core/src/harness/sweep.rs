//! Experiment grids and the resumable multi-seed driver.

use std::borrow::Cow;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use log::{info, warn};
use sha2::{Digest, Sha256};

use super::checkpoint::save_checkpoint;
use super::config::{ExperimentConfig, PowerKind};
use super::results::{
    heatmaps, point_id, results_csv, summarize, traces_csv, write_atomic, RunRecord, Summary,
};
use crate::channel::Environment;
use crate::data::{Dataset, Split};
use crate::error::{MinnError, Result};
use crate::model::{channel_pools, train, MinnWeights, TrainInputs};
use crate::seed::{self, Stream};

/// The five experiment grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    /// SIM width `N` × depth `L`.
    DepthWidth,
    /// Fixed transmit levels plus one learned-power run.
    FixedPower,
    /// Scatterer count `K`.
    Scatterers,
    /// `N_t` × `N_r`.
    Antennas,
    /// Penalty weight `γ`.
    Gamma,
}

impl Sweep {
    pub const ALL: [Sweep; 5] = [
        Sweep::DepthWidth,
        Sweep::FixedPower,
        Sweep::Scatterers,
        Sweep::Antennas,
        Sweep::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sweep::DepthWidth => "depth_width",
            Sweep::FixedPower => "fixed_power",
            Sweep::Scatterers => "scatterers",
            Sweep::Antennas => "antennas",
            Sweep::Gamma => "gamma",
        }
    }
}

impl FromStr for Sweep {
    type Err = MinnError;
    fn from_str(s: &str) -> Result<Self> {
        Sweep::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| MinnError::Config {
                key: "sweep".into(),
                line: None,
                message: format!(
                    "unknown sweep `{s}` (expected one of {})",
                    Sweep::ALL.map(|w| w.name()).join(", ")
                ),
            })
    }
}

/// One grid point: its axis values and the configuration it trains with.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub axes: Vec<(String, String)>,
    pub config: ExperimentConfig,
}

fn axis(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Grid points of `sweep` in output order. Every sweep except the fixed-power
/// baselines trains the power network.
pub fn points(sweep: Sweep, base: &ExperimentConfig) -> Vec<Point> {
    let learned = ExperimentConfig {
        power: PowerKind::Learned,
        ..base.clone()
    };
    let s = &base.sweep;
    let mut out = Vec::new();
    match sweep {
        Sweep::DepthWidth => {
            for &n in &s.widths {
                for &l in &s.depths {
                    out.push(Point {
                        axes: vec![axis("N", n), axis("L", l)],
                        config: ExperimentConfig {
                            n,
                            layers: l,
                            ..learned.clone()
                        },
                    });
                }
            }
        }
        Sweep::FixedPower => {
            for &p in &s.fixed_power_dbm {
                out.push(Point {
                    axes: vec![axis("power", "fixed"), axis("fixed_power_dBm", p)],
                    config: ExperimentConfig {
                        power: PowerKind::Fixed,
                        fixed_power_dbm: p,
                        ..base.clone()
                    },
                });
            }
            out.push(Point {
                axes: vec![axis("power", "learned"), axis("fixed_power_dBm", "")],
                config: learned,
            });
        }
        Sweep::Scatterers => {
            for &k in &s.scatterers {
                out.push(Point {
                    axes: vec![axis("K", k)],
                    config: ExperimentConfig {
                        scatterers: k,
                        ..learned.clone()
                    },
                });
            }
        }
        Sweep::Antennas => {
            for &t in &s.n_t {
                for &r in &s.n_r {
                    out.push(Point {
                        axes: vec![axis("N_t", t), axis("N_r", r)],
                        config: ExperimentConfig {
                            n_t: t,
                            n_r: r,
                            ..learned.clone()
                        },
                    });
                }
            }
        }
        Sweep::Gamma => {
            for &g in &s.gamma {
                out.push(Point {
                    axes: vec![axis("gamma", g)],
                    config: ExperimentConfig {
                        gamma: g,
                        ..learned.clone()
                    },
                });
            }
        }
    }
    out
}

/// Digest of everything that influences a run's numbers: the resolved
/// configuration minus labels, paths, worker count and sweep grids.
pub fn run_digest(cfg: &ExperimentConfig, seed: u64) -> String {
    let canonical = ExperimentConfig {
        experiment: String::new(),
        seeds: 1,
        root_seed: 0,
        sweep: Default::default(),
        workers: 1,
        out_dir: PathBuf::new(),
        data_dir: PathBuf::new(),
        ..cfg.clone()
    };
    let mut h = Sha256::new();
    h.update(canonical.to_text().as_bytes());
    h.update(seed.to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Mnist {
    pub train: Dataset,
    pub test: Dataset,
}

impl Mnist {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Mnist {
            train: Dataset::load_mnist(dir, Split::Train)?,
            test: Dataset::load_mnist(dir, Split::Test)?,
        })
    }
}

/// Training and test images of run `seed`: seeded subsets when configured
/// (training first, from one stream), otherwise the full splits.
pub fn run_data<'a>(
    cfg: &ExperimentConfig,
    seed: u64,
    data: &'a Mnist,
) -> (Cow<'a, Dataset>, Cow<'a, Dataset>) {
    let mut rng = seed::rng(seed, Stream::DataSubset);
    let mut pick = |set: &'a Dataset, n: usize| {
        if n > 0 {
            Cow::Owned(set.seeded_subset(n, &mut rng))
        } else {
            Cow::Borrowed(set)
        }
    };
    let train = pick(&data.train, cfg.train_subset);
    let test = pick(&data.test, cfg.test_subset);
    (train, test)
}

/// Trains one `(config, seed)` pair; returns the record and best weights.
pub fn run_one(
    experiment: &str,
    axes: Vec<(String, String)>,
    cfg: &ExperimentConfig,
    seed: u64,
    data: &Mnist,
) -> Result<(RunRecord, MinnWeights)> {
    let env = Environment::new(cfg.geometry(), seed)?;
    let tc = cfg.train_config();
    let (train_pool, test_pool) = channel_pools(&env, &tc, seed)?;
    let (train_data, test_data) = run_data(cfg, seed, data);
    let inputs = TrainInputs {
        env: &env,
        train_pool: &train_pool,
        test_pool: &test_pool,
        train_data: &train_data,
        test_data: &test_data,
    };
    let start = Instant::now();
    let out = train(&tc, &inputs, seed)?;
    let mut record = RunRecord::from_outcome(experiment, axes, seed, run_digest(cfg, seed), &out);
    record.train_seconds = start.elapsed().as_secs_f64();
    Ok((record, out.best))
}

struct Job {
    axes: Vec<(String, String)>,
    config: ExperimentConfig,
    seed: u64,
    record_path: PathBuf,
    checkpoint_path: PathBuf,
}

fn read_record(path: &Path, digest: &str) -> Option<RunRecord> {
    let text = fs::read_to_string(path).ok()?;
    match serde_json::from_str::<RunRecord>(&text) {
        Ok(r) if r.config_digest == digest => Some(r),
        Ok(_) => {
            warn!(
                "{} was produced by a different configuration; rerunning",
                path.display()
            );
            None
        }
        Err(e) => {
            warn!("ignoring unreadable {}: {e}", path.display());
            None
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(value)
        .map_err(|e| MinnError::Format(format!("serializing results: {e}")))
}

/// A finished run with this digest from any experiment under the same output
/// root, checkpoint included.
fn read_cached(cache_dir: &Path, digest: &str) -> Option<RunRecord> {
    let json = cache_dir.join(format!("{digest}.json"));
    if !cache_dir.join(format!("{digest}.ckpt")).is_file() {
        return None;
    }
    read_record(&json, digest)
}

/// Creates `dir` and proves it is writable.
pub fn preflight(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| MinnError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"ok").map_err(|e| MinnError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| MinnError::io(&probe, e))
}

/// Result files of a finished experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

/// Runs every `(point, seed)` of the grid, skipping pairs already recorded in
/// the output directory or present in the shared `out_dir/cache`, and writes `results.csv`, `traces.csv`,
/// `summary.json` and `config.txt` under `out_dir/<experiment>`.
pub fn run_experiment(
    base: &ExperimentConfig,
    sweep: Option<Sweep>,
    data: &Mnist,
) -> Result<ExperimentOutput> {
    let experiment = sweep.map_or(base.experiment.clone(), |s| s.name().to_string());
    let dir = base.out_dir.join(&experiment);
    preflight(&dir)?;
    let runs_dir = dir.join("runs");
    let ckpt_dir = dir.join("checkpoints");
    let cache_dir = base.out_dir.join("cache");
    for d in [&runs_dir, &ckpt_dir, &cache_dir] {
        fs::create_dir_all(d).map_err(|e| MinnError::io(d, e))?;
    }
    write_atomic(&dir.join("config.txt"), base.to_text().as_bytes())?;

    let grid = match sweep {
        Some(s) => points(s, base),
        None => vec![Point {
            axes: Vec::new(),
            config: base.clone(),
        }],
    };
    let mut slots: Vec<Option<RunRecord>> = Vec::new();
    let mut jobs: Vec<(usize, Job)> = Vec::new();
    for p in &grid {
        for i in 0..base.seeds {
            let seed = seed::run_seed(base.root_seed, i);
            let stem = format!("{}__seed{seed}", point_id(&p.axes));
            let record_path = runs_dir.join(format!("{stem}.json"));
            let digest = run_digest(&p.config, seed);
            let checkpoint_path = ckpt_dir.join(format!("{stem}.ckpt"));
            let mut done = read_record(&record_path, &digest);
            if done.is_some() {
                info!("{experiment}: {stem} already recorded; skipping");
            } else if let Some(mut r) = read_cached(&cache_dir, &digest) {
                info!("{experiment}: {stem} found in the run cache");
                r.experiment = experiment.clone();
                r.axes = p.axes.clone();
                let src = cache_dir.join(format!("{digest}.ckpt"));
                fs::copy(&src, &checkpoint_path).map_err(|e| MinnError::io(&src, e))?;
                write_atomic(&record_path, &to_json(&r)?)?;
                done = Some(r);
            } else {
                jobs.push((
                    slots.len(),
                    Job {
                        axes: p.axes.clone(),
                        config: p.config.clone(),
                        seed,
                        record_path,
                        checkpoint_path,
                    },
                ));
            }
            slots.push(done);
        }
    }
    info!(
        "{experiment}: {} runs, {} to train, {} workers",
        slots.len(),
        jobs.len(),
        base.workers
    );

    let flush = |slots: &[Option<RunRecord>]| -> Result<()> {
        let done: Vec<RunRecord> = slots.iter().flatten().cloned().collect();
        write_atomic(&dir.join("results.csv"), &results_csv(&done)?)
    };
    flush(&slots)?;

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let mut first_error: Option<MinnError> = None;
    std::thread::scope(|scope| {
        let (tx, rx) =
            mpsc::channel::<(usize, Result<(RunRecord, MinnWeights)>, PathBuf, PathBuf)>();
        for _ in 0..base.workers.min(jobs.len()) {
            let tx = tx.clone();
            let (jobs, next, abort, experiment) = (&jobs, &next, &abort, &experiment);
            scope.spawn(move || loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((slot, job)) = jobs.get(i) else {
                    break;
                };
                info!(
                    "{experiment}: training {} seed {}",
                    point_id(&job.axes),
                    job.seed
                );
                let res = run_one(experiment, job.axes.clone(), &job.config, job.seed, data);
                if tx
                    .send((
                        *slot,
                        res,
                        job.record_path.clone(),
                        job.checkpoint_path.clone(),
                    ))
                    .is_err()
                {
                    break;
                }
            });
        }
        drop(tx);
        for (slot, res, record_path, ckpt_path) in rx {
            let handled = res.and_then(|(record, weights)| {
                save_checkpoint(&weights, &ckpt_path)?;
                let json = to_json(&record)?;
                write_atomic(&record_path, &json)?;
                let cached = cache_dir.join(&record.config_digest);
                save_checkpoint(&weights, &cached.with_extension("ckpt"))?;
                write_atomic(&cached.with_extension("json"), &json)?;
                info!(
                    "{experiment}: {} seed {} best accuracy {:.4} at epoch {}, {:.4} mW",
                    point_id(&record.axes),
                    record.seed,
                    record.best_accuracy,
                    record.best_epoch,
                    record.mean_power_mw()
                );
                slots[slot] = Some(record);
                flush(&slots)
            });
            if let Err(e) = handled {
                abort.store(true, Ordering::SeqCst);
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    let records: Vec<RunRecord> = slots.into_iter().flatten().collect();
    write_atomic(&dir.join("results.csv"), &results_csv(&records)?)?;
    write_atomic(&dir.join("traces.csv"), &traces_csv(&records)?)?;
    let summary = summarize(&experiment, &records);
    write_atomic(&dir.join("summary.json"), &to_json(&summary)?)?;
    if sweep == Some(Sweep::Antennas) {
        let (acc, pow) = heatmaps(&summary, &base.sweep.n_t, &base.sweep.n_r);
        write_atomic(&dir.join("heatmap_accuracy.csv"), acc.as_bytes())?;
        write_atomic(&dir.join("heatmap_power_mW.csv"), pow.as_bytes())?;
    }
    Ok(ExperimentOutput {
        dir,
        records,
        summary,
    })
}
