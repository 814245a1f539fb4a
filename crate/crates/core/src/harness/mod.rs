//! Experiment configuration, checkpoints, sweeps and result files.
//!
//! A configuration file holds one `key = value` pair per line; `#` starts a
//! comment. Each sweep writes under `out_dir/<sweep>`:
//!
//! * `config.txt`: the resolved configuration.
//! * `runs/<point>__seed<s>.json`: one record per finished run. Records whose
//!   configuration digest still matches are skipped on the next invocation.
//! * `checkpoints/<point>__seed<s>.ckpt`: best-epoch weights.
//! * `results.csv`, `traces.csv`, `summary.json`, and for the antenna sweep
//!   `heatmap_accuracy.csv` and `heatmap_power_mW.csv`.
//!
//! Every finished run is also stored under `out_dir/cache/<digest>` so a
//! later experiment with an identical run configuration reuses it.

mod checkpoint;
mod config;
mod results;
mod sweep;

pub use checkpoint::{
    config_digest, decode, encode, load_checkpoint, save_checkpoint, MAGIC, VERSION,
};
pub use config::{dbm_to_w, w_to_dbm, ExperimentConfig, PowerKind, Preset, SweepAxes};
pub use results::{
    heatmaps, point_id, results_csv, summarize, traces_csv, write_atomic, PointSummary, RunRecord,
    Summary, TraceRecord,
};
pub use sweep::{
    points, preflight, run_data, run_digest, run_experiment, run_one, ExperimentOutput, Mnist,
    Point, Sweep,
};
