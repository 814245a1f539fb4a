//! `minn-sim`: train, evaluate and sweep metasurface-integrated networks.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use mimalloc::MiMalloc;

use minn::channel::Environment;
use minn::harness::{
    load_checkpoint, run_data, run_experiment, ExperimentConfig, Mnist, Preset, Sweep,
};
use minn::model::{channel_pools, constraint_check, evaluate, Architecture};
use minn::seed;
use minn::selfcheck::{
    channel_anchors, network_gradchecks, op_gradchecks, GradResult, GRADCHECK_TOL,
};
use minn::{MinnError, Result};

#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

#[derive(Parser)]
#[command(name = "minn-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; run `i` of an experiment uses `seed + i`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Defaults to start from before the file is applied.
    #[arg(long, global = true, default_value = "paper")]
    preset: String,
    /// Concurrent training jobs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Use the diffraction phase exactly as printed (2πd instead of 2πd/λ).
    #[arg(long, global = true)]
    paper_literal_psi: bool,
    /// Use θ = π(atan(u) + 1) instead of 2·atan(u) + π.
    #[arg(long, global = true)]
    paper_literal_phase_map: bool,
    /// Extra `key=value` override, applied after the file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration over all seeds.
    Train,
    /// Evaluate a checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Index of the run whose environment and channels to rebuild.
        #[arg(long, default_value_t = 0)]
        run_index: usize,
    },
    /// Run one experiment grid: depth_width, fixed_power, scatterers, antennas or gamma.
    Sweep { name: String },
    /// Finite-difference gradient checks of every operation and the full network.
    Gradcheck {
        /// Random points per operation.
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
    /// Gradient checks plus closed-form channel anchors.
    Selftest,
}

fn resolve(common: &Common) -> Result<ExperimentConfig> {
    let base = ExperimentConfig::preset(common.preset.parse::<Preset>()?);
    let text = match &common.config {
        Some(p) => fs::read_to_string(p).map_err(|e| MinnError::Io {
            path: p.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(s) = common.seed {
        overrides.push(("root_seed".into(), s.to_string()));
    }
    if let Some(o) = &common.out {
        overrides.push(("out_dir".into(), o.display().to_string()));
    }
    if let Some(w) = common.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    if common.paper_literal_psi {
        overrides.push(("paper_literal_psi".into(), "true".into()));
    }
    if common.paper_literal_phase_map {
        overrides.push(("paper_literal_phase_map".into(), "true".into()));
    }
    for kv in &common.set {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(MinnError::Config {
                key: kv.clone(),
                line: None,
                message: "expected KEY=VALUE".into(),
            });
        };
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    ExperimentConfig::resolve(base, &text, &overrides)
}

fn print_grads(results: &[GradResult]) -> bool {
    let mut ok = true;
    for r in results {
        ok &= r.passed();
        println!(
            "{:<4} {:<24} max rel error {:.3e} over {} entries",
            if r.passed() { "PASS" } else { "FAIL" },
            r.name,
            r.max_rel_error,
            r.entries
        );
    }
    ok
}

fn gradchecks(seed: u64, cases: usize) -> Result<bool> {
    println!("gradient checks, tolerance {GRADCHECK_TOL:e}");
    let ops = print_grads(&op_gradchecks(seed, cases)?);
    let net = print_grads(&network_gradchecks(seed)?);
    Ok(ops && net)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = resolve(&cli.common)?;
    match cli.command {
        Command::Train => {
            let data = Mnist::load(&cfg.data_dir)?;
            let out = run_experiment(&cfg, None, &data)?;
            for p in &out.summary.points {
                println!(
                    "accuracy {:.4} ± {:.4}, power {:.4} mW over {} seeds",
                    p.accuracy_mean, p.accuracy_std, p.power_mw_mean, p.seeds
                );
            }
            println!("results in {}", out.dir.display());
            Ok(true)
        }
        Command::Sweep { name } => {
            let sweep: Sweep = name.parse()?;
            let data = Mnist::load(&cfg.data_dir)?;
            let out = run_experiment(&cfg, Some(sweep), &data)?;
            for p in &out.summary.points {
                println!(
                    "{:<32} accuracy {:.4} ± {:.4}, power {:.4} mW",
                    p.axes
                        .iter()
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                    p.accuracy_mean,
                    p.accuracy_std,
                    p.power_mw_mean
                );
            }
            println!("results in {}", out.dir.display());
            Ok(true)
        }
        Command::Evaluate {
            checkpoint,
            run_index,
        } => {
            let seed = seed::run_seed(cfg.root_seed, run_index);
            let data = Mnist::load(&cfg.data_dir)?;
            let (_, test) = run_data(&cfg, seed, &data);
            let env = Environment::new(cfg.geometry(), seed)?;
            let tc = cfg.train_config();
            let (_, test_pool) = channel_pools(&env, &tc, seed)?;
            let arch = Architecture {
                image_side: test.rows,
                ..Architecture::for_geometry(&env.geometry)
            };
            let weights = load_checkpoint(&checkpoint, &arch)?;
            // power source of the final training epoch
            let mode = tc.power_mode(tc.epochs.saturating_sub(1));
            let m = evaluate(
                &weights,
                &env,
                &test_pool,
                &test,
                mode,
                tc.phase_map,
                seed,
                tc.batch_size,
            )?;
            let c = constraint_check(m.mean_power, tc.p_ceil);
            info!(
                "evaluated {} on {} images",
                checkpoint.display(),
                test.len()
            );
            println!(
                "accuracy {:.4}, mean power {:.4} mW ({:.2} dBm), mean cross-entropy {:.4}, {:.2} dB below the ceiling",
                m.accuracy,
                m.mean_power * 1e3,
                10.0 * (m.mean_power * 1e3).log10(),
                m.mean_ce,
                c.margin_db
            );
            Ok(true)
        }
        Command::Gradcheck { cases } => gradchecks(cfg.root_seed, cases),
        Command::Selftest => {
            let grads = gradchecks(cfg.root_seed, 3)?;
            println!("channel anchors");
            let mut anchors = true;
            for a in channel_anchors(cfg.root_seed)? {
                anchors &= a.passed;
                println!(
                    "{:<4} {:<24} {}",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
            Ok(grads && anchors)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
