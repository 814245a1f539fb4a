//! Flat `key = value` experiment configuration.
//!
//! Resolution order is: built-in defaults, then a preset, then the file, then
//! command-line overrides. Every key has a default; unknown keys, repeated
//! keys and unparsable values are rejected with the key and line named.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::channel::{EnvironmentGeometry, PathlossModel, Vec3};
use crate::error::{MinnError, Result};
use crate::model::{PhaseMap, PowerSetting, TrainConfig};

/// Starting points for the configuration before the file is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Full-scale settings.
    Paper,
    /// Shrunk settings that train on one CPU in minutes.
    Desk,
}

impl FromStr for Preset {
    type Err = MinnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(MinnError::Config {
                key: "preset".into(),
                line: None,
                message: format!("unknown preset `{s}` (expected desk or paper)"),
            }),
        }
    }
}

/// Grids walked by the sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxes {
    /// Elements per SIM layer.
    pub widths: Vec<usize>,
    /// SIM layers.
    pub depths: Vec<usize>,
    pub fixed_power_dbm: Vec<f64>,
    pub scatterers: Vec<usize>,
    pub n_t: Vec<usize>,
    pub n_r: Vec<usize>,
    pub gamma: Vec<f64>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            widths: vec![16, 36, 100],
            depths: vec![1, 2, 4],
            fixed_power_dbm: vec![-10.0, 0.0, 10.0, 20.0],
            scatterers: vec![2, 5, 10, 15, 20, 30],
            n_t: vec![4, 8, 16],
            n_r: vec![2, 4, 8],
            gamma: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

/// Transmit power source for single training runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerKind {
    Learned,
    Fixed,
}

/// Everything one invocation needs. Power levels are kept in dBm (mW for the
/// ceiling) and converted to W when the run configuration is built.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seeds: usize,
    pub root_seed: u64,
    pub workers: usize,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,

    pub n_t: usize,
    pub n_r: usize,
    pub n: usize,
    pub layers: usize,
    pub scatterers: usize,
    pub wavelength: f64,
    pub spacing: f64,
    pub layer_distance: f64,
    pub element_area: f64,
    pub p_tx: Vec3,
    pub p_sim: Vec3,
    pub box_min: Vec3,
    pub box_max: Vec3,
    pub noise_power_dbm: f64,
    pub pathloss: PathlossModel,
    pub paper_literal_psi: bool,

    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub power: PowerKind,
    pub fixed_power_dbm: f64,
    pub power_freeze_epochs: usize,
    pub frozen_power_dbm: f64,
    pub p_ceil_mw: f64,
    pub paper_literal_phase_map: bool,
    pub n_train_channels: usize,
    pub n_test_channels: usize,
    /// Training images used per run; 0 keeps the whole split.
    pub train_subset: usize,
    pub test_subset: usize,

    pub sweep: SweepAxes,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let g = EnvironmentGeometry::default();
        let t = TrainConfig::default();
        ExperimentConfig {
            experiment: "minn".into(),
            seeds: 5,
            root_seed: 0,
            workers: 1,
            data_dir: PathBuf::from("data/mnist"),
            out_dir: PathBuf::from("results"),
            n_t: g.n_t,
            n_r: g.n_r,
            n: g.n,
            layers: g.layers,
            scatterers: g.scatterers,
            wavelength: g.wavelength,
            spacing: g.spacing,
            layer_distance: g.layer_distance,
            element_area: g.element_area,
            p_tx: g.p_tx,
            p_sim: g.p_sim_origin,
            box_min: g.box_min,
            box_max: g.box_max,
            noise_power_dbm: -90.0,
            pathloss: g.pathloss_model,
            paper_literal_psi: false,
            epochs: t.epochs,
            lr: t.lr,
            batch_size: t.batch_size,
            gamma: t.gamma,
            power: PowerKind::Learned,
            fixed_power_dbm: 20.0,
            power_freeze_epochs: t.power_freeze_epochs,
            frozen_power_dbm: 20.0,
            p_ceil_mw: 200.0,
            paper_literal_phase_map: false,
            n_train_channels: t.n_train_channels,
            n_test_channels: t.n_test_channels,
            train_subset: 0,
            test_subset: 0,
            sweep: SweepAxes::default(),
        }
    }
}

/// `10^(dBm/10)` mW in W.
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

/// Keys whose defaults follow the wavelength unless set explicitly.
const DERIVED_FROM_WAVELENGTH: [&str; 3] = ["spacing", "layer_distance", "element_area"];

fn parse_scalar<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}`"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{value}`")),
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    let items: Vec<&str> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    items.into_iter().map(parse_scalar).collect()
}

fn parse_vec3(value: &str) -> std::result::Result<Vec3, String> {
    let v: Vec<f64> = parse_list(value)?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!(
            "expected three comma-separated numbers, got `{value}`"
        )),
    }
}

fn fmt_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_vec3(v: Vec3) -> String {
    format!("{}, {}, {}", v.x, v.y, v.z)
}

fn is_square(n: usize) -> bool {
    let r = (n as f64).sqrt().round() as usize;
    r * r == n
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = ExperimentConfig::default();
        match preset {
            Preset::Paper => base,
            Preset::Desk => ExperimentConfig {
                n_t: 8,
                n_r: 4,
                n: 16,
                layers: 2,
                epochs: 30,
                power_freeze_epochs: 10,
                n_train_channels: 1_000,
                n_test_channels: 1_000,
                train_subset: 10_000,
                test_subset: 2_000,
                seeds: 3,
                sweep: SweepAxes {
                    widths: vec![16, 36],
                    depths: vec![1, 2],
                    ..SweepAxes::default()
                },
                ..base
            },
        }
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "experiment" => {
                if v.is_empty()
                    || !v
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                {
                    return Err(format!("experiment name must be [A-Za-z0-9_-]+, got `{v}`"));
                }
                self.experiment = v.to_string();
            }
            "seeds" => self.seeds = parse_scalar(v)?,
            "root_seed" => self.root_seed = parse_scalar(v)?,
            "workers" => self.workers = parse_scalar(v)?,
            "data_dir" => self.data_dir = PathBuf::from(v),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "N_t" => self.n_t = parse_scalar(v)?,
            "N_r" => self.n_r = parse_scalar(v)?,
            "N" => self.n = parse_scalar(v)?,
            "L" => self.layers = parse_scalar(v)?,
            "K" => self.scatterers = parse_scalar(v)?,
            "wavelength" => self.wavelength = parse_scalar(v)?,
            "spacing" => self.spacing = parse_scalar(v)?,
            "layer_distance" => self.layer_distance = parse_scalar(v)?,
            "element_area" => self.element_area = parse_scalar(v)?,
            "p_tx" => self.p_tx = parse_vec3(v)?,
            "p_sim" => self.p_sim = parse_vec3(v)?,
            "box_min" => self.box_min = parse_vec3(v)?,
            "box_max" => self.box_max = parse_vec3(v)?,
            "noise_power_dbm" => self.noise_power_dbm = parse_scalar(v)?,
            "pathloss" => {
                self.pathloss = PathlossModel::parse(v)
                    .ok_or_else(|| format!("expected unfolded or product, got `{v}`"))?
            }
            "paper_literal_psi" => self.paper_literal_psi = parse_bool(v)?,
            "epochs" => self.epochs = parse_scalar(v)?,
            "lr" => self.lr = parse_scalar(v)?,
            "batch_size" => self.batch_size = parse_scalar(v)?,
            "gamma" => self.gamma = parse_scalar(v)?,
            "power" => {
                self.power = match v {
                    "learned" => PowerKind::Learned,
                    "fixed" => PowerKind::Fixed,
                    _ => return Err(format!("expected learned or fixed, got `{v}`")),
                }
            }
            "fixed_power_dbm" => self.fixed_power_dbm = parse_scalar(v)?,
            "power_freeze_epochs" => self.power_freeze_epochs = parse_scalar(v)?,
            "frozen_power_dbm" => self.frozen_power_dbm = parse_scalar(v)?,
            "p_ceil_mw" => self.p_ceil_mw = parse_scalar(v)?,
            "paper_literal_phase_map" => self.paper_literal_phase_map = parse_bool(v)?,
            "n_train_channels" => self.n_train_channels = parse_scalar(v)?,
            "n_test_channels" => self.n_test_channels = parse_scalar(v)?,
            "train_subset" => self.train_subset = parse_scalar(v)?,
            "test_subset" => self.test_subset = parse_scalar(v)?,
            "sweep_widths" => self.sweep.widths = parse_list(v)?,
            "sweep_depths" => self.sweep.depths = parse_list(v)?,
            "sweep_fixed_power_dbm" => self.sweep.fixed_power_dbm = parse_list(v)?,
            "sweep_scatterers" => self.sweep.scatterers = parse_list(v)?,
            "sweep_n_t" => self.sweep.n_t = parse_list(v)?,
            "sweep_n_r" => self.sweep.n_r = parse_list(v)?,
            "sweep_gamma" => self.sweep.gamma = parse_list(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Resolves `base`, then the file text, then `overrides` (in order), and
    /// validates the result.
    pub fn resolve(
        base: ExperimentConfig,
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut cfg = base;
        let mut seen: HashMap<String, Option<usize>> = HashMap::new();
        let wavelength_before = cfg.wavelength;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(MinnError::Config {
                    key: content.to_string(),
                    line: Some(line),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if let Some(prev) = seen.get(key) {
                return Err(MinnError::Config {
                    key: key.into(),
                    line: Some(line),
                    message: format!("repeated key (first set on line {})", prev.unwrap_or(0)),
                });
            }
            cfg.set(key, value).map_err(|message| MinnError::Config {
                key: key.into(),
                line: Some(line),
                message,
            })?;
            seen.insert(key.to_string(), Some(line));
        }
        for (key, value) in overrides {
            cfg.set(key, value).map_err(|message| MinnError::Config {
                key: key.clone(),
                line: None,
                message,
            })?;
            seen.insert(key.clone(), None);
        }
        if cfg.wavelength != wavelength_before {
            let explicit: HashSet<&str> = seen.keys().map(String::as_str).collect();
            let wl = cfg.wavelength;
            for key in DERIVED_FROM_WAVELENGTH {
                if !explicit.contains(key) {
                    match key {
                        "spacing" => cfg.spacing = wl / 2.0,
                        "layer_distance" => cfg.layer_distance = 10.0 * wl,
                        _ => cfg.element_area = wl * wl / 4.0,
                    }
                }
            }
        }
        cfg.validate(&seen)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::resolve(ExperimentConfig::default(), text, &[])
    }

    fn validate(&self, seen: &HashMap<String, Option<usize>>) -> Result<()> {
        let fail = |key: &str, message: String| {
            Err(MinnError::Config {
                key: key.into(),
                line: seen.get(key).copied().flatten(),
                message,
            })
        };
        let positive_counts = [
            ("seeds", self.seeds),
            ("workers", self.workers),
            ("N_t", self.n_t),
            ("N_r", self.n_r),
            ("N", self.n),
            ("L", self.layers),
            ("K", self.scatterers),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("n_train_channels", self.n_train_channels),
            ("n_test_channels", self.n_test_channels),
        ];
        for (key, v) in positive_counts {
            if v == 0 {
                return fail(key, "must be at least 1".into());
            }
        }
        if !is_square(self.n) {
            return fail("N", format!("{} is not a perfect square", self.n));
        }
        let positive_reals = [
            ("wavelength", self.wavelength),
            ("spacing", self.spacing),
            ("layer_distance", self.layer_distance),
            ("element_area", self.element_area),
            ("lr", self.lr),
            ("p_ceil_mw", self.p_ceil_mw),
        ];
        for (key, v) in positive_reals {
            if !(v > 0.0 && v.is_finite()) {
                return fail(key, format!("must be positive and finite, got {v}"));
            }
        }
        let finite = [
            ("noise_power_dbm", self.noise_power_dbm),
            ("fixed_power_dbm", self.fixed_power_dbm),
            ("frozen_power_dbm", self.frozen_power_dbm),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return fail(key, format!("must be finite, got {v}"));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail("gamma", format!("must be non-negative, got {}", self.gamma));
        }
        let (lo, hi) = (self.box_min.as_array(), self.box_max.as_array());
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return fail("box_min", "every coordinate must be below box_max".into());
        }
        if dbm_to_w(self.frozen_power_dbm) > self.p_ceil_mw / 1000.0 {
            return fail("frozen_power_dbm", "frozen power exceeds p_ceil_mw".into());
        }
        let s = &self.sweep;
        if let Some(&w) = s.widths.iter().find(|&&w| !is_square(w) || w == 0) {
            return fail(
                "sweep_widths",
                format!("{w} is not a positive perfect square"),
            );
        }
        for (key, list) in [
            ("sweep_depths", &s.depths),
            ("sweep_scatterers", &s.scatterers),
            ("sweep_n_t", &s.n_t),
            ("sweep_n_r", &s.n_r),
        ] {
            if list.contains(&0) {
                return fail(key, "entries must be at least 1".into());
            }
        }
        if s.gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return fail("sweep_gamma", "entries must be non-negative".into());
        }
        if s.fixed_power_dbm.iter().any(|p| !p.is_finite()) {
            return fail("sweep_fixed_power_dbm", "entries must be finite".into());
        }
        Ok(())
    }

    pub fn geometry(&self) -> EnvironmentGeometry {
        EnvironmentGeometry {
            p_tx: self.p_tx,
            p_sim_origin: self.p_sim,
            box_min: self.box_min,
            box_max: self.box_max,
            wavelength: self.wavelength,
            spacing: self.spacing,
            layer_distance: self.layer_distance,
            element_area: self.element_area,
            n_t: self.n_t,
            n_r: self.n_r,
            n: self.n,
            layers: self.layers,
            scatterers: self.scatterers,
            noise_power: dbm_to_w(self.noise_power_dbm),
            pathloss_model: self.pathloss,
            paper_literal_psi: self.paper_literal_psi,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            gamma: self.gamma,
            power_freeze_epochs: self.power_freeze_epochs,
            frozen_power: dbm_to_w(self.frozen_power_dbm),
            p_ceil: self.p_ceil_mw / 1000.0,
            power: match self.power {
                PowerKind::Learned => PowerSetting::Learned,
                PowerKind::Fixed => PowerSetting::Fixed(dbm_to_w(self.fixed_power_dbm)),
            },
            phase_map: if self.paper_literal_phase_map {
                PhaseMap::PaperLiteral
            } else {
                PhaseMap::Squashed
            },
            n_train_channels: self.n_train_channels,
            n_test_channels: self.n_test_channels,
        }
    }

    /// The fully resolved configuration in the same syntax the parser reads.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.clone());
        kv("seeds", self.seeds.to_string());
        kv("root_seed", self.root_seed.to_string());
        kv("workers", self.workers.to_string());
        kv("data_dir", self.data_dir.display().to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("N_t", self.n_t.to_string());
        kv("N_r", self.n_r.to_string());
        kv("N", self.n.to_string());
        kv("L", self.layers.to_string());
        kv("K", self.scatterers.to_string());
        kv("wavelength", self.wavelength.to_string());
        kv("spacing", self.spacing.to_string());
        kv("layer_distance", self.layer_distance.to_string());
        kv("element_area", self.element_area.to_string());
        kv("p_tx", fmt_vec3(self.p_tx));
        kv("p_sim", fmt_vec3(self.p_sim));
        kv("box_min", fmt_vec3(self.box_min));
        kv("box_max", fmt_vec3(self.box_max));
        kv("noise_power_dbm", self.noise_power_dbm.to_string());
        kv("pathloss", self.pathloss.name().to_string());
        kv("paper_literal_psi", self.paper_literal_psi.to_string());
        kv("epochs", self.epochs.to_string());
        kv("lr", self.lr.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("gamma", self.gamma.to_string());
        kv(
            "power",
            match self.power {
                PowerKind::Learned => "learned",
                PowerKind::Fixed => "fixed",
            }
            .to_string(),
        );
        kv("fixed_power_dbm", self.fixed_power_dbm.to_string());
        kv("power_freeze_epochs", self.power_freeze_epochs.to_string());
        kv("frozen_power_dbm", self.frozen_power_dbm.to_string());
        kv("p_ceil_mw", self.p_ceil_mw.to_string());
        kv(
            "paper_literal_phase_map",
            self.paper_literal_phase_map.to_string(),
        );
        kv("n_train_channels", self.n_train_channels.to_string());
        kv("n_test_channels", self.n_test_channels.to_string());
        kv("train_subset", self.train_subset.to_string());
        kv("test_subset", self.test_subset.to_string());
        kv("sweep_widths", fmt_list(&self.sweep.widths));
        kv("sweep_depths", fmt_list(&self.sweep.depths));
        kv(
            "sweep_fixed_power_dbm",
            fmt_list(&self.sweep.fixed_power_dbm),
        );
        kv("sweep_scatterers", fmt_list(&self.sweep.scatterers));
        kv("sweep_n_t", fmt_list(&self.sweep.n_t));
        kv("sweep_n_r", fmt_list(&self.sweep.n_r));
        kv("sweep_gamma", fmt_list(&self.sweep.gamma));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(
            (c.n_t, c.n_r, c.n, c.layers, c.scatterers),
            (16, 8, 100, 4, 20)
        );
        assert_eq!(c.gamma, 1e-2);
        assert_eq!(c.geometry(), EnvironmentGeometry::default());
        assert_eq!(c.train_config(), TrainConfig::default());
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# header\n\ngamma = 0.1  # trailing\nK=5\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.gamma, 0.1);
        assert_eq!(c.scatterers, 5);
        let c = ExperimentConfig::resolve(
            ExperimentConfig::default(),
            text,
            &[("gamma".into(), "1".into())],
        )
        .unwrap();
        assert_eq!(c.gamma, 1.0);
    }

    #[test]
    fn errors_name_key_and_line() {
        match ExperimentConfig::parse("gamma = 0.1\nN = 37\n") {
            Err(MinnError::Config { key, line, .. }) => {
                assert_eq!((key.as_str(), line), ("N", Some(2)))
            }
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("\nbogus = 1\n") {
            Err(MinnError::Config { key, line, message }) => {
                assert_eq!((key.as_str(), line), ("bogus", Some(2)));
                assert!(message.contains("unknown"));
            }
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("epochs = ten\n") {
            Err(MinnError::Config {
                key, line: Some(1), ..
            }) => assert_eq!(key, "epochs"),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("gamma\n").is_err());
        assert!(ExperimentConfig::parse("K = 1\nK = 2\n").is_err());
        assert!(ExperimentConfig::parse("box_min = 30, 0, 0\n").is_err());
        assert!(ExperimentConfig::parse("gamma = -1\n").is_err());
        assert!(ExperimentConfig::parse("sweep_widths = 16, 20\n").is_err());
        match ExperimentConfig::resolve(
            ExperimentConfig::default(),
            "",
            &[("N".into(), "37".into())],
        ) {
            Err(MinnError::Config {
                key, line: None, ..
            }) => assert_eq!(key, "N"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wavelength_drives_unset_derived_lengths() {
        let c = ExperimentConfig::parse("wavelength = 0.02\nspacing = 0.5\n").unwrap();
        assert_eq!(c.spacing, 0.5);
        assert_eq!(c.layer_distance, 0.2);
        assert_eq!(c.element_area, 1e-4);
    }

    #[test]
    fn echo_round_trips() {
        for base in [
            ExperimentConfig::preset(Preset::Paper),
            ExperimentConfig::preset(Preset::Desk),
        ] {
            let text = base.to_text();
            let again = ExperimentConfig::resolve(ExperimentConfig::default(), &text, &[]).unwrap();
            assert_eq!(again, base);
        }
    }

    #[test]
    fn power_conversions() {
        assert_eq!(dbm_to_w(20.0), 0.1);
        assert_eq!(dbm_to_w(-90.0), 1e-12);
        assert_eq!(w_to_dbm(0.1), 20.0);
        assert_eq!(w_to_dbm(1e-3), 0.0);
    }

    #[test]
    fn desk_preset_values() {
        let c = ExperimentConfig::preset(Preset::Desk);
        assert_eq!((c.n, c.layers, c.n_t, c.n_r, c.epochs), (16, 2, 8, 4, 30));
        assert_eq!((c.n_train_channels, c.train_subset), (1000, 10_000));
        assert_eq!("desk".parse::<Preset>().unwrap(), Preset::Desk);
        assert!("huge".parse::<Preset>().is_err());
    }
}
