use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::DriftMean;
use crate::error::{Error, Result};
use crate::exploration::{ExplorationSpec, Heuristic};
use crate::learner::LearnConfig;
use crate::types::{GridSpec, ModelParams};

pub const DEFAULT_AVERAGE_WINDOW: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    MfcgBaseline,
    MfgDegenerate,
    MfcDegenerate,
    ExplorationSweep,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::MfcgBaseline,
        Preset::MfgDegenerate,
        Preset::MfcDegenerate,
        Preset::ExplorationSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MfcgBaseline => "mfcg_baseline",
            Preset::MfgDegenerate => "mfg_degenerate",
            Preset::MfcDegenerate => "mfc_degenerate",
            Preset::ExplorationSweep => "exploration_sweep",
        }
    }

    /// Fully expanded configuration of this preset.
    pub fn config(self) -> ExperimentConfig {
        let mut learn = LearnConfig::baseline();
        match self {
            Preset::MfgDegenerate => {
                learn.omega_mu = 0.75;
                learn.omega_mut = 0.75;
            }
            Preset::MfcDegenerate => {
                learn.omega_mu = 0.15;
                learn.omega_mut = 0.15;
            }
            Preset::MfcgBaseline | Preset::ExplorationSweep => {}
        }
        ExperimentConfig {
            preset: Some(self),
            runs: 10,
            base_seed: 0,
            output_dir: PathBuf::from("out").join(self.name()),
            workers: 0,
            thin: 1,
            average_window: DEFAULT_AVERAGE_WINDOW,
            drift_mean: DriftMean::Local,
            model: ModelParams::baseline(),
            state_grid: GridSpec {
                lo: -1.5,
                hi: 4.5,
                step: 0.25,
            },
            action_grid: GridSpec {
                lo: -6.0,
                hi: 6.0,
                step: 0.25,
            },
            learn,
            exploration: Heuristic::EpsCon.spec(learn.episodes),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::config("preset", format!("unknown preset `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub runs: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    /// Keep every `thin`-th episode in the written traces.
    #[serde(default = "default_thin")]
    pub thin: u64,
    /// Trailing episodes averaged into `policy.csv` and `distribution.csv`.
    #[serde(default = "default_window")]
    pub average_window: u64,
    #[serde(default)]
    pub drift_mean: DriftMean,
    pub model: ModelParams,
    pub state_grid: GridSpec,
    pub action_grid: GridSpec,
    pub learn: LearnConfig,
    pub exploration: ExplorationSpec,
}

fn default_thin() -> u64 {
    1
}

fn default_window() -> u64 {
    DEFAULT_AVERAGE_WINDOW
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if self.average_window == 0 {
            return Err(Error::config("average_window", "must be at least 1"));
        }
        self.model.validate()?;
        for (name, spec) in [("state_grid", &self.state_grid), ("action_grid", &self.action_grid)] {
            spec.build().map_err(|e| match e {
                Error::Config { key, reason } => Error::config(format!("{name}.{key}"), reason),
                other => other,
            })?;
        }
        self.learn.validate()?;
        self.exploration.validate()?;
        Ok(())
    }

    /// Averaging window clipped to the episode count.
    pub fn window(&self) -> u64 {
        self.average_window.min(self.learn.episodes)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            reason: e.to_string(),
        })
    }

    /// Sets the episode count of both the learner and the exploration schedule.
    pub fn set_episodes(&mut self, episodes: u64) {
        self.learn.episodes = episodes;
        self.exploration.total_episodes = episodes;
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub runs: Option<usize>,
    pub episodes: Option<u64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub thin: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        if let Some(k) = self.episodes {
            cfg.set_episodes(k);
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(t) = self.thin {
            cfg.thin = t;
        }
        cfg.validate()
    }
}

/// Reads a TOML config file. A `preset` key (or `default_preset`) supplies
/// every field the file leaves out.
pub fn load_config(path: impl AsRef<Path>, default_preset: Option<Preset>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, default_preset).map_err(|e| match e {
        Error::Parse { reason, .. } => Error::Parse {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

pub fn parse_config(text: &str, default_preset: Option<Preset>) -> Result<ExperimentConfig> {
    let parse_err = |reason: String| Error::Parse {
        path: PathBuf::from("<config>"),
        reason,
    };
    let user: toml::Table = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;

    let preset = match user.get("preset") {
        Some(toml::Value::String(s)) => Some(s.parse::<Preset>()?),
        Some(_) => return Err(Error::config("preset", "must be a string")),
        None => default_preset,
    };

    let mut merged = match preset {
        Some(p) => toml::Table::try_from(p.config()).map_err(|e| parse_err(e.to_string()))?,
        None => toml::Table::new(),
    };
    let user_sets_total = user
        .get("exploration")
        .and_then(|v| v.as_table())
        .is_some_and(|t| t.contains_key("total_episodes"));
    let user_episodes = user
        .get("learn")
        .and_then(|v| v.as_table())
        .and_then(|t| t.get("episodes"))
        .cloned();
    merge(&mut merged, user);
    if let (false, Some(k)) = (user_sets_total, user_episodes) {
        if let Some(toml::Value::Table(ex)) = merged.get_mut("exploration") {
            ex.insert("total_episodes".into(), k);
        }
    }

    let cfg: ExperimentConfig = merged.try_into().map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
