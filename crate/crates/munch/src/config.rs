//! Experiment configuration: a small `key = value` file with one section
//! per subsystem, every key optional and defaulted.

use std::path::PathBuf;

use thiserror::Error;

use crate::cem::CemConfig;
use crate::plan::LookaheadConfig;
use crate::rollout::DEFAULT_MAX_STEPS;
use crate::world::WorldConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {0}: expected 'key = value' or '[section]'")]
    Malformed(usize),
    #[error("line {0}: unknown section '{1}'")]
    UnknownSection(usize, String),
    #[error("line {0}: unknown key '{1}' in section '{2}'")]
    UnknownKey(usize, String, String),
    #[error("line {0}: bad value for '{1}': {2}")]
    BadValue(usize, String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Maze file; the bundled maze when unset.
    pub maze_path: Option<PathBuf>,
    pub world: WorldConfig,
    /// Safety cap on episode length.
    pub max_steps: u64,
    pub cem: CemConfig,
    pub td_alpha: f64,
    pub td_gamma: f64,
    pub bin_width: f64,
    pub lookahead: LookaheadConfig,
    /// Episodes used to calibrate zig-zag stop positions.
    pub calibration_episodes: u32,
    /// Episodes per evaluation batch.
    pub episodes: u32,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            maze_path: None,
            world: WorldConfig::default(),
            max_steps: DEFAULT_MAX_STEPS,
            cem: CemConfig::default(),
            td_alpha: 0.05,
            td_gamma: 0.95,
            bin_width: 50.0,
            lookahead: LookaheadConfig::default(),
            calibration_episodes: 3,
            episodes: 200,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["world", "cem", "td", "lookahead", "experiment"].contains(&section.as_str())
                {
                    return Err(ConfigError::UnknownSection(n, section));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed(n))?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value, n)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(
            value: &str,
            key: &str,
            line: usize,
        ) -> Result<T, ConfigError> {
            value.parse().map_err(|_| {
                ConfigError::BadValue(line, key.to_string(), value.to_string())
            })
        }
        match (section, key) {
            ("world", "maze") => self.maze_path = Some(PathBuf::from(value)),
            ("world", "ghost_chase_prob") => self.world.ghost_chase_prob = num(value, key, line)?,
            ("world", "edible_duration_steps") => {
                self.world.edible_duration_steps = num(value, key, line)?
            }
            ("world", "ghost_edible_speed_divisor") => {
                self.world.ghost_edible_speed_divisor = num(value, key, line)?
            }
            ("world", "max_steps") => self.max_steps = num(value, key, line)?,
            ("cem", "samples") => self.cem.samples = num(value, key, line)?,
            ("cem", "elite_fraction") => self.cem.elite_fraction = num(value, key, line)?,
            ("cem", "iterations") => self.cem.iterations = num(value, key, line)?,
            ("cem", "episodes_per_eval") => self.cem.episodes_per_eval = num(value, key, line)?,
            ("cem", "smoothing") => self.cem.smoothing = num(value, key, line)?,
            ("cem", "floor") => self.cem.floor = num(value, key, line)?,
            ("cem", "slots") => self.cem.slots = num(value, key, line)?,
            ("td", "alpha") => self.td_alpha = num(value, key, line)?,
            ("td", "gamma") => self.td_gamma = num(value, key, line)?,
            ("td", "bin_width") => self.bin_width = num(value, key, line)?,
            ("lookahead", "depth") => self.lookahead.depth = num(value, key, line)?,
            ("lookahead", "allow_stop_at_zigzag") => {
                self.lookahead.allow_stop_at_zigzag = num(value, key, line)?
            }
            ("lookahead", "node_budget") => self.lookahead.node_budget = num(value, key, line)?,
            ("lookahead", "death_penalty") => {
                self.lookahead.death_penalty = num(value, key, line)?
            }
            ("lookahead", "calibration_episodes") => {
                self.calibration_episodes = num(value, key, line)?
            }
            ("experiment", "episodes") => self.episodes = num(value, key, line)?,
            ("experiment", "seed") => {
                self.seed = num(value, key, line)?;
                self.world.rng_seed = self.seed;
                self.cem.seed = self.seed;
            }
            _ => {
                return Err(ConfigError::UnknownKey(
                    line,
                    key.to_string(),
                    section.to_string(),
                ))
            }
        }
        Ok(())
    }

    /// Propagate a seed override into every subsystem seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.world.rng_seed = seed;
        self.cem.seed = seed;
    }
}
