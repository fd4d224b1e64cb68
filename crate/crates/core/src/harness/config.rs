use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::ddpg::{AgentConfig, OuParams, ACTION_DIM, DEFAULT_CAPACITY};
use crate::error::{Error, Result};
use crate::sim::{Dynamics, RewardWeights, SimConfig, DEFAULT_MAX_STEPS};

/// Everything a training run depends on.
///
/// Serialized as flat `key = value` text; see [`TrainConfig::parse`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Built-in track name or path to a track file.
    pub track: String,
    pub episodes: u64,
    pub max_steps: u64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub reward: RewardWeights,
    pub ou: OuParams,
    /// Steps over which the exploration scale falls linearly from 1 to 0.
    pub epsilon_decay_steps: u64,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub seed: u64,
    /// Write a checkpoint every this many episodes.
    pub checkpoint_interval: u64,
    pub output_dir: PathBuf,
    pub actor_hidden: Vec<usize>,
    pub critic_state_hidden: usize,
    pub critic_merge_width: usize,
    pub critic_hidden: Vec<usize>,
    /// Simulator control period (s).
    pub dt: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let agent = AgentConfig::default();
        Self {
            track: "oval".into(),
            episodes: 200,
            max_steps: DEFAULT_MAX_STEPS,
            buffer_capacity: DEFAULT_CAPACITY,
            batch_size: 32,
            gamma: agent.gamma,
            tau: agent.tau,
            actor_lr: agent.actor_lr,
            critic_lr: agent.critic_lr,
            reward: RewardWeights::default(),
            ou: OuParams::default(),
            epsilon_decay_steps: 100_000,
            warmup: 300,
            seed: 0,
            checkpoint_interval: 10,
            output_dir: PathBuf::from("out"),
            actor_hidden: agent.actor_hidden,
            critic_state_hidden: agent.critic_state_hidden,
            critic_merge_width: agent.critic_merge_width,
            critic_hidden: agent.critic_hidden,
            dt: SimConfig::default().dt,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_num(key, v.trim()))
        .collect()
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; ACTION_DIM]> {
    let v: Vec<f64> = parse_list(key, value)?;
    v.try_into()
        .map_err(|_| Error::config(format!("`{key}` needs {ACTION_DIM} comma-separated values")))
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl TrainConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment. Unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", ln + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(format!("line {}: `{key}` given twice", ln + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "track" => self.track = v.to_string(),
            "episodes" => self.episodes = parse_num(key, v)?,
            "max_steps" => self.max_steps = parse_num(key, v)?,
            "buffer_capacity" => self.buffer_capacity = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "actor_lr" => self.actor_lr = parse_num(key, v)?,
            "critic_lr" => self.critic_lr = parse_num(key, v)?,
            "reward_alpha" => self.reward.alpha = parse_num(key, v)?,
            "reward_beta" => self.reward.beta = parse_num(key, v)?,
            "reward_gamma" => self.reward.gamma_w = parse_num(key, v)?,
            "ou_theta" => self.ou.theta = parse_triple(key, v)?,
            "ou_mu" => self.ou.mu = parse_triple(key, v)?,
            "ou_sigma" => self.ou.sigma = parse_triple(key, v)?,
            "ou_dt" => self.ou.dt = parse_num(key, v)?,
            "epsilon_decay_steps" => self.epsilon_decay_steps = parse_num(key, v)?,
            "warmup" => self.warmup = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "checkpoint_interval" => self.checkpoint_interval = parse_num(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "actor_hidden" => self.actor_hidden = parse_list(key, v)?,
            "critic_state_hidden" => self.critic_state_hidden = parse_num(key, v)?,
            "critic_merge_width" => self.critic_merge_width = parse_num(key, v)?,
            "critic_hidden" => self.critic_hidden = parse_list(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical text form; [`TrainConfig::parse`] reads it back exactly.
    pub fn to_text(&self) -> String {
        self.render(true)
    }

    /// Canonical text without `output_dir`, so that where a run writes its
    /// files does not change what it stores.
    pub fn state_text(&self) -> String {
        self.render(false)
    }

    fn render(&self, with_output: bool) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("track", self.track.clone());
        kv("episodes", self.episodes.to_string());
        kv("max_steps", self.max_steps.to_string());
        kv("buffer_capacity", self.buffer_capacity.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("gamma", self.gamma.to_string());
        kv("tau", self.tau.to_string());
        kv("actor_lr", self.actor_lr.to_string());
        kv("critic_lr", self.critic_lr.to_string());
        kv("reward_alpha", self.reward.alpha.to_string());
        kv("reward_beta", self.reward.beta.to_string());
        kv("reward_gamma", self.reward.gamma_w.to_string());
        kv("ou_theta", join(&self.ou.theta));
        kv("ou_mu", join(&self.ou.mu));
        kv("ou_sigma", join(&self.ou.sigma));
        kv("ou_dt", self.ou.dt.to_string());
        kv("epsilon_decay_steps", self.epsilon_decay_steps.to_string());
        kv("warmup", self.warmup.to_string());
        kv("seed", self.seed.to_string());
        kv("checkpoint_interval", self.checkpoint_interval.to_string());
        if with_output {
            kv("output_dir", self.output_dir.display().to_string());
        }
        kv("actor_hidden", join(&self.actor_hidden));
        kv("critic_state_hidden", self.critic_state_hidden.to_string());
        kv("critic_merge_width", self.critic_merge_width.to_string());
        kv("critic_hidden", join(&self.critic_hidden));
        kv("dt", self.dt.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_steps", self.max_steps),
            ("buffer_capacity", self.buffer_capacity as u64),
            ("batch_size", self.batch_size as u64),
            ("epsilon_decay_steps", self.epsilon_decay_steps),
            ("checkpoint_interval", self.checkpoint_interval),
            ("critic_state_hidden", self.critic_state_hidden as u64),
            ("critic_merge_width", self.critic_merge_width as u64),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("`{k}` must be positive")));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return Err(Error::config("`batch_size` exceeds `buffer_capacity`"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("`dt` must be positive"));
        }
        let w = &self.reward;
        if [w.alpha, w.beta, w.gamma_w].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("reward weights must be finite and non-negative"));
        }
        let ou = &self.ou;
        let ou_ok = ou.dt > 0.0
            && ou.theta.iter().chain(&ou.mu).chain(&ou.sigma).all(|v| v.is_finite())
            && ou.sigma.iter().all(|s| *s >= 0.0);
        if !ou_ok {
            return Err(Error::config("OU parameters must be finite with dt > 0, sigma >= 0"));
        }
        self.agent_config().validate()
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            actor_hidden: self.actor_hidden.clone(),
            critic_state_hidden: self.critic_state_hidden,
            critic_merge_width: self.critic_merge_width,
            critic_hidden: self.critic_hidden.clone(),
            gamma: self.gamma,
            tau: self.tau,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dynamics: Dynamics::default(),
            reward: self.reward,
            dt: self.dt,
            max_steps: self.max_steps,
            ..SimConfig::default()
        }
    }
}
