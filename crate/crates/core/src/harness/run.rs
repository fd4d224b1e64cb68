use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use crate::ddpg::{ActionVector, DdpgAgent, Experience, ObservationVector, OuNoise, ReplayBuffer};
use crate::error::{Error, Result};
use crate::sim::{observe, step, CarState, EpisodeMetrics, SimConfig, TerminationReason, TrackDefinition};

pub const METRICS_HEADER: &str = "episode,steps,total_reward,total_distance_m,mean_speed_kmh,\
mean_step_gain,var_dist_center_m2,epsilon";

/// One row of a metrics file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub metrics: EpisodeMetrics,
    /// Exploration scale at the start of the episode.
    pub epsilon: f64,
    pub termination: TerminationReason,
}

impl EpisodeRecord {
    pub fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.episode,
            m.episode_steps,
            m.total_reward,
            m.total_distance_m,
            m.mean_speed_kmh,
            m.mean_step_gain,
            m.var_dist_center_m2,
            self.epsilon
        )
    }
}

/// OU exploration with a linearly decaying scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub noise: OuNoise,
    pub rng: ChaCha8Rng,
    pub epsilon_decay_steps: u64,
    /// Steps taken so far; drives the decay.
    pub total_steps: u64,
}

impl Exploration {
    pub fn epsilon(&self) -> f64 {
        (1.0 - self.total_steps as f64 / self.epsilon_decay_steps as f64).max(0.0)
    }
}

trait Controller {
    fn act(&mut self, obs: &ObservationVector) -> Result<ActionVector>;
    fn record(&mut self, exp: Experience) -> Result<()>;
}

fn run_episode(
    controller: &mut impl Controller,
    track: &TrackDefinition,
    sim: &SimConfig,
) -> Result<(EpisodeMetrics, TerminationReason)> {
    let mut state = CarState::reset(track);
    let mut obs = observe(&state, track, sim);
    let mut history = Vec::new();
    loop {
        let action = controller.act(&obs)?;
        let (next, result) = step(&state, &action, track, sim);
        let terminal = matches!(
            result.termination_reason,
            TerminationReason::OutOfTrack | TerminationReason::WrongWay
        );
        controller.record(Experience::new(obs, action, result.reward, result.observation, terminal)?)?;
        history.push(result);
        state = next;
        obs = result.observation;
        if result.terminal {
            let m = EpisodeMetrics::from_history(&history, &state, track.half_width())?;
            return Ok((m, result.termination_reason));
        }
    }
}

struct Learner<'a> {
    agent: &'a mut DdpgAgent,
    buffer: &'a mut ReplayBuffer,
    exploration: &'a mut Exploration,
    batch_size: usize,
    start_after: usize,
}

impl Controller for Learner<'_> {
    fn act(&mut self, obs: &ObservationVector) -> Result<ActionVector> {
        let eps = self.exploration.epsilon();
        let x = &mut *self.exploration;
        let a = self.agent.act_noisy(obs, &mut x.noise, &mut x.rng, eps)?;
        x.total_steps += 1;
        Ok(a)
    }

    fn record(&mut self, exp: Experience) -> Result<()> {
        self.buffer.push(exp);
        if self.buffer.len() >= self.start_after {
            let batch = self.buffer.sample(self.batch_size)?;
            self.agent.train_step(&batch)?;
        }
        Ok(())
    }
}

struct Evaluator<'a> {
    agent: &'a DdpgAgent,
    exploration: Option<&'a mut Exploration>,
}

impl Controller for Evaluator<'_> {
    fn act(&mut self, obs: &ObservationVector) -> Result<ActionVector> {
        match self.exploration.as_deref_mut() {
            None => self.agent.act(obs),
            Some(x) => {
                let eps = x.epsilon();
                let a = self.agent.act_noisy(obs, &mut x.noise, &mut x.rng, eps)?;
                x.total_steps += 1;
                Ok(a)
            }
        }
    }

    fn record(&mut self, _: Experience) -> Result<()> {
        Ok(())
    }
}

/// Runs `episodes` episodes without learning. With `exploration` the
/// behaviour policy is the same noisy one used during training; without it
/// the greedy policy is used and the epsilon column is zero.
pub fn evaluate(
    agent: &DdpgAgent,
    track: &TrackDefinition,
    sim: &SimConfig,
    episodes: u64,
    mut exploration: Option<&mut Exploration>,
) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        let epsilon = match exploration.as_deref_mut() {
            Some(x) => {
                x.noise.reset();
                x.epsilon()
            }
            None => 0.0,
        };
        let mut ev = Evaluator {
            agent,
            exploration: exploration.as_deref_mut(),
        };
        let (metrics, termination) = run_episode(&mut ev, track, sim)?;
        out.push(EpisodeRecord {
            episode,
            metrics,
            epsilon,
            termination,
        });
    }
    Ok(out)
}

/// Online DDPG training on one track.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    track: TrackDefinition,
    sim: SimConfig,
    agent: DdpgAgent,
    buffer: ReplayBuffer,
    exploration: Exploration,
    episode: u64,
    updates: bool,
}

impl Trainer {
    /// Fresh trainer. Network initialization, replay sampling and
    /// exploration noise all derive from one generator seeded by
    /// `config.seed`.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let track = TrackDefinition::resolve(&config.track)?;
        let mut root = ChaCha8Rng::seed_from_u64(config.seed);
        let agent = DdpgAgent::new(&config.agent_config(), &mut root)?;
        let buffer = ReplayBuffer::new(config.buffer_capacity, ChaCha8Rng::from_rng(&mut root))?;
        let exploration = Exploration {
            noise: OuNoise::new(config.ou),
            rng: ChaCha8Rng::from_rng(&mut root),
            epsilon_decay_steps: config.epsilon_decay_steps,
            total_steps: 0,
        };
        Ok(Self {
            sim: config.sim_config(),
            config,
            track,
            agent,
            buffer,
            exploration,
            episode: 0,
            updates: true,
        })
    }

    /// Resumes from a checkpoint under `config`, which may change the
    /// episode count, rates, output location or exploration schedule but
    /// not the network shapes or buffer capacity.
    pub fn resume(checkpoint: Checkpoint, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let old = &checkpoint.config;
        let same_shape = old.actor_hidden == config.actor_hidden
            && old.critic_state_hidden == config.critic_state_hidden
            && old.critic_merge_width == config.critic_merge_width
            && old.critic_hidden == config.critic_hidden
            && old.buffer_capacity == config.buffer_capacity;
        if !same_shape {
            return Err(Error::config(
                "network shapes and buffer capacity must match the checkpoint",
            ));
        }
        let track = TrackDefinition::resolve(&config.track)?;
        let mut agent = checkpoint.agent;
        agent.gamma = config.gamma;
        agent.tau = config.tau;
        agent.actor_optimizer.config.learning_rate = config.actor_lr;
        agent.critic_optimizer.config.learning_rate = config.critic_lr;
        let mut noise = checkpoint.noise;
        noise.params = config.ou;
        Ok(Self {
            sim: config.sim_config(),
            track,
            agent,
            buffer: checkpoint.buffer,
            exploration: Exploration {
                noise,
                rng: checkpoint.noise_rng,
                epsilon_decay_steps: config.epsilon_decay_steps,
                total_steps: checkpoint.total_steps,
            },
            episode: checkpoint.episode,
            config,
            updates: true,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn agent(&self) -> &DdpgAgent {
        &self.agent
    }

    pub fn track(&self) -> &TrackDefinition {
        &self.track
    }

    pub fn sim_config(&self) -> &SimConfig {
        &self.sim
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn exploration(&self) -> &Exploration {
        &self.exploration
    }

    /// Episodes completed.
    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// Disables network updates; transitions are still stored.
    pub fn set_updates_enabled(&mut self, on: bool) {
        self.updates = on;
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            episode: self.episode,
            total_steps: self.exploration.total_steps,
            agent: self.agent.clone(),
            noise: self.exploration.noise.clone(),
            noise_rng: self.exploration.rng.clone(),
            buffer: self.buffer.clone(),
        }
    }

    /// Plays one episode, updating the networks once per step after warmup.
    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        self.exploration.noise.reset();
        let epsilon = self.exploration.epsilon();
        let start_after = if self.updates {
            self.config.warmup.max(self.config.batch_size)
        } else {
            usize::MAX
        };
        let mut learner = Learner {
            agent: &mut self.agent,
            buffer: &mut self.buffer,
            exploration: &mut self.exploration,
            batch_size: self.config.batch_size,
            start_after,
        };
        let (metrics, termination) = run_episode(&mut learner, &self.track, &self.sim)?;
        let record = EpisodeRecord {
            episode: self.episode,
            metrics,
            epsilon,
            termination,
        };
        self.episode += 1;
        Ok(record)
    }
}

/// Paths written by [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub metrics: PathBuf,
    pub final_checkpoint: PathBuf,
    pub records: Vec<EpisodeRecord>,
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "final.ddpg";
pub const DIAGNOSTIC_CHECKPOINT: &str = "diagnostic.ddpg";

pub fn checkpoint_name(episode: u64) -> String {
    format!("checkpoint_{episode:06}.ddpg")
}

/// Opens the metrics file, writing the header if it is new or empty.
pub fn open_metrics(path: &Path, append: bool) -> Result<BufWriter<File>> {
    let existing = append && fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
    let file = if append {
        OpenOptions::new().create(true).append(true).open(path)?
    } else {
        File::create(path)?
    };
    let mut w = BufWriter::new(file);
    if !existing {
        writeln!(w, "{METRICS_HEADER}")?;
    }
    Ok(w)
}

pub fn write_metrics(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    let mut w = open_metrics(path, false)?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Trains until `trainer` has completed `config.episodes` episodes, writing
/// `metrics.csv`, periodic checkpoints and `final.ddpg` into the output
/// directory. On a numerical failure the state at that point is saved as
/// `diagnostic.ddpg` before the error is returned.
pub fn train(
    mut trainer: Trainer,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainOutput> {
    let dir = trainer.config.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let metrics = dir.join(METRICS_FILE);
    let mut w = open_metrics(&metrics, trainer.episode > 0)?;
    let interval = trainer.config.checkpoint_interval;
    let mut records = Vec::new();
    while trainer.episode < trainer.config.episodes {
        let record = match trainer.run_episode() {
            Ok(r) => r,
            Err(e @ Error::Training { .. }) => {
                w.flush()?;
                trainer.checkpoint().save(&dir.join(DIAGNOSTIC_CHECKPOINT))?;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        writeln!(w, "{}", record.csv_row())?;
        w.flush()?;
        on_episode(&record);
        records.push(record);
        if trainer.episode % interval == 0 {
            trainer.checkpoint().save(&dir.join(checkpoint_name(trainer.episode)))?;
        }
    }
    let final_checkpoint = dir.join(FINAL_CHECKPOINT);
    trainer.checkpoint().save(&final_checkpoint)?;
    Ok(TrainOutput {
        metrics,
        final_checkpoint,
        records,
    })
}
