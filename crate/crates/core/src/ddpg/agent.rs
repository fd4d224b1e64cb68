use rand::Rng;

use super::critic::{ActionValue, Critic, CriticGradients};
use super::noise::OuNoise;
use super::types::{ActionVector, Experience, ObservationVector, ACTION_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::nn::{sigmoid, Activation, AdamConfig, AdamState, Matrix, Mlp, MlpGradients};

/// Network shapes and learning constants for a [`DdpgAgent`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// ReLU hidden widths of the actor.
    pub actor_hidden: Vec<usize>,
    /// Width of the critic's first (state-only) ReLU layer.
    pub critic_state_hidden: usize,
    /// Width of the merge layer where actions join.
    pub critic_merge_width: usize,
    /// ReLU widths between the merge layer and the Q head.
    pub critic_hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![300, 600],
            critic_state_hidden: 300,
            critic_merge_width: 600,
            critic_hidden: vec![600],
            gamma: 0.99,
            tau: 0.001,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config(format!("tau {} outside (0, 1]", self.tau)));
        }
        AdamConfig::with_learning_rate(self.actor_lr).validate()?;
        AdamConfig::with_learning_rate(self.critic_lr).validate()?;
        let widths = self
            .actor_hidden
            .iter()
            .chain(&self.critic_hidden)
            .chain([&self.critic_state_hidden, &self.critic_merge_width]);
        if widths.into_iter().any(|&w| w == 0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        Ok(())
    }
}

/// Actor, critic, their slowly tracking target copies, and both optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct DdpgAgent {
    /// Policy network; its three linear outputs are squashed by
    /// sigmoid (acceleration, brake) and tanh (steering).
    pub actor: Mlp,
    pub critic: Critic,
    pub target_actor: Mlp,
    pub target_critic: Critic,
    pub actor_optimizer: AdamState,
    pub critic_optimizer: AdamState,
    pub gamma: f64,
    pub tau: f64,
}

/// Losses reported by one [`DdpgAgent::train_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Maps raw actor outputs onto the action ranges.
pub fn squash(raw: &[f64]) -> [f64; ACTION_DIM] {
    [sigmoid(raw[0]), sigmoid(raw[1]), raw[2].tanh()]
}

/// Derivative of [`squash`] expressed through its output.
fn squash_derivative(y: &[f64]) -> [f64; ACTION_DIM] {
    [y[0] * (1.0 - y[0]), y[1] * (1.0 - y[1]), 1.0 - y[2] * y[2]]
}

fn states_matrix<'a>(obs: impl ExactSizeIterator<Item = &'a ObservationVector>) -> Matrix {
    let mut m = Matrix::zeros(obs.len(), OBS_DIM);
    for (r, o) in obs.enumerate() {
        m.row_mut(r).copy_from_slice(&o.network_input());
    }
    m
}

fn actions_matrix<'a>(actions: impl ExactSizeIterator<Item = &'a ActionVector>) -> Matrix {
    let mut m = Matrix::zeros(actions.len(), ACTION_DIM);
    for (r, a) in actions.enumerate() {
        m.row_mut(r).copy_from_slice(&a.to_array());
    }
    m
}

/// `target <- tau * online + (1 - tau) * target`, parameter by parameter.
fn blend(target: &mut [&mut [f64]], online: impl Iterator<Item = f64>, tau: f64) {
    let mut online = online;
    for group in target.iter_mut() {
        for t in group.iter_mut() {
            let o = online.next().expect("online and target shapes agree");
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
}

impl DdpgAgent {
    /// Fresh agent whose target networks start as exact copies of the online ones.
    pub fn new<R: Rng + ?Sized>(config: &AgentConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut sizes = vec![OBS_DIM];
        sizes.extend_from_slice(&config.actor_hidden);
        sizes.push(ACTION_DIM);
        let mut acts = vec![Activation::Relu; config.actor_hidden.len()];
        acts.push(Activation::Linear);
        let actor = Mlp::init(&sizes, &acts, rng)?;
        let critic = Critic::init(
            OBS_DIM,
            ACTION_DIM,
            config.critic_state_hidden,
            config.critic_merge_width,
            &config.critic_hidden,
            rng,
        )?;
        Self::from_networks(actor, critic, config)
    }

    pub fn from_networks(actor: Mlp, critic: Critic, config: &AgentConfig) -> Result<Self> {
        if actor.input_dim() != OBS_DIM || actor.output_dim() != ACTION_DIM {
            return Err(Error::config(format!(
                "actor must map {OBS_DIM} inputs to {ACTION_DIM} outputs"
            )));
        }
        if critic.obs_dim() != OBS_DIM || critic.action_dim() != ACTION_DIM {
            return Err(Error::config("critic dimensions do not match observations/actions"));
        }
        let actor_optimizer =
            AdamState::new(&actor.group_sizes(), AdamConfig::with_learning_rate(config.actor_lr));
        let critic_optimizer = AdamState::new(
            &critic.group_sizes(),
            AdamConfig::with_learning_rate(config.critic_lr),
        );
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            actor_optimizer,
            critic_optimizer,
            gamma: config.gamma,
            tau: config.tau,
        })
    }

    /// Greedy policy output with no exploration.
    pub fn act(&self, obs: &ObservationVector) -> Result<ActionVector> {
        let raw = self.actor.predict(&obs.network_input())?;
        Ok(ActionVector::from_array(squash(&raw)).clamped())
    }

    /// Policy output plus `epsilon`-scaled OU noise, clamped to the action
    /// ranges. The noise process advances even when `epsilon` is zero.
    pub fn act_noisy<R: Rng + ?Sized>(
        &self,
        obs: &ObservationVector,
        noise: &mut OuNoise,
        rng: &mut R,
        epsilon: f64,
    ) -> Result<ActionVector> {
        let raw = self.actor.predict(&obs.network_input())?;
        let mut a = squash(&raw);
        let n = noise.sample(rng);
        for (v, x) in a.iter_mut().zip(n) {
            *v += epsilon * x;
        }
        Ok(ActionVector::from_array(a).clamped())
    }

    pub fn actor_forward<R: Rng + ?Sized>(
        &self,
        obs: &ObservationVector,
        deterministic: bool,
        noise: &mut OuNoise,
        rng: &mut R,
        epsilon: f64,
    ) -> Result<ActionVector> {
        if deterministic {
            self.act(obs)
        } else {
            self.act_noisy(obs, noise, rng, epsilon)
        }
    }

    pub fn critic_forward(&self, obs: &ObservationVector, action: &ActionVector) -> Result<f64> {
        self.critic.q(&obs.network_input(), &action.to_array())
    }

    /// `y = r` for terminal transitions, otherwise
    /// `y = r + gamma * Q'(s', mu'(s'))` using only the target networks.
    pub fn compute_td_targets(&self, batch: &[Experience]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::usage("TD targets need a non-empty batch"));
        }
        let next = states_matrix(batch.iter().map(|e| &e.next_state));
        let raw = self.target_actor.forward_batch(&next)?;
        let mut next_actions = Matrix::zeros(batch.len(), ACTION_DIM);
        for r in 0..batch.len() {
            next_actions
                .row_mut(r)
                .copy_from_slice(&squash(raw.output().row(r)));
        }
        let q_next = self.target_critic.forward_batch(&next, &next_actions)?.q_values();
        Ok(batch
            .iter()
            .zip(q_next)
            .map(|(e, q)| {
                if e.terminal {
                    e.reward
                } else {
                    e.reward + self.gamma * q
                }
            })
            .collect())
    }

    /// Gradient of the batch MSE `mean (Q(s, a) - y)^2` and its value.
    pub fn critic_gradient(
        &self,
        batch: &[Experience],
        targets: &[f64],
    ) -> Result<(CriticGradients, f64)> {
        if batch.is_empty() || targets.len() != batch.len() {
            return Err(Error::usage(format!(
                "{} targets for a batch of {}",
                targets.len(),
                batch.len()
            )));
        }
        let states = states_matrix(batch.iter().map(|e| &e.state));
        let actions = actions_matrix(batch.iter().map(|e| &e.action));
        let cache = self.critic.forward_batch(&states, &actions)?;
        let q = cache.q_values();
        let n = batch.len() as f64;
        let residual: Vec<f64> = q.iter().zip(targets).map(|(q, y)| q - y).collect();
        let loss = residual.iter().map(|d| d * d).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::Training {
                layer: self.critic.trunk().layers().len(),
                message: format!("critic loss is {loss}"),
            });
        }
        let dq: Vec<f64> = residual.iter().map(|d| 2.0 * d / n).collect();
        let (grads, _) = self.critic.backward_batch(&cache, &dq)?;
        Ok((grads, loss))
    }

    /// One Adam step on the critic; returns the loss before the step.
    pub fn critic_update(&mut self, batch: &[Experience], targets: &[f64]) -> Result<f64> {
        let (grads, loss) = self.critic_gradient(batch, targets)?;
        self.critic.adam_step(&grads, &mut self.critic_optimizer)?;
        Ok(loss)
    }

    /// Descent gradient of `-mean_i Q(s_i, mu(s_i))` with respect to the actor
    /// parameters, obtained by pushing dQ/da back through the actor.
    /// Returns the gradient and `mean_i Q`.
    pub fn actor_gradient_with(
        &self,
        batch: &[Experience],
        critic: &dyn ActionValue,
    ) -> Result<(MlpGradients, f64)> {
        if batch.is_empty() {
            return Err(Error::usage("actor update needs a non-empty batch"));
        }
        let n = batch.len();
        let states = states_matrix(batch.iter().map(|e| &e.state));
        let cache = self.actor.forward_batch(&states)?;
        let mut actions = Matrix::zeros(n, ACTION_DIM);
        for r in 0..n {
            actions.row_mut(r).copy_from_slice(&squash(cache.output().row(r)));
        }
        let (q, dq_da) = critic.value_and_action_grad(&states, &actions)?;
        let mut d_raw = Matrix::zeros(n, ACTION_DIM);
        for r in 0..n {
            let ds = squash_derivative(actions.row(r));
            for j in 0..ACTION_DIM {
                d_raw.set(r, j, -dq_da.get(r, j) * ds[j] / n as f64);
            }
        }
        let (grads, _) = self.actor.backward_batch(&cache, &d_raw)?;
        Ok((grads, q.iter().sum::<f64>() / n as f64))
    }

    pub fn actor_gradient(&self, batch: &[Experience]) -> Result<(MlpGradients, f64)> {
        self.actor_gradient_with(batch, &self.critic)
    }

    /// One Adam ascent step on `mean Q(s, mu(s))` against `critic`.
    pub fn actor_update_with(
        &mut self,
        batch: &[Experience],
        critic: &dyn ActionValue,
    ) -> Result<f64> {
        let (grads, objective) = self.actor_gradient_with(batch, critic)?;
        self.actor.adam_step(&grads, &mut self.actor_optimizer)?;
        Ok(objective)
    }

    /// Actor ascent step against the agent's own critic; the critic is not modified.
    pub fn actor_update(&mut self, batch: &[Experience]) -> Result<f64> {
        let (grads, objective) = self.actor_gradient(batch)?;
        self.actor.adam_step(&grads, &mut self.actor_optimizer)?;
        Ok(objective)
    }

    /// Moves both target networks a fraction `tau` toward the online ones.
    pub fn soft_update(&mut self) {
        let tau = self.tau;
        blend(
            &mut self.target_actor.param_groups_mut(),
            self.actor.params(),
            tau,
        );
        blend(
            &mut self.target_critic.param_groups_mut(),
            self.critic.params(),
            tau,
        );
    }

    /// TD targets, critic step, actor step and soft target update, in that order.
    pub fn train_step(&mut self, batch: &[Experience]) -> Result<UpdateStats> {
        let targets = self.compute_td_targets(batch)?;
        let critic_loss = self.critic_update(batch, &targets)?;
        let actor_objective = self.actor_update(batch)?;
        self.soft_update();
        Ok(UpdateStats {
            critic_loss,
            actor_objective,
        })
    }
}
