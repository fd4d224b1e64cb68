use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, ForwardCache, Matrix, Mlp, MlpGradients};

/// Anything that scores state-action pairs and can differentiate the score
/// with respect to the action.
pub trait ActionValue {
    /// Q value per row and dQ/da per row.
    fn value_and_action_grad(&self, states: &Matrix, actions: &Matrix)
        -> Result<(Vec<f64>, Matrix)>;
}

/// Critic in which actions join at the second layer.
///
/// `state -> ReLU hidden -> ReLU merge`, where the merge is the point-wise sum
/// of a linear map of the hidden layer and a linear map of the action. The
/// merge is stored as one layer over `[hidden; action]`, so its last
/// `action_dim` weight columns are the action path. Further ReLU hidden
/// layers and a linear scalar head follow.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    state_path: Mlp,
    trunk: Mlp,
    action_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticGradients {
    pub state_path: MlpGradients,
    pub trunk: MlpGradients,
}

impl CriticGradients {
    pub fn groups(&self) -> Vec<&[f64]> {
        let mut g = self.state_path.groups();
        g.extend(self.trunk.groups());
        g
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.state_path.iter().chain(self.trunk.iter())
    }
}

/// Forward activations for one batch, reusable for the backward pass.
#[derive(Debug, Clone)]
pub struct CriticCache {
    state: ForwardCache,
    trunk: ForwardCache,
}

impl CriticCache {
    pub fn q_values(&self) -> Vec<f64> {
        self.trunk.output().as_slice().to_vec()
    }
}

impl Critic {
    /// `hidden` lists the ReLU layer widths between the merge and the head.
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        state_hidden: usize,
        merge_width: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let state_path = Mlp::init(&[obs_dim, state_hidden], &[Activation::Relu], rng)?;
        let mut sizes = vec![state_hidden + action_dim, merge_width];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut acts = vec![Activation::Relu; hidden.len() + 1];
        acts.push(Activation::Linear);
        let trunk = Mlp::init(&sizes, &acts, rng)?;
        Self::from_parts(state_path, trunk, action_dim)
    }

    pub fn from_parts(state_path: Mlp, trunk: Mlp, action_dim: usize) -> Result<Self> {
        if state_path.layers().len() != 1 {
            return Err(Error::config("critic state path must be a single layer"));
        }
        if trunk.input_dim() != state_path.output_dim() + action_dim {
            return Err(Error::config(format!(
                "critic merge expects {} inputs, state path gives {} plus {action_dim} actions",
                trunk.input_dim(),
                state_path.output_dim()
            )));
        }
        if trunk.output_dim() != 1 {
            return Err(Error::config("critic head must output a single value"));
        }
        Ok(Self {
            state_path,
            trunk,
            action_dim,
        })
    }

    pub fn state_path(&self) -> &Mlp {
        &self.state_path
    }

    pub fn trunk(&self) -> &Mlp {
        &self.trunk
    }

    pub fn state_path_mut(&mut self) -> &mut Mlp {
        &mut self.state_path
    }

    pub fn trunk_mut(&mut self) -> &mut Mlp {
        &mut self.trunk
    }

    pub fn obs_dim(&self) -> usize {
        self.state_path.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut g = self.state_path.group_sizes();
        g.extend(self.trunk.group_sizes());
        g
    }

    /// Parameter groups in the order `state_path` then `trunk`.
    pub fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        let mut g = self.state_path.param_groups_mut();
        g.extend(self.trunk.param_groups_mut());
        g
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.state_path.params().chain(self.trunk.params())
    }

    /// Zeroes the action-path columns of the merge layer.
    pub fn zero_action_path(&mut self) {
        let start = self.state_path.output_dim();
        let w = &mut self.trunk.layers_mut()[0].weights;
        for r in 0..w.rows() {
            for c in start..start + self.action_dim {
                w.set(r, c, 0.0);
            }
        }
    }

    pub fn forward_batch(&self, states: &Matrix, actions: &Matrix) -> Result<CriticCache> {
        if actions.cols() != self.action_dim || actions.rows() != states.rows() {
            return Err(Error::config(format!(
                "critic expects {} x {} actions, got {} x {}",
                states.rows(),
                self.action_dim,
                actions.rows(),
                actions.cols()
            )));
        }
        let state = self.state_path.forward_batch(states)?;
        let hidden = state.output();
        let h = hidden.cols();
        let mut merged = Matrix::zeros(states.rows(), h + self.action_dim);
        for r in 0..states.rows() {
            let row = merged.row_mut(r);
            row[..h].copy_from_slice(hidden.row(r));
            row[h..].copy_from_slice(actions.row(r));
        }
        let trunk = self.trunk.forward_batch(&merged)?;
        Ok(CriticCache { state, trunk })
    }

    pub fn q(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let s = Matrix::from_vec(1, state.len(), state.to_vec())?;
        let a = Matrix::from_vec(1, action.len(), action.to_vec())?;
        Ok(self.forward_batch(&s, &a)?.trunk.output().get(0, 0))
    }

    /// Backward pass for per-row output gradients `dq` (length = batch).
    /// Returns parameter gradients summed over the batch and dQ/da per row.
    pub fn backward_batch(
        &self,
        cache: &CriticCache,
        dq: &[f64],
    ) -> Result<(CriticGradients, Matrix)> {
        let g = Matrix::from_vec(dq.len(), 1, dq.to_vec())?;
        let (trunk_grads, d_merged) = self.trunk.backward_batch(&cache.trunk, &g)?;
        let (d_hidden, d_action) = self.split_merge_grad(&d_merged);
        let (state_grads, _) = self.state_path.backward_batch(&cache.state, &d_hidden)?;
        Ok((
            CriticGradients {
                state_path: state_grads,
                trunk: trunk_grads,
            },
            d_action,
        ))
    }

    /// dQ/da per row, skipping parameter gradients.
    pub fn action_grad(&self, cache: &CriticCache, dq: &[f64]) -> Result<Matrix> {
        let g = Matrix::from_vec(dq.len(), 1, dq.to_vec())?;
        let d_merged = self.trunk.backward_input(&cache.trunk, &g)?;
        Ok(self.split_merge_grad(&d_merged).1)
    }

    fn split_merge_grad(&self, d_merged: &Matrix) -> (Matrix, Matrix) {
        let h = self.state_path.output_dim();
        let n = d_merged.rows();
        let mut d_hidden = Matrix::zeros(n, h);
        let mut d_action = Matrix::zeros(n, self.action_dim);
        for r in 0..n {
            let row = d_merged.row(r);
            d_hidden.row_mut(r).copy_from_slice(&row[..h]);
            d_action.row_mut(r).copy_from_slice(&row[h..]);
        }
        (d_hidden, d_action)
    }

    pub fn adam_step(&mut self, grads: &CriticGradients, state: &mut AdamState) -> Result<()> {
        let g = grads.groups();
        state.step(&mut self.param_groups_mut(), &g)
    }
}

impl ActionValue for Critic {
    fn value_and_action_grad(
        &self,
        states: &Matrix,
        actions: &Matrix,
    ) -> Result<(Vec<f64>, Matrix)> {
        let cache = self.forward_batch(states, actions)?;
        let dq = self.action_grad(&cache, &vec![1.0; states.rows()])?;
        Ok((cache.q_values(), dq))
    }
}
