//! Dense feedforward networks with cached forward passes, exact reverse-mode
//! gradients (including the gradient with respect to the input), and Adam.

mod adam;
mod matrix;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use matrix::Matrix;
pub use mlp::{
    sigmoid, Activation, DenseLayer, ForwardCache, LayerGradients, Mlp, MlpGradients,
    FINAL_LAYER_INIT,
};

impl Mlp {
    /// Applies one Adam step to every parameter of the network.
    pub fn adam_step(&mut self, grads: &MlpGradients, state: &mut AdamState) -> crate::Result<()> {
        let g = grads.groups();
        state.step(&mut self.param_groups_mut(), &g)
    }
}
