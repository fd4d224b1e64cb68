use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{gemm, Matrix, Trans};
use crate::error::{Error, Result};

/// Half-width of the uniform range used for the final layer at init.
pub const FINAL_LAYER_INIT: f64 = 3e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    /// ReLU'(0) is 0.
    #[inline]
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Linear => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Sigmoid,
            3 => Activation::Linear,
            _ => return None,
        })
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored as out x in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::config(format!(
                "layer has {} biases for {} outputs",
                biases.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// Feedforward stack of dense layers.
///
/// Every network instance carries a stamp that changes whenever its
/// parameters are handed out mutably. Forward caches record the stamp so a
/// backward pass against a different or since-modified network is rejected.
#[derive(Debug)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    stamp: u64,
}

impl Clone for Mlp {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            stamp: fresh_stamp(),
        }
    }
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations recorded by [`Mlp::forward_batch`], one row per sample.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    stamp: u64,
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardCache {
    /// Network output, batch x out.
    pub fn output(&self) -> &Matrix {
        self.post.last().unwrap_or(&self.input)
    }

    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }
}

/// Parameter gradients, shaped exactly like the network they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub layers: Vec<LayerGradients>,
}

impl MlpGradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    biases: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// Weight/bias slices per layer, in the same order as [`Mlp::param_groups_mut`].
    pub fn groups(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weights.as_slice());
            out.push(l.biases.as_slice());
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| {
            l.weights
                .as_slice()
                .iter()
                .chain(l.biases.iter())
                .copied()
        })
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::config(format!(
                    "layer {} expects {} inputs but layer {} produces {}",
                    i + 1,
                    pair[1].in_dim(),
                    i,
                    pair[0].out_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            stamp: fresh_stamp(),
        })
    }

    /// Builds a network for `sizes = [input, hidden.., output]` with one
    /// activation per layer.
    ///
    /// Hidden weights and biases are uniform in ±1/sqrt(fan_in); the final
    /// layer is uniform in ±3e-3 so initial outputs sit near zero.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::config("architecture needs input and output sizes"));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(Error::config(format!(
                "{} layers need {} activations, got {}",
                sizes.len() - 1,
                sizes.len() - 1,
                activations.len()
            )));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::config(format!("layer size {i} is zero")));
        }
        let n = activations.len();
        let mut layers = Vec::with_capacity(n);
        for (i, (w, &act)) in sizes.windows(2).zip(activations).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if i + 1 == n {
                FINAL_LAYER_INIT
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            let weights: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            let biases: Vec<f64> = (0..fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            layers.push(DenseLayer::new(
                Matrix::from_vec(fan_out, fan_in, weights)?,
                biases,
                act,
            )?);
        }
        Self::new(layers)
    }

    /// [`Mlp::init`] driven by a dedicated generator seeded with `seed`.
    pub fn init_seeded(sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        Self::init(sizes, activations, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access to the layers; invalidates outstanding forward caches.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.stamp = fresh_stamp();
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    /// Sizes of the weight and bias groups, layer by layer.
    pub fn group_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice().len(), l.biases.len()])
            .collect()
    }

    /// Weight/bias slices per layer; invalidates outstanding forward caches.
    pub fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        self.stamp = fresh_stamp();
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            out.push(l.biases.as_mut_slice());
        }
        out
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| {
            l.weights
                .as_slice()
                .iter()
                .chain(l.biases.iter())
                .copied()
        })
    }

    /// Runs a batch (one sample per row) through the network.
    pub fn forward_batch(&self, input: &Matrix) -> Result<ForwardCache> {
        if input.cols() != self.input_dim() {
            return Err(Error::config(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        let batch = input.rows();
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post.last().unwrap_or(input);
            let mut z = Matrix::zeros(batch, layer.out_dim());
            for r in 0..batch {
                z.row_mut(r).copy_from_slice(&layer.biases);
            }
            gemm(1.0, x, Trans::No, &layer.weights, Trans::Yes, 1.0, &mut z);
            let mut y = z.clone();
            for v in y.as_mut_slice() {
                *v = layer.activation.apply(*v);
            }
            pre.push(z);
            post.push(y);
        }
        Ok(ForwardCache {
            stamp: self.stamp,
            input: input.clone(),
            pre,
            post,
        })
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let cache = self.forward_batch(&Matrix::from_vec(1, input.len(), input.to_vec())?)?;
        Ok((cache.output().row(0).to_vec(), cache))
    }

    /// Output only, without keeping a cache around.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    fn check_cache(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<()> {
        if cache.stamp != self.stamp {
            return Err(Error::usage(
                "forward cache was produced by a different or since-modified network",
            ));
        }
        if output_grad.rows() != cache.batch_size() || output_grad.cols() != self.output_dim() {
            return Err(Error::usage(format!(
                "output gradient is {}x{}, expected {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                cache.batch_size(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Reverse-mode pass. Parameter gradients are summed over the batch; the
    /// input gradient has one row per sample.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        output_grad: &Matrix,
    ) -> Result<(MlpGradients, Matrix)> {
        let mut grads = MlpGradients::zeros_like(self);
        let input_grad = self.backprop(cache, output_grad, Some(&mut grads))?;
        Ok((grads, input_grad))
    }

    /// Input gradient only; skips the parameter-gradient products.
    pub fn backward_input(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<Matrix> {
        self.backprop(cache, output_grad, None)
    }

    /// Single-sample reverse pass for a cache from [`Mlp::forward`].
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<(MlpGradients, Vec<f64>)> {
        let g = Matrix::from_vec(1, output_grad.len(), output_grad.to_vec())
            .map_err(|_| Error::usage("output gradient has the wrong length"))?;
        let (grads, dx) = self.backward_batch(cache, &g)?;
        Ok((grads, dx.into_vec()))
    }

    fn backprop(
        &self,
        cache: &ForwardCache,
        output_grad: &Matrix,
        mut grads: Option<&mut MlpGradients>,
    ) -> Result<Matrix> {
        self.check_cache(cache, output_grad)?;
        let mut upstream = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[i];
            let y = &cache.post[i];
            let mut dz = upstream;
            if layer.activation != Activation::Linear {
                for ((g, &zv), &yv) in dz
                    .as_mut_slice()
                    .iter_mut()
                    .zip(z.as_slice())
                    .zip(y.as_slice())
                {
                    *g *= layer.activation.derivative(zv, yv);
                }
            }
            let x = if i == 0 { &cache.input } else { &cache.post[i - 1] };
            if let Some(g) = grads.as_deref_mut() {
                let lg = &mut g.layers[i];
                gemm(1.0, &dz, Trans::Yes, x, Trans::No, 0.0, &mut lg.weights);
                for r in 0..dz.rows() {
                    for (b, d) in lg.biases.iter_mut().zip(dz.row(r)) {
                        *b += d;
                    }
                }
            }
            let mut dx = Matrix::zeros(dz.rows(), layer.in_dim());
            gemm(1.0, &dz, Trans::No, &layer.weights, Trans::No, 0.0, &mut dx);
            upstream = dx;
        }
        Ok(upstream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(weights: Matrix, act: Activation) -> Mlp {
        let n = weights.rows();
        Mlp::new(vec![DenseLayer::new(weights, vec![0.0; n], act).unwrap()]).unwrap()
    }

    #[test]
    fn linear_identity_passes_input_through() {
        let net = single(Matrix::identity(2), Activation::Linear);
        assert_eq!(net.predict(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn relu_identity_clips_negatives() {
        let net = single(Matrix::identity(2), Activation::Relu);
        assert_eq!(net.predict(&[-3.0, 4.0]).unwrap(), vec![0.0, 4.0]);
    }

    #[test]
    fn relu_derivative_at_zero_is_zero() {
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
    }

    #[test]
    fn linear_layer_gradients_are_outer_product_and_transpose() {
        let w = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]).unwrap();
        let net = Mlp::new(vec![
            DenseLayer::new(w.clone(), vec![0.1, -0.2], Activation::Linear).unwrap(),
        ])
        .unwrap();
        let x = [2.0, -1.0, 4.0];
        let g = [0.5, -3.0];
        let (_, cache) = net.forward(&x).unwrap();
        let (grads, dx) = net.backward(&cache, &g).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(grads.layers[0].weights.get(r, c), g[r] * x[c]);
            }
        }
        assert_eq!(grads.layers[0].biases, g.to_vec());
        for c in 0..3 {
            assert_eq!(dx[c], w.get(0, c) * g[0] + w.get(1, c) * g[1]);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = Mlp::init_seeded(
            &[4, 5, 3],
            &[Activation::Tanh, Activation::Sigmoid],
            7,
        )
        .unwrap();
        let (_, cache) = net.forward(&[0.3, -0.2, 1.0, 0.5]).unwrap();
        let (grads, dx) = net.backward(&cache, &[0.0; 3]).unwrap();
        assert!(grads.iter().all(|v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = Mlp::init_seeded(&[2, 2], &[Activation::Linear], 1).unwrap();
        let (_, cache) = net.forward(&[1.0, 1.0]).unwrap();
        net.layers_mut()[0].biases[0] = 1.0;
        assert!(matches!(net.backward(&cache, &[1.0, 1.0]), Err(Error::Usage(_))));

        let other = net.clone();
        let (_, cache) = other.forward(&[1.0, 1.0]).unwrap();
        assert!(matches!(net.backward(&cache, &[1.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn wrong_gradient_length_is_rejected() {
        let net = Mlp::init_seeded(&[2, 2], &[Activation::Linear], 1).unwrap();
        let (_, cache) = net.forward(&[1.0, 1.0]).unwrap();
        assert!(matches!(net.backward(&cache, &[1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = Mlp::init_seeded(&[3, 2], &[Activation::Linear], 1).unwrap();
        assert!(matches!(net.predict(&[1.0, 2.0]), Err(Error::Config(_))));
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let acts = [Activation::Relu, Activation::Linear];
        let a = Mlp::init_seeded(&[5, 8, 2], &acts, 42).unwrap();
        let b = Mlp::init_seeded(&[5, 8, 2], &acts, 42).unwrap();
        let c = Mlp::init_seeded(&[5, 8, 2], &acts, 43).unwrap();
        assert_eq!(a, b);
        assert!(a.params().zip(b.params()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
    }

    #[test]
    fn init_bounds_follow_fan_in() {
        let net = Mlp::init_seeded(
            &[100, 50, 4],
            &[Activation::Relu, Activation::Linear],
            3,
        )
        .unwrap();
        let hidden = &net.layers()[0];
        assert!(hidden.weights.as_slice().iter().all(|w| w.abs() <= 0.1));
        let last = &net.layers()[1];
        assert!(last.weights.as_slice().iter().all(|w| w.abs() <= 3e-3));
    }

    #[test]
    fn empty_architecture_is_rejected() {
        assert!(matches!(Mlp::init_seeded(&[4], &[], 0), Err(Error::Config(_))));
        assert!(matches!(Mlp::new(vec![]), Err(Error::Config(_))));
        assert!(matches!(
            Mlp::init_seeded(&[4, 0, 1], &[Activation::Relu, Activation::Linear], 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn mismatched_consecutive_layers_are_rejected() {
        let l0 = DenseLayer::new(Matrix::zeros(3, 2), vec![0.0; 3], Activation::Relu).unwrap();
        let l1 = DenseLayer::new(Matrix::zeros(1, 4), vec![0.0; 1], Activation::Relu).unwrap();
        assert!(matches!(Mlp::new(vec![l0, l1]), Err(Error::Config(_))));
    }
}
