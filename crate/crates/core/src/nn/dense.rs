use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::Params;
use crate::error::{Error, Result};
use crate::mdp::Prng;

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply(self, x: &mut Array2<f64>) {
        match self {
            Activation::Relu => x.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => x.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` in place by the derivative evaluated at `pre`.
    fn backprop(self, pre: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(pre, |g, &p| {
                if p <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(pre, |g, &p| {
                let t = p.tanh();
                *g *= 1.0 - t * t
            }),
            Activation::Identity => {}
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::config(format!("unknown activation '{s}'"))),
        }
    }
}

/// Fully connected network. Weights are stored `(fan_in, fan_out)` so a batch
/// of row vectors maps through `x.dot(w) + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    sizes: Vec<usize>,
    hidden: Activation,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Activations recorded by [`DenseNet::forward_cached`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::config(
            "a network needs at least input and output sizes",
        ));
    }
    if sizes.contains(&0) {
        return Err(Error::config(format!(
            "layer sizes must be positive: {sizes:?}"
        )));
    }
    Ok(())
}

impl DenseNet {
    /// Uniform fan-in initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(sizes: &[usize], hidden: Activation, rng: &mut Prng) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden)?;
        for (w, b) in net.weights.iter_mut().zip(net.biases.iter_mut()) {
            let bound = 1.0 / (w.nrows() as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-bound..bound));
            b.mapv_inplace(|_| rng.random_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self> {
        check_sizes(sizes)?;
        let weights = sizes
            .windows(2)
            .map(|p| Array2::zeros((p[0], p[1])))
            .collect();
        let biases = sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            weights,
            biases,
        })
    }

    pub(crate) fn from_parts(
        sizes: Vec<usize>,
        hidden: Activation,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Self {
        Self {
            sizes,
            hidden,
            weights,
            biases,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.hidden
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.weights.len() - 1;
        self.weights[last].mapv_inplace(|w| w * factor);
        self.biases[last].mapv_inplace(|b| b * factor);
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            Err(Error::config(format!(
                "network input has {cols} features, expected {}",
                self.input_dim()
            )))
        } else {
            Ok(())
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let out = self.forward_batch(view)?;
        Ok(out.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let last = self.weights.len() - 1;
        let mut h = x.dot(&self.weights[0]) + &self.biases[0];
        if last > 0 {
            self.hidden.apply(&mut h);
        }
        for l in 1..=last {
            h = h.dot(&self.weights[l]) + &self.biases[l];
            if l < last {
                self.hidden.apply(&mut h);
            }
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x.ncols())?;
        let last = self.weights.len() - 1;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut h = x;
        for l in 0..=last {
            let z = h.dot(&self.weights[l]) + &self.biases[l];
            inputs.push(h);
            let mut a = z.clone();
            if l < last {
                self.hidden.apply(&mut a);
            }
            pre.push(z);
            h = a;
        }
        Ok((h, ForwardCache { inputs, pre }))
    }

    /// Reverse-mode pass. `upstream` is dL/d(output) per row; returns the
    /// parameter gradients and dL/d(input).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
    ) -> Result<(NetGrads, Array2<f64>)> {
        let rows = cache.inputs[0].nrows();
        if upstream.dim() != (rows, self.output_dim()) {
            return Err(Error::config(format!(
                "upstream gradient shape {:?} != ({rows}, {})",
                upstream.dim(),
                self.output_dim()
            )));
        }
        let last = self.weights.len() - 1;
        let mut gw = Vec::with_capacity(self.weights.len());
        let mut gb = Vec::with_capacity(self.weights.len());
        let mut g = upstream.to_owned();
        for l in (0..=last).rev() {
            if l < last {
                self.hidden.backprop(&cache.pre[l], &mut g);
            }
            let w = cache.inputs[l].t().dot(&g);
            gw.push(if w.is_standard_layout() {
                w
            } else {
                w.as_standard_layout().into_owned()
            });
            gb.push(g.sum_axis(Axis(0)));
            g = g.dot(&self.weights[l].t());
        }
        gw.reverse();
        gb.reverse();
        Ok((
            NetGrads {
                weights: gw,
                biases: gb,
            },
            g,
        ))
    }
}

impl NetGrads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net
                .weights
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
            biases: net
                .biases
                .iter()
                .map(|b| Array1::zeros(b.raw_dim()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &NetGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            w.mapv_inplace(|v| v * factor);
        }
        for b in &mut self.biases {
            b.mapv_inplace(|v| v * factor);
        }
    }
}

fn layer_blocks<'a>(weights: &'a [Array2<f64>], biases: &'a [Array1<f64>]) -> Vec<&'a [f64]> {
    weights
        .iter()
        .zip(biases)
        .flat_map(|(w, b)| {
            [
                w.as_slice().expect("standard layout"),
                b.as_slice().expect("standard layout"),
            ]
        })
        .collect()
}

fn layer_blocks_mut<'a>(
    weights: &'a mut [Array2<f64>],
    biases: &'a mut [Array1<f64>],
) -> Vec<&'a mut [f64]> {
    weights
        .iter_mut()
        .zip(biases.iter_mut())
        .flat_map(|(w, b)| {
            [
                w.as_slice_mut().expect("standard layout"),
                b.as_slice_mut().expect("standard layout"),
            ]
        })
        .collect()
}

pub(crate) fn layer_block_label(index: usize) -> String {
    let kind = if index.is_multiple_of(2) {
        "weights"
    } else {
        "bias"
    };
    format!("layer {} {kind}", index / 2)
}

impl Params for DenseNet {
    fn blocks(&self) -> Vec<&[f64]> {
        layer_blocks(&self.weights, &self.biases)
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        layer_blocks_mut(&mut self.weights, &mut self.biases)
    }

    fn block_label(&self, index: usize) -> String {
        layer_block_label(index)
    }
}

impl Params for NetGrads {
    fn blocks(&self) -> Vec<&[f64]> {
        layer_blocks(&self.weights, &self.biases)
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        layer_blocks_mut(&mut self.weights, &mut self.biases)
    }

    fn block_label(&self, index: usize) -> String {
        layer_block_label(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::seeded;
    use ndarray::array;

    #[test]
    fn identity_linear_layer() {
        let mut net = DenseNet::zeros(&[2, 2], Activation::Relu).unwrap();
        net.weights_mut()[0].assign(&array![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = DenseNet::zeros(&[3, 4, 2], Activation::Tanh).unwrap();
        net.biases_mut()[1].assign(&array![0.5, -2.0]);
        assert_eq!(net.forward(&[9.0, -1.0, 3.0]).unwrap(), vec![0.5, -2.0]);
    }

    #[test]
    fn forward_is_pure() {
        let net = DenseNet::new(&[3, 16, 16, 2], Activation::Relu, &mut seeded(1)).unwrap();
        let x = [0.3, -0.2, 1.5];
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a, b);
        let (c, _) = net
            .forward_cached(ndarray::aview2(&[x]).to_owned())
            .unwrap();
        assert_eq!(c.row(0).to_vec(), a);
    }

    #[test]
    fn wrong_input_dim_is_config_error() {
        let net = DenseNet::zeros(&[3, 2], Activation::Relu).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Config(_))));
        assert!(DenseNet::zeros(&[3], Activation::Relu).is_err());
        assert!(DenseNet::zeros(&[3, 0, 1], Activation::Relu).is_err());
    }

    #[test]
    fn linear_layer_weight_grad_is_outer_product() {
        let net = DenseNet::new(&[3, 2], Activation::Relu, &mut seeded(4)).unwrap();
        let x = array![[1.0, -2.0, 0.5]];
        let g = array![[0.3, -1.1]];
        let (_, cache) = net.forward_cached(x.clone()).unwrap();
        let (grads, dx) = net.backward(&cache, g.view()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(grads.weights[0][[i, j]], x[[0, i]] * g[[0, j]]);
            }
        }
        assert_eq!(grads.biases[0], array![0.3, -1.1]);
        let expect_dx = g.dot(&net.weights()[0].t());
        assert_eq!(dx, expect_dx);
    }

    #[test]
    fn relu_blocks_gradient_at_negative_preactivation() {
        let mut net = DenseNet::zeros(&[1, 1, 1], Activation::Relu).unwrap();
        net.weights_mut()[0][[0, 0]] = 1.0;
        net.biases_mut()[0][0] = -5.0;
        net.weights_mut()[1][[0, 0]] = 2.0;
        let (_, cache) = net.forward_cached(array![[1.0]]).unwrap();
        let (grads, dx) = net.backward(&cache, array![[1.0]].view()).unwrap();
        assert_eq!(grads.weights[0][[0, 0]], 0.0);
        assert_eq!(grads.biases[0][0], 0.0);
        assert_eq!(dx[[0, 0]], 0.0);
    }

    #[test]
    fn params_flatten_in_layer_order() {
        let net = DenseNet::new(&[2, 3, 1], Activation::Relu, &mut seeded(0)).unwrap();
        assert_eq!(net.num_params(), 2 * 3 + 3 + 3 + 1);
        let mut other = DenseNet::zeros(&[2, 3, 1], Activation::Relu).unwrap();
        other.set_flat(&net.flat());
        assert_eq!(other, net);
        assert_eq!(net.block_label(3), "layer 1 bias");
    }
}
