//! Fully connected network with two ReLU hidden layers and a softmax head.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::params::{cross_entropy, cross_entropy_grad, init_params, softmax_rows, Block, BlockKind, LayoutBuilder};
use super::Differentiable;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) n_in: usize,
    pub(crate) hidden: [usize; 2],
    pub(crate) n_out: usize,
    pub(crate) params: Vec<f64>,
    blocks: [Block; 6],
}

struct Forward {
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    logits: Array2<f64>,
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(n_in: usize, hidden: [usize; 2], n_out: usize) -> Self {
        let mut lb = LayoutBuilder::new();
        let [h1, h2] = hidden;
        let w = |fan_in, fan_out| BlockKind::Weight { fan_in, fan_out };
        let blocks = [
            lb.add("w1", n_in, h1, w(n_in, h1)),
            lb.add("b1", 1, h1, BlockKind::Bias),
            lb.add("w2", h1, h2, w(h1, h2)),
            lb.add("b2", 1, h2, BlockKind::Bias),
            lb.add("w3", h2, n_out, w(h2, n_out)),
            lb.add("b3", 1, n_out, BlockKind::Bias),
        ];
        Self {
            n_in,
            hidden,
            n_out,
            params: vec![0.0; lb.total()],
            blocks,
        }
    }

    pub fn new<R: Rng + ?Sized>(n_in: usize, hidden: [usize; 2], n_out: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(n_in, hidden, n_out);
        init_params(&m.blocks, &mut m.params, rng);
        m
    }

    pub(crate) fn from_params(n_in: usize, hidden: [usize; 2], n_out: usize, params: Vec<f64>) -> Option<Self> {
        let mut m = Self::zeros(n_in, hidden, n_out);
        if params.len() != m.params.len() {
            return None;
        }
        m.params = params;
        Some(m)
    }

    fn forward(&self, p: &[f64], x: ArrayView2<f64>) -> Forward {
        let [w1, b1, w2, b2, w3, b3] = &self.blocks;
        let z1 = x.dot(&w1.mat(p)) + b1.vec(p);
        let a1 = z1.mapv(|v| v.max(0.0));
        let z2 = a1.dot(&w2.mat(p)) + b2.vec(p);
        let a2 = z2.mapv(|v| v.max(0.0));
        let logits = a2.dot(&w3.mat(p)) + b3.vec(p);
        Forward { z1, a1, z2, a2, logits }
    }

    /// Class probabilities, one row per input row.
    pub fn probabilities(&self, x: ArrayView2<f64>) -> Array2<f64> {
        softmax_rows(&self.forward(&self.params, x).logits)
    }
}

impl Differentiable for Mlp {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    fn loss(&self, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        cross_entropy(&self.forward(&self.params, x).logits, y)
    }

    fn loss_and_grad(&self, x: ArrayView2<f64>, y: &[usize], grad: &mut [f64]) -> f64 {
        let p = &self.params;
        let [w1, b1, w2, b2, w3, b3] = &self.blocks;
        let f = self.forward(p, x);
        let loss = cross_entropy(&f.logits, y);
        let d3 = cross_entropy_grad(&softmax_rows(&f.logits), y);
        w3.put_mat(grad, &f.a2.t().dot(&d3));
        b3.put_vec(grad, &d3.sum_axis(Axis(0)));
        let mut d2 = d3.dot(&w3.mat(p).t());
        d2.zip_mut_with(&f.z2, |d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        w2.put_mat(grad, &f.a1.t().dot(&d2));
        b2.put_vec(grad, &d2.sum_axis(Axis(0)));
        let mut d1 = d2.dot(&w2.mat(p).t());
        d1.zip_mut_with(&f.z1, |d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        w1.put_mat(grad, &x.t().dot(&d1));
        b1.put_vec(grad, &d1.sum_axis(Axis(0)));
        loss
    }
}
