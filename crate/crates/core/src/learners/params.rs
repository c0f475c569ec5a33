//! Flat parameter buffers shared by the MLP and the LSTM.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

/// A named matrix (or vector, with `rows == 1`) inside a flat buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub name: &'static str,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub kind: BlockKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Glorot-uniform initialised with the given fan-in/fan-out.
    Weight { fan_in: usize, fan_out: usize },
    /// Zero initialised weights (peepholes).
    ZeroWeight,
    Bias,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn mat<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &p[self.range()]).unwrap()
    }

    pub fn vec<'a>(&self, p: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&p[self.range()])
    }

    pub fn put_mat(&self, out: &mut [f64], m: &Array2<f64>) {
        debug_assert_eq!(m.dim(), (self.rows, self.cols));
        for (dst, src) in out[self.range()].iter_mut().zip(m.iter()) {
            *dst = *src;
        }
    }

    pub fn put_vec(&self, out: &mut [f64], v: &Array1<f64>) {
        out[self.range()].copy_from_slice(v.as_slice().unwrap());
    }

    pub fn is_bias(&self) -> bool {
        self.kind == BlockKind::Bias
    }
}

/// Lays blocks out back to back.
pub struct LayoutBuilder {
    blocks: Vec<Block>,
    next: usize,
}

impl LayoutBuilder {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            next: 0,
        }
    }

    pub fn add(&mut self, name: &'static str, rows: usize, cols: usize, kind: BlockKind) -> Block {
        let b = Block {
            name,
            offset: self.next,
            rows,
            cols,
            kind,
        };
        self.next += b.len();
        self.blocks.push(b);
        b
    }

    pub fn total(&self) -> usize {
        self.next
    }
}

/// Initialises `params` in place: Glorot-uniform weights, zero elsewhere.
pub fn init_params<R: Rng + ?Sized>(blocks: &[Block], params: &mut [f64], rng: &mut R) {
    for b in blocks {
        match b.kind {
            BlockKind::Weight { fan_in, fan_out } => {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for x in &mut params[b.range()] {
                    *x = rng.random_range(-limit..limit);
                }
            }
            BlockKind::ZeroWeight | BlockKind::Bias => params[b.range()].fill(0.0),
        }
    }
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|x| x / sum);
    }
    out
}

/// Mean cross-entropy of `logits` against class indices, via log-sum-exp.
pub fn cross_entropy(logits: &Array2<f64>, y: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &c) in logits.axis_iter(Axis(0)).zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        total += lse - row[c];
    }
    total / y.len() as f64
}

/// Gradient of the mean cross-entropy with respect to the logits.
pub fn cross_entropy_grad(probs: &Array2<f64>, y: &[usize]) -> Array2<f64> {
    let mut d = probs.clone();
    for (mut row, &c) in d.axis_iter_mut(Axis(0)).zip(y) {
        row[c] -= 1.0;
    }
    d /= y.len() as f64;
    d
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
