//! Single-layer peephole LSTM reading the feature matrix column by column,
//! with a softmax head on the final hidden state.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::params::{cross_entropy, cross_entropy_grad, init_params, sigmoid, softmax_rows, Block, BlockKind, LayoutBuilder};
use super::Differentiable;

/// Inputs per time step: one column of the feature matrix.
pub const STEP_INPUTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub(crate) steps: usize,
    pub(crate) hidden: usize,
    pub(crate) n_out: usize,
    pub(crate) params: Vec<f64>,
    blocks: [Block; 8],
}

/// Index of each block in `Lstm::blocks`.
const WX: usize = 0;
const WH: usize = 1;
const B: usize = 2;
const PI: usize = 3;
const PF: usize = 4;
const PO: usize = 5;
const WY: usize = 6;
const BY: usize = 7;

struct Step {
    c_prev: Array2<f64>,
    h_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    tanh_c: Array2<f64>,
}

impl Lstm {
    pub fn zeros(steps: usize, hidden: usize, n_out: usize) -> Self {
        let mut lb = LayoutBuilder::new();
        let n = hidden;
        let blocks = [
            // Gate columns are laid out as [input | forget | candidate | output].
            lb.add("w_x", STEP_INPUTS, 4 * n, BlockKind::Weight { fan_in: STEP_INPUTS, fan_out: n }),
            lb.add("w_h", n, 4 * n, BlockKind::Weight { fan_in: n, fan_out: n }),
            lb.add("b", 1, 4 * n, BlockKind::Bias),
            lb.add("p_i", 1, n, BlockKind::ZeroWeight),
            lb.add("p_f", 1, n, BlockKind::ZeroWeight),
            lb.add("p_o", 1, n, BlockKind::ZeroWeight),
            lb.add("w_y", n, n_out, BlockKind::Weight { fan_in: n, fan_out: n_out }),
            lb.add("b_y", 1, n_out, BlockKind::Bias),
        ];
        Self {
            steps,
            hidden,
            n_out,
            params: vec![0.0; lb.total()],
            blocks,
        }
    }

    pub fn new<R: Rng + ?Sized>(steps: usize, hidden: usize, n_out: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(steps, hidden, n_out);
        init_params(&m.blocks, &mut m.params, rng);
        m
    }

    pub(crate) fn from_params(steps: usize, hidden: usize, n_out: usize, params: Vec<f64>) -> Option<Self> {
        let mut m = Self::zeros(steps, hidden, n_out);
        if params.len() != m.params.len() {
            return None;
        }
        m.params = params;
        Some(m)
    }

    /// Number of weights, biases excluded: `4n² + 4·n_in·n + n·n_out + 3n`.
    pub fn weight_count(&self) -> usize {
        self.blocks.iter().filter(|b| !b.is_bias()).map(Block::len).sum()
    }

    /// Time step `t` of a flat, column-major batch: rows `4t..4t+4` of each sample.
    fn step_input(&self, x: ArrayView2<f64>, t: usize) -> Array2<f64> {
        x.slice(s![.., STEP_INPUTS * t..STEP_INPUTS * (t + 1)]).to_owned()
    }

    fn forward(&self, x: ArrayView2<f64>, keep: bool) -> (Array2<f64>, Vec<Step>, Array2<f64>) {
        let p = &self.params;
        let bl = &self.blocks;
        let n = self.hidden;
        let rows = x.nrows();
        let mut h = Array2::zeros((rows, n));
        let mut c = Array2::<f64>::zeros((rows, n));
        let (pi, pf, po) = (bl[PI].vec(p), bl[PF].vec(p), bl[PO].vec(p));
        let mut cache = Vec::new();
        for t in 0..self.steps {
            let a = self.step_input(x, t).dot(&bl[WX].mat(p)) + h.dot(&bl[WH].mat(p)) + bl[B].vec(p);
            let i = (&a.slice(s![.., 0..n]) + &(&c * &pi)).mapv(sigmoid);
            let f = (&a.slice(s![.., n..2 * n]) + &(&c * &pf)).mapv(sigmoid);
            let g = a.slice(s![.., 2 * n..3 * n]).mapv(f64::tanh);
            let c_new = &f * &c + &i * &g;
            let o = (&a.slice(s![.., 3 * n..4 * n]) + &(&c_new * &po)).mapv(sigmoid);
            let tanh_c = c_new.mapv(f64::tanh);
            let h_new = &o * &tanh_c;
            if keep {
                cache.push(Step {
                    c_prev: c,
                    h_prev: h,
                    i,
                    f,
                    g,
                    o,
                    tanh_c,
                });
            }
            c = c_new;
            h = h_new;
        }
        let logits = h.dot(&bl[WY].mat(p)) + bl[BY].vec(p);
        (logits, cache, h)
    }

    /// Class probabilities for a flat batch (one sample per row, column-major features).
    pub fn probabilities(&self, x: ArrayView2<f64>) -> Array2<f64> {
        softmax_rows(&self.forward(x, false).0)
    }

    /// Final hidden state for each sample.
    pub fn final_hidden(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x, false).2
    }
}

impl Differentiable for Lstm {
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
        cross_entropy(&self.forward(x, false).0, y)
    }

    fn loss_and_grad(&self, x: ArrayView2<f64>, y: &[usize], grad: &mut [f64]) -> f64 {
        let p = &self.params;
        let bl = &self.blocks;
        let n = self.hidden;
        let rows = x.nrows();
        let (logits, cache, h_last) = self.forward(x, true);
        let loss = cross_entropy(&logits, y);
        let dlogits = cross_entropy_grad(&softmax_rows(&logits), y);
        bl[WY].put_mat(grad, &h_last.t().dot(&dlogits));
        bl[BY].put_vec(grad, &dlogits.sum_axis(Axis(0)));

        let (pi, pf, po) = (bl[PI].vec(p), bl[PF].vec(p), bl[PO].vec(p));
        let w_h = bl[WH].mat(p);
        let mut dwx = Array2::zeros((STEP_INPUTS, 4 * n));
        let mut dwh = Array2::zeros((n, 4 * n));
        let mut db = Array1::zeros(4 * n);
        let mut dpi = Array1::zeros(n);
        let mut dpf = Array1::zeros(n);
        let mut dpo = Array1::zeros(n);
        let mut dh = dlogits.dot(&bl[WY].mat(p).t());
        let mut dc_next = Array2::<f64>::zeros((rows, n));
        let mut da = Array2::zeros((rows, 4 * n));
        for t in (0..self.steps).rev() {
            let st = &cache[t];
            let c = &st.f * &st.c_prev + &st.i * &st.g;
            // Output gate pre-activation.
            let dzo = &dh * &st.tanh_c * &st.o * &st.o.mapv(|v| 1.0 - v);
            // Total gradient into c_t: through h_t, the output peephole and c_{t+1}.
            let dc = &dc_next + &(&dh * &st.o * &st.tanh_c.mapv(|v| 1.0 - v * v)) + &(&dzo * &po);
            let dzi = &dc * &st.g * &st.i * &st.i.mapv(|v| 1.0 - v);
            let dzf = &dc * &st.c_prev * &st.f * &st.f.mapv(|v| 1.0 - v);
            let dzg = &dc * &st.i * &st.g.mapv(|v| 1.0 - v * v);
            dpi += &(&dzi * &st.c_prev).sum_axis(Axis(0));
            dpf += &(&dzf * &st.c_prev).sum_axis(Axis(0));
            dpo += &(&dzo * &c).sum_axis(Axis(0));
            da.slice_mut(s![.., 0..n]).assign(&dzi);
            da.slice_mut(s![.., n..2 * n]).assign(&dzf);
            da.slice_mut(s![.., 2 * n..3 * n]).assign(&dzg);
            da.slice_mut(s![.., 3 * n..4 * n]).assign(&dzo);
            dwx += &self.step_input(x, t).t().dot(&da);
            dwh += &st.h_prev.t().dot(&da);
            db += &da.sum_axis(Axis(0));
            dh = da.dot(&w_h.t());
            dc_next = &dc * &st.f + &(&dzi * &pi) + &(&dzf * &pf);
        }
        bl[WX].put_mat(grad, &dwx);
        bl[WH].put_mat(grad, &dwh);
        bl[B].put_vec(grad, &db);
        bl[PI].put_vec(grad, &dpi);
        bl[PF].put_vec(grad, &dpf);
        bl[PO].put_vec(grad, &dpo);
        loss
    }
}
