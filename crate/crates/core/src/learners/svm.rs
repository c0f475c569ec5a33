//! One-vs-rest RBF support vector machine trained with SMO.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    pub gamma: f64,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Svm {
    pub(crate) gamma: f64,
    /// Training rows with a nonzero multiplier in at least one binary problem.
    pub(crate) support: Array2<f64>,
    /// `alpha_i * y_i` per class (rows) and support vector (columns).
    pub(crate) coef: Array2<f64>,
    pub(crate) bias: Vec<f64>,
    /// Classes seen in training; the others are never predicted.
    pub(crate) present: Vec<bool>,
    /// Whether each binary problem met the KKT tolerance within the pass budget.
    pub(crate) converged: Vec<bool>,
}

/// `exp(-gamma * |a - b|^2)` for every pair of rows.
pub fn rbf_matrix(a: ArrayView2<f64>, b: ArrayView2<f64>, gamma: f64) -> Array2<f64> {
    let na: Array1<f64> = a.axis_iter(Axis(0)).map(|r| r.dot(&r)).collect();
    let nb: Array1<f64> = b.axis_iter(Axis(0)).map(|r| r.dot(&r)).collect();
    let mut k = a.dot(&b.t());
    for ((i, j), v) in k.indexed_iter_mut() {
        let d2 = (na[i] + nb[j] - 2.0 * *v).max(0.0);
        *v = (-gamma * d2).exp();
    }
    k
}

/// Result of one binary problem.
#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    pub converged: bool,
}

/// Sweeps over the non-bound multipliers allowed between two full sweeps.
const MAX_INNER_SWEEPS: usize = 1000;

/// SMO on a precomputed kernel with labels `y ∈ {-1, +1}`.
///
/// Platt's outer loop: a full sweep over every multiplier, then repeated
/// sweeps over the non-bound ones until they stop changing, then another full
/// sweep. A violator is paired with the index maximising `|E_i - E_j|`,
/// falling back to a scan of the others. `max_passes` bounds the number of
/// full sweeps; the problem has converged once a full sweep changes nothing.
pub fn smo(kmat: &Array2<f64>, y: &[f64], cfg: &SmoConfig) -> BinarySolution {
    let n = y.len();
    let mut s = Smo {
        k: kmat,
        y,
        c: cfg.c,
        alpha: vec![0.0; n],
        b: 0.0,
        err: y.iter().map(|&v| -v).collect(),
        argmin: 0,
        argmax: 0,
    };
    s.refresh_extremes();
    let violates = |s: &Smo, i: usize| {
        let r = s.err[i] * y[i];
        (r < -cfg.tol && s.alpha[i] < cfg.c) || (r > cfg.tol && s.alpha[i] > 0.0)
    };
    let mut converged = false;
    for _pass in 0..cfg.max_passes {
        let mut changed = 0;
        for i in 0..n {
            if violates(&s, i) && s.examine(i) {
                changed += 1;
            }
        }
        if changed == 0 {
            converged = true;
            break;
        }
        for _ in 0..MAX_INNER_SWEEPS {
            let mut inner = 0;
            for i in 0..n {
                let a = s.alpha[i];
                if a > 0.0 && a < cfg.c && violates(&s, i) && s.examine(i) {
                    inner += 1;
                }
            }
            if inner == 0 {
                break;
            }
        }
    }
    BinarySolution {
        alpha: s.alpha,
        b: s.b,
        converged,
    }
}

struct Smo<'a> {
    k: &'a Array2<f64>,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    b: f64,
    /// `f(x_i) - y_i`.
    err: Vec<f64>,
    argmin: usize,
    argmax: usize,
}

impl Smo<'_> {
    fn refresh_extremes(&mut self) {
        let (mut lo, mut hi) = (0, 0);
        for (i, &e) in self.err.iter().enumerate() {
            if e < self.err[lo] {
                lo = i;
            }
            if e > self.err[hi] {
                hi = i;
            }
        }
        self.argmin = lo;
        self.argmax = hi;
    }

    fn examine(&mut self, i: usize) -> bool {
        let j = if self.err[i] > 0.0 { self.argmin } else { self.argmax };
        if self.take_step(i, j) {
            return true;
        }
        let n = self.y.len();
        // Rotating scan starting next to i keeps the search deterministic.
        (1..n).map(|d| (i + d) % n).any(|j| self.take_step(i, j))
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (ei, ej) = (self.err[i], self.err[j]);
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let (kii, kjj, kij) = (self.k[[i, i]], self.k[[j, j]], self.k[[i, j]]);
        let eta = 2.0 * kij - kii - kjj;
        if eta >= -1e-12 {
            return false;
        }
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < 1e-5 * (aj_new + aj + 1e-5) {
            return false;
        }
        let mut ai_new = ai + yi * yj * (aj - aj_new);
        // Snap rounding residue back onto the box.
        if ai_new < 1e-12 * self.c {
            ai_new = 0.0;
        } else if ai_new > self.c * (1.0 - 1e-12) {
            ai_new = self.c;
        }
        let (di, dj) = (yi * (ai_new - ai), yj * (aj_new - aj));
        let b1 = self.b - ei - di * kii - dj * kij;
        let b2 = self.b - ej - di * kij - dj * kjj;
        let b_new = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.b;
        let (ki, kj) = (self.k.row(i), self.k.row(j));
        let (mut lo_i, mut hi_i) = (0, 0);
        for (t, e) in self.err.iter_mut().enumerate() {
            *e += di * ki[t] + dj * kj[t] + db;
        }
        for (t, &e) in self.err.iter().enumerate() {
            if e < self.err[lo_i] {
                lo_i = t;
            }
            if e > self.err[hi_i] {
                hi_i = t;
            }
        }
        self.argmin = lo_i;
        self.argmax = hi_i;
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        self.b = b_new;
        true
    }
}

impl Svm {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, cfg: &SmoConfig) -> Self {
        let kmat = rbf_matrix(x, x, cfg.gamma);
        let mut present = vec![false; n_classes];
        for &c in y {
            present[c] = true;
        }
        let mut solutions = Vec::with_capacity(n_classes);
        for (class, &seen) in present.iter().enumerate() {
            if !seen {
                solutions.push(None);
                continue;
            }
            let yb: Vec<f64> = y.iter().map(|&c| if c == class { 1.0 } else { -1.0 }).collect();
            solutions.push(Some(smo(&kmat, &yb, cfg)));
        }
        let sv: Vec<usize> = (0..y.len())
            .filter(|&i| solutions.iter().flatten().any(|s| s.alpha[i] > 0.0))
            .collect();
        let support = x.select(Axis(0), &sv);
        let mut coef = Array2::zeros((n_classes, sv.len()));
        let mut bias = vec![0.0; n_classes];
        let mut converged = vec![true; n_classes];
        for (class, sol) in solutions.iter().enumerate() {
            if let Some(sol) = sol {
                for (col, &i) in sv.iter().enumerate() {
                    let yi = if y[i] == class { 1.0 } else { -1.0 };
                    coef[[class, col]] = sol.alpha[i] * yi;
                }
                bias[class] = sol.b;
                converged[class] = sol.converged;
            }
        }
        Self {
            gamma: cfg.gamma,
            support,
            coef,
            bias,
            present,
            converged,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// Decision value per class for each row of `x`.
    pub fn decision_values(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let kx = rbf_matrix(x, self.support.view(), self.gamma);
        kx.dot(&self.coef.t()) + ArrayView1::from(&self.bias)
    }

    /// Argmax over the classes seen in training; ties go to the smallest class.
    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let dv = self.decision_values(x);
        dv.axis_iter(Axis(0))
            .map(|row| {
                let mut best = usize::MAX;
                for (c, &v) in row.iter().enumerate() {
                    if self.present[c] && (best == usize::MAX || v > row[best]) {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}
