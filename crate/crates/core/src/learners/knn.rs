//! k-nearest-neighbour majority vote.

use ndarray::{Array2, ArrayView1, ArrayView2};

#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    pub(crate) k_neighbors: usize,
    pub(crate) n_classes: usize,
    pub(crate) x: Array2<f64>,
    pub(crate) y: Vec<usize>,
}

impl Knn {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, k_neighbors: usize) -> Self {
        Self {
            k_neighbors,
            n_classes,
            x: x.as_standard_layout().into_owned(),
            y: y.to_vec(),
        }
    }

    /// Class index of the majority among the nearest neighbours.
    ///
    /// Equal distances keep the smaller training index; tied votes go to the
    /// smallest class.
    pub fn predict_row(&self, q: ArrayView1<f64>) -> usize {
        let k = self.k_neighbors.min(self.y.len());
        // Sorted by (distance, index); only strictly closer points displace.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let q = q.to_vec();
        let d = q.len().max(1);
        let flat = self.x.as_slice().expect("standard layout");
        for (idx, row) in flat.chunks_exact(d).enumerate() {
            let d: f64 = row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, idx));
            best.truncate(k);
        }
        let mut votes = vec![0usize; self.n_classes];
        for &(_, idx) in &best {
            votes[self.y[idx]] += 1;
        }
        let top = *votes.iter().max().unwrap();
        votes.iter().position(|&v| v == top).unwrap()
    }
}
