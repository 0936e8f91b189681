use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

impl KnnParams {
    pub fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("KNN needs k ≥ 1".into()));
        }
        Ok(())
    }
}

/// Majority vote among the `k` Euclidean nearest training rows.
///
/// Equal distances prefer the lower training row; a tied vote goes to the
/// class with the smaller summed distance, then to the lower class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbors {
    pub k: usize,
    pub train_x: Array2<f64>,
    pub train_y: Vec<usize>,
    pub class_count: usize,
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl NearestNeighbors {
    pub fn fit(params: &KnnParams, x: ArrayView2<'_, f64>, y: &[usize], class_count: usize) -> Result<Self> {
        params.check()?;
        Ok(Self {
            k: params.k,
            train_x: x.to_owned(),
            train_y: y.to_vec(),
            class_count,
        })
    }

    pub fn n_features(&self) -> usize {
        self.train_x.ncols()
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, query: ArrayView1<'_, f64>) -> Vec<(usize, f64)> {
        let mut dist: Vec<(f64, usize)> = self
            .train_x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| (squared_distance(row, query), i))
            .collect();
        let k = self.k.min(dist.len());
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_key);
            dist.truncate(k);
        }
        dist.sort_by(by_key);
        dist.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn predict_one(&self, query: ArrayView1<'_, f64>) -> usize {
        let mut votes = vec![0usize; self.class_count];
        let mut dist_sum = vec![0.0f64; self.class_count];
        for (i, d) in self.neighbors(query) {
            let c = self.train_y[i];
            votes[c] += 1;
            dist_sum[c] += d;
        }
        let mut best = 0;
        for c in 1..self.class_count {
            let better = votes[c] > votes[best]
                || (votes[c] == votes[best] && votes[c] > 0 && dist_sum[c] < dist_sum[best]);
            if better {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows().into_iter().map(|q| self.predict_one(q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_nn_recovers_training_labels() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let y = [0, 1, 2, 1];
        let m = NearestNeighbors::fit(&KnnParams { k: 1 }, x.view(), &y, 3).unwrap();
        assert_eq!(m.predict(x.view()), y);
    }

    #[test]
    fn three_against_two() {
        // Distances from the origin, sorted: A 1, B 1.5, A 2, B 2.5, A 3, (B 10 excluded).
        let x = array![[1.0, 0.0], [0.0, 1.5], [-2.0, 0.0], [0.0, -2.5], [3.0, 0.0], [10.0, 0.0]];
        let y = [0, 1, 0, 1, 0, 1];
        let m = NearestNeighbors::fit(&KnnParams::default(), x.view(), &y, 2).unwrap();
        assert_eq!(m.predict(array![[0.0, 0.0]].view()), vec![0]);
    }

    #[test]
    fn tied_vote_goes_to_closer_class() {
        // k = 4: two of each class, class 1 is closer in total.
        let x = array![[3.0], [0.5], [2.0], [1.0]];
        let y = [0, 1, 0, 1];
        let m = NearestNeighbors::fit(&KnnParams { k: 4 }, x.view(), &y, 2).unwrap();
        assert_eq!(m.predict(array![[0.0]].view()), vec![1]);
        // Exactly symmetric: lower class index wins.
        let x = array![[-1.0], [1.0]];
        let m = NearestNeighbors::fit(&KnnParams { k: 2 }, x.view(), &[1, 0], 2).unwrap();
        assert_eq!(m.predict(array![[0.0]].view()), vec![0]);
    }

    #[test]
    fn equal_distances_prefer_lower_row() {
        let x = array![[1.0], [-1.0], [1.0]];
        let m = NearestNeighbors::fit(&KnnParams { k: 1 }, x.view(), &[2, 1, 0], 3).unwrap();
        assert_eq!(m.neighbors(array![0.0].view())[0].0, 0);
        assert_eq!(m.predict(array![[0.0]].view()), vec![2]);
    }
}
