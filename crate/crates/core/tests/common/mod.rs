#![allow(dead_code)]

use anura_core::{DataForm, Dataset};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

/// Relative class sizes, loosely shaped like a long-tailed species census.
pub const CLASS_WEIGHTS: [f64; 10] = [48.0, 16.0, 9.0, 7.5, 6.5, 4.5, 3.8, 2.0, 1.6, 1.1];

/// Synthetic 10-class, 22-feature data: Gaussian clusters sharing a
/// correlated noise structure, with a small fraction of heavy-tailed rows.
pub fn synthetic(n: usize, seed: u64) -> Dataset {
    synthetic_with(n, 22, 10, 1.6, seed)
}

pub fn synthetic_with(n: usize, d: usize, classes: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = &CLASS_WEIGHTS[..classes];
    let total: f64 = weights.iter().sum();
    let mut labels = Vec::with_capacity(n);
    for (c, w) in weights.iter().enumerate() {
        let count = ((w / total) * n as f64).round().max(3.0) as usize;
        labels.extend(std::iter::repeat(c).take(count));
    }
    labels.truncate(n);
    while labels.len() < n {
        labels.push(0);
    }
    // Interleave classes so row order is not sorted by label.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();

    let means = Array2::from_shape_fn((classes, d), |_| {
        spread * { let v: f64 = StandardNormal.sample(&mut rng); v }
    });
    let mix = Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            1.0
        } else {
            0.25 * { let v: f64 = StandardNormal.sample(&mut rng); v }
        }
    });
    let heavy = Normal::new(0.0, 6.0).unwrap();
    let mut x = Array2::<f64>::zeros((n, d));
    for (r, &c) in labels.iter().enumerate() {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for j in 0..d {
            let mut v = means[[c, j]];
            for (k, zk) in z.iter().enumerate() {
                v += 0.5 * mix[[j, k]] * zk;
            }
            x[[r, j]] = v;
        }
        if rng.random::<f64>() < 0.02 {
            let j = rng.random_range(0..d);
            x[[r, j]] += heavy.sample(&mut rng);
        }
    }
    let names = (1..=d).map(|i| format!("MFCCs_{i}")).collect();
    let label_names = (0..classes).map(|c| format!("Species{c}")).collect();
    Dataset::new(x, names, labels, label_names, DataForm::Raw).unwrap()
}
