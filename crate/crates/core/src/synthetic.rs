//! Seeded two-dimensional scenes for imbalance and label-noise experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Train/test pair drawn from one generator; `outlier` is the training-row
/// index of the planted mislabeled point, when there is one.
#[derive(Clone, Debug)]
pub struct Scene<F> {
    pub train: Dataset<F>,
    pub test: Dataset<F>,
    pub outlier: Option<usize>,
}

fn gaussian_points(rng: &mut ChaCha8Rng, center: [f64; 2], sd: f64, n: usize) -> Vec<[f64; 2]> {
    let noise = Normal::new(0.0, sd).expect("positive sd");
    (0..n)
        .map(|_| [center[0] + noise.sample(rng), center[1] + noise.sample(rng)])
        .collect()
}

fn to_dataset<F: Scalar>(rows: &[[f64; 2]], labels: Vec<i8>, id: &str) -> Dataset<F> {
    let data: Vec<F> = rows.iter().flat_map(|r| r.iter().map(|&v| F::lit(v))).collect();
    let features = Matrix::from_vec(rows.len(), 2, data).expect("two columns");
    let mut d = Dataset::new(features, labels).expect("finite");
    d.source_id = id.to_string();
    d.feature_names = vec!["x1".into(), "x2".into()];
    d
}

/// Imbalanced scene: a majority class (`−1`) and a minority class (`+1`)
/// with imbalance ratio 2, plus one majority-labelled point planted at the
/// minority centre.
///
/// `n_minority` minority samples are drawn for training (twice as many
/// majority samples); the test set is ten times larger and outlier-free.
pub fn imbalanced_with_outlier<F: Scalar>(seed: u64, n_minority: usize) -> Scene<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let majority_center = [0.0, 1.5];
    let minority_center = [1.5, -0.5];
    let sd = 0.8;
    let draw = |rng: &mut ChaCha8Rng, n_min: usize| {
        let mut rows = gaussian_points(rng, majority_center, sd, 2 * n_min);
        let mut labels = vec![-1i8; rows.len()];
        rows.extend(gaussian_points(rng, minority_center, sd, n_min));
        labels.resize(rows.len(), 1);
        (rows, labels)
    };
    let (mut rows, mut labels) = draw(&mut rng, n_minority);
    let outlier = rows.len();
    rows.push(minority_center);
    labels.push(-1);
    let (test_rows, test_labels) = draw(&mut rng, 10 * n_minority);
    Scene {
        train: to_dataset(&rows, labels, "imbalanced-outlier"),
        test: to_dataset(&test_rows, test_labels, "imbalanced-outlier-test"),
        outlier: Some(outlier),
    }
}

/// Noise scene: two overlapping balanced Gaussian classes whose training
/// labels are corrupted by flipping a fraction `flip` of each class; the
/// flipped samples are the ones farthest from the class boundary on the
/// wrong side, i.e. gross outliers. Test labels are clean.
pub fn overlapping_with_label_noise<F: Scalar>(seed: u64, n_per_class: usize, flip: f64) -> Scene<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos_center = [0.75, 0.75];
    let neg_center = [-0.75, -0.75];
    let sd = 1.0;
    let draw = |rng: &mut ChaCha8Rng, n: usize| {
        let mut rows = gaussian_points(rng, pos_center, sd, n);
        let mut labels = vec![1i8; n];
        rows.extend(gaussian_points(rng, neg_center, sd, n));
        labels.resize(2 * n, -1);
        (rows, labels)
    };
    let (rows, mut labels) = draw(&mut rng, n_per_class);
    // flip the most extreme points of each class
    let n_flip = (flip * n_per_class as f64).round() as usize;
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == class).collect();
        let depth = |i: usize| f64::from(class) * (rows[i][0] + rows[i][1]);
        idx.sort_by(|&a, &b| depth(b).partial_cmp(&depth(a)).unwrap().then(a.cmp(&b)));
        let pool = (2 * n_flip).min(idx.len());
        let mut chosen: Vec<usize> = idx[..pool].to_vec();
        // pick n_flip of the 2·n_flip deepest at random
        for k in 0..n_flip.min(pool) {
            let j = rng.random_range(k..pool);
            chosen.swap(k, j);
        }
        for &i in &chosen[..n_flip.min(pool)] {
            labels[i] = -class;
        }
    }
    let (test_rows, test_labels) = draw(&mut rng, 5 * n_per_class);
    Scene {
        train: to_dataset(&rows, labels, "overlap-noise"),
        test: to_dataset(&test_rows, test_labels, "overlap-noise-test"),
        outlier: None,
    }
}
