use nalgebra::DMatrix;
use proptest::prelude::*;

use bsvm::decomposition::{extend_samples, initial_solution, Cut};
use bsvm::qp_solver::{kkt_violation_report, solve_c_svm_dual, solve_nu_svm_dual, SolverSettings};
use bsvm::{
    class_weights, fit, fit_hard_margin, fraction_borderline, gram_matrix, ClassWeights, Dataset, Distance,
    KernelSpec, Matrix, Scaler, TrainConfig,
};

fn kernel_strategy() -> impl Strategy<Value = KernelSpec<f64>> {
    prop_oneof![
        Just(KernelSpec::linear()),
        (0.05f64..3.0).prop_map(KernelSpec::rbf),
        (0.1f64..2.0, 1u32..4, 0.0f64..2.0).prop_map(|(g, d, c)| KernelSpec::polynomial(g, d, c)),
    ]
}

/// Rows with at least two samples of each class.
fn dataset_strategy(max_n: usize, dim: usize, spread: f64) -> impl Strategy<Value = Dataset<f64>> {
    (4..=max_n).prop_flat_map(move |n| {
        (
            proptest::collection::vec(proptest::collection::vec(-spread..spread, dim), n),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(rows, flags)| {
                let mut labels: Vec<i8> = flags.iter().map(|&f| if f { 1 } else { -1 }).collect();
                labels[0] = 1;
                labels[1] = 1;
                labels[2] = -1;
                labels[3] = -1;
                Dataset::from_rows(&rows, labels).unwrap()
            })
    })
}

/// Two clusters far apart along the first axis, hence linearly separable.
fn separable_strategy(max_n: usize) -> impl Strategy<Value = Dataset<f64>> {
    dataset_strategy(max_n, 2, 1.0).prop_map(|d| {
        let mut x = d.features.clone();
        for i in 0..d.len() {
            x.row_mut(i)[0] += 3.0 * f64::from(d.labels[i]);
        }
        d.with_features(x)
    })
}

fn dual_problem(data: &Dataset<f64>, kernel: &KernelSpec<f64>) -> Matrix<f64> {
    gram_matrix(kernel, &data.features).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_positive_semidefinite(data in dataset_strategy(20, 3, 3.0), kernel in kernel_strategy()) {
        let g = dual_problem(&data, &kernel);
        let n = data.len();
        let m = DMatrix::from_fn(n, n, |i, j| g.get(i, j));
        let scale = m.amax().max(1.0);
        let eig = m.symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-8 * scale), "{:?}", eig.eigenvalues);
    }

    #[test]
    fn gram_matches_pairwise_evaluation(data in dataset_strategy(12, 2, 3.0), kernel in kernel_strategy()) {
        let g = dual_problem(&data, &kernel);
        for i in 0..data.len() {
            for j in 0..data.len() {
                let k = kernel.eval(data.features.row(i), data.features.row(j)).unwrap();
                prop_assert_eq!(g.get(i, j), k);
            }
        }
    }

    #[test]
    fn smo_iterates_stay_feasible_and_descend(data in dataset_strategy(10, 2, 2.0), c in 0.1f64..10.0) {
        let g = dual_problem(&data, &KernelSpec::rbf(0.5));
        let penalties = vec![c; data.len()];
        let mut previous = f64::INFINITY;
        // the solver is deterministic, so capping the iteration count
        // exposes every intermediate iterate
        for cap in 1..=25 {
            let settings = SolverSettings { max_iterations: cap, ..SolverSettings::verification() };
            let sol = solve_c_svm_dual(&g, &data.labels, &penalties, &settings).unwrap();
            let balance: f64 = sol.alphas.iter().zip(&data.labels).map(|(a, &y)| a * f64::from(y)).sum();
            prop_assert!(balance.abs() <= 1e-8);
            prop_assert!(sol.alphas.iter().all(|&a| (0.0..=c).contains(&a)));
            prop_assert!(sol.objective <= previous + 1e-12);
            previous = sol.objective;
            if sol.converged {
                break;
            }
        }
    }

    #[test]
    fn smo_is_deterministic_and_meets_kkt(data in dataset_strategy(15, 2, 2.0), c in 0.1f64..10.0) {
        let g = dual_problem(&data, &KernelSpec::rbf(1.0));
        let penalties = vec![c; data.len()];
        let settings = SolverSettings::verification();
        let a = solve_c_svm_dual(&g, &data.labels, &penalties, &settings).unwrap();
        let b = solve_c_svm_dual(&g, &data.labels, &penalties, &settings).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.converged);
        prop_assert!(kkt_violation_report(&g, &data.labels, &penalties, &a) <= 1e-6);
    }

    #[test]
    fn nu_bounds_margin_errors_and_support(data in separable_strategy(12), nu in 0.1f64..0.6) {
        let g = dual_problem(&data, &KernelSpec::linear());
        let Ok(sol) = solve_nu_svm_dual(&g, &data.labels, nu, &SolverSettings::verification()) else {
            // ν above the feasibility bound of this draw
            return Ok(());
        };
        let n = data.len() as f64;
        let upper = 1.0 / n;
        let at_bound = sol.alphas.iter().filter(|&&a| a >= upper * (1.0 - 1e-6)).count() as f64;
        let support = sol.alphas.iter().filter(|&&a| a > upper * 1e-8).count() as f64;
        prop_assert!(at_bound / n <= nu + 1e-9);
        prop_assert!(support / n >= nu - 1e-9);
    }

    #[test]
    fn hard_margin_support_vectors_sit_on_the_margin(data in separable_strategy(20)) {
        let cfg = TrainConfig::proposed(1.0, KernelSpec::linear());
        let model = fit_hard_margin(&data, &cfg).unwrap();
        let margins: Vec<f64> = model
            .support_vectors
            .rows_iter()
            .zip(&model.sv_coefficients)
            .map(|(sv, c)| c.signum() * model.decision_function(sv).unwrap())
            .collect();
        let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((1.0 - 1e-4..=1.0 + 1e-4).contains(&min), "min margin {}", min);
        // each free support vector on its own implies the same bias
        for (sv, c) in model.support_vectors.rows_iter().zip(&model.sv_coefficients) {
            let without_bias = model.decision_function(sv).unwrap() - model.bias;
            prop_assert!((c.signum() - without_bias - model.bias).abs() <= 1e-5);
        }
    }

    #[test]
    fn permuting_rows_keeps_decisions(data in dataset_strategy(20, 2, 2.0), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted = data.subset(&order);
        let cfg = TrainConfig::soft_margin(1.0, KernelSpec::rbf(0.7))
            .with_solver(SolverSettings::verification().with_tolerance(1e-9));
        let a = fit(&data, &cfg).unwrap().decision_values(&data.features).unwrap();
        let b = fit(&permuted, &cfg).unwrap().decision_values(&data.features).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn unit_weights_reproduce_soft_margin(data in dataset_strategy(20, 2, 2.0), c in 0.1f64..10.0) {
        let kernel = KernelSpec::rbf(0.5);
        let soft = fit(&data, &TrainConfig::soft_margin(c, kernel)).unwrap();
        let weighted = fit(&data, &TrainConfig::weighted(c, ClassWeights::uniform(), kernel)).unwrap();
        prop_assert_eq!(soft.sv_coefficients, weighted.sv_coefficients);
        prop_assert_eq!(soft.bias, weighted.bias);
        prop_assert_eq!(soft.support_vectors, weighted.support_vectors);
    }

    #[test]
    fn decomposition_keeps_its_invariants(data in dataset_strategy(30, 2, 2.0), c in 0.1f64..10.0, gamma in 0.1f64..2.0) {
        let cfg = TrainConfig::proposed(c, KernelSpec::rbf(gamma));
        let n = data.len();
        let mut state = initial_solution(&data, &cfg).unwrap();
        prop_assert!(state.is_partition(n));
        let mut rounds = 0;
        while !state.candidates.is_empty() && !state.break_flag {
            let before = state.active.clone();
            extend_samples(&data, &mut state, &cfg).unwrap();
            rounds += 1;
            prop_assert!(rounds <= n);
            prop_assert!(state.is_partition(n));
            prop_assert!(before.iter().all(|i| state.active.contains(i)));
            if state.trace.last().unwrap().cut == Cut::Optimality {
                let model = state.model().unwrap();
                for &i in &state.active {
                    let m = f64::from(data.labels[i]) * model.decision_function(data.features.row(i)).unwrap();
                    prop_assert!(m >= 1.0 - 1e-6);
                }
            }
        }
    }

    #[test]
    fn n1_is_a_fraction(data in dataset_strategy(25, 3, 5.0)) {
        let r = fraction_borderline(&data, Distance::Euclidean);
        prop_assert!((0.0..=1.0).contains(&r.n1));
        prop_assert_eq!(r.n1 == 0.0, r.cross_class_edges == 0);
        prop_assert_eq!(r.mst_edge_count, data.len() - 1);
    }

    #[test]
    fn balanced_weights_sum_to_n(n_pos in 1usize..200, n_neg in 1usize..200) {
        let rows: Vec<[f64; 1]> = (0..n_pos + n_neg).map(|i| [i as f64]).collect();
        let labels = (0..n_pos + n_neg).map(|i| if i < n_pos { 1 } else { -1 }).collect();
        let data = Dataset::from_rows(&rows, labels).unwrap();
        let w = class_weights(&data).unwrap();
        let total = n_pos as f64 * w.positive + n_neg as f64 * w.negative;
        prop_assert!((total - (n_pos + n_neg) as f64).abs() <= 1e-9 * total);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std(
        rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 3..40),
    ) {
        let x = Matrix::from_rows(&rows).unwrap();
        let scaler = Scaler::fit(&x);
        let z = scaler.transform(&x).unwrap();
        let n = z.nrows() as f64;
        for j in 0..z.ncols() {
            if scaler.std[j].is_none() {
                continue;
            }
            let col: Vec<f64> = (0..z.nrows()).map(|i| z.get(i, j)).collect();
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((sd - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let rows: Vec<[f64; 2]> = (0..30)
        .map(|i| {
            let t = i as f64;
            [(t * 0.7).sin() + if i < 15 { 1.5 } else { -1.5 }, (t * 1.3).cos()]
        })
        .collect();
    let labels: Vec<i8> = (0..30).map(|i| if i < 15 { 1 } else { -1 }).collect();
    let d64 = Dataset::from_rows(&rows, labels.clone()).unwrap();
    let rows32: Vec<[f32; 2]> = rows.iter().map(|r| [r[0] as f32, r[1] as f32]).collect();
    let d32 = Dataset::<f32>::from_rows(&rows32, labels).unwrap();
    let m64 = fit(&d64, &TrainConfig::proposed(1.0, KernelSpec::rbf(0.5))).unwrap();
    let m32 = fit(&d32, &TrainConfig::proposed(1.0f32, KernelSpec::rbf(0.5f32))).unwrap();
    assert_eq!(m64.predict(&d64.features).unwrap(), m32.predict(&d32.features).unwrap());
    let v64 = m64.decision_values(&d64.features).unwrap();
    let v32 = m32.decision_values(&d32.features).unwrap();
    for (a, b) in v64.iter().zip(&v32) {
        assert!((a - f64::from(*b)).abs() <= 1e-3, "{a} vs {b}");
    }
}
