//! Model assembly: fit dispatch, decision function, prediction and
//! per-sample training diagnostics.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassWeights, Dataset};
use crate::decomposition;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, KernelSpec};
use crate::matrix::Matrix;
use crate::qp_solver::{solve_c_svm_dual, solve_hard_margin_dual, solve_nu_svm_dual, HardMarginOutcome, SolverSettings};
use crate::scalar::Scalar;

/// Multipliers at or below `SV_THRESHOLD · C_i` are not support vectors.
pub const SV_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SoftMargin,
    Weighted,
    NuSvc,
    Proposed,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::SoftMargin,
        Variant::Weighted,
        Variant::NuSvc,
        Variant::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::SoftMargin => "soft_margin",
            Variant::Weighted => "weighted",
            Variant::NuSvc => "nu_svc",
            Variant::Proposed => "proposed",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variant {s:?}")))
    }
}

/// Order in which candidates are tried by the master step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityOrder {
    /// Largest priority first.
    #[default]
    Descending,
    /// Smallest priority (closest to the boundary) first.
    Ascending,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TrainConfig<F> {
    pub variant: Variant,
    pub c: F,
    #[serde(default)]
    pub class_weights: Option<ClassWeights<F>>,
    #[serde(default)]
    pub nu: Option<F>,
    pub kernel: KernelSpec<F>,
    #[serde(default)]
    pub solver: SolverSettings<F>,
    /// Hard-margin subproblems use the box `multiplier · max(class weight)`.
    pub hard_margin_multiplier: F,
    /// KKT tolerance of hard-margin subproblem solves.
    pub hard_margin_tolerance: F,
    #[serde(default)]
    pub priority_order: PriorityOrder,
}

impl<F: Scalar> TrainConfig<F> {
    pub fn new(variant: Variant, kernel: KernelSpec<F>) -> Self {
        TrainConfig {
            variant,
            c: F::one(),
            class_weights: None,
            nu: None,
            kernel,
            solver: SolverSettings::training(),
            hard_margin_multiplier: F::lit(1e6),
            hard_margin_tolerance: F::lit(1e-7),
            priority_order: PriorityOrder::Descending,
        }
    }

    pub fn soft_margin(c: F, kernel: KernelSpec<F>) -> Self {
        Self::new(Variant::SoftMargin, kernel).with_c(c)
    }

    pub fn weighted(c: F, weights: ClassWeights<F>, kernel: KernelSpec<F>) -> Self {
        Self::new(Variant::Weighted, kernel).with_c(c).with_weights(weights)
    }

    pub fn nu_svc(nu: F, kernel: KernelSpec<F>) -> Self {
        let mut cfg = Self::new(Variant::NuSvc, kernel);
        cfg.nu = Some(nu);
        cfg
    }

    pub fn proposed(c: F, kernel: KernelSpec<F>) -> Self {
        Self::new(Variant::Proposed, kernel).with_c(c)
    }

    pub fn with_c(mut self, c: F) -> Self {
        self.c = c;
        self
    }

    pub fn with_weights(mut self, weights: ClassWeights<F>) -> Self {
        self.class_weights = Some(weights);
        self
    }

    pub fn with_solver(mut self, solver: SolverSettings<F>) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_priority_order(mut self, order: PriorityOrder) -> Self {
        self.priority_order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.solver.validate()?;
        if !(self.c > F::zero()) || !self.c.is_finite() {
            return Err(Error::InvalidInput(format!("C must be positive, got {}", self.c)));
        }
        if let Some(w) = &self.class_weights {
            w.validate()?;
        }
        if !(self.hard_margin_multiplier > F::zero()) || !(self.hard_margin_tolerance > F::zero()) {
            return Err(Error::InvalidInput(
                "hard-margin multiplier and tolerance must be positive".into(),
            ));
        }
        match self.variant {
            Variant::NuSvc if self.nu.is_none() => {
                Err(Error::InvalidInput("nu_svc requires nu".into()))
            }
            Variant::Weighted if self.class_weights.is_none() => {
                Err(Error::InvalidInput("weighted variant requires class weights".into()))
            }
            Variant::SoftMargin if self.class_weights.is_some() => Err(Error::InvalidInput(
                "soft_margin takes no class weights; use the weighted variant".into(),
            )),
            v if v != Variant::NuSvc && self.nu.is_some() => {
                Err(Error::InvalidInput(format!("{v} takes no nu")))
            }
            _ => Ok(()),
        }
    }

    /// Class weights in effect (uniform when none are configured).
    pub fn weights(&self) -> ClassWeights<F> {
        self.class_weights.unwrap_or_else(ClassWeights::uniform)
    }

    /// Box `C·w_{y_i}` for the soft-margin fits.
    pub fn soft_penalties(&self, labels: &[i8]) -> Vec<F> {
        match &self.class_weights {
            Some(w) => labels.iter().map(|&y| self.c * w.get(y)).collect(),
            None => vec![self.c; labels.len()],
        }
    }

    pub fn hard_margin_penalty(&self) -> F {
        self.hard_margin_multiplier * self.weights().max()
    }

    pub fn hard_margin_settings(&self) -> SolverSettings<F> {
        self.solver.with_tolerance(self.hard_margin_tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub variant: Variant,
    /// Wall-clock seconds; not persisted so model files stay reproducible.
    #[serde(skip)]
    pub train_time: f64,
    pub n_train: usize,
    pub converged: bool,
    pub iterations: usize,
    pub dual_objective: f64,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
}

/// Trained binary classifier `f(x) = Σ coef_i K(x, sv_i) + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SvmModel<F> {
    pub support_vectors: Matrix<F>,
    /// `α_i y_i` per support vector.
    pub sv_coefficients: Vec<F>,
    pub bias: F,
    pub kernel: KernelSpec<F>,
    /// ν-SVM margin before rescaling to unit margin.
    pub rho: Option<F>,
    pub meta: TrainingMeta,
}

impl<F: Scalar> SvmModel<F> {
    pub fn n_support(&self) -> usize {
        self.sv_coefficients.len()
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    #[inline]
    fn decision_unchecked(&self, x: &[F]) -> F {
        self.support_vectors
            .rows_iter()
            .zip(&self.sv_coefficients)
            .map(|(sv, &coef)| coef * self.kernel.eval_unchecked(x, sv))
            .sum::<F>()
            + self.bias
    }

    /// `Σ α_i y_i K(x, x_i) + b`
    pub fn decision_function(&self, x: &[F]) -> Result<F> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    pub fn decision_values(&self, x: &Matrix<F>) -> Result<Vec<F>> {
        if x.nrows() > 0 && x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| self.decision_unchecked(x.row(i)))
            .collect())
    }

    /// Sign of the decision value; zero maps to `+1`.
    pub fn predict(&self, x: &Matrix<F>) -> Result<Vec<i8>> {
        Ok(self.decision_values(x)?.into_iter().map(label_of).collect())
    }

    pub fn predict_one(&self, x: &[F]) -> Result<i8> {
        self.decision_function(x).map(label_of)
    }

    /// `½‖w‖²` in feature space.
    pub fn half_norm_sq(&self) -> F {
        let mut total = F::zero();
        for (i, sv) in self.support_vectors.rows_iter().enumerate() {
            let inner: F = self
                .support_vectors
                .rows_iter()
                .zip(&self.sv_coefficients)
                .map(|(other, &c)| c * self.kernel.eval_unchecked(sv, other))
                .sum();
            total = total + self.sv_coefficients[i] * inner;
        }
        total / F::lit(2.0)
    }
}

#[inline]
pub fn label_of<F: Scalar>(value: F) -> i8 {
    if value >= F::zero() {
        1
    } else {
        -1
    }
}

/// Which dual a row subset is trained with.
pub(crate) enum DualKind<F> {
    /// Box-constrained C-SVM.
    Box { penalties: Vec<F> },
    /// Hard margin. When some multiplier would exceed `max_alpha`, either
    /// the box-constrained C-SVM with penalty `max_alpha` is solved instead
    /// (`fallback`) or [`Error::NotSeparable`] is returned.
    Hard { max_alpha: F, fallback: bool },
    Nu(F),
}

/// Trains on `rows` of `data`; `gram` must be the kernel matrix over exactly
/// those rows, in that order.
pub(crate) fn train_on_rows<F: Scalar>(
    data: &Dataset<F>,
    gram: &Matrix<F>,
    rows: &[usize],
    dual: &DualKind<F>,
    kernel: &KernelSpec<F>,
    settings: &SolverSettings<F>,
    variant: Variant,
) -> Result<SvmModel<F>> {
    let labels: Vec<i8> = rows.iter().map(|&i| data.labels[i]).collect();
    let (solution, thresholds) = match dual {
        DualKind::Box { penalties } => {
            let sol = solve_c_svm_dual(gram, &labels, penalties, settings)?;
            let th = penalties.iter().map(|&c| c * F::lit(SV_THRESHOLD)).collect();
            (sol, th)
        }
        DualKind::Hard { max_alpha, fallback } => match solve_hard_margin_dual(gram, &labels, *max_alpha, settings)? {
            HardMarginOutcome::Separable(sol) => (sol, vec![F::lit(SV_THRESHOLD); rows.len()]),
            HardMarginOutcome::Inseparable { .. } if *fallback => {
                let penalties = vec![*max_alpha; rows.len()];
                let sol = solve_c_svm_dual(gram, &labels, &penalties, settings)?;
                (sol, vec![F::lit(SV_THRESHOLD); rows.len()])
            }
            HardMarginOutcome::Inseparable { .. } => return Err(Error::NotSeparable),
        },
        DualKind::Nu(nu) => {
            let sol = solve_nu_svm_dual(gram, &labels, *nu, settings)?;
            let box_ = F::one() / F::from_count(rows.len());
            (sol, vec![box_ * F::lit(SV_THRESHOLD); rows.len()])
        }
    };

    // ν solutions are rescaled so that free support vectors sit at |f| = 1
    let scale = match solution.rho {
        Some(rho) if rho > F::zero() => F::one() / rho,
        _ => F::one(),
    };
    let mut sv_rows = Vec::new();
    let mut coefs = Vec::new();
    let mut support_indices = Vec::new();
    for (k, (&a, &th)) in solution.alphas.iter().zip(&thresholds).enumerate() {
        if a > th {
            sv_rows.push(rows[k]);
            support_indices.push(rows[k]);
            let y = if labels[k] > 0 { F::one() } else { -F::one() };
            coefs.push(a * y * scale);
        }
    }
    Ok(SvmModel {
        support_vectors: data.features.select_rows(&sv_rows),
        sv_coefficients: coefs,
        bias: solution.bias * scale,
        kernel: *kernel,
        rho: solution.rho,
        meta: TrainingMeta {
            variant,
            train_time: 0.0,
            n_train: rows.len(),
            converged: solution.converged,
            iterations: solution.iterations,
            dual_objective: solution.objective.as_f64(),
            support_indices,
        },
    })
}

fn check_dataset<F: Scalar>(dataset: &Dataset<F>) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    if !dataset.has_both_classes() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Trains the configured variant on the whole dataset.
pub fn fit<F: Scalar>(dataset: &Dataset<F>, config: &TrainConfig<F>) -> Result<SvmModel<F>> {
    config.validate()?;
    check_dataset(dataset)?;
    let start = Instant::now();
    let mut model = match config.variant {
        Variant::Proposed => decomposition::run_decomposition(dataset, config)?.0,
        variant => {
            let gram = gram_matrix(&config.kernel, &dataset.features)?;
            let rows: Vec<usize> = (0..dataset.len()).collect();
            let dual = match variant {
                Variant::NuSvc => DualKind::Nu(config.nu.expect("validated")),
                _ => DualKind::Box {
                    penalties: config.soft_penalties(&dataset.labels),
                },
            };
            train_on_rows(dataset, &gram, &rows, &dual, &config.kernel, &config.solver, variant)?
        }
    };
    model.meta.train_time = start.elapsed().as_secs_f64();
    Ok(model)
}

/// Hard-margin fit (through the large-box surrogate) on the whole dataset.
pub fn fit_hard_margin<F: Scalar>(dataset: &Dataset<F>, config: &TrainConfig<F>) -> Result<SvmModel<F>> {
    config.kernel.validate()?;
    check_dataset(dataset)?;
    let start = Instant::now();
    let gram = gram_matrix(&config.kernel, &dataset.features)?;
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let dual = DualKind::Hard {
        max_alpha: config.hard_margin_penalty(),
        fallback: true,
    };
    let mut model = train_on_rows(
        dataset,
        &gram,
        &rows,
        &dual,
        &config.kernel,
        &config.hard_margin_settings(),
        config.variant,
    )?;
    model.meta.train_time = start.elapsed().as_secs_f64();
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TrainingDiagnostics<F> {
    /// `d_i = f(x_i)`
    pub decision_values: Vec<F>,
    /// `ξ_i = max(0, 1 − y_i d_i)`
    pub slacks: Vec<F>,
    /// `z_i = (y_i d_i < 1)`
    pub violation_flags: Vec<bool>,
    /// `c_i = |d_i| / w_{y_i}`, present when weights were supplied.
    pub priorities: Option<Vec<F>>,
}

impl<F: Scalar> TrainingDiagnostics<F> {
    pub fn violation_count(&self) -> usize {
        self.violation_flags.iter().filter(|&&z| z).count()
    }
}

/// Per-sample slack, violation indicator and priority under `model`.
pub fn diagnostics<F: Scalar>(
    model: &SvmModel<F>,
    dataset: &Dataset<F>,
    weights: Option<&ClassWeights<F>>,
) -> Result<TrainingDiagnostics<F>> {
    let d = model.decision_values(&dataset.features)?;
    Ok(diagnostics_from_values(d, &dataset.labels, weights))
}

pub(crate) fn diagnostics_from_values<F: Scalar>(
    decision_values: Vec<F>,
    labels: &[i8],
    weights: Option<&ClassWeights<F>>,
) -> TrainingDiagnostics<F> {
    let margins: Vec<F> = decision_values
        .iter()
        .zip(labels)
        .map(|(&d, &y)| if y > 0 { d } else { -d })
        .collect();
    let slacks: Vec<F> = margins.iter().map(|&m| (F::one() - m).max(F::zero())).collect();
    let violation_flags = slacks.iter().map(|&s| s > F::zero()).collect();
    let priorities = weights.map(|w| {
        decision_values
            .iter()
            .zip(labels)
            .map(|(&d, &y)| d.abs() / w.get(y))
            .collect()
    });
    TrainingDiagnostics {
        decision_values,
        slacks,
        violation_flags,
        priorities,
    }
}
