//! SMO-style solvers for the SVM dual.
//!
//! Both problems are solved in the minimization form
//!
//! ```text
//! min_a  ½ aᵀQa + pᵀa    s.t.  yᵀa = Δ,  0 ≤ a_i ≤ C_i
//! ```
//!
//! with `Q_ij = y_i y_j K(x_i, x_j)`. The C-SVM uses `p = −1` and `Δ = 0`.
//! The ν-SVM uses `p = 0`, box `1/n` and the extra constraint `Σa = ν`,
//! which is kept by only pairing variables of the same class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Small positive curvature used when a pair's second-order term vanishes.
const TAU: f64 = 1e-12;
/// Smallest stopping tolerance, in units of the machine epsilon.
const PRECISION_FLOOR: f64 = 1024.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkingSetRule {
    #[default]
    MaxViolatingPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SolverSettings<F> {
    pub kkt_tolerance: F,
    pub max_iterations: usize,
    #[serde(default)]
    pub working_set_rule: WorkingSetRule,
}

impl<F: Scalar> SolverSettings<F> {
    /// Training defaults: tolerance 1e-3.
    pub fn training() -> Self {
        SolverSettings {
            kkt_tolerance: F::lit(1e-3),
            max_iterations: 1_000_000,
            working_set_rule: WorkingSetRule::MaxViolatingPair,
        }
    }

    /// Tight settings used when the solution itself is under scrutiny.
    pub fn verification() -> Self {
        SolverSettings {
            kkt_tolerance: F::lit(1e-6),
            ..Self::training()
        }
    }

    /// Tolerance actually used to stop: `kkt_tolerance`, raised to a small
    /// multiple of the machine epsilon so that single precision can reach it.
    pub fn stopping_tolerance(&self) -> F {
        self.kkt_tolerance.max(F::epsilon() * F::lit(PRECISION_FLOOR))
    }

    pub fn with_tolerance(mut self, tol: F) -> Self {
        self.kkt_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tolerance > F::zero()) {
            return Err(Error::InvalidInput("kkt_tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

impl<F: Scalar> Default for SolverSettings<F> {
    fn default() -> Self {
        Self::training()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DualSolution<F> {
    /// Lagrange multipliers, one per training sample.
    pub alphas: Vec<F>,
    /// Dual objective in minimization form.
    pub objective: F,
    pub iterations: usize,
    pub converged: bool,
    /// Margin variable of the ν-SVM; `None` for the C-SVM.
    pub rho: Option<F>,
    /// Offset `b` of the decision function `Σ α_i y_i K(x, x_i) + b`.
    pub bias: F,
}

/// Solves the C-SVM dual with a per-sample upper bound `penalties[i]`.
pub fn solve_c_svm_dual<F: Scalar>(
    gram: &Matrix<F>,
    labels: &[i8],
    penalties: &[F],
    settings: &SolverSettings<F>,
) -> Result<DualSolution<F>> {
    check_problem(gram, labels)?;
    settings.validate()?;
    if penalties.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: penalties.len(),
        });
    }
    if penalties.iter().any(|&c| !(c > F::zero()) || !c.is_finite()) {
        return Err(Error::InvalidInput("penalties must be positive and finite".into()));
    }
    let n = labels.len();
    let mut smo = Smo::new(
        gram,
        labels,
        vec![F::zero(); n],
        vec![-F::one(); n],
        penalties.to_vec(),
        false,
    );
    let (iterations, converged) = smo.run(settings);
    let objective = smo.objective();
    let bias = smo.c_svm_bias();
    Ok(DualSolution {
        alphas: smo.alpha,
        objective,
        iterations,
        converged,
        rho: None,
        bias,
    })
}

/// Largest feasible ν for the given labels: `2·min(n+, n−)/n`.
pub fn nu_upper_bound(labels: &[i8]) -> f64 {
    let pos = labels.iter().filter(|&&y| y > 0).count();
    let neg = labels.len() - pos;
    2.0 * pos.min(neg) as f64 / labels.len().max(1) as f64
}

/// Solves the ν-SVM dual `min ½ aᵀQa, yᵀa = 0, Σa = ν, 0 ≤ a_i ≤ 1/n`.
///
/// Returned multipliers use that normalization, `rho` is the margin `ρ`, and
/// the decision function `Σ α_i y_i K + b` takes the value `±ρ` on free
/// support vectors.
pub fn solve_nu_svm_dual<F: Scalar>(
    gram: &Matrix<F>,
    labels: &[i8],
    nu: F,
    settings: &SolverSettings<F>,
) -> Result<DualSolution<F>> {
    check_problem(gram, labels)?;
    settings.validate()?;
    let bound = nu_upper_bound(labels);
    let nu_f = nu.as_f64();
    // exact rational comparison: nu·n <= 2·min(n+, n−)
    let n = labels.len();
    let pos = labels.iter().filter(|&&y| y > 0).count();
    let limit = 2 * pos.min(n - pos);
    if !(nu_f > 0.0) || nu_f > 1.0 || nu_f * n as f64 > limit as f64 + 1e-12 * n as f64 {
        return Err(Error::InfeasibleNu { nu: nu_f, bound });
    }

    // Solve with unit boxes and Σa = ν·n, then rescale by 1/n.
    let mut alpha = vec![F::zero(); n];
    let half = nu * F::from_count(n) / F::lit(2.0);
    let (mut sum_pos, mut sum_neg) = (half, half);
    for (a, &y) in alpha.iter_mut().zip(labels) {
        let remaining = if y > 0 { &mut sum_pos } else { &mut sum_neg };
        *a = F::one().min(*remaining);
        *remaining = *remaining - *a;
    }
    let mut smo = Smo::new(gram, labels, alpha, vec![F::zero(); n], vec![F::one(); n], true);
    let (iterations, converged) = smo.run(settings);
    let (r_pos, r_neg) = smo.nu_offsets();
    let scale = F::from_count(n);
    let rho = (r_pos + r_neg) / (F::lit(2.0) * scale);
    let bias = (r_neg - r_pos) / (F::lit(2.0) * scale);
    let objective = smo.objective() / (scale * scale);
    let alphas = smo.alpha.iter().map(|&a| a / scale).collect();
    Ok(DualSolution {
        alphas,
        objective,
        iterations,
        converged,
        rho: Some(rho),
        bias,
    })
}

/// Result of a hard-margin solve.
#[derive(Clone, Debug, PartialEq)]
pub enum HardMarginOutcome<F> {
    Separable(DualSolution<F>),
    /// The classes cannot be separated with every multiplier inside
    /// `[0, max_alpha]`; in particular, truly inseparable data.
    Inseparable { iterations: usize },
}

/// Hard-margin SVM `min ½‖w‖², y_i f(x_i) ≥ 1`.
///
/// Solved as the nearest-point problem between the convex hulls of the two
/// classes, `min λᵀQλ` with `Σ_{y=+1} λ = Σ_{y=−1} λ = 1`, `λ ≥ 0`, whose
/// optimum `2ρ` is the squared hull distance; then `α = λ/ρ`. Unlike the
/// hard-margin dual itself this problem is bounded, so inseparable inputs
/// terminate. The KKT tolerance applies to the hard-margin gradient.
///
/// Reports [`HardMarginOutcome::Inseparable`] as soon as the current
/// iterate proves some `α_i` must exceed `max_alpha`. Each class sum of `α`
/// equals `1/ρ`, and `½λᵀQλ` never increases along the iterates while
/// bounding `ρ` from above, so `1/(n_c·ρ) > max_alpha` is a certificate.
pub fn solve_hard_margin_dual<F: Scalar>(
    gram: &Matrix<F>,
    labels: &[i8],
    max_alpha: F,
    settings: &SolverSettings<F>,
) -> Result<HardMarginOutcome<F>> {
    check_problem(gram, labels)?;
    settings.validate()?;
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&y| y > 0).count();
    let n_neg = n - n_pos;
    let alpha: Vec<F> = labels
        .iter()
        .map(|&y| F::one() / F::from_count(if y > 0 { n_pos } else { n_neg }))
        .collect();
    // λ never exceeds its class sum of 1, so this box is inactive
    let mut smo = Smo::new(gram, labels, alpha, vec![F::zero(); n], vec![F::lit(2.0); n], true);
    let smallest_class = F::from_count(n_pos.min(n_neg));
    let mut iterations = 0;
    let converged = loop {
        let rho = smo.objective();
        if !(rho > F::zero()) || F::one() / (smallest_class * rho) > max_alpha {
            return Ok(HardMarginOutcome::Inseparable { iterations });
        }
        let Some((i, j)) = smo.select_nu(settings.stopping_tolerance() * rho) else {
            break true;
        };
        if iterations >= settings.max_iterations {
            break false;
        }
        smo.update(i, j);
        iterations += 1;
    };
    let (r_pos, r_neg) = smo.nu_offsets();
    let rho = (r_pos + r_neg) / F::lit(2.0);
    if !(rho > F::zero()) {
        return Ok(HardMarginOutcome::Inseparable { iterations });
    }
    let alphas: Vec<F> = smo.alpha.iter().map(|&l| l / rho).collect();
    if alphas.iter().any(|&a| a > max_alpha) {
        return Ok(HardMarginOutcome::Inseparable { iterations });
    }
    let bias = (r_neg - r_pos) / (F::lit(2.0) * rho);
    Ok(HardMarginOutcome::Separable(DualSolution {
        alphas,
        objective: -F::one() / rho,
        iterations,
        converged,
        rho: None,
        bias,
    }))
}

/// Maximum KKT violation of a C-SVM dual solution.
///
/// Reports the largest of: the equality residual `|Σ α_i y_i|`, any box
/// violation, and the maximal-violating-pair gap `max_{I_up} −y_i G_i −
/// min_{I_low} −y_i G_i` (clamped at zero). Zero at an exact optimum.
pub fn kkt_violation_report<F: Scalar>(
    gram: &Matrix<F>,
    labels: &[i8],
    penalties: &[F],
    solution: &DualSolution<F>,
) -> F {
    let n = labels.len();
    let a = &solution.alphas;
    let mut worst = labels
        .iter()
        .zip(a)
        .map(|(&y, &ai)| sign::<F>(y) * ai)
        .sum::<F>()
        .abs();
    for i in 0..n {
        worst = worst.max(-a[i]).max(a[i] - penalties[i]);
    }
    let grad: Vec<F> = (0..n)
        .map(|i| {
            let row = gram.row(i);
            let yi = sign::<F>(labels[i]);
            let s: F = (0..n).map(|j| a[j] * sign::<F>(labels[j]) * row[j]).sum();
            yi * s - F::one()
        })
        .collect();
    let mut up = F::neg_infinity();
    let mut low = F::infinity();
    for i in 0..n {
        let y = labels[i];
        let v = -sign::<F>(y) * grad[i];
        let below_upper = a[i] < penalties[i];
        let above_lower = a[i] > F::zero();
        if (y > 0 && below_upper) || (y < 0 && above_lower) {
            up = up.max(v);
        }
        if (y < 0 && below_upper) || (y > 0 && above_lower) {
            low = low.min(v);
        }
    }
    if up.is_finite() && low.is_finite() {
        worst = worst.max(up - low);
    }
    worst.max(F::zero())
}

fn check_problem<F: Scalar>(gram: &Matrix<F>, labels: &[i8]) -> Result<()> {
    let n = labels.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gram.nrows(),
        });
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidInput("labels must be +1 or -1".into()));
    }
    let has_pos = labels.iter().any(|&y| y > 0);
    let has_neg = labels.iter().any(|&y| y < 0);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

#[inline]
fn sign<F: Scalar>(y: i8) -> F {
    if y > 0 {
        F::one()
    } else {
        -F::one()
    }
}

struct Smo<'a, F> {
    gram: &'a Matrix<F>,
    y: Vec<F>,
    alpha: Vec<F>,
    grad: Vec<F>,
    linear: Vec<F>,
    upper: Vec<F>,
    nu_mode: bool,
}

impl<'a, F: Scalar> Smo<'a, F> {
    fn new(
        gram: &'a Matrix<F>,
        labels: &[i8],
        alpha: Vec<F>,
        linear: Vec<F>,
        upper: Vec<F>,
        nu_mode: bool,
    ) -> Self {
        let y: Vec<F> = labels.iter().map(|&l| sign(l)).collect();
        let n = y.len();
        let mut grad = linear.clone();
        for j in 0..n {
            if alpha[j] != F::zero() {
                let row = gram.row(j);
                for i in 0..n {
                    grad[i] = grad[i] + y[i] * y[j] * row[i] * alpha[j];
                }
            }
        }
        Smo {
            gram,
            y,
            alpha,
            grad,
            linear,
            upper,
            nu_mode,
        }
    }

    #[inline]
    fn q(&self, i: usize, j: usize) -> F {
        self.y[i] * self.y[j] * self.gram.get(i, j)
    }

    #[inline]
    fn at_upper(&self, i: usize) -> bool {
        self.alpha[i] >= self.upper[i]
    }

    #[inline]
    fn at_lower(&self, i: usize) -> bool {
        self.alpha[i] <= F::zero()
    }

    #[inline]
    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > F::zero() {
            !self.at_upper(i)
        } else {
            !self.at_lower(i)
        }
    }

    #[inline]
    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > F::zero() {
            !self.at_lower(i)
        } else {
            !self.at_upper(i)
        }
    }

    fn run(&mut self, settings: &SolverSettings<F>) -> (usize, bool) {
        let mut iter = 0;
        loop {
            let pair = if self.nu_mode {
                self.select_nu(settings.stopping_tolerance())
            } else {
                self.select(settings.stopping_tolerance())
            };
            let Some((i, j)) = pair else {
                return (iter, true);
            };
            if iter >= settings.max_iterations {
                return (iter, false);
            }
            self.update(i, j);
            iter += 1;
        }
    }

    /// Maximal violating pair over all samples; lowest index wins ties.
    fn select(&self, eps: F) -> Option<(usize, usize)> {
        let mut gmax = F::neg_infinity();
        let mut gmin = F::infinity();
        let (mut i_sel, mut j_sel) = (None, None);
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > gmax {
                gmax = v;
                i_sel = Some(t);
            }
            if self.in_low(t) && v < gmin {
                gmin = v;
                j_sel = Some(t);
            }
        }
        match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax - gmin >= eps => Some((i, j)),
            _ => None,
        }
    }

    /// Maximal violating pair within one class; the class with the larger
    /// gap is chosen (positive class on ties).
    fn select_nu(&self, eps: F) -> Option<(usize, usize)> {
        let mut best: Option<(F, usize, usize)> = None;
        for class in [F::one(), -F::one()] {
            let mut gmax = F::neg_infinity();
            let mut gmin = F::infinity();
            let (mut i_sel, mut j_sel) = (None, None);
            for t in 0..self.y.len() {
                if self.y[t] != class {
                    continue;
                }
                let v = -self.y[t] * self.grad[t];
                if self.in_up(t) && v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
                if self.in_low(t) && v < gmin {
                    gmin = v;
                    j_sel = Some(t);
                }
            }
            if let (Some(i), Some(j)) = (i_sel, j_sel) {
                let gap = gmax - gmin;
                if best.is_none_or(|(g, _, _)| gap > g) {
                    best = Some((gap, i, j));
                }
            }
        }
        match best {
            Some((gap, i, j)) if gap >= eps => Some((i, j)),
            _ => None,
        }
    }

    fn update(&mut self, i: usize, j: usize) {
        let tau = F::lit(TAU);
        let (ci, cj) = (self.upper[i], self.upper[j]);
        let old_i = self.alpha[i];
        let old_j = self.alpha[j];
        let kii = self.gram.get(i, i);
        let kjj = self.gram.get(j, j);
        let kij = self.gram.get(i, j);
        let (mut ai, mut aj) = (old_i, old_j);

        if self.y[i] != self.y[j] {
            let mut quad = kii + kjj + F::lit(2.0) * self.q(i, j);
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai = ai + delta;
            aj = aj + delta;
            if diff > F::zero() {
                if aj < F::zero() {
                    aj = F::zero();
                    ai = diff;
                }
            } else if ai < F::zero() {
                ai = F::zero();
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let mut quad = kii + kjj - F::lit(2.0) * kij;
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai = ai - delta;
            aj = aj + delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < F::zero() {
                aj = F::zero();
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < F::zero() {
                ai = F::zero();
                aj = sum;
            }
        }

        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let di = ai - old_i;
        let dj = aj - old_j;
        let (yi, yj) = (self.y[i], self.y[j]);
        let row_i = self.gram.row(i);
        let row_j = self.gram.row(j);
        for t in 0..self.y.len() {
            let yt = self.y[t];
            self.grad[t] = self.grad[t] + yt * (yi * row_i[t] * di + yj * row_j[t] * dj);
        }
    }

    /// `½ aᵀQa + pᵀa` computed from the maintained gradient.
    fn objective(&self) -> F {
        let two = F::lit(2.0);
        self.alpha
            .iter()
            .zip(&self.grad)
            .zip(&self.linear)
            .map(|((&a, &g), &p)| a * (g + p))
            .sum::<F>()
            / two
    }

    /// Bias averaged over free multipliers; midpoint of the feasible
    /// interval when every multiplier sits at a bound.
    fn c_svm_bias(&self) -> F {
        let mut ub = F::infinity();
        let mut lb = F::neg_infinity();
        let mut sum = F::zero();
        let mut free = 0usize;
        for i in 0..self.y.len() {
            let yg = self.y[i] * self.grad[i];
            if self.at_upper(i) {
                if self.y[i] < F::zero() {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.at_lower(i) {
                if self.y[i] > F::zero() {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum = sum + yg;
            }
        }
        let r = if free > 0 {
            sum / F::from_count(free)
        } else {
            midpoint(lb, ub)
        };
        -r
    }

    /// Per-class offsets `r+`, `r−` of the ν-SVM (unscaled problem).
    fn nu_offsets(&self) -> (F, F) {
        let mut out = [F::zero(); 2];
        for (slot, class) in out.iter_mut().zip([F::one(), -F::one()]) {
            let mut ub = F::infinity();
            let mut lb = F::neg_infinity();
            let mut sum = F::zero();
            let mut free = 0usize;
            for i in 0..self.y.len() {
                if self.y[i] != class {
                    continue;
                }
                let g = self.grad[i];
                if self.at_upper(i) {
                    lb = lb.max(g);
                } else if self.at_lower(i) {
                    ub = ub.min(g);
                } else {
                    free += 1;
                    sum = sum + g;
                }
            }
            *slot = if free > 0 {
                sum / F::from_count(free)
            } else {
                midpoint(lb, ub)
            };
        }
        (out[0], out[1])
    }
}

fn midpoint<F: Scalar>(lb: F, ub: F) -> F {
    match (lb.is_finite(), ub.is_finite()) {
        (true, true) => (lb + ub) / F::lit(2.0),
        (true, false) => lb,
        (false, true) => ub,
        (false, false) => F::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gram_matrix, KernelSpec};

    fn two_point() -> (Matrix<f64>, Vec<i8>) {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        (gram_matrix(&KernelSpec::linear(), &x).unwrap(), vec![-1, 1])
    }

    #[test]
    fn two_point_analytic() {
        // w = α1·1 + α2·1 = 1 with α1 = α2 = ½, b = 0.
        let (g, y) = two_point();
        let sol = solve_c_svm_dual(&g, &y, &[1e6, 1e6], &SolverSettings::verification()).unwrap();
        assert!(sol.converged);
        assert!((sol.alphas[0] - 0.5).abs() < 1e-9);
        assert!((sol.alphas[1] - 0.5).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
        assert!((sol.objective + 0.5).abs() < 1e-9);
        assert!(kkt_violation_report(&g, &y, &[1e6, 1e6], &sol) <= 1e-8);
    }

    #[test]
    fn tiny_penalties_collapse_to_zero() {
        let x = Matrix::<f64>::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, -1.0], [0.3, 0.3]]).unwrap();
        let g = gram_matrix(&KernelSpec::rbf(1.0), &x).unwrap();
        let y = [1, -1, 1, -1];
        let c = [1e-12; 4];
        let sol = solve_c_svm_dual(&g, &y, &c, &SolverSettings::training()).unwrap();
        assert!(sol.alphas.iter().all(|&a| (0.0..=1e-12).contains(&a)));
        assert!(sol.objective.abs() < 1e-10);
    }

    #[test]
    fn single_class_rejected() {
        let (g, _) = two_point();
        let err = solve_c_svm_dual(&g, &[1, 1], &[1.0, 1.0], &SolverSettings::training()).unwrap_err();
        assert!(matches!(err, Error::SingleClass));
    }

    #[test]
    fn bad_penalties_rejected() {
        let (g, y) = two_point();
        assert!(solve_c_svm_dual(&g, &y, &[1.0, 0.0], &SolverSettings::training()).is_err());
        assert!(solve_c_svm_dual(&g, &y, &[1.0], &SolverSettings::training()).is_err());
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [0.2], [0.3], [0.4], [0.5]]).unwrap();
        let g = gram_matrix(&KernelSpec::rbf(1.0), &x).unwrap();
        let y = [1, -1, 1, -1, 1, -1];
        let settings = SolverSettings {
            max_iterations: 1,
            ..SolverSettings::verification()
        };
        let sol = solve_c_svm_dual(&g, &y, &[10.0; 6], &settings).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn zero_alphas_violate_kkt() {
        let (g, y) = two_point();
        let zero = DualSolution {
            alphas: vec![0.0, 0.0],
            objective: 0.0,
            iterations: 0,
            converged: false,
            rho: None,
            bias: 0.0,
        };
        assert!(kkt_violation_report(&g, &y, &[1.0, 1.0], &zero) > 1e-3);
    }

    #[test]
    fn perturbation_increases_violation() {
        let (g, y) = two_point();
        let c = [1e6, 1e6];
        let sol = solve_c_svm_dual(&g, &y, &c, &SolverSettings::verification()).unwrap();
        let base = kkt_violation_report(&g, &y, &c, &sol);
        for k in 0..2 {
            let mut p = sol.clone();
            p.alphas[k] += 0.1;
            assert!(kkt_violation_report(&g, &y, &c, &p) > base);
        }
    }

    #[test]
    fn nu_two_point_boundary() {
        let (g, y) = two_point();
        let sol = solve_nu_svm_dual(&g, &y, 1.0, &SolverSettings::verification()).unwrap();
        assert!((sol.alphas[0] - 0.5).abs() < 1e-12);
        assert!((sol.alphas[1] - 0.5).abs() < 1e-12);
        assert!((sol.rho.unwrap() - 1.0).abs() < 1e-12);
        assert!(sol.bias.abs() < 1e-12);
    }

    #[test]
    fn nu_infeasible_on_imbalanced_set() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let g = gram_matrix(&KernelSpec::linear(), &x).unwrap();
        let err = solve_nu_svm_dual(&g, &[-1, -1, -1, 1], 1.0, &SolverSettings::training()).unwrap_err();
        match err {
            Error::InfeasibleNu { bound, .. } => assert_eq!(bound, 0.5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string_names_bound());
        assert!(solve_nu_svm_dual(&g, &[-1, -1, -1, 1], 0.5, &SolverSettings::training()).is_ok());
        assert!(solve_nu_svm_dual(&g, &[-1, -1, -1, 1], 0.0, &SolverSettings::training()).is_err());
    }

    fn err_string_names_bound() -> bool {
        Error::InfeasibleNu { nu: 1.0, bound: 0.5 }.to_string().contains("0.5")
    }

    #[test]
    fn single_precision_two_point() {
        let x = Matrix::<f32>::from_rows(&[[-1.0f32], [1.0]]).unwrap();
        let g = gram_matrix(&KernelSpec::linear(), &x).unwrap();
        let sol = solve_c_svm_dual(&g, &[-1, 1], &[1e3f32, 1e3], &SolverSettings::training()).unwrap();
        assert!((sol.alphas[0] - 0.5).abs() < 1e-5);
        assert!(sol.bias.abs() < 1e-5);
    }

    #[test]
    fn hard_margin_two_point() {
        let (gram, labels) = two_point();
        let out = solve_hard_margin_dual(&gram, &labels, 1e6, &SolverSettings::verification()).unwrap();
        let HardMarginOutcome::Separable(sol) = out else {
            panic!("two distinct points are separable")
        };
        assert!((sol.alphas[0] - 0.5).abs() < 1e-9 && (sol.alphas[1] - 0.5).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
        assert!((sol.objective + 0.5).abs() < 1e-9);
        assert!(kkt_violation_report(&gram, &labels, &[1e6, 1e6], &sol) < 1e-6);
    }

    #[test]
    fn hard_margin_detects_coincident_points() {
        let gram = Matrix::<f64>::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 4.0]]).unwrap();
        let out = solve_hard_margin_dual(&gram, &[1, -1, -1], 1e6, &SolverSettings::training()).unwrap();
        assert!(matches!(out, HardMarginOutcome::Inseparable { .. }));
    }

    #[test]
    fn hard_margin_respects_multiplier_bound() {
        let (gram, labels) = two_point();
        let out = solve_hard_margin_dual(&gram, &labels, 0.1, &SolverSettings::training()).unwrap();
        assert!(matches!(out, HardMarginOutcome::Inseparable { .. }));
    }
}
