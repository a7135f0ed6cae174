//! Training by decomposition into a hard-margin subproblem over an active
//! set and a master step that re-admits excluded samples one at a time.
//!
//! 1. [`initial_solution`]: fit a soft-margin model on all data and exclude
//!    every sample that is misclassified or inside the margin.
//! 2. [`extend_samples`]: refit the hard-margin subproblem on the active set,
//!    rank the still-violating candidates by `|f(x_i)| / w_{y_i}`, and admit
//!    the first one whose insertion keeps the active set perfectly
//!    classified (optimality cut). Rejected trials are rolled back
//!    (feasibility cuts); when every trial fails the loop stops.
//! 3. [`run_decomposition`]: repeat step 2 until no candidates remain or a
//!    round admits nothing.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{ClassWeights, Dataset};
use crate::error::{Error, Result};
use crate::kernels::gram_matrix;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::svm::{label_of, train_on_rows, DualKind, SvmModel, TrainConfig, Variant};

pub use crate::svm::PriorityOrder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cut {
    /// A candidate was admitted permanently.
    Optimality,
    /// Every violating candidate was tried and rolled back.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct IterationRecord<F> {
    pub iteration: usize,
    pub added_index: Option<usize>,
    /// Rolled-back trial insertions this round.
    pub attempts: usize,
    pub priorities_snapshot: BTreeMap<usize, F>,
    pub cut: Cut,
    /// `½‖w‖²` of the subproblem model in force at the end of the round.
    pub subproblem_objective: F,
    pub active_size: usize,
}

/// Active/candidate partition of the training rows plus the loop trace.
#[derive(Clone, Debug)]
pub struct BendersState<F> {
    /// Rows of the current perfectly classified subset, ascending.
    pub active: Vec<usize>,
    /// Excluded rows, ascending.
    pub candidates: Vec<usize>,
    pub iteration: usize,
    pub break_flag: bool,
    pub trace: Vec<IterationRecord<F>>,
    model: Option<SvmModel<F>>,
    gram: Matrix<F>,
}

impl<F: Scalar> BendersState<F> {
    /// Hard-margin model fitted on the current active set, once computed.
    pub fn model(&self) -> Option<&SvmModel<F>> {
        self.model.as_ref()
    }

    pub fn active_dataset(&self, data: &Dataset<F>) -> Dataset<F> {
        data.subset(&self.active)
    }

    pub fn candidate_dataset(&self, data: &Dataset<F>) -> Dataset<F> {
        data.subset(&self.candidates)
    }

    /// True when active and candidate rows are disjoint and cover `0..n`.
    pub fn is_partition(&self, n: usize) -> bool {
        let mut all: Vec<usize> = self.active.iter().chain(&self.candidates).copied().collect();
        all.sort_unstable();
        all.len() == n && all.iter().enumerate().all(|(i, &v)| i == v)
    }

    fn decisions(&self, model: &SvmModel<F>, rows: &[usize]) -> Vec<F> {
        rows.iter()
            .map(|&i| {
                let g = self.gram.row(i);
                model
                    .meta
                    .support_indices
                    .iter()
                    .zip(&model.sv_coefficients)
                    .map(|(&s, &c)| c * g[s])
                    .sum::<F>()
                    + model.bias
            })
            .collect()
    }

    /// Hard-margin fit on `rows`. Trial sets (`fallback = false`) that need
    /// a multiplier above the surrogate box are reported as
    /// [`Error::NotSeparable`]; otherwise the box-constrained surrogate is
    /// solved for them.
    fn fit_subproblem(
        &self,
        data: &Dataset<F>,
        rows: &[usize],
        config: &TrainConfig<F>,
        fallback: bool,
    ) -> Result<SvmModel<F>> {
        let sub = self.gram.principal_submatrix(rows);
        let dual = DualKind::Hard {
            max_alpha: config.hard_margin_penalty(),
            fallback,
        };
        train_on_rows(
            data,
            &sub,
            rows,
            &dual,
            &config.kernel,
            &config.hard_margin_settings(),
            Variant::Proposed,
        )
    }
}

fn signed<F: Scalar>(value: F, label: i8) -> F {
    if label > 0 {
        value
    } else {
        -value
    }
}

/// Fits a soft-margin model on all rows and splits them into the active set
/// (correct with margin) and the candidate set.
///
/// A sample counts as inside the margin when `y·f(x) < 1 − tol`, with `tol`
/// the solver's KKT tolerance, so that support vectors the solver places on
/// the margin are not excluded by rounding. If a class would vanish from the
/// active set, its candidate with the largest `y·f(x)` is retained.
pub fn initial_solution<F: Scalar>(dataset: &Dataset<F>, config: &TrainConfig<F>) -> Result<BendersState<F>> {
    config.validate()?;
    if !dataset.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let gram = gram_matrix(&config.kernel, &dataset.features)?;
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let dual = DualKind::Box {
        penalties: config.soft_penalties(&dataset.labels),
    };
    let variant = if config.class_weights.is_some() {
        Variant::Weighted
    } else {
        Variant::SoftMargin
    };
    let initial = train_on_rows(dataset, &gram, &rows, &dual, &config.kernel, &config.solver, variant)?;

    let mut state = BendersState {
        active: Vec::new(),
        candidates: Vec::new(),
        iteration: 0,
        break_flag: false,
        trace: Vec::new(),
        model: None,
        gram,
    };
    let d = state.decisions(&initial, &rows);
    let threshold = F::one() - config.solver.kkt_tolerance;
    let margins: Vec<F> = d.iter().zip(&dataset.labels).map(|(&v, &y)| signed(v, y)).collect();
    for i in rows {
        let misclassified = label_of(d[i]) != dataset.labels[i];
        if misclassified || margins[i] < threshold {
            state.candidates.push(i);
        } else {
            state.active.push(i);
        }
    }

    for class in [1i8, -1] {
        if state.active.iter().any(|&i| dataset.labels[i] == class) {
            continue;
        }
        let keep = state
            .candidates
            .iter()
            .copied()
            .filter(|&i| dataset.labels[i] == class)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if margins[b] >= margins[i] => Some(b),
                _ => Some(i),
            });
        if let Some(k) = keep {
            log::debug!("class {class} emptied from active set; retaining row {k}");
            state.candidates.retain(|&i| i != k);
            state.active.push(k);
            state.active.sort_unstable();
        }
    }
    Ok(state)
}

/// Orders `(index, priority)` pairs; ties go to the lower index.
pub fn order_priorities<F: Scalar>(mut items: Vec<(usize, F)>, order: PriorityOrder) -> Vec<(usize, F)> {
    items.sort_by(|a, b| {
        let by_value = match order {
            PriorityOrder::Descending => b.1.partial_cmp(&a.1),
            PriorityOrder::Ascending => a.1.partial_cmp(&b.1),
        };
        by_value
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    items
}

/// Priorities `c_i = |f(x_i)| / w_{y_i}` of the given rows, ordered.
pub fn candidate_priorities<F: Scalar>(
    model: &SvmModel<F>,
    dataset: &Dataset<F>,
    candidates: &[usize],
    weights: &ClassWeights<F>,
    order: PriorityOrder,
) -> Result<Vec<(usize, F)>> {
    let items = candidates
        .iter()
        .map(|&i| {
            let d = model.decision_function(dataset.features.row(i))?;
            Ok((i, d.abs() / weights.get(dataset.labels[i])))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(order_priorities(items, order))
}

/// One master/subproblem round. Either admits one candidate (optimality
/// cut) or sets `break_flag` after rolling back every trial.
pub fn extend_samples<F: Scalar>(
    dataset: &Dataset<F>,
    state: &mut BendersState<F>,
    config: &TrainConfig<F>,
) -> Result<()> {
    if state.model.is_none() {
        state.model = Some(state.fit_subproblem(dataset, &state.active, config, true)?);
    }
    state.iteration += 1;
    let current = state.model.as_ref().expect("fitted above");
    if state.candidates.is_empty() {
        state.break_flag = true;
        let objective = current.half_norm_sq();
        state.trace.push(IterationRecord {
            iteration: state.iteration,
            added_index: None,
            attempts: 0,
            priorities_snapshot: BTreeMap::new(),
            cut: Cut::Exhausted,
            subproblem_objective: objective,
            active_size: state.active.len(),
        });
        return Ok(());
    }

    let weights = config.weights();
    let threshold = F::one() - config.solver.kkt_tolerance;
    let d = state.decisions(current, &state.candidates);
    let mut violating = Vec::new();
    for (&i, &v) in state.candidates.iter().zip(&d) {
        let y = dataset.labels[i];
        let correct = label_of(v) == y && signed(v, y) >= threshold;
        if !correct {
            violating.push((i, v.abs() / weights.get(y)));
        }
    }
    let snapshot: BTreeMap<usize, F> = violating.iter().copied().collect();
    let ranked = order_priorities(violating, config.priority_order);

    let mut attempts = 0;
    for (idx, _) in ranked {
        let mut trial = state.active.clone();
        let pos = trial.binary_search(&idx).unwrap_err();
        trial.insert(pos, idx);
        let model = match state.fit_subproblem(dataset, &trial, config, false) {
            Ok(model) => model,
            Err(Error::NotSeparable) => {
                attempts += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        // an unconverged refit cannot certify the margin of the new active set
        if !model.meta.converged {
            attempts += 1;
            continue;
        }
        let values = state.decisions(&model, &trial);
        let separates = trial
            .iter()
            .zip(&values)
            .all(|(&i, &v)| label_of(v) == dataset.labels[i]);
        if separates {
            state.active = trial;
            state.candidates.retain(|&i| i != idx);
            let objective = model.half_norm_sq();
            state.model = Some(model);
            state.trace.push(IterationRecord {
                iteration: state.iteration,
                added_index: Some(idx),
                attempts,
                priorities_snapshot: snapshot,
                cut: Cut::Optimality,
                subproblem_objective: objective,
                active_size: state.active.len(),
            });
            return Ok(());
        }
        attempts += 1;
    }

    state.break_flag = true;
    let objective = state.model.as_ref().expect("fitted above").half_norm_sq();
    state.trace.push(IterationRecord {
        iteration: state.iteration,
        added_index: None,
        attempts,
        priorities_snapshot: snapshot,
        cut: Cut::Exhausted,
        subproblem_objective: objective,
        active_size: state.active.len(),
    });
    Ok(())
}

/// Runs the full decomposition and returns the final hard-margin model on
/// the final active set together with the iteration trace.
pub fn run_decomposition<F: Scalar>(
    dataset: &Dataset<F>,
    config: &TrainConfig<F>,
) -> Result<(SvmModel<F>, Vec<IterationRecord<F>>)> {
    let start = Instant::now();
    let mut state = initial_solution(dataset, config)?;
    while !state.candidates.is_empty() && !state.break_flag {
        extend_samples(dataset, &mut state, config)?;
    }
    let mut model = match state.model.take() {
        Some(m) => m,
        None => state.fit_subproblem(dataset, &state.active, config, true)?,
    };
    model.meta.variant = Variant::Proposed;
    model.meta.train_time = start.elapsed().as_secs_f64();
    log::debug!(
        "decomposition finished: {} rounds, active {}/{}, {} support vectors",
        state.iteration,
        state.active.len(),
        dataset.len(),
        model.n_support()
    );
    Ok((model, state.trace))
}

/// Writes one JSON object per iteration record.
pub fn write_trace_jsonl<F: Scalar, W: Write>(trace: &[IterationRecord<F>], mut out: W) -> Result<()> {
    for rec in trace {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace_jsonl<F: Scalar, R: BufRead>(input: R) -> Result<Vec<IterationRecord<F>>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::svm::fit_hard_margin;

    fn blobs() -> Dataset<f64> {
        let rows = [
            [-3.0, -3.0],
            [-3.5, -2.5],
            [-2.5, -3.5],
            [-3.0, -2.0],
            [3.0, 3.0],
            [3.5, 2.5],
            [2.5, 3.5],
            [3.0, 2.0],
        ];
        Dataset::from_rows(&rows, vec![-1, -1, -1, -1, 1, 1, 1, 1]).unwrap()
    }

    #[test]
    fn separable_data_has_no_candidates() {
        let cfg = TrainConfig::proposed(100.0, KernelSpec::linear());
        let state = initial_solution(&blobs(), &cfg).unwrap();
        assert!(state.candidates.is_empty());
        assert_eq!(state.active, (0..8).collect::<Vec<_>>());
        let (model, trace) = run_decomposition(&blobs(), &cfg).unwrap();
        assert!(trace.is_empty());
        let direct = fit_hard_margin(&blobs(), &cfg).unwrap();
        assert_eq!(model.sv_coefficients, direct.sv_coefficients);
        assert_eq!(model.bias, direct.bias);
    }

    #[test]
    fn priority_ordering() {
        let items = vec![(3usize, 0.5f64), (1, 2.0), (7, 0.5)];
        let desc = order_priorities(items.clone(), PriorityOrder::Descending);
        assert_eq!(desc.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 3, 7]);
        let asc = order_priorities(items, PriorityOrder::Ascending);
        assert_eq!(asc.iter().map(|p| p.0).collect::<Vec<_>>(), vec![3, 7, 1]);
    }

    #[test]
    fn candidate_priorities_use_weights() {
        let cfg = TrainConfig::soft_margin(1.0, KernelSpec::linear());
        let model = crate::svm::fit(&blobs(), &cfg).unwrap();
        let w = ClassWeights { positive: 1.0, negative: 2.0 };
        let pr = candidate_priorities(&model, &blobs(), &[0, 4], &w, PriorityOrder::Descending).unwrap();
        let d0 = model.decision_function(blobs().features.row(0)).unwrap();
        let d4 = model.decision_function(blobs().features.row(4)).unwrap();
        let expect = order_priorities(vec![(0, d0.abs() / 2.0), (4, d4.abs())], PriorityOrder::Descending);
        assert_eq!(pr, expect);
    }

    #[test]
    fn trace_round_trip() {
        let rec = IterationRecord {
            iteration: 1,
            added_index: Some(4),
            attempts: 2,
            priorities_snapshot: BTreeMap::from([(4, 0.25f64), (9, 1.5)]),
            cut: Cut::Optimality,
            subproblem_objective: 0.125,
            active_size: 7,
        };
        let mut buf = Vec::new();
        write_trace_jsonl(&[rec.clone(), rec.clone()], &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 2);
        let back: Vec<IterationRecord<f64>> = read_trace_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, vec![rec.clone(), rec]);
    }
}
