//! Exhaustive hyperparameter search on a fixed validation split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::metrics::confusion_metrics;
use crate::kernels::{KernelKind, KernelSpec};
use crate::scalar::Scalar;
use crate::svm::{fit, TrainConfig, Variant};

/// Score maximized on the validation split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// F1 of the positive (minority) class.
    #[default]
    MinorityF1,
    Accuracy,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::MinorityF1 => "minority_f1",
            Objective::Accuracy => "accuracy",
        }
    }

    /// Scores predictions against the true labels.
    pub fn score(self, y_true: &[i8], y_pred: &[i8]) -> Result<f64> {
        let m = confusion_metrics(y_true, y_pred)?;
        Ok(match self {
            Objective::MinorityF1 => m.minority_f1(),
            Objective::Accuracy => m.accuracy,
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minority_f1" => Ok(Objective::MinorityF1),
            "accuracy" => Ok(Objective::Accuracy),
            _ => Err(Error::InvalidInput(format!("unknown objective {s:?}"))),
        }
    }
}

/// Candidate values. `c` is used by the box-constrained variants, `nu` by
/// ν-SVC, and `gamma` whenever the kernel has a width parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ParamGrid<F> {
    pub c: Vec<F>,
    pub gamma: Vec<F>,
    pub nu: Vec<F>,
}

impl<F: Scalar> Default for ParamGrid<F> {
    fn default() -> Self {
        ParamGrid {
            c: [0.1, 1.0, 10.0, 100.0].map(F::lit).to_vec(),
            gamma: [1.0, 0.1, 0.01, 0.001].map(F::lit).to_vec(),
            nu: [0.1, 0.75, 1.0].map(F::lit).to_vec(),
        }
    }
}

impl<F: Scalar> ParamGrid<F> {
    /// Every cell for `base`, in enumeration order: the penalty (`C`, or `ν`
    /// for ν-SVC) in listed order, then `γ` in listed order. Kernels without
    /// a width parameter keep their `γ` and contribute a single column.
    pub fn cells(&self, base: &TrainConfig<F>) -> Result<Vec<TrainConfig<F>>> {
        let penalties = if base.variant == Variant::NuSvc { &self.nu } else { &self.c };
        let widths: Vec<Option<F>> = if base.kernel.kind == KernelKind::Linear {
            vec![None]
        } else {
            self.gamma.iter().copied().map(Some).collect()
        };
        if penalties.is_empty() || widths.is_empty() {
            return Err(Error::InvalidInput("grid axes must be non-empty".into()));
        }
        let mut out = Vec::with_capacity(penalties.len() * widths.len());
        for &p in penalties {
            for &g in &widths {
                let mut cfg = base.clone();
                if base.variant == Variant::NuSvc {
                    cfg.nu = Some(p);
                } else {
                    cfg.c = p;
                }
                if let Some(g) = g {
                    cfg.kernel = KernelSpec { gamma: g, ..base.kernel };
                }
                out.push(cfg);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Infeasible,
    Nonconverged,
}

/// Hyperparameters of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub c: Option<f64>,
    pub nu: Option<f64>,
    pub gamma: Option<f64>,
}

impl CellParams {
    pub fn of<F: Scalar>(cfg: &TrainConfig<F>) -> Self {
        let nu = cfg.nu.map(|v| v.as_f64());
        CellParams {
            c: if nu.is_some() { None } else { Some(cfg.c.as_f64()) },
            nu,
            gamma: (cfg.kernel.kind != KernelKind::Linear).then(|| cfg.kernel.gamma.as_f64()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: CellParams,
    /// Validation score; absent when the cell failed.
    pub validation_score: Option<f64>,
    pub status: CellStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GridSearchResult<F> {
    pub best_params: TrainConfig<F>,
    pub best_score: f64,
    pub table: Vec<GridRow>,
}

/// Fits every cell on `train`, scores it on `val` and returns the best cell.
///
/// Cells that are infeasible (ν above its bound) or whose solver stopped at
/// the iteration cap are recorded and excluded. Ties go to the first cell in
/// enumeration order. Cells are evaluated in parallel; the result does not
/// depend on scheduling.
pub fn grid_search<F: Scalar>(
    train: &Dataset<F>,
    val: &Dataset<F>,
    base: &TrainConfig<F>,
    grid: &ParamGrid<F>,
    objective: Objective,
) -> Result<GridSearchResult<F>> {
    let cells = grid.cells(base)?;
    let outcomes: Vec<Result<GridRow>> = cells
        .par_iter()
        .map(|cfg| {
            let params = CellParams::of(cfg);
            match fit(train, cfg) {
                Ok(model) if !model.meta.converged => Ok(GridRow {
                    params,
                    validation_score: None,
                    status: CellStatus::Nonconverged,
                }),
                Ok(model) => {
                    let pred = model.predict(&val.features)?;
                    Ok(GridRow {
                        params,
                        validation_score: Some(objective.score(&val.labels, &pred)?),
                        status: CellStatus::Ok,
                    })
                }
                Err(e) if e.is_solver_error() => Ok(GridRow {
                    params,
                    validation_score: None,
                    status: CellStatus::Infeasible,
                }),
                Err(e) => Err(e),
            }
        })
        .collect();
    let table = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (k, row) in table.iter().enumerate() {
        if let (CellStatus::Ok, Some(score)) = (row.status, row.validation_score) {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((k, score));
            }
        }
    }
    let (k, best_score) = best.ok_or(Error::AllCellsFailed)?;
    Ok(GridSearchResult {
        best_params: cells[k].clone(),
        best_score,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_pos: usize, n_neg: usize) -> Dataset<f64> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pos {
            rows.push(vec![2.0 + 0.1 * i as f64, 1.0 + 0.05 * (i % 3) as f64]);
            labels.push(1);
        }
        for i in 0..n_neg {
            rows.push(vec![-2.0 - 0.1 * i as f64, -1.0 + 0.07 * (i % 4) as f64]);
            labels.push(-1);
        }
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn default_enumeration_order() {
        let grid = ParamGrid::<f64>::default();
        let base = TrainConfig::soft_margin(1.0, KernelSpec::rbf(1.0));
        let cells = grid.cells(&base).unwrap();
        let got: Vec<(f64, f64)> = cells.iter().map(|c| (c.c, c.kernel.gamma)).collect();
        let mut want = Vec::new();
        for c in [0.1, 1.0, 10.0, 100.0] {
            for g in [1.0, 0.1, 0.01, 0.001] {
                want.push((c, g));
            }
        }
        assert_eq!(got, want);

        let nu_cells = grid.cells(&TrainConfig::nu_svc(0.5, KernelSpec::rbf(1.0))).unwrap();
        let nus: Vec<f64> = nu_cells.iter().step_by(4).map(|c| c.nu.unwrap()).collect();
        assert_eq!(nus, vec![0.1, 0.75, 1.0]);
        assert_eq!(nu_cells.len(), 12);
    }

    #[test]
    fn single_cell_is_best() {
        let d = blobs(6, 6);
        let grid = ParamGrid {
            c: vec![1.0],
            gamma: vec![0.5],
            nu: vec![],
        };
        let base = TrainConfig::soft_margin(1.0, KernelSpec::rbf(1.0));
        let r = grid_search(&d, &d, &base, &grid, Objective::Accuracy).unwrap();
        assert_eq!(r.table.len(), 1);
        assert_eq!(r.best_params.c, 1.0);
        assert_eq!(r.best_params.kernel.gamma, 0.5);
        assert_eq!(r.best_score, 1.0);
    }

    #[test]
    fn infeasible_nu_recorded_and_skipped() {
        let d = blobs(4, 12);
        let grid = ParamGrid {
            c: vec![],
            gamma: vec![0.5],
            nu: vec![0.1, 1.0],
        };
        let base = TrainConfig::nu_svc(0.5, KernelSpec::rbf(1.0));
        let r = grid_search(&d, &d, &base, &grid, Objective::MinorityF1).unwrap();
        assert_eq!(r.table[1].status, CellStatus::Infeasible);
        assert_eq!(r.table[1].validation_score, None);
        assert_eq!(r.best_params.nu, Some(0.1));
    }

    #[test]
    fn ties_go_to_first_cell() {
        let d = blobs(6, 6);
        let grid = ParamGrid {
            c: vec![1.0, 10.0],
            gamma: vec![0.5],
            nu: vec![],
        };
        let base = TrainConfig::soft_margin(1.0, KernelSpec::rbf(1.0));
        let r = grid_search(&d, &d, &base, &grid, Objective::Accuracy).unwrap();
        assert_eq!(r.table[0].validation_score, r.table[1].validation_score);
        assert_eq!(r.best_params.c, 1.0);
    }

    #[test]
    fn all_failed_is_an_error() {
        let d = blobs(3, 12);
        let grid = ParamGrid {
            c: vec![],
            gamma: vec![0.5],
            nu: vec![0.9, 1.0],
        };
        let base = TrainConfig::nu_svc(0.5, KernelSpec::rbf(1.0));
        assert!(matches!(
            grid_search(&d, &d, &base, &grid, Objective::Accuracy),
            Err(Error::AllCellsFailed)
        ));
    }

    #[test]
    fn linear_kernel_has_one_gamma_column() {
        let grid = ParamGrid::<f64>::default();
        let cells = grid.cells(&TrainConfig::soft_margin(1.0, KernelSpec::linear())).unwrap();
        assert_eq!(cells.len(), 4);
    }
}
