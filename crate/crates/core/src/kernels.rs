//! Kernel functions and Gram matrix construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

/// Kernel selection and its parameters.
///
/// * linear: `x·y`
/// * polynomial: `(gamma·x·y + coef0)^degree`
/// * rbf: `exp(-gamma·‖x − y‖²)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct KernelSpec<F> {
    pub kind: KernelKind,
    pub gamma: F,
    pub degree: u32,
    pub coef0: F,
}

impl<F: Scalar> KernelSpec<F> {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: F::one(),
            degree: 1,
            coef0: F::zero(),
        }
    }

    pub fn rbf(gamma: F) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
            degree: 1,
            coef0: F::zero(),
        }
    }

    pub fn polynomial(gamma: F, degree: u32, coef0: F) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma,
            degree,
            coef0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Linear => Ok(()),
            KernelKind::Rbf | KernelKind::Polynomial => {
                if !(self.gamma > F::zero()) || !self.gamma.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "kernel gamma must be positive, got {}",
                        self.gamma
                    )));
                }
                if self.kind == KernelKind::Polynomial && self.degree < 1 {
                    return Err(Error::InvalidInput(
                        "polynomial degree must be at least 1".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `K(x, y)`; rejects vectors of different length.
    pub fn eval(&self, x: &[F], y: &[F]) -> Result<F> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[F], y: &[F]) -> F {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Polynomial => {
                let base = self.gamma * dot(x, y) + self.coef0;
                base.powi(self.degree as i32)
            }
            KernelKind::Rbf => {
                let sq: F = x
                    .iter()
                    .zip(y)
                    .map(|(&a, &b)| {
                        let d = a - b;
                        d * d
                    })
                    .sum();
                (-self.gamma * sq).exp()
            }
        }
    }
}

#[inline]
fn dot<F: Scalar>(x: &[F], y: &[F]) -> F {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// `G[i][j] = K(x_i, x_j)` for every pair of rows of `x`.
///
/// Rows are computed in parallel; every entry is an independent kernel
/// evaluation so the result does not depend on the thread count.
pub fn gram_matrix<F: Scalar>(spec: &KernelSpec<F>, x: &Matrix<F>) -> Result<Matrix<F>> {
    spec.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset("gram matrix of zero rows".into()));
    }
    let mut data = vec![F::zero(); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let xi = x.row(i);
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = spec.eval_unchecked(xi, x.row(j));
        }
    });
    Matrix::from_vec(n, n, data)
}

/// `K[i][j] = K(a_i, b_j)`.
pub fn cross_kernel<F: Scalar>(spec: &KernelSpec<F>, a: &Matrix<F>, b: &Matrix<F>) -> Result<Matrix<F>> {
    spec.validate()?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: b.ncols(),
            found: a.ncols(),
        });
    }
    let m = b.nrows();
    let mut data = vec![F::zero(); a.nrows() * m];
    if m > 0 {
        data.par_chunks_mut(m).enumerate().for_each(|(i, out)| {
            let ai = a.row(i);
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = spec.eval_unchecked(ai, b.row(j));
            }
        });
    }
    Matrix::from_vec(a.nrows(), m, data)
}

/// The "scale" heuristic `1 / (d · Var(X))`, with the variance taken over
/// every entry of the matrix. Falls back to `1/d` for constant data.
pub fn default_gamma<F: Scalar>(x: &Matrix<F>) -> F {
    let d = x.ncols().max(1);
    let vals = x.as_slice();
    if vals.is_empty() {
        return F::one();
    }
    let n = F::from_count(vals.len());
    let mean = vals.iter().copied().sum::<F>() / n;
    let var = vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
    let d = F::from_count(d);
    if var > F::zero() {
        F::one() / (d * var)
    } else {
        F::one() / d
    }
}
