//! Versioned JSON model documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, Scaler};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::svm::SvmModel;

pub const MODEL_FORMAT: &str = "bsvm-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ModelDocument<F> {
    pub format: String,
    pub version: u32,
    pub model: SvmModel<F>,
    /// Raw CSV layout the model was trained on.
    #[serde(default)]
    pub schema: Option<FeatureSchema>,
    /// Feature scaling applied before the kernel.
    #[serde(default)]
    pub scaler: Option<Scaler<F>>,
}

impl<F: Scalar> ModelDocument<F> {
    pub fn new(model: SvmModel<F>) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model,
            schema: None,
            scaler: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Schema(format!("not a model document: format {:?}", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                doc.version
            )));
        }
        if doc.model.support_vectors.nrows() != doc.model.sv_coefficients.len() {
            return Err(Error::Schema("support vector and coefficient counts differ".into()));
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::kernels::KernelSpec;
    use crate::svm::{fit, TrainConfig};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_preserves_decisions(
            pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 6..20),
            gamma in 0.1f64..2.0,
            probe in proptest::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 1..10),
        ) {
            let rows: Vec<[f64; 2]> = pts.iter().map(|&(a, b)| [a, b]).collect();
            let labels: Vec<i8> = rows.iter().enumerate().map(|(i, r)| if r[0] + 0.3 * r[1] > 0.0 || i == 0 { 1 } else { -1 }).collect();
            prop_assume!(labels.iter().any(|&y| y < 0));
            let d = Dataset::from_rows(&rows, labels).unwrap();
            let model = fit(&d, &TrainConfig::soft_margin(3.0, KernelSpec::rbf(gamma))).unwrap();
            let doc = ModelDocument::new(model.clone());
            let back = ModelDocument::<f64>::from_json(&doc.to_json().unwrap()).unwrap();
            for (a, b) in probe {
                let x = [a, b];
                let before = model.decision_function(&x).unwrap();
                let after = back.model.decision_function(&x).unwrap();
                prop_assert!((before - after).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        assert!(ModelDocument::<f64>::from_json("{}").is_err());
        let d = Dataset::<f64>::from_rows(&[[-1.0], [1.0]], vec![-1, 1]).unwrap();
        let model = fit(&d, &TrainConfig::soft_margin(1.0, KernelSpec::linear())).unwrap();
        let mut doc = ModelDocument::new(model);
        doc.version = 99;
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(ModelDocument::<f64>::from_json(&text), Err(Error::Schema(_))));
    }
}
