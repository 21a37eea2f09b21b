//! Box-Jenkins identification of the transmission path between two sensors.

mod metrics;
mod model;
mod pem;
mod poly;

use std::path::Path;

pub use metrics::{nrmse_fit, rms, rmse};
pub use model::{linear_frequency_grid, BoxJenkinsModel, GainPoint, PredictionTrace};
pub use pem::{fit_bj, order_sweep, FitOptions, FitReport, Orders, SweepEntry};
pub use poly::{convolve, Polynomial};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model file: orders, the full-precision model and the fit it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub orders: Orders,
    pub model: BoxJenkinsModel,
    pub fit: Option<FitReport>,
}

impl ModelFile {
    pub fn new(model: BoxJenkinsModel, fit: Option<FitReport>) -> Self {
        ModelFile {
            orders: Orders {
                nb: model.b.coeffs.len(),
                na: model.a.degree(),
                nc: model.c.degree(),
                nd: model.d.degree(),
            },
            model,
            fit,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        crate::io::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Context {
            context: path.display().to_string(),
            source: Box::new(Error::Parse {
                line: e.line(),
                message: e.to_string(),
            }),
        })?;
        f.model.validate()?;
        Ok(f)
    }
}

impl BoxJenkinsModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: BoxJenkinsModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::excessive_precision)]
    fn json_roundtrip_is_exact() {
        let m = BoxJenkinsModel::new(
            vec![0.1 + 0.2, std::f64::consts::PI, -1e-300],
            vec![1.0, -0.123456789012345678],
            vec![1.0, 1.0 / 3.0],
            vec![1.0, -2.0 / 7.0],
            2,
            400.0,
        )
        .unwrap();
        let back = BoxJenkinsModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let u: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(back.simulate(&u).unwrap(), m.simulate(&u).unwrap());
    }

    #[test]
    fn model_file_roundtrip() {
        let m = BoxJenkinsModel::new(vec![0.25, -1.0 / 7.0], vec![1.0, -0.5], vec![1.0], vec![1.0, 0.1], 1, 400.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let f = ModelFile::new(m, None);
        assert_eq!(f.orders, Orders { nb: 2, na: 1, nc: 0, nd: 1 });
        f.save(&p).unwrap();
        assert_eq!(ModelFile::load(&p).unwrap(), f);
    }

    #[test]
    fn rejects_non_monic_json() {
        let text = r#"{"b":{"coeffs":[1.0],"monic":false},"a":{"coeffs":[2.0],"monic":true},
            "c":{"coeffs":[1.0],"monic":true},"d":{"coeffs":[1.0],"monic":true},"input_delay":1,"rate_hz":400.0}"#;
        assert!(BoxJenkinsModel::from_json(text).is_err());
    }
}
