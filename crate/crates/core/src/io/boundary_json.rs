//! Boundary files: `{"format":"lsdf.boundary/1","attribute":...,"space":...,
//! "dim":...,"normal":[...],"bias":...,"lambda":...|null,"metrics":{...}|null}`.
//!
//! Writers may add a `provenance` object; readers ignore it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AccuracyReport, Boundary, Space};

pub const BOUNDARY_FORMAT: &str = "lsdf.boundary/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFile {
    pub format: String,
    pub attribute: String,
    pub space: Space,
    pub dim: usize,
    pub normal: Vec<f64>,
    pub bias: f64,
    pub lambda: Option<f64>,
    pub metrics: Option<AccuracyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl From<&Boundary> for BoundaryFile {
    fn from(b: &Boundary) -> Self {
        Self {
            format: BOUNDARY_FORMAT.to_string(),
            attribute: b.attribute().to_string(),
            space: b.space(),
            dim: b.dim(),
            normal: b.normal().to_vec(),
            bias: b.bias(),
            lambda: b.lambda(),
            metrics: b.metrics().cloned(),
            provenance: None,
        }
    }
}

impl TryFrom<BoundaryFile> for Boundary {
    type Error = Error;

    fn try_from(f: BoundaryFile) -> Result<Self> {
        if f.format != BOUNDARY_FORMAT {
            return Err(Error::validation(format!(
                "unsupported boundary format '{}', expected '{BOUNDARY_FORMAT}'",
                f.format
            )));
        }
        if f.normal.len() != f.dim {
            return Err(Error::DimMismatch { expected: f.dim, actual: f.normal.len() });
        }
        Boundary::from_unit(f.attribute, f.space, f.normal)?
            .with_bias(f.bias)?
            .with_lambda(f.lambda)?
            .with_metrics(f.metrics)
    }
}

pub fn boundary_to_json(b: &Boundary, provenance: Option<serde_json::Value>) -> Result<String> {
    let mut file = BoundaryFile::from(b);
    file.provenance = provenance;
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn boundary_from_json(text: &str) -> Result<Boundary> {
    let file: BoundaryFile = serde_json::from_str(text)?;
    Boundary::try_from(file)
}

pub fn write_boundary_file(
    path: impl AsRef<Path>,
    b: &Boundary,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let mut text = boundary_to_json(b, provenance)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_boundary_file(path: impl AsRef<Path>) -> Result<Boundary> {
    boundary_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_every_field() {
        let b = Boundary::new("eyeglasses", Space::W, vec![0.3, -0.4, 1.2])
            .unwrap()
            .with_bias(-0.01)
            .unwrap()
            .with_lambda(Some(2.5))
            .unwrap()
            .with_metrics(Some(AccuracyReport {
                val_accuracy: 0.97,
                full_accuracy: Some(0.8),
                train_accuracy: Some(1.0),
                n_train: 14,
                n_val: 6,
                n_full: Some(80),
            }))
            .unwrap();
        let json = boundary_to_json(&b, Some(serde_json::json!({"seed": 3}))).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["format"], BOUNDARY_FORMAT);
        assert_eq!(value["space"], "W");
        assert_eq!(value["dim"], 3);
        assert_eq!(boundary_from_json(&json).unwrap(), b);
    }

    #[test]
    fn null_lambda_and_metrics() {
        let text = r#"{"format":"lsdf.boundary/1","attribute":"pose","space":"Z","dim":2,
            "normal":[1.0,0.0],"bias":0.0,"lambda":null,"metrics":null}"#;
        let b = boundary_from_json(text).unwrap();
        assert_eq!(b.lambda(), None);
        assert!(b.metrics().is_none());
    }

    #[test]
    fn rejects_wrong_format_dim_and_norm() {
        let base = |format: &str, dim: usize, normal: &str| {
            format!(
                r#"{{"format":"{format}","attribute":"a","space":"Z","dim":{dim},"normal":{normal},"bias":0,"lambda":null,"metrics":null}}"#
            )
        };
        assert!(boundary_from_json(&base("other/1", 2, "[1,0]")).is_err());
        assert!(boundary_from_json(&base(BOUNDARY_FORMAT, 3, "[1,0]")).is_err());
        assert!(boundary_from_json(&base(BOUNDARY_FORMAT, 2, "[1,1]")).is_err());
    }
}
