//! Versioned JSON containers for generator weights and measurement matrices.
//!
//! Generator:
//!
//! ```json
//! {"format": "dpr-generator", "version": 1, "dims": [k, n1, ..., nd],
//!  "scheme": "per_layer" | "unit", "weights": [[...], ...]}
//! ```
//!
//! `weights[i]` holds layer `i + 1` (shape `dims[i+1] × dims[i]`) flattened
//! row-major. Measurements:
//!
//! ```json
//! {"format": "dpr-measurements", "version": 1, "shape": [m, n],
//!  "scheme": "per_row" | "unit", "data": [...]}
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{GeneratorNetwork, VarianceScheme};
use crate::measurement::{MeasurementEnsemble, MeasurementScheme};

pub const FORMAT_VERSION: u32 = 1;
const GENERATOR_TAG: &str = "dpr-generator";
const MEASUREMENT_TAG: &str = "dpr-measurements";

#[derive(Serialize, Deserialize)]
struct GeneratorFile {
    format: String,
    version: u32,
    dims: Vec<usize>,
    scheme: VarianceScheme,
    weights: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MeasurementFile {
    format: String,
    version: u32,
    shape: [usize; 2],
    scheme: MeasurementScheme,
    data: Vec<f64>,
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Format(format!("expected format {expected:?}, found {format:?}")));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported {expected} version {version}")));
    }
    Ok(())
}

fn row_major(shape: (usize, usize), data: Vec<f64>) -> Result<Array2<f64>> {
    let len = data.len();
    Array2::from_shape_vec(shape, data)
        .map_err(|_| Error::Format(format!("{len} values do not fill a {}×{} matrix", shape.0, shape.1)))
}

pub fn generator_to_json(g: &GeneratorNetwork) -> Result<String> {
    let file = GeneratorFile {
        format: GENERATOR_TAG.into(),
        version: FORMAT_VERSION,
        dims: g.dims().to_vec(),
        scheme: g.scheme(),
        weights: g.weights().iter().map(|w| w.iter().copied().collect()).collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn generator_from_json(s: &str) -> Result<GeneratorNetwork> {
    let file: GeneratorFile = serde_json::from_str(s)?;
    check_header(&file.format, file.version, GENERATOR_TAG)?;
    if file.weights.len() + 1 != file.dims.len() {
        return Err(Error::Format(format!(
            "{} dims need {} weight arrays, found {}",
            file.dims.len(),
            file.dims.len().saturating_sub(1),
            file.weights.len()
        )));
    }
    let weights = file
        .weights
        .into_iter()
        .enumerate()
        .map(|(i, data)| row_major((file.dims[i + 1], file.dims[i]), data))
        .collect::<Result<Vec<_>>>()?;
    GeneratorNetwork::new(weights, file.scheme)
}

pub fn ensemble_to_json(e: &MeasurementEnsemble) -> Result<String> {
    let file = MeasurementFile {
        format: MEASUREMENT_TAG.into(),
        version: FORMAT_VERSION,
        shape: [e.m(), e.n()],
        scheme: e.scheme(),
        data: e.matrix().iter().copied().collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn ensemble_from_json(s: &str) -> Result<MeasurementEnsemble> {
    let file: MeasurementFile = serde_json::from_str(s)?;
    check_header(&file.format, file.version, MEASUREMENT_TAG)?;
    let a = row_major((file.shape[0], file.shape[1]), file.data)?;
    MeasurementEnsemble::from_matrix(a, file.scheme)
}

pub fn write_generator(g: &GeneratorNetwork, path: &Path) -> Result<()> {
    Ok(fs::write(path, generator_to_json(g)?)?)
}

pub fn read_generator(path: &Path) -> Result<GeneratorNetwork> {
    generator_from_json(&fs::read_to_string(path)?)
}

pub fn write_ensemble(e: &MeasurementEnsemble, path: &Path) -> Result<()> {
    Ok(fs::write(path, ensemble_to_json(e)?)?)
}

pub fn read_ensemble(path: &Path) -> Result<MeasurementEnsemble> {
    ensemble_from_json(&fs::read_to_string(path)?)
}
