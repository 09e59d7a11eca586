//! JSON model files.
//!
//! ```json
//! {"dim": 2,
//!  "operators": {"U1": [["0/1,0/1,1/2,0/1", "0/1,0/1,1/2,0/1"],
//!                       ["0/1,0/1,1/2,0/1", "0/1,0/1,-1/2,0/1"]]},
//!  "marked": ["1", "2"],
//!  "constants": {"a": ["1/1,0/1,0/1,0/1", "0/1,0/1,0/1,0/1"]}}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelError};
use crate::numeric::{CMatrix, FieldScalar};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    #[serde(default)]
    operators: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marked: Option<Vec<String>>,
    #[serde(default)]
    constants: BTreeMap<String, Vec<String>>,
}

fn scalar(s: &str, ctx: &str) -> Result<FieldScalar, ModelError> {
    FieldScalar::decode(s.trim()).map_err(|e| ModelError::Format(format!("{ctx}: {e}")))
}

pub fn model_from_json(text: &str) -> Result<Model, ModelError> {
    let f: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    let mut model = Model::new(f.dim);
    for (name, rows) in f.operators {
        let mut data = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let parsed: Result<Vec<_>, _> = row
                .iter()
                .enumerate()
                .map(|(j, s)| scalar(s, &format!("operator {name} cell ({}, {})", i + 1, j + 1)))
                .collect();
            data.push(parsed?);
        }
        let m = CMatrix::from_rows(data).map_err(|e| ModelError::Format(format!("operator {name}: {e}")))?;
        model.operators.insert(name, m);
    }
    for (name, entries) in f.constants {
        let v: Result<Vec<_>, _> = entries
            .iter()
            .enumerate()
            .map(|(j, s)| scalar(s, &format!("constant {name} entry {}", j + 1)))
            .collect();
        model.constants.insert(name, v?);
    }
    model.marked = f.marked;
    model.validate()?;
    Ok(model)
}

pub fn model_to_json(model: &Model) -> String {
    let f = ModelFile {
        dim: model.dim,
        operators: model
            .operators
            .iter()
            .map(|(k, m)| (k.clone(), m.row_vecs().iter().map(|r| r.iter().map(|x| x.encode()).collect()).collect()))
            .collect(),
        marked: model.marked.clone(),
        constants: model.constants.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| x.encode()).collect())).collect(),
    };
    serde_json::to_string_pretty(&f).expect("serializable")
}

pub fn load_model(path: &Path) -> Result<Model, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Format(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}

pub fn save_model(model: &Model, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, model_to_json(model)).map_err(|e| ModelError::Format(format!("{}: {e}", path.display())))
}
