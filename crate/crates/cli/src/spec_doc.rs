//! The field-spec JSON format.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "parameters": 1,
//!   "base_point": [1.0, 0.0],
//!   "truncation": 8,
//!   "radius": 0.5,
//!   "fields": [
//!     { "name": "X1", "degree": [1], "components": [[{ "coeff": 1.0, "exponents": [0, 0] }], []] }
//!   ]
//! }
//! ```
//!
//! Components are polynomials in absolute coordinates with plain
//! coefficients (`coeff · x^exponents`).

use std::path::Path;

use adchart_core::fields::{AnalyticVectorField, FieldSystem, WeightedField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpecDocument {
    pub dimension: usize,
    #[serde(default = "one")]
    pub parameters: usize,
    pub base_point: Vec<f64>,
    pub truncation: usize,
    pub radius: f64,
    pub fields: Vec<FieldSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub degree: Vec<u32>,
    /// One list of terms per coordinate.
    pub components: Vec<Vec<TermSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<FieldSpecDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: FieldSpecDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    doc.validate()?;
    Ok(doc)
}

/// Pretty JSON for a document; `parse_spec(&emit_spec(d)) == d`.
pub fn emit_spec(doc: &FieldSpecDocument) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

impl FieldSpecDocument {
    pub fn validate(&self) -> Result<()> {
        let n = self.dimension;
        let bad = |msg: String| Err(CliError::Invalid(msg));
        if n == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.parameters == 0 {
            return bad("parameters must be at least 1".into());
        }
        if self.base_point.len() != n {
            return bad(format!("base_point has {} entries for dimension {n}", self.base_point.len()));
        }
        if self.base_point.iter().any(|v| !v.is_finite()) {
            return bad("base_point has non-finite entries".into());
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive and finite, got {}", self.radius));
        }
        if self.fields.is_empty() {
            return bad("at least one field is required".into());
        }
        for (j, f) in self.fields.iter().enumerate() {
            if f.degree.len() != self.parameters {
                return bad(format!(
                    "fields[{j}] ({}): degree has {} entries for {} parameters",
                    f.name,
                    f.degree.len(),
                    self.parameters
                ));
            }
            if f.degree.iter().all(|&d| d == 0) {
                return bad(format!("fields[{j}] ({}): degree must be nonzero", f.name));
            }
            if f.components.len() != n {
                return bad(format!("fields[{j}] ({}): {} components for dimension {n}", f.name, f.components.len()));
            }
            for (i, comp) in f.components.iter().enumerate() {
                for (k, t) in comp.iter().enumerate() {
                    if t.exponents.len() != n {
                        return bad(format!(
                            "fields[{j}].components[{i}][{k}]: exponents have length {} in dimension {n}",
                            t.exponents.len()
                        ));
                    }
                    if !t.coeff.is_finite() {
                        return bad(format!("fields[{j}].components[{i}][{k}]: non-finite coefficient"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest polynomial degree of any component.
    pub fn polynomial_degree(&self) -> usize {
        self.fields
            .iter()
            .flat_map(|f| f.components.iter().flatten())
            .map(|t| t.exponents.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Fields as series around `center`, truncated at `truncation`.
    pub fn weighted_fields(&self, center: &[f64], truncation: usize) -> Result<Vec<WeightedField>> {
        if center.len() != self.dimension {
            return Err(CliError::Arguments(format!(
                "center has {} entries for dimension {}",
                center.len(),
                self.dimension
            )));
        }
        self.fields
            .iter()
            .map(|f| {
                let comps: Vec<Vec<(f64, Vec<u32>)>> =
                    f.components.iter().map(|c| c.iter().map(|t| (t.coeff, t.exponents.clone())).collect()).collect();
                let field =
                    AnalyticVectorField::from_polynomial(f.name.clone(), center, truncation, self.radius, &comps)?;
                Ok(WeightedField::new(field, f.degree.clone())?)
            })
            .collect()
    }

    pub fn system(&self, center: &[f64], truncation: usize) -> Result<FieldSystem> {
        Ok(FieldSystem::new(self.weighted_fields(center, truncation)?)?)
    }

    /// Document for a family of (polynomial) fields, read back in absolute coordinates.
    pub fn from_system(system: &FieldSystem, base_point: &[f64], truncation: usize) -> Result<Self> {
        let n = system.ambient_dim();
        let origin = vec![0.0; n];
        let fields = system
            .fields()
            .iter()
            .map(|wf| {
                let at_origin = wf.field.recenter(&origin)?;
                let components = at_origin
                    .components()
                    .iter()
                    .map(|c| {
                        c.iter_taylor()
                            .filter(|(_, p)| *p != 0.0)
                            .map(|(exponents, coeff)| TermSpec { coeff, exponents })
                            .collect()
                    })
                    .collect();
                Ok(FieldSpec { name: wf.field.name.clone(), degree: wf.degree.clone(), components })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSpecDocument {
            dimension: n,
            parameters: system.nu(),
            base_point: base_point.to_vec(),
            truncation,
            radius: system.radius(),
            fields,
        })
    }
}

/// Specs shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("coordinate", include_str!("../specs/coordinate.json")),
    ("heisenberg", include_str!("../specs/heisenberg.json")),
    ("grushin", include_str!("../specs/grushin.json")),
    ("grushin_pair", include_str!("../specs/grushin_pair.json")),
    ("rotation", include_str!("../specs/rotation.json")),
];

/// Reads `--spec`: an existing file, or else the name of a bundled spec
/// (with or without `.json`).
pub fn load_spec_text(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source });
    }
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or(arg);
    let name = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| t.to_string()).ok_or_else(|| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::from(std::io::ErrorKind::NotFound),
    })
}
