//! Vector fields with power-series coefficients.
//!
//! A field `X = Σ a_i ∂/∂x_i` is stored as its component series `a_i`,
//! expanded around a common center in ambient coordinates. A [`FieldSystem`]
//! is a list of such fields with formal degrees and, optionally, structure
//! coefficients `c_{j,k}^l` with `[X_j, X_k] = Σ_l c_{j,k}^l X_l`.

mod closure;
mod structure;
mod wedge;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::series::TruncatedSeries;
use crate::{Error, Result};

pub use closure::{bracket_closure, closure_rank_check, ClosureOptions};
pub use structure::{
    cramer_reduce, fit_structure_coeffs, verify_cramer, CramerData, FitOptions, StructureCoefficients,
};
pub use wedge::{
    check_zeta, lie_derivative_of_wedge, numerical_rank, select_j0, wedge_minors, wedge_ratio, J0Selection, WedgeRatio,
    RANK_TOL,
};

/// `Σ_i a_i(x) ∂/∂x_i` with each `a_i` a series around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticVectorField {
    pub name: String,
    center: Vec<f64>,
    components: Vec<TruncatedSeries>,
}

impl AnalyticVectorField {
    pub fn new(name: impl Into<String>, center: Vec<f64>, components: Vec<TruncatedSeries>) -> Result<Self> {
        let n = center.len();
        if components.len() != n || n == 0 {
            return Err(Error::Structure(alloc::format!(
                "{} components for an ambient dimension of {}",
                components.len(),
                n
            )));
        }
        let first = &components[0];
        for c in &components {
            if c.dim() != n {
                return Err(Error::Structure("component series must use the ambient variables".to_string()));
            }
            if c.max_degree() != first.max_degree() {
                return Err(Error::Structure("components disagree on truncation".to_string()));
            }
            if (c.radius() - first.radius()).abs() > 1e-12 * first.radius() {
                return Err(Error::Structure("components disagree on radius".to_string()));
            }
        }
        Ok(AnalyticVectorField { name: name.into(), center, components })
    }

    /// Polynomial field given by terms `(coeff, exponents)` in absolute
    /// coordinates, expanded around `center`. Plain (not α!-normalised)
    /// coefficients: `coeff · x^exponents`.
    pub fn from_polynomial(
        name: impl Into<String>,
        center: &[f64],
        max_degree: usize,
        radius: f64,
        components: &[Vec<(f64, Vec<u32>)>],
    ) -> Result<Self> {
        let n = center.len();
        if components.len() != n {
            return Err(Error::Structure(alloc::format!(
                "{} components for an ambient dimension of {}",
                components.len(),
                n
            )));
        }
        let mut series = Vec::with_capacity(n);
        for comp in components {
            let deg = comp.iter().map(|(_, e)| e.iter().sum::<u32>() as usize).max().unwrap_or(0);
            let work = deg.max(max_degree);
            let at_origin =
                TruncatedSeries::from_taylor_terms(n, work, radius, comp.iter().map(|(c, e)| (e.as_slice(), *c)))?;
            series.push(at_origin.recenter(center)?.truncate(max_degree));
        }
        Self::new(name, center.to_vec(), series)
    }

    pub fn ambient_dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn max_degree(&self) -> usize {
        self.components[0].max_degree()
    }

    pub fn radius(&self) -> f64 {
        self.components[0].radius()
    }

    /// `X(x)` at an absolute point.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        self.components.iter().map(|c| c.eval_unchecked(&u)).collect()
    }

    /// Jacobian `∂a_i/∂x_k` at an absolute point.
    pub fn jacobian(&self, x: &[f64]) -> Mat {
        let n = self.ambient_dim();
        let u: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut m = Mat::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            for (k, g) in c.gradient(&u).into_iter().enumerate() {
                m.set(i, k, g);
            }
        }
        m
    }

    /// `X f = Σ a_k ∂_k f` for a series `f` in the ambient variables around the same center.
    pub fn apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if f.dim() != self.ambient_dim() {
            return Err(Error::Structure("function and field live in different dimensions".to_string()));
        }
        let m = f.max_degree().saturating_sub(1).min(self.max_degree());
        let mut acc = TruncatedSeries::zero(f.dim(), m, self.radius());
        for (k, a) in self.components.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let d = f.differentiate(k).with_radius(self.radius()).truncate(m);
            if d.is_zero() {
                continue;
            }
            acc.axpy(1.0, &a.truncate(m).mul(&d)?)?;
        }
        Ok(acc)
    }

    fn check_same_chart(&self, other: &Self) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::Structure("fields live in different dimensions".to_string()));
        }
        let off = self.center.iter().zip(&other.center).any(|(a, b)| (a - b).abs() > 1e-14 * (1.0 + a.abs()));
        if off {
            return Err(Error::Structure("fields are expanded around different centers".to_string()));
        }
        Ok(())
    }

    /// `[X, Y]`, truncated at `M − 1`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        self.check_same_chart(other)?;
        let n = self.ambient_dim();
        let m = self.max_degree().min(other.max_degree());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.apply(&other.components[i].truncate(m))?;
            let b = other.apply(&self.components[i].truncate(m))?;
            out.push(a.sub(&b)?);
        }
        Self::new(alloc::format!("[{},{}]", self.name, other.name), self.center.clone(), out)
    }

    /// `div X = Σ ∂_i a_i`, truncated at `M − 1`.
    pub fn divergence(&self) -> TruncatedSeries {
        let n = self.ambient_dim();
        let mut acc = TruncatedSeries::zero(n, self.max_degree().saturating_sub(1), self.radius());
        for (i, a) in self.components.iter().enumerate() {
            acc.axpy(1.0, &a.differentiate(i)).expect("same shape");
        }
        acc
    }

    /// Re-expand around a new center.
    pub fn recenter(&self, new_center: &[f64]) -> Result<Self> {
        let shift: Vec<f64> = new_center.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let components = self.components.iter().map(|c| c.recenter(&shift)).collect::<Result<Vec<_>>>()?;
        Self::new(self.name.clone(), new_center.to_vec(), components)
    }

    pub fn scale(&self, k: f64) -> Self {
        AnalyticVectorField {
            name: self.name.clone(),
            center: self.center.clone(),
            components: self.components.iter().map(|c| c.scale(k)).collect(),
        }
    }

    pub fn truncate(&self, m: usize) -> Self {
        AnalyticVectorField {
            name: self.name.clone(),
            center: self.center.clone(),
            components: self.components.iter().map(|c| c.truncate(m)).collect(),
        }
    }

    pub fn with_radius(&self, r: f64) -> Self {
        AnalyticVectorField {
            name: self.name.clone(),
            center: self.center.clone(),
            components: self.components.iter().map(|c| c.with_radius(r)).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs_coeff()))
    }

    /// Largest coefficient difference to another field on the same chart.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components.iter().zip(&other.components).fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    /// `a + k b` component-wise.
    pub fn axpy(&self, k: f64, other: &Self) -> Result<Self> {
        self.check_same_chart(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(&b.scale(k)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.name.clone(), self.center.clone(), components)
    }
}

/// A field with a formal degree `d ∈ ℕ^ν \ {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedField {
    pub field: AnalyticVectorField,
    pub degree: Vec<u32>,
}

impl WeightedField {
    pub fn new(field: AnalyticVectorField, degree: Vec<u32>) -> Result<Self> {
        if degree.is_empty() || degree.iter().all(|&d| d == 0) {
            return Err(Error::Domain(alloc::format!("formal degree of {} must be nonzero", field.name)));
        }
        Ok(WeightedField { field, degree })
    }

    /// `|d|_∞`.
    pub fn degree_max(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    /// `|d|_1`.
    pub fn degree_sum(&self) -> u32 {
        self.degree.iter().sum()
    }
}

/// Component-wise `a ≤ b`.
pub fn degree_le(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Component-wise `a + b`.
pub fn degree_add(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// A finite family of weighted fields on a common chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSystem {
    fields: Vec<WeightedField>,
    structure: Option<StructureCoefficients>,
}

impl FieldSystem {
    pub fn new(fields: Vec<WeightedField>) -> Result<Self> {
        let first =
            fields.first().ok_or_else(|| Error::Structure("a field system needs at least one field".to_string()))?;
        let nu = first.degree.len();
        for wf in &fields {
            first.field.check_same_chart(&wf.field)?;
            if wf.field.max_degree() != first.field.max_degree() {
                return Err(Error::Structure("fields disagree on truncation".to_string()));
            }
            if (wf.field.radius() - first.field.radius()).abs() > 1e-12 * first.field.radius() {
                return Err(Error::Structure("fields disagree on radius".to_string()));
            }
            if wf.degree.len() != nu {
                return Err(Error::Structure("formal degrees have different lengths".to_string()));
            }
        }
        Ok(FieldSystem { fields, structure: None })
    }

    /// Unit-degree system from plain fields.
    pub fn unweighted(fields: Vec<AnalyticVectorField>) -> Result<Self> {
        let fields = fields.into_iter().map(|f| WeightedField { field: f, degree: alloc::vec![1] }).collect();
        Self::new(fields)
    }

    pub fn with_structure(mut self, s: StructureCoefficients) -> Result<Self> {
        if s.q() != self.q() {
            return Err(Error::Structure("structure coefficients for a different number of fields".to_string()));
        }
        self.structure = Some(s);
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.fields.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.fields[0].field.ambient_dim()
    }

    pub fn nu(&self) -> usize {
        self.fields[0].degree.len()
    }

    pub fn center(&self) -> &[f64] {
        self.fields[0].field.center()
    }

    pub fn max_degree(&self) -> usize {
        self.fields[0].field.max_degree()
    }

    pub fn radius(&self) -> f64 {
        self.fields[0].field.radius()
    }

    pub fn fields(&self) -> &[WeightedField] {
        &self.fields
    }

    pub fn field(&self, j: usize) -> &AnalyticVectorField {
        &self.fields[j].field
    }

    pub fn degree(&self, j: usize) -> &[u32] {
        &self.fields[j].degree
    }

    pub fn structure(&self) -> Option<&StructureCoefficients> {
        self.structure.as_ref()
    }

    /// `N × q` matrix of field values at an absolute point.
    pub fn matrix_at(&self, x: &[f64]) -> Mat {
        let cols: Vec<Vec<f64>> = self.fields.iter().map(|f| f.field.evaluate(x)).collect();
        Mat::from_columns(&cols)
    }

    /// Same system expanded around a new center (structure coefficients too).
    pub fn recentered(&self, x: &[f64]) -> Result<Self> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Structure("point has the wrong dimension".to_string()));
        }
        let fields = self
            .fields
            .iter()
            .map(|wf| Ok(WeightedField { field: wf.field.recenter(x)?, degree: wf.degree.clone() }))
            .collect::<Result<Vec<_>>>()?;
        let shift: Vec<f64> = x.iter().zip(self.center()).map(|(a, c)| a - c).collect();
        let structure = match &self.structure {
            Some(s) => Some(s.recentered(&shift)?),
            None => None,
        };
        Ok(FieldSystem { fields, structure })
    }

    /// Field `j` multiplied by `factors[j]`; structure coefficients follow
    /// `c_{j,k}^l ↦ s_j s_k / s_l · c_{j,k}^l`.
    pub fn scaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.q() {
            return Err(Error::Structure("one scale factor per field is required".to_string()));
        }
        let fields = self
            .fields
            .iter()
            .zip(factors)
            .map(|(wf, &s)| WeightedField { field: wf.field.scale(s), degree: wf.degree.clone() })
            .collect();
        let structure = self.structure.as_ref().map(|s| s.rescaled(factors));
        Ok(FieldSystem { fields, structure })
    }

    pub fn truncate(&self, m: usize) -> Self {
        FieldSystem {
            fields: self
                .fields
                .iter()
                .map(|wf| WeightedField { field: wf.field.truncate(m), degree: wf.degree.clone() })
                .collect(),
            structure: self.structure.as_ref().map(|s| s.truncate(m)),
        }
    }

    /// Sub-family on the given field indices (structure coefficients are dropped).
    pub fn subsystem(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&j| self.fields[j].clone()).collect())
    }
}

#[cfg(test)]
mod tests;
