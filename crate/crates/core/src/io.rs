//! JSON formats for matrices, POVMs, point measures, groups and representations.
//!
//! Complex entries are written as `[re, im]`; plain numbers are accepted on input.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::donaldson::PointMeasure;
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, UnitaryRep};
use crate::operator::{CMatrix, DensityOperator, HermitianOperator, C64};
use crate::povm::{FinitePovm, DEFAULT_VALIDATION_TOL};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum JsonComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl From<JsonComplex> for C64 {
    fn from(z: JsonComplex) -> Self {
        match z {
            JsonComplex::Real(x) => C64::new(x, 0.0),
            JsonComplex::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for JsonComplex {
    fn from(z: C64) -> Self {
        JsonComplex::Pair([z.re, z.im])
    }
}

/// Row-major square matrix.
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

pub fn matrix_from_json(m: &JsonMatrix) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect();
    let out = CMatrix::from_rows(&rows)?;
    out.check_finite()?;
    Ok(out)
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    m.rows().into_iter().map(|r| r.into_iter().map(Into::into).collect()).collect()
}

fn vector_from_json(v: &[JsonComplex]) -> Vec<C64> {
    v.iter().map(|&z| z.into()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub points: Vec<String>,
    pub weights: Vec<f64>,
    pub states: Vec<JsonMatrix>,
}

impl PovmFile {
    pub fn from_povm(povm: &FinitePovm) -> Self {
        PovmFile {
            dim: povm.dim(),
            points: povm.labels().to_vec(),
            weights: povm.weights().to_vec(),
            states: povm.states().iter().map(|s| matrix_to_json(s.operator().matrix())).collect(),
        }
    }

    /// Builds the POVM; with `force` only structural checks run.
    pub fn into_povm(self, force: bool, tol: f64) -> Result<FinitePovm> {
        if self.states.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                found: self.states.len(),
            });
        }
        let states = self
            .states
            .iter()
            .map(|m| {
                let m = matrix_from_json(m)?;
                if m.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: m.dim(),
                    });
                }
                DensityOperator::new(HermitianOperator::new(m)?)
            })
            .collect::<Result<Vec<_>>>()?;
        if force {
            FinitePovm::unvalidated(self.points, states, self.weights)
        } else {
            FinitePovm::with_tolerance(self.points, states, self.weights, tol)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointMeasureFile {
    pub dim: usize,
    pub points: Vec<Vec<JsonComplex>>,
    pub masses: Vec<f64>,
}

impl PointMeasureFile {
    pub fn from_measure(nu: &PointMeasure) -> Self {
        PointMeasureFile {
            dim: nu.dim(),
            points: nu.points().iter().map(|z| z.iter().map(|&c| c.into()).collect()).collect(),
            masses: nu.masses().to_vec(),
        }
    }

    pub fn into_measure(self) -> Result<PointMeasure> {
        let points = self.points.iter().map(|z| vector_from_json(z)).collect();
        PointMeasure::new(self.dim, points, self.masses)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupFile {
    pub order: usize,
    pub mult: Vec<Vec<usize>>,
    /// Conjugacy classes; computed from the table when omitted.
    #[serde(default)]
    pub classes: Vec<Vec<usize>>,
}

impl GroupFile {
    pub fn from_group(g: &FiniteGroup) -> Self {
        GroupFile {
            order: g.order(),
            mult: g.mult_table().to_vec(),
            classes: g.classes().to_vec(),
        }
    }

    pub fn into_group(self) -> Result<FiniteGroup> {
        if self.mult.len() != self.order {
            return Err(Error::LengthMismatch {
                expected: self.order,
                found: self.mult.len(),
            });
        }
        if self.classes.is_empty() {
            FiniteGroup::new(self.mult, None)
        } else {
            FiniteGroup::with_classes(self.mult, &self.classes)
        }
    }
}

/// A representation file is the list of matrices `ρ(s)` in element order.
pub type RepFile = Vec<JsonMatrix>;

pub fn rep_from_json(group: &FiniteGroup, file: &RepFile) -> Result<UnitaryRep> {
    let matrices = file.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    UnitaryRep::new(group, matrices)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Loads a POVM file, refusing one that fails validation unless `force` is set.
pub fn load_povm(path: &Path, force: bool) -> Result<FinitePovm> {
    load_povm_with_tolerance(path, force, DEFAULT_VALIDATION_TOL)
}

pub fn load_povm_with_tolerance(path: &Path, force: bool, tol: f64) -> Result<FinitePovm> {
    read_json::<PovmFile>(path)?.into_povm(force, tol)
}

pub fn load_point_measure(path: &Path) -> Result<PointMeasure> {
    read_json::<PointMeasureFile>(path)?.into_measure()
}
