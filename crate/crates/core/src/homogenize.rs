//! Homogenized tensor, weighted objective and apparent Poisson ratio.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cell::{CellSolutions, TensorField};
use crate::error::{Error, Result};
use crate::material::ElasticTensor4;
use crate::mesh::UnitCellMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTensor {
    pub tensor: ElasticTensor4,
}

impl HomogenizedTensor {
    pub fn a1111(&self) -> f64 {
        self.tensor.get(1, 1, 1, 1)
    }
    pub fn a1122(&self) -> f64 {
        self.tensor.get(1, 1, 2, 2)
    }
    pub fn a2222(&self) -> f64 {
        self.tensor.get(2, 2, 2, 2)
    }
    pub fn a1212(&self) -> f64 {
        self.tensor.get(1, 2, 1, 2)
    }

    pub fn get(&self, index: TensorIndex) -> f64 {
        let (r, c) = index.voigt();
        self.tensor.voigt()[r][c]
    }
}

/// `A^H_{ij,mℓ} = ∫ A (E^{ij} + ε(χ^{ij})) : (E^{mℓ} + ε(χ^{mℓ}))`, both factors corrected.
pub fn homogenized_tensor(
    mesh: &UnitCellMesh,
    field: &TensorField,
    solutions: &CellSolutions,
) -> HomogenizedTensor {
    let mut m = [[0.0; 3]; 3];
    for (e, (elem, c)) in mesh.elements().iter().zip(field.tensors()).enumerate() {
        let strains = [0, 1, 2].map(|case| solutions.total_strain(mesh, case, e));
        for r in 0..3 {
            for s in 0..3 {
                m[r][s] += elem.area * c.contract(&strains[r], &strains[s]);
            }
        }
    }
    HomogenizedTensor {
        tensor: ElasticTensor4::from_voigt_full(m),
    }
}

/// The Galerkin-equivalent form `∫ A (E^{ij} + ε(χ^{ij})) : E^{mℓ}`, only one
/// factor corrected. Agrees with [`homogenized_tensor`] up to solver tolerance.
pub fn homogenized_tensor_unsymmetric(
    mesh: &UnitCellMesh,
    field: &TensorField,
    solutions: &CellSolutions,
) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for (e, (elem, c)) in mesh.elements().iter().zip(field.tensors()).enumerate() {
        for r in 0..3 {
            let stress = c.apply(&solutions.total_strain(mesh, r, e));
            for s in 0..3 {
                m[r][s] += elem.area * stress[s];
            }
        }
    }
    m
}

/// A component of a plane tensor, named by its four indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TensorIndex {
    I1111,
    I1122,
    I2222,
    I1212,
    I1112,
    I2212,
}

impl TensorIndex {
    pub fn voigt(self) -> (usize, usize) {
        match self {
            TensorIndex::I1111 => (0, 0),
            TensorIndex::I1122 => (0, 1),
            TensorIndex::I2222 => (1, 1),
            TensorIndex::I1212 => (2, 2),
            TensorIndex::I1112 => (0, 2),
            TensorIndex::I2212 => (1, 2),
        }
    }
}

impl FromStr for TensorIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "1111" => TensorIndex::I1111,
            "1122" | "2211" => TensorIndex::I1122,
            "2222" => TensorIndex::I2222,
            "1212" | "1221" | "2112" | "2121" => TensorIndex::I1212,
            "1112" | "1121" | "1211" | "2111" => TensorIndex::I1112,
            "2212" | "2221" | "1222" | "2122" => TensorIndex::I2212,
            other => return Err(Error::Config(format!("unknown tensor index \"{other}\""))),
        })
    }
}

impl fmt::Display for TensorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TensorIndex::I1111 => "1111",
            TensorIndex::I1122 => "1122",
            TensorIndex::I2222 => "2222",
            TensorIndex::I1212 => "1212",
            TensorIndex::I1112 => "1112",
            TensorIndex::I2212 => "2212",
        };
        f.write_str(s)
    }
}

impl TryFrom<String> for TensorIndex {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TensorIndex> for String {
    fn from(i: TensorIndex) -> String {
        i.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEntry {
    pub index: TensorIndex,
    pub target: f64,
    pub weight: f64,
}

/// Target entries and weights; unlisted entries carry weight zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    entries: Vec<ObjectiveEntry>,
}

impl ObjectiveSpec {
    pub fn new(entries: Vec<ObjectiveEntry>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.index) {
                return Err(Error::Config(format!("tensor index {} listed twice", e.index)));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::Config(format!("weight of {} must be >= 0", e.index)));
            }
            if !e.target.is_finite() {
                return Err(Error::Config(format!("target of {} must be finite", e.index)));
            }
        }
        if !entries.iter().any(|e| e.weight > 0.0) {
            return Err(Error::Config("at least one objective weight must be positive".into()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ObjectiveEntry] {
        &self.entries
    }

    /// `½ Σ η (A^H - A^t)²` over the listed entries, each counted once.
    pub fn evaluate(&self, ah: &HomogenizedTensor) -> f64 {
        0.5 * self
            .entries
            .iter()
            .map(|e| e.weight * (ah.get(e.index) - e.target).powi(2))
            .sum::<f64>()
    }

    /// `∂J/∂A^H` as a Voigt matrix with one non-zero per listed entry.
    pub fn gradient(&self, ah: &HomogenizedTensor) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for e in &self.entries {
            let (r, c) = e.index.voigt();
            g[r][c] += e.weight * (ah.get(e.index) - e.target);
        }
        g
    }
}

pub fn objective(ah: &HomogenizedTensor, spec: &ObjectiveSpec) -> f64 {
    spec.evaluate(ah)
}

/// `-S_2211 / S_1111` of the compliance `S = (A^H)^{-1}`.
pub fn apparent_poisson(ah: &HomogenizedTensor) -> Result<f64> {
    let s = ah.tensor.inverse().ok_or(Error::DegenerateTensor)?;
    Ok(-s.voigt()[1][0] / s.voigt()[0][0])
}
