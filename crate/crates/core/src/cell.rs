//! Periodic cell problems: find mean-zero periodic correctors `χ^{mℓ}` with
//! `∫ A (E^{mℓ} + ε(χ^{mℓ})) : ε(w) = 0` for every periodic `w`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{ElasticTensor4, PhaseSet};
use crate::mesh::{Element, UnitCellMesh};
use crate::sparse::{self, AssemblyPattern, CsrMatrix};

/// The three unit macroscopic strains `E^{11}, E^{22}, E^{12}` in
/// engineering-shear Voigt form.
pub const LOAD_CASES: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Elementwise-constant elasticity tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    tensors: Vec<ElasticTensor4>,
}

impl TensorField {
    pub fn new(tensors: Vec<ElasticTensor4>) -> Self {
        Self { tensors }
    }

    pub fn uniform(mesh: &UnitCellMesh, tensor: ElasticTensor4) -> Self {
        Self::new(vec![tensor; mesh.elements().len()])
    }

    /// Evaluates the smoothed four-phase tensor at each element barycenter.
    pub fn from_distances(mesh: &UnitCellMesh, phases: &PhaseSet, d1: &[f64], d2: &[f64]) -> Self {
        let tensors = (0..mesh.elements().len())
            .map(|e| phases.interpolate_tensor(mesh.barycentric(e, d1), mesh.barycentric(e, d2)))
            .collect();
        Self::new(tensors)
    }

    /// Builds a field from a function of the element index and barycenter.
    pub fn from_fn(mesh: &UnitCellMesh, f: impl Fn(usize, [f64; 2]) -> ElasticTensor4) -> Self {
        let tensors = mesh
            .elements()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let c = e.nodes.iter().fold([0.0; 2], |acc, &p| {
                    let q = mesh.nodes()[p];
                    [acc[0] + q[0] / 3.0, acc[1] + q[1] / 3.0]
                });
                f(k, c)
            })
            .collect();
        Self::new(tensors)
    }

    pub fn tensors(&self) -> &[ElasticTensor4] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Cell average `M_Y(A)` (all elements have equal area).
    pub fn mean(&self) -> ElasticTensor4 {
        let w = 1.0 / self.tensors.len() as f64;
        self.tensors
            .iter()
            .fold(ElasticTensor4::zero(), |acc, &t| acc + w * t)
    }

    pub fn validate(&self) -> Result<()> {
        match self.tensors.iter().position(|t| !t.is_positive_definite()) {
            Some(element) => Err(Error::IllPosedMaterial { element }),
            None => Ok(()),
        }
    }

    /// Hash of the exact bit patterns of every coefficient.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for t in &self.tensors {
            for row in t.voigt() {
                for v in row {
                    v.to_bits().hash(&mut h);
                }
            }
        }
        h.finish()
    }
}

/// Strain-displacement matrix of a P1 triangle: rows `(ε11, ε22, γ12)`,
/// columns `(u1, u2)` of each vertex.
pub fn strain_matrix(e: &Element) -> [[f64; 6]; 3] {
    let mut b = [[0.0; 6]; 3];
    for k in 0..3 {
        let [gx, gy] = e.grads[k];
        b[0][2 * k] = gx;
        b[1][2 * k + 1] = gy;
        b[2][2 * k] = gy;
        b[2][2 * k + 1] = gx;
    }
    b
}

fn element_dofs(e: &Element) -> [usize; 6] {
    let [a, b, c] = e.dofs;
    [2 * a, 2 * a + 1, 2 * b, 2 * b + 1, 2 * c, 2 * c + 1]
}

fn element_stiffness(e: &Element, c: &ElasticTensor4) -> [[f64; 6]; 6] {
    let b = strain_matrix(e);
    let cm = c.voigt();
    // CB, 3x6
    let mut cb = [[0.0; 6]; 3];
    for r in 0..3 {
        for j in 0..6 {
            cb[r][j] = cm[r][0] * b[0][j] + cm[r][1] * b[1][j] + cm[r][2] * b[2][j];
        }
    }
    let mut ke = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            ke[i][j] = e.area * (b[0][i] * cb[0][j] + b[1][i] * cb[1][j] + b[2][i] * cb[2][j]);
        }
    }
    ke
}

/// Symmetric strain of a displacement restricted to one element.
pub fn element_strain(e: &Element, u: &[f64]) -> [f64; 3] {
    let mut s = [0.0; 3];
    for k in 0..3 {
        let [gx, gy] = e.grads[k];
        let (ux, uy) = (u[2 * e.dofs[k]], u[2 * e.dofs[k] + 1]);
        s[0] += gx * ux;
        s[1] += gy * uy;
        s[2] += gy * ux + gx * uy;
    }
    s
}

/// The three correctors on the periodic DOFs, interleaved `(u1, u2)` per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSolutions {
    pub chi: [Vec<f64>; 3],
    pub residuals: [f64; 3],
    pub iterations: [usize; 3],
    /// Fingerprint of the tensor field these correctors solve.
    pub field_fingerprint: u64,
}

impl CellSolutions {
    /// `E^c + ε(χ^c)` on element `element`.
    pub fn total_strain(&self, mesh: &UnitCellMesh, case: usize, element: usize) -> [f64; 3] {
        let mut s = element_strain(&mesh.elements()[element], &self.chi[case]);
        for (a, b) in s.iter_mut().zip(&LOAD_CASES[case]) {
            *a += b;
        }
        s
    }

    /// Weighted cell mean `M_Y(χ^c)` of each displacement component.
    pub fn mean(&self, mesh: &UnitCellMesh, case: usize) -> [f64; 2] {
        weighted_mean(mesh, &self.chi[case])
    }

    pub fn is_for(&self, field: &TensorField) -> bool {
        self.field_fingerprint == field.fingerprint()
    }
}

fn weighted_mean(mesh: &UnitCellMesh, u: &[f64]) -> [f64; 2] {
    let mut m = [0.0; 2];
    for (k, w) in mesh.dof_weights().iter().enumerate() {
        m[0] += w * u[2 * k];
        m[1] += w * u[2 * k + 1];
    }
    m
}

fn remove_translation(u: &mut [f64]) {
    let nodes = u.len() / 2;
    let mut s = [0.0; 2];
    for k in 0..nodes {
        s[0] += u[2 * k];
        s[1] += u[2 * k + 1];
    }
    let m = [s[0] / nodes as f64, s[1] / nodes as f64];
    for k in 0..nodes {
        u[2 * k] -= m[0];
        u[2 * k + 1] -= m[1];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target relative residual of each CG solve.
    pub tolerance: f64,
    /// Iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iter_factor: 10,
        }
    }
}

/// Reusable assembly pattern and solver settings for one mesh.
#[derive(Debug, Clone)]
pub struct CellSolver {
    pattern: AssemblyPattern<6>,
    options: SolverOptions,
}

impl CellSolver {
    pub fn new(mesh: &UnitCellMesh, options: SolverOptions) -> Self {
        let dofs: Vec<[usize; 6]> = mesh.elements().iter().map(element_dofs).collect();
        Self {
            pattern: AssemblyPattern::new(2 * mesh.periodic_dof_count(), &dofs),
            options,
        }
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    pub fn assemble(&self, mesh: &UnitCellMesh, field: &TensorField) -> Result<CsrMatrix> {
        check_field(mesh, field)?;
        let elements = mesh.elements();
        let tensors = field.tensors();
        Ok(self
            .pattern
            .assemble(|e| element_stiffness(&elements[e], &tensors[e])))
    }

    /// Right-hand side `-∫ A E^c : ε(w)` and the sum of the element
    /// contribution norms, used as the scale for a vanishing load.
    fn load(mesh: &UnitCellMesh, field: &TensorField, case: usize) -> (Vec<f64>, f64) {
        let mut f = vec![0.0; 2 * mesh.periodic_dof_count()];
        let mut scale = 0.0;
        for (e, c) in mesh.elements().iter().zip(field.tensors()) {
            let b = strain_matrix(e);
            let stress = c.apply(&LOAD_CASES[case]);
            let dofs = element_dofs(e);
            for j in 0..6 {
                let v = -e.area * (b[0][j] * stress[0] + b[1][j] * stress[1] + b[2][j] * stress[2]);
                f[dofs[j]] += v;
                scale += v * v;
            }
        }
        (f, scale.sqrt())
    }

    /// Solves the three cell problems, warm-starting from `guess` when given.
    pub fn solve(
        &self,
        mesh: &UnitCellMesh,
        field: &TensorField,
        guess: Option<&CellSolutions>,
    ) -> Result<CellSolutions> {
        let k = self.assemble(mesh, field)?;
        let ndof = k.dim();
        let max_iter = self.options.max_iter_factor * ndof;
        let tol = self.options.tolerance;

        let results: Vec<Result<(Vec<f64>, f64, usize)>> = (0..3)
            .into_par_iter()
            .map(|case| {
                let (f, scale) = Self::load(mesh, field, case);
                if sparse::norm(&f) <= 1e-13 * scale {
                    return Ok((vec![0.0; ndof], 0.0, 0));
                }
                let mut x = match guess {
                    Some(g) => g.chi[case].clone(),
                    None => vec![0.0; ndof],
                };
                let out = sparse::pcg(&k, &f, &mut x, tol, max_iter, &remove_translation)?;
                let m = weighted_mean(mesh, &x);
                for node in 0..ndof / 2 {
                    x[2 * node] -= m[0];
                    x[2 * node + 1] -= m[1];
                }
                Ok((x, out.relative_residual, out.iterations))
            })
            .collect();

        let mut chi: [Vec<f64>; 3] = Default::default();
        let mut residuals = [0.0; 3];
        let mut iterations = [0; 3];
        for (case, r) in results.into_iter().enumerate() {
            let (x, res, it) = r?;
            chi[case] = x;
            residuals[case] = res;
            iterations[case] = it;
        }
        Ok(CellSolutions {
            chi,
            residuals,
            iterations,
            field_fingerprint: field.fingerprint(),
        })
    }
}

fn check_field(mesh: &UnitCellMesh, field: &TensorField) -> Result<()> {
    if field.len() != mesh.elements().len() {
        return Err(Error::Config(format!(
            "tensor field has {} entries for {} elements",
            field.len(),
            mesh.elements().len()
        )));
    }
    field.validate()
}

/// Assembles the periodic stiffness operator on `2 n^2` unknowns.
pub fn assemble_stiffness(mesh: &UnitCellMesh, field: &TensorField) -> Result<CsrMatrix> {
    CellSolver::new(mesh, SolverOptions::default()).assemble(mesh, field)
}

/// One-shot solve of the three cell problems with default options.
pub fn solve_cell_problems(mesh: &UnitCellMesh, field: &TensorField) -> Result<CellSolutions> {
    CellSolver::new(mesh, SolverOptions::default()).solve(mesh, field, None)
}
