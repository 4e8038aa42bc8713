//! Shape sensitivities of the objective with respect to both sub-domains,
//! volume-constraint terms, multiplier updates and the Helmholtz extension
//! that turns them into smooth normal velocities.
//!
//! Everything is evaluated elementwise, at the barycenters where the material
//! tensor lives. With the correctors fixed (the cell problems are
//! self-adjoint for this objective, so no adjoint solve is needed), the
//! element sensitivity
//!
//! `s_i(e) = Σ_rc G_rc (E^r + ε(χ^r)) : A*_i (E^c + ε(χ^c)) - h*_i`
//!
//! is exactly `∂L/∂h_i` on element `e`, with `G = ∂J/∂A^H`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::{CellSolutions, TensorField};
use crate::error::{Error, Result};
use crate::homogenize::{HomogenizedTensor, ObjectiveSpec};
use crate::material::{multiplier_sensitivity, PhaseSet};
use crate::mesh::UnitCellMesh;
use crate::sparse::{self, AssemblyPattern, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Lagrange multipliers updated by a fixed small step.
    #[default]
    Plain,
    /// Augmented Lagrangian `J - Σ ℓ C + Σ ½ β C²` with growing penalties.
    Augmented,
}

/// Step sizes of the multiplier and penalty updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSchedule {
    /// Multiplier step in plain mode.
    pub beta_step: f64,
    /// Initial penalty in augmented mode.
    pub beta0: f64,
    /// Penalty growth factor, applied every `penalty_every` updates.
    pub gamma: f64,
    pub penalty_every: usize,
    /// Upper bound on the penalties.
    pub beta_max: f64,
}

impl Default for MultiplierSchedule {
    fn default() -> Self {
        Self {
            beta_step: 0.1,
            beta0: 1.0,
            gamma: 1.5,
            penalty_every: 5,
            beta_max: 100.0,
        }
    }
}

impl MultiplierSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta_step >= 0.0
            && self.beta0 > 0.0
            && self.gamma >= 1.0
            && self.penalty_every >= 1
            && self.beta_max >= self.beta0
            && [self.beta_step, self.beta0, self.gamma, self.beta_max].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "multiplier schedule needs beta_step >= 0, beta0 > 0, gamma >= 1, \
                 penalty_every >= 1 and beta_max >= beta0, got {self:?}"
            )))
        }
    }
}

/// Multipliers, penalties and volume bookkeeping of the four phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintState {
    pub mode: ConstraintMode,
    pub multipliers: [f64; 4],
    pub penalties: [f64; 4],
    pub targets: [Option<f64>; 4],
    pub volumes: [f64; 4],
    /// Number of multiplier updates performed so far.
    pub updates: usize,
}

impl ConstraintState {
    pub fn new(mode: ConstraintMode, targets: [Option<f64>; 4], schedule: &MultiplierSchedule) -> Self {
        let beta = match mode {
            ConstraintMode::Plain => schedule.beta_step,
            ConstraintMode::Augmented => schedule.beta0,
        };
        Self {
            mode,
            multipliers: [0.0; 4],
            penalties: [beta; 4],
            targets,
            volumes: [0.0; 4],
            updates: 0,
        }
    }

    /// `C_k = V_k - V^t_k`, zero for unconstrained phases.
    pub fn violations(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.targets[k].map_or(0.0, |t| self.volumes[k] - t))
    }

    /// Multipliers seen by the shape derivative: `ℓ` in plain mode,
    /// `ℓ - β C` in augmented mode.
    pub fn effective_multipliers(&self) -> [f64; 4] {
        match self.mode {
            ConstraintMode::Plain => self.multipliers,
            ConstraintMode::Augmented => {
                let c = self.violations();
                std::array::from_fn(|k| self.multipliers[k] - self.penalties[k] * c[k])
            }
        }
    }

    /// The constraint part of the Lagrangian, `-Σ ℓ C (+ Σ ½ β C²)`.
    pub fn lagrangian_terms(&self) -> f64 {
        let c = self.violations();
        (0..4)
            .map(|k| {
                let penalty = match self.mode {
                    ConstraintMode::Plain => 0.0,
                    ConstraintMode::Augmented => 0.5 * self.penalties[k] * c[k] * c[k],
                };
                -self.multipliers[k] * c[k] + penalty
            })
            .sum()
    }

    /// `ℓ ← ℓ - β C` with the current volumes; in augmented mode the penalties
    /// also grow by `γ` every `penalty_every` updates, up to `beta_max`.
    pub fn update(&mut self, schedule: &MultiplierSchedule) {
        let c = self.violations();
        for k in 0..4 {
            let step = match self.mode {
                ConstraintMode::Plain => schedule.beta_step,
                ConstraintMode::Augmented => self.penalties[k],
            };
            self.multipliers[k] -= step * c[k];
        }
        self.updates += 1;
        if self.mode == ConstraintMode::Augmented && self.updates.is_multiple_of(schedule.penalty_every) {
            for b in &mut self.penalties {
                *b = (*b * schedule.gamma).min(schedule.beta_max);
            }
        }
    }
}

/// Elementwise phase volumes `V_k = Σ_e |e| ι_k(d1(e), d2(e))`.
pub fn phase_volumes(mesh: &UnitCellMesh, phases: &PhaseSet, phi: [&[f64]; 2]) -> [f64; 4] {
    let mut v = [0.0; 4];
    for (e, elem) in mesh.elements().iter().enumerate() {
        let iota = phases.phase_densities(mesh.barycentric(e, phi[0]), mesh.barycentric(e, phi[1]));
        for k in 0..4 {
            v[k] += elem.area * iota[k];
        }
    }
    v
}

/// Everything the sensitivities read from one solved state.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityInputs<'a> {
    pub mesh: &'a UnitCellMesh,
    pub phases: &'a PhaseSet,
    pub phi: [&'a [f64]; 2],
    pub field: &'a TensorField,
    pub solutions: &'a CellSolutions,
    pub homogenized: &'a HomogenizedTensor,
    pub objective: &'a ObjectiveSpec,
    /// Multipliers entering `h*`, e.g. [`ConstraintState::effective_multipliers`].
    pub multipliers: [f64; 4],
}

impl SensitivityInputs<'_> {
    fn check(&self) -> Result<()> {
        if self.solutions.is_for(self.field) {
            Ok(())
        } else {
            Err(Error::StaleSolution)
        }
    }

    /// `s_set(e)` for every element; `set` is 0 or 1.
    pub fn element_sensitivity(&self, set: usize) -> Result<Vec<f64>> {
        let g = self.objective.gradient(self.homogenized);
        self.weighted_sensitivity(set, &g, true)
    }

    /// `Σ_rc G_rc (E^r + ε(χ^r)) : A*_set (E^c + ε(χ^c))` for arbitrary
    /// weights `G`, without the multiplier term. With `G` the unit matrix at
    /// `(r, c)` this is the sensitivity of the single entry `A^H_rc`.
    pub fn tensor_sensitivity(&self, set: usize, g: &[[f64; 3]; 3]) -> Result<Vec<f64>> {
        self.weighted_sensitivity(set, g, false)
    }

    fn weighted_sensitivity(&self, set: usize, g: &[[f64; 3]; 3], with_multipliers: bool) -> Result<Vec<f64>> {
        self.check()?;
        let listed: Vec<(usize, usize, f64)> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter_map(|(r, c)| (g[r][c] != 0.0).then_some((r, c, g[r][c])))
            .collect();
        let other = 1 - set;
        let h = &self.phases.heaviside;
        Ok((0..self.mesh.elements().len())
            .into_par_iter()
            .with_min_len(512)
            .map(|e| {
                let h_other = h.value(self.mesh.barycentric(e, self.phi[other]));
                let a_star = self.phases.tensor_sensitivity(set, h_other);
                let mut strains = [[0.0; 3]; 3];
                let mut elastic = 0.0;
                if !listed.is_empty() && a_star.max_abs() > 0.0 {
                    for (case, s) in strains.iter_mut().enumerate() {
                        *s = self.solutions.total_strain(self.mesh, case, e);
                    }
                    for &(r, c, w) in &listed {
                        elastic += w * a_star.contract(&strains[r], &strains[c]);
                    }
                }
                if with_multipliers {
                    elastic - multiplier_sensitivity(set, h_other, &self.multipliers)
                } else {
                    elastic
                }
            })
            .collect())
    }

    /// The velocity integrand `g_set` recovered at the nodes by area-weighted
    /// averaging of the element values.
    pub fn velocity_integrand(&self, set: usize) -> Result<Vec<f64>> {
        Ok(self.mesh.element_to_nodal(&self.element_sensitivity(set)?))
    }
}

/// `-h*_set(d_other)` at the nodes: the constraint part of the velocity integrand.
pub fn constraint_terms(phases: &PhaseSet, set: usize, phi_other: &[f64], multipliers: &[f64; 4]) -> Vec<f64> {
    phi_other
        .iter()
        .map(|&d| -multiplier_sensitivity(set, phases.heaviside.value(d), multipliers))
        .collect()
}

/// Derivative of the discrete Lagrangian with respect to the nodal values of
/// `phi`, given the element sensitivities of that level set.
pub fn nodal_gradient(mesh: &UnitCellMesh, phases: &PhaseSet, phi: &[f64], sensitivity: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; mesh.periodic_dof_count()];
    for (e, elem) in mesh.elements().iter().enumerate() {
        let w = elem.area * sensitivity[e] * phases.heaviside.derivative(mesh.barycentric(e, phi)) / 3.0;
        for &dof in &elem.dofs {
            g[dof] += w;
        }
    }
    g
}

/// Load vector `∫ v w h'(d) |∇d|` for an elementwise-constant `v`: the interface
/// data of the extension problem, smeared over the band `|d| < ε`.
pub fn band_source(mesh: &UnitCellMesh, phases: &PhaseSet, d: &[f64], v: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.periodic_dof_count()];
    for (e, elem) in mesh.elements().iter().enumerate() {
        let [gx, gy] = mesh.gradient(e, d);
        let w = elem.area * v[e] * phases.heaviside.derivative(mesh.barycentric(e, d)) * gx.hypot(gy) / 3.0;
        if w != 0.0 {
            for &dof in &elem.dofs {
                f[dof] += w;
            }
        }
    }
    f
}

/// The periodic operator `α² K + M` of the extension problem, assembled once per
/// mesh and length scale.
#[derive(Debug, Clone)]
pub struct Extension {
    matrix: CsrMatrix,
    alpha: f64,
    tolerance: f64,
}

impl Extension {
    pub fn new(mesh: &UnitCellMesh, alpha: f64, tolerance: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("extension length alpha must be positive, got {alpha}")));
        }
        let dofs: Vec<[usize; 3]> = mesh.elements().iter().map(|e| e.dofs).collect();
        let pattern = AssemblyPattern::new(mesh.periodic_dof_count(), &dofs);
        let a2 = alpha * alpha;
        let matrix = pattern.assemble(|e| {
            let el = &mesh.elements()[e];
            let mut k = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let stiff = el.grads[a][0] * el.grads[b][0] + el.grads[a][1] * el.grads[b][1];
                    let mass = if a == b { 2.0 } else { 1.0 } / 12.0;
                    k[a][b] = el.area * (a2 * stiff + mass);
                }
            }
            k
        });
        Ok(Self { matrix, alpha, tolerance })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Solves `(α² K + M) θ = f`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut theta = vec![0.0; f.len()];
        let max_iter = 10 * f.len();
        sparse::pcg(&self.matrix, f, &mut theta, self.tolerance, max_iter, &|_: &mut [f64]| {})?;
        Ok(theta)
    }
}

/// Extends a nodal velocity `v_raw`, given on the band of the level set `d`,
/// to a smooth periodic field over the whole cell.
pub fn extend_velocity(
    mesh: &UnitCellMesh,
    phases: &PhaseSet,
    v_raw: &[f64],
    d: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let v_elem: Vec<f64> = (0..mesh.elements().len()).map(|e| mesh.barycentric(e, v_raw)).collect();
    let f = band_source(mesh, phases, d, &v_elem);
    Extension::new(mesh, alpha, 1e-10)?.solve(&f)
}
