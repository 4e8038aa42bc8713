//! Oracles for the forward solver and the shape gradient.
//!
//! * [`laminate_tensor`]: closed-form effective tensor of a rank-1 laminate,
//!   compared against the finite-element solve of the same layered cell.
//! * [`gradient_check`]: central finite differences of the Lagrangian along
//!   smooth random normal perturbations of both level sets, compared against
//!   the sensitivity-based prediction built from primal solutions only.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cell::{CellSolver, SolverOptions, TensorField};
use crate::config::Config;
use crate::error::Result;
use crate::gradient::{nodal_gradient, phase_volumes, ConstraintMode, ConstraintState, SensitivityInputs};
use crate::homogenize::{homogenized_tensor, HomogenizedTensor};
use crate::levelset::{central_gradient_norm, init_pattern, reinitialize_pair, MultiLevelSet, PatternSpec};
use crate::material::ElasticTensor4;
use crate::mesh::UnitCellMesh;
use crate::optimizer::Problem;

/// Effective tensor of layers of `a` (volume fraction `fraction`) and `b`
/// stacked along `x1`, so that the material depends on `x1` only.
///
/// The traction components `σ11, σ12` and the in-layer strain `ε22` are
/// continuous across the layers; eliminating the jumping strains gives
/// harmonic means for the normal terms and arithmetic means for the rest.
/// Phases must not couple normal and shear components.
pub fn laminate_tensor(a: &ElasticTensor4, b: &ElasticTensor4, fraction: f64) -> [[f64; 3]; 3] {
    let avg = |f: &dyn Fn(&[[f64; 3]; 3]) -> f64| fraction * f(a.voigt()) + (1.0 - fraction) * f(b.voigt());
    let c11 = 1.0 / avg(&|m| 1.0 / m[0][0]);
    let ratio = avg(&|m| m[0][1] / m[0][0]);
    let c12 = c11 * ratio;
    let c22 = avg(&|m| m[1][1] - m[0][1] * m[0][1] / m[0][0]) + c11 * ratio * ratio;
    let c66 = 1.0 / avg(&|m| 1.0 / m[2][2]);
    [[c11, c12, 0.0], [c12, c22, 0.0], [0.0, 0.0, c66]]
}

#[derive(Debug, Clone, Serialize)]
pub struct LaminateReport {
    pub n: usize,
    pub fem: [[f64; 3]; 3],
    pub oracle: [[f64; 3]; 3],
    /// Largest relative error over `A1111`, `A1122`, `A2222`.
    pub max_relative_error: f64,
}

/// Solves the sharp 50/50 laminate `x1 < 0 → a`, `x1 > 0 → b` on an `n x n`
/// mesh (interfaces fall on grid lines) and compares with [`laminate_tensor`].
pub fn laminate_check(n: usize, a: &ElasticTensor4, b: &ElasticTensor4, tolerance: f64) -> Result<LaminateReport> {
    let mesh = UnitCellMesh::new(n)?;
    let field = TensorField::from_fn(&mesh, |_, c| if c[0] < 0.0 { *a } else { *b });
    let solver = CellSolver::new(&mesh, SolverOptions { tolerance, ..Default::default() });
    let solutions = solver.solve(&mesh, &field, None)?;
    let fem = *homogenized_tensor(&mesh, &field, &solutions).tensor.voigt();
    let oracle = laminate_tensor(a, b, 0.5);
    let max_relative_error = [(0, 0), (0, 1), (1, 1)]
        .iter()
        .map(|&(r, c)| ((fem[r][c] - oracle[r][c]) / oracle[r][c]).abs())
        .fold(0.0, f64::max);
    Ok(LaminateReport { n, fem, oracle, max_relative_error })
}

/// One directional-derivative comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectionalCheck {
    pub predicted: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub n: usize,
    pub delta: f64,
    pub checks: Vec<DirectionalCheck>,
}

impl GradientReport {
    pub fn max_relative_error(&self) -> f64 {
        self.checks.iter().map(|c| c.relative_error).fold(0.0, f64::max)
    }
}

/// A smooth periodic field: a constant of random sign plus three random
/// low-frequency Fourier modes.
fn smooth_field(mesh: &UnitCellMesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let base = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.5..1.0);
    let modes: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-2i32..=2) as f64,
                rng.random_range(-2i32..=2) as f64,
                rng.random_range(-0.5..0.5),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    (0..mesh.periodic_dof_count())
        .map(|k| {
            let [x, y] = mesh.dof_coords(k);
            base + modes
                .iter()
                .map(|&(kx, ky, amp, phase)| amp * (2.0 * PI * (kx * x + ky * y) + phase).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Random two-level-set design: a few random circles per set, redistanced.
pub fn random_design(mesh: &UnitCellMesh, seed: u64, reinit_steps: usize) -> Result<MultiLevelSet> {
    let spec = |invert| PatternSpec::RandomCircles { count: 4, radius_min: 0.1, radius_max: 0.22, invert };
    let phi1 = init_pattern(&spec(true), mesh, seed)?;
    let phi2 = init_pattern(&spec(false), mesh, seed.wrapping_add(7919))?;
    let mut ls = MultiLevelSet::new(mesh.n(), phi1, phi2)?;
    reinitialize_pair(&mut ls, reinit_steps, mesh.dx());
    Ok(ls)
}

/// Finite-difference check of the shape gradient.
///
/// For each of `count` random designs and random multipliers, both level sets
/// are moved by `φ_i ← φ_i - δ v_i |∇φ_i|` (positive `v` grows `S_i`) with
/// smooth random `v_i`. The central difference of
/// `L = J - Σ ℓ_k (V_k - V^t_k)` is compared with the prediction from the
/// nodal gradient, which uses the element sensitivities and no adjoint.
pub fn gradient_check(config: &Config, count: usize, seed: u64, delta: f64) -> Result<GradientReport> {
    let problem = Problem::from_config(config)?;
    let mesh = problem.mesh();
    let phases = problem.phases();
    let (n, dx) = (mesh.n(), mesh.dx());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::with_capacity(count);

    for case in 0..count {
        let ls = random_design(mesh, seed.wrapping_mul(1000).wrapping_add(case as u64), config.numerics.reinit_steps)?;
        let multipliers: [f64; 4] = std::array::from_fn(|_| rng.random_range(-0.2..0.2));
        let v = [smooth_field(mesh, &mut rng), smooth_field(mesh, &mut rng)];

        let lagrangian = |ls: &MultiLevelSet| -> Result<f64> {
            let eval = problem.evaluate(ls, None)?;
            let mut c = ConstraintState::new(ConstraintMode::Plain, phases.volume_targets, &config.numerics.schedule());
            c.multipliers = multipliers;
            c.volumes = eval.volumes;
            Ok(eval.objective + c.lagrangian_terms())
        };

        let state = problem.evaluate(&ls, None)?;
        let inputs = SensitivityInputs {
            mesh,
            phases,
            phi: [&ls.phi[0], &ls.phi[1]],
            field: &state.field,
            solutions: &state.solutions,
            homogenized: &state.homogenized,
            objective: problem.objective(),
            multipliers,
        };
        let mut moves: [Vec<f64>; 2] = Default::default();
        let mut predicted = 0.0;
        for set in 0..2 {
            let norm = central_gradient_norm(&ls.phi[set], n, dx);
            moves[set] = v[set].iter().zip(&norm).map(|(v, g)| -v * g).collect();
            let g = nodal_gradient(mesh, phases, &ls.phi[set], &inputs.element_sensitivity(set)?);
            predicted += g.iter().zip(&moves[set]).map(|(a, b)| a * b).sum::<f64>();
        }

        let shifted = |sign: f64| -> MultiLevelSet {
            let mut out = ls.clone();
            for set in 0..2 {
                for (p, m) in out.phi[set].iter_mut().zip(&moves[set]) {
                    *p += sign * delta * m;
                }
            }
            out
        };
        let finite_difference = (lagrangian(&shifted(1.0))? - lagrangian(&shifted(-1.0))?) / (2.0 * delta);
        let relative_error = (finite_difference - predicted).abs() / predicted.abs().max(f64::MIN_POSITIVE);
        checks.push(DirectionalCheck { predicted, finite_difference, relative_error });
    }
    Ok(GradientReport { n, delta, checks })
}

/// Sum of `V_k` of a design, for the density identity.
pub fn volume_sum(problem: &Problem, ls: &MultiLevelSet) -> f64 {
    phase_volumes(problem.mesh(), problem.phases(), [&ls.phi[0], &ls.phi[1]]).iter().sum()
}

/// Major symmetry, positive definiteness and the Voigt/Reuss bounds
/// `x·R x ≤ x·A^H x ≤ x·M x` for the arithmetic mean `M` and the harmonic mean
/// `R` of the element tensors, tested on the Voigt basis and its pairwise sums.
pub fn bounds_violation(field: &TensorField, ah: &HomogenizedTensor) -> Option<String> {
    let m = ah.tensor.voigt();
    for r in 0..3 {
        for c in 0..3 {
            if (m[r][c] - m[c][r]).abs() > 1e-12 * ah.tensor.max_abs().max(1.0) {
                return Some(format!("asymmetric entry ({r},{c})"));
            }
        }
    }
    if !ah.tensor.is_positive_definite() {
        return Some("not positive definite".into());
    }
    let voigt = field.mean();
    let w = 1.0 / field.len() as f64;
    let mut compliance = ElasticTensor4::zero();
    for t in field.tensors() {
        compliance = compliance + w * t.inverse()?;
    }
    let reuss = compliance.inverse()?;
    let quad = |t: &ElasticTensor4, x: &[f64; 3]| t.contract(x, x);
    let probes = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    for x in &probes {
        let (lo, mid, hi) = (quad(&reuss, x), quad(&ah.tensor, x), quad(&voigt, x));
        let slack = 1e-9 * hi.abs();
        if mid < lo - slack || mid > hi + slack {
            return Some(format!("bound violated along {x:?}: {lo} <= {mid} <= {hi} fails"));
        }
    }
    None
}
