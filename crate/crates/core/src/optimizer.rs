//! The outer descent loop: solve the cell problems, build and extend the two
//! velocities, line-search the Hamilton–Jacobi transport, update the
//! multipliers and periodically redistance.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::cell::{CellSolutions, CellSolver, SolverOptions, TensorField};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::gradient::{band_source, nodal_gradient, phase_volumes, ConstraintState, Extension, SensitivityInputs};
use crate::homogenize::{homogenized_tensor, HomogenizedTensor, ObjectiveSpec};
use crate::io::history::HistoryRecord;
use crate::levelset::{
    central_gradient_norm, cfl_timestep, reinitialize_pair, reinitialize_pair_outside_band, transport, upwind_gradient_norm, MultiLevelSet,
};
use crate::material::PhaseSet;
use crate::mesh::UnitCellMesh;
use crate::sparse::dot;

/// Normal velocities for both level sets.
type Velocity = [Vec<f64>; 2];

/// Tolerance of the check `Σ V_k = 1` performed on every evaluation.
const VOLUME_IDENTITY_TOL: f64 = 1e-10;

/// Consecutive failed line searches after which a run is flagged stagnated.
const STAGNATION_FAILURES: usize = 3;

/// Redistancing applied inside a line-search trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Redistance {
    Full,
    /// Everywhere except on the elements inside the interface band.
    OutsideBand,
    Skip,
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 1e-12 * scale) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Attempts at enlarging the objective share of a projected velocity.
const PROJECTION_ROUNDS: usize = 20;

/// The forward problem at one design: material field, correctors, `A^H`, `J`
/// and phase volumes.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub field: TensorField,
    pub solutions: CellSolutions,
    pub homogenized: HomogenizedTensor,
    pub objective: f64,
    pub volumes: [f64; 4],
}

/// Everything needed to resume a run. The material field is not stored; it is
/// a deterministic function of the level sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptState {
    pub levelsets: MultiLevelSet,
    pub constraints: ConstraintState,
    pub solutions: CellSolutions,
    pub homogenized: HomogenizedTensor,
    pub objective: f64,
    pub iteration: usize,
    /// Consecutive iterations whose line search found no decrease.
    pub failed_searches: usize,
    pub stagnated: bool,
}

impl OptState {
    pub fn volumes(&self) -> [f64; 4] {
        self.constraints.volumes
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn record(&self, dt: f64, line_search_trials: usize) -> HistoryRecord {
        let h = &self.homogenized;
        HistoryRecord {
            iteration: self.iteration,
            objective: self.objective,
            tensor: [h.a1111(), h.a1122(), h.a2222(), h.a1212()],
            volumes: self.constraints.volumes,
            multipliers: self.constraints.multipliers,
            dt,
            line_search_trials,
        }
    }
}

/// How an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Accepted time step; zero when no trial was accepted.
    pub dt: f64,
    /// Trials evaluated, the fallback included.
    pub trials: usize,
    pub accepted: bool,
    pub reinitialized: bool,
}

/// One record per accepted iteration, the initial state first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<HistoryRecord>,
}

impl RunHistory {
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].objective <= w[0].objective)
    }

    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }
}

/// A configured optimization problem with its reusable operators.
#[derive(Debug, Clone)]
pub struct Problem {
    config: Config,
    mesh: UnitCellMesh,
    phases: PhaseSet,
    objective: ObjectiveSpec,
    solver: CellSolver,
    extension: Extension,
}

impl Problem {
    pub fn from_config(config: &Config) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh()?;
        let phases = config.phase_set()?;
        let objective = config.objective_spec()?;
        let solver = CellSolver::new(
            &mesh,
            SolverOptions {
                tolerance: config.numerics.cg_tol,
                ..Default::default()
            },
        );
        let alpha = config.numerics.alpha_factor * mesh.dx();
        let extension = Extension::new(&mesh, alpha, config.numerics.extension_tol)?;
        Ok(Self {
            config: config.clone(),
            mesh,
            phases,
            objective,
            solver,
            extension,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn mesh(&self) -> &UnitCellMesh {
        &self.mesh
    }

    pub fn phases(&self) -> &PhaseSet {
        &self.phases
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    pub fn field(&self, levelsets: &MultiLevelSet) -> TensorField {
        TensorField::from_distances(&self.mesh, &self.phases, &levelsets.phi[0], &levelsets.phi[1])
    }

    /// Solves the forward problem, warm-starting the correctors from `guess`.
    pub fn evaluate(&self, levelsets: &MultiLevelSet, guess: Option<&CellSolutions>) -> Result<Evaluation> {
        if levelsets.n() != self.mesh.n() {
            return Err(Error::Config(format!(
                "level sets are {}x{} but the mesh is {}x{}",
                levelsets.n(),
                levelsets.n(),
                self.mesh.n(),
                self.mesh.n()
            )));
        }
        let field = self.field(levelsets);
        let solutions = self.solver.solve(&self.mesh, &field, guess)?;
        let homogenized = homogenized_tensor(&self.mesh, &field, &solutions);
        let objective = self.objective.evaluate(&homogenized);
        let volumes = phase_volumes(&self.mesh, &self.phases, [&levelsets.phi[0], &levelsets.phi[1]]);
        let total: f64 = volumes.iter().sum();
        debug_assert!((total - 1.0).abs() < VOLUME_IDENTITY_TOL, "phase volumes sum to {total}");
        Ok(Evaluation {
            field,
            solutions,
            homogenized,
            objective,
            volumes,
        })
    }

    /// Builds the level sets from the configured patterns, redistances them
    /// and evaluates the starting design.
    pub fn initial_state(&self) -> Result<OptState> {
        let init = &self.config.init;
        let mut levelsets = MultiLevelSet::from_patterns(&self.mesh, [&init.set1, &init.set2], self.config.seed)?;
        let skipped = reinitialize_pair(&mut levelsets, self.config.numerics.reinit_steps, self.mesh.dx());
        if !skipped.is_empty() {
            warn!("initial level set(s) {skipped:?} have a single sign; not redistanced");
        }
        self.state_from_levelsets(levelsets)
    }

    /// Evaluates a design given directly by its level sets, with fresh multipliers.
    pub fn state_from_levelsets(&self, levelsets: MultiLevelSet) -> Result<OptState> {
        let eval = self.evaluate(&levelsets, None)?;
        let mut constraints = ConstraintState::new(
            self.config.mode,
            self.phases.volume_targets,
            &self.config.numerics.schedule(),
        );
        constraints.volumes = eval.volumes;
        Ok(OptState {
            levelsets,
            constraints,
            solutions: eval.solutions,
            homogenized: eval.homogenized,
            objective: eval.objective,
            iteration: 0,
            failed_searches: 0,
            stagnated: false,
        })
    }

    /// The extended normal velocities of both level sets at `state`. Positive
    /// values grow the sub-domain `{φ < 0}`.
    ///
    /// The velocity is the sum of an objective part and a constraint part.
    /// With `constraint_projection`, the constraint part is first stripped of
    /// its first-order effect on every targeted tensor entry, so it moves the
    /// volumes while leaving `A^H` (and hence `J`) unchanged to first order.
    /// Then, if needed, the objective part is scaled up until the first-order
    /// decrease of the discrete `J` is at least that of the objective part alone.
    pub fn velocities(&self, state: &OptState) -> Result<[Vec<f64>; 2]> {
        Ok(self.directions(state)?.0)
    }

    /// The full velocity and its objective part.
    fn directions(&self, state: &OptState) -> Result<(Velocity, Velocity)> {
        let field = self.field(&state.levelsets);
        let phi = &state.levelsets.phi;
        let full = SensitivityInputs {
            mesh: &self.mesh,
            phases: &self.phases,
            phi: [&phi[0], &phi[1]],
            field: &field,
            solutions: &state.solutions,
            homogenized: &state.homogenized,
            objective: &self.objective,
            multipliers: state.constraints.effective_multipliers(),
        };
        let extend = |set: usize, s: &[f64]| self.extension.solve(&band_source(&self.mesh, &self.phases, &phi[set], s));

        let mut theta_j: [Vec<f64>; 2] = Default::default();
        let mut theta_c: [Vec<f64>; 2] = Default::default();
        let mut s_j: [Vec<f64>; 2] = Default::default();
        for set in 0..2 {
            s_j[set] = full.tensor_sensitivity(set, &self.objective.gradient(&state.homogenized))?;
            let s_c: Vec<f64> = full.element_sensitivity(set)?.iter().zip(&s_j[set]).map(|(a, b)| a - b).collect();
            theta_j[set] = extend(set, &s_j[set])?;
            theta_c[set] = extend(set, &s_c)?;
        }
        let combine = |lift: f64, theta_c: &[Vec<f64>; 2]| -> [Vec<f64>; 2] {
            std::array::from_fn(|set| {
                theta_j[set].iter().zip(&theta_c[set]).map(|(j, c)| (1.0 + lift) * j + c).collect()
            })
        };
        if !self.config.numerics.constraint_projection || theta_c.iter().flatten().all(|&v| v == 0.0) {
            return Ok((combine(0.0, &theta_c), theta_j));
        }
        let (n, dx) = (self.mesh.n(), self.mesh.dx());
        let nodal = |set: usize, s: &[f64]| nodal_gradient(&self.mesh, &self.phases, &phi[set], s);

        // First-order change of each targeted entry along θ: -Σ g_m |∇φ| θ.
        let norms: [Vec<f64>; 2] = std::array::from_fn(|set| central_gradient_norm(&phi[set], n, dx));
        let mut entry_grads = Vec::new();
        let mut entry_velocities = Vec::new();
        for entry in self.objective.entries() {
            let (r, c) = entry.index.voigt();
            let mut unit = [[0.0; 3]; 3];
            unit[r][c] = 1.0;
            let mut grads: [Vec<f64>; 2] = Default::default();
            let mut vels: [Vec<f64>; 2] = Default::default();
            for set in 0..2 {
                let s = full.tensor_sensitivity(set, &unit)?;
                grads[set] = nodal(set, &s).iter().zip(&norms[set]).map(|(g, w)| g * w).collect();
                vels[set] = extend(set, &s)?;
            }
            entry_grads.push(grads);
            entry_velocities.push(vels);
        }
        let pair = |a: &[Vec<f64>; 2], b: &[Vec<f64>; 2]| -> f64 { (0..2).map(|s| dot(&a[s], &b[s])).sum() };
        let gram: Vec<Vec<f64>> = entry_grads
            .iter()
            .map(|g| entry_velocities.iter().map(|v| pair(g, v)).collect())
            .collect();
        let rhs: Vec<f64> = entry_grads.iter().map(|g| pair(g, &theta_c)).collect();
        if let Some(coef) = solve_dense(gram, rhs) {
            for (c, v) in coef.iter().zip(&entry_velocities) {
                for set in 0..2 {
                    for (t, x) in theta_c[set].iter_mut().zip(&v[set]) {
                        *t -= c * x;
                    }
                }
            }
        }

        // Rate of decrease of the discrete J under `φ_t = -θ |∇φ|`, upwinded.
        let grad_j: [Vec<f64>; 2] = std::array::from_fn(|set| nodal(set, &s_j[set]));
        let descent = |theta: &[Vec<f64>; 2]| -> f64 {
            (0..2)
                .map(|set| {
                    let norm = upwind_gradient_norm(&phi[set], n, dx, &theta[set]);
                    (0..theta[set].len()).map(|p| grad_j[set][p] * norm[p] * theta[set][p]).sum::<f64>()
                })
                .sum()
        };
        let base = descent(&theta_j);
        if base <= 0.0 {
            return Ok((combine(0.0, &theta_c), theta_j));
        }
        let mut lift = (-descent(&theta_c) / base).max(0.0);
        for _ in 0..PROJECTION_ROUNDS {
            if descent(&combine(lift, &theta_c)) >= base {
                break;
            }
            lift = 2.0 * lift + 1.0;
        }
        Ok((combine(lift, &theta_c), theta_j))
    }

    fn reinit_due(&self, levelsets: &MultiLevelSet) -> bool {
        levelsets.since_reinit + 1 >= self.config.numerics.reinit_every
    }

    fn trial(
        &self,
        state: &OptState,
        v: &[Vec<f64>; 2],
        dt: f64,
        reinit: Redistance,
    ) -> Result<(MultiLevelSet, Evaluation)> {
        let (n, dx) = (self.mesh.n(), self.mesh.dx());
        let mut ls = state.levelsets.clone();
        for (phi, v) in ls.phi.iter_mut().zip(v) {
            *phi = transport(phi, v, dt, n, dx)?;
        }
        ls.since_reinit += 1;
        let steps = self.config.numerics.reinit_steps;
        let skipped = match reinit {
            Redistance::Full => reinitialize_pair(&mut ls, steps, dx),
            Redistance::OutsideBand => reinitialize_pair_outside_band(&mut ls, steps, &self.mesh, self.phases.eps()),
            Redistance::Skip => Vec::new(),
        };
        if !skipped.is_empty() {
            debug!("level set(s) {skipped:?} have a single sign; not redistanced");
        }
        let eval = self.evaluate(&ls, Some(&state.solutions))?;
        Ok((ls, eval))
    }

    /// Halves the step from the CFL bound of `v` until `J` does not increase,
    /// once per entry of `passes` (whether the trial redistances).
    fn line_search(
        &self,
        state: &OptState,
        v: &[Vec<f64>; 2],
        passes: &[Redistance],
        trials: &mut usize,
    ) -> Result<Option<(MultiLevelSet, Evaluation, f64, Redistance)>> {
        let dx = self.mesh.dx();
        let dt0 = cfl_timestep(&v[0], dx).min(cfl_timestep(&v[1], dx));
        for &reinit in passes {
            let mut dt = dt0;
            for _ in 0..self.config.numerics.max_line_search.max(1) {
                *trials += 1;
                let (ls, eval) = self.trial(state, v, dt, reinit)?;
                if eval.objective <= state.objective {
                    return Ok(Some((ls, eval, dt, reinit)));
                }
                dt *= 0.5;
            }
        }
        Ok(None)
    }

    /// One iteration. The time step starts at the CFL bound and is halved until
    /// `J` does not increase. When redistancing is due it is part of each
    /// trial; if no trial passes, the search is repeated with redistancing
    /// kept off the interface band, which leaves the material untouched. If
    /// the full velocity fails, its objective part alone is searched (with
    /// the last redistancing mode only); failing that a tiny step along the
    /// full velocity is tried, and failing that the design is kept. The
    /// multipliers are updated either way.
    pub fn step(&self, state: &OptState) -> Result<(OptState, StepReport)> {
        let numerics = &self.config.numerics;
        let (v, v_objective) = self.directions(state)?;
        let passes: &[Redistance] = if self.reinit_due(&state.levelsets) {
            &[Redistance::Full, Redistance::OutsideBand]
        } else {
            &[Redistance::Skip]
        };

        let mut trials = 0;
        let mut accepted = self.line_search(state, &v, passes, &mut trials)?;
        if accepted.is_none() && v_objective != v {
            accepted = self.line_search(state, &v_objective, &passes[passes.len() - 1..], &mut trials)?;
        }
        let searched = accepted.is_some();
        if !searched {
            trials += 1;
            let dx = self.mesh.dx();
            let dt = numerics.fallback_fraction * cfl_timestep(&v[0], dx).min(cfl_timestep(&v[1], dx));
            let (ls, eval) = self.trial(state, &v, dt, Redistance::Skip)?;
            if eval.objective <= state.objective {
                accepted = Some((ls, eval, dt, Redistance::Skip));
            }
        }

        let mut next = state.clone();
        next.iteration += 1;
        next.constraints.update(&numerics.schedule());
        let report = match accepted {
            Some((ls, eval, dt, reinitialized)) => {
                // An accepted fallback step still counts as a failed search.
                next.failed_searches = if searched { 0 } else { state.failed_searches + 1 };
                next.levelsets = ls;
                next.solutions = eval.solutions;
                next.homogenized = eval.homogenized;
                next.objective = eval.objective;
                next.constraints.volumes = eval.volumes;
                StepReport { dt, trials, accepted: true, reinitialized: reinitialized != Redistance::Skip }
            }
            None => {
                next.failed_searches = state.failed_searches + 1;
                StepReport { dt: 0.0, trials, accepted: false, reinitialized: false }
            }
        };
        if next.failed_searches >= STAGNATION_FAILURES && !next.stagnated {
            warn!("iteration {}: {} consecutive line searches failed", next.iteration, next.failed_searches);
            next.stagnated = true;
        }
        Ok((next, report))
    }

    /// Runs `iterations` steps from `state`, calling `observer` with each new
    /// state and its history record (the starting state first).
    pub fn run_from(
        &self,
        mut state: OptState,
        iterations: usize,
        mut observer: impl FnMut(&OptState, &HistoryRecord) -> Result<()>,
    ) -> Result<(RunHistory, OptState)> {
        let mut history = RunHistory::default();
        let first = state.record(0.0, 0);
        observer(&state, &first)?;
        history.records.push(first);
        for _ in 0..iterations {
            let (next, report) = self.step(&state)?;
            state = next;
            let record = state.record(report.dt, report.trials);
            debug!(
                "iteration {}: J = {:.6e}, dt = {:.3e}, trials = {}",
                state.iteration, state.objective, report.dt, report.trials
            );
            observer(&state, &record)?;
            history.records.push(record);
        }
        Ok((history, state))
    }

    /// The configured run from the configured initial design.
    pub fn run(
        &self,
        observer: impl FnMut(&OptState, &HistoryRecord) -> Result<()>,
    ) -> Result<(RunHistory, OptState)> {
        self.run_from(self.initial_state()?, self.config.iterations, observer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::levelset::PatternSpec;

    #[test]
    fn dense_solve() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let x = solve_dense(a.clone(), vec![3.0, 5.0, 5.0]).unwrap();
        for (row, b) in a.iter().zip([3.0, 5.0, 5.0]) {
            assert!((row.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() - b).abs() < 1e-12);
        }
        assert!(solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
        assert_eq!(solve_dense(Vec::new(), Vec::new()), Some(Vec::new()));
    }

    fn small(top: &str, tables: &str) -> Config {
        parse_config(&format!(
            "{top}\n[mesh]\nn = 20\n[init.set1]\nkind = \"circles\"\nrows = 2\ncols = 2\nradius = 0.15\ninvert = true\n\
             [init.set2]\nkind = \"circles\"\nrows = 1\ncols = 1\nradius = 0.3\n{tables}"
        ))
        .unwrap()
    }

    #[test]
    fn zero_iterations_record_only_the_start() {
        let p = Problem::from_config(&small("", "")).unwrap();
        let (h, s) = p.run_from(p.initial_state().unwrap(), 0, |_, _| Ok(())).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.records[0].iteration, 0);
        assert_eq!(s.iteration, 0);
    }

    #[test]
    fn descent_is_monotone_and_volumes_sum_to_one() {
        let p = Problem::from_config(&small("", "")).unwrap();
        let (h, s) = p.run_from(p.initial_state().unwrap(), 8, |_, _| Ok(())).unwrap();
        assert_eq!(h.records.len(), 9);
        assert!(h.is_monotone(), "{:?}", h.objectives().collect::<Vec<_>>());
        assert!(s.objective < h.records[0].objective);
        for r in &h.records {
            assert!((r.volumes.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = Problem::from_config(&small("mode = \"augmented\"", "")).unwrap();
        let a = p.run_from(p.initial_state().unwrap(), 6, |_, _| Ok(())).unwrap();
        let b = p.run_from(p.initial_state().unwrap(), 6, |_, _| Ok(())).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn restart_reproduces_the_next_iteration() {
        let p = Problem::from_config(&small("", "")).unwrap();
        let (_, mid) = p.run_from(p.initial_state().unwrap(), 4, |_, _| Ok(())).unwrap();
        let restored = OptState::from_json(&mid.to_json().unwrap()).unwrap();
        assert_eq!(restored, mid);
        let (a, ra) = p.step(&mid).unwrap();
        let (b, rb) = p.step(&restored).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn matching_target_is_a_fixed_point() {
        // Identical phases: A^H is the phase tensor whatever the design, so the
        // target is met and, with feasible volumes and zero multipliers, the
        // velocity vanishes.
        let base = small("", "[phases]\nyoung = [1.0, 1.0, 1.0, 1.0]\n[volume]\n");
        let iso = crate::material::ElasticTensor4::isotropic(1.0, 0.3).unwrap();
        let v = iso.voigt();
        let config = parse_config(&format!(
            "{}\n",
            base.to_toml()
                .replace("targets = [0.1, -0.1, 0.1]", &format!("targets = [{:?}, {:?}, {:?}]", v[0][0], v[0][1], v[1][1]))
        ))
        .unwrap();
        let p = Problem::from_config(&config).unwrap();
        let start = p.initial_state().unwrap();
        assert!(start.objective < 1e-20, "{}", start.objective);
        let [v1, v2] = p.velocities(&start).unwrap();
        assert!(v1.iter().chain(&v2).all(|x| x.abs() < 1e-12));
        let (next, report) = p.step(&start).unwrap();
        assert!(report.accepted);
        for k in 0..2 {
            let diff = next.levelsets.phi[k]
                .iter()
                .zip(&start.levelsets.phi[k])
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff < 1e-12, "set {k} moved by {diff}");
        }
    }

    #[test]
    fn failed_search_keeps_the_design() {
        // A single trial with a step far too large for this start still never
        // raises J: either it is accepted with a decrease or the state is kept.
        let config = small("", "[numerics]\nmax_line_search = 1\nfallback_fraction = 0.999");
        let p = Problem::from_config(&config).unwrap();
        let mut s = p.initial_state().unwrap();
        for _ in 0..5 {
            let (next, report) = p.step(&s).unwrap();
            assert!(next.objective <= s.objective);
            if !report.accepted {
                assert_eq!(next.levelsets, s.levelsets);
                assert_eq!(next.failed_searches, s.failed_searches + 1);
            }
            s = next;
        }
    }

    #[test]
    fn mismatched_levelsets_are_rejected() {
        let p = Problem::from_config(&small("", "")).unwrap();
        let mesh = UnitCellMesh::new(10).unwrap();
        let spec = PatternSpec::Circles { rows: 1, cols: 1, radius: 0.2, offset: [0.0, 0.0], invert: false };
        let ls = MultiLevelSet::from_patterns(&mesh, [&spec, &spec], 0).unwrap();
        assert!(p.evaluate(&ls, None).is_err());
    }
}
