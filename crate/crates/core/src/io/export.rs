//! Field snapshots of an optimization state and the on-disk layout of a run.
//!
//! A run directory holds:
//!
//! ```text
//! manifest.toml            resolved configuration, every default spelled out
//! history.csv              one row per iteration, rewritten after each one
//! snapshots/iter_0000.vtk  level sets, densities, phase index, correctors
//! state.json               final state, loadable with `OptState::from_json`
//! phi1.txt, phi2.txt       final level sets, usable as `kind = "file"` inputs
//! ```

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::io::history::{write_history, HistoryRecord};
use crate::io::vtk::{format_vtk, PointData};
use crate::io::{field, write_atomic};
use crate::optimizer::{OptState, Problem};

/// Phase index `1..=4` of the largest density; ties go to the lower phase.
pub fn dominant_phase(iota: &[f64; 4]) -> i32 {
    let mut best = 0;
    for k in 1..4 {
        if iota[k] > iota[best] {
            best = k;
        }
    }
    best as i32 + 1
}

/// VTK text for `state`: `phi1`, `phi2`, `iota1..4`, `phase`, and the
/// correctors `chi11`, `chi22`, `chi12` as vectors.
pub fn format_fields(problem: &Problem, state: &OptState) -> String {
    let phases = problem.phases();
    let [phi1, phi2] = &state.levelsets.phi;
    let iota: Vec<[f64; 4]> = phi1.iter().zip(phi2).map(|(&a, &b)| phases.phase_densities(a, b)).collect();
    let densities: [Vec<f64>; 4] = std::array::from_fn(|k| iota.iter().map(|w| w[k]).collect());
    let phase: Vec<i32> = iota.iter().map(dominant_phase).collect();
    let chi = &state.solutions.chi;
    let title = format!("cellopt iteration {} J={:.12e}", state.iteration, state.objective);
    format_vtk(
        &title,
        problem.mesh(),
        &[
            PointData::Scalars("phi1", phi1),
            PointData::Scalars("phi2", phi2),
            PointData::Scalars("iota1", &densities[0]),
            PointData::Scalars("iota2", &densities[1]),
            PointData::Scalars("iota3", &densities[2]),
            PointData::Scalars("iota4", &densities[3]),
            PointData::Integers("phase", &phase),
            PointData::Vectors("chi11", &chi[0]),
            PointData::Vectors("chi22", &chi[1]),
            PointData::Vectors("chi12", &chi[2]),
        ],
    )
}

pub fn export_fields(path: &Path, problem: &Problem, state: &OptState) -> Result<()> {
    write_atomic(path, format_fields(problem, state).as_bytes())
}

/// Writes a run directory as the optimization proceeds.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    snapshot_every: usize,
    records: Vec<HistoryRecord>,
}

impl RunWriter {
    /// Creates the directory and writes the manifest.
    pub fn create(dir: &Path, problem: &Problem) -> Result<Self> {
        write_atomic(&dir.join("manifest.toml"), problem.config().to_toml().as_bytes())?;
        Ok(Self {
            dir: dir.to_path_buf(),
            snapshot_every: problem.config().snapshot_every,
            records: Vec::new(),
        })
    }

    pub fn snapshot_path(&self, iteration: usize) -> PathBuf {
        self.dir.join("snapshots").join(format!("iter_{iteration:04}.vtk"))
    }

    /// Appends the record, rewrites the history and writes a snapshot at the
    /// start and every `snapshot_every` iterations.
    pub fn observe(&mut self, problem: &Problem, state: &OptState, record: &HistoryRecord) -> Result<()> {
        self.records.push(record.clone());
        write_history(&self.dir.join("history.csv"), &self.records)?;
        let due = state.iteration == 0 || (self.snapshot_every > 0 && state.iteration.is_multiple_of(self.snapshot_every));
        if due {
            export_fields(&self.snapshot_path(state.iteration), problem, state)?;
        }
        Ok(())
    }

    /// Final snapshot (if not already written), state and level sets.
    pub fn finish(&self, problem: &Problem, state: &OptState) -> Result<()> {
        let path = self.snapshot_path(state.iteration);
        if !path.exists() {
            export_fields(&path, problem, state)?;
        }
        write_atomic(&self.dir.join("state.json"), state.to_json()?.as_bytes())?;
        let n = state.levelsets.n();
        field::write_levelset(&self.dir.join("phi1.txt"), n, &state.levelsets.phi[0])?;
        field::write_levelset(&self.dir.join("phi2.txt"), n, &state.levelsets.phi[1])
    }

    pub fn records(&self) -> &[HistoryRecord] {
        &self.records
    }
}

/// Runs the configured optimization, writing everything into `dir`.
pub fn run_to_dir(problem: &Problem, dir: &Path) -> Result<(Vec<HistoryRecord>, OptState)> {
    let mut writer = RunWriter::create(dir, problem)?;
    let (_, state) = problem.run(|s, r| writer.observe(problem, s, r))?;
    writer.finish(problem, &state)?;
    Ok((writer.records, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::io::history::read_history;
    use crate::io::vtk::read_vtk;

    fn problem(extra: &str) -> Problem {
        Problem::from_config(&parse_config(&format!("{extra}\n[mesh]\nn = 12")).unwrap()).unwrap()
    }

    #[test]
    fn phase_index_is_argmax() {
        assert_eq!(dominant_phase(&[0.1, 0.7, 0.1, 0.1]), 2);
        assert_eq!(dominant_phase(&[0.25; 4]), 1);
        assert_eq!(dominant_phase(&[0.0, 0.0, 0.0, 1.0]), 4);
    }

    #[test]
    fn fields_roundtrip_and_phase_range() {
        let p = problem("");
        let s = p.initial_state().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.vtk");
        export_fields(&path, &p, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format_fields(&p, &s));
        let vtk = read_vtk(&path).unwrap();
        let phase = &vtk.scalars["phase"];
        assert!(phase.iter().all(|&x| [1.0, 2.0, 3.0, 4.0].contains(&x)));
        let m = p.mesh();
        for (node, v) in vtk.scalars["phi1"].iter().enumerate() {
            assert!((v - s.levelsets.phi[0][m.dof_of_node(node)]).abs() <= 1e-7);
        }
        assert_eq!(vtk.vectors.len(), 3);
        for k in 1..=4 {
            assert!(vtk.scalars.contains_key(&format!("iota{k}")));
        }
    }

    #[test]
    fn uniform_state_has_constant_phase() {
        let p = problem("");
        let n = p.mesh().n();
        let ls = crate::levelset::MultiLevelSet::new(n, vec![-1.0; n * n], vec![1.0; n * n]).unwrap();
        let s = p.state_from_levelsets(ls).unwrap();
        let text = format_fields(&p, &s);
        let vtk = crate::io::vtk::parse_vtk(&text, Path::new("mem")).unwrap();
        assert!(vtk.scalars["phase"].iter().all(|&x| x == 3.0));
    }

    #[test]
    fn run_directory_layout() {
        let p = problem("iterations = 5\nsnapshot_every = 5");
        let dir = tempfile::tempdir().unwrap();
        let (records, state) = run_to_dir(&p, dir.path()).unwrap();
        assert_eq!(records.len(), 6);
        let snaps: Vec<_> = std::fs::read_dir(dir.path().join("snapshots")).unwrap().collect();
        assert_eq!(snaps.len(), 2);
        assert_eq!(read_history(&dir.path().join("history.csv")).unwrap().len(), 6);
        let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert_eq!(&parse_config(&manifest).unwrap(), p.config());
        let saved = OptState::from_json(&std::fs::read_to_string(dir.path().join("state.json")).unwrap()).unwrap();
        assert_eq!(saved, state);
    }

    #[test]
    fn zero_iterations_emit_the_initial_snapshot_only() {
        let p = problem("iterations = 0");
        let dir = tempfile::tempdir().unwrap();
        run_to_dir(&p, dir.path()).unwrap();
        let snaps: Vec<_> = std::fs::read_dir(dir.path().join("snapshots")).unwrap().collect();
        assert_eq!(snaps.len(), 1);
    }
}
