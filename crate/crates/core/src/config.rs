//! Run configuration: a TOML document resolved against one of four presets.
//!
//! Every key is optional; missing keys come from the preset named by
//! `preset` (default `example1`). Unknown keys are errors. The resolved
//! [`Config`] serializes back to a complete document that parses to itself,
//! which is what run manifests store.
//!
//! ```toml
//! preset = "example1"      # example1 | example2 | example3 | example4
//! iterations = 200
//! snapshot_every = 10      # 0 disables intermediate snapshots
//! seed = 0
//! mode = "plain"           # plain | augmented
//!
//! [mesh]
//! n = 100                  # cells per side, even, >= 2
//!
//! [phases]                 # phase k = 1..4, see `PhaseSet`
//! young = [0.91, 0.0001, 1.82, 0.0001]
//! poisson = [0.3, 0.3, 0.3, 0.3]
//! plane = "stress"         # stress | strain
//!
//! [objective]              # equal-length lists
//! entries = ["1111", "1122", "2222"]
//! targets = [0.1, -0.1, 0.1]
//! weights = [1.0, 30.0, 1.0]
//!
//! [volume]                 # constrained phases; a [volume] table replaces the
//! phase1 = 0.30            # preset's targets as a whole
//! phase3 = 0.04
//!
//! [init.set1]              # circles | ellipses | concentric | random-circles
//!                          # | uniform | file
//! kind = "circles"
//! rows = 4
//! cols = 4
//! radius = 0.08
//! invert = true
//!
//! [numerics]
//! eps_factor = 2.0         # ε = eps_factor Δx
//! alpha_factor = 4.0       # α = alpha_factor Δx
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{ConstraintMode, MultiplierSchedule};
use crate::homogenize::{ObjectiveEntry, ObjectiveSpec, TensorIndex};
use crate::levelset::PatternSpec;
use crate::material::{ElasticTensor4, PhaseSet, PlaneModel};
use crate::mesh::UnitCellMesh;

pub const PRESETS: [&str; 4] = ["example1", "example2", "example3", "example4"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesConfig {
    pub young: [f64; 4],
    pub poisson: [f64; 4],
    pub plane: PlaneModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub entries: Vec<TensorIndex>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase4: Option<f64>,
}

impl VolumeConfig {
    pub fn targets(&self) -> [Option<f64>; 4] {
        [self.phase1, self.phase2, self.phase3, self.phase4]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub set1: PatternSpec,
    pub set2: PatternSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub eps_factor: f64,
    pub alpha_factor: f64,
    /// Relative residual of the cell-problem solves.
    pub cg_tol: f64,
    /// Relative residual of the velocity-extension solves.
    pub extension_tol: f64,
    pub reinit_every: usize,
    pub reinit_steps: usize,
    pub max_line_search: usize,
    /// Step used after a failed line search, as a fraction of the CFL step.
    pub fallback_fraction: f64,
    pub beta_step: f64,
    pub beta0: f64,
    pub gamma: f64,
    pub penalty_every: usize,
    pub beta_max: f64,
    /// Make the constraint velocity neutral for the targeted tensor entries
    /// to first order, and keep the combined velocity a descent direction.
    pub constraint_projection: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        let s = MultiplierSchedule::default();
        Self {
            eps_factor: 2.0,
            alpha_factor: 4.0,
            cg_tol: 1e-9,
            extension_tol: 1e-10,
            reinit_every: 5,
            reinit_steps: 50,
            max_line_search: 8,
            fallback_fraction: 1e-3,
            beta_step: s.beta_step,
            beta0: s.beta0,
            gamma: s.gamma,
            penalty_every: s.penalty_every,
            beta_max: s.beta_max,
            constraint_projection: true,
        }
    }
}

impl Numerics {
    pub fn schedule(&self) -> MultiplierSchedule {
        MultiplierSchedule {
            beta_step: self.beta_step,
            beta0: self.beta0,
            gamma: self.gamma,
            penalty_every: self.penalty_every,
            beta_max: self.beta_max,
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub preset: String,
    pub iterations: usize,
    pub snapshot_every: usize,
    pub seed: u64,
    pub mode: ConstraintMode,
    pub mesh: MeshConfig,
    pub phases: PhasesConfig,
    pub objective: ObjectiveConfig,
    pub volume: VolumeConfig,
    pub init: InitConfig,
    pub numerics: Numerics,
}

impl Default for Config {
    fn default() -> Self {
        preset("example1").expect("built-in preset")
    }
}

/// The four built-in examples. They share the phases; examples 3 and 4 use the
/// augmented Lagrangian and a milder Poisson target.
pub fn preset(name: &str) -> Result<Config> {
    let (volumes, mode, weights, targets) = match name {
        "example1" => ((0.30, 0.04), ConstraintMode::Plain, [1.0, 30.0, 1.0], [0.1, -0.1, 0.1]),
        "example2" => ((0.33, 0.01), ConstraintMode::Plain, [1.0, 30.0, 1.0], [0.1, -0.1, 0.1]),
        "example3" => ((0.385, 0.0965), ConstraintMode::Augmented, [1.0, 10.0, 1.0], [0.2, -0.1, 0.2]),
        "example4" => ((0.53, 0.07), ConstraintMode::Augmented, [1.0, 10.0, 1.0], [0.2, -0.1, 0.2]),
        other => {
            return Err(Error::Config(format!(
                "unknown preset \"{other}\", expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(Config {
        preset: name.to_string(),
        iterations: 200,
        snapshot_every: 10,
        seed: 0,
        mode,
        mesh: MeshConfig { n: 100 },
        phases: PhasesConfig {
            young: [0.91, 0.0001, 1.82, 0.0001],
            poisson: [0.3; 4],
            plane: PlaneModel::Stress,
        },
        objective: ObjectiveConfig {
            entries: vec![TensorIndex::I1111, TensorIndex::I1122, TensorIndex::I2222],
            targets: targets.to_vec(),
            weights: weights.to_vec(),
        },
        volume: VolumeConfig {
            phase1: Some(volumes.0),
            phase3: Some(volumes.1),
            ..Default::default()
        },
        // Solid with alternating slots (a rotating-squares start, already
        // auxetic), and the stiff phase as disks at the square centers.
        init: InitConfig {
            set1: PatternSpec::Ellipses {
                rows: 2,
                cols: 2,
                semi_axes: [0.34, 0.12],
                alternate: true,
                invert: true,
            },
            set2: PatternSpec::Circles {
                rows: 2,
                cols: 2,
                radius: 0.056,
                offset: [0.25, 0.25],
                invert: true,
            },
        },
        numerics: Numerics::default(),
    })
}

/// The document as written: every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    preset: Option<String>,
    iterations: Option<usize>,
    snapshot_every: Option<usize>,
    seed: Option<u64>,
    mode: Option<ConstraintMode>,
    mesh: Option<MeshDoc>,
    phases: Option<PhasesDoc>,
    objective: Option<ObjectiveDoc>,
    volume: Option<VolumeConfig>,
    init: Option<InitDoc>,
    numerics: Option<NumericsDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasesDoc {
    young: Option<[f64; 4]>,
    poisson: Option<[f64; 4]>,
    plane: Option<PlaneModel>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveDoc {
    entries: Option<Vec<TensorIndex>>,
    targets: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitDoc {
    set1: Option<PatternSpec>,
    set2: Option<PatternSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsDoc {
    eps_factor: Option<f64>,
    alpha_factor: Option<f64>,
    cg_tol: Option<f64>,
    extension_tol: Option<f64>,
    reinit_every: Option<usize>,
    reinit_steps: Option<usize>,
    max_line_search: Option<usize>,
    fallback_fraction: Option<f64>,
    beta_step: Option<f64>,
    beta0: Option<f64>,
    gamma: Option<f64>,
    penalty_every: Option<usize>,
    beta_max: Option<f64>,
    constraint_projection: Option<bool>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Document {
    fn resolve(self) -> Result<Config> {
        let mut c = preset(self.preset.as_deref().unwrap_or("example1"))?;
        set(&mut c.iterations, self.iterations);
        set(&mut c.snapshot_every, self.snapshot_every);
        set(&mut c.seed, self.seed);
        set(&mut c.mode, self.mode);
        if let Some(m) = self.mesh {
            set(&mut c.mesh.n, m.n);
        }
        if let Some(p) = self.phases {
            set(&mut c.phases.young, p.young);
            set(&mut c.phases.poisson, p.poisson);
            set(&mut c.phases.plane, p.plane);
        }
        if let Some(o) = self.objective {
            set(&mut c.objective.entries, o.entries);
            set(&mut c.objective.targets, o.targets);
            set(&mut c.objective.weights, o.weights);
        }
        set(&mut c.volume, self.volume);
        if let Some(i) = self.init {
            set(&mut c.init.set1, i.set1);
            set(&mut c.init.set2, i.set2);
        }
        if let Some(n) = self.numerics {
            let x = &mut c.numerics;
            set(&mut x.eps_factor, n.eps_factor);
            set(&mut x.alpha_factor, n.alpha_factor);
            set(&mut x.cg_tol, n.cg_tol);
            set(&mut x.extension_tol, n.extension_tol);
            set(&mut x.reinit_every, n.reinit_every);
            set(&mut x.reinit_steps, n.reinit_steps);
            set(&mut x.max_line_search, n.max_line_search);
            set(&mut x.fallback_fraction, n.fallback_fraction);
            set(&mut x.beta_step, n.beta_step);
            set(&mut x.beta0, n.beta0);
            set(&mut x.gamma, n.gamma);
            set(&mut x.penalty_every, n.penalty_every);
            set(&mut x.beta_max, n.beta_max);
            set(&mut x.constraint_projection, n.constraint_projection);
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    doc.resolve()
}

/// Reads a configuration file. A relative `init.*.path` is resolved against
/// the file's directory.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = crate::io::read_to_string(path)?;
    let mut config = parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for spec in [&mut config.init.set1, &mut config.init.set2] {
        if let PatternSpec::File { path } = spec {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
    Ok(config)
}

fn invalid(key: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {why}"))
}

impl Config {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every cross-field constraint; [`parse_config`] calls this.
    pub fn validate(&self) -> Result<()> {
        UnitCellMesh::new(self.mesh.n).map_err(|_| invalid("mesh.n", format!("must be even and >= 2, got {}", self.mesh.n)))?;
        self.phase_set()?;
        self.objective_spec()?;
        let n = &self.numerics;
        let positive = [
            ("numerics.eps_factor", n.eps_factor),
            ("numerics.alpha_factor", n.alpha_factor),
            ("numerics.cg_tol", n.cg_tol),
            ("numerics.extension_tol", n.extension_tol),
            ("numerics.fallback_fraction", n.fallback_fraction),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        if n.fallback_fraction >= 1.0 {
            return Err(invalid("numerics.fallback_fraction", "must be below 1"));
        }
        if n.reinit_every == 0 {
            return Err(invalid("numerics.reinit_every", "must be >= 1"));
        }
        self.numerics.schedule().validate().map_err(|e| invalid("numerics", e))?;
        for (key, spec) in [("init.set1", &self.init.set1), ("init.set2", &self.init.set2)] {
            validate_pattern(spec).map_err(|e| invalid(key, e))?;
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<UnitCellMesh> {
        UnitCellMesh::new(self.mesh.n)
    }

    pub fn phase_set(&self) -> Result<PhaseSet> {
        let p = &self.phases;
        let mut tensors = [ElasticTensor4::zero(); 4];
        for k in 0..4 {
            tensors[k] = ElasticTensor4::isotropic_with(p.young[k], p.poisson[k], p.plane)
                .map_err(|e| invalid(&format!("phases (phase {})", k + 1), e))?;
        }
        let eps = self.numerics.eps_factor / self.mesh.n as f64;
        PhaseSet::new(tensors, self.volume.targets(), eps).map_err(|e| invalid("volume", e))
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec> {
        let o = &self.objective;
        if o.entries.len() != o.targets.len() || o.entries.len() != o.weights.len() {
            return Err(invalid(
                "objective",
                format!(
                    "entries, targets and weights must have equal lengths, got {}, {} and {}",
                    o.entries.len(),
                    o.targets.len(),
                    o.weights.len()
                ),
            ));
        }
        let entries = o
            .entries
            .iter()
            .zip(&o.targets)
            .zip(&o.weights)
            .map(|((&index, &target), &weight)| ObjectiveEntry { index, target, weight })
            .collect();
        ObjectiveSpec::new(entries).map_err(|e| invalid("objective", e))
    }

    /// Paths of level-set files the configuration reads.
    pub fn input_files(&self) -> Vec<PathBuf> {
        [&self.init.set1, &self.init.set2]
            .into_iter()
            .filter_map(|s| match s {
                PatternSpec::File { path } => Some(path.clone()),
                _ => None,
            })
            .collect()
    }
}

fn validate_pattern(spec: &PatternSpec) -> std::result::Result<(), String> {
    match spec {
        PatternSpec::Circles { rows, cols, radius, .. } if *rows == 0 || *cols == 0 || !(*radius > 0.0) => {
            Err("circles need rows >= 1, cols >= 1 and radius > 0".into())
        }
        PatternSpec::Ellipses { rows, cols, semi_axes: [a, b], .. } if *rows == 0 || *cols == 0 || !(*a > 0.0 && *b > 0.0) => {
            Err("ellipses need rows >= 1, cols >= 1 and positive semi-axes".into())
        }
        PatternSpec::Concentric { radii, .. } if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[0] >= w[1]) => {
            Err("concentric radii must be positive and strictly increasing".into())
        }
        PatternSpec::RandomCircles { count, radius_min, radius_max, .. }
            if *count == 0 || !(*radius_min > 0.0 && radius_min <= radius_max) =>
        {
            Err("random circles need count >= 1 and 0 < radius_min <= radius_max".into())
        }
        _ => Ok(()),
    }
}
