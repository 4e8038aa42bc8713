//! Inverse homogenization of 2D periodic four-phase unit cells.
//!
//! Two level sets split the unit cell `Y = (-½,½)²` into four elastic phases.
//! A periodic P1 finite-element solver computes the homogenized tensor, and a
//! shape-gradient descent transports both level sets so that chosen entries of
//! that tensor approach a target, under volume constraints on the phases.
//!
//! The pipeline, bottom up: [`mesh`] → [`material`] → [`cell`] →
//! [`homogenize`] → [`levelset`] → [`gradient`] → [`optimizer`], with
//! [`config`] and [`io`] around it.

pub mod cell;
pub mod cli;
pub mod config;
pub mod error;
pub mod gradient;
pub mod homogenize;
pub mod io;
pub mod levelset;
pub mod material;
pub mod mesh;
pub mod optimizer;
pub mod sparse;
pub mod validate;

pub use cell::{CellSolutions, CellSolver, SolverOptions, TensorField};
pub use error::{Error, Result};
pub use homogenize::{apparent_poisson, HomogenizedTensor, ObjectiveEntry, ObjectiveSpec, TensorIndex};
pub use levelset::{MultiLevelSet, PatternSpec};
pub use material::{ElasticTensor4, Heaviside, PhaseSet, PlaneModel};
pub use mesh::UnitCellMesh;
pub use optimizer::{Evaluation, OptState, Problem, RunHistory, StepReport};
pub use config::{parse_config, load_config, preset, Config};
