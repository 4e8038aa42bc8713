//! The `cellopt` command line: `optimize`, `homogenize`, `validate`, `presets`.
//!
//! Every subcommand that needs a configuration takes it as a positional path,
//! as `--config <path>`, or as `--preset <name>`; with none of them the
//! `example1` defaults apply. The worker count comes from `--threads`, then
//! `CELLOPT_THREADS`, then rayon's default.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, preset, Config, PRESETS};
use crate::error::{Error, Result};
use crate::homogenize::apparent_poisson;
use crate::io::export::RunWriter;
use crate::optimizer::Problem;
use crate::validate::{gradient_check, laminate_check};

pub const THREADS_ENV: &str = "CELLOPT_THREADS";

/// Laminate oracle tolerance, relative.
const LAMINATE_TOL: f64 = 0.02;
/// Directional-derivative tolerance, relative.
const GRADIENT_TOL: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "cellopt", version, about = "Inverse homogenization of periodic four-phase unit cells")]
pub struct Cli {
    /// Worker threads (default: $CELLOPT_THREADS, else all cores).
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the shape optimization and write a run directory.
    Optimize {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long, value_name = "PATH", default_value = "cellopt-run")]
        out_dir: PathBuf,
    },
    /// Solve the cell problems for the initial design and print the tensor.
    Homogenize {
        #[command(flatten)]
        source: ConfigSource,
    },
    /// Laminate oracle and shape-gradient check; exits nonzero on failure.
    Validate {
        #[command(flatten)]
        source: ConfigSource,
        /// Number of random directional-derivative checks.
        #[arg(long, default_value_t = 4)]
        checks: usize,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
pub struct ConfigSource {
    /// Configuration file (TOML).
    #[arg(value_name = "CONFIG", conflicts_with_all = ["config", "preset"])]
    pub path: Option<PathBuf>,
    /// Configuration file (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Start from a built-in preset instead of a file.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
}

impl ConfigSource {
    pub fn resolve(&self) -> Result<Config> {
        match (self.path.as_deref().or(self.config.as_deref()), &self.preset) {
            (Some(path), _) => load_config(path),
            (None, Some(name)) => preset(name),
            (None, None) => preset("example1"),
        }
    }
}

/// `--threads` wins over the environment; `None` leaves rayon's default.
pub fn thread_count(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>> {
    let count = match (flag, env) {
        (Some(k), _) => k,
        (None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}: expected a positive integer, got {text:?}")))?,
        (None, None) => return Ok(None),
    };
    if count == 0 {
        return Err(Error::Config("threads: must be at least 1".into()));
    }
    Ok(Some(count))
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Runs one parsed command. `Ok(false)` means the command ran but a check failed.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    match &cli.command {
        Command::Presets => {
            for name in PRESETS {
                let c = preset(name)?;
                let volumes: Vec<String> = c
                    .volume
                    .targets()
                    .iter()
                    .enumerate()
                    .filter_map(|(k, v)| v.map(|v| format!("V{}={:.1}%", k + 1, 100.0 * v)))
                    .collect();
                let targets: Vec<String> = c
                    .objective
                    .entries
                    .iter()
                    .zip(&c.objective.targets)
                    .zip(&c.objective.weights)
                    .map(|((e, t), w)| format!("A{e}={t} (w={w})"))
                    .collect();
                writeln!(out, "{name}  {}  {}  {}", format!("{:?}", c.mode).to_lowercase(), targets.join(" "), volumes.join(" "))
                    .map_err(stdout_error)?;
            }
            Ok(true)
        }
        Command::Homogenize { source } => {
            let problem = Problem::from_config(&source.resolve()?)?;
            let state = problem.initial_state()?;
            let ah = &state.homogenized;
            let [v1, v2, v3, v4] = state.volumes();
            writeln!(out, "A1111 = {:.10}", ah.a1111()).map_err(stdout_error)?;
            writeln!(out, "A1122 = {:.10}", ah.a1122()).map_err(stdout_error)?;
            writeln!(out, "A2222 = {:.10}", ah.a2222()).map_err(stdout_error)?;
            writeln!(out, "A1212 = {:.10}", ah.a1212()).map_err(stdout_error)?;
            writeln!(out, "nu_app = {:.10}", apparent_poisson(ah)?).map_err(stdout_error)?;
            writeln!(out, "J = {:.6e}", state.objective).map_err(stdout_error)?;
            writeln!(out, "volumes = {v1:.4} {v2:.4} {v3:.4} {v4:.4}").map_err(stdout_error)?;
            Ok(true)
        }
        Command::Validate { source, checks, delta } => {
            let config = source.resolve()?;
            let phases = config.phase_set()?;
            let lam = laminate_check(config.mesh.n, &phases.tensors[0], &phases.tensors[2], config.numerics.cg_tol)?;
            let lam_ok = lam.max_relative_error <= LAMINATE_TOL;
            writeln!(
                out,
                "laminate n={}: max relative error {:.3e} (tol {LAMINATE_TOL}) {}",
                lam.n,
                lam.max_relative_error,
                verdict(lam_ok)
            )
            .map_err(stdout_error)?;
            let grad = gradient_check(&config, *checks, config.seed, *delta)?;
            for (k, c) in grad.checks.iter().enumerate() {
                writeln!(
                    out,
                    "gradient check {k}: predicted {:+.6e} finite difference {:+.6e} error {:.2e}",
                    c.predicted, c.finite_difference, c.relative_error
                )
                .map_err(stdout_error)?;
            }
            let grad_ok = grad.max_relative_error() <= GRADIENT_TOL;
            writeln!(
                out,
                "gradient n={}: max relative error {:.3e} (tol {GRADIENT_TOL}) {}",
                grad.n,
                grad.max_relative_error(),
                verdict(grad_ok)
            )
            .map_err(stdout_error)?;
            Ok(lam_ok && grad_ok)
        }
        Command::Optimize { source, out_dir } => optimize(&source.resolve()?, out_dir, out),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn optimize(config: &Config, dir: &Path, out: &mut dyn Write) -> Result<bool> {
    let problem = Problem::from_config(config)?;
    let mut writer = RunWriter::create(dir, &problem)?;
    let every = config.snapshot_every.max(1);
    let (history, state) = problem.run(|s, r| {
        writer.observe(&problem, s, r)?;
        if s.iteration % every == 0 {
            writeln!(
                out,
                "iter {:4}  J {:.6e}  A {:+.4} {:+.4} {:+.4}  V {:.3} {:.3} {:.3} {:.3}  dt {:.2e}",
                r.iteration,
                r.objective,
                r.tensor[0],
                r.tensor[1],
                r.tensor[2],
                r.volumes[0],
                r.volumes[1],
                r.volumes[2],
                r.volumes[3],
                r.dt
            )
            .map_err(stdout_error)?;
        }
        Ok(())
    })?;
    writer.finish(&problem, &state)?;
    let nu = apparent_poisson(&state.homogenized).map_or_else(|_| "undefined".to_string(), |v| format!("{v:.4}"));
    writeln!(
        out,
        "done: {} iterations, J {:.6e}, nu_app {nu}, monotone {}, output in {}",
        state.iteration,
        state.objective,
        history.is_monotone(),
        dir.display()
    )
    .map_err(stdout_error)?;
    Ok(true)
}

/// Parses `args` (including the program name), configures the thread pool
/// and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let env = std::env::var(THREADS_ENV).ok();
    let outcome = thread_count(cli.threads, env.as_deref()).and_then(|threads| {
        if let Some(k) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| Error::Config(format!("threads: {e}")))?;
        }
        execute(&cli, &mut std::io::stdout().lock())
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (Result<bool>, String) {
        let cli = Cli::try_parse_from(std::iter::once("cellopt").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = execute(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn presets_lists_four_examples() {
        let (r, text) = exec(&["presets"]);
        assert!(r.unwrap());
        let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(names, PRESETS);
    }

    #[test]
    fn homogenize_uniform_phase_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.toml");
        std::fs::write(
            &path,
            "[mesh]\nn = 10\n[init.set1]\nkind = \"uniform\"\ninside = true\n[init.set2]\nkind = \"uniform\"\ninside = true\n",
        )
        .unwrap();
        let (r, text) = exec(&["homogenize", path.to_str().unwrap()]);
        assert!(r.unwrap());
        assert!(text.contains("A1111 = 1.0000000000"), "{text}");
        assert!(text.contains("nu_app = 0.3000000000"), "{text}");
    }

    #[test]
    fn optimize_zero_iterations_writes_initial_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "iterations = 0\n[mesh]\nn = 12\n").unwrap();
        let out = dir.path().join("run");
        let (r, _) = exec(&["optimize", "--config", path.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert!(r.unwrap());
        let snaps: Vec<_> = std::fs::read_dir(out.join("snapshots")).unwrap().collect();
        assert_eq!(snaps.len(), 1);
        assert!(out.join("history.csv").exists() && out.join("manifest.toml").exists());
    }

    #[test]
    fn config_sources_conflict() {
        assert!(Cli::try_parse_from(["cellopt", "homogenize", "a.toml", "--preset", "example2"]).is_err());
        assert!(Cli::try_parse_from(["cellopt", "homogenize", "--config", "a.toml", "--preset", "example2"]).is_err());
        let cli = Cli::try_parse_from(["cellopt", "homogenize", "--preset", "example4"]).unwrap();
        let Command::Homogenize { source } = cli.command else { panic!() };
        assert_eq!(source.resolve().unwrap().preset, "example4");
    }

    #[test]
    fn unknown_preset_and_missing_file_fail() {
        assert!(exec(&["homogenize", "--preset", "example9"]).0.is_err());
        assert!(exec(&["homogenize", "/nonexistent/c.toml"]).0.is_err());
    }

    #[test]
    fn thread_flag_beats_environment() {
        assert_eq!(thread_count(Some(2), Some("8")).unwrap(), Some(2));
        assert_eq!(thread_count(None, Some(" 3 ")).unwrap(), Some(3));
        assert_eq!(thread_count(None, None).unwrap(), None);
        assert!(thread_count(None, Some("many")).is_err());
        assert!(thread_count(Some(0), None).is_err());
    }
}
