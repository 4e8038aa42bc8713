//! Full optimization of a preset, writing a run directory (manifest, history,
//! VTK snapshots, final state).
//!
//! cargo run --release --example optimize -- [preset] [iterations] [n] [out-dir]

use std::path::PathBuf;
use std::time::Instant;

use cellopt::io::export::RunWriter;
use cellopt::{apparent_poisson, Problem};

fn main() -> cellopt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("example1", String::as_str);
    let mut config = cellopt::preset(name)?;
    if let Some(it) = args.get(1).and_then(|s| s.parse().ok()) {
        config.iterations = it;
    }
    if let Some(n) = args.get(2).and_then(|s| s.parse().ok()) {
        config.mesh.n = n;
    }
    let dir = args.get(3).map_or_else(|| PathBuf::from(format!("runs/{name}")), PathBuf::from);

    let problem = Problem::from_config(&config)?;
    let mut writer = RunWriter::create(&dir, &problem)?;
    let start = Instant::now();
    let (history, state) = problem.run(|s, r| {
        writer.observe(&problem, s, r)?;
        if s.iteration % 10 == 0 {
            println!(
                "{:4}  J {:.4e}  A1111 {:+.4}  A1122 {:+.4}  A2222 {:+.4}  V1 {:.3}  V3 {:.3}  {:.0}s",
                r.iteration,
                r.objective,
                r.tensor[0],
                r.tensor[1],
                r.tensor[2],
                r.volumes[0],
                r.volumes[2],
                start.elapsed().as_secs_f64()
            );
        }
        Ok(())
    })?;
    writer.finish(&problem, &state)?;
    println!(
        "J {:.4e}, nu_app {:.3}, monotone {}, written to {}",
        state.objective,
        apparent_poisson(&state.homogenized)?,
        history.is_monotone(),
        dir.display()
    );
    Ok(())
}
