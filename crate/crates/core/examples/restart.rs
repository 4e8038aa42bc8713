//! Checkpoint and restart: a run interrupted after a few iterations and
//! resumed from its JSON state matches an uninterrupted run bit for bit.
//!
//! cargo run --release --example restart -- [n]

use cellopt::{OptState, Problem};

fn main() -> cellopt::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let mut config = cellopt::preset("example3")?;
    config.mesh.n = n;
    let problem = Problem::from_config(&config)?;

    let (straight, _) = problem.run_from(problem.initial_state()?, 6, |_, _| Ok(()))?;

    let (_, half) = problem.run_from(problem.initial_state()?, 3, |_, _| Ok(()))?;
    let checkpoint = half.to_json()?;
    println!("checkpoint at iteration {}: {} bytes of JSON", half.iteration, checkpoint.len());
    let resumed = OptState::from_json(&checkpoint)?;
    let (rest, _) = problem.run_from(resumed, 3, |_, _| Ok(()))?;

    for (a, b) in straight.records[3..].iter().zip(&rest.records) {
        let same = a.objective.to_bits() == b.objective.to_bits() && a.multipliers == b.multipliers;
        println!("iter {:2}  J {:.15e}  {:.15e}  {}", a.iteration, a.objective, b.objective, if same { "identical" } else { "DIFFERENT" });
    }
    Ok(())
}
