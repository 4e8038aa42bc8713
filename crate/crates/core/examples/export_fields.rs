//! Writes the initial design of a preset as a VTK file and as plain level-set
//! files, then reads the VTK back.
//!
//! cargo run --release --example export_fields -- [preset] [out-dir]

use std::path::PathBuf;

use cellopt::io::export::export_fields;
use cellopt::io::field::write_levelset;
use cellopt::io::vtk::read_vtk;
use cellopt::Problem;

fn main() -> cellopt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("example1", String::as_str);
    let dir = args.get(1).map_or_else(|| PathBuf::from("fields"), PathBuf::from);

    let problem = Problem::from_config(&cellopt::preset(name)?)?;
    let state = problem.initial_state()?;
    let vtk = dir.join(format!("{name}_initial.vtk"));
    export_fields(&vtk, &problem, &state)?;
    let n = state.levelsets.n();
    for (k, phi) in state.levelsets.phi.iter().enumerate() {
        write_levelset(&dir.join(format!("{name}_phi{}.txt", k + 1)), n, phi)?;
    }

    let back = read_vtk(&vtk)?;
    let mut counts = [0usize; 4];
    for &p in &back.scalars["phase"] {
        counts[p as usize - 1] += 1;
    }
    println!("wrote {} ({} points)", vtk.display(), back.scalars["phase"].len());
    for (k, c) in counts.iter().enumerate() {
        println!("  phase {}: {c} points", k + 1);
    }
    let mut fields: Vec<&String> = back.scalars.keys().chain(back.vectors.keys()).collect();
    fields.sort();
    println!("  fields: {}", fields.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "));
    Ok(())
}
