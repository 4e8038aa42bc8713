//! A homogeneous cell reproduces its own material: the correctors vanish and
//! the homogenized tensor equals the phase tensor.
//!
//! cargo run --release --example homogenize_uniform -- [n]

use cellopt::cell::CellSolver;
use cellopt::homogenize::homogenized_tensor;
use cellopt::{apparent_poisson, ElasticTensor4, SolverOptions, TensorField, UnitCellMesh};

fn main() -> cellopt::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mesh = UnitCellMesh::new(n)?;
    let phase = ElasticTensor4::isotropic(0.91, 0.3)?;
    let field = TensorField::uniform(&mesh, phase);

    let solver = CellSolver::new(&mesh, SolverOptions::default());
    let solutions = solver.solve(&mesh, &field, None)?;
    let ah = homogenized_tensor(&mesh, &field, &solutions);

    let chi_max = solutions.chi.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("n = {n}, max |chi| = {chi_max:.3e}");
    println!("{:>6} {:>14} {:>14}", "", "phase", "homogenized");
    for (name, r, c) in [("A1111", 0, 0), ("A1122", 0, 1), ("A2222", 1, 1), ("A1212", 2, 2)] {
        println!("{name:>6} {:>14.10} {:>14.10}", phase.voigt()[r][c], ah.tensor.voigt()[r][c]);
    }
    println!("nu_app = {:.10}", apparent_poisson(&ah)?);
    Ok(())
}
