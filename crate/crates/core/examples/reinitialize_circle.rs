//! Redistancing: a circle described by a badly scaled level-set function is
//! turned back into a signed distance without moving its zero contour.
//!
//! cargo run --release --example reinitialize_circle -- [n]

use cellopt::levelset::{reinitialize, REINIT_CFL};
use cellopt::UnitCellMesh;

fn main() -> cellopt::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let mesh = UnitCellMesh::new(n)?;
    let (r, dx) = (0.25, mesh.dx());
    let exact: Vec<f64> = (0..n * n)
        .map(|k| {
            let [x, y] = mesh.dof_coords(k);
            x.hypot(y) - r
        })
        .collect();
    // Same zero set, gradient norm far from one.
    let distorted: Vec<f64> = exact.iter().map(|d| 3.0 * d * (1.0 + 2.0 * d)).collect();

    let band_error = |phi: &[f64]| {
        phi.iter()
            .zip(&exact)
            .filter(|(_, e)| e.abs() < 3.0 * dx)
            .map(|(p, e)| (p - e).abs())
            .fold(0.0, f64::max)
    };
    println!("n = {n}, pseudo-time step {REINIT_CFL} dx");
    println!("{:>6} {:>16}", "steps", "max error near interface / dx");
    println!("{:>6} {:>16.4}", 0, band_error(&distorted) / dx);
    for steps in [5, 10, 25, 50, 100] {
        let d = reinitialize(&distorted, steps, n, dx)?;
        println!("{steps:>6} {:>16.4}", band_error(&d) / dx);
    }
    Ok(())
}
