//! Shape-gradient verification: the predicted first-order change of the
//! Lagrangian under random smooth normal motions of both interfaces, against
//! central finite differences.
//!
//! cargo run --release --example gradient_check -- [n] [count]

use cellopt::validate::gradient_check;

fn main() -> cellopt::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(40);
    let count = args.get(1).copied().unwrap_or(4);
    let mut config = cellopt::preset("example1")?;
    config.mesh.n = n;
    config.numerics.cg_tol = 1e-12;

    let report = gradient_check(&config, count, 1, 1e-3)?;
    println!("n = {n}, step = {}", report.delta);
    println!("{:>4} {:>14} {:>14} {:>10}", "case", "predicted", "fin. diff.", "rel. err");
    for (k, c) in report.checks.iter().enumerate() {
        println!("{k:>4} {:>+14.6e} {:>+14.6e} {:>10.2e}", c.predicted, c.finite_difference, c.relative_error);
    }
    println!("max relative error {:.2e}", report.max_relative_error());
    Ok(())
}
