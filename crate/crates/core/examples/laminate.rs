//! Rank-one laminate: the FEM tensor of a two-material layered cell against
//! the closed-form laminate formula.
//!
//! cargo run --release --example laminate -- [n] [E_a] [E_b]

use cellopt::validate::laminate_check;
use cellopt::ElasticTensor4;

fn main() -> cellopt::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let n = args.first().map_or(100, |&v| v as usize);
    let ea = args.get(1).copied().unwrap_or(0.91);
    let eb = args.get(2).copied().unwrap_or(1.82);
    let a = ElasticTensor4::isotropic(ea, 0.3)?;
    let b = ElasticTensor4::isotropic(eb, 0.3)?;

    let report = laminate_check(n, &a, &b, 1e-10)?;
    println!("layers normal to x1, E = {ea} | {eb}, nu = 0.3, n = {n}");
    println!("{:>6} {:>14} {:>14} {:>10}", "", "fem", "closed form", "rel. err");
    for (name, r, c) in [("A1111", 0, 0), ("A1122", 0, 1), ("A2222", 1, 1), ("A1212", 2, 2)] {
        let (f, o) = (report.fem[r][c], report.oracle[r][c]);
        println!("{name:>6} {f:>14.10} {o:>14.10} {:>10.2e}", ((f - o) / o).abs());
    }
    Ok(())
}
