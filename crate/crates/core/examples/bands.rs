//! Single-particle spectrum of the double well: tunneling doublets below the
//! barrier, the band gap, and the Rabi period set by the lowest doublet.

use mlmctdhb::grid::{self, Grid, TrapSpec};

fn main() -> mlmctdhb::Result<()> {
    let trap = TrapSpec::double_well(3.0, 0.2);
    let mut splitting = Vec::new();
    for points in [150, 250, 350] {
        let h = grid::one_body_hamiltonian(&Grid::harmonic(points, 1.0)?, &trap)?;
        let (e, _) = grid::eigenpairs(&h, 10)?;
        splitting.push(e[1] - e[0]);
        if points == 250 {
            println!("barrier top {:.4}", trap.barrier_top());
            for (j, ej) in e.iter().enumerate() {
                let mark = if *ej < trap.barrier_top() { "below" } else { "above" };
                println!("  level {j}: {ej:.8}  ({mark})");
            }
            println!("band gap E2 - E1 = {:.5}", e[2] - e[1]);
        }
    }
    for (points, de) in [150, 250, 350].iter().zip(&splitting) {
        println!("n = {points}: dE = {de:.10}, Rabi period {:.4}", 2.0 * std::f64::consts::PI / de);
    }
    Ok(())
}
