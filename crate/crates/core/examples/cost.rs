//! Coefficient counts of the multi-layer ansatz against single-layer
//! MCTDHB as particle number and truncation grow.

use mlmctdhb::cli::cost_estimate;
use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::state::{MixtureSpec, SpeciesSpec};

fn main() -> mlmctdhb::Result<()> {
    println!("species   N   m   M     ML-MCTDHB          MCTDHB   ratio");
    for (count, n, m, big_m) in [(2, 10, 4, 10), (3, 10, 4, 4), (3, 20, 4, 4), (3, 100, 3, 5), (4, 10, 4, 4)] {
        let species = (0..count)
            .map(|s| SpeciesSpec {
                name: format!("S{s}"),
                particles: n,
                spfs: m,
                species_states: big_m,
                g: 0.0,
                trap: None,
            })
            .collect();
        let spec = MixtureSpec {
            grid: GridSpec::default(),
            trap: TrapSpec::double_well(3.0, 0.2),
            species,
            inter: vec![],
        };
        match cost_estimate(&spec) {
            Ok(c) => println!(
                "{count:>7} {n:>3} {m:>3} {big_m:>3} {:>13} {:>15} {:>7.1}",
                c.ml_mctdhb.total, c.mctdhb.total, c.ratio
            ),
            Err(e) => println!("{count:>7} {n:>3} {m:>3} {big_m:>3}  {e}"),
        }
    }
    Ok(())
}
