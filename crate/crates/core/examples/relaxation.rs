//! Imaginary-time relaxation of a two-species mixture, once in the blocked
//! trap and once in the symmetric double well, with natural populations.

use mlmctdhb::densities::{natural_populations, DensitySet};
use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::propagate::{relax_imaginary, PropagationConfig};
use mlmctdhb::state::{init_hartree, InterSpec, Mixture, MixtureSpec, SpeciesSpec};

fn main() -> mlmctdhb::Result<()> {
    let species = |name: &str, g: f64| SpeciesSpec {
        name: name.into(),
        particles: 3,
        spfs: 2,
        species_states: 2,
        g,
        trap: None,
    };
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 0.15), species("B", 0.1)],
        inter: vec![InterSpec { species: ["A".into(), "B".into()], g: 0.2 }],
    };
    let free = Mixture::new(&spec)?;
    let cfg = PropagationConfig { output_stride: 0.5, ..Default::default() };
    for (label, mixture) in [("blocked", free.blocked(30.0)?), ("double well", free)] {
        let out = relax_imaginary(&init_hartree(&mixture)?, &mixture, &cfg)?;
        println!("{label}: E = {:.10} after {} steps", out.energy, out.steps);
        for (tau, e) in out.log.iter().step_by(4) {
            println!("  tau = {tau:5.1}  E = {e:.10}");
        }
        let d = DensitySet::compute(&out.state, &mixture);
        for s in 0..2 {
            let (rho, _) = natural_populations(&d.rho1[s])?;
            let (eta, _) = natural_populations(&d.eta1[s])?;
            println!("  {}: orbital populations {rho:.5?}, species-state populations {eta:.5?}", spec.species[s].name);
        }
    }
    Ok(())
}
