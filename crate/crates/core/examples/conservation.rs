//! Norm and energy drift of a two-species run, and how the drift follows
//! the integrator tolerance.

use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::propagate::{propagate_real, relax_imaginary, PropagationConfig};
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
        species: vec![species("A", 0.1), species("B", 0.05)],
        inter: vec![InterSpec { species: ["A".into(), "B".into()], g: 0.05 }],
    };
    let mixture = Mixture::new(&spec)?;
    let blocked = mixture.blocked(30.0)?;
    let start = relax_imaginary(&init_hartree(&blocked)?, &blocked, &PropagationConfig::default())?.state;

    for tol in [1e-6, 1e-7, 1e-8, 1e-9] {
        let cfg = PropagationConfig { t_final: 10.0, output_stride: 1.0, atol: tol, rtol: tol, ..Default::default() };
        let traj = propagate_real(&start, &mixture, &cfg)?;
        let e0 = traj.records[0].energy;
        let dnorm = traj.records.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
        let de = traj.records.iter().map(|r| ((r.energy - e0) / e0).abs()).fold(0.0, f64::max);
        println!(
            "tol {tol:.0e}: |norm - 1| <= {dnorm:.2e}, |dE/E| <= {de:.2e}, {} steps, {} rejected",
            traj.stats.accepted, traj.stats.rejected
        );
    }
    Ok(())
}
