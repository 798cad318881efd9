//! With one orbital and one species state per species the multi-layer
//! equations collapse to coupled Gross-Pitaevskii equations.

use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::integrator::Tolerances;
use mlmctdhb::oracle;
use mlmctdhb::propagate::{propagate_real_with, PropagationConfig};
use mlmctdhb::state::{init_hartree, InterSpec, Mixture, MixtureSpec, SpeciesSpec};

fn main() -> mlmctdhb::Result<()> {
    let species = |name: &str, g: f64| SpeciesSpec {
        name: name.into(),
        particles: 6,
        spfs: 1,
        species_states: 1,
        g,
        trap: None,
    };
    let pair = |a: &str, b: &str, g: f64| InterSpec { species: [a.into(), b.into()], g };
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 0.04), species("B", 0.03), species("C", 0.0)],
        inter: vec![pair("A", "B", 0.0017), pair("A", "C", -0.0009), pair("B", "C", -0.0009)],
    };
    let mixture = Mixture::new(&spec)?;
    // Hartree product of the blocked trap, released into the double well
    let start = init_hartree(&mixture.blocked(30.0)?)?;

    let cfg = PropagationConfig { t_final: 5.0, output_stride: 1.0, atol: 1e-11, rtol: 1e-11, ..Default::default() };
    let mut frames = Vec::new();
    propagate_real_with(start.clone(), &mixture, &cfg, None, |p| {
        frames.push(p.state().clone());
        Ok(())
    })?;
    let times: Vec<f64> = frames.iter().map(|s| s.time).collect();
    let initial: Vec<_> = (0..3).map(|s| start.orbitals(s).column(0).into_owned()).collect();
    let gp = oracle::gp_propagate(&mixture, &initial, &times, Tolerances { atol: 1e-12, rtol: 1e-12 })?;

    let w = &mixture.grid.weights;
    for (state, phis) in frames.iter().zip(&gp) {
        let mut worst: f64 = 0.0;
        for s in 0..3 {
            let ml = state.orbitals(s);
            for i in 0..w.len() {
                worst = worst.max((ml[(i, 0)].norm_sqr() - phis[s][i].norm_sqr()).abs() / w[i]);
            }
        }
        println!("t = {:.1}  max density difference {worst:.2e}", state.time);
    }
    Ok(())
}
