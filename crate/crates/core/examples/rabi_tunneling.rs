//! One boson loaded into the left well by a blocking step, then released:
//! the left-well probability oscillates with the Rabi period.

use mlmctdhb::grid::{GridSpec, TrapSpec, DEFAULT_BLOCKING_STEP};
use mlmctdhb::propagate::{propagate_real, relax_imaginary, PropagationConfig};
use mlmctdhb::state::{init_hartree, Mixture, MixtureSpec, SpeciesSpec};

fn main() -> mlmctdhb::Result<()> {
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![SpeciesSpec {
            name: "A".into(),
            particles: 1,
            spfs: 1,
            species_states: 1,
            g: 0.0,
            trap: None,
        }],
        inter: vec![],
    };
    let mixture = Mixture::new(&spec)?;
    let blocked = mixture.blocked(DEFAULT_BLOCKING_STEP)?;
    let loaded = relax_imaginary(&init_hartree(&blocked)?, &blocked, &PropagationConfig::default())?;

    let cfg = PropagationConfig { t_final: 30.0, output_stride: 0.5, ..Default::default() };
    let traj = propagate_real(&loaded.state, &mixture, &cfg)?;
    for r in traj.records.iter().step_by(3) {
        let bar = "#".repeat((r.species[0].p_left * 40.0).round() as usize);
        println!("t = {:5.1}  P_L = {:.5}  {bar}", r.t, r.species[0].p_left);
    }
    let back = traj
        .records
        .iter()
        .filter(|r| r.t > 20.0)
        .max_by(|a, b| a.species[0].p_left.total_cmp(&b.species[0].p_left))
        .unwrap();
    println!("returns to the left well at t = {:.1} (P_L = {:.5})", back.t, back.species[0].p_left);
    Ok(())
}
