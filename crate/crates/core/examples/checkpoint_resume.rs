//! Stop a run halfway, write a checkpoint, read it back and continue. The
//! resumed run ends on exactly the state of the uninterrupted one.

use mlmctdhb::checkpoint::Checkpoint;
use mlmctdhb::eom::Mode;
use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::propagate::{PropagationConfig, Propagator};
use mlmctdhb::state::{random_state, InterSpec, Mixture, MixtureSpec, SpeciesSpec};

fn main() -> mlmctdhb::Result<()> {
    let species = |name: &str, g: f64| SpeciesSpec {
        name: name.into(),
        particles: 2,
        spfs: 2,
        species_states: 2,
        g,
        trap: None,
    };
    let spec = MixtureSpec {
        grid: GridSpec::Harmonic { points: 100, omega: 1.0 },
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 0.2), species("B", 0.1)],
        inter: vec![InterSpec { species: ["A".into(), "B".into()], g: 0.1 }],
    };
    let mixture = Mixture::new(&spec)?;
    let start = random_state(&mixture, 7)?;
    let cfg = PropagationConfig::default();

    // the uninterrupted run also stops at t = 2, so both see the same steps
    let mut straight = Propagator::new(start.clone(), &mixture, &cfg, Mode::Real)?;
    straight.advance_to(2.0)?;
    straight.advance_to(4.0)?;

    let mut first = Propagator::new(start, &mixture, &cfg, Mode::Real)?;
    first.advance_to(2.0)?;
    let path = std::env::temp_dir().join("mlb_example.mlb");
    Checkpoint { spec: spec.clone(), state: first.state().clone(), controller: Some(first.controller()) }.save(&path)?;

    let cp = Checkpoint::load(&path)?;
    let resumed_mixture = Mixture::new(&cp.spec)?;
    let mut second =
        Propagator::new(cp.state, &resumed_mixture, &cfg, Mode::Real)?.with_controller(cp.controller.unwrap())?;
    second.advance_to(4.0)?;

    let diff = straight
        .state()
        .as_slice()
        .iter()
        .zip(second.state().as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("checkpoint {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!("largest coefficient difference after resuming: {diff:e}");
    std::fs::remove_file(&path)?;
    Ok(())
}
