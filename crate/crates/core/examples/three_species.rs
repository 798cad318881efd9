//! Three species loaded into the left well. A and B repel each other and
//! themselves, C only attracts both. Prints tunneling and pair correlations.
//!
//! Takes the final time as an optional argument (default 20).

use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::propagate::{propagate_real, relax_imaginary, PropagationConfig};
use mlmctdhb::state::{init_hartree, InterSpec, Mixture, MixtureSpec, SpeciesSpec};

fn main() -> mlmctdhb::Result<()> {
    let t_final: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let (ga, gb) = (0.04, 0.03);
    let gab = 0.05 * f64::sqrt(ga * gb);
    let species = |name: &str, g: f64| SpeciesSpec {
        name: name.into(),
        particles: 3,
        spfs: 2,
        species_states: 2,
        g,
        trap: None,
    };
    let pair = |a: &str, b: &str, g: f64| InterSpec { species: [a.into(), b.into()], g };
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", ga), species("B", gb), species("C", 0.0)],
        inter: vec![pair("A", "B", gab), pair("A", "C", -0.5 * gab), pair("B", "C", -0.5 * gab)],
    };
    let mixture = Mixture::new(&spec)?;
    let blocked = mixture.blocked(30.0)?;
    let loaded = relax_imaginary(&init_hartree(&blocked)?, &blocked, &PropagationConfig::default())?;

    let cfg = PropagationConfig { t_final, output_stride: 1.0, ..Default::default() };
    let traj = propagate_real(&loaded.state, &mixture, &cfg)?;
    let fmt = |f: Option<f64>| f.map_or("   -  ".to_string(), |x| format!("{x:.4}"));
    println!("    t   P_L(A)  P_L(B)  P_L(C)  f(A,A)  f(A,B)  f(A,C)");
    for r in &traj.records {
        let f = |a: usize, b: usize| r.pairs.iter().find(|p| p.a == a && p.b == b).and_then(|p| p.f);
        println!(
            "{:5.1}  {:.4}  {:.4}  {:.4}  {}  {}  {}",
            r.t,
            r.species[0].p_left,
            r.species[1].p_left,
            r.species[2].p_left,
            fmt(f(0, 0)),
            fmt(f(0, 1)),
            fmt(f(0, 2))
        );
    }
    Ok(())
}
