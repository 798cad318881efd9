//! Full-CI limit: with the orbital space truncated to the lowest four
//! one-body states and every species state kept, the multi-layer run must
//! reproduce exact propagation in the same space.

use mlmctdhb::grid::{GridSpec, TrapSpec};
use mlmctdhb::integrator::Tolerances;
use mlmctdhb::observables::ObservableRecord;
use mlmctdhb::oracle::{self, FullCIBasis};
use mlmctdhb::propagate::{propagate_real, PropagationConfig};
use mlmctdhb::state::{InterSpec, Mixture, MixtureSpec, SpeciesSpec};

fn worst_gap(a: &ObservableRecord, b: &ObservableRecord) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.species.iter().zip(&b.species) {
        worst = worst.max((x.p_left - y.p_left).abs());
        for (p, q) in x.rho1_populations.iter().zip(&y.rho1_populations) {
            worst = worst.max((p - q).abs());
        }
        for (p, q) in x.eta1_populations.iter().zip(&y.eta1_populations) {
            worst = worst.max((p - q).abs());
        }
    }
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        worst = worst.max((x.p_ll - y.p_ll).abs()).max((x.p_rr - y.p_rr).abs());
    }
    worst.max((a.energy - b.energy).abs())
}

fn main() -> mlmctdhb::Result<()> {
    let species = |name: &str, g: f64| SpeciesSpec {
        name: name.into(),
        particles: 2,
        spfs: 4,
        species_states: 10,
        g,
        trap: None,
    };
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 0.3), species("B", 0.2)],
        inter: vec![InterSpec { species: ["A".into(), "B".into()], g: 0.25 }],
    };
    let mixture = Mixture::new(&spec)?.restrict_to_lowest(4)?;
    let basis = FullCIBasis::for_mixture(&mixture, Some(4), oracle::DEFAULT_CAP)?;
    let h = oracle::build_fullci_hamiltonian(&mixture, &basis)?;
    let h_blocked = oracle::build_fullci_hamiltonian(&mixture.blocked(30.0)?, &basis)?;
    let (e0, psi0) = oracle::ground_state_exact(&h_blocked)?;
    println!("full-CI dimension {}, blocked ground energy {e0:.10}", basis.dim());

    let start = oracle::embed(&basis, &psi0, mixture.layout.clone(), &mixture)?;
    let cfg = PropagationConfig { t_final: 5.0, output_stride: 0.5, ..Default::default() };
    let traj = propagate_real(&start, &mixture, &cfg)?;

    let times: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let tight = Tolerances { atol: 1e-12, rtol: 1e-12 };
    let exact = oracle::propagate_exact(&psi0, &h, &times, tight)?;
    let mut worst: f64 = 0.0;
    for (rec, psi) in traj.records.iter().zip(&exact) {
        let reference = oracle::fullci_record(&mixture, &basis, &h, psi, rec.t)?;
        let gap = worst_gap(rec, &reference);
        worst = worst.max(gap);
        println!("t={:4.1}  P_L(A)={:.8}  P_LL(A,B)={:.8}  gap={gap:.2e}", rec.t, rec.species[0].p_left, rec.pairs[1].p_ll);
    }
    println!("largest observable deviation {worst:.3e}");
    Ok(())
}
