//! Acceptance criteria. Every test prints one PASS/FAIL line; tolerances are
//! pinned below. Run with `cargo test --release --test acceptance`; the slow
//! reproduction run needs `-- --ignored`.

mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use mlmctdhb::cli::{cost_estimate, parse_config};
use mlmctdhb::densities::{self, DensitySet};
use mlmctdhb::grid::{self, GridSpec, TrapSpec};
use mlmctdhb::integrator::Tolerances;
use mlmctdhb::linalg::{hermitian_eigen, hermiticity_residual, CMatrix};
use mlmctdhb::observables::{position_density, ObservableRecord};
use mlmctdhb::oracle::{self, FullCIBasis};
use mlmctdhb::propagate::{propagate_real, propagate_real_with, relax_imaginary, PropagationConfig};
use mlmctdhb::state::{init_hartree, random_state, InterSpec, Mixture, MixtureSpec, SpeciesSpec};
use mlmctdhb::MLState;
use nalgebra::DVector;
use num_complex::Complex64;

// criterion 1
const DOUBLET: (f64, f64) = (0.23, 0.01);
const BAND_GAP: (f64, f64) = (1.63, 0.02);
// criterion 2
const RABI_PERIOD: (f64, f64) = (27.0, 0.5);
const RABI_RETURN: f64 = 0.99;
// criterion 3
const FULLCI_GAP: f64 = 1e-6;
// criterion 4
const GP_DENSITY_GAP: f64 = 1e-8;
// criterion 5
const NORM_DRIFT: f64 = 1e-7;
const ENERGY_DRIFT: f64 = 1e-7;
const REDUCED_BUDGET_S: f64 = 600.0;
// criterion 6
const PARITY_X: f64 = 1e-8;
// criterion 7
const DENSITY_BRUTE: f64 = 1e-12;
const TRACE_DEV: f64 = 1e-10;
const PSD_FLOOR: f64 = -1e-12;
const PARTIAL_TRACE: f64 = 1e-12;
// criterion 10
const RELAX_GAP: f64 = 1e-8;
// criterion 9
const SAME_WELL_SATURATION: (f64, f64) = (0.73, 0.05);
const F_AB_MAX: (f64, f64) = (1.4, 0.1);
const C_DEPLETION: f64 = 0.02;
const C_MEAN_FIELD_GAP: f64 = 0.02;
const DAMPING_RATIO: f64 = 0.8;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // written past the test harness capture so the line always shows
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2} [{verdict}] {name}: {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn species(name: &str, n: usize, m: usize, big_m: usize, g: f64) -> SpeciesSpec {
    SpeciesSpec {
        name: name.into(),
        particles: n,
        spfs: m,
        species_states: big_m,
        g,
        trap: None,
    }
}

fn inter(a: &str, b: &str, g: f64) -> InterSpec {
    InterSpec { species: [a.into(), b.into()], g }
}

/// The three-species double-well scenario with `n` bosons per species and
/// attractive coupling of C to A and B.
fn abc_spec(n: usize, m: usize, big_m: usize) -> MixtureSpec {
    let ga = 0.2 / 5.0;
    let gb = 0.75 * ga;
    let gab = 0.05 * (ga * gb as f64).sqrt();
    MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", n, m, big_m, ga), species("B", n, m, big_m, gb), species("C", n, m, big_m, 0.0)],
        inter: vec![inter("A", "B", gab), inter("A", "C", -0.5 * gab), inter("B", "C", -0.5 * gab)],
    }
}

/// Blocked-trap relaxation followed by the real-time mixture.
fn loaded_left(spec: &MixtureSpec) -> (Mixture, MLState) {
    let mix = Mixture::new(spec).unwrap();
    let blocked = mix.blocked(grid::DEFAULT_BLOCKING_STEP).unwrap();
    let relaxed = relax_imaginary(&init_hartree(&blocked).unwrap(), &blocked, &PropagationConfig::default()).unwrap();
    (mix, relaxed.state)
}

#[test]
fn criterion_01_one_body_spectrum() {
    let trap = TrapSpec::double_well(3.0, 0.2);
    let g = GridSpec::default().build().unwrap();
    let h = grid::one_body_hamiltonian(&g, &trap).unwrap();
    let (e, _) = grid::eigenpairs(&h, 10).unwrap();
    let top = trap.barrier_top();
    let below = e.iter().filter(|&&x| x < top).count();
    let splittings = [e[1] - e[0], e[3] - e[2], e[5] - e[4]];
    let gaps = [e[2] - e[1], e[4] - e[3]];
    let doublets = splittings.iter().all(|s| gaps.iter().all(|g| s < g));
    let pass = (splittings[0] - DOUBLET.0).abs() <= DOUBLET.1
        && (gaps[0] - BAND_GAP.0).abs() <= BAND_GAP.1
        && below == 6
        && doublets;
    report(
        1,
        "one-body spectrum",
        pass,
        &format!(
            "dE = {:.5}, gap = {:.5}, {below} levels below barrier top {top:.4}, splittings {:?}",
            splittings[0], gaps[0], splittings
        ),
    );
}

#[test]
fn criterion_02_rabi_period() {
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 1, 1, 1, 0.0)],
        inter: vec![],
    };
    let (mix, start) = loaded_left(&spec);
    let cfg = PropagationConfig { t_final: RABI_PERIOD.0 + RABI_PERIOD.1, output_stride: 0.05, ..Default::default() };
    let traj = propagate_real(&start, &mix, &cfg).unwrap();
    let window = traj
        .records
        .iter()
        .filter(|r| (r.t - RABI_PERIOD.0).abs() <= RABI_PERIOD.1 + 1e-9);
    let (t_best, p_best) = window
        .map(|r| (r.t, r.species[0].p_left))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let p_min = traj.records.iter().map(|r| r.species[0].p_left).fold(1.0, f64::min);
    let pass = p_best >= RABI_RETURN && p_min < 0.1;
    report(
        2,
        "Rabi period",
        pass,
        &format!("P_L(0) = {:.5}, min P_L = {p_min:.5}, max P_L in window = {p_best:.5} at t = {t_best:.2}", traj.records[0].species[0].p_left),
    );
}

#[test]
fn criterion_03_fullci_equivalence() {
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 2, 4, 10, 0.3), species("B", 2, 4, 10, 0.2)],
        inter: vec![inter("A", "B", 0.25)],
    };
    let clock = Instant::now();
    let gap = fullci_gap(&spec, 4, 5.0);
    report(
        3,
        "full-CI equivalence",
        gap <= FULLCI_GAP,
        &format!("largest observable deviation {gap:.3e} over t in [0, 5] ({:.1} s)", clock.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_04_mean_field_limit() {
    let spec = abc_spec(6, 1, 1);
    let mix = Mixture::new(&spec).unwrap();
    let start = init_hartree(&mix.blocked(30.0).unwrap()).unwrap();
    let cfg = PropagationConfig { t_final: 5.0, output_stride: 0.25, atol: 1e-11, rtol: 1e-11, ..Default::default() };
    let mut ml: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut times = Vec::new();
    propagate_real_with(start.clone(), &mix, &cfg, None, |p| {
        let st = p.state();
        times.push(st.time);
        ml.push((0..3).map(|s| st.orbitals(s).column(0).iter().map(|c| c.norm_sqr()).collect()).collect());
        Ok(())
    })
    .unwrap();
    let initial: Vec<DVector<Complex64>> = (0..3).map(|s| start.orbitals(s).column(0).into_owned()).collect();
    let gp = oracle::gp_propagate(&mix, &initial, &times, Tolerances { atol: 1e-12, rtol: 1e-12 }).unwrap();
    let w = &mix.grid.weights;
    let mut worst: f64 = 0.0;
    for (a, b) in ml.iter().zip(&gp) {
        for s in 0..3 {
            for i in 0..w.len() {
                worst = worst.max((a[s][i] - b[s][i].norm_sqr()).abs() / w[i]);
            }
        }
    }
    let moved = (0..3)
        .map(|s| ml.last().unwrap()[s].iter().zip(&ml[0][s]).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    report(
        4,
        "mean-field limit",
        worst <= GP_DENSITY_GAP && moved > 1e-2,
        &format!("density sup-norm gap {worst:.3e} over t in [0, 5] (densities moved by {moved:.3})"),
    );
}

#[test]
fn criterion_05_conservation() {
    let clock = Instant::now();
    let (mix, start) = loaded_left(&abc_spec(3, 2, 2));
    let cfg = PropagationConfig { t_final: 100.0, output_stride: 1.0, ..Default::default() };
    let traj = propagate_real(&start, &mix, &cfg).unwrap();
    let e0 = traj.records[0].energy;
    let dnorm = traj.records.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
    let de = traj.records.iter().map(|r| ((r.energy - e0) / e0).abs()).fold(0.0, f64::max);
    let secs = clock.elapsed().as_secs_f64();
    report(
        5,
        "conservation (N=(3,3,3), m=M=2)",
        dnorm <= NORM_DRIFT && de <= ENERGY_DRIFT && secs < REDUCED_BUDGET_S,
        &format!("max |norm-1| = {dnorm:.2e}, max |dE/E| = {de:.2e} over t in [0, 100], {} repairs, {secs:.0} s", traj.repairs.len()),
    );
}

fn mean_x(state: &MLState, mix: &Mixture, s: usize) -> f64 {
    let rho = densities::rho1(state, &mix.fock[s], s);
    let dens = position_density(&rho, &state.orbitals(s));
    dens.iter().zip(&mix.grid.nodes).map(|(d, x)| d * x).sum()
}

#[test]
fn criterion_06_parity() {
    // parity-definite start from the pure harmonic trap, then a quench into
    // the interacting double well
    let spec = abc_spec(3, 2, 2);
    let mut harmonic = spec.clone();
    harmonic.trap = TrapSpec::default();
    let start = init_hartree(&Mixture::new(&harmonic).unwrap()).unwrap();
    let mix = Mixture::new(&spec).unwrap();
    let cfg = PropagationConfig { t_final: 10.0, output_stride: 0.5, ..Default::default() };
    let mut worst: f64 = 0.0;
    let mut width_change: f64 = 0.0;
    let width0: f64 = {
        let rho = densities::rho1(&start, &mix.fock[0], 0);
        let d = position_density(&rho, &start.orbitals(0));
        d.iter().zip(&mix.grid.nodes).map(|(d, x)| d * x * x).sum()
    };
    propagate_real_with(start, &mix, &cfg, None, |p| {
        for s in 0..3 {
            worst = worst.max(mean_x(p.state(), &mix, s).abs());
        }
        let rho = densities::rho1(p.state(), &mix.fock[0], 0);
        let d = position_density(&rho, &p.state().orbitals(0));
        let w: f64 = d.iter().zip(&mix.grid.nodes).map(|(d, x)| d * x * x).sum();
        width_change = width_change.max((w - width0).abs());
        Ok(())
    })
    .unwrap();
    report(
        6,
        "parity preservation",
        worst <= PARITY_X && width_change > 1e-2,
        &format!("max |<x>| = {worst:.2e} over t in [0, 10] (<x^2> of A changed by {width_change:.3})"),
    );
}

fn small_mixture(shape: &[(usize, usize, usize)]) -> Mixture {
    let names = ["A", "B", "C"];
    let mut spec = MixtureSpec {
        grid: GridSpec::Harmonic { points: 8, omega: 1.0 },
        trap: TrapSpec::double_well(1.0, 0.2),
        species: Vec::new(),
        inter: Vec::new(),
    };
    for (s, &(n, m, big_m)) in shape.iter().enumerate() {
        spec.species.push(species(names[s], n, m, big_m, 0.1));
        for b in 0..s {
            spec.inter.push(inter(names[b], names[s], 0.05));
        }
    }
    Mixture::new(&spec).unwrap()
}

#[test]
fn criterion_07_density_suite() {
    let cases: [&[(usize, usize, usize)]; 5] = [
        &[(4, 3, 3)],
        &[(2, 2, 3), (3, 2, 2)],
        &[(6, 4, 3), (6, 4, 3)],
        &[(3, 3, 3), (2, 3, 3), (3, 2, 2)],
        &[(1, 3, 2), (4, 2, 3), (2, 2, 2)],
    ];
    let mut brute: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut min_eig: f64 = f64::INFINITY;
    let mut partial: f64 = 0.0;
    let mut largest = 0;
    for (c, shape) in cases.iter().enumerate() {
        let mix = small_mixture(shape);
        let hilbert: usize = mix.layout.species.iter().map(|d| d.basis_dim).product();
        assert!(hilbert <= 10_000);
        largest = largest.max(hilbert);
        for seed in 0..3u64 {
            let state = random_state(&mix, 100 * c as u64 + seed).unwrap();
            let dens = DensitySet::compute(&state, &mix);
            for s in 0..shape.len() {
                for m in [&dens.eta1[s], &dens.rho1[s]] {
                    herm = herm.max(hermiticity_residual(m));
                    let tr: Complex64 = (0..m.nrows()).map(|i| m[(i, i)]).sum();
                    trace = trace.max((tr - 1.0).norm());
                    min_eig = min_eig.min(hermitian_eigen(m).0.into_iter().fold(f64::INFINITY, f64::min));
                }
                brute = brute.max(max_diff(&dens.eta1[s], &eta1_brute(&state, s)));
                brute = brute.max(max_diff(&dens.rho1[s], &rho1_brute(&state, s)));
                if let Some(r2) = &dens.rho2_same[s] {
                    brute = brute.max(r2.max_abs_diff(&rho2_same_brute(&state, s)));
                }
                for b in 0..shape.len() {
                    if b == s {
                        continue;
                    }
                    let e2 = dens.eta2[s][b].as_ref().unwrap();
                    brute = brute.max(e2.max_abs_diff(&eta2_brute(&state, s, b)));
                    let r2 = dens.rho2_cross[s][b].as_ref().unwrap();
                    brute = brute.max(r2.max_abs_diff(&rho2_cross_brute(&state, s, b)));
                    let (ms, mb) = (shape[s].2, shape[b].2);
                    let traced = CMatrix::from_fn(ms, ms, |i, j| (0..mb).map(|u| e2.get(i, u, j, u)).sum());
                    partial = partial.max(max_diff(&traced, &dens.eta1[s]));
                }
            }
        }
    }
    let pass = brute <= DENSITY_BRUTE
        && trace <= TRACE_DEV
        && herm <= DENSITY_BRUTE
        && min_eig >= PSD_FLOOR
        && partial <= PARTIAL_TRACE;
    report(
        7,
        "density-matrix suite",
        pass,
        &format!(
            "brute-force gap {brute:.1e}, trace dev {trace:.1e}, hermiticity {herm:.1e}, min eigenvalue {min_eig:.1e}, partial trace {partial:.1e}, largest Hilbert dim {largest}"
        ),
    );
}

#[test]
fn criterion_08_cost() {
    let spec = abc_spec(6, 4, 4);
    let c = cost_estimate(&spec).unwrap();
    let pass = c.ml_mctdhb.total == 4072 && c.mctdhb.total == 595_704 && c.ratio_floor == 146;
    report(
        8,
        "cost formulas",
        pass,
        &format!("ML-MCTDHB {} vs MCTDHB {} coefficients, ratio {:.2}", c.ml_mctdhb.total, c.mctdhb.total, c.ratio),
    );
}

fn run_config(name: &str) -> mlmctdhb::cli::RunConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    parse_config(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// `max - min` of `p` over records with `t` in `[lo, hi]`.
fn amplitude(t: &[f64], p: &[f64], lo: f64, hi: f64) -> f64 {
    let w: Vec<f64> = t.iter().zip(p).filter(|(t, _)| **t >= lo && **t <= hi).map(|(_, p)| *p).collect();
    w.iter().copied().fold(f64::NEG_INFINITY, f64::max) - w.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
#[ignore = "long-running reproduction of the three-species dynamics"]
fn criterion_09_three_species_reproduction() {
    let clock = Instant::now();
    // (a), (b): m = M = 3 against the mean-field run up to t = 100
    let cfg = run_config("abc_attractive.json");
    // real-time traps drop the blocking step; loaded_left adds it back for the relaxation
    let spec = cfg.propagation_spec();
    let (mix, start) = loaded_left(&spec);
    let mut prop = cfg.propagation.clone();
    prop.t_final = 100.0;
    let many = propagate_real(&start, &mix, &prop).unwrap().records;
    let mut mf_spec = spec.clone();
    for s in &mut mf_spec.species {
        s.spfs = 1;
        s.species_states = 1;
    }
    let (mf_mix, mf_start) = loaded_left(&mf_spec);
    let mean_field = propagate_real(&mf_start, &mf_mix, &prop).unwrap().records;
    let t: Vec<f64> = many.iter().map(|r| r.t).collect();
    let pl = |recs: &[ObservableRecord], s: usize| recs.iter().map(|r| r.species[s].p_left).collect::<Vec<_>>();
    let period = 2.0 * std::f64::consts::PI / 0.2327;
    let early = |s| amplitude(&t, &pl(&many, s), 0.0, period);
    let late = |s| amplitude(&t, &pl(&many, s), 100.0 - period, 100.0);
    let damped = [0, 1].iter().all(|&s| late(s) <= DAMPING_RATIO * early(s));
    let c_undamped = late(2) > DAMPING_RATIO * early(2);
    let c_track = pl(&many, 2).iter().zip(pl(&mean_field, 2)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let same_well: Vec<f64> = many
        .iter()
        .filter(|r| r.t >= 100.0 - period)
        .map(|r| {
            let p = r.pairs.iter().find(|p| p.a == 0 && p.b == 0).unwrap();
            p.p_ll + p.p_rr
        })
        .collect();
    let saturation = same_well.iter().sum::<f64>() / same_well.len() as f64;

    // (c), (d): m = 3, M = 5 up to t = 300
    let long_cfg = run_config("long_attractive_m3_M5.json");
    let (long_mix, long_start) = loaded_left(&long_cfg.propagation_spec());
    let long = propagate_real(&long_start, &long_mix, &long_cfg.propagation).unwrap().records;
    let f_max = long
        .iter()
        .filter_map(|r| r.pairs.iter().find(|p| p.a == 0 && p.b == 1).and_then(|p| p.f))
        .fold(f64::NEG_INFINITY, f64::max);
    let depletion = long.iter().map(|r| 1.0 - r.species[2].rho1_populations[0]).fold(0.0, f64::max);

    let pass = damped
        && c_undamped
        && c_track <= C_MEAN_FIELD_GAP
        && (saturation - SAME_WELL_SATURATION.0).abs() <= SAME_WELL_SATURATION.1
        && (f_max - F_AB_MAX.0).abs() <= F_AB_MAX.1
        && depletion <= C_DEPLETION;
    report(
        9,
        "three-species reproduction",
        pass,
        &format!(
            "P_L amplitude first/last period A {:.3}/{:.3} B {:.3}/{:.3} C {:.3}/{:.3}; C vs mean field {c_track:.3}; same-well A {saturation:.3}; max f(A,B) {f_max:.3}; C depletion {depletion:.4}; {:.0} s",
            early(0), late(0), early(1), late(1), early(2), late(2), clock.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_10_relaxation() {
    // tiny interacting system against the dense ground state
    let spec = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::double_well(3.0, 0.2),
        species: vec![species("A", 2, 3, 6, 0.4), species("B", 2, 3, 6, 0.3)],
        inter: vec![inter("A", "B", 0.2)],
    };
    let mix = Mixture::new(&spec).unwrap().restrict_to_lowest(3).unwrap();
    let basis = FullCIBasis::for_mixture(&mix, Some(3), oracle::DEFAULT_CAP).unwrap();
    let (exact, _) = oracle::ground_state_exact(&oracle::build_fullci_hamiltonian(&mix, &basis).unwrap()).unwrap();
    let start = random_state(&mix, 3).unwrap();
    let relaxed = relax_imaginary(&start, &mix, &PropagationConfig::default()).unwrap();
    let gap = (relaxed.energy - exact).abs();

    // non-interacting bosons in the pure harmonic trap
    let free = MixtureSpec {
        grid: GridSpec::default(),
        trap: TrapSpec::default(),
        species: vec![species("A", 2, 2, 2, 0.0), species("B", 3, 2, 2, 0.0)],
        inter: vec![],
    };
    let free_mix = Mixture::new(&free).unwrap();
    let free_start = random_state(&free_mix, 5).unwrap();
    let free_relaxed = relax_imaginary(&free_start, &free_mix, &PropagationConfig::default()).unwrap();
    let free_gap = (free_relaxed.energy - 2.5).abs();
    report(
        10,
        "relaxation",
        gap <= RELAX_GAP && free_gap <= RELAX_GAP,
        &format!(
            "interacting E = {:.12} vs exact {exact:.12} (gap {gap:.1e}); non-interacting E = {:.12} vs 2.5 (gap {free_gap:.1e})",
            relaxed.energy, free_relaxed.energy
        ),
    );
}
