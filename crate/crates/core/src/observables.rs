//! Well populations, joint well probabilities and correlation measures.
//!
//! Positions are split at `x = 0` by node sign. Densities are returned as
//! probability masses per node, so a well probability is a plain sum.

use std::io::Write;

use nalgebra::DMatrixView;
use num_complex::Complex64;

use crate::densities::{natural_populations, DensitySet};
use crate::error::Result;
use crate::grid::Grid;
use crate::linalg::{CMatrix, Tensor4, ZERO};
use crate::state::{MLState, Mixture};

/// Marginals below this make `f` undefined.
pub const MARGINAL_FLOOR: f64 = 1e-8;

/// Number of natural populations reported per density.
pub const REPORTED_POPULATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn contains(self, x: f64) -> bool {
        match self {
            Side::Left => x < 0.0,
            Side::Right => x > 0.0,
        }
    }
}

/// Probability mass per node, `sum_ab rho_ab conj(c_a) c_b`.
pub fn position_density(rho1: &CMatrix, phi: &DMatrixView<Complex64>) -> Vec<f64> {
    let prod = phi * rho1.transpose();
    (0..phi.nrows())
        .map(|i| {
            (0..phi.ncols())
                .map(|a| (phi[(i, a)].conj() * prod[(i, a)]).re)
                .sum()
        })
        .collect()
}

pub fn well_probability(density: &[f64], grid: &Grid, side: Side) -> f64 {
    density
        .iter()
        .zip(&grid.nodes)
        .filter(|(_, &x)| side.contains(x))
        .map(|(d, _)| d)
        .sum()
}

/// Overlap matrix `L[j, q] = sum_{x in side} conj(c_j) c_q`.
pub fn side_overlaps(phi: &DMatrixView<Complex64>, grid: &Grid, side: Side) -> CMatrix {
    let m = phi.ncols();
    let mut out = CMatrix::zeros(m, m);
    for (i, &x) in grid.nodes.iter().enumerate() {
        if side.contains(x) {
            for j in 0..m {
                let cj = phi[(i, j)].conj();
                for q in 0..m {
                    out[(j, q)] += cj * phi[(i, q)];
                }
            }
        }
    }
    out
}

/// Which slots of a two-body tensor pair with the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairLayout {
    /// `<a_j^dagger a_k^dagger a_q a_p>`: first boson carries `(j, p)`.
    Same,
    /// `<a_j^dagger a_q b_k^dagger b_p>`: first boson carries `(j, q)`.
    Cross,
}

fn quadrant(rho2: &Tensor4, layout: PairLayout, l1: &CMatrix, l2: &CMatrix) -> f64 {
    let [d0, d1, d2, d3] = rho2.dims;
    let mut acc = ZERO;
    for j in 0..d0 {
        for k in 0..d1 {
            for q in 0..d2 {
                for p in 0..d3 {
                    let r = rho2.get(j, k, q, p);
                    if r == ZERO {
                        continue;
                    }
                    acc += match layout {
                        PairLayout::Same => r * l1[(j, p)] * l2[(k, q)],
                        PairLayout::Cross => r * l1[(j, q)] * l2[(k, p)],
                    };
                }
            }
        }
    }
    acc.re
}

/// Joint probability of the two bosons being on `sides`, with the pair
/// density renormalized to total mass 1.
pub fn joint_well_probability(
    rho2: &Tensor4,
    layout: PairLayout,
    phi_a: &DMatrixView<Complex64>,
    phi_b: &DMatrixView<Complex64>,
    grid: &Grid,
    sides: (Side, Side),
) -> f64 {
    joint_quadrants(rho2, layout, phi_a, phi_b, grid)[quadrant_index(sides)]
}

fn quadrant_index(sides: (Side, Side)) -> usize {
    match sides {
        (Side::Left, Side::Left) => 0,
        (Side::Left, Side::Right) => 1,
        (Side::Right, Side::Left) => 2,
        (Side::Right, Side::Right) => 3,
    }
}

/// `[LL, LR, RL, RR]`, summing to 1.
pub fn joint_quadrants(
    rho2: &Tensor4,
    layout: PairLayout,
    phi_a: &DMatrixView<Complex64>,
    phi_b: &DMatrixView<Complex64>,
    grid: &Grid,
) -> [f64; 4] {
    let la = [side_overlaps(phi_a, grid, Side::Left), side_overlaps(phi_a, grid, Side::Right)];
    let lb = [side_overlaps(phi_b, grid, Side::Left), side_overlaps(phi_b, grid, Side::Right)];
    let raw = [
        quadrant(rho2, layout, &la[0], &lb[0]),
        quadrant(rho2, layout, &la[0], &lb[1]),
        quadrant(rho2, layout, &la[1], &lb[0]),
        quadrant(rho2, layout, &la[1], &lb[1]),
    ];
    let total: f64 = raw.iter().sum();
    raw.map(|x| x / total)
}

/// `(f_LL, f_RR, f)`, each `None` when a marginal it divides by is below
/// [`MARGINAL_FLOOR`].
pub fn correlation_f(
    p_ll: f64,
    p_rr: f64,
    pa_l: f64,
    pa_r: f64,
    pb_l: f64,
    pb_r: f64,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let ratio = |joint: f64, x: f64, y: f64| (x >= MARGINAL_FLOOR && y >= MARGINAL_FLOOR).then(|| joint / (x * y));
    let f_ll = ratio(p_ll, pa_l, pb_l);
    let f_rr = ratio(p_rr, pa_r, pb_r);
    let f = match (f_ll, f_rr) {
        (Some(a), Some(b)) => Some(((a * a + b * b) / 2.0).sqrt()),
        _ => None,
    };
    (f_ll, f_rr, f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRecord {
    pub p_left: f64,
    pub p_right: f64,
    pub rho1_populations: Vec<f64>,
    pub eta1_populations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub a: usize,
    pub b: usize,
    pub p_ll: f64,
    pub p_rr: f64,
    pub f_ll: Option<f64>,
    pub f_rr: Option<f64>,
    pub f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub species: Vec<SpeciesRecord>,
    /// Pairs `(a, b)` with `a <= b`; same-species pairs only for `N >= 2`.
    pub pairs: Vec<PairRecord>,
    pub norm: f64,
    pub energy: f64,
    pub orthonormality_residual: f64,
}

fn top_populations(m: &CMatrix) -> Result<Vec<f64>> {
    let (mut vals, _) = natural_populations(m)?;
    vals.resize(REPORTED_POPULATIONS.max(vals.len()), 0.0);
    vals.truncate(REPORTED_POPULATIONS);
    Ok(vals)
}

/// Reduced quantities from which a record is assembled; produced either
/// from an ML state or from a full-CI vector.
#[derive(Debug, Clone)]
pub struct RecordInputs<'a> {
    pub t: f64,
    pub orbitals: Vec<DMatrixView<'a, Complex64>>,
    pub eta1: Vec<CMatrix>,
    pub rho1: Vec<CMatrix>,
    pub rho2_same: Vec<Option<Tensor4>>,
    /// Indexed `[a][b]` for `a < b`.
    pub rho2_cross: Vec<Vec<Option<Tensor4>>>,
    pub norm: f64,
    pub energy: f64,
    pub orthonormality_residual: f64,
}

pub fn assemble(inputs: &RecordInputs, grid: &Grid) -> Result<ObservableRecord> {
    let sc = inputs.orbitals.len();
    let mut species = Vec::with_capacity(sc);
    for s in 0..sc {
        let dens = position_density(&inputs.rho1[s], &inputs.orbitals[s]);
        species.push(SpeciesRecord {
            p_left: well_probability(&dens, grid, Side::Left),
            p_right: well_probability(&dens, grid, Side::Right),
            rho1_populations: top_populations(&inputs.rho1[s])?,
            eta1_populations: top_populations(&inputs.eta1[s])?,
        });
    }
    let mut pairs = Vec::new();
    for a in 0..sc {
        for b in a..sc {
            let q = if a == b {
                match &inputs.rho2_same[a] {
                    Some(r) => joint_quadrants(r, PairLayout::Same, &inputs.orbitals[a], &inputs.orbitals[a], grid),
                    None => continue,
                }
            } else {
                match &inputs.rho2_cross[a][b] {
                    Some(r) => joint_quadrants(r, PairLayout::Cross, &inputs.orbitals[a], &inputs.orbitals[b], grid),
                    None => continue,
                }
            };
            let (sa, sb) = (&species[a], &species[b]);
            let (f_ll, f_rr, f) = correlation_f(q[0], q[3], sa.p_left, sa.p_right, sb.p_left, sb.p_right);
            pairs.push(PairRecord {
                a,
                b,
                p_ll: q[0],
                p_rr: q[3],
                f_ll,
                f_rr,
                f,
            });
        }
    }
    Ok(ObservableRecord {
        t: inputs.t,
        species,
        pairs,
        norm: inputs.norm,
        energy: inputs.energy,
        orthonormality_residual: inputs.orthonormality_residual,
    })
}

/// Full record of an ML state from one density snapshot.
pub fn record(state: &MLState, mixture: &Mixture) -> Result<ObservableRecord> {
    let dens = DensitySet::compute(state, mixture);
    let sc = state.species_count();
    let mut cross = vec![vec![None; sc]; sc];
    for (a, row) in dens.rho2_cross.iter().enumerate() {
        for (b, r) in row.iter().enumerate() {
            if a < b {
                cross[a][b] = r.clone();
            }
        }
    }
    let inputs = RecordInputs {
        t: state.time,
        orbitals: (0..sc).map(|s| state.orbitals(s)).collect(),
        eta1: dens.eta1,
        rho1: dens.rho1,
        rho2_same: dens.rho2_same,
        rho2_cross: cross,
        norm: state.norm(),
        energy: state.energy(mixture)?,
        orthonormality_residual: state.orthonormality_residual(),
    };
    assemble(&inputs, &mixture.grid)
}

/// CSV header for the given species names; the column order matches
/// [`csv_row`].
pub fn csv_header(names: &[String], same_species: &[bool]) -> String {
    let mut cols = vec!["t".to_string()];
    for n in names {
        cols.push(format!("P_L({n})"));
        cols.push(format!("P_R({n})"));
        for k in 1..=REPORTED_POPULATIONS {
            cols.push(format!("rho1_{k}({n})"));
        }
        for k in 1..=REPORTED_POPULATIONS {
            cols.push(format!("eta1_{k}({n})"));
        }
    }
    for a in 0..names.len() {
        for b in a..names.len() {
            if a == b && !same_species[a] {
                continue;
            }
            let tag = format!("{}:{}", names[a], names[b]);
            for q in ["P_LL", "P_RR", "f_LL", "f_RR", "f"] {
                cols.push(format!("{q}({tag})"));
            }
        }
    }
    cols.extend(["norm", "energy", "ortho_residual"].map(String::from));
    cols.join(",")
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), fmt)
}

pub fn csv_row(r: &ObservableRecord) -> String {
    let mut cols = vec![fmt(r.t)];
    for s in &r.species {
        cols.push(fmt(s.p_left));
        cols.push(fmt(s.p_right));
        cols.extend(s.rho1_populations.iter().map(|&x| fmt(x)));
        cols.extend(s.eta1_populations.iter().map(|&x| fmt(x)));
    }
    for p in &r.pairs {
        cols.push(fmt(p.p_ll));
        cols.push(fmt(p.p_rr));
        cols.push(fmt_opt(p.f_ll));
        cols.push(fmt_opt(p.f_rr));
        cols.push(fmt_opt(p.f));
    }
    cols.push(fmt(r.norm));
    cols.push(fmt(r.energy));
    cols.push(fmt(r.orthonormality_residual));
    cols.join(",")
}

/// Streams records as CSV.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, mixture: &Mixture) -> Result<CsvWriter<W>> {
        let names: Vec<String> = mixture.spec.species.iter().map(|s| s.name.clone()).collect();
        let same: Vec<bool> = mixture.spec.species.iter().map(|s| s.particles >= 2).collect();
        writeln!(out, "{}", csv_header(&names, &same))?;
        Ok(CsvWriter { out })
    }

    /// Continues an existing file without a header.
    pub fn append(out: W) -> CsvWriter<W> {
        CsvWriter { out }
    }

    pub fn write(&mut self, r: &ObservableRecord) -> Result<()> {
        writeln!(self.out, "{}", csv_row(r))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
