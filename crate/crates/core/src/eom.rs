//! Right-hand sides of the coupled equations of motion for the top tensor,
//! the species states and the orbitals.

use nalgebra::DMatrixView;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{DensitySet, SpeciesTerms};
use crate::error::{Error, Result};
use crate::linalg::{regularized_inverse, CMatrix, ZERO};
use crate::meanfield::{vhat_fields, what_fields, MeanFieldSet, TopHamiltonian};
use crate::state::{MLState, Mixture};

/// Time derivative of every layer, laid out like the state itself.
pub type StateDerivative = MLState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Real,
    Imaginary,
}

impl Mode {
    /// Factor turning `H`-like generators into time derivatives.
    pub(crate) fn factor(self) -> Complex64 {
        match self {
            Mode::Real => Complex64::new(0.0, -1.0),
            Mode::Imaginary => Complex64::new(-1.0, 0.0),
        }
    }
}

/// `dA = -i H A`.
pub fn rhs_top(a: &[Complex64], top: &TopHamiltonian) -> Vec<Complex64> {
    let factor = Mode::Real.factor();
    top.apply(a).into_iter().map(|z| z * factor).collect()
}

fn project_out(basis: &DMatrixView<Complex64>, r: &mut CMatrix) {
    let overlap = basis.adjoint() * &*r;
    *r -= basis * overlap;
}

/// Generator of the species layer of species `s`, before the `-i`.
pub(crate) fn species_generator(
    state: &MLState,
    mixture: &Mixture,
    terms: &[SpeciesTerms],
    dens: &DensitySet,
    mf: &MeanFieldSet,
    s: usize,
) -> CMatrix {
    let c = state.coefficients(s);
    let (dim, big_m) = (c.nrows(), c.ncols());
    if big_m == dim {
        return CMatrix::zeros(dim, big_m);
    }
    let fock = &mixture.fock[s];
    let t = &terms[s];
    let m = t.modes;
    let h = &mf.h[s];
    let v = &mf.v[s];
    let d1 = fock.hole1_dim();
    let d2 = fock.hole2_dim();
    let mut r = CMatrix::zeros(dim, big_m);

    // own Hamiltonian
    let mut hole = vec![ZERO; d1];
    let mut hole2 = vec![ZERO; d2];
    for i in 0..big_m {
        let mut col = vec![ZERO; dim];
        for a in 0..m {
            hole.fill(ZERO);
            for b in 0..m {
                let x = h[(a, b)];
                for (y, z) in hole.iter_mut().zip(&t.hole1[b * big_m + i]) {
                    *y += x * z;
                }
            }
            fock.create_add(a, &hole, &mut col);
        }
        if t.has_two_body() && mixture.g_intra(s) != 0.0 {
            for a in 0..m {
                for b in 0..m {
                    hole2.fill(ZERO);
                    for cc in 0..m {
                        for d in 0..m {
                            let x = 0.5 * v.get(a, b, cc, d);
                            for (y, z) in hole2.iter_mut().zip(&t.hole2[(cc * m + d) * big_m + i]) {
                                *y += x * z;
                            }
                        }
                    }
                    fock.create_pair_add(a, b, &hole2, &mut col);
                }
            }
        }
        r.column_mut(i).copy_from_slice(&col);
    }

    // inter-species mean fields
    let sc = state.species_count();
    let mut g = vec![ZERO; big_m * big_m * m * m];
    let mut coupled = false;
    for p in 0..sc {
        let (Some(w), Some(e2)) = (&mf.w[s][p], &dens.eta2[s][p]) else {
            continue;
        };
        coupled = true;
        let mp = w.dims[2];
        for ss in 0..big_m {
            for tt in 0..big_m {
                for j in 0..m {
                    for k in 0..m {
                        let mut acc = ZERO;
                        for u in 0..mp {
                            for vv in 0..mp {
                                acc += e2.get(ss, u, tt, vv) * w.get(j, k, u, vv);
                            }
                        }
                        g[((ss * big_m + tt) * m + j) * m + k] += acc;
                    }
                }
            }
        }
    }
    if coupled {
        let r1 = regularized_inverse(&dens.eta1[s], mixture.regularization);
        let mut fields = CMatrix::zeros(dim, big_m);
        for ss in 0..big_m {
            let mut col = vec![ZERO; dim];
            for j in 0..m {
                hole.fill(ZERO);
                for tt in 0..big_m {
                    for k in 0..m {
                        let x = g[((ss * big_m + tt) * m + j) * m + k];
                        if x == ZERO {
                            continue;
                        }
                        for (y, z) in hole.iter_mut().zip(&t.hole1[k * big_m + tt]) {
                            *y += x * z;
                        }
                    }
                }
                fock.create_add(j, &hole, &mut col);
            }
            fields.column_mut(ss).copy_from_slice(&col);
        }
        r += fields * r1.transpose();
    }
    project_out(&c, &mut r);
    r
}

/// Generator of the orbital layer of species `s`, before the `-i`.
pub(crate) fn spf_generator(
    state: &MLState,
    mixture: &Mixture,
    dens: &DensitySet,
    s: usize,
) -> CMatrix {
    let phi = state.orbitals(s);
    let (n, m) = (phi.nrows(), phi.ncols());
    if m == mixture.orbital_space_dim(s) {
        return CMatrix::zeros(n, m);
    }
    let grid = &mixture.grid;
    let mut r = crate::meanfield::apply_one_body(&mixture.one_body[s], &phi);
    let rinv = regularized_inverse(&dens.rho1[s], mixture.regularization);

    let g = mixture.g_intra(s);
    if let (Some(rho2), true) = (&dens.rho2_same[s], g != 0.0) {
        // b[i, (k q p)] = sum_j rinv[i, j] rho2[j, k, q, p]
        let m3 = m * m * m;
        let rho2m = CMatrix::from_fn(m, m3, |j, kqp| rho2.data[j * m3 + kqp]);
        let b = &rinv * rho2m;
        let fields = vhat_fields(&phi, grid, g);
        let f = CMatrix::from_fn(n, m3, |x, kqp| {
            let (k, q, p) = (kqp / (m * m), (kqp / m) % m, kqp % m);
            fields[(x, k * m + p)] * phi[(x, q)]
        });
        r += f * b.transpose();
    }

    for p in 0..state.species_count() {
        let gp = mixture.couplings[s][p];
        if p == s || gp == 0.0 {
            continue;
        }
        let Some(rho2c) = &dens.rho2_cross[s][p] else {
            continue;
        };
        let partner = state.orbitals(p);
        let mp = partner.ncols();
        let fields = what_fields(&partner, grid, gp);
        // b[i, (k q p)] over dims [m, mp, m, mp]
        let width = mp * m * mp;
        let rho2m = CMatrix::from_fn(m, width, |j, rest| rho2c.data[j * width + rest]);
        let b = &rinv * rho2m;
        let f = CMatrix::from_fn(n, width, |x, col| {
            let (k, q, pp) = (col / (m * mp), (col / mp) % m, col % mp);
            fields[(x, k * mp + pp)] * phi[(x, q)]
        });
        r += f * b.transpose();
    }

    if let Some(space) = &mixture.orbital_space[s] {
        let inner = space.adjoint() * &r;
        r = space * inner;
    }
    project_out(&phi, &mut r);
    r
}

/// `dC` for every species (real-time convention).
pub fn rhs_species(state: &MLState, mixture: &Mixture) -> Vec<CMatrix> {
    let (terms, dens, mf) = snapshot(state, mixture);
    let f = Mode::Real.factor();
    (0..state.species_count())
        .map(|s| species_generator(state, mixture, &terms, &dens, &mf, s) * f)
        .collect()
}

/// `dPhi` for every species (real-time convention).
pub fn rhs_spf(state: &MLState, mixture: &Mixture) -> Vec<CMatrix> {
    let dens = DensitySet::compute(state, mixture);
    let f = Mode::Real.factor();
    (0..state.species_count())
        .map(|s| spf_generator(state, mixture, &dens, s) * f)
        .collect()
}

fn snapshot(state: &MLState, mixture: &Mixture) -> (Vec<SpeciesTerms>, DensitySet, MeanFieldSet) {
    let terms: Vec<SpeciesTerms> = (0..state.species_count())
        .map(|s| SpeciesTerms::new(&mixture.fock[s], state, s, true))
        .collect();
    let dens = DensitySet::from_terms(state, mixture, &terms);
    let mf = MeanFieldSet::from_terms(state, mixture, &terms);
    (terms, dens, mf)
}

/// All three layers from one snapshot.
pub fn full_rhs(state: &MLState, mixture: &Mixture, mode: Mode) -> Result<StateDerivative> {
    if state.layout() != &mixture.layout && **state.layout() != *mixture.layout {
        return Err(Error::Shape("state does not match the mixture layout".into()));
    }
    let (terms, dens, mf) = snapshot(state, mixture);
    let f = mode.factor();
    let mut out = MLState::zeros(state.layout().clone());
    out.time = state.time;
    let ha = mf.top.apply(state.top());
    for (d, h) in out.top_mut().iter_mut().zip(ha) {
        *d = h * f;
    }
    let layers: Vec<(CMatrix, CMatrix)> = (0..state.species_count())
        .into_par_iter()
        .map(|s| {
            (
                species_generator(state, mixture, &terms, &dens, &mf, s) * f,
                spf_generator(state, mixture, &dens, s) * f,
            )
        })
        .collect();
    for (s, (dc, dphi)) in layers.iter().enumerate() {
        out.coefficients_mut(s).copy_from(dc);
        out.orbitals_mut(s).copy_from(dphi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, TrapSpec};
    use crate::state::{random_state, InterSpec, MixtureSpec, SpeciesSpec};

    fn spec() -> MixtureSpec {
        MixtureSpec {
            grid: GridSpec::Harmonic { points: 16, omega: 1.0 },
            trap: TrapSpec::double_well(3.0, 0.2),
            species: vec![
                SpeciesSpec {
                    name: "A".into(),
                    particles: 3,
                    spfs: 3,
                    species_states: 2,
                    g: 0.4,
                    trap: None,
                },
                SpeciesSpec {
                    name: "B".into(),
                    particles: 2,
                    spfs: 2,
                    species_states: 2,
                    g: 0.2,
                    trap: None,
                },
            ],
            inter: vec![InterSpec {
                species: ["A".into(), "B".into()],
                g: 0.3,
            }],
        }
    }

    #[test]
    fn gauge_and_norm() {
        let mix = Mixture::new(&spec()).unwrap();
        let st = random_state(&mix, 1).unwrap();
        let d = full_rhs(&st, &mix, Mode::Real).unwrap();
        let dn: Complex64 = st.top().iter().zip(d.top()).map(|(a, b)| a.conj() * b).sum();
        assert!(dn.re.abs() < 1e-12);
        for s in 0..2 {
            let gc = st.coefficients(s).adjoint() * d.coefficients(s);
            let gp = st.orbitals(s).adjoint() * d.orbitals(s);
            assert!(gc.iter().chain(gp.iter()).all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn energy_conserved_along_real_flow_and_decreasing_in_imaginary() {
        let mix = Mixture::new(&spec()).unwrap();
        let st = random_state(&mix, 4).unwrap();
        let e0 = st.energy(&mix).unwrap();
        let h = 1e-5;
        for (mode, check) in [(Mode::Real, 0), (Mode::Imaginary, 1)] {
            let d = full_rhs(&st, &mix, mode).unwrap();
            let shift = |sign: f64| {
                let mut x = st.clone();
                for (a, b) in x.as_mut_slice().iter_mut().zip(d.as_slice()) {
                    *a += b * (sign * h);
                }
                x.energy(&mix).unwrap()
            };
            let de = (shift(1.0) - shift(-1.0)) / (2.0 * h);
            if check == 0 {
                assert!(de.abs() < 1e-7 * e0.abs(), "dE/dt = {de}");
            } else {
                assert!(de < 0.0, "dE/dtau = {de}");
            }
        }
    }
}
