//! Reduced density matrices of species and of particles.
//!
//! Index conventions:
//! - `eta1[(i, s)] = sum conj(A_{..i..}) A_{..s..}`
//! - `eta2(a, b)[s, u, t, v] = sum conj(A_{..s..u..}) A_{..t..v..}` with
//!   `s, t` labelling species `a` and `u, v` species `b`
//! - `rho1[(i, j)] = <a_i^dagger a_j> / N`
//! - `rho2_same[j, k, q, p] = <a_j^dagger a_k^dagger a_q a_p> / N`
//! - `rho2_cross(a, b)[j, k, q, p] = <a_j^dagger a_q b_k^dagger b_p> / N_a`
//!
//! The two-body prefactors follow the contraction used by the orbital
//! equations of motion, so `tr rho2_same = N - 1` and `tr rho2_cross = N_b`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::linalg::{self, CMatrix, Tensor4, ZERO};
use crate::state::{Layout, MLState, Mixture};

/// Multi-indices of every entry of the top tensor.
pub(crate) fn top_digits(layout: &Layout) -> Vec<Vec<usize>> {
    let shape = layout.top_shape();
    let strides = layout.top_strides();
    (0..layout.top_len())
        .map(|flat| {
            shape
                .iter()
                .zip(&strides)
                .map(|(&dim, &stride)| (flat / stride) % dim)
                .collect()
        })
        .collect()
}

fn agree_except(a: &[usize], b: &[usize], skip: &[usize]) -> bool {
    a.iter()
        .zip(b)
        .enumerate()
        .all(|(k, (x, y))| skip.contains(&k) || x == y)
}

/// Species density matrix of species `s`.
pub fn eta1(state: &MLState, s: usize) -> CMatrix {
    eta1_with(state.top(), state.layout(), &top_digits(state.layout()), s)
}

pub(crate) fn eta1_with(top: &[Complex64], layout: &Layout, digits: &[Vec<usize>], s: usize) -> CMatrix {
    let m = layout.species[s].states;
    let mut out = CMatrix::zeros(m, m);
    for (i, di) in digits.iter().enumerate() {
        let ai = top[i].conj();
        if ai == ZERO {
            continue;
        }
        for (j, dj) in digits.iter().enumerate() {
            if agree_except(di, dj, &[s]) {
                out[(di[s], dj[s])] += ai * top[j];
            }
        }
    }
    out
}

/// Density matrix of the subsystem formed by species `a` and `b`.
pub fn eta2(state: &MLState, a: usize, b: usize) -> Result<Tensor4> {
    if a == b {
        return Err(Error::Index(format!("eta2 needs two distinct species, got ({a}, {a})")));
    }
    Ok(eta2_with(state.top(), state.layout(), &top_digits(state.layout()), a, b))
}

pub(crate) fn eta2_with(
    top: &[Complex64],
    layout: &Layout,
    digits: &[Vec<usize>],
    a: usize,
    b: usize,
) -> Tensor4 {
    let (ma, mb) = (layout.species[a].states, layout.species[b].states);
    let mut out = Tensor4::zeros([ma, mb, ma, mb]);
    for (i, di) in digits.iter().enumerate() {
        let ai = top[i].conj();
        if ai == ZERO {
            continue;
        }
        for (j, dj) in digits.iter().enumerate() {
            if agree_except(di, dj, &[a, b]) {
                *out.get_mut(di[a], di[b], dj[a], dj[b]) += ai * top[j];
            }
        }
    }
    out
}

/// Operator matrix elements between the species states of one species.
///
/// `one[((a*m + b)*M + i)*M + j] = <psi_i| a_a^dagger a_b |psi_j>` and
/// `two[(((a*m + b)*m + c)*m + d)*M*M + i*M + j] = <psi_i| a_a^dagger a_b^dagger a_c a_d |psi_j>`.
#[derive(Debug, Clone)]
pub(crate) struct SpeciesTerms {
    pub modes: usize,
    pub states: usize,
    /// `a_k psi_i` over the one-hole basis, at `k * M + i`.
    pub hole1: Vec<Vec<Complex64>>,
    /// `a_j a_k psi_i` over the two-hole basis, at `(j * m + k) * M + i`.
    pub hole2: Vec<Vec<Complex64>>,
    pub one: Vec<Complex64>,
    pub two: Vec<Complex64>,
}

impl SpeciesTerms {
    pub fn new(fock: &FockSpace, state: &MLState, s: usize, with_two_body: bool) -> SpeciesTerms {
        let c = state.coefficients(s);
        let m = fock.modes();
        let big_m = c.ncols();
        let d1 = fock.hole1_dim();
        let mut hole1 = Vec::with_capacity(m * big_m);
        for k in 0..m {
            for i in 0..big_m {
                let mut v = vec![ZERO; d1];
                fock.annihilate_into(k, c.column(i).as_slice(), &mut v);
                hole1.push(v);
            }
        }
        let mut one = vec![ZERO; m * m * big_m * big_m];
        for a in 0..m {
            for b in 0..m {
                for i in 0..big_m {
                    for j in 0..big_m {
                        one[((a * m + b) * big_m + i) * big_m + j] =
                            dotc(&hole1[a * big_m + i], &hole1[b * big_m + j]);
                    }
                }
            }
        }
        let mut hole2 = Vec::new();
        let mut two = Vec::new();
        if with_two_body && fock.particles() >= 2 {
            let d2 = fock.hole2_dim();
            hole2.reserve(m * m * big_m);
            for j in 0..m {
                for k in 0..m {
                    for i in 0..big_m {
                        let mut v = vec![ZERO; d2];
                        fock.annihilate_pair_into(j, k, c.column(i).as_slice(), &mut v);
                        hole2.push(v);
                    }
                }
            }
            two = vec![ZERO; m * m * m * m * big_m * big_m];
            let mm = big_m * big_m;
            for ab in 0..m * m {
                for cd in 0..m * m {
                    for i in 0..big_m {
                        for j in 0..big_m {
                            // (a_a a_b)^dagger = a_b^dagger a_a^dagger, and creators commute
                            two[(ab * m * m + cd) * mm + i * big_m + j] =
                                dotc(&hole2[ab * big_m + i], &hole2[cd * big_m + j]);
                        }
                    }
                }
            }
        }
        SpeciesTerms {
            modes: m,
            states: big_m,
            hole1,
            hole2,
            one,
            two,
        }
    }

    #[inline]
    pub fn one(&self, a: usize, b: usize, i: usize, j: usize) -> Complex64 {
        self.one[((a * self.modes + b) * self.states + i) * self.states + j]
    }

    #[inline]
    pub fn two(&self, a: usize, b: usize, c: usize, d: usize, i: usize, j: usize) -> Complex64 {
        let m = self.modes;
        let mm = self.states * self.states;
        self.two[((((a * m + b) * m + c) * m + d) * mm) + i * self.states + j]
    }

    pub fn has_two_body(&self) -> bool {
        !self.two.is_empty()
    }
}

#[inline]
pub(crate) fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn rho1_with(terms: &SpeciesTerms, eta1: &CMatrix, particles: usize) -> CMatrix {
    let m = terms.modes;
    let big_m = terms.states;
    let scale = 1.0 / particles as f64;
    CMatrix::from_fn(m, m, |i, j| {
        let mut acc = ZERO;
        for u in 0..big_m {
            for v in 0..big_m {
                acc += eta1[(u, v)] * terms.one(i, j, u, v);
            }
        }
        acc * scale
    })
}

pub(crate) fn rho2_same_with(terms: &SpeciesTerms, eta1: &CMatrix, particles: usize) -> Tensor4 {
    let m = terms.modes;
    let big_m = terms.states;
    let mut out = Tensor4::zeros([m, m, m, m]);
    if !terms.has_two_body() {
        return out;
    }
    let scale = 1.0 / particles as f64;
    for j in 0..m {
        for k in 0..m {
            for q in 0..m {
                for p in 0..m {
                    let mut acc = ZERO;
                    for u in 0..big_m {
                        for v in 0..big_m {
                            acc += eta1[(u, v)] * terms.two(j, k, q, p, u, v);
                        }
                    }
                    *out.get_mut(j, k, q, p) = acc * scale;
                }
            }
        }
    }
    out
}

pub(crate) fn rho2_cross_with(
    ta: &SpeciesTerms,
    tb: &SpeciesTerms,
    eta2: &Tensor4,
    particles_a: usize,
) -> Tensor4 {
    let (ma, mb) = (ta.modes, tb.modes);
    let (sa, sb) = (ta.states, tb.states);
    // x[j, q][u, v] = sum_{s,t} eta2[s,u,t,v] <s| a_j^dagger a_q |t>
    let mut x = vec![ZERO; ma * ma * sb * sb];
    for j in 0..ma {
        for q in 0..ma {
            for u in 0..sb {
                for v in 0..sb {
                    let mut acc = ZERO;
                    for s in 0..sa {
                        for t in 0..sa {
                            acc += eta2.get(s, u, t, v) * ta.one(j, q, s, t);
                        }
                    }
                    x[((j * ma + q) * sb + u) * sb + v] = acc;
                }
            }
        }
    }
    let scale = 1.0 / particles_a as f64;
    let mut out = Tensor4::zeros([ma, mb, ma, mb]);
    for j in 0..ma {
        for q in 0..ma {
            for k in 0..mb {
                for p in 0..mb {
                    let mut acc = ZERO;
                    for u in 0..sb {
                        for v in 0..sb {
                            acc += x[((j * ma + q) * sb + u) * sb + v] * tb.one(k, p, u, v);
                        }
                    }
                    *out.get_mut(j, k, q, p) = acc * scale;
                }
            }
        }
    }
    out
}

/// One-body density matrix of a boson of species `s`.
pub fn rho1(state: &MLState, fock: &FockSpace, s: usize) -> CMatrix {
    let terms = SpeciesTerms::new(fock, state, s, false);
    rho1_with(&terms, &eta1(state, s), fock.particles())
}

/// Two-body density matrix of two bosons of species `s`.
pub fn rho2_same(state: &MLState, fock: &FockSpace, s: usize) -> Result<Tensor4> {
    if fock.particles() < 2 {
        return Err(Error::Config(format!(
            "two-body density of species {s} needs at least 2 bosons"
        )));
    }
    let terms = SpeciesTerms::new(fock, state, s, true);
    Ok(rho2_same_with(&terms, &eta1(state, s), fock.particles()))
}

/// Two-body density matrix of a boson of species `a` and one of species `b`.
pub fn rho2_cross(state: &MLState, fock_a: &FockSpace, fock_b: &FockSpace, a: usize, b: usize) -> Result<Tensor4> {
    let e2 = eta2(state, a, b)?;
    let ta = SpeciesTerms::new(fock_a, state, a, false);
    let tb = SpeciesTerms::new(fock_b, state, b, false);
    Ok(rho2_cross_with(&ta, &tb, &e2, fock_a.particles()))
}

/// Eigenvalues (descending) and eigenvectors of a Hermitian matrix, with the
/// largest-magnitude component of every eigenvector real positive.
pub fn natural_populations(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let res = linalg::hermiticity_residual(m);
    if res > 1e-10 {
        return Err(Error::NotHermitian(res));
    }
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let n = vals.len();
    let values: Vec<f64> = vals.iter().rev().copied().collect();
    let mut vectors = CMatrix::from_fn(m.nrows(), n, |i, j| vecs[(i, n - 1 - j)]);
    linalg::fix_phases(&mut vectors);
    Ok((values, vectors))
}

pub use crate::linalg::regularized_inverse;

/// Every reduced density of a state at one instant.
#[derive(Debug, Clone)]
pub struct DensitySet {
    pub eta1: Vec<CMatrix>,
    pub rho1: Vec<CMatrix>,
    /// `None` for species with fewer than two bosons.
    pub rho2_same: Vec<Option<Tensor4>>,
    /// Ordered pairs `(a, b)`, `a != b`; `None` on the diagonal.
    pub eta2: Vec<Vec<Option<Tensor4>>>,
    pub rho2_cross: Vec<Vec<Option<Tensor4>>>,
}

impl DensitySet {
    pub fn compute(state: &MLState, mixture: &Mixture) -> DensitySet {
        let terms: Vec<SpeciesTerms> = (0..state.species_count())
            .map(|s| SpeciesTerms::new(&mixture.fock[s], state, s, true))
            .collect();
        DensitySet::from_terms(state, mixture, &terms)
    }

    pub(crate) fn from_terms(state: &MLState, mixture: &Mixture, terms: &[SpeciesTerms]) -> DensitySet {
        let layout = state.layout();
        let digits = top_digits(layout);
        let top = state.top();
        let sc = layout.species_count();
        let eta1: Vec<CMatrix> = (0..sc).map(|s| eta1_with(top, layout, &digits, s)).collect();
        let rho1 = (0..sc)
            .map(|s| rho1_with(&terms[s], &eta1[s], layout.species[s].particles))
            .collect();
        let rho2_same = (0..sc)
            .map(|s| {
                (layout.species[s].particles >= 2)
                    .then(|| rho2_same_with(&terms[s], &eta1[s], layout.species[s].particles))
            })
            .collect();
        let mut eta2 = vec![vec![None; sc]; sc];
        let mut rho2_cross = vec![vec![None; sc]; sc];
        for a in 0..sc {
            for b in 0..sc {
                if a != b {
                    let e = eta2_with(top, layout, &digits, a, b);
                    rho2_cross[a][b] = Some(rho2_cross_with(&terms[a], &terms[b], &e, layout.species[a].particles));
                    eta2[a][b] = Some(e);
                }
            }
        }
        let _ = mixture;
        DensitySet {
            eta1,
            rho1,
            rho2_same,
            eta2,
            rho2_cross,
        }
    }
}
