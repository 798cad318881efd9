//! Interaction matrix elements, local mean-field potentials and the
//! top-layer Hamiltonian.
//!
//! Orbitals are stored as DVR coefficients `c_i = sqrt(w_i) f(x_i)`, so a
//! contact integral of four orbitals is `sum_i c*c*cc / w_i` and a local
//! field acting on an orbital multiplies its coefficients node by node.

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;

use crate::densities::{top_digits, SpeciesTerms};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{CMatrix, Tensor4, ZERO};
use crate::state::{Layout, MLState, Mixture};

/// `H Phi` for a real one-body matrix, done as two real products.
pub fn apply_one_body(h: &DMatrix<f64>, phi: &DMatrixView<Complex64>) -> CMatrix {
    let m = phi.ncols();
    let parts = DMatrix::from_fn(phi.nrows(), 2 * m, |i, j| if j < m { phi[(i, j)].re } else { phi[(i, j - m)].im });
    let hp = h * parts;
    CMatrix::from_fn(phi.nrows(), m, |i, j| Complex64::new(hp[(i, j)], hp[(i, j + m)]))
}

/// `h_jk = <phi_j| h |phi_k>`.
pub fn h_elements(phi: &DMatrixView<Complex64>, one_body: &DMatrix<f64>) -> CMatrix {
    let hphi = apply_one_body(one_body, phi);
    phi.adjoint() * hphi
}

/// `K[a, k, b, p] = sum_i conj(x_a) conj(y_k) x_b y_p / w_i`.
pub fn contact_integrals(
    x: &DMatrixView<Complex64>,
    y: &DMatrixView<Complex64>,
    grid: &Grid,
) -> Tensor4 {
    let (mx, my) = (x.ncols(), y.ncols());
    // pair products, column a * my + k
    let pairs = CMatrix::from_fn(x.nrows(), mx * my, |i, col| x[(i, col / my)] * y[(i, col % my)]);
    let scaled = CMatrix::from_fn(x.nrows(), mx * my, |i, col| pairs[(i, col)] / grid.weights[i]);
    // column-major transpose is the row-major tensor
    let gram = (pairs.adjoint() * scaled).transpose();
    Tensor4 {
        dims: [mx, my, mx, my],
        data: gram.as_slice().to_vec(),
    }
}

/// Intra-species contact elements `v[j, k, q, p] = g <phi_j phi_k|delta|phi_q phi_p>`.
pub fn v_elements(phi: &DMatrixView<Complex64>, grid: &Grid, g: f64) -> Tensor4 {
    let m = phi.ncols();
    if g == 0.0 {
        return Tensor4::zeros([m, m, m, m]);
    }
    let mut t = contact_integrals(phi, phi, grid);
    for z in &mut t.data {
        *z *= g;
    }
    t
}

/// Inter-species elements `w[j, k, u, v]`: orbital indices `j, k` of the
/// first species, species-state indices `u, v` of the partner.
pub(crate) fn w_elements_with(k: &Tensor4, partner: &SpeciesTerms, g: f64) -> Tensor4 {
    let [m, mp, _, _] = k.dims;
    let big_m = partner.states;
    let mut out = Tensor4::zeros([m, m, big_m, big_m]);
    if g == 0.0 {
        return out;
    }
    for j in 0..m {
        for kk in 0..m {
            for u in 0..big_m {
                for v in 0..big_m {
                    let mut acc = ZERO;
                    for q in 0..mp {
                        for p in 0..mp {
                            acc += k.get(j, q, kk, p) * partner.one(q, p, u, v);
                        }
                    }
                    *out.get_mut(j, kk, u, v) = acc * g;
                }
            }
        }
    }
    out
}

/// Inter-species elements of species `a` in the field of species `b`.
pub fn w_elements(state: &MLState, mixture: &Mixture, a: usize, b: usize) -> Result<Tensor4> {
    if a == b {
        return Err(Error::Index(format!("w elements need two distinct species, got ({a}, {a})")));
    }
    let k = contact_integrals(&state.orbitals(a), &state.orbitals(b), &mixture.grid);
    let partner = SpeciesTerms::new(&mixture.fock[b], state, b, false);
    Ok(w_elements_with(&k, &partner, mixture.couplings[a][b]))
}

/// Local fields `g conj(c_k) c_p / w` at every node; column `k * m + p`.
pub fn vhat_fields(phi: &DMatrixView<Complex64>, grid: &Grid, g: f64) -> CMatrix {
    let (n, m) = (phi.nrows(), phi.ncols());
    CMatrix::from_fn(n, m * m, |i, col| {
        let (k, p) = (col / m, col % m);
        phi[(i, k)].conj() * phi[(i, p)] * (g / grid.weights[i])
    })
}

/// Fields generated by the partner orbitals, same layout as [`vhat_fields`].
pub fn what_fields(partner: &DMatrixView<Complex64>, grid: &Grid, g: f64) -> CMatrix {
    vhat_fields(partner, grid, g)
}

/// The top-layer Hamiltonian in Kronecker-block form.
#[derive(Debug, Clone)]
pub struct TopHamiltonian {
    layout: std::sync::Arc<Layout>,
    /// `E^s`, one `M_s x M_s` block per species.
    pub species_blocks: Vec<CMatrix>,
    /// `(a, b, W)` with `a < b`; `W` is indexed `(i * M_b + u, j * M_b + v)`.
    pub pair_blocks: Vec<(usize, usize, CMatrix)>,
}

impl TopHamiltonian {
    pub fn dim(&self) -> usize {
        self.layout.top_len()
    }

    /// `H A` without materializing `H`.
    pub fn apply(&self, a: &[Complex64]) -> Vec<Complex64> {
        let strides = self.layout.top_strides();
        let digits = top_digits(&self.layout);
        let mut out = vec![ZERO; a.len()];
        for (s, e) in self.species_blocks.iter().enumerate() {
            let st = strides[s];
            for (flat, d) in digits.iter().enumerate() {
                let base = flat - d[s] * st;
                let mut acc = ZERO;
                for j in 0..e.ncols() {
                    acc += e[(d[s], j)] * a[base + j * st];
                }
                out[flat] += acc;
            }
        }
        for (sa, sb, w) in &self.pair_blocks {
            let (sa, sb) = (*sa, *sb);
            let (ta, tb) = (strides[sa], strides[sb]);
            let mb = self.layout.species[sb].states;
            let ma = self.layout.species[sa].states;
            for (flat, d) in digits.iter().enumerate() {
                let base = flat - d[sa] * ta - d[sb] * tb;
                let row = d[sa] * mb + d[sb];
                let mut acc = ZERO;
                for j in 0..ma {
                    for v in 0..mb {
                        acc += w[(row, j * mb + v)] * a[base + j * ta + v * tb];
                    }
                }
                out[flat] += acc;
            }
        }
        out
    }

    /// Dense matrix; refused above 4096 rows.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.dim();
        if n > 4096 {
            return Err(Error::ResourceCap(format!(
                "dense top Hamiltonian of dimension {n} exceeds 4096"
            )));
        }
        let mut out = CMatrix::zeros(n, n);
        let mut unit = vec![ZERO; n];
        for j in 0..n {
            unit[j] = Complex64::new(1.0, 0.0);
            let col = self.apply(&unit);
            unit[j] = ZERO;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

/// Everything the equations of motion need from one snapshot.
#[derive(Debug, Clone)]
pub struct MeanFieldSet {
    pub h: Vec<CMatrix>,
    pub v: Vec<Tensor4>,
    /// `w[a][b]`: elements of species `a` in the field of `b`; `None` when
    /// `a == b` or the coupling vanishes.
    pub w: Vec<Vec<Option<Tensor4>>>,
    pub top: TopHamiltonian,
}

impl MeanFieldSet {
    pub fn compute(state: &MLState, mixture: &Mixture) -> MeanFieldSet {
        let terms: Vec<SpeciesTerms> = (0..state.species_count())
            .map(|s| SpeciesTerms::new(&mixture.fock[s], state, s, true))
            .collect();
        MeanFieldSet::from_terms(state, mixture, &terms)
    }

    pub(crate) fn from_terms(state: &MLState, mixture: &Mixture, terms: &[SpeciesTerms]) -> MeanFieldSet {
        let sc = state.species_count();
        let grid = &mixture.grid;
        let h: Vec<CMatrix> = (0..sc)
            .map(|s| h_elements(&state.orbitals(s), &mixture.one_body[s]))
            .collect();
        let v: Vec<Tensor4> = (0..sc)
            .map(|s| v_elements(&state.orbitals(s), grid, mixture.g_intra(s)))
            .collect();
        let mut w = vec![vec![None; sc]; sc];
        let mut pair_blocks = Vec::new();
        for a in 0..sc {
            for b in 0..sc {
                let g = mixture.couplings[a][b];
                if a == b || g == 0.0 {
                    continue;
                }
                let k = contact_integrals(&state.orbitals(a), &state.orbitals(b), grid);
                let wab = w_elements_with(&k, &terms[b], g);
                if a < b {
                    pair_blocks.push((a, b, pair_block(&terms[a], &wab)));
                }
                w[a][b] = Some(wab);
            }
        }
        let species_blocks = (0..sc)
            .map(|s| species_block(&terms[s], &h[s], &v[s]))
            .collect();
        MeanFieldSet {
            h,
            v,
            w,
            top: TopHamiltonian {
                layout: state.layout().clone(),
                species_blocks,
                pair_blocks,
            },
        }
    }
}

/// `E_ij = sum h_ab <i|a_a^dagger a_b|j> + 1/2 sum v_abcd <i|a_a^dagger a_b^dagger a_c a_d|j>`.
fn species_block(terms: &SpeciesTerms, h: &CMatrix, v: &Tensor4) -> CMatrix {
    let m = terms.modes;
    let big_m = terms.states;
    CMatrix::from_fn(big_m, big_m, |i, j| {
        let mut acc = ZERO;
        for a in 0..m {
            for b in 0..m {
                acc += h[(a, b)] * terms.one(a, b, i, j);
            }
        }
        if terms.has_two_body() {
            let mut two = ZERO;
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            let x = v.get(a, b, c, d);
                            if x != ZERO {
                                two += x * terms.two(a, b, c, d, i, j);
                            }
                        }
                    }
                }
            }
            acc += 0.5 * two;
        }
        acc
    })
}

/// `W_{(i u), (j v)} = sum_ab <i|a_a^dagger a_b|j> w[a, b, u, v]`.
fn pair_block(terms: &SpeciesTerms, w: &Tensor4) -> CMatrix {
    let m = terms.modes;
    let ma = terms.states;
    let mb = w.dims[2];
    CMatrix::from_fn(ma * mb, ma * mb, |row, col| {
        let (i, u) = (row / mb, row % mb);
        let (j, v) = (col / mb, col % mb);
        let mut acc = ZERO;
        for a in 0..m {
            for b in 0..m {
                acc += terms.one(a, b, i, j) * w.get(a, b, u, v);
            }
        }
        acc
    })
}

/// The top-layer Hamiltonian of a state.
pub fn top_hamiltonian(state: &MLState, mixture: &Mixture) -> TopHamiltonian {
    MeanFieldSet::compute(state, mixture).top
}

/// `<Psi|H|Psi>`.
pub fn energy(state: &MLState, mixture: &Mixture) -> Result<Complex64> {
    let top = top_hamiltonian(state, mixture);
    Ok(expectation(&top, state.top()))
}

pub(crate) fn expectation(top: &TopHamiltonian, a: &[Complex64]) -> Complex64 {
    let ha = top.apply(a);
    a.iter().zip(&ha).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}
