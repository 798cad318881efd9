//! Reference solutions for small problems: exact diagonalization and
//! propagation in a product Fock space, and a coupled Gross-Pitaevskii
//! integrator.
//!
//! Only the one-body and contact integrals are shared with the main code;
//! the Fock-space bookkeeping and the operator algebra here are separate.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid;
use crate::integrator::{Integrator, Method, Tolerances};
use crate::linalg::{CMatrix, Tensor4};
use crate::meanfield::{contact_integrals, h_elements, v_elements};
use crate::observables::{assemble, ObservableRecord, RecordInputs};
use crate::state::{Layout, MLState, Mixture};

/// Default limit on the product-space dimension.
pub const DEFAULT_CAP: usize = 20_000;

/// Largest dimension diagonalized densely.
const DENSE_LIMIT: usize = 2500;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Occupation vectors of one species in ascending lexicographic order.
#[derive(Debug, Clone)]
struct Occupations {
    states: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl Occupations {
    fn new(particles: usize, modes: usize) -> Occupations {
        let mut states = Vec::new();
        let mut cur = vec![0u32; modes];
        enumerate(&mut states, &mut cur, modes, particles as u32);
        let lookup = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Occupations { states, lookup }
    }
}

fn enumerate(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, left_modes: usize, left: u32) {
    let pos = cur.len() - left_modes;
    if left_modes == 1 {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for n in 0..=left {
        cur[pos] = n;
        enumerate(out, cur, left_modes - 1, left - n);
    }
}

#[derive(Debug, Clone, Copy)]
enum Ladder {
    Create(usize),
    Destroy(usize),
}

/// Applies a product of ladder operators, rightmost first.
fn apply_string(occ: &[u32], ops: &[Ladder]) -> Option<(Vec<u32>, f64)> {
    let mut out = occ.to_vec();
    let mut amp = 1.0;
    for op in ops.iter().rev() {
        match *op {
            Ladder::Destroy(k) => {
                if out[k] == 0 {
                    return None;
                }
                amp *= (out[k] as f64).sqrt();
                out[k] -= 1;
            }
            Ladder::Create(k) => {
                out[k] += 1;
                amp *= (out[k] as f64).sqrt();
            }
        }
    }
    Some((out, amp))
}

/// Product Fock space over a fixed orthonormal mode basis per species.
#[derive(Debug, Clone)]
pub struct FullCIBasis {
    /// Mode functions of every species (grid coefficients, columns).
    pub modes: Vec<CMatrix>,
    pub particles: Vec<usize>,
    occ: Vec<Occupations>,
    strides: Vec<usize>,
    dim: usize,
}

impl FullCIBasis {
    pub fn new(particles: &[usize], modes: Vec<CMatrix>, cap: usize) -> Result<FullCIBasis> {
        if particles.len() != modes.len() {
            return Err(Error::Shape("one mode set per species required".into()));
        }
        let mut dim: usize = 1;
        let mut occ = Vec::new();
        for (&n, m) in particles.iter().zip(&modes) {
            let d = crate::fock::basis_size(n, m.ncols())?;
            dim = dim
                .checked_mul(d)
                .filter(|&x| x <= cap)
                .ok_or_else(|| Error::ResourceCap(format!("full-CI dimension exceeds {cap}")))?;
            occ.push(Occupations::new(n, m.ncols()));
        }
        let mut strides = vec![1; occ.len()];
        for s in (0..occ.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * occ[s + 1].states.len();
        }
        Ok(FullCIBasis {
            modes,
            particles: particles.to_vec(),
            occ,
            strides,
            dim,
        })
    }

    /// Lowest `k` one-body eigenvectors of every species' trap, or the full
    /// grid when `k` is `None`.
    pub fn for_mixture(mixture: &Mixture, k: Option<usize>, cap: usize) -> Result<FullCIBasis> {
        let n = mixture.grid.len();
        let modes = (0..mixture.species_count())
            .map(|s| match k {
                None => Ok(CMatrix::identity(n, n)),
                Some(k) => {
                    let (_, v) = grid::eigenpairs(&mixture.one_body[s], k)?;
                    Ok(v.map(|x| Complex64::new(x, 0.0)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let particles: Vec<usize> = mixture.spec.species.iter().map(|s| s.particles).collect();
        FullCIBasis::new(&particles, modes, cap)
    }

    /// The default mode basis: full grid for at most 12 points, otherwise
    /// the lowest `k` eigenvectors.
    pub fn default_for(mixture: &Mixture, k: usize, cap: usize) -> Result<FullCIBasis> {
        if mixture.grid.len() <= 12 {
            FullCIBasis::for_mixture(mixture, None, cap)
        } else {
            FullCIBasis::for_mixture(mixture, Some(k), cap)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn species_dim(&self, s: usize) -> usize {
        self.occ[s].states.len()
    }

    pub fn occupation(&self, s: usize, i: usize) -> &[u32] {
        &self.occ[s].states[i]
    }

    pub fn index_of(&self, s: usize, occ: &[u32]) -> Option<usize> {
        self.occ[s].lookup.get(occ).copied()
    }

    fn digits(&self, flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.occ)
            .map(|(st, o)| (flat / st) % o.states.len())
            .collect()
    }

    /// Single-species operator string as a sparse map `row -> [(col, amp)]`
    /// giving `<row| ops |col>`.
    fn species_operator(&self, s: usize, ops: &[Ladder]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (col, occ) in self.occ[s].states.iter().enumerate() {
            if let Some((new, amp)) = apply_string(occ, ops) {
                if let Some(&row) = self.occ[s].lookup.get(&new) {
                    out.push((row, col, amp));
                }
            }
        }
        out
    }
}

/// Row-compressed Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(ZERO, |acc, &(j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn hermiticity_residual(&self) -> f64 {
        crate::linalg::hermiticity_residual(&self.to_dense())
    }

    /// Largest absolute row sum.
    pub fn norm_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let hx = self.apply(x);
        x.iter().zip(&hx).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
    }
}

/// Full many-body Hamiltonian in the product Fock space of `basis`.
pub fn build_fullci_hamiltonian(mixture: &Mixture, basis: &FullCIBasis) -> Result<SparseMatrix> {
    let sc = mixture.species_count();
    let grid = &mixture.grid;
    let mut rows: Vec<HashMap<usize, Complex64>> = vec![HashMap::new(); basis.dim];

    // one-species blocks: dense D_s x D_s
    let mut blocks = Vec::with_capacity(sc);
    for s in 0..sc {
        let chi = &basis.modes[s];
        let k = chi.ncols();
        let h = h_elements(&chi.as_view(), &mixture.one_body[s]);
        let v = v_elements(&chi.as_view(), grid, mixture.g_intra(s));
        let d = basis.species_dim(s);
        let mut blk = CMatrix::zeros(d, d);
        for a in 0..k {
            for b in 0..k {
                for (r, c, amp) in basis.species_operator(s, &[Ladder::Create(a), Ladder::Destroy(b)]) {
                    blk[(r, c)] += h[(a, b)] * amp;
                }
            }
        }
        if mixture.g_intra(s) != 0.0 && basis.particles[s] >= 2 {
            for a in 0..k {
                for b in 0..k {
                    for c in 0..k {
                        for dd in 0..k {
                            let x = v.get(a, b, c, dd);
                            if x == ZERO {
                                continue;
                            }
                            let ops = [Ladder::Create(a), Ladder::Create(b), Ladder::Destroy(c), Ladder::Destroy(dd)];
                            for (r, col, amp) in basis.species_operator(s, &ops) {
                                blk[(r, col)] += 0.5 * x * amp;
                            }
                        }
                    }
                }
            }
        }
        blocks.push(blk);
    }
    for flat in 0..basis.dim {
        let dig = basis.digits(flat);
        for s in 0..sc {
            let base = flat - dig[s] * basis.strides[s];
            let blk = &blocks[s];
            for j in 0..blk.ncols() {
                let x = blk[(dig[s], j)];
                if x != ZERO {
                    *rows[flat].entry(base + j * basis.strides[s]).or_insert(ZERO) += x;
                }
            }
        }
    }

    // inter-species contact terms g K[a,c,b,d] a_a^+ a_b b_c^+ b_d
    for sa in 0..sc {
        for sb in sa + 1..sc {
            let g = mixture.couplings[sa][sb];
            if g == 0.0 {
                continue;
            }
            let (xa, xb) = (&basis.modes[sa], &basis.modes[sb]);
            let kint = contact_integrals(&xa.as_view(), &xb.as_view(), grid);
            let (ka, kb) = (xa.ncols(), xb.ncols());
            let by_col = |s: usize, k: usize| -> Vec<Vec<Vec<(usize, f64)>>> {
                (0..k * k)
                    .map(|ab| {
                        let mut cols = vec![Vec::new(); basis.species_dim(s)];
                        for (r, c, amp) in basis.species_operator(s, &[Ladder::Create(ab / k), Ladder::Destroy(ab % k)]) {
                            cols[c].push((r, amp));
                        }
                        cols
                    })
                    .collect()
            };
            let (hop_a, hop_b) = (by_col(sa, ka), by_col(sb, kb));
            let (sta, stb) = (basis.strides[sa], basis.strides[sb]);
            let mut terms = Vec::new();
            for a in 0..ka {
                for b in 0..ka {
                    for c in 0..kb {
                        for d in 0..kb {
                            let x = kint.get(a, c, b, d) * g;
                            if x.norm() > 0.0 {
                                terms.push((a * ka + b, c * kb + d, x));
                            }
                        }
                    }
                }
            }
            for flat in 0..basis.dim {
                let dig = basis.digits(flat);
                let (ca, cb) = (dig[sa], dig[sb]);
                let base = flat - ca * sta - cb * stb;
                for &(ab, cd, x) in &terms {
                    for &(ra, amp_a) in &hop_a[ab][ca] {
                        for &(rb, amp_b) in &hop_b[cd][cb] {
                            *rows[base + ra * sta + rb * stb].entry(flat).or_insert(ZERO) += x * (amp_a * amp_b);
                        }
                    }
                }
            }
        }
    }
    let rows = rows
        .into_iter()
        .map(|r| {
            let mut v: Vec<(usize, Complex64)> = r.into_iter().filter(|(_, x)| x.norm() > 0.0).collect();
            v.sort_by_key(|e| e.0);
            v
        })
        .collect();
    Ok(SparseMatrix { dim: basis.dim, rows })
}

/// `psi(t)` for every `t` in `times` (ascending, starting at or after 0).
pub fn propagate_exact(
    psi0: &[Complex64],
    h: &SparseMatrix,
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<Complex64>>> {
    let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        Ok(h.apply(y).into_iter().map(|z| Complex64::new(z.im, -z.re)).collect())
    };
    let mut integ = Integrator::new(Method::Dop853, tol, 1e-3)?;
    let mut t = 0.0;
    let mut y = psi0.to_vec();
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        integ.advance(&mut f, &mut t, &mut y, target)?;
        out.push(y.clone());
    }
    Ok(out)
}

/// Lowest eigenpair.
pub fn ground_state_exact(h: &SparseMatrix) -> Result<(f64, Vec<Complex64>)> {
    let (e, v) = if h.dim <= DENSE_LIMIT {
        let dense = h.to_dense();
        let eig = dense.symmetric_eigen();
        let k = (0..h.dim)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .ok_or_else(|| Error::Shape("empty Hamiltonian".into()))?;
        (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect::<Vec<_>>())
    } else {
        lanczos_lowest(h)?
    };
    let hv = h.apply(&v);
    let residual = hv.iter().zip(&v).map(|(a, b)| (a - b * e).norm()).fold(0.0, f64::max);
    if residual > 1e-10 * h.norm_bound().max(1.0) {
        return Err(Error::NotConverged { steps: 0, energy: e });
    }
    Ok((e, v))
}

fn lanczos_lowest(h: &SparseMatrix) -> Result<(f64, Vec<Complex64>)> {
    let n = h.dim;
    let krylov = 120.min(n);
    let mut start: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + ((i * 7919) % 13) as f64 * 0.01, 0.0))
        .collect();
    let scale = h.norm_bound().max(1.0);
    let mut best = (f64::INFINITY, start.clone());
    for _restart in 0..200 {
        let nrm = start.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|z| z / nrm).collect()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = h.apply(&basis[j]);
            let a: f64 = basis[j].iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c: Complex64 = q.iter().zip(&w).fold(ZERO, |acc, (x, y)| acc + x.conj() * y);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if j + 1 == krylov || b < 1e-14 * scale {
                break;
            }
            beta.push(b);
            basis.push(w.into_iter().map(|z| z / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let idx = (0..k)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap_or(0);
        let mut ritz = vec![ZERO; n];
        for (c, q) in eig.eigenvectors.column(idx).iter().zip(&basis) {
            for (r, x) in ritz.iter_mut().zip(q) {
                *r += x * *c;
            }
        }
        let e = eig.eigenvalues[idx];
        let hv = h.apply(&ritz);
        let res = hv.iter().zip(&ritz).map(|(a, b)| (a - b * e).norm()).fold(0.0, f64::max);
        best = (e, ritz.clone());
        if res <= 1e-11 * scale {
            break;
        }
        start = ritz;
    }
    Ok(best)
}

/// Reduced densities of a full-CI vector, as an observable record.
pub fn fullci_record(mixture: &Mixture, basis: &FullCIBasis, h: &SparseMatrix, psi: &[Complex64], t: f64) -> Result<ObservableRecord> {
    let sc = basis.modes.len();
    let mut eta1 = Vec::new();
    let mut rho1 = Vec::new();
    let mut rho2_same = Vec::new();
    for s in 0..sc {
        eta1.push(species_density(basis, psi, s));
        let k = basis.modes[s].ncols();
        let n = basis.particles[s] as f64;
        rho1.push(CMatrix::from_fn(k, k, |a, b| {
            expectation_string(basis, psi, &[(s, Ladder::Create(a)), (s, Ladder::Destroy(b))]) / n
        }));
        if basis.particles[s] >= 2 {
            let mut t4 = Tensor4::zeros([k, k, k, k]);
            for j in 0..k {
                for kk in 0..k {
                    for q in 0..k {
                        for p in 0..k {
                            let ops = [
                                (s, Ladder::Create(j)),
                                (s, Ladder::Create(kk)),
                                (s, Ladder::Destroy(q)),
                                (s, Ladder::Destroy(p)),
                            ];
                            *t4.get_mut(j, kk, q, p) = expectation_string(basis, psi, &ops) / n;
                        }
                    }
                }
            }
            rho2_same.push(Some(t4));
        } else {
            rho2_same.push(None);
        }
    }
    let mut cross = vec![vec![None; sc]; sc];
    for a in 0..sc {
        for b in a + 1..sc {
            let (ka, kb) = (basis.modes[a].ncols(), basis.modes[b].ncols());
            let mut t4 = Tensor4::zeros([ka, kb, ka, kb]);
            for j in 0..ka {
                for k in 0..kb {
                    for q in 0..ka {
                        for p in 0..kb {
                            let ops = [
                                (a, Ladder::Create(j)),
                                (a, Ladder::Destroy(q)),
                                (b, Ladder::Create(k)),
                                (b, Ladder::Destroy(p)),
                            ];
                            *t4.get_mut(j, k, q, p) = expectation_string(basis, psi, &ops) / basis.particles[a] as f64;
                        }
                    }
                }
            }
            cross[a][b] = Some(t4);
        }
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let inputs = RecordInputs {
        t,
        orbitals: basis.modes.iter().map(|m| m.as_view()).collect(),
        eta1,
        rho1,
        rho2_same,
        rho2_cross: cross,
        norm,
        energy: h.expectation(psi).re,
        orthonormality_residual: 0.0,
    };
    assemble(&inputs, &mixture.grid)
}

/// `<psi| ops |psi>` for ladder operators tagged by species (rightmost first).
fn expectation_string(basis: &FullCIBasis, psi: &[Complex64], ops: &[(usize, Ladder)]) -> Complex64 {
    let mut acc = ZERO;
    for (flat, &amp) in psi.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let dig = basis.digits(flat);
        let mut occs: Vec<Vec<u32>> = (0..dig.len()).map(|s| basis.occ[s].states[dig[s]].clone()).collect();
        let mut factor = 1.0;
        let mut alive = true;
        for s in 0..dig.len() {
            let mine: Vec<Ladder> = ops.iter().filter(|(t, _)| *t == s).map(|(_, l)| *l).collect();
            if mine.is_empty() {
                continue;
            }
            match apply_string(&occs[s], &mine) {
                Some((new, a)) => {
                    occs[s] = new;
                    factor *= a;
                }
                None => {
                    alive = false;
                    break;
                }
            }
        }
        if !alive {
            continue;
        }
        let mut target = 0;
        for s in 0..dig.len() {
            match basis.occ[s].lookup.get(&occs[s]) {
                Some(&i) => target += i * basis.strides[s],
                None => {
                    alive = false;
                    break;
                }
            }
        }
        if alive {
            acc += psi[target].conj() * amp * factor;
        }
    }
    acc
}

/// `rho[i, j] = sum_rest conj(psi[.., i, ..]) psi[.., j, ..]`.
fn species_density(basis: &FullCIBasis, psi: &[Complex64], s: usize) -> CMatrix {
    let d = basis.species_dim(s);
    let st = basis.strides[s];
    let mut out = CMatrix::zeros(d, d);
    for flat in 0..basis.dim {
        let i = (flat / st) % d;
        if i != 0 {
            continue;
        }
        for a in 0..d {
            let x = psi[flat + a * st].conj();
            for b in 0..d {
                out[(a, b)] += x * psi[flat + b * st];
            }
        }
    }
    out
}

/// ML state with identity species layers and the basis modes as orbitals,
/// carrying `psi` in its top tensor. Needs `m = k` and `M = D` everywhere.
pub fn embed(basis: &FullCIBasis, psi: &[Complex64], layout: Arc<Layout>, mixture: &Mixture) -> Result<MLState> {
    let sc = basis.modes.len();
    for s in 0..sc {
        let d = &layout.species[s];
        if d.spfs != basis.modes[s].ncols() || d.states != d.basis_dim {
            return Err(Error::Config(format!(
                "species {s}: embedding needs m = {} and M = D",
                basis.modes[s].ncols()
            )));
        }
    }
    let mut st = MLState::zeros(layout.clone());
    let strides = layout.top_strides();
    for s in 0..sc {
        let mut c = st.coefficients_mut(s);
        for i in 0..c.ncols() {
            c[(i, i)] = Complex64::new(1.0, 0.0);
        }
        st.orbitals_mut(s).copy_from(&basis.modes[s]);
    }
    for (flat, &amp) in psi.iter().enumerate() {
        let dig = basis.digits(flat);
        let mut target = 0;
        for s in 0..sc {
            let occ = basis.occupation(s, dig[s]);
            let i = mixture.fock[s]
                .basis
                .index_of(occ)
                .ok_or_else(|| Error::Shape("occupation missing from the ML basis".into()))?;
            target += i * strides[s];
        }
        st.top_mut()[target] = amp;
    }
    Ok(st)
}

/// Coupled Gross-Pitaevskii equations for one orbital per species.
pub fn gp_rhs(mixture: &Mixture, phis: &[DVector<Complex64>]) -> Vec<DVector<Complex64>> {
    let w = &mixture.grid.weights;
    let dens: Vec<Vec<f64>> = phis
        .iter()
        .map(|p| p.iter().zip(w).map(|(c, wi)| c.norm_sqr() / wi).collect())
        .collect();
    let n: Vec<f64> = mixture.spec.species.iter().map(|s| s.particles as f64).collect();
    (0..phis.len())
        .map(|s| {
            let re = DVector::from_iterator(phis[s].len(), phis[s].iter().map(|z| z.re));
            let im = DVector::from_iterator(phis[s].len(), phis[s].iter().map(|z| z.im));
            let hre = &mixture.one_body[s] * re;
            let him = &mixture.one_body[s] * im;
            DVector::from_fn(phis[s].len(), |i, _| {
                let mut u = mixture.g_intra(s) * (n[s] - 1.0) * dens[s][i];
                for p in 0..phis.len() {
                    if p != s {
                        u += mixture.couplings[s][p] * n[p] * dens[p][i];
                    }
                }
                let hphi = Complex64::new(hre[i], him[i]) + phis[s][i] * u;
                Complex64::new(hphi.im, -hphi.re)
            })
        })
        .collect()
}

/// Gross-Pitaevskii orbitals at every `t` in `times`.
pub fn gp_propagate(
    mixture: &Mixture,
    initial: &[DVector<Complex64>],
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<DVector<Complex64>>>> {
    let n = mixture.grid.len();
    let sc = initial.len();
    if sc != mixture.species_count() || initial.iter().any(|p| p.len() != n) {
        return Err(Error::Shape("one grid vector per species required".into()));
    }
    let split = |y: &[Complex64]| -> Vec<DVector<Complex64>> {
        (0..sc).map(|s| DVector::from_column_slice(&y[s * n..(s + 1) * n])).collect()
    };
    let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let d = gp_rhs(mixture, &split(y));
        Ok(d.iter().flat_map(|v| v.iter().copied()).collect())
    };
    let mut integ = Integrator::new(Method::Dop853, tol, 1e-3)?;
    let mut t = 0.0;
    let mut y: Vec<Complex64> = initial.iter().flat_map(|v| v.iter().copied()).collect();
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        integ.advance(&mut f, &mut t, &mut y, target)?;
        out.push(split(&y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_and_ladder() {
        let o = Occupations::new(2, 3);
        assert_eq!(o.states.len(), 6);
        assert_eq!(o.states[0], vec![0, 0, 2]);
        let (new, amp) = apply_string(&[2, 0], &[Ladder::Create(1), Ladder::Destroy(0)]).unwrap();
        assert_eq!(new, vec![1, 1]);
        assert!((amp - 2f64.sqrt()).abs() < 1e-15);
        assert!(apply_string(&[0, 2], &[Ladder::Destroy(0)]).is_none());
    }
}
