//! Dense brute-force references shared by the integration tests.
//!
//! Everything here is built from occupation-vector arithmetic alone and
//! never calls the operator code under test.

#![allow(dead_code)]

use std::collections::HashMap;

use mlmctdhb::integrator::Tolerances;
use mlmctdhb::linalg::{CMatrix, Tensor4};
use mlmctdhb::observables::ObservableRecord;
use mlmctdhb::oracle::{self, FullCIBasis};
use mlmctdhb::propagate::{propagate_real, PropagationConfig};
use mlmctdhb::state::{Mixture, MixtureSpec};
use mlmctdhb::MLState;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub const Z0: Complex64 = Complex64::new(0.0, 0.0);

/// All occupation vectors of `n` bosons in `m` modes, descending lexicographic.
pub fn occupations(n: usize, m: usize) -> Vec<Vec<u32>> {
    let mut all = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for v in &all {
            let used: u32 = v.iter().sum();
            for k in 0..=(n as u32 - used) {
                let mut w = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        all = next;
    }
    all.retain(|v| v.iter().sum::<u32>() == n as u32);
    all.sort_by(|a, b| b.cmp(a));
    all
}

/// Dense `a_k` from `n` to `n - 1` bosons.
pub fn annihilator(n: usize, m: usize, k: usize) -> DMatrix<f64> {
    let from = occupations(n, m);
    let to = occupations(n - 1, m);
    let index: HashMap<Vec<u32>, usize> = to.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut a = DMatrix::zeros(to.len(), from.len());
    for (col, v) in from.iter().enumerate() {
        if v[k] > 0 {
            let mut w = v.clone();
            w[k] -= 1;
            a[(index[&w], col)] = (v[k] as f64).sqrt();
        }
    }
    a
}

/// Dense annihilators `a_k` out of the `n`- and `(n-1)`-boson spaces.
pub struct Ladder {
    pub dim: usize,
    top: Vec<DMatrix<f64>>,
    below: Vec<DMatrix<f64>>,
}

impl Ladder {
    pub fn new(n: usize, m: usize) -> Ladder {
        Ladder {
            dim: occupations(n, m).len(),
            top: if n >= 1 { (0..m).map(|k| annihilator(n, m, k)).collect() } else { vec![] },
            below: if n >= 2 { (0..m).map(|k| annihilator(n - 1, m, k)).collect() } else { vec![] },
        }
    }

    /// `a_j^dagger a_k`.
    pub fn hopping(&self, j: usize, k: usize) -> DMatrix<f64> {
        if self.top.is_empty() {
            return DMatrix::zeros(self.dim, self.dim);
        }
        self.top[j].transpose() * &self.top[k]
    }

    /// `a_j^dagger a_k^dagger a_q a_p`.
    pub fn two_body(&self, j: usize, k: usize, q: usize, p: usize) -> DMatrix<f64> {
        if self.below.is_empty() {
            return DMatrix::zeros(self.dim, self.dim);
        }
        self.top[j].transpose() * self.below[k].transpose() * &self.below[q] * &self.top[p]
    }
}

/// Dense `a_j^dagger a_k` on the `n`-boson space.
pub fn hopping(n: usize, m: usize, j: usize, k: usize) -> DMatrix<f64> {
    Ladder::new(n, m).hopping(j, k)
}

/// Dense `a_j^dagger a_k^dagger a_q a_p` on the `n`-boson space.
pub fn two_body(n: usize, m: usize, j: usize, k: usize, q: usize, p: usize) -> DMatrix<f64> {
    Ladder::new(n, m).two_body(j, k, q, p)
}

pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Many-body vector over the product of the species number bases
/// (species 0 slowest).
pub fn full_vector(state: &MLState) -> (Vec<Complex64>, Vec<usize>) {
    let layout = state.layout();
    let dims: Vec<usize> = layout.species.iter().map(|s| s.basis_dim).collect();
    let states: Vec<usize> = layout.species.iter().map(|s| s.states).collect();
    let total: usize = dims.iter().product();
    let mut psi = vec![Z0; total];
    let top = state.top();
    for (flat, &a) in top.iter().enumerate() {
        let u = digits(flat, &states);
        for (idx, out) in psi.iter_mut().enumerate() {
            let n = digits(idx, &dims);
            let mut amp = a;
            for s in 0..dims.len() {
                amp *= state.coefficients(s)[(n[s], u[s])];
            }
            *out += amp;
        }
    }
    (psi, dims)
}

pub fn digits(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut d = vec![0; shape.len()];
    for s in (0..shape.len()).rev() {
        d[s] = flat % shape[s];
        flat /= shape[s];
    }
    d
}

/// Applies a single-species operator to a product-space vector.
pub fn apply_local(psi: &[Complex64], dims: &[usize], s: usize, op: &CMatrix) -> Vec<Complex64> {
    let inner: usize = dims[s + 1..].iter().product();
    let outer: usize = dims[..s].iter().product();
    let d = dims[s];
    let mut out = vec![Z0; psi.len()];
    for o in 0..outer {
        for i in 0..inner {
            for r in 0..d {
                let mut acc = Z0;
                for c in 0..d {
                    acc += op[(r, c)] * psi[(o * d + c) * inner + i];
                }
                out[(o * d + r) * inner + i] = acc;
            }
        }
    }
    out
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `<a_i^dagger a_j> / N`.
pub fn rho1_brute(state: &MLState, s: usize) -> CMatrix {
    let (psi, dims) = full_vector(state);
    let d = &state.layout().species[s];
    let (n, m) = (d.particles, d.spfs);
    let ladder = Ladder::new(n, m);
    CMatrix::from_fn(m, m, |i, j| {
        let op = complexify(&ladder.hopping(i, j));
        dot(&psi, &apply_local(&psi, &dims, s, &op)) / n as f64
    })
}

/// `<a_j^dagger a_k^dagger a_q a_p> / N`.
pub fn rho2_same_brute(state: &MLState, s: usize) -> Tensor4 {
    let (psi, dims) = full_vector(state);
    let d = &state.layout().species[s];
    let (n, m) = (d.particles, d.spfs);
    let ladder = Ladder::new(n, m);
    let mut t = Tensor4::zeros([m, m, m, m]);
    for j in 0..m {
        for k in 0..m {
            for q in 0..m {
                for p in 0..m {
                    let op = complexify(&ladder.two_body(j, k, q, p));
                    *t.get_mut(j, k, q, p) = dot(&psi, &apply_local(&psi, &dims, s, &op)) / n as f64;
                }
            }
        }
    }
    t
}

/// `<a_j^dagger a_q b_k^dagger b_p> / N_a`.
pub fn rho2_cross_brute(state: &MLState, a: usize, b: usize) -> Tensor4 {
    let (psi, dims) = full_vector(state);
    let da = &state.layout().species[a];
    let db = &state.layout().species[b];
    let (ma, mb) = (da.spfs, db.spfs);
    let (la, lb) = (Ladder::new(da.particles, ma), Ladder::new(db.particles, mb));
    let mut t = Tensor4::zeros([ma, mb, ma, mb]);
    for k in 0..mb {
        for p in 0..mb {
            let ob = complexify(&lb.hopping(k, p));
            let right = apply_local(&psi, &dims, b, &ob);
            for j in 0..ma {
                for q in 0..ma {
                    let oa = complexify(&la.hopping(j, q));
                    let v = dot(&psi, &apply_local(&right, &dims, a, &oa));
                    *t.get_mut(j, k, q, p) = v / da.particles as f64;
                }
            }
        }
    }
    t
}

/// Dense `|A><A|` over the top tensor, as a matrix.
fn top_projector(state: &MLState) -> CMatrix {
    let a = state.top();
    CMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
}

/// `eta1[(i, j)] = sum_env conj(A_{i env}) A_{j env}`, by tracing the dense
/// projector.
pub fn eta1_brute(state: &MLState, s: usize) -> CMatrix {
    let shape: Vec<usize> = state.layout().species.iter().map(|d| d.states).collect();
    let rho = top_projector(state);
    let mut out = CMatrix::zeros(shape[s], shape[s]);
    for r in 0..rho.nrows() {
        let dr = digits(r, &shape);
        for c in 0..rho.ncols() {
            let dc = digits(c, &shape);
            if (0..shape.len()).all(|x| x == s || dr[x] == dc[x]) {
                // rho[(r, c)] = A_r conj(A_c)
                out[(dc[s], dr[s])] += rho[(r, c)];
            }
        }
    }
    out
}

pub fn eta2_brute(state: &MLState, a: usize, b: usize) -> Tensor4 {
    let shape: Vec<usize> = state.layout().species.iter().map(|d| d.states).collect();
    let rho = top_projector(state);
    let mut out = Tensor4::zeros([shape[a], shape[b], shape[a], shape[b]]);
    for r in 0..rho.nrows() {
        let dr = digits(r, &shape);
        for c in 0..rho.ncols() {
            let dc = digits(c, &shape);
            if (0..shape.len()).all(|x| x == a || x == b || dr[x] == dc[x]) {
                *out.get_mut(dc[a], dc[b], dr[a], dr[b]) += rho[(r, c)];
            }
        }
    }
    out
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest deviation between two records over every recorded quantity.
pub fn record_gap(a: &ObservableRecord, b: &ObservableRecord) -> f64 {
    let mut worst = (a.energy - b.energy).abs().max((a.norm - b.norm).abs());
    for (x, y) in a.species.iter().zip(&b.species) {
        worst = worst.max((x.p_left - y.p_left).abs()).max((x.p_right - y.p_right).abs());
        for (p, q) in x.rho1_populations.iter().zip(&y.rho1_populations) {
            worst = worst.max((p - q).abs());
        }
        for (p, q) in x.eta1_populations.iter().zip(&y.eta1_populations) {
            worst = worst.max((p - q).abs());
        }
    }
    assert_eq!(a.pairs.len(), b.pairs.len());
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        worst = worst.max((x.p_ll - y.p_ll).abs()).max((x.p_rr - y.p_rr).abs());
        for (p, q) in [(x.f_ll, y.f_ll), (x.f_rr, y.f_rr), (x.f, y.f)] {
            match (p, q) {
                (Some(p), Some(q)) => worst = worst.max((p - q).abs()),
                (None, None) => {}
                _ => return f64::INFINITY,
            }
        }
    }
    worst
}

/// ML run at m = k, M = D against exact propagation in the same truncated
/// one-body space; returns the largest observable deviation.
pub fn fullci_gap(spec: &MixtureSpec, k: usize, t_final: f64) -> f64 {
    let mixture = Mixture::new(spec).unwrap().restrict_to_lowest(k).unwrap();
    let basis = FullCIBasis::for_mixture(&mixture, Some(k), oracle::DEFAULT_CAP).unwrap();
    let h = oracle::build_fullci_hamiltonian(&mixture, &basis).unwrap();
    let h_blocked = oracle::build_fullci_hamiltonian(&mixture.blocked(30.0).unwrap(), &basis).unwrap();
    let (_, psi0) = oracle::ground_state_exact(&h_blocked).unwrap();
    let start = oracle::embed(&basis, &psi0, mixture.layout.clone(), &mixture).unwrap();
    let cfg = PropagationConfig { t_final, output_stride: 0.5, ..Default::default() };
    let traj = propagate_real(&start, &mixture, &cfg).unwrap();
    let times: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let exact = oracle::propagate_exact(&psi0, &h, &times, Tolerances { atol: 1e-12, rtol: 1e-12 }).unwrap();
    traj.records
        .iter()
        .zip(&exact)
        .map(|(rec, psi)| record_gap(rec, &oracle::fullci_record(&mixture, &basis, &h, psi, rec.t).unwrap()))
        .fold(0.0, f64::max)
}
