//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DMatrixViewMut};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest absolute entry of `m - m†`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let sym = CMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Lowest `k` eigenpairs of a real symmetric matrix, ascending.
pub fn symmetric_eigen_lowest(m: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(n, k, |i, j| eig.eigenvectors[(i, order[j])]);
    // sign convention: largest-magnitude component positive
    for j in 0..k {
        let mut best = 0;
        for i in 0..n {
            if vectors[(i, j)].abs() > vectors[(best, j)].abs() + 1e-12 {
                best = i;
            }
        }
        if vectors[(best, j)] < 0.0 {
            vectors.column_mut(j).neg_mut();
        }
    }
    Ok((values, vectors))
}

/// Inverse of a Hermitian positive semidefinite matrix with eigenvalues
/// clamped from below at `eps`.
pub fn regularized_inverse(m: &CMatrix, eps: f64) -> CMatrix {
    let n = m.nrows();
    if n == 1 {
        return CMatrix::from_element(1, 1, Complex64::new(1.0 / m[(0, 0)].re.max(eps), 0.0));
    }
    let (values, vectors) = hermitian_eigen(m);
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let inv = 1.0 / lambda.max(eps);
        for i in 0..n {
            let vi = vectors[(i, k)] * inv;
            for j in 0..n {
                out[(i, j)] += vi * vectors[(j, k)].conj();
            }
        }
    }
    out
}

/// Max-norm deviation of the column Gram matrix from the identity.
pub fn orthonormality_residual(cols: &nalgebra::DMatrixView<Complex64>) -> f64 {
    let k = cols.ncols();
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in a..k {
            let dot = cols.column(a).dotc(&cols.column(b));
            let target = if a == b { ONE } else { ZERO };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Modified Gram-Schmidt (two passes) on the columns, in place.
pub fn orthonormalize_columns(cols: &mut DMatrixViewMut<Complex64>) -> Result<()> {
    let k = cols.ncols();
    for _pass in 0..2 {
        for a in 0..k {
            for b in 0..a {
                let proj = cols.column(b).dotc(&cols.column(a));
                let prev = cols.column(b).clone_owned();
                cols.column_mut(a).axpy(-proj, &prev, ONE);
            }
            let norm = cols.column(a).norm();
            if norm < 1e-300 {
                return Err(Error::ZeroNorm);
            }
            cols.column_mut(a).scale_mut(1.0 / norm);
        }
    }
    Ok(())
}

/// Phase convention for eigenvectors: largest-magnitude component real positive.
pub(crate) fn fix_phases(vectors: &mut CMatrix) {
    let n = vectors.nrows();
    for j in 0..vectors.ncols() {
        let mut best = 0;
        for i in 0..n {
            if vectors[(i, j)].norm() > vectors[(best, j)].norm() + 1e-12 {
                best = i;
            }
        }
        let v = vectors[(best, j)];
        if v.norm() > 0.0 {
            let phase = v.conj() / v.norm();
            for i in 0..n {
                vectors[(i, j)] *= phase;
            }
        }
    }
}

/// Dense complex 4-index tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub dims: [usize; 4],
    pub data: Vec<Complex64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Tensor4 {
        Tensor4 {
            dims,
            data: vec![ZERO; dims.iter().product()],
        }
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dims[1] + j) * self.dims[2] + k) * self.dims[3] + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.data[self.offset(i, j, k, l)]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize, k: usize, l: usize) -> &mut Complex64 {
        let o = self.offset(i, j, k, l);
        &mut self.data[o]
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
