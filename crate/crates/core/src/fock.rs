//! Occupation-number bases for `N` bosons in `m` modes and the action of
//! bosonic operator strings on coefficient vectors.
//!
//! Bases are ordered descending-lexicographically, so the condensate
//! `(N, 0, ..., 0)` has index 0. Lookup uses combinatorial ranking.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ZERO;

/// Number of occupation vectors of `particles` bosons in `modes` modes,
/// `(N+m-1)! / (N! (m-1)!)`.
pub fn basis_size(particles: usize, modes: usize) -> Result<usize> {
    if modes == 0 {
        return Err(Error::Config("basis needs at least one mode".into()));
    }
    let k = (modes - 1) as u128;
    let n = particles as u128;
    // C(n + k, k) built incrementally; every intermediate is itself a binomial
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c
            .checked_mul(n + i)
            .ok_or(Error::Overflow { particles, modes })?
            / i;
        if c > i64::MAX as u128 {
            return Err(Error::Overflow { particles, modes });
        }
    }
    Ok(c as usize)
}

/// Ordered list of occupation vectors with an O(m) rank function.
#[derive(Debug, Clone)]
pub struct NumberBasis {
    particles: usize,
    modes: usize,
    occupations: Vec<u32>,
    /// `binom[r][k]`: number of ways to put `r` bosons in `k` modes.
    compositions: Vec<Vec<usize>>,
}

impl NumberBasis {
    pub fn new(particles: usize, modes: usize) -> Result<NumberBasis> {
        let dim = basis_size(particles, modes)?;
        let total = dim
            .checked_mul(modes)
            .ok_or(Error::Overflow { particles, modes })?;
        let mut occupations = Vec::with_capacity(total);
        let mut current = vec![0u32; modes];
        fill(&mut occupations, &mut current, 0, particles);
        debug_assert_eq!(occupations.len(), total);

        let mut compositions = vec![vec![0usize; modes + 1]; particles + 1];
        for (r, row) in compositions.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate().skip(1) {
                *entry = basis_size(r, k)?;
            }
        }
        Ok(NumberBasis {
            particles,
            modes,
            occupations,
            compositions,
        })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, index: usize) -> &[u32] {
        &self.occupations[index * self.modes..(index + 1) * self.modes]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.occupations.chunks_exact(self.modes)
    }

    /// Position of an occupation vector, or `None` if it is not in the basis.
    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        if occ.len() != self.modes {
            return None;
        }
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        if total != self.particles {
            return None;
        }
        Some(self.rank(occ))
    }

    fn rank(&self, occ: &[u32]) -> usize {
        let m = self.modes;
        let mut remaining = self.particles;
        let mut rank = 0;
        for (j, &n) in occ.iter().enumerate().take(m.saturating_sub(1)) {
            let n = n as usize;
            if n < remaining {
                // vectors sharing the prefix but with more bosons in mode j
                rank += self.compositions[remaining - n - 1][m - j];
            }
            remaining -= n;
        }
        rank
    }
}

fn fill(out: &mut Vec<u32>, current: &mut [u32], pos: usize, remaining: usize) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u32;
        out.extend_from_slice(current);
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n as u32;
        fill(out, current, pos + 1, remaining - n);
    }
}

/// A basis together with its one- and two-hole companions and the raising
/// maps between them. Operator strings are evaluated through hole vectors:
/// `(a_k psi)[l] = sqrt(l_k + 1) psi[l + e_k]`.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub basis: NumberBasis,
    hole1: Option<NumberBasis>,
    hole2: Option<NumberBasis>,
    /// index of `l + e_k` for `l` in the one-hole basis: `raise1[l * m + k]`
    raise1: Vec<usize>,
    /// index of `l + e_j + e_k`: `raise2[(l * m + j) * m + k]`
    raise2: Vec<usize>,
}

impl FockSpace {
    pub fn new(particles: usize, modes: usize) -> Result<FockSpace> {
        let basis = NumberBasis::new(particles, modes)?;
        let m = modes;
        let hole1 = if particles >= 1 {
            Some(NumberBasis::new(particles - 1, modes)?)
        } else {
            None
        };
        let hole2 = if particles >= 2 {
            Some(NumberBasis::new(particles - 2, modes)?)
        } else {
            None
        };
        let mut raise1 = Vec::new();
        if let Some(h) = &hole1 {
            raise1.reserve(h.len() * m);
            let mut buf = vec![0u32; m];
            for l in h.iter() {
                for k in 0..m {
                    buf.copy_from_slice(l);
                    buf[k] += 1;
                    raise1.push(basis.rank(&buf));
                }
            }
        }
        let mut raise2 = Vec::new();
        if let Some(h) = &hole2 {
            raise2.reserve(h.len() * m * m);
            let mut buf = vec![0u32; m];
            for l in h.iter() {
                for j in 0..m {
                    for k in 0..m {
                        buf.copy_from_slice(l);
                        buf[j] += 1;
                        buf[k] += 1;
                        raise2.push(basis.rank(&buf));
                    }
                }
            }
        }
        Ok(FockSpace {
            basis,
            hole1,
            hole2,
            raise1,
            raise2,
        })
    }

    pub fn particles(&self) -> usize {
        self.basis.particles()
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn hole1_dim(&self) -> usize {
        self.hole1.as_ref().map_or(0, |b| b.len())
    }

    pub fn hole2_dim(&self) -> usize {
        self.hole2.as_ref().map_or(0, |b| b.len())
    }

    fn check_mode(&self, idx: usize) -> Result<()> {
        if idx >= self.modes() {
            return Err(Error::Index(format!(
                "mode {idx} out of range for {} modes",
                self.modes()
            )));
        }
        Ok(())
    }

    fn check_len(&self, coeffs: &[Complex64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(Error::Shape(format!(
                "coefficient vector has length {}, basis has {}",
                coeffs.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `a_k psi` as a vector over the one-hole basis.
    pub(crate) fn annihilate_into(&self, k: usize, coeffs: &[Complex64], out: &mut [Complex64]) {
        let m = self.modes();
        if let Some(h) = &self.hole1 {
            for (l, occ) in h.iter().enumerate() {
                out[l] = ((occ[k] + 1) as f64).sqrt() * coeffs[self.raise1[l * m + k]];
            }
        }
    }

    /// `a_j a_k psi` as a vector over the two-hole basis.
    pub(crate) fn annihilate_pair_into(
        &self,
        j: usize,
        k: usize,
        coeffs: &[Complex64],
        out: &mut [Complex64],
    ) {
        let m = self.modes();
        if let Some(h) = &self.hole2 {
            for (l, occ) in h.iter().enumerate() {
                let amp = pair_amplitude(occ, j, k);
                out[l] = amp * coeffs[self.raise2[(l * m + j) * m + k]];
            }
        }
    }

    /// Adds `sum_j a_j^dagger hole[j]` into `out`, where `hole[j]` are
    /// one-hole vectors.
    pub(crate) fn create_add(&self, j: usize, hole: &[Complex64], out: &mut [Complex64]) {
        let m = self.modes();
        if let Some(h) = &self.hole1 {
            for (l, occ) in h.iter().enumerate() {
                out[self.raise1[l * m + j]] += ((occ[j] + 1) as f64).sqrt() * hole[l];
            }
        }
    }

    /// Adds `a_j^dagger a_k^dagger hole` into `out` for a two-hole vector.
    pub(crate) fn create_pair_add(&self, j: usize, k: usize, hole: &[Complex64], out: &mut [Complex64]) {
        let m = self.modes();
        if let Some(h) = &self.hole2 {
            for (l, occ) in h.iter().enumerate() {
                out[self.raise2[(l * m + j) * m + k]] += pair_amplitude(occ, j, k) * hole[l];
            }
        }
    }

    /// Action of `a_j^dagger a_k` on a coefficient vector.
    pub fn apply_hopping(&self, j: usize, k: usize, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_mode(j)?;
        self.check_mode(k)?;
        self.check_len(coeffs)?;
        let mut hole = vec![ZERO; self.hole1_dim()];
        self.annihilate_into(k, coeffs, &mut hole);
        let mut out = vec![ZERO; self.dim()];
        self.create_add(j, &hole, &mut out);
        Ok(out)
    }

    /// Action of `a_j^dagger a_k^dagger a_q a_p` on a coefficient vector.
    pub fn apply_two_body(
        &self,
        j: usize,
        k: usize,
        q: usize,
        p: usize,
        coeffs: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        for idx in [j, k, q, p] {
            self.check_mode(idx)?;
        }
        self.check_len(coeffs)?;
        let mut out = vec![ZERO; self.dim()];
        if self.hole2.is_none() {
            return Ok(out);
        }
        let mut hole = vec![ZERO; self.hole2_dim()];
        self.annihilate_pair_into(q, p, coeffs, &mut hole);
        self.create_pair_add(j, k, &hole, &mut out);
        Ok(out)
    }

    /// `<psi_u| a_j^dagger a_k |psi_v>`.
    pub fn transition_element(
        &self,
        c_u: &[Complex64],
        c_v: &[Complex64],
        j: usize,
        k: usize,
    ) -> Result<Complex64> {
        self.check_mode(j)?;
        self.check_mode(k)?;
        self.check_len(c_u)?;
        self.check_len(c_v)?;
        let m = self.modes();
        let mut acc = ZERO;
        if let Some(h) = &self.hole1 {
            for (l, occ) in h.iter().enumerate() {
                let q = (((occ[j] + 1) * (occ[k] + 1)) as f64).sqrt();
                acc += q * c_u[self.raise1[l * m + j]].conj() * c_v[self.raise1[l * m + k]];
            }
        }
        Ok(acc)
    }
}

/// `sqrt((l_j + delta_jk + 1)(l_k + 1))`, the amplitude linking `l` to
/// `l + e_j + e_k`.
#[inline]
fn pair_amplitude(occ: &[u32], j: usize, k: usize) -> f64 {
    let extra = u32::from(j == k);
    (((occ[j] + extra + 1) * (occ[k] + 1)) as f64).sqrt()
}
