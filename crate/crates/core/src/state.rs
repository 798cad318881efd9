//! The three-layer wavefunction: top tensor `A`, species coefficients `C`,
//! and single-particle functions `Phi`.
//!
//! All layers share one flat buffer so the integrator can treat a state as a
//! plain complex vector. Matrices are column-major: the species states of
//! species `s` are the columns of a `D x M` block and its orbitals are the
//! columns of an `n x m` block.

use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{basis_size, FockSpace};
use crate::grid::{self, Grid, GridSpec, TrapSpec};
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Default clamp for regularized density inverses.
pub const DEFAULT_REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    /// Number of bosons `N`.
    pub particles: usize,
    /// Number of single-particle functions `m`.
    pub spfs: usize,
    /// Number of species states `M`.
    pub species_states: usize,
    /// Intra-species contact strength.
    #[serde(default)]
    pub g: f64,
    /// Species-specific trap; falls back to the mixture trap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterSpec {
    pub species: [String; 2],
    pub g: f64,
}

/// Static problem definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub trap: TrapSpec,
    pub species: Vec<SpeciesSpec>,
    #[serde(default)]
    pub inter: Vec<InterSpec>,
}

impl MixtureSpec {
    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn trap_of(&self, s: usize) -> &TrapSpec {
        self.species[s].trap.as_ref().unwrap_or(&self.trap)
    }

    /// Symmetric matrix of inter-species couplings (zero diagonal).
    pub fn couplings(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.species.len();
        let mut g = vec![vec![0.0; n]; n];
        let mut seen = vec![vec![false; n]; n];
        for pair in &self.inter {
            let a = self.species_index(&pair.species[0]).ok_or_else(|| {
                Error::Config(format!("inter: unknown species '{}'", pair.species[0]))
            })?;
            let b = self.species_index(&pair.species[1]).ok_or_else(|| {
                Error::Config(format!("inter: unknown species '{}'", pair.species[1]))
            })?;
            if a == b {
                return Err(Error::Config(format!(
                    "inter: species '{}' paired with itself",
                    pair.species[0]
                )));
            }
            if seen[a][b] {
                return Err(Error::Config(format!(
                    "inter: duplicate pair ({}, {})",
                    pair.species[0], pair.species[1]
                )));
            }
            seen[a][b] = true;
            seen[b][a] = true;
            g[a][b] = pair.g;
            g[b][a] = pair.g;
        }
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.species.is_empty() {
            return Err(Error::Config("species: at least one species required".into()));
        }
        let n = self.grid.points();
        if n < 2 {
            return Err(Error::Config(format!("grid.points: need at least 2, got {n}")));
        }
        self.trap.validate()?;
        for (i, s) in self.species.iter().enumerate() {
            let at = format!("species[{i}]");
            if self.species[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("{at}.name: duplicate name '{}'", s.name)));
            }
            if s.particles == 0 {
                return Err(Error::Config(format!("{at}.particles: must be at least 1")));
            }
            if s.spfs == 0 || s.spfs > n {
                return Err(Error::Config(format!(
                    "{at}.spfs: need 1 <= m <= {n} (grid points), got {}",
                    s.spfs
                )));
            }
            let dim = basis_size(s.particles, s.spfs)?;
            if s.species_states == 0 || s.species_states > dim {
                return Err(Error::Config(format!(
                    "{at}.species_states: need 1 <= M <= {dim} (number states), got {}",
                    s.species_states
                )));
            }
            if !s.g.is_finite() {
                return Err(Error::Config(format!("{at}.g: not finite")));
            }
            if let Some(t) = &s.trap {
                t.validate()?;
            }
        }
        self.couplings()?;
        Ok(())
    }
}

/// Per-species shape information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesDims {
    pub particles: usize,
    pub spfs: usize,
    pub states: usize,
    pub basis_dim: usize,
}

/// Offsets of every layer in the flat state buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub species: Vec<SpeciesDims>,
    pub grid_points: usize,
    top_len: usize,
    c_offsets: Vec<usize>,
    phi_offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(species: Vec<SpeciesDims>, grid_points: usize) -> Layout {
        let top_len: usize = species.iter().map(|s| s.states).product();
        let mut offset = top_len;
        let mut c_offsets = Vec::new();
        for s in &species {
            c_offsets.push(offset);
            offset += s.basis_dim * s.states;
        }
        let mut phi_offsets = Vec::new();
        for s in &species {
            phi_offsets.push(offset);
            offset += grid_points * s.spfs;
        }
        Layout {
            species,
            grid_points,
            top_len,
            c_offsets,
            phi_offsets,
            total: offset,
        }
    }

    pub fn from_spec(spec: &MixtureSpec) -> Result<Layout> {
        let dims = spec
            .species
            .iter()
            .map(|s| {
                Ok(SpeciesDims {
                    particles: s.particles,
                    spfs: s.spfs,
                    states: s.species_states,
                    basis_dim: basis_size(s.particles, s.spfs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Layout::new(dims, spec.grid.points()))
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn top_len(&self) -> usize {
        self.top_len
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn top_shape(&self) -> Vec<usize> {
        self.species.iter().map(|s| s.states).collect()
    }

    /// Row-major strides of the top tensor.
    pub fn top_strides(&self) -> Vec<usize> {
        let shape = self.top_shape();
        let mut strides = vec![1; shape.len()];
        for s in (0..shape.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * shape[s + 1];
        }
        strides
    }

    pub fn coefficient_range(&self, s: usize) -> std::ops::Range<usize> {
        let d = &self.species[s];
        self.c_offsets[s]..self.c_offsets[s] + d.basis_dim * d.states
    }

    pub fn orbital_range(&self, s: usize) -> std::ops::Range<usize> {
        self.phi_offsets[s]..self.phi_offsets[s] + self.grid_points * self.species[s].spfs
    }
}

/// Resolved numerical problem: grid, one-body operators, couplings and the
/// Fock-space tables of every species.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub spec: MixtureSpec,
    pub grid: Grid,
    pub traps: Vec<TrapSpec>,
    /// One-body Hamiltonian per species on the grid.
    pub one_body: Vec<DMatrix<f64>>,
    /// Inter-species couplings, symmetric with zero diagonal.
    pub couplings: Vec<Vec<f64>>,
    pub fock: Vec<FockSpace>,
    /// Optional restriction of the one-body space (orthonormal columns).
    pub orbital_space: Vec<Option<CMatrix>>,
    /// Eigenvalue clamp for the density inverses.
    pub regularization: f64,
    pub layout: Arc<Layout>,
}

impl Mixture {
    pub fn new(spec: &MixtureSpec) -> Result<Mixture> {
        spec.validate()?;
        let grid = spec.grid.build()?;
        let traps: Vec<TrapSpec> = (0..spec.species_count()).map(|s| spec.trap_of(s).clone()).collect();
        Mixture::with_grid(spec, grid, traps)
    }

    pub fn with_grid(spec: &MixtureSpec, grid: Grid, traps: Vec<TrapSpec>) -> Result<Mixture> {
        spec.validate()?;
        if grid.len() != spec.grid.points() {
            return Err(Error::Shape(format!(
                "grid has {} points, spec expects {}",
                grid.len(),
                spec.grid.points()
            )));
        }
        let one_body = traps
            .iter()
            .map(|t| grid::one_body_hamiltonian(&grid, t))
            .collect::<Result<Vec<_>>>()?;
        let fock = spec
            .species
            .iter()
            .map(|s| FockSpace::new(s.particles, s.spfs))
            .collect::<Result<Vec<_>>>()?;
        let layout = Arc::new(Layout::from_spec(spec)?);
        Ok(Mixture {
            spec: spec.clone(),
            grid,
            traps,
            one_body,
            couplings: spec.couplings()?,
            fock,
            orbital_space: vec![None; spec.species_count()],
            regularization: DEFAULT_REGULARIZATION,
            layout,
        })
    }

    /// Same mixture with every trap replaced.
    pub fn with_traps(&self, traps: Vec<TrapSpec>) -> Result<Mixture> {
        let mut out = self.clone();
        out.one_body = traps
            .iter()
            .map(|t| grid::one_body_hamiltonian(&self.grid, t))
            .collect::<Result<Vec<_>>>()?;
        out.traps = traps;
        Ok(out)
    }

    /// Same mixture with a step of height `height` blocking `x > 0`.
    pub fn blocked(&self, height: f64) -> Result<Mixture> {
        self.with_traps(self.traps.iter().map(|t| t.with_blocking(height)).collect())
    }

    /// Restricts the one-body space of every species to its lowest `k`
    /// one-body eigenvectors.
    pub fn restrict_to_lowest(&self, k: usize) -> Result<Mixture> {
        let mut out = self.clone();
        for s in 0..self.species_count() {
            let (_, v) = grid::eigenpairs(&self.one_body[s], k)?;
            if self.spec.species[s].spfs > k {
                return Err(Error::Config(format!(
                    "species {} has {} orbitals but the restricted space holds {k}",
                    s, self.spec.species[s].spfs
                )));
            }
            out.orbital_space[s] = Some(v.map(|x| Complex64::new(x, 0.0)));
        }
        Ok(out)
    }

    pub fn species_count(&self) -> usize {
        self.spec.species_count()
    }

    pub fn g_intra(&self, s: usize) -> f64 {
        self.spec.species[s].g
    }

    /// Dimension of the one-body space species `s` may explore.
    pub fn orbital_space_dim(&self, s: usize) -> usize {
        self.orbital_space[s]
            .as_ref()
            .map_or(self.grid.len(), |b| b.ncols())
    }

    /// Lowest `k` orbitals of species `s`, inside the restricted space if any.
    pub fn lowest_orbitals(&self, s: usize, k: usize) -> Result<CMatrix> {
        match &self.orbital_space[s] {
            None => {
                let (_, v) = grid::eigenpairs(&self.one_body[s], k)?;
                Ok(v.map(|x| Complex64::new(x, 0.0)))
            }
            Some(basis) => {
                let hc = self.one_body[s].map(|x| Complex64::new(x, 0.0));
                let proj = basis.adjoint() * hc * basis;
                let (_, v) = linalg::hermitian_eigen(&proj);
                if k > v.ncols() {
                    return Err(Error::Config(format!(
                        "requested {k} orbitals from a {}-dimensional space",
                        v.ncols()
                    )));
                }
                let mut out = basis * v.columns(0, k);
                linalg::fix_phases(&mut out);
                Ok(out)
            }
        }
    }
}

/// The multi-layer wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct MLState {
    layout: Arc<Layout>,
    data: Vec<Complex64>,
    /// Real time, or imaginary-time parameter during relaxation.
    pub time: f64,
}

impl MLState {
    pub fn zeros(layout: Arc<Layout>) -> MLState {
        let data = vec![ZERO; layout.total_len()];
        MLState { layout, data, time: 0.0 }
    }

    pub fn from_parts(layout: Arc<Layout>, data: Vec<Complex64>, time: f64) -> Result<MLState> {
        if data.len() != layout.total_len() {
            return Err(Error::Shape(format!(
                "state buffer has {} entries, layout needs {}",
                data.len(),
                layout.total_len()
            )));
        }
        Ok(MLState { layout, data, time })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn species_count(&self) -> usize {
        self.layout.species_count()
    }

    pub fn top(&self) -> &[Complex64] {
        &self.data[..self.layout.top_len()]
    }

    pub fn top_mut(&mut self) -> &mut [Complex64] {
        let n = self.layout.top_len();
        &mut self.data[..n]
    }

    /// Species states of species `s` as columns of a `D x M` matrix.
    pub fn coefficients(&self, s: usize) -> DMatrixView<'_, Complex64> {
        let d = &self.layout.species[s];
        DMatrixView::from_slice(&self.data[self.layout.coefficient_range(s)], d.basis_dim, d.states)
    }

    pub fn coefficients_mut(&mut self, s: usize) -> DMatrixViewMut<'_, Complex64> {
        let (dim, states) = (self.layout.species[s].basis_dim, self.layout.species[s].states);
        let range = self.layout.coefficient_range(s);
        DMatrixViewMut::from_slice(&mut self.data[range], dim, states)
    }

    /// Orbitals of species `s` as columns of an `n x m` matrix.
    pub fn orbitals(&self, s: usize) -> DMatrixView<'_, Complex64> {
        DMatrixView::from_slice(
            &self.data[self.layout.orbital_range(s)],
            self.layout.grid_points,
            self.layout.species[s].spfs,
        )
    }

    pub fn orbitals_mut(&mut self, s: usize) -> DMatrixViewMut<'_, Complex64> {
        let (n, m) = (self.layout.grid_points, self.layout.species[s].spfs);
        let range = self.layout.orbital_range(s);
        DMatrixViewMut::from_slice(&mut self.data[range], n, m)
    }

    /// `||A||`; the lower layers are orthonormal so this is the state norm.
    pub fn norm(&self) -> f64 {
        self.top().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / n;
        for z in self.top_mut() {
            *z *= inv;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<MLState> {
        self.normalize()?;
        Ok(self)
    }

    /// Worst deviation from orthonormality over the species and particle layers.
    pub fn orthonormality_residual(&self) -> f64 {
        (0..self.species_count())
            .map(|s| {
                linalg::orthonormality_residual(&self.coefficients(s))
                    .max(linalg::orthonormality_residual(&self.orbitals(s)))
            })
            .fold(0.0, f64::max)
    }

    /// Gram-Schmidt on the species states and the orbitals of every species.
    pub fn reorthonormalize(&mut self) -> Result<()> {
        for s in 0..self.species_count() {
            linalg::orthonormalize_columns(&mut self.coefficients_mut(s))?;
            linalg::orthonormalize_columns(&mut self.orbitals_mut(s))?;
        }
        Ok(())
    }

    /// Multiplies the top tensor by a phase.
    pub fn rotate_phase(&mut self, angle: f64) {
        let phase = Complex64::from_polar(1.0, angle);
        for z in self.top_mut() {
            *z *= phase;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `<Psi|H|Psi>` for the given mixture.
    pub fn energy(&self, mixture: &Mixture) -> Result<f64> {
        Ok(crate::meanfield::energy(self, mixture)?.re)
    }
}

/// Hartree-product start: lowest one-body orbitals, unit number-state species
/// states (condensate first) and a unit top tensor.
pub fn init_hartree(mixture: &Mixture) -> Result<MLState> {
    let orbitals = (0..mixture.species_count())
        .map(|s| mixture.lowest_orbitals(s, mixture.spec.species[s].spfs))
        .collect::<Result<Vec<_>>>()?;
    init_from_orbitals(mixture.layout.clone(), &orbitals)
}

/// Hartree-product start from explicit orbitals (columns, at least `m` each).
pub fn init_from_orbitals(layout: Arc<Layout>, orbitals: &[CMatrix]) -> Result<MLState> {
    if orbitals.len() != layout.species_count() {
        return Err(Error::Shape(format!(
            "{} orbital sets for {} species",
            orbitals.len(),
            layout.species_count()
        )));
    }
    let mut state = MLState::zeros(layout.clone());
    state.top_mut()[0] = ONE;
    for (s, orb) in orbitals.iter().enumerate() {
        let d = &layout.species[s];
        if orb.ncols() < d.spfs || orb.nrows() != layout.grid_points {
            return Err(Error::Config(format!(
                "species {s}: need {} orbitals on {} points, got {}x{}",
                d.spfs,
                layout.grid_points,
                orb.nrows(),
                orb.ncols()
            )));
        }
        let mut c = state.coefficients_mut(s);
        for i in 0..d.states {
            c[(i, i)] = ONE;
        }
        state.orbitals_mut(s).copy_from(&orb.columns(0, d.spfs));
    }
    if state.orthonormality_residual() > 1e-10 {
        return Err(Error::Config("supplied orbitals are not orthonormal".into()));
    }
    Ok(state)
}

fn random_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<CMatrix> {
    let mut m = CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    linalg::orthonormalize_columns(&mut m.as_view_mut())?;
    Ok(m)
}

/// Random normalized state with orthonormal lower layers; deterministic in
/// `seed`. Orbitals are drawn inside the restricted one-body space if any.
pub fn random_state(mixture: &Mixture, seed: u64) -> Result<MLState> {
    let layout = mixture.layout.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = MLState::zeros(layout.clone());
    for z in state.top_mut() {
        *z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    state.normalize()?;
    for s in 0..layout.species_count() {
        let d = layout.species[s].clone();
        let c = random_columns(&mut rng, d.basis_dim, d.states)?;
        state.coefficients_mut(s).copy_from(&c);
        let phi = match &mixture.orbital_space[s] {
            None => random_columns(&mut rng, layout.grid_points, d.spfs)?,
            Some(basis) => basis * random_columns(&mut rng, basis.ncols(), d.spfs)?,
        };
        state.orbitals_mut(s).copy_from(&phi);
    }
    Ok(state)
}
