//! One-dimensional discrete variable representations and one-body operators.
//!
//! Orbitals live on the grid as DVR coefficient vectors with the plain
//! Euclidean inner product; the function value at node `i` is
//! `c_i / sqrt(w_i)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;

fn default_omega() -> f64 {
    1.0
}

/// How to build the spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Gauss-Hermite nodes of the oscillator basis with frequency `omega`.
    Harmonic {
        points: usize,
        #[serde(default = "default_omega")]
        omega: f64,
    },
    /// Uniform sine DVR on `[-half_width, half_width]` with hard walls.
    Sine { points: usize, half_width: f64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Harmonic {
            points: 250,
            omega: 1.0,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> usize {
        match *self {
            GridSpec::Harmonic { points, .. } | GridSpec::Sine { points, .. } => points,
        }
    }

    pub fn build(&self) -> Result<Grid> {
        match *self {
            GridSpec::Harmonic { points, omega } => Grid::harmonic(points, omega),
            GridSpec::Sine { points, half_width } => Grid::sine(points, half_width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Harmonic,
    Sine,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub kind: GridKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Kinetic energy `p^2/2` in the DVR, real symmetric.
    pub kinetic: DMatrix<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Harmonic-oscillator DVR with `n` points.
    pub fn harmonic(n: usize, omega: f64) -> Result<Grid> {
        if n < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {n}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Config(format!("grid frequency must be positive, got {omega}")));
        }
        // position operator in the oscillator basis
        let mut x_fbr = DMatrix::<f64>::zeros(n, n);
        for k in 0..n - 1 {
            let v = ((k + 1) as f64 / (2.0 * omega)).sqrt();
            x_fbr[(k, k + 1)] = v;
            x_fbr[(k + 1, k)] = v;
        }
        let mut nodes: Vec<f64> = x_fbr.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        for i in 0..n / 2 {
            let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -a;
            nodes[n - 1 - i] = a;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }

        // oscillator functions at the nodes: chi[k][alpha]
        let mut chi = DMatrix::<f64>::zeros(n, n);
        for (a, &x) in nodes.iter().enumerate() {
            let xi = omega.sqrt() * x;
            chi[(0, a)] = (omega / PI).powf(0.25) * (-0.5 * xi * xi).exp();
            if n > 1 {
                chi[(1, a)] = 2f64.sqrt() * xi * chi[(0, a)];
            }
            for k in 2..n {
                let kf = k as f64;
                chi[(k, a)] =
                    (2.0 / kf).sqrt() * xi * chi[(k - 1, a)] - ((kf - 1.0) / kf).sqrt() * chi[(k - 2, a)];
            }
        }
        // Christoffel weights
        let mut weights: Vec<f64> = (0..n)
            .map(|a| 1.0 / chi.column(a).iter().map(|c| c * c).sum::<f64>())
            .collect();
        for i in 0..n / 2 {
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        let mut u = chi;
        for a in 0..n {
            let s = weights[a].sqrt();
            u.column_mut(a).scale_mut(s);
        }

        let mut t_fbr = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            t_fbr[(k, k)] = omega * (2 * k + 1) as f64 / 4.0;
            if k + 2 < n {
                let v = -omega * (((k + 1) * (k + 2)) as f64).sqrt() / 4.0;
                t_fbr[(k, k + 2)] = v;
                t_fbr[(k + 2, k)] = v;
            }
        }
        let t = u.transpose() * t_fbr * &u;
        let kinetic = symmetrize_reflection(&t);
        Ok(Grid {
            kind: GridKind::Harmonic,
            nodes,
            weights,
            kinetic,
        })
    }

    /// Sine DVR on `[-half_width, half_width]` (walls at the endpoints).
    pub fn sine(n: usize, half_width: f64) -> Result<Grid> {
        if n < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Config(format!("grid half width must be positive, got {half_width}")));
        }
        let length = 2.0 * half_width;
        let intervals = (n + 1) as f64;
        let dx = length / intervals;
        let nodes: Vec<f64> = (1..=n).map(|i| -half_width + i as f64 * dx).collect();
        let weights = vec![dx; n];
        let pref = 0.5 * PI * PI / (2.0 * length * length);
        let kinetic = DMatrix::from_fn(n, n, |a, b| {
            let (i, j) = ((a + 1) as f64, (b + 1) as f64);
            if a == b {
                pref * ((2.0 * intervals * intervals + 1.0) / 3.0 - 1.0 / (PI * i / intervals).sin().powi(2))
            } else {
                let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                pref * sign
                    * (1.0 / (PI * (i - j) / (2.0 * intervals)).sin().powi(2)
                        - 1.0 / (PI * (i + j) / (2.0 * intervals)).sin().powi(2))
            }
        });
        Ok(Grid {
            kind: GridKind::Sine,
            nodes,
            weights,
            kinetic: symmetrize_reflection(&kinetic),
        })
    }

    /// Function values of a coefficient vector at the nodes.
    pub fn function_values<'a>(
        &'a self,
        coeffs: impl IntoIterator<Item = &'a num_complex::Complex64> + 'a,
    ) -> impl Iterator<Item = num_complex::Complex64> + 'a {
        coeffs
            .into_iter()
            .zip(&self.weights)
            .map(|(c, w)| c / w.sqrt())
    }
}

fn symmetrize_reflection(t: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let a = 0.5 * (t[(i, j)] + t[(j, i)]);
        let b = 0.5 * (t[(n - 1 - i, n - 1 - j)] + t[(n - 1 - j, n - 1 - i)]);
        0.5 * (a + b)
    })
}

/// External potential of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSpec {
    /// Harmonic frequency of the base trap, `U = omega^2 x^2 / 2`.
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Integrated strength of the central Gaussian barrier.
    #[serde(default)]
    pub barrier_height: f64,
    /// Width of the Gaussian barrier.
    #[serde(default = "default_barrier_width")]
    pub barrier_width: f64,
    /// Step potential added for `x > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocking_step: Option<f64>,
}

fn default_barrier_width() -> f64 {
    0.2
}

/// Step height used to block the right well when none is configured.
pub const DEFAULT_BLOCKING_STEP: f64 = 30.0;

impl Default for TrapSpec {
    fn default() -> Self {
        TrapSpec {
            omega: 1.0,
            barrier_height: 0.0,
            barrier_width: default_barrier_width(),
            blocking_step: None,
        }
    }
}

impl TrapSpec {
    /// Harmonic trap plus a central Gaussian barrier.
    pub fn double_well(barrier_height: f64, barrier_width: f64) -> TrapSpec {
        TrapSpec {
            barrier_height,
            barrier_width,
            ..TrapSpec::default()
        }
    }

    pub fn with_blocking(&self, height: f64) -> TrapSpec {
        TrapSpec {
            blocking_step: Some(height),
            ..self.clone()
        }
    }

    pub fn without_blocking(&self) -> TrapSpec {
        TrapSpec {
            blocking_step: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::Config(format!("trap omega must be positive, got {}", self.omega)));
        }
        if !(self.barrier_height >= 0.0) {
            return Err(Error::Config(format!(
                "barrier height must be non-negative, got {}",
                self.barrier_height
            )));
        }
        if !(self.barrier_width > 0.0) {
            return Err(Error::Config(format!(
                "barrier width must be positive, got {}",
                self.barrier_width
            )));
        }
        if let Some(step) = self.blocking_step {
            if !(step >= 0.0) {
                return Err(Error::Config(format!("blocking step must be non-negative, got {step}")));
            }
        }
        Ok(())
    }

    pub fn potential(&self, x: f64) -> f64 {
        let s = self.barrier_width;
        let mut u = 0.5 * self.omega * self.omega * x * x
            + self.barrier_height / (2.0 * PI * s * s).sqrt() * (-x * x / (2.0 * s * s)).exp();
        if let Some(step) = self.blocking_step {
            if x > 0.0 {
                u += step;
            }
        }
        u
    }

    /// Value of the potential at the trap centre without the blocking step.
    pub fn barrier_top(&self) -> f64 {
        self.without_blocking().potential(0.0)
    }
}

/// Kinetic energy plus the trap potential on the nodes.
pub fn one_body_hamiltonian(grid: &Grid, trap: &TrapSpec) -> Result<DMatrix<f64>> {
    trap.validate()?;
    let mut h = grid.kinetic.clone();
    for (i, &x) in grid.nodes.iter().enumerate() {
        h[(i, i)] += trap.potential(x);
    }
    Ok(h)
}

/// Lowest `k` eigenpairs of a real symmetric matrix, energies ascending.
pub fn eigenpairs(matrix: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    linalg::symmetric_eigen_lowest(matrix, k)
}
