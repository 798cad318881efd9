//! Real- and imaginary-time propagation of the full state.

use std::borrow::Cow;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eom::{full_rhs, Mode};
use crate::error::{Error, Result};
use crate::grid::eigenpairs;
use crate::meanfield::apply_one_body;
use crate::integrator::{ControllerState, Integrator, Method, StepStats, Tolerances};
use crate::observables::{record, ObservableRecord};
use crate::state::{MLState, Mixture};

fn default_true() -> bool {
    true
}
fn default_t_final() -> f64 {
    100.0
}
fn default_output_stride() -> f64 {
    0.5
}
fn default_initial_step() -> f64 {
    1e-3
}
fn default_tol() -> f64 {
    1e-8
}
fn default_regularization() -> f64 {
    crate::state::DEFAULT_REGULARIZATION
}
fn default_repair() -> f64 {
    1e-8
}
fn default_convergence() -> f64 {
    1e-10
}
fn default_max_time() -> f64 {
    2000.0
}
fn default_max_steps() -> usize {
    2_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    #[serde(default)]
    pub method: Method,
    /// Integrate the one-body operator exactly in its eigenbasis and leave
    /// only the remainder to the Runge-Kutta pair.
    #[serde(default = "default_true")]
    pub exact_one_body: bool,
    /// Final real time.
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// Spacing of recorded outputs (also the relaxation convergence window).
    #[serde(default = "default_output_stride")]
    pub output_stride: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_tol")]
    pub atol: f64,
    #[serde(default = "default_tol")]
    pub rtol: f64,
    /// Eigenvalue clamp for density inverses.
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    /// Real time: Gram-Schmidt repair above this orthonormality residual.
    #[serde(default = "default_repair")]
    pub repair_threshold: f64,
    /// Checkpoint spacing; `None` writes only the final checkpoint.
    #[serde(default)]
    pub checkpoint_stride: Option<f64>,
    /// Relaxation stops once the energy changes by less than this over two
    /// consecutive output windows.
    #[serde(default = "default_convergence")]
    pub convergence: f64,
    #[serde(default = "default_max_time")]
    pub max_imaginary_time: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl PropagationConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            atol: self.atol,
            rtol: self.rtol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_final", self.t_final),
            ("output_stride", self.output_stride),
            ("initial_step", self.initial_step),
            ("atol", self.atol),
            ("rtol", self.rtol),
            ("regularization", self.regularization),
            ("repair_threshold", self.repair_threshold),
            ("convergence", self.convergence),
            ("max_imaginary_time", self.max_imaginary_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("propagation.{name}: must be positive, got {v}")));
            }
        }
        if let Some(c) = self.checkpoint_stride {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("propagation.checkpoint_stride: must be positive, got {c}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("propagation.max_steps: must be positive".into()));
        }
        Ok(())
    }
}

/// A Gram-Schmidt repair during real-time propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairEvent {
    pub t: f64,
    pub residual: f64,
}

/// Orbital coordinates in the eigenbasis of each species' one-body operator.
struct Frame {
    /// Eigenvectors as columns, per species.
    vecs: Vec<DMatrix<f64>>,
    vecs_t: Vec<DMatrix<f64>>,
    /// Diagonal generator over the whole state vector: one-body energies on
    /// the orbitals, a common energy shift on the top tensor, zero on the
    /// species layer.
    rates: Vec<Complex64>,
    factor: Complex64,
    top_len: usize,
}

impl Frame {
    fn new(mixture: &Mixture, mode: Mode) -> Result<Frame> {
        let layout = &mixture.layout;
        let n = layout.grid_points;
        let factor = mode.factor();
        let mut rates = vec![Complex64::new(0.0, 0.0); layout.total_len()];
        let mut vecs: Vec<DMatrix<f64>> = Vec::new();
        let mut energies: Vec<Vec<f64>> = Vec::new();
        for s in 0..layout.species_count() {
            let (vals, v) = match (0..s).find(|&p| mixture.one_body[p] == mixture.one_body[s]) {
                Some(p) => (energies[p].clone(), vecs[p].clone()),
                None => eigenpairs(&mixture.one_body[s], n)?,
            };
            // a restricted orbital space need not commute with the one-body
            // operator; such species keep the plain form
            if mixture.orbital_space[s].is_none() {
                for chunk in rates[layout.orbital_range(s)].chunks_mut(n) {
                    for (r, &e) in chunk.iter_mut().zip(&vals) {
                        *r = factor * e;
                    }
                }
            }
            energies.push(vals);
            vecs.push(v);
        }
        let vecs_t = vecs.iter().map(|v| v.transpose()).collect();
        Ok(Frame {
            vecs,
            vecs_t,
            rates,
            factor,
            top_len: layout.top_len(),
        })
    }

    /// Moves the trivial phase `exp(-i E t)` of the top tensor into the
    /// exact part.
    fn set_shift(&mut self, energy: f64) {
        let r = self.factor * energy;
        self.rates[..self.top_len].fill(r);
    }

    fn rotate(mats: &[DMatrix<f64>], x: &MLState) -> MLState {
        let mut out = x.clone();
        for (s, m) in mats.iter().enumerate() {
            let r = apply_one_body(m, &x.orbitals(s));
            out.orbitals_mut(s).copy_from(&r);
        }
        out
    }

    fn to_coords(&self, grid: &MLState) -> MLState {
        Frame::rotate(&self.vecs_t, grid)
    }

    fn to_grid(&self, coords: &MLState) -> MLState {
        Frame::rotate(&self.vecs, coords)
    }
}

/// Owns the working state and the integrator.
pub struct Propagator<'m> {
    mixture: Cow<'m, Mixture>,
    cfg: PropagationConfig,
    mode: Mode,
    integ: Integrator,
    frame: Option<Frame>,
    /// Integration variables; equal to `state` without a frame.
    coords: MLState,
    state: MLState,
    pub repairs: Vec<RepairEvent>,
}

impl<'m> Propagator<'m> {
    pub fn new(state: MLState, mixture: &'m Mixture, cfg: &PropagationConfig, mode: Mode) -> Result<Propagator<'m>> {
        cfg.validate()?;
        if **state.layout() != *mixture.layout {
            return Err(Error::Shape("state does not match the mixture".into()));
        }
        if !state.is_finite() {
            return Err(Error::NonFinite(state.time));
        }
        let mixture = if mixture.regularization == cfg.regularization {
            Cow::Borrowed(mixture)
        } else {
            let mut m = mixture.clone();
            m.regularization = cfg.regularization;
            Cow::Owned(m)
        };
        let mut integ = Integrator::new(cfg.method, cfg.tolerances(), cfg.initial_step)?;
        let frame = if cfg.exact_one_body {
            let mut f = Frame::new(&mixture, mode)?;
            f.set_shift(state.energy(&mixture)?);
            integ = integ.with_linear(f.rates.clone());
            Some(f)
        } else {
            None
        };
        let coords = match &frame {
            Some(f) => f.to_coords(&state),
            None => state.clone(),
        };
        Ok(Propagator {
            mixture,
            cfg: cfg.clone(),
            mode,
            integ,
            frame,
            coords,
            state,
            repairs: Vec::new(),
        })
    }

    /// Continues with a saved step-size controller.
    pub fn with_controller(mut self, c: ControllerState) -> Result<Self> {
        let mut integ = Integrator::from_controller(self.cfg.method, self.cfg.tolerances(), c)?;
        if let Some(f) = &self.frame {
            integ = integ.with_linear(f.rates.clone());
        }
        self.integ = integ;
        Ok(self)
    }

    pub fn state(&self) -> &MLState {
        &self.state
    }

    pub fn into_state(self) -> MLState {
        self.state
    }

    pub fn controller(&self) -> ControllerState {
        self.integ.controller()
    }

    pub fn stats(&self) -> StepStats {
        self.integ.stats
    }

    /// Rebuilds the integration variables from the grid state, as a fresh
    /// start from a checkpoint would.
    fn resync(&mut self) -> Result<()> {
        if let Some(f) = &mut self.frame {
            f.set_shift(self.state.energy(&self.mixture)?);
            self.coords = f.to_coords(&self.state);
            self.integ.set_linear(f.rates.clone());
        }
        Ok(())
    }

    /// One accepted step, not passing `t_end`, followed by the constraint
    /// policy of the current mode.
    pub fn step(&mut self, t_end: f64) -> Result<()> {
        let layout = self.coords.layout().clone();
        let mixture: &Mixture = &self.mixture;
        let mode = self.mode;
        let frame = self.frame.as_ref();
        let mut f = |t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            let x = MLState::from_parts(layout.clone(), y.to_vec(), t)?;
            match frame {
                None => Ok(full_rhs(&x, mixture, mode)?.as_slice().to_vec()),
                Some(fr) => {
                    let d = fr.to_coords(&full_rhs(&fr.to_grid(&x), mixture, mode)?);
                    let mut out = d.as_slice().to_vec();
                    for ((o, r), z) in out.iter_mut().zip(&fr.rates).zip(y) {
                        *o -= r * z;
                    }
                    Ok(out)
                }
            }
        };
        let mut t = self.coords.time;
        let mut y = self.coords.as_slice().to_vec();
        self.integ.step(&mut f, &mut t, &mut y, t_end)?;
        self.coords = MLState::from_parts(layout, y, t)?;
        if !self.coords.is_finite() {
            return Err(Error::NonFinite(t));
        }
        match self.mode {
            Mode::Real => {
                let residual = self.coords.orthonormality_residual();
                if residual > self.cfg.repair_threshold {
                    self.coords.reorthonormalize()?;
                    self.integ.invalidate();
                    self.repairs.push(RepairEvent { t, residual });
                }
            }
            Mode::Imaginary => {
                self.coords.reorthonormalize()?;
                self.coords.normalize()?;
                self.integ.invalidate();
            }
        }
        self.state = match &self.frame {
            Some(f) => f.to_grid(&self.coords),
            None => self.coords.clone(),
        };
        Ok(())
    }

    /// Steps up to exactly `t_end`, then resynchronizes so that a run resumed
    /// from a checkpoint taken here continues identically.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.state.time < t_end {
            if self.integ.stats.accepted >= self.cfg.max_steps {
                return Err(Error::ResourceCap(format!("more than {} steps", self.cfg.max_steps)));
            }
            self.step(t_end)?;
        }
        self.resync()
    }
}

/// Output times `k * stride` strictly after `t0`, up to and including `t_final`.
pub fn output_times(t0: f64, stride: f64, t_final: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = (t0 / stride).floor() as i64;
    loop {
        let t = k as f64 * stride;
        if t > t0 + 1e-12 * stride {
            if t >= t_final - 1e-12 * stride {
                break;
            }
            out.push(t);
        }
        k += 1;
    }
    if t_final > t0 {
        out.push(t_final);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<ObservableRecord>,
    pub repairs: Vec<RepairEvent>,
    pub final_state: MLState,
    pub controller: ControllerState,
    pub stats: StepStats,
}

/// Real-time run with a callback at the start and at every output time.
pub fn propagate_real_with<F>(
    state: MLState,
    mixture: &Mixture,
    cfg: &PropagationConfig,
    controller: Option<ControllerState>,
    mut on_output: F,
) -> Result<Trajectory>
where
    F: FnMut(&Propagator) -> Result<()>,
{
    let t0 = state.time;
    let mut p = Propagator::new(state, mixture, cfg, Mode::Real)?;
    if let Some(c) = controller {
        p = p.with_controller(c)?;
    }
    on_output(&p)?;
    for t in output_times(t0, cfg.output_stride, cfg.t_final) {
        p.advance_to(t)?;
        on_output(&p)?;
    }
    Ok(Trajectory {
        records: Vec::new(),
        repairs: p.repairs.clone(),
        controller: p.controller(),
        stats: p.stats(),
        final_state: p.into_state(),
    })
}

/// Real-time run recording observables at every output time.
pub fn propagate_real(state: &MLState, mixture: &Mixture, cfg: &PropagationConfig) -> Result<Trajectory> {
    let mut records = Vec::new();
    let mut traj = propagate_real_with(state.clone(), mixture, cfg, None, |p| {
        let r = record(p.state(), mixture)?;
        let bad = [r.norm, r.energy].iter().any(|x| !x.is_finite())
            || r.species.iter().any(|s| !s.p_left.is_finite());
        if bad {
            return Err(Error::NonFinite(r.t));
        }
        records.push(r);
        Ok(())
    })?;
    traj.records = records;
    Ok(traj)
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub state: MLState,
    pub energy: f64,
    /// `(tau, E)` at every output window.
    pub log: Vec<(f64, f64)>,
    pub steps: usize,
    /// Largest energy increase over a single accepted step.
    pub max_increase: f64,
    pub stats: StepStats,
}

/// Imaginary-time relaxation to the variational ground state.
pub fn relax_imaginary(state: &MLState, mixture: &Mixture, cfg: &PropagationConfig) -> Result<Relaxation> {
    let mut start = state.clone();
    start.time = 0.0;
    start.reorthonormalize()?;
    start.normalize()?;
    let mut p = Propagator::new(start, mixture, cfg, Mode::Imaginary)?;
    let mut energy = p.state().energy(mixture)?;
    let mut log = vec![(0.0, energy)];
    let mut last_window = energy;
    let mut calm = 0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut k = 1usize;
    loop {
        let target = k as f64 * cfg.output_stride;
        while p.state().time < target {
            if p.stats().accepted >= cfg.max_steps {
                return Err(Error::NotConverged { steps: p.stats().accepted, energy });
            }
            p.step(target)?;
            let e = p.state().energy(mixture)?;
            max_increase = max_increase.max(e - energy);
            energy = e;
        }
        log.push((target, energy));
        if (energy - last_window).abs() < cfg.convergence {
            calm += 1;
        } else {
            calm = 0;
        }
        last_window = energy;
        if calm >= 2 {
            break;
        }
        if target >= cfg.max_imaginary_time {
            return Err(Error::NotConverged { steps: p.stats().accepted, energy });
        }
        k += 1;
    }
    let stats = p.stats();
    let mut out = p.into_state();
    out.time = 0.0;
    Ok(Relaxation {
        state: out,
        energy,
        log,
        steps: stats.accepted,
        max_increase,
        stats,
    })
}
