//! Coefficient counts of the multi-layer ansatz against single-layer MCTDHB.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::basis_size;
use crate::state::MixtureSpec;

/// Coefficients stored by one method, split by layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodCost {
    /// Top-layer coefficients (`prod M` for the multi-layer ansatz, the full
    /// product of number-state bases for MCTDHB).
    pub top: u64,
    /// Species-layer coefficients `M * D` per species; empty for MCTDHB.
    pub species: Vec<u64>,
    /// Orbital coefficients `m * n` per species.
    pub orbitals: Vec<u64>,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub ml_mctdhb: MethodCost,
    pub mctdhb: MethodCost,
    /// `mctdhb.total / ml_mctdhb.total`.
    pub ratio: f64,
    /// Integer part of the ratio.
    pub ratio_floor: u64,
}

fn overflow() -> Error {
    Error::ResourceCap("coefficient count does not fit in 64 bits".into())
}

fn mul(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b).ok_or_else(overflow)
}

fn add(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b).ok_or_else(overflow)
}

/// Both coefficient counts for `spec` on its grid.
pub fn cost_estimate(spec: &MixtureSpec) -> Result<CostReport> {
    let n = spec.grid.points() as u64;
    let mut ml_top = 1u64;
    let mut full_top = 1u64;
    let mut species = Vec::new();
    let mut orbitals = Vec::new();
    for s in &spec.species {
        let dim = basis_size(s.particles, s.spfs)? as u64;
        let big_m = s.species_states as u64;
        ml_top = mul(ml_top, big_m)?;
        full_top = mul(full_top, dim)?;
        species.push(mul(big_m, dim)?);
        orbitals.push(mul(s.spfs as u64, n)?);
    }
    let orbital_sum = orbitals.iter().try_fold(0u64, |acc, &x| add(acc, x))?;
    let species_sum = species.iter().try_fold(0u64, |acc, &x| add(acc, x))?;
    let ml_total = add(add(ml_top, species_sum)?, orbital_sum)?;
    let full_total = add(full_top, orbital_sum)?;
    Ok(CostReport {
        ml_mctdhb: MethodCost {
            top: ml_top,
            species,
            orbitals: orbitals.clone(),
            total: ml_total,
        },
        mctdhb: MethodCost {
            top: full_top,
            species: Vec::new(),
            orbitals,
            total: full_total,
        },
        ratio: full_total as f64 / ml_total as f64,
        ratio_floor: full_total / ml_total,
    })
}
