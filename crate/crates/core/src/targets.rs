//! Linear-spectrum perfect-transport targets.
//!
//! For a mirror-symmetric XX chain with flat on-site potential, the couplings
//! `J_{l,l+1} = 2 J_max sqrt(l (L - l)) / Lbar` give an equally spaced
//! single-excitation spectrum and a transfer |1> -> |L> at `t_pi = pi Lbar / (4 J_max)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TargetError {
    #[error("chain length must be at least 2, got {0}")]
    TooShort(usize),
    #[error("global detuning must be nonzero")]
    ZeroDetuning,
    #[error("blockade resonance: delta0 dx_min^6 / C6 = 1 (delta0 = V_max = {vmax} rad/us)")]
    Resonance { vmax: f64 },
    #[error("J_max must be positive and finite, got {0}")]
    BadJmax(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportTargets {
    pub l: usize,
    pub l_bar: f64,
    /// rad/us
    pub j_max: f64,
    /// `L - 1` nearest-neighbour couplings, rad/us.
    pub j_targets: Vec<f64>,
    /// Flat on-site potential, rad/us. Only its uniformity matters for transfer.
    pub mu_target: f64,
    /// us
    pub t_pi: f64,
}

impl TransportTargets {
    pub fn new(l: usize, j_max: f64, mu_target: f64) -> Result<Self, TargetError> {
        Ok(Self {
            l,
            l_bar: characteristic_length(l)?,
            j_max,
            j_targets: coupling_targets(l, j_max)?,
            mu_target,
            t_pi: transport_time(l, j_max)?,
        })
    }
}

/// `Lbar = L` for even chains, `sqrt(L^2 - 1)` for odd ones.
pub fn characteristic_length(l: usize) -> Result<f64, TargetError> {
    if l < 2 {
        return Err(TargetError::TooShort(l));
    }
    let lf = l as f64;
    Ok(if l % 2 == 0 { lf } else { (lf * lf - 1.0).sqrt() })
}

/// Central coupling produced by uniform driving at the minimum spacing.
pub fn j_max(omega: f64, delta0: f64, c6: f64, dx_min: f64) -> Result<f64, TargetError> {
    if delta0 == 0.0 {
        return Err(TargetError::ZeroDetuning);
    }
    let vmax = c6 / dx_min.powi(6);
    let denom = delta0 / vmax - 1.0;
    if denom.abs() < 1e-12 {
        return Err(TargetError::Resonance { vmax });
    }
    Ok(omega * omega / (4.0 * delta0) / denom)
}

pub fn coupling_targets(l: usize, j_max: f64) -> Result<Vec<f64>, TargetError> {
    let lb = characteristic_length(l)?;
    if !(j_max > 0.0 && j_max.is_finite()) {
        return Err(TargetError::BadJmax(j_max));
    }
    Ok((1..l).map(|i| 2.0 * j_max * ((i * (l - i)) as f64).sqrt() / lb).collect())
}

/// `t_pi = pi Lbar / (4 J_max)`, us.
pub fn transport_time(l: usize, j_max: f64) -> Result<f64, TargetError> {
    if !(j_max > 0.0 && j_max.is_finite()) {
        return Err(TargetError::BadJmax(j_max));
    }
    Ok(std::f64::consts::PI * characteristic_length(l)? / (4.0 * j_max))
}
