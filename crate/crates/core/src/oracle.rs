//! Full-space reference evolution.
//!
//! Builds the model on all `2^L` occupation states and propagates with a
//! scaling-and-squaring Taylor matrix exponential, sharing nothing with the
//! spectral stepper except the generator construction.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::basis::{BasisIndex, Truncation};
use crate::evolution::{build_generator, EvolutionError, EvolutionResult, ModelKind};
use crate::inversion::ChainSolution;
use crate::params::PhysicalParams;

pub const MAX_ORACLE_SITES: usize = 12;

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|c| c.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(-i H t)` for a real symmetric `h`.
pub fn expm_taylor(h: &DMatrix<f64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let a: DMatrix<C64> = h.map(|v| C64::new(0.0, -v * t));
    let norm = one_norm(&a);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = a.unscale(2f64.powi(s));
    // 20 terms is far past double precision for ||A|| <= 1/2
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=20 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn brute_force_oracle(
    chain: &ChainSolution,
    params: &PhysicalParams,
    model: ModelKind,
    times: &[f64],
) -> Result<EvolutionResult, EvolutionError> {
    if chain.l > MAX_ORACLE_SITES {
        return Err(EvolutionError::TooLarge(chain.l));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvolutionError::BadTimes);
    }
    let basis = BasisIndex::new(chain.l, Truncation::Full);
    let h = build_generator(chain, params, model, &basis)?.to_dense();
    let mut psi = nalgebra::DVector::<C64>::zeros(basis.dim());
    psi[basis.single(1)] = C64::new(1.0, 0.0);

    let mut states = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut cached: Option<(f64, DMatrix<C64>)> = None;
    for &t in times {
        let dt = t - now;
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((d, _)) if (d - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cached = Some((dt, expm_taylor(&h, dt)));
            }
            psi = &cached.as_ref().unwrap().1 * psi;
        }
        now = t;
        states.push(psi.clone());
    }
    Ok(EvolutionResult::from_states(model, &basis, times, &states))
}
