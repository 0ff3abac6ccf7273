//! Inverse problem: positions and site detunings realizing the transport targets.
//!
//! Off-resonant driving of each atom gives second-order on-site potentials and
//! flip-flop couplings
//!
//! ```text
//! mu_l   = -D_l - W^2 / (2 D_l) + sum_{l' != l} W^2 V_ll' / (4 D_l' (D_l' - V_ll'))
//! J_ll'  = W^2 V_ll' / 8 * [1 / (D_l (D_l - V_ll')) + 1 / (D_l' (D_l' - V_ll'))]
//! ```
//!
//! with `D_l = delta0 + delta_l` and `V_ll' = C6 / |x_l - x_l'|^6`. The solver
//! imposes mirror symmetry, pins the central spacing to `dx_min` and the
//! central detuning to zero, and runs a damped Newton iteration on the
//! remaining half-chain unknowns.

use log::warn;
use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{HardwareConstraints, PhysicalParams};
use crate::targets::{self, TargetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MappingMode {
    /// Nearest-neighbour pairs only.
    NN,
    /// All pairs.
    LRI,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InversionError {
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("resonance between sites {a} and {b}: D_{a} = V_{a}{b} = {v} rad/us")]
    Resonance { a: usize, b: usize, v: f64 },
    #[error("site {0} has zero total detuning")]
    ZeroDetuning(usize),
    #[error("inversion did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64, last_iterate: Vec<f64> },
    #[error("infeasible geometry: bond {bond} has spacing {spacing} um < dx_min")]
    InfeasibleGeometry { bond: usize, spacing: f64 },
    #[error("positions and detunings differ in length ({0} vs {1})")]
    Shape(usize, usize),
}

/// On-site potentials and the symmetric flip-flop matrix, rad/us.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCouplings {
    pub mu: Vec<f64>,
    pub j: DMatrix<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// 2-norm condition number of the final Jacobian (1 when there are no unknowns).
    pub jacobian_condition: f64,
    pub homotopy: bool,
    /// `|delta0| / Omega` fell below the configured perturbative ratio.
    pub weak_detuning: bool,
    pub mode: Option<MappingMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSolution {
    pub l: usize,
    /// um, `x_1 = 0`, strictly increasing.
    pub positions: Vec<f64>,
    /// rad/us
    pub site_detunings: Vec<f64>,
    /// rad/us
    pub global_detuning: f64,
    /// rad/us
    pub omega: f64,
    /// Coupling scale the profile was solved for (rad/us). Equals the
    /// closed-form `J_max` for even chains; free for odd chains.
    pub j_max: f64,
    /// Largest scaled residual `|r| / J_max`.
    pub residual_norm: f64,
    pub diagnostics: SolveDiagnostics,
}

impl ChainSolution {
    pub fn spacings(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Total detunings `D_l = delta0 + delta_l`.
    pub fn total_detunings(&self) -> Vec<f64> {
        self.site_detunings.iter().map(|d| self.global_detuning + d).collect()
    }

    /// Analytic transfer time of the target profile, us.
    pub fn t_pi(&self) -> f64 {
        targets::transport_time(self.l, self.j_max).expect("solution has positive J_max")
    }
}

/// Evaluate the second-order mapping for explicit positions and total detunings.
pub fn mapping(
    positions: &[f64],
    total_detunings: &[f64],
    omega: f64,
    c6: f64,
    mode: MappingMode,
) -> Result<EffectiveCouplings, InversionError> {
    let l = positions.len();
    if total_detunings.len() != l {
        return Err(InversionError::Shape(l, total_detunings.len()));
    }
    for (i, d) in total_detunings.iter().enumerate() {
        if *d == 0.0 {
            return Err(InversionError::ZeroDetuning(i + 1));
        }
    }
    let w2 = omega * omega;
    let mut mu: Vec<f64> = total_detunings.iter().map(|&d| -d - w2 / (2.0 * d)).collect();
    let mut j = DMatrix::zeros(l, l);
    for a in 0..l {
        for b in (a + 1)..l {
            if mode == MappingMode::NN && b != a + 1 {
                continue;
            }
            let v = c6 / (positions[b] - positions[a]).abs().powi(6);
            let (da, db) = (total_detunings[a], total_detunings[b]);
            for (site, d) in [(a, da), (b, db)] {
                if (d - v).abs() <= 1e-12 * d.abs().max(v) {
                    return Err(InversionError::Resonance { a: site + 1, b: if site == a { b + 1 } else { a + 1 }, v });
                }
            }
            let fa = 1.0 / (da * (da - v));
            let fb = 1.0 / (db * (db - v));
            // the partner's denominator enters each site's shift
            mu[a] += w2 * v / 4.0 * fb;
            mu[b] += w2 * v / 4.0 * fa;
            let jab = w2 * v / 8.0 * (fa + fb);
            j[(a, b)] = jab;
            j[(b, a)] = jab;
        }
    }
    Ok(EffectiveCouplings { mu, j })
}

pub fn effective_mapping(
    chain: &ChainSolution,
    params: &PhysicalParams,
    mode: MappingMode,
) -> Result<EffectiveCouplings, InversionError> {
    mapping(&chain.positions, &chain.total_detunings(), chain.omega, params.c6, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Bound on the scaled residual `max |r| / J_max`.
    pub tol: f64,
    pub max_iter: usize,
    /// Mapping used inside the residuals.
    pub mode: MappingMode,
    /// Warn when `|delta0| / Omega` is below this.
    pub perturbative_ratio: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, mode: MappingMode::NN, perturbative_ratio: 3.0 }
    }
}

/// Layout of the reduced unknown vector for a chain of length `l`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    l: usize,
    k: usize,
    odd: bool,
    n_sp: usize,
    n_det: usize,
}

impl Layout {
    fn new(l: usize) -> Self {
        let k = l / 2;
        let odd = l % 2 == 1;
        Self { l, k, odd, n_sp: k.saturating_sub(1), n_det: if odd { k } else { k.saturating_sub(1) } }
    }

    fn len(&self) -> usize {
        self.n_sp + self.n_det + usize::from(self.odd)
    }
}

struct Problem<'a> {
    lay: Layout,
    p: &'a PhysicalParams,
    dx: f64,
    delta0: f64,
    jm0: f64,
    targets: Vec<f64>,
    mode: MappingMode,
}

impl Problem<'_> {
    /// Unknowns -> (outer spacings, outer detunings, scale).
    fn unpack(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let Layout { n_sp, n_det, odd, .. } = self.lay;
        let sp = z[..n_sp].iter().map(|v| self.dx + v.exp()).collect();
        let det = z[n_sp..n_sp + n_det].iter().map(|v| v * self.delta0.abs()).collect();
        let scale = if odd { self.jm0 * (1.0 + z[n_sp + n_det]) } else { self.jm0 };
        (sp, det, scale)
    }

    fn chain(&self, sp: &[f64], det: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let Layout { l, odd, .. } = self.lay;
        let mut half_sp = sp.to_vec();
        half_sp.push(self.dx);
        let spacings: Vec<f64> = if odd {
            half_sp.iter().chain(half_sp.iter().rev()).copied().collect()
        } else {
            half_sp.iter().chain(half_sp.iter().rev().skip(1)).copied().collect()
        };
        let mut x = Vec::with_capacity(l);
        x.push(0.0);
        for s in &spacings {
            x.push(x.last().unwrap() + s);
        }
        let mut half_det = det.to_vec();
        let dets: Vec<f64> = if odd {
            half_det.push(0.0);
            half_det.iter().chain(half_det.iter().rev().skip(1)).copied().collect()
        } else {
            half_det.push(0.0);
            half_det.iter().chain(half_det.iter().rev()).copied().collect()
        };
        debug_assert_eq!(x.len(), l);
        debug_assert_eq!(dets.len(), l);
        (x, dets)
    }

    fn residual(&self, z: &[f64]) -> Result<Vec<f64>, InversionError> {
        let Layout { k, odd, n_det, .. } = self.lay;
        let (sp, det, scale) = self.unpack(z);
        let (x, dets) = self.chain(&sp, &det);
        let total: Vec<f64> = dets.iter().map(|d| self.delta0 + d).collect();
        let m = mapping(&x, &total, self.p.omega, self.p.c6, self.mode)?;
        let n_bonds = if odd { k } else { k - 1 };
        let mut r = Vec::with_capacity(self.lay.len());
        for b in 0..n_bonds {
            r.push((m.j[(b, b + 1)] - self.targets[b] / self.jm0 * scale) / self.jm0);
        }
        let centre = if odd { k } else { k - 1 };
        for s in 0..n_det {
            r.push((m.mu[s] - m.mu[centre]) / self.jm0);
        }
        Ok(r)
    }
}

/// Infinity norm; NaN entries give NaN rather than being skipped.
fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b.abs()) })
}

fn jacobian(prob: &Problem, z: &[f64], r0: &[f64]) -> Result<DMatrix<f64>, InversionError> {
    let n = z.len();
    let mut jac = DMatrix::zeros(r0.len(), n);
    let mut zp = z.to_vec();
    for c in 0..n {
        let h = 1e-6 * z[c].abs().max(1.0);
        zp[c] = z[c] + h;
        let rp = prob.residual(&zp)?;
        zp[c] = z[c] - h;
        let rm = prob.residual(&zp)?;
        zp[c] = z[c];
        for i in 0..r0.len() {
            jac[(i, c)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn condition(jac: &DMatrix<f64>) -> f64 {
    let Some(svd) = SVD::try_new(jac.clone(), false, false, f64::EPSILON, 1000) else {
        return f64::INFINITY;
    };
    let sv = svd.singular_values;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in sv.iter() {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn newton(
    prob: &Problem,
    z0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize, f64), InversionError> {
    let mut z = z0;
    let mut r = prob.residual(&z)?;
    let mut norm = max_abs(&r);
    let mut it = 0;
    if !norm.is_finite() {
        return Err(InversionError::NonConvergence { iterations: 0, residual: norm, last_iterate: z });
    }
    while norm > tol && it < max_iter {
        it += 1;
        let jac = jacobian(prob, &z, &r)?;
        let stuck = || InversionError::NonConvergence { iterations: it, residual: norm, last_iterate: z.clone() };
        // the SVD iteration does not terminate on non-finite input
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(stuck());
        }
        let rhs = -DVector::from_vec(r.clone());
        let step = match jac.clone().lu().solve(&rhs).filter(|s| s.iter().all(|v| v.is_finite())) {
            Some(s) => s,
            None => SVD::try_new(jac.clone(), true, true, f64::EPSILON, 1000)
                .and_then(|d| d.solve(&rhs, 1e-14).ok())
                .ok_or_else(stuck)?,
        };
        // backtrack on the residual, treating mapping singularities as rejected steps
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a + lam * s).collect();
            if let Ok(rt) = prob.residual(&trial) {
                let nt = max_abs(&rt);
                if nt.is_finite() && (nt < norm || nt <= tol) {
                    z = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm > tol {
        return Err(InversionError::NonConvergence { iterations: it, residual: norm, last_iterate: z });
    }
    let cond = if z.is_empty() { 1.0 } else { condition(&jacobian(prob, &z, &r)?) };
    Ok((z, norm, it, cond))
}

/// Seed from the uniform-detuning pair coupling `J = W^2 V / (4 d (d - V))`,
/// inverted bond by bond for `V` and then the spacing; zero site detunings.
fn initial_guess(prob: &Problem) -> Vec<f64> {
    let lay = prob.lay;
    let mut z = vec![0.0; lay.len()];
    if lay.k == 0 {
        return z;
    }
    // odd chains have no bond at J_max; rescale so the central pair sits at dx
    let stretch = prob.jm0 / prob.targets[lay.k - 1];
    let (w2, d) = (prob.p.omega * prob.p.omega, prob.delta0);
    for (b, v) in z.iter_mut().take(lay.n_sp).enumerate() {
        let j = prob.targets[b] * stretch;
        let vb = 4.0 * j * d * d / (w2 + 4.0 * j * d);
        let gap = if vb > 0.0 && vb.is_finite() { (prob.p.c6 / vb).powf(1.0 / 6.0) - prob.dx } else { 0.0 };
        *v = gap.max(1e-3 * prob.dx).ln();
    }
    if lay.odd {
        z[lay.n_sp + lay.n_det] = stretch - 1.0;
    }
    z
}

/// Seed for length `l` from a solved chain of length `l - 2`: keep the inner
/// half-chain and extrapolate one more outer site.
fn extend_guess(prev: &[f64], from: Layout, to: Layout) -> Vec<f64> {
    let ext = |v: &[f64], fallback: f64| -> Vec<f64> {
        let first = match v.len() {
            0 => fallback,
            1 => v[0] + (v[0] - fallback),
            _ => 2.0 * v[0] - v[1],
        };
        std::iter::once(first).chain(v.iter().copied()).collect()
    };
    let sp = &prev[..from.n_sp];
    let det = &prev[from.n_sp..from.n_sp + from.n_det];
    let mut z = ext(sp, (0.3f64).ln());
    z.truncate(to.n_sp);
    let mut d = ext(det, 0.0);
    d.truncate(to.n_det);
    z.extend(d);
    if to.odd {
        z.push(if from.odd { prev[from.n_sp + from.n_det] } else { 0.0 });
    }
    z
}

/// Solve for the mirror-symmetric chain realizing the linear-spectrum profile.
pub fn solve_chain(
    l: usize,
    params: &PhysicalParams,
    hw: &HardwareConstraints,
    delta0: f64,
    opts: &SolveOptions,
) -> Result<ChainSolution, InversionError> {
    targets::characteristic_length(l)?;
    let jm0 = targets::j_max(params.omega, delta0, params.c6, hw.dx_min)?;
    if !(jm0 > 0.0) {
        return Err(TargetError::BadJmax(jm0).into());
    }
    let weak = delta0.abs() / params.omega < opts.perturbative_ratio;
    if weak {
        warn!(
            "|delta0|/Omega = {:.2} below perturbative ratio {}",
            delta0.abs() / params.omega,
            opts.perturbative_ratio
        );
    }
    let make = |l: usize| Problem {
        lay: Layout::new(l),
        p: params,
        dx: hw.dx_min,
        delta0,
        jm0,
        targets: targets::coupling_targets(l, jm0).expect("validated"),
        mode: opts.mode,
    };

    let prob = make(l);
    let direct = newton(&prob, initial_guess(&prob), opts.tol, opts.max_iter);
    let (z, norm, it, cond, homotopy) = match direct {
        Ok((z, n, it, c)) => (z, n, it, c, false),
        Err(first) => {
            // continue up in steps of two from the shortest chain of the same parity
            let mut cur = 2 + l % 2;
            let mut lay = Layout::new(cur);
            let p0 = make(cur);
            let mut z = match newton(&p0, initial_guess(&p0), opts.tol, opts.max_iter) {
                Ok(s) => s.0,
                Err(_) => return Err(first),
            };
            let mut out = None;
            while cur < l {
                cur += 2;
                let next = Layout::new(cur);
                let pc = make(cur);
                match newton(&pc, extend_guess(&z, lay, next), opts.tol, opts.max_iter) {
                    Ok(s) => {
                        z = s.0.clone();
                        lay = next;
                        if cur == l {
                            out = Some(s);
                        }
                    }
                    Err(_) => return Err(first),
                }
            }
            let (z, n, it, c) = out.expect("loop reaches l");
            (z, n, it, c, true)
        }
    };

    let (sp, det, scale) = prob.unpack(&z);
    let (positions, site_detunings) = prob.chain(&sp, &det);
    let chain = ChainSolution {
        l,
        positions,
        site_detunings,
        global_detuning: delta0,
        omega: params.omega,
        j_max: scale,
        residual_norm: norm,
        diagnostics: SolveDiagnostics {
            iterations: it,
            jacobian_condition: cond,
            homotopy,
            weak_detuning: weak,
            mode: Some(opts.mode),
        },
    };
    for (b, s) in chain.spacings().iter().enumerate() {
        if *s < hw.dx_min * (1.0 - 1e-12) {
            return Err(InversionError::InfeasibleGeometry { bond: b + 1, spacing: *s });
        }
    }
    Ok(chain)
}

/// `lambda = max NNN coupling / max NN coupling`, all-pair mapping.
pub fn nnn_ratio(chain: &ChainSolution, params: &PhysicalParams) -> Result<f64, InversionError> {
    if chain.l < 3 {
        return Err(TargetError::TooShort(chain.l).into());
    }
    let m = effective_mapping(chain, params, MappingMode::LRI)?;
    let l = chain.l;
    let nn = (0..l - 1).map(|i| m.j[(i, i + 1)].abs()).fold(0.0, f64::max);
    let nnn = (0..l - 2).map(|i| m.j[(i, i + 2)].abs()).fold(0.0, f64::max);
    Ok(nnn / nn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamTable;
    use crate::units::{mhz, TWO_PI};
    use proptest::prelude::*;

    fn params(omega_mhz: f64) -> (PhysicalParams, HardwareConstraints) {
        let t = ParamTable::builtin();
        let hw = HardwareConstraints { omega_anchor: Some(mhz(omega_mhz)), ..Default::default() };
        (PhysicalParams::new(70, 300.0, &hw, &t).unwrap(), hw)
    }

    #[test]
    fn two_site_is_jmax() {
        let (p, hw) = params(1.0);
        let d0 = -mhz(30.0);
        let c = solve_chain(2, &p, &hw, d0, &SolveOptions::default()).unwrap();
        assert_eq!(c.positions, vec![0.0, 3.0]);
        assert_eq!(c.site_detunings, vec![0.0, 0.0]);
        assert_eq!(c.residual_norm, 0.0);
        let m = effective_mapping(&c, &p, MappingMode::NN).unwrap();
        let jm = targets::j_max(p.omega, d0, p.c6, 3.0).unwrap();
        assert!((m.j[(0, 1)] - jm).abs() < 1e-15 * jm.max(1.0));
        assert!((m.j[(0, 1)] - TWO_PI * 0.007_188_120_323_713_545).abs() < 1e-12);
    }

    #[test]
    fn decoupled_limit() {
        let d = [-5.0, -7.0];
        let m = mapping(&[0.0, 1e6], &d, 1.3, 1.0, MappingMode::LRI).unwrap();
        assert!(m.j[(0, 1)].abs() < 1e-30);
        for i in 0..2 {
            assert!((m.mu[i] - (-d[i] - 1.69 / (2.0 * d[i]))).abs() < 1e-14);
        }
    }

    #[test]
    fn three_site_fixture() {
        // independent evaluation of the mapping, uniform 3 um chain, n = 70,
        // Omega = 2pi x 1 MHz, delta0 = -2pi x 30 MHz (see tools/mapping_fixture.py)
        let (p, _) = params(1.0);
        let d0 = -mhz(30.0);
        let m = mapping(&[0.0, 3.0, 6.0], &[d0; 3], p.omega, p.c6, MappingMode::LRI).unwrap();
        let mu = [1.886_501_197_150_772e2, 1.886_906_075_545_156e2, 1.886_501_197_150_772e2];
        let j12 = 4.516_429_200_419_592e-2;
        let j13 = 4.676_452_565_818_891e-3;
        for i in 0..3 {
            assert!((m.mu[i] - mu[i]).abs() / mu[i] < 1e-12, "mu[{i}] = {:.15e}", m.mu[i]);
        }
        assert!((m.j[(0, 1)] - j12).abs() / j12 < 1e-12, "{:.15e}", m.j[(0, 1)]);
        assert!((m.j[(1, 2)] - j12).abs() / j12 < 1e-12);
        assert!((m.j[(0, 2)] - j13).abs() / j13 < 1e-12, "{:.15e}", m.j[(0, 2)]);
        let nn = mapping(&[0.0, 3.0, 6.0], &[d0; 3], p.omega, p.c6, MappingMode::NN).unwrap();
        assert_eq!(nn.j[(0, 2)], 0.0);
    }

    #[test]
    fn resonance_reported() {
        let v = 2.0;
        let err = mapping(&[0.0, 1.0], &[v, -1.0], 1.0, v, MappingMode::NN).unwrap_err();
        assert_eq!(err, InversionError::Resonance { a: 1, b: 2, v });
        assert!(matches!(
            mapping(&[0.0, 1.0], &[0.0, -1.0], 1.0, 1.0, MappingMode::NN),
            Err(InversionError::ZeroDetuning(1))
        ));
    }

    #[test]
    fn four_site_profile() {
        let (p, hw) = params(1.0);
        let c = solve_chain(4, &p, &hw, -mhz(30.0), &SolveOptions::default()).unwrap();
        let m = effective_mapping(&c, &p, MappingMode::NN).unwrap();
        let r = m.j[(0, 1)] / m.j[(1, 2)];
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-9, "{r}");
        assert!((m.mu[0] - m.mu[1]).abs() / c.j_max < 1e-9);
        assert!(c.diagnostics.jacobian_condition.is_finite());
    }

    #[test]
    fn ten_site_monotone() {
        let (p, hw) = params(7.0);
        let c = solve_chain(10, &p, &hw, -mhz(100.0), &SolveOptions::default()).unwrap();
        let s = c.spacings();
        for i in 0..4 {
            assert!(s[i] >= s[i + 1], "{s:?}");
        }
        let d: Vec<f64> = c.site_detunings.iter().map(|v| v.abs()).collect();
        for i in 0..4 {
            assert!(d[i] >= d[i + 1], "{d:?}");
        }
        assert_eq!(s[4], 3.0);
        assert_eq!(c.site_detunings[4], 0.0);
    }

    #[test]
    fn odd_chains() {
        let (p, hw) = params(7.0);
        for l in [3, 5, 9, 15] {
            let c = solve_chain(l, &p, &hw, -mhz(80.0), &SolveOptions::default()).unwrap();
            let m = effective_mapping(&c, &p, MappingMode::NN).unwrap();
            let tg = targets::coupling_targets(l, c.j_max).unwrap();
            for b in 0..l - 1 {
                assert!((m.j[(b, b + 1)] - tg[b]).abs() / c.j_max < 1e-9, "L={l} bond {b}");
            }
            let mu0 = m.mu[l / 2];
            assert!(m.mu.iter().all(|v| (v - mu0).abs() / c.j_max < 1e-9));
            assert_eq!(c.site_detunings[l / 2], 0.0);
        }
    }

    #[test]
    fn lri_constrained_inversion() {
        let (p, hw) = params(7.0);
        let opts = SolveOptions { mode: MappingMode::LRI, ..Default::default() };
        let c = solve_chain(8, &p, &hw, -mhz(100.0), &opts).unwrap();
        let m = effective_mapping(&c, &p, MappingMode::LRI).unwrap();
        let mu0 = m.mu[3];
        assert!(m.mu.iter().all(|v| (v - mu0).abs() / c.j_max < 1e-9));
    }

    #[test]
    fn homotopy_matches_direct() {
        let (p, _) = params(7.0);
        let prob = Problem {
            lay: Layout::new(8),
            p: &p,
            dx: 3.0,
            delta0: -mhz(60.0),
            jm0: targets::j_max(p.omega, -mhz(60.0), p.c6, 3.0).unwrap(),
            targets: targets::coupling_targets(8, targets::j_max(p.omega, -mhz(60.0), p.c6, 3.0).unwrap()).unwrap(),
            mode: MappingMode::NN,
        };
        let direct = newton(&prob, initial_guess(&prob), 1e-10, 200).unwrap().0;
        let p6 = Problem { lay: Layout::new(6), targets: targets::coupling_targets(6, prob.jm0).unwrap(), ..prob };
        let z6 = newton(&p6, initial_guess(&p6), 1e-10, 200).unwrap().0;
        let via = newton(&prob, extend_guess(&z6, p6.lay, prob.lay), 1e-10, 200).unwrap().0;
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn nnn_ratio_behaviour() {
        let (p, hw) = params(7.0);
        let c = solve_chain(8, &p, &hw, -mhz(100.0), &SolveOptions::default()).unwrap();
        let lam = nnn_ratio(&c, &p).unwrap();
        assert!(lam > 0.0 && lam < 1.0);
        // uniformly stretched chain: perturbative limit (1/2)^6
        let mut far = c.clone();
        far.positions = (0..8).map(|i| i as f64 * 30.0).collect();
        far.site_detunings = vec![0.0; 8];
        assert!((nnn_ratio(&far, &p).unwrap() - 1.0 / 64.0).abs() < 1e-3);
        // third atom pulled away: V_NNN -> 0
        let mut three = solve_chain(3, &p, &hw, -mhz(100.0), &SolveOptions::default()).unwrap();
        three.positions[2] = 1e4;
        assert!(nnn_ratio(&three, &p).unwrap() < 1e-12);
        let two = solve_chain(2, &p, &hw, -mhz(100.0), &SolveOptions::default()).unwrap();
        assert!(nnn_ratio(&two, &p).is_err());
    }

    #[test]
    fn nan_residual_is_not_converged() {
        assert!(max_abs(&[1.0, f64::NAN, 2.0]).is_nan());
        assert!(max_abs(&[f64::NAN, 2.0]).is_nan());
        assert_eq!(max_abs(&[-3.0, 2.0]), 3.0);
    }

    #[test]
    fn resonant_detuning_is_an_error() {
        let (p, hw) = params(1.0);
        let vmax = p.c6 / 3f64.powi(6);
        assert!(matches!(
            solve_chain(4, &p, &hw, vmax, &SolveOptions::default()),
            Err(InversionError::Target(TargetError::Resonance { .. }))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn solutions_are_symmetric(l in 2usize..=12, f in 6.0f64..40.0) {
            let (p, hw) = params(7.0);
            let c = solve_chain(l, &p, &hw, -f * p.omega, &SolveOptions::default()).unwrap();
            prop_assert!(c.residual_norm <= 1e-10);
            let x = &c.positions;
            for i in 0..l {
                prop_assert!(((x[i] - x[0]) - (x[l - 1] - x[l - 1 - i])).abs() < 1e-9);
                prop_assert!((c.site_detunings[i] - c.site_detunings[l - 1 - i]).abs() < 1e-9);
            }
            let s = c.spacings();
            prop_assert!(s.iter().all(|v| *v >= 3.0 - 1e-12));
            prop_assert!((s[(l - 1) / 2] - 3.0).abs() < 1e-12);
            for i in 0..(l - 1) / 2 {
                prop_assert!(s[i] >= s[i + 1] - 1e-12);
            }
        }
    }
}
