//! Generators and time evolution for the four model rungs.
//!
//! The XX models act with the second-order couplings of [`crate::inversion`];
//! the Rydberg models use the bare driven Hamiltonian
//! `H = sum_l (W/2 sigma_x^l - D_l n_l) + sum_{l<l'} V_ll' n_l n_l'`
//! on an excitation-truncated basis. Dynamics use an exact eigendecomposition,
//! split into mirror-even and mirror-odd blocks when the generator allows it,
//! with a Lanczos propagator for spaces too large to diagonalize.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{BasisIndex, Truncation};
use crate::inversion::{self, ChainSolution, InversionError, MappingMode};
use crate::params::PhysicalParams;

/// Dimensions above this go to the Lanczos propagator when no spectrum is needed.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "XX_NN")]
    XxNn,
    #[serde(rename = "XX_LRI")]
    XxLri,
    #[serde(rename = "RYD_NN")]
    RydNn,
    #[serde(rename = "RYD_LRI")]
    RydLri,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::XxNn, Self::XxLri, Self::RydNn, Self::RydLri];

    pub fn is_xx(self) -> bool {
        matches!(self, Self::XxNn | Self::XxLri)
    }

    pub fn mode(self) -> MappingMode {
        match self {
            Self::XxNn | Self::RydNn => MappingMode::NN,
            Self::XxLri | Self::RydLri => MappingMode::LRI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::XxNn => "XX_NN",
            Self::XxLri => "XX_LRI",
            Self::RydNn => "RYD_NN",
            Self::RydLri => "RYD_LRI",
        }
    }

    /// Default truncation: single-excitation sector for XX, three excitations for Rydberg.
    pub fn default_truncation(self) -> Truncation {
        if self.is_xx() {
            Truncation::Max(1)
        } else {
            Truncation::Max(3)
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model {s:?} (expected XX_NN, XX_LRI, RYD_NN or RYD_LRI)"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("basis is for L={basis} but chain has L={chain}")]
    Dimension { basis: usize, chain: usize },
    #[error("state dimension {state} does not match generator dimension {generator}")]
    StateDimension { state: usize, generator: usize },
    #[error("generator has non-finite entries")]
    NonFinite,
    #[error(transparent)]
    Mapping(#[from] InversionError),
    #[error("empty or inverted time window [{0}, {1}]")]
    EmptyWindow(f64, f64),
    #[error("times must be finite, non-negative and sorted")]
    BadTimes,
    #[error("initial state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("chain of length {0} is too large for the full-space oracle (max 12)")]
    TooLarge(usize),
    #[error("eigendecomposition needed but dimension {0} exceeds the dense limit")]
    TooLargeForSpectrum(usize),
}

/// Real symmetric generator in rad/us, stored as diagonal plus upper-triangle entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub diag: Vec<f64>,
    /// `(i, j, value)` with `i < j`.
    pub upper: Vec<(usize, usize, f64)>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for &(i, j, v) in &self.upper {
            h[(i, j)] += v;
            h[(j, i)] += v;
        }
        h
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::from_iterator(x.len(), self.diag.iter().zip(x.iter()).map(|(d, v)| v * d));
        for &(i, j, v) in &self.upper {
            y[i] += x[j] * v;
            y[j] += x[i] * v;
        }
        y
    }

    fn check_finite(&self) -> Result<(), EvolutionError> {
        if self.diag.iter().all(|v| v.is_finite()) && self.upper.iter().all(|e| e.2.is_finite()) {
            Ok(())
        } else {
            Err(EvolutionError::NonFinite)
        }
    }
}

pub fn build_generator(
    chain: &ChainSolution,
    params: &PhysicalParams,
    model: ModelKind,
    basis: &BasisIndex,
) -> Result<Generator, EvolutionError> {
    if basis.l != chain.l {
        return Err(EvolutionError::Dimension { basis: basis.l, chain: chain.l });
    }
    let l = chain.l;
    let nn = model.mode() == MappingMode::NN;
    let n = basis.dim();
    let mut diag = vec![0.0; n];
    let mut upper = Vec::new();
    if model.is_xx() {
        let m = inversion::effective_mapping(chain, params, model.mode())?;
        for (i, d) in diag.iter_mut().enumerate() {
            let s = basis.state(i);
            *d = (0..l).filter(|a| s >> a & 1 == 1).map(|a| m.mu[a]).sum();
            // hop an excitation from a to an empty b
            for a in 0..l {
                if s >> a & 1 == 0 {
                    continue;
                }
                for b in 0..l {
                    if s >> b & 1 == 1 || m.j[(a, b)] == 0.0 {
                        continue;
                    }
                    let t = s ^ (1 << a) ^ (1 << b);
                    let j = basis.index_of(t).expect("hopping conserves excitation number");
                    if i < j {
                        upper.push((i, j, m.j[(a, b)]));
                    }
                }
            }
        }
    } else {
        let x = &chain.positions;
        let det = chain.total_detunings();
        let mut v = DMatrix::zeros(l, l);
        for a in 0..l {
            for b in (a + 1)..l {
                if !nn || b == a + 1 {
                    v[(a, b)] = params.interaction(x[b] - x[a]);
                }
            }
        }
        let half = chain.omega / 2.0;
        for (i, d) in diag.iter_mut().enumerate() {
            let s = basis.state(i);
            let mut e = 0.0;
            for a in 0..l {
                if s >> a & 1 == 1 {
                    e -= det[a];
                    for b in (a + 1)..l {
                        if s >> b & 1 == 1 {
                            e += v[(a, b)];
                        }
                    }
                }
                let t = s ^ (1 << a);
                if let Some(j) = basis.index_of(t) {
                    if i < j {
                        upper.push((i, j, half));
                    }
                }
            }
            *d = e;
        }
    }
    let g = Generator { diag, upper };
    g.check_finite()?;
    Ok(g)
}

/// Amplitude vector on a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: DVector<C64>,
}

impl QuantumState {
    /// Single excitation on `site` (1-based).
    pub fn site(basis: &BasisIndex, site: usize) -> Self {
        let mut a = DVector::zeros(basis.dim());
        a[basis.single(site)] = C64::new(1.0, 0.0);
        Self { amplitudes: a }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// One coordinate of a symmetry block: up to two basis states with coefficients.
#[derive(Debug, Clone, Copy)]
struct Member {
    a: (usize, f64),
    b: Option<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Block {
    members: Vec<Member>,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl Block {
    fn project(&self, psi: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            self.members.len(),
            self.members.iter().map(|m| {
                let mut v = psi[m.a.0] * m.a.1;
                if let Some((j, c)) = m.b {
                    v += psi[j] * c;
                }
                v
            }),
        )
    }

    fn scatter(&self, local: &DVector<C64>, out: &mut DVector<C64>) {
        for (m, v) in self.members.iter().zip(local.iter()) {
            out[m.a.0] += v * m.a.1;
            if let Some((j, c)) = m.b {
                out[j] += v * c;
            }
        }
    }
}

/// Exact spectral propagator.
#[derive(Debug, Clone)]
pub struct Spectral {
    dim: usize,
    blocks: Vec<Block>,
    /// For every basis state, its (block, coordinate, coefficient) entries.
    place: Vec<Vec<(usize, usize, f64)>>,
}

fn mirror_symmetric(g: &Generator, perm: &[usize]) -> bool {
    let scale =
        g.diag.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(g.upper.iter().fold(0.0f64, |a, e| a.max(e.2.abs())));
    let tol = 1e-11 * scale.max(1e-300);
    for (i, d) in g.diag.iter().enumerate() {
        if (g.diag[perm[i]] - d).abs() > tol {
            return false;
        }
    }
    let mut entries: std::collections::HashMap<(usize, usize), f64> =
        std::collections::HashMap::with_capacity(g.upper.len());
    for &(i, j, v) in &g.upper {
        *entries.entry((i, j)).or_insert(0.0) += v;
    }
    for (&(i, j), v) in &entries {
        let (p, q) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
        match entries.get(&(p, q)) {
            Some(w) if (w - v).abs() <= tol => {}
            _ => return false,
        }
    }
    true
}

impl Spectral {
    /// Diagonalize `g`. With a mirror permutation under which `g` is
    /// invariant, the even and odd blocks are diagonalized separately.
    pub fn new(g: &Generator, mirror: Option<&[usize]>) -> Result<Self, EvolutionError> {
        g.check_finite()?;
        let n = g.dim();
        if n > DENSE_LIMIT {
            return Err(EvolutionError::TooLargeForSpectrum(n));
        }
        let symmetric = mirror.filter(|p| p.len() == n && mirror_symmetric(g, p));
        let layouts: Vec<Vec<Member>> = match symmetric {
            Some(p) => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let (mut even, mut odd) = (Vec::new(), Vec::new());
                for i in 0..n {
                    let j = p[i];
                    if j == i {
                        even.push(Member { a: (i, 1.0), b: None });
                    } else if i < j {
                        even.push(Member { a: (i, r), b: Some((j, r)) });
                        odd.push(Member { a: (i, r), b: Some((j, -r)) });
                    }
                }
                vec![even, odd]
            }
            None => vec![(0..n).map(|i| Member { a: (i, 1.0), b: None }).collect()],
        };
        let h = g.to_dense();
        let mut blocks = Vec::new();
        let mut place = vec![Vec::new(); n];
        for members in layouts {
            if members.is_empty() {
                continue;
            }
            let d = members.len();
            let mut hb = DMatrix::zeros(d, d);
            for (x, mx) in members.iter().enumerate() {
                for (y, my) in members.iter().enumerate().skip(x) {
                    let mut v = 0.0;
                    for (p, cp) in std::iter::once(mx.a).chain(mx.b) {
                        for (q, cq) in std::iter::once(my.a).chain(my.b) {
                            v += cp * cq * h[(p, q)];
                        }
                    }
                    hb[(x, y)] = v;
                    hb[(y, x)] = v;
                }
            }
            let eig = SymmetricEigen::new(hb);
            let bi = blocks.len();
            for (x, m) in members.iter().enumerate() {
                place[m.a.0].push((bi, x, m.a.1));
                if let Some((j, c)) = m.b {
                    place[j].push((bi, x, c));
                }
            }
            blocks.push(Block { members, energies: eig.eigenvalues, vectors: eig.eigenvectors });
        }
        Ok(Self { dim: n, blocks, place })
    }

    pub fn from_basis(g: &Generator, basis: &BasisIndex) -> Result<Self, EvolutionError> {
        Self::new(g, Some(&basis.mirror()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_split(&self) -> bool {
        self.blocks.len() > 1
    }

    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.blocks.iter().flat_map(|b| b.energies.iter().copied()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn propagate(&self, psi0: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        for b in &self.blocks {
            let mut c = b.vectors.transpose().map(|v| C64::new(v, 0.0)) * b.project(psi0);
            for (ck, e) in c.iter_mut().zip(b.energies.iter()) {
                *ck *= C64::from_polar(1.0, -e * t);
            }
            let local = b.vectors.map(|v| C64::new(v, 0.0)) * c;
            b.scatter(&local, &mut out);
        }
        out
    }

    /// Propagate to every time, reusing the eigenbasis projection of `psi0`.
    pub fn series(&self, psi0: &DVector<C64>, times: &[f64]) -> Vec<DVector<C64>> {
        let pre: Vec<(DMatrix<C64>, DVector<C64>)> = self
            .blocks
            .iter()
            .map(|b| {
                let v = b.vectors.map(|x| C64::new(x, 0.0));
                let c = v.transpose() * b.project(psi0);
                (v, c)
            })
            .collect();
        times
            .iter()
            .map(|&t| {
                let mut out = DVector::zeros(self.dim);
                for (b, (v, c0)) in self.blocks.iter().zip(&pre) {
                    let c = DVector::from_iterator(
                        c0.len(),
                        c0.iter().zip(b.energies.iter()).map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
                    );
                    b.scatter(&(v * c), &mut out);
                }
                out
            })
            .collect()
    }

    /// Spectral decomposition of `<to| exp(-iHt) |from>`.
    ///
    /// With `band = Some((excitations, m))` only eigenstates whose mean
    /// excitation number lies within 1/2 of `m` are kept.
    pub fn transition(&self, from: usize, to: usize, band: Option<(&[usize], usize)>) -> Transition {
        let mut energies = Vec::new();
        let mut weights = Vec::new();
        for &(bf, xf, cf) in &self.place[from] {
            for &(bt, xt, ct) in &self.place[to] {
                if bf != bt {
                    continue;
                }
                let b = &self.blocks[bf];
                for k in 0..b.energies.len() {
                    if let Some((exc, m)) = band {
                        let mean: f64 = b
                            .members
                            .iter()
                            .enumerate()
                            .map(|(x, mem)| b.vectors[(x, k)].powi(2) * exc[mem.a.0] as f64)
                            .sum();
                        if (mean - m as f64).abs() >= 0.5 {
                            continue;
                        }
                    }
                    energies.push(b.energies[k]);
                    weights.push(ct * cf * b.vectors[(xt, k)] * b.vectors[(xf, k)]);
                }
            }
        }
        Transition { energies, weights }
    }
}

/// `A(t) = sum_k w_k exp(-i E_k t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Transition {
    pub fn amplitude(&self, t: f64) -> C64 {
        self.energies.iter().zip(&self.weights).map(|(e, w)| C64::from_polar(*w, -e * t)).sum()
    }

    pub fn probability(&self, t: f64) -> f64 {
        self.amplitude(t).norm_sqr()
    }
}

/// Lanczos propagator for generators too large to diagonalize.
#[derive(Debug, Clone)]
pub struct Lanczos<'a> {
    g: &'a Generator,
    pub krylov_dim: usize,
    pub tol: f64,
    /// Last accepted step, reused by the next call.
    step_hint: std::cell::Cell<f64>,
}

impl<'a> Lanczos<'a> {
    pub fn new(g: &'a Generator) -> Self {
        // row-sum bound on ||H||; a Krylov space of dimension m resolves phases up to ~m
        let mut rows = g.diag.iter().map(|d| d.abs()).collect::<Vec<_>>();
        for &(i, j, v) in &g.upper {
            rows[i] += v.abs();
            rows[j] += v.abs();
        }
        let norm = rows.iter().cloned().fold(0.0, f64::max);
        let hint = if norm > 0.0 { 10.0 / norm } else { f64::INFINITY };
        Self { g, krylov_dim: 30, tol: 1e-12, step_hint: std::cell::Cell::new(hint) }
    }

    fn step(&self, v: &DVector<C64>, dt: f64) -> (DVector<C64>, f64) {
        let n = v.len();
        let m = self.krylov_dim.min(n);
        let beta0 = v.norm();
        let mut q: Vec<DVector<C64>> = vec![v / C64::new(beta0, 0.0)];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut tail = 0.0;
        for j in 0..m {
            let mut w = self.g.apply(&q[j]);
            let a = q[j].dotc(&w).re;
            alpha.push(a);
            // full reorthogonalization
            for qi in &q {
                let c = qi.dotc(&w);
                w -= qi * c;
            }
            let b = w.norm();
            if j + 1 == m || b < 1e-14 * beta0.max(1.0) {
                tail = b;
                break;
            }
            beta.push(b);
            q.push(w / C64::new(b, 0.0));
        }
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let coeff: DVector<C64> = DVector::from_iterator(
            k,
            (0..k).map(|r| {
                (0..k)
                    .map(|s| {
                        C64::from_polar(eig.eigenvectors[(r, s)] * eig.eigenvectors[(0, s)], -eig.eigenvalues[s] * dt)
                    })
                    .sum::<C64>()
            }),
        );
        let err = tail * coeff[k - 1].norm() * beta0;
        let mut out = DVector::zeros(n);
        for (qi, c) in q.iter().zip(coeff.iter()) {
            out += qi * (c * beta0);
        }
        (out, err)
    }

    pub fn propagate(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut v = psi.clone();
        let mut done = 0.0;
        let mut dt = self.step_hint.get();
        while done < t {
            let h = dt.min(t - done);
            let (next, err) = self.step(&v, h);
            if err > self.tol && h > 1e-12 * t.max(1.0) {
                dt = h / 2.0;
                continue;
            }
            v = next;
            done += h;
            if h == dt {
                self.step_hint.set(dt);
                dt *= 1.25;
            }
        }
        v
    }

    pub fn series(&self, psi0: &DVector<C64>, times: &[f64]) -> Vec<DVector<C64>> {
        let mut out = Vec::with_capacity(times.len());
        let mut v = psi0.clone();
        let mut now = 0.0;
        for &t in times {
            v = self.propagate(&v, t - now);
            now = t;
            out.push(v.clone());
        }
        out
    }
}

/// Time series of transport and leakage populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub model: ModelKind,
    pub times: Vec<f64>,
    pub p_transport: Vec<f64>,
    pub p_return: Vec<f64>,
    pub p_vac: Vec<f64>,
    pub p_single: Vec<f64>,
    pub p_multi: Vec<f64>,
    pub norm: Vec<f64>,
}

impl EvolutionResult {
    pub(crate) fn from_states(model: ModelKind, basis: &BasisIndex, times: &[f64], states: &[DVector<C64>]) -> Self {
        let l = basis.l;
        let mut r = Self {
            model,
            times: times.to_vec(),
            p_transport: Vec::with_capacity(times.len()),
            p_return: Vec::with_capacity(times.len()),
            p_vac: Vec::with_capacity(times.len()),
            p_single: Vec::with_capacity(times.len()),
            p_multi: Vec::with_capacity(times.len()),
            norm: Vec::with_capacity(times.len()),
        };
        for psi in states {
            let (vac, single, multi) = populations(basis, psi);
            r.p_transport.push(psi[basis.single(l)].norm_sqr());
            r.p_return.push(psi[basis.single(1)].norm_sqr());
            r.p_vac.push(vac);
            r.p_single.push(single);
            r.p_multi.push(multi);
            r.norm.push((vac + single + multi).sqrt());
        }
        r
    }

    /// CSV with columns `t_us,p_transport,p_return,p_vac,p_single,p_multi`,
    /// plus `p_transport_decayed` when a decay rate is given.
    pub fn write_csv<W: std::io::Write>(&self, w: W, gamma: Option<f64>) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head = vec!["t_us", "p_transport", "p_return", "p_vac", "p_single", "p_multi"];
        if gamma.is_some() {
            head.push("p_transport_decayed");
        }
        wr.write_record(&head)?;
        for i in 0..self.times.len() {
            let mut row = vec![
                fmt_f(self.times[i]),
                fmt_f(self.p_transport[i]),
                fmt_f(self.p_return[i]),
                fmt_f(self.p_vac[i]),
                fmt_f(self.p_single[i]),
                fmt_f(self.p_multi[i]),
            ];
            if let Some(g) = gamma {
                row.push(fmt_f(apply_decay(self.p_transport[i], g, self.times[i])));
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_f(v: f64) -> String {
    // adding zero drops the sign of -0.0
    format!("{:.12e}", v + 0.0)
}

/// `(p_vac, p_single, p_multi)` of a state.
pub fn populations(basis: &BasisIndex, psi: &DVector<C64>) -> (f64, f64, f64) {
    let vac = psi[0].norm_sqr();
    let single: f64 = (1..=basis.l).map(|i| psi[i].norm_sqr()).sum();
    let multi: f64 = psi.iter().skip(basis.l + 1).map(|c| c.norm_sqr()).sum();
    (vac, single, multi)
}

fn check_times(times: &[f64]) -> Result<(), EvolutionError> {
    let ok = times.iter().all(|t| t.is_finite() && *t >= 0.0) && times.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(EvolutionError::BadTimes)
    }
}

/// `psi(t) = exp(-iHt) psi0` sampled at `times`.
pub fn evolve(
    g: &Generator,
    basis: &BasisIndex,
    psi0: &QuantumState,
    times: &[f64],
    model: ModelKind,
) -> Result<EvolutionResult, EvolutionError> {
    g.check_finite()?;
    check_times(times)?;
    if psi0.amplitudes.len() != g.dim() {
        return Err(EvolutionError::StateDimension { state: psi0.amplitudes.len(), generator: g.dim() });
    }
    let nrm = psi0.norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(EvolutionError::NotNormalized(nrm));
    }
    let states = if g.dim() <= DENSE_LIMIT {
        Spectral::from_basis(g, basis)?.series(&psi0.amplitudes, times)
    } else {
        Lanczos::new(g).series(&psi0.amplitudes, times)
    };
    Ok(EvolutionResult::from_states(model, basis, times, &states))
}

/// Which quantity the transport peak search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// `|<L|psi(t)>|^2` in the bare basis.
    Bare,
    /// Same amplitude restricted to the one-excitation band of eigenstates,
    /// i.e. without the fast terms set by the off-resonant dressing.
    #[default]
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOptions {
    /// Relative half-width of the search window around the analytic `t_pi`.
    pub window: f64,
    pub points: usize,
    pub observable: Observable,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { window: 0.1, points: 1201, observable: Observable::Band }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportPeak {
    pub p_pi: f64,
    /// us
    pub t_star: f64,
    pub p_vac: f64,
    pub p_single: f64,
    pub p_multi: f64,
    /// The maximum sits on the window boundary.
    pub at_edge: bool,
}

/// Maximize the transport probability over `window` (us) on a uniform grid
/// followed by a parabolic refinement of the best interior point.
pub fn transport_peak(
    spec: &Spectral,
    basis: &BasisIndex,
    window: (f64, f64),
    points: usize,
    observable: Observable,
) -> Result<TransportPeak, EvolutionError> {
    let (t0, t1) = window;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() || t0 < 0.0 {
        return Err(EvolutionError::EmptyWindow(t0, t1));
    }
    let points = points.max(3);
    let exc: Vec<usize> = (0..basis.dim()).map(|i| basis.excitations(i)).collect();
    let band = match observable {
        Observable::Bare => None,
        Observable::Band => Some((exc.as_slice(), 1)),
    };
    let tr = spec.transition(basis.single(1), basis.single(basis.l), band);
    let dt = (t1 - t0) / (points - 1) as f64;
    let p: Vec<f64> = (0..points).map(|i| tr.probability(t0 + i as f64 * dt)).collect();
    let (mut j, mut best) = (0, f64::MIN);
    for (i, v) in p.iter().enumerate() {
        if *v > best {
            best = *v;
            j = i;
        }
    }
    let mut t_star = t0 + j as f64 * dt;
    let at_edge = j == 0 || j == points - 1;
    if !at_edge {
        let (a, b, c) = (p[j - 1], p[j], p[j + 1]);
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            let t = t_star + 0.5 * dt * (a - c) / den;
            let pv = tr.probability(t);
            if pv > best {
                best = pv;
                t_star = t;
            }
        }
    }
    let mut psi0 = DVector::zeros(basis.dim());
    psi0[basis.single(1)] = C64::new(1.0, 0.0);
    let psi = spec.propagate(&psi0, t_star);
    let (p_vac, p_single, p_multi) = populations(basis, &psi);
    Ok(TransportPeak { p_pi: best, t_star, p_vac, p_single, p_multi, at_edge })
}

/// Build the model on `basis` and locate the transport peak near the chain's analytic `t_pi`.
pub fn transport_probability_at(
    chain: &ChainSolution,
    params: &PhysicalParams,
    model: ModelKind,
    basis: &BasisIndex,
    opts: &PeakOptions,
) -> Result<TransportPeak, EvolutionError> {
    let g = build_generator(chain, params, model, basis)?;
    let spec = Spectral::from_basis(&g, basis)?;
    let t = chain.t_pi();
    transport_peak(&spec, basis, ((1.0 - opts.window) * t, (1.0 + opts.window) * t), opts.points, opts.observable)
}

/// `p exp(-gamma t)`.
pub fn apply_decay(p: f64, gamma: f64, t: f64) -> f64 {
    debug_assert!(gamma >= 0.0 && t >= 0.0);
    p * (-gamma * t).exp()
}
