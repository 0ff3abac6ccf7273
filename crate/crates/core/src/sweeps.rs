//! Detuning, principal-quantum-number and chain-length scans.
//!
//! Every grid point re-solves the chain and evaluates the requested models;
//! points run on the rayon pool and land in pre-indexed slots, so results do
//! not depend on scheduling. Failed points are kept with `converged = false`
//! and never win an argmax.

use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisIndex, Truncation};
use crate::evolution::{fmt_f, transport_probability_at, ModelKind, PeakOptions};
use crate::inversion::{nnn_ratio, solve_chain, ChainSolution, SolveOptions};
use crate::params::{HardwareConstraints, ParamError, ParamTable, PhysicalParams};
use crate::units::to_mhz;

/// Set of global detunings, generated negative unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetuningGrid {
    /// `points` logarithmic values of `|delta0|` in `[lo, hi] * Omega`.
    OmegaRelative { lo: f64, hi: f64, points: usize },
    /// Same, in units of the nearest-neighbour blockade `C6 / dx_min^6`.
    VmaxRelative { lo: f64, hi: f64, points: usize },
    /// rad/us, used as given.
    Explicit { values: Vec<f64> },
}

impl Default for DetuningGrid {
    fn default() -> Self {
        DetuningGrid::OmegaRelative { lo: 4.0, hi: 60.0, points: 24 }
    }
}

pub fn geomspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let r = (hi / lo).ln() / (points - 1) as f64;
            (0..points).map(|i| lo * (r * i as f64).exp()).collect()
        }
    }
}

impl DetuningGrid {
    /// Concrete detunings (rad/us) for one atom, ordered by increasing `|delta0|`.
    pub fn values(&self, params: &PhysicalParams, hw: &HardwareConstraints) -> Vec<f64> {
        let mut v: Vec<f64> = match self {
            Self::OmegaRelative { lo, hi, points } => {
                geomspace(lo * params.omega, hi * params.omega, *points).into_iter().map(|d| -d).collect()
            }
            Self::VmaxRelative { lo, hi, points } => {
                let vm = params.interaction(hw.dx_min);
                geomspace(lo * vm, hi * vm, *points).into_iter().map(|d| -d).collect()
            }
            Self::Explicit { values } => values.clone(),
        };
        v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub grid: DetuningGrid,
    /// Extra points between the neighbours of the coarse optimum; 0 disables.
    pub refine_points: usize,
    pub solve: SolveOptions,
    pub peak: PeakOptions,
    /// Excitation cap for the Rydberg models; `None` keeps the model default.
    pub m_max: Option<usize>,
    /// Include the intermediate-state admixture in the decay rate.
    pub admixture: bool,
    /// Largest accepted `|p(mMax) - p(mMax + 1)|` at an optimum.
    pub truncation_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            grid: DetuningGrid::default(),
            refine_points: 6,
            solve: SolveOptions::default(),
            peak: PeakOptions::default(),
            m_max: None,
            admixture: false,
            truncation_tol: 1e-4,
        }
    }
}

impl SweepOptions {
    pub fn truncation(&self, model: ModelKind) -> Truncation {
        match (model.is_xx(), self.m_max) {
            (false, Some(m)) => Truncation::Max(m),
            _ => model.default_truncation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub model: ModelKind,
    pub n: u32,
    pub l: usize,
    /// K
    pub theta: f64,
    /// rad/us
    pub delta0: f64,
    /// With decay.
    pub p_pi: f64,
    pub p_pi_no_decay: f64,
    /// Time of the transport maximum, us.
    pub t_pi: f64,
    /// 1/us
    pub gamma: f64,
    pub p_vac: f64,
    pub p_single: f64,
    pub p_multi: f64,
    /// Transport maximum found on the edge of the time window.
    pub window_edge: bool,
    pub chain: Option<ChainSolution>,
    pub converged: bool,
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(model: ModelKind, p: &PhysicalParams, l: usize, delta0: f64, gamma: f64, err: String) -> Self {
        Self {
            model,
            n: p.n,
            l,
            theta: p.theta,
            delta0,
            p_pi: f64::NAN,
            p_pi_no_decay: f64::NAN,
            t_pi: f64::NAN,
            gamma,
            p_vac: f64::NAN,
            p_single: f64::NAN,
            p_multi: f64::NAN,
            window_edge: false,
            chain: None,
            converged: false,
            error: Some(err),
        }
    }

    /// `(p0, p1, p2+)` at `t_pi` with the decayed population sent to the vacuum.
    pub fn leak_with_decay(&self) -> (f64, f64, f64) {
        let s = (-self.gamma * self.t_pi).exp();
        (1.0 - s * (1.0 - self.p_vac), s * self.p_single, s * self.p_multi)
    }

    /// Same unitary dynamics under another decay rate.
    pub fn with_decay(&self, theta: f64, gamma: f64) -> Self {
        let mut r = self.clone();
        r.theta = theta;
        r.gamma = gamma;
        if r.converged {
            r.p_pi = r.p_pi_no_decay * (-gamma * r.t_pi).exp();
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumSummary {
    pub model: ModelKind,
    pub l: usize,
    pub theta: f64,
    pub n_star: u32,
    /// rad/us
    pub delta_star: f64,
    pub p_star: f64,
    pub p_star_no_decay: f64,
    /// us
    pub t_star: f64,
    /// Optimum on the first or last coarse grid point.
    pub edge: bool,
    pub grid_points: usize,
    pub refined_points: usize,
    pub failed_points: usize,
    /// `|p(mMax) - p(mMax + 1)|` at the optimum, when checked.
    pub truncation_delta: Option<f64>,
    /// `truncation_delta` within the configured tolerance.
    pub truncation_converged: Option<bool>,
}

/// Per-`n` extras of the quantum-number scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPoint {
    pub optimum: OptimumSummary,
    /// `t_star * Gamma`.
    pub t_over_tau: f64,
    /// Largest nearest-neighbour interaction of the optimal chain, rad/us.
    pub v_nn: f64,
    /// Largest next-nearest-neighbour interaction, rad/us.
    pub v_nnn: f64,
    pub lambda: f64,
}

fn argmax(records: &[SweepRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if !r.converged || !r.p_pi.is_finite() {
            continue;
        }
        if best.is_none_or(|b| r.p_pi > records[b].p_pi) {
            best = Some(i);
        }
    }
    best
}

fn evaluate(
    params: &PhysicalParams,
    hw: &HardwareConstraints,
    l: usize,
    delta0: f64,
    models: &[ModelKind],
    opts: &SweepOptions,
) -> Vec<SweepRecord> {
    let gamma = params.gamma(opts.admixture);
    let chain = match solve_chain(l, params, hw, delta0, &opts.solve) {
        Ok(c) => c,
        Err(e) => {
            warn!("n={} L={l} delta0={:.3} MHz: {e}", params.n, to_mhz(delta0));
            return models.iter().map(|m| SweepRecord::failed(*m, params, l, delta0, gamma, e.to_string())).collect();
        }
    };
    models
        .iter()
        .map(|&m| {
            let basis = BasisIndex::new(l, opts.truncation(m));
            match transport_probability_at(&chain, params, m, &basis, &opts.peak) {
                Ok(pk) => {
                    let pu = pk.p_pi.clamp(0.0, 1.0);
                    SweepRecord {
                        model: m,
                        n: params.n,
                        l,
                        theta: params.theta,
                        delta0,
                        p_pi: pu * (-gamma * pk.t_star).exp(),
                        p_pi_no_decay: pu,
                        t_pi: pk.t_star,
                        gamma,
                        p_vac: pk.p_vac,
                        p_single: pk.p_single,
                        p_multi: pk.p_multi,
                        window_edge: pk.at_edge,
                        chain: Some(chain.clone()),
                        converged: true,
                        error: None,
                    }
                }
                Err(e) => SweepRecord::failed(m, params, l, delta0, gamma, e.to_string()),
            }
        })
        .collect()
}

/// One model's records and optimum, sorted by `|delta0|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningScan {
    pub records: Vec<SweepRecord>,
    pub optimum: Option<OptimumSummary>,
}

fn summarize(model: ModelKind, records: &[SweepRecord], coarse: usize, edge: bool) -> Option<OptimumSummary> {
    let b = &records[argmax(records)?];
    Some(OptimumSummary {
        model,
        l: b.l,
        theta: b.theta,
        n_star: b.n,
        delta_star: b.delta0,
        p_star: b.p_pi,
        p_star_no_decay: b.p_pi_no_decay,
        t_star: b.t_pi,
        edge,
        grid_points: coarse,
        refined_points: records.len() - coarse,
        failed_points: records.iter().filter(|r| !r.converged).count(),
        truncation_delta: None,
        truncation_converged: None,
    })
}

/// Scan `delta0` for one atom and chain length; a fresh chain is solved per point.
pub fn sweep_detuning(
    params: &PhysicalParams,
    hw: &HardwareConstraints,
    l: usize,
    models: &[ModelKind],
    opts: &SweepOptions,
) -> Vec<DetuningScan> {
    let grid = opts.grid.values(params, hw);
    let coarse: Vec<Vec<SweepRecord>> = grid.par_iter().map(|&d| evaluate(params, hw, l, d, models, opts)).collect();

    models
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let mut recs: Vec<SweepRecord> = coarse.iter().map(|row| row[k].clone()).collect();
            let nc = recs.len();
            let best = argmax(&recs);
            let edge = best.is_some_and(|i| i == 0 || i + 1 == nc);
            if edge {
                warn!("{m} n={} L={l}: edge optimum, widen grid", params.n);
            }
            if let Some(i) = best.filter(|_| !edge && opts.refine_points > 0) {
                let (a, b) = (grid[i - 1], grid[i + 1]);
                let inner = geomspace(a.abs(), b.abs(), opts.refine_points + 2);
                let extra: Vec<SweepRecord> = inner[1..inner.len() - 1]
                    .par_iter()
                    .map(|d| evaluate(params, hw, l, d.copysign(a), &[m], opts).remove(0))
                    .collect();
                recs.extend(extra);
                recs.sort_by(|x, y| x.delta0.abs().total_cmp(&y.delta0.abs()));
            }
            let optimum = summarize(m, &recs, nc, edge);
            DetuningScan { records: recs, optimum }
        })
        .collect()
}

/// `|p(mMax) - p(mMax + 1)|` for a converged record, without decay.
pub fn truncation_delta(rec: &SweepRecord, params: &PhysicalParams, opts: &SweepOptions) -> Option<f64> {
    let chain = rec.chain.as_ref()?;
    let m = match opts.truncation(rec.model) {
        Truncation::Max(m) if m < rec.l => m,
        _ => return Some(0.0),
    };
    let up = BasisIndex::new(rec.l, Truncation::Max(m + 1));
    let pk = transport_probability_at(chain, params, rec.model, &up, &opts.peak).ok()?;
    Some((pk.p_pi.clamp(0.0, 1.0) - rec.p_pi_no_decay).abs())
}

/// Attach the truncation check to every optimum of `scans`.
pub fn check_truncation(scans: &mut [DetuningScan], params: &PhysicalParams, opts: &SweepOptions) {
    for s in scans.iter_mut() {
        let Some(o) = s.optimum.as_mut() else { continue };
        let rec =
            s.records.iter().find(|r| r.converged && r.delta0 == o.delta_star).expect("optimum comes from the records");
        o.truncation_delta = truncation_delta(rec, params, opts);
        o.truncation_converged = o.truncation_delta.map(|d| d <= opts.truncation_tol);
        if o.truncation_converged == Some(false) {
            warn!(
                "{} n={} L={}: truncation changes p by {:.2e}; optimum flagged non-converged",
                o.model,
                o.n_star,
                o.l,
                o.truncation_delta.unwrap()
            );
        }
    }
}

fn n_extras(o: &OptimumSummary, rec: &SweepRecord, params: &PhysicalParams) -> NPoint {
    let chain = rec.chain.as_ref().expect("converged record has a chain");
    let s = chain.spacings();
    let nn = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let nnn = s.windows(2).map(|w| w[0] + w[1]).fold(f64::INFINITY, f64::min);
    NPoint {
        optimum: o.clone(),
        t_over_tau: o.t_star * rec.gamma,
        v_nn: params.interaction(nn),
        v_nnn: if nnn.is_finite() { params.interaction(nnn) } else { 0.0 },
        lambda: nnn_ratio(chain, params).unwrap_or(0.0),
    }
}

/// All records of a quantum-number scan plus the per-`n`, per-model optima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NScan {
    pub records: Vec<SweepRecord>,
    pub points: Vec<NPoint>,
}

/// Inner detuning scan for every `n`, the grid re-evaluated per atom.
pub fn sweep_n(
    ns: &[u32],
    l: usize,
    theta: f64,
    models: &[ModelKind],
    hw: &HardwareConstraints,
    table: &ParamTable,
    opts: &SweepOptions,
) -> Result<NScan, ParamError> {
    let params: Vec<PhysicalParams> =
        ns.iter().map(|&n| PhysicalParams::new(n, theta, hw, table)).collect::<Result<_, _>>()?;
    let mut out = NScan { records: vec![], points: vec![] };
    for p in &params {
        info!("n sweep: n={} L={l}", p.n);
        for scan in sweep_detuning(p, hw, l, models, opts) {
            if let Some(o) = &scan.optimum {
                let rec = scan.records.iter().find(|r| r.converged && r.delta0 == o.delta_star).unwrap();
                out.points.push(n_extras(o, rec, p));
            }
            out.records.extend(scan.records);
        }
    }
    Ok(out)
}

/// Joint optimum over `n` and `delta0` for each chain length and temperature.
///
/// The unitary part is computed once per point at the first temperature and
/// re-weighted for the others.
pub fn sweep_length(
    ls: &[usize],
    ns: &[u32],
    thetas: &[f64],
    model: ModelKind,
    hw: &HardwareConstraints,
    table: &ParamTable,
    opts: &SweepOptions,
) -> Result<(Vec<SweepRecord>, Vec<OptimumSummary>), ParamError> {
    let Some(&theta0) = thetas.first() else { return Ok((vec![], vec![])) };
    let base: Vec<PhysicalParams> =
        ns.iter().map(|&n| PhysicalParams::new(n, theta0, hw, table)).collect::<Result<_, _>>()?;
    let mut records = vec![];
    let mut optima = vec![];
    for &l in ls {
        info!("length sweep: L={l}");
        let scans: Vec<Vec<SweepRecord>> = base
            .iter()
            .map(|p| {
                // refinement is decay-dependent, so evaluate the full grid for every temperature
                let mut o = opts.clone();
                o.refine_points = 0;
                sweep_detuning(p, hw, l, &[model], &o).remove(0).records
            })
            .collect();
        for &theta in thetas {
            let mut rows: Vec<SweepRecord> = vec![];
            let mut per_n: Vec<(usize, usize)> = vec![];
            for (p, recs) in base.iter().zip(&scans) {
                let pt = p.at_temperature(theta, table)?;
                let g = pt.gamma(opts.admixture);
                let mut rs: Vec<SweepRecord> = recs.iter().map(|r| r.with_decay(theta, g)).collect();
                let coarse = rs.len();
                let best = argmax(&rs);
                let edge = best.is_some_and(|i| i == 0 || i + 1 == coarse);
                if let Some(i) = best.filter(|_| !edge && opts.refine_points > 0) {
                    let (a, b) = (rs[i - 1].delta0, rs[i + 1].delta0);
                    let inner = geomspace(a.abs(), b.abs(), opts.refine_points + 2);
                    let extra: Vec<SweepRecord> = inner[1..inner.len() - 1]
                        .par_iter()
                        .map(|d| evaluate(&pt, hw, l, d.copysign(a), &[model], opts).remove(0))
                        .collect();
                    rs.extend(extra);
                    rs.sort_by(|x, y| x.delta0.abs().total_cmp(&y.delta0.abs()));
                }
                per_n.push((rows.len(), coarse));
                rows.extend(rs);
            }
            let mut best: Option<OptimumSummary> = None;
            for (k, &(start, coarse)) in per_n.iter().enumerate() {
                let end = per_n.get(k + 1).map_or(rows.len(), |x| x.0);
                let edge = {
                    let i = argmax(&rows[start..start + coarse]);
                    i.is_some_and(|i| i == 0 || i + 1 == coarse)
                };
                if let Some(o) = summarize(model, &rows[start..end], coarse, edge) {
                    if best.as_ref().is_none_or(|b| o.p_star > b.p_star) {
                        best = Some(o);
                    }
                }
            }
            if let Some(mut b) = best {
                b.edge |= b.n_star == ns[0] || b.n_star == ns[ns.len() - 1];
                if b.edge {
                    warn!("L={l} theta={theta}: optimum on the n or delta0 grid edge");
                }
                optima.push(b);
            }
            records.extend(rows);
        }
    }
    Ok((records, optima))
}

pub const RECORD_COLUMNS: [&str; 17] = [
    "model",
    "n",
    "L",
    "theta_K",
    "delta0_MHz",
    "p_pi",
    "p_pi_no_decay",
    "t_pi_us",
    "gamma_per_us",
    "p_vac",
    "p_single",
    "p_multi",
    "p_vac_decayed",
    "p_multi_decayed",
    "window_edge",
    "converged",
    "error",
];

pub fn write_records<W: Write>(w: W, records: &[SweepRecord]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(RECORD_COLUMNS)?;
    for r in records {
        let (d0, _, d2) = r.leak_with_decay();
        wr.write_record([
            r.model.name().to_string(),
            r.n.to_string(),
            r.l.to_string(),
            fmt_f(r.theta),
            fmt_f(to_mhz(r.delta0)),
            fmt_f(r.p_pi),
            fmt_f(r.p_pi_no_decay),
            fmt_f(r.t_pi),
            fmt_f(r.gamma),
            fmt_f(r.p_vac),
            fmt_f(r.p_single),
            fmt_f(r.p_multi),
            fmt_f(d0),
            fmt_f(d2),
            r.window_edge.to_string(),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub const OPTIMUM_COLUMNS: [&str; 14] = [
    "model",
    "L",
    "theta_K",
    "n_star",
    "delta_star_MHz",
    "p_star",
    "p_star_no_decay",
    "t_star_us",
    "edge",
    "grid_points",
    "refined_points",
    "failed_points",
    "truncation_delta",
    "truncation_converged",
];

pub fn write_optima<W: Write>(w: W, optima: &[OptimumSummary]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(OPTIMUM_COLUMNS)?;
    for o in optima {
        wr.write_record([
            o.model.name().to_string(),
            o.l.to_string(),
            fmt_f(o.theta),
            o.n_star.to_string(),
            fmt_f(to_mhz(o.delta_star)),
            fmt_f(o.p_star),
            fmt_f(o.p_star_no_decay),
            fmt_f(o.t_star),
            o.edge.to_string(),
            o.grid_points.to_string(),
            o.refined_points.to_string(),
            o.failed_points.to_string(),
            o.truncation_delta.map(fmt_f).unwrap_or_default(),
            o.truncation_converged.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
