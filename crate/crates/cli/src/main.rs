use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use rydchain::analysis::{fit_and_extrapolate, write_concurrence, AnalysisError, ChannelAnalysis};
use rydchain::basis::BasisIndex;
use rydchain::evolution::{build_generator, evolve, EvolutionError, ModelKind, QuantumState};
use rydchain::inversion::{nnn_ratio, solve_chain, ChainSolution, InversionError, SolveDiagnostics};
use rydchain::params::{ParamError, PhysicalParams};
use rydchain::sweeps::{self, check_truncation, write_optima, write_records, OptimumSummary};
use rydchain::units::{mhz, to_mhz};

mod config;

use config::{ConfigError, RunConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{0}")]
    NoOptimum(String),
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Config(e.into())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Inversion(InversionError::NonConvergence { .. }) | CliError::NoOptimum(_) => 3,
            CliError::Inversion(_) | CliError::Evolution(_) => 4,
            CliError::Analysis(_) => 5,
            CliError::Io { .. } => 6,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io { path: path.display().to_string(), msg: e.to_string() }
}

/// Exit codes: 0 ok, 2 config or usage, 3 non-convergence, 4 infeasible physics,
/// 5 analysis input, 6 file I/O.
#[derive(Parser)]
#[command(name = "rydchain", version, about = "Perfect state transfer in Rydberg atom chains")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (overrides the config; 0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Serialize)]
struct Point {
    /// Principal quantum number (default from config).
    #[arg(long)]
    n: Option<u32>,
    /// Chain length (default from config).
    #[arg(long = "length", short = 'L')]
    l: Option<usize>,
    /// Temperature in K (default from config).
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the inverse problem for one chain and write the solution file.
    Solve {
        #[command(flatten)]
        point: Point,
        /// Global detuning in MHz (sign kept).
        #[arg(long, allow_hyphen_values = true)]
        delta0_mhz: f64,
        /// Output file (default <out-dir>/solution_n<n>_L<L>.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time series for a solved chain.
    Evolve {
        /// Solution file written by `solve`.
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value = "RYD_LRI")]
        model: ModelKind,
        /// End of the time grid in us (default 3 t_pi).
        #[arg(long)]
        t_max_us: Option<f64>,
        #[arg(long, default_value_t = 601)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the global detuning at fixed n and L.
    SweepDetuning {
        #[command(flatten)]
        point: Point,
    },
    /// Scan n with an inner detuning scan.
    SweepN {
        #[command(flatten)]
        point: Point,
    },
    /// Joint n and detuning optimum per chain length and temperature.
    SweepLength,
    /// Exponential fit and critical length from an optima CSV.
    Analyze {
        /// Optima CSV written by `sweep-length` or `fig5`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Detuning study at the configured L and n (defaults 16, 70).
    Fig3,
    /// Quantum-number study at the configured L over the configured n range.
    Fig4,
    /// Chain-length study at the configured temperatures, followed by `analyze`.
    Fig5,
}

struct Ctx {
    cfg: RunConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| io_err(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }

    fn header(&self, cmd: &str, args: &serde_json::Value) -> String {
        format!("# rydchain {VERSION}\n# command: {cmd}\n# config_sha256: {}\n", self.cfg.hash(args))
    }

    fn meta(&self, cmd: &str, args: &serde_json::Value) -> Meta {
        Meta { software: format!("rydchain {VERSION}"), command: cmd.into(), config_sha256: self.cfg.hash(args) }
    }

    fn point(&self, p: &Point) -> (u32, usize, f64) {
        let s = &self.cfg.sweep;
        (p.n.unwrap_or(s.n), p.l.unwrap_or(s.l), p.theta.unwrap_or(s.theta_k))
    }

    fn params(&self, n: u32, theta: f64) -> Result<PhysicalParams, CliError> {
        Ok(PhysicalParams::new(n, theta, &self.cfg.hardware()?, &self.cfg.table()?)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    software: String,
    command: String,
    config_sha256: String,
}

/// Chain solution in I/O units.
#[derive(Serialize, Deserialize)]
struct SolutionFile {
    meta: Meta,
    n: u32,
    theta_k: f64,
    l: usize,
    positions_um: Vec<f64>,
    spacings_um: Vec<f64>,
    site_detunings_mhz: Vec<f64>,
    global_detuning_mhz: f64,
    omega_mhz: f64,
    j_max_mhz: f64,
    t_pi_us: f64,
    residual_norm: f64,
    nnn_ratio: Option<f64>,
    diagnostics: SolveDiagnostics,
}

impl SolutionFile {
    fn chain(&self) -> ChainSolution {
        ChainSolution {
            l: self.l,
            positions: self.positions_um.clone(),
            site_detunings: self.site_detunings_mhz.iter().map(|v| mhz(*v)).collect(),
            global_detuning: mhz(self.global_detuning_mhz),
            omega: mhz(self.omega_mhz),
            j_max: mhz(self.j_max_mhz),
            residual_norm: self.residual_norm,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn write_csv_file(
    path: &Path,
    header: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    body(&mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn cmd_solve(ctx: &Ctx, point: &Point, delta0_mhz: f64, out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let (n, l, theta) = ctx.point(point);
    let p = ctx.params(n, theta)?;
    let hw = ctx.cfg.hardware()?;
    let c = solve_chain(l, &p, &hw, mhz(delta0_mhz), &ctx.cfg.solve_options())?;
    let args = serde_json::json!({ "n": n, "l": l, "theta": theta, "delta0_mhz": delta0_mhz });
    let file = SolutionFile {
        meta: ctx.meta("solve", &args),
        n,
        theta_k: theta,
        l,
        spacings_um: c.spacings(),
        positions_um: c.positions.clone(),
        site_detunings_mhz: c.site_detunings.iter().map(|v| to_mhz(*v)).collect(),
        global_detuning_mhz: to_mhz(c.global_detuning),
        omega_mhz: to_mhz(c.omega),
        j_max_mhz: to_mhz(c.j_max),
        t_pi_us: c.t_pi(),
        residual_norm: c.residual_norm,
        nnn_ratio: nnn_ratio(&c, &p).ok(),
        diagnostics: c.diagnostics.clone(),
    };
    let path = match out {
        Some(p) => p,
        None => ctx.path(&format!("solution_n{n}_L{l}.json"))?,
    };
    write_json(&path, &file)?;
    Ok(path)
}

fn cmd_evolve(
    ctx: &Ctx,
    solution: &Path,
    model: ModelKind,
    t_max: Option<f64>,
    points: usize,
    out: Option<PathBuf>,
) -> Result<PathBuf, CliError> {
    if points < 1 {
        return Err(CliError::Usage("time grid needs at least one point".into()));
    }
    let text = std::fs::read_to_string(solution).map_err(|e| io_err(solution, e))?;
    let sol: SolutionFile = serde_json::from_str(&text).map_err(|e| io_err(solution, e))?;
    let chain = sol.chain();
    let p = ctx.params(sol.n, sol.theta_k)?;
    let t_max = t_max.unwrap_or(3.0 * chain.t_pi());
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(CliError::Usage(format!("t_max_us must be positive, got {t_max}")));
    }
    let times: Vec<f64> =
        if points == 1 { vec![t_max] } else { (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect() };
    let trunc = if model.is_xx() {
        model.default_truncation()
    } else {
        rydchain::basis::Truncation::Max(ctx.cfg.evolution.m_max)
    };
    let basis = BasisIndex::new(chain.l, trunc);
    let g = build_generator(&chain, &p, model, &basis)?;
    let r = evolve(&g, &basis, &QuantumState::site(&basis, 1), &times, model)?;
    let args = serde_json::json!({
        "solution": sol.meta.config_sha256, "n": sol.n, "l": sol.l, "model": model, "t_max": t_max, "points": points
    });
    let path = match out {
        Some(p) => p,
        None => ctx.path(&format!("evolve_{}_n{}_L{}.csv", model.name(), sol.n, sol.l))?,
    };
    let gamma = p.gamma(ctx.cfg.evolution.admixture);
    write_csv_file(&path, &ctx.header("evolve", &args), |w| r.write_csv(w, Some(gamma)))?;
    Ok(path)
}

#[derive(Serialize)]
struct DetuningSummary {
    meta: Meta,
    n: u32,
    l: usize,
    theta_k: f64,
    optima: Vec<OptimumOut>,
}

/// Optimum in I/O units.
#[derive(Serialize)]
struct OptimumOut {
    model: ModelKind,
    l: usize,
    theta_k: f64,
    n_star: u32,
    delta_star_mhz: f64,
    p_star: f64,
    p_star_no_decay: f64,
    t_star_us: f64,
    edge_optimum: bool,
    grid_points: usize,
    refined_points: usize,
    failed_points: usize,
    truncation_delta: Option<f64>,
    truncation_converged: Option<bool>,
}

impl From<&OptimumSummary> for OptimumOut {
    fn from(o: &OptimumSummary) -> Self {
        Self {
            model: o.model,
            l: o.l,
            theta_k: o.theta,
            n_star: o.n_star,
            delta_star_mhz: to_mhz(o.delta_star),
            p_star: o.p_star,
            p_star_no_decay: o.p_star_no_decay,
            t_star_us: o.t_star,
            edge_optimum: o.edge,
            grid_points: o.grid_points,
            refined_points: o.refined_points,
            failed_points: o.failed_points,
            truncation_delta: o.truncation_delta,
            truncation_converged: o.truncation_converged,
        }
    }
}

fn cmd_sweep_detuning(ctx: &Ctx, cmd: &str, point: &Point) -> Result<Vec<PathBuf>, CliError> {
    let (n, l, theta) = ctx.point(point);
    let p = ctx.params(n, theta)?;
    let hw = ctx.cfg.hardware()?;
    let opts = ctx.cfg.sweep_options();
    let mut scans = sweeps::sweep_detuning(&p, &hw, l, &ctx.cfg.sweep.models, &opts);
    check_truncation(&mut scans, &p, &opts);
    let args = serde_json::json!({ "n": n, "l": l, "theta": theta });
    let records: Vec<_> = scans.iter().flat_map(|s| s.records.iter().cloned()).collect();
    let optima: Vec<OptimumSummary> = scans.iter().filter_map(|s| s.optimum.clone()).collect();
    if optima.is_empty() {
        return Err(CliError::NoOptimum(format!("no converged point for n={n} L={l}")));
    }
    let csv = ctx.path(&format!("{cmd}.csv"))?;
    write_csv_file(&csv, &ctx.header(cmd, &args), |w| write_records(w, &records))?;
    let json = ctx.path(&format!("{cmd}_summary.json"))?;
    let summary = DetuningSummary {
        meta: ctx.meta(cmd, &args),
        n,
        l,
        theta_k: theta,
        optima: optima.iter().map(OptimumOut::from).collect(),
    };
    write_json(&json, &summary)?;
    Ok(vec![csv, json])
}

#[derive(Serialize)]
struct NPointOut {
    #[serde(flatten)]
    optimum: OptimumOut,
    t_over_tau: f64,
    v_nn_mhz: f64,
    v_nnn_mhz: f64,
    lambda: f64,
}

#[derive(Serialize)]
struct NSummary {
    meta: Meta,
    l: usize,
    theta_k: f64,
    points: Vec<NPointOut>,
    n_star: Vec<(ModelKind, u32, f64)>,
}

fn cmd_sweep_n(ctx: &Ctx, cmd: &str, point: &Point) -> Result<Vec<PathBuf>, CliError> {
    let (_, l, theta) = ctx.point(point);
    let s = &ctx.cfg.sweep;
    let ns: Vec<u32> = match point.n {
        Some(n) => vec![n],
        None => (s.n_min..=s.n_max).collect(),
    };
    let hw = ctx.cfg.hardware()?;
    let table = ctx.cfg.table()?;
    let scan = sweeps::sweep_n(&ns, l, theta, &s.models, &hw, &table, &ctx.cfg.sweep_options())?;
    let args = serde_json::json!({ "ns": ns, "l": l, "theta": theta });
    let csv = ctx.path(&format!("{cmd}.csv"))?;
    write_csv_file(&csv, &ctx.header(cmd, &args), |w| write_records(w, &scan.records))?;
    let optima: Vec<OptimumSummary> = scan.points.iter().map(|p| p.optimum.clone()).collect();
    let ocsv = ctx.path(&format!("{cmd}_optima.csv"))?;
    write_csv_file(&ocsv, &ctx.header(cmd, &args), |w| write_optima(w, &optima))?;
    let n_star = s
        .models
        .iter()
        .filter_map(|m| {
            scan.points
                .iter()
                .filter(|p| p.optimum.model == *m)
                .max_by(|a, b| a.optimum.p_star.total_cmp(&b.optimum.p_star))
                .map(|p| (*m, p.optimum.n_star, p.optimum.p_star))
        })
        .collect();
    let summary = NSummary {
        meta: ctx.meta(cmd, &args),
        l,
        theta_k: theta,
        points: scan
            .points
            .iter()
            .map(|p| NPointOut {
                optimum: (&p.optimum).into(),
                t_over_tau: p.t_over_tau,
                v_nn_mhz: to_mhz(p.v_nn),
                v_nnn_mhz: to_mhz(p.v_nnn),
                lambda: p.lambda,
            })
            .collect(),
        n_star,
    };
    let json = ctx.path(&format!("{cmd}_summary.json"))?;
    write_json(&json, &summary)?;
    Ok(vec![csv, ocsv, json])
}

fn cmd_sweep_length(ctx: &Ctx, cmd: &str) -> Result<Vec<PathBuf>, CliError> {
    let s = &ctx.cfg.sweep;
    let ls: Vec<usize> = (s.l_min..=s.l_max).collect();
    let ns: Vec<u32> = (s.length_n_min..=s.length_n_max).collect();
    let hw = ctx.cfg.hardware()?;
    let table = ctx.cfg.table()?;
    let (records, optima) =
        sweeps::sweep_length(&ls, &ns, &s.thetas_k, s.length_model, &hw, &table, &ctx.cfg.sweep_options())?;
    let args = serde_json::json!({ "ls": ls, "ns": ns, "thetas": s.thetas_k, "model": s.length_model });
    let csv = ctx.path(&format!("{cmd}.csv"))?;
    write_csv_file(&csv, &ctx.header(cmd, &args), |w| write_records(w, &records))?;
    let ocsv = ctx.path(&format!("{cmd}_optima.csv"))?;
    write_csv_file(&ocsv, &ctx.header(cmd, &args), |w| write_optima(w, &optima))?;
    Ok(vec![csv, ocsv])
}

#[derive(Serialize)]
struct AnalysisSummary {
    meta: Meta,
    input: String,
    fit_l_min: usize,
    channels: Vec<ChannelOut>,
}

#[derive(Serialize)]
struct ChannelOut {
    theta_k: f64,
    amplitude: f64,
    rate: f64,
    fit_residual: f64,
    r2: f64,
    l_c: Option<usize>,
    points: usize,
}

impl From<&ChannelAnalysis> for ChannelOut {
    fn from(c: &ChannelAnalysis) -> Self {
        Self {
            theta_k: c.theta,
            amplitude: c.amplitude,
            rate: c.rate,
            fit_residual: c.fit_residual,
            r2: c.r2,
            l_c: c.l_c,
            points: c.concurrence.len(),
        }
    }
}

/// `(theta, L, p_star)` rows of an optima CSV.
fn read_optima(path: &Path) -> Result<Vec<(f64, usize, f64)>, CliError> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| io_err(path, e))?;
    let h = rd.headers().map_err(|e| io_err(path, e))?.clone();
    let col =
        |name: &str| h.iter().position(|c| c == name).ok_or_else(|| io_err(path, format!("missing column {name}")));
    let (ct, cl, cp) = (col("theta_K")?, col("L")?, col("p_star")?);
    let mut out = vec![];
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let parse = |c: usize| -> Result<f64, CliError> {
            rec[c].trim().parse::<f64>().map_err(|e| io_err(path, format!("row {}: {e}", i + 1)))
        };
        out.push((parse(ct)?, parse(cl)? as usize, parse(cp)?));
    }
    Ok(out)
}

fn cmd_analyze(ctx: &Ctx, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = read_optima(input)?;
    let mut thetas: Vec<f64> = vec![];
    for r in &rows {
        if !thetas.contains(&r.0) {
            thetas.push(r.0);
        }
    }
    let l_min = ctx.cfg.sweep.fit_l_min;
    let mut channels = vec![];
    for th in thetas {
        let mut s: Vec<(usize, f64)> = rows.iter().filter(|r| r.0 == th).map(|r| (r.1, r.2)).collect();
        s.sort_by_key(|x| x.0);
        let a = fit_and_extrapolate(&s, th, l_min)?;
        match a.l_c {
            Some(lc) => info!("theta={th} K: L_c = {lc}"),
            None => warn!("theta={th} K: fit does not decay"),
        }
        channels.push(a);
    }
    let args = serde_json::json!({ "input": input.display().to_string(), "fit_l_min": l_min });
    let csv = ctx.path("concurrence.csv")?;
    write_csv_file(&csv, &ctx.header("analyze", &args), |w| write_concurrence(w, &channels))?;
    let json = ctx.path("analysis_summary.json")?;
    let summary = AnalysisSummary {
        meta: ctx.meta("analyze", &args),
        input: input.display().to_string(),
        fit_l_min: l_min,
        channels: channels.iter().map(ChannelOut::from).collect(),
    };
    write_json(&json, &summary)?;
    Ok(vec![csv, json])
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if cfg.workers > 0 {
        // fails only when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let ctx = Ctx { cfg, out_dir };
    let none = Point { n: None, l: None, theta: None };
    let written = match cli.cmd {
        Cmd::Solve { point, delta0_mhz, out } => vec![cmd_solve(&ctx, &point, delta0_mhz, out)?],
        Cmd::Evolve { solution, model, t_max_us, points, out } => {
            vec![cmd_evolve(&ctx, &solution, model, t_max_us, points, out)?]
        }
        Cmd::SweepDetuning { point } => cmd_sweep_detuning(&ctx, "sweep_detuning", &point)?,
        Cmd::SweepN { point } => cmd_sweep_n(&ctx, "sweep_n", &point)?,
        Cmd::SweepLength => cmd_sweep_length(&ctx, "sweep_length")?,
        Cmd::Analyze { input } => cmd_analyze(&ctx, &input)?,
        Cmd::Fig3 => cmd_sweep_detuning(&ctx, "fig3", &none)?,
        Cmd::Fig4 => cmd_sweep_n(&ctx, "fig4", &none)?,
        Cmd::Fig5 => {
            let mut w = cmd_sweep_length(&ctx, "fig5")?;
            let optima = w[1].clone();
            w.extend(cmd_analyze(&ctx, &optima)?);
            w
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
