//! The `ymlab` command line: one subcommand per computation, each writing
//! CSV series and a `manifest.json` into `--out`.
//!
//! Every subcommand has a parameter struct that is filled from defaults,
//! then from `--config` (a parameter file or an earlier manifest), then from
//! flags. The resolved parameters are echoed into the manifest, so
//! `--config <out>/manifest.json` repeats the run.

use crate::critical::{run_campaign, AttractorTrack, CampaignConfig, ScalingFit};
use crate::evolve::{
    cone_energies, diagnose, extract_scale_lambda, init_gaussian, rescaled_profile_residual, total_energy,
    advance_with, Control, EvolveConfig, GaussianData, PulseMode, RadialField, Reference,
};
use crate::io::{num, opt, OutputDir, RunManifest, Table};
use crate::modulation::{instanton, integrate_modulation, lambda_asymptote, ModulationConfig};
use crate::selfsim::{build_profile, closed_form_w0, q_functional, ShootingConfig};
use crate::spectrum::{asymptotic_ratio, eig_solve, quantization_roots, zero_mode, zero_mode_grid, EigenConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ymlab", version, about = "Blowup of radial Yang-Mills fields in 4 and 5 dimensions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shooting parameters and profiles of the self-similar solutions.
    Selfsim(SelfsimArgs),
    /// Unstable modes of the self-similar solutions and the limiting roots.
    Spectrum(SpectrumArgs),
    /// One evolution of Gaussian data.
    Evolve(EvolveArgs),
    /// Threshold bisection and near-critical scaling in D = 5.
    Critical(CriticalArgs),
    /// Scale-factor ODE for the adiabatic instanton collapse.
    Modulation(ModulationArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "ymlab-out")]
    pub out: PathBuf,
    /// JSON parameter file, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Symmetric,
    Ingoing,
}

impl From<ModeArg> for PulseMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Symmetric => PulseMode::Symmetric,
            ModeArg::Ingoing => PulseMode::Ingoing,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelfsimArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest profile index.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Relative tolerance of the shooting integrator.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest profile index.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Number of limiting quantization roots.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Only compute the roots of the limiting quantization condition.
    #[arg(long)]
    pub limiting: bool,
    /// Relative tolerance of the eigenvalue solver.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = clap::value_parser!(u32).range(4..=5))]
    pub dim: Option<u32>,
    /// Amplitude `A` of `w = 1 - A r^2 exp(-sigma (r - R)^2)`.
    #[arg(long)]
    pub amp: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Target width of the amplitude bracket.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Evolutions run concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModulationArgs {
    #[command(flatten)]
    pub common: Common,
    /// Initial scale.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Initial rate of change of the scale (non-positive).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_dot: Option<f64>,
    /// Relative tolerance of the integrator.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfsimParams {
    pub n_max: usize,
    pub shooting: ShootingConfig,
    /// Profiles are sampled on `[1, x_end]`.
    pub x_end: f64,
    pub points: usize,
    /// Points on `[1, 50]` for the closed-form comparison of `W_0`.
    pub closed_form_points: usize,
}

impl Default for SelfsimParams {
    fn default() -> Self {
        Self { n_max: 5, shooting: ShootingConfig::default(), x_end: 50.0, points: 2001, closed_form_points: 4901 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub n_max: usize,
    pub k_max: usize,
    pub limiting: bool,
    pub eigen: EigenConfig,
    pub shooting: ShootingConfig,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self { n_max: 3, k_max: 4, limiting: false, eigen: EigenConfig::default(), shooting: ShootingConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub dim: u32,
    pub amplitude: f64,
    pub sigma: f64,
    pub radius: f64,
    pub mode: PulseMode,
    pub evolve: EvolveConfig,
    /// Extra snapshot times; snapshots are also taken each time `|w_rr(t, 0)|`
    /// passes a power of ten.
    pub snapshot_times: Vec<f64>,
    /// Rows of each rescaled snapshot.
    pub rescaled_points: usize,
    /// Upper bound on the rows of the time series.
    pub history_rows: usize,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            dim: 5,
            amplitude: 0.2,
            sigma: 10.0,
            radius: 2.0,
            mode: PulseMode::Symmetric,
            evolve: EvolveConfig::default(),
            snapshot_times: Vec::new(),
            rescaled_points: 401,
            history_rows: 20000,
        }
    }
}

impl EvolveParams {
    pub fn data(&self) -> GaussianData {
        GaussianData { amplitude: self.amplitude, sigma: self.sigma, radius: self.radius, mode: self.mode }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationParams {
    pub lambda0: f64,
    pub lambda_dot0: f64,
    pub config: ModulationConfig,
}

impl Default for ModulationParams {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda_dot0: -0.05,
            config: ModulationConfig { log_floor: Some(-1e5), ..ModulationConfig::default() },
        }
    }
}

/// A failure with its exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical { out: PathBuf, command: &'static str, config: Value, message: String },
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical { message, .. } => write!(f, "numerical failure: {message}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            println!("wrote {}", out.join("manifest.json").display());
            EXIT_OK
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numerical { out, command, config, message }) => {
            eprintln!("numerical failure: {message}");
            let report = json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "config": config, "error": message });
            let path = out.join("failure.json");
            let written = std::fs::create_dir_all(&out)
                .and_then(|_| std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap() + "\n"));
            match written {
                Ok(()) => eprintln!("diagnostics in {}", path.display()),
                Err(e) => eprintln!("could not write {}: {e}", path.display()),
            }
            EXIT_NUMERICAL
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            EXIT_NUMERICAL
        }
    }
}

/// Runs a parsed command; returns the output directory.
pub fn dispatch(cli: Cli) -> Result<PathBuf, Failure> {
    match cli.command {
        Command::Selfsim(a) => {
            let mut p: SelfsimParams = load_params("selfsim", a.common.config.as_deref())?;
            set(&mut p.n_max, a.n_max);
            set(&mut p.shooting.rtol, a.tol);
            finish("selfsim", &a.common.out, &p, selfsim)
        }
        Command::Spectrum(a) => {
            let mut p: SpectrumParams = load_params("spectrum", a.common.config.as_deref())?;
            set(&mut p.n_max, a.n_max);
            set(&mut p.k_max, a.k_max);
            set(&mut p.eigen.rtol, a.tol);
            p.limiting |= a.limiting;
            finish("spectrum", &a.common.out, &p, spectrum)
        }
        Command::Evolve(a) => {
            let mut p: EvolveParams = load_params("evolve", a.common.config.as_deref())?;
            set(&mut p.dim, a.dim);
            set(&mut p.amplitude, a.amp);
            set(&mut p.sigma, a.sigma);
            set(&mut p.radius, a.radius);
            set(&mut p.mode, a.mode.map(Into::into));
            finish("evolve", &a.common.out, &p, evolve)
        }
        Command::Critical(a) => {
            let mut p: CampaignConfig = load_params("critical", a.common.config.as_deref())?;
            set(&mut p.family.sigma, a.sigma);
            set(&mut p.family.radius, a.radius);
            set(&mut p.family.mode, a.mode.map(Into::into));
            set(&mut p.width, a.tol);
            set(&mut p.jobs, a.jobs);
            finish("critical", &a.common.out, &p, critical)
        }
        Command::Modulation(a) => {
            let mut p: ModulationParams = load_params("modulation", a.common.config.as_deref())?;
            set(&mut p.lambda0, a.lambda0);
            set(&mut p.lambda_dot0, a.lambda_dot);
            set(&mut p.config.rtol, a.tol);
            finish("modulation", &a.common.out, &p, modulation)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Reads parameters from a parameter file or from the `config` key of a
/// manifest written by the same subcommand.
pub fn load_params<P: DeserializeOwned + Default>(command: &str, path: Option<&Path>) -> Result<P, Failure> {
    let Some(path) = path else { return Ok(P::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let value = match (value.get("command"), value.get("config")) {
        (Some(c), Some(cfg)) => {
            if c != command {
                return Err(Failure::Usage(format!("{} is a manifest for `{c}`, not `{command}`", path.display())));
            }
            cfg.clone()
        }
        _ => value,
    };
    serde_json::from_value(value).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

type Body<P> = fn(&P, &mut OutputDir) -> Result<Value, String>;

fn finish<P: Serialize>(command: &'static str, out: &Path, params: &P, body: Body<P>) -> Result<PathBuf, Failure> {
    let config = serde_json::to_value(params).expect("parameters are serialisable");
    let start = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let outcome = body(params, &mut dir)
        .map_err(|message| Failure::Numerical { out: out.to_path_buf(), command, config: config.clone(), message })?;
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: dir.files().to_vec(),
        outcome,
    };
    std::fs::write(out.join("manifest.json"), manifest.to_json())?;
    Ok(out.to_path_buf())
}

fn io_err(e: std::io::Error) -> String {
    format!("writing output: {e}")
}

fn selfsim(p: &SelfsimParams, dir: &mut OutputDir) -> Result<Value, String> {
    let mut table = Table::new(
        "shooting parameters a_n of the self-similar profiles W_n, W(x) ~ 1 - a (x - 1) at x = 1",
        &["n", "a_n", "bracket_lo", "bracket_hi", "zeros", "x_max", "x_join", "tail_b", "c", "log_coefficient"],
    )
    .meta("rtol", p.shooting.rtol)
    .meta("atol", p.shooting.atol)
    .meta("delta", p.shooting.delta);
    let mut summaries = Vec::new();
    let mut closed_form_sup = None;
    for n in 0..=p.n_max {
        let prof = build_profile(n, &p.shooting).map_err(|e| format!("profile n = {n}: {e}"))?;
        let s = prof.summary();
        table.row(vec![
            n.to_string(),
            num(s.a),
            num(s.bracket.0),
            num(s.bracket.1),
            prof.zeros.len().to_string(),
            num(prof.x_max),
            num(prof.x_join),
            num(prof.b),
            opt(s.c),
            opt(s.log_coefficient),
        ]);
        let mut curve = Table::new(&format!("self-similar profile W_{n} with Q = (x^2 - 1) W'^2 / 2 - 3 (1 - W^2)^2 / 4"), &["x", "W", "dW_dx", "Q"])
            .meta("n", n)
            .meta("a_n", s.a);
        for [x, w, wp] in prof.samples(p.x_end, p.points) {
            curve.row(vec![num(x), num(w), num(wp), num(q_functional(x, w, wp))]);
        }
        dir.table(&format!("profile_n{n}.csv"), &curve).map_err(io_err)?;
        if n == 0 {
            let m = p.closed_form_points.max(2);
            let sup = (0..m)
                .map(|i| 1.0 + 49.0 * i as f64 / (m - 1) as f64)
                .map(|x| (prof.w(x) - closed_form_w0(x)).abs())
                .fold(0.0, f64::max);
            closed_form_sup = Some(sup);
        }
        summaries.push(s);
    }
    dir.table("shooting_parameters.csv", &table).map_err(io_err)?;
    Ok(json!({ "profiles": summaries, "closed_form_w0_sup_on_1_50": closed_form_sup }))
}

fn spectrum(p: &SpectrumParams, dir: &mut OutputDir) -> Result<Value, String> {
    let roots = quantization_roots(p.k_max).map_err(|e| e.to_string())?;
    let mut rt = Table::new("roots of the limiting quantization condition for the potential -3/sinh^2(rho)", &["k", "alpha", "ratio_to_previous"])
        .meta("asymptotic_ratio", asymptotic_ratio());
    for (k, &a) in roots.iter().enumerate() {
        rt.row(vec![(k + 1).to_string(), num(a), if k == 0 { String::new() } else { num(a / roots[k - 1]) }]);
    }
    dir.table("quantization_roots.csv", &rt).map_err(io_err)?;
    let mut outcome = json!({ "limiting_roots": roots, "asymptotic_ratio": asymptotic_ratio() });
    if p.limiting {
        return Ok(outcome);
    }
    let mut ev = Table::new(
        "unstable modes of W_n: growth exponents alpha_k with lambda_k = alpha_k - 1, and node counts",
        &["n", "k", "alpha", "lambda", "nodes", "residual", "rho_min", "rho_fit", "rho_max"],
    )
    .meta("rtol", p.eigen.rtol);
    let mut zt = Table::new("gauge zero modes of W_n: residual of L u_0 and node counts", &["n", "nodes", "residual", "limit"]);
    let mut per_n = Vec::new();
    for n in 1..=p.n_max {
        let prof = build_profile(n, &p.shooting).map_err(|e| format!("profile n = {n}: {e}"))?;
        let modes = eig_solve(&prof, &p.eigen).map_err(|e| format!("spectrum n = {n}: {e}"))?;
        for m in &modes {
            ev.row(vec![
                n.to_string(),
                m.k.to_string(),
                num(m.alpha),
                num(m.lambda),
                m.nodes.to_string(),
                num(m.residual),
                num(m.rho_min),
                num(m.rho_fit),
                num(m.rho_max),
            ]);
            if let Some(g) = &m.grid {
                let mut ef = Table::new(&format!("eigenfunction u(rho) of mode k = {} for W_{n}", m.k), &["rho", "u"])
                    .meta("alpha", m.alpha);
                for (r, u) in g.points().into_iter().zip(&m.u) {
                    ef.row(vec![num(r), num(*u)]);
                }
                dir.table(&format!("eigenfunction_n{n}_k{}.csv", m.k), &ef).map_err(io_err)?;
            }
        }
        let z = zero_mode(&prof, &zero_mode_grid(&prof));
        zt.row(vec![n.to_string(), z.nodes.to_string(), num(z.residual), num(z.limit)]);
        let mut zf = Table::new(&format!("gauge zero mode u_0(rho) of W_{n}"), &["rho", "u"]);
        for (r, u) in z.rho.iter().zip(&z.u) {
            zf.row(vec![num(*r), num(*u)]);
        }
        dir.table(&format!("zero_mode_n{n}.csv"), &zf).map_err(io_err)?;
        per_n.push(json!({
            "n": n,
            "alpha": modes.iter().map(|m| m.alpha).collect::<Vec<_>>(),
            "zero_mode": { "nodes": z.nodes, "residual": z.residual },
        }));
    }
    dir.table("eigenvalues.csv", &ev).map_err(io_err)?;
    dir.table("zero_modes.csv", &zt).map_err(io_err)?;
    outcome["profiles"] = Value::Array(per_n);
    Ok(outcome)
}

struct Snapshot {
    label: String,
    field: RadialField,
}

fn evolve(p: &EvolveParams, dir: &mut OutputDir) -> Result<Value, String> {
    let cfg = p.evolve;
    let data = p.data();
    let field = init_gaussian(p.dim, &data, cfg.base_grid()).map_err(|e| e.to_string())?;
    let initial_energy = total_energy(&field);
    let mut snaps = vec![Snapshot { label: "initial".into(), field: field.clone() }];
    let mut decade = 1i32;
    let mut times: Vec<f64> = p.snapshot_times.clone();
    times.sort_by(f64::total_cmp);
    let mut next_time = 0;
    let run = advance_with(field, &cfg, |f, s| {
        while s.curvature.abs() >= 10f64.powi(decade) {
            snaps.push(Snapshot { label: format!("curvature_1e{decade}"), field: f.clone() });
            decade += 1;
        }
        while next_time < times.len() && f.time() >= times[next_time] {
            snaps.push(Snapshot { label: format!("time_{next_time}"), field: f.clone() });
            next_time += 1;
        }
        Control::Continue
    })
    .map_err(|e| e.to_string())?;
    snaps.push(Snapshot { label: "final".into(), field: run.field.clone() });
    let diag = diagnose(&run, &cfg);
    let blowup_time = diag.fit.map(|f| f.blowup_time);

    let mut hist = Table::new(
        "central diagnostics: curvature w_rr(t,0), energy density at r = 0, total energy, refinement depth, first zero of w (D = 4)",
        &["t", "w_rr_center", "energy_density_center", "energy", "depth", "lambda"],
    )
    .meta("dim", p.dim)
    .meta("amplitude", p.amplitude);
    let stride = run.history.len().div_ceil(p.history_rows.max(1)).max(1);
    for (i, s) in run.history.iter().enumerate() {
        if i % stride == 0 || i + 1 == run.history.len() {
            hist.row(vec![num(s.t), num(s.curvature), num(s.central_density), opt(s.energy), s.depth.to_string(), opt(s.lambda)]);
        }
    }
    dir.table("history.csv", &hist).map_err(io_err)?;

    let mut refs = Table::new("refinement events", &["t", "depth", "h", "extent", "energy_before", "energy_after"]);
    for r in run.field.refinements() {
        refs.row(vec![num(r.t), r.depth.to_string(), num(r.h), num(r.extent), num(r.energy_before), num(r.energy_after)]);
    }
    dir.table("refinements.csv", &refs).map_err(io_err)?;

    let mut index = Table::new(
        "snapshots: time, central curvature, time to blowup, scale and residual of the rescaled field, light-cone energies (D = 4)",
        &["index", "label", "t", "w_rr_center", "depth", "tau", "lambda", "residual_sup", "cone_kinetic", "cone_potential"],
    )
    .meta("blowup_time", blowup_time);
    for (k, s) in snaps.iter().enumerate() {
        let f = &s.field;
        let mut prof = Table::new(&format!("field at t = {}", f.time()), &["r", "w", "w_t"]).meta("label", &s.label);
        for ((r, w), wt) in f.grid().nodes().iter().zip(f.w_values()).zip(f.wt_values()) {
            prof.row(vec![num(*r), num(w), num(wt)]);
        }
        let name = if s.label == "final" { "final_profile.csv".to_string() } else { format!("snapshot_{k:02}.csv") };
        dir.table(&name, &prof).map_err(io_err)?;

        let tau = blowup_time.map(|t| t - f.time()).filter(|&tau| tau > 0.0);
        let lambda = if p.dim == 4 { extract_scale_lambda(f) } else { None };
        let mut residual = None;
        let (mut ek, mut ep) = (None, None);
        if let Some(tau) = tau {
            let reference = match (p.dim, lambda) {
                (5, _) => Some(Reference::W0),
                (_, Some(l)) => Some(Reference::Instanton { lambda: l, rho_max: tau / l }),
                _ => None,
            };
            if let Some(reference) = reference {
                residual = rescaled_profile_residual(f, f.time() + tau, reference).ok().map(|r| r.sup);
                let (scale, upper, var) = match reference {
                    Reference::Instanton { lambda, rho_max } => (lambda, rho_max, "rho = r/lambda"),
                    _ => (tau, 1.0, "eta = r/(T - t)"),
                };
                let top = upper.min(f.grid().outer() / scale);
                let sgn = f.sign();
                let mut rs = Table::new(&format!("rescaled field against the reference profile, {var}"), &["x", "w", "reference"])
                    .meta("t", f.time())
                    .meta("scale", scale);
                let m = p.rescaled_points.max(2);
                for i in 0..m {
                    let x = top * i as f64 / (m - 1) as f64;
                    let r = match reference {
                        Reference::Instanton { .. } => sgn * instanton(x, 1.0),
                        _ => sgn * (1.0 - x * x) / (1.0 + 0.6 * x * x),
                    };
                    rs.row(vec![num(x), num(f.w_at(scale * x)), num(r)]);
                }
                dir.table(&format!("rescaled_{k:02}.csv"), &rs).map_err(io_err)?;
            }
            if p.dim == 4 {
                if let Ok((k_, p_)) = cone_energies(f, f.time() + tau) {
                    ek = Some(k_);
                    ep = Some(p_);
                }
            }
        }
        index.row(vec![
            k.to_string(),
            s.label.clone(),
            num(f.time()),
            num(f.central_curvature()),
            f.grid().depth().to_string(),
            opt(tau),
            opt(lambda),
            opt(residual),
            opt(ek),
            opt(ep),
        ]);
    }
    dir.table("snapshots.csv", &index).map_err(io_err)?;

    Ok(json!({
        "initial_data": data,
        "outcome": diag.outcome,
        "termination": diag.termination,
        "blowup_fit": diag.fit,
        "final_residual": diag.final_residual,
        "peak_central_density": diag.peak_central_density,
        "final_time": diag.final_time,
        "depth": diag.depth,
        "steps": run.steps,
        "energy_initial": initial_energy,
        "energy_final": total_energy(&run.field),
        "vacuum_deviation_final": run.field.vacuum_deviation(),
    }))
}

fn track_table(title: &str, t: &AttractorTrack) -> Table {
    let mut tab = Table::new(title, &["t", "tau", "residual"]).meta("amplitude", t.run.amplitude).meta("outcome", format!("{:?}", t.run.outcome));
    for p in &t.points {
        tab.row(vec![num(p.t), num(p.tau), num(p.residual)]);
    }
    tab
}

fn snapshot_table(title: &str, t: &AttractorTrack) -> Table {
    let mut tab = Table::new(title, &["t", "tau", "eta", "w"]).meta("amplitude", t.run.amplitude);
    for s in &t.snapshots {
        for (e, w) in s.eta.iter().zip(&s.w) {
            tab.row(vec![num(s.t), num(s.tau), num(*e), num(*w)]);
        }
    }
    tab
}

fn scaling_table(title: &str, fit: &Result<ScalingFit, String>) -> Table {
    let mut tab = Table::new(title, &["epsilon", "observable", "fitted"]);
    if let Ok(f) = fit {
        tab = tab.meta("exponent", f.exponent).meta("exponent_err", f.exponent_err);
        for &(le, lo) in &f.points {
            tab.row(vec![num(le.exp()), num(lo.exp()), num((f.intercept + f.exponent * le).exp())]);
        }
    }
    tab
}

fn critical(p: &CampaignConfig, dir: &mut OutputDir) -> Result<Value, String> {
    let c = run_campaign(p).map_err(|e| e.to_string())?;
    let th = &c.threshold;
    let mut b = Table::new("amplitude brackets of the threshold bisection", &["step", "lo", "hi", "width"]);
    for (i, (lo, hi)) in th.brackets.iter().enumerate() {
        b.row(vec![i.to_string(), num(*lo), num(*hi), num(hi - lo)]);
    }
    dir.table("bisection.csv", &b).map_err(io_err)?;
    let mut runs = Table::new(
        "bisection runs and their end states",
        &["amplitude", "outcome", "termination", "final_time", "steps", "depth", "peak_time", "peak_density", "blowup_time", "escalated"],
    );
    for r in &th.runs {
        runs.row(vec![
            num(r.amplitude),
            format!("{:?}", r.outcome),
            format!("{:?}", r.termination),
            num(r.final_time),
            r.steps.to_string(),
            r.depth.to_string(),
            num(r.peak_density.0),
            num(r.peak_density.1),
            opt(r.blowup_time),
            r.escalated.to_string(),
        ]);
    }
    dir.table("runs.csv", &runs).map_err(io_err)?;

    let mut lad = Table::new(
        "near-critical ladder A = A* (1 + side epsilon): closest approach to W_1, departure time t*, peak central density",
        &["epsilon", "side", "amplitude", "outcome", "min_residual", "t_min", "departure_time", "T_minus_departure", "peak_density"],
    )
    .meta("critical_amplitude", c.critical_amplitude)
    .meta("blowup_time", c.blowup_time);
    for l in &c.ladder {
        let m = l.track.minimum();
        lad.row(vec![
            num(l.epsilon),
            l.side.to_string(),
            num(l.track.run.amplitude),
            format!("{:?}", l.track.run.outcome),
            opt(m.map(|m| m.residual)),
            opt(m.map(|m| m.t)),
            opt(l.departure),
            opt(l.departure.map(|d| c.blowup_time - d)),
            num(l.track.run.peak_density.1),
        ]);
    }
    dir.table("ladder.csv", &lad).map_err(io_err)?;

    let title = "distance sup|w(t, (T-t) eta) - W_1(eta)| to the one-mode self-similar solution";
    let labels = ["marginal_sub", "marginal_super"];
    for (label, t) in labels.iter().zip(&c.marginal) {
        dir.table(&format!("track_{label}.csv"), &track_table(title, t)).map_err(io_err)?;
        dir.table(&format!("rescaled_{label}.csv"), &snapshot_table("rescaled field w(t, (T-t) eta)", t)).map_err(io_err)?;
    }
    dir.table("track_far.csv", &track_table(title, &c.far)).map_err(io_err)?;
    for (i, l) in c.ladder.iter().enumerate() {
        dir.table(&format!("track_ladder_{i:02}.csv"), &track_table(title, &l.track)).map_err(io_err)?;
    }
    dir.table("departure_scaling.csv", &scaling_table("departure from W_1: T - t* against epsilon", &c.departure_fit))
        .map_err(io_err)?;
    dir.table("density_scaling.csv", &scaling_table("subcritical peak central energy density against epsilon", &c.density_fit))
        .map_err(io_err)?;

    let fit_summary = |f: &Result<ScalingFit, String>| match f {
        Ok(f) => json!({ "exponent": f.exponent, "exponent_err": f.exponent_err, "intercept": f.intercept, "residual": f.residual, "points": f.points.len() }),
        Err(e) => json!({ "error": e }),
    };
    Ok(json!({
        "critical_amplitude": c.critical_amplitude,
        "final_bracket": th.final_bracket(),
        "converged": th.converged(),
        "blowup_time": c.blowup_time,
        "marginal_min_residual": c.marginal.iter().map(|t| t.minimum().map(|m| m.residual)).collect::<Vec<_>>(),
        "far_min_residual": c.far.minimum().map(|m| m.residual),
        "departure_fit": fit_summary(&c.departure_fit),
        "density_fit": fit_summary(&c.density_fit),
        "family": p.family,
    }))
}

fn modulation(p: &ModulationParams, dir: &mut OutputDir) -> Result<Value, String> {
    let tr = integrate_modulation(p.lambda0, p.lambda_dot0, &p.config).map_err(|e| e.to_string())?;
    let mut t = Table::new(
        "scale factor of the adiabatic instanton collapse, with the asymptote lambda_a(T - t)",
        &["t", "lambda", "lambda_dot", "tau", "lambda_asymptote", "ratio"],
    )
    .meta("collapse_time", tr.collapse_time);
    for s in &tr.states {
        let tau = tr.collapse_time.map(|c| c - s.t);
        let asym = tr.collapse_time.and_then(|c| lambda_asymptote(s.t, c).ok());
        t.row(vec![num(s.t), num(s.lambda), num(s.lambda_dot), opt(tau), opt(asym), opt(asym.map(|a| s.lambda / a))]);
    }
    dir.table("trajectory.csv", &t).map_err(io_err)?;
    let mut tail = Table::new("continuation in ln(lambda) below the floor", &["ln_lambda", "lambda_dot", "ln_tau", "ratio"]);
    for q in &tr.tail {
        tail.row(vec![num(q.ln_lambda), num(q.lambda_dot), num(q.ln_tau), num(q.ratio)]);
    }
    dir.table("tail.csv", &tail).map_err(io_err)?;
    Ok(json!({
        "collapse_time": tr.collapse_time,
        "first_integral": tr.first_integral,
        "final_lambda": tr.last().lambda,
        "terminal_ratio": tr.terminal_ratio(),
    }))
}
