//! Command-line front end.
//!
//! Settings come from an optional TOML file (`--config`) overridden by flags.
//! Exit codes: `0` success, `1` failed validation, `2` configuration error,
//! `3` numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{BoundaryParams, GraphPoint, ProcessKind};
use crate::kernels::{transition_kernel, KernelQuery, Target};
use crate::resolvents::{resolvent_kernel, ResolventQuery};
use crate::scattering::{bound_state, recover_params_from_s, s_at_energy, s_closed_form, time_delay, time_delay_numeric};
use crate::sim::{simulate_endpoints, simulate_skeletons, write_endpoints_csv, write_skeletons_csv, SimConfig};
use crate::validation::{all_pass, run_suite, Oracle, SuiteConfig, REPORT_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stargraph", version, about = "Brownian motions on a star graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition kernel: rows `t,from,to,density,atom,defect`.
    Kernel(Flags),
    /// Resolvent kernel: rows `lambda,from,to,density,atom`.
    Resolvent(Flags),
    /// Scattering matrix, determinant, unitarity defect, recovery and bound state.
    Scattering(Flags),
    /// Endpoint or skeleton CSV of simulated paths.
    Simulate(Flags),
    /// Consistency suite; exits 1 on any failure.
    Validate(Flags),
}

/// Flags shared by every command. Each overrides the matching config-file key.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// TOML file with the same keys as the flags (underscores for dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of edges.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Comma-separated `b_1,…,b_n`.
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    /// Comma-separated `w_1,…,w_n`.
    #[arg(long, value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// walsh, elastic, sticky, general or stopped; checked against the parameters.
    #[arg(long)]
    pub kind: Option<String>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Comma-separated spectral parameters.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Start point: `v` or `k:x`.
    #[arg(long)]
    pub from: Option<String>,
    /// Comma-separated targets: `v`, `k:x` or `atom`.
    #[arg(long, value_delimiter = ',')]
    pub to: Option<Vec<String>>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run only validation checks whose id contains this string.
    #[arg(long)]
    pub only: Option<String>,
    /// Write skeleton breakpoints instead of endpoints.
    #[arg(long)]
    pub skeleton: bool,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Config-file form of [`Flags`].
#[derive(Debug, Default, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub b: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub kind: Option<String>,
    pub t: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub from: Option<String>,
    pub to: Option<Vec<String>>,
    pub n_paths: Option<usize>,
    pub max_step: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub only: Option<String>,
    pub skeleton: Option<bool>,
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Flag values replace file values.
    pub fn merged_with(self, f: &Flags) -> Self {
        Self {
            n: f.n.or(self.n),
            a: f.a.or(self.a),
            c: f.c.or(self.c),
            b: f.b.clone().or(self.b),
            w: f.w.clone().or(self.w),
            beta: f.beta.or(self.beta),
            gamma: f.gamma.or(self.gamma),
            kind: f.kind.clone().or(self.kind),
            t: f.t.clone().or(self.t),
            lambda: f.lambda.clone().or(self.lambda),
            from: f.from.clone().or(self.from),
            to: f.to.clone().or(self.to),
            n_paths: f.n_paths.or(self.n_paths),
            max_step: f.max_step.or(self.max_step),
            seed: f.seed.or(self.seed),
            out: f.out.clone().or(self.out),
            only: f.only.clone().or(self.only),
            skeleton: if f.skeleton { Some(true) } else { self.skeleton },
        }
    }

    /// Boundary data from either `(a, c, b)` or `(w, β, γ)`, never both.
    pub fn params(&self) -> Result<BoundaryParams> {
        let feller = self.a.is_some() || self.c.is_some() || self.b.is_some();
        let simulator = self.w.is_some() || self.beta.is_some() || self.gamma.is_some();
        let kind = self.kind.as_deref().map(ProcessKind::from_str).transpose().map_err(config)?;
        let params = if feller && simulator {
            return Err(Error::Config("give either a/c/b or w/beta/gamma, not both".into()));
        } else if feller {
            let b = self.b.clone().ok_or_else(|| Error::Config("a/c/b form needs b".into()))?;
            BoundaryParams::derive(self.a.unwrap_or(0.0), self.c.unwrap_or(0.0), &b).map_err(config)?
        } else if kind == Some(ProcessKind::StoppedKilled) {
            BoundaryParams::stopped_killed(self.n.unwrap_or(2), self.beta.unwrap_or(0.0)).map_err(config)?
        } else {
            let w = match &self.w {
                Some(w) => w.clone(),
                None => BoundaryParams::equal_weights(self.n.unwrap_or(2)),
            };
            BoundaryParams::from_simulator(&w, self.beta.unwrap_or(0.0), self.gamma.unwrap_or(0.0)).map_err(config)?
        };
        if let Some(n) = self.n {
            if n != params.n() {
                return Err(Error::Config(format!("--n {n} disagrees with {} boundary weights", params.n())));
            }
        }
        if let Some(k) = kind {
            if k != params.kind() {
                return Err(Error::Config(format!("--kind {k} disagrees with the parameters, which give {}", params.kind())));
            }
        }
        Ok(params)
    }

    fn from_point(&self) -> Result<GraphPoint> {
        GraphPoint::from_str(self.from.as_deref().unwrap_or("v")).map_err(config)
    }

    fn targets(&self) -> Result<Vec<Target>> {
        let raw = self.to.clone().unwrap_or_else(|| vec!["atom".into()]);
        raw.iter().map(|s| Target::from_str(s).map_err(config)).collect()
    }

    fn times(&self) -> Result<Vec<f64>> {
        positive_list(self.t.clone().unwrap_or_else(|| vec![1.0]), "t")
    }

    fn lambdas(&self) -> Result<Vec<f64>> {
        positive_list(self.lambda.clone().unwrap_or_else(|| vec![0.5]), "lambda")
    }
}

fn positive_list(xs: Vec<f64>, name: &str) -> Result<Vec<f64>> {
    if xs.is_empty() || xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::Config(format!("{name} must be a non-empty list of positive numbers")));
    }
    Ok(xs)
}

fn config(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        Error::Normalization(s) => Error::Config(format!("boundary data not normalized (sum {s})")),
        other => other,
    }
}

/// Exit code for an error: configuration problems give 2, numerical ones 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Normalization(_) => EXIT_CONFIG,
        Error::Quadrature { .. } | Error::Singular(_) | Error::Diagnostics(_) => EXIT_NUMERIC,
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn output(cfg: &CliConfig) -> Result<Box<dyn Write>> {
    match &cfg.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::Config(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn load(flags: &Flags) -> Result<CliConfig> {
    let file = match &flags.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            CliConfig::from_toml(&text)?
        }
        None => CliConfig::default(),
    };
    Ok(file.merged_with(flags))
}

fn cmd_kernel(cfg: &CliConfig) -> Result<i32> {
    let params = cfg.params()?;
    let from = cfg.from_point()?;
    let (times, targets) = (cfg.times()?, cfg.targets()?);
    let mut out = output(cfg)?;
    writeln!(out, "t,from,to,density,atom,defect").map_err(io_err)?;
    for &t in &times {
        for &to in &targets {
            let v = transition_kernel(&params, &KernelQuery::new(t, from, to)).map_err(config_or_numeric)?;
            writeln!(out, "{},{from},{to},{},{},{}", num(t), num(v.density), num(v.atom), num(v.defect)).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

fn cmd_resolvent(cfg: &CliConfig) -> Result<i32> {
    let params = cfg.params()?;
    let from = cfg.from_point()?;
    let (lambdas, targets) = (cfg.lambdas()?, cfg.targets()?);
    let mut out = output(cfg)?;
    writeln!(out, "lambda,from,to,density,atom").map_err(io_err)?;
    for &lambda in &lambdas {
        for &to in &targets {
            let v = resolvent_kernel(&params, &ResolventQuery { lambda, from, to }).map_err(config_or_numeric)?;
            writeln!(out, "{},{from},{to},{},{}", num(lambda), num(v.density), num(v.atom)).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

/// Query errors that mention the inputs are configuration errors; the rest are numerical.
fn config_or_numeric(e: Error) -> Error {
    config(e)
}

fn cmd_scattering(cfg: &CliConfig) -> Result<i32> {
    let params = cfg.params()?;
    let n = params.n();
    let mut out = output(cfg)?;
    writeln!(out, "quantity,lambda,row,col,re,im").map_err(io_err)?;
    let mut line = |q: &str, l: f64, r: usize, c: usize, re: f64, im: f64| -> Result<()> {
        writeln!(out, "{q},{},{r},{c},{},{}", num(l), num(re), num(im)).map_err(io_err)
    };
    for &lambda in &cfg.lambdas()? {
        let s = s_closed_form(&params, lambda)?;
        for r in 0..n {
            for c in 0..n {
                let z = s.entries[(r, c)];
                line("S", lambda, r + 1, c + 1, z.re, z.im)?;
            }
        }
        let det = s.determinant();
        line("det", lambda, 0, 0, det.re, det.im)?;
        if params.kind() != ProcessKind::StoppedKilled {
            let u = s_at_energy(&params, 2.0 * lambda)?.unitarity_defect();
            line("unitarity_defect_at_energy_2lambda", lambda, 0, 0, u, 0.0)?;
        }
    }
    if matches!(params.kind(), ProcessKind::Walsh | ProcessKind::Elastic) {
        let samples = [1e3, 1e4, 1e-6, 1e-7, 1e-8]
            .iter()
            .map(|&l| Ok((l, s_closed_form(&params, l)?.real(0.0)?)))
            .collect::<Result<Vec<_>>>()?;
        let rec = recover_params_from_s(&samples, 1e-6)?;
        for (k, w) in rec.w.iter().enumerate() {
            line("recovered_w", f64::INFINITY, k + 1, 0, *w, 0.0)?;
        }
        line("recovered_beta", f64::INFINITY, 0, 0, rec.beta, 0.0)?;
    }
    let gamma = params.gamma();
    if gamma > 0.0 {
        let b = bound_state(gamma, n)?;
        line("bound_state_energy", 0.0, 0, 0, b.energy, 0.0)?;
        let k = 1.0;
        line("time_delay_trace_numeric_k1", 0.0, 0, 0, time_delay_numeric(&params, k)?.trace(), 0.0)?;
        if params.w().iter().all(|w| (w - 1.0 / n as f64).abs() < 1e-15) && params.beta() == 0.0 {
            line("time_delay_trace_closed_form_k1", 0.0, 0, 0, time_delay(gamma, n, k)?.trace(), 0.0)?;
        }
    }
    drop(line);
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(cfg: &CliConfig) -> Result<i32> {
    let params = cfg.params()?;
    let from = cfg.from_point()?;
    let t = cfg.times()?[0];
    let max_step = cfg.max_step.unwrap_or(1e-3).min(t);
    let sim = SimConfig::new(max_step, t, cfg.n_paths.unwrap_or(1000), cfg.seed.unwrap_or(42)).map_err(config)?;
    let mut out = output(cfg)?;
    if cfg.skeleton.unwrap_or(false) {
        let paths = simulate_skeletons(&params, from, &sim)?;
        write_skeletons_csv(&mut out, &paths).map_err(io_err)?;
    } else {
        let samples = simulate_endpoints(&params, from, &sim)?;
        write_endpoints_csv(&mut out, &samples).map_err(io_err)?;
        let n = samples.len() as f64;
        let alive = samples.iter().filter(|s| s.survived).count() as f64;
        let vertex = samples.iter().filter(|s| s.position.is_vertex()).count() as f64;
        let mean_abs: f64 = samples.iter().filter_map(|s| s.position.dist_to_vertex().ok()).sum::<f64>() / alive.max(1.0);
        let mean_l: f64 = samples.iter().map(|s| s.local_time).sum::<f64>() / n;
        eprintln!(
            "kind={} t={t} n_paths={} survival_fraction={} vertex_fraction={} mean_abs_x_alive={} mean_local_time={}",
            params.kind(),
            samples.len(),
            num(alive / n),
            num(vertex / n),
            num(mean_abs),
            num(mean_l)
        );
    }
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

fn cmd_validate(cfg: &CliConfig, inject_fault: bool) -> Result<i32> {
    let mut suite = SuiteConfig { only: cfg.only.clone(), ..SuiteConfig::default() };
    if let Some(s) = cfg.seed {
        suite.seed = s;
    }
    if let Some(n) = cfg.n_paths {
        suite.n_exact = n;
        suite.n_sticky = n;
    }
    if let Some(m) = cfg.max_step {
        suite.max_step = m;
    }
    if let Some(n) = cfg.n {
        suite.edge_counts = vec![n];
    }
    if inject_fault {
        suite.oracle = Oracle::corrupted();
    }
    let reports = run_suite(&suite);
    let mut out = output(cfg)?;
    writeln!(out, "{REPORT_HEADER}").map_err(io_err)?;
    for r in &reports {
        writeln!(out, "{r}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    eprintln!("{} checks, {failed} failed", reports.len());
    Ok(if all_pass(&reports) { EXIT_OK } else { EXIT_FAILED })
}

/// Runs one command and returns its exit code; errors are printed to standard error.
pub fn run(cli: Cli) -> i32 {
    let (flags, which) = match &cli.command {
        Command::Kernel(f) => (f, 0),
        Command::Resolvent(f) => (f, 1),
        Command::Scattering(f) => (f, 2),
        Command::Simulate(f) => (f, 3),
        Command::Validate(f) => (f, 4),
    };
    let result = load(flags).and_then(|cfg| match which {
        0 => cmd_kernel(&cfg),
        1 => cmd_resolvent(&cfg),
        2 => cmd_scattering(&cfg),
        3 => cmd_simulate(&cfg),
        _ => cmd_validate(&cfg, flags.inject_fault),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("stargraph: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` and runs; argument errors exit with code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> CliConfig {
        CliConfig::from_toml(text).unwrap()
    }

    #[test]
    fn flags_override_file_values() {
        let file = cfg("w = [0.5, 0.5]\nbeta = 1.0\nseed = 3\n");
        let flags = Flags { seed: Some(9), gamma: Some(2.0), ..Flags::default() };
        let m = file.merged_with(&flags);
        assert_eq!(m.seed, Some(9));
        assert_eq!(m.beta, Some(1.0));
        assert_eq!(m.params().unwrap().kind(), ProcessKind::General);
    }

    #[test]
    fn both_parametrizations_are_rejected() {
        let e = cfg("a = 0.1\nb = [0.9]\nw = [1.0]\n").params().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn parametrizations_round_trip() {
        let p = cfg("a = 0.2\nc = 0.3\nb = [0.1, 0.4]\n").params().unwrap();
        let q = BoundaryParams::from_simulator(p.w(), p.beta(), p.gamma()).unwrap();
        assert!((q.a() - 0.2).abs() < 1e-12 && (q.c() - 0.3).abs() < 1e-12);
        assert!((q.b()[0] - 0.1).abs() < 1e-12 && (q.b()[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn kind_must_agree() {
        assert!(cfg("kind = \"walsh\"\nbeta = 1.0\n").params().is_err());
        assert_eq!(cfg("kind = \"stopped\"\nbeta = 1.0\nn = 3\n").params().unwrap().n(), 3);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(CliConfig::from_toml("bogus = 1\n").is_err());
    }
}
