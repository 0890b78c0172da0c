//! Consistency harness binding the analytic and Monte Carlo halves.
//!
//! Checks are grouped into seven criteria ([`Criterion`]). Each check yields a
//! [`ComparisonReport`]; [`run_suite`] runs a filtered selection and returns
//! the reports sorted by id.

use std::fmt;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{BoundaryParams, GraphPoint};

pub mod analytic;
pub mod ks;
pub mod monte_carlo;
pub mod oracle;

pub use analytic::ScatteringTolerances;
pub use monte_carlo::StickyCheckConfig;
pub use oracle::Oracle;

/// Whether a statistic passes below or above its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Errors and normalized deviations.
    AtMost,
    /// p-values.
    AtLeast,
}

/// Outcome of one comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub id: String,
    pub statistic: f64,
    pub threshold: f64,
    pub direction: Direction,
    pub pass: bool,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub detail: String,
}

impl ComparisonReport {
    fn new(id: &str, statistic: f64, threshold: f64, direction: Direction) -> Self {
        let pass = match direction {
            Direction::AtMost => statistic <= threshold,
            Direction::AtLeast => statistic > threshold,
        };
        Self { id: id.to_string(), statistic, threshold, direction, pass, n: None, seed: None, detail: String::new() }
    }

    pub fn at_most(id: &str, statistic: f64, threshold: f64) -> Self {
        Self::new(id, statistic, threshold, Direction::AtMost)
    }

    pub fn at_least(id: &str, statistic: f64, threshold: f64) -> Self {
        Self::new(id, statistic, threshold, Direction::AtLeast)
    }

    /// A check that could not be evaluated.
    pub fn failed(id: &str, reason: impl fmt::Display) -> Self {
        let mut r = Self::at_most(id, f64::NAN, 0.0);
        r.detail = format!("error: {reason}");
        r
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }
}

/// Column header matching the [`fmt::Display`] form of a report.
pub const REPORT_HEADER: &str = "id\tstatistic\tthreshold\tpass\tseed\tn\tdetail";

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.direction {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">",
        };
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        write!(
            f,
            "{}\t{:.6e}\t{op}{:.1e}\t{}\t{}\t{}\t{}",
            self.id,
            self.statistic,
            self.threshold,
            if self.pass { "PASS" } else { "FAIL" },
            opt(self.seed.map(|s| s.to_string())),
            opt(self.n.map(|n| n.to_string())),
            self.detail
        )
    }
}

/// Numerical thresholds of every check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub laplace_abs: f64,
    pub chapman_rel: f64,
    pub chapman_rel_walsh: f64,
    pub boundary_rel: f64,
    pub stopped_identity: f64,
    pub scattering: ScatteringTolerances,
    pub ks_alpha: f64,
    pub sticky_budget: f64,
    pub limits: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            laplace_abs: 1e-6,
            chapman_rel: 1e-5,
            chapman_rel_walsh: 1e-6,
            boundary_rel: 1e-3,
            stopped_identity: 1e-6,
            scattering: ScatteringTolerances {
                walsh: 1e-12,
                closed_form: 1e-10,
                unitarity: 1e-12,
                recovery: 1e-6,
                time_delay: 1e-6,
            },
            ks_alpha: 1e-3,
            sticky_budget: 1e-3,
            limits: 1e-8,
        }
    }
}

/// Suite settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Edge counts of the analytic matrices.
    pub edge_counts: Vec<usize>,
    /// Paths per exact-sampler check.
    pub n_exact: usize,
    /// Paths per sticky and general simulator run.
    pub n_sticky: usize,
    pub max_step: f64,
    /// Keep only checks whose id contains this string.
    pub only: Option<String>,
    pub oracle: Oracle,
    pub tol: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            edge_counts: vec![1, 2, 3],
            n_exact: 200_000,
            n_sticky: 100_000,
            max_step: 1e-3,
            only: None,
            oracle: Oracle::exact(),
            tol: Tolerances::default(),
        }
    }
}

/// The seven acceptance criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Criterion {
    Laplace,
    ChapmanKolmogorov,
    Boundary,
    Scattering,
    ExactSamplers,
    StickyConvergence,
    Limits,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::Laplace,
        Criterion::ChapmanKolmogorov,
        Criterion::Boundary,
        Criterion::Scattering,
        Criterion::ExactSamplers,
        Criterion::StickyConvergence,
        Criterion::Limits,
    ];

    /// Id prefix of the criterion's checks.
    pub fn prefix(self) -> &'static str {
        match self {
            Criterion::Laplace => "laplace",
            Criterion::ChapmanKolmogorov => "chapman",
            Criterion::Boundary => "boundary",
            Criterion::Scattering => "scattering",
            Criterion::ExactSamplers => "sampler",
            Criterion::StickyConvergence => "sticky",
            Criterion::Limits => "limits",
        }
    }
}

/// The five process families at the reference parameters on `n` edges.
pub fn kind_matrix(n: usize) -> Result<Vec<(&'static str, BoundaryParams)>> {
    let w: Vec<f64> = match n {
        1 => vec![1.0],
        2 => vec![0.6, 0.4],
        _ => {
            let raw: Vec<f64> = (1..=n).map(|k| k as f64).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        }
    };
    Ok(vec![
        ("walsh", BoundaryParams::walsh(&w)?),
        ("elastic", BoundaryParams::elastic(&w, 1.0)?),
        ("sticky", BoundaryParams::sticky(&w, 2.0)?),
        ("general", BoundaryParams::general(&w, 1.0, 2.0)?),
        ("stopped", BoundaryParams::stopped_killed(n, 1.0)?),
    ])
}

type Check = Box<dyn Fn() -> Result<Vec<ComparisonReport>> + Send + Sync>;

fn checks_for(criterion: Criterion, cfg: &SuiteConfig) -> Result<Vec<(String, Check)>> {
    let mut out: Vec<(String, Check)> = Vec::new();
    let tol = cfg.tol;
    let oracle = cfg.oracle;
    match criterion {
        Criterion::Laplace => {
            for &n in &cfg.edge_counts {
                for (name, params) in kind_matrix(n)? {
                    let id = format!("laplace.{name}.n{n}");
                    let id2 = id.clone();
                    out.push((
                        id,
                        Box::new(move || {
                            let r = analytic::laplace_consistency(
                                &id2,
                                &params,
                                &oracle,
                                &[0.25, 0.5, 1.0, 2.0],
                                &analytic::standard_pairs(n),
                                tol.laplace_abs,
                            )?;
                            Ok(vec![r])
                        }),
                    ));
                }
            }
        }
        Criterion::ChapmanKolmogorov => {
            for &n in &cfg.edge_counts {
                for (name, params) in kind_matrix(n)? {
                    let id = format!("chapman.{name}.n{n}");
                    let id2 = id.clone();
                    let t = if name == "walsh" { tol.chapman_rel_walsh } else { tol.chapman_rel };
                    out.push((
                        id,
                        Box::new(move || {
                            let r = analytic::chapman_kolmogorov(
                                &id2,
                                &params,
                                &oracle,
                                &[(0.5, 0.5), (0.3, 0.7)],
                                &analytic::standard_pairs(n),
                                t,
                            )?;
                            Ok(vec![r])
                        }),
                    ));
                }
            }
        }
        Criterion::Boundary => {
            for &n in &cfg.edge_counts {
                for (name, params) in kind_matrix(n)? {
                    for (fname, f) in analytic::boundary_test_functions(n) {
                        for lambda in [0.5, 2.0] {
                            let id = format!("boundary.{name}.n{n}.{fname}.l{lambda}");
                            let id2 = id.clone();
                            let (params, f) = (params.clone(), f.clone());
                            out.push((
                                id,
                                Box::new(move || {
                                    let r = if params.kind() == crate::graph::ProcessKind::StoppedKilled {
                                        analytic::stopped_killed_identity(&id2, &params, lambda, &f, tol.stopped_identity)?
                                    } else {
                                        analytic::boundary_report(&id2, &params, lambda, &f, 1e-4, tol.boundary_rel)?
                                    };
                                    Ok(vec![r])
                                }),
                            ));
                        }
                    }
                }
            }
        }
        Criterion::Scattering => {
            let seed = cfg.seed;
            out.push(("scattering".into(), Box::new(move || analytic::scattering_checks(seed, &tol.scattering))));
        }
        Criterion::ExactSamplers => {
            let (seed, n) = (cfg.seed, cfg.n_exact);
            let from = GraphPoint::Interior { edge: 1, x: 0.5 };
            for (name, params) in [
                ("walsh", BoundaryParams::walsh(&[0.5, 0.5])?),
                ("elastic", BoundaryParams::elastic(&[0.5, 0.5], 1.0)?),
                ("stopped", BoundaryParams::stopped_killed(2, 1.0)?),
            ] {
                let id = format!("sampler.endpoint.{name}");
                let id2 = id.clone();
                out.push((
                    id,
                    Box::new(move || {
                        Ok(vec![monte_carlo::endpoint_law_check(&id2, &params, &oracle, from, 1.0, n, seed, tol.ks_alpha)?])
                    }),
                ));
            }
            out.push((
                "sampler.hitting".into(),
                Box::new(move || monte_carlo::hitting_checks(&BoundaryParams::walsh(&[0.5, 0.5])?, 0.1, n, seed, tol.ks_alpha)),
            ));
            out.push(("sampler.lifetime".into(), Box::new(move || monte_carlo::lifetime_checks(1.0, 2.0, &[0.5, 1.0], n, seed))));
        }
        Criterion::StickyConvergence => {
            let sc = StickyCheckConfig {
                n_paths: cfg.n_sticky,
                max_step: cfg.max_step,
                seed: cfg.seed,
                alpha: tol.ks_alpha,
                budget: tol.sticky_budget,
            };
            let (seed, n) = (cfg.seed, cfg.n_sticky);
            out.push(("sticky".into(), Box::new(move || monte_carlo::sticky_checks(&sc, &oracle))));
            out.push((
                "sticky.hitting".into(),
                Box::new(move || {
                    let reports = monte_carlo::hitting_checks(&BoundaryParams::sticky(&[0.5, 0.5], 2.0)?, 0.1, n, seed, tol.ks_alpha)?;
                    Ok(reports.into_iter().filter(|r| r.id.starts_with("sticky")).collect())
                }),
            ));
        }
        Criterion::Limits => {
            out.push(("limits".into(), Box::new(move || analytic::limit_degeneracies(tol.limits))));
            out.push(("limits.half_line".into(), Box::new(move || Ok(vec![analytic::half_line_classics(tol.limits)?]))));
        }
    }
    Ok(out)
}

fn selected(id: &str, only: &Option<String>) -> bool {
    only.as_deref().is_none_or(|o| id.contains(o) || o.contains(id))
}

/// Runs the checks of one criterion, honoring `cfg.only`.
pub fn run_criterion(criterion: Criterion, cfg: &SuiteConfig) -> Vec<ComparisonReport> {
    let checks = match checks_for(criterion, cfg) {
        Ok(c) => c,
        Err(e) => return vec![ComparisonReport::failed(criterion.prefix(), e)],
    };
    let mut reports: Vec<ComparisonReport> = checks
        .into_par_iter()
        .filter(|(id, _)| selected(id, &cfg.only))
        .flat_map_iter(|(id, check)| match check() {
            Ok(rs) => rs,
            Err(e) => vec![ComparisonReport::failed(&id, e)],
        })
        .filter(|r| selected(&r.id, &cfg.only))
        .collect();
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    reports
}

/// Every criterion in order; a suite passes iff every report passes.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<ComparisonReport> {
    let mut all: Vec<ComparisonReport> = Criterion::ALL.iter().flat_map(|&c| run_criterion(c, cfg)).collect();
    all.sort_by(|a, b| a.id.cmp(&b.id));
    all
}

pub fn all_pass(reports: &[ComparisonReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.pass)
}
