//! Monte Carlo checks of the samplers and simulators against analytic values.

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{BoundaryParams, GraphPoint};
use crate::kernels::vertex_atom;
use crate::resolvents::{e_lambda, rho};
use crate::samplers::{draw_first_hit_time, draw_lifetime, RandomStream};
use crate::sim::{mc_hitting_time_moments, simulate_endpoints, EndpointSample, SimConfig};

use super::ks::{endpoint_law, ks_compare, ks_two_sample_distance};
use super::oracle::Oracle;
use super::ComparisonReport;

/// `|mean − want| / (3σ + budget)`; passes at most one.
pub fn moment_report(id: &str, mean: f64, se: f64, want: f64, budget: f64, n: usize, seed: u64) -> ComparisonReport {
    let stat = (mean - want).abs() / (3.0 * se + budget);
    ComparisonReport::at_most(id, stat, 1.0)
        .with_n(n)
        .with_seed(seed)
        .with_detail(format!("mean={mean:.6e} want={want:.6e} se={se:.2e} budget={budget:.1e}"))
}

fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut s, mut s2) = (0usize, 0.0f64, 0.0f64);
    for x in xs {
        n += 1;
        s += x;
        s2 += x * x;
    }
    let nf = n as f64;
    let m = s / nf;
    let var = (s2 / nf - m * m).max(0.0) * nf / (nf - 1.0).max(1.0);
    (m, (var / nf).sqrt(), n)
}

/// Edge-stratified KS of an exact endpoint sampler against the analytic kernel.
#[allow(clippy::too_many_arguments)]
pub fn endpoint_law_check(
    id: &str,
    params: &BoundaryParams,
    oracle: &Oracle,
    from: GraphPoint,
    t: f64,
    n_paths: usize,
    seed: u64,
    alpha: f64,
) -> Result<ComparisonReport> {
    let cfg = SimConfig::new(t, t, n_paths, seed)?;
    let samples = simulate_endpoints(params, from, &cfg)?;
    Ok(endpoint_law(id, params, oracle, t, from, &samples, alpha)?.with_seed(seed))
}

/// Exit time of the `ε`-ball and the local time at exit, from the vertex.
pub fn hitting_checks(params: &BoundaryParams, epsilon: f64, n: usize, seed: u64, alpha: f64) -> Result<Vec<ComparisonReport>> {
    let r = mc_hitting_time_moments(params, epsilon, n, seed)?;
    let gamma = params.gamma();
    let (m, se) = r.walsh_mean();
    let mut out = vec![moment_report("sampler.hitting.walsh_mean", m, se, epsilon * epsilon, 0.0, n, seed)];
    if gamma > 0.0 {
        let (m, se) = r.sticky_mean();
        out.push(moment_report(
            "sticky.hitting.mean",
            m,
            se,
            epsilon * epsilon + gamma * epsilon,
            r.grid_step,
            n,
            seed,
        ));
    }
    let lt = ks_compare("sampler.hitting.local_time_exponential", &r.local_times, |y| 1.0 - (-y / epsilon).exp(), alpha)?;
    out.push(lt.with_seed(seed));
    Ok(out)
}

/// `E e^{−λζ}` from the vertex equals `βρ(λ)`, and from `ξ` equals `e_λ(ξ)βρ(λ)`.
pub fn lifetime_checks(beta: f64, gamma: f64, lambdas: &[f64], n: usize, seed: u64) -> Result<Vec<ComparisonReport>> {
    let xi = GraphPoint::Interior { edge: 1, x: 0.5 };
    let mut out = Vec::new();
    for (j, &lambda) in lambdas.iter().enumerate() {
        let want = beta * rho(lambda, beta, gamma)?;
        let (m, se, _) = mean_se(
            (0..n as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rs = RandomStream::new(seed, i + ((j as u64) << 40));
                    (-lambda * draw_lifetime(beta, gamma, &mut rs).0).exp()
                })
                .collect::<Vec<_>>()
                .into_iter(),
        );
        out.push(moment_report(&format!("sampler.lifetime.vertex.l{lambda}"), m, se, want, 0.0, n, seed));
        let want = e_lambda(xi, lambda)? * want;
        let (m, se, _) = mean_se(
            (0..n as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rs = RandomStream::new(seed ^ 0x5eed, i + ((j as u64) << 40));
                    let hit = draw_first_hit_time(0.5, &mut rs);
                    (-lambda * (hit + draw_lifetime(beta, gamma, &mut rs).0)).exp()
                })
                .collect::<Vec<_>>()
                .into_iter(),
        );
        out.push(moment_report(&format!("sampler.lifetime.interior.l{lambda}"), m, se, want, 0.0, n, seed));
    }
    Ok(out)
}

/// Scalar summary of an endpoint for two-sample comparisons: distance to the
/// vertex signed by edge parity, with the cemetery at `+∞`.
fn endpoint_coordinate(s: &EndpointSample) -> f64 {
    match s.position {
        GraphPoint::Vertex => 0.0,
        GraphPoint::Interior { edge, x } => x + 1e3 * edge as f64,
        GraphPoint::Cemetery => f64::INFINITY,
    }
}

/// Settings of the sticky and general simulator checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickyCheckConfig {
    pub n_paths: usize,
    pub max_step: f64,
    pub seed: u64,
    pub alpha: f64,
    /// Discretization budget added to `3σ` for occupation and survival checks.
    pub budget: f64,
}

/// Vertex occupation, survival, endpoint law and `Δmax`-halving for the time-changed simulators.
pub fn sticky_checks(cfg: &StickyCheckConfig, oracle: &Oracle) -> Result<Vec<ComparisonReport>> {
    let mut out = Vec::new();
    let w = [0.5, 0.5];
    let sticky = BoundaryParams::sticky(&w, 2.0)?;
    let run = |params: &BoundaryParams, max_step: f64, seed: u64| -> Result<Vec<EndpointSample>> {
        simulate_endpoints(params, GraphPoint::Vertex, &SimConfig::new(max_step, 1.0, cfg.n_paths, seed)?)
    };

    let base = run(&sticky, cfg.max_step, cfg.seed)?;
    let (m, se, n) = mean_se(base.iter().map(|s| if s.position.is_vertex() { 1.0 } else { 0.0 }));
    let atom = vertex_atom(&sticky, 1.0, GraphPoint::Vertex)?;
    out.push(moment_report("sticky.atom_occupation", m, se, atom, cfg.budget, n, cfg.seed));
    out.push(endpoint_law("sticky.endpoint_law", &sticky, oracle, 1.0, GraphPoint::Vertex, &base, cfg.alpha)?.with_seed(cfg.seed));

    let general = BoundaryParams::general(&[0.6, 0.4], 1.0, 2.0)?;
    let g = run(&general, cfg.max_step, cfg.seed)?;
    let (m, se, n) = mean_se(g.iter().map(|s| if s.survived { 1.0 } else { 0.0 }));
    let mass: f64 = (1..=2).map(|k| oracle.edge_cdf(&general, 1.0, GraphPoint::Vertex, k, f64::INFINITY)).sum::<Result<f64>>()?;
    let survival = mass + oracle.atom(&general, 1.0, GraphPoint::Vertex)?;
    out.push(moment_report("sticky.general_survival", m, se, survival, cfg.budget, n, cfg.seed));

    // Three step sizes on independent streams.
    let coords = |s: &[EndpointSample]| s.iter().map(endpoint_coordinate).collect::<Vec<f64>>();
    let c1 = coords(&base);
    let c2 = coords(&run(&sticky, 0.5 * cfg.max_step, cfg.seed.wrapping_add(1))?);
    let c3 = coords(&run(&sticky, 0.25 * cfg.max_step, cfg.seed.wrapping_add(2))?);
    let d1 = ks_two_sample_distance(&c1, &c2);
    let d2 = ks_two_sample_distance(&c2, &c3);
    let noise = 1.95 * (2.0 / cfg.n_paths as f64).sqrt();
    let stat = d2 / (0.5 * d1 + noise);
    out.push(
        ComparisonReport::at_most("sticky.step_halving", stat, 1.0)
            .with_n(cfg.n_paths)
            .with_seed(cfg.seed)
            .with_detail(format!("d(Δ,Δ/2)={d1:.3e} d(Δ/2,Δ/4)={d2:.3e} noise={noise:.3e}")),
    );
    Ok(out)
}
