//! Deterministic analytic-versus-analytic checks.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::graph::{BoundaryParams, EdgeQuadrature, GraphFunction, GraphPoint};
use crate::kernels::{gauss, g_0gamma, g_beta0, g_betagamma, transition_density, vertex_atom, Target, GAUSS_REACH};
use crate::quad::{integrate, integrate_to_infinity, integrate_with_breaks, Tolerance};
use crate::resolvents::{apply_resolvent, boundary_residual, resolvent_kernel, ResolventQuery};
use crate::scattering::{
    bound_state, recover_params_from_s, s_at_energy, s_closed_form, s_generic_at_lambda, s_walsh_properties, time_delay,
    time_delay_numeric,
};

use super::oracle::Oracle;
use super::ComparisonReport;

const OUTER_TOL: Tolerance = Tolerance::new(1e-12, 1e-11);

/// Laplace-transform tail beyond `T` for a kernel bounded by `3(2πt)^{-1/2} + 1`.
pub fn laplace_tail_bound(lambda: f64, horizon: f64) -> f64 {
    (-lambda * horizon).exp() * (3.0 / (2.0 * std::f64::consts::PI * horizon).sqrt() + 1.0) / lambda
}

/// Smallest horizon whose tail bound is below `eps`.
pub fn laplace_horizon(lambda: f64, eps: f64) -> f64 {
    let mut t = (1.0f64 / (lambda * eps)).ln().max(1.0) / lambda;
    while laplace_tail_bound(lambda, t) > eps {
        t *= 1.25;
    }
    t
}

/// `∫₀^T e^{−λt} k(t) dt` with `t = s²`, returned with the analytic tail bound.
pub fn laplace_numeric(
    params: &BoundaryParams,
    oracle: &Oracle,
    lambda: f64,
    from: GraphPoint,
    to: Target,
    tail_eps: f64,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return domain("λ must be positive");
    }
    let horizon = laplace_horizon(lambda, tail_eps);
    let kernel = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let v = match to {
            Target::Atom => oracle.atom(params, t, from),
            Target::Point(GraphPoint::Vertex) => Ok(0.0),
            Target::Point(p) => oracle.density(params, t, from, p),
        };
        v.unwrap_or(f64::NAN)
    };
    let value = integrate(|s| 2.0 * s * (-lambda * s * s).exp() * kernel(s * s), 0.0, horizon.sqrt(), OUTER_TOL)?;
    Ok((value, laplace_tail_bound(lambda, horizon)))
}

/// Largest `|∫ e^{−λt} p dt − r_λ|` over `λ` and point pairs; the tail bound must stay below `tol/10`.
pub fn laplace_consistency(
    id: &str,
    params: &BoundaryParams,
    oracle: &Oracle,
    lambdas: &[f64],
    pairs: &[(GraphPoint, Target)],
    tol: f64,
) -> Result<ComparisonReport> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for &lambda in lambdas {
        for &(from, to) in pairs {
            let (num, tail) = laplace_numeric(params, oracle, lambda, from, to, 0.01 * tol)?;
            if tail > 0.1 * tol {
                return Err(Error::Quadrature { estimate: tail, tolerance: 0.1 * tol });
            }
            let r = resolvent_kernel(params, &ResolventQuery { lambda, from, to })?;
            let analytic = match to {
                Target::Atom => r.atom,
                Target::Point(_) => r.density,
            };
            let err = (num - analytic).abs();
            if !(err <= worst) {
                worst = err;
                worst_at = format!("λ={lambda} {from}→{to}");
            }
        }
    }
    Ok(ComparisonReport::at_most(id, worst, tol).with_detail(worst_at))
}

/// Point pairs on `n` edges covering interior, vertex and atom channels.
pub fn standard_pairs(n: usize) -> Vec<(GraphPoint, Target)> {
    let p = |k: usize, x: f64| GraphPoint::Interior { edge: k, x };
    vec![
        (p(1, 1.0), Target::Point(p(1, 1.0))),
        (p(1, 0.5), Target::Point(p(n, 1.5))),
        (GraphPoint::Vertex, Target::Point(p(1, 0.7))),
        (p(n, 2.0), Target::Point(p(1, 0.3))),
        (p(1, 1.0), Target::Atom),
        (GraphPoint::Vertex, Target::Atom),
    ]
}

fn kernel_value(params: &BoundaryParams, oracle: &Oracle, t: f64, from: GraphPoint, to: Target) -> Result<f64> {
    match to {
        Target::Atom => oracle.atom(params, t, from),
        Target::Point(GraphPoint::Vertex) => Ok(0.0),
        Target::Point(p) => oracle.density(params, t, from, p),
    }
}

/// `p(s+t)` against `∫ p(s) p(t)` over the edges plus the atom term.
pub fn chapman_kolmogorov_error(
    params: &BoundaryParams,
    oracle: &Oracle,
    s: f64,
    t: f64,
    from: GraphPoint,
    to: Target,
) -> Result<f64> {
    if !(s > 0.0 && t > 0.0) {
        return domain("need s, t > 0");
    }
    let direct = kernel_value(params, oracle, s + t, from, to)?;
    let mut composed = oracle.atom(params, s, from)? * kernel_value(params, oracle, t, GraphPoint::Vertex, to)?;
    let d_from = from.dist_to_vertex()?;
    let d_to = match to {
        Target::Point(p) if !p.is_cemetery() => p.dist_to_vertex()?,
        _ => 0.0,
    };
    let upper = d_from.max(d_to) + (GAUSS_REACH * s.max(t)).sqrt();
    for m in 1..=params.n() {
        let f = |z: f64| -> f64 {
            if z <= 0.0 {
                return 0.0;
            }
            let mid = GraphPoint::Interior { edge: m, x: z };
            let a = oracle.density(params, s, from, mid);
            let b = kernel_value(params, oracle, t, mid, to);
            match (a, b) {
                (Ok(a), Ok(b)) => a * b,
                _ => f64::NAN,
            }
        };
        composed += integrate_with_breaks(f, 0.0, upper, &[d_from, d_to], OUTER_TOL)?;
    }
    if direct == 0.0 {
        return Ok(composed.abs());
    }
    Ok(((composed - direct) / direct).abs())
}

pub fn chapman_kolmogorov(
    id: &str,
    params: &BoundaryParams,
    oracle: &Oracle,
    times: &[(f64, f64)],
    pairs: &[(GraphPoint, Target)],
    tol: f64,
) -> Result<ComparisonReport> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for &(s, t) in times {
        for &(from, to) in pairs {
            let e = chapman_kolmogorov_error(params, oracle, s, t, from, to)?;
            if !(e <= worst) {
                worst = e;
                worst_at = format!("s={s} t={t} {from}→{to}");
            }
        }
    }
    Ok(ComparisonReport::at_most(id, worst, tol).with_detail(worst_at))
}

/// Smallest finite-difference step accepted before cancellation dominates.
pub const MIN_FD_STEP: f64 = 1e-6;

/// Relative boundary residual of `R_λ f`: `|a u + (c/2) u'' − Σ b_k u'_k|` over `|u(v)| + Σ|u'_k| + |u''(v)|`.
pub fn boundary_report(
    id: &str,
    params: &BoundaryParams,
    lambda: f64,
    f: &GraphFunction,
    h: f64,
    tol: f64,
) -> Result<ComparisonReport> {
    if h < MIN_FD_STEP {
        return Err(Error::Diagnostics(format!("finite-difference step {h} is below {MIN_FD_STEP}")));
    }
    let r = boundary_residual(params, lambda, f, h, &EdgeQuadrature::default())?;
    Ok(ComparisonReport::at_most(id, r.relative(), tol).with_detail(format!("residual={:.3e} u(v)={:.6e}", r.residual, r.value)))
}

/// `|(λ + β) R_λ f(v) − f(v)| / |f(v)|` for the stopped-and-killed process.
pub fn stopped_killed_identity(id: &str, params: &BoundaryParams, lambda: f64, f: &GraphFunction, tol: f64) -> Result<ComparisonReport> {
    let u = apply_resolvent(params, lambda, f, GraphPoint::Vertex, &EdgeQuadrature::default())?;
    let fv = f.vertex_value();
    let err = ((lambda + params.beta()) * u - fv).abs() / fv.abs().max(f64::MIN_POSITIVE);
    Ok(ComparisonReport::at_most(id, err, tol))
}

/// Continuous test functions on `n` edges: a Gaussian, a mixed exponential, a damped oscillation.
pub fn boundary_test_functions(n: usize) -> Vec<(&'static str, GraphFunction)> {
    let mixed = GraphFunction::new(
        (1..=n)
            .map(|k| {
                let k = k as f64;
                std::sync::Arc::new(move |x: f64| (1.0 + 0.3 * k * x) * (-(0.8 + 0.1 * k) * x).exp()) as crate::graph::EdgeFn
            })
            .collect(),
        1.0,
    );
    let wave = GraphFunction::new(
        (1..=n)
            .map(|k| {
                let k = k as f64;
                std::sync::Arc::new(move |x: f64| (k * x).cos() * (-x).exp()) as crate::graph::EdgeFn
            })
            .collect(),
        1.0,
    );
    vec![("gauss", GraphFunction::uniform(n, |x| (-x * x).exp())), ("mixed", mixed), ("wave", wave)]
}

fn weights(seed: u64, n: usize) -> Vec<f64> {
    let mut rs = crate::samplers::RandomStream::new(seed, n as u64);
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + rs.uniform()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Tolerances of the scattering checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringTolerances {
    pub walsh: f64,
    pub closed_form: f64,
    pub unitarity: f64,
    pub recovery: f64,
    pub time_delay: f64,
}

/// Scattering algebra: Walsh involution and determinant, closed forms, unitarity,
/// parameter recovery, bound state and time delay.
pub fn scattering_checks(seed: u64, tol: &ScatteringTolerances) -> Result<Vec<ComparisonReport>> {
    let mut out = Vec::new();
    let (mut inv, mut det) = (0.0f64, 0.0f64);
    for n in [1, 2, 3, 5] {
        let r = s_walsh_properties(&BoundaryParams::walsh(&weights(seed, n))?)?;
        inv = inv.max(r.involution_defect);
        det = det.max((r.determinant - r.expected_determinant).abs());
    }
    out.push(ComparisonReport::at_most("scattering.walsh.involution", inv, tol.walsh));
    out.push(ComparisonReport::at_most("scattering.walsh.determinant", det, tol.walsh));

    let mut cf = 0.0f64;
    let w = weights(seed, 3);
    for params in [
        BoundaryParams::walsh(&w)?,
        BoundaryParams::elastic(&w, 1.0)?,
        BoundaryParams::sticky(&w, 2.0)?,
        BoundaryParams::general(&w, 1.0, 2.0)?,
    ] {
        for lambda in [0.1, 0.5, 1.0, 4.0] {
            let a = s_closed_form(&params, lambda)?;
            let b = s_generic_at_lambda(&params, lambda)?;
            cf = cf.max(a.max_abs_diff(&b));
        }
    }
    out.push(ComparisonReport::at_most("scattering.closed_form", cf, tol.closed_form));

    let mut unit = 0.0f64;
    for n in [1, 2, 3] {
        let p = BoundaryParams::sticky(&BoundaryParams::equal_weights(n), 2.0)?;
        for e in [0.25, 1.0, 4.0, 16.0] {
            unit = unit.max(s_at_energy(&p, e)?.unitarity_defect());
        }
    }
    out.push(ComparisonReport::at_most("scattering.unitarity", unit, tol.unitarity));

    let w2 = weights(seed, 2);
    let elastic = BoundaryParams::elastic(&w2, 1.0)?;
    let samples: Vec<(f64, DMatrix<f64>)> = [1e3, 1e4, 1e-6, 1e-7, 1e-8]
        .iter()
        .map(|&l| Ok((l, s_closed_form(&elastic, l)?.real(0.0)?)))
        .collect::<Result<_>>()?;
    let rec = recover_params_from_s(&samples, tol.recovery)?;
    let rec_err = rec.w.iter().zip(&w2).map(|(a, b)| (a - b).abs()).fold((rec.beta - 1.0).abs(), f64::max);
    out.push(ComparisonReport::at_most("scattering.recovery", rec_err, tol.recovery));

    let mut bound = 0.0f64;
    for (gamma, n) in [(2.0, 2), (0.5, 3), (4.0, 1)] {
        let b = bound_state(gamma, n)?;
        bound = bound.max((b.energy + 4.0 / (gamma * gamma)).abs()).max((b.norm_squared()? - 1.0).abs());
    }
    out.push(ComparisonReport::at_most("scattering.bound_state", bound, tol.closed_form));

    let mut delay = 0.0f64;
    for n in [2, 3] {
        let p = BoundaryParams::sticky(&BoundaryParams::equal_weights(n), 2.0)?;
        for k in [0.3, 1.0, 2.5] {
            let num = time_delay_numeric(&p, k)?;
            let cf = time_delay(2.0, n, k)?;
            delay = delay.max((num.entries - cf.entries).amax());
        }
    }
    out.push(ComparisonReport::at_most("scattering.time_delay", delay, tol.time_delay));
    Ok(out)
}

/// Errors `|f(p_j) − f(0)|` along `p_j = p₀ 2^{−j}`, then at the collapse point itself.
///
/// Passes when the final error is below `tol` and no halving increases the
/// error by more than `floor`, the accuracy of the quadrature-based kernels.
fn collapse(id: &str, start: f64, halvings: u32, tol: f64, floor: f64, err: impl Fn(f64) -> Result<f64>) -> Result<ComparisonReport> {
    let mut errs = Vec::new();
    for j in 0..=halvings {
        errs.push(err(start * 0.5f64.powi(j as i32))?);
    }
    let monotone = errs.windows(2).all(|w| w[1] <= w[0] + floor);
    let at_collapse = err(0.0)?.max(*errs.last().unwrap());
    let stat = if monotone { at_collapse } else { f64::INFINITY };
    Ok(ComparisonReport::at_most(id, stat, tol).with_detail(format!(
        "first={:.3e} last={:.3e} monotone={monotone}",
        errs[0],
        errs.last().unwrap()
    )))
}

/// First parameter of every halving sequence, inside the regime where the error is linear.
pub const COLLAPSE_START: f64 = 0.25;

const GRID: [(f64, f64); 4] = [(0.5, 0.0), (1.0, 0.3), (1.0, 1.0), (2.0, 2.5)];

fn grid_max(f: impl Fn(f64, f64) -> Result<f64>) -> Result<f64> {
    GRID.iter().try_fold(0.0f64, |m, &(t, x)| Ok(m.max(f(t, x)?)))
}

/// Quadrature floor for the `g_{β,γ}` family.
pub const QUADRATURE_FLOOR: f64 = 1e-11;

/// Parameter collapses of the vertex kernels and of the process kinds.
pub fn limit_degeneracies(tol: f64) -> Result<Vec<ComparisonReport>> {
    let mut out = Vec::new();
    out.push(collapse("limits.g0gamma_to_g", COLLAPSE_START, 30, tol, 0.0, |gamma| {
        grid_max(|t, x| Ok((g_0gamma(t, x, gamma)? - gauss(t, x)?).abs()))
    })?);
    out.push(collapse("limits.gbetagamma_to_gbeta0", COLLAPSE_START, 30, tol, QUADRATURE_FLOOR, |gamma| {
        grid_max(|t, x| {
            let v = if gamma > 0.0 { g_betagamma(t, x, 1.0, gamma)? } else { g_beta0(t, x, 1.0)? };
            Ok((v - g_beta0(t, x, 1.0)?).abs())
        })
    })?);
    out.push(collapse("limits.gbetagamma_to_g0gamma", COLLAPSE_START, 30, tol, QUADRATURE_FLOOR, |beta| {
        grid_max(|t, x| Ok((g_betagamma(t, x, beta, 2.0)? - g_0gamma(t, x, 2.0)?).abs()))
    })?);
    out.push(collapse("limits.gbeta0_to_g", COLLAPSE_START, 30, tol, 0.0, |beta| {
        grid_max(|t, x| Ok((g_beta0(t, x, beta)? - gauss(t, x)?).abs()))
    })?);

    let w = [0.3, 0.7];
    let pairs = [
        (GraphPoint::Interior { edge: 1, x: 0.4 }, GraphPoint::Interior { edge: 2, x: 1.1 }),
        (GraphPoint::Vertex, GraphPoint::Interior { edge: 1, x: 0.6 }),
        (GraphPoint::Interior { edge: 2, x: 1.0 }, GraphPoint::Interior { edge: 2, x: 0.8 }),
    ];
    let kernel_gap = |a: &BoundaryParams, b: &BoundaryParams| -> Result<f64> {
        let mut m = 0.0f64;
        for t in [0.5, 1.0, 2.0] {
            for &(from, to) in &pairs {
                m = m.max((transition_density(a, t, from, to)? - transition_density(b, t, from, to)?).abs());
                m = m.max((vertex_atom(a, t, from)? - vertex_atom(b, t, from)?).abs());
            }
        }
        Ok(m)
    };
    let sticky = BoundaryParams::sticky(&w, 2.0)?;
    out.push(collapse("limits.general_to_sticky", COLLAPSE_START, 30, tol, QUADRATURE_FLOOR, |beta| {
        kernel_gap(&BoundaryParams::general(&w, beta, 2.0)?, &sticky)
    })?);
    let elastic = BoundaryParams::elastic(&w, 1.0)?;
    out.push(collapse("limits.general_to_elastic", COLLAPSE_START, 30, tol, QUADRATURE_FLOOR, |gamma| {
        kernel_gap(&BoundaryParams::general(&w, 1.0, gamma)?, &elastic)
    })?);
    let walsh = BoundaryParams::walsh(&w)?;
    out.push(collapse("limits.elastic_to_walsh", COLLAPSE_START, 30, tol, 0.0, |beta| {
        kernel_gap(&BoundaryParams::elastic(&w, beta)?, &walsh)
    })?);
    out.push(collapse("limits.sticky_to_walsh", COLLAPSE_START, 30, tol, 0.0, |gamma| {
        kernel_gap(&BoundaryParams::sticky(&w, gamma)?, &walsh)
    })?);
    Ok(out)
}

/// `∫₀^∞ r e^{−r z} g(t, a + z) dz` by quadrature, independent of the erfc closed forms.
fn exponential_smoothing(t: f64, a: f64, r: f64) -> Result<f64> {
    integrate_to_infinity(|z| r * (-r * z).exp() * gauss(t, a + z).unwrap_or(f64::NAN), 0.0, Tolerance::new(1e-15, 1e-13))
}

/// One-edge kernels against the classical half-line formulas.
///
/// Reflected: `g(x−y) + g(x+y)`. Elastic with rate `β`:
/// `g(x−y) + g(x+y) − 2β∫₀^∞ e^{−βz} g(x+y+z) dz`. Sticky with `γ`:
/// density `g(x−y) − g(x+y) + (4/γ)∫₀^∞ e^{−2z/γ} g(x+y+z) dz`, atom
/// `2∫₀^∞ e^{−2z/γ} g(x+z) dz`.
pub fn half_line_classics(tol: f64) -> Result<ComparisonReport> {
    let mut worst = 0.0f64;
    let pt = |x: f64| GraphPoint::Interior { edge: 1, x };
    for &(t, x, y) in &[(0.5, 0.3, 0.9), (1.0, 1.0, 1.0), (2.0, 0.1, 2.5), (1.0, 2.0, 0.2)] {
        let (gm, gp) = (gauss(t, x - y)?, gauss(t, x + y)?);
        let reflected = transition_density(&BoundaryParams::walsh(&[1.0])?, t, pt(x), pt(y))?;
        worst = worst.max((reflected - (gm + gp)).abs());

        let beta = 1.3;
        let elastic = transition_density(&BoundaryParams::elastic(&[1.0], beta)?, t, pt(x), pt(y))?;
        let classic = gm + gp - 2.0 * exponential_smoothing(t, x + y, beta)?;
        worst = worst.max((elastic - classic).abs());

        let gamma = 0.8;
        let p = BoundaryParams::sticky(&[1.0], gamma)?;
        let sticky = transition_density(&p, t, pt(x), pt(y))?;
        let classic = gm - gp + 2.0 * exponential_smoothing(t, x + y, 2.0 / gamma)?;
        worst = worst.max((sticky - classic).abs());
        let atom = vertex_atom(&p, t, pt(x))?;
        let classic_atom = gamma * exponential_smoothing(t, x, 2.0 / gamma)?;
        worst = worst.max((atom - classic_atom).abs());
    }
    Ok(ComparisonReport::at_most("limits.half_line", worst, tol))
}
