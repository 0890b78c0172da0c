//! Time-domain densities and transition kernels.
//!
//! Every process kernel has the form
//!
//! ```text
//! p(t, ξ, dη) = [p^D(t, ξ, η) + 2 w_m G(t, d_v(ξ, η))] dη + atom(t, ξ) ε_v(dη)
//! ```
//!
//! where `p^D` is the Dirichlet kernel, `η` lies on edge `m`, and the vertex
//! kernel `G` is `g`, `g_{β,0}`, `g_{0,γ}` or `g_{β,γ}` depending on the kind.
//! The stopped-and-killed process has no `G` term and a vertex atom fed by the
//! first hitting time of `v`.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::graph::{BoundaryParams, GraphPoint, ProcessKind};
use crate::quad::{self, Tolerance};
use crate::special::{erf, erfc, erfcx};

/// Tolerance for the convolution integral defining `g_{β,γ}`.
pub const G_BETA_GAMMA_TOL: Tolerance = Tolerance::new(1e-13, 1e-12);

/// Tolerance for the remaining one-dimensional kernel integrals.
pub const KERNEL_TOL: Tolerance = Tolerance::new(1e-13, 1e-12);

/// Beyond `x² > 1500 t` every Gaussian factor below underflows relative to unity.
pub const GAUSS_REACH: f64 = 1500.0;

#[inline]
pub(crate) fn g(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

#[inline]
pub(crate) fn h(x: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    x * (-x * x / (2.0 * s)).exp() / (2.0 * PI * s * s * s).sqrt()
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and positive, got {t}"));
    }
    Ok(())
}

/// The Gauss kernel `g(t, x) = (2πt)^{-1/2} exp(−x²/2t)`.
pub fn gauss(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(g(t, x))
}

/// Density of the first hitting time of `v` from distance `x`: `x (2πs³)^{-1/2} exp(−x²/2s)`.
pub fn hitting_density(x: f64, s: f64) -> Result<f64> {
    if !(x > 0.0 && s > 0.0) {
        return domain("hitting density needs x > 0 and s > 0");
    }
    Ok(h(x, s))
}

/// Joint density of `(|B_t|, L_t)` for Brownian motion started at 0.
pub fn local_time_joint_density(t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    if !(x >= 0.0 && y >= 0.0) {
        return domain("local time joint density needs x, y ≥ 0");
    }
    let s = x + y;
    Ok(2.0 * s * (-s * s / (2.0 * t)).exp() / (2.0 * PI * t * t * t).sqrt())
}

/// Density at `l` of the inverse local time `K_r + γ r`; zero for `l ≤ γ r`.
pub fn inverse_local_time_density(r: f64, l: f64, gamma: f64) -> Result<f64> {
    if !(r > 0.0 && gamma >= 0.0) {
        return domain("inverse local time density needs r > 0 and γ ≥ 0");
    }
    let sigma = l - gamma * r;
    if sigma <= 0.0 {
        return Ok(0.0);
    }
    Ok(r / sigma * g(sigma, r))
}

/// Parameters of the vertex kernel family `g_{β,γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErfKernelParams {
    pub beta: f64,
    pub gamma: f64,
}

impl ErfKernelParams {
    pub fn of(params: &BoundaryParams) -> Self {
        Self { beta: params.beta(), gamma: params.gamma() }
    }
}

pub(crate) fn g_beta0_raw(t: f64, x: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return g(t, x);
    }
    let u = x / (2.0 * t).sqrt() + beta * (t / 2.0).sqrt();
    g(t, x) - 0.5 * beta * (-x * x / (2.0 * t)).exp() * erfcx(u)
}

pub(crate) fn g_0gamma_raw(t: f64, x: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return g(t, x);
    }
    let u = x / (2.0 * t).sqrt() + (2.0 * t).sqrt() / gamma;
    (-x * x / (2.0 * t)).exp() * erfcx(u) / gamma
}

/// `g_{β,0}(t, x) = g(t, x) − (β/2) e^{βx+β²t/2} erfc(x/√(2t) + β√(t/2))`.
///
/// Evaluated as `g − (β/2) e^{−x²/2t} erfcx(u)`, which never overflows.
pub fn g_beta0(t: f64, x: f64, beta: f64) -> Result<f64> {
    check_time(t)?;
    if !(x >= 0.0 && beta >= 0.0) {
        return domain("g_beta0 needs x ≥ 0 and β ≥ 0");
    }
    Ok(g_beta0_raw(t, x, beta))
}

/// `g_{0,γ}(t, x) = γ^{-1} e^{2x/γ + 2t/γ²} erfc(x/√(2t) + √(2t)/γ)`; `γ = 0` gives `g`.
pub fn g_0gamma(t: f64, x: f64, gamma: f64) -> Result<f64> {
    check_time(t)?;
    if !(x >= 0.0 && gamma >= 0.0) {
        return domain("g_0gamma needs x ≥ 0 and γ ≥ 0");
    }
    Ok(g_0gamma_raw(t, x, gamma))
}

pub(crate) fn g_betagamma_raw(t: f64, x: f64, beta: f64, gamma: f64) -> Result<f64> {
    let reach = (GAUSS_REACH * t).sqrt();
    if x >= reach {
        return Ok(0.0);
    }
    // Local-time variable l = s/γ: the integrand is h(x + l, t − γl) e^{−βl} on [0, t/γ].
    let l_end = t / gamma;
    let l_max = l_end.min(reach - x);
    if l_max < 0.5 * l_end {
        let f = |l: f64| h(x + l, t - gamma * l) * (-beta * l).exp();
        return quad::integrate(f, 0.0, l_max, G_BETA_GAMMA_TOL);
    }
    // s = t(1 − r²) flattens the approach to s = t.
    let r_min = (1.0 - l_max / l_end).max(0.0).sqrt();
    let f = |r: f64| {
        let l = l_end * (1.0 - r * r);
        h(x + l, t * r * r) * (-beta * l).exp() * 2.0 * l_end * r
    };
    quad::integrate(f, r_min, 1.0, G_BETA_GAMMA_TOL)
}

/// `g_{β,γ}(t, x) = γ^{-2}(2π)^{-1/2} ∫₀^t (s+γx)(t−s)^{-3/2} exp(−(s+γx)²/(2γ²(t−s))) e^{−βs/γ} ds`.
///
/// Requires `γ > 0`; `β = 0` is allowed and reproduces `g_{0,γ}`.
pub fn g_betagamma(t: f64, x: f64, beta: f64, gamma: f64) -> Result<f64> {
    check_time(t)?;
    if !(x >= 0.0 && beta >= 0.0 && gamma > 0.0) {
        return domain("g_betagamma needs x ≥ 0, β ≥ 0 and γ > 0");
    }
    g_betagamma_raw(t, x, beta, gamma)
}

/// The vertex kernel `G ∈ {g, g_{β,0}, g_{0,γ}, g_{β,γ}}` selected by which parameters vanish.
pub fn vertex_kernel(t: f64, x: f64, p: &ErfKernelParams) -> Result<f64> {
    check_time(t)?;
    if !(x >= 0.0 && p.beta >= 0.0 && p.gamma >= 0.0) {
        return domain("vertex kernel needs x, β, γ ≥ 0");
    }
    match (p.beta > 0.0, p.gamma > 0.0) {
        (false, false) => Ok(g(t, x)),
        (true, false) => Ok(g_beta0_raw(t, x, p.beta)),
        (false, true) => Ok(g_0gamma_raw(t, x, p.gamma)),
        (true, true) => g_betagamma_raw(t, x, p.beta, p.gamma),
    }
}

/// `∫_a^∞ G(t, z) dz`, in closed form except for `g_{β,γ}`.
pub fn vertex_kernel_tail(t: f64, a: f64, p: &ErfKernelParams) -> Result<f64> {
    check_time(t)?;
    let sq = (2.0 * t).sqrt();
    let e = (-a * a / (2.0 * t)).exp();
    let elastic_tail = |beta: f64| 0.5 * e * erfcx(a / sq + beta * (t / 2.0).sqrt());
    match (p.beta > 0.0, p.gamma > 0.0) {
        (false, false) => Ok(0.5 * erfc(a / sq)),
        (true, false) => Ok(elastic_tail(p.beta)),
        (false, true) => Ok(0.5 * erfc(a / sq) - elastic_tail(2.0 / p.gamma)),
        (true, true) => {
            let reach = (GAUSS_REACH * t).sqrt();
            if a >= reach {
                return Ok(0.0);
            }
            let f = |z: f64| g_betagamma_raw(t, z, p.beta, p.gamma).unwrap_or(f64::NAN);
            quad::integrate(f, a, reach, KERNEL_TOL)
        }
    }
}

/// Where the transition kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Density at a point; `Point(Vertex)` is read as the atom channel.
    Point(GraphPoint),
    /// The point mass at the vertex.
    Atom,
}

impl Target {
    fn interior(&self) -> Option<(usize, f64)> {
        match *self {
            Target::Point(GraphPoint::Interior { edge, x }) => Some((edge, x)),
            _ => None,
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Point(p) => write!(f, "{p}"),
            Target::Atom => write!(f, "atom"),
        }
    }
}

impl std::str::FromStr for Target {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "atom" {
            Ok(Target::Atom)
        } else {
            Ok(Target::Point(s.parse()?))
        }
    }
}

/// A time-`t` kernel evaluation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub t: f64,
    pub from: GraphPoint,
    pub to: Target,
}

impl KernelQuery {
    pub fn new(t: f64, from: GraphPoint, to: Target) -> Self {
        Self { t, from, to }
    }
    pub fn point(t: f64, from: GraphPoint, to: GraphPoint) -> Self {
        Self::new(t, from, Target::Point(to))
    }
    pub fn atom(t: f64, from: GraphPoint) -> Self {
        Self::new(t, from, Target::Atom)
    }
}

/// A time-`t` sub-probability: density at the target, vertex atom, killed mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub density: f64,
    pub atom: f64,
    pub defect: f64,
}

fn interior_pair(q: &KernelQuery) -> Result<(usize, f64, usize, f64)> {
    match (q.from, q.to) {
        (GraphPoint::Interior { edge: k, x }, Target::Point(GraphPoint::Interior { edge: m, x: y })) => {
            Ok((k, x, m, y))
        }
        _ => domain("free and image kernels need two interior points"),
    }
}

/// The free kernel `p = δ_km g(t, |x−y|)` and its image `p_v = δ_km g(t, x+y)`.
pub fn free_and_image_kernels(q: &KernelQuery) -> Result<(f64, f64)> {
    check_time(q.t)?;
    let (k, x, m, y) = interior_pair(q)?;
    if k != m {
        return Ok((0.0, 0.0));
    }
    Ok((g(q.t, x - y), g(q.t, x + y)))
}

/// The Dirichlet kernel `p^D = p − p_v` of Brownian motion killed at `v`.
pub fn dirichlet_kernel(q: &KernelQuery) -> Result<f64> {
    let (p, pv) = free_and_image_kernels(q)?;
    Ok(p - pv)
}

fn check_query(params: &BoundaryParams, t: f64, from: GraphPoint) -> Result<f64> {
    check_time(t)?;
    if from.is_cemetery() {
        return domain("kernels start from a graph point, not the cemetery");
    }
    params.graph().check(from)?;
    from.dist_to_vertex()
}

/// Density of `p(t, from, ·)` at the interior point `to`.
pub fn transition_density(params: &BoundaryParams, t: f64, from: GraphPoint, to: GraphPoint) -> Result<f64> {
    let d0 = check_query(params, t, from)?;
    params.graph().check(to)?;
    let GraphPoint::Interior { edge: m, x: y } = to else {
        return domain("density target must be an interior point");
    };
    let dirichlet = match from {
        GraphPoint::Interior { edge: k, x } if k == m => g(t, x - y) - g(t, x + y),
        _ => 0.0,
    };
    if params.kind() == ProcessKind::StoppedKilled {
        return Ok(dirichlet);
    }
    let wm = params.w()[m - 1];
    if wm == 0.0 {
        return Ok(dirichlet);
    }
    Ok(dirichlet + 2.0 * wm * vertex_kernel(t, d0 + y, &ErfKernelParams::of(params))?)
}

/// `∫₀^t e^{−β(t−s)} P_ξ(H_v ∈ ds)` for a start at distance `x` from the vertex.
pub fn stopped_killed_atom(beta: f64, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    if x == 0.0 {
        return Ok((-beta * t).exp());
    }
    if beta == 0.0 {
        return Ok(erfc(x / (2.0 * t).sqrt()));
    }
    quad::integrate(|s| (-beta * (t - s)).exp() * h(x, s), 0.0, t, KERNEL_TOL)
}

/// Mass of the vertex atom of `p(t, from, ·)`.
pub fn vertex_atom(params: &BoundaryParams, t: f64, from: GraphPoint) -> Result<f64> {
    let d0 = check_query(params, t, from)?;
    match params.kind() {
        ProcessKind::Walsh | ProcessKind::Elastic => Ok(0.0),
        ProcessKind::Sticky | ProcessKind::General => {
            Ok(params.gamma() * vertex_kernel(t, d0, &ErfKernelParams::of(params))?)
        }
        ProcessKind::StoppedKilled => stopped_killed_atom(params.beta(), t, d0),
    }
}

/// `Σ_m ∫₀^∞ p(t, from, (m, y)) dy` by quadrature of the density on each edge.
pub fn total_density_mass(params: &BoundaryParams, t: f64, from: GraphPoint) -> Result<f64> {
    let d0 = check_query(params, t, from)?;
    let upper = d0 + (GAUSS_REACH * t).sqrt();
    let mut total = 0.0;
    for m in 1..=params.n() {
        let on_from_edge = from.edge() == Some(m);
        if params.kind() == ProcessKind::StoppedKilled && !on_from_edge {
            continue;
        }
        let breaks: Vec<f64> = if on_from_edge { vec![d0] } else { vec![] };
        let f = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let to = GraphPoint::Interior { edge: m, x: y };
            transition_density(params, t, from, to).unwrap_or(f64::NAN)
        };
        total += quad::integrate_with_breaks(f, 0.0, upper, &breaks, KERNEL_TOL)?;
    }
    Ok(total)
}

/// Evaluates the transition kernel of the process described by `params`.
pub fn transition_kernel(params: &BoundaryParams, q: &KernelQuery) -> Result<KernelValue> {
    check_query(params, q.t, q.from)?;
    let density = match q.to {
        Target::Atom | Target::Point(GraphPoint::Vertex) => 0.0,
        Target::Point(GraphPoint::Cemetery) => return domain("the cemetery carries no density"),
        Target::Point(to) => transition_density(params, q.t, q.from, to)?,
    };
    let atom = vertex_atom(params, q.t, q.from)?;
    let mass = total_density_mass(params, q.t, q.from)?;
    let defect = (1.0 - atom - mass).clamp(0.0, 1.0);
    Ok(KernelValue { density, atom, defect })
}

/// Walsh and elastic kernels rebuilt from the first hitting time of the vertex.
///
/// The density is `δ_km g(t, |x−y|) + ∫₀^t h(x, s) K_km(t−s) ds` where
/// `K_km = (2w_m − δ_km) g(·, y)` plus, for the elastic kind, the convolution
/// of `g(·, y)` with the absolutely continuous part
/// `2w_m[−β/√(2πr) + (β²/2) e^{β²r/2} erfc(β√(r/2))]` of the scattering
/// measure. The defect is `∫₀^t h(x, s) (1 − E_v e^{−β L_{t−s}}) ds`.
pub fn kernel_via_first_passage(params: &BoundaryParams, q: &KernelQuery) -> Result<KernelValue> {
    check_query(params, q.t, q.from)?;
    let (k, x) = match q.from {
        GraphPoint::Interior { edge, x } => (edge, x),
        _ => return domain("first-passage form needs an interior start"),
    };
    let beta = match params.kind() {
        ProcessKind::Walsh => 0.0,
        ProcessKind::Elastic => params.beta(),
        _ => return domain("first-passage form is implemented for Walsh and elastic kinds"),
    };
    let t = q.t;
    let density = match q.to.interior() {
        None => 0.0,
        Some((m, y)) => {
            params.graph().check(q.to_point())?;
            let wm = params.w()[m - 1];
            let delta = if k == m { 1.0 } else { 0.0 };
            let continuous_part = |u: f64| -> f64 {
                if beta == 0.0 || u <= 0.0 {
                    return 0.0;
                }
                // r = ρ² removes the r^{-1/2} singularity.
                let f = |rho: f64| {
                    let weight = -2.0 * beta / (2.0 * PI).sqrt()
                        + beta * beta * rho * erfcx(beta * rho / std::f64::consts::SQRT_2);
                    weight * g_or_zero(u - rho * rho, y)
                };
                quad::integrate(f, 0.0, u.sqrt(), KERNEL_TOL).unwrap_or(f64::NAN)
            };
            let post_hit = |u: f64| (2.0 * wm - delta) * g_or_zero(u, y) + 2.0 * wm * continuous_part(u);
            let conv = quad::integrate(|s| h(x, s) * post_hit(t - s), 0.0, t, KERNEL_TOL)?;
            if conv.is_nan() {
                return domain("first-passage convolution failed");
            }
            delta * g(t, x - y) + conv
        }
    };
    let defect = if beta == 0.0 {
        0.0
    } else {
        let killed = |u: f64| 1.0 - erfcx(beta * (u / 2.0).sqrt());
        quad::integrate(|s| h(x, s) * killed(t - s), 0.0, t, KERNEL_TOL)?
    };
    Ok(KernelValue { density, atom: 0.0, defect })
}

impl KernelQuery {
    fn to_point(&self) -> GraphPoint {
        match self.to {
            Target::Point(p) => p,
            Target::Atom => GraphPoint::Vertex,
        }
    }
}

#[inline]
fn g_or_zero(t: f64, x: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        g(t, x)
    }
}

/// `P(H_v > t)` from distance `x`, i.e. `erf(x/√(2t))`.
pub fn survival_before_hit(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(erf(x / (2.0 * t).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(k: usize, x: f64) -> GraphPoint {
        GraphPoint::interior(k, x).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gauss_values() {
        assert!(close(gauss(1.0, 0.0).unwrap(), 0.3989423, 5e-8));
        assert!(close(gauss(1.0, 1.0).unwrap(), 0.2419707, 5e-8));
        assert!(close(gauss(1.0, 2.0).unwrap(), 0.0539910, 5e-8));
        assert!(gauss(0.0, 1.0).is_err());
    }

    #[test]
    fn free_image_and_dirichlet() {
        let (p, pv) = free_and_image_kernels(&KernelQuery::point(1.0, pt(1, 1.0), pt(1, 1.0))).unwrap();
        assert!(close(p, 0.3989423, 5e-8) && close(pv, 0.0539910, 5e-8));
        let (p, pv) = free_and_image_kernels(&KernelQuery::point(1.0, pt(1, 1.0), pt(2, 1.0))).unwrap();
        assert_eq!((p, pv), (0.0, 0.0));
        let (p, _) = free_and_image_kernels(&KernelQuery::point(0.5, pt(1, 0.3), pt(1, 0.3))).unwrap();
        assert!(close(p, 0.5641896, 5e-8));
        let d = dirichlet_kernel(&KernelQuery::point(1.0, pt(1, 1.0), pt(1, 1.0))).unwrap();
        assert!(close(d, 0.3449513, 5e-8));
        assert!(dirichlet_kernel(&KernelQuery::point(1.0, GraphPoint::Vertex, pt(1, 1.0))).is_err());
    }

    #[test]
    fn dirichlet_mass_is_survival_probability() {
        let mass = quad::integrate(
            |y| dirichlet_kernel(&KernelQuery::point(1.0, pt(1, 1.0), pt(1, y.max(1e-300)))).unwrap(),
            0.0,
            40.0,
            Tolerance::new(1e-13, 1e-13),
        )
        .unwrap();
        assert!(close(mass, 0.6826895, 5e-8));
        assert!(close(mass, survival_before_hit(1.0, 1.0).unwrap(), 1e-12));
    }

    #[test]
    fn hitting_density_values_and_laplace() {
        assert!(close(hitting_density(1.0, 1.0).unwrap(), 0.2419707, 5e-8));
        assert!(close(hitting_density(2.0, 1.0).unwrap(), 0.1079819, 5e-8));
        let lt = quad::integrate_to_infinity(|s| (-0.5 * s).exp() * h(1.0, s), 0.0, Tolerance::new(1e-13, 1e-13))
            .unwrap();
        assert!(close(lt, (-1.0f64).exp(), 1e-10));
    }

    #[test]
    fn local_time_joint_density_checks() {
        assert!(close(local_time_joint_density(1.0, 0.5, 0.5).unwrap(), 0.4839414, 5e-8));
        let tol = Tolerance::new(1e-12, 1e-12);
        let marginal = |x: f64| {
            quad::integrate_to_infinity(|y| local_time_joint_density(1.0, x, y).unwrap(), 0.0, tol).unwrap()
        };
        // x-marginal is the half-normal density 2g(1, x).
        for x in [0.0, 0.3, 1.7] {
            assert!(close(marginal(x), 2.0 * g(1.0, x), 1e-11));
        }
        let total = quad::integrate_to_infinity(marginal, 0.0, tol).unwrap();
        assert!(close(total, 1.0, 1e-10));
        let mean = quad::integrate_to_infinity(|x| x * marginal(x), 0.0, tol).unwrap();
        assert!(close(mean, 0.7978846, 5e-8));
    }

    #[test]
    fn inverse_local_time_examples() {
        assert!(close(inverse_local_time_density(1.0, 1.0, 0.0).unwrap(), 0.2419707, 5e-8));
        assert!(close(inverse_local_time_density(1.0, 3.0, 2.0).unwrap(), 0.2419707, 5e-8));
        assert_eq!(inverse_local_time_density(1.0, 1.5, 2.0).unwrap(), 0.0);
        let lt = quad::integrate(
            |l| (-0.5 * l).exp() * inverse_local_time_density(1.0, l, 2.0).unwrap(),
            2.0,
            400.0,
            Tolerance::new(1e-13, 1e-13),
        )
        .unwrap();
        assert!(close(lt, 0.1353353, 5e-8));
    }

    // Reference values from 30-digit evaluations of the erfc closed forms, confirmed
    // against the Laplace convolution g − β∫e^{−βz} g(t, x+z) dz.
    #[test]
    fn erf_kernel_values() {
        assert!(close(g_beta0(1.0, 0.0, 1.0).unwrap(), 0.1373640, 5e-8));
        assert!(close(g_beta0(1.0, 1.0, 1.0).unwrap(), 0.1400117, 5e-8));
        assert!(close(g_beta0(1.0, 1.0, 0.0).unwrap(), 0.2419707, 5e-8));
        assert!(close(g_0gamma(1.0, 0.0, 2.0).unwrap(), 0.2615783, 5e-8));
        assert!(close(g_0gamma(1.0, 1.0, 2.0).unwrap(), 0.1019590, 5e-8));
        assert!(close(g_0gamma(1.0, 1.0, 1e-9).unwrap(), 0.2419707, 5e-8));
    }

    #[test]
    fn erf_kernels_do_not_overflow() {
        let v = g_beta0(1.0, 800.0, 2.0).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        let v = g_0gamma(1.0, 800.0, 1e-3).unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }

    #[test]
    fn g_betagamma_limits_and_laplace() {
        let at_beta_zero = g_betagamma(1.0, 1.0, 0.0, 2.0).unwrap();
        assert!(close(at_beta_zero, 0.1019590, 5e-8));
        assert!(close(at_beta_zero, g_0gamma_raw(1.0, 1.0, 2.0), 1e-11));
        let small_gamma = g_betagamma(1.0, 1.0, 1.0, 1e-7).unwrap();
        assert!(close(small_gamma, 0.1400117, 1e-6));
        let lt = quad::integrate(
            |s: f64| {
                let t = s * s;
                if t == 0.0 {
                    0.0
                } else {
                    2.0 * s * (-0.5 * t).exp() * g_betagamma(t, 1.0, 1.0, 2.0).unwrap()
                }
            },
            0.0,
            12.0,
            Tolerance::new(1e-12, 1e-12),
        )
        .unwrap();
        assert!(close(lt, 0.1226265, 5e-8));
    }

    #[test]
    fn vertex_kernel_tails_match_quadrature() {
        let tol = Tolerance::new(1e-13, 1e-13);
        for p in [
            ErfKernelParams { beta: 0.0, gamma: 0.0 },
            ErfKernelParams { beta: 1.3, gamma: 0.0 },
            ErfKernelParams { beta: 0.0, gamma: 0.7 },
            ErfKernelParams { beta: 1.0, gamma: 2.0 },
        ] {
            for a in [0.0, 0.4, 2.0] {
                let closed = vertex_kernel_tail(0.8, a, &p).unwrap();
                let num = quad::integrate(|z| vertex_kernel(0.8, z, &p).unwrap(), a, 60.0, tol).unwrap();
                assert!(close(closed, num, 1e-11), "{p:?} a={a}: {closed} vs {num}");
            }
        }
    }

    #[test]
    fn transition_kernel_examples() {
        let w = [0.5, 0.5];
        let walsh = BoundaryParams::walsh(&w).unwrap();
        let v = transition_kernel(&walsh, &KernelQuery::point(1.0, pt(1, 1.0), pt(1, 1.0))).unwrap();
        assert!(close(v.density, 0.3989423, 5e-8));
        assert!(v.atom == 0.0 && v.defect < 1e-10);
        let v = transition_kernel(&walsh, &KernelQuery::point(1.0, pt(1, 1.0), pt(2, 1.0))).unwrap();
        assert!(close(v.density, 0.0539910, 5e-8));

        let sticky = BoundaryParams::sticky(&w, 2.0).unwrap();
        let v = transition_kernel(&sticky, &KernelQuery::atom(1.0, pt(1, 1.0))).unwrap();
        assert!(close(v.atom, 0.2039180, 5e-8));
        let v = transition_kernel(&sticky, &KernelQuery::atom(1.0, GraphPoint::Vertex)).unwrap();
        assert!(close(v.atom, 0.5231566, 5e-8));
        assert!(v.defect < 1e-10);
    }

    #[test]
    fn conservation_for_conservative_kinds() {
        for params in [
            BoundaryParams::walsh(&[0.2, 0.3, 0.5]).unwrap(),
            BoundaryParams::sticky(&[0.2, 0.3, 0.5], 1.5).unwrap(),
        ] {
            for from in [GraphPoint::Vertex, pt(2, 0.4)] {
                for t in [0.3, 1.0, 2.5] {
                    let atom = vertex_atom(&params, t, from).unwrap();
                    let mass = total_density_mass(&params, t, from).unwrap();
                    assert!(close(atom + mass, 1.0, 1e-8), "{:?} t={t}", params.kind());
                }
            }
        }
    }

    #[test]
    fn survival_decreases_for_killed_kinds() {
        for params in [
            BoundaryParams::elastic(&[0.6, 0.4], 1.0).unwrap(),
            BoundaryParams::general(&[0.6, 0.4], 1.0, 2.0).unwrap(),
            BoundaryParams::stopped_killed(2, 1.0).unwrap(),
        ] {
            let mut last = 1.0;
            for t in [0.2, 0.5, 1.0, 2.0] {
                let v = transition_kernel(&params, &KernelQuery::atom(t, pt(1, 0.5))).unwrap();
                let survival = 1.0 - v.defect;
                assert!(survival <= last + 1e-12, "{:?}", params.kind());
                last = survival;
            }
        }
    }

    #[test]
    fn elastic_survival_matches_closed_form_tail() {
        let params = BoundaryParams::elastic(&[0.5, 0.5], 1.0).unwrap();
        let v = transition_kernel(&params, &KernelQuery::atom(1.0, GraphPoint::Vertex)).unwrap();
        let analytic = 2.0 * vertex_kernel_tail(1.0, 0.0, &ErfKernelParams::of(&params)).unwrap();
        assert!(close(1.0 - v.defect, analytic, 1e-10));
    }

    #[test]
    fn stopped_killed_atom_values() {
        assert!(close(stopped_killed_atom(0.0, 1.0, 1.0).unwrap(), 0.3173105, 5e-8));
        let p = BoundaryParams::stopped_killed(2, 1.0).unwrap();
        let v = transition_kernel(&p, &KernelQuery::atom(1.0, GraphPoint::Vertex)).unwrap();
        assert!(close(v.atom, (-1.0f64).exp(), 1e-14));
        assert!(close(v.defect, 1.0 - (-1.0f64).exp(), 1e-12));
        let v = transition_kernel(&p, &KernelQuery::point(1.0, pt(1, 1.0), pt(2, 1.0))).unwrap();
        assert_eq!(v.density, 0.0);
    }

    #[test]
    fn first_passage_form_agrees_with_closed_form() {
        let walsh = BoundaryParams::walsh(&[0.5, 0.5]).unwrap();
        for (to, want) in [(pt(2, 1.0), 0.0539910), (pt(1, 1.0), 0.3989423)] {
            let q = KernelQuery::point(1.0, pt(1, 1.0), to);
            let fp = kernel_via_first_passage(&walsh, &q).unwrap().density;
            let closed = transition_density(&walsh, 1.0, pt(1, 1.0), to).unwrap();
            assert!(close(fp, closed, 1e-8));
            assert!(close(fp, want, 5e-8));
        }
        let elastic = BoundaryParams::elastic(&[0.6, 0.4], 1.0).unwrap();
        for to in [pt(2, 0.5), pt(1, 0.5), pt(1, 1.3)] {
            let q = KernelQuery::point(1.0, pt(1, 0.5), to);
            let fp = kernel_via_first_passage(&elastic, &q).unwrap();
            let closed = transition_kernel(&elastic, &q).unwrap();
            assert!(close(fp.density, closed.density, 1e-6), "{to}: {} vs {}", fp.density, closed.density);
            assert!(close(fp.defect, closed.defect, 1e-6));
        }
    }

    #[test]
    fn density_is_reversible_for_the_weight_measure() {
        let params = BoundaryParams::general(&[0.7, 0.3], 0.8, 1.1).unwrap();
        let (a, b) = (pt(1, 0.4), pt(2, 0.9));
        let ab = transition_density(&params, 0.7, a, b).unwrap();
        let ba = transition_density(&params, 0.7, b, a).unwrap();
        assert!(close(0.7 * ab, 0.3 * ba, 1e-12));
        let eq = BoundaryParams::general(&[0.5, 0.5], 0.8, 1.1).unwrap();
        let ab = transition_density(&eq, 0.7, a, b).unwrap();
        let ba = transition_density(&eq, 0.7, b, a).unwrap();
        assert!(close(ab, ba, 1e-14));
    }
}
