//! Resolvent kernels and their action on graph functions.
//!
//! With `q = √(2λ)`, `e_λ(ξ) = e^{−q d(ξ,v)}` and `ρ(λ) = 1/(β + q + γλ)`,
//! every kind shares the kernel
//!
//! ```text
//! r_λ(ξ, dη) = [r^D_λ(ξ, η) + 2 w_m ρ(λ) e_λ(ξ) e_λ(η)] dη + γ ρ(λ) e_λ(ξ) ε_v(dη)
//! ```
//!
//! except the stopped-and-killed process, whose kernel is
//! `r^D_λ(ξ, η) dη + (β+λ)^{-1} e_λ(ξ) ε_v(dη)`.

use std::sync::Arc;

use crate::error::{domain, Result};
use crate::graph::{BoundaryParams, EdgeFn, EdgeQuadrature, GraphFunction, GraphPoint, ProcessKind};
use crate::kernels::Target;

/// A resolvent evaluation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventQuery {
    pub lambda: f64,
    pub from: GraphPoint,
    pub to: Target,
}

impl ResolventQuery {
    pub fn point(lambda: f64, from: GraphPoint, to: GraphPoint) -> Self {
        Self { lambda, from, to: Target::Point(to) }
    }
    pub fn atom(lambda: f64, from: GraphPoint) -> Self {
        Self { lambda, from, to: Target::Atom }
    }
}

/// Density against Lebesgue measure and coefficient of the vertex atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventValue {
    pub density: f64,
    pub atom: f64,
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("λ must be finite and positive, got {lambda}"));
    }
    Ok((2.0 * lambda).sqrt())
}

/// `e_λ(ξ) = e^{−√(2λ) d(ξ, v)}`.
pub fn e_lambda(xi: GraphPoint, lambda: f64) -> Result<f64> {
    let q = check_lambda(lambda)?;
    Ok((-q * xi.dist_to_vertex()?).exp())
}

/// `ρ(λ) = 1/(β + √(2λ) + γλ)`.
pub fn rho(lambda: f64, beta: f64, gamma: f64) -> Result<f64> {
    let q = check_lambda(lambda)?;
    if !(beta >= 0.0 && gamma >= 0.0) {
        return domain("ρ needs β, γ ≥ 0");
    }
    Ok(1.0 / (beta + q + gamma * lambda))
}

/// The Dirichlet resolvent density `q^{-1}(e^{−q|x−y|} − e^{−q(x+y)})` on a common edge.
pub fn dirichlet_resolvent(lambda: f64, from: GraphPoint, to: GraphPoint) -> Result<f64> {
    let q = check_lambda(lambda)?;
    match (from, to) {
        (GraphPoint::Interior { edge: k, x }, GraphPoint::Interior { edge: m, x: y }) if k == m => {
            Ok(((-q * (x - y).abs()).exp() - (-q * (x + y)).exp()) / q)
        }
        (GraphPoint::Cemetery, _) | (_, GraphPoint::Cemetery) => domain("the cemetery has no resolvent"),
        _ => Ok(0.0),
    }
}

/// Coefficient of `ε_v` in `r_λ(ξ, ·)` at `d = d(ξ, v)`.
fn atom_coefficient(params: &BoundaryParams, lambda: f64, d: f64) -> f64 {
    let q = (2.0 * lambda).sqrt();
    let e = (-q * d).exp();
    match params.kind() {
        ProcessKind::StoppedKilled => e / (params.beta() + lambda),
        _ => params.gamma() * e / (params.beta() + q + params.gamma() * lambda),
    }
}

fn density_unchecked(params: &BoundaryParams, lambda: f64, from: GraphPoint, to: GraphPoint) -> Result<f64> {
    let dirichlet = dirichlet_resolvent(lambda, from, to)?;
    let GraphPoint::Interior { edge: m, x: y } = to else {
        return Ok(0.0);
    };
    if params.kind() == ProcessKind::StoppedKilled {
        return Ok(dirichlet);
    }
    let q = (2.0 * lambda).sqrt();
    let d0 = from.dist_to_vertex()?;
    let r = 1.0 / (params.beta() + q + params.gamma() * lambda);
    Ok(dirichlet + 2.0 * params.w()[m - 1] * r * (-q * (d0 + y)).exp())
}

/// Evaluates the resolvent kernel of the process described by `params`.
pub fn resolvent_kernel(params: &BoundaryParams, q: &ResolventQuery) -> Result<ResolventValue> {
    check_lambda(q.lambda)?;
    if q.from.is_cemetery() {
        return domain("resolvents start from a graph point");
    }
    params.graph().check(q.from)?;
    let density = match q.to {
        Target::Atom | Target::Point(GraphPoint::Vertex) => 0.0,
        Target::Point(to) => {
            params.graph().check(to)?;
            density_unchecked(params, q.lambda, q.from, to)?
        }
    };
    let atom = atom_coefficient(params, q.lambda, q.from.dist_to_vertex()?);
    Ok(ResolventValue { density, atom })
}

/// `R_λ f(ξ) = Σ_m ∫₀^∞ r_λ(ξ, (m, y)) f_m(y) dy + atom · f(v)`.
pub fn apply_resolvent(
    params: &BoundaryParams,
    lambda: f64,
    f: &GraphFunction,
    xi: GraphPoint,
    quad: &EdgeQuadrature,
) -> Result<f64> {
    let value = resolvent_kernel(params, &ResolventQuery::atom(lambda, xi))?;
    if f.n() != params.n() {
        return domain("function and process live on graphs with different edge counts");
    }
    let d0 = xi.dist_to_vertex()?;
    let mut total = value.atom * f.vertex_value();
    for m in 1..=params.n() {
        let fm = f.edge_fn(m);
        let on_edge = xi.edge() == Some(m);
        if params.kind() == ProcessKind::StoppedKilled && !on_edge {
            continue;
        }
        let breaks: Vec<f64> = if on_edge { vec![d0] } else { vec![] };
        let integrand = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let to = GraphPoint::Interior { edge: m, x: y };
            density_unchecked(params, lambda, xi, to).unwrap_or(f64::NAN) * fm(y)
        };
        total += quad.integrate(integrand, &breaks)?;
    }
    Ok(total)
}

/// `R^D_λ f(ξ)` for the process killed at the vertex.
pub fn apply_dirichlet_resolvent(lambda: f64, f: &GraphFunction, xi: GraphPoint, quad: &EdgeQuadrature) -> Result<f64> {
    check_lambda(lambda)?;
    let GraphPoint::Interior { edge: k, x } = xi else {
        return Ok(0.0);
    };
    let fk = f.edge_fn(k);
    quad.integrate(
        |y| {
            let to = GraphPoint::Interior { edge: k, x: y.max(f64::MIN_POSITIVE) };
            dirichlet_resolvent(lambda, xi, to).unwrap_or(f64::NAN) * fk(y)
        },
        &[x],
    )
}

/// `R_λ f` as a graph function, evaluated lazily by quadrature.
///
/// Evaluation failures surface as `NaN`, which the enclosing quadrature rejects.
pub fn resolvent_function(params: &BoundaryParams, lambda: f64, f: &GraphFunction, quad: &EdgeQuadrature) -> Result<GraphFunction> {
    check_lambda(lambda)?;
    let vertex = apply_resolvent(params, lambda, f, GraphPoint::Vertex, quad)?;
    let edges: Vec<EdgeFn> = (1..=params.n())
        .map(|k| {
            let (p, f, quad) = (params.clone(), f.clone(), *quad);
            Arc::new(move |x: f64| {
                let xi = if x > 0.0 { GraphPoint::Interior { edge: k, x } } else { GraphPoint::Vertex };
                apply_resolvent(&p, lambda, &f, xi, &quad).unwrap_or(f64::NAN)
            }) as EdgeFn
        })
        .collect();
    Ok(GraphFunction::new(edges, vertex))
}

/// `u'(v_k) = 2(e_{λ,k}, f_k) − √(2λ) R_λ f(v)` for `u = R_λ f`.
pub fn resolvent_derivative_at_vertex(
    params: &BoundaryParams,
    lambda: f64,
    f: &GraphFunction,
    k: usize,
    quad: &EdgeQuadrature,
) -> Result<f64> {
    let q = check_lambda(lambda)?;
    if k == 0 || k > params.n() {
        return domain(format!("edge {k} is not in 1..={}", params.n()));
    }
    let fk = f.edge_fn(k);
    let projection = quad.integrate(|y| (-q * y).exp() * fk(y), &[])?;
    Ok(2.0 * projection - q * apply_resolvent(params, lambda, f, GraphPoint::Vertex, quad)?)
}

/// `(e_λ, f) = Σ_k ∫ e^{−√(2λ) y} f_k(y) dy`, weighted per edge by `w`.
pub fn weighted_projection(lambda: f64, w: &[f64], f: &GraphFunction, quad: &EdgeQuadrature) -> Result<f64> {
    let q = check_lambda(lambda)?;
    let mut total = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let fk = f.edge_fn(k + 1);
        total += wk * quad.integrate(|y| (-q * y).exp() * fk(y), &[])?;
    }
    Ok(total)
}

/// α-potential of the local time at the vertex: `(√(2α) + γα)^{-1} e^{−√(2α) d(ξ,v)}`.
pub fn local_time_alpha_potential(alpha: f64, xi: GraphPoint, gamma: f64) -> Result<f64> {
    let q = check_lambda(alpha)?;
    if gamma < 0.0 {
        return domain("γ must be non-negative");
    }
    Ok((-q * xi.dist_to_vertex()?).exp() / (q + gamma * alpha))
}

/// Components of the vertex boundary operator applied to `u = R_λ f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResidual {
    /// `a u(v) + (c/2) u''(v) − Σ_k b_k u'(v_k)`.
    pub residual: f64,
    /// `|a u(v)| + |c/2 u''(v)| + Σ_k |b_k u'(v_k)|`, the scale of the cancelling terms.
    pub scale: f64,
    /// `u(v)`.
    pub value: f64,
    /// `u'(v_k)` per edge.
    pub first: Vec<f64>,
    /// `u''(v)`.
    pub second: f64,
}

impl BoundaryResidual {
    /// `|residual| / (|u(v)| + Σ_k |u'(v_k)| + |u''(v)|)`.
    pub fn relative(&self) -> f64 {
        let denom = self.value.abs() + self.first.iter().map(|d| d.abs()).sum::<f64>() + self.second.abs();
        self.residual.abs() / denom
    }
}

/// Finite-difference evaluation of the vertex boundary condition for `R_λ f`.
///
/// One-sided second-order differences with step `h` on each edge give `u'(v_k)`
/// and `u''(v_k)`; `u''(v)` is the edge average.
pub fn boundary_residual(
    params: &BoundaryParams,
    lambda: f64,
    f: &GraphFunction,
    h: f64,
    quad: &EdgeQuadrature,
) -> Result<BoundaryResidual> {
    if !(h > 0.0) {
        return domain("finite-difference step must be positive");
    }
    let u0 = apply_resolvent(params, lambda, f, GraphPoint::Vertex, quad)?;
    let n = params.n();
    let mut first = Vec::with_capacity(n);
    let mut second = 0.0;
    for k in 1..=n {
        let u = |j: f64| apply_resolvent(params, lambda, f, GraphPoint::Interior { edge: k, x: j * h }, quad);
        let (u1, u2, u3) = (u(1.0)?, u(2.0)?, u(3.0)?);
        first.push((-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h));
        second += (2.0 * u0 - 5.0 * u1 + 4.0 * u2 - u3) / (h * h);
    }
    second /= n as f64;
    let a_term = params.a() * u0;
    let c_term = 0.5 * params.c() * second;
    let flux: Vec<f64> = params.b().iter().zip(&first).map(|(b, d)| b * d).collect();
    let residual = a_term + c_term - flux.iter().sum::<f64>();
    let scale = a_term.abs() + c_term.abs() + flux.iter().map(|x| x.abs()).sum::<f64>();
    Ok(BoundaryResidual { residual, scale, value: u0, first, second })
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

    fn quad() -> EdgeQuadrature {
        EdgeQuadrature::default()
    }

    // Continuous, decaying, and different on every edge.
    fn test_function(n: usize) -> GraphFunction {
        let edges: Vec<EdgeFn> = (1..=n)
            .map(|k| {
                let k = k as f64;
                Arc::new(move |x: f64| (1.0 + 0.3 * k * x) * (-(0.8 + 0.1 * k) * x).exp()) as EdgeFn
            })
            .collect();
        GraphFunction::new(edges, 1.0)
    }

    #[test]
    fn e_lambda_and_rho_examples() {
        assert!(close(e_lambda(pt(1, 1.0), 0.5).unwrap(), 0.3678794, 5e-8));
        assert_eq!(e_lambda(GraphPoint::Vertex, 0.5).unwrap(), 1.0);
        assert!(close(e_lambda(pt(3, 0.5), 2.0).unwrap(), 0.3678794, 5e-8));
        assert!(close(rho(0.5, 1.0, 2.0).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(rho(0.5, 0.0, 0.0).unwrap(), 1.0, 1e-15));
        assert!(close(1.0 * rho(0.5, 1.0, 0.0).unwrap(), 0.5, 1e-15));
        assert!(e_lambda(pt(1, 1.0), 0.0).is_err());
    }

    #[test]
    fn resolvent_kernel_examples() {
        let walsh = BoundaryParams::walsh(&[0.5, 0.5]).unwrap();
        let v = resolvent_kernel(&walsh, &ResolventQuery::point(0.5, pt(1, 1.0), pt(2, 1.0))).unwrap();
        assert!(close(v.density, 0.1353353, 5e-8));
        assert!(close(dirichlet_resolvent(0.5, pt(1, 1.0), pt(1, 2.0)).unwrap(), 0.3180924, 5e-8));
        let sticky = BoundaryParams::sticky(&[0.5, 0.5], 2.0).unwrap();
        let v = resolvent_kernel(&sticky, &ResolventQuery::atom(0.5, pt(1, 1.0))).unwrap();
        assert!(close(v.atom, 0.3678794, 5e-8));
        let general = BoundaryParams::general(&[0.5, 0.5], 1.0, 2.0).unwrap();
        let v = resolvent_kernel(&general, &ResolventQuery::atom(0.5, pt(1, 1.0))).unwrap();
        assert!(close(v.atom, 0.2452530, 5e-8));
    }

    #[test]
    fn apply_resolvent_examples() {
        let walsh = BoundaryParams::walsh(&[0.5, 0.5]).unwrap();
        let zero = GraphFunction::zero(2);
        assert_eq!(apply_resolvent(&walsh, 0.5, &zero, pt(1, 0.3), &quad()).unwrap(), 0.0);
        let e = GraphFunction::uniform(2, |x| (-x).exp());
        let at_v = apply_resolvent(&walsh, 0.5, &e, GraphPoint::Vertex, &quad()).unwrap();
        assert!(close(at_v, 1.0, 1e-10));
    }

    #[test]
    fn first_passage_identity_all_kinds() {
        let f = test_function(3);
        let w = [0.2, 0.5, 0.3];
        for params in [
            BoundaryParams::walsh(&w).unwrap(),
            BoundaryParams::elastic(&w, 0.7).unwrap(),
            BoundaryParams::sticky(&w, 1.3).unwrap(),
            BoundaryParams::general(&w, 0.7, 1.3).unwrap(),
            BoundaryParams::stopped_killed(3, 0.7).unwrap(),
        ] {
            let xi = pt(2, 0.9);
            let lhs = apply_resolvent(&params, 0.7, &f, xi, &quad()).unwrap();
            let rhs = apply_dirichlet_resolvent(0.7, &f, xi, &quad()).unwrap()
                + e_lambda(xi, 0.7).unwrap() * apply_resolvent(&params, 0.7, &f, GraphPoint::Vertex, &quad()).unwrap();
            assert!(close(lhs, rhs, 1e-8), "{:?}: {lhs} vs {rhs}", params.kind());
        }
    }

    #[test]
    fn derivative_at_vertex_matches_finite_difference() {
        let walsh = BoundaryParams::walsh(&[0.5, 0.5]).unwrap();
        let f = GraphFunction::on_edge(2, 1, |x| (-x).exp(), 1.0);
        let u0 = apply_resolvent(&walsh, 0.5, &f, GraphPoint::Vertex, &quad()).unwrap();
        let d = resolvent_derivative_at_vertex(&walsh, 0.5, &f, 1, &quad()).unwrap();
        assert!(close(d, 1.0 - u0, 1e-10));
        let h = 1e-4;
        let u = |x: f64| apply_resolvent(&walsh, 0.5, &f, pt(1, x), &quad()).unwrap();
        let fd = (-3.0 * u0 + 4.0 * u(h) - u(2.0 * h)) / (2.0 * h);
        assert!(close(d, fd, 1e-6), "{d} vs {fd}");
        let flux: f64 = (1..=2)
            .map(|k| 0.5 * resolvent_derivative_at_vertex(&walsh, 0.5, &f, k, &quad()).unwrap())
            .sum();
        assert!(flux.abs() < 1e-8);
        let zero = GraphFunction::zero(2);
        assert_eq!(resolvent_derivative_at_vertex(&walsh, 0.5, &zero, 1, &quad()).unwrap(), 0.0);
    }

    #[test]
    fn alpha_potential_examples() {
        assert!(close(local_time_alpha_potential(0.5, GraphPoint::Vertex, 0.0).unwrap(), 1.0, 1e-15));
        assert!(close(local_time_alpha_potential(0.5, GraphPoint::Vertex, 2.0).unwrap(), 0.5, 1e-15));
        assert!(close(local_time_alpha_potential(0.5, pt(1, 1.0), 0.0).unwrap(), 0.3678794, 5e-8));
    }

    #[test]
    fn killing_comparison() {
        let f = test_function(2);
        let w = [0.6, 0.4];
        let (lambda, beta) = (0.9, 1.4);
        let xi = pt(1, 0.35);
        let pairs = [
            (BoundaryParams::walsh(&w).unwrap(), BoundaryParams::elastic(&w, beta).unwrap()),
            (BoundaryParams::sticky(&w, 0.8).unwrap(), BoundaryParams::general(&w, beta, 0.8).unwrap()),
        ];
        for (base, killed) in pairs {
            let factor = beta * rho(lambda, beta, base.gamma()).unwrap();
            let rk = apply_resolvent(&killed, lambda, &f, xi, &quad()).unwrap();
            let rb = apply_resolvent(&base, lambda, &f, xi, &quad()).unwrap();
            let rbv = apply_resolvent(&base, lambda, &f, GraphPoint::Vertex, &quad()).unwrap();
            assert!(close(rk, rb - e_lambda(xi, lambda).unwrap() * factor * rbv, 1e-8));
        }
    }

    #[test]
    fn stopped_killed_vertex_identity() {
        let p = BoundaryParams::stopped_killed(2, 0.6).unwrap();
        let f = test_function(2);
        let lambda = 1.1;
        let u = apply_resolvent(&p, lambda, &f, GraphPoint::Vertex, &quad()).unwrap();
        assert!((lambda * u - f.vertex_value() + 0.6 * u).abs() < 1e-14);
    }

    #[test]
    fn boundary_condition_holds_for_every_kind() {
        let f = test_function(3);
        for params in [
            BoundaryParams::derive(0.0, 0.0, &[0.2, 0.5, 0.3]).unwrap(),
            BoundaryParams::derive(0.2, 0.0, &[0.2, 0.3, 0.3]).unwrap(),
            BoundaryParams::derive(0.0, 0.3, &[0.2, 0.3, 0.2]).unwrap(),
            BoundaryParams::derive(0.1, 0.3, &[0.2, 0.2, 0.2]).unwrap(),
            BoundaryParams::derive(0.4, 0.6, &[0.0, 0.0, 0.0]).unwrap(),
        ] {
            let r = boundary_residual(&params, 0.8, &f, 1e-4, &quad()).unwrap();
            assert!(r.residual.abs() <= 1e-3 * r.scale, "{:?}: {r:?}", params.kind());
        }
    }

    #[test]
    fn weighted_projection_of_exponential() {
        let e = GraphFunction::uniform(2, |x| (-x).exp());
        let v = weighted_projection(0.5, &[0.5, 0.5], &e, &quad()).unwrap();
        assert!(close(v, 0.5, 1e-12));
    }
}
