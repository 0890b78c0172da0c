//! The star graph: points, metric, boundary data, edge functions and edge quadrature.
//!
//! A star graph consists of `n` half-lines `l_1, …, l_n` glued at a single
//! vertex `v`. Points are written `(k, x)` with `k` the 1-based edge index and
//! `x > 0` the distance from the vertex. A cemetery point `Δ` is adjoined for
//! killed processes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quad::{self, Tolerance};

/// Tolerance on `a + c + Σb = 1` for boundary data supplied by the caller.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance used to decide whether a [`GraphFunction`] is continuous at `v`.
pub const CONTINUITY_TOL: f64 = 1e-10;

/// A star graph with `n ≥ 1` external edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarGraph {
    n: usize,
}

impl StarGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("a star graph needs at least one edge");
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Checks that `p` lies on this graph.
    pub fn check(&self, p: GraphPoint) -> Result<()> {
        match p {
            GraphPoint::Interior { edge, .. } if edge == 0 || edge > self.n => {
                domain(format!("edge {edge} outside 1..={}", self.n))
            }
            _ => Ok(()),
        }
    }
}

/// A location on the star graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphPoint {
    Vertex,
    Interior { edge: usize, x: f64 },
    Cemetery,
}

impl GraphPoint {
    /// Interior point `(edge, x)`; requires `edge ≥ 1` and finite `x > 0`.
    pub fn interior(edge: usize, x: f64) -> Result<Self> {
        if edge == 0 {
            return domain("edge indices start at 1");
        }
        if !(x > 0.0 && x.is_finite()) {
            return domain(format!("interior distance must be finite and > 0, got {x}"));
        }
        Ok(GraphPoint::Interior { edge, x })
    }

    /// Interior point for `x > 0`, the vertex for `x == 0`.
    pub fn on_edge(edge: usize, x: f64) -> Result<Self> {
        if x == 0.0 {
            Ok(GraphPoint::Vertex)
        } else {
            Self::interior(edge, x)
        }
    }

    /// Distance `d(p, v)` to the vertex.
    pub fn dist_to_vertex(&self) -> Result<f64> {
        match *self {
            GraphPoint::Vertex => Ok(0.0),
            GraphPoint::Interior { x, .. } => Ok(x),
            GraphPoint::Cemetery => domain("the cemetery has no distance"),
        }
    }

    pub fn edge(&self) -> Option<usize> {
        match *self {
            GraphPoint::Interior { edge, .. } => Some(edge),
            _ => None,
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, GraphPoint::Vertex)
    }

    pub fn is_cemetery(&self) -> bool {
        matches!(self, GraphPoint::Cemetery)
    }
}

impl fmt::Display for GraphPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphPoint::Vertex => write!(f, "v"),
            GraphPoint::Interior { edge, x } => write!(f, "{edge}:{x}"),
            GraphPoint::Cemetery => write!(f, "Δ"),
        }
    }
}

impl FromStr for GraphPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "v" | "V" => return Ok(GraphPoint::Vertex),
            "Δ" | "cemetery" => return Ok(GraphPoint::Cemetery),
            _ => {}
        }
        let (k, x) = s
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("cannot parse point `{s}`; use v, k:x or Δ")))?;
        let edge: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad edge index in `{s}`")))?;
        let x: f64 = x
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad distance in `{s}`")))?;
        GraphPoint::interior(edge, x)
    }
}

/// The metric `d(p, q)`: `|x − y|` on a common edge, `x + y` otherwise.
pub fn distance(p: GraphPoint, q: GraphPoint) -> Result<f64> {
    match (p, q) {
        (GraphPoint::Interior { edge: k, x }, GraphPoint::Interior { edge: m, x: y }) if k == m => {
            Ok((x - y).abs())
        }
        _ => Ok(p.dist_to_vertex()? + q.dist_to_vertex()?),
    }
}

/// The length `d_v(p, q) = d(p, v) + d(v, q)` of the path through the vertex.
pub fn via_vertex(p: GraphPoint, q: GraphPoint) -> Result<f64> {
    Ok(p.dist_to_vertex()? + q.dist_to_vertex()?)
}

/// Classification of boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Walsh,
    Elastic,
    Sticky,
    General,
    StoppedKilled,
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProcessKind::Walsh => "walsh",
            ProcessKind::Elastic => "elastic",
            ProcessKind::Sticky => "sticky",
            ProcessKind::General => "general",
            ProcessKind::StoppedKilled => "stopped-killed",
        };
        f.write_str(s)
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "walsh" => Ok(ProcessKind::Walsh),
            "elastic" => Ok(ProcessKind::Elastic),
            "sticky" => Ok(ProcessKind::Sticky),
            "general" => Ok(ProcessKind::General),
            "stopped-killed" | "stopped_killed" | "stopped" => Ok(ProcessKind::StoppedKilled),
            other => Err(Error::Domain(format!("unknown process kind `{other}`"))),
        }
    }
}

/// Feller boundary data `(a, c, b)` at the vertex with the simulator data `(w, β, γ)`.
///
/// The boundary condition reads `a f(v) + (c/2) f''(v) = Σ b_k f'(v_k)` with
/// `a + c + Σ b_k = 1`. When `b ≠ 0`, `w_k = b_k/(1−r)`, `β = a/(1−r)` and
/// `γ = c/(1−r)` with `r = a + c`. When `b = 0` the process is stopped at the
/// vertex and killed at rate `β = a/c`; `w` is then identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryParams {
    a: f64,
    c: f64,
    b: Vec<f64>,
    w: Vec<f64>,
    beta: f64,
    gamma: f64,
    kind: ProcessKind,
}

impl BoundaryParams {
    /// Validates `(a, c, b)`, renormalizes it exactly and classifies the process.
    pub fn derive(a: f64, c: f64, b: &[f64]) -> Result<Self> {
        if b.is_empty() {
            return domain("b must have one entry per edge");
        }
        if !(a >= 0.0 && c >= 0.0 && b.iter().all(|&bk| bk >= 0.0)) {
            return domain("boundary weights must be non-negative");
        }
        let total = a + c + b.iter().sum::<f64>();
        if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization(total));
        }
        let (a, c) = (a / total, c / total);
        let b: Vec<f64> = b.iter().map(|bk| bk / total).collect();
        if a == 1.0 {
            return domain("a = 1 is excluded");
        }
        let b_sum: f64 = b.iter().sum();
        if b_sum == 0.0 {
            if c == 0.0 {
                return domain("b = 0 requires c > 0");
            }
            return Ok(Self {
                a,
                c,
                w: vec![0.0; b.len()],
                b,
                beta: a / c,
                gamma: 0.0,
                kind: ProcessKind::StoppedKilled,
            });
        }
        let w: Vec<f64> = b.iter().map(|bk| bk / b_sum).collect();
        let beta = a / b_sum;
        let gamma = c / b_sum;
        Ok(Self { a, c, b, w, beta, gamma, kind: classify(beta, gamma) })
    }

    /// Builds the data from `(w, β, γ)` via `a = β/(1+β+γ)`, `c = γ/(1+β+γ)`, `b = w/(1+β+γ)`.
    pub fn from_simulator(w: &[f64], beta: f64, gamma: f64) -> Result<Self> {
        if w.is_empty() {
            return domain("w must have one entry per edge");
        }
        if !(beta >= 0.0 && gamma >= 0.0 && beta.is_finite() && gamma.is_finite()) {
            return domain("beta and gamma must be finite and non-negative");
        }
        if w.iter().any(|&wk| !(wk >= 0.0)) {
            return domain("weights must be non-negative");
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization(s));
        }
        let w: Vec<f64> = w.iter().map(|wk| wk / s).collect();
        let scale = 1.0 + beta + gamma;
        Ok(Self {
            a: beta / scale,
            c: gamma / scale,
            b: w.iter().map(|wk| wk / scale).collect(),
            w,
            beta,
            gamma,
            kind: classify(beta, gamma),
        })
    }

    /// Equal weights `w_k = 1/n`.
    pub fn equal_weights(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    pub fn walsh(w: &[f64]) -> Result<Self> {
        Self::from_simulator(w, 0.0, 0.0)
    }

    pub fn elastic(w: &[f64], beta: f64) -> Result<Self> {
        Self::from_simulator(w, beta, 0.0)
    }

    pub fn sticky(w: &[f64], gamma: f64) -> Result<Self> {
        Self::from_simulator(w, 0.0, gamma)
    }

    pub fn general(w: &[f64], beta: f64, gamma: f64) -> Result<Self> {
        Self::from_simulator(w, beta, gamma)
    }

    /// The process stopped at `v` and killed at rate `β`: `a = β/(1+β)`, `c = 1/(1+β)`, `b = 0`.
    pub fn stopped_killed(n: usize, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return domain("beta must be finite and non-negative");
        }
        Self::derive(beta / (1.0 + beta), 1.0 / (1.0 + beta), &vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }
    pub fn graph(&self) -> StarGraph {
        StarGraph { n: self.n() }
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kind(&self) -> ProcessKind {
        self.kind
    }
}

fn classify(beta: f64, gamma: f64) -> ProcessKind {
    match (beta > 0.0, gamma > 0.0) {
        (false, false) => ProcessKind::Walsh,
        (true, false) => ProcessKind::Elastic,
        (false, true) => ProcessKind::Sticky,
        (true, true) => ProcessKind::General,
    }
}

/// A real function on the edges.
pub type EdgeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function on the graph: one function of `x ≥ 0` per edge plus an explicit vertex value.
#[derive(Clone)]
pub struct GraphFunction {
    edges: Vec<EdgeFn>,
    vertex: f64,
    continuous: bool,
}

impl fmt::Debug for GraphFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphFunction")
            .field("n", &self.edges.len())
            .field("vertex", &self.vertex)
            .field("continuous", &self.continuous)
            .finish()
    }
}

impl GraphFunction {
    /// Per-edge functions with an explicit vertex value.
    pub fn new(edges: Vec<EdgeFn>, vertex: f64) -> Self {
        let continuous = edges.iter().all(|e| (e(0.0) - vertex).abs() <= CONTINUITY_TOL);
        Self { edges, vertex, continuous }
    }

    /// The same function `f` on every edge; the vertex value is `f(0)`.
    pub fn uniform(n: usize, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f: EdgeFn = Arc::new(f);
        let vertex = f(0.0);
        Self { edges: vec![f; n], vertex, continuous: true }
    }

    /// `f` on edge `k`, zero on the other edges and `vertex` at `v`.
    pub fn on_edge(n: usize, k: usize, f: impl Fn(f64) -> f64 + Send + Sync + 'static, vertex: f64) -> Self {
        let f: EdgeFn = Arc::new(f);
        let zero: EdgeFn = Arc::new(|_| 0.0);
        let edges = (1..=n).map(|j| if j == k { f.clone() } else { zero.clone() }).collect();
        Self::new(edges, vertex)
    }

    pub fn zero(n: usize) -> Self {
        Self::uniform(n, |_| 0.0)
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_value(&self) -> f64 {
        self.vertex
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    /// `f_k(x)` on the closed edge `k` (1-based).
    pub fn edge_value(&self, k: usize, x: f64) -> f64 {
        (self.edges[k - 1])(x)
    }

    pub fn edge_fn(&self, k: usize) -> &EdgeFn {
        &self.edges[k - 1]
    }

    /// Value at a graph point; zero at the cemetery.
    pub fn eval(&self, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Vertex => self.vertex,
            GraphPoint::Interior { edge, x } => self.edge_value(edge, x),
            GraphPoint::Cemetery => 0.0,
        }
    }
}

/// Quadrature rule identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    /// Adaptive Gauss–Kronrod 10/21 with global error control.
    AdaptiveGaussKronrod21,
}

/// Integration over a half-line edge, truncated at `t_cut`.
///
/// The integral over `[t_cut, 2 t_cut]` is used as the tail estimate. For an
/// integrand decaying at least like `e^{−c x}` with `c t_cut ≥ ln 2` this
/// bounds the neglected tail `∫_{t_cut}^∞` by twice that estimate; the
/// integration fails when the estimate exceeds the absolute tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeQuadrature {
    pub scheme: QuadratureScheme,
    pub t_cut: f64,
    pub abs_tol: f64,
}

impl Default for EdgeQuadrature {
    fn default() -> Self {
        Self { scheme: QuadratureScheme::AdaptiveGaussKronrod21, t_cut: 60.0, abs_tol: 1e-12 }
    }
}

impl EdgeQuadrature {
    pub fn new(t_cut: f64, abs_tol: f64) -> Result<Self> {
        if !(t_cut > 0.0 && abs_tol > 0.0) {
            return domain("t_cut and abs_tol must be positive");
        }
        Ok(Self { scheme: QuadratureScheme::AdaptiveGaussKronrod21, t_cut, abs_tol })
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.abs_tol, 1e-14)
    }

    /// `∫₀^∞ f(x) dx` with optional interior breakpoints (kinks).
    pub fn integrate(&self, f: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<f64> {
        let body = quad::integrate_with_breaks(&f, 0.0, self.t_cut, breaks, self.tolerance())?;
        let tail = quad::integrate(|x| f(x).abs(), self.t_cut, 2.0 * self.t_cut, Tolerance::new(self.abs_tol, 1e-6))?;
        if tail > self.abs_tol {
            return Err(Error::Quadrature { estimate: tail, tolerance: self.abs_tol });
        }
        Ok(body)
    }
}

/// `(f, g) = Σ_k ∫₀^∞ f_k(x) g_k(x) dx`.
pub fn inner_product(f: &GraphFunction, g: &GraphFunction, quad: &EdgeQuadrature) -> Result<f64> {
    if f.n() != g.n() {
        return domain("functions live on graphs with different edge counts");
    }
    let mut total = 0.0;
    for k in 1..=f.n() {
        let (fk, gk) = (f.edge_fn(k), g.edge_fn(k));
        total += quad.integrate(|x| fk(x) * gk(x), &[])?;
    }
    Ok(total)
}
