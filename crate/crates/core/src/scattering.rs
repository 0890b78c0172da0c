//! Vertex scattering matrices.
//!
//! Boundary conditions `A F + B F' = 0` on the vertex values `F_k = f(v_k)` and
//! derivatives `F'_k = f'(v_k)` define `S_{A,B}(κ) = −(A + κB)^{-1}(A − κB)`.
//! The probabilistic regime uses `κ = √(2λ)`, the quantum regime `κ = i√E`
//! with `E = −2λ`. For every kind the closed form is `S_km = 2κ(λ) w_m − δ_km`.
//!
//! Sticky and general boundary conditions contain `λ` through the Wentzell
//! term: `(c/2) f''(v) = c (λ f(v) − g(v))` on resolvent functions, so their
//! matrices are energy dependent and equal the elastic matrices with the
//! effective rate `β + γλ`.

use nalgebra::{Complex, DMatrix};

use crate::error::{domain, Error, Result};
use crate::graph::{BoundaryParams, ProcessKind};
use crate::resolvents::{resolvent_kernel, rho, ResolventQuery};
use crate::GraphPoint;

pub type C64 = Complex<f64>;

/// Condition-number guard for `A + κB`.
pub const MAX_CONDITION: f64 = 1e12;

/// Boundary matrices `(A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexBoundaryMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl VertexBoundaryMatrices {
    /// Checks that `(A, B)` is `n × n` each and has rank `n`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
            return domain("A and B must be square of the same size");
        }
        let m = Self { a, b };
        if m.rank() < n {
            return domain("(A, B) must have maximal rank");
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Numerical rank of the `n × 2n` block `(A, B)`.
    pub fn rank(&self) -> usize {
        let n = self.n();
        let mut block = DMatrix::<f64>::zeros(n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&self.a);
        block.view_mut((0, n), (n, n)).copy_from(&self.b);
        let sv = block.transpose().svd(false, false).singular_values;
        let scale = sv.max().max(f64::MIN_POSITIVE);
        sv.iter().filter(|&&s| s > 1e-10 * scale).count()
    }

    /// `(CA, CB)` for an invertible `C`.
    pub fn scaled(&self, c: &DMatrix<f64>) -> Self {
        Self { a: c * &self.a, b: c * &self.b }
    }
}

/// Where an S-matrix was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SParameter {
    /// Probabilistic regime, `κ = √(2λ)`.
    Lambda(f64),
    /// Quantum regime, `κ = i√E`.
    Energy(f64),
    /// A raw spectral parameter.
    Kappa(C64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix {
    pub entries: DMatrix<C64>,
    pub parameter: SParameter,
}

impl SMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Real parts, after checking that imaginary parts vanish to `tol`.
    pub fn real(&self, tol: f64) -> Result<DMatrix<f64>> {
        if self.entries.iter().any(|z| z.im.abs() > tol) {
            return Err(Error::Diagnostics("S-matrix has non-negligible imaginary part".into()));
        }
        Ok(self.entries.map(|z| z.re))
    }

    pub fn max_abs_diff(&self, other: &SMatrix) -> f64 {
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖S*S − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n();
        let p = self.entries.adjoint() * &self.entries - DMatrix::<C64>::identity(n, n);
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn determinant(&self) -> C64 {
        self.entries.clone().determinant()
    }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

fn condition_number(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (hi, lo) = (sv.max(), sv.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `S_{A,B}(κ) = −(A + κB)^{-1}(A − κB)`.
pub fn s_matrix_generic(m: &VertexBoundaryMatrices, kappa: C64) -> Result<SMatrix> {
    let (a, b) = (to_complex(&m.a), to_complex(&m.b));
    let plus = &a + &b * kappa;
    let minus = &a - &b * kappa;
    let cond = condition_number(&plus);
    if !(cond < MAX_CONDITION) {
        return Err(Error::Singular(cond));
    }
    let solved = plus.lu().solve(&minus).ok_or(Error::Singular(f64::INFINITY))?;
    Ok(SMatrix { entries: -solved, parameter: SParameter::Kappa(kappa) })
}

/// Elastic-form matrices: first row `A = (0, …, 0, β)`, `B = (w₁, …, w_n)`,
/// remaining rows `f(v_k) − f(v_{k+1}) = 0`.
fn elastic_form(w: &[f64], beta: f64) -> VertexBoundaryMatrices {
    let n = w.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    a[(0, n - 1)] = beta;
    for (k, wk) in w.iter().enumerate() {
        b[(0, k)] = *wk;
    }
    for r in 1..n {
        a[(r, r - 1)] = 1.0;
        a[(r, r)] = -1.0;
    }
    VertexBoundaryMatrices { a, b }
}

/// Boundary matrices of the process at spectral parameter `λ` (`λ = −E/2` in the quantum regime).
///
/// Walsh and elastic matrices do not depend on `λ`. Sticky and general ones
/// use the effective rate `β + γλ`. The stopped-and-killed process has the
/// Dirichlet matrices `A = I`, `B = 0`.
pub fn boundary_matrices(params: &BoundaryParams, lambda: f64) -> Result<VertexBoundaryMatrices> {
    if !lambda.is_finite() {
        return domain("λ must be finite");
    }
    let n = params.n();
    let m = match params.kind() {
        ProcessKind::Walsh => elastic_form(params.w(), 0.0),
        ProcessKind::Elastic => elastic_form(params.w(), params.beta()),
        ProcessKind::Sticky | ProcessKind::General => {
            elastic_form(params.w(), params.beta() + params.gamma() * lambda)
        }
        ProcessKind::StoppedKilled => {
            VertexBoundaryMatrices { a: DMatrix::identity(n, n), b: DMatrix::zeros(n, n) }
        }
    };
    VertexBoundaryMatrices::new(m.a, m.b)
}

/// Constant matrices with `S_{A,B}(√(2λ₀)) = S₀`: `A = −½(S₀ − 1)`, `B = (2√(2λ₀))^{-1}(S₀ + 1)`.
///
/// They reproduce `S₀` at `λ₀` only. Away from `λ₀` a sticky or general
/// process needs [`boundary_matrices`], since no constant pair can move the
/// eigenvalue `(2 − γ√(2λ))/(2 + γ√(2λ))` through its full range.
pub fn reference_boundary_matrices(s0: &DMatrix<f64>, lambda0: f64) -> Result<VertexBoundaryMatrices> {
    if !(lambda0 > 0.0) {
        return domain("reference λ₀ must be positive");
    }
    let n = s0.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a = (s0 - &id) * -0.5;
    let b = (s0 + &id) / (2.0 * (2.0 * lambda0).sqrt());
    VertexBoundaryMatrices::new(a, b)
}

/// `κ(λ)` of the closed form `S = 2κ w − 1`.
pub fn kappa_factor(params: &BoundaryParams, lambda: f64) -> Result<f64> {
    let q = (2.0 * lambda).sqrt();
    Ok(match params.kind() {
        ProcessKind::StoppedKilled => 0.0,
        _ => q * rho(lambda, params.beta(), params.gamma())?,
    })
}

/// `S_km(λ) = 2κ(λ) w_m − δ_km`.
pub fn s_closed_form(params: &BoundaryParams, lambda: f64) -> Result<SMatrix> {
    let kappa = kappa_factor(params, lambda)?;
    let n = params.n();
    let w = params.w();
    let entries = DMatrix::from_fn(n, n, |k, m| {
        let v = 2.0 * kappa * w[m] - if k == m { 1.0 } else { 0.0 };
        C64::new(v, 0.0)
    });
    Ok(SMatrix { entries, parameter: SParameter::Lambda(lambda) })
}

/// `S_{A,B}(√(2λ))` with the process's own boundary matrices.
pub fn s_generic_at_lambda(params: &BoundaryParams, lambda: f64) -> Result<SMatrix> {
    if !(lambda > 0.0) {
        return domain("λ must be positive");
    }
    let m = boundary_matrices(params, lambda)?;
    let mut s = s_matrix_generic(&m, C64::new((2.0 * lambda).sqrt(), 0.0))?;
    s.parameter = SParameter::Lambda(lambda);
    Ok(s)
}

/// `S_{A,B}(i√E)` at energy `E > 0`, with boundary matrices at `λ = −E/2`.
pub fn s_at_energy(params: &BoundaryParams, energy: f64) -> Result<SMatrix> {
    if !(energy > 0.0) {
        return domain("energy must be positive");
    }
    let m = boundary_matrices(params, -0.5 * energy)?;
    let mut s = s_matrix_generic(&m, C64::new(0.0, energy.sqrt()))?;
    s.parameter = SParameter::Energy(energy);
    Ok(s)
}

/// `√(2λ) (r_λ(ξ, η) − r_λ^free(ξ, η))` at `ξ = (k, ε)`, `η = (m, ε)`, approximating `S_km(λ)`.
pub fn s_from_resolvent(params: &BoundaryParams, lambda: f64, eps: f64) -> Result<DMatrix<f64>> {
    let q = (2.0 * lambda).sqrt();
    let n = params.n();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        for m in 1..=n {
            let from = GraphPoint::interior(k, eps)?;
            let to = GraphPoint::interior(m, eps)?;
            let r = resolvent_kernel(params, &ResolventQuery::point(lambda, from, to))?.density;
            let free = if k == m { 1.0 / q } else { 0.0 };
            s[(k - 1, m - 1)] = q * (r - free);
        }
    }
    Ok(s)
}

/// Algebraic facts about a Walsh scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshReport {
    /// `‖S² − I‖_max`.
    pub involution_defect: f64,
    pub determinant: f64,
    /// `(−1)^{n+1}`.
    pub expected_determinant: f64,
    /// Singular values of `W^{1/2} S W^{-1/2}`; all equal one when every weight is positive.
    pub weighted_singular_values: Vec<f64>,
    /// Largest Euclidean singular value of `S`.
    pub euclidean_norm: f64,
}

pub fn s_walsh_properties(params: &BoundaryParams) -> Result<WalshReport> {
    if params.kind() != ProcessKind::Walsh {
        return domain("Walsh properties need the Walsh kind");
    }
    let n = params.n();
    let s = s_closed_form(params, 1.0)?.real(0.0)?;
    let id = DMatrix::<f64>::identity(n, n);
    let involution_defect = (&s * &s - &id).amax();
    let determinant = s.clone().determinant();
    let expected_determinant = if n % 2 == 1 { 1.0 } else { -1.0 };
    let w = params.w();
    let weighted_singular_values = if w.iter().all(|&x| x > 0.0) {
        let sq = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, w.iter().map(|x| x.sqrt())));
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, w.iter().map(|x| 1.0 / x.sqrt())));
        (sq * &s * inv).svd(false, false).singular_values.iter().copied().collect()
    } else {
        Vec::new()
    };
    let euclidean_norm = s.svd(false, false).singular_values.max();
    Ok(WalshReport { involution_defect, determinant, expected_determinant, weighted_singular_values, euclidean_norm })
}

/// Weights and killing rate recovered from elastic S-matrix samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredParams {
    pub w: Vec<f64>,
    pub beta: f64,
    /// `β` from the diagonal at the largest sampled `λ`.
    pub beta_diagonal: f64,
    /// `β` from the threshold behavior at small `λ`; `None` when it diverges.
    pub beta_threshold: Option<f64>,
}

/// Neville extrapolation of `(x_i, y_i)` to `x = 0`.
fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut p: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Recovers `(w, β)` from `(λ, S(λ))` samples of an elastic process.
///
/// Weights: `S_km + δ_km = 2κ w_m`, so normalizing any row gives `w` at every
/// `λ`, and this agrees with `½(δ_km + lim_{λ→∞} S_km)`. `β` comes from the
/// diagonal `β = √(2λ)(2w_m/(S_mm + 1) − 1)` at the largest `λ`, using the
/// largest weight, and from the threshold `1/β = lim_{λ↓0}(Σ_m S_km + 1)/(2√(2λ))`,
/// extrapolated in `√(2λ)` over samples with `λ < 10⁻²`. The two must agree.
pub fn recover_params_from_s(samples: &[(f64, DMatrix<f64>)], tol: f64) -> Result<RecoveredParams> {
    if samples.is_empty() {
        return domain("no S-matrix samples");
    }
    let n = samples[0].1.nrows();
    let (lambda_hi, s_hi) = samples.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let row: Vec<f64> = (0..n).map(|m| s_hi[(0, m)] + if m == 0 { 1.0 } else { 0.0 }).collect();
    let total: f64 = row.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Diagnostics("S-matrix row has no positive mass".into()));
    }
    let w: Vec<f64> = row.iter().map(|x| x / total).collect();
    let m = (0..n).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
    let q_hi = (2.0 * lambda_hi).sqrt();
    let beta_diagonal = q_hi * (2.0 * w[m] / (s_hi[(m, m)] + 1.0) - 1.0);

    let mut small: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(l, _)| *l < 1e-2)
        .map(|(l, s)| {
            let q = (2.0 * l).sqrt();
            let sum: f64 = (0..n).map(|j| s[(0, j)]).sum::<f64>() + 1.0;
            (q, sum / (2.0 * q))
        })
        .collect();
    small.sort_by(|a, b| a.0.total_cmp(&b.0));
    let beta_threshold = if small.is_empty() {
        None
    } else {
        let inv_beta = extrapolate_to_zero(&small);
        // 1/(β + q) ≈ 1/q when β vanishes, so the limit blows up.
        let q_min = small[0].0;
        if inv_beta > 0.5 / q_min {
            None
        } else {
            Some(1.0 / inv_beta)
        }
    };
    let beta = match beta_threshold {
        None if beta_diagonal.abs() <= tol * q_hi.max(1.0) => 0.0,
        None => {
            return Err(Error::Diagnostics(format!(
                "threshold route diverges but diagonal route gives β = {beta_diagonal}"
            )))
        }
        Some(bt) => {
            if (bt - beta_diagonal).abs() > tol * bt.abs().max(1.0) {
                return Err(Error::Diagnostics(format!(
                    "β routes disagree: diagonal {beta_diagonal}, threshold {bt}"
                )));
            }
            beta_diagonal
        }
    };
    Ok(RecoveredParams { w, beta, beta_diagonal, beta_threshold })
}

/// The sticky bound state with energy `−4/γ²` and wavefunction `c e^{−2d(v,ξ)/γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub energy: f64,
    /// `c = 2/√(nγ)`, normalizing `Σ_k ∫ ψ² = 1`.
    pub c: f64,
    pub gamma: f64,
    pub n: usize,
}

impl BoundState {
    pub fn psi(&self, p: GraphPoint) -> Result<f64> {
        Ok(self.c * (-2.0 * p.dist_to_vertex()? / self.gamma).exp())
    }

    /// `Σ_k ∫₀^∞ ψ² dx` by quadrature.
    pub fn norm_squared(&self) -> Result<f64> {
        let per_edge = crate::quad::integrate_to_infinity(
            |x| (self.c * (-2.0 * x / self.gamma).exp()).powi(2),
            0.0,
            crate::quad::Tolerance::new(1e-15, 1e-14),
        )?;
        Ok(self.n as f64 * per_edge)
    }

    /// `max |−ψ'' − Eψ|` on edge points by central differences.
    pub fn eigen_residual(&self) -> f64 {
        let h = 1e-4;
        let f = |x: f64| self.c * (-2.0 * x / self.gamma).exp();
        [0.1, 0.5, 1.0, 2.0]
            .iter()
            .map(|&x| {
                let second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                (-second - self.energy * f(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn bound_state(gamma: f64, n: usize) -> Result<BoundState> {
    if !(gamma > 0.0) || n == 0 {
        return domain("bound state needs γ > 0 and n ≥ 1");
    }
    Ok(BoundState { energy: -4.0 / (gamma * gamma), c: 2.0 / (n as f64 * gamma).sqrt(), gamma, n })
}

/// Time-delay matrix at wavenumber `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDelayMatrix {
    pub entries: DMatrix<f64>,
    pub k: f64,
}

impl TimeDelayMatrix {
    /// The nonzero eigenvalue for the equal-weight sticky case: the trace.
    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

/// `T(k) = −2γ/(k(4 + k²γ²)) P_n` with `P_n` the projector onto constants.
pub fn time_delay(gamma: f64, n: usize, k: f64) -> Result<TimeDelayMatrix> {
    if !(k > 0.0) || gamma < 0.0 || n == 0 {
        return domain("time delay needs k > 0, γ ≥ 0 and n ≥ 1");
    }
    let tau = -2.0 * gamma / (k * (4.0 + k * k * gamma * gamma));
    let entries = DMatrix::from_element(n, n, tau / n as f64);
    Ok(TimeDelayMatrix { entries, k })
}

/// `(2ik)^{-1} S(k)^{-1} ∂_k S(k)` by central differences of the generic S-matrix.
pub fn time_delay_numeric(params: &BoundaryParams, k: f64) -> Result<TimeDelayMatrix> {
    if !(k > 0.0) {
        return domain("k must be positive");
    }
    let h = 1e-5 * k;
    if k - h <= 0.0 || h == 0.0 {
        return Err(Error::Diagnostics("finite-difference step underflow".into()));
    }
    let s = |kk: f64| s_at_energy(params, kk * kk).map(|m| m.entries);
    let ds = (s(k + h)? - s(k - h)?) / C64::new(2.0 * h, 0.0);
    let s0 = s(k)?;
    let sinv_ds = s0.lu().solve(&ds).ok_or(Error::Singular(f64::INFINITY))?;
    let t = sinv_ds / C64::new(0.0, 2.0 * k);
    if t.iter().any(|z| z.im.abs() > 1e-6 * (1.0 + z.re.abs())) {
        return Err(Error::Diagnostics("time delay has an imaginary part".into()));
    }
    Ok(TimeDelayMatrix { entries: t.map(|z| z.re), k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dirichlet_and_neumann() {
        let n = 3;
        let dir = VertexBoundaryMatrices::new(DMatrix::identity(n, n), DMatrix::zeros(n, n)).unwrap();
        let s = s_matrix_generic(&dir, c(0.7)).unwrap();
        assert!((s.entries + DMatrix::<C64>::identity(n, n)).iter().all(|z| z.norm() < 1e-15));
        let neu = VertexBoundaryMatrices::new(DMatrix::zeros(n, n), DMatrix::identity(n, n)).unwrap();
        let s = s_matrix_generic(&neu, c(0.7)).unwrap();
        assert!((s.entries - DMatrix::<C64>::identity(n, n)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn walsh_matrices_swap_edges() {
        let p = BoundaryParams::walsh(&[0.5, 0.5]).unwrap();
        let m = boundary_matrices(&p, 1.0).unwrap();
        assert_eq!(m.rank(), 2);
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).map(c);
        for kappa in [0.5, 1.0, 2.0] {
            let s = s_matrix_generic(&m, c(kappa)).unwrap();
            assert!((s.entries - &want).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn rank_deficient_pair_is_rejected() {
        let z = DMatrix::<f64>::zeros(2, 2);
        assert!(VertexBoundaryMatrices::new(z.clone(), z).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let p = BoundaryParams::walsh(&[1.0 / 3.0; 3]).unwrap();
        let s = s_closed_form(&p, 0.3).unwrap().real(0.0).unwrap();
        for k in 0..3 {
            for m in 0..3 {
                let want = if k == m { -1.0 / 3.0 } else { 2.0 / 3.0 };
                assert!((s[(k, m)] - want).abs() < 1e-15);
            }
        }
        let p = BoundaryParams::elastic(&[0.6, 0.4], 1.0).unwrap();
        let s = s_closed_form(&p, 0.5).unwrap().real(0.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-0.4, 0.4, 0.6, -0.6]);
        assert!((s - want).amax() < 1e-15);
        let p = BoundaryParams::general(&[0.5, 0.5], 1.0, 2.0).unwrap();
        let s = s_closed_form(&p, 0.5).unwrap().real(0.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0]);
        assert!((s - want).amax() < 1e-15);
    }

    #[test]
    fn generic_matches_closed_form_for_every_kind() {
        let w = [0.2, 0.45, 0.35];
        for p in [
            BoundaryParams::walsh(&w).unwrap(),
            BoundaryParams::elastic(&w, 1.0).unwrap(),
            BoundaryParams::sticky(&w, 2.0).unwrap(),
            BoundaryParams::general(&w, 1.0, 2.0).unwrap(),
            BoundaryParams::stopped_killed(3, 1.0).unwrap(),
        ] {
            for lambda in [0.01, 0.25, 0.5, 1.0, 2.0, 50.0] {
                let g = s_generic_at_lambda(&p, lambda).unwrap();
                let cf = s_closed_form(&p, lambda).unwrap();
                assert!(g.max_abs_diff(&cf) < 1e-10, "{:?} λ={lambda}", p.kind());
            }
        }
    }

    #[test]
    fn reference_matrices_reproduce_only_their_reference_point() {
        let p = BoundaryParams::sticky(&[0.5, 0.5], 2.0).unwrap();
        let lambda0 = 0.5;
        let s0 = s_closed_form(&p, lambda0).unwrap().real(0.0).unwrap();
        let m = reference_boundary_matrices(&s0, lambda0).unwrap();
        let at_ref = s_matrix_generic(&m, c(1.0)).unwrap();
        assert!(at_ref.max_abs_diff(&s_closed_form(&p, lambda0).unwrap()) < 1e-12);
        // Away from λ₀ the constant pair has eigenvalue (2q − γq₀²)/(2q + γq₀²) on constants.
        let (gamma, q0) = (2.0, 1.0);
        for lambda in [0.25, 1.0] {
            let q = (2.0f64 * lambda).sqrt();
            let s = s_matrix_generic(&m, c(q)).unwrap().real(1e-14).unwrap();
            let sigma = (2.0 * q - gamma * q0 * q0) / (2.0 * q + gamma * q0 * q0);
            let closed = (2.0 - gamma * q) / (2.0 + gamma * q);
            assert!((s.row_sum()[0] - sigma).abs() < 1e-12);
            assert!((sigma - closed).abs() > 1e-2);
        }
    }

    #[test]
    fn walsh_algebra() {
        let r = s_walsh_properties(&BoundaryParams::walsh(&[0.5, 0.5]).unwrap()).unwrap();
        assert!(r.involution_defect < 1e-15 && (r.determinant + 1.0).abs() < 1e-15);
        let r = s_walsh_properties(&BoundaryParams::walsh(&[0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert!((r.determinant - 1.0).abs() < 1e-12);
        assert!(r.weighted_singular_values.iter().all(|s| (s - 1.0).abs() < 1e-12));
        let r = s_walsh_properties(&BoundaryParams::walsh(&[1.0]).unwrap()).unwrap();
        assert!((r.determinant - 1.0).abs() < 1e-15);
        let r = s_walsh_properties(&BoundaryParams::walsh(&[0.9, 0.1]).unwrap()).unwrap();
        assert!(r.euclidean_norm > 1.5);
        let r = s_walsh_properties(&BoundaryParams::walsh(&[0.25; 4]).unwrap()).unwrap();
        assert!(r.euclidean_norm <= 1.0 + 1e-12);
    }

    #[test]
    fn resolvent_extraction_reproduces_s() {
        let p = BoundaryParams::general(&[0.3, 0.7], 0.8, 1.5).unwrap();
        let s = s_from_resolvent(&p, 0.6, 1e-10).unwrap();
        let cf = s_closed_form(&p, 0.6).unwrap().real(0.0).unwrap();
        assert!((s - cf).amax() < 1e-8);
    }

    fn elastic_samples(w: &[f64], beta: f64) -> Vec<(f64, DMatrix<f64>)> {
        let p = elastic_or_walsh(w, beta);
        [1e3, 1e4, 1e-6, 1e-7, 1e-8]
            .iter()
            .map(|&l| (l, s_closed_form(&p, l).unwrap().real(0.0).unwrap()))
            .collect()
    }

    fn elastic_or_walsh(w: &[f64], beta: f64) -> BoundaryParams {
        if beta == 0.0 {
            BoundaryParams::walsh(w).unwrap()
        } else {
            BoundaryParams::elastic(w, beta).unwrap()
        }
    }

    #[test]
    fn parameter_recovery() {
        let r = recover_params_from_s(&elastic_samples(&[0.6, 0.4], 1.0), 1e-6).unwrap();
        assert!((r.w[0] - 0.6).abs() < 1e-6 && (r.w[1] - 0.4).abs() < 1e-6);
        assert!((r.beta - 1.0).abs() < 1e-6);
        assert!((r.beta_threshold.unwrap() - 1.0).abs() < 1e-6);
        let r = recover_params_from_s(&elastic_samples(&[0.6, 0.4], 0.0), 1e-6).unwrap();
        assert_eq!(r.beta, 0.0);
        assert!(r.beta_threshold.is_none());
        let r = recover_params_from_s(&elastic_samples(&[1.0, 0.0], 5.0), 1e-6).unwrap();
        assert!((r.w[0] - 1.0).abs() < 1e-6 && r.w[1].abs() < 1e-6);
        assert!((r.beta - 5.0).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_routes_fail() {
        let mut samples = elastic_samples(&[0.6, 0.4], 1.0);
        let p = BoundaryParams::elastic(&[0.6, 0.4], 3.0).unwrap();
        samples[0].1 = s_closed_form(&p, samples[0].0).unwrap().real(0.0).unwrap();
        samples[1].1 = s_closed_form(&p, samples[1].0).unwrap().real(0.0).unwrap();
        assert!(recover_params_from_s(&samples, 1e-6).is_err());
    }

    #[test]
    fn bound_state_examples() {
        let b = bound_state(2.0, 2).unwrap();
        assert_eq!(b.energy, -1.0);
        assert!((b.norm_squared().unwrap() - 1.0).abs() < 1e-10);
        assert!(b.eigen_residual() < 1e-6);
        let b = bound_state(4.0, 1).unwrap();
        assert_eq!(b.c, 0.5 * (4.0f64 / 1.0).sqrt());
        assert!(bound_state(0.0, 1).is_err());
    }

    #[test]
    fn bound_state_is_a_pole_of_the_quantum_s_matrix() {
        // σ(k) = (2 − iγk)/(2 + iγk) blows up at k = 2i/γ.
        let gamma = 2.0;
        let sigma = |k: C64| (c(2.0) - C64::i() * k * gamma) / (c(2.0) + C64::i() * k * gamma);
        let near = sigma(C64::new(0.0, 2.0 / gamma) + c(1e-9));
        assert!(near.norm() > 1e8);
    }

    #[test]
    fn time_delay_examples() {
        let t = time_delay(2.0, 3, 1.0).unwrap();
        assert!((t.trace() + 0.5).abs() < 1e-15);
        assert!(time_delay(2.0, 2, 1e6).unwrap().trace().abs() < 1e-11);
        assert!(time_delay(0.0, 2, 1.0).unwrap().entries.amax() == 0.0);
        let p = BoundaryParams::sticky(&[0.5, 0.5], 2.0).unwrap();
        for k in [0.3, 1.0, 2.5] {
            let num = time_delay_numeric(&p, k).unwrap();
            let cf = time_delay(2.0, 2, k).unwrap();
            assert!((num.entries - cf.entries).amax() < 1e-6);
        }
    }

    #[test]
    fn quantum_unitarity_for_equal_weight_sticky() {
        let p = BoundaryParams::sticky(&[1.0 / 3.0; 3], 2.0).unwrap();
        for e in [0.5, 1.0, 4.0] {
            assert!(s_at_energy(&p, e).unwrap().unitarity_defect() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn row_scaling_leaves_s_invariant(
            raw in proptest::collection::vec(0.05f64..1.0, 3),
            cs in proptest::collection::vec(-1.0f64..1.0, 9),
            lambda in 0.05f64..5.0,
            beta in 0.0f64..3.0,
        ) {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let p = elastic_or_walsh(&w, beta);
            let m = boundary_matrices(&p, lambda).unwrap();
            let cm = DMatrix::from_row_slice(3, 3, &cs) + DMatrix::<f64>::identity(3, 3) * 3.0;
            let kappa = c((2.0 * lambda).sqrt());
            let s1 = s_matrix_generic(&m, kappa).unwrap();
            let s2 = s_matrix_generic(&m.scaled(&cm), kappa).unwrap();
            prop_assert!(s1.max_abs_diff(&s2) < 1e-10);
        }

        #[test]
        fn walsh_determinant_and_involution(raw in proptest::collection::vec(0.01f64..1.0, 1..6)) {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let r = s_walsh_properties(&BoundaryParams::walsh(&w).unwrap()).unwrap();
            prop_assert!(r.involution_defect < 1e-12);
            prop_assert!((r.determinant - r.expected_determinant).abs() < 1e-12);
        }
    }
}
