//! Analytic kernels as seen by the validation harness, with optional fault injection.

use crate::error::{domain, Result};
use crate::graph::{BoundaryParams, GraphPoint, ProcessKind};
use crate::kernels::{gauss, transition_density, vertex_atom, vertex_kernel_tail, ErfKernelParams};
use crate::special::normal_cdf;

/// Source of analytic kernel values for comparisons.
///
/// A corrupted oracle drops the image term `p_v` from the Dirichlet part, so
/// every comparison that exercises an interior start should fail.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Oracle {
    pub drop_image_term: bool,
}

impl Oracle {
    pub fn exact() -> Self {
        Self { drop_image_term: false }
    }

    pub fn corrupted() -> Self {
        Self { drop_image_term: true }
    }

    /// Density of `p(t, from, ·)` at an interior point.
    pub fn density(&self, params: &BoundaryParams, t: f64, from: GraphPoint, to: GraphPoint) -> Result<f64> {
        let p = transition_density(params, t, from, to)?;
        if !self.drop_image_term {
            return Ok(p);
        }
        match (from, to) {
            (GraphPoint::Interior { edge: k, x }, GraphPoint::Interior { edge: m, x: y }) if k == m => {
                Ok(p + gauss(t, x + y)?)
            }
            _ => Ok(p),
        }
    }

    /// Vertex atom of `p(t, from, ·)`.
    pub fn atom(&self, params: &BoundaryParams, t: f64, from: GraphPoint) -> Result<f64> {
        vertex_atom(params, t, from)
    }

    /// `∫₀^y p(t, from, (m, z)) dz`; `y = ∞` gives the mass on edge `m`.
    pub fn edge_cdf(&self, params: &BoundaryParams, t: f64, from: GraphPoint, m: usize, y: f64) -> Result<f64> {
        if from.is_cemetery() || m == 0 || m > params.n() || !(t > 0.0) || y < 0.0 {
            return domain("edge CDF needs a graph start, a valid edge, t > 0 and y ≥ 0");
        }
        let st = t.sqrt();
        let d0 = from.dist_to_vertex()?;
        let mut total = 0.0;
        if let GraphPoint::Interior { edge, x } = from {
            if edge == m {
                // ∫₀^y g(t, z − x) dz and ∫₀^y g(t, z + x) dz.
                let free = normal_cdf((y - x) / st) - normal_cdf(-x / st);
                let image = normal_cdf(-x / st) - normal_cdf(-(x + y) / st);
                total += if self.drop_image_term { free } else { free - image };
            }
        }
        if params.kind() != ProcessKind::StoppedKilled {
            let wm = params.w()[m - 1];
            if wm > 0.0 {
                let p = ErfKernelParams::of(params);
                let upper = if y.is_finite() { vertex_kernel_tail(t, d0 + y, &p)? } else { 0.0 };
                total += 2.0 * wm * (vertex_kernel_tail(t, d0, &p)? - upper);
            }
        }
        Ok(total)
    }
}
