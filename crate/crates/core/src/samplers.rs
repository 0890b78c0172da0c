//! Exact random draws for Brownian motion at a vertex.
//!
//! Randomness is counter based: a [`RandomStream`] is a ChaCha20 keystream
//! addressed by `(seed, stream, counter)`, so a path with stream id `i` sees
//! the same numbers whichever thread simulates it. Normals use the Box–Muller
//! transform of two open-interval uniforms; the second variate is cached.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::PI;

/// A reproducible stream of uniforms and normals.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha20Rng,
    seed: u64,
    stream: u64,
    spare_normal: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at(seed, stream, 0)
    }

    /// The stream positioned `counter` 32-bit words into its keystream.
    pub fn at(seed: u64, stream: u64, counter: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(counter as u128);
        Self { rng, seed, stream, spare_normal: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Words consumed so far.
    pub fn counter(&self) -> u64 {
        self.rng.get_word_pos() as u64
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = 2.0 * PI * self.uniform();
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }
}

/// One step of the Walsh pair started at the vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexStepDraw {
    /// `|B_t|`.
    pub excursion_height: f64,
    /// `L_t`.
    pub local_time_increment: f64,
    /// Edge of the excursion straddling `t`, 1-based.
    pub edge: usize,
}

/// Edge index drawn with probabilities `w`.
pub fn draw_edge(w: &[f64], rs: &mut RandomStream) -> usize {
    let u = rs.uniform();
    let mut acc = 0.0;
    let mut last = 1;
    for (k, wk) in w.iter().enumerate() {
        if *wk > 0.0 {
            last = k + 1;
        }
        acc += wk;
        if u < acc {
            return k + 1;
        }
    }
    last
}

fn nonzero_normal(rs: &mut RandomStream) -> f64 {
    loop {
        let z = rs.normal();
        if z != 0.0 {
            return z;
        }
    }
}

/// First hitting time of the vertex from distance `x`: `x²/Z²`.
pub fn draw_first_hit_time(x: f64, rs: &mut RandomStream) -> f64 {
    let z = nonzero_normal(rs);
    x * x / (z * z)
}

/// Position at time `t` of Brownian motion from `x > 0` conditioned not to hit the vertex.
///
/// Proposes `y = x + Z√t` and accepts `y > 0` with probability
/// `1 − e^{−2xy/t}`, so accepted draws have density `p^D(t, x, ·)/P_x(H_v > t)`.
pub fn draw_conditioned_position(x: f64, t: f64, rs: &mut RandomStream) -> f64 {
    let sd = t.sqrt();
    loop {
        let y = x + sd * rs.normal();
        if y > 0.0 && rs.uniform() > bridge_crossing_prob(x, y, t) {
            return y;
        }
    }
}

/// `(|B_t|, L_t, edge)` for the Walsh pair started at the vertex.
///
/// The joint density `2(x+y)(2πt³)^{-1/2} e^{−(x+y)²/2t}` depends on `s = x + y`
/// alone. Integrating over `x ∈ [0, s]` gives `2s²(2πt³)^{-1/2} e^{−s²/2t}`,
/// the Maxwell law of `√t |N₃|`, and given `s` the split is uniform.
pub fn draw_vertex_joint(t: f64, w: &[f64], rs: &mut RandomStream) -> VertexStepDraw {
    let (z1, z2, z3) = (rs.normal(), rs.normal(), rs.normal());
    let s = t.sqrt() * (z1 * z1 + z2 * z2 + z3 * z3).sqrt();
    let x = s * rs.uniform();
    let edge = draw_edge(w, rs);
    VertexStepDraw { excursion_height: x, local_time_increment: s - x, edge }
}

/// Inverse local time at level `r` on the sticky scale: `r²/Z² + γr`.
pub fn draw_inverse_local_time(r: f64, gamma: f64, rs: &mut RandomStream) -> f64 {
    draw_first_hit_time(r, rs) + gamma * r
}

/// Lifetime `K_S + γS` with `S ~ Exp(β)`, returned with `S`.
pub fn draw_lifetime(beta: f64, gamma: f64, rs: &mut RandomStream) -> (f64, f64) {
    let s = rs.exponential(beta);
    (draw_inverse_local_time(s, gamma, rs), s)
}

/// Probability that a Brownian bridge from `x` to `y` over `dt` touches zero.
pub fn bridge_crossing_prob(x: f64, y: f64, dt: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 1.0;
    }
    (-2.0 * x * y / dt).exp()
}

/// Inverse Gaussian `IG(μ, λ)` by the Michael–Schucany–Haas transformation.
pub fn draw_inverse_gaussian(mu: f64, lambda: f64, rs: &mut RandomStream) -> f64 {
    let z = rs.normal();
    let c = mu * z * z / (2.0 * lambda);
    // μ(1 + c − √(c² + 2c)) written without cancellation.
    let x1 = mu / (1.0 + c + (c * c + 2.0 * c).sqrt());
    if rs.uniform() <= mu / (mu + x1) {
        x1
    } else {
        mu * mu / x1
    }
}

/// Splits a first passage across `a + b` taking time `d` at the passage of the intermediate level.
///
/// Returns `s ∈ (0, d)` with density proportional to `h(a, s) h(b, d − s)`,
/// where `h` is the hitting-time density. With `r = s/(d − s)` the density is
/// `(1 + r)` times the `IG(a/b, a²/d)` density: a mixture of that law (weight
/// `b/(a+b)`) and its size-biased version, which is the law of `μ²/IG`.
pub fn draw_passage_split(a: f64, b: f64, d: f64, rs: &mut RandomStream) -> f64 {
    if !(d > 0.0) {
        return 0.0;
    }
    let mu = a / b;
    let lambda = a * a / d;
    let ig = draw_inverse_gaussian(mu, lambda, rs);
    let r = if rs.uniform() < b / (a + b) { ig } else { mu * mu / ig };
    let s = d * r / (1.0 + r);
    s.clamp(0.0, d)
}

/// `|B_s|` for a three-dimensional Brownian bridge from `0` to `(x, 0, 0)` over `[0, d]`.
///
/// This is the Bessel(3) bridge, the law of an excursion away from the vertex
/// conditioned on its endpoint.
pub fn draw_bessel3_bridge(x: f64, d: f64, s: f64, rs: &mut RandomStream) -> f64 {
    let frac = (s / d).clamp(0.0, 1.0);
    let sd = (d * frac * (1.0 - frac)).max(0.0).sqrt();
    let c1 = frac * x + sd * rs.normal();
    let c2 = sd * rs.normal();
    let c3 = sd * rs.normal();
    (c1 * c1 + c2 * c2 + c3 * c3).sqrt()
}
