//! Path simulation.
//!
//! Walsh, elastic and stopped-and-killed endpoints are drawn exactly from a
//! first-hit decomposition. Sticky and general processes run the Walsh pair
//! `(X, L)` on internal time `u` and read it off at external time
//! `h = u + γL_u`. Every internal step is an exact draw; when a vertex step
//! overshoots the target external time or the killing level, the step is
//! resolved by exact first-passage splitting of its local-time path, so the
//! only approximation left is the local-time resolution [`LEVEL_RESOLUTION`].

use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::graph::{BoundaryParams, GraphPoint, ProcessKind};
use crate::samplers::{
    draw_bessel3_bridge, draw_conditioned_position, draw_edge, draw_first_hit_time, draw_passage_split,
    draw_vertex_joint, RandomStream,
};

/// Local-time gap below which a first passage is treated as a single excursion.
pub const LEVEL_RESOLUTION: f64 = 1e-10;

/// The state of one path at a fixed external time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointSample {
    /// `Cemetery` when killed.
    pub position: GraphPoint,
    /// Vertex local time on the process's own scale.
    pub local_time: f64,
    pub survived: bool,
    /// Whether the draw is exact (no discretization at all).
    pub exact: bool,
}

/// One breakpoint of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonPoint {
    /// Internal (Walsh) time.
    pub u: f64,
    /// External time `u + γL`.
    pub h: f64,
    pub position: GraphPoint,
    pub local_time: f64,
    pub alive: bool,
}

/// Breakpoints of a path in increasing internal time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    pub points: Vec<SkeletonPoint>,
    pub max_step: f64,
}

impl PathSkeleton {
    pub fn last(&self) -> &SkeletonPoint {
        self.points.last().expect("a skeleton has at least its starting point")
    }

    /// External time at internal time `u`, linear between breakpoints.
    pub fn external_time(&self, u: f64) -> f64 {
        interpolate(&self.points, u, |p| p.u, |p| p.h)
    }

    /// Internal time at external time `h`, linear between breakpoints.
    pub fn internal_time(&self, h: f64) -> f64 {
        interpolate(&self.points, h, |p| p.h, |p| p.u)
    }
}

fn interpolate(points: &[SkeletonPoint], at: f64, x: impl Fn(&SkeletonPoint) -> f64, y: impl Fn(&SkeletonPoint) -> f64) -> f64 {
    let i = points.partition_point(|p| x(p) < at);
    if i == 0 {
        return y(&points[0]);
    }
    if i == points.len() {
        return y(&points[i - 1]);
    }
    let (a, b) = (&points[i - 1], &points[i]);
    let span = x(b) - x(a);
    if span == 0.0 {
        return y(b);
    }
    y(a) + (at - x(a)) / span * (y(b) - y(a))
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Largest internal step taken from the vertex.
    pub max_step: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(max_step: f64, horizon: f64, n_paths: usize, seed: u64) -> Result<Self> {
        if !(max_step > 0.0 && horizon > 0.0 && max_step <= horizon) {
            return domain("need 0 < max_step ≤ horizon");
        }
        if n_paths == 0 {
            return domain("need at least one path");
        }
        Ok(Self { max_step, horizon, n_paths, seed })
    }
}

fn check_start(params: &BoundaryParams, xi: GraphPoint, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain("time must be finite and positive");
    }
    if xi.is_cemetery() {
        return domain("paths start on the graph");
    }
    params.graph().check(xi)
}

/// Exact Walsh endpoint: first hit of the vertex, then a Maxwell draw of `(|B|, L)`.
pub fn endpoint_walsh(params: &BoundaryParams, xi: GraphPoint, t: f64, rs: &mut RandomStream) -> Result<EndpointSample> {
    check_start(params, xi, t)?;
    Ok(walsh_pair(params.w(), xi, t, rs))
}

fn walsh_pair(w: &[f64], xi: GraphPoint, t: f64, rs: &mut RandomStream) -> EndpointSample {
    let mut remaining = t;
    if let GraphPoint::Interior { edge, x } = xi {
        let hit = draw_first_hit_time(x, rs);
        if hit > t {
            let y = draw_conditioned_position(x, t, rs);
            return EndpointSample {
                position: GraphPoint::Interior { edge, x: y },
                local_time: 0.0,
                survived: true,
                exact: true,
            };
        }
        remaining = t - hit;
    }
    let d = draw_vertex_joint(remaining, w, rs);
    EndpointSample {
        position: at_distance(d.edge, d.excursion_height),
        local_time: d.local_time_increment,
        survived: true,
        exact: true,
    }
}

fn at_distance(edge: usize, x: f64) -> GraphPoint {
    if x > 0.0 {
        GraphPoint::Interior { edge, x }
    } else {
        GraphPoint::Vertex
    }
}

/// Exact elastic endpoint: a Walsh endpoint killed with probability `1 − e^{−βL_t}`.
pub fn endpoint_elastic(params: &BoundaryParams, xi: GraphPoint, t: f64, rs: &mut RandomStream) -> Result<EndpointSample> {
    check_start(params, xi, t)?;
    let mut s = walsh_pair(params.w(), xi, t, rs);
    let level = rs.exponential(params.beta());
    if s.local_time > level {
        s.position = GraphPoint::Cemetery;
        s.survived = false;
    }
    Ok(s)
}

/// Exact endpoint of the process stopped at the vertex and killed there at rate `β`.
pub fn endpoint_stopped_killed(params: &BoundaryParams, xi: GraphPoint, t: f64, rs: &mut RandomStream) -> Result<EndpointSample> {
    check_start(params, xi, t)?;
    let hold = match xi {
        GraphPoint::Interior { edge, x } => {
            let hit = draw_first_hit_time(x, rs);
            if hit > t {
                let y = draw_conditioned_position(x, t, rs);
                return Ok(EndpointSample {
                    position: GraphPoint::Interior { edge, x: y },
                    local_time: 0.0,
                    survived: true,
                    exact: true,
                });
            }
            t - hit
        }
        _ => t,
    };
    let killed = rs.exponential(params.beta()) < hold;
    Ok(EndpointSample {
        position: if killed { GraphPoint::Cemetery } else { GraphPoint::Vertex },
        local_time: 0.0,
        survived: !killed,
        exact: true,
    })
}

/// Outcome of resolving the final vertex step.
struct Resolved {
    /// Internal time elapsed within the step.
    du: f64,
    /// Local time gained within the step.
    dl: f64,
    position: GraphPoint,
    alive: bool,
}

struct Engine<'a> {
    w: &'a [f64],
    gamma: f64,
    kill_level: f64,
    max_step: f64,
}

impl Engine<'_> {
    /// Locates external time `target` inside a first passage of the local time
    /// from `la` to `lb` over internal times `[ta, tb]`, where
    /// `ta + γla ≤ target < tb + γlb`.
    fn resolve_levels(&self, mut ta: f64, mut tb: f64, mut la: f64, mut lb: f64, target: f64, rs: &mut RandomStream) -> Resolved {
        while lb - la > LEVEL_RESOLUTION {
            let mid = 0.5 * (la + lb);
            let tm = ta + draw_passage_split(mid - la, lb - mid, tb - ta, rs);
            if target < tm + self.gamma * mid {
                tb = tm;
                lb = mid;
            } else {
                ta = tm;
                la = mid;
            }
        }
        // One excursion at local time la, then the remaining gap spent at the vertex.
        let s = target - self.gamma * la - ta;
        let d = tb - ta;
        if s < d {
            let x = draw_bessel3_bridge(0.0, d, s, rs);
            let edge = draw_edge(self.w, rs);
            Resolved { du: ta + s, dl: la, position: at_distance(edge, x), alive: true }
        } else {
            let dl = if self.gamma > 0.0 { (la + (target - tb - self.gamma * la) / self.gamma).clamp(la, lb) } else { lb };
            Resolved { du: tb, dl, position: GraphPoint::Vertex, alive: true }
        }
    }

    /// Resolves a vertex step of length `step` that drew `(x, y, edge)` but either
    /// overshoots external time `target` or crosses the remaining killing level.
    fn resolve_step(&self, step: f64, x: f64, y: f64, edge: usize, target: f64, kill_left: f64, rs: &mut RandomStream) -> Resolved {
        // Last zero before the step end: density ∝ h(y, g) h(x, step − g).
        let g = if x > 0.0 && y > 0.0 {
            draw_passage_split(y, x, step, rs)
        } else if y > 0.0 {
            step
        } else {
            0.0
        };
        if y > kill_left {
            let tk = draw_passage_split(kill_left, y - kill_left, g, rs);
            if tk + self.gamma * kill_left <= target {
                return Resolved { du: tk, dl: kill_left, position: GraphPoint::Cemetery, alive: false };
            }
            return self.resolve_levels(0.0, tk, 0.0, kill_left, target, rs);
        }
        if target >= g + self.gamma * y {
            let u = (target - self.gamma * y).min(step);
            let position = if u >= step {
                at_distance(edge, x)
            } else {
                at_distance(edge, draw_bessel3_bridge(x, step - g, u - g, rs))
            };
            return Resolved { du: u, dl: y, position, alive: true };
        }
        self.resolve_levels(0.0, g, 0.0, y, target, rs)
    }

    fn run(&self, xi: GraphPoint, t: f64, rs: &mut RandomStream, mut record: Option<&mut Vec<SkeletonPoint>>) -> SkeletonPoint {
        let mut state = SkeletonPoint { u: 0.0, h: 0.0, position: xi, local_time: 0.0, alive: true };
        let push = |p: SkeletonPoint, rec: &mut Option<&mut Vec<SkeletonPoint>>| {
            if let Some(r) = rec.as_deref_mut() {
                r.push(p);
            }
        };
        push(state, &mut record);
        loop {
            let remaining = t - state.h;
            match state.position {
                GraphPoint::Interior { edge, x } => {
                    let hit = draw_first_hit_time(x, rs);
                    if hit >= remaining {
                        let y = draw_conditioned_position(x, remaining, rs);
                        state.u += remaining;
                        state.position = GraphPoint::Interior { edge, x: y };
                        state.h = state.u + self.gamma * state.local_time;
                        push(state, &mut record);
                        return state;
                    }
                    state.u += hit;
                    state.h = state.u + self.gamma * state.local_time;
                    state.position = GraphPoint::Vertex;
                    push(state, &mut record);
                }
                GraphPoint::Vertex => {
                    let step = self.max_step.min(remaining);
                    let d = draw_vertex_joint(step, self.w, rs);
                    let (x, y) = (d.excursion_height, d.local_time_increment);
                    let kill_left = self.kill_level - state.local_time;
                    if y <= kill_left && step + self.gamma * y < remaining {
                        state.u += step;
                        state.local_time += y;
                        state.h = state.u + self.gamma * state.local_time;
                        state.position = at_distance(d.edge, x);
                        push(state, &mut record);
                        continue;
                    }
                    let r = self.resolve_step(step, x, y, d.edge, remaining, kill_left, rs);
                    state.u += r.du;
                    state.local_time += r.dl;
                    state.h = state.u + self.gamma * state.local_time;
                    state.position = r.position;
                    state.alive = r.alive;
                    push(state, &mut record);
                    return state;
                }
                GraphPoint::Cemetery => return state,
            }
        }
    }
}

fn engine<'a>(params: &'a BoundaryParams, max_step: f64, rs: &mut RandomStream) -> Result<Engine<'a>> {
    let kill_level = match params.kind() {
        ProcessKind::Walsh | ProcessKind::Sticky => f64::INFINITY,
        ProcessKind::Elastic | ProcessKind::General => rs.exponential(params.beta()),
        ProcessKind::StoppedKilled => return domain("the stopped process has no skeleton engine"),
    };
    Ok(Engine { w: params.w(), gamma: params.gamma(), kill_level, max_step })
}

/// Breakpoints of one path up to external time `config.horizon`.
///
/// Away from the vertex a path jumps straight to its first hit, or to its
/// conditioned position at the horizon. At the vertex it takes internal
/// steps of at most `max_step`, each an exact draw of `(|B|, L, edge)`.
pub fn skeleton_simulate(params: &BoundaryParams, xi: GraphPoint, config: &SimConfig, rs: &mut RandomStream) -> Result<PathSkeleton> {
    check_start(params, xi, config.horizon)?;
    let mut points = Vec::new();
    if params.kind() == ProcessKind::StoppedKilled {
        let end = endpoint_stopped_killed(params, xi, config.horizon, rs)?;
        points.push(SkeletonPoint { u: 0.0, h: 0.0, position: xi, local_time: 0.0, alive: true });
        let u = config.horizon;
        points.push(SkeletonPoint { u, h: u, position: end.position, local_time: 0.0, alive: end.survived });
        return Ok(PathSkeleton { points, max_step: config.max_step });
    }
    let e = engine(params, config.max_step, rs)?;
    e.run(xi, config.horizon, rs, Some(&mut points));
    Ok(PathSkeleton { points, max_step: config.max_step })
}

/// Sticky or general endpoint at external time `t`.
pub fn endpoint_sticky_general(
    params: &BoundaryParams,
    xi: GraphPoint,
    t: f64,
    config: &SimConfig,
    rs: &mut RandomStream,
) -> Result<EndpointSample> {
    check_start(params, xi, t)?;
    if !matches!(params.kind(), ProcessKind::Sticky | ProcessKind::General) {
        return domain("the skeleton endpoint is for sticky and general kinds");
    }
    let e = engine(params, config.max_step, rs)?;
    let end = e.run(xi, t, rs, None);
    Ok(EndpointSample { position: end.position, local_time: end.local_time, survived: end.alive, exact: false })
}

/// Endpoint at time `t` with the sampler appropriate for the kind.
pub fn endpoint(params: &BoundaryParams, xi: GraphPoint, t: f64, config: &SimConfig, rs: &mut RandomStream) -> Result<EndpointSample> {
    match params.kind() {
        ProcessKind::Walsh => endpoint_walsh(params, xi, t, rs),
        ProcessKind::Elastic => endpoint_elastic(params, xi, t, rs),
        ProcessKind::StoppedKilled => endpoint_stopped_killed(params, xi, t, rs),
        ProcessKind::Sticky | ProcessKind::General => endpoint_sticky_general(params, xi, t, config, rs),
    }
}

/// `config.n_paths` endpoints at `config.horizon`; path `i` uses stream `i`.
pub fn simulate_endpoints(params: &BoundaryParams, xi: GraphPoint, config: &SimConfig) -> Result<Vec<EndpointSample>> {
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomStream::new(config.seed, i);
            endpoint(params, xi, config.horizon, config, &mut rs)
        })
        .collect()
}

/// `config.n_paths` skeletons; path `i` uses stream `i`.
pub fn simulate_skeletons(params: &BoundaryParams, xi: GraphPoint, config: &SimConfig) -> Result<Vec<PathSkeleton>> {
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomStream::new(config.seed, i);
            skeleton_simulate(params, xi, config, &mut rs)
        })
        .collect()
}

/// Samples of the exit time of the ball of radius `ε` around the vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingReport {
    pub epsilon: f64,
    pub gamma: f64,
    /// Exit times of the Walsh process, `H^w`.
    pub walsh_times: Vec<f64>,
    /// Local time at exit, `L^w(H^w)`.
    pub local_times: Vec<f64>,
    /// Exit times read on the sticky clock `u + γL` during simulation.
    pub sticky_times: Vec<f64>,
    /// `max |H^s − (H^w + γL^w(H^w))|` over paths.
    pub time_change_defect: f64,
    pub grid_step: f64,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

impl HittingReport {
    pub fn walsh_mean(&self) -> (f64, f64) {
        mean_and_se(&self.walsh_times)
    }
    pub fn sticky_mean(&self) -> (f64, f64) {
        mean_and_se(&self.sticky_times)
    }
    pub fn local_time_mean(&self) -> (f64, f64) {
        mean_and_se(&self.local_times)
    }
}

/// Grid steps per `ε²` in [`mc_hitting_time_moments`].
pub const HITTING_GRID: f64 = 500.0;

/// Monte Carlo exit times of the `ε`-ball from the vertex.
///
/// The distance to the vertex and its local time are drawn exactly on a grid
/// of step `ε²/500`; an exit between grid points is detected with the
/// Brownian-bridge crossing probability of level `ε` and dated at the step
/// midpoint. The sticky clock advances by `δ + γΔL` per step.
pub fn mc_hitting_time_moments(params: &BoundaryParams, epsilon: f64, n: usize, seed: u64) -> Result<HittingReport> {
    if !matches!(params.kind(), ProcessKind::Walsh | ProcessKind::Sticky) {
        return domain("exit-time moments are for Walsh and sticky kinds");
    }
    if !(epsilon > 0.0) || n == 0 {
        return domain("need ε > 0 and at least one path");
    }
    let gamma = params.gamma();
    let delta = epsilon * epsilon / HITTING_GRID;
    let one = [1.0];
    let paths: Vec<(f64, f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomStream::new(seed, i);
            let (mut x, mut l, mut u, mut clock) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            loop {
                let (x1, dl) = if x > 0.0 {
                    let hit = draw_first_hit_time(x, &mut rs);
                    if hit > delta {
                        (draw_conditioned_position(x, delta, &mut rs), 0.0)
                    } else {
                        let d = draw_vertex_joint(delta - hit, &one, &mut rs);
                        (d.excursion_height, d.local_time_increment)
                    }
                } else {
                    let d = draw_vertex_joint(delta, &one, &mut rs);
                    (d.excursion_height, d.local_time_increment)
                };
                let crossed = x1 >= epsilon
                    || (x > 0.0 && x1 > 0.0 && rs.uniform() < (-2.0 * (epsilon - x) * (epsilon - x1) / delta).exp());
                l += dl;
                if crossed {
                    let hw = u + 0.5 * delta;
                    let hs = clock + 0.5 * delta + gamma * dl;
                    return (hw, l, hs);
                }
                u += delta;
                clock += delta + gamma * dl;
                x = x1;
            }
        })
        .collect();
    let walsh_times: Vec<f64> = paths.iter().map(|p| p.0).collect();
    let local_times: Vec<f64> = paths.iter().map(|p| p.1).collect();
    let sticky_times: Vec<f64> = paths.iter().map(|p| p.2).collect();
    let time_change_defect = paths.iter().map(|p| (p.2 - (p.0 + gamma * p.1)).abs()).fold(0.0, f64::max);
    Ok(HittingReport { epsilon, gamma, walsh_times, local_times, sticky_times, time_change_defect, grid_step: delta })
}

fn csv_position(p: GraphPoint) -> (i64, f64) {
    match p {
        GraphPoint::Vertex => (0, 0.0),
        GraphPoint::Interior { edge, x } => (edge as i64, x),
        GraphPoint::Cemetery => (-1, 0.0),
    }
}

/// Writes endpoints as `path_id,edge,x,local_time,alive`.
///
/// The vertex is edge `0`, the cemetery edge `-1`.
pub fn write_endpoints_csv(out: &mut impl Write, samples: &[EndpointSample]) -> std::io::Result<()> {
    writeln!(out, "path_id,edge,x,local_time,alive")?;
    for (i, s) in samples.iter().enumerate() {
        let (edge, x) = csv_position(s.position);
        writeln!(out, "{i},{edge},{x:.16e},{:.16e},{}", s.local_time, s.survived as u8)?;
    }
    Ok(())
}

/// Writes skeleton breakpoints as `path_id,u,t_external,edge,x,local_time,alive`.
pub fn write_skeletons_csv(out: &mut impl Write, paths: &[PathSkeleton]) -> std::io::Result<()> {
    writeln!(out, "path_id,u,t_external,edge,x,local_time,alive")?;
    for (i, p) in paths.iter().enumerate() {
        for q in &p.points {
            let (edge, x) = csv_position(q.position);
            writeln!(out, "{i},{:.16e},{:.16e},{edge},{x:.16e},{:.16e},{}", q.u, q.h, q.local_time, q.alive as u8)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{transition_kernel, vertex_atom, KernelQuery};
    use proptest::prelude::*;

    fn pt(k: usize, x: f64) -> GraphPoint {
        GraphPoint::interior(k, x).unwrap()
    }

    fn fraction(samples: &[EndpointSample], pred: impl Fn(&EndpointSample) -> bool) -> (f64, f64) {
        let n = samples.len() as f64;
        let p = samples.iter().filter(|s| pred(s)).count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    #[test]
    fn walsh_edge_probabilities_and_local_time() {
        let p = BoundaryParams::walsh(&[0.3, 0.7]).unwrap();
        let cfg = SimConfig::new(0.01, 1.0, 100_000, 42).unwrap();
        let s = simulate_endpoints(&p, GraphPoint::Vertex, &cfg).unwrap();
        let (f, se) = fraction(&s, |e| e.position.edge() == Some(1));
        assert!((f - 0.3).abs() < 3.0 * se);
        let lt: Vec<f64> = s.iter().map(|e| e.local_time).collect();
        let (m, se) = mean_and_se(&lt);
        assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() < 3.0 * se);
        assert!(s.iter().all(|e| e.exact && e.survived));
    }

    #[test]
    fn elastic_survival_matches_kernel() {
        let p = BoundaryParams::elastic(&[0.5, 0.5], 1.0).unwrap();
        let cfg = SimConfig::new(0.01, 1.0, 100_000, 7).unwrap();
        let s = simulate_endpoints(&p, GraphPoint::Vertex, &cfg).unwrap();
        let (f, se) = fraction(&s, |e| e.survived);
        let want = 1.0 - transition_kernel(&p, &KernelQuery::atom(1.0, GraphPoint::Vertex)).unwrap().defect;
        assert!((f - want).abs() < 3.0 * se, "{f} vs {want}");
        assert!(s.iter().all(|e| e.survived == !e.position.is_cemetery()));
    }

    #[test]
    fn stopped_killed_atom() {
        let p = BoundaryParams::stopped_killed(2, 1.0).unwrap();
        let cfg = SimConfig::new(0.01, 1.0, 100_000, 9).unwrap();
        let s = simulate_endpoints(&p, pt(1, 1.0), &cfg).unwrap();
        let (f, se) = fraction(&s, |e| e.position.is_vertex());
        let want = vertex_atom(&p, 1.0, pt(1, 1.0)).unwrap();
        assert!((f - want).abs() < 3.0 * se);
        let p0 = BoundaryParams::stopped_killed(2, 1e-300).unwrap();
        let s = simulate_endpoints(&p0, pt(1, 1.0), &cfg).unwrap();
        let (f, se) = fraction(&s, |e| e.position.is_vertex());
        assert!((f - 0.3173105).abs() < 3.0 * se);
    }

    #[test]
    fn sticky_vertex_occupation() {
        let p = BoundaryParams::sticky(&[0.5, 0.5], 2.0).unwrap();
        let cfg = SimConfig::new(0.01, 1.0, 50_000, 3).unwrap();
        let s = simulate_endpoints(&p, GraphPoint::Vertex, &cfg).unwrap();
        let (f, se) = fraction(&s, |e| e.position.is_vertex());
        assert!((f - 0.5231566).abs() < 3.0 * se + 2e-3, "{f}");
    }

    #[test]
    fn general_survival_matches_kernel() {
        let p = BoundaryParams::general(&[0.6, 0.4], 1.0, 2.0).unwrap();
        let cfg = SimConfig::new(0.01, 1.0, 50_000, 5).unwrap();
        let s = simulate_endpoints(&p, GraphPoint::Vertex, &cfg).unwrap();
        let (f, se) = fraction(&s, |e| e.survived);
        let want = 1.0 - transition_kernel(&p, &KernelQuery::atom(1.0, GraphPoint::Vertex)).unwrap().defect;
        assert!((f - want).abs() < 3.0 * se + 2e-3, "{f} vs {want}");
    }

    #[test]
    fn hitting_moments_walsh_and_sticky() {
        let p = BoundaryParams::sticky(&[0.5, 0.5], 2.0).unwrap();
        let r = mc_hitting_time_moments(&p, 0.1, 20_000, 11).unwrap();
        let (m, se) = r.walsh_mean();
        assert!((m - 0.01).abs() < 3.0 * se + 0.01 / HITTING_GRID, "{m}");
        let (m, se) = r.sticky_mean();
        assert!((m - 0.21).abs() < 3.0 * se + 0.01 / HITTING_GRID, "{m}");
        let (m, se) = r.local_time_mean();
        assert!((m - 0.1).abs() < 3.0 * se);
        assert!(r.time_change_defect < 1e-12);
    }

    #[test]
    fn skeleton_invariants() {
        let p = BoundaryParams::general(&[0.2, 0.8], 0.5, 1.5).unwrap();
        let cfg = SimConfig::new(0.05, 2.0, 200, 1).unwrap();
        for sk in simulate_skeletons(&p, pt(2, 0.3), &cfg).unwrap() {
            let pts = &sk.points;
            for w in pts.windows(2) {
                assert!(w[1].u > w[0].u);
                assert!(w[1].local_time >= w[0].local_time);
                assert!(w[1].h - w[0].h >= w[1].u - w[0].u - 1e-12);
                if !w[0].position.is_vertex() && w[1].position.is_vertex() {
                    assert_eq!(w[0].local_time, w[1].local_time);
                }
            }
            for q in pts {
                assert!((q.h - (q.u + 1.5 * q.local_time)).abs() < 1e-12);
                assert!((sk.internal_time(sk.external_time(q.u)) - q.u).abs() < 1e-12);
            }
            let last = sk.last();
            if last.alive {
                assert!((last.h - 2.0).abs() < 1e-9, "{last:?}");
            } else {
                assert!(last.h <= 2.0 + 1e-9 && last.position.is_cemetery());
            }
        }
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let p = BoundaryParams::sticky(&[0.5, 0.5], 1.0).unwrap();
        let cfg = SimConfig::new(0.01, 1.0, 500, 99).unwrap();
        let a = simulate_endpoints(&p, GraphPoint::Vertex, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_endpoints(&p, GraphPoint::Vertex, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trips_positions() {
        let p = BoundaryParams::general(&[0.5, 0.5], 3.0, 1.0).unwrap();
        let cfg = SimConfig::new(0.1, 1.0, 50, 2).unwrap();
        let sk = simulate_skeletons(&p, GraphPoint::Vertex, &cfg).unwrap();
        let mut buf = Vec::new();
        write_skeletons_csv(&mut buf, &sk).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), sk.iter().map(|s| s.points.len()).sum::<usize>());
        let first: Vec<f64> = rows[1].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first[1], sk[0].points[1].u);
        assert_eq!(first[5], sk[0].points[1].local_time);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn endpoints_stay_on_the_graph(seed in any::<u64>(), x in 0.0f64..2.0, gamma in 0.0f64..3.0, beta in 0.0f64..2.0) {
            let p = BoundaryParams::from_simulator(&[0.4, 0.6], beta, gamma).unwrap();
            let xi = if x == 0.0 { GraphPoint::Vertex } else { pt(1, x) };
            let cfg = SimConfig::new(0.1, 1.0, 1, seed).unwrap();
            let mut rs = RandomStream::new(seed, 0);
            let e = endpoint(&p, xi, 1.0, &cfg, &mut rs).unwrap();
            prop_assert_eq!(e.survived, !e.position.is_cemetery());
            if let GraphPoint::Interior { edge, x } = e.position {
                prop_assert!(x > 0.0 && (1..=2).contains(&edge));
            }
            prop_assert!(e.local_time >= 0.0);
        }
    }
}
