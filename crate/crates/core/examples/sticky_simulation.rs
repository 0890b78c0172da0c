//! Sticky skeletons: fraction of time at the vertex against the kernel atom.

use stargraph::kernels::vertex_atom;
use stargraph::sim::{simulate_skeletons, SimConfig};
use stargraph::{BoundaryParams, GraphPoint};

fn main() -> stargraph::Result<()> {
    let p = BoundaryParams::sticky(&[0.5, 0.5], 2.0)?;
    let cfg = SimConfig::new(1e-2, 1.0, 20_000, 3)?;
    let paths = simulate_skeletons(&p, GraphPoint::Vertex, &cfg)?;
    let at_vertex = paths.iter().filter(|s| s.last().position.is_vertex()).count() as f64 / paths.len() as f64;
    let mean_l = paths.iter().map(|s| s.last().local_time).sum::<f64>() / paths.len() as f64;
    println!("P(X_1 = v): simulated {at_vertex:.4}, kernel {:.4}", vertex_atom(&p, 1.0, GraphPoint::Vertex)?);
    println!("mean local time at t=1: {mean_l:.4}");
    let first = &paths[0];
    println!("first path: {} skeleton points, internal time at t=1 {:.4}", first.points.len(), first.internal_time(1.0));
    Ok(())
}
