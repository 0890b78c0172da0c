//! Time spent at a sticky vertex: the atom grows with γ and the density loses the same mass.

use stargraph::kernels::{total_density_mass, vertex_atom};
use stargraph::{BoundaryParams, GraphPoint};

fn main() -> stargraph::Result<()> {
    let w = BoundaryParams::equal_weights(2);
    let t = 1.0;
    println!("gamma\tatom(v->v)\tdensity mass\tsum");
    for gamma in [0.0, 0.5, 1.0, 2.0, 8.0] {
        let p = BoundaryParams::sticky(&w, gamma)?;
        let atom = vertex_atom(&p, t, GraphPoint::Vertex)?;
        let mass = total_density_mass(&p, t, GraphPoint::Vertex)?;
        println!("{gamma}\t{atom:.10}\t{mass:.10}\t{:.12}", atom + mass);
    }
    Ok(())
}
