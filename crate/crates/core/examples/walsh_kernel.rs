//! Walsh transition density on three edges, checked against total mass one.

use stargraph::kernels::{total_density_mass, transition_kernel, KernelQuery};
use stargraph::{BoundaryParams, GraphPoint};

fn main() -> stargraph::Result<()> {
    let p = BoundaryParams::walsh(&[0.2, 0.3, 0.5])?;
    let from = GraphPoint::interior(1, 0.5)?;
    for t in [0.1, 1.0, 4.0] {
        println!("t = {t}");
        for edge in 1..=3 {
            let to = GraphPoint::interior(edge, 0.7)?;
            let k = transition_kernel(&p, &KernelQuery::point(t, from, to))?;
            println!("  p({from} -> {to}) = {:.10}", k.density);
        }
        println!("  total mass = {:.12}", total_density_mass(&p, t, from)?);
    }
    Ok(())
}
