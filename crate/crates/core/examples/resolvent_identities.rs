//! The resolvent is the Laplace transform of the kernel and satisfies the vertex condition.

use stargraph::kernels::Target;
use stargraph::resolvents::{resolvent_kernel, ResolventQuery};
use stargraph::validation::analytic::{boundary_report, boundary_test_functions, laplace_numeric};
use stargraph::validation::Oracle;
use stargraph::{BoundaryParams, GraphPoint};

fn main() -> stargraph::Result<()> {
    let p = BoundaryParams::general(&[0.25, 0.75], 0.5, 1.0)?;
    let from = GraphPoint::interior(1, 0.4)?;
    for to in [Target::Point(GraphPoint::interior(2, 1.0)?), Target::Atom] {
        for lambda in [0.5, 2.0] {
            let r = resolvent_kernel(&p, &ResolventQuery { lambda, from, to })?;
            let closed = if to == Target::Atom { r.atom } else { r.density };
            let (num, tail) = laplace_numeric(&p, &Oracle::exact(), lambda, from, to, 1e-10)?;
            println!("lambda={lambda} {from}->{to}: closed {closed:.12} transform {num:.12} (tail <= {tail:.1e})");
        }
    }
    for (name, f) in boundary_test_functions(2) {
        let r = boundary_report(name, &p, 1.0, &f, 1e-3, 1e-3)?;
        println!("{r}");
    }
    Ok(())
}
