//! Vertex scattering matrices: Walsh algebra, a sticky bound state and parameter recovery.

use stargraph::scattering::{bound_state, recover_params_from_s, s_closed_form, s_walsh_properties};
use stargraph::BoundaryParams;

fn main() -> stargraph::Result<()> {
    let walsh = BoundaryParams::walsh(&[0.2, 0.3, 0.5])?;
    let s = s_closed_form(&walsh, 1.0)?.real(0.0)?;
    println!("Walsh S on three edges:{s}");
    let r = s_walsh_properties(&walsh)?;
    println!("|S^2 - I| = {:.2e}, det S = {} (want {})", r.involution_defect, r.determinant, r.expected_determinant);

    let b = bound_state(2.0, 2)?;
    println!("sticky gamma=2: bound state energy {}, norm^2 {:.12}", b.energy, b.norm_squared()?);

    // Large λ fixes β from the diagonal; small λ probes the threshold.
    let elastic = BoundaryParams::elastic(&[0.7, 0.3], 1.0)?;
    let samples = [1e3, 1e4, 1e-6, 1e-7, 1e-8]
        .iter()
        .map(|&l| Ok((l, s_closed_form(&elastic, l)?.real(0.0)?)))
        .collect::<stargraph::Result<Vec<_>>>()?;
    let rec = recover_params_from_s(&samples, 1e-6)?;
    println!("recovered w = {:?}, beta = {:.10}", rec.w, rec.beta);
    Ok(())
}
