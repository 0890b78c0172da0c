//! Exact Walsh endpoints: edge frequencies against the weights, written as CSV.

use stargraph::sim::{simulate_endpoints, write_endpoints_csv, SimConfig};
use stargraph::{BoundaryParams, GraphPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = [0.2, 0.3, 0.5];
    let p = BoundaryParams::walsh(&w)?;
    let cfg = SimConfig::new(1.0, 1.0, 100_000, 7)?;
    let samples = simulate_endpoints(&p, GraphPoint::Vertex, &cfg)?;
    let mut counts = [0usize; 3];
    for s in &samples {
        if let Some(k) = s.position.edge() {
            counts[k - 1] += 1;
        }
    }
    for (k, c) in counts.iter().enumerate() {
        println!("edge {}: frequency {:.4}, weight {}", k + 1, *c as f64 / samples.len() as f64, w[k]);
    }
    let path = std::env::temp_dir().join("walsh_endpoints.csv");
    write_endpoints_csv(&mut std::io::BufWriter::new(std::fs::File::create(&path)?), &samples)?;
    println!("wrote {}", path.display());
    Ok(())
}
