//! Kolmogorov–Smirnov statistics and edge-stratified endpoint-law comparisons.

use crate::error::{domain, Result};
use crate::graph::{BoundaryParams, GraphPoint};
use crate::sim::EndpointSample;
use crate::special::normal_cdf;

use super::oracle::Oracle;
use super::ComparisonReport;

/// Smallest sample accepted by [`ks_compare`].
pub const KS_MIN_SAMPLES: usize = 1000;

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u32 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a one-sample statistic `d` at size `n`, with Stephens' correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// `sup |F_n − F|` for samples sorted in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// `sup |F_n − G_m|` between two samples.
pub fn ks_two_sample_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS test of `samples` against `cdf`; passes when `p > alpha`.
pub fn ks_compare(id: &str, samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<ComparisonReport> {
    if samples.len() < KS_MIN_SAMPLES {
        return domain(format!("KS needs at least {KS_MIN_SAMPLES} samples, got {}", samples.len()));
    }
    let mut xs = samples.to_vec();
    let d = ks_statistic(&mut xs, cdf);
    let p = ks_p_value(d, xs.len());
    Ok(ComparisonReport::at_least(id, p, alpha).with_n(xs.len()).with_detail(format!("D={d:.3e}")))
}

fn two_sided_normal_p(z: f64) -> f64 {
    2.0 * normal_cdf(-z.abs())
}

/// Edge-stratified test of endpoint samples against the analytic time-`t` law from `from`.
///
/// Each edge with positive analytic mass gets a KS test of the conditional
/// distance law; the counts on each edge, at the vertex and in the cemetery
/// get a binomial z-test. The smallest p-value times the number of tests
/// (Bonferroni) must exceed `alpha`. An empty edge with positive mass fails.
pub fn endpoint_law(
    id: &str,
    params: &BoundaryParams,
    oracle: &Oracle,
    t: f64,
    from: GraphPoint,
    samples: &[EndpointSample],
    alpha: f64,
) -> Result<ComparisonReport> {
    let n = params.n();
    let total = samples.len();
    if total < KS_MIN_SAMPLES {
        return domain(format!("KS needs at least {KS_MIN_SAMPLES} samples, got {total}"));
    }
    let mut strata: Vec<Vec<f64>> = vec![Vec::new(); n];
    let (mut at_vertex, mut killed) = (0usize, 0usize);
    for s in samples {
        match s.position {
            GraphPoint::Interior { edge, x } => strata[edge - 1].push(x),
            GraphPoint::Vertex => at_vertex += 1,
            GraphPoint::Cemetery => killed += 1,
        }
    }
    let masses: Vec<f64> = (1..=n).map(|m| oracle.edge_cdf(params, t, from, m, f64::INFINITY)).collect::<Result<_>>()?;
    let atom = oracle.atom(params, t, from)?;
    let defect = 1.0 - atom - masses.iter().sum::<f64>();

    let mut p_values = Vec::new();
    let mut detail = Vec::new();
    for m in 1..=n {
        let mass = masses[m - 1];
        if mass <= 1e-12 {
            continue;
        }
        if strata[m - 1].len() < 2 {
            p_values.push(0.0);
            detail.push(format!("edge{m}:empty"));
            continue;
        }
        let d = ks_statistic(&mut strata[m - 1], |y| oracle.edge_cdf(params, t, from, m, y).unwrap_or(f64::NAN) / mass);
        let p = if d.is_nan() { 0.0 } else { ks_p_value(d, strata[m - 1].len()) };
        p_values.push(p);
        detail.push(format!("edge{m}:D={d:.3e},p={p:.3e}"));
    }
    let nf = total as f64;
    let mut categories: Vec<(String, usize, f64)> =
        (1..=n).map(|m| (format!("mass{m}"), strata[m - 1].len(), masses[m - 1])).collect();
    categories.push(("vertex".into(), at_vertex, atom));
    categories.push(("cemetery".into(), killed, defect));
    for (name, count, prob) in categories {
        let p = if !(-1e-12..=1.0 + 1e-12).contains(&prob) {
            0.0
        } else {
            let prob = prob.clamp(0.0, 1.0);
            let var = nf * prob * (1.0 - prob);
            if var <= 0.0 {
                if (count as f64 - nf * prob).abs() < 0.5 {
                    1.0
                } else {
                    0.0
                }
            } else {
                two_sided_normal_p((count as f64 - nf * prob) / var.sqrt())
            }
        };
        p_values.push(p);
        detail.push(format!("{name}:{count}/{total} vs {prob:.6},p={p:.3e}"));
    }
    let k = p_values.len() as f64;
    let adjusted = p_values.iter().copied().fold(1.0, f64::min) * k;
    Ok(ComparisonReport::at_least(id, adjusted.min(1.0), alpha).with_n(total).with_detail(detail.join(" ")))
}
