//! A reduced validation run; pass a filter such as `scattering` or `laplace.walsh` as the first argument.

use stargraph::validation::{all_pass, run_suite, SuiteConfig, REPORT_HEADER};

fn main() {
    let cfg = SuiteConfig {
        n_exact: 20_000,
        n_sticky: 10_000,
        max_step: 1e-2,
        only: Some(std::env::args().nth(1).unwrap_or_else(|| "scattering".into())),
        ..SuiteConfig::default()
    };
    let reports = run_suite(&cfg);
    println!("{REPORT_HEADER}");
    for r in &reports {
        println!("{r}");
    }
    println!("{} checks, all pass: {}", reports.len(), all_pass(&reports));
}
