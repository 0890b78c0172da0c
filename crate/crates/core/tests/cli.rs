//! End-to-end runs of the `stargraph` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn stargraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stargraph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, row: usize, name: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.nth(row).unwrap().split(',').nth(j).unwrap().parse().unwrap()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stargraph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn kernel_walsh_density() {
    let o = stargraph(&["kernel", "--n", "2", "--w", "0.5,0.5", "--beta", "0", "--gamma", "0", "--t", "1", "--from", "1:1", "--to", "2:1"]);
    assert!(o.status.success());
    assert!((column(&stdout(&o), 0, "density") - 0.0539910).abs() < 5e-8);
}

#[test]
fn kernel_atom_channels() {
    let o = stargraph(&["kernel", "--n", "2", "--w", "0.5,0.5", "--t", "1", "--from", "1:1", "--to", "atom"]);
    assert_eq!(column(&stdout(&o), 0, "atom"), 0.0);
    let o = stargraph(&["kernel", "--n", "2", "--gamma", "2", "--t", "1", "--from", "v", "--to", "atom"]);
    assert!((column(&stdout(&o), 0, "atom") - 0.5231566).abs() < 5e-8);
}

#[test]
fn resolvent_matches_first_passage_value() {
    let o = stargraph(&["resolvent", "--w", "0.5,0.5", "--lambda", "0.5", "--from", "1:1", "--to", "2:1"]);
    assert!((column(&stdout(&o), 0, "density") - (-2.0f64).exp()).abs() < 1e-12);
}

#[test]
fn scattering_reports() {
    let o = stargraph(&["scattering", "--n", "3", "--w", "0.3333333333333333,0.3333333333333333,0.3333333333333334"]);
    let text = stdout(&o);
    let det = text.lines().find(|l| l.starts_with("det,")).unwrap();
    let re: f64 = det.split(',').nth(4).unwrap().parse().unwrap();
    assert!((re - 1.0).abs() < 1e-12);

    let o = stargraph(&["scattering", "--w", "0.5,0.5", "--gamma", "2"]);
    let text = stdout(&o);
    let e = text.lines().find(|l| l.starts_with("bound_state_energy")).unwrap();
    assert_eq!(e.split(',').nth(4).unwrap().parse::<f64>().unwrap(), -1.0);

    let o = stargraph(&["scattering", "--w", "0.7,0.3", "--beta", "1"]);
    let w: Vec<f64> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with("recovered_w"))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!((w[0] - 0.7).abs() < 1e-6 && (w[1] - 0.3).abs() < 1e-6);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--kind", "sticky", "--gamma", "1", "--from", "1:0.5", "--t", "1", "--n-paths", "300", "--seed", "5"];
    let a = stargraph(&args);
    let b = stargraph(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = stargraph(&["simulate", "--kind", "sticky", "--gamma", "1", "--from", "1:0.5", "--n-paths", "300", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_walsh_mean_distance() {
    let o = stargraph(&["simulate", "--kind", "walsh", "--from", "v", "--t", "1", "--n-paths", "100000", "--seed", "1"]);
    let csv = stdout(&o);
    let xs: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let want = (2.0 / std::f64::consts::PI).sqrt();
    assert!((m - want).abs() < 3.0 * sd / n.sqrt(), "{m}");
}

#[test]
fn simulate_skeleton_columns() {
    let out = temp("skeleton.csv");
    let o = stargraph(&[
        "simulate", "--kind", "general", "--beta", "1", "--gamma", "2", "--n-paths", "20", "--skeleton", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "path_id,u,t_external,edge,x,local_time,alive");
    assert!(text.ends_with('\n'));
}

#[test]
fn config_file_with_flag_override() {
    let path = temp("cfg.toml");
    std::fs::write(&path, "w = [0.5, 0.5]\ngamma = 2.0\nt = [1.0]\nfrom = \"v\"\nto = [\"atom\"]\n").unwrap();
    let o = stargraph(&["kernel", "--config", path.to_str().unwrap()]);
    assert!((column(&stdout(&o), 0, "atom") - 0.5231566).abs() < 5e-8);
    let o = stargraph(&["kernel", "--config", path.to_str().unwrap(), "--gamma", "0"]);
    assert_eq!(column(&stdout(&o), 0, "atom"), 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(stargraph(&["kernel", "--w", "0.5,0.6"]).status.code(), Some(2));
    assert_eq!(stargraph(&["kernel", "--a", "0.1", "--b", "0.9", "--w", "1"]).status.code(), Some(2));
    assert_eq!(stargraph(&["kernel", "--t", "-1"]).status.code(), Some(2));
    assert_eq!(stargraph(&["kernel", "--from", "7:1"]).status.code(), Some(2));
    assert_eq!(stargraph(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn validate_subset_and_fault_injection() {
    let o = stargraph(&["validate", "--only", "laplace.walsh.n2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = stargraph(&["validate", "--only", "laplace.walsh.n2", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
}
