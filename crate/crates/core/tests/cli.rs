use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use twinbeam::config::RunConfig;
use twinbeam::io::read_csv;
use twinbeam::schmidt::count_nodes;
use twinbeam::Complex64;

fn twinbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinbeam")).args(args).output().unwrap()
}

fn csv_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|x| x == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn analyze_is_reproducible_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = twinbeam(&["analyze", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = csv_files(&a);
    assert!(fa.len() > 20);
    for f in &fa {
        let g = b.join(f.strip_prefix(&a).unwrap());
        assert_eq!(fs::read(f).unwrap(), fs::read(&g).unwrap(), "{}", f.display());
        read_csv(f).unwrap();
    }
    assert_eq!(fs::read(a.join("manifest.toml")).unwrap(), fs::read(b.join("manifest.toml")).unwrap());
    let manifest = fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains(&RunConfig::bundled_default().hash()));

    let metrics = read_csv(&a.join("metrics.csv")).unwrap();
    let row = metrics.rows.iter().find(|r| r[0] == "w_p_a").unwrap();
    let w: f64 = row[1].parse().unwrap();
    assert!((w * 1e6 - 270.0).abs() < 15.0, "{w}");
    for name in ["K_kphi", "K_k", "K_phi", "K_omega", "KDelta_kphi", "KDelta_omega", "Delta_C_omega"] {
        assert!(metrics.rows.iter().any(|r| r[0] == name), "{name}");
    }

    // Radial modes of the m = 0 order: q nodes for q = 0, 1, 2.
    for q in 0..3 {
        let t = read_csv(&a.join(format!("modes/radial_m0_signal_q{q}.csv"))).unwrap();
        let re = t.floats("re").unwrap();
        let im = t.floats("im").unwrap();
        let f: Vec<Complex64> = re.iter().zip(&im).map(|(r, i)| Complex64::new(*r, *i)).collect();
        assert_eq!(count_nodes(&f), q);
    }
}

#[test]
fn selfcheck_passes_and_negative_control_fails() {
    let t = Instant::now();
    let o = twinbeam(&["selfcheck"]);
    assert!(o.status.success());
    assert!(t.elapsed().as_secs_f64() < 60.0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);

    let o = twinbeam(&["selfcheck", "--x-e", "1.0"]);
    assert!(!o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL anisotropy_radius")));
}

#[test]
fn print_config_round_trips() {
    let o = twinbeam(&["print-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), RunConfig::bundled_default());
}

#[test]
fn invalid_inputs_fail_with_error_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("empty.toml");
    fs::write(&spec, "parameter = \"pump_radius\"\nvalues = []\noutputs = [\"K_k\"]\n").unwrap();
    let out = tmp.path().join("out");
    let o = twinbeam(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = fs::read_to_string(out.join("error.toml")).unwrap();
    assert!(err.contains("values"), "{err}");
    assert!(!out.join("sweep_sweep.csv").exists());

    let text = RunConfig::bundled_text().replace("w_p = 1.0e-3\n", "");
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out2");
    let o = twinbeam(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("pump.w_p"));
    assert!(fs::read_to_string(out.join("error.toml")).unwrap().contains("pump.w_p"));
}

#[test]
fn fig1_sweep_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = twinbeam(&["sweep", "--spec", "fig1", "--workers", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_csv(&out.join("sweep_fig1.csv")).unwrap();
    for k in ["K_kphi", "K_k", "K_phi"] {
        let v = t.floats(k).unwrap();
        assert!(v.windows(2).all(|w| w[1] >= w[0]), "{k}: {v:?}");
    }
    assert!(t.comments.iter().any(|c| c.starts_with("units:")));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("spec_sha256"));
}
