use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simapprox")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn cf_prints_quotients() {
    let o = run(&["cf", "--theta", "17/50"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("[0, 2, 1, 16]\n"), "{s}");
    assert!(s.contains("3\t17/50"));
}

#[test]
fn best_approx_lists_records() {
    let o = run(&["best-approx", "--theta", "17/50", "--bound", "60"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("-1\t3\t3\t1/50\t1"), "{s}");
    assert!(s.contains("N = 8 (exact hit)"));
    let o = run(&["best-approx", "--theta", "1/3,1/5", "--horizon", "2", "--sign", "unsigned"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lk_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["lk", "--out", out, "--seed", "3", "--dims", "2", "1", "--set", "samples=5", "--set", "t_grid=2,3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(dir.path(), "lk.csv"), "theta_id,T,N_signed,N_unsigned");
    assert_eq!(header(dir.path(), "errors.csv"), "theta_id,task,message");
    let manifest = std::fs::read_to_string(dir.path().join("lk_manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 3"));
}

#[test]
fn same_config_same_bytes_across_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "4")] {
        let o = run(&[
            "correspondence",
            "--out",
            dir.path().to_str().unwrap(),
            "--workers",
            w,
            "--set",
            "samples=6",
            "--set",
            "t_grid=5",
        ]);
        assert!(o.status.success());
    }
    for f in ["shells.csv", "correspondence_summary.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn clt_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# synthetic pipeline check\nsamples = 600\nt_grid = 20\nsynthetic = normal\nbootstrap_resamples = 100\noutput_dir = {}\n",
            dir.path().display()
        ),
    )
    .unwrap();
    let o = run(&["clt", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(dir.path(), "clt_summary.csv"), "sigma_hat,ks_D,ks_p,cum3,cum4,var_consistency_ratio");
    assert_eq!(header(dir.path(), "cumulants.csv"), "r,estimate,ci_lo,ci_hi,resamples");
    assert_eq!(header(dir.path(), "deviations.csv"), "theta_id,T,N_signed,deviation");
}

#[test]
fn clt_writes_xi_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "clt",
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "samples=20",
        "--set",
        "t_grid=10",
        "--set",
        "orbit_samples=5",
        "--set",
        "orbit_length=40",
        "--set",
        "s_max=5",
        "--set",
        "burn_in=5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(dir.path(), "xi.csv"), "s,xi_hat,stderr,n_pairs");
}

#[test]
fn verify_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = ["--out", out, "--set", "samples=3", "--set", "t_grid=4", "--set", "perturbation_trials=5"];
    let ok = run(&[&["verify"][..], &common].concat());
    assert!(ok.status.success(), "{}", stdout(&ok));
    assert_eq!(header(dir.path(), "verify.csv"), "suite,case,status,detail");

    let low = run(&[&["verify"][..], &common, &["--set", "precision=32"]].concat());
    assert!(low.status.success(), "{}", stdout(&low));

    let bad = run(&[&["verify"][..], &common, &["--set", "corrupt_f=true"]].concat());
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL correspondence"));
}

#[test]
fn config_errors_are_reported() {
    let o = run(&["lk", "--set", "t_grid="]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_grid"));
    let o = run(&["lk", "--set", "bogus=1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}
