use std::process::Command;

use vecpert::{read_csv, Modulation, PerturbationKind, PrecoderKind};

fn vecpert() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vecpert"))
}

#[test]
fn writes_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ber.csv");
    let status = vecpert()
        .args([
            "--tx", "4", "--users", "4", "--modulation", "16qam", "--precoder", "rinv",
            "--perturbation", "combined", "--snr-start", "10", "--snr-stop", "20",
            "--snr-step", "5", "--trials", "200", "--seed", "9", "--window", "1",
            "--no-early-stop", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let curve = read_csv(&out).unwrap();
    assert_eq!(curve.config.modulation, Modulation::Qam16);
    assert_eq!(curve.config.precoder_kind, PrecoderKind::RegularizedInverse);
    assert_eq!(curve.config.perturbation_kind, PerturbationKind::Combined);
    assert_eq!(curve.config.window.radius, 1);
    assert_eq!(curve.config.seed, 9);
    let snrs: Vec<f64> = curve.points.iter().map(|p| p.snr_db).collect();
    assert_eq!(snrs, vec![10.0, 15.0, 20.0]);
    for p in &curve.points {
        assert_eq!(p.trials, 200);
        assert_eq!(p.bits, 200 * 16);
    }
}

#[test]
fn output_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let out = dir.path().join(format!("t{threads}.csv"));
        let status = vecpert()
            .args(["--modulation", "qpsk", "--perturbation", "discrete", "--snr-start", "-4",
                   "--snr-stop", "8", "--trials", "1500", "--threads", threads, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = vecpert().args(["--tx", "2", "--users", "4", "--out"]).arg(&out).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));
    assert!(!out.exists());

    let o = vecpert().args(["--modulation", "8psk", "--out"]).arg(&out).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn reports_unwritable_output() {
    let o = vecpert()
        .args(["--trials", "1", "--snr-start", "0", "--snr-stop", "0", "--out", "/nonexistent/dir/ber.csv"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("/nonexistent/dir/ber.csv"), "{err}");
}
