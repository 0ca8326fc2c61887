use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcs(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcs"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL_SWEEP: &str = r#"
experiment = "sweep"
name = "tiny"
n = 30
m = 15
k = 2
r = 0.1
epsilon = 0.1
trials = 2
master_seed = 3
strategies = ["oracle", "nominal", "tps", "aa"]

[sweep]
param = "epsilon"
values = [0.1, 0.3]
"#;

#[test]
fn gen_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    let o = pcs(
        &[
            "gen",
            "--m",
            "20",
            "--n",
            "40",
            "--k",
            "2",
            "--epsilon",
            "0.05",
            "--seed",
            "9",
            "--out",
            inst.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["A.csv", "B.csv", "x.csv", "beta.csv", "e.csv", "y.csv", "instance.txt"] {
        assert!(inst.join(f).exists(), "{f}");
    }
    for strategy in ["aa", "pp", "oracle"] {
        let o = pcs(
            &["solve", "--dir", inst.to_str().unwrap(), "--strategy", strategy],
            dir.path(),
        );
        assert!(o.status.success(), "{strategy}: {}", String::from_utf8_lossy(&o.stderr));
        let out = stdout(&o);
        assert!(out.lines().any(|l| l == format!("strategy = {strategy}")), "{out}");
        assert!(out.contains("signal_err"));
    }
    assert!(inst.join("x_hat.csv").exists());
    let again = dir.path().join("again");
    let o = pcs(
        &[
            "gen",
            "--m",
            "20",
            "--n",
            "40",
            "--k",
            "2",
            "--epsilon",
            "0.05",
            "--seed",
            "9",
            "--out",
            again.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(
        fs::read(inst.join("A.csv")).unwrap(),
        fs::read(again.join("A.csv")).unwrap()
    );
    assert_eq!(
        fs::read(inst.join("y.csv")).unwrap(),
        fs::read(again.join("y.csv")).unwrap()
    );
}

#[test]
fn ric_drip_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    assert!(pcs(
        &[
            "gen",
            "--m",
            "8",
            "--n",
            "12",
            "--k",
            "1",
            "--out",
            inst.to_str().unwrap()
        ],
        dir.path()
    )
    .status
    .success());
    let a = inst.join("A.csv");
    let b = inst.join("B.csv");
    let o = pcs(&["ric", "--matrix", a.to_str().unwrap(), "--k", "2"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("delta"));
    let o = pcs(
        &[
            "drip",
            "--a",
            a.to_str().unwrap(),
            "--b",
            b.to_str().unwrap(),
            "--k",
            "1",
            "--samples",
            "5",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let o = pcs(&["bounds", "--delta", "0.2", "--r", "0.1"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("C_cal"));
    let o = pcs(&["ric", "--matrix", "missing.csv", "--k", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_from_config_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, SMALL_SWEEP).unwrap();
    let o = pcs(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--summary",
            "--threads",
            "1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("tiny.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    assert!(dir.path().join("tiny.txt").exists());
    let o = pcs(&["plot", "--input", csv.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(dir.path().join("tiny.svg")).unwrap();
    for name in ["oracle", "nominal", "tps", "aa"] {
        assert!(svg.lines().any(|l| l.trim() == name), "{name}");
    }
    // a seed override changes the data, the same seed reproduces it
    let out2 = dir.path().join("b.csv");
    let out3 = dir.path().join("c.csv");
    for out in [&out2, &out3] {
        let o = pcs(
            &[
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "11",
                "--sequential",
                "--out",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&out2).unwrap(), fs::read(&out3).unwrap());
    assert_ne!(fs::read(&out2).unwrap(), fs::read(&csv).unwrap());
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, SMALL_SWEEP.replace("trials = 2", "trials = 0")).unwrap();
    assert_eq!(
        pcs(&["sweep", "--config", cfg.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(1)
    );
    fs::write(&cfg, "experiment = \"sweep\"\nname = 3\n").unwrap();
    assert_eq!(
        pcs(&["sweep", "--config", cfg.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(pcs(&["sweep", "--preset", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(
        pcs(&["doa", "--preset", "fig2-desk"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        pcs(&["sweep", "--preset", "fig2-desk", "--threads", "0"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn solver_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("starved.toml");
    let text = SMALL_SWEEP.replace("master_seed = 3", "master_seed = 3\nmax_failure_rate = 0.0")
        + "\n[aa.inner]\nmax_iter = 3\n";
    fs::write(&cfg, text).unwrap();
    let o = pcs(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("tiny.csv").exists());
}

#[test]
fn doa_run_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("doa.toml");
    fs::write(
        &cfg,
        "experiment = \"doa\"\nname = \"arr\"\nm = 12\nn = 30\ntrials = 3\nn_standard = 60\n",
    )
    .unwrap();
    let o = pcs(&["doa", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("arr.csv");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1 + 3 * 2);
    let o = pcs(&["plot", "--input", csv.to_str().unwrap(), "--n", "30"], dir.path());
    assert!(o.status.success());
    assert!(dir.path().join("arr.svg").exists());
    let spectrum = dir.path().join("arr.spectrum.csv");
    assert!(spectrum.exists());
    let o = pcs(
        &["plot", "--input", spectrum.to_str().unwrap(), "--out", "sp.svg"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(dir.path().join("sp.svg").exists());
}

#[test]
fn plot_rejects_empty_and_unknown_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "sweep_param,value,strategy,mean_signal_err,mean_beta_err,trials,effective_rate\n",
    )
    .unwrap();
    assert_eq!(
        pcs(&["plot", "--input", empty.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(1)
    );
    let odd = dir.path().join("odd.csv");
    fs::write(&odd, "a,b\n1,2\n").unwrap();
    assert_eq!(
        pcs(&["plot", "--input", odd.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(1)
    );
}
