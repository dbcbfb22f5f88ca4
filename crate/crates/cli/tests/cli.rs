use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn maxmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxmin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = maxmin(args);
    assert!(
        out.status.success(),
        "maxmin {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn body(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    ok(&[
        "generate",
        "--n",
        "30",
        "--groups",
        "4",
        "--gap",
        "0.3",
        "--count",
        "2",
        "--seed",
        "5",
        "--out",
        s(&inst),
    ]);
    let files: Vec<PathBuf> = ["instance_000.json", "instance_001.json"]
        .iter()
        .map(|f| inst.join(f))
        .collect();
    assert!(files.iter().all(|f| f.exists()));

    let out = dir.path().join("out");
    let mut args = vec![
        "run", "--algo", "se,naive", "--eta", "0.05", "--trials", "2",
    ];
    args.push("--out");
    args.push(s(&out));
    args.push("--instances");
    args.extend(files.iter().map(|f| s(f)));
    let stdout = ok(&args);
    assert!(stdout.contains("success"));

    let trials = body(&out.join("trials.csv"));
    assert!(trials[0].starts_with("algorithm,instance,gap,trial,returned_group"));
    assert_eq!(trials.len(), 1 + 2 * 2 * 2);
    assert!(out.join("summary.csv").exists());
    assert!(out.join("timings.csv").exists());
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "run",
            "--algo",
            "se,stableopt",
            "--gap",
            "0.4",
            "--count",
            "2",
            "--n",
            "20",
            "--groups",
            "3",
            "--trials",
            "3",
            "--seed",
            "11",
            "--eta",
            "0.05",
            "--out",
        ];
        args.push(s(&out));
        args.extend_from_slice(extra);
        ok(&args);
        fs::read(out.join("trials.csv")).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &["--serial"]);
    assert_eq!(a, b);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        format!(
            "algorithms = [\"se\"]\ntrials = 2\nseed = 4\n\n[policy]\nkind = \"practical\"\nc = 1.0\n\n\
             [instances]\nsource = \"files\"\npaths = [\"{}\"]\n",
            fixture("two_groups.json")
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "run",
        "--config",
        s(&cfg),
        "--trials",
        "3",
        "--out",
        s(&out),
    ]);
    let trials = body(&out.join("trials.csv"));
    assert_eq!(trials.len(), 1 + 3);
    assert!(trials[1..].iter().all(|l| l.starts_with("se,0,")));
}

#[test]
fn regret_curve_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "regret-curve",
        "--algo",
        "stableopt",
        "--gap",
        "0.2",
        "--count",
        "1",
        "--n",
        "20",
        "--groups",
        "3",
        "--trials",
        "2",
        "--horizon",
        "2000",
        "--stride",
        "100",
        "--out",
        s(&out),
    ]);
    let curve = body(&out.join("regret_curve.csv"));
    assert_eq!(curve[0], "algorithm,gap,round,mean_regret,half_std,trials");
    assert!(curve.len() > 10);
    assert!(out.join("trajectories.csv").exists());

    let missing = maxmin(&["regret-curve", "--gap", "0.2", "--out", s(&out)]);
    assert!(!missing.status.success());
}

#[test]
fn bounds_table_for_fixture() {
    let stdout = ok(&[
        "bounds",
        "--instance",
        &fixture("two_groups.json"),
        "--horizon",
        "1000000",
    ]);
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "quantity,arm,group,value,note");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let find = |q: &str| rows.iter().find(|r| r[0] == q).unwrap();
    assert_eq!(find("optimal_group")[3], "1");
    let delta0: f64 = find("delta0")[3].parse().unwrap();
    assert!((delta0 - 0.2).abs() < 1e-12);
    let upper: f64 = find("se_upper_bound")[3].parse().unwrap();
    assert!((upper - 29_516.577_666_783_025).abs() < 1e-6 * upper);
    assert!(rows.iter().any(|r| r[0] == "regret_upper_bound"));
    assert_eq!(rows.iter().filter(|r| r[0] == "se_arm_bound").count(), 4);
}

#[test]
fn report_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "run",
        "--gap",
        "0.4",
        "--count",
        "1",
        "--n",
        "20",
        "--groups",
        "3",
        "--trials",
        "4",
        "--out",
        s(&out),
    ]);
    let written = dir.path().join("again.csv");
    ok(&["report", s(&out.join("trials.csv")), "--out", s(&written)]);
    assert_eq!(body(&written), body(&out.join("summary.csv")));
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"n\": 2, \"means\": [0.5], \"groups\": [[1]]}").unwrap();
    let out = maxmin(&[
        "run",
        "--instances",
        s(&bad),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("bad.json"), "{err}");

    let missing = maxmin(&["bounds", "--instance", "/nonexistent.json"]);
    assert!(!missing.status.success());

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let unwritable = maxmin(&[
        "run",
        "--gap",
        "0.4",
        "--count",
        "1",
        "--n",
        "20",
        "--groups",
        "3",
        "--trials",
        "1",
        "--out",
        s(&blocker.join("sub")),
    ]);
    assert!(!unwritable.status.success());
    assert!(!blocker.join("sub").exists());

    let tiny = maxmin(&[
        "run",
        "--gap",
        "0.4",
        "--count",
        "1",
        "--budget",
        "3",
        "--out",
        s(&dir.path().join("t")),
    ]);
    assert!(!tiny.status.success());
    assert!(String::from_utf8_lossy(&tiny.stderr).contains("budget"));
}
