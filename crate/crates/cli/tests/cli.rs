use std::path::PathBuf;
use std::process::{Command, Output};

fn fliplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fliplab"))
        .args(args)
        .env_remove("FLIPLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn xi_table() {
    let o = fliplab(&["xi", "--q", "2", "--nmax", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("m=2 xi_closed=5/6 xi_oracle=5/6 ball_xi2=47/6"));
    assert!(s.contains("experiment,params,n,estimate,stderr,target,abs_error\n"));
    let row = s.lines().find(|l| l.starts_with("xi,q=2;n0=1,0,")).unwrap();
    assert_eq!(row, "xi,q=2;n0=1,0,1.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0");
}

#[test]
fn compact_single_group() {
    let o = fliplab(&["compact", "--group", "sym(3)"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("sym(3) standard d=2 c=0.5"));
    assert!(s.contains("sym(3) regular d=6"));
}

#[test]
fn config_errors_exit_3() {
    assert_eq!(
        fliplab(&["compact", "--group", "quaternion(8)"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(fliplab(&["free", "--nmax", "13"]).status.code(), Some(3));
    assert_eq!(fliplab(&["xi", "--q", "1"]).status.code(), Some(3));
    assert_eq!(fliplab(&["xi", "--seed", "nope"]).status.code(), Some(3));
    assert_eq!(
        fliplab(&["tree-converge", "--depth", "3"]).status.code(),
        Some(3)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"q": 2, "colour": "blue"}"#).unwrap();
    let o = fliplab(&["xi", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn config_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out: PathBuf = dir.path().join("radial.csv");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "tree_converge", "vectors": "radial", "nmax": 5, "samples": 100, "seed": "0x2a", "out": {:?}}}"#,
            out
        ),
    )
    .unwrap();
    let o = fliplab(&["tree-converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("seed=0x2a"));
    assert!(csv.contains("= 1/18 ="));
    let rows: Vec<_> = csv
        .lines()
        .filter(|l| l.starts_with("tree_converge,"))
        .collect();
    assert_eq!(rows.len(), 6);
    assert!(rows
        .iter()
        .all(|r| r.split(',').nth(3) == Some("1.0000000000000000e0")));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = [
        "tree-converge",
        "--nmax",
        "5",
        "--samples",
        "600",
        "--vectors",
        "diagonal",
    ];
    let one = fliplab(&[&args[..], &["--threads", "1"]].concat());
    let many = Command::new(env!("CARGO_BIN_EXE_fliplab"))
        .args(args)
        .env("FLIPLAB_THREADS", "6")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let s = stdout(&one);
    assert!(s.contains("tree_converge_exact,"));
}

#[test]
fn free_table() {
    let o = fliplab(&["free", "--nmax", "4", "--vectors", "radial", "--depth", "0"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = stdout(&o);
    assert!(s.contains("n=4 radial ratio=1"));
    let witness: Vec<f64> = s
        .lines()
        .filter(|l| l.starts_with("free_witness,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(witness.len(), 5);
    assert_eq!(witness[0], 1.0);
    assert!(witness.windows(2).skip(1).all(|p| p[1] > p[0]));
}

#[test]
fn props_labels() {
    let o = fliplab(&[
        "props",
        "--nmax",
        "4",
        "--samples",
        "300",
        "--group",
        "cyclic(3)",
    ]);
    let s = stdout(&o);
    assert!(s.contains("# tree: bounded"), "{s}");
    assert!(s.contains("# finite: bounded"));
    assert!(s.contains("# free: unbounded"));
    assert_eq!(o.status.code(), Some(0));
}
