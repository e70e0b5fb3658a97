use std::path::Path;
use std::process::{Command, Output};

fn toastlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toastlab")).args(args).output().expect("run toastlab")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn greedy_label_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (t, f) = (dir.path().join("t.jsonl"), dir.path().join("f.txt"));
    let o = toastlab(&["greedy", "--n", "2", "--q", "4", "--count", "100", "--out", p(&t)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = toastlab(&["label", "--toast", p(&t), "--problem", "rt", "--out", p(&f)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = toastlab(&["verify", "--labeling", p(&f), "--problem", "rt:4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let toast = toastlab::io::read_toast(std::io::BufReader::new(std::fs::File::open(&t).unwrap())).unwrap();
    assert_eq!(toast.len(), 100);
}

#[test]
fn adjacent_zeros_fail_crt() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    std::fs::write(&f, "n=2 lo=0,0 hi=0,1 topology=hard alphabet=R,B,0,1\n00\n").unwrap();
    let o = toastlab(&["verify", "--labeling", p(&f), "--problem", "crt:4"]);
    assert_eq!(o.status.code(), Some(1));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l.contains(",C2,")), "{out}");
}

#[test]
fn single_scale_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("q.jsonl");
    let o = toastlab(&[
        "quasi-tile", "--box", "0..17,0..17", "--topology", "torus", "--q", "4", "--scales", "4", "--seed", "9",
        "--out", p(&t),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = toastlab(&["stats", "--toast", p(&t), "--coverage"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("25/81") && out.contains("0.308642"), "{out}");
}

#[test]
fn missing_seed_is_a_usage_error() {
    let o = toastlab(&["gen-field", "--box", "0..9,0..9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = toastlab(&["verify", "--labeling", "/nonexistent/f.txt", "--problem", "rt:4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = toastlab(&[
            "safe-squares", "--box", "0..63,0..63", "--topology", "torus", "--seed", "5", "--q", "2", "--out",
            p(&path),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.jsonl");
    assert_eq!(a, run("b.jsonl"));
    let toast = toastlab::io::read_toast(a.as_slice()).unwrap();
    assert!(toastlab::toast::validate_toast(toast.pieces(), 2, toast.grid()).is_ok());
}
