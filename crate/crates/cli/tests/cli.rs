use std::path::PathBuf;
use std::process::{Command, Output};

fn theory(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "theories", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn quantalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantalg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dist_on_the_lk_theory() {
    let o = quantalg(&[
        "dist",
        &theory("lk.thy"),
        "plus(1/2;a,b)",
        "plus(1/2;a,b)",
        "--depth",
        "1",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3/4\nfixpoint: yes\n");

    let o = quantalg(&["dist", &theory("lk.thy"), "a", "a", "--depth", "0"]);
    assert_eq!(stdout(&o), "1/2\nfixpoint: yes\n");
}

#[test]
fn dist_with_only_the_bound() {
    let o = quantalg(&["dist", &theory("empty.thy"), "a", "b", "--depth", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1\nfixpoint: yes\n");
}

#[test]
fn dist_tsv_and_bundled_names() {
    let o = quantalg(&["dist", "lk", "a", "b", "--format", "tsv"]);
    assert_eq!(stdout(&o), "distance\t1\nfixpoint\tyes\n");
}

#[test]
fn dist_outside_universe_suggests_depth() {
    let o = quantalg(&[
        "dist",
        &theory("lk.thy"),
        "plus(1/2; a, plus(1/2; a, b))",
        "a",
        "--depth",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("larger depth"));
}

#[test]
fn validate_statuses() {
    let o = quantalg(&["validate", &theory("lk_counterexample.thy")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("valid, kind DMet"));

    let o = quantalg(&["validate", &theory("bad_triangle.thy")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("TRI fails at (a,b,c)"));

    let dir = std::env::temp_dir().join(format!("quantalg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let empty = dir.join("empty_file.thy");
    std::fs::write(&empty, "").unwrap();
    let o = quantalg(&["validate", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let broken = dir.join("broken.thy");
    std::fs::write(
        &broken,
        "kind Met\nop f arity 1 lifting sup\naxiom f(x, y) = x\n",
    )
    .unwrap();
    let o = quantalg(&["validate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(quantalg(&["dist"]).status.code(), Some(2));
    assert_eq!(
        quantalg(&["verify", "--suite", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        quantalg(&["dist", &theory("lk.thy"), "zz", "a"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn saturate_is_deterministic() {
    let a = quantalg(&[
        "saturate",
        &theory("semilattice.thy"),
        "--depth",
        "2",
        "--format",
        "tsv",
    ]);
    let b = quantalg(&[
        "saturate",
        &theory("semilattice.thy"),
        "--depth",
        "2",
        "--format",
        "tsv",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("class\t2\tjoin(a, b)"));
}

#[test]
fn verify_suites() {
    for suite in ["examples", "monad"] {
        let o = quantalg(&["verify", "--suite", suite]);
        assert!(o.status.success(), "{}", stdout(&o));
        assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    }
    let a = quantalg(&["verify", "--suite", "props", "--seed", "7"]);
    let b = quantalg(&["verify", "--suite", "props", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fixtures_listing() {
    let o = quantalg(&["fixtures"]);
    assert!(stdout(&o).lines().any(|l| l == "lk.thy"));
    let o = quantalg(&["fixtures", "lk"]);
    assert!(stdout(&o).contains("lifting lk(p)"));
}
