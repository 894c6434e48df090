use std::process::Command;

fn passage() -> Command {
    Command::new(env!("CARGO_BIN_EXE_passage"))
}

#[test]
fn identities_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = passage()
        .args(["run", "--suite", "identities", "--law", "lazy:p=0.45", "--nmax", "60", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",pass")));
    assert!(dir.path().join("decomposition.csv").exists());
}

#[test]
fn malformed_law_names_the_key() {
    let out = passage().args(["run", "--law", "levy:alpha=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`law`"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "law = \"lazy:p=0.45\"\nsuite = \"regimeB\"\nxn = 1.0\n[tolerances]\nregime_b = 0.1\n").unwrap();
    let out = passage()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--ngrid", "2^11..2^14", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary = std::fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    assert!(summary.contains("regimeB,t2,"));
    let ratios = std::fs::read_to_string(dir.path().join("o/regimeB.csv")).unwrap();
    assert_eq!(ratios.lines().count(), 5);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let o = dir.path().join(sub);
        let st = passage()
            .args(["run", "--suite", "mc-crosscheck", "--law", "simple", "--ngrid", "2^6", "--seed", "17", "--out"])
            .arg(&o)
            .status()
            .unwrap();
        assert!(st.success());
        o
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["summary.csv", "mc_first_passage_x5.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn failing_contract_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "suite = \"regimeA\"\n[tolerances]\nregime_a = 1e-9\n").unwrap();
    let out = passage()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--ngrid", "2^6..2^8", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let summary = std::fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    assert!(summary.contains(",fail"));
}
