use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
}

fn topo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(file: &str) -> String {
    data(file).to_string_lossy().into_owned()
}

#[test]
fn dim_closure_star() {
    let ex2 = path("ex2.json");
    let o = topo(&["dim", &ex2]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "2\n");
    assert_eq!(stdout(&topo(&["dim", &ex2, "C"])), "2\n");
    assert_eq!(stdout(&topo(&["closure", &ex2, "C"])), "C b c x\n");
    assert_eq!(stdout(&topo(&["star", &ex2, "b"])), "C b\n");
    assert_eq!(stdout(&topo(&["dim", &path("house.json")])), "3\n");
}

#[test]
fn input_errors_exit_with_2() {
    let o = topo(&["dim", &path("ex2.json"), "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    assert_eq!(topo(&["dim", &path("missing.json")]).status.code(), Some(2));
    assert_eq!(topo(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_manifest() {
    let o = topo(&["validate", &path("lod/manifest.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS storey_of_cell"));

    let o = topo(&[
        "validate",
        &path("lod/manifest.json"),
        "--chain",
        "house_to_storeys,storeys_to_building",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("chain PASS"));

    let o = topo(&["validate", &path("lod/misfiled.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL misfiled_storey_reference"));
}

#[test]
fn run_script() {
    let o = topo(&["run", &path("overlay.topo")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("PASS continuous J.left"));
    assert!(out.contains("closure J {B×b} = {B×b, B×x, e×b, f×b, g×b}"));
    assert_eq!(stdout(&topo(&["run", &path("overlay.topo")])), out);
}

#[test]
fn run_script_against_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("q.topo");
    fs::write(
        &script,
        "check continuous house_to_storeys\ncheck continuous house_to_storeys_misfiled\nlet G = quotient(house, by=storey)\ndim G\nemit G \"g.json\"\n",
    )
    .unwrap();
    let o = topo(&[
        "run",
        script.to_str().unwrap(),
        "--manifest",
        &path("lod/manifest.json"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("PASS continuous house_to_storeys\n"));
    assert!(out.contains("FAIL continuous house_to_storeys_misfiled"));
    assert!(out.contains("dim G = 1"));
    let g = fs::read_to_string(dir.path().join("g.json")).unwrap();
    assert!(g.contains("\"name\": \"G\""));

    fs::write(&script, "dim X\n").unwrap();
    let o = topo(&["run", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn homeomorphism() {
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.json");
    fs::write(
        &copy,
        r#"{"name": "copy", "elements": [{"id": "p"}, {"id": "q"}, {"id": "r"}, {"id": "s"}],
            "incidence": [["s", "q"], ["s", "r"], ["q", "p"], ["r", "p"]]}"#,
    )
    .unwrap();
    let o = topo(&["homeo", &path("ex2.json"), copy.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("C s\n"));
    assert!(stdout(&o).contains("x p\n"));

    let o = topo(&["homeo", &path("ex1.json"), &path("ex2.json")]);
    assert_eq!(o.status.code(), Some(1));
    let o = topo(&["homeo", &path("house.json"), &path("house.json")]);
    assert_eq!(o.status.code(), Some(2));
    let o = topo(&["homeo", &path("house.json"), &path("house.json"), "--bound", "45"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn fmt_is_canonical() {
    let o = topo(&["fmt", &path("house.json")]);
    assert_eq!(stdout(&o), fs::read_to_string(data("house.json")).unwrap());
}

#[test]
fn oracle_subcommands() {
    let o = topo(&["oracle", "topology", &path("ex2.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("6 open sets\n"), "{}", stdout(&o));

    let o = topo(&["oracle", "axioms", &path("ex1.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 violations"));

    let o = topo(&["oracle", "axioms", &path("house.json")]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("swap.json");
    fs::write(
        &map,
        r#"{"domain": "EX2", "codomain": "EX2", "pairs": [["C", "C"], ["b", "c"], ["c", "b"], ["x", "x"]]}"#,
    )
    .unwrap();
    let ex2 = path("ex2.json");
    let o = topo(&["oracle", "continuous", map.to_str().unwrap(), &ex2, &ex2]);
    assert_eq!(stdout(&o), "continuous\n");
    fs::write(
        &map,
        r#"{"domain": "EX2", "codomain": "EX2", "pairs": [["C", "x"], ["b", "b"], ["c", "c"], ["x", "C"]]}"#,
    )
    .unwrap();
    let o = topo(&["oracle", "continuous", map.to_str().unwrap(), &ex2, &ex2]);
    assert_eq!(o.status.code(), Some(1));
}
