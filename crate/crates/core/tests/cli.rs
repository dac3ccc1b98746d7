use std::path::{Path, PathBuf};
use std::process::Command;

use raloop::cayley_oracle::{materialize, materialize_group, CayleyTable};
use raloop::classification::{build_canonical, CanonicalType, Params};

fn raloop(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_raloop")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn canonical_table(id: u32) -> CayleyTable {
    let l = build_canonical(&CanonicalType::new(id).unwrap(), &Params::default()).unwrap();
    materialize(&l).unwrap().0
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_writes_presentation_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("oct.toml");
    let (code, stdout) = raloop(&["build", "type", "2", "m1=1", "--table", "--out", s(&out)]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("order=16"));
    let table = std::fs::read_to_string(dir.path().join("oct.cayley")).unwrap();
    assert_eq!(CayleyTable::parse(&table).unwrap().n(), 16);

    let (code, stdout) = raloop(&["verify", s(&out)]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("presentation=pass"));
    assert!(stdout.contains("ra=pass"));
}

#[test]
fn build_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "row.toml", "kind = \"row\"\nid = 28\n\n[params]\nm1 = 2\nk = 1\n");
    let (code, stdout) = raloop(&["build", "--spec", s(&spec)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("factor_orders = [4, 0, 2]"), "{stdout}");
    let (code, _) = raloop(&["build", "type", "4", "m1=2"]);
    assert_eq!(code, 2);
    let (code, _) = raloop(&["build", "row", "6", "--table"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_tables() {
    let dir = tempfile::tempdir().unwrap();
    let good = canonical_table(1);
    let path = write(dir.path(), "t1.cayley", &good.to_text());
    let (code, stdout) = raloop(&["verify", s(&path)]);
    assert_eq!(code, 0, "{stdout}");
    for key in ["loop=pass", "moufang=pass", "alternative=pass", "ra=pass", "derived=pass", "center=pass"] {
        assert!(stdout.lines().any(|l| l == key), "{key} in {stdout}");
    }

    let mut broken = good.clone();
    let (a, b) = (good.mul(3, 4), good.mul(3, 5));
    broken.set(3, 4, b);
    broken.set(3, 5, a);
    let path = write(dir.path(), "broken.cayley", &broken.to_text());
    let (code, stdout) = raloop(&["verify", s(&path)]);
    assert_eq!(code, 1);
    assert!(stdout.contains("loop=fail witness=cell ("), "{stdout}");

    let text = good.to_text();
    let truncated: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
    let path = write(dir.path(), "short.cayley", &truncated);
    assert_eq!(raloop(&["verify", s(&path)]).0, 3);
}

#[test]
fn verify_infinite_presentation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l6.toml");
    assert_eq!(raloop(&["build", "row", "6", "--out", s(&out)]).0, 0);
    let (code, stdout) = raloop(&["--seed", "7", "verify", s(&out)]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("moufang=pass"));
    assert!(stdout.contains("involutions="));
    let again = raloop(&["--seed", "7", "verify", s(&out)]);
    assert_eq!(again.1, stdout);
}

#[test]
fn classify_tables() {
    let dir = tempfile::tempdir().unwrap();
    let oct = write(dir.path(), "oct.cayley", &canonical_table(2).to_text());
    let (code, stdout) = raloop(&["classify", s(&oct)]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().next(), Some("type=2 m1=1"));

    let q8_group = build_canonical(&CanonicalType::new(2).unwrap(), &Params::default()).unwrap();
    let q8 = materialize_group(q8_group.group()).unwrap().0;
    let q8 = write(dir.path(), "q8.cayley", &q8.to_text());
    let (code, stdout) = raloop(&["classify", s(&q8)]);
    assert_eq!(code, 1);
    assert!(stdout.starts_with("verdict=NOT_RA"), "{stdout}");

    let product = canonical_table(1).direct_product(&CayleyTable::cyclic(2));
    let product = write(dir.path(), "prod.cayley", &product.to_text());
    let (code, stdout) = raloop(&["classify", s(&product)]);
    assert_eq!(code, 1);
    assert!(stdout.starts_with("verdict=NOT_INDECOMPOSABLE"), "{stdout}");
}

#[test]
fn iso_command() {
    let dir = tempfile::tempdir().unwrap();
    let t1 = canonical_table(1);
    let perm: Vec<usize> = std::iter::once(0).chain((1..16).rev()).collect();
    let a = write(dir.path(), "a.cayley", &t1.to_text());
    let b = write(dir.path(), "b.cayley", &t1.relabel(&perm).to_text());
    let c = write(dir.path(), "c.cayley", &canonical_table(2).to_text());
    let (code, stdout) = raloop(&["iso", s(&a), s(&b)]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("iso=found\nmap=0:0,"), "{stdout}");
    let (code, stdout) = raloop(&["iso", s(&a), s(&c)]);
    assert_eq!((code, stdout.as_str()), (1, "iso=none\n"));
}

#[test]
fn normalize_command() {
    let (code, stdout) = raloop(&["normalize", "6"]);
    assert_eq!(code, 0);
    assert_eq!(
        stdout,
        "row=6 m1=1\nstep=w' = t1*w\nstep=y' = u\nstep=u' = y\ntype=5 m1=1\niso_map=pass\n"
    );
    let (code, stdout) = raloop(&["normalize", "28", "m1=2", "k=1"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("step=t1' = t1*t\ndecomposable factor=t\n"), "{stdout}");
    let (code, stdout) = raloop(&["normalize", "31", "m1=1"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("type=5 m1=1"));
    assert_eq!(raloop(&["normalize", "8", "m1=2"]).0, 2);
}

#[test]
fn ring_check_command() {
    let dir = tempfile::tempdir().unwrap();
    let t1 = write(dir.path(), "t1.cayley", &canonical_table(1).to_text());
    let (code, stdout) = raloop(&["ring-check", s(&t1)]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("alternative=true\nassociative=false witness="), "{stdout}");
    assert!(stdout.ends_with("ra=true\n"));

    let group = write(dir.path(), "c4.cayley", &CayleyTable::cyclic(4).to_text());
    let (code, stdout) = raloop(&["ring-check", s(&group)]);
    assert_eq!(code, 1);
    assert!(stdout.contains("associative=true"));
    assert!(stdout.contains("ra=false"));

    assert_eq!(raloop(&["ring-check", s(&t1), "--modulus", "2"]).0, 2);
}
