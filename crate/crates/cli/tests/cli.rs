//! End-to-end runs of the `grass` binary: exit codes, reports and certificates.

use std::path::PathBuf;
use std::process::Command;

use grassmann_cli::formats::{write_map_table, write_plane_set};
use grassmann_cli::report::extract_json;
use grassmann_core::forms::{form_map, BilinearForm};
use grassmann_core::grassmann::{PlaneSet, Space, Subspace};
use grassmann_core::irregularity::{is_irregular, x_set};
use grassmann_core::linalg::Matrix;
use grassmann_core::maps::SemilinearMap;
use grassmann_core::regularity::{
    coordinate_planes, degree, is_exact, matches_hyperplane_plus_plane, CoordinateSystem,
};
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn grass(args: &[&str]) -> Run {
    grass_env(args, &[])
}

fn grass_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grass"));
    cmd.args(args).env_remove("GRASS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(run: &Run) -> Value {
    extract_json(&run.stdout).unwrap_or_else(|| panic!("no json line in:\n{}", run.stdout))
}

fn finding<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["findings"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["name"] == name)
        .map(|f| &f["value"])
        .unwrap_or_else(|| panic!("no finding {name} in {v}"))
}

fn file(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

fn plane_file(name: &str, space: &Space, set: &PlaneSet) -> String {
    file(name, &write_plane_set(space, set).unwrap())
}

fn g24() -> Space {
    Space::with_order(2, 4).unwrap()
}

fn standard_planes(space: &Space) -> PlaneSet {
    coordinate_planes(space, &CoordinateSystem::standard(space), 2).unwrap()
}

#[test]
fn enumerate_counts_and_lists() {
    let r = grass(&["enumerate", "--q", "2", "--n", "4", "--k", "2", "--count-only"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(finding(&json(&r), "count"), "35");
    let r = grass(&["enumerate", "--q", "3", "--n", "3", "--k", "1"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(finding(&v, "count"), "13");
    assert_eq!(finding(&v, "planes").as_array().unwrap().len(), 13);
}

#[test]
fn enumerate_outside_the_envelope_is_infeasible() {
    let r = grass(&["enumerate", "--q", "2", "--n", "7", "--k", "3"]);
    assert_eq!(r.code, 3);
    assert_eq!(json(&r)["verdict"], "infeasible");
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(grass(&["enumerate", "--q", "6", "--n", "4", "--k", "2"]).code, 2);
    assert_eq!(grass(&["enumerate", "--q", "2", "--n", "4"]).code, 2);
    assert_eq!(grass(&["verify", "--theorem", "thm-9.9.9", "--q", "2", "--n", "4", "--k", "2"]).code, 2);
    assert_eq!(grass(&["verify", "--theorem", "thm-2.2.1", "--q", "2", "--n", "4", "--k", "4"]).code, 2);
    let missing = grass(&["analyze", "--in", "/nonexistent/set.txt"]);
    assert_eq!(missing.code, 2);
    assert!(missing.stderr.starts_with("grass: "));
    let bad = file("bad.txt", "q=2 n=4 k=2 count=1\n1 0 0 0\n");
    assert_eq!(grass(&["analyze", "--in", &bad]).code, 2);
    let r = grass_env(&["enumerate", "--q", "2", "--n", "3", "--k", "1"], &[("GRASS_THREADS", "zero")]);
    assert_eq!(r.code, 2);
}

#[test]
fn maximal_regular_set_is_exact_with_an_associated_system() {
    let space = g24();
    let path = plane_file("maxreg.txt", &space, &standard_planes(&space));
    let r = grass(&["analyze", "--in", &path]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    for key in ["regular", "maximal_regular", "exact"] {
        assert_eq!(finding(&v, key), true, "{key}");
    }
    assert_eq!(finding(&v, "deg"), 0);
    // The exact-superset certificate re-validates.
    let cert = v["certificates"].as_array().unwrap().iter().find_map(|c| c.get("exact_superset")).unwrap();
    let members: Vec<u32> = serde_json::from_value(cert["members"].clone()).unwrap();
    assert!(is_exact(&space, &PlaneSet::new(&space, 2, members).unwrap()).unwrap());
}

#[test]
fn degree_one_shape_is_reported() {
    let space = g24();
    let full = standard_planes(&space);
    // Four of the six coordinate planes with degree one: a hyperplane's three plus one more.
    let members: Vec<u32> = full.iter().collect();
    let set = (0..6)
        .flat_map(|a| (a + 1..6).map(move |b| (a, b)))
        .map(|(a, b)| {
            let kept = members.iter().enumerate().filter(|&(i, _)| i != a && i != b).map(|(_, &p)| p).collect();
            PlaneSet::new(&space, 2, kept).unwrap()
        })
        .find(|r| degree(&space, r).unwrap().0 == 1)
        .expect("a degree-one four-plane subset exists");
    assert!(matches_hyperplane_plus_plane(&space, &set).unwrap());
    let path = plane_file("deg1.txt", &space, &set);
    let r = grass(&["analyze", "--in", &path, "--mode", "degree"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(finding(&json(&r), "deg"), 1);
}

#[test]
fn x_set_is_maximal_irregular_with_its_characteristics() {
    let space = g24();
    let s = space.subspace(2, 0).unwrap();
    let path = plane_file("xset.txt", &space, &x_set(&space, &s, 2).unwrap());
    let r = grass(&["analyze", "--in", &path]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(finding(&v, "regular"), false);
    assert_eq!(finding(&v, "irregular"), true);
    assert_eq!(finding(&v, "maximal_irregular"), true);
    assert_eq!(finding(&v, "n_1"), 2);
    assert_eq!(finding(&v, "n_(n-1)"), 2);
}

#[test]
fn non_maximal_irregular_set_comes_with_an_extension() {
    let space = g24();
    let e = |i: usize| (0..4).map(|j| u8::from(i == j)).collect::<Vec<u8>>();
    let planes = [vec![e(0), e(1)], vec![e(0), e(2)], vec![e(0), vec![0, 1, 1, 0]]]
        .map(|rows| Subspace::new(space.field(), 4, &rows).unwrap());
    let set = PlaneSet::from_subspaces(&space, 2, &planes).unwrap();
    let path = plane_file("pencil.txt", &space, &set);
    let r = grass(&["analyze", "--in", &path, "--mode", "irregular"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(finding(&v, "maximal_irregular"), false);
    let p = v["certificates"].as_array().unwrap().iter().find_map(|c| c.get("extends_by")).unwrap();
    let idx = p["index"].as_u64().unwrap() as u32;
    assert!(!set.contains(idx));
    assert!(is_irregular(&space, &set.inserted(idx)).unwrap());
}

#[test]
fn degree_of_a_non_regular_set_is_a_precondition_error() {
    let space = g24();
    let path = plane_file("xset-deg.txt", &space, &x_set(&space, &space.subspace(2, 3).unwrap(), 2).unwrap());
    let r = grass(&["analyze", "--in", &path, "--mode", "degree"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("not regular"), "{}", r.stderr);
}

#[test]
fn classify_linear_form_composed_and_corrupted_tables() {
    let space = g24();
    let field = space.field().clone();
    let m = Matrix::from_rows(&field, 4, &[vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1], vec![1, 0, 0, 0]]).unwrap();
    let linear = SemilinearMap::linear(m).unwrap().induced_map(&space, 2).unwrap();
    let form = form_map(&space, &BilinearForm::standard_symplectic(&field, 4).unwrap(), 2).unwrap();
    let composed = linear.compose(&form).unwrap();

    let r = grass(&["classify", "--in", &file("linear.map", &write_map_table(&linear))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(finding(&v, "variant"), "linear");
    assert_eq!(finding(&v, "verified"), true);

    let r = grass(&["classify", "--in", &file("composed.map", &write_map_table(&composed))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(finding(&json(&r), "variant"), "form_composed");

    let r = grass(&["classify", "--in", &file("corrupt.map", &write_map_table(&linear.with_swap(0, 1)))]);
    assert_eq!(r.code, 1);
    let v = json(&r);
    assert_eq!(v["verdict"], "fail");
    assert_eq!(finding(&v, "variant"), "not_classifiable");
    assert!(v["certificates"][0]["witness"].is_object());
}

#[test]
fn verify_verdicts_map_to_exit_codes() {
    let r = grass(&["verify", "--theorem", "thm-2.2.1", "--q", "2", "--n", "4", "--k", "2"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(json(&r)["verdict"], "pass");
    assert!(r.stdout.lines().nth(1).unwrap().contains("PASS"));
    let r = grass(&["verify", "--theorem", "thm-1.3.1", "--q", "2", "--n", "4", "--k", "1"]);
    assert_eq!(r.code, 3);
    assert!(json(&r)["scope"].as_str().unwrap().contains("n = 3, k = 1"));
}

#[test]
fn json_format_is_one_parseable_line() {
    let r = grass(&["--format", "json", "verify", "--theorem", "remark-2.2.1", "--q", "2", "--n", "6", "--k", "3"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.lines().count(), 1);
    let v: Value = serde_json::from_str(r.stdout.trim()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(v["elapsed_ms"].is_u64());
}

#[test]
fn reports_are_reproducible_without_timing() {
    let args = ["--no-timing", "verify", "--theorem", "prop-3.1.3", "--q", "2", "--n", "4", "--k", "2"];
    let a = grass(&args);
    let b = grass_env(&args, &[("GRASS_THREADS", "1")]);
    let c = grass_env(&args, &[("GRASS_THREADS", "3")]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert!(json(&a).get("elapsed_ms").is_none());
}
