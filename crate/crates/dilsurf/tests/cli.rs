use std::path::PathBuf;

use dilation::constructions::{
    double_hopf, exotic_dehn_surface, hopf_torus, one_point_genus2_surface, square_torus,
};
use dilation::{apply_matrix, Mat2};
use dilsurf::format::{parse_surface, write_surface};
use proptest::prelude::*;
use serde_json::Value;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], input: &str) -> Out {
    let mut stdin = input.as_bytes();
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let argv = std::iter::once("dilsurf").chain(args.iter().copied());
    let code = dilsurf::cli::run(argv, &mut stdin, &mut o, &mut e);
    Out {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

fn gen(args: &[&str]) -> String {
    let mut a = vec!["gen"];
    a.extend_from_slice(args);
    let o = run(&a, "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    o.stdout
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("dilsurf-test-{}-{name}", std::process::id()))
}

fn json(args: &[&str], input: &str) -> Value {
    let mut a = vec!["--json"];
    a.extend_from_slice(args);
    let o = run(&a, input);
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", o.stdout))
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[test]
fn octagon_validates() {
    let o = run(&["validate"], &gen(&["octagon"]));
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    assert!(o.stdout.contains("PASS"));
}

#[test]
fn corrupted_scale_names_the_vertex_class() {
    let s = gen(&["hopf"]);
    let line = s.lines().find(|l| l.starts_with("GLUE")).unwrap();
    let mut f: Vec<String> = line.split_whitespace().map(String::from).collect();
    f[3] = "3".into();
    let bad = s.replacen(line, &f.join(" "), 1);
    let o = run(&["validate"], &bad);
    assert_eq!(o.code, 1);
    assert!(o.stdout.contains("FAIL"));
    assert!(o.stdout.contains("class"), "{}", o.stdout);
}

#[test]
fn missing_gluing_names_the_edge() {
    let s = gen(&["square-torus"]);
    let line = s.lines().find(|l| l.starts_with("GLUE")).unwrap();
    let o = run(&["validate"], &s.replacen(line, "", 1));
    assert_eq!(o.code, 1);
    assert!(
        format!("{}{}", o.stdout, o.stderr).contains("not glued"),
        "{}{}",
        o.stdout,
        o.stderr
    );
}

#[test]
fn thurston_octagon_report() {
    let o = run(&["thurston"], &gen(&["octagon-csys"]));
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("lambda_pf = 4"), "{}", o.stdout);
    assert!(o.stdout.contains("[[1, 4], [0, 1]]"));
    assert!(o.stdout.contains("[[1, 0], [-4, 1]]"));
}

#[test]
fn exotic_certify_uses_the_witness() {
    let o = run(
        &["certify", "--matrix", "2,0,0,1"],
        &gen(&["exotic", "--genus", "3"]),
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("Verified (witness)"), "{}", o.stdout);
}

#[test]
fn hopf_vertical_trace_closes_up() {
    let o = run(
        &["trace", "--dir", "1.5707963", "--max-steps", "500"],
        &gen(&["hopf"]),
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("ClosedOrbit"), "{}", o.stdout);
    // forward trace spirals into the attracting circle
    assert!(o.stdout.contains("alpha = 0.5"), "{}", o.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["validate", "--bogus"], "").code, 2);
    assert_eq!(run(&[], "").code, 2);
    let o = run(&["validate"], "DILSURF 1\nPOLY a 0 0 1\n");
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);
    assert_eq!(run(&["validate", "/nonexistent/file"], "").code, 1);
    let o = run(&["--json", "certify", "--matrix=-1,0,0,1"], &gen(&["hopf"]));
    assert_eq!(o.code, 1);
}

#[test]
fn isom_and_apply() {
    let a = tmp("a.surf");
    let b = tmp("b.surf");
    std::fs::write(&a, gen(&["hopf"])).unwrap();
    let moved = run(&["apply", "--matrix", "0,-1,1,0", a.to_str().unwrap()], "");
    assert_eq!(moved.code, 0);
    std::fs::write(&b, &moved.stdout).unwrap();
    let o = run(&["isom", a.to_str().unwrap(), b.to_str().unwrap()], "");
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    assert!(o.stdout.contains("Verified"));
    let _ = std::fs::remove_file(a);
    let _ = std::fs::remove_file(b);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let hopf = gen(&["hopf"]);
    let csys = gen(&["l-csys"]);
    let mut svgs = Vec::new();
    let mut outs = Vec::new();
    for k in 0..2 {
        let t = tmp(&format!("trace{k}.svg"));
        let s = tmp(&format!("thurston{k}.svg"));
        let o1 = run(
            &["trace", "--dir", "1.2", "--svg", t.to_str().unwrap()],
            &hopf,
        );
        let o2 = run(&["thurston", "--svg", s.to_str().unwrap()], &csys);
        let o3 = run(&["certify", "--random", "3", "--seed", "5"], &hopf);
        let o4 = run(&["--json", "decompose", "--dir", "0"], &gen(&["genus2"]));
        outs.push([o1.stdout, o2.stdout, o3.stdout, o4.stdout]);
        svgs.push((std::fs::read(&t).unwrap(), std::fs::read(&s).unwrap()));
        let _ = std::fs::remove_file(t);
        let _ = std::fs::remove_file(s);
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(svgs[0], svgs[1]);
    let svg = String::from_utf8(svgs[0].0.clone()).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline") && svg.contains("data-scale"));
}

#[test]
fn json_keys_are_stable() {
    let v = json(&["validate"], &gen(&["octagon"]));
    assert_eq!(keys(&v), ["edges", "pass", "problems", "vertices"]);
    assert_eq!(
        keys(&v["vertices"][0]),
        [
            "class",
            "cone_angle",
            "corners",
            "link_holonomy",
            "multiple",
            "regular"
        ]
    );
    let v = json(&["thurston"], &gen(&["octagon-csys"]));
    for k in ["lambda_pf", "d_talpha", "d_tbeta"] {
        assert!(v.get(k).is_some(), "{k} missing from {v}");
    }
    assert_eq!(v["lambda_pf"].as_f64(), Some(4.0));
    let v = json(&["certify", "--matrix=-1,0,0,1"], &gen(&["hopf"]));
    assert_eq!(keys(&v), ["error", "message"]);
}

fn any_surface() -> impl Strategy<Value = dilation::DilationSurface> {
    let base = prop_oneof![
        (0.2f64..5.0, 0.2f64..5.0).prop_map(|(w, h)| square_torus(w, h)),
        (1.1f64..6.0).prop_map(hopf_torus),
        (1.1f64..4.0).prop_map(double_hopf),
        Just(one_point_genus2_surface()),
        (3usize..5).prop_map(|g| exotic_dehn_surface(g).unwrap().surface),
    ];
    (base, -2.0f64..2.0, -2.0f64..2.0, 0.0f64..6.3).prop_map(|(s, a, b, t)| {
        let m = Mat2::rotation(t).mul(&Mat2::new(a.exp(), b, 0.0, 1.0));
        apply_matrix(&s, &m).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn surface_files_round_trip(s in any_surface()) {
        let text = write_surface(&s);
        let back = parse_surface(&text).unwrap();
        prop_assert!(back.witness.is_none());
        prop_assert_eq!(&back.surface, &s);
        prop_assert_eq!(write_surface(&back.surface), text);
    }
}
