use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rhm_core::mesh::CornerAttribute;
use rhm_core::{obj, shapes, PreciseMap, TriangleMesh};
use serde_json::Value;
use tempfile::TempDir;

fn rhm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhm")).args(args).output().expect("runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_mesh(dir: &Path, name: &str, mesh: &TriangleMesh) -> PathBuf {
    let p = dir.join(name);
    obj::save_mesh(&p, mesh).unwrap();
    p
}

fn identity_landmarks(dir: &Path, n: usize) -> PathBuf {
    let p = dir.join("landmarks.txt");
    fs::write(&p, (1..=n).map(|v| format!("{v} {v}\n")).collect::<String>()).unwrap();
    p
}

#[test]
fn map_identity_and_manifest_defaults() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::icosphere(1);
    let m = write_mesh(dir.path(), "sphere.obj", &mesh);
    let l = identity_landmarks(dir.path(), mesh.n_vertices());
    let out = dir.path().join("run");
    ok(&rhm(&["map", s(&m), s(&m), "--landmarks", s(&l), "--out-dir", s(&out)]));
    let p12 = PreciseMap::load(out.join("p12.map"), &mesh, &mesh).unwrap();
    let p21 = PreciseMap::load(out.join("p21.map"), &mesh, &mesh).unwrap();
    assert_eq!(p12, PreciseMap::identity(&mesh));
    assert_eq!(p21, PreciseMap::identity(&mesh));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let c = &manifest["config"];
    assert_eq!(c["alpha"], 5e-4);
    assert_eq!(c["dim"], 8);
    assert_eq!(c["iters"], 200);
    assert_eq!(c["tol"], 1e-9);
    assert_eq!(c["beta_slope"], 5e-3);
    assert_eq!(c["beta_cap_iter"], 100);
    assert!(manifest["iterations"].as_u64().unwrap() <= 2);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,E_total"));
}

#[test]
fn replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let a = shapes::icosphere(1);
    let b = shapes::icosphere(1).map_vertices(|p| [1.2 * p[0], p[1], 0.9 * p[2]]);
    let ma = write_mesh(dir.path(), "a.obj", &a);
    let mb = write_mesh(dir.path(), "b.obj", &b);
    let l = dir.path().join("l.txt");
    fs::write(&l, "1 1\n5 5\n9 9\n12 12\n").unwrap();
    let first = dir.path().join("first");
    ok(&rhm(&["map", s(&ma), s(&mb), "--landmarks", s(&l), "--iters", "15", "--out-dir", s(&first)]));
    let second = dir.path().join("second");
    ok(&rhm(&["replay", s(&first.join("manifest.json")), "--out-dir", s(&second)]));
    for f in ["p12.map", "p21.map", "trace.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn map_from_pointwise_and_functional_maps() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::icosphere(1);
    let m = write_mesh(dir.path(), "m.obj", &mesh);
    let id = dir.path().join("id.map");
    PreciseMap::identity(&mesh).save(&id).unwrap();
    ok(&rhm(&["map", s(&m), s(&m), "--init-map", s(&id), "--out-dir", s(&dir.path().join("pw"))]));
    let k = 6;
    let mut text = format!("C12 {k} {k}\n");
    for i in 0..k {
        text += &(0..k).map(|j| if i == j { "1" } else { "0" }).collect::<Vec<_>>().join(" ");
        text.push('\n');
    }
    text += &text.clone().replacen("C12", "C21", 1);
    let fm = dir.path().join("fmap.txt");
    fs::write(&fm, text).unwrap();
    let out = dir.path().join("fm");
    ok(&rhm(&["map", s(&m), s(&m), "--fmap", s(&fm), "--iters", "5", "--out-dir", s(&out)]));
    assert!(PreciseMap::load(out.join("p12.map"), &mesh, &mesh).unwrap().is_feasible(1e-9));
}

#[test]
fn eval_identity_is_zero_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::icosphere(1);
    let m = write_mesh(dir.path(), "m.obj", &mesh);
    let id = dir.path().join("id.map");
    PreciseMap::identity(&mesh).save(&id).unwrap();
    let labels = dir.path().join("labels.txt");
    fs::write(&labels, mesh.vertices().iter().map(|p| format!("{}\n", (p[2] > 0.0) as i32)).collect::<String>()).unwrap();
    let run = |out: &Path| {
        ok(&rhm(&[
            "eval", s(&m), s(&m), s(&id), "--gt", s(&id), "--symmetry", s(&id), s(&id),
            "--segmentation", s(&labels), s(&labels), "--out-dir", s(out),
        ]));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    for f in ["conformal.csv", "gt_error.csv", "symmetry.csv", "segmentation.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let gt = fs::read_to_string(a.join("gt_error.csv")).unwrap();
    for line in gt.lines().skip(1) {
        let (t, f) = line.split_once(',').unwrap();
        assert!(t == "0" || t == "inf", "{line}");
        assert_eq!(f, "1");
    }
    let conf = fs::read_to_string(a.join("conformal.csv")).unwrap();
    let first: f64 = conf.lines().nth(1).unwrap().split_once(',').unwrap().0.parse().unwrap();
    assert!(first == 0.0);
    assert!(fs::read_to_string(a.join("segmentation.txt")).unwrap().starts_with("score 1\n"));
}

#[test]
fn transfer_modes() {
    let dir = TempDir::new().unwrap();
    let mut mesh = shapes::grid(4, 4, 1.0, 1.0);
    let plain = write_mesh(dir.path(), "plain.obj", &mesh);
    let uv: Vec<[f64; 2]> = mesh.vertices().iter().map(|p| [p[0], p[1]]).collect();
    mesh.uvs = Some(CornerAttribute { values: uv.clone(), face_indices: mesh.faces().to_vec() });
    let textured = write_mesh(dir.path(), "tex.obj", &mesh);
    let id = dir.path().join("id.map");
    PreciseMap::identity(&mesh).save(&id).unwrap();

    let out = dir.path().join("out.obj");
    ok(&rhm(&["transfer", s(&plain), s(&textured), s(&id), "--texture", "-o", s(&out)]));
    let got = obj::load_mesh(&out).unwrap();
    let got_uv = got.uvs.clone().unwrap();
    for f in 0..got.n_faces() {
        for k in 0..3 {
            let v = got.face(f)[k];
            let t = got_uv.values[got_uv.face_indices[f][k]];
            assert!((t[0] - uv[v][0]).abs() < 1e-12 && (t[1] - uv[v][1]).abs() < 1e-12);
        }
    }

    ok(&rhm(&["transfer", s(&plain), s(&plain), s(&id), "--connectivity", "-o", s(&out)]));
    let got = obj::load_mesh(&out).unwrap();
    assert_eq!(got.faces(), mesh.faces());
    for (a, b) in got.vertices().iter().zip(mesh.vertices()) {
        assert!((0..3).all(|k| (a[k] - b[k]).abs() < 1e-12));
    }

    let missing = rhm(&["transfer", s(&plain), s(&plain), s(&id), "--texture", "-o", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn collapsed_map_reports_repair() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::grid(3, 3, 1.0, 1.0);
    let m = write_mesh(dir.path(), "m.obj", &mesh);
    let p = dir.path().join("c.map");
    PreciseMap::from_vertex_targets(&mesh, &vec![0; mesh.n_vertices()]).save(&p).unwrap();
    let out = rhm(&["transfer", s(&m), s(&m), s(&p), "--connectivity", "-o", s(&dir.path().join("o.obj"))]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("still degenerate"));
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let mesh = shapes::icosphere(1);
    let m = write_mesh(dir.path(), "m.obj", &mesh);
    let missing = dir.path().join("nope.obj");
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 999\n").unwrap();
    let l = identity_landmarks(dir.path(), 3);
    let out = s(dir.path());
    for args in [
        vec!["map", s(&missing), s(&m), "--landmarks", s(&l), "--out-dir", out],
        vec!["map", s(&m), s(&m), "--landmarks", s(&bad), "--out-dir", out],
        vec!["map", s(&m), s(&m), "--out-dir", out],
        vec!["map", s(&m), s(&m), "--landmarks", s(&l), "--alpha", "2", "--out-dir", out],
        vec!["eval", s(&m), s(&m), s(&bad)],
    ] {
        assert_eq!(rhm(&args).status.code(), Some(2), "{args:?}");
    }
}
