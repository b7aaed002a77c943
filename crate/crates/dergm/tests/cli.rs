use std::process::{Command, Output};

fn dergm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dergm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn degeneracy_of_fixtures() {
    for (fixture, k) in [("sampson", 3), ("florentine", 2)] {
        let o = dergm(&["degeneracy", "--fixture", fixture]);
        assert!(o.status.success());
        assert_eq!(json(&o)["k"], k);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.edges");
    std::fs::write(&path, "a b\n").unwrap();
    assert_eq!(json(&dergm(&["degeneracy", path.to_str().unwrap()]))["k"], 1);
}

#[test]
fn enumerate_small_and_capped() {
    let o = dergm(&["enumerate", "4", "--format", "csv"]);
    assert_eq!(
        stdout(&o),
        "k,count,at_most,max_edges,max_triangles\n0,1,1,0,0\n1,37,38,3,0\n2,25,63,5,2\n3,1,64,6,4\n"
    );
    let o = dergm(&["enumerate", "9"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sample_is_reproducible_and_round_trips() {
    let args = ["sample", "--n", "30", "--k", "3", "--count", "20", "--format", "csv", "--seed", "9"];
    let (a, b) = (dergm(&args), dergm(&args));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("draw,edges,triangles,two_stars\n"));
    assert_eq!(stdout(&a).lines().count(), 21);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.edges");
    let p = path.to_str().unwrap();
    let o = dergm(&["sample", "--n", "40", "--k", "2", "--graphs", "--strategy", "stratified", "--out", p]);
    assert!(o.status.success());
    let d = json(&dergm(&["degeneracy", p]));
    assert!(d["k"].as_u64().unwrap() <= 2);
    assert_eq!(d["n"], 40);
}

#[test]
fn manifest_records_output_digest() {
    let dir = tempfile::tempdir().unwrap();
    let (out, man) = (dir.path().join("t.json"), dir.path().join("m.json"));
    let o = dergm(&[
        "threshold",
        "--n",
        "50",
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--manifest",
        man.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&man).unwrap()).unwrap();
    let body = std::fs::read(&out).unwrap();
    assert_eq!(m["command"], "threshold");
    assert_eq!(m["outputs"][0]["sha256"], dergm::manifest::sha256_hex(&body));
    let t: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert!(t["t_estimated"].as_f64().unwrap() <= 0.0);
}

#[test]
fn threshold_domain_error() {
    let o = dergm(&["threshold", "--n", "4", "--k", "3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fit_errors_map_to_exit_codes() {
    let o = dergm(&["fit", "/nonexistent/graph.edges"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
    let o = dergm(&["fit", "--fixture", "sampson", "--k", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("observed graph outside support"));
}

#[test]
fn fit_florentine_json() {
    let o = dergm(&["fit", "--fixture", "florentine", "--k", "2", "--samples", "10000", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["statistics"][0], "edges");
    assert!((r["theta"][0].as_f64().unwrap() + 1.672).abs() < 0.2);
    assert_eq!(r["k"], 2);
}

#[test]
fn polytope_csv_and_hull() {
    let dir = tempfile::tempdir().unwrap();
    let hull = dir.path().join("hull.csv");
    let o = dergm(&[
        "polytope",
        "--n",
        "18",
        "--k",
        "3",
        "--samples",
        "5000",
        "--probe-fixture",
        "sampson",
        "--format",
        "csv",
        "--hull-csv",
        hull.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let body = stdout(&o);
    assert!(body.starts_with("edges,triangles,count\n"));
    let total: u64 = body.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 5000);
    let h = std::fs::read_to_string(&hull).unwrap();
    let pts: Vec<(f64, f64)> = h
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    // counter-clockwise: positive signed area
    let area: f64 = (0..pts.len())
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    assert!(area > 0.0);
    let j = json(&dergm(&["polytope", "--n", "18", "--k", "3", "--samples", "5000", "--probe-fixture", "sampson"]));
    assert_eq!(j["probe"]["location"], "interior");
}

#[test]
fn surface_and_entropy_csv() {
    let o = dergm(&[
        "surface",
        "--fixture",
        "florentine",
        "--k",
        "2",
        "--samples",
        "2000",
        "--theta-x=-3:0:4",
        "--theta-y=-1:1:3",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("x,y,value\n"));
    assert_eq!(s.lines().count(), 13);

    let o = dergm(&[
        "entropy",
        "--n",
        "8",
        "--k",
        "2",
        "--theta-x=-2:0:2",
        "--theta-y=0:0:1",
        "--samples",
        "200",
        "--bins",
        "5",
    ]);
    assert!(o.status.success());
    let e = json(&o);
    assert_eq!(e["points"].as_array().unwrap().len(), 2);
    assert_eq!(e["cells"].as_array().unwrap().len(), 25);
}

/// Checks required keys and `enum`/`const` values, following `$ref`s.
fn conforms(v: &serde_json::Value, schema: &serde_json::Value, root: &serde_json::Value, path: &str) {
    let schema = match schema.get("$ref").and_then(|r| r.as_str()) {
        Some(r) => &root["$defs"][r.trim_start_matches("#/$defs/")],
        None => schema,
    };
    if let Some(allowed) = schema.get("enum").and_then(|e| e.as_array()) {
        assert!(allowed.contains(v), "{path}: {v} not in {allowed:?}");
    }
    if let Some(c) = schema.get("const") {
        assert_eq!(v, c, "{path}");
    }
    match v {
        serde_json::Value::Object(map) => {
            for key in schema["required"].as_array().into_iter().flatten() {
                assert!(map.contains_key(key.as_str().unwrap()), "{path}: missing {key}");
            }
            for (key, sub) in schema["properties"].as_object().into_iter().flatten() {
                if let Some(x) = map.get(key) {
                    conforms(x, sub, root, &format!("{path}.{key}"));
                }
            }
        }
        serde_json::Value::Array(items) => {
            if let Some(item) = schema.get("items") {
                for (i, x) in items.iter().enumerate() {
                    conforms(x, item, root, &format!("{path}[{i}]"));
                }
            }
        }
        _ => {}
    }
}

#[test]
fn outputs_follow_schema() {
    let root: serde_json::Value = serde_json::from_str(include_str!("../schema.json")).expect("schema parses");
    let runs: [(&str, &[&str]); 8] = [
        ("degeneracy", &["degeneracy", "--fixture", "sampson"]),
        ("enumerate", &["enumerate", "5"]),
        ("sample", &["sample", "--n", "12", "--k", "2", "--count", "3"]),
        ("fit", &["fit", "--fixture", "florentine", "--samples", "2000", "--max-iter", "3"]),
        ("polytope", &["polytope", "--n", "12", "--k", "2", "--samples", "1000", "--probe", "10,2"]),
        ("entropy", &["entropy", "--n", "7", "--k", "2", "--theta-x=-1:0:2", "--theta-y=0:0:1", "--samples", "100"]),
        (
            "surface",
            &[
                "surface",
                "--fixture",
                "florentine",
                "--k",
                "2",
                "--samples",
                "1000",
                "--theta-x=-2:-1:3",
                "--theta-y=0:1:3",
            ],
        ),
        ("threshold", &["threshold", "--n", "30", "--k", "3"]),
    ];
    for (name, args) in runs {
        let o = dergm(args);
        assert!(matches!(o.status.code(), Some(0) | Some(4)), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        conforms(&json(&o), &root["$defs"][name], &root, name);
        let manifest: serde_json::Value = serde_json::from_slice(&o.stderr).expect("manifest on stderr");
        conforms(&manifest, &root["$defs"]["manifest"], &root, "manifest");
        assert_eq!(manifest["command"], name);
    }
}
