use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sympcap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/golden")
}

/// One invocation per subcommand; the output is stored in `docs/golden/<name>.json`.
const GOLDEN: &[(&str, &[&str])] = &[
    ("capacity", &["capacity", "--ball", "R=1", "N=3"]),
    ("williamson", &["williamson", "--oscillator", "omegas=1,3"]),
    ("shadow", &["shadow", "--random", "N=2", "sigma=0.5", "--seed", "3"]),
    ("nonsqueeze-ensemble", &["nonsqueeze-ensemble", "--n", "2", "--count", "10", "--seed", "1"]),
    (
        "evolve",
        &["evolve", "--potential", "quartic", "--samples", "2000", "--times", "0,1", "--cell", "0.05", "--plane", "conjugate:1"],
    ),
    ("quantize-1d", &["quantize-1d", "--potential", "harmonic", "omega=1", "--nmax", "2", "--hbar", "1"]),
    ("quantize-quadratic", &["quantize-quadratic", "--oscillator", "omegas=1,3", "--nmax", "2"]),
    ("quantize-separable", &["quantize-separable", "--potential", "harmonic", "omega=1", "morse", "d=10", "a=1", "--nmax", "2"]),
    ("dos", &["dos", "--oscillator", "omegas=1,1", "--energy", "0.5,1,2"]),
    ("blob-check", &["blob-check", "--ellipsoid", "omegas=1", "E=2.5"]),
    ("bottle-demo", &["bottle-demo", "--radius", "1", "--neck", "0.5"]),
];

fn close(a: &Value, b: &Value, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300) {
                Ok(())
            } else {
                Err(format!("{path}: {x} != {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).enumerate().try_for_each(|(i, (u, v))| close(u, v, &format!("{path}[{i}]")))
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x.iter().try_for_each(|(k, u)| {
            let v = y.get(k).ok_or_else(|| format!("{path}.{k} missing"))?;
            close(u, v, &format!("{path}.{k}"))
        }),
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} != {b}")),
    }
}

#[test]
fn golden_outputs() {
    let update = std::env::var_os("SYMPCAP_UPDATE_GOLDEN").is_some();
    for (name, args) in GOLDEN {
        let out = run(args);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        let path = golden_dir().join(format!("{name}.json"));
        if update {
            std::fs::write(&path, &out.stdout).unwrap();
            continue;
        }
        let want: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let got: Value = serde_json::from_slice(&out.stdout).unwrap();
        if let Err(e) = close(&got, &want, name) {
            panic!("{name} differs from {}: {e}", path.display());
        }
    }
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    for (name, args) in GOLDEN {
        let a = run(args).stdout;
        let b = bin().args(*args).env("SYMPCAP_THREADS", "1").output().unwrap().stdout;
        let c = bin().args(*args).env("SYMPCAP_THREADS", "3").output().unwrap().stdout;
        assert_eq!(a, b, "{name}");
        assert_eq!(a, c, "{name}");
    }
}

#[test]
fn documented_examples() {
    let v = json(&["capacity", "--ball", "R=1", "N=3"]);
    assert_eq!(v["value"].as_f64().unwrap(), std::f64::consts::PI);
    assert_eq!(v["exact"], Value::Bool(true));

    let v = json(&["quantize-1d", "--potential", "harmonic", "omega=1", "--nmax", "2", "--hbar", "1"]);
    let energies: Vec<f64> = v["entries"].as_array().unwrap().iter().map(|e| e["energy"].as_f64().unwrap()).collect();
    assert_eq!(energies.len(), 3);
    for (e, want) in energies.iter().zip([0.5, 1.5, 2.5]) {
        assert!((e - want).abs() < 1e-10);
    }

    let v = json(&["nonsqueeze-ensemble", "--n", "2", "--count", "10", "--seed", "1"]);
    assert!(v["min_conjugate_det"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert_eq!(v["conjugate_bound_holds"], Value::Bool(true));
}

#[test]
fn infinite_and_region_json() {
    let v = json(&["capacity", "--region", r#"{"type":"ellipsoid","hamiltonian":{"n":1,"matrix":[9,0,0,1]},"energy":1}"#]);
    assert!((v["value"].as_f64().unwrap() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    let v = json(&["capacity", "--cylinder", "R=2", "N=3", "axis=3"]);
    assert!((v["value"].as_f64().unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
}

fn error_of(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|_| panic!("{args:?}: not JSON"));
    (out.status.code().unwrap(), v["error"].clone())
}

#[test]
fn structured_errors_and_exit_codes() {
    let (code, e) = error_of(&["capacity", "--ball", "R=-1", "N=2"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "InvalidInput"));
    let (code, e) = error_of(&["capacity", "--ball", "R=1", "N=0"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "DimensionError"));
    let (code, e) = error_of(&["capacity", "--ball", "R=1"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "InvalidInput"));
    let (code, e) = error_of(&["capacity", "--bottle", "R=1", "r=1"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "InvalidNeck"));
    let (code, e) = error_of(&["williamson", "--matrix", r#"{"n":1,"matrix":[1,0,0,-1]}"#]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "NotPositiveDefinite"));
    let (code, e) = error_of(&["shadow", "--matrix", r#"{"n":1,"matrix":[2,0,0,1]}"#]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "NotSymplectic"));
    let (code, e) = error_of(&["quantize-1d", "--potential", "polynomial", "coeffs=0,0,-2,0,1", "--nmax", "1"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (3, "MultiWell"));
    let (code, e) = error_of(&["quantize-separable", "--potential", "harmonic", "omega=1", "morse", "d=10", "a=1", "--quanta", "0,5"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (3, "LevelNotBound"));
    let (code, e) = error_of(&["blob-check", "--capacity", "inf"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (3, "NotABlob"));
    let (code, e) = error_of(&["dos", "--oscillator", "omegas=1", "--energy", "1", "--hbar", "0"]);
    assert_eq!((code, e["kind"].as_str().unwrap()), (2, "InvalidInput"));
    let out = bin().args(["capacity", "--ball", "R=1", "N=1"]).env("SYMPCAP_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_outputs() {
    let out = run(&["quantize-1d", "--potential", "harmonic", "omega=1", "--nmax", "1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,E,action,maslov");
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[0], "0");
    assert!((cols[1].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    // 17 significant digits
    assert_eq!(cols[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);

    let out = run(&["quantize-quadratic", "--oscillator", "omegas=1,3", "--quanta", "2,0", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n_1,n_2,E,action_1,action_2,maslov_1,maslov_2\n"));
    let e: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((e - 4.0).abs() < 1e-12);
}

#[test]
fn evolve_csv_and_point_dump() {
    let dir = std::env::temp_dir().join(format!("sympcap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cloud = dir.join("cloud.csv");
    let table = dir.join("shadow.csv");
    let out = run(&[
        "evolve",
        "--potential",
        "harmonic",
        "omega=1",
        "--samples",
        "500",
        "--times",
        "0,0.5",
        "--cell",
        "0.1",
        "--format",
        "csv",
        "--out",
        table.to_str().unwrap(),
        "--dump-points",
        cloud.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,plane,area,bound,satisfied"));
    assert_eq!(lines.count(), 2);
    let cloud_text = std::fs::read_to_string(&cloud).unwrap();
    assert_eq!(cloud_text.lines().next(), Some("time,plane,x,y"));
    assert_eq!(cloud_text.lines().count(), 1 + 2 * 500);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_results_reparse_under_schema() {
    use sympcap::capacity::CapacityValue;
    use sympcap::ebk::SpectrumResult;
    use sympcap::nonsqueezing::EnsembleSummary;

    let v = json(&["capacity", "--bottle", "R=2", "r=1"]);
    let _: CapacityValue = serde_json::from_value(v).unwrap();
    let v = json(&["quantize-separable", "--potential", "quartic", "quartic", "lambda=2", "--nmax", "3"]);
    let s: SpectrumResult = serde_json::from_value(v).unwrap();
    assert_eq!(s.entries.len(), 10);
    assert!(s.entries.windows(2).all(|w| w[0].energy <= w[1].energy));
    let v = json(&["nonsqueeze-ensemble", "--n", "3", "--count", "5"]);
    let _: EnsembleSummary = serde_json::from_value(v).unwrap();
}
