use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lsgate(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsgate"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (h, rows) = read_csv(path);
    let k = h.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn unknown_key_exits_2_and_names_the_path() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[trap]\naxial_hz = 1.2e6\nbogus = 3\n").unwrap();
    let o = lsgate(d.path(), &["--config", cfg.to_str().unwrap(), "modes"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trap"), "{}", stderr(&o));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn wrong_type_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["--set", "schedule.loops=\"two\"", "schedule"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schedule.loops"), "{}", stderr(&o));
}

#[test]
fn unknown_spectator_mode_is_a_schema_error() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["--set", "truncation.spectators=[\"w-com\"]", "modes"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("truncation.spectators[0]"), "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(lsgate(d.path(), &["modes"]).status.success());
        assert!(lsgate(d.path(), &["budget"]).status.success());
        let o = lsgate(d.path(), &["--seed", "5", "--set", "srb.lengths=[1,2,4]", "--set", "srb.shots=100", "srb", "simulate"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["modes.csv", "modes.json", "budget.json", "budget.txt", "srb_data.csv", "srb_fit.json"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn every_run_writes_a_manifest() {
    let d = tempfile::tempdir().unwrap();
    assert!(lsgate(d.path(), &["--seed", "9", "schedule"]).status.success());
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("schedule-manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "schedule");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert!(files.contains(&"schedule.csv") && files.contains(&"schedule.json"));
}

#[test]
fn empty_grid_gives_an_empty_table() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["sweep", "--param", "beams.g_hz"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = read_csv(&d.path().join("sweep.csv"));
    assert_eq!(h[0], "value");
    assert!(rows.is_empty());
}

#[test]
fn detuning_sweep_lowers_d_scattering() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["sweep", "--param", "scheme.delta_hz", "--grid", "log:2e6:2e7:6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let eps = column(&d.path().join("sweep.csv"), "eps_scatter_d");
    assert_eq!(eps.len(), 6);
    assert!(eps.windows(2).all(|w| w[1] < w[0]), "{eps:?}");
}

#[test]
fn power_sweep_raises_the_phase() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["sweep", "--param", "beams.power_w", "--values", "0.02,0.05,0.1,0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let phi = column(&d.path().join("sweep.csv"), "phi_rad");
    assert!(phi.windows(2).all(|w| w[1] > w[0]), "{phi:?}");
}

#[test]
fn sweeping_a_non_numeric_key_is_a_schema_error() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["sweep", "--param", "beams.geometry", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_json_has_both_sections() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["budget"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("spontaneous emission"));
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("budget.json")).unwrap()).unwrap();
    let names = |s: &str| -> Vec<String> {
        b[s]["entries"].as_array().unwrap().iter().map(|e| e["mechanism"].as_str().unwrap().to_string()).collect()
    };
    assert_eq!(names("top"), ["spontaneous emission", "off-resonant + lamb-dicke"]);
    assert_eq!(names("bottom"), ["leakage", "laser phase noise", "gate mode heating", "c.o.m. heating", "microwaves"]);
    assert!(b["top"]["total"].as_f64().unwrap() > 0.0);
    assert!(b["min"].as_f64().unwrap() < b["top"]["total"].as_f64().unwrap());
    for e in b["bottom"]["entries"].as_array().unwrap() {
        assert!(e["provenance"].is_string());
    }
}

#[test]
fn srb_data_round_trips_through_fit() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["--set", "srb.noise=\"clifford\"", "--set", "srb.clifford_error=0.01", "srb", "simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let data = d.path().join("srb_data.csv");
    let (h, rows) = read_csv(&data);
    assert_eq!(h, ["length", "seed", "shots", "survival"]);
    assert_eq!(rows.len(), 3 * 33);
    let first: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("srb_fit.json")).unwrap()).unwrap();
    let e = tempfile::tempdir().unwrap();
    let o = lsgate(e.path(), &["srb", "fit", "--data", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let again: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(e.path().join("srb_fit.json")).unwrap()).unwrap();
    assert_eq!(first["p"], again["p"]);
    assert!((first["p"].as_f64().unwrap() - 0.985).abs() < 1e-10);
}

#[test]
fn srb_fit_rejects_a_bad_header() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("x.csv");
    fs::write(&data, "length,survival\n1,0.9\n").unwrap();
    let o = lsgate(d.path(), &["srb", "fit", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn printed_config_parses_back_to_itself() {
    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["--set", "beams.power_w=0.08", "--set", "schedule.envelope=\"square\"", "config"]);
    assert!(o.status.success());
    let first = stdout(&o);
    let cfg = d.path().join("c.toml");
    fs::write(&cfg, &first).unwrap();
    let o = lsgate(d.path(), &["--config", cfg.to_str().unwrap(), "config"]);
    assert_eq!(stdout(&o), first);
}

fn keys(prefix: &str, t: &toml::Table, out: &mut BTreeSet<String>) {
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(inner) => keys(&path, inner, out),
            _ => {
                out.insert(path);
            }
        }
    }
}

fn schema_keys(prefix: &str, s: &serde_json::Value, out: &mut BTreeSet<String>, nullable: &mut BTreeSet<String>) {
    for (k, v) in s["properties"].as_object().unwrap() {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        if v["type"] == "object" {
            assert_eq!(v["additionalProperties"], false, "{path}");
            schema_keys(&path, v, out, nullable);
        } else {
            if v["type"].as_array().is_some_and(|a| a.iter().any(|t| t == "null")) {
                nullable.insert(path.clone());
            }
            out.insert(path);
        }
    }
}

#[test]
fn schema_documents_every_key() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.schema.json")).unwrap();
    let schema: serde_json::Value = serde_json::from_str(&text).unwrap();
    let (mut documented, mut nullable) = (BTreeSet::new(), BTreeSet::new());
    schema_keys("", &schema, &mut documented, &mut nullable);

    let d = tempfile::tempdir().unwrap();
    let o = lsgate(d.path(), &["config"]);
    let mut present = BTreeSet::new();
    keys("", &stdout(&o).parse::<toml::Table>().unwrap(), &mut present);
    // Optional keys do not appear in the printed defaults.
    let expected: BTreeSet<String> = present.union(&nullable).cloned().collect();
    assert_eq!(documented, expected);

    // Each optional key is accepted by the loader.
    for k in &nullable {
        let o = lsgate(d.path(), &["--set", &format!("{k}=1.5"), "config"]);
        assert!(o.status.success(), "{k}: {}", stderr(&o));
        assert!(stdout(&o).contains(k.rsplit('.').next().unwrap()));
    }
}
