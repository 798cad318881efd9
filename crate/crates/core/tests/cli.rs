use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlmctdhb::checkpoint::Checkpoint;
use serde_json::{json, Value};

fn small_config(out: &Path) -> Value {
    json!({
        "mixture": {
            "grid": {"kind": "harmonic", "points": 64},
            "trap": {"barrier_height": 3.0, "blocking_step": 30.0},
            "species": [
                {"name": "A", "particles": 2, "spfs": 2, "species_states": 2, "g": 0.1},
                {"name": "B", "particles": 2, "spfs": 2, "species_states": 2, "g": 0.05}
            ],
            "inter": [{"species": ["A", "B"], "g": 0.02}]
        },
        "relaxation": {"output_stride": 0.5},
        "propagation": {"t_final": 2.0, "output_stride": 0.25, "checkpoint_stride": 1.0},
        "output": out
    })
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn mlb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlb")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Value {
    let out = mlb(args);
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut bad = small_config(&out);
    bad["mixture"]["species"][0]["colour"] = json!(1);
    let cfg = write_config(dir.path(), "bad.json", &bad);
    let res = mlb(&["relax", "--config", s(&cfg)]);
    assert_eq!(res.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("mixture.species[0]"));

    assert_eq!(mlb(&["cost", "--config", s(&dir.path().join("missing.json"))]).status.code(), Some(2));

    let mut stuck = small_config(&out);
    stuck["relaxation"]["max_steps"] = json!(2);
    let cfg = write_config(dir.path(), "stuck.json", &stuck);
    assert_eq!(mlb(&["relax", "--config", s(&cfg)]).status.code(), Some(3));

    let huge = json!({
        "mixture": {"species": (0..4).map(|i| json!({
            "name": format!("S{i}"), "particles": 100, "spfs": 10, "species_states": 1
        })).collect::<Vec<_>>()},
        "output": out
    });
    let cfg = write_config(dir.path(), "huge.json", &huge);
    assert_eq!(mlb(&["cost", "--config", s(&cfg)]).status.code(), Some(4));
}

#[test]
fn cost_and_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", &small_config(&out));
    let cost = ok(&["cost", "--config", s(&cfg)]);
    // 4 + 2 * (2 * 3) + 2 * 2 * 64 against 3 * 3 + 2 * 2 * 64
    assert_eq!(cost["ml_mctdhb"]["total"], 272);
    assert_eq!(cost["mctdhb"]["total"], 265);
    assert!(out.join("cost.json").exists());
    ok(&["bands", "--config", s(&cfg)]);
    let bands = rows(&out.join("bands.csv"));
    assert_eq!(bands[0], "species,index,energy,delta");
    assert_eq!(bands.len(), 1 + 2 * 8);
}

#[test]
fn propagate_observe_resume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", &small_config(&out));
    let summary = ok(&["propagate", "--config", s(&cfg)]);
    assert_eq!(summary["records"], 9);
    let traj = rows(&out.join("trajectory.csv"));
    assert_eq!(traj.len(), 10);

    // loaded into the left well
    let header: Vec<&str> = traj[0].split(',').collect();
    let first: Vec<&str> = traj[1].split(',').collect();
    for name in ["P_L(A)", "P_L(B)"] {
        let col = header.iter().position(|h| *h == name).unwrap();
        assert!(first[col].parse::<f64>().unwrap() >= 0.999);
    }

    // observe on a checkpoint reproduces the trajectory row
    let cp = out.join(mlmctdhb::cli::run::checkpoint_name(1.0));
    assert!(cp.exists());
    let obs_dir = dir.path().join("obs");
    ok(&["observe", "--config", s(&cfg), "--out", s(&obs_dir), "--resume", s(&cp)]);
    let obs = rows(&obs_dir.join("observables.csv"));
    assert_eq!(obs[0], traj[0]);
    assert_eq!(obs[1], traj[5]);

    // resuming at t = 1 continues bit for bit
    let resumed = dir.path().join("resumed");
    ok(&["propagate", "--config", s(&cfg), "--out", s(&resumed), "--resume", s(&cp)]);
    let again = rows(&resumed.join("trajectory.csv"));
    assert_eq!(again[1..], traj[5..]);
    let a = Checkpoint::load(&out.join("final.mlb")).unwrap();
    let b = Checkpoint::load(&resumed.join("final.mlb")).unwrap();
    assert_eq!(a, b);

    // identical runs are identical
    let twin = dir.path().join("twin");
    ok(&["propagate", "--config", s(&cfg), "--out", s(&twin)]);
    assert_eq!(rows(&twin.join("trajectory.csv")), traj);
}

#[test]
fn metadata_echoes_every_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let base = small_config(&out);
    let mut changed = base.clone();
    changed["mixture"]["trap"]["barrier_width"] = json!(0.25);
    let a = write_config(dir.path(), "a.json", &base);
    let b = write_config(dir.path(), "b.json", &changed);
    let (da, db) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["cost", "--config", s(&a), "--out", s(&da)]);
    ok(&["cost", "--config", s(&b), "--out", s(&db)]);
    let ma: Value = serde_json::from_str(&fs::read_to_string(da.join("metadata.json")).unwrap()).unwrap();
    let mb: Value = serde_json::from_str(&fs::read_to_string(db.join("metadata.json")).unwrap()).unwrap();
    assert_ne!(ma, mb);
    assert_eq!(mb["config"]["mixture"]["trap"]["barrier_width"], 0.25);
    // defaults are written out
    assert_eq!(ma["config"]["propagation"]["rtol"], 1e-8);
    assert_eq!(ma["config"]["propagation"]["method"], "dop853");
    assert_eq!(ma["config"]["mixture"]["trap"]["barrier_width"], 0.2);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = mlmctdhb::cli::parse_config(&small_config(&out).to_string()).unwrap();
    let mix = mlmctdhb::Mixture::new(&cfg.mixture).unwrap();
    let mut state = mlmctdhb::state::random_state(&mix, 42).unwrap();
    state.time = 0.1 + 0.2;
    let cp = Checkpoint {
        spec: cfg.mixture.clone(),
        state,
        controller: Some(mlmctdhb::integrator::ControllerState { dt: 1.0 / 3.0, facold: 1e-4 }),
    };
    let p = dir.path().join("x.mlb");
    cp.save(&p).unwrap();
    let back = Checkpoint::load(&p).unwrap();
    assert_eq!(back, cp);
    let q = dir.path().join("y.mlb");
    back.save(&q).unwrap();
    let bytes = fs::read(&p).unwrap();
    assert_eq!(bytes, fs::read(&q).unwrap());
    assert_eq!(&bytes[..4], b"MLB1");

    // truncated files are rejected
    fs::write(&q, &bytes[..bytes.len() / 2]).unwrap();
    assert!(Checkpoint::load(&q).is_err());
}
