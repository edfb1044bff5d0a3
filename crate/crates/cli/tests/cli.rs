use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::{json, Value};
use tableware::{ObjectClass, ObjectDescriptor, TablePlane, Vec3};
use tempfile::TempDir;

fn tableware(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tableware"))
        .args(args)
        .output()
        .expect("spawn tableware")
}

fn ok(args: &[&str]) -> String {
    let out = tableware(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = tableware(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Models trained once and shared by every test in this binary.
fn models() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        ok(&["train", "--synth", "48", "--seed", "1", "--noise-free", "--out", s(dir.path())]);
        dir
    })
    .path()
}

fn config() -> PathBuf {
    models().join("pipeline.json")
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(value).unwrap()).unwrap();
    p
}

fn empty_randomizer(dir: &Path) -> PathBuf {
    let counts = json!({"glass": 0, "dish": 0, "bowl": 0, "cutlery": 0});
    write(dir, "empty.json", &json!({ "counts": counts }))
}

#[test]
fn train_writes_models() {
    let m = models();
    for f in ["colors.json", "classes.json", "pipeline.json"] {
        assert!(m.join(f).is_file(), "{f} missing");
    }
    let classes = read_json(m.join("classes.json"));
    assert!(classes["subcat_point_threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn train_on_empty_directory_fails() {
    let tmp = TempDir::new().unwrap();
    let scenes = tmp.path().join("scenes");
    fs::create_dir(&scenes).unwrap();
    let err = fails(&["train", "--scenes", s(&scenes), "--out", s(tmp.path())]);
    assert!(err.contains("no training samples"), "{err}");
    assert!(!tmp.path().join("colors.json").exists());
}

#[test]
fn train_without_bowls_is_incomplete() {
    let tmp = TempDir::new().unwrap();
    let counts = json!({"glass": 1, "dish": 1, "bowl": 0, "cutlery": 1});
    let cfg = write(tmp.path(), "training.json", &json!({"randomizer": {"counts": counts}}));
    let err = fails(&["train", "--synth", "6", "--training", s(&cfg), "--out", s(tmp.path())]);
    assert!(err.contains("incomplete training"), "{err}");
    assert!(err.contains("Bowl"), "{err}");
    assert!(!tmp.path().join("classes.json").exists());
}

#[test]
fn train_from_rendered_directories() {
    let tmp = TempDir::new().unwrap();
    let scenes = tmp.path().join("scenes");
    for seed in 0..6 {
        let dir = scenes.join(format!("s{seed}"));
        ok(&["render", "--seed", &seed.to_string(), "--out", s(&dir)]);
    }
    ok(&["train", "--scenes", s(&scenes), "--out", s(tmp.path())]);
    assert!(tmp.path().join("classes.json").is_file());
}

fn class_of(v: &Value) -> String {
    v["class"].as_str().unwrap().to_string()
}

#[test]
fn noiseless_frame_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    let cfg = config();
    let frame = t.join("frame");
    ok(&["render", "--seed", "11", "--noise-free", "--out", s(&frame)]);
    for f in ["rgb.png", "depth.png", "camera.json", "labels.png", "scene.json"] {
        assert!(frame.join(f).is_file(), "{f} missing");
    }

    ok(&["detect", s(&frame), "--config", s(&cfg), "--out", s(t)]);
    let dets = read_json(t.join("detections.json"));
    assert_eq!(dets.as_array().unwrap().len(), 4);
    assert!(t.join("annotated.png").is_file());

    ok(&["classify", s(&frame), "--config", s(&cfg), "--out", s(t)]);
    let obs_path = t.join("observation.json");
    let obs = read_json(&obs_path);
    let mut predicted: Vec<String> = obs["objects"].as_array().unwrap().iter().map(class_of).collect();
    let scene = read_json(frame.join("scene.json"));
    let mut truth: Vec<String> = scene["objects"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["shape"]["class"].as_str().unwrap().to_string())
        .collect();
    predicted.sort();
    truth.sort();
    assert_eq!(predicted, truth);

    let planned = ok(&["plan", s(&obs_path), "--config", s(&cfg), "--out", s(t)]);
    let plan: Value = serde_json::from_str(&planned).unwrap();
    assert_eq!(plan, read_json(t.join("plan.json")));
    let target = plan["target_id"].as_u64().unwrap();
    let target_obj = obs["objects"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["id"] == target)
        .unwrap();
    // Glass carries the highest default priority.
    assert_eq!(class_of(target_obj), "glass");
    assert_eq!(plan["strategy"], "lateral");

    let same = ok(&["verify", s(&obs_path), s(&obs_path), "--target", &target.to_string(), "--out", s(t)]);
    assert!(same.contains("\"failure\""), "{same}");

    let gt_id = scene["objects"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["shape"]["class"] == "glass")
        .unwrap()["id"]
        .to_string();
    let after = t.join("after");
    ok(&["render", "--seed", "11", "--noise-free", "--remove", &gt_id, "--out", s(&after)]);
    let post = t.join("post");
    ok(&["classify", s(&after), "--config", s(&cfg), "--out", s(&post)]);
    let post_obs = post.join("observation.json");
    let gone = ok(&["verify", s(&obs_path), s(&post_obs), "--target", &target.to_string(), "--out", s(t)]);
    assert!(gone.contains("\"success\""), "{gone}");
    assert_eq!(read_json(t.join("verification.json"))["result"], "success");
}

#[test]
fn empty_table_has_no_detections() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    let frame = t.join("frame");
    ok(&["render", "--randomizer", s(&empty_randomizer(t)), "--out", s(&frame)]);
    ok(&["detect", s(&frame), "--config", s(&config()), "--out", s(t)]);
    assert_eq!(read_json(t.join("detections.json")), json!([]));
}

#[test]
fn truncated_png_names_the_file() {
    let tmp = TempDir::new().unwrap();
    let frame = tmp.path().join("frame");
    ok(&["render", "--seed", "3", "--out", s(&frame)]);
    let rgb = frame.join("rgb.png");
    let bytes = fs::read(&rgb).unwrap();
    fs::write(&rgb, &bytes[..bytes.len() / 3]).unwrap();
    let err = fails(&["detect", s(&frame), "--config", s(&config()), "--out", s(tmp.path())]);
    assert!(err.contains("rgb.png"), "{err}");
    assert!(!tmp.path().join("detections.json").exists());
}

fn observation(dir: &Path, objects: Vec<ObjectDescriptor>) -> PathBuf {
    let plane = TablePlane::from_normal(Vec3::new(0.0, -0.7, -0.7), -0.85).unwrap();
    let value = json!({ "plane": plane, "objects": objects });
    write(dir, "observation.json", &value)
}

#[test]
fn plan_glass_is_lateral() {
    let tmp = TempDir::new().unwrap();
    let mut glass = ObjectDescriptor::synthetic(ObjectClass::Glass, Vec3::new(0.1, 0.85, 0.06));
    glass.height = 0.12;
    let obs = observation(tmp.path(), vec![glass]);
    let plan: Value = serde_json::from_str(&ok(&["plan", s(&obs), "--out", s(tmp.path())])).unwrap();
    assert_eq!(plan["strategy"], "lateral");
    assert!((plan["yaw"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    let deg: Value = serde_json::from_str(&ok(&["plan", s(&obs), "--degrees", "--out", s(tmp.path())])).unwrap();
    assert!((deg["yaw"].as_f64().unwrap() - 90.0).abs() < 1e-9);
}

#[test]
fn plan_errors_are_module_qualified() {
    let tmp = TempDir::new().unwrap();
    let obs = observation(tmp.path(), vec![]);
    let err = fails(&["plan", s(&obs), "--out", s(tmp.path())]);
    assert!(err.contains("grasp: no graspable target"), "{err}");
    assert!(!tmp.path().join("plan.json").exists());
}

#[test]
fn verify_same_scene_fails() {
    let tmp = TempDir::new().unwrap();
    let mut cup = ObjectDescriptor::synthetic(ObjectClass::Bowl, Vec3::new(0.0, 0.7, 0.03));
    cup.id = 4;
    let obs = observation(tmp.path(), vec![cup]);
    let out = ok(&["verify", s(&obs), s(&obs), "--target", "4", "--out", s(tmp.path())]);
    let record: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(record["result"], "failure");
    assert_eq!(record["matched_id"], 4);
}

#[test]
fn evaluate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = config();
    for dir in [&a, &b] {
        ok(&["evaluate", "--trials", "6", "--seed", "21", "--config", s(&cfg), "--out", s(dir)]);
    }
    let csv = fs::read(a.join("confusion.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("confusion.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "actual,glass,dish,bowl,cutlery,unknown");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("glass,") && lines[1].split(',').nth(1).unwrap().contains('.'));
    assert!(a.join("confusion_counts.csv").is_file());
    assert!(a.join("confusion.txt").is_file());
}

#[test]
fn evaluate_without_matches_fails() {
    let tmp = TempDir::new().unwrap();
    let r = empty_randomizer(tmp.path());
    let out = tmp.path().join("out");
    let err = fails(&["evaluate", "--trials", "2", "--randomizer", s(&r), "--config", s(&config()), "--out", s(&out)]);
    assert!(err.contains("evaluation"), "{err}");
    assert!(!out.join("confusion.csv").exists());
}

#[test]
fn detect_without_models_fails() {
    let tmp = TempDir::new().unwrap();
    let err = fails(&["detect", s(tmp.path())]);
    assert!(err.contains("color_model"), "{err}");
}
