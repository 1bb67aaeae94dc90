use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn roifuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roifuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_evaluate_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let out = roifuse(&[
        "generate",
        "--frames",
        "20",
        "--seed",
        "7",
        "--out",
        s(&scene),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run_dir = dir.path().join("run");
    let out = roifuse(&[
        "evaluate",
        "--scene",
        s(&scene),
        "--primary",
        "yolov3-spp:416",
        "--secondary",
        "ssdlite:300",
        "--roi-size",
        "240",
        "--out",
        s(&run_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("fusion"));
    for f in ["metrics.json", "cost.json", "cost.csv", "per_frame.csv"] {
        assert!(run_dir.join(f).is_file(), "{f} missing");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["metrics"]["recall"].as_f64().is_some());
    let cost_csv = fs::read_to_string(run_dir.join("cost.csv")).unwrap();
    assert!(cost_csv.starts_with("frame_id,n_rois,gflops,energy_j\n"));
    assert_eq!(cost_csv.lines().count(), 21);

    let sweep_dir = dir.path().join("sweep");
    let out = roifuse(&[
        "sweep",
        "--scene",
        s(&scene),
        "--sweep-axis",
        "roi-size",
        "--values",
        "240,80",
        "--out",
        s(&sweep_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sweep = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    let values: Vec<&str> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(values, ["80", "240"]);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        roifuse(&["evaluate", "--scene", s(&missing)]).status.code(),
        Some(1)
    );
    assert_eq!(
        roifuse(&["evaluate", "--bogus-flag"]).status.code(),
        Some(1)
    );
    assert_eq!(
        roifuse(&["evaluate", "--scene", "x", "--primary", "yolov3"])
            .status
            .code(),
        Some(1)
    );

    let scene = dir.path().join("scene.json");
    assert!(roifuse(&["generate", "--frames", "3", "--out", s(&scene)])
        .status
        .success());
    let out = roifuse(&[
        "evaluate",
        "--scene",
        s(&scene),
        "--secondary",
        "retinanet:300",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("retinanet"));

    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&scene).unwrap()).unwrap();
    doc["camera"].as_object_mut().unwrap().remove("intrinsics");
    fs::write(&scene, doc.to_string()).unwrap();
    let out = roifuse(&["evaluate", "--scene", s(&scene), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("intrinsics"));
}

#[test]
fn generator_config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"class_mix": {"car": 0.7, "truck": 0.2}}"#).unwrap();
    let out = roifuse(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("class_mix"));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(roifuse(&["--help"]).status.code(), Some(0));
    assert_eq!(roifuse(&["--version"]).status.code(), Some(0));
}

#[test]
fn convert_maps_labels_and_drops_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let camera = dir.path().join("camera.json");
    fs::write(
        &camera,
        r#"{"intrinsics": {"fx": 1266.0, "fy": 1266.0, "cx0": 800.0, "cy0": 450.0, "width": 1600, "height": 900},
            "radar_to_camera": {"rotation": [[0,-1,0],[0,0,-1],[1,0,0]], "translation": [0,0.8,1.5]}}"#,
    )
    .unwrap();
    let records = dir.path().join("records.jsonl");
    fs::write(
        &records,
        concat!(
            r#"{"frame_id": 0, "radar": [{"x": 30.0, "y": 1.0, "z": 0.5}], "gt": [{"x0": 10, "y0": 10, "x1": 60, "y1": 40, "class": "vehicle.car"}, {"x0": 100, "y0": 10, "x1": 120, "y1": 40, "class": "movable_object.barrier"}]}"#,
            "\n",
            r#"{"frame_id": 1, "radar": [], "gt": [{"x0": 5, "y0": 5, "x1": 25, "y1": 60, "class": "person"}]}"#,
            "\n"
        ),
    )
    .unwrap();
    let map = dir.path().join("map.json");
    fs::write(&map, r#"{"vehicle.car": "car"}"#).unwrap();
    let out_path = dir.path().join("seq.json");
    let out = roifuse(&[
        "convert",
        "--camera",
        s(&camera),
        "--records",
        s(&records),
        "--class-map",
        s(&map),
        "--out",
        s(&out_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("movable_object.barrier"));
    let frames = roifuse::sequence::load_frames(&out_path).unwrap();
    assert_eq!(frames.len(), 2);
    assert_eq!(frames[0].ground_truth.len(), 1);
    assert_eq!(
        frames[1].ground_truth[0].class_id,
        roifuse_core::ClassId::Pedestrian
    );
}
