use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIO: &str = r#"
width = 24
height = 16
frames = 40
seed = 3
background = { mean = 60.0, stddev = 2.0 }

[[regions]]
rect = [0, 0, 24, 4]
modes = [{ mean = 30.0, stddev = 2.0 }, { mean = 90.0, stddev = 2.0 }]

[[events]]
rect = [2, 7, 6, 6]
start = 32
end = 40
mean = 200.0
stddev = 3.0
velocity = [1.0, 0.0]
"#;

fn thermobg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermobg"))
        .args(args)
        .env_remove("THERMOBG_WORKERS")
        .output()
        .expect("spawn thermobg")
}

fn ok(args: &[&str]) -> String {
    let out = thermobg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Renders the small scenario into `<dir>/vid/{frames,gt}`.
fn video(dir: &TempDir) -> PathBuf {
    let scenario = dir.path().join("scene.toml");
    fs::write(&scenario, SCENARIO).unwrap();
    let out = dir.path().join("vid");
    ok(&["synth", "video", "--scenario", s(&scenario), "--out", s(&out)]);
    out
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn fit_args<'a>(frames: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "fit",
        "--input",
        frames,
        "--history",
        "30",
        "--kmax",
        "10",
        "--seed",
        "7",
        "--out",
        out,
        "-q",
    ]
}

#[test]
fn fit_writes_a_model_and_reruns_byte_identically() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let (a, b) = (dir.path().join("a.vimm"), dir.path().join("b.vimm"));
    let stdout = ok(&fit_args(s(&frames), s(&a)));
    assert!(stdout.contains("components"), "no histogram in {stdout}");
    let pixels: usize = stdout
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(pixels, 24 * 16);
    ok(&fit_args(s(&frames), s(&b)));
    let text = fs::read(&a).unwrap();
    assert!(text.starts_with(b"VIMM1 24 16 30 256\n"));
    assert_eq!(text, fs::read(&b).unwrap());
}

#[test]
fn too_short_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let out = thermobg(&[
        "fit",
        "--input",
        s(&frames),
        "--history",
        "100",
        "--out",
        s(&dir.path().join("m.vimm")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("40"));
    assert!(!dir.path().join("m.vimm").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&thermobg(&["run", "--bogus"])), 1);
    assert_eq!(code(&thermobg(&["frobnicate"])), 1);
    assert_eq!(code(&thermobg(&["--help"])), 0);
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let out = thermobg(&[
        "run",
        "--input",
        s(&frames),
        "--out",
        s(&dir.path().join("o")),
        "--pbg",
        "0.4",
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn worker_count_never_changes_the_masks() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    for mode in ["approx", "exact"] {
        let mut results = Vec::new();
        for workers in ["1", "3", "8"] {
            let out = dir.path().join(format!("{mode}-{workers}"));
            ok(&[
                "run",
                "--input",
                s(&frames),
                "--out",
                s(&out),
                "--history",
                "30",
                "--kmax",
                "10",
                "--mode",
                mode,
                "--workers",
                workers,
                "-q",
            ]);
            let masks = dir_bytes(&out);
            assert_eq!(masks.len(), 10);
            results.push((masks, fs::read(out.join("model.vimm")).unwrap()));
        }
        assert!(
            results.windows(2).all(|w| w[0] == w[1]),
            "{mode} differs across worker counts"
        );
    }
}

#[test]
fn frozen_run_on_a_static_scene_is_constant() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("static.toml");
    fs::write(
        &scenario,
        "width = 20\nheight = 10\nframes = 45\nbackground = { mean = 80.0, stddev = 2.0 }\n",
    )
    .unwrap();
    let vid = dir.path().join("vid");
    ok(&["synth", "video", "-s", s(&scenario), "-o", s(&vid)]);
    let frames = vid.join("frames");
    let model = dir.path().join("bg.vimm");
    ok(&fit_args(s(&frames), s(&model)));
    let out = dir.path().join("out");
    ok(&[
        "run",
        "-i",
        s(&frames),
        "-o",
        s(&out),
        "-m",
        s(&model),
        "--freeze",
        "-q",
    ]);
    let masks = dir_bytes(&out);
    assert_eq!(masks.len(), 45);
    assert!(masks.windows(2).all(|w| w[0].1 == w[1].1));
    assert_eq!(fs::read(out.join("model.vimm")).unwrap(), fs::read(&model).unwrap());
}

#[test]
fn run_writes_manifest_and_posteriors() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let out = dir.path().join("out");
    ok(&[
        "run",
        "-i",
        s(&frames),
        "-o",
        s(&out),
        "--history",
        "30",
        "--kmax",
        "10",
        "--seed",
        "5",
        "--min-blob",
        "4",
        "--save-posterior",
        "-q",
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["frames_fitted"], 30);
    assert_eq!(manifest["frames_processed"], 10);
    assert_eq!(manifest["config"]["segment"]["min_blob_area"], 4);
    let post = dir_bytes(&out.join("posterior"));
    assert_eq!(post.len(), 10);
    assert!(post[0].1.starts_with(b"P5\n24 16\n65535\n"));
}

#[test]
fn exact_mode_from_a_saved_model_needs_a_pool() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let model = dir.path().join("bg.vimm");
    ok(&fit_args(s(&frames), s(&model)));
    let out = dir.path().join("out");
    let base = [
        "run",
        "-i",
        s(&frames),
        "-o",
        s(&out),
        "-m",
        s(&model),
        "--mode",
        "exact",
        "-q",
    ];
    assert_eq!(code(&thermobg(&base)), 1);
    let mut with_pool = base.to_vec();
    with_pool.extend(["--pool", s(&frames)]);
    ok(&with_pool);
    assert_eq!(dir_bytes(&out).len(), 40);
}

#[test]
fn model_and_frame_geometry_must_agree() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let model = dir.path().join("bg.vimm");
    ok(&fit_args(s(&frames), s(&model)));
    let scenario = dir.path().join("other.toml");
    fs::write(
        &scenario,
        "width = 8\nheight = 8\nframes = 3\nbackground = { mean = 10.0, stddev = 1.0 }\n",
    )
    .unwrap();
    let other = dir.path().join("other");
    ok(&["synth", "video", "-s", s(&scenario), "-o", s(&other)]);
    let out = thermobg(&[
        "run",
        "-i",
        s(&other.join("frames")),
        "-o",
        s(&dir.path().join("o")),
        "-m",
        s(&model),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("24x16"));
}

#[test]
fn strict_fit_fails_numerically_when_capped() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let model = dir.path().join("bg.vimm");
    let mut args = fit_args(s(&frames), s(&model));
    args.extend(["--max-iters", "1", "--strict"]);
    let out = thermobg(&args);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!model.exists());
}

#[test]
fn eval_scores_perfect_and_reports_missing_pairs() {
    let dir = TempDir::new().unwrap();
    let vid = video(&dir);
    let gt = vid.join("gt");
    let stdout = ok(&["eval", "--pred", s(&gt), "--gt", s(&gt)]);
    let m: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(m["f1"], 1.0);
    assert_eq!(m["pwc"], 0.0);

    let per_frame = dir.path().join("frames.json");
    let metrics = dir.path().join("m.json");
    ok(&[
        "eval",
        "--pred",
        s(&gt),
        "--gt",
        s(&gt),
        "--sample",
        "5",
        "--seed",
        "2",
        "--out",
        s(&metrics),
        "--per-frame",
        s(&per_frame),
    ]);
    let frames: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(&per_frame).unwrap()).unwrap();
    assert_eq!(frames.len(), 5);
    assert!(frames.iter().all(|f| f["frame"].as_str().unwrap().ends_with(".pgm")));
    let agg: serde_json::Value = serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(agg["tp"].as_u64().unwrap() + agg["tn"].as_u64().unwrap(), 5 * 24 * 16);

    let pred = dir.path().join("pred");
    fs::create_dir(&pred).unwrap();
    fs::copy(gt.join("000001.pgm"), pred.join("000001.pgm")).unwrap();
    fs::copy(gt.join("000001.pgm"), pred.join("extra.pgm")).unwrap();
    let out = thermobg(&["eval", "--pred", s(&pred), "--gt", s(&gt)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("extra.pgm"));
}

#[test]
fn eval_against_synthetic_ground_truth() {
    let dir = TempDir::new().unwrap();
    let vid = video(&dir);
    let out = dir.path().join("out");
    ok(&[
        "run",
        "-i",
        s(&vid.join("frames")),
        "-o",
        s(&out),
        "--history",
        "30",
        "--kmax",
        "10",
        "--min-blob",
        "4",
        "-q",
    ]);
    let m: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--pred", s(&out), "--gt", s(&vid.join("gt"))])).unwrap();
    assert!(m["f1"].as_f64().unwrap() >= 0.9, "{m}");
}

#[test]
fn fit_demo_recovers_three_components() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fd");
    let stdout = ok(&["synth", "fit-demo", "--seed", "1", "--out", s(&out)]);
    assert!(stdout.starts_with("recovered K=3"), "{stdout}");
    let comps = fs::read_to_string(out.join("components.csv")).unwrap();
    assert_eq!(comps.lines().count(), 4);
    let density = fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(
        density.lines().next().unwrap(),
        "x,density,component_1,component_2,component_3"
    );
    assert_eq!(
        fs::read_to_string(out.join("samples.csv")).unwrap().lines().count(),
        301
    );
}

#[test]
fn update_demo_shows_the_new_mode_emerging() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ud");
    ok(&["synth", "update-demo", "--seed", "1", "--out", s(&out)]);
    let density = fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(density.lines().next().unwrap(), "x,t0,t25,t50");
    let comps = fs::read_to_string(out.join("components.csv")).unwrap();
    let near_21 = |t: &str| {
        comps.lines().skip(1).any(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[0] == t && (20.0..=22.0).contains(&f[3].parse::<f64>().unwrap())
        })
    };
    assert!(!near_21("0"));
    assert!(near_21("25"));
    assert!(near_21("50"));
}

#[test]
fn invalid_scenarios_are_rejected() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "width = 4\nheight = 4\nframes = 2\nbackground = { mean = 1.0, stddev = 1.0 }\ncolour = 3\n",
    )
    .unwrap();
    let out = thermobg(&["synth", "video", "-s", s(&bad), "-o", s(&dir.path().join("v"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn bundled_scenario_renders() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("example.toml");
    fs::write(&path, ok(&["synth", "scenario"])).unwrap();
    let out = dir.path().join("v");
    ok(&["synth", "video", "-s", s(&path), "-o", s(&out)]);
    assert_eq!(dir_bytes(&out.join("frames")).len(), 140);
    assert_eq!(dir_bytes(&out.join("gt")).len(), 140);
}

#[test]
fn raw_input_matches_pgm_input() {
    let dir = TempDir::new().unwrap();
    let frames = video(&dir).join("frames");
    let mut raw = Vec::new();
    for (_, bytes) in dir_bytes(&frames) {
        raw.extend_from_slice(&bytes[bytes.len() - 24 * 16..]);
    }
    let raw_path = dir.path().join("clip.raw");
    fs::write(&raw_path, &raw).unwrap();
    let (a, b) = (dir.path().join("a.vimm"), dir.path().join("b.vimm"));
    ok(&fit_args(s(&frames), s(&a)));
    let mut args = fit_args(s(&raw_path), s(&b));
    args.extend(["--raw", "24x16"]);
    ok(&args);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    fs::write(&raw_path, &raw[..raw.len() - 1]).unwrap();
    assert_eq!(code(&thermobg(&args)), 2);
}

#[test]
fn bench_reports_nonzero_throughput() {
    let stdout = ok(&[
        "bench",
        "--size",
        "16x12",
        "--frames",
        "5",
        "--history",
        "10",
        "--kmax",
        "5",
    ]);
    let line = stdout.lines().find(|l| l.starts_with("16x12")).expect("size line");
    let fps: f64 = line
        .split(", ")
        .find_map(|p| p.strip_suffix(" frames/s"))
        .and_then(|v| v.parse().ok())
        .expect("frames/s figure");
    assert!(fps > 0.0);
}
