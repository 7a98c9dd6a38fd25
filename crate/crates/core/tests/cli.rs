use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flair::BinaryMask;
use tempfile::TempDir;

fn flair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flair"))
        .args(args)
        .output()
        .expect("spawn flair")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Render a scene and align it; returns the scene dir and the individuals path.
fn synth_and_align(tmp: &TempDir, extra: &[&str]) -> (std::path::PathBuf, std::path::PathBuf) {
    let scene = tmp.path().join("scene");
    let mut args = vec!["synth", "--out-dir", s(&scene)];
    args.extend_from_slice(extra);
    let o = flair(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ind = tmp.path().join("individuals.ndjson");
    let o = flair(&[
        "align",
        "--candidates",
        s(&scene.join("candidates.ndjson")),
        "--tracks",
        s(&scene.join("tracks.ndjson")),
        "--out",
        s(&ind),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (scene, ind)
}

fn ids(individuals: &Path) -> std::collections::BTreeSet<u64> {
    fs::read_to_string(individuals)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_u64().unwrap())
        .collect()
}

#[test]
fn synthetic_scene_yields_one_individual() {
    let tmp = TempDir::new().unwrap();
    let (_, ind) = synth_and_align(&tmp, &["--duration-s", "6", "--blobs", "4", "--seed", "9"]);
    assert_eq!(ids(&ind).len(), 1);
    assert_eq!(fs::read_to_string(&ind).unwrap().lines().count(), 180);
}

#[test]
fn synth_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let o = flair(&["synth", "--out-dir", s(&dir), "--duration-s", "3", "--blobs", "3", "--perturb-tracks", "--seed", "5"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        dir
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["candidates.ndjson", "tracks.ndjson", "truth.ndjson"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_candidate_line_exits_2_with_line_number() {
    let tmp = TempDir::new().unwrap();
    let cands = tmp.path().join("c.ndjson");
    let tracks = tmp.path().join("t.ndjson");
    fs::write(
        &cands,
        "{\"frame\": 0, \"interval\": 0, \"mask\": \"4 2 1 2 5\", \"bbox\": [1,0,2,0], \"scores\": {\"shark\": 0.99}}\n\
         {\"frame\": 30, \"interval\": 1, \"mask\": \"4 2 1 2\"\n",
    )
    .unwrap();
    fs::write(&tracks, "").unwrap();
    let o = flair(&["align", "--candidates", s(&cands), "--tracks", s(&tracks), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("c.ndjson:2:"), "{}", stderr(&o));
}

#[test]
fn empty_candidate_file_gives_empty_output() {
    let tmp = TempDir::new().unwrap();
    let (cands, tracks, out) = (tmp.path().join("c"), tmp.path().join("t"), tmp.path().join("o"));
    fs::write(&cands, "").unwrap();
    fs::write(&tracks, "").unwrap();
    let o = flair(&["align", "--candidates", s(&cands), "--tracks", s(&tracks), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn single_interval_video_warns_with_exit_3() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    assert_eq!(code(&flair(&["synth", "--out-dir", s(&scene), "--duration-s", "0.9"])), 0);
    let out = tmp.path().join("o");
    let o = flair(&[
        "align",
        "--candidates",
        s(&scene.join("candidates.ndjson")),
        "--tracks",
        s(&scene.join("tracks.ndjson")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("single-interval-video"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn biometrics_recovers_half_hertz() {
    let tmp = TempDir::new().unwrap();
    let (_, ind) = synth_and_align(&tmp, &[]);
    let out = tmp.path().join("bio");
    let o = flair(&["biometrics", "--individuals", s(&ind), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tbf = fs::read_to_string(out.join("tbf.csv")).unwrap();
    let values: Vec<f64> = tbf.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(!values.is_empty());
    for v in values {
        assert!((v - 0.5).abs() / 0.5 <= 0.07, "{v}");
    }
    let lengths = fs::read_to_string(out.join("length.csv")).unwrap();
    assert_eq!(lengths.lines().next(), Some("frame,individual_id,length_px,length_m"));
    assert_eq!(lengths.lines().count(), 601);
    let disp = fs::read_to_string(out.join("displacement.csv")).unwrap();
    assert_eq!(disp.lines().next(), Some("frame,individual_id,displacement_px,displacement_smoothed_px"));
}

fn straight_line_individual(dir: &Path, frames: usize) -> std::path::PathBuf {
    let line = BinaryMask::from_fn(200, 10, |x, y| y == 5 && (20..180).contains(&x));
    let path = dir.join("line.ndjson");
    let text: String = (0..frames)
        .map(|f| format!("{{\"id\": 0, \"frame\": {f}, \"mask\": \"{line}\"}}\n"))
        .collect();
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn straight_160_px_mask_is_1_5125_m() {
    let tmp = TempDir::new().unwrap();
    let ind = straight_line_individual(tmp.path(), 20);
    let out = tmp.path().join("bio");
    let o = flair(&["biometrics", "--individuals", s(&ind), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lengths = fs::read_to_string(out.join("length.csv")).unwrap();
    assert_eq!(lengths.lines().nth(1), Some("0,0,160.0000,1.512500"));
    let tbf = fs::read_to_string(out.join("tbf.csv")).unwrap();
    assert!(tbf.lines().skip(1).all(|l| l.ends_with(",0.000000")), "{tbf}");
}

#[test]
fn camera_file_replaces_defaults() {
    let tmp = TempDir::new().unwrap();
    let ind = straight_line_individual(tmp.path(), 20);
    let cam = tmp.path().join("camera.toml");
    fs::write(
        &cam,
        "sensor_width_mm = 13.2\nimage_width_px = 1920\naltitude_m = 77.0\ndepth_m = 0.0\nfocal_length_mm = 28.0\nfps = 30.0\n",
    )
    .unwrap();
    let out = tmp.path().join("bio");
    let o = flair(&["biometrics", "--individuals", s(&ind), "--camera", s(&cam), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lengths = fs::read_to_string(out.join("length.csv")).unwrap();
    // 160 * 13.2 / 1920 * 77 / 28
    assert_eq!(lengths.lines().nth(1), Some("0,0,160.0000,3.025000"));

    fs::write(&cam, "sensor_width_mm = 13.2\n").unwrap();
    assert_eq!(code(&flair(&["biometrics", "--individuals", s(&ind), "--camera", s(&cam), "--out-dir", s(&out)])), 2);
}

#[test]
fn missing_camera_file_exits_2() {
    let tmp = TempDir::new().unwrap();
    let ind = straight_line_individual(tmp.path(), 20);
    let o = flair(&[
        "biometrics",
        "--individuals",
        s(&ind),
        "--camera",
        s(&tmp.path().join("absent.toml")),
        "--out-dir",
        s(&tmp.path().join("bio")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn too_few_frames_is_a_warning() {
    let tmp = TempDir::new().unwrap();
    let ind = straight_line_individual(tmp.path(), 3);
    let out = tmp.path().join("bio");
    let o = flair(&["biometrics", "--individuals", s(&ind), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("tailbeat of individual 0"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("length.csv")).unwrap().lines().count(), 4);
}

#[test]
fn eval_of_perfect_predictions_reports_dice_1() {
    let tmp = TempDir::new().unwrap();
    let (scene, ind) = synth_and_align(&tmp, &["--duration-s", "4"]);
    let out = tmp.path().join("eval");
    let o = flair(&["eval", "--pred", s(&ind), "--truth", s(&scene.join("truth.ndjson")), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    for line in ["dice=1.000000", "precision=1.000000", "recall=1.000000", "frames=120"] {
        assert!(report.lines().any(|l| l == line), "{line} missing from\n{report}");
    }
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("metric,value\n"));
}

#[test]
fn split_of_100_frames_has_3_blocks() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("split.csv");
    let o = flair(&["split", "--count", "100", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("video,frame,block,split"));
    let blocks: std::collections::BTreeSet<&str> = lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(blocks.len(), 3);
}

#[test]
fn split_reads_csv_and_reports_bad_rows() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("rows.csv");
    let rows: String = (0..90).map(|f| format!("clip,{f}\n")).collect();
    fs::write(&input, format!("video,frame\n{rows}")).unwrap();
    let out = tmp.path().join("split.csv");
    let o = flair(&["split", "--input", s(&input), "--out", s(&out), "--seed", "3", "--block-size", "30"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 91);

    fs::write(&input, "video,frame\nclip,0\nclip,one\n").unwrap();
    let o = flair(&["split", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("rows.csv:3:"), "{}", stderr(&o));
}

#[test]
fn config_file_is_validated_before_work() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    let out = tmp.path().join("split.csv");

    fs::write(&cfg, "[split]\nblock_size = 10\nratios = [0.5, 0.5, 0.0]\n").unwrap();
    let o = flair(&["--config", s(&cfg), "split", "--count", "100", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("10 blocks"));

    fs::write(&cfg, "[split]\nblock_sz = 10\n").unwrap();
    let o = flair(&["--config", s(&cfg), "split", "--count", "100", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("block_sz"), "{}", stderr(&o));

    fs::write(&cfg, "[alignment]\niou_threshold = 1.5\n").unwrap();
    assert_eq!(code(&flair(&["--config", s(&cfg), "split", "--count", "100", "--out", s(&out)])), 2);
}

#[test]
fn flags_override_config_values() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[split]\nblock_size = 10\n").unwrap();
    let out = tmp.path().join("split.csv");
    let o = flair(&["--config", s(&cfg), "split", "--count", "100", "--block-size", "50", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 blocks"));
}

#[test]
fn thread_count_is_checked_and_does_not_change_output() {
    let tmp = TempDir::new().unwrap();
    let one = tmp.path().join("one");
    let four = tmp.path().join("four");
    for (dir, n) in [(&one, "1"), (&four, "4")] {
        let o = flair(&["--threads", n, "synth", "--out-dir", s(dir), "--duration-s", "2"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(fs::read(one.join("truth.ndjson")).unwrap(), fs::read(four.join("truth.ndjson")).unwrap());
    assert_eq!(code(&flair(&["--threads", "0", "split", "--count", "5", "--out", s(&tmp.path().join("x"))])), 2);
}
