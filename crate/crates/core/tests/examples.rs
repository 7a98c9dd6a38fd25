//! Every example under examples/ builds and exits cleanly.

use std::process::Command;

const EXAMPLES: &[&str] = &[
    "mask_geometry",
    "synthetic_alignment",
    "body_length",
    "tailbeat",
    "evaluation_split",
    "ndjson_pipeline",
];

#[test]
fn examples_run() {
    let listed: Vec<String> = std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/examples"))
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(listed.len(), EXAMPLES.len(), "examples/ holds {listed:?}");
    for name in EXAMPLES {
        let out = Command::new(env!("CARGO"))
            .args(["run", "--quiet", "--profile", "test", "--example", name])
            .current_dir(env!("CARGO_MANIFEST_DIR"))
            .output()
            .expect("spawn cargo");
        assert!(
            out.status.success(),
            "{name} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}
