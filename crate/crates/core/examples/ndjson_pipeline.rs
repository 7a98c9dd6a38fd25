//! The file-based path: candidate and track NDJSON in, individuals and CSV out.

use std::fs;
use std::io::BufWriter;

use flair::alignment::{run_alignment, AlignmentConfig, FileTracks};
use flair::io;
use flair::kinematics::{estimate_tbf, KinematicsConfig};
use flair::morphometry::CameraModel;
use flair::synth::{generate, oracle_tracks, SceneSpec};

fn main() -> flair::Result<()> {
    let dir = std::env::temp_dir().join(format!("flair-example-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| flair::Error::InvalidInput(e.to_string()))?;
    let cand_path = dir.join("candidates.ndjson");
    let track_path = dir.join("tracks.ndjson");

    // Stand-in for the segmentation model: write what it would emit.
    let scene = generate(&SceneSpec {
        duration_s: 8.0,
        ..SceneSpec::default()
    })?;
    let w = BufWriter::new(fs::File::create(&cand_path).expect("create candidates"));
    io::write_candidates(w, &scene.candidates).expect("write candidates");
    let w = BufWriter::new(fs::File::create(&track_path).expect("create tracks"));
    io::write_tracks(w, &oracle_tracks(&scene)).expect("write tracks");

    let candidates = io::read_candidates(io::open(&cand_path)?, "candidates.ndjson")?;
    let tracks = io::read_tracks(io::open(&track_path)?, "tracks.ndjson")?;
    let outcome = run_alignment(&candidates, &FileTracks::new(tracks), &AlignmentConfig::default())?;
    println!("{} candidates -> {} individuals", candidates.len(), outcome.individuals.len());

    let cam = CameraModel::default();
    for ind in &outcome.individuals {
        let est = estimate_tbf(&ind.masks, &cam, &KinematicsConfig::default())?;
        let rows: Vec<(f64, usize, f64)> = est
            .tbf
            .window_centers_s
            .iter()
            .zip(&est.tbf.beats_per_second)
            .map(|(&c, &v)| (c, ind.id, v))
            .collect();
        let mut out = Vec::new();
        io::write_tbf_csv(&mut out, &rows).expect("in-memory write");
        print!("{}", String::from_utf8_lossy(&out));
    }
    fs::remove_dir_all(&dir).ok();
    Ok(())
}
