//! Tailbeat frequency of a synthetic swimmer from its per-frame masks.

use flair::kinematics::{estimate_tbf, KinematicsConfig};
use flair::morphometry::CameraModel;
use flair::synth::{generate, SceneSpec, SwimmerSpec};

fn main() -> flair::Result<()> {
    let spec = SceneSpec {
        duration_s: 12.0,
        swimmers: vec![SwimmerSpec {
            frequency_hz: 0.8,
            ..SwimmerSpec::default()
        }],
        ..SceneSpec::default()
    };
    let scene = generate(&spec)?;
    let masks = scene.truth.swimmer_masks(0);

    let est = estimate_tbf(&masks, &CameraModel::default(), &KinematicsConfig::default())?;
    println!(
        "{} frames, {} midline crossings, {} beats",
        est.displacement.values.len(),
        est.beats.crossing_times.len(),
        est.beats.beats.len()
    );
    for (c, f) in est.tbf.window_centers_s.iter().zip(&est.tbf.beats_per_second).step_by(4) {
        println!("  window at {c:5.2} s: {f:.3} Hz");
    }
    Ok(())
}
