//! A swimmer that persists across intervals is confirmed; one-off blobs are not.

use flair::alignment::{run_alignment, AlignmentConfig};
use flair::synth::{generate, CandidateSource, SceneSpec, SyntheticPropagator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> flair::Result<()> {
    let mut spec = SceneSpec {
        duration_s: 6.0,
        distractors_per_interval: 2,
        ..SceneSpec::default()
    };
    spec.scatter_transients(5, &mut ChaCha8Rng::seed_from_u64(7));
    let scene = generate(&spec)?;

    let blobs = scene.sources.iter().filter(|s| matches!(s, CandidateSource::Blob(_))).count();
    println!(
        "{} frames, {} candidates ({} from transient blobs)",
        scene.truth.n_frames,
        scene.candidates.len(),
        blobs
    );

    let propagator = SyntheticPropagator::new(&scene).with_perturbation(true);
    let outcome = run_alignment(&scene.candidates, &propagator, &AlignmentConfig::default())?;
    for ind in &outcome.individuals {
        println!(
            "individual {}: {} frames, supported by intervals {:?}",
            ind.id,
            ind.masks.len(),
            ind.supporting_intervals
        );
    }
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
