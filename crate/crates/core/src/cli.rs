//! Command-line front end.
//!
//! Exit status: 0 on success, 2 on invalid input or configuration, 3 when the
//! command finished but raised warnings. Warnings go to stderr, one summary
//! line per command goes to stdout.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{run_alignment, AlignmentConfig};
use crate::error::{Error, Result};
use crate::eval::{precision_recall_at_iou, split_sizes, time_block_split, video_dice, FrameRow, SplitConfig};
use crate::io;
use crate::kinematics::{estimate_tbf, KinematicsConfig};
use crate::mask::BinaryMask;
use crate::morphometry::{measure_length, CameraModel, LengthMeasurement};
use crate::synth::{generate, oracle_tracks, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_WARNINGS: i32 = 3;

/// Every tunable of the pipeline, as read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alignment: AlignmentConfig,
    pub kinematics: KinematicsConfig,
    pub camera: CameraModel,
    pub split: SplitConfig,
    pub synth: SceneSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.alignment.validate()?;
        self.kinematics.validate()?;
        self.camera.validate()?;
        self.split.validate()?;
        self.synth.validate()
    }
}

#[derive(Debug, Parser)]
#[command(name = "flair", version, about = "Track alignment and swimming biometrics from per-frame masks")]
pub struct Cli {
    /// TOML file with [alignment], [kinematics], [camera], [split] and [synth] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gate candidates, align their tracks across intervals, write confirmed individuals.
    Align {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: AlignmentArgs,
    },
    /// Length, tail displacement and tailbeat frequency per individual.
    Biometrics {
        #[arg(long)]
        individuals: PathBuf,
        /// TOML file with the camera keys; replaces the [camera] section.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        camera_overrides: CameraArgs,
        #[command(flatten)]
        kinematics_overrides: KinematicsArgs,
    },
    /// Render a synthetic scene into candidate, track and ground-truth files.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: SynthArgs,
    },
    /// Dice and detection precision/recall of predicted masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou_threshold: f64,
        /// Average Dice only over frames whose ground truth is non-empty.
        #[arg(long)]
        only_positive_frames: bool,
    },
    /// Assign frames to train/val/test in contiguous time blocks.
    Split {
        /// CSV with a `video,frame` header.
        #[arg(long, conflicts_with = "count", required_unless_present = "count")]
        input: Option<PathBuf>,
        /// Split frames `0..count` of a single video instead of reading a file.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "video")]
        video: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: SplitArgs,
    },
}

#[derive(Debug, Default, Args)]
pub struct AlignmentArgs {
    #[arg(long)]
    pub interval_stride: Option<usize>,
    #[arg(long)]
    pub score_threshold: Option<f64>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    #[arg(long)]
    pub shark_prompt_label: Option<String>,
    #[arg(long)]
    pub min_support: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct CameraArgs {
    #[arg(long)]
    pub sensor_width_mm: Option<f64>,
    #[arg(long)]
    pub image_width_px: Option<f64>,
    #[arg(long)]
    pub altitude_m: Option<f64>,
    #[arg(long)]
    pub depth_m: Option<f64>,
    #[arg(long)]
    pub focal_length_mm: Option<f64>,
    #[arg(long)]
    pub fps: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct KinematicsArgs {
    #[arg(long)]
    pub savgol_window: Option<usize>,
    #[arg(long)]
    pub savgol_order: Option<usize>,
    #[arg(long)]
    pub tbf_window_s: Option<f64>,
    #[arg(long)]
    pub tbf_step_s: Option<f64>,
    #[arg(long)]
    pub extremum_radius: Option<usize>,
    #[arg(long)]
    pub max_gap_s: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Frame rate of the rendered scene.
    #[arg(long)]
    pub scene_fps: Option<f64>,
    #[arg(long)]
    pub interval_stride: Option<usize>,
    #[arg(long)]
    pub shark_label: Option<String>,
    #[arg(long)]
    pub candidate_score: Option<f64>,
    /// Tailbeat frequency applied to every swimmer.
    #[arg(long)]
    pub frequency_hz: Option<f64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Scatter this many transient blobs, each seen on one sampled frame.
    #[arg(long)]
    pub blobs: Option<usize>,
    #[arg(long)]
    pub distractors_per_interval: Option<usize>,
    /// Erode or dilate replayed tracks by a pixel at random.
    #[arg(long)]
    pub perturb_tracks: bool,
}

#[derive(Debug, Default, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Train, validation and test fractions, comma separated.
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<[f64; 3]>,
}

fn parse_ratios(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected three fractions, got {}", v.len()))
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

impl AlignmentArgs {
    fn apply(self, c: &mut AlignmentConfig) {
        set(&mut c.interval_stride, self.interval_stride);
        set(&mut c.score_threshold, self.score_threshold);
        set(&mut c.iou_threshold, self.iou_threshold);
        set(&mut c.shark_prompt_label, self.shark_prompt_label);
        set(&mut c.min_support, self.min_support);
    }
}

impl CameraArgs {
    fn apply(self, c: &mut CameraModel) {
        set(&mut c.sensor_width_mm, self.sensor_width_mm);
        set(&mut c.image_width_px, self.image_width_px);
        set(&mut c.altitude_m, self.altitude_m);
        set(&mut c.depth_m, self.depth_m);
        set(&mut c.focal_length_mm, self.focal_length_mm);
        set(&mut c.fps, self.fps);
    }
}

impl KinematicsArgs {
    fn apply(self, c: &mut KinematicsConfig) {
        set(&mut c.savgol_window, self.savgol_window);
        set(&mut c.savgol_order, self.savgol_order);
        set(&mut c.tbf_window_s, self.tbf_window_s);
        set(&mut c.tbf_step_s, self.tbf_step_s);
        set(&mut c.extremum_radius, self.extremum_radius);
        set(&mut c.max_gap_s, self.max_gap_s);
    }
}

impl SplitArgs {
    fn apply(self, c: &mut SplitConfig) {
        set(&mut c.block_size, self.block_size);
        set(&mut c.ratios, self.ratios);
    }
}

/// Parse arguments, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(warnings) if warnings.is_empty() => EXIT_OK,
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            EXIT_WARNINGS
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Run a parsed command; returns the warnings it raised.
pub fn run(cli: Cli) -> Result<Vec<String>> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.split.seed = seed;
        cfg.synth.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, cfg))
}

fn dispatch(command: Command, mut cfg: RunConfig) -> Result<Vec<String>> {
    match command {
        Command::Align {
            candidates,
            tracks,
            out,
            overrides,
        } => {
            overrides.apply(&mut cfg.alignment);
            cfg.validate()?;
            cmd_align(&candidates, &tracks, &out, &cfg.alignment)
        }
        Command::Biometrics {
            individuals,
            camera,
            out_dir,
            camera_overrides,
            kinematics_overrides,
        } => {
            if let Some(p) = camera {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(p.display().to_string(), e))?;
                cfg.camera =
                    toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?;
            }
            camera_overrides.apply(&mut cfg.camera);
            kinematics_overrides.apply(&mut cfg.kinematics);
            cfg.validate()?;
            cmd_biometrics(&individuals, &out_dir, &cfg.camera, &cfg.kinematics)
        }
        Command::Synth { out_dir, overrides } => {
            apply_synth(overrides, &mut cfg.synth)?;
            cfg.validate()?;
            cmd_synth(&out_dir, &cfg.synth)
        }
        Command::Eval {
            pred,
            truth,
            out_dir,
            iou_threshold,
            only_positive_frames,
        } => {
            cfg.validate()?;
            cmd_eval(&pred, &truth, &out_dir, iou_threshold, only_positive_frames)
        }
        Command::Split {
            input,
            count,
            video,
            out,
            overrides,
        } => {
            overrides.apply(&mut cfg.split);
            cfg.validate()?;
            let rows = match (input, count) {
                (Some(p), _) => read_frame_rows(io::open(&p)?, &p.display().to_string())?,
                (None, Some(n)) => (0..n)
                    .map(|frame| FrameRow {
                        video: video.clone(),
                        frame,
                    })
                    .collect(),
                (None, None) => unreachable!("clap requires --input or --count"),
            };
            cmd_split(&rows, &out, &cfg.split)
        }
    }
}

fn apply_synth(args: SynthArgs, spec: &mut SceneSpec) -> Result<()> {
    if let Some(f) = args.frequency_hz {
        for s in &mut spec.swimmers {
            s.frequency_hz = f;
        }
    }
    set(&mut spec.width, args.width);
    set(&mut spec.height, args.height);
    set(&mut spec.fps, args.scene_fps);
    set(&mut spec.interval_stride, args.interval_stride);
    set(&mut spec.shark_label, args.shark_label);
    set(&mut spec.candidate_score, args.candidate_score);
    set(&mut spec.duration_s, args.duration_s);
    set(&mut spec.distractors_per_interval, args.distractors_per_interval);
    spec.perturb_tracks |= args.perturb_tracks;
    if let Some(n) = args.blobs {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        spec.scatter_transients(n, &mut rng);
    }
    Ok(())
}

fn finish(w: impl Write, path: &Path) -> Result<()> {
    let mut w = w;
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path.display().to_string(), e)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(write_err(dir))
}

pub fn cmd_align(candidates: &Path, tracks: &Path, out: &Path, cfg: &AlignmentConfig) -> Result<Vec<String>> {
    let cands = io::read_candidates(io::open(candidates)?, &candidates.display().to_string())?;
    let track_file = io::read_track_file(io::open(tracks)?, &tracks.display().to_string())?;
    let outcome = run_alignment(&cands, &track_file.into_propagator(), cfg)?;
    let mut w = io::create(out)?;
    io::write_individuals(&mut w, &outcome).map_err(write_err(out))?;
    finish(w, out)?;
    println!(
        "align: {} individuals from {} candidates",
        outcome.individuals.len(),
        cands.len()
    );
    Ok(outcome.warnings.iter().map(ToString::to_string).collect())
}

pub fn cmd_biometrics(
    individuals: &Path,
    out_dir: &Path,
    cam: &CameraModel,
    kin: &KinematicsConfig,
) -> Result<Vec<String>> {
    let inds = io::read_individuals(io::open(individuals)?, &individuals.display().to_string())?;
    ensure_dir(out_dir)?;
    let mut warnings = Vec::new();
    let mut lengths = Vec::new();
    let mut displacement = Vec::new();
    let mut tbf = Vec::new();
    for (&id, masks) in &inds {
        let measured: Vec<(usize, Result<LengthMeasurement>)> = masks
            .par_iter()
            .map(|(&frame, m)| (frame, measure_length(m, cam)))
            .collect();
        for (frame, res) in measured {
            match res {
                Ok(l) => lengths.push((frame, id, l.length_px, l.length_m)),
                Err(e) => warnings.push(format!("length of individual {id} at frame {frame}: {e}")),
            }
        }
        match estimate_tbf(masks, cam, kin) {
            Ok(est) => {
                let raw: BTreeMap<usize, f64> = est
                    .displacement
                    .frame_indices
                    .iter()
                    .copied()
                    .zip(est.displacement.values.iter().copied())
                    .collect();
                let frames: BTreeSet<usize> = raw.keys().chain(est.smoothed.keys()).copied().collect();
                for f in frames {
                    displacement.push((f, id, raw.get(&f).copied(), est.smoothed.get(&f).copied()));
                }
                for (&c, &v) in est.tbf.window_centers_s.iter().zip(&est.tbf.beats_per_second) {
                    tbf.push((c, id, v));
                }
            }
            Err(e) => warnings.push(format!("tailbeat of individual {id}: {e}")),
        }
    }
    let write_csv = |name: &str, f: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let mut w = io::create(&path)?;
        f(&mut w).map_err(write_err(&path))?;
        finish(w, &path)
    };
    write_csv("length.csv", &|w| io::write_length_csv(w, &lengths))?;
    write_csv("displacement.csv", &|w| io::write_displacement_csv(w, &displacement))?;
    write_csv("tbf.csv", &|w| io::write_tbf_csv(w, &tbf))?;
    println!(
        "biometrics: {} individuals, {} length rows, {} tbf windows",
        inds.len(),
        lengths.len(),
        tbf.len()
    );
    Ok(warnings)
}

pub fn cmd_synth(out_dir: &Path, spec: &SceneSpec) -> Result<Vec<String>> {
    let scene = generate(spec)?;
    let tracks = oracle_tracks(&scene);
    ensure_dir(out_dir)?;
    let paths = ["candidates.ndjson", "tracks.ndjson", "truth.ndjson"].map(|n| out_dir.join(n));
    let mut w = io::create(&paths[0])?;
    io::write_candidates(&mut w, &scene.candidates).map_err(write_err(&paths[0]))?;
    finish(w, &paths[0])?;
    let mut w = io::create(&paths[1])?;
    io::write_tracks(&mut w, &tracks).map_err(write_err(&paths[1]))?;
    finish(w, &paths[1])?;
    let mut w = io::create(&paths[2])?;
    io::write_truth(&mut w, &scene.truth).map_err(write_err(&paths[2]))?;
    finish(w, &paths[2])?;
    println!(
        "synth: {} frames, {} swimmers, {} blobs, {} candidates, {} tracks",
        scene.truth.n_frames,
        spec.swimmers.len(),
        spec.blobs.len(),
        scene.candidates.len(),
        tracks.len()
    );
    Ok(Vec::new())
}

pub fn cmd_eval(
    pred: &Path,
    truth: &Path,
    out_dir: &Path,
    iou_threshold: f64,
    only_positive_frames: bool,
) -> Result<Vec<String>> {
    let (p, _) = io::read_frame_masks(io::open(pred)?, &pred.display().to_string())?;
    let (g, declared) = io::read_frame_masks(io::open(truth)?, &truth.display().to_string())?;
    let seen = p.keys().chain(g.keys()).max().map_or(0, |f| f + 1);
    let n_frames = declared.unwrap_or(0).max(seen);
    let per_frame = |m: &BTreeMap<usize, Vec<BinaryMask>>| -> Vec<Vec<BinaryMask>> {
        (0..n_frames).map(|f| m.get(&f).cloned().unwrap_or_default()).collect()
    };
    let (pf, gf) = (per_frame(&p), per_frame(&g));
    let dice = video_dice(&pf, &gf, only_positive_frames)?;
    let pr = precision_recall_at_iou(&pf, &gf, iou_threshold)?;

    let metrics: [(&str, String); 9] = [
        ("frames", n_frames.to_string()),
        ("only_positive_frames", only_positive_frames.to_string()),
        ("dice", format!("{dice:.6}")),
        ("iou_threshold", iou_threshold.to_string()),
        ("precision", format!("{:.6}", pr.precision)),
        ("recall", format!("{:.6}", pr.recall)),
        ("true_positives", pr.true_positives.to_string()),
        ("predictions", pr.predictions.to_string()),
        ("ground_truths", pr.ground_truths.to_string()),
    ];
    ensure_dir(out_dir)?;
    let report = out_dir.join("report.txt");
    let mut w = io::create(&report)?;
    for (k, v) in &metrics {
        writeln!(w, "{k}={v}").map_err(write_err(&report))?;
    }
    finish(w, &report)?;
    let csv = out_dir.join("metrics.csv");
    let mut w = io::create(&csv)?;
    writeln!(w, "metric,value").map_err(write_err(&csv))?;
    for (k, v) in &metrics {
        writeln!(w, "{k},{v}").map_err(write_err(&csv))?;
    }
    finish(w, &csv)?;
    println!(
        "eval: dice={dice:.4} precision={:.4} recall={:.4} over {n_frames} frames",
        pr.precision, pr.recall
    );
    Ok(Vec::new())
}

/// Rows of a `video,frame` CSV with a header line.
pub fn read_frame_rows(reader: impl Read, label: &str) -> Result<Vec<FrameRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(label, e))?;
    if headers != vec!["video", "frame"] {
        return Err(Error::Schema {
            path: label.to_string(),
            line: 1,
            message: format!("expected header `video,frame`, found {headers:?}"),
        });
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| csv_error(label, e)))
        .collect()
}

fn csv_error(label: &str, e: csv::Error) -> Error {
    Error::Schema {
        path: label.to_string(),
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

pub fn cmd_split(rows: &[FrameRow], out: &Path, cfg: &SplitConfig) -> Result<Vec<String>> {
    let assignments = time_block_split(rows, cfg)?;
    let mut w = io::create(out)?;
    writeln!(w, "video,frame,block,split").map_err(write_err(out))?;
    for a in &assignments {
        writeln!(w, "{},{},{},{}", a.video, a.frame, a.block, a.split).map_err(write_err(out))?;
    }
    finish(w, out)?;
    let [train, val, test] = split_sizes(&assignments);
    let blocks = assignments.last().map_or(0, |a| a.block + 1);
    println!("split: {} rows in {blocks} blocks, train={train} val={val} test={test}", assignments.len());
    Ok(Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let err = toml::from_str::<RunConfig>("[alignment]\nstride = 3\n").unwrap_err();
        assert!(err.to_string().contains("stride"));
        let ok: RunConfig = toml::from_str("[alignment]\ninterval_stride = 15\n").unwrap();
        assert_eq!(ok.alignment.interval_stride, 15);
        assert_eq!(ok.kinematics, KinematicsConfig::default());
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "flair", "split", "--count", "10", "--out", "x.csv", "--block-size", "4", "--ratios", "0.5,0.25,0.25",
        ])
        .unwrap();
        let Command::Split { overrides, .. } = cli.command else {
            panic!("parsed {:?}", cli.command);
        };
        let mut c = SplitConfig::default();
        overrides.apply(&mut c);
        assert_eq!(c.block_size, 4);
        assert_eq!(c.ratios, [0.5, 0.25, 0.25]);
    }

    #[test]
    fn split_csv_parsing() {
        let rows = read_frame_rows("video,frame\na,3\n\nb, 0\n".as_bytes(), "rows.csv").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].video, "b");
        let err = read_frame_rows("video,frame\na,x\n".as_bytes(), "rows.csv").unwrap_err();
        assert!(err.to_string().starts_with("rows.csv:2:"), "{err}");
        assert!(read_frame_rows("frame\n".as_bytes(), "rows.csv").is_err());
    }

    #[test]
    fn split_requires_a_source() {
        assert!(Cli::try_parse_from(["flair", "split", "--out", "x.csv"]).is_err());
    }
}
