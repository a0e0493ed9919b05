//! Command-line front end.
//!
//! Every subcommand prints a [`RunReport`] as JSON on standard output. Exit
//! codes: 0 on success, 1 on input or usage errors, 2 when tracking finds no
//! closed boundary (no contrast at the seed, or the walk never closes).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::imgio::{
    gen_phantom, read_mask, read_pgm, read_raw16_series, read_sidecar, write_mask, write_pgm, Endianness, GrayImage,
    PhantomSpec, DEFAULT_TIMEPOINT, RNG_ALGORITHM,
};
use crate::metrics::{dice, threshold_segment};
use crate::pipeline::{evaluate, segment, EvalConfig, Method};
use crate::tracker::{DetectorKind, TrackerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_CLOSURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cusumseg", version, about = "CUSUM boundary-tracking segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track a boundary from a seed point and write its mask.
    Segment(SegmentArgs),
    /// Segment with a single global threshold.
    Baseline(BaselineArgs),
    /// Dice overlap of two mask files.
    Dice(DiceArgs),
    /// Render a synthetic phantom and its truth mask.
    Phantom(PhantomArgs),
    /// Score methods on a batch of seeded phantoms.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct InputArgs {
    /// PGM (P2/P5) image, or a headless 16-bit raster.
    #[arg(long)]
    input: PathBuf,
    /// Raw raster width; read from the `.json` sidecar when omitted.
    #[arg(long)]
    raw_width: Option<usize>,
    #[arg(long)]
    raw_height: Option<usize>,
    #[arg(long, value_enum)]
    raw_endian: Option<Endianness>,
    /// 1-based frame of a multi-frame raster [default: 4, or 1 for a single frame].
    #[arg(long)]
    timepoint: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DetectorChoice {
    Classic,
    Adapted,
}

#[derive(Debug, Clone, Args, Serialize)]
struct TrackerArgs {
    #[arg(long, value_enum, default_value = "adapted")]
    detector: DetectorChoice,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 0.35)]
    turn_angle: f64,
    #[arg(long, default_value_t = 20_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 3.0)]
    closure_radius: f64,
    #[arg(long, default_value_t = 8)]
    min_boundary_points: usize,
    /// Heading offset from the boundary tangent at the seed, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    initial_heading: f64,
    #[arg(long, default_value_t = 5.0)]
    probe_length: f64,
    #[arg(long, default_value_t = 1.0)]
    min_contrast: f64,
    /// Sliding window for the adapted region mean.
    #[arg(long)]
    window: Option<usize>,
    /// Classic reference value K [default: half the probe contrast].
    #[arg(long)]
    cusum_k: Option<f64>,
    /// Classic decision interval H [default: 5 sigma].
    #[arg(long)]
    cusum_h: Option<f64>,
    /// Noise level for the classic H [default: pooled probe deviation].
    #[arg(long)]
    sigma: Option<f64>,
}

impl TrackerArgs {
    fn config(&self) -> TrackerConfig {
        let detector = match self.detector {
            DetectorChoice::Adapted => DetectorKind::Adapted { window: self.window },
            DetectorChoice::Classic => DetectorKind::Classic {
                k: self.cusum_k,
                h: self.cusum_h,
                sigma: self.sigma,
            },
        };
        TrackerConfig {
            step_size: self.step,
            turn_angle: self.turn_angle,
            initial_heading: self.initial_heading,
            max_steps: self.max_steps,
            closure_radius: self.closure_radius,
            min_boundary_points: self.min_boundary_points,
            detector,
            probe_length: self.probe_length,
            min_contrast: self.min_contrast,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct SegmentArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, allow_hyphen_values = true)]
    seed_x: f64,
    #[arg(long, allow_hyphen_values = true)]
    seed_y: f64,
    /// Direction from the seed into the region to segment, radians.
    #[arg(long, allow_hyphen_values = true)]
    inside_dir: f64,
    #[command(flatten)]
    tracker: TrackerArgs,
    /// Mask output (PGM P5, 255 inside).
    #[arg(long)]
    output: PathBuf,
    /// Boundary points as `x,y` CSV lines.
    #[arg(long)]
    boundary_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, allow_hyphen_values = true)]
    threshold: f64,
    /// Keep only the largest 4-connected component.
    #[arg(long)]
    keep_largest: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DiceArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PhantomArgs {
    /// Phantom description (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    truth_out: PathBuf,
    /// Overrides the spec's `rng_seed`.
    #[arg(long)]
    rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EvalArgs {
    /// Phantom template (JSON); its `rng_seed` is replaced per image.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    count: usize,
    /// Seed of the first phantom; image `i` uses `rng_seed + i`.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "adapted,threshold")]
    methods: Vec<Method>,
    /// Fixed baseline threshold [default: best of 16 evenly spaced candidates].
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    #[arg(long)]
    keep_largest: bool,
    /// Seed point override [default: on the first brain shape's boundary].
    #[arg(long, requires_all = ["seed_y", "inside_dir"], allow_hyphen_values = true)]
    seed_x: Option<f64>,
    #[arg(long, requires_all = ["seed_x", "inside_dir"], allow_hyphen_values = true)]
    seed_y: Option<f64>,
    #[arg(long, requires_all = ["seed_x", "seed_y"], allow_hyphen_values = true)]
    inside_dir: Option<f64>,
    #[command(flatten)]
    tracker: TrackerArgs,
}

/// What a run did, printed as JSON on standard output.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// The command line as given.
    pub command: Vec<String>,
    pub subcommand: String,
    /// Every effective parameter, defaults included.
    pub parameters: Value,
    pub outputs: Vec<PathBuf>,
    pub timing_ms: f64,
    pub result: Value,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let start = Instant::now();
    let outcome = match cli.command {
        Command::Segment(a) => cmd_segment(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Dice(a) => cmd_dice(&a),
        Command::Phantom(a) => cmd_phantom(&a),
        Command::Eval(a) => cmd_eval(&a),
    };
    match outcome {
        Ok(partial) => {
            let report = RunReport {
                command: args.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
                subcommand: partial.subcommand.to_string(),
                parameters: partial.parameters,
                outputs: partial.outputs,
                timing_ms: start.elapsed().as_secs_f64() * 1e3,
                result: partial.result,
            };
            match serde_json::to_string_pretty(&report) {
                Ok(text) => {
                    let _ = writeln!(out, "{text}");
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_INPUT
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::NoClosure { .. } | Error::LowContrast { .. } => EXIT_NO_CLOSURE,
                _ => EXIT_INPUT,
            }
        }
    }
}

struct Outcome {
    subcommand: &'static str,
    parameters: Value,
    outputs: Vec<PathBuf>,
    result: Value,
}

fn load_image(args: &InputArgs) -> Result<GrayImage> {
    let path = &args.input;
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "pnm"));
    if is_pgm {
        if args.timepoint.is_some_and(|t| t != 1) {
            return Err(Error::InvalidConfig("a PGM file holds a single time point".into()));
        }
        return read_pgm(path);
    }
    let sidecar = read_sidecar(path)?;
    let width = args.raw_width.or(sidecar.map(|g| g.width));
    let height = args.raw_height.or(sidecar.map(|g| g.height));
    let endianness = args.raw_endian.or(sidecar.map(|g| g.endianness)).unwrap_or_default();
    let (Some(width), Some(height)) = (width, height) else {
        return Err(Error::InvalidConfig(format!(
            "{}: raw input needs --raw-width/--raw-height or a JSON sidecar",
            path.display()
        )));
    };
    let series = read_raw16_series(path, width, height, endianness)?;
    let timepoint = args
        .timepoint
        .unwrap_or(if series.len() == 1 { 1 } else { DEFAULT_TIMEPOINT });
    series.select_timepoint(timepoint).cloned()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn params(args: &impl Serialize, extra: Value) -> Result<Value> {
    let mut v = serde_json::to_value(args)?;
    if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
        map.extend(more);
    }
    Ok(v)
}

fn cmd_segment(args: &SegmentArgs) -> Result<Outcome> {
    let image = load_image(&args.input)?;
    let cfg = args.tracker.config();
    let seed = Point::new(args.seed_x, args.seed_y);
    let start = Instant::now();
    let outcome = segment(&image, seed, args.inside_dir, &cfg);
    let tracking_ms = start.elapsed().as_secs_f64() * 1e3;
    let seg = match outcome {
        Ok(seg) => seg,
        Err(Error::NoClosure { steps, partial }) => {
            // the partial trace is the useful diagnostic when tracking stalls
            if let Some(path) = &args.boundary_out {
                write_text(path, &partial.to_csv())?;
            }
            return Err(Error::NoClosure { steps, partial });
        }
        Err(e) => return Err(e),
    };
    write_mask(&seg.mask, &args.output)?;
    let mut outputs = vec![args.output.clone()];
    if let Some(path) = &args.boundary_out {
        write_text(path, &seg.boundary.to_csv())?;
        outputs.push(path.clone());
    }
    Ok(Outcome {
        subcommand: "segment",
        parameters: params(
            args,
            json!({ "tracker_config": cfg, "image": { "width": image.width(), "height": image.height() } }),
        )?,
        outputs,
        result: json!({
            "closed": seg.boundary.closed,
            "boundary_points": seg.boundary.len(),
            "mask_area": seg.mask.area(),
            "tracking_ms": tracking_ms,
        }),
    })
}

fn cmd_baseline(args: &BaselineArgs) -> Result<Outcome> {
    let image = load_image(&args.input)?;
    let mask = threshold_segment(&image, args.threshold, args.keep_largest);
    write_mask(&mask, &args.output)?;
    Ok(Outcome {
        subcommand: "baseline",
        parameters: params(args, json!({}))?,
        outputs: vec![args.output.clone()],
        result: json!({ "mask_area": mask.area() }),
    })
}

fn cmd_dice(args: &DiceArgs) -> Result<Outcome> {
    let a = read_mask(&args.a)?;
    let b = read_mask(&args.b)?;
    let value = dice(&a, &b)?;
    Ok(Outcome {
        subcommand: "dice",
        parameters: params(args, json!({}))?,
        outputs: vec![],
        result: json!({ "dice": value }),
    })
}

fn read_spec(path: &Path) -> Result<PhantomSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PhantomSpec::from_json(&text)
}

fn cmd_phantom(args: &PhantomArgs) -> Result<Outcome> {
    let mut spec = read_spec(&args.spec)?;
    if let Some(seed) = args.rng_seed {
        spec = spec.with_seed(seed);
    }
    let (image, truth) = gen_phantom(&spec)?;
    write_pgm(&image, &args.output)?;
    write_mask(&truth, &args.truth_out)?;
    Ok(Outcome {
        subcommand: "phantom",
        parameters: params(args, json!({ "phantom": spec, "rng_algorithm": RNG_ALGORITHM }))?,
        outputs: vec![args.output.clone(), args.truth_out.clone()],
        result: json!({ "truth_area": truth.area() }),
    })
}

fn cmd_eval(args: &EvalArgs) -> Result<Outcome> {
    let template = read_spec(&args.spec)?;
    let seed = match (args.seed_x, args.seed_y, args.inside_dir) {
        (Some(x), Some(y), Some(dir)) => Some((Point::new(x, y), dir)),
        _ => None,
    };
    let cfg = EvalConfig {
        count: args.count,
        base_seed: args.rng_seed,
        methods: args.methods.clone(),
        tracker: args.tracker.config(),
        threshold: args.threshold,
        keep_largest: args.keep_largest,
        seed,
    };
    let report = evaluate(&template, &cfg)?;
    Ok(Outcome {
        subcommand: "eval",
        parameters: params(args, json!({ "tracker_config": cfg.tracker, "phantom": template }))?,
        outputs: vec![],
        result: serde_json::to_value(&report)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("cusumseg").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&[]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["segment", "--input", "x.pgm"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["bogus"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn defaults_match_tracker_defaults() {
        let cli = Cli::try_parse_from(["cusumseg", "eval", "--spec", "s.json", "--count", "1"]).unwrap();
        let Command::Eval(args) = cli.command else { panic!() };
        assert_eq!(args.tracker.config(), TrackerConfig::default());
        assert_eq!(args.methods, vec![Method::Adapted, Method::Threshold]);
    }

    #[test]
    fn negative_values_accepted() {
        let cli = Cli::try_parse_from([
            "cusumseg", "baseline", "--input", "a.pgm", "--threshold", "-5", "--output", "b.pgm",
        ])
        .unwrap();
        let Command::Baseline(args) = cli.command else { panic!() };
        assert_eq!(args.threshold, -5.0);
    }

    #[test]
    fn raw_input_needs_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("scan.raw");
        fs::write(&raw, [0u8; 32]).unwrap();
        let input = InputArgs {
            input: raw.clone(),
            raw_width: None,
            raw_height: None,
            raw_endian: None,
            timepoint: None,
        };
        assert!(matches!(load_image(&input), Err(Error::InvalidConfig(_))));
        let sized = InputArgs {
            raw_width: Some(2),
            raw_height: Some(2),
            ..input.clone()
        };
        // four 2x2 frames: the default time point is the fourth
        let bytes: Vec<u8> = (0u16..16).flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&raw, bytes).unwrap();
        assert_eq!(load_image(&sized).unwrap().pixels(), &[12, 13, 14, 15]);
        let first = InputArgs {
            timepoint: Some(1),
            ..sized
        };
        assert_eq!(load_image(&first).unwrap().pixels(), &[0, 1, 2, 3]);
    }
}
