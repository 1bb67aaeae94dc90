use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roifuse::catalog::{catalog_to_json, load_catalog};
use roifuse::error::{Error, Result};
use roifuse::report::{write_run, write_sweep, SummaryRow};
use roifuse::run::{run_frames, sweep, DetectorSpec, Mode, RunConfig, SweepAxis};
use roifuse::scene::{generate_scene, SceneGenConfig};
use roifuse::sequence::{convert_records, load_frames, save_frames_with_camera, CameraSpec};
use roifuse_core::{DetectorProfile, EnergyMode, EnergyParams, FlopsCatalog};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(
    name = "roifuse",
    version,
    about = "Radar-guided region-of-interest detection: scenes, evaluation, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence file.
    Generate(GenerateArgs),
    /// Run one configuration over a sequence and write reports.
    Evaluate(EvaluateArgs),
    /// Run a configuration for several values of one parameter.
    Sweep(SweepArgs),
    /// Build a sequence file from per-frame records (JSON lines).
    Convert(ConvertArgs),
    /// Print the detector cost catalog as JSON.
    Catalog {
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator configuration (JSON); defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<usize>,
    /// Output sequence file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Sequence file to evaluate.
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value = "yolov3-spp:416")]
    primary: DetectorSpec,
    #[arg(long, default_value = "ssdlite:300")]
    secondary: DetectorSpec,
    #[arg(long, default_value_t = 240)]
    roi_size: u32,
    #[arg(long, default_value_t = 0.45)]
    nms_iou: f64,
    #[arg(long, default_value_t = 0.4)]
    match_iou: f64,
    #[arg(long, default_value = "fusion")]
    mode: Mode,
    /// Seed for the synthetic detectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Detector cost catalog (JSON); the built-in anchors are used otherwise.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Energy constants (JSON); defaults are used for missing fields.
    #[arg(long)]
    energy: Option<PathBuf>,
    /// `fps-scaled` multiplies the compute term by the frame rate; `per-frame` does not.
    #[arg(long, default_value = "fps-scaled", value_parser = parse_energy_mode)]
    energy_mode: EnergyMode,
    /// Synthetic detector behavior (JSON `DetectorProfile`) for the primary.
    #[arg(long)]
    primary_profile: Option<PathBuf>,
    /// Synthetic detector behavior for the secondary.
    #[arg(long)]
    secondary_profile: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_parser = clap::value_parser!(SweepAxis))]
    sweep_axis: SweepAxis,
    /// Comma-separated values, e.g. `80,180,240`.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u32>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Camera calibration (JSON with `intrinsics` and `radar_to_camera`).
    #[arg(long)]
    camera: PathBuf,
    /// Per-frame records, one JSON object per line.
    #[arg(long)]
    records: PathBuf,
    /// Label mapping (JSON object, source label to class name).
    #[arg(long)]
    class_map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_energy_mode(s: &str) -> std::result::Result<EnergyMode, String> {
    match s {
        "fps-scaled" => Ok(EnergyMode::FpsScaled),
        "per-frame" => Ok(EnergyMode::PerFrame),
        _ => Err(format!(
            "unknown energy mode `{s}` (expected fps-scaled or per-frame)"
        )),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Json {
                path: path.to_path_buf(),
                source: inner,
            }
        } else {
            Error::Config(format!("{}: field `{field}`: {inner}", path.display()))
        }
    })
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let catalog = match &args.catalog {
        Some(p) => load_catalog(p)?,
        None => FlopsCatalog::builtin(),
    };
    let energy: EnergyParams = match &args.energy {
        Some(p) => read_json(p)?,
        None => EnergyParams::default(),
    };
    let profile = |p: &Option<PathBuf>| -> Result<DetectorProfile> {
        p.as_deref()
            .map_or_else(|| Ok(DetectorProfile::default()), read_json)
    };
    let base = RunConfig::default();
    Ok(RunConfig {
        primary: args.primary.clone(),
        secondary: args.secondary.clone(),
        fusion: roifuse_core::FusionConfig {
            roi_size: args.roi_size,
            nms_iou: args.nms_iou,
            ..base.fusion
        },
        match_iou: args.match_iou,
        mode: args.mode,
        seed: args.seed,
        primary_profile: profile(&args.primary_profile)?,
        secondary_profile: profile(&args.secondary_profile)?,
        energy,
        energy_mode: args.energy_mode,
        catalog,
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => {
            let mut cfg: SceneGenConfig = match &args.config {
                Some(p) => read_json(p)?,
                None => SceneGenConfig::default(),
            };
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(n) = args.frames {
                cfg.n_frames = n;
            }
            let frames = generate_scene(&cfg)?;
            save_frames_with_camera(&frames, Some(&cfg.camera), &args.out)?;
            let gt: usize = frames.iter().map(|f| f.ground_truth.len()).sum();
            let radar: usize = frames.iter().map(|f| f.radar.len()).sum();
            println!(
                "wrote {} frames ({gt} objects, {radar} radar returns) to {}",
                frames.len(),
                args.out.display()
            );
        }
        Command::Evaluate(EvaluateArgs { run }) => {
            let cfg = run_config(&run)?;
            let frames = load_frames(&run.scene)?;
            let out = run_frames(&frames, &cfg)?;
            write_run(&run.out, &out)?;
            println!("{}", SummaryRow::header());
            println!("{}", SummaryRow::from_outcome(&out).line());
        }
        Command::Sweep(args) => {
            let cfg = run_config(&args.run)?;
            let frames = load_frames(&args.run.scene)?;
            let rows = sweep(&frames, &cfg, args.sweep_axis, &args.values)?;
            write_sweep(&args.run.out, args.sweep_axis, &rows)?;
            println!("value  recall  GFLOPs/frame  J/frame  rois/frame");
            for r in &rows {
                println!(
                    "{:>5} {:>7.4} {:>13.2} {:>8.4} {:>11.2}",
                    r.value, r.recall, r.mean_gflops, r.mean_energy_j, r.mean_n_rois
                );
            }
        }
        Command::Convert(args) => {
            let camera: CameraSpec = read_json(&args.camera)?;
            let class_map: BTreeMap<String, String> = match &args.class_map {
                Some(p) => read_json(p)?,
                None => BTreeMap::new(),
            };
            let conv = convert_records(&camera, &args.records, &class_map)?;
            save_frames_with_camera(&conv.frames, Some(&camera), &args.out)?;
            println!(
                "wrote {} frames to {}",
                conv.frames.len(),
                args.out.display()
            );
            for (label, n) in &conv.dropped_labels {
                eprintln!("dropped {n} boxes with unmapped label `{label}`");
            }
        }
        Command::Catalog { catalog } => {
            let catalog = match catalog {
                Some(p) => load_catalog(&p)?,
                None => FlopsCatalog::builtin(),
            };
            print!("{}", catalog_to_json(&catalog));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
