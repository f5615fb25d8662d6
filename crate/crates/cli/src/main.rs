use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use seacolor_core::chart::{reference_chart, sample_patches, ChartLayout, DEFAULT_TRIM};
use seacolor_core::estimate::{estimate_closed_form, refine_pooled, ChartFrame};
use seacolor_core::metrics::Normalization;
use seacolor_core::model::veiling_light;
use seacolor_core::pipeline::evaluate::{
    accuracy_csv_string, consistency_csv_string, write_accuracy_csv, write_consistency_csv,
};
use seacolor_core::pipeline::{
    correct_frame, evaluate, ingest_sparse_map, load_coefficients, read_image, run_simulation, save_coefficients,
    sparse::correct_sparse_with_floor, write_image, BitDepth, EvaluationOptions, FrameJob, MethodSeries, SceneConfig,
    SimulationJob, DEFAULT_PATCH_PX,
};
use seacolor_core::{AttenuationCoeffs, Error, Result, Rgb, VeilingLight, DEFAULT_EPSILON_DIRECT};

#[derive(Parser)]
#[command(name = "seacolor", version, about = "Physics-based underwater color correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade a clean frame with the formation model and write a truth sidecar.
    Simulate {
        /// Simulation job JSON.
        #[arg(long)]
        job: PathBuf,
    },
    /// Estimate attenuation coefficients from chart frames.
    Estimate(EstimateArgs),
    /// Correct one frame as described by a job file.
    Correct {
        /// Frame job JSON.
        #[arg(long)]
        job: PathBuf,
    },
    /// Correct fixed-size patches around keypoints with known range.
    CorrectSparse(SparseArgs),
    /// Score corrected depth series against the reference chart.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimateMethod {
    ClosedForm,
    LeastSquares,
}

#[derive(Args)]
struct EstimateArgs {
    /// Scene configuration JSON (water type, depth, range).
    #[arg(long)]
    scene: PathBuf,
    /// Chart layout JSON.
    #[arg(long)]
    layout: PathBuf,
    /// Chart frame; repeat for a pooled least-squares fit.
    #[arg(long = "frame", required = true)]
    frames: Vec<PathBuf>,
    /// Water depth per frame in meters; defaults to the scene depth.
    #[arg(long = "depth")]
    depths: Vec<f64>,
    #[arg(long, value_enum, default_value = "least-squares")]
    method: EstimateMethod,
    /// Veiling light as `r,g,b`; spectral when absent.
    #[arg(long, value_parser = parse_rgb)]
    b_inf: Option<Rgb>,
    #[arg(long, default_value_t = DEFAULT_TRIM)]
    trim: f64,
    #[arg(long)]
    assume_linear: bool,
    /// Output coefficients JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SparseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Keypoint CSV with header `x,y,z`.
    #[arg(long)]
    map: PathBuf,
    /// Coefficients JSON.
    #[arg(long)]
    coeffs: PathBuf,
    /// Veiling light as `r,g,b`.
    #[arg(long, value_parser = parse_rgb, required_unless_present = "scene", conflicts_with = "scene")]
    b_inf: Option<Rgb>,
    /// Scene configuration JSON for a spectral veiling light.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Multiplies every keypoint range.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = DEFAULT_PATCH_PX)]
    patch_px: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON_DIRECT)]
    epsilon_direct: f64,
    #[arg(long)]
    assume_linear: bool,
    #[arg(long, default_value = "8", value_parser = parse_bit_depth)]
    bit_depth: BitDepth,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Chart layout JSON.
    #[arg(long)]
    layout: PathBuf,
    /// `LABEL=frame1,frame2,...` with frames ordered by depth; repeat per method.
    #[arg(long = "series", required = true, value_parser = parse_series)]
    series: Vec<(String, Vec<PathBuf>)>,
    /// Comma-separated patch names; all patches when absent.
    #[arg(long, value_delimiter = ',')]
    patches: Option<Vec<String>>,
    /// Normalize by `R+G+B` instead of the L2 norm.
    #[arg(long)]
    chromaticity: bool,
    #[arg(long, default_value_t = DEFAULT_TRIM)]
    trim: f64,
    #[arg(long)]
    assume_linear: bool,
    /// `patch,method,distance` CSV; stdout when absent.
    #[arg(long)]
    accuracy_out: Option<PathBuf>,
    /// `patch,method,variance,mean_error` CSV; stdout when absent.
    #[arg(long)]
    consistency_out: Option<PathBuf>,
}

fn parse_rgb(s: &str) -> std::result::Result<Rgb, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn parse_bit_depth(s: &str) -> std::result::Result<BitDepth, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_series(s: &str) -> std::result::Result<(String, Vec<PathBuf>), String> {
    let (label, frames) = s.split_once('=').ok_or("expected LABEL=frame1,frame2,...")?;
    let frames: Vec<PathBuf> = frames.split(',').filter(|f| !f.is_empty()).map(PathBuf::from).collect();
    if frames.is_empty() {
        return Err(format!("series `{label}` lists no frames"));
    }
    Ok((label.to_string(), frames))
}

fn load_scene(path: &Path) -> Result<(SceneConfig, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let scene = serde_json::from_str(&text)?;
    Ok((scene, path.parent().map(Path::to_path_buf).unwrap_or_default()))
}

fn to_json(value: &AttenuationCoeffs) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn simulate(job_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(job_path).map_err(|e| Error::Io {
        path: job_path.to_path_buf(),
        source: e,
    })?;
    let job: SimulationJob = serde_json::from_str(&text)?;
    let base = job_path.parent().unwrap_or(Path::new(""));
    let (_, truth) = run_simulation(&job, base)?;
    eprintln!(
        "simulated {} (beta_d {:?}, beta_b {:?}, b_inf {:?})",
        job.output.display(),
        truth.beta_d,
        truth.beta_b,
        truth.b_inf
    );
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let (scene, base) = load_scene(&args.scene)?;
    if !args.depths.is_empty() && args.depths.len() != args.frames.len() {
        return Err(Error::InvalidParameter(format!(
            "{} depths given for {} frames",
            args.depths.len(),
            args.frames.len()
        )));
    }
    let layout = ChartLayout::load(&args.layout)?;
    let reference = reference_chart();
    let mut observations = Vec::new();
    let mut veils = Vec::new();
    for (i, path) in args.frames.iter().enumerate() {
        let image = read_image(path, args.assume_linear)?;
        observations.push(sample_patches(&image, &layout, args.trim)?);
        let b_inf = match args.b_inf {
            Some(rgb) => VeilingLight::new(rgb)?,
            None => {
                let depth = args.depths.get(i).copied().unwrap_or(scene.depth_m);
                veiling_light(&scene.context(&base)?.with_depth(depth)?)?
            }
        };
        veils.push(b_inf);
    }
    let z = scene.range_m;
    let init = estimate_closed_form(&observations[0], &reference, &veils[0], z)?;
    let coeffs = match args.method {
        EstimateMethod::ClosedForm => {
            if observations.len() > 1 {
                return Err(Error::InvalidParameter("closed-form estimation takes exactly one frame".into()));
            }
            init
        }
        EstimateMethod::LeastSquares => {
            let frames: Vec<ChartFrame<'_>> = observations
                .iter()
                .zip(&veils)
                .map(|(observation, b_inf)| ChartFrame {
                    observation,
                    b_inf: *b_inf,
                    z,
                })
                .collect();
            refine_pooled(&frames, &reference, &init)?
        }
    };
    match &args.out {
        Some(path) => save_coefficients(path, &coeffs),
        None => {
            print!("{}", to_json(&coeffs)?);
            Ok(())
        }
    }
}

fn correct(job_path: &Path) -> Result<()> {
    let (job, base) = FrameJob::load(job_path)?;
    let (_, sidecar) = correct_frame(&job, &base)?;
    eprintln!(
        "corrected {} (beta_d {:?}, beta_b {:?}, b_inf {:?})",
        job.output.display(),
        sidecar.beta_d,
        sidecar.beta_b,
        sidecar.b_inf
    );
    Ok(())
}

fn correct_sparse(args: &SparseArgs) -> Result<()> {
    let image = read_image(&args.input, args.assume_linear)?;
    let map = ingest_sparse_map(&args.map)?.with_scale(args.scale)?;
    let coeffs = load_coefficients(&args.coeffs)?;
    let b_inf = match (&args.b_inf, &args.scene) {
        (Some(rgb), _) => VeilingLight::new(*rgb)?,
        (None, Some(scene)) => {
            let (scene, base) = load_scene(scene)?;
            veiling_light(&scene.context(&base)?)?
        }
        (None, None) => return Err(Error::InvalidParameter("either --b-inf or --scene is required".into())),
    };
    let out = correct_sparse_with_floor(&image, &map, &coeffs, &b_inf, args.patch_px, args.epsilon_direct)?;
    write_image(&args.output, &out, args.bit_depth, args.assume_linear)
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let layout = ChartLayout::load(&args.layout)?;
    let series = args
        .series
        .iter()
        .map(|(label, paths)| {
            let frames = paths
                .iter()
                .map(|p| read_image(p, args.assume_linear))
                .collect::<Result<Vec<_>>>()?;
            Ok(MethodSeries {
                label: label.clone(),
                frames,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let options = EvaluationOptions {
        trim: args.trim,
        normalization: if args.chromaticity {
            Normalization::Chromaticity
        } else {
            Normalization::UnitL2
        },
        patches: args.patches.clone(),
    };
    let report = evaluate(&series, &layout, &reference_chart(), &options)?;
    match &args.accuracy_out {
        Some(path) => write_accuracy_csv(path, &report.accuracy)?,
        None => print!("{}", accuracy_csv_string(&report.accuracy)?),
    }
    let rows = report.consistency?;
    match &args.consistency_out {
        Some(path) => write_consistency_csv(path, &rows)?,
        None => print!("{}", consistency_csv_string(&rows)?),
    }
    Ok(())
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_numerical() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { job } => simulate(job),
        Command::Estimate(args) => estimate(args),
        Command::Correct { job } => correct(job),
        Command::CorrectSparse(args) => correct_sparse(args),
        Command::Evaluate(args) => run_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
