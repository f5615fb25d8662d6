//! Scene configuration, frame correction and simulation jobs.
//!
//! Job files are JSON. Relative paths inside a job are resolved against the
//! directory that holds the job file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{cuifm_correct, gray_world};
use crate::chart::{reference_chart, sample_patches, ChartLayout, DEFAULT_TRIM};
use crate::error::{Error, Result};
use crate::estimate::{estimate_closed_form, refine_least_squares};
use crate::image::{LinearImage, Rgb, Roi};
use crate::model::{
    background_veiling_estimate, exposure_k, forward_degrade_with_reflectance, invert_with_floor,
    veiling_light, water_derived_coeffs, AmbientModel, AttenuationCoeffs, Exposure, Provenance, RangeField,
    SceneContext, VeilingLight, DEFAULT_BACKGROUND_PERCENTILE, DEFAULT_EPSILON_DIRECT,
};
use crate::pipeline::io::{read_image, write_image, BitDepth};
use crate::pipeline::sparse::{correct_sparse_with_floor, ingest_sparse_map, sparse_range_field, DEFAULT_PATCH_PX};
use crate::spectral::{load_camera_response, load_water_type, CameraResponse, WaterType, WaterTypeTables};

fn one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON_DIRECT
}

fn default_trim() -> f64 {
    DEFAULT_TRIM
}

fn default_patch_px() -> usize {
    DEFAULT_PATCH_PX
}

fn default_percentile() -> f64 {
    DEFAULT_BACKGROUND_PERCENTILE
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Scene parameters shared by every job kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub water_type: WaterType,
    /// Water depth `d` in meters.
    pub depth_m: f64,
    /// Camera-to-object range `z` in meters.
    pub range_m: f64,
    /// Fixed exposure scalar; automatic when absent.
    #[serde(default)]
    pub exposure_k: Option<f64>,
    #[serde(default = "one")]
    pub surface_light: f64,
    #[serde(default = "one")]
    pub reflectance: f64,
    #[serde(default)]
    pub ambient_model: AmbientModel,
    /// Directory holding `<water type>.csv`; bundled tables when absent.
    #[serde(default)]
    pub water_dir: Option<PathBuf>,
    /// Camera response CSV; bundled Gaussian response when absent.
    #[serde(default)]
    pub camera_response: Option<PathBuf>,
}

impl SceneConfig {
    pub fn new(water_type: WaterType, depth_m: f64, range_m: f64) -> Self {
        Self {
            water_type,
            depth_m,
            range_m,
            exposure_k: None,
            surface_light: 1.0,
            reflectance: 1.0,
            ambient_model: AmbientModel::default(),
            water_dir: None,
            camera_response: None,
        }
    }

    pub fn context(&self, base: &Path) -> Result<SceneContext> {
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(Error::InvalidParameter(format!("range_m must be positive, got {}", self.range_m)));
        }
        let water = match &self.water_dir {
            Some(dir) => load_water_type(self.water_type.name(), &resolve(base, dir))?,
            None => WaterTypeTables::bundled(self.water_type)?,
        };
        let camera = match &self.camera_response {
            Some(path) => load_camera_response(&resolve(base, path))?,
            None => CameraResponse::bundled_default()?,
        };
        let exposure = self.exposure_k.map_or(Exposure::Auto, Exposure::Fixed);
        Ok(SceneContext::new(water, camera, self.depth_m)?
            .with_exposure(exposure)?
            .with_surface_light(self.surface_light)?
            .with_reflectance(self.reflectance)?
            .with_ambient_model(self.ambient_model))
    }
}

/// Where the attenuation coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSource {
    /// Coefficients JSON file.
    Manual { path: PathBuf },
    /// Coefficients given in the job itself.
    Inline { beta_d: Rgb, beta_b: Rgb },
    /// Closed form from the chart's white and black patches.
    Estimate {},
    /// Closed form refined by least squares over every chart patch.
    Optimize {},
}

/// Where `B∞` comes from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum VeilingSource {
    #[default]
    Spectral,
    Background {
        #[serde(default = "default_percentile")]
        percentile: f64,
        #[serde(default)]
        region: Option<Roi>,
    },
    Manual { b_inf: Rgb },
}

impl VeilingSource {
    fn label(&self) -> &'static str {
        match self {
            VeilingSource::Spectral => "spectral",
            VeilingSource::Background { .. } => "background",
            VeilingSource::Manual { .. } => "manual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Proposed,
    Cuifm,
    GrayWorld,
}

/// Patch-sparse correction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseSettings {
    pub map: PathBuf,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "default_patch_px")]
    pub patch_px: usize,
}

/// One frame to correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameJob {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Defaults to the output path with `.json` appended.
    #[serde(default)]
    pub sidecar: Option<PathBuf>,
    pub scene: SceneConfig,
    pub coefficients: CoefficientSource,
    #[serde(default)]
    pub veiling: VeilingSource,
    #[serde(default)]
    pub chart_layout: Option<PathBuf>,
    #[serde(default = "default_trim")]
    pub chart_trim: f64,
    #[serde(default)]
    pub sparse: Option<SparseSettings>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub assume_linear: bool,
    #[serde(default = "default_epsilon")]
    pub epsilon_direct: f64,
    #[serde(default)]
    pub bit_depth: BitDepth,
}

impl FrameJob {
    pub fn new(input: PathBuf, output: PathBuf, scene: SceneConfig, coefficients: CoefficientSource) -> Self {
        Self {
            input,
            output,
            sidecar: None,
            scene,
            coefficients,
            veiling: VeilingSource::default(),
            chart_layout: None,
            chart_trim: DEFAULT_TRIM,
            sparse: None,
            method: Method::default(),
            assume_linear: false,
            epsilon_direct: DEFAULT_EPSILON_DIRECT,
            bit_depth: BitDepth::default(),
        }
    }

    /// Reads a job file; returns the job and the directory its paths are relative to.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let job = serde_json::from_str(&text)?;
        Ok((job, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }
}

fn sidecar_path(output: &Path, sidecar: Option<&PathBuf>) -> PathBuf {
    match sidecar {
        Some(p) => p.clone(),
        None => {
            let mut s = output.as_os_str().to_owned();
            s.push(".json");
            PathBuf::from(s)
        }
    }
}

/// Loads coefficients from a JSON file.
pub fn load_coefficients(path: &Path) -> Result<AttenuationCoeffs> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_coefficients(path: &Path, coeffs: &AttenuationCoeffs) -> Result<()> {
    write_json(path, coeffs)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parameters resolved while correcting a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSidecar {
    pub input: PathBuf,
    pub output: PathBuf,
    pub method: Method,
    pub water_type: WaterType,
    pub depth_m: f64,
    pub range_m: f64,
    pub b_inf: Rgb,
    pub veiling_source: String,
    /// Exposure scalar used for the spectral `B∞`.
    pub exposure_k: Option<f64>,
    pub beta_d: Rgb,
    pub beta_b: Rgb,
    pub provenance: Provenance,
    pub epsilon_direct: f64,
    pub assume_linear: bool,
    pub sparse: Option<SparseSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSummary {
    pub map: PathBuf,
    pub points: usize,
    pub scale: f64,
    pub patch_px: usize,
}

fn resolve_veiling(
    source: &VeilingSource,
    ctx: &SceneContext,
    image: &LinearImage,
) -> Result<(VeilingLight, Option<f64>)> {
    match source {
        VeilingSource::Spectral => Ok((veiling_light(ctx)?, Some(exposure_k(ctx)?))),
        VeilingSource::Background { percentile, region } => {
            Ok((background_veiling_estimate(image, *percentile, *region)?, None))
        }
        VeilingSource::Manual { b_inf } => Ok((VeilingLight::new(*b_inf)?, None)),
    }
}

fn resolve_coefficients(
    job: &FrameJob,
    base: &Path,
    image: &LinearImage,
    b_inf: &VeilingLight,
) -> Result<AttenuationCoeffs> {
    let chart = |kind: &str| -> Result<_> {
        let layout_path = job.chart_layout.as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!("coefficient source `{kind}` requires chart_layout"))
        })?;
        let layout = ChartLayout::load(&resolve(base, layout_path))?;
        sample_patches(image, &layout, job.chart_trim)
    };
    let reference = reference_chart();
    match &job.coefficients {
        CoefficientSource::Manual { path } => load_coefficients(&resolve(base, path)),
        CoefficientSource::Inline { beta_d, beta_b } => AttenuationCoeffs::manual(*beta_d, *beta_b),
        CoefficientSource::Estimate {} => {
            let obs = chart("estimate")?;
            estimate_closed_form(&obs, &reference, b_inf, job.scene.range_m)
        }
        CoefficientSource::Optimize {} => {
            let obs = chart("optimize")?;
            let init = estimate_closed_form(&obs, &reference, b_inf, job.scene.range_m)?;
            refine_least_squares(&obs, &reference, b_inf, job.scene.range_m, &init)
        }
    }
}

/// Corrects an already decoded frame. Paths in `job` are resolved against `base`.
pub fn correct_image(image: &LinearImage, job: &FrameJob, base: &Path) -> Result<(LinearImage, CorrectionSidecar)> {
    let ctx = job.scene.context(base)?;
    let (b_inf, k) = resolve_veiling(&job.veiling, &ctx, image)?;
    let coeffs = resolve_coefficients(job, base, image, &b_inf)?;
    let z = job.scene.range_m;

    let mut sparse_summary = None;
    let corrected = match (job.method, &job.sparse) {
        (Method::Proposed, Some(settings)) => {
            let map_path = resolve(base, &settings.map);
            let map = ingest_sparse_map(&map_path)?.with_scale(settings.scale)?;
            sparse_summary = Some(SparseSummary {
                map: settings.map.clone(),
                points: map.points().len(),
                scale: settings.scale,
                patch_px: settings.patch_px,
            });
            correct_sparse_with_floor(image, &map, &coeffs, &b_inf, settings.patch_px, job.epsilon_direct)?
        }
        (Method::Proposed, None) => invert_with_floor(image, &coeffs, &b_inf, &RangeField::Scalar(z), job.epsilon_direct)?,
        (Method::Cuifm, _) => cuifm_correct(image, coeffs.beta_d, &b_inf, &RangeField::Scalar(z))?,
        (Method::GrayWorld, _) => gray_world(image)?,
    };
    let sidecar = CorrectionSidecar {
        input: job.input.clone(),
        output: job.output.clone(),
        method: job.method,
        water_type: job.scene.water_type,
        depth_m: job.scene.depth_m,
        range_m: z,
        b_inf: b_inf.rgb(),
        veiling_source: job.veiling.label().to_string(),
        exposure_k: k,
        beta_d: coeffs.beta_d,
        beta_b: coeffs.beta_b,
        provenance: coeffs.provenance,
        epsilon_direct: job.epsilon_direct,
        assume_linear: job.assume_linear,
        sparse: sparse_summary,
    };
    Ok((corrected, sidecar))
}

/// Reads the input frame, corrects it and writes the output image and sidecar.
pub fn correct_frame(job: &FrameJob, base: &Path) -> Result<(LinearImage, CorrectionSidecar)> {
    let image = read_image(&resolve(base, &job.input), job.assume_linear)?;
    let (corrected, sidecar) = correct_image(&image, job, base)?;
    let output = resolve(base, &job.output);
    write_image(&output, &corrected, job.bit_depth, job.assume_linear)?;
    write_json(&sidecar_path(&output, job.sidecar.as_ref().map(|p| resolve(base, p)).as_ref()), &sidecar)?;
    Ok((corrected, sidecar))
}

/// Coefficients used to synthesize a degraded frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulationCoefficients {
    /// Derived from the water type's spectra at the scene range.
    Water,
    Manual { path: PathBuf },
    Inline { beta_d: Rgb, beta_b: Rgb },
}

impl Default for SimulationCoefficients {
    fn default() -> Self {
        SimulationCoefficients::Water
    }
}

/// One clean frame to degrade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationJob {
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub sidecar: Option<PathBuf>,
    pub scene: SceneConfig,
    #[serde(default)]
    pub coefficients: SimulationCoefficients,
    /// Spectral `B∞` when absent.
    #[serde(default)]
    pub b_inf: Option<Rgb>,
    /// Gives patch pixels their keypoint's range; other pixels use `scene.range_m`.
    #[serde(default)]
    pub sparse: Option<SparseSettings>,
    #[serde(default)]
    pub assume_linear: bool,
    #[serde(default)]
    pub bit_depth: BitDepth,
}

/// Ground truth written next to a simulated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub water_type: WaterType,
    pub depth_m: f64,
    pub range_m: f64,
    pub ambient_model: AmbientModel,
    pub exposure_k: f64,
    pub surface_light: f64,
    pub reflectance: f64,
    pub b_inf: Rgb,
    pub beta_d: Rgb,
    pub beta_b: Rgb,
    pub coefficient_source: String,
    pub sparse: Option<SparseSummary>,
}

/// Degrades `original` with the formation model.
///
/// Coefficients default to the water-derived ones at `range_m` and `B∞` to
/// the spectral integral. `z` overrides the scalar range per pixel.
pub fn simulate(
    original: &LinearImage,
    ctx: &SceneContext,
    range_m: f64,
    coeffs: Option<AttenuationCoeffs>,
    b_inf: Option<VeilingLight>,
    z: Option<&RangeField>,
) -> Result<(LinearImage, SimulationTruth)> {
    let source = if coeffs.is_some() { "manual" } else { "water" };
    let coeffs = match coeffs {
        Some(c) => c,
        None => water_derived_coeffs(ctx, range_m)?,
    };
    let b_inf = match b_inf {
        Some(b) => b,
        None => veiling_light(ctx)?,
    };
    let scalar = RangeField::Scalar(range_m);
    let degraded =
        forward_degrade_with_reflectance(original, &coeffs, &b_inf, z.unwrap_or(&scalar), ctx.reflectance())?;
    let truth = SimulationTruth {
        water_type: ctx.water.water_type,
        depth_m: ctx.depth_m(),
        range_m,
        ambient_model: ctx.ambient_model,
        exposure_k: exposure_k(ctx)?,
        surface_light: ctx.surface_light(),
        reflectance: ctx.reflectance(),
        b_inf: b_inf.rgb(),
        beta_d: coeffs.beta_d,
        beta_b: coeffs.beta_b,
        coefficient_source: source.to_string(),
        sparse: None,
    };
    Ok((degraded, truth))
}

/// Reads the clean frame, degrades it and writes the output image and truth sidecar.
pub fn run_simulation(job: &SimulationJob, base: &Path) -> Result<(LinearImage, SimulationTruth)> {
    let original = read_image(&resolve(base, &job.input), job.assume_linear)?;
    let ctx = job.scene.context(base)?;
    let coeffs = match &job.coefficients {
        SimulationCoefficients::Water => None,
        SimulationCoefficients::Manual { path } => Some(load_coefficients(&resolve(base, path))?),
        SimulationCoefficients::Inline { beta_d, beta_b } => Some(AttenuationCoeffs::manual(*beta_d, *beta_b)?),
    };
    let b_inf = job.b_inf.map(VeilingLight::new).transpose()?;
    let (field, summary) = match &job.sparse {
        Some(settings) => {
            let map = ingest_sparse_map(&resolve(base, &settings.map))?.with_scale(settings.scale)?;
            let field = sparse_range_field(
                original.width(),
                original.height(),
                &map,
                settings.patch_px,
                job.scene.range_m,
            )?;
            let summary = SparseSummary {
                map: settings.map.clone(),
                points: map.points().len(),
                scale: settings.scale,
                patch_px: settings.patch_px,
            };
            (Some(field), Some(summary))
        }
        None => (None, None),
    };
    let (degraded, mut truth) = simulate(&original, &ctx, job.scene.range_m, coeffs, b_inf, field.as_ref())?;
    truth.sparse = summary;
    let output = resolve(base, &job.output);
    write_image(&output, &degraded, job.bit_depth, job.assume_linear)?;
    write_json(&sidecar_path(&output, job.sidecar.as_ref().map(|p| resolve(base, p)).as_ref()), &truth)?;
    Ok((degraded, truth))
}
