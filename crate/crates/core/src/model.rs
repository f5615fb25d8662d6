//! Two-coefficient underwater image formation model.
//!
//! A raw pixel is modelled per channel as
//!
//! ```text
//! I = J·ρ·exp(-β_D·z) + B∞·(1 - exp(-β_B·z))
//! ```
//!
//! where `J` is the unattenuated color, `z` the camera-to-object range, `B∞`
//! the wideband veiling light and `β_D`, `β_B` the direct-signal and
//! backscatter attenuation coefficients. `B∞` is obtained by integrating the
//! water's scattering against the ambient light reaching depth `d`, weighted
//! by the camera response.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, Rgb, Roi};
use crate::spectral::{trapezoid, CameraResponse, SpectralCurve, WaterTypeTables};

/// Floor on the direct transmission used when dividing it out.
pub const DEFAULT_EPSILON_DIRECT: f64 = 1e-3;

/// Target for the brightest veiling-light channel when the exposure is automatic.
pub const AUTO_EXPOSURE_TARGET: f64 = 0.7;

/// Fraction of background pixels (by blue value) averaged by the veiling-light fallback.
pub const DEFAULT_BACKGROUND_PERCENTILE: f64 = 0.1;

/// How ambient light falls off with depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientModel {
    /// `E0 · K_d / d`, taken literally from the published model.
    AsWritten,
    /// `E0 · exp(-K_d · d)`.
    #[default]
    Exponential,
}

/// Camera exposure scalar `k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exposure {
    /// Pick `k` so the largest veiling-light channel equals [`AUTO_EXPOSURE_TARGET`].
    #[default]
    Auto,
    Fixed(f64),
}

/// Everything about the scene that the spectral part of the model needs.
#[derive(Debug, Clone)]
pub struct SceneContext {
    pub water: WaterTypeTables,
    pub camera: CameraResponse,
    depth_m: f64,
    exposure: Exposure,
    surface_light: f64,
    reflectance: f64,
    pub ambient_model: AmbientModel,
}

impl SceneContext {
    /// Scene at `depth_m` with E0 = 1, ρ = 1, automatic exposure and exponential ambient light.
    pub fn new(water: WaterTypeTables, camera: CameraResponse, depth_m: f64) -> Result<Self> {
        check_positive("depth_m", depth_m)?;
        Ok(Self {
            water,
            camera,
            depth_m,
            exposure: Exposure::Auto,
            surface_light: 1.0,
            reflectance: 1.0,
            ambient_model: AmbientModel::Exponential,
        })
    }

    pub fn with_depth(mut self, depth_m: f64) -> Result<Self> {
        check_positive("depth_m", depth_m)?;
        self.depth_m = depth_m;
        Ok(self)
    }

    pub fn with_exposure(mut self, exposure: Exposure) -> Result<Self> {
        if let Exposure::Fixed(k) = exposure {
            check_positive("exposure_k", k)?;
        }
        self.exposure = exposure;
        Ok(self)
    }

    pub fn with_surface_light(mut self, e0: f64) -> Result<Self> {
        check_positive("surface_light", e0)?;
        self.surface_light = e0;
        Ok(self)
    }

    pub fn with_reflectance(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "reflectance must lie in (0, 1], got {rho}"
            )));
        }
        self.reflectance = rho;
        Ok(self)
    }

    pub fn with_ambient_model(mut self, model: AmbientModel) -> Self {
        self.ambient_model = model;
        self
    }

    pub fn depth_m(&self) -> f64 {
        self.depth_m
    }

    pub fn exposure(&self) -> Exposure {
        self.exposure
    }

    pub fn surface_light(&self) -> f64 {
        self.surface_light
    }

    pub fn reflectance(&self) -> f64 {
        self.reflectance
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

/// Wideband veiling light `B∞`, one value per channel in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Rgb", into = "Rgb")]
pub struct VeilingLight(Rgb);

impl VeilingLight {
    pub fn new(rgb: Rgb) -> Result<Self> {
        if rgb.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(format!(
                "veiling light components must lie in [0, 1], got {rgb:?}"
            )));
        }
        Ok(Self(rgb))
    }

    pub fn rgb(&self) -> Rgb {
        self.0
    }
}

impl TryFrom<Rgb> for VeilingLight {
    type Error = Error;

    fn try_from(rgb: Rgb) -> Result<Self> {
        Self::new(rgb)
    }
}

impl From<VeilingLight> for Rgb {
    fn from(v: VeilingLight) -> Rgb {
        v.0
    }
}

/// Where a set of coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Manual,
    Estimated,
    Optimized,
}

/// Per-channel direct (`β_D`) and backscatter (`β_B`) attenuation, in 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffsRepr", into = "CoeffsRepr")]
pub struct AttenuationCoeffs {
    pub beta_d: Rgb,
    pub beta_b: Rgb,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct CoeffsRepr {
    beta_d: Rgb,
    beta_b: Rgb,
    provenance: Provenance,
}

impl TryFrom<CoeffsRepr> for AttenuationCoeffs {
    type Error = Error;

    fn try_from(r: CoeffsRepr) -> Result<Self> {
        Self::new(r.beta_d, r.beta_b, r.provenance)
    }
}

impl From<AttenuationCoeffs> for CoeffsRepr {
    fn from(c: AttenuationCoeffs) -> Self {
        CoeffsRepr {
            beta_d: c.beta_d,
            beta_b: c.beta_b,
            provenance: c.provenance,
        }
    }
}

impl AttenuationCoeffs {
    pub fn new(beta_d: Rgb, beta_b: Rgb, provenance: Provenance) -> Result<Self> {
        if beta_d.iter().chain(&beta_b).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "attenuation coefficients must be finite and nonnegative, got β_D={beta_d:?} β_B={beta_b:?}"
            )));
        }
        Ok(Self {
            beta_d,
            beta_b,
            provenance,
        })
    }

    pub fn manual(beta_d: Rgb, beta_b: Rgb) -> Result<Self> {
        Self::new(beta_d, beta_b, Provenance::Manual)
    }

    /// Single-coefficient model: `β_D = β_B = beta`.
    pub fn single(beta: Rgb) -> Result<Self> {
        Self::new(beta, beta, Provenance::Manual)
    }

    pub fn zero() -> Self {
        Self {
            beta_d: [0.0; 3],
            beta_b: [0.0; 3],
            provenance: Provenance::Manual,
        }
    }
}

/// Camera-to-object range: one scalar or one value per pixel.
#[derive(Debug, Clone, PartialEq)]
pub enum RangeField {
    Scalar(f64),
    PerPixel {
        width: usize,
        height: usize,
        values: Vec<f64>,
    },
}

impl RangeField {
    pub fn per_pixel(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} range values", width * height),
                actual: format!("{}", values.len()),
            });
        }
        Ok(RangeField::PerPixel {
            width,
            height,
            values,
        })
    }

    fn validate_for(&self, image: &LinearImage) -> Result<()> {
        let check = |z: f64| {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::InvalidParameter(format!("range must be positive, got {z}")));
            }
            Ok(())
        };
        match self {
            RangeField::Scalar(z) => check(*z),
            RangeField::PerPixel {
                width,
                height,
                values,
            } => {
                if *width != image.width() || *height != image.height() {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{}x{}", image.width(), image.height()),
                        actual: format!("{width}x{height}"),
                    });
                }
                values.iter().try_for_each(|&z| check(z))
            }
        }
    }

    #[inline]
    pub fn at(&self, index: usize) -> f64 {
        match self {
            RangeField::Scalar(z) => *z,
            RangeField::PerPixel { values, .. } => values[index],
        }
    }
}

impl From<f64> for RangeField {
    fn from(z: f64) -> Self {
        RangeField::Scalar(z)
    }
}

/// Ambient spectral irradiance `E(d, λ)` at the scene depth.
pub fn ambient_light(ctx: &SceneContext) -> Result<SpectralCurve> {
    let d = ctx.depth_m;
    check_positive("depth_m", d)?;
    let e0 = ctx.surface_light;
    ctx.water.diffuse_kd.map(|_, kd| {
        let e = match ctx.ambient_model {
            AmbientModel::AsWritten => e0 * kd / d,
            AmbientModel::Exponential => e0 * (-kd * d).exp(),
        };
        e.max(0.0)
    })
}

/// `∫ S_c(λ)·b(λ)·E(d,λ)/β(λ) dλ` per channel, before the `1/k` exposure scaling.
fn veiling_integrals(ctx: &SceneContext) -> Result<Rgb> {
    let ambient = ambient_light(ctx)?;
    let beta = ctx.water.beam_attenuation();
    if let Some(i) = beta.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::NonFinite(format!(
            "beam attenuation is zero at {} nm",
            beta.wavelengths()[i]
        )));
    }
    let grid = beta.wavelengths();
    let b = ctx.water.scattering.values();
    let e = ambient.values();
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let s = ctx.camera.channel(c).values();
        let integrand: Vec<f64> = (0..grid.len())
            .map(|i| s[i] * b[i] * e[i] / beta.values()[i])
            .collect();
        *slot = trapezoid(grid, &integrand);
    }
    Ok(out)
}

/// Resolves the exposure scalar `k` for this scene.
pub fn exposure_k(ctx: &SceneContext) -> Result<f64> {
    match ctx.exposure {
        Exposure::Fixed(k) => Ok(k),
        Exposure::Auto => {
            let peak = veiling_integrals(ctx)?.into_iter().fold(0.0, f64::max);
            Ok(if peak > 0.0 { peak / AUTO_EXPOSURE_TARGET } else { 1.0 })
        }
    }
}

/// `B∞` per channel before clamping to `[0, 1]`.
pub fn veiling_light_unclamped(ctx: &SceneContext) -> Result<Rgb> {
    let k = exposure_k(ctx)?;
    Ok(veiling_integrals(ctx)?.map(|v| v / k))
}

/// Wideband veiling light from the water type, depth and camera response.
pub fn veiling_light(ctx: &SceneContext) -> Result<VeilingLight> {
    let raw = veiling_light_unclamped(ctx)?;
    VeilingLight::new(raw.map(|v| v.clamp(0.0, 1.0)))
}

/// Fallback `B∞`: mean color of the brightest-blue fraction of a background region.
///
/// `region` defaults to the whole image.
pub fn background_veiling_estimate(
    image: &LinearImage,
    percentile: f64,
    region: Option<Roi>,
) -> Result<VeilingLight> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "percentile must lie in (0, 1], got {percentile}"
        )));
    }
    let region = region.unwrap_or_else(|| image.full_roi());
    if !region.fits_in(image.width(), image.height()) {
        return Err(Error::InvalidParameter(format!(
            "background region {region:?} exceeds {}x{} image",
            image.width(),
            image.height()
        )));
    }
    let mut pixels: Vec<Rgb> = image.roi_pixels(&region).collect();
    if pixels.is_empty() {
        return Err(Error::EmptyRegion("background".into()));
    }
    pixels.sort_by(|a, b| b[2].total_cmp(&a[2]));
    let count = ((percentile * pixels.len() as f64).ceil() as usize).clamp(1, pixels.len());
    let mut sum = [0.0; 3];
    for px in &pixels[..count] {
        for c in 0..3 {
            sum[c] += px[c];
        }
    }
    VeilingLight::new(sum.map(|s| (s / count as f64).clamp(0.0, 1.0)))
}

/// Wideband coefficients implied by the water type for an object at range `z`.
///
/// `exp(-β_D·z)` is the camera-weighted fraction of surface light that reaches
/// the object at depth `d` and survives the path back to the camera;
/// `1 - exp(-β_B·z)` is the fraction of `B∞` accumulated over `z`. Used to
/// synthesize realistic degradations.
pub fn water_derived_coeffs(ctx: &SceneContext, z: f64) -> Result<AttenuationCoeffs> {
    check_positive("range", z)?;
    let ambient = ambient_light(ctx)?;
    let beta = ctx.water.beam_attenuation();
    let grid = beta.wavelengths();
    let b = ctx.water.scattering.values();
    let e = ambient.values();
    let mut beta_d = [0.0; 3];
    let mut beta_b = [0.0; 3];
    for c in 0..3 {
        let s = ctx.camera.channel(c).values();
        let n = grid.len();
        let reference: Vec<f64> = (0..n).map(|i| s[i] * ctx.surface_light).collect();
        let direct: Vec<f64> = (0..n)
            .map(|i| s[i] * e[i] * (-beta.values()[i] * z).exp())
            .collect();
        let veil: Vec<f64> = (0..n).map(|i| s[i] * b[i] * e[i] / beta.values()[i]).collect();
        let partial: Vec<f64> = (0..n)
            .map(|i| veil[i] * (1.0 - (-beta.values()[i] * z).exp()))
            .collect();

        let transmission = trapezoid(grid, &direct) / trapezoid(grid, &reference);
        beta_d[c] = if transmission > 0.0 {
            (-transmission.ln() / z).max(0.0)
        } else {
            return Err(Error::NonFinite(format!("direct transmission is zero in channel {c}")));
        };
        let total = trapezoid(grid, &veil);
        beta_b[c] = if total > 0.0 {
            let fraction = (trapezoid(grid, &partial) / total).min(1.0 - 1e-15);
            (-(1.0 - fraction).ln() / z).max(0.0)
        } else {
            0.0
        };
    }
    AttenuationCoeffs::new(beta_d, beta_b, Provenance::Manual)
}

/// Raw value for one channel, unclamped.
#[inline]
pub fn degrade_value(j: f64, rho: f64, beta_d: f64, beta_b: f64, b_inf: f64, z: f64) -> f64 {
    j * rho * (-beta_d * z).exp() + b_inf * (1.0 - (-beta_b * z).exp())
}

/// Recovered value for one channel, before output clamping.
///
/// The backscatter-free numerator is clamped at zero and the direct
/// transmission is floored at `epsilon_direct`.
#[inline]
pub fn restore_value(i: f64, beta_d: f64, beta_b: f64, b_inf: f64, z: f64, epsilon_direct: f64) -> f64 {
    let numerator = (i - b_inf * (1.0 - (-beta_b * z).exp())).max(0.0);
    numerator / (-beta_d * z).exp().max(epsilon_direct)
}

/// Applies the formation model to a clean image (ρ = 1).
pub fn forward_degrade(
    j: &LinearImage,
    coeffs: &AttenuationCoeffs,
    b_inf: &VeilingLight,
    z: &RangeField,
) -> Result<LinearImage> {
    forward_degrade_with_reflectance(j, coeffs, b_inf, z, 1.0)
}

pub fn forward_degrade_with_reflectance(
    j: &LinearImage,
    coeffs: &AttenuationCoeffs,
    b_inf: &VeilingLight,
    z: &RangeField,
    rho: f64,
) -> Result<LinearImage> {
    z.validate_for(j)?;
    let binf = b_inf.rgb();
    j.map_pixels(|i, px| {
        let zi = z.at(i);
        [0, 1, 2].map(|c| degrade_value(px[c], rho, coeffs.beta_d[c], coeffs.beta_b[c], binf[c], zi))
    })
}

/// Solves the formation model for the unattenuated image.
pub fn invert(
    i: &LinearImage,
    coeffs: &AttenuationCoeffs,
    b_inf: &VeilingLight,
    z: &RangeField,
) -> Result<LinearImage> {
    invert_with_floor(i, coeffs, b_inf, z, DEFAULT_EPSILON_DIRECT)
}

pub fn invert_with_floor(
    i: &LinearImage,
    coeffs: &AttenuationCoeffs,
    b_inf: &VeilingLight,
    z: &RangeField,
    epsilon_direct: f64,
) -> Result<LinearImage> {
    if !(epsilon_direct > 0.0 && epsilon_direct <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_direct must lie in (0, 1], got {epsilon_direct}"
        )));
    }
    z.validate_for(i)?;
    let binf = b_inf.rgb();
    i.map_pixels(|idx, px| {
        let zi = z.at(idx);
        [0, 1, 2].map(|c| {
            restore_value(px[c], coeffs.beta_d[c], coeffs.beta_b[c], binf[c], zi, epsilon_direct)
        })
    })
}

/// Inversion under the single-coefficient model, `β_D = β_B = beta`.
pub fn cuifm_invert(
    i: &LinearImage,
    beta: Rgb,
    b_inf: &VeilingLight,
    z: &RangeField,
) -> Result<LinearImage> {
    invert(i, &AttenuationCoeffs::single(beta)?, b_inf, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{canonical_grid, WaterType};
    use proptest::prelude::*;

    fn ia_scene(depth: f64) -> SceneContext {
        SceneContext::new(
            WaterTypeTables::bundled(WaterType::IA).unwrap(),
            CameraResponse::bundled_default().unwrap(),
            depth,
        )
        .unwrap()
    }

    fn one_px(v: Rgb) -> LinearImage {
        LinearImage::new(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn scalar_forward_example() {
        let i = degrade_value(0.8, 1.0, 0.5, 0.3, 0.6, 1.0);
        let expected = 0.8 * (-0.5f64).exp() + 0.6 * (1.0 - (-0.3f64).exp());
        assert_eq!(i, expected);
        assert!((i - 0.640733).abs() < 1e-6);
    }

    #[test]
    fn scalar_inverse_example() {
        let i = degrade_value(0.8, 1.0, 0.5, 0.3, 0.6, 1.0);
        let j = restore_value(i, 0.5, 0.3, 0.6, 1.0, DEFAULT_EPSILON_DIRECT);
        assert!((j - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_range_is_identity() {
        for j in [0.0, 0.25, 0.8, 1.0] {
            assert_eq!(degrade_value(j, 1.0, 0.5, 0.3, 0.6, 0.0), j);
        }
    }

    #[test]
    fn large_range_tends_to_veiling_light() {
        let i = degrade_value(0.8, 1.0, 0.5, 0.3, 0.6, 100.0);
        assert!((i - 0.6).abs() < 1e-6);
    }

    #[test]
    fn image_forward_and_inverse() {
        let coeffs = AttenuationCoeffs::manual([0.5; 3], [0.3; 3]).unwrap();
        let binf = VeilingLight::new([0.6; 3]).unwrap();
        let z = RangeField::Scalar(1.0);
        let degraded = forward_degrade(&one_px([0.8; 3]), &coeffs, &binf, &z).unwrap();
        assert!((degraded.get(0, 0)[0] - 0.640733).abs() < 1e-6);
        let restored = invert(&degraded, &coeffs, &binf, &z).unwrap();
        assert!((restored.get(0, 0)[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn backscatter_larger_than_observation_clamps_to_zero() {
        let coeffs = AttenuationCoeffs::manual([0.5; 3], [0.3; 3]).unwrap();
        let binf = VeilingLight::new([0.9; 3]).unwrap();
        let out = invert(&one_px([0.01; 3]), &coeffs, &binf, &RangeField::Scalar(2.0)).unwrap();
        assert_eq!(out.get(0, 0), [0.0; 3]);
    }

    #[test]
    fn range_validation() {
        let coeffs = AttenuationCoeffs::zero();
        let binf = VeilingLight::new([0.0; 3]).unwrap();
        let img = LinearImage::filled(2, 2, [0.5; 3]).unwrap();
        for bad in [0.0, -1.0, f64::NAN] {
            assert!(forward_degrade(&img, &coeffs, &binf, &RangeField::Scalar(bad)).is_err());
        }
        let wrong = RangeField::per_pixel(1, 4, vec![1.0; 4]).unwrap();
        assert!(matches!(
            invert(&img, &coeffs, &binf, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
        let with_zero = RangeField::per_pixel(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(forward_degrade(&img, &coeffs, &binf, &with_zero).is_err());
    }

    #[test]
    fn cuifm_matches_invert_with_equal_coefficients() {
        let beta = [0.4, 0.2, 0.1];
        let binf = VeilingLight::new([0.1, 0.4, 0.5]).unwrap();
        let z = RangeField::Scalar(1.3);
        let img = LinearImage::from_fn(4, 3, |x, y| [0.1 * x as f64, 0.2 * y as f64, 0.5]).unwrap();
        let a = cuifm_invert(&img, beta, &binf, &z).unwrap();
        let b = invert(&img, &AttenuationCoeffs::manual(beta, beta).unwrap(), &binf, &z).unwrap();
        assert_eq!(a, b);
        let identity = cuifm_invert(&img, [0.0; 3], &binf, &z).unwrap();
        assert_eq!(identity, img);
    }

    #[test]
    fn cuifm_round_trips_its_forward_model() {
        let beta = [0.7, 0.3, 0.15];
        let binf = VeilingLight::new([0.05, 0.35, 0.55]).unwrap();
        let z = RangeField::Scalar(2.0);
        let clean = LinearImage::from_fn(5, 5, |x, y| {
            [0.1 + 0.15 * x as f64, 0.1 + 0.15 * y as f64, 0.4]
        })
        .unwrap();
        let coeffs = AttenuationCoeffs::single(beta).unwrap();
        let raw = forward_degrade(&clean, &coeffs, &binf, &z).unwrap();
        let back = cuifm_invert(&raw, beta, &binf, &z).unwrap();
        for (a, b) in back.pixels().iter().zip(clean.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn exponential_ambient_at_surface_is_e0() {
        let ctx = ia_scene(1e-12);
        let e = ambient_light(&ctx).unwrap();
        assert!(e.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn as_written_ambient_direct_evaluation() {
        let grid = canonical_grid();
        let kd = SpectralCurve::new(grid.clone(), vec![0.1; grid.len()]).unwrap();
        let mut water = WaterTypeTables::bundled(WaterType::I).unwrap();
        water.diffuse_kd = kd;
        let ctx = SceneContext::new(water, CameraResponse::bundled_default().unwrap(), 1.0)
            .unwrap()
            .with_ambient_model(AmbientModel::AsWritten);
        let e = ambient_light(&ctx).unwrap();
        assert!(e.values().iter().all(|&v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn exponential_ambient_orders_by_kd() {
        let ctx = ia_scene(7.0);
        let e = ambient_light(&ctx).unwrap();
        let kd = ctx.water.diffuse_kd.values();
        for i in 0..kd.len() {
            for j in 0..kd.len() {
                if kd[i] > kd[j] {
                    assert!(e.values()[i] < e.values()[j]);
                }
            }
        }
    }

    #[test]
    fn no_scattering_means_no_veiling_light() {
        let mut ctx = ia_scene(5.0);
        ctx.water.scattering = ctx.water.scattering.map(|_, _| 0.0).unwrap();
        let v = veiling_light(&ctx.with_exposure(Exposure::Fixed(10.0)).unwrap()).unwrap();
        assert_eq!(v.rgb(), [0.0; 3]);
    }

    #[test]
    fn zero_beam_attenuation_is_an_error() {
        let mut ctx = ia_scene(5.0);
        ctx.water.absorption = ctx.water.absorption.map(|_, _| 0.0).unwrap();
        ctx.water.scattering = ctx.water.scattering.map(|l, v| if l == 550.0 { 0.0 } else { v }).unwrap();
        assert!(veiling_light(&ctx).is_err());
    }

    #[test]
    fn exposure_scaling() {
        let base = ia_scene(5.0).with_exposure(Exposure::Fixed(40.0)).unwrap();
        let doubled = base.clone().with_exposure(Exposure::Fixed(80.0)).unwrap();
        let a = veiling_light_unclamped(&base).unwrap();
        let b = veiling_light_unclamped(&doubled).unwrap();
        for c in 0..3 {
            assert!((a[c] / 2.0 - b[c]).abs() <= 1e-15 * a[c].max(1.0));
        }
        let brighter = base.clone().with_surface_light(3.0).unwrap();
        let c3 = veiling_light_unclamped(&brighter).unwrap();
        for c in 0..3 {
            assert!((3.0 * a[c] - c3[c]).abs() <= 1e-12 * a[c]);
        }
    }

    #[test]
    fn auto_exposure_hits_target() {
        let v = veiling_light(&ia_scene(6.0)).unwrap().rgb();
        let peak = v.into_iter().fold(0.0, f64::max);
        assert!((peak - AUTO_EXPOSURE_TARGET).abs() < 1e-12);
        // blue dominates in oceanic water
        assert!(v[2] > v[1] && v[1] > v[0]);
    }

    #[test]
    fn red_to_blue_veiling_ratio_falls_with_depth() {
        let ratio = |d: f64| {
            let v = veiling_light_unclamped(&ia_scene(d)).unwrap();
            v[0] / v[2]
        };
        assert!(ratio(15.0) <= ratio(3.0));
    }

    #[test]
    fn background_estimate_examples() {
        let uniform = LinearImage::filled(4, 4, [0.1, 0.3, 0.5]).unwrap();
        assert_eq!(
            background_veiling_estimate(&uniform, 0.1, None).unwrap().rgb(),
            [0.1, 0.3, 0.5]
        );

        let halves = LinearImage::from_fn(4, 2, |_, y| if y == 0 { [0.0, 0.0, 0.2] } else { [0.0, 0.0, 0.4] })
            .unwrap();
        assert_eq!(
            background_veiling_estimate(&halves, 0.5, None).unwrap().rgb(),
            [0.0, 0.0, 0.4]
        );

        let varied = LinearImage::from_fn(3, 3, |x, y| [0.1 * x as f64, 0.05 * y as f64, 0.3]).unwrap();
        let all = background_veiling_estimate(&varied, 1.0, None).unwrap().rgb();
        let means = varied.channel_means();
        for c in 0..3 {
            assert!((all[c] - means[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn background_estimate_errors() {
        let img = LinearImage::filled(4, 4, [0.1, 0.3, 0.5]).unwrap();
        assert!(background_veiling_estimate(&img, 0.0, None).is_err());
        assert!(background_veiling_estimate(&img, 1.5, None).is_err());
        assert!(matches!(
            background_veiling_estimate(&img, 0.5, Some(Roi::new(1, 1, 0, 2))),
            Err(Error::EmptyRegion(_))
        ));
        assert!(background_veiling_estimate(&img, 0.5, Some(Roi::new(3, 3, 2, 2))).is_err());
    }

    #[test]
    fn water_derived_coefficients_reproduce_spectral_forward_model() {
        let ctx = ia_scene(8.0).with_exposure(Exposure::Fixed(150.0)).unwrap();
        let z = 0.5;
        let coeffs = water_derived_coeffs(&ctx, z).unwrap();
        let binf = veiling_light_unclamped(&ctx).unwrap();
        // brute-force spectral evaluation for a white object
        let grid = canonical_grid();
        let beta = ctx.water.beam_attenuation();
        let e = ambient_light(&ctx).unwrap();
        for c in 0..3 {
            let s = ctx.camera.channel(c).values();
            let direct: Vec<f64> = (0..31).map(|i| s[i] * e.values()[i] * (-beta.values()[i] * z).exp()).collect();
            let norm: Vec<f64> = s.to_vec();
            let back: Vec<f64> = (0..31)
                .map(|i| {
                    s[i] * ctx.water.scattering.values()[i] * e.values()[i] / beta.values()[i]
                        * (1.0 - (-beta.values()[i] * z).exp())
                })
                .collect();
            let spectral = trapezoid(&grid, &direct) / trapezoid(&grid, &norm) + trapezoid(&grid, &back) / 150.0;
            let wideband = degrade_value(1.0, 1.0, coeffs.beta_d[c], coeffs.beta_b[c], binf[c], z);
            assert!((spectral - wideband).abs() < 1e-12, "channel {c}");
        }
        assert!(coeffs.beta_d[0] > coeffs.beta_d[2]);
        assert!(coeffs.beta_d != coeffs.beta_b);
    }

    #[test]
    fn coefficient_json_schema() {
        let c = AttenuationCoeffs::new([0.1, 0.2, 0.3], [0.4, 0.5, 0.6], Provenance::Optimized).unwrap();
        let json = serde_json::to_value(c).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"beta_d":[0.1,0.2,0.3],"beta_b":[0.4,0.5,0.6],"provenance":"optimized"})
        );
        let back: AttenuationCoeffs = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
        let negative = r#"{"beta_d":[-0.1,0.2,0.3],"beta_b":[0.4,0.5,0.6],"provenance":"manual"}"#;
        assert!(serde_json::from_str::<AttenuationCoeffs>(negative).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            j in 0.05f64..0.95,
            bd in 0.05f64..2.0,
            bb in 0.05f64..2.0,
            z in 0.2f64..3.0,
            binf in 0.0f64..0.8,
        ) {
            let i = degrade_value(j, 1.0, bd, bb, binf, z);
            prop_assume!((0.0..=1.0).contains(&i));
            prop_assume!((-bd * z).exp() >= DEFAULT_EPSILON_DIRECT);
            let back = restore_value(i, bd, bb, binf, z, DEFAULT_EPSILON_DIRECT);
            prop_assert!((back - j).abs() <= 1e-9);
        }

        #[test]
        fn forward_is_monotone_in_j(
            j1 in 0.0f64..1.0,
            j2 in 0.0f64..1.0,
            bd in 0.0f64..3.0,
            bb in 0.0f64..3.0,
            z in 0.01f64..5.0,
            binf in 0.0f64..1.0,
        ) {
            let (lo, hi) = if j1 <= j2 { (j1, j2) } else { (j2, j1) };
            let coeffs = AttenuationCoeffs::manual([bd; 3], [bb; 3]).unwrap();
            let v = VeilingLight::new([binf; 3]).unwrap();
            let z = RangeField::Scalar(z);
            let a = forward_degrade(&one_px([lo; 3]), &coeffs, &v, &z).unwrap();
            let b = forward_degrade(&one_px([hi; 3]), &coeffs, &v, &z).unwrap();
            prop_assert!(a.get(0, 0)[0] <= b.get(0, 0)[0]);
        }

        #[test]
        fn trapezoid_of_constant_is_300c(c in 0.0f64..100.0) {
            let g = canonical_grid();
            let v = trapezoid(&g, &vec![c; g.len()]);
            prop_assert!((v - 300.0 * c).abs() <= 1e-12 * (300.0 * c).max(1.0));
        }
    }
}
