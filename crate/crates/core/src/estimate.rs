//! Attenuation coefficients from color-chart observations.
//!
//! Two estimators are provided. The closed form uses only the white and black
//! patches: at equal range the backscatter term is identical for both, so
//! their difference isolates the direct transmission, and the black patch
//! then yields the backscatter. The least-squares refinement fits every patch
//! with a bounded Levenberg–Marquardt iteration, one channel at a time.

use crate::chart::{ChartObservation, ChartReference};
use crate::error::{Error, Result};
use crate::model::{AttenuationCoeffs, Provenance, VeilingLight};

/// Backscatter is capped at this fraction of `B∞` before taking the log.
///
/// Observation noise can push the black patch above the asymptote.
pub const BACKSCATTER_CEILING: f64 = 1.0 - 1e-6;

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-10;

/// One chart frame: its observation, the veiling light and range it was taken at.
#[derive(Debug, Clone)]
pub struct ChartFrame<'a> {
    pub observation: &'a ChartObservation,
    pub b_inf: VeilingLight,
    pub z: f64,
}

/// A single (patch, channel) measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSample {
    /// Reference (unattenuated) value.
    pub reference: f64,
    pub observed: f64,
    pub b_inf: f64,
    pub z: f64,
}

impl PatchSample {
    #[inline]
    pub fn predict(&self, beta_d: f64, beta_b: f64) -> f64 {
        self.reference * (-beta_d * self.z).exp() + self.b_inf * (1.0 - (-beta_b * self.z).exp())
    }

    #[inline]
    pub fn residual(&self, beta_d: f64, beta_b: f64) -> f64 {
        self.predict(beta_d, beta_b) - self.observed
    }

    /// `[∂r/∂β_D, ∂r/∂β_B]`.
    #[inline]
    pub fn jacobian(&self, beta_d: f64, beta_b: f64) -> [f64; 2] {
        [
            -self.z * self.reference * (-beta_d * self.z).exp(),
            self.z * self.b_inf * (-beta_b * self.z).exp(),
        ]
    }
}

fn check_range(z: f64) -> Result<()> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidParameter(format!("range must be positive, got {z}")));
    }
    Ok(())
}

/// Closed-form `β_D`, `β_B` from the white and black patches.
pub fn estimate_closed_form(
    obs: &ChartObservation,
    reference: &ChartReference,
    b_inf: &VeilingLight,
    z: f64,
) -> Result<AttenuationCoeffs> {
    check_range(z)?;
    let (iw, ib) = (obs.get("white")?, obs.get("black")?);
    let (jw, jb) = (reference.get("white")?, reference.get("black")?);
    let binf = b_inf.rgb();
    let mut beta_d = [0.0; 3];
    let mut beta_b = [0.0; 3];
    for c in 0..3 {
        if iw[c] <= ib[c] {
            return Err(Error::DegenerateObservation {
                channel: c,
                reason: format!("white ({}) is not brighter than black ({})", iw[c], ib[c]),
            });
        }
        if jw[c] <= jb[c] {
            return Err(Error::InvalidParameter(format!(
                "reference white is not brighter than black in channel {c}"
            )));
        }
        let transmission = (iw[c] - ib[c]) / (jw[c] - jb[c]);
        beta_d[c] = (-transmission.ln() / z).max(0.0);

        let backscatter = ib[c] - jb[c] * (-beta_d[c] * z).exp();
        if binf[c] == 0.0 {
            if backscatter > 0.0 {
                return Err(Error::DegenerateObservation {
                    channel: c,
                    reason: format!("backscatter {backscatter} with zero veiling light"),
                });
            }
            continue;
        }
        let backscatter = backscatter.clamp(0.0, BACKSCATTER_CEILING * binf[c]);
        beta_b[c] = (-(1.0 - backscatter / binf[c]).ln() / z).max(0.0);
    }
    AttenuationCoeffs::new(beta_d, beta_b, Provenance::Estimated)
}

/// Per-channel samples for every observed patch that the reference knows.
pub fn channel_samples(frames: &[ChartFrame<'_>], reference: &ChartReference) -> Result<[Vec<PatchSample>; 3]> {
    let mut out: [Vec<PatchSample>; 3] = Default::default();
    for frame in frames {
        check_range(frame.z)?;
        let binf = frame.b_inf.rgb();
        for patch in &frame.observation.patches {
            let j = reference.get(&patch.name)?;
            for (c, samples) in out.iter_mut().enumerate() {
                samples.push(PatchSample {
                    reference: j[c],
                    observed: patch.rgb[c],
                    b_inf: binf[c],
                    z: frame.z,
                });
            }
        }
    }
    Ok(out)
}

/// Sum of squared residuals for one channel.
pub fn channel_objective(samples: &[PatchSample], beta_d: f64, beta_b: f64) -> f64 {
    samples.iter().map(|s| s.residual(beta_d, beta_b).powi(2)).sum()
}

/// Analytic gradient of [`channel_objective`].
pub fn channel_gradient(samples: &[PatchSample], beta_d: f64, beta_b: f64) -> [f64; 2] {
    samples.iter().fold([0.0; 2], |acc, s| {
        let r = s.residual(beta_d, beta_b);
        let j = s.jacobian(beta_d, beta_b);
        [acc[0] + 2.0 * r * j[0], acc[1] + 2.0 * r * j[1]]
    })
}

/// Least-squares objective summed over channels and patches.
pub fn residual(
    coeffs: &AttenuationCoeffs,
    obs: &ChartObservation,
    reference: &ChartReference,
    b_inf: &VeilingLight,
    z: f64,
) -> Result<f64> {
    let frame = ChartFrame {
        observation: obs,
        b_inf: *b_inf,
        z,
    };
    pooled_residual(coeffs, std::slice::from_ref(&frame), reference)
}

pub fn pooled_residual(
    coeffs: &AttenuationCoeffs,
    frames: &[ChartFrame<'_>],
    reference: &ChartReference,
) -> Result<f64> {
    let samples = channel_samples(frames, reference)?;
    Ok((0..3)
        .map(|c| channel_objective(&samples[c], coeffs.beta_d[c], coeffs.beta_b[c]))
        .sum())
}

/// Gradient of [`residual`] with respect to `(β_D, β_B)`, per channel.
pub fn residual_gradient(
    coeffs: &AttenuationCoeffs,
    obs: &ChartObservation,
    reference: &ChartReference,
    b_inf: &VeilingLight,
    z: f64,
) -> Result<[[f64; 2]; 3]> {
    let frame = ChartFrame {
        observation: obs,
        b_inf: *b_inf,
        z,
    };
    let samples = channel_samples(std::slice::from_ref(&frame), reference)?;
    Ok([0, 1, 2].map(|c| channel_gradient(&samples[c], coeffs.beta_d[c], coeffs.beta_b[c])))
}

/// Refines `init` by least squares over all patches of one frame.
pub fn refine_least_squares(
    obs: &ChartObservation,
    reference: &ChartReference,
    b_inf: &VeilingLight,
    z: f64,
    init: &AttenuationCoeffs,
) -> Result<AttenuationCoeffs> {
    let frame = ChartFrame {
        observation: obs,
        b_inf: *b_inf,
        z,
    };
    refine_pooled(std::slice::from_ref(&frame), reference, init)
}

/// Fits one coefficient set to several frames at once, each with its own range and veiling light.
pub fn refine_pooled(
    frames: &[ChartFrame<'_>],
    reference: &ChartReference,
    init: &AttenuationCoeffs,
) -> Result<AttenuationCoeffs> {
    let patch_count: usize = frames.iter().map(|f| f.observation.patches.len()).sum();
    if patch_count < 3 {
        return Err(Error::InvalidParameter(format!(
            "least-squares refinement needs at least 3 patches, got {patch_count}"
        )));
    }
    let samples = channel_samples(frames, reference)?;
    let mut beta_d = [0.0; 3];
    let mut beta_b = [0.0; 3];
    for c in 0..3 {
        let fit = fit_channel(&samples[c], [init.beta_d[c], init.beta_b[c]])?;
        beta_d[c] = fit.params[0];
        beta_b[c] = fit.params[1];
    }
    AttenuationCoeffs::new(beta_d, beta_b, Provenance::Optimized)
}

/// Outcome of a single-channel fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelFit {
    pub params: [f64; 2],
    pub objective: f64,
    pub iterations: usize,
}

/// Bounded Levenberg–Marquardt on `(β_D, β_B) ≥ 0`.
///
/// Only steps that lower the objective are accepted, so the result never
/// scores worse than `init`.
pub fn fit_channel(samples: &[PatchSample], init: [f64; 2]) -> Result<ChannelFit> {
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial coefficients {init:?} are not finite")));
    }
    let mut x = init.map(|v| v.max(0.0));
    let mut cost = channel_objective(samples, x[0], x[1]);
    if !cost.is_finite() {
        return Err(Error::NonFinite("least-squares residual".into()));
    }
    let mut lambda = 1e-3;
    let mut iterations = 0;

    'outer: while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut h = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for s in samples {
            let r = s.residual(x[0], x[1]);
            let j = s.jacobian(x[0], x[1]);
            for a in 0..2 {
                g[a] += j[a] * r;
                for b in 0..2 {
                    h[a][b] += j[a] * j[b];
                }
            }
        }
        let scale = [0, 1].map(|a| if h[a][a] > 0.0 { h[a][a] } else { 1.0 });

        loop {
            let a00 = h[0][0] + lambda * scale[0];
            let a11 = h[1][1] + lambda * scale[1];
            let a01 = h[0][1];
            let det = a00 * a11 - a01 * a01;
            if !(det.is_finite() && det > 0.0) {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break 'outer;
                }
                continue;
            }
            let delta = [(-g[0] * a11 + g[1] * a01) / det, (-g[1] * a00 + g[0] * a01) / det];
            let candidate = [(x[0] + delta[0]).max(0.0), (x[1] + delta[1]).max(0.0)];
            let step = ((candidate[0] - x[0]).powi(2) + (candidate[1] - x[1]).powi(2)).sqrt();
            if step < STEP_TOLERANCE {
                break 'outer;
            }
            let new_cost = channel_objective(samples, candidate[0], candidate[1]);
            if !new_cost.is_finite() {
                return Err(Error::NonFinite("least-squares residual".into()));
            }
            if new_cost < cost {
                x = candidate;
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break 'outer;
            }
        }
    }

    Ok(ChannelFit {
        params: x,
        objective: cost,
        iterations,
    })
}
