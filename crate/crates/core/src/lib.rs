//! Physics-based color correction for underwater imagery.
//!
//! Raw pixels follow a two-coefficient formation model with separate
//! attenuation for the direct signal and the backscatter. The crate derives
//! the veiling light from Jerlov water-type spectra, estimates the
//! coefficients from a color chart, inverts the model densely or around
//! sparse keypoints, and scores results with chart-based metrics.

pub mod baselines;
pub mod chart;
pub mod error;
pub mod estimate;
pub mod image;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod spectral;
pub mod srgb;

pub use chart::{reference_chart, ChartLayout, ChartObservation, ChartReference, PatchRegion};
pub use error::{Error, Result};
pub use image::{LinearImage, Rgb, Roi};
pub use model::{
    AmbientModel, AttenuationCoeffs, Exposure, Provenance, RangeField, SceneContext, VeilingLight,
    DEFAULT_EPSILON_DIRECT,
};
pub use spectral::{CameraResponse, SpectralCurve, WaterType, WaterTypeTables};
