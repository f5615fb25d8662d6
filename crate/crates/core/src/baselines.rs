//! Reference correctors used for comparison.

use crate::error::{Error, Result};
use crate::image::{LinearImage, Rgb};
use crate::model::{cuifm_invert, RangeField, VeilingLight};

/// Gray-world gains `m̄ / m_c` for the given channel means.
pub fn gray_world_gains(means: Rgb) -> Result<Rgb> {
    if let Some(c) = means.iter().position(|&m| m <= 0.0) {
        return Err(Error::ZeroChannelMean(c));
    }
    let gray = means.iter().sum::<f64>() / 3.0;
    Ok(means.map(|m| gray / m))
}

/// Gray-world white balance: scales each channel so the three channel means agree.
pub fn gray_world(image: &LinearImage) -> Result<LinearImage> {
    let gains = gray_world_gains(image.channel_means())?;
    image.map_pixels(|_, px| [px[0] * gains[0], px[1] * gains[1], px[2] * gains[2]])
}

/// Single-coefficient correction (`β_D = β_B = beta`).
pub fn cuifm_correct(image: &LinearImage, beta: Rgb, b_inf: &VeilingLight, z: &RangeField) -> Result<LinearImage> {
    cuifm_invert(image, beta, b_inf, z)
}
