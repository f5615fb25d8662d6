//! 24-patch reference chart and patch sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, Rgb, Roi};
use crate::srgb;

/// Default fraction trimmed from each end when averaging a patch.
pub const DEFAULT_TRIM: f64 = 0.1;

/// Published 8-bit sRGB coordinates of the classic 24-patch chart, row by row.
const CLASSIC_SRGB: [(&str, [u8; 3]); 24] = [
    ("dark_skin", [115, 82, 68]),
    ("light_skin", [194, 150, 130]),
    ("blue_sky", [98, 122, 157]),
    ("foliage", [87, 108, 67]),
    ("blue_flower", [133, 128, 177]),
    ("bluish_green", [103, 189, 170]),
    ("orange", [214, 126, 44]),
    ("purplish_blue", [80, 91, 166]),
    ("moderate_red", [193, 90, 99]),
    ("purple", [94, 60, 108]),
    ("yellow_green", [157, 188, 64]),
    ("orange_yellow", [224, 163, 46]),
    ("blue", [56, 61, 150]),
    ("green", [70, 148, 73]),
    ("red", [175, 54, 60]),
    ("yellow", [231, 199, 31]),
    ("magenta", [187, 86, 149]),
    ("cyan", [8, 133, 161]),
    ("white", [243, 243, 242]),
    ("neutral_8", [200, 200, 200]),
    ("neutral_6.5", [160, 160, 160]),
    ("neutral_5", [122, 122, 121]),
    ("neutral_3.5", [85, 85, 85]),
    ("black", [52, 52, 52]),
];

/// Ground-truth linear colors of the chart patches.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartReference {
    patches: Vec<(String, Rgb)>,
}

/// The classic 24-patch chart, sRGB-decoded to linear RGB.
pub fn reference_chart() -> ChartReference {
    ChartReference {
        patches: CLASSIC_SRGB
            .iter()
            .map(|(name, code)| (name.to_string(), code.map(srgb::decode_u8)))
            .collect(),
    }
}

impl ChartReference {
    pub fn patches(&self) -> &[(String, Rgb)] {
        &self.patches
    }

    pub fn get(&self, name: &str) -> Result<Rgb> {
        self.patches
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, rgb)| *rgb)
            .ok_or_else(|| Error::MissingPatch(name.to_string()))
    }

    /// Replaces the color of an existing patch.
    pub fn with_patch(mut self, name: &str, rgb: Rgb) -> Result<Self> {
        if rgb.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(format!("patch color {rgb:?} outside [0, 1]")));
        }
        let slot = self
            .patches
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::MissingPatch(name.to_string()))?;
        slot.1 = rgb;
        Ok(self)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.patches.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedPatch {
    pub name: String,
    pub rgb: Rgb,
    pub pixel_count: usize,
}

/// Patch colors measured in one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChartObservation {
    pub patches: Vec<ObservedPatch>,
}

impl ChartObservation {
    pub fn get(&self, name: &str) -> Result<Rgb> {
        self.patches
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.rgb)
            .ok_or_else(|| Error::MissingPatch(name.to_string()))
    }

    /// Builds an observation directly from colors, one pixel per patch.
    pub fn from_colors<'a>(colors: impl IntoIterator<Item = (&'a str, Rgb)>) -> Self {
        Self {
            patches: colors
                .into_iter()
                .map(|(name, rgb)| ObservedPatch {
                    name: name.to_string(),
                    rgb,
                    pixel_count: 1,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRegion {
    pub name: String,
    #[serde(flatten)]
    pub roi: Roi,
}

/// Where each chart patch sits in the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct ChartLayout {
    patches: Vec<PatchRegion>,
}

#[derive(Serialize, Deserialize)]
struct LayoutRepr {
    patches: Vec<PatchRegion>,
}

impl TryFrom<LayoutRepr> for ChartLayout {
    type Error = Error;

    fn try_from(r: LayoutRepr) -> Result<Self> {
        Self::new(r.patches)
    }
}

impl From<ChartLayout> for LayoutRepr {
    fn from(l: ChartLayout) -> Self {
        LayoutRepr { patches: l.patches }
    }
}

impl ChartLayout {
    pub fn new(patches: Vec<PatchRegion>) -> Result<Self> {
        for (i, a) in patches.iter().enumerate() {
            if a.roi.area() == 0 {
                return Err(Error::EmptyRegion(a.name.clone()));
            }
            for b in &patches[i + 1..] {
                if a.roi.overlaps(&b.roi) {
                    return Err(Error::InvalidParameter(format!(
                        "patches `{}` and `{}` overlap",
                        a.name, b.name
                    )));
                }
                if a.name == b.name {
                    return Err(Error::InvalidParameter(format!("patch `{}` listed twice", a.name)));
                }
            }
        }
        Ok(Self { patches })
    }

    /// Classic 6×4 grid in reference order, starting at `(x0, y0)`.
    pub fn classic_grid(x0: usize, y0: usize, patch_px: usize, gap_px: usize) -> Result<Self> {
        let pitch = patch_px + gap_px;
        let patches = CLASSIC_SRGB
            .iter()
            .enumerate()
            .map(|(i, (name, _))| PatchRegion {
                name: name.to_string(),
                roi: Roi::new(x0 + (i % 6) * pitch, y0 + (i / 6) * pitch, patch_px, patch_px),
            })
            .collect();
        Self::new(patches)
    }

    pub fn patches(&self) -> &[PatchRegion] {
        &self.patches
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Paints the reference colors into `background` at the layout positions.
pub fn render_chart(background: &LinearImage, layout: &ChartLayout, reference: &ChartReference) -> Result<LinearImage> {
    let mut out = background.clone();
    let width = out.width();
    for region in layout.patches() {
        if !region.roi.fits_in(out.width(), out.height()) {
            return Err(Error::InvalidParameter(format!("patch `{}` is out of bounds", region.name)));
        }
        let color = reference.get(&region.name)?;
        let pixels = out.pixels_mut();
        for y in region.roi.y..region.roi.y + region.roi.h {
            for x in region.roi.x..region.roi.x + region.roi.w {
                pixels[y * width + x] = color;
            }
        }
    }
    Ok(out)
}

/// Mean of `values` after discarding the lowest and highest `trim` fraction.
pub(crate) fn trimmed_mean(values: &mut [f64], trim: f64) -> Option<f64> {
    let n = values.len();
    let drop = (trim * n as f64).floor() as usize;
    if n == 0 || 2 * drop >= n {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let kept = &values[drop..n - drop];
    Some(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Measures every patch of `layout` with a per-channel trimmed mean.
pub fn sample_patches(image: &LinearImage, layout: &ChartLayout, trim: f64) -> Result<ChartObservation> {
    if !(0.0..=0.4).contains(&trim) {
        return Err(Error::InvalidParameter(format!("trim must lie in [0, 0.4], got {trim}")));
    }
    let mut patches = Vec::with_capacity(layout.patches().len());
    for region in layout.patches() {
        if !region.roi.fits_in(image.width(), image.height()) {
            return Err(Error::InvalidParameter(format!(
                "patch `{}` at {:?} exceeds {}x{} image",
                region.name,
                region.roi,
                image.width(),
                image.height()
            )));
        }
        let pixels: Vec<Rgb> = image.roi_pixels(&region.roi).collect();
        let mut rgb = [0.0; 3];
        for (c, slot) in rgb.iter_mut().enumerate() {
            let mut channel: Vec<f64> = pixels.iter().map(|p| p[c]).collect();
            *slot = trimmed_mean(&mut channel, trim).ok_or_else(|| Error::EmptyRegion(region.name.clone()))?;
        }
        patches.push(ObservedPatch {
            name: region.name.clone(),
            rgb,
            pixel_count: pixels.len(),
        });
    }
    Ok(ChartObservation { patches })
}
