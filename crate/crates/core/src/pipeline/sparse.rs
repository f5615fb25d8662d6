//! Patch-sparse correction around tracked keypoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, Rgb};
use crate::model::{restore_value, AttenuationCoeffs, RangeField, VeilingLight, DEFAULT_EPSILON_DIRECT};

pub const DEFAULT_PATCH_PX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    pub z: f64,
}

/// Per-keypoint ranges, e.g. from visual odometry, with a unit scale factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRangeMap {
    points: Vec<Keypoint>,
    scale: f64,
}

impl SparseRangeMap {
    pub fn new(points: Vec<Keypoint>, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        if let Some(p) = points.iter().find(|p| !(p.z.is_finite() && p.z > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "keypoint ({}, {}) has non-positive range {}",
                p.x, p.y, p.z
            )));
        }
        Ok(Self { points, scale })
    }

    pub fn points(&self) -> &[Keypoint] {
        &self.points
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(self.points, scale)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Scaled range of point `i`.
    pub fn range(&self, i: usize) -> f64 {
        self.points[i].z * self.scale
    }

    /// Parses CSV with header `x,y,z`.
    pub fn parse(reader: impl std::io::Read, origin: &str) -> Result<Self> {
        let malformed = |message: String| Error::MalformedTable {
            path: origin.to_string(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_ascii_lowercase).collect();
        if headers != ["x", "y", "z"] {
            return Err(malformed(format!("expected header x,y,z, got {}", headers.join(","))));
        }
        let mut points = Vec::new();
        for (row, record) in rdr.deserialize::<Keypoint>().enumerate() {
            let p = record.map_err(|e| malformed(format!("row {}: {e}", row + 1)))?;
            if !(p.z.is_finite() && p.z > 0.0) {
                return Err(malformed(format!("row {}: range must be positive, got {}", row + 1, p.z)));
            }
            points.push(p);
        }
        Self::new(points, 1.0)
    }
}

/// Reads a sparse range map from a CSV file.
pub fn ingest_sparse_map(path: &Path) -> Result<SparseRangeMap> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    SparseRangeMap::parse(file, &path.display().to_string())
}

/// Clipped bounds `[x0, x1) × [y0, y1)` of the square patch around `p`.
fn patch_bounds(p: &Keypoint, patch_px: usize, width: usize, height: usize) -> (usize, usize, usize, usize) {
    let half = patch_px / 2;
    let x0 = p.x.saturating_sub(half);
    let y0 = p.y.saturating_sub(half);
    let x1 = (p.x + patch_px - half).min(width);
    let y1 = (p.y + patch_px - half).min(height);
    (x0, x1, y0, y1)
}

fn covers(p: &Keypoint, patch_px: usize, x: usize, y: usize) -> bool {
    let half = patch_px / 2;
    x + half >= p.x && x < p.x + patch_px - half && y + half >= p.y && y < p.y + patch_px - half
}

fn dist2(p: &Keypoint, x: usize, y: usize) -> u64 {
    let dx = p.x.abs_diff(x) as u64;
    let dy = p.y.abs_diff(y) as u64;
    dx * dx + dy * dy
}

/// Index of the keypoint whose patch covers `(x, y)` and is nearest to it;
/// ties go to the smaller index.
pub fn owning_keypoint(map: &SparseRangeMap, patch_px: usize, x: usize, y: usize) -> Option<usize> {
    nearest_covering(&map.points, 0..map.points.len(), patch_px, x, y)
}

fn nearest_covering(
    points: &[Keypoint],
    candidates: impl IntoIterator<Item = usize>,
    patch_px: usize,
    x: usize,
    y: usize,
) -> Option<usize> {
    candidates
        .into_iter()
        .filter(|&i| covers(&points[i], patch_px, x, y))
        .min_by_key(|&i| (dist2(&points[i], x, y), i))
}

/// Keypoints whose patches intersect the patch of point `i`, in index order.
fn overlapping(points: &[Keypoint], i: usize, patch_px: usize) -> Vec<usize> {
    let p = &points[i];
    (0..points.len())
        .filter(|&j| points[j].x.abs_diff(p.x) < patch_px && points[j].y.abs_diff(p.y) < patch_px)
        .collect()
}

/// Visits every patch pixel once, with the index of its owning keypoint.
fn for_each_owned(map: &SparseRangeMap, patch_px: usize, width: usize, height: usize, mut f: impl FnMut(usize, usize, usize)) {
    for (i, p) in map.points.iter().enumerate() {
        let candidates = overlapping(&map.points, i, patch_px);
        let (x0, x1, y0, y1) = patch_bounds(p, patch_px, width, height);
        for y in y0..y1 {
            for x in x0..x1 {
                let owner = if candidates.len() == 1 {
                    Some(i)
                } else {
                    nearest_covering(&map.points, candidates.iter().copied(), patch_px, x, y)
                };
                if owner == Some(i) {
                    f(i, x, y);
                }
            }
        }
    }
}

fn check_inputs(image: &LinearImage, map: &SparseRangeMap, patch_px: usize) -> Result<()> {
    if map.is_empty() {
        return Err(Error::InvalidParameter("sparse range map is empty".into()));
    }
    if patch_px == 0 {
        return Err(Error::InvalidParameter("patch size must be positive".into()));
    }
    if let Some(p) = map
        .points
        .iter()
        .find(|p| p.x >= image.width() || p.y >= image.height())
    {
        return Err(Error::InvalidParameter(format!(
            "keypoint ({}, {}) lies outside the {}x{} image",
            p.x,
            p.y,
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

/// Applies `f(pixel, z)` inside the patches, each pixel exactly once with
/// the range of its owning keypoint. Pixels outside every patch are copied.
fn apply_patches(
    image: &LinearImage,
    map: &SparseRangeMap,
    patch_px: usize,
    f: impl Fn(Rgb, f64) -> Rgb,
) -> Result<LinearImage> {
    check_inputs(image, map, patch_px)?;
    let (w, h) = (image.width(), image.height());
    let mut out = image.clone();
    let pixels = out.pixels_mut();
    let mut failure = None;
    for_each_owned(map, patch_px, w, h, |i, x, y| {
        let idx = y * w + x;
        let px = f(image.pixels()[idx], map.range(i));
        if px.iter().any(|v| !v.is_finite()) {
            failure.get_or_insert((x, y));
        }
        pixels[idx] = px.map(|v| v.clamp(0.0, 1.0));
    });
    if let Some((x, y)) = failure {
        return Err(Error::NonFinite(format!("corrected pixel ({x}, {y})")));
    }
    Ok(out)
}

/// Corrects a square patch of side `patch_px` around every keypoint.
pub fn correct_sparse(
    image: &LinearImage,
    map: &SparseRangeMap,
    coeffs: &AttenuationCoeffs,
    b_inf: &VeilingLight,
    patch_px: usize,
) -> Result<LinearImage> {
    correct_sparse_with_floor(image, map, coeffs, b_inf, patch_px, DEFAULT_EPSILON_DIRECT)
}

pub fn correct_sparse_with_floor(
    image: &LinearImage,
    map: &SparseRangeMap,
    coeffs: &AttenuationCoeffs,
    b_inf: &VeilingLight,
    patch_px: usize,
    epsilon_direct: f64,
) -> Result<LinearImage> {
    if !(epsilon_direct > 0.0 && epsilon_direct <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_direct must lie in (0, 1], got {epsilon_direct}"
        )));
    }
    let binf = b_inf.rgb();
    apply_patches(image, map, patch_px, |px, z| {
        [0, 1, 2].map(|c| restore_value(px[c], coeffs.beta_d[c], coeffs.beta_b[c], binf[c], z, epsilon_direct))
    })
}

/// Range field that gives every patch pixel its owning keypoint's range and
/// every other pixel `background_z`.
pub fn sparse_range_field(
    width: usize,
    height: usize,
    map: &SparseRangeMap,
    patch_px: usize,
    background_z: f64,
) -> Result<RangeField> {
    let canvas = LinearImage::filled(width, height, [0.0; 3])?;
    check_inputs(&canvas, map, patch_px)?;
    let mut values = vec![background_z; width * height];
    for_each_owned(map, patch_px, width, height, |i, x, y| values[y * width + x] = map.range(i));
    RangeField::per_pixel(width, height, values)
}
