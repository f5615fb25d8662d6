//! Spectral tables: sampled curves, Jerlov water types and camera response.
//!
//! All curves handed to the formation model live on the canonical grid
//! (400–700 nm, 10 nm steps). Tables are resampled onto it with piecewise
//! linear interpolation; nothing is ever extrapolated.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_START_NM: f64 = 400.0;
pub const GRID_END_NM: f64 = 700.0;
pub const GRID_STEP_NM: f64 = 10.0;
pub const GRID_LEN: usize = 31;

/// The canonical integration grid, 400..=700 nm every 10 nm.
pub fn canonical_grid() -> Vec<f64> {
    (0..GRID_LEN)
        .map(|i| GRID_START_NM + GRID_STEP_NM * i as f64)
        .collect()
}

/// Trapezoidal rule over a sampled function.
pub fn trapezoid(wavelengths: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(wavelengths.len(), values.len());
    wavelengths
        .windows(2)
        .zip(values.windows(2))
        .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
        .sum()
}

/// A nonnegative function of wavelength sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    wavelengths_nm: Vec<f64>,
    values: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(wavelengths_nm: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "need at least 2 samples, got {}",
                wavelengths_nm.len()
            )));
        }
        if wavelengths_nm.len() != values.len() {
            return Err(Error::InvalidCurve(format!(
                "{} wavelengths but {} values",
                wavelengths_nm.len(),
                values.len()
            )));
        }
        if let Some(w) = wavelengths_nm.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite wavelength {w}")));
        }
        if let Some(pair) = wavelengths_nm.windows(2).find(|p| p[1] <= p[0]) {
            return Err(Error::InvalidCurve(format!(
                "wavelengths not strictly increasing at {} -> {}",
                pair[0], pair[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidCurve(format!("value {v} is negative or non-finite")));
        }
        Ok(Self {
            wavelengths_nm,
            values,
        })
    }

    /// Evaluates `f` on the canonical grid.
    pub fn from_fn_on_grid(f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = canonical_grid();
        let values = grid.iter().map(|&l| f(l)).collect();
        Self::new(grid, values)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_wavelength(&self) -> f64 {
        self.wavelengths_nm[0]
    }

    pub fn max_wavelength(&self) -> f64 {
        self.wavelengths_nm[self.wavelengths_nm.len() - 1]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Wavelength of the largest sample (first one on ties).
    pub fn peak_wavelength(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.wavelengths_nm[best]
    }

    /// Piecewise-linear value at `lambda`; exact at sample points.
    pub fn value_at(&self, lambda: f64) -> Result<f64> {
        let w = &self.wavelengths_nm;
        if !(lambda >= w[0] && lambda <= w[w.len() - 1]) {
            return Err(Error::OutOfSupport(lambda));
        }
        // first index with w[i] >= lambda
        let i = w.partition_point(|&x| x < lambda);
        if w[i] == lambda {
            return Ok(self.values[i]);
        }
        let (x0, x1) = (w[i - 1], w[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        let t = (lambda - x0) / (x1 - x0);
        Ok(y0 + t * (y1 - y0))
    }

    /// True when the support contains `[lo, hi]`.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.min_wavelength() <= lo && self.max_wavelength() >= hi
    }

    pub fn integrate(&self) -> f64 {
        trapezoid(&self.wavelengths_nm, &self.values)
    }

    /// Pointwise map over values, keeping the grid.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .wavelengths_nm
            .iter()
            .zip(&self.values)
            .map(|(&l, &v)| f(l, v))
            .collect();
        Self::new(self.wavelengths_nm.clone(), values)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Result<Self> {
        self.map(|_, v| v * factor)
    }
}

/// Resamples `curve` onto `grid` by piecewise-linear interpolation.
pub fn resample_curve(curve: &SpectralCurve, grid: &[f64]) -> Result<SpectralCurve> {
    let values = grid
        .iter()
        .map(|&l| curve.value_at(l))
        .collect::<Result<Vec<_>>>()?;
    SpectralCurve::new(grid.to_vec(), values)
}

fn require_canonical_coverage(curve: &SpectralCurve) -> Result<()> {
    if !curve.covers(GRID_START_NM, GRID_END_NM) {
        return Err(Error::InsufficientCoverage {
            have_lo: curve.min_wavelength(),
            have_hi: curve.max_wavelength(),
            need_lo: GRID_START_NM,
            need_hi: GRID_END_NM,
        });
    }
    Ok(())
}

/// The ten Jerlov water classes: five oceanic, five coastal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaterType {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "IA")]
    IA,
    #[serde(rename = "IB")]
    IB,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "III")]
    III,
    #[serde(rename = "1C")]
    C1,
    #[serde(rename = "3C")]
    C3,
    #[serde(rename = "5C")]
    C5,
    #[serde(rename = "7C")]
    C7,
    #[serde(rename = "9C")]
    C9,
}

impl WaterType {
    pub const ALL: [WaterType; 10] = [
        WaterType::I,
        WaterType::IA,
        WaterType::IB,
        WaterType::II,
        WaterType::III,
        WaterType::C1,
        WaterType::C3,
        WaterType::C5,
        WaterType::C7,
        WaterType::C9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaterType::I => "I",
            WaterType::IA => "IA",
            WaterType::IB => "IB",
            WaterType::II => "II",
            WaterType::III => "III",
            WaterType::C1 => "1C",
            WaterType::C3 => "3C",
            WaterType::C5 => "5C",
            WaterType::C7 => "7C",
            WaterType::C9 => "9C",
        }
    }

    pub fn is_oceanic(self) -> bool {
        matches!(
            self,
            WaterType::I | WaterType::IA | WaterType::IB | WaterType::II | WaterType::III
        )
    }

    fn bundled_csv(self) -> &'static str {
        match self {
            WaterType::I => include_str!("../data/jerlov/I.csv"),
            WaterType::IA => include_str!("../data/jerlov/IA.csv"),
            WaterType::IB => include_str!("../data/jerlov/IB.csv"),
            WaterType::II => include_str!("../data/jerlov/II.csv"),
            WaterType::III => include_str!("../data/jerlov/III.csv"),
            WaterType::C1 => include_str!("../data/jerlov/1C.csv"),
            WaterType::C3 => include_str!("../data/jerlov/3C.csv"),
            WaterType::C5 => include_str!("../data/jerlov/5C.csv"),
            WaterType::C7 => include_str!("../data/jerlov/7C.csv"),
            WaterType::C9 => include_str!("../data/jerlov/9C.csv"),
        }
    }
}

impl fmt::Display for WaterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaterType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WaterType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownWaterType(s.to_string()))
    }
}

/// Optical properties of one Jerlov water type on the canonical grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterTypeTables {
    pub water_type: WaterType,
    /// Beam absorption a(λ), 1/m.
    pub absorption: SpectralCurve,
    /// Beam scattering b(λ), 1/m.
    pub scattering: SpectralCurve,
    /// Diffuse downwelling attenuation K_d(λ), 1/m.
    pub diffuse_kd: SpectralCurve,
}

impl WaterTypeTables {
    /// Loads the table bundled with the crate.
    pub fn bundled(water_type: WaterType) -> Result<Self> {
        let origin = format!("<bundled {}.csv>", water_type.name());
        Self::parse(water_type, water_type.bundled_csv().as_bytes(), &origin)
    }

    /// Parses a `wavelength_nm,a,b,kd` table and resamples it onto the canonical grid.
    pub fn parse(water_type: WaterType, reader: impl std::io::Read, origin: &str) -> Result<Self> {
        let columns = read_columns(reader, origin, &["wavelength_nm", "a", "b", "kd"])?;
        let [wl, a, b, kd]: [Vec<f64>; 4] = columns
            .try_into()
            .expect("read_columns returns one vector per requested column");
        let malformed = |e: Error| Error::MalformedTable {
            path: origin.to_string(),
            message: e.to_string(),
        };
        let absorption = SpectralCurve::new(wl.clone(), a).map_err(malformed)?;
        let scattering = SpectralCurve::new(wl.clone(), b).map_err(malformed)?;
        let diffuse_kd = SpectralCurve::new(wl, kd).map_err(malformed)?;
        require_canonical_coverage(&absorption)?;
        let grid = canonical_grid();
        Ok(Self {
            water_type,
            absorption: resample_curve(&absorption, &grid)?,
            scattering: resample_curve(&scattering, &grid)?,
            diffuse_kd: resample_curve(&diffuse_kd, &grid)?,
        })
    }

    /// Beam attenuation β(λ) = a(λ) + b(λ).
    pub fn beam_attenuation(&self) -> SpectralCurve {
        let values = self
            .absorption
            .values()
            .iter()
            .zip(self.scattering.values())
            .map(|(a, b)| a + b)
            .collect();
        SpectralCurve::new(self.absorption.wavelengths().to_vec(), values)
            .expect("sum of nonnegative curves on a shared grid is valid")
    }
}

/// Loads `<data_dir>/<name>.csv` for the named Jerlov type.
pub fn load_water_type(name: &str, data_dir: &Path) -> Result<WaterTypeTables> {
    let water_type: WaterType = name.parse()?;
    let path = data_dir.join(format!("{}.csv", water_type.name()));
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    WaterTypeTables::parse(water_type, file, &path.display().to_string())
}

/// Relative spectral sensitivity of the three camera channels, each peak-normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraResponse {
    pub red: SpectralCurve,
    pub green: SpectralCurve,
    pub blue: SpectralCurve,
}

const BUNDLED_CAMERA: &str = include_str!("../data/camera_gaussian.csv");

impl CameraResponse {
    /// Gaussian stand-in response (R/G/B peaks at 600/530/470 nm, σ = 50 nm).
    pub fn bundled_default() -> Result<Self> {
        Self::parse(BUNDLED_CAMERA.as_bytes(), "<bundled camera_gaussian.csv>")
    }

    pub fn parse(reader: impl std::io::Read, origin: &str) -> Result<Self> {
        let columns = read_columns(reader, origin, &["wavelength_nm", "r", "g", "b"])?;
        let [wl, r, g, b]: [Vec<f64>; 4] = columns
            .try_into()
            .expect("read_columns returns one vector per requested column");
        let grid = canonical_grid();
        let mut channels = Vec::with_capacity(3);
        for (label, values) in [("r", r), ("g", g), ("b", b)] {
            let curve = SpectralCurve::new(wl.clone(), values).map_err(|e| Error::MalformedTable {
                path: origin.to_string(),
                message: e.to_string(),
            })?;
            require_canonical_coverage(&curve)?;
            let peak = curve.max_value();
            if peak <= 0.0 {
                return Err(Error::MalformedTable {
                    path: origin.to_string(),
                    message: format!("channel `{label}` is all zero"),
                });
            }
            // Normalize the raw samples so the peak is 1 even when it falls off-grid.
            channels.push(resample_curve(&curve.scaled(1.0 / peak)?, &grid)?);
        }
        let blue = channels.pop().expect("three channels");
        let green = channels.pop().expect("three channels");
        let red = channels.pop().expect("three channels");
        Ok(Self { red, green, blue })
    }

    pub fn channel(&self, c: usize) -> &SpectralCurve {
        match c {
            0 => &self.red,
            1 => &self.green,
            2 => &self.blue,
            _ => panic!("channel index {c} out of range"),
        }
    }
}

/// Loads a `wavelength_nm,r,g,b` camera response CSV.
pub fn load_camera_response(path: &Path) -> Result<CameraResponse> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    CameraResponse::parse(file, &path.display().to_string())
}

fn read_columns(reader: impl std::io::Read, origin: &str, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let malformed = |message: String| Error::MalformedTable {
        path: origin.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: Vec<usize> = names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| malformed(format!("missing column `{name}`")))
        })
        .collect::<Result<_>>()?;
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (col, &i) in index.iter().enumerate() {
            let cell = record
                .get(i)
                .ok_or_else(|| malformed(format!("row {} is missing `{}`", row + 2, names[col])))?;
            let value: f64 = cell
                .parse()
                .map_err(|_| malformed(format!("row {}: `{cell}` is not a number", row + 2)))?;
            columns[col].push(value);
        }
    }
    Ok(columns)
}
