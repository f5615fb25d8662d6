//! Accuracy and consistency evaluation over depth series.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chart::{sample_patches, ChartLayout, ChartObservation, ChartReference, DEFAULT_TRIM};
use crate::error::{Error, Result};
use crate::image::{LinearImage, Rgb};
use crate::metrics::{consistency_stats, normalized_color_distance_with, Normalization};

/// Frames of one method, ordered by increasing depth.
#[derive(Debug, Clone)]
pub struct MethodSeries {
    pub label: String,
    pub frames: Vec<LinearImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOptions {
    pub trim: f64,
    pub normalization: Normalization,
    /// Patches to score; every layout patch when absent.
    pub patches: Option<Vec<String>>,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            trim: DEFAULT_TRIM,
            normalization: Normalization::default(),
            patches: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub patch: String,
    pub method: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub patch: String,
    pub method: String,
    pub variance: f64,
    pub mean_error: f64,
}

#[derive(Debug)]
pub struct EvaluationReport {
    /// Normalized distance per patch, measured on the last (deepest) frame of each method.
    pub accuracy: Vec<AccuracyRow>,
    /// Fails when a method has fewer than two frames.
    pub consistency: Result<Vec<ConsistencyRow>>,
}

/// NaN when the observed patch is black, which happens when a corrector
/// over-subtracts backscatter.
fn patch_distance(observed: Rgb, reference: Rgb, mode: Normalization) -> Result<f64> {
    match normalized_color_distance_with(observed, reference, mode) {
        Err(Error::ZeroNorm) if observed.iter().all(|&v| v == 0.0) => Ok(f64::NAN),
        other => other,
    }
}

/// Scores every method's frames against `reference`.
pub fn evaluate(
    series: &[MethodSeries],
    layout: &ChartLayout,
    reference: &ChartReference,
    options: &EvaluationOptions,
) -> Result<EvaluationReport> {
    let names: Vec<String> = match &options.patches {
        Some(p) => p.clone(),
        None => layout.patches().iter().map(|p| p.name.clone()).collect(),
    };
    let mut accuracy = Vec::new();
    let mut observed: Vec<(String, Vec<ChartObservation>)> = Vec::new();
    for method in series {
        if method.frames.is_empty() {
            return Err(Error::InvalidParameter(format!("method `{}` has no frames", method.label)));
        }
        let observations = method
            .frames
            .iter()
            .map(|f| sample_patches(f, layout, options.trim))
            .collect::<Result<Vec<_>>>()?;
        let last = observations.last().expect("non-empty");
        for name in &names {
            accuracy.push(AccuracyRow {
                patch: name.clone(),
                method: method.label.clone(),
                distance: patch_distance(last.get(name)?, reference.get(name)?, options.normalization)?,
            });
        }
        observed.push((method.label.clone(), observations));
    }

    let consistency = (|| {
        let mut rows = Vec::new();
        for (label, observations) in &observed {
            for name in &names {
                let values = observations.iter().map(|o| o.get(name)).collect::<Result<Vec<Rgb>>>()?;
                let stats = consistency_stats(&values, reference.get(name)?)?;
                rows.push(ConsistencyRow {
                    patch: name.clone(),
                    method: label.clone(),
                    variance: stats.variance,
                    mean_error: stats.mean_error,
                });
            }
        }
        Ok(rows)
    })();
    Ok(EvaluationReport { accuracy, consistency })
}

fn write_rows<T: Serialize>(writer: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

fn write_csv_file<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        return w.flush().map_err(|e| Error::io(path, e));
    }
    write_rows(file, rows)
}

/// Writes `patch,method,distance`.
pub fn write_accuracy_csv(path: &Path, rows: &[AccuracyRow]) -> Result<()> {
    write_csv_file(path, rows, &["patch", "method", "distance"])
}

/// Writes `patch,method,variance,mean_error`.
pub fn write_consistency_csv(path: &Path, rows: &[ConsistencyRow]) -> Result<()> {
    write_csv_file(path, rows, &["patch", "method", "variance", "mean_error"])
}

fn csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut buf = Vec::new();
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        w.flush().map_err(|e| Error::Csv(e.into()))?;
    } else {
        write_rows(&mut buf, rows)?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn accuracy_csv_string(rows: &[AccuracyRow]) -> Result<String> {
    csv_string(rows, &["patch", "method", "distance"])
}

pub fn consistency_csv_string(rows: &[ConsistencyRow]) -> Result<String> {
    csv_string(rows, &["patch", "method", "variance", "mean_error"])
}
