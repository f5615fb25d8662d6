//! Color accuracy and over-depth consistency metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Rgb;

/// How colors are normalized before comparing them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the Euclidean norm.
    #[default]
    UnitL2,
    /// Divide by `R + G + B`.
    Chromaticity,
}

fn l2(v: Rgb) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn distance(a: Rgb, b: Rgb) -> f64 {
    l2([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn normalize(v: Rgb, mode: Normalization) -> Result<Rgb> {
    let norm = match mode {
        Normalization::UnitL2 => l2(v),
        Normalization::Chromaticity => v[0] + v[1] + v[2],
    };
    if !(norm.is_finite() && norm != 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(v.map(|x| x / norm))
}

/// Euclidean distance between the unit-L2-normalized colors.
pub fn normalized_color_distance(observed: Rgb, reference: Rgb) -> Result<f64> {
    normalized_color_distance_with(observed, reference, Normalization::UnitL2)
}

pub fn normalized_color_distance_with(observed: Rgb, reference: Rgb, mode: Normalization) -> Result<f64> {
    Ok(distance(normalize(observed, mode)?, normalize(reference, mode)?))
}

/// Consistency of one patch over a depth series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchConsistency {
    /// Sum over channels of the population variance across the series.
    pub variance: f64,
    /// Distance from the series mean color to the reference.
    pub mean_error: f64,
}

pub fn consistency_stats(series: &[Rgb], reference: Rgb) -> Result<PatchConsistency> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort(series.len()));
    }
    let n = series.len() as f64;
    let mut mean = [0.0; 3];
    for s in series {
        for c in 0..3 {
            mean[c] += s[c] / n;
        }
    }
    let variance = series
        .iter()
        .map(|s| (0..3).map(|c| (s[c] - mean[c]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / n;
    Ok(PatchConsistency {
        variance,
        mean_error: distance(mean, reference),
    })
}

/// Per-patch consistency plus the averages across patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub patches: Vec<(String, PatchConsistency)>,
    pub mean_variance: f64,
    pub mean_error: f64,
}

impl ConsistencyReport {
    pub fn from_patches(patches: Vec<(String, PatchConsistency)>) -> Self {
        let n = patches.len().max(1) as f64;
        let mean_variance = patches.iter().map(|(_, p)| p.variance).sum::<f64>() / n;
        let mean_error = patches.iter().map(|(_, p)| p.mean_error).sum::<f64>() / n;
        Self {
            patches,
            mean_variance,
            mean_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn same_color_any_scale() {
        assert_eq!(normalized_color_distance([0.5, 0.5, 0.5], [1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_colors() {
        let d = normalized_color_distance([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_distance() {
        let d = normalized_color_distance([1.0, 1.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d - ((h - 1.0).powi(2) + h * h).sqrt()).abs() < 1e-15);
        assert!((d - 0.765367).abs() < 5e-7);
    }

    #[test]
    fn zero_norm() {
        assert!(matches!(
            normalized_color_distance([0.0; 3], [1.0, 0.0, 0.0]),
            Err(Error::ZeroNorm)
        ));
        assert!(normalized_color_distance_with([0.2, 0.3, 0.5], [0.0; 3], Normalization::Chromaticity).is_err());
    }

    #[test]
    fn chromaticity_mode() {
        let d = normalized_color_distance_with([2.0, 0.0, 0.0], [0.0, 0.0, 5.0], Normalization::Chromaticity).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn consistency_examples() {
        let r = consistency_stats(&[[0.2, 0.3, 0.4]; 4], [0.2, 0.3, 0.4]).unwrap();
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.mean_error, 0.0);

        let r = consistency_stats(&[[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]], [0.0, 0.0, 0.5]).unwrap();
        assert_eq!(r.variance, 0.25);
        assert_eq!(r.mean_error, 0.0);

        assert!(matches!(
            consistency_stats(&[[0.1; 3]], [0.1; 3]),
            Err(Error::SeriesTooShort(1))
        ));
    }

    #[test]
    fn report_averages() {
        let report = ConsistencyReport::from_patches(vec![
            ("a".into(), PatchConsistency { variance: 0.2, mean_error: 0.1 }),
            ("b".into(), PatchConsistency { variance: 0.4, mean_error: 0.3 }),
        ]);
        assert!((report.mean_variance - 0.3).abs() < 1e-15);
        assert!((report.mean_error - 0.2).abs() < 1e-15);
    }

    fn color() -> impl Strategy<Value = Rgb> {
        [0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0]
    }

    proptest! {
        #[test]
        fn metric_properties(a in color(), b in color(), c in color()) {
            let ab = normalized_color_distance(a, b).unwrap();
            let ba = normalized_color_distance(b, a).unwrap();
            let ac = normalized_color_distance(a, c).unwrap();
            let cb = normalized_color_distance(c, b).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= ac + cb + 1e-15);
            prop_assert!((0.0..=2f64.sqrt() + 1e-15).contains(&ab));
        }

        #[test]
        fn scale_invariance(a in color(), b in color(), k in 1u32..64) {
            // power-of-two scales keep the normalization bit-exact
            let s = (k as f64).log2().floor().exp2();
            let scaled = a.map(|v| v * s);
            prop_assert_eq!(
                normalized_color_distance(scaled, b).unwrap(),
                normalized_color_distance(a, b).unwrap()
            );
        }

        #[test]
        fn scale_invariance_arbitrary_scale(a in color(), b in color(), s in 1e-3f64..1e3) {
            let scaled = a.map(|v| v * s);
            let d0 = normalized_color_distance(a, b).unwrap();
            let d1 = normalized_color_distance(scaled, b).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-15);
        }

        #[test]
        fn variance_is_translation_invariant(
            series in proptest::collection::vec(color(), 2..8),
            shift in [-0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5],
        ) {
            let reference = [0.3; 3];
            let base = consistency_stats(&series, reference).unwrap();
            let moved: Vec<Rgb> = series.iter().map(|s| [s[0] + shift[0], s[1] + shift[1], s[2] + shift[2]]).collect();
            let shifted = consistency_stats(&moved, reference).unwrap();
            prop_assert!((base.variance - shifted.variance).abs() <= 1e-12);
        }
    }
}
