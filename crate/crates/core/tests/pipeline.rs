use std::path::{Path, PathBuf};

use proptest::prelude::*;
use seacolor_core::pipeline::{
    correct_frame, correct_sparse, ingest_sparse_map, read_image, run_simulation, write_image, BitDepth, FrameJob,
    Keypoint, SimulationJob, SparseRangeMap,
};
use seacolor_core::spectral::{load_camera_response, load_water_type};
use seacolor_core::{
    AttenuationCoeffs, CameraResponse, LinearImage, Provenance, VeilingLight, WaterType, WaterTypeTables,
};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn water_tables_on_disk_match_bundled() {
    for t in WaterType::ALL {
        let loaded = load_water_type(t.name(), &data_dir().join("jerlov")).unwrap();
        assert_eq!(loaded, WaterTypeTables::bundled(t).unwrap(), "{}", t.name());
    }
    let camera = load_camera_response(&data_dir().join("camera_gaussian.csv")).unwrap();
    assert_eq!(camera, CameraResponse::bundled_default().unwrap());
}

#[test]
fn copied_table_reads_back_from_another_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data_dir().join("jerlov/IB.csv"), dir.path().join("IB.csv")).unwrap();
    let loaded = load_water_type("IB", dir.path()).unwrap();
    assert_eq!(loaded, WaterTypeTables::bundled(WaterType::IB).unwrap());
    assert!(load_water_type("II", dir.path()).is_err());
}

#[test]
fn job_files_simulate_then_correct() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let clean = LinearImage::from_fn(40, 30, |x, y| {
        [0.1 + 0.02 * x as f64, 0.7 - 0.01 * y as f64, 0.4]
    })
    .unwrap();
    write_image(&d.join("clean.pfm"), &clean, BitDepth::Eight, false).unwrap();
    let sim_path = write(
        d,
        "sim.json",
        r#"{"input": "clean.pfm", "output": "raw.pfm",
            "scene": {"water_type": "II", "depth_m": 4.0, "range_m": 0.6}}"#,
    );
    let sim: SimulationJob = serde_json::from_str(&std::fs::read_to_string(&sim_path).unwrap()).unwrap();
    let (_, truth) = run_simulation(&sim, d).unwrap();
    assert!(d.join("raw.pfm.json").exists());

    let job_path = write(
        d,
        "job.json",
        &format!(
            r#"{{"input": "raw.pfm", "output": "fixed.pfm",
                "scene": {{"water_type": "II", "depth_m": 4.0, "range_m": 0.6}},
                "coefficients": {{"source": "inline", "beta_d": {:?}, "beta_b": {:?}}},
                "veiling": {{"source": "manual", "b_inf": {:?}}}}}"#,
            truth.beta_d, truth.beta_b, truth.b_inf
        ),
    );
    let (job, base) = FrameJob::load(&job_path).unwrap();
    let (_, sidecar) = correct_frame(&job, &base).unwrap();
    assert_eq!(sidecar.beta_d, truth.beta_d);

    let fixed = read_image(&d.join("fixed.pfm"), false).unwrap();
    let worst = fixed
        .pixels()
        .iter()
        .zip(clean.pixels())
        .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
        .fold(0.0, f64::max);
    // two f32 round trips
    assert!(worst < 1e-5, "worst {worst}");
}

#[test]
fn thousand_point_map_keeps_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,y,z\n");
    for i in 0..1000 {
        text.push_str(&format!("{},{},{}\n", i % 97, i / 97, 0.5 + i as f64 * 1e-3));
    }
    let path = write(dir.path(), "map.csv", &text);
    let map = ingest_sparse_map(&path).unwrap();
    assert_eq!(map.points().len(), 1000);
    assert_eq!(map.points()[999], Keypoint { x: 999 % 97, y: 999 / 97, z: 1.499 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_correction_leaves_uncovered_pixels_alone(
        kx in 0usize..48,
        ky in 0usize..32,
        z in 0.05f64..5.0,
        patch in 1usize..24,
    ) {
        let img = LinearImage::from_fn(48, 32, |x, y| [0.3 + 0.01 * x as f64, 0.2 + 0.01 * y as f64, 0.5]).unwrap();
        let coeffs = AttenuationCoeffs::new([0.7, 0.3, 0.1], [0.3, 0.3, 0.3], Provenance::Manual).unwrap();
        let b_inf = VeilingLight::new([0.05, 0.2, 0.3]).unwrap();
        let map = SparseRangeMap::new(vec![Keypoint { x: kx, y: ky, z }], 1.0).unwrap();
        let out = correct_sparse(&img, &map, &coeffs, &b_inf, patch).unwrap();
        let lo = |k: usize| k as i64 - (patch / 2) as i64;
        for y in 0..32 {
            for x in 0..48 {
                let inside = (lo(kx)..lo(kx) + patch as i64).contains(&(x as i64))
                    && (lo(ky)..lo(ky) + patch as i64).contains(&(y as i64));
                if !inside {
                    prop_assert_eq!(out.get(x, y), img.get(x, y));
                }
            }
        }
    }
}
