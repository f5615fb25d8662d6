//! File-level plumbing: image I/O, jobs, sparse correction and evaluation.

pub mod evaluate;
pub mod io;
pub mod job;
pub mod sparse;

pub use evaluate::{evaluate, AccuracyRow, ConsistencyRow, EvaluationOptions, EvaluationReport, MethodSeries};
pub use io::{read_image, srgb_decode, srgb_encode, write_image, BitDepth};
pub use job::{
    correct_frame, correct_image, load_coefficients, run_simulation, save_coefficients, simulate, CoefficientSource,
    CorrectionSidecar, FrameJob, Method, SceneConfig, SimulationCoefficients, SimulationJob, SimulationTruth,
    SparseSettings, VeilingSource,
};
pub use sparse::{correct_sparse, ingest_sparse_map, Keypoint, SparseRangeMap, DEFAULT_PATCH_PX};
