//! Synthetic benchmark: shape generation, fracturing, pose perturbation,
//! experiment orchestration, evaluation, and sweeps.

mod ablation;
mod assembly;
mod config;
mod dataset;
mod experiment;
mod fracture;
mod manifest;
mod plot;
mod shapes;

pub use ablation::{ablation_sweep, SweepReport, SweepRow};
pub use assembly::{assemble, perturb_assembly, Assembled, AssemblyInstance, PerturbationSpec};
pub use config::{
    DatasetConfig, DecodeConfig, FlowArchConfig, PerturbConfig, RunConfig,
};
pub use dataset::{build_dataset, BenchInstance, Dataset};
pub use experiment::{
    load_manifest, missing_piece_eval, run_experiment, Experiment, InstanceEval, RunLock,
};
pub use fracture::fracture;
pub use manifest::{
    read_manifest, with_aggregates, write_manifest, ManifestRow, KIND_DIFFERENCE, KIND_INSTANCE,
    KIND_MEAN, KIND_STD,
};
pub use plot::{render_line_chart, ChartSeries};
pub use shapes::{gen_shape, ShapeCategory, ShapeProfile, ShapeSpec};
