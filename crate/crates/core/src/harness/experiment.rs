//! End-to-end experiment driver: dataset, prior training, retarget
//! fine-tuning, reconstruction, and evaluation manifests.

use crate::error::{Error, Result};
use crate::flow::{save_checkpoint, train_flow, FlowModel};
use crate::geometry::{save_xyz, MetricsReport, PointCloud};
use crate::harness::manifest::{
    read_manifest, with_aggregates, write_manifest, ManifestRow, KIND_INSTANCE,
};
use crate::harness::{assemble, build_dataset, perturb_assembly, BenchInstance, Dataset, RunConfig};
use crate::latent::ShapeCodec;
use crate::retarget::{build_retarget_pairs, finetune, reconstruct, save_pairs};
use crate::util::thread_pool;
use rayon::prelude::*;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Exclusive ownership of a run directory; the lock file disappears on
/// drop.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::RunDirLocked(dir.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Everything the later stages need: config, codec, dataset, and the two
/// trained models.
pub struct Experiment {
    pub cfg: RunConfig,
    pub codec: ShapeCodec,
    pub dataset: Dataset,
    pub base: FlowModel,
    pub finetuned: FlowModel,
}

/// Per-instance evaluation outcome (input = the partial assembly, recon =
/// the model's complete-shape estimate).
#[derive(Debug, Clone)]
pub struct InstanceEval {
    pub id: String,
    pub category: String,
    pub seed: u64,
    pub n_pieces: usize,
    pub n_present: usize,
    pub input: MetricsReport,
    pub recon: Option<MetricsReport>,
    pub recon_error: Option<String>,
    /// CD between the reconstruction and the partial input, used by the
    /// ablation orderings.
    pub recon_to_input_cd: Option<f64>,
}

impl Experiment {
    /// Stages: dataset -> encode -> train prior -> build pairs -> finetune.
    /// Artifacts (dataset files, checkpoints, traces, pair cache) land in
    /// `cfg.out_dir` as each stage completes.
    pub fn prepare(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let out = cfg.out_dir.clone();
        fs::create_dir_all(out.join("dataset"))?;
        fs::create_dir_all(out.join("checkpoints"))?;
        fs::create_dir_all(out.join("traces"))?;
        fs::write(out.join("config.toml"), cfg.to_toml()?)?;

        let codec = make_codec(&cfg)?;
        let dataset = build_dataset(&cfg).map_err(|e| e.in_stage("dataset"))?;
        write_dataset_files(&cfg, &dataset, &out.join("dataset"))
            .map_err(|e| e.in_stage("dataset"))?;

        // encode complete training objects into flow states
        let latents: Vec<Vec<f64>> = thread_pool()
            .install(|| {
                dataset
                    .train
                    .par_iter()
                    .map(|b| codec.encode_state(&b.assembly.complete))
                    .collect::<Result<Vec<_>>>()
            })
            .map_err(|e| e.in_stage("encode"))?;

        let spec = cfg.flow.spec(codec.state_dim());
        let mut train_cfg = cfg.train.clone();
        train_cfg.seed = cfg.seed;
        let (base, base_trace) =
            train_flow(&latents, spec, &train_cfg).map_err(|e| e.in_stage("train-prior"))?;
        save_checkpoint(&base, &out.join("checkpoints/base.jgrf"))?;
        write_trace(&base_trace, &out.join("traces/base_loss.csv"))?;

        // retarget pairs from the perturbed training assemblies
        let instances: Vec<(PointCloud, PointCloud)> = thread_pool()
            .install(|| {
                dataset
                    .train
                    .par_iter()
                    .map(|b| {
                        let assembled = assemble(&b.assembly, true)?;
                        Ok((assembled.normalized, b.assembly.complete.clone()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .map_err(|e| e.in_stage("retarget-pairs"))?;
        let mut retarget_cfg = cfg.retarget.clone();
        retarget_cfg.seed = cfg.seed;
        let built = build_retarget_pairs(&instances, &base, &codec, &retarget_cfg)
            .map_err(|e| e.in_stage("retarget-pairs"))?;
        save_pairs(&built.pairs, &out.join("pairs.jgrp"))?;
        if !built.failures.is_empty() {
            let mut log = File::create(out.join("pair_failures.log"))?;
            for (i, msg) in &built.failures {
                writeln!(log, "instance {i}: {msg}")?;
            }
        }

        let (finetuned, ft_trace) =
            finetune(&base, &built.pairs, &retarget_cfg).map_err(|e| e.in_stage("finetune"))?;
        save_checkpoint(&finetuned, &out.join("checkpoints/finetuned.jgrf"))?;
        write_trace(&ft_trace, &out.join("traces/finetune_loss.csv"))?;

        Ok(Self {
            cfg,
            codec,
            dataset,
            base,
            finetuned,
        })
    }

    /// Reconstruct and score one instance with explicit solver/mixing
    /// overrides (the ablation path).
    pub fn eval_instance_with(
        &self,
        bench: &BenchInstance,
        reverse_steps: usize,
        alpha: f64,
    ) -> Result<InstanceEval> {
        let mut rcfg = self.cfg.retarget.clone();
        rcfg.seed = self.cfg.seed;
        rcfg.reverse_steps = reverse_steps;
        rcfg.alpha = alpha;
        let assembly = &bench.assembly;
        let assembled = assemble(assembly, true)?;
        let input = MetricsReport::evaluate(&assembly.complete, &assembled.world, self.cfg.eta)?;
        let (recon, recon_error, recon_to_input_cd) = match reconstruct(
            &self.finetuned,
            &assembled.normalized,
            &self.codec,
            &rcfg,
            assembly.seed,
        ) {
            Ok(recon_norm) => {
                let recon_world = assembled.record.invert_cloud(&recon_norm);
                let report =
                    MetricsReport::evaluate(&assembly.complete, &recon_world, self.cfg.eta)?;
                let to_input =
                    crate::geometry::chamfer_distance(&recon_world, &assembled.world)?;
                (Some((report, recon_world)), None, Some(to_input))
            }
            Err(e @ Error::EmptyDecode) => (None, Some(e.to_string()), None),
            Err(e) => return Err(e),
        };
        Ok(InstanceEval {
            id: assembly.id.clone(),
            category: bench.category.name().to_string(),
            seed: assembly.seed,
            n_pieces: assembly.piece_count(),
            n_present: assembly.present_count(),
            input,
            recon: recon.as_ref().map(|(r, _)| *r),
            recon_error,
            recon_to_input_cd,
        }
        .with_saved_cloud(recon.map(|(_, c)| c), &self.cfg)?)
    }

    /// Score every test instance at the configured defaults.
    pub fn evaluate_test_set(&self) -> Result<Vec<InstanceEval>> {
        let rcfg = &self.cfg.retarget;
        thread_pool().install(|| {
            self.dataset
                .test
                .par_iter()
                .map(|b| self.eval_instance_with(b, rcfg.reverse_steps, rcfg.alpha))
                .collect()
        })
    }
}

impl InstanceEval {
    fn with_saved_cloud(self, recon: Option<PointCloud>, cfg: &RunConfig) -> Result<Self> {
        if let Some(cloud) = recon {
            let dir = cfg.out_dir.join("recon");
            fs::create_dir_all(&dir)?;
            save_xyz(&cloud, &dir.join(format!("{}_recon.xyz", self.id)))?;
        }
        Ok(self)
    }

    pub fn to_manifest_row(&self, config_hash: &str, eta: f64) -> ManifestRow {
        ManifestRow {
            kind: KIND_INSTANCE.into(),
            id: self.id.clone(),
            category: self.category.clone(),
            seed: self.seed,
            config_hash: config_hash.to_string(),
            n_pieces: Some(self.n_pieces),
            n_present: Some(self.n_present),
            recon_failed: Some(self.recon.is_none()),
            input_cd: Some(self.input.cd),
            input_precision: Some(self.input.precision),
            input_recall: Some(self.input.recall),
            recon_cd: self.recon.map(|r| r.cd),
            recon_precision: self.recon.map(|r| r.precision),
            recon_recall: self.recon.map(|r| r.recall),
            delta_cd: self.recon.map(|r| r.cd - self.input.cd),
            delta_precision: self.recon.map(|r| r.precision - self.input.precision),
            delta_recall: self.recon.map(|r| r.recall - self.input.recall),
            eta,
        }
    }
}

/// Full pipeline: prepare, evaluate the test set, and write the manifest
/// with aggregate and difference rows. Returns the experiment handle and
/// the manifest rows.
pub fn run_experiment(cfg: RunConfig) -> Result<(Experiment, Vec<ManifestRow>)> {
    let _lock = RunLock::acquire(&cfg.out_dir)?;
    let experiment = Experiment::prepare(cfg)?;
    let evals = experiment
        .evaluate_test_set()
        .map_err(|e| e.in_stage("reconstruct"))?;
    let hash = experiment.cfg.config_hash();
    let rows: Vec<ManifestRow> = evals
        .iter()
        .map(|e| e.to_manifest_row(&hash, experiment.cfg.eta))
        .collect();
    let rows = with_aggregates(rows, experiment.cfg.seed);
    write_manifest(&rows, &experiment.cfg.out_dir.join("manifest.csv"))
        .map_err(|e| e.in_stage("manifest"))?;
    Ok((experiment, rows))
}

/// Re-evaluate the test set with pieces dropped at `drop_prob` (pose noise
/// unchanged), next to a complete-input (no dropping) pass. Writes
/// `missing_piece.csv` with one aggregate block per condition.
pub fn missing_piece_eval(
    experiment: &Experiment,
    drop_prob: f64,
) -> Result<(Vec<ManifestRow>, Vec<ManifestRow>)> {
    let cfg = &experiment.cfg;
    let hash = cfg.config_hash();
    let mut blocks = Vec::new();
    for (label, prob) in [("complete", 0.0), ("missing", drop_prob)] {
        let mut perturb = cfg.perturb.spec(cfg.seed);
        perturb.drop_prob = prob;
        let evals: Result<Vec<InstanceEval>> = thread_pool().install(|| {
            experiment
                .dataset
                .test
                .par_iter()
                .map(|b| {
                    // rebuild presence flags from the same streams at the
                    // requested drop probability
                    let re_perturbed = perturb_assembly(&unperturbed_clone(b), &perturb)?;
                    let bench = BenchInstance {
                        category: b.category,
                        assembly: re_perturbed,
                    };
                    experiment.eval_instance_with(
                        &bench,
                        cfg.retarget.reverse_steps,
                        cfg.retarget.alpha,
                    )
                })
                .collect()
        });
        let mut rows: Vec<ManifestRow> = evals?
            .iter()
            .map(|e| e.to_manifest_row(&hash, cfg.eta))
            .collect();
        for row in &mut rows {
            row.id = format!("{label}:{}", row.id);
        }
        blocks.push(with_aggregates(rows, cfg.seed));
    }
    let all: Vec<ManifestRow> = blocks.concat();
    write_manifest(&all, &cfg.out_dir.join("missing_piece.csv"))?;
    let mut it = blocks.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

fn unperturbed_clone(b: &BenchInstance) -> crate::harness::AssemblyInstance {
    let mut assembly = b.assembly.clone();
    assembly.pred_poses = assembly.gt_poses.clone();
    assembly.present = vec![true; assembly.pieces.len()];
    assembly
}

fn make_codec(cfg: &RunConfig) -> Result<ShapeCodec> {
    let mut codec = ShapeCodec::new(&cfg.cameras, cfg.latent)?;
    codec.tau = cfg.decode.tau;
    codec.pts_per_voxel = cfg.decode.pts_per_voxel;
    Ok(codec)
}

fn write_dataset_files(cfg: &RunConfig, dataset: &Dataset, dir: &Path) -> Result<()> {
    let hash = cfg.config_hash();
    let mut rows = Vec::new();
    for bench in dataset.train.iter().chain(&dataset.test) {
        let assembly = &bench.assembly;
        save_xyz(
            &assembly.complete,
            &dir.join(format!("{}_complete.xyz", assembly.id)),
        )?;
        let assembled = assemble(assembly, true)?;
        save_xyz(
            &assembled.world,
            &dir.join(format!("{}_partial.xyz", assembly.id)),
        )?;
        rows.push((
            assembly.id.clone(),
            bench.category.name().to_string(),
            assembly.seed,
            assembly.piece_count(),
            assembly.present_count(),
            hash.clone(),
        ));
    }
    let mut w = csv::Writer::from_path(dir.join("dataset.csv"))?;
    w.write_record(["id", "category", "seed", "n_pieces", "n_present", "config_hash"])?;
    for (id, cat, seed, pieces, present, h) in rows {
        w.write_record([
            id,
            cat,
            seed.to_string(),
            pieces.to_string(),
            present.to_string(),
            h,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_trace(trace: &[(usize, f64)], path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "step,loss")?;
    for (step, loss) in trace {
        writeln!(f, "{step},{loss}")?;
    }
    Ok(())
}

/// Reload the rows of a previously written manifest.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    read_manifest(path)
}
