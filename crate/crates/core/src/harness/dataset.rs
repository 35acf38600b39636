//! Seeded benchmark dataset construction.

use crate::error::{Error, Result};
use crate::harness::{
    fracture, gen_shape, perturb_assembly, AssemblyInstance, RunConfig, ShapeCategory, ShapeSpec,
};
use crate::util::{derive_rng, thread_pool};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub category: ShapeCategory,
    pub assembly: AssemblyInstance,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<BenchInstance>,
    pub test: Vec<BenchInstance>,
}

/// Build the train and test splits. Every instance derives from
/// (global seed, split, index), so splits are disjoint by construction;
/// disjointness is still asserted.
pub fn build_dataset(cfg: &RunConfig) -> Result<Dataset> {
    cfg.validate()?;
    let train = build_split(cfg, "train", cfg.dataset.train_count)?;
    let test = build_split(cfg, "test", cfg.dataset.test_count)?;

    let train_ids: BTreeSet<&str> = train.iter().map(|b| b.assembly.id.as_str()).collect();
    let test_ids: BTreeSet<&str> = test.iter().map(|b| b.assembly.id.as_str()).collect();
    if train_ids.intersection(&test_ids).next().is_some() {
        return Err(Error::InvalidRunConfig(
            "train and test instance ids overlap".into(),
        ));
    }
    let train_seeds: BTreeSet<u64> = train.iter().map(|b| b.assembly.seed).collect();
    if test.iter().any(|b| train_seeds.contains(&b.assembly.seed)) {
        return Err(Error::InvalidRunConfig(
            "train and test instance seeds overlap".into(),
        ));
    }
    Ok(Dataset { train, test })
}

fn build_split(cfg: &RunConfig, split: &str, count: usize) -> Result<Vec<BenchInstance>> {
    thread_pool().install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| build_instance(cfg, split, i))
            .collect()
    })
}

fn build_instance(cfg: &RunConfig, split: &str, index: usize) -> Result<BenchInstance> {
    let id = format!("{split}-{index:04}");
    let instance_seed: u64 = derive_rng(cfg.seed, &format!("instance-{split}"), index as u64).random();
    let category = cfg.dataset.categories[index % cfg.dataset.categories.len()];
    let spec = ShapeSpec::seeded(category, cfg.dataset.n_pts, instance_seed);
    let complete = gen_shape(&spec)?;
    let (pieces, gt_poses) = fracture(&complete, cfg.dataset.n_pieces, instance_seed)?;
    let unperturbed = AssemblyInstance::unperturbed(id, complete, pieces, gt_poses, instance_seed)?;
    let assembly = perturb_assembly(&unperturbed, &cfg.perturb.spec(cfg.seed))?;
    Ok(BenchInstance { category, assembly })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.dataset.train_count = 4;
        cfg.dataset.test_count = 3;
        cfg.dataset.n_pts = 512;
        cfg
    }

    #[test]
    fn dataset_is_deterministic_and_disjoint() {
        let cfg = small_cfg();
        let a = build_dataset(&cfg).unwrap();
        let b = build_dataset(&cfg).unwrap();
        assert_eq!(a.train.len(), 4);
        assert_eq!(a.test.len(), 3);
        for (x, y) in a.train.iter().zip(&b.train) {
            assert_eq!(x.assembly, y.assembly);
        }
        let train_seeds: Vec<u64> = a.train.iter().map(|b| b.assembly.seed).collect();
        for t in &a.test {
            assert!(!train_seeds.contains(&t.assembly.seed));
        }
    }

    #[test]
    fn categories_cycle() {
        let cfg = small_cfg();
        let ds = build_dataset(&cfg).unwrap();
        assert_eq!(ds.train[0].category, ShapeCategory::Revolution);
        assert_eq!(ds.train[1].category, ShapeCategory::Plate);
        assert_eq!(ds.train[2].category, ShapeCategory::Box);
        assert_eq!(ds.train[3].category, ShapeCategory::Revolution);
    }

    #[test]
    fn different_seeds_give_different_data() {
        let cfg = small_cfg();
        let mut cfg2 = small_cfg();
        cfg2.seed = 77;
        let a = build_dataset(&cfg).unwrap();
        let b = build_dataset(&cfg2).unwrap();
        assert_ne!(a.train[0].assembly.complete, b.train[0].assembly.complete);
    }
}
