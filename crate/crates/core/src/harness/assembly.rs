//! Assembly instances: ground-truth pieces, perturbed poses, missing
//! pieces, and reassembly.

use crate::error::{Error, Result};
use crate::geometry::{apply_pose, normalize_cloud, NormalizationRecord, PointCloud, RigidPose};
use crate::util::derive_rng;
use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

/// One benchmark object: the complete cloud, its pieces in canonical pose,
/// the restoring poses, the perturbed poses standing in for an assembly
/// algorithm's output, and the per-piece presence flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyInstance {
    pub id: String,
    pub complete: PointCloud,
    pub pieces: Vec<PointCloud>,
    pub gt_poses: Vec<RigidPose>,
    pub pred_poses: Vec<RigidPose>,
    pub present: Vec<bool>,
    pub seed: u64,
}

impl AssemblyInstance {
    /// Wrap freshly fractured pieces with identity prediction (pred = gt,
    /// everything present).
    pub fn unperturbed(
        id: String,
        complete: PointCloud,
        pieces: Vec<PointCloud>,
        gt_poses: Vec<RigidPose>,
        seed: u64,
    ) -> Result<Self> {
        let n = pieces.len();
        let instance = Self {
            id,
            complete,
            pred_poses: gt_poses.clone(),
            gt_poses,
            present: vec![true; n],
            pieces,
            seed,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pieces.len();
        if n < 1 {
            return Err(Error::InvalidShapeSpec("no pieces".into()));
        }
        if self.gt_poses.len() != n || self.pred_poses.len() != n || self.present.len() != n {
            return Err(Error::InvalidShapeSpec(format!(
                "piece/pose/presence length mismatch: {n}/{}/{}/{}",
                self.gt_poses.len(),
                self.pred_poses.len(),
                self.present.len()
            )));
        }
        if !self.present.iter().any(|&p| p) {
            return Err(Error::NoPresentPieces);
        }
        // restored union must reproduce the complete cloud (same points up
        // to recentering roundoff, so the chamfer distance is ~0)
        let mut count = 0usize;
        for piece in &self.pieces {
            count += piece.len();
        }
        if count != self.complete.len() {
            return Err(Error::InvalidShapeSpec(format!(
                "piece points {count} != complete points {}",
                self.complete.len()
            )));
        }
        Ok(())
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }
}

/// Pose-noise and missingness parameters simulating an imperfect assembly
/// algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    /// Std-dev of the per-piece rotation angle, degrees; the axis is
    /// uniform on the sphere and the rotation acts about the piece's placed
    /// centroid.
    pub rot_sigma_deg: f64,
    /// Std-dev of the per-piece translation, normalized units per axis.
    pub trans_sigma: f64,
    /// Independent probability of a piece going missing; the draw is
    /// repeated until at least one piece remains.
    pub drop_prob: f64,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            rot_sigma_deg: 0.0,
            trans_sigma: 0.0,
            drop_prob: 0.0,
            seed: 0,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rot_sigma_deg < 0.0 || self.trans_sigma < 0.0 {
            return Err(Error::InvalidShapeSpec(format!(
                "negative noise sigma ({}, {})",
                self.rot_sigma_deg, self.trans_sigma
            )));
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(Error::InvalidShapeSpec(format!(
                "drop_prob {} outside [0,1)",
                self.drop_prob
            )));
        }
        Ok(())
    }
}

/// Apply pose noise and missingness. Pose noise and drop decisions come
/// from separate derived streams keyed by the instance id, so changing
/// `drop_prob` never shifts the pose noise, and `drop_prob = 0` reproduces
/// a run with dropping disabled draw-for-draw.
pub fn perturb_assembly(
    instance: &AssemblyInstance,
    spec: &PerturbationSpec,
) -> Result<AssemblyInstance> {
    spec.validate()?;
    instance.validate()?;
    let rot_sigma = spec.rot_sigma_deg.to_radians();
    let mut pose_rng = derive_rng(spec.seed, &format!("perturb-pose-{}", instance.id), 0);
    let mut pred_poses = Vec::with_capacity(instance.piece_count());
    for (piece, gt_pose) in instance.pieces.iter().zip(&instance.gt_poses) {
        let axis: [f64; 3] = pose_rng.sample(UnitSphere);
        let angle = (rot_sigma * pose_rng.sample::<f64, _>(StandardNormal)).abs();
        let t_delta = Vector3::new(
            spec.trans_sigma * pose_rng.sample::<f64, _>(StandardNormal),
            spec.trans_sigma * pose_rng.sample::<f64, _>(StandardNormal),
            spec.trans_sigma * pose_rng.sample::<f64, _>(StandardNormal),
        );
        if angle == 0.0 && t_delta == Vector3::zeros() {
            pred_poses.push(gt_pose.clone());
            continue;
        }
        // rotate about the piece's placed centroid, then translate
        let placed = apply_pose(piece, gt_pose);
        let pivot = placed.centroid()?;
        let delta = RigidPose::from_axis_angle(&Vector3::from(axis), angle)?;
        let about_pivot = RigidPose::from_translation(-pivot)
            .then(&delta)
            .then(&RigidPose::from_translation(pivot + t_delta));
        pred_poses.push(gt_pose.then(&about_pivot));
    }

    let mut drop_rng = derive_rng(spec.seed, &format!("perturb-drop-{}", instance.id), 0);
    let n = instance.piece_count();
    let mut present = vec![true; n];
    loop {
        for slot in present.iter_mut() {
            *slot = drop_rng.random::<f64>() >= spec.drop_prob;
        }
        if present.iter().any(|&p| p) {
            break;
        }
    }

    let out = AssemblyInstance {
        pred_poses,
        present,
        ..instance.clone()
    };
    out.validate()?;
    Ok(out)
}

/// An assembled (partial) object, kept in both frames.
#[derive(Debug, Clone)]
pub struct Assembled {
    /// Union of present pieces in the complete object's frame.
    pub world: PointCloud,
    /// The same cloud renormalized into [0,1]^3 for the pipeline.
    pub normalized: PointCloud,
    /// Inverts `normalized` back to `world`.
    pub record: NormalizationRecord,
}

/// Union the present pieces under ground-truth or predicted poses, then
/// renormalize for the pipeline, keeping the record.
pub fn assemble(instance: &AssemblyInstance, use_pred: bool) -> Result<Assembled> {
    instance.validate()?;
    let poses = if use_pred {
        &instance.pred_poses
    } else {
        &instance.gt_poses
    };
    let parts: Vec<PointCloud> = instance
        .pieces
        .iter()
        .zip(poses)
        .zip(&instance.present)
        .filter(|(_, &present)| present)
        .map(|((piece, pose), _)| apply_pose(piece, pose))
        .collect();
    if parts.is_empty() {
        return Err(Error::NoPresentPieces);
    }
    let world = PointCloud::union(parts.iter());
    let (normalized, record) = normalize_cloud(&world)?;
    Ok(Assembled {
        world,
        normalized,
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chamfer_distance;
    use crate::harness::{fracture, gen_shape, ShapeCategory, ShapeSpec};

    fn instance(seed: u64) -> AssemblyInstance {
        let complete = gen_shape(&ShapeSpec::seeded(ShapeCategory::Box, 2048, seed)).unwrap();
        let (pieces, gt_poses) = fracture(&complete, 4, seed + 1).unwrap();
        AssemblyInstance::unperturbed(format!("t-{seed}"), complete, pieces, gt_poses, seed)
            .unwrap()
    }

    #[test]
    fn zero_noise_is_the_identity_perturbation() {
        let inst = instance(50);
        let spec = PerturbationSpec {
            seed: 1,
            ..Default::default()
        };
        let out = perturb_assembly(&inst, &spec).unwrap();
        assert_eq!(out.pred_poses, inst.gt_poses);
        assert!(out.present.iter().all(|&p| p));
    }

    #[test]
    fn assembled_gt_matches_complete() {
        let inst = instance(51);
        let assembled = assemble(&inst, false).unwrap();
        let cd = chamfer_distance(&assembled.world, &inst.complete).unwrap();
        assert!(cd < 1e-20, "cd {cd}"); // recentering roundoff only
        assert!(assembled.normalized.is_normalized());
        // record maps normalized back onto world
        let back = assembled.record.invert_cloud(&assembled.normalized);
        let cd_back = chamfer_distance(&back, &assembled.world).unwrap();
        assert!(cd_back < 1e-20, "cd {cd_back}");
    }

    #[test]
    fn drop_rate_matches_the_bernoulli_law() {
        // many pieces per instance so the at-least-one-present redraw never
        // triggers at these sizes
        let complete = gen_shape(&ShapeSpec::seeded(ShapeCategory::Box, 4096, 52)).unwrap();
        let (pieces, gt_poses) = fracture(&complete, 5, 53).unwrap();
        let n_pieces = pieces.len();
        let inst =
            AssemblyInstance::unperturbed("drop".into(), complete, pieces, gt_poses, 52).unwrap();
        let mut dropped = 0usize;
        let mut total = 0usize;
        let mut k = 0u64;
        while total < 10_000 {
            let spec = PerturbationSpec {
                drop_prob: 0.2,
                seed: k,
                ..Default::default()
            };
            let out = perturb_assembly(&inst, &spec).unwrap();
            dropped += out.present.iter().filter(|&&p| !p).count();
            total += n_pieces;
            k += 1;
        }
        let rate = dropped as f64 / total as f64;
        assert!((rate - 0.2).abs() < 0.01, "drop rate {rate}");
    }

    #[test]
    fn dropping_only_removes_points() {
        let inst = instance(54);
        let spec = PerturbationSpec {
            drop_prob: 0.45,
            seed: 3,
            ..Default::default()
        };
        let out = perturb_assembly(&inst, &spec).unwrap();
        let full = assemble(&inst, true).unwrap();
        let partial = assemble(&out, true).unwrap();
        assert!(partial.world.len() <= full.world.len());
        if out.present.iter().any(|&p| !p) {
            assert!(partial.world.len() < full.world.len());
            let cd = chamfer_distance(&partial.world, &inst.complete).unwrap();
            assert!(cd > 0.0);
        }
    }

    #[test]
    fn pose_noise_grows_with_rot_sigma() {
        let inst = instance(55);
        let mut last = 0.0;
        for (i, sigma) in [5.0, 15.0, 30.0].iter().enumerate() {
            // average over several seeds for a stable trend
            let mut acc = 0.0;
            for seed in 0..8 {
                let spec = PerturbationSpec {
                    rot_sigma_deg: *sigma,
                    seed,
                    ..Default::default()
                };
                let out = perturb_assembly(&inst, &spec).unwrap();
                let assembled = assemble(&out, true).unwrap();
                acc += chamfer_distance(&assembled.world, &inst.complete).unwrap();
            }
            acc /= 8.0;
            assert!(acc > last, "cd {acc} at sigma {sigma} vs {last} at step {i}");
            last = acc;
        }
    }

    #[test]
    fn pose_noise_is_reproducible_and_independent_of_drop_prob() {
        let inst = instance(56);
        let a = perturb_assembly(
            &inst,
            &PerturbationSpec {
                rot_sigma_deg: 10.0,
                trans_sigma: 0.05,
                drop_prob: 0.0,
                seed: 4,
            },
        )
        .unwrap();
        let b = perturb_assembly(
            &inst,
            &PerturbationSpec {
                rot_sigma_deg: 10.0,
                trans_sigma: 0.05,
                drop_prob: 0.3,
                seed: 4,
            },
        )
        .unwrap();
        assert_eq!(a.pred_poses, b.pred_poses);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(PerturbationSpec {
            drop_prob: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PerturbationSpec {
            rot_sigma_deg: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
