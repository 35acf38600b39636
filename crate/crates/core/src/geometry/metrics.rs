//! Shape-difference and shape-accuracy metrics.

use crate::error::{Error, Result};
use crate::geometry::{KdTree3, PointCloud};
use crate::util::thread_pool;
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

/// Evaluation summary for one (ground truth, candidate) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Symmetric mean of squared nearest-neighbor distances.
    pub cd: f64,
    /// Fraction of ground-truth points with a candidate point within `eta`.
    pub precision: f64,
    /// Fraction of candidate points with a ground-truth point within `eta`.
    pub recall: f64,
    /// Distance threshold the precision/recall were computed at.
    pub eta: f64,
}

impl MetricsReport {
    /// Compute all three metrics, sharing the two kd-trees.
    pub fn evaluate(gt: &PointCloud, candidate: &PointCloud, eta: f64) -> Result<Self> {
        if gt.is_empty() || candidate.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidEta(eta));
        }
        let tree_gt = KdTree3::build(gt.points())?;
        let tree_cand = KdTree3::build(candidate.points())?;
        let d2_gt_to_cand = min_squared_distances(gt.points(), &tree_cand);
        let d2_cand_to_gt = min_squared_distances(candidate.points(), &tree_gt);
        let cd = mean(&d2_gt_to_cand) + mean(&d2_cand_to_gt);
        let precision = within(&d2_gt_to_cand, eta);
        let recall = within(&d2_cand_to_gt, eta);
        Ok(Self {
            cd,
            precision,
            recall,
            eta,
        })
    }
}

/// Nearest neighbor of `query` in `target`: (index, squared distance).
/// Ties at equal distance resolve to the lowest index. For repeated queries
/// against the same cloud, build a [`KdTree3`] once instead.
pub fn nearest_neighbor(query: &Vector3<f64>, target: &PointCloud) -> Result<(usize, f64)> {
    let tree = KdTree3::build(target.points())?;
    Ok(tree.nearest(query))
}

/// Chamfer distance: mean squared nearest-neighbor distance from `s1` to
/// `s2` plus the same from `s2` to `s1`.
pub fn chamfer_distance(s1: &PointCloud, s2: &PointCloud) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyInput);
    }
    let tree2 = KdTree3::build(s2.points())?;
    let tree1 = KdTree3::build(s1.points())?;
    let fwd = min_squared_distances(s1.points(), &tree2);
    let back = min_squared_distances(s2.points(), &tree1);
    Ok(mean(&fwd) + mean(&back))
}

/// Precision sums over ground-truth points against `s`; recall sums over
/// `s` against ground truth. The distance is unsquared Euclidean,
/// thresholded at `eta`.
pub fn precision_recall(s_gt: &PointCloud, s: &PointCloud, eta: f64) -> Result<(f64, f64)> {
    let report = MetricsReport::evaluate(s_gt, s, eta)?;
    Ok((report.precision, report.recall))
}

/// Per-query min squared distance, parallel over queries, order preserved so
/// the reduction below is independent of the thread count.
fn min_squared_distances(queries: &[Vector3<f64>], tree: &KdTree3) -> Vec<f64> {
    if queries.len() < 256 {
        queries.iter().map(|q| tree.nearest(q).1).collect()
    } else {
        thread_pool().install(|| queries.par_iter().map(|q| tree.nearest(q).1).collect())
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn within(d2: &[f64], eta: f64) -> f64 {
    let hits = d2.iter().filter(|&&d| d.sqrt() <= eta).count();
    hits as f64 / d2.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::derive_rng;
    use rand::Rng;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect()).unwrap()
    }

    fn random_cloud(rng: &mut impl Rng, n: usize) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| {
                    Vector3::new(
                        rng.random::<f64>(),
                        rng.random::<f64>(),
                        rng.random::<f64>(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    /// O(n*m) oracle for every metric at once.
    fn brute_metrics(gt: &PointCloud, s: &PointCloud, eta: f64) -> (f64, f64, f64) {
        let min_d2 = |from: &PointCloud, to: &PointCloud| -> Vec<f64> {
            from.points()
                .iter()
                .map(|p| {
                    to.points()
                        .iter()
                        .map(|q| (p - q).norm_squared())
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        };
        let fwd = min_d2(gt, s);
        let back = min_d2(s, gt);
        let cd = fwd.iter().sum::<f64>() / fwd.len() as f64
            + back.iter().sum::<f64>() / back.len() as f64;
        let prec = fwd.iter().filter(|d| d.sqrt() <= eta).count() as f64 / fwd.len() as f64;
        let rec = back.iter().filter(|d| d.sqrt() <= eta).count() as f64 / back.len() as f64;
        (cd, prec, rec)
    }

    #[test]
    fn nearest_neighbor_basics() {
        let c = cloud(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]);
        let (i, d2) = nearest_neighbor(&Vector3::zeros(), &c).unwrap();
        assert_eq!(i, 0);
        assert_eq!(d2, 1.0);
        let (i, d2) = nearest_neighbor(&Vector3::new(0.0, 2.0, 0.0), &c).unwrap();
        assert_eq!(i, 1);
        assert_eq!(d2, 0.0);
    }

    #[test]
    fn chamfer_unit_offset_pair_is_two() {
        let a = cloud(&[[0.0, 0.0, 0.0]]);
        let b = cloud(&[[1.0, 0.0, 0.0]]);
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn chamfer_self_is_zero_and_symmetric() {
        let mut rng = derive_rng(21, "metrics-test", 0);
        for _ in 0..5 {
            let a = random_cloud(&mut rng, 100);
            let b = random_cloud(&mut rng, 80);
            assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
            let ab = chamfer_distance(&a, &b).unwrap();
            let ba = chamfer_distance(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn chamfer_invariant_under_common_rigid_motion() {
        use crate::geometry::{apply_pose, RigidPose};
        let mut rng = derive_rng(22, "metrics-test", 1);
        let a = random_cloud(&mut rng, 64);
        let b = random_cloud(&mut rng, 64);
        let mut pose = RigidPose::from_axis_angle(&Vector3::new(0.3, -1.0, 0.5), 1.1).unwrap();
        pose = pose.then(&RigidPose::from_translation(Vector3::new(0.2, -0.7, 3.0)));
        let cd = chamfer_distance(&a, &b).unwrap();
        let cd_moved = chamfer_distance(&apply_pose(&a, &pose), &apply_pose(&b, &pose)).unwrap();
        assert!((cd - cd_moved).abs() < 1e-9);
    }

    #[test]
    fn precision_recall_thresholds() {
        let gt = cloud(&[[0.0, 0.0, 0.0]]);
        let s = cloud(&[[1.0, 0.0, 0.0]]);
        assert_eq!(precision_recall(&gt, &s, 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall(&gt, &s, 1.5).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall(&gt, &gt, 0.01).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn precision_recall_rejects_bad_eta() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(precision_recall(&c, &c, 0.0).is_err());
        assert!(precision_recall(&c, &c, -1.0).is_err());
    }

    #[test]
    fn metrics_match_brute_force_oracle() {
        let mut rng = derive_rng(23, "metrics-test", 2);
        for round in 0..10 {
            let n = 16 + (round * 61) % 300;
            let m = 16 + (round * 97) % 300;
            let gt = random_cloud(&mut rng, n);
            let s = random_cloud(&mut rng, m);
            let eta = 0.02 + rng.random::<f64>() * 0.3;
            let report = MetricsReport::evaluate(&gt, &s, eta).unwrap();
            let (cd, prec, rec) = brute_metrics(&gt, &s, eta);
            assert!((report.cd - cd).abs() < 1e-12);
            assert_eq!(report.precision, prec);
            assert_eq!(report.recall, rec);
        }
    }

    #[test]
    fn precision_recall_monotone_in_eta() {
        let mut rng = derive_rng(24, "metrics-test", 3);
        let gt = random_cloud(&mut rng, 128);
        let s = random_cloud(&mut rng, 128);
        let mut last = (0.0, 0.0);
        for k in 1..=20 {
            let eta = 0.05 * k as f64;
            let pr = precision_recall(&gt, &s, eta).unwrap();
            assert!(pr.0 >= last.0 && pr.1 >= last.1);
            last = pr;
        }
    }

    #[test]
    fn empty_inputs_error() {
        let empty = PointCloud::new(vec![]).unwrap();
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(chamfer_distance(&empty, &c).is_err());
        assert!(chamfer_distance(&c, &empty).is_err());
        assert!(nearest_neighbor(&Vector3::zeros(), &empty).is_err());
    }
}
