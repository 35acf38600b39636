//! Pooled global shape descriptor.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use nalgebra::{Matrix3, Vector3};

const RADIAL_BINS: usize = 22;
const DESCRIPTOR_BASE: usize = 3 + 3 + 3 + 1 + RADIAL_BINS; // 32

/// Deterministic pooled statistics of a normalized cloud, padded or
/// truncated to `global_dim` entries.
///
/// Fixed layout: centroid (3), per-axis standard deviation (3), covariance
/// eigenvalues sorted descending (3), occupied-voxel fraction on an 8^3
/// grid (1), radial histogram from the centroid over [0, sqrt(3)/2] with 22
/// bins summing to 1 (22).
pub fn global_descriptor(cloud: &PointCloud, global_dim: usize) -> Result<Vec<f64>> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = cloud.len() as f64;
    let centroid = cloud.centroid()?;

    let mut cov = Matrix3::<f64>::zeros();
    for p in cloud.points() {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let variances = Vector3::new(cov[(0, 0)], cov[(1, 1)], cov[(2, 2)]);
    let mut eigen: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    eigen.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut occupied = vec![false; 512];
    for p in cloud.points() {
        let idx = |c: f64| ((c * 8.0).floor() as i64).clamp(0, 7) as usize;
        occupied[(idx(p.x) * 8 + idx(p.y)) * 8 + idx(p.z)] = true;
    }
    let occupied_frac = occupied.iter().filter(|&&o| o).count() as f64 / 512.0;

    // radial histogram over [0, half cube diagonal], overflow in the last bin
    let r_max = 3f64.sqrt() / 2.0;
    let mut hist = [0u64; RADIAL_BINS];
    for p in cloud.points() {
        let d = (p - centroid).norm();
        let bin = ((d / r_max * RADIAL_BINS as f64).floor() as usize).min(RADIAL_BINS - 1);
        hist[bin] += 1;
    }

    let mut desc = Vec::with_capacity(DESCRIPTOR_BASE.max(global_dim));
    desc.extend(centroid.iter().copied());
    desc.extend(variances.iter().map(|v| v.sqrt()));
    desc.extend(eigen.iter().copied());
    desc.push(occupied_frac);
    desc.extend(hist.iter().map(|&c| c as f64 / n));
    debug_assert_eq!(desc.len(), DESCRIPTOR_BASE);
    desc.resize(global_dim, 0.0);
    Ok(desc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::derive_rng;
    use rand::Rng;

    fn uniform_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = derive_rng(seed, "descriptor-test", 0);
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

    #[test]
    fn cube_filling_cloud_centers_near_half() {
        let cloud = uniform_cloud(61, 100_000);
        let desc = global_descriptor(&cloud, 32).unwrap();
        for a in 0..3 {
            assert!((desc[a] - 0.5).abs() < 0.02, "axis {a}: {}", desc[a]);
        }
    }

    #[test]
    fn permutation_invariant() {
        let cloud = uniform_cloud(62, 500);
        let mut pts = cloud.points().to_vec();
        pts.reverse();
        pts.swap(0, 250);
        let permuted = PointCloud::new(pts).unwrap();
        let a = global_descriptor(&cloud, 32).unwrap();
        let b = global_descriptor(&permuted, 32).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn radial_histogram_sums_to_one() {
        let cloud = uniform_cloud(63, 777);
        let desc = global_descriptor(&cloud, 32).unwrap();
        let sum: f64 = desc[10..32].iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_sorted_descending_and_finite() {
        let cloud = uniform_cloud(64, 400);
        let desc = global_descriptor(&cloud, 32).unwrap();
        assert!(desc[6] >= desc[7] && desc[7] >= desc[8]);
        assert!(desc.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn pads_and_truncates_to_global_dim() {
        let cloud = uniform_cloud(65, 64);
        let long = global_descriptor(&cloud, 48).unwrap();
        assert_eq!(long.len(), 48);
        assert!(long[32..].iter().all(|&v| v == 0.0));
        let short = global_descriptor(&cloud, 16).unwrap();
        assert_eq!(short.len(), 16);
        assert_eq!(&long[..16], short.as_slice());
    }

    #[test]
    fn empty_cloud_errors() {
        let empty = PointCloud::new(vec![]).unwrap();
        assert!(global_descriptor(&empty, 32).is_err());
    }
}
