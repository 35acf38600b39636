//! Planar fracturing of a complete cloud into pieces.

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, RigidPose};
use crate::util::derive_rng;
use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{StandardNormal, UnitSphere};

const MAX_ATTEMPTS: usize = 20;

/// Cut the cloud with `n_pieces - 1` random planes anchored near the
/// centroid; the sign-vector cells become the pieces (empty cells dropped,
/// so the piece count can differ from `n_pieces`). Each piece is
/// re-centered to its own canonical frame; the returned ground-truth pose
/// restores it. The pieces partition the input: no point is lost or
/// duplicated.
pub fn fracture(
    complete: &PointCloud,
    n_pieces: usize,
    seed: u64,
) -> Result<(Vec<PointCloud>, Vec<RigidPose>)> {
    if n_pieces < 2 {
        return Err(Error::InvalidShapeSpec(format!(
            "n_pieces {n_pieces} below 2"
        )));
    }
    if complete.is_empty() {
        return Err(Error::EmptyInput);
    }
    let centroid = complete.centroid()?;
    let mut rng = derive_rng(seed, "fracture-planes", 0);
    for _ in 0..MAX_ATTEMPTS {
        let planes: Vec<(Vector3<f64>, Vector3<f64>)> = (0..n_pieces - 1)
            .map(|_| {
                let normal: [f64; 3] = rng.sample(UnitSphere);
                let offset = Vector3::new(
                    0.08 * rng.sample::<f64, _>(StandardNormal),
                    0.08 * rng.sample::<f64, _>(StandardNormal),
                    0.08 * rng.sample::<f64, _>(StandardNormal),
                );
                (centroid + offset, Vector3::from(normal))
            })
            .collect();
        // group points by their side-of-plane bitmask
        let mut cells: Vec<(u32, Vec<usize>)> = Vec::new();
        for (i, p) in complete.points().iter().enumerate() {
            let mut mask = 0u32;
            for (j, (anchor, normal)) in planes.iter().enumerate() {
                if (p - anchor).dot(normal) >= 0.0 {
                    mask |= 1 << j;
                }
            }
            match cells.binary_search_by_key(&mask, |&(m, _)| m) {
                Ok(k) => cells[k].1.push(i),
                Err(k) => cells.insert(k, (mask, vec![i])),
            }
        }
        if cells.len() < 2 {
            continue;
        }
        let mut pieces = Vec::with_capacity(cells.len());
        let mut poses = Vec::with_capacity(cells.len());
        for (_, indices) in &cells {
            let members: Vec<Vector3<f64>> =
                indices.iter().map(|&i| complete.points()[i]).collect();
            let center = members.iter().sum::<Vector3<f64>>() / members.len() as f64;
            let canonical: Vec<Vector3<f64>> = members.iter().map(|p| p - center).collect();
            pieces.push(PointCloud::new(canonical)?);
            poses.push(RigidPose::from_translation(center));
        }
        return Ok((pieces, poses));
    }
    Err(Error::FractureFailed {
        attempts: MAX_ATTEMPTS,
    })
}
