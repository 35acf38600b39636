//! A small static kd-tree over 3D points.
//!
//! Queries return exactly the same (index, squared distance) as an
//! exhaustive scan, with ties at equal distance resolved to the lowest
//! point index; the far subtree is descended on equality so an
//! equal-distance, lower-index point is never pruned away.

use crate::error::{Error, Result};
use nalgebra::Vector3;

pub struct KdTree3 {
    pts: Vec<[f64; 3]>,
    // In-order index storage: every subtree occupies a contiguous range with
    // its median at the middle, axis cycling with depth.
    order: Vec<u32>,
}

impl KdTree3 {
    pub fn build(points: &[Vector3<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let pts: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        build_range(&pts, &mut order, 0);
        Ok(Self { pts, order })
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Nearest neighbor of `query`: (point index, squared distance).
    pub fn nearest(&self, query: &Vector3<f64>) -> (usize, f64) {
        let q = [query.x, query.y, query.z];
        let mut best = (u32::MAX, f64::INFINITY);
        self.search(&q, 0, self.order.len(), 0, &mut best);
        (best.0 as usize, best.1)
    }

    fn search(&self, q: &[f64; 3], lo: usize, hi: usize, depth: usize, best: &mut (u32, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.pts[idx as usize];
        let d2 = dist2(q, p);
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if delta * delta <= best.1 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build_range(pts: &[[f64; 3]], order: &mut [u32], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        let ca = pts[a as usize][axis];
        let cb = pts[b as usize][axis];
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    let (left, rest) = order.split_at_mut(mid);
    build_range(pts, left, depth + 1);
    build_range(pts, &mut rest[1..], depth + 1);
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
