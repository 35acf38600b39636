//! Point-cloud container and [0,1]^3 normalization.

use crate::error::{Error, Result};
use nalgebra::Vector3;

/// An ordered list of 3D points with optional per-point RGB colors in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    colors: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    /// Build an uncolored cloud. Every coordinate must be finite.
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidCloud("non-finite coordinate".into()));
        }
        Ok(Self {
            points,
            colors: None,
        })
    }

    /// Build a colored cloud; `colors` must match `points` in length and lie
    /// in [0,1] per channel.
    pub fn with_colors(points: Vec<Vector3<f64>>, colors: Vec<Vector3<f64>>) -> Result<Self> {
        if colors.len() != points.len() {
            return Err(Error::InvalidCloud(format!(
                "{} colors for {} points",
                colors.len(),
                points.len()
            )));
        }
        if colors
            .iter()
            .any(|c| !c.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)))
        {
            return Err(Error::InvalidCloud("color outside [0,1]".into()));
        }
        let mut cloud = Self::new(points)?;
        cloud.colors = Some(colors);
        Ok(cloud)
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[Vector3<f64>]> {
        self.colors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Concatenate clouds in order. Colors are kept only when every part
    /// carries them.
    pub fn union<'a>(parts: impl IntoIterator<Item = &'a PointCloud>) -> PointCloud {
        let parts: Vec<&PointCloud> = parts.into_iter().collect();
        let points: Vec<Vector3<f64>> = parts
            .iter()
            .flat_map(|c| c.points.iter().copied())
            .collect();
        let colors = if !parts.is_empty() && parts.iter().all(|c| c.colors.is_some()) {
            Some(
                parts
                    .iter()
                    .flat_map(|c| c.colors.as_ref().unwrap().iter().copied())
                    .collect(),
            )
        } else {
            None
        };
        PointCloud { points, colors }
    }

    /// Axis-aligned bounding box as (min, max). Errors on empty clouds.
    pub fn bounds(&self) -> Result<(Vector3<f64>, Vector3<f64>)> {
        if self.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Ok((lo, hi))
    }

    /// True when every coordinate lies in [0,1].
    pub fn is_normalized(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.iter().all(|c| (0.0..=1.0).contains(c)))
    }

    pub fn centroid(&self) -> Result<Vector3<f64>> {
        if self.is_empty() {
            return Err(Error::EmptyInput);
        }
        let sum: Vector3<f64> = self.points.iter().sum();
        Ok(sum / self.points.len() as f64)
    }
}

/// The invertible map taking a cloud into [0,1]^3: `n = (p + offset) * scale`.
///
/// One uniform scale preserves the aspect ratio; the inverse is
/// `p = n / scale - offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationRecord {
    pub scale: f64,
    pub offset: Vector3<f64>,
}

impl NormalizationRecord {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            offset: Vector3::zeros(),
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (p + self.offset) * self.scale
    }

    pub fn invert_point(&self, n: &Vector3<f64>) -> Vector3<f64> {
        n / self.scale - self.offset
    }

    /// Map a whole cloud back to the original frame.
    pub fn invert_cloud(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud {
            points: cloud.points.iter().map(|p| self.invert_point(p)).collect(),
            colors: cloud.colors.clone(),
        }
    }
}

/// Scale and center a cloud into the unit cube.
///
/// The scale is uniform, `1 / (longest axis extent)`, so the aspect ratio is
/// preserved; the dominant axis maps onto [0,1] and every other axis is
/// centered at 0.5. Coordinates are clamped to [0,1] to absorb rounding at
/// the boundary.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<(PointCloud, NormalizationRecord)> {
    let (lo, hi) = cloud.bounds()?;
    let extents = hi - lo;
    let max_extent = extents.max();
    if !(max_extent > 0.0) {
        return Err(Error::DegenerateExtent);
    }
    let scale = 1.0 / max_extent;
    let offset = Vector3::from_fn(|a, _| 0.5 / scale - 0.5 * (lo[a] + hi[a]));
    let record = NormalizationRecord { scale, offset };
    let points = cloud
        .points
        .iter()
        .map(|p| record.apply_point(p).map(|c| c.clamp(0.0, 1.0)))
        .collect();
    Ok((
        PointCloud {
            points,
            colors: cloud.colors.clone(),
        },
        record,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect()).unwrap()
    }

    #[test]
    fn normalize_leaves_unit_cube_corners_unchanged() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        let (n, rec) = normalize_cloud(&c).unwrap();
        assert_eq!(n.points(), c.points());
        assert_eq!(rec.scale, 1.0);
        assert_eq!(rec.offset, Vector3::zeros());
    }

    #[test]
    fn normalize_symmetric_cube() {
        let c = cloud(&[[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]]);
        let (n, rec) = normalize_cloud(&c).unwrap();
        assert_eq!(n.points()[0], Vector3::new(0.0, 0.0, 0.0));
        assert_eq!(n.points()[1], Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(rec.scale, 0.5);
        assert_eq!(rec.offset, Vector3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn normalize_centers_non_dominant_axes() {
        let c = cloud(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let (n, _) = normalize_cloud(&c).unwrap();
        assert_eq!(n.points()[0], Vector3::new(0.0, 0.5, 0.5));
        assert_eq!(n.points()[1], Vector3::new(1.0, 0.5, 0.5));
    }

    #[test]
    fn normalize_round_trip_is_tight() {
        let mut pts = Vec::new();
        for i in 0..64 {
            let t = i as f64 * 0.37;
            pts.push([t.sin() * 3.0 + 5.0, t.cos() * 0.5 - 2.0, t * 0.1]);
        }
        let c = cloud(&pts);
        let (n, rec) = normalize_cloud(&c).unwrap();
        assert!(n.is_normalized());
        let back = rec.invert_cloud(&n);
        for (p, q) in c.points().iter().zip(back.points()) {
            for a in 0..3 {
                assert!((p[a] - q[a]).abs() < 1e-12, "axis {a}: {} vs {}", p[a], q[a]);
            }
        }
    }

    #[test]
    fn normalize_rejects_empty_and_degenerate() {
        let empty = PointCloud::new(vec![]).unwrap();
        assert!(matches!(normalize_cloud(&empty), Err(Error::EmptyInput)));
        let degenerate = cloud(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]);
        assert!(matches!(
            normalize_cloud(&degenerate),
            Err(Error::DegenerateExtent)
        ));
    }

    #[test]
    fn colors_survive_normalization() {
        let pts = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(2.0, 1.0, 1.0)];
        let cols = vec![Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.9, 0.8, 0.7)];
        let c = PointCloud::with_colors(pts, cols.clone()).unwrap();
        let (n, _) = normalize_cloud(&c).unwrap();
        assert_eq!(n.colors().unwrap(), cols.as_slice());
    }

    #[test]
    fn rejects_mismatched_colors_and_non_finite() {
        assert!(PointCloud::with_colors(
            vec![Vector3::zeros(), Vector3::zeros()],
            vec![Vector3::zeros()]
        )
        .is_err());
        assert!(PointCloud::new(vec![Vector3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn centroid_of_symmetric_pair() {
        let c = cloud(&[[0.0, 0.0, 0.0], [2.0, 4.0, 6.0]]);
        assert_relative_eq!(c.centroid().unwrap(), Vector3::new(1.0, 2.0, 3.0));
    }
}
