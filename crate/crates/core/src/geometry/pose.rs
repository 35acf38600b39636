//! Rigid 6-DoF poses.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use nalgebra::{Matrix3, Unit, Vector3};

const ORTHO_TOL: f64 = 1e-9;

/// A rotation + translation, applied as `p -> R * p + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    /// Validates that `rotation` is orthonormal with determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let max_dev = (gram - Matrix3::identity()).abs().max();
        if max_dev >= ORTHO_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation not orthonormal (max |R^T R - I| = {max_dev:.3e})"
            )));
        }
        let det_dev = (rotation.determinant() - 1.0).abs();
        if det_dev >= ORTHO_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation determinant off by {det_dev:.3e}"
            )));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle_rad: f64) -> Result<Self> {
        let axis = Unit::try_new(*axis, 1e-12)
            .ok_or_else(|| Error::InvalidPose("zero rotation axis".into()))?;
        let rotation = nalgebra::Rotation3::from_axis_angle(&axis, angle_rad);
        Self::new(rotation.into_inner(), Vector3::zeros())
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self.then(after)` applies `self` first: result(p) = after(self(p)).
    pub fn then(&self, after: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: after.rotation * self.rotation,
            translation: after.rotation * self.translation + after.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Transform every point, keeping colors.
pub fn apply_pose(cloud: &PointCloud, pose: &RigidPose) -> PointCloud {
    let points = cloud.points().iter().map(|p| pose.apply_point(p)).collect();
    match cloud.colors() {
        Some(colors) => PointCloud::with_colors(points, colors.to_vec())
            .expect("pose application preserves cloud validity"),
        None => PointCloud::new(points).expect("pose application preserves cloud validity"),
    }
}
