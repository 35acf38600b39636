//! Pinhole camera model and the azimuth ring used to view the unit cube.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

const ORTHO_TOL: f64 = 1e-9;
/// All rings look at the unit-cube center.
const TARGET: Vector3<f64> = Vector3::new(0.5, 0.5, 0.5);

/// Pinhole intrinsics plus a rigid world-to-camera extrinsic.
///
/// Camera coordinates: x right, y down, z forward; a world point projects
/// at `u = cx + focal * qx / qz`, `v = cy + focal * qy / qz` with
/// `q = rotation * (p - center)` and `qz > 0` in front of the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    width: u32,
    height: u32,
    focal: f64,
    cx: f64,
    cy: f64,
    /// World-to-camera rotation (rows: right, down, forward).
    rotation: Matrix3<f64>,
    /// Camera position in world coordinates.
    center: Vector3<f64>,
}

impl CameraModel {
    pub fn new(
        resolution: (u32, u32),
        focal: f64,
        principal_point: (f64, f64),
        rotation: Matrix3<f64>,
        center: Vector3<f64>,
    ) -> Result<Self> {
        let (width, height) = resolution;
        if width < 16 || height < 16 {
            return Err(Error::InvalidCamera(format!(
                "resolution {width}x{height} below 16x16"
            )));
        }
        if !(focal > 0.0) {
            return Err(Error::InvalidCamera(format!("focal {focal} not positive")));
        }
        let dev = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if dev >= ORTHO_TOL {
            return Err(Error::InvalidCamera(format!(
                "rotation not orthonormal (max dev {dev:.3e})"
            )));
        }
        Ok(Self {
            width,
            height,
            focal,
            cx: principal_point.0,
            cy: principal_point.1,
            rotation,
            center,
        })
    }

    pub fn resolution(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn center(&self) -> &Vector3<f64> {
        &self.center
    }

    /// Project a world point: `(u, v, depth)` with depth the forward
    /// camera-space coordinate. `None` when the point is not strictly in
    /// front of the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let q = self.rotation * (p - self.center);
        if q.z <= 0.0 {
            return None;
        }
        let u = self.cx + self.focal * q.x / q.z;
        let v = self.cy + self.focal * q.y / q.z;
        Some((u, v, q.z))
    }

    /// Unit world-space direction of the ray through the center of pixel
    /// (px, py). Pixel centers sit at integer coordinates: pixel i covers
    /// [i - 0.5, i + 0.5), so the principal pixel's ray is the optical axis
    /// when the principal point is integral.
    pub fn pixel_ray(&self, px: u32, py: u32) -> Vector3<f64> {
        let d_cam = Vector3::new(
            (px as f64 - self.cx) / self.focal,
            (py as f64 - self.cy) / self.focal,
            1.0,
        );
        (self.rotation.transpose() * d_cam).normalize()
    }

    /// Look-at constructor: `eye` toward `target` with +z as world up.
    pub fn look_at(
        resolution: (u32, u32),
        focal: f64,
        eye: Vector3<f64>,
        target: Vector3<f64>,
    ) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::InvalidCamera("eye coincides with target".into()));
        }
        let forward = forward.normalize();
        let up = Vector3::z();
        let right = forward.cross(&up);
        if right.norm() < 1e-9 {
            return Err(Error::InvalidCamera(
                "view direction parallel to world up".into(),
            ));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[
            right.transpose(),
            down.transpose(),
            forward.transpose(),
        ]);
        let cx = resolution.0 as f64 / 2.0;
        let cy = resolution.1 as f64 / 2.0;
        Self::new(resolution, focal, (cx, cy), rotation, eye)
    }
}

/// Parameters of the azimuth-equispaced camera ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraRingParams {
    pub count: usize,
    pub radius: f64,
    pub elevation_deg: f64,
    pub width: u32,
    pub height: u32,
    pub fov_deg: f64,
    /// Half-width in pixels of the splat each point covers.
    pub splat_px: u32,
}

impl Default for CameraRingParams {
    fn default() -> Self {
        Self {
            count: 5,
            radius: 2.2,
            elevation_deg: 30.0,
            width: 128,
            height: 128,
            fov_deg: 45.0,
            splat_px: 1,
        }
    }
}

impl CameraRingParams {
    pub fn build(&self) -> Result<Vec<CameraModel>> {
        make_camera_ring(
            self.count,
            self.radius,
            self.elevation_deg,
            (self.width, self.height),
            self.fov_deg,
        )
    }
}

/// `m` cameras at equal azimuth spacing on a ring of the given horizontal
/// radius, raised by `radius * tan(elevation)`, all looking at the
/// unit-cube center with +z up. The focal length is derived from the
/// horizontal field of view. Errors if any unit-cube corner falls outside
/// some camera's image.
pub fn make_camera_ring(
    m: usize,
    radius: f64,
    elevation_deg: f64,
    resolution: (u32, u32),
    fov_deg: f64,
) -> Result<Vec<CameraModel>> {
    if m < 1 {
        return Err(Error::InvalidCamera("camera count must be >= 1".into()));
    }
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::InvalidCamera(format!("fov {fov_deg} out of range")));
    }
    if !(-90.0..90.0).contains(&elevation_deg) {
        return Err(Error::InvalidCamera(format!(
            "elevation {elevation_deg} out of (-90, 90)"
        )));
    }
    let focal = resolution.0 as f64 / 2.0 / (fov_deg.to_radians() / 2.0).tan();
    let elev = elevation_deg.to_radians();
    let mut cameras = Vec::with_capacity(m);
    for k in 0..m {
        let azimuth = std::f64::consts::TAU * k as f64 / m as f64;
        let eye = TARGET
            + Vector3::new(
                radius * azimuth.cos(),
                radius * azimuth.sin(),
                radius * elev.tan(),
            );
        let camera = CameraModel::look_at(resolution, focal, eye, TARGET)?;
        // every corner must land on a real pixel: u in [-0.5, W - 0.5)
        for corner in cube_corners() {
            match camera.project(&corner) {
                Some((u, v, _))
                    if u >= -0.5
                        && u < resolution.0 as f64 - 0.5
                        && v >= -0.5
                        && v < resolution.1 as f64 - 0.5 => {}
                _ => return Err(Error::CubeNotInFrustum),
            }
        }
        cameras.push(camera);
    }
    Ok(cameras)
}

fn cube_corners() -> [Vector3<f64>; 8] {
    let mut corners = [Vector3::zeros(); 8];
    for (i, corner) in corners.iter_mut().enumerate() {
        *corner = Vector3::new(
            (i & 1) as f64,
            ((i >> 1) & 1) as f64,
            ((i >> 2) & 1) as f64,
        );
    }
    corners
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_camera_sits_on_plus_x_and_centers_the_cube() {
        let cams = make_camera_ring(1, 2.2, 0.0, (128, 128), 45.0).unwrap();
        let cam = &cams[0];
        assert!((cam.center() - Vector3::new(2.7, 0.5, 0.5)).norm() < 1e-12);
        // optical axis passes through the cube center
        let (u, v, depth) = cam.project(&TARGET).unwrap();
        assert!((u - 64.0).abs() < 1e-9);
        assert!((v - 64.0).abs() < 1e-9);
        assert!((depth - 2.2).abs() < 1e-12);
    }

    #[test]
    fn five_camera_ring_spaces_azimuths_equally() {
        let cams = make_camera_ring(5, 2.2, 30.0, (128, 128), 45.0).unwrap();
        assert_eq!(cams.len(), 5);
        for (k, cam) in cams.iter().enumerate() {
            let rel = cam.center() - TARGET;
            let azimuth = rel.y.atan2(rel.x).rem_euclid(std::f64::consts::TAU);
            let expected = std::f64::consts::TAU * k as f64 / 5.0;
            assert!(
                (azimuth - expected).abs() < 1e-9,
                "camera {k}: azimuth {azimuth} vs {expected}"
            );
            assert!((rel.xy().norm() - 2.2).abs() < 1e-12);
            assert!((rel.z - 2.2 * 30f64.to_radians().tan()).abs() < 1e-12);
        }
    }

    #[test]
    fn default_ring_sees_every_cube_corner() {
        let cams = CameraRingParams::default().build().unwrap();
        for cam in &cams {
            for corner in cube_corners() {
                let (u, v, depth) = cam.project(&corner).expect("corner in front");
                assert!(depth > 0.0);
                assert!((0.0..128.0).contains(&u));
                assert!((0.0..128.0).contains(&v));
            }
        }
    }

    #[test]
    fn too_small_radius_is_rejected() {
        assert!(matches!(
            make_camera_ring(3, 0.6, 30.0, (128, 128), 45.0),
            Err(Error::CubeNotInFrustum)
        ));
    }

    #[test]
    fn rotation_is_special_orthogonal() {
        let cams = make_camera_ring(4, 2.2, 30.0, (64, 64), 60.0).unwrap();
        for cam in cams {
            let r = cam.rotation();
            assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pixel_ray_matches_projection() {
        let cams = make_camera_ring(1, 2.2, 25.0, (128, 128), 45.0).unwrap();
        let cam = &cams[0];
        // A point projected to a pixel must lie close to that pixel's ray.
        let p = Vector3::new(0.3, 0.6, 0.4);
        let (u, v, _) = cam.project(&p).unwrap();
        let ray = cam.pixel_ray(u.round() as u32, v.round() as u32);
        let rel = p - cam.center();
        let off_ray = rel - rel.dot(&ray) * ray;
        // sub-pixel alignment: within one pixel's footprint at that depth
        assert!(off_ray.norm() < rel.norm() / cam.focal());
    }
}
