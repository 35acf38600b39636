//! Z-buffered point splatting and ray-aligned unprojection.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::util::thread_pool;
use crate::view::{color_to_pos, pos_to_color, CameraModel, ColorCode};
use nalgebra::Vector3;
use rayon::prelude::*;

/// A rendered view: color image, depth, and coverage mask, all row-major.
///
/// `mask[i]` is true exactly when `depth[i]` is finite; uncovered pixels
/// carry the black background.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    width: u32,
    height: u32,
    color: Vec<Vector3<f64>>,
    depth: Vec<f64>,
    mask: Vec<bool>,
}

impl RenderedView {
    pub(crate) fn new_empty(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self {
            width,
            height,
            color: vec![Vector3::zeros(); n],
            depth: vec![f64::INFINITY; n],
            mask: vec![false; n],
        }
    }

    /// Assemble a view from raw planes, checking the mask/depth/background
    /// invariants. Used by the PNG importer.
    pub fn from_planes(
        width: u32,
        height: u32,
        color: Vec<Vector3<f64>>,
        depth: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let n = (width * height) as usize;
        if color.len() != n || depth.len() != n || mask.len() != n {
            return Err(Error::MalformedFile("view plane size mismatch".into()));
        }
        for i in 0..n {
            if mask[i] != depth[i].is_finite() {
                return Err(Error::MalformedFile(
                    "mask and depth finiteness disagree".into(),
                ));
            }
            if mask[i] && !(depth[i] > 0.0) {
                return Err(Error::MalformedFile("non-positive depth".into()));
            }
            if !mask[i] && color[i] != Vector3::zeros() {
                return Err(Error::MalformedFile(
                    "uncovered pixel with non-background color".into(),
                ));
            }
            if mask[i] && !color[i].iter().all(|c| (0.0..=1.0).contains(c)) {
                return Err(Error::MalformedFile("color outside [0,1]".into()));
            }
        }
        Ok(Self {
            width,
            height,
            color,
            depth,
            mask,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn mask_at(&self, x: u32, y: u32) -> bool {
        self.mask[self.index(x, y)]
    }

    pub fn color_at(&self, x: u32, y: u32) -> Vector3<f64> {
        self.color[self.index(x, y)]
    }

    pub fn depth_at(&self, x: u32, y: u32) -> f64 {
        self.depth[self.index(x, y)]
    }

    pub fn covered_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Masked pixels in row-major order.
    pub fn covered_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }
}

/// Splat a normalized cloud through a camera with a z-buffer.
///
/// Each point covers a (2*splat_px+1)^2 pixel block at its projection; the
/// nearest point wins each pixel, ties at equal depth going to the lower
/// point index. Points behind the camera are skipped; if every point is
/// behind, the render fails. Colors default to the fractional
/// position-to-color code unless the cloud already carries colors.
pub fn rasterize(cloud: &PointCloud, camera: &CameraModel, splat_px: u32) -> Result<RenderedView> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (width, height) = camera.resolution();
    let mut view = RenderedView::new_empty(width, height);
    let mut any_in_front = false;
    for (i, p) in cloud.points().iter().enumerate() {
        let color = match cloud.colors() {
            Some(colors) => colors[i],
            None => match pos_to_color(p, false)? {
                ColorCode::Fractional(c) => c,
                ColorCode::Quantized(_) => unreachable!(),
            },
        };
        let Some((u, v, depth)) = camera.project(p) else {
            continue;
        };
        any_in_front = true;
        // pixel i covers [i - 0.5, i + 0.5)
        let px = (u + 0.5).floor() as i64;
        let py = (v + 0.5).floor() as i64;
        let s = splat_px as i64;
        for dy in -s..=s {
            for dx in -s..=s {
                let x = px + dx;
                let y = py + dy;
                if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
                    continue;
                }
                let idx = (y as u32 * width + x as u32) as usize;
                // strict < keeps the earlier (lower-index) point on ties
                if depth < view.depth[idx] {
                    view.depth[idx] = depth;
                    view.color[idx] = color;
                    view.mask[idx] = true;
                }
            }
        }
    }
    if !any_in_front {
        return Err(Error::NothingVisible);
    }
    Ok(view)
}

/// Decode every covered pixel back to a 3D point, then project it onto the
/// ray through that pixel and the camera center (camera-pixel alignment).
pub fn unproject(view: &RenderedView, camera: &CameraModel) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let center = *camera.center();
    for (x, y) in view.covered_pixels() {
        let c = view.color_at(x, y);
        let decoded = color_to_pos(&ColorCode::Fractional(c));
        let ray = camera.pixel_ray(x, y);
        let aligned = center + (decoded - center).dot(&ray) * ray;
        points.push(aligned);
        colors.push(c);
    }
    if points.is_empty() {
        return Err(Error::EmptyView);
    }
    PointCloud::with_colors(points, colors)
}

/// Rasterize under every camera, in camera-list order.
pub fn render_views(cloud: &PointCloud, cameras: &[CameraModel], splat_px: u32) -> Result<Vec<RenderedView>> {
    thread_pool().install(|| {
        cameras
            .par_iter()
            .map(|cam| rasterize(cloud, cam, splat_px))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chamfer_distance;
    use crate::util::derive_rng;
    use crate::view::make_camera_ring;
    use rand::Rng;

    fn ring() -> Vec<CameraModel> {
        make_camera_ring(5, 2.2, 30.0, (128, 128), 45.0).unwrap()
    }

    #[test]
    fn centered_point_lands_on_principal_point() {
        let cloud = PointCloud::new(vec![Vector3::new(0.5, 0.5, 0.5)]).unwrap();
        for cam in ring() {
            let view = rasterize(&cloud, &cam, 0).unwrap();
            let (cx, cy) = cam.principal_point();
            let (px, py) = (cx.floor() as u32, cy.floor() as u32);
            assert!(view.mask_at(px, py));
            assert_eq!(view.color_at(px, py), Vector3::new(0.5, 0.5, 0.5));
            assert_eq!(view.covered_count(), 1);
        }
    }

    #[test]
    fn nearer_point_wins_the_pixel() {
        let cam = &ring()[0];
        // two points on the ray through pixel (64, 64), far one listed first
        let ray = cam.pixel_ray(64, 64);
        let near = cam.center() + 2.0 * ray;
        let far = cam.center() + 3.0 * ray;
        let cloud = PointCloud::with_colors(
            vec![far, near],
            vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)],
        )
        .unwrap();
        let view = rasterize(&cloud, cam, 0).unwrap();
        let c = view.color_at(64, 64);
        assert_eq!(c, Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn equal_depth_tie_keeps_lower_index() {
        let cam = &ring()[0];
        let p = Vector3::new(0.5, 0.5, 0.5);
        let cloud = PointCloud::with_colors(
            vec![p, p],
            vec![Vector3::new(0.25, 0.5, 0.75), Vector3::new(1.0, 1.0, 1.0)],
        )
        .unwrap();
        let view = rasterize(&cloud, cam, 1).unwrap();
        let (cx, cy) = cam.principal_point();
        let c = view.color_at(cx.floor() as u32, cy.floor() as u32);
        assert_eq!(c, Vector3::new(0.25, 0.5, 0.75));
    }

    #[test]
    fn background_pixels_are_black_and_unmasked() {
        let cloud = PointCloud::new(vec![Vector3::new(0.5, 0.5, 0.5)]).unwrap();
        let view = rasterize(&cloud, &ring()[0], 1).unwrap();
        for y in 0..view.height() {
            for x in 0..view.width() {
                if !view.mask_at(x, y) {
                    assert_eq!(view.color_at(x, y), Vector3::zeros());
                    assert!(view.depth_at(x, y).is_infinite());
                }
            }
        }
    }

    #[test]
    fn rasterize_is_permutation_invariant() {
        let mut rng = derive_rng(41, "raster-test", 0);
        let pts: Vec<Vector3<f64>> = (0..256)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                )
            })
            .collect();
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let mut reversed = pts;
        reversed.reverse();
        let cloud_rev = PointCloud::new(reversed).unwrap();
        let cam = &ring()[2];
        assert_eq!(
            rasterize(&cloud, cam, 1).unwrap(),
            rasterize(&cloud_rev, cam, 1).unwrap()
        );
    }

    #[test]
    fn all_points_behind_camera_fail() {
        // behind the +x camera: x > camera x
        let cam = &ring()[0];
        let behind = cam.center() + Vector3::new(0.5, 0.0, 0.0);
        let cloud = PointCloud::with_colors(vec![behind], vec![Vector3::zeros()]).unwrap();
        assert!(matches!(
            rasterize(&cloud, cam, 1),
            Err(Error::NothingVisible)
        ));
    }

    #[test]
    fn unprojected_points_lie_on_their_rays() {
        let mut rng = derive_rng(42, "raster-test", 1);
        let pts: Vec<Vector3<f64>> = (0..512)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                )
            })
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        let cam = &ring()[1];
        let view = rasterize(&cloud, cam, 0).unwrap();
        let out = unproject(&view, cam).unwrap();
        let mut pixels = view.covered_pixels();
        for p in out.points() {
            let (x, y) = pixels.next().unwrap();
            let ray = cam.pixel_ray(x, y);
            let rel = p - cam.center();
            assert!(rel.cross(&ray).norm() < 1e-9);
        }
    }

    #[test]
    fn point_on_ray_is_returned_unchanged() {
        let cam = &ring()[0];
        // cube center projects to the principal point; it already lies on
        // that pixel's ray only if the ray passes through it, so instead
        // construct the point ON the pixel ray directly.
        let ray = cam.pixel_ray(64, 64);
        let p = cam.center() + 2.2 * ray;
        let view = rasterize(
            &PointCloud::with_colors(vec![p], vec![p]).unwrap(),
            cam,
            0,
        )
        .unwrap();
        let out = unproject(&view, cam).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out.points()[0] - p).norm() < 1e-12);
    }

    #[test]
    fn multi_view_round_trip_is_tight() {
        let mut rng = derive_rng(43, "raster-test", 2);
        let pts: Vec<Vector3<f64>> = (0..2048)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                )
            })
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        let cameras = ring();
        let views = render_views(&cloud, &cameras, 0).unwrap();
        assert_eq!(views.len(), cameras.len());
        let parts: Vec<PointCloud> = views
            .iter()
            .zip(&cameras)
            .map(|(v, c)| unproject(v, c).unwrap())
            .collect();
        let union = PointCloud::union(parts.iter());
        let cd = chamfer_distance(&cloud, &union).unwrap();
        assert!(cd < 1e-4, "round-trip chamfer distance {cd}");
    }

    #[test]
    fn empty_view_errors_on_unproject() {
        let view = RenderedView::new_empty(32, 32);
        let cam = &make_camera_ring(1, 2.2, 0.0, (32, 32), 45.0).unwrap()[0];
        assert!(matches!(unproject(&view, cam), Err(Error::EmptyView)));
    }
}
