//! Synthetic shape families standing in for scanned object categories.

use crate::error::{Error, Result};
use crate::geometry::{normalize_cloud, PointCloud};
use crate::util::derive_rng;
use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeCategory {
    /// Bottle/vase-like surface of revolution about z.
    Revolution,
    /// Shallow disc.
    Plate,
    /// Axis-aligned cuboid surface.
    Box,
    /// Superellipsoid with seeded exponents.
    Superellipsoid,
}

impl ShapeCategory {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeCategory::Revolution => "revolution",
            ShapeCategory::Plate => "plate",
            ShapeCategory::Box => "box",
            ShapeCategory::Superellipsoid => "superellipsoid",
        }
    }
}

/// Per-category surface parameters. Ranges are enforced by `validate`; the
/// seeded constructor only draws inside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShapeProfile {
    /// radius(h) = base + bulge*sin(pi h) + ripple*sin(2 pi h + phase),
    /// h in [0,1]; must stay >= 0.02 everywhere. Height is the z extent.
    Revolution {
        base_radius: f64,
        bulge: f64,
        ripple: f64,
        ripple_phase: f64,
        height: f64,
    },
    /// Disc of the given radius and thickness (thickness <= 0.15 radius).
    Plate { radius: f64, thickness: f64 },
    /// Half extents per axis.
    Box { half_extents: [f64; 3] },
    /// Half extents plus the two shape exponents in [0.4, 1.6].
    Superellipsoid {
        half_extents: [f64; 3],
        e_ns: f64,
        e_ew: f64,
    },
}

impl ShapeProfile {
    /// Draw documented-range parameters for a category.
    pub fn sample(category: ShapeCategory, rng: &mut impl Rng) -> Self {
        match category {
            ShapeCategory::Revolution => ShapeProfile::Revolution {
                base_radius: 0.25 + 0.2 * rng.random::<f64>(),
                bulge: -0.1 + 0.3 * rng.random::<f64>(),
                ripple: 0.08 * rng.random::<f64>(),
                ripple_phase: std::f64::consts::TAU * rng.random::<f64>(),
                height: 0.8 + 0.6 * rng.random::<f64>(),
            },
            ShapeCategory::Plate => {
                let radius = 0.4 + 0.3 * rng.random::<f64>();
                ShapeProfile::Plate {
                    radius,
                    thickness: radius * (0.03 + 0.09 * rng.random::<f64>()),
                }
            }
            ShapeCategory::Box => ShapeProfile::Box {
                half_extents: [
                    0.2 + 0.3 * rng.random::<f64>(),
                    0.2 + 0.3 * rng.random::<f64>(),
                    0.15 + 0.35 * rng.random::<f64>(),
                ],
            },
            ShapeCategory::Superellipsoid => ShapeProfile::Superellipsoid {
                half_extents: [
                    0.25 + 0.25 * rng.random::<f64>(),
                    0.25 + 0.25 * rng.random::<f64>(),
                    0.25 + 0.25 * rng.random::<f64>(),
                ],
                e_ns: 0.4 + 1.2 * rng.random::<f64>(),
                e_ew: 0.4 + 1.2 * rng.random::<f64>(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShapeSpec(msg));
        match self {
            ShapeProfile::Revolution {
                base_radius,
                bulge,
                ripple,
                height,
                ..
            } => {
                // conservative lower bound on radius(h)
                let min_radius = base_radius + bulge.min(0.0) - ripple.abs();
                if min_radius < 0.02 {
                    return bad(format!("revolution radius can reach {min_radius}"));
                }
                if !(*height > 0.1) {
                    return bad(format!("revolution height {height}"));
                }
            }
            ShapeProfile::Plate { radius, thickness } => {
                if !(*radius > 0.05) {
                    return bad(format!("plate radius {radius}"));
                }
                if !(*thickness > 0.0) || *thickness > 0.15 * radius {
                    return bad(format!(
                        "plate thickness {thickness} outside (0, 0.15*radius]"
                    ));
                }
            }
            ShapeProfile::Box { half_extents } => {
                if half_extents.iter().any(|&e| e < 0.05) {
                    return bad(format!("box half extents {half_extents:?}"));
                }
            }
            ShapeProfile::Superellipsoid {
                half_extents,
                e_ns,
                e_ew,
            } => {
                if half_extents.iter().any(|&e| e < 0.05) {
                    return bad(format!("superellipsoid half extents {half_extents:?}"));
                }
                if !(0.2..=2.0).contains(e_ns) || !(0.2..=2.0).contains(e_ew) {
                    return bad(format!("superellipsoid exponents {e_ns}, {e_ew}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub category: ShapeCategory,
    pub profile: ShapeProfile,
    pub n_pts: usize,
    pub seed: u64,
}

impl ShapeSpec {
    /// Seeded spec with profile parameters drawn from the same seed.
    pub fn seeded(category: ShapeCategory, n_pts: usize, seed: u64) -> Self {
        let mut rng = derive_rng(seed, "shape-profile", 0);
        Self {
            category,
            profile: ShapeProfile::sample(category, &mut rng),
            n_pts,
            seed,
        }
    }
}

/// Sample `n_pts` surface points and normalize them into the unit cube.
/// Deterministic per spec (profile + seed).
pub fn gen_shape(spec: &ShapeSpec) -> Result<PointCloud> {
    if spec.n_pts < 256 {
        return Err(Error::InvalidShapeSpec(format!(
            "n_pts {} below 256",
            spec.n_pts
        )));
    }
    spec.profile.validate()?;
    let mut rng = derive_rng(spec.seed, "shape-sample", 0);
    let mut points = Vec::with_capacity(spec.n_pts);
    while points.len() < spec.n_pts {
        points.push(sample_surface_point(&spec.profile, &mut rng));
    }
    let cloud = PointCloud::new(points)?;
    let (normalized, _) = normalize_cloud(&cloud)?;
    Ok(normalized)
}

fn sample_surface_point(profile: &ShapeProfile, rng: &mut impl Rng) -> Vector3<f64> {
    match profile {
        ShapeProfile::Revolution {
            base_radius,
            bulge,
            ripple,
            ripple_phase,
            height,
        } => {
            let radius_at = |h: f64| {
                base_radius
                    + bulge * (std::f64::consts::PI * h).sin()
                    + ripple * (std::f64::consts::TAU * h + ripple_phase).sin()
            };
            // split samples between the lateral surface and the two caps in
            // rough proportion to their areas
            let r0 = radius_at(0.0);
            let r1 = radius_at(1.0);
            let lateral_area = std::f64::consts::TAU * base_radius * height;
            let cap_area = std::f64::consts::PI * (r0 * r0 + r1 * r1);
            let u: f64 = rng.random();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            if u < cap_area / (cap_area + lateral_area) {
                let (h, r_max) = if rng.random::<bool>() { (0.0, r0) } else { (1.0, r1) };
                let r = r_max * rng.random::<f64>().sqrt();
                Vector3::new(r * theta.cos(), r * theta.sin(), h * height)
            } else {
                let h: f64 = rng.random();
                let r = radius_at(h);
                Vector3::new(r * theta.cos(), r * theta.sin(), h * height)
            }
        }
        ShapeProfile::Plate { radius, thickness } => {
            let disc_area = std::f64::consts::PI * radius * radius;
            let rim_area = std::f64::consts::TAU * radius * thickness;
            let total = 2.0 * disc_area + rim_area;
            let u: f64 = rng.random::<f64>() * total;
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            if u < rim_area {
                Vector3::new(
                    radius * theta.cos(),
                    radius * theta.sin(),
                    thickness * rng.random::<f64>(),
                )
            } else {
                let r = radius * rng.random::<f64>().sqrt();
                let z = if u < rim_area + disc_area { 0.0 } else { *thickness };
                Vector3::new(r * theta.cos(), r * theta.sin(), z)
            }
        }
        ShapeProfile::Box { half_extents } => {
            let [a, b, c] = *half_extents;
            let areas = [b * c, a * c, a * b]; // yz, xz, xy face pairs
            let total: f64 = 2.0 * areas.iter().sum::<f64>();
            let mut u = rng.random::<f64>() * total;
            let mut axis = 0;
            for (i, &area) in areas.iter().enumerate() {
                if u < 2.0 * area {
                    axis = i;
                    break;
                }
                u -= 2.0 * area;
            }
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let mut p = Vector3::new(
                a * (2.0 * rng.random::<f64>() - 1.0),
                b * (2.0 * rng.random::<f64>() - 1.0),
                c * (2.0 * rng.random::<f64>() - 1.0),
            );
            p[axis] = side * half_extents[axis];
            p
        }
        ShapeProfile::Superellipsoid {
            half_extents,
            e_ns,
            e_ew,
        } => {
            let eta = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
            let omega = std::f64::consts::TAU * (rng.random::<f64>() - 0.5);
            let spow = |v: f64, e: f64| v.signum() * v.abs().powf(e);
            Vector3::new(
                half_extents[0] * spow(eta.cos(), *e_ns) * spow(omega.cos(), *e_ew),
                half_extents[1] * spow(eta.cos(), *e_ns) * spow(omega.sin(), *e_ew),
                half_extents[2] * spow(eta.sin(), *e_ns),
            )
        }
    }
}
