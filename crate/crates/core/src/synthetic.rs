//! Synthetic ground truth: an axis-aligned box room with closed-form ray
//! ranges, per-partition value distortions, and a reference-map degrader.
//!
//! Every stage of the stitching pipeline can be checked against this scene
//! analytically, with no datasets or neural estimators involved.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blending::resize_bilinear;
use crate::error::{Error, Result};
use crate::grid::EquirectGrid;
use crate::partition::{padded_pixel_rect, target_row_range, PartitionGrid};
use crate::registration::RegistrationPoly;
use crate::spherical::{dir_from_spherical, SphericalDirection};

/// An axis-aligned box of half-extents `(hx, hy, hz)` meters with the
/// camera strictly inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRoom {
    pub half_extents: (f64, f64, f64),
    pub camera: (f64, f64, f64),
}

impl BoxRoom {
    pub fn new(half_extents: (f64, f64, f64), camera: (f64, f64, f64)) -> Result<Self> {
        let (hx, hy, hz) = half_extents;
        if !(hx > 0.0 && hy > 0.0 && hz > 0.0) {
            return Err(Error::Domain(format!(
                "box half-extents {half_extents:?} must be positive"
            )));
        }
        let (cx, cy, cz) = camera;
        if cx.abs() >= hx || cy.abs() >= hy || cz.abs() >= hz {
            return Err(Error::Domain(format!(
                "camera {camera:?} outside the open box {half_extents:?}"
            )));
        }
        Ok(Self {
            half_extents,
            camera,
        })
    }

    /// Range from the camera to the first box face along a unit direction.
    pub fn range_along(&self, d: &crate::spherical::Vec3) -> f64 {
        let h = [self.half_extents.0, self.half_extents.1, self.half_extents.2];
        let c = [self.camera.0, self.camera.1, self.camera.2];
        let comps = [d.x, d.y, d.z];
        let mut t = f64::INFINITY;
        for k in 0..3 {
            if comps[k] > 1e-300 {
                t = t.min((h[k] - c[k]) / comps[k]);
            } else if comps[k] < -1e-300 {
                t = t.min((-h[k] - c[k]) / comps[k]);
            }
        }
        t
    }
}

/// Renders the room's ray-range panorama over the target-domain rows.
pub fn render_room_panorama(room: &BoxRoom, width: usize, height: usize) -> Result<EquirectGrid> {
    BoxRoom::new(room.half_extents, room.camera)?;
    let (r0, r1) = target_row_range(height);
    let mut out = EquirectGrid::new_band(width, height, r0, r1);
    for row in r0..r1 {
        let zen = out.zenith_of_row(row);
        for col in 0..width {
            let az = out.azimuth_of_col(col);
            let d = dir_from_spherical(SphericalDirection::new(az, zen)?);
            out.set(col, row, room.range_along(&d));
        }
    }
    Ok(out)
}

/// Per-partition value distortions plus seeded additive Gaussian noise.
#[derive(Debug, Clone)]
pub struct DistortionSpec {
    /// One transform per partition, applied to the ground-truth values.
    pub polys: Vec<RegistrationPoly>,
    /// Noise standard deviation in meters.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl DistortionSpec {
    /// Identity distortions for `n` partitions.
    pub fn identity(n: usize, seed: u64) -> Self {
        Self {
            polys: vec![RegistrationPoly::identity(); n],
            noise_sigma: 0.0,
            seed,
        }
    }

    /// Checks by dense evaluation that every transform is strictly
    /// increasing over the scene's depth range.
    pub fn validate(&self, depth_min: f64, depth_max: f64) -> Result<()> {
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Domain("noise sigma must be nonnegative".into()));
        }
        let steps = 1000;
        for (k, poly) in self.polys.iter().enumerate() {
            let mut prev = poly.eval(depth_min);
            for s in 1..=steps {
                let x = depth_min + (depth_max - depth_min) * s as f64 / steps as f64;
                let v = poly.eval(x);
                if !(v > prev) {
                    return Err(Error::Domain(format!(
                        "distortion {k} is not strictly increasing near depth {x:.4}"
                    )));
                }
                prev = v;
            }
        }
        Ok(())
    }
}

/// Standard normal deviate by the Box–Muller transform.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Cuts the ground truth into padded per-partition grids, applying each
/// partition's distortion and deterministic seeded noise.
pub fn make_distorted_partials(
    gt: &EquirectGrid,
    grid: &PartitionGrid,
    spec: &DistortionSpec,
    pad_x: usize,
    pad_y: usize,
) -> Result<Vec<EquirectGrid>> {
    if spec.polys.len() != grid.len() {
        return Err(Error::Domain(format!(
            "{} distortions for {} partitions",
            spec.polys.len(),
            grid.len()
        )));
    }
    let (w, h) = (gt.width(), gt.height());
    let mut partials = Vec::with_capacity(grid.len());
    for (k, p) in grid.partitions().iter().enumerate() {
        let rect = padded_pixel_rect(p, w, h, pad_x, pad_y);
        let mut rng = ChaCha8Rng::seed_from_u64(
            spec.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let mut partial = EquirectGrid::new_band(w, h, rect.row_start, rect.row_end);
        for row in rect.row_start..rect.row_end {
            for col in rect.cols() {
                let noise = if spec.noise_sigma > 0.0 {
                    spec.noise_sigma * gaussian(&mut rng)
                } else {
                    0.0
                };
                if let Some(v) = gt.get(col, row) {
                    partial.set(col, row, spec.polys[k].eval(v) + noise);
                }
            }
        }
        partials.push(partial);
    }
    Ok(partials)
}

/// Simulates a low-detail reference: box-downsample by `down_factor`,
/// box-blur with `blur_radius`, and bilinearly upsample back. The validity
/// mask of the input is preserved.
pub fn degrade_reference(
    gt: &EquirectGrid,
    down_factor: usize,
    blur_radius: usize,
) -> Result<EquirectGrid> {
    if down_factor < 1 {
        return Err(Error::Domain("down_factor must be at least 1".into()));
    }
    let coarse = if down_factor == 1 {
        gt.clone()
    } else {
        box_downsample(gt, down_factor)
    };
    let blurred = if blur_radius == 0 {
        coarse
    } else {
        box_blur(&coarse, blur_radius)
    };
    let resized = if down_factor == 1 {
        blurred
    } else {
        resize_bilinear(&blurred, gt.width(), gt.height())
    };

    let mut out = EquirectGrid::new_band(gt.width(), gt.height(), gt.row_start(), gt.row_end());
    for (col, row, original) in gt.iter_valid() {
        out.set(col, row, resized.get(col, row).unwrap_or(original));
    }
    Ok(out)
}

fn box_downsample(g: &EquirectGrid, factor: usize) -> EquirectGrid {
    let cw = g.width().div_ceil(factor);
    let ch = g.height().div_ceil(factor);
    let r0 = g.row_start() / factor;
    let r1 = g.row_end().div_ceil(factor);
    let mut out = EquirectGrid::new_band(cw, ch, r0, r1);
    for rc in r0..r1 {
        for cc in 0..cw {
            let mut sum = 0.0;
            let mut count = 0u32;
            for dr in 0..factor {
                for dc in 0..factor {
                    let (col, row) = (cc * factor + dc, rc * factor + dr);
                    if col < g.width() && row < g.height() {
                        if let Some(v) = g.get(col, row) {
                            sum += v;
                            count += 1;
                        }
                    }
                }
            }
            if count > 0 {
                out.set(cc, rc, sum / count as f64);
            }
        }
    }
    out
}

/// Valid-aware box blur with horizontal wrap and vertical clamping to the
/// stored band.
fn box_blur(g: &EquirectGrid, radius: usize) -> EquirectGrid {
    let w = g.width() as isize;
    let r = radius as isize;
    let mut out = EquirectGrid::new_band(g.width(), g.height(), g.row_start(), g.row_end());
    for row in g.rows() {
        for col in 0..g.width() {
            if !g.is_valid(col, row) {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0u32;
            for dr in -r..=r {
                let rr = row as isize + dr;
                if rr < g.row_start() as isize || rr >= g.row_end() as isize {
                    continue;
                }
                for dc in -r..=r {
                    let cc = (col as isize + dc).rem_euclid(w) as usize;
                    if let Some(v) = g.get(cc, rr as usize) {
                        sum += v;
                        count += 1;
                    }
                }
            }
            out.set(col, row, sum / count as f64);
        }
    }
    out
}
