//! Perspective views: the tight-FOV solver for a partition, projection into
//! a view, and the resampling warps between perspective images and the
//! equirectangular domain.
//!
//! A view is a pinhole camera at the origin with +z up. Its image plane sits
//! at unit distance along the looking direction `M`, spanned by `Left` and
//! `Up`; the lower-left image corner is `M + tan(FOVx/2)·Left −
//! tan(FOVy/2)·Up`, and the other corners follow counter-clockwise.

use crate::error::{Error, Result};
use crate::grid::{EquirectGrid, Raster, Sample};
use crate::partition::Partition;
use crate::spherical::{dir_from_spherical, spherical_from_dir, SphericalDirection, Vec3};
use rayon::prelude::*;

/// A pinhole view at the origin, looking at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveView {
    pub center: SphericalDirection,
    pub fov_x_deg: f64,
    pub fov_y_deg: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal camera frame of a view: looking direction, image left, image up.
#[derive(Debug, Clone, Copy)]
pub struct ViewAxes {
    pub m: Vec3,
    pub left: Vec3,
    pub up: Vec3,
}

/// Image-plane position of a projected direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Coordinates on the unit-distance image plane: `u` along `Left`,
    /// `v` along `Up`.
    Plane { u: f64, v: f64 },
    /// The direction points away from the view (`d·M ≤ 0`).
    Behind,
}

impl PerspectiveView {
    pub fn new(
        center: SphericalDirection,
        fov_x_deg: f64,
        fov_y_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        for (name, fov) in [("fov_x", fov_x_deg), ("fov_y", fov_y_deg)] {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(Error::Geometry(format!("{name} = {fov} outside (0, 180)")));
            }
        }
        if width == 0 || height == 0 {
            return Err(Error::Geometry("view raster dimensions must be positive".into()));
        }
        Ok(Self {
            center,
            fov_x_deg,
            fov_y_deg,
            width,
            height,
        })
    }

    pub fn tan_half_fov_x(&self) -> f64 {
        (self.fov_x_deg * 0.5).to_radians().tan()
    }

    pub fn tan_half_fov_y(&self) -> f64 {
        (self.fov_y_deg * 0.5).to_radians().tan()
    }

    /// The derived `M`/`Left`/`Up` frame. For center azimuth 0 and tilt `Θ`
    /// above the equator this is `(cosΘ, 0, sinΘ)`, `(0, 1, 0)`,
    /// `(−sinΘ, 0, cosΘ)`.
    pub fn axes(&self) -> ViewAxes {
        let az = self.center.azimuth_deg().to_radians();
        let zen = self.center.zenith_deg().to_radians();
        let (sin_az, cos_az) = az.sin_cos();
        let (sin_zen, cos_zen) = zen.sin_cos();
        ViewAxes {
            m: Vec3::new(sin_zen * cos_az, sin_zen * sin_az, cos_zen),
            left: Vec3::new(-sin_az, cos_az, 0.0),
            up: Vec3::new(-cos_zen * cos_az, -cos_zen * sin_az, sin_zen),
        }
    }

    /// Image-plane coordinates of the center of pixel `(px, py)`.
    ///
    /// The top-left pixel is up-left: `u` decreases left-to-right,
    /// `v` decreases top-to-bottom.
    pub fn pixel_plane_coords(&self, px: usize, py: usize) -> (f64, f64) {
        let u = self.tan_half_fov_x() * (1.0 - 2.0 * (px as f64 + 0.5) / self.width as f64);
        let v = self.tan_half_fov_y() * (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64);
        (u, v)
    }

    /// World direction through the center of pixel `(px, py)` (not unit length).
    pub fn pixel_direction(&self, px: usize, py: usize) -> Vec3 {
        let (u, v) = self.pixel_plane_coords(px, py);
        let ax = self.axes();
        ax.m.add(&ax.left.scale(u)).add(&ax.up.scale(v))
    }

    /// Continuous pixel coordinates of an image-plane position.
    pub fn plane_to_pixel(&self, u: f64, v: f64) -> (f64, f64) {
        let px = (1.0 - u / self.tan_half_fov_x()) * self.width as f64 * 0.5 - 0.5;
        let py = (1.0 - v / self.tan_half_fov_y()) * self.height as f64 * 0.5 - 0.5;
        (px, py)
    }
}

/// Projects a unit direction onto a view's image plane.
pub fn project_dir_to_view(view: &PerspectiveView, d: &Vec3) -> Projection {
    let ax = view.axes();
    let w = d.dot(&ax.m);
    if w <= 0.0 {
        return Projection::Behind;
    }
    Projection::Plane {
        u: d.dot(&ax.left) / w,
        v: d.dot(&ax.up) / w,
    }
}

/// Whether a projected direction lands inside the frustum, with `margin`
/// slack in image-plane units.
pub fn in_frustum(view: &PerspectiveView, proj: Projection, margin: f64) -> bool {
    match proj {
        Projection::Behind => false,
        Projection::Plane { u, v } => {
            u.abs() <= view.tan_half_fov_x() + margin && v.abs() <= view.tan_half_fov_y() + margin
        }
    }
}

/// Solves the perspective view designated to cover a partition.
///
/// The view is centered at the partition's angular center. For a tilt-up
/// view the vertical FOV is chosen so the upper image edge passes through
/// the point at the partition's top zenith and half-span azimuth offset;
/// the horizontal FOV then places the lower image corner's azimuth at the
/// same offset. Tilt-down views mirror the construction about the equator,
/// and equator-centered views reduce to the symmetric case.
pub fn solve_view_for_partition(
    p: &Partition,
    width: usize,
    height: usize,
) -> Result<PerspectiveView> {
    let span = p.azimuth_span();
    if !(span > 0.0) || span > 180.0 {
        return Err(Error::Geometry(format!(
            "partition azimuth span {span}° not in (0, 180]"
        )));
    }
    let half_span = 0.5 * span;
    if half_span >= 90.0 {
        return Err(Error::Geometry(
            "required horizontal FOV would reach 180°".into(),
        ));
    }

    let center_zen = p.center_zenith();
    // Mirror tilt-down partitions about the equator; FOVs are unchanged.
    let (top_zen, bottom_zen) = if center_zen <= 90.0 {
        (p.theta0, p.theta1)
    } else {
        (180.0 - p.theta1, 180.0 - p.theta0)
    };
    let view_zen = 0.5 * (top_zen + bottom_zen);

    let (fov_x, fov_y) = solve_tilt_up_fovs(half_span, top_zen, view_zen)?;
    let _ = bottom_zen;
    PerspectiveView::new(
        SphericalDirection::new(p.center_azimuth(), center_zen)?,
        fov_x,
        fov_y,
        width,
        height,
    )
}

/// FOV solve for a view at azimuth 0 tilted up, with the constraining
/// partition corner at `(half_span, top_zen)`.
fn solve_tilt_up_fovs(half_span: f64, top_zen: f64, view_zen: f64) -> Result<(f64, f64)> {
    let tv = view_zen.to_radians();
    let (sin_tv, cos_tv) = tv.sin_cos();

    // c: the partition's top corner direction, at azimuth offset half_span.
    let dphi = half_span.to_radians();
    let t0 = top_zen.to_radians();
    let cx = t0.sin() * dphi.cos();
    let cz = t0.cos();

    let c_dot_m = cx * sin_tv + cz * cos_tv;
    if c_dot_m <= 1e-12 {
        return Err(Error::Geometry(
            "required vertical FOV would reach 180°".into(),
        ));
    }
    // Upper image edge (v = tan(FOVy/2)) passes through c.
    let g = (-cx * cos_tv + cz * sin_tv) / c_dot_m;
    if g <= 0.0 {
        return Err(Error::Geometry(format!(
            "no upward vertical FOV solves top zenith {top_zen}° from view zenith {view_zen}°"
        )));
    }

    // Lower image corner c0 = M + h·Left − g·Up; its azimuth equals half_span.
    let h = dphi.tan() * (sin_tv + g * cos_tv);
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::Geometry(
            "required horizontal FOV would reach 180°".into(),
        ));
    }
    Ok((2.0 * h.atan().to_degrees(), 2.0 * g.atan().to_degrees()))
}

/// Renders a perspective view of an equirectangular grid by bilinear
/// sampling with horizontal wrap. Invalid source pixels propagate.
///
/// Errors when the view's frustum touches rows the source does not cover.
pub fn render_view(src: &EquirectGrid, view: &PerspectiveView) -> Result<Raster> {
    let mut out = Raster::new(view.width, view.height);
    let width = view.width;
    let ax = view.axes();
    let thx = view.tan_half_fov_x();
    let thy = view.tan_half_fov_y();

    let rows: Vec<Result<Vec<Option<f64>>>> = (0..view.height)
        .into_par_iter()
        .map(|py| {
            let v = thy * (1.0 - 2.0 * (py as f64 + 0.5) / view.height as f64);
            let mut row = Vec::with_capacity(width);
            let mut missing: Option<(usize, usize)> = None;
            for px in 0..width {
                let u = thx * (1.0 - 2.0 * (px as f64 + 0.5) / width as f64);
                let d = ax.m.add(&ax.left.scale(u)).add(&ax.up.scale(v));
                let s = spherical_from_dir(d).expect("pixel direction is nonzero");
                match src.sample_bilinear(s.azimuth_deg(), s.zenith_deg()) {
                    Sample::Value(val) => row.push(Some(val)),
                    Sample::Invalid => row.push(None),
                    Sample::OutOfBand {
                        first_row,
                        last_row,
                    } => {
                        let m = missing.get_or_insert((first_row, last_row));
                        m.0 = m.0.min(first_row);
                        m.1 = m.1.max(last_row);
                        row.push(None);
                    }
                }
            }
            match missing {
                Some((first, last)) => Err(Error::MissingRows { first, last }),
                None => Ok(row),
            }
        })
        .collect();

    let mut missing: Option<(usize, usize)> = None;
    for (py, row) in rows.into_iter().enumerate() {
        match row {
            Ok(vals) => {
                for (px, val) in vals.into_iter().enumerate() {
                    match val {
                        Some(v) => out.set(px, py, v),
                        None => out.set_invalid(px, py),
                    }
                }
            }
            Err(Error::MissingRows { first, last }) => {
                let m = missing.get_or_insert((first, last));
                m.0 = m.0.min(first);
                m.1 = m.1.max(last);
            }
            Err(e) => return Err(e),
        }
    }
    if let Some((first, last)) = missing {
        return Err(Error::MissingRows { first, last });
    }
    Ok(out)
}

/// Warps a perspective raster onto the padded pixel rectangle of `region`
/// in a `grid_w`×`grid_h` equirectangular canvas.
///
/// Each covered equirectangular pixel's direction is projected into the
/// view and sampled bilinearly. With `z_to_range` set, sampled values are
/// multiplied by `sqrt(1 + u² + v²)`, converting planar depth along the
/// view axis into range along the ray.
#[allow(clippy::too_many_arguments)]
pub fn warp_view_to_equirect(
    persp: &Raster,
    view: &PerspectiveView,
    region: &Partition,
    grid_w: usize,
    grid_h: usize,
    pad_x: usize,
    pad_y: usize,
    z_to_range: bool,
) -> Result<EquirectGrid> {
    let rect = crate::partition::padded_pixel_rect(region, grid_w, grid_h, pad_x, pad_y);
    let mut out = EquirectGrid::new_band(grid_w, grid_h, rect.row_start, rect.row_end);
    let thx = view.tan_half_fov_x();
    let thy = view.tan_half_fov_y();
    // Pixel centers sit half a pixel inside the solved (boundary-touching)
    // frustum; reject anything beyond rounding slack.
    let margin = 1e-9 * (1.0 + thx.max(thy));

    for row in rect.row_start..rect.row_end {
        let zen = out.zenith_of_row(row);
        for col in rect.cols() {
            let az = out.azimuth_of_col(col);
            let d = dir_from_spherical(SphericalDirection::new(az, zen)?);
            let (u, v) = match project_dir_to_view(view, &d) {
                Projection::Plane { u, v }
                    if u.abs() <= thx + margin && v.abs() <= thy + margin =>
                {
                    (u, v)
                }
                _ => return Err(Error::FrustumEscape { col, row }),
            };
            let (px, py) = view.plane_to_pixel(u, v);
            match persp.sample_bilinear_clamped(px, py) {
                Some(val) => {
                    let factor = if z_to_range {
                        (1.0 + u * u + v * v).sqrt()
                    } else {
                        1.0
                    };
                    out.set(col, row, val * factor);
                }
                None => out.set_invalid(col, row),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::padded_pixel_rect;

    fn view_at(az: f64, zen: f64, fx: f64, fy: f64) -> PerspectiveView {
        PerspectiveView::new(SphericalDirection::new(az, zen).unwrap(), fx, fy, 64, 64).unwrap()
    }

    fn solve(p0: f64, p1: f64, t0: f64, t1: f64) -> PerspectiveView {
        let p = Partition::new(p0, p1, t0, t1).unwrap();
        solve_view_for_partition(&p, 64, 64).unwrap()
    }

    /// Samples the partition boundary every `step` degrees.
    fn boundary_dirs(p: &Partition, step: f64) -> Vec<Vec3> {
        let mut dirs = Vec::new();
        let n_az = (p.azimuth_span() / step).round() as usize;
        let n_zen = (p.zenith_span() / step).round() as usize;
        for k in 0..=n_az {
            let az = p.phi0 + k as f64 * step;
            for zen in [p.theta0, p.theta1] {
                dirs.push(dir_from_spherical(
                    SphericalDirection::new(az, zen).unwrap(),
                ));
            }
        }
        for k in 0..=n_zen {
            let zen = p.theta0 + k as f64 * step;
            for az in [p.phi0, p.phi1] {
                dirs.push(dir_from_spherical(
                    SphericalDirection::new(az, zen).unwrap(),
                ));
            }
        }
        dirs
    }

    fn covers(view: &PerspectiveView, p: &Partition, step: f64, margin: f64) -> bool {
        boundary_dirs(p, step)
            .iter()
            .all(|d| in_frustum(view, project_dir_to_view(view, d), margin))
    }

    #[test]
    fn axes_match_tilt_convention() {
        // Tilt Θ = 20° above the equator at azimuth 0.
        let v = view_at(0.0, 70.0, 80.0, 60.0);
        let ax = v.axes();
        let theta = 20f64.to_radians();
        assert!((ax.m.x - theta.cos()).abs() < 1e-12);
        assert!((ax.m.z - theta.sin()).abs() < 1e-12);
        assert!((ax.left.y - 1.0).abs() < 1e-12);
        assert!((ax.up.x + theta.sin()).abs() < 1e-12);
        assert!((ax.up.z - theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn axes_are_orthonormal() {
        for (az, zen) in [(0.0, 90.0), (36.0, 42.5), (288.0, 137.5), (123.0, 7.0)] {
            let ax = view_at(az, zen, 70.0, 50.0).axes();
            for (a, b) in [(ax.m, ax.left), (ax.m, ax.up), (ax.left, ax.up)] {
                assert!(a.dot(&b).abs() < 1e-9);
            }
            for v in [ax.m, ax.left, ax.up] {
                assert!((v.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn project_center_and_behind() {
        let v = view_at(40.0, 75.0, 80.0, 60.0);
        let m = v.axes().m;
        match project_dir_to_view(&v, &m) {
            Projection::Plane { u, v } => {
                assert!(u.abs() < 1e-12 && v.abs() < 1e-12);
            }
            Projection::Behind => panic!("center projected behind"),
        }
        assert_eq!(
            project_dir_to_view(&v, &m.scale(-1.0)),
            Projection::Behind
        );
    }

    #[test]
    fn project_eq1_corner_lands_on_frustum_corner() {
        let v = view_at(0.0, 90.0, 80.0, 60.0);
        let ax = v.axes();
        let c0 = ax
            .m
            .add(&ax.left.scale(v.tan_half_fov_x()))
            .sub(&ax.up.scale(v.tan_half_fov_y()))
            .normalized()
            .unwrap();
        match project_dir_to_view(&v, &c0) {
            Projection::Plane { u, v: vv } => {
                assert!((u - 40f64.to_radians().tan()).abs() < 1e-12, "u = {u}");
                assert!((vv + 30f64.to_radians().tan()).abs() < 1e-12, "v = {vv}");
            }
            Projection::Behind => panic!("corner behind"),
        }
    }

    #[test]
    fn equator_partition_solves_exactly() {
        let v = solve(0.0, 72.0, 60.0, 120.0);
        assert_eq!(v.center.azimuth_deg(), 36.0);
        assert_eq!(v.center.zenith_deg(), 90.0);
        assert!((v.fov_x_deg - 72.0).abs() < 1e-9, "fov_x = {}", v.fov_x_deg);
        let expect_fovy =
            2.0 * (60f64.to_radians().cos() / (60f64.to_radians().sin() * 36f64.to_radians().cos()))
                .atan()
                .to_degrees();
        assert!((v.fov_y_deg - expect_fovy).abs() < 1e-9);
        assert!((v.fov_y_deg - 71.03).abs() < 0.005, "fov_y = {}", v.fov_y_deg);
    }

    #[test]
    fn tilted_partition_covers_and_touches_top_corner() {
        let p = Partition::new(0.0, 72.0, 25.0, 60.0).unwrap();
        let v = solve_view_for_partition(&p, 64, 64).unwrap();
        assert_eq!(v.center.azimuth_deg(), 36.0);
        assert_eq!(v.center.zenith_deg(), 42.5);
        assert!(covers(&v, &p, 0.1, 1e-6));

        // The upper image edge passes through the top corner: shrinking the
        // vertical FOV by 0.05° pushes that corner out of the frustum.
        let shrunk = PerspectiveView::new(v.center, v.fov_x_deg, v.fov_y_deg - 0.05, 64, 64).unwrap();
        let corner = dir_from_spherical(SphericalDirection::new(72.0, 25.0).unwrap());
        assert!(!in_frustum(&shrunk, project_dir_to_view(&shrunk, &corner), 1e-9));
        assert!(!covers(&shrunk, &p, 0.1, 1e-6));
    }

    #[test]
    fn tilt_down_mirrors_tilt_up() {
        let up = solve(0.0, 72.0, 25.0, 60.0);
        let down = solve(0.0, 72.0, 120.0, 155.0);
        assert_eq!(down.center.zenith_deg(), 137.5);
        assert!((down.fov_x_deg - up.fov_x_deg).abs() < 1e-12);
        assert!((down.fov_y_deg - up.fov_y_deg).abs() < 1e-12);
        let p = Partition::new(0.0, 72.0, 120.0, 155.0).unwrap();
        assert!(covers(&down, &p, 0.1, 1e-6));
    }

    #[test]
    fn equator_spanning_asymmetric_partition_covered() {
        let p = Partition::new(10.0, 80.0, 60.0, 130.0).unwrap();
        let v = solve_view_for_partition(&p, 64, 64).unwrap();
        assert_eq!(v.center.zenith_deg(), 95.0);
        assert!(covers(&v, &p, 0.1, 1e-6));
    }

    #[test]
    fn unsolvable_spans_rejected() {
        let p = Partition::new(0.0, 200.0, 60.0, 120.0).unwrap();
        assert!(solve_view_for_partition(&p, 64, 64).is_err());
        let p = Partition::new(0.0, 180.0, 60.0, 120.0).unwrap();
        assert!(solve_view_for_partition(&p, 64, 64).is_err());
        // The single-partition minimal grid needs a 130° vertical span at
        // 360° azimuth: rejected.
        let p = Partition::new(0.0, 360.0, 25.0, 155.0).unwrap();
        assert!(solve_view_for_partition(&p, 64, 64).is_err());
    }

    #[test]
    fn render_constant_grid() {
        let mut src = EquirectGrid::new_full(64, 32);
        for row in 0..32 {
            for col in 0..64 {
                src.set(col, row, 7.0);
            }
        }
        let v = view_at(36.0, 90.0, 60.0, 50.0);
        let img = render_view(&src, &v).unwrap();
        for py in 0..v.height {
            for px in 0..v.width {
                assert!((img.get(px, py).unwrap() - 7.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn render_azimuth_ramp_center() {
        let mut src = EquirectGrid::new_full(256, 128);
        for row in 0..128 {
            for col in 0..256 {
                src.set(col, row, src.azimuth_of_col(col));
            }
        }
        let v = PerspectiveView::new(
            SphericalDirection::new(36.0, 90.0).unwrap(),
            10.0,
            10.0,
            33,
            33,
        )
        .unwrap();
        let img = render_view(&src, &v).unwrap();
        let center = img.get(16, 16).unwrap();
        assert!((center - 36.0).abs() < 360.0 / 256.0, "center = {center}");
    }

    #[test]
    fn render_stays_within_source_bounds() {
        let mut src = EquirectGrid::new_full(32, 16);
        for row in 0..16 {
            for col in 0..32 {
                src.set(col, row, if (col / 2 + row / 2) % 2 == 0 { 1.0 } else { 5.0 });
            }
        }
        let v = view_at(120.0, 80.0, 70.0, 55.0);
        let img = render_view(&src, &v).unwrap();
        for py in 0..v.height {
            for px in 0..v.width {
                let val = img.get(px, py).unwrap();
                assert!(val > 1.0 - 1e-12 && val < 5.0 + 1e-12, "val = {val}");
            }
        }
    }

    #[test]
    fn render_reports_missing_rows() {
        let mut src = EquirectGrid::new_band(64, 32, 10, 20);
        for row in 10..20 {
            for col in 0..64 {
                src.set(col, row, 1.0);
            }
        }
        let v = view_at(0.0, 90.0, 90.0, 80.0);
        match render_view(&src, &v) {
            Err(Error::MissingRows { first, last }) => {
                assert!(first < 10 && last >= 20, "rows {first}..{last}");
            }
            other => panic!("expected missing rows, got {other:?}"),
        }
    }

    #[test]
    fn warp_constant_and_range_factor() {
        let p = Partition::new(0.0, 72.0, 60.0, 120.0).unwrap();
        // The view must be solved for the padded region it will be warped to.
        let rect = padded_pixel_rect(&p, 128, 64, 5, 2);
        let padded = crate::partition::rect_to_partition(&rect, 128, 64).unwrap();
        let v = solve_view_for_partition(&padded, 64, 64).unwrap();
        let mut persp = Raster::new(64, 64);
        for py in 0..64 {
            for px in 0..64 {
                persp.set(px, py, 3.0);
            }
        }
        let g = warp_view_to_equirect(&persp, &v, &p, 128, 64, 5, 2, false).unwrap();
        let mut n = 0;
        for row in rect.row_start..rect.row_end {
            for col in rect.cols() {
                assert!((g.get(col, row).unwrap() - 3.0).abs() < 1e-12);
                n += 1;
            }
        }
        assert_eq!(n, rect.col_count * (rect.row_end - rect.row_start));
        assert_eq!(g.count_valid(), n);

        // With the range correction a constant-1 planar image maps to the
        // secant factor; at the view center the factor is 1.
        let mut ones = Raster::new(64, 64);
        for py in 0..64 {
            for px in 0..64 {
                ones.set(px, py, 1.0);
            }
        }
        let g = warp_view_to_equirect(&ones, &v, &p, 128, 64, 0, 0, true).unwrap();
        // Pixel whose center is closest to the view center direction: the
        // secant factor there is 1 up to the sub-pixel offset.
        let col = 13usize;
        let row = 31usize;
        let val = g.get(col, row).unwrap();
        assert!((val - 1.0).abs() < 3e-3, "val = {val}");
    }

    #[test]
    fn warp_rejects_unpadded_view_on_padded_rect() {
        // A view solved for the bare partition cannot host the padded rect.
        let p = Partition::new(0.0, 72.0, 60.0, 120.0).unwrap();
        let v = solve(0.0, 72.0, 60.0, 120.0);
        let persp = Raster::new(64, 64);
        match warp_view_to_equirect(&persp, &v, &p, 2048, 1024, 5, 2, false) {
            Err(Error::FrustumEscape { .. }) => {}
            other => panic!("expected frustum escape, got {other:?}"),
        }
    }

    #[test]
    fn render_then_warp_round_trips_smooth_grid() {
        let (w, h) = (512, 256);
        let mut src = EquirectGrid::new_full(w, h);
        for row in 0..h {
            let zen = src.zenith_of_row(row).to_radians();
            for col in 0..w {
                let az = src.azimuth_of_col(col).to_radians();
                src.set(col, row, 3.0 + az.sin() * zen.sin());
            }
        }
        let p = Partition::new(0.0, 72.0, 25.0, 60.0).unwrap();
        let rect = padded_pixel_rect(&p, w, h, 5, 2);
        let padded = crate::partition::rect_to_partition(&rect, w, h).unwrap();
        let view = {
            let mut v = solve_view_for_partition(&padded, 256, 247).unwrap();
            v.width = 256;
            v.height = 247;
            v
        };
        let img = render_view(&src, &view).unwrap();
        let back = warp_view_to_equirect(&img, &view, &p, w, h, 5, 2, false).unwrap();
        let mut max_rel = 0.0f64;
        for (col, row, val) in back.iter_valid() {
            let truth = src.get(col, row).unwrap();
            max_rel = max_rel.max((val - truth).abs() / truth.abs());
        }
        assert!(max_rel < 1e-2, "max relative error {max_rel}");
    }

    /// Dense check of the observation behind the bounding construction:
    /// at equal azimuth offsets, the upper edge of the projected view stays
    /// at least as close to the view zenith as the lower edge.
    #[test]
    fn projected_edges_monotone_for_tilt_up_views() {
        for tilt in [0.0f64, 20.0, 30.0, 40.0] {
            let zen_m = 90.0 - tilt;
            let v = view_at(0.0, zen_m, 80.0, 60.0);
            let ax = v.axes();
            let h = v.tan_half_fov_x();
            let g = v.tan_half_fov_y();
            // Azimuth reach of the lower edge is bounded by its corners.
            let c0 = ax.m.add(&ax.left.scale(h)).sub(&ax.up.scale(g));
            let max_az = spherical_from_dir(c0).unwrap().azimuth_deg();
            let steps = 400;
            for k in 0..=steps {
                let az = max_az * k as f64 / steps as f64;
                let top = edge_zenith_at_azimuth(&ax, g, az, true);
                let bottom = edge_zenith_at_azimuth(&ax, g, az, false);
                let d_top = (zen_m - top).abs();
                let d_bottom = (bottom - zen_m).abs();
                assert!(
                    d_top <= d_bottom + 1e-9,
                    "tilt {tilt}, azimuth {az}: top {d_top} > bottom {d_bottom}"
                );
            }
        }
    }

    /// Zenith of the upper/lower image edge point at a given azimuth, for a
    /// view at azimuth 0. The edge point is M ± g·Up + u·Left with u solved
    /// from the azimuth.
    fn edge_zenith_at_azimuth(ax: &ViewAxes, g: f64, az_deg: f64, upper: bool) -> f64 {
        let base = if upper {
            ax.m.add(&ax.up.scale(g))
        } else {
            ax.m.sub(&ax.up.scale(g))
        };
        // base + u·Left has azimuth az: tan(az) = u / base.x (Left = +y).
        let u = base.x * az_deg.to_radians().tan();
        let p = base.add(&ax.left.scale(u));
        spherical_from_dir(p).unwrap().zenith_deg()
    }
}
