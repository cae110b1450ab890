//! Rectangular partitions of the target domain and their pixel rectangles.
//!
//! The target domain spans all azimuths and zeniths 25°–155°, the band where
//! panorama datasets carry depth. A partition grid cuts it along azimuth and
//! zenith lines; each partition is later covered by one perspective view.

use crate::error::{Error, Result};

/// Zenith extent of the target domain, in degrees.
pub const TARGET_ZENITH_MIN: f64 = 25.0;
pub const TARGET_ZENITH_MAX: f64 = 155.0;

/// Round-half-up of a degree→pixel boundary coordinate.
fn round_boundary(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// First and one-past-last canvas rows of the target domain.
pub fn target_row_range(height: usize) -> (usize, usize) {
    let h = height as f64;
    (
        round_boundary(h * TARGET_ZENITH_MIN / 180.0) as usize,
        round_boundary(h * TARGET_ZENITH_MAX / 180.0) as usize,
    )
}

/// An axis-aligned rectangle of the equirectangular domain, in degrees.
///
/// `phi1` may exceed 360 to represent a region wrapping the azimuth seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub phi0: f64,
    pub phi1: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl Partition {
    /// Builds a partition, normalizing `phi0` into `[0, 360)` while keeping
    /// the azimuth span. Azimuth spans above 180° are accepted here and
    /// rejected by the view solver.
    pub fn new(phi0: f64, phi1: f64, theta0: f64, theta1: f64) -> Result<Self> {
        if !(phi0 < phi1) {
            return Err(Error::Domain(format!(
                "partition azimuth range [{phi0}, {phi1}] is empty"
            )));
        }
        if phi1 - phi0 > 360.0 {
            return Err(Error::Domain(format!(
                "partition azimuth span {} exceeds 360",
                phi1 - phi0
            )));
        }
        if !(theta0 < theta1) || theta0 < 0.0 || theta1 > 180.0 {
            return Err(Error::Domain(format!(
                "partition zenith range [{theta0}, {theta1}] invalid"
            )));
        }
        let start = phi0.rem_euclid(360.0);
        Ok(Self {
            phi0: start,
            phi1: start + (phi1 - phi0),
            theta0,
            theta1,
        })
    }

    pub fn azimuth_span(&self) -> f64 {
        self.phi1 - self.phi0
    }

    pub fn zenith_span(&self) -> f64 {
        self.theta1 - self.theta0
    }

    pub fn center_azimuth(&self) -> f64 {
        (0.5 * (self.phi0 + self.phi1)).rem_euclid(360.0)
    }

    pub fn center_zenith(&self) -> f64 {
        0.5 * (self.theta0 + self.theta1)
    }
}

/// A rectangle of canvas pixels; columns may wrap across the azimuth seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    /// Canvas width the columns wrap against.
    pub canvas_width: usize,
    /// First column, already wrapped into `[0, canvas_width)`.
    pub col_start: usize,
    pub col_count: usize,
    pub row_start: usize,
    /// Exclusive.
    pub row_end: usize,
}

impl PixelRect {
    /// Columns in storage order, wrapped into the canvas.
    pub fn cols(&self) -> impl Iterator<Item = usize> + '_ {
        let w = self.canvas_width;
        let start = self.col_start;
        (0..self.col_count).map(move |k| (start + k) % w)
    }

    pub fn contains_col(&self, col: usize) -> bool {
        let rel = (col + self.canvas_width - self.col_start) % self.canvas_width;
        rel < self.col_count
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        row >= self.row_start && row < self.row_end && self.contains_col(col)
    }
}

/// Pixel rectangle of a partition on a W×H canvas, dilated by
/// `(pad_x, pad_y)` and clipped vertically to the target-domain rows.
///
/// Partition borders round half-up to pixel boundaries, so partitions that
/// share a cut share a boundary and the unpadded rectangles tile exactly.
pub fn padded_pixel_rect(
    p: &Partition,
    grid_w: usize,
    grid_h: usize,
    pad_x: usize,
    pad_y: usize,
) -> PixelRect {
    assert!(grid_w > 0 && grid_h > 0, "grid dimensions must be positive");
    let w = grid_w as f64;
    let h = grid_h as f64;

    let c0 = round_boundary(w * p.phi0 / 360.0) - pad_x as i64;
    let c1 = round_boundary(w * p.phi1 / 360.0) + pad_x as i64;
    let col_count = ((c1 - c0) as usize).min(grid_w);

    let (band_r0, band_r1) = target_row_range(grid_h);
    let r0 = round_boundary(h * p.theta0 / 180.0) - pad_y as i64;
    let r1 = round_boundary(h * p.theta1 / 180.0) + pad_y as i64;
    let row_start = r0.max(band_r0 as i64) as usize;
    let row_end = (r1.min(band_r1 as i64) as usize).max(row_start);

    PixelRect {
        canvas_width: grid_w,
        col_start: c0.rem_euclid(grid_w as i64) as usize,
        col_count,
        row_start,
        row_end,
    }
}

/// Degree bounds of a pixel rectangle, for solving a view that covers it.
pub fn rect_to_partition(rect: &PixelRect, grid_w: usize, grid_h: usize) -> Result<Partition> {
    let w = grid_w as f64;
    let h = grid_h as f64;
    // col_start is wrapped; recover a contiguous azimuth interval.
    let phi0 = rect.col_start as f64 * 360.0 / w;
    let phi1 = phi0 + rect.col_count as f64 * 360.0 / w;
    Partition::new(
        phi0,
        phi1,
        rect.row_start as f64 * 180.0 / h,
        rect.row_end as f64 * 180.0 / h,
    )
}

/// A grid of partitions tiling the target domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGrid {
    pub azimuth_cuts: Vec<f64>,
    pub zenith_cuts: Vec<f64>,
    partitions: Vec<Partition>,
}

impl PartitionGrid {
    pub fn rows(&self) -> usize {
        self.zenith_cuts.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.azimuth_cuts.len()
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Partition at `(row, col)` in row-major order.
    pub fn partition(&self, row: usize, col: usize) -> &Partition {
        &self.partitions[row * self.cols() + col]
    }
}

/// The paper-default 3×5 grid: zenith cuts 25/60/120/155, azimuth cuts
/// every 72° from 0.
pub fn default_grid() -> PartitionGrid {
    grid_from_cuts(&[0.0, 72.0, 144.0, 216.0, 288.0], &[25.0, 60.0, 120.0, 155.0])
        .expect("default cuts are valid")
}

/// Builds a row-major partition grid from azimuth and zenith cut lists.
///
/// Azimuth cuts are cyclic: the last column wraps back to the first cut.
pub fn grid_from_cuts(azimuth_cuts: &[f64], zenith_cuts: &[f64]) -> Result<PartitionGrid> {
    if azimuth_cuts.is_empty() {
        return Err(Error::Config("need at least one azimuth cut".into()));
    }
    if zenith_cuts.len() < 2 {
        return Err(Error::Config("need at least two zenith cuts".into()));
    }
    for w in azimuth_cuts.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Config(format!(
                "azimuth cuts not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    if azimuth_cuts[0] < 0.0 || *azimuth_cuts.last().unwrap() >= 360.0 {
        return Err(Error::Config("azimuth cuts must lie in [0, 360)".into()));
    }
    for w in zenith_cuts.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Config(format!(
                "zenith cuts not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    if zenith_cuts[0] < TARGET_ZENITH_MIN - 1e-9 || *zenith_cuts.last().unwrap() > TARGET_ZENITH_MAX + 1e-9 {
        return Err(Error::Config(format!(
            "zenith cuts must lie within [{TARGET_ZENITH_MIN}, {TARGET_ZENITH_MAX}]"
        )));
    }

    let mut partitions = Vec::with_capacity((zenith_cuts.len() - 1) * azimuth_cuts.len());
    for zr in zenith_cuts.windows(2) {
        for (k, &phi0) in azimuth_cuts.iter().enumerate() {
            let phi1 = if k + 1 < azimuth_cuts.len() {
                azimuth_cuts[k + 1]
            } else {
                azimuth_cuts[0] + 360.0
            };
            partitions.push(Partition::new(phi0, phi1, zr[0], zr[1])?);
        }
    }
    Ok(PartitionGrid {
        azimuth_cuts: azimuth_cuts.to_vec(),
        zenith_cuts: zenith_cuts.to_vec(),
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_grid_matches_cut_lists() {
        let g = default_grid();
        assert_eq!(g.len(), 15);
        let first = g.partitions()[0];
        assert_eq!(
            (first.phi0, first.phi1, first.theta0, first.theta1),
            (0.0, 72.0, 25.0, 60.0)
        );
        let p = g.partition(1, 2);
        assert_eq!((p.phi0, p.phi1, p.theta0, p.theta1), (144.0, 216.0, 60.0, 120.0));
    }

    #[test]
    fn ablation_grids() {
        assert_eq!(
            grid_from_cuts(&[0.0, 90.0, 180.0, 270.0], &[25.0, 60.0, 120.0, 155.0])
                .unwrap()
                .len(),
            12
        );
        assert_eq!(
            grid_from_cuts(&[0.0, 120.0, 240.0], &[25.0, 60.0, 120.0, 155.0])
                .unwrap()
                .len(),
            9
        );
    }

    #[test]
    fn minimal_grid_accepted() {
        // A single 360°-wide, 130°-tall partition is accepted here; the view
        // solver owns feasibility.
        let g = grid_from_cuts(&[0.0], &[25.0, 155.0]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.partitions()[0].azimuth_span(), 360.0);
    }

    #[test]
    fn bad_cuts_rejected() {
        assert!(grid_from_cuts(&[], &[25.0, 155.0]).is_err());
        assert!(grid_from_cuts(&[0.0], &[25.0]).is_err());
        assert!(grid_from_cuts(&[0.0, 0.0], &[25.0, 155.0]).is_err());
        assert!(grid_from_cuts(&[0.0], &[20.0, 155.0]).is_err());
        assert!(grid_from_cuts(&[0.0], &[25.0, 156.0]).is_err());
        assert!(grid_from_cuts(&[0.0, 370.0], &[25.0, 155.0]).is_err());
    }

    #[test]
    fn padded_rect_wraps_and_clips() {
        let p = Partition::new(0.0, 72.0, 25.0, 60.0).unwrap();
        let r = padded_pixel_rect(&p, 2048, 1024, 5, 2);
        // Independent arithmetic: round(2048*72/360) = round(409.6) = 410,
        // round(1024*25/180) = 142, round(1024*60/180) = 341.
        assert_eq!(r.col_start, 2043);
        assert_eq!(r.col_count, 420);
        let cols: Vec<usize> = r.cols().collect();
        assert_eq!(cols[0], 2043);
        assert_eq!(cols[4], 2047);
        assert_eq!(cols[5], 0);
        assert_eq!(*cols.last().unwrap(), 414);
        assert_eq!((r.row_start, r.row_end), (142, 343));
    }

    #[test]
    fn zero_pad_is_exact_rectangle() {
        let p = Partition::new(72.0, 144.0, 60.0, 120.0).unwrap();
        let r = padded_pixel_rect(&p, 2048, 1024, 0, 0);
        assert_eq!(r.col_start, 410);
        assert_eq!(r.col_count, 819 - 410);
        assert_eq!((r.row_start, r.row_end), (341, 683));
    }

    #[test]
    fn adjacent_padded_rects_overlap_by_twice_pad() {
        let a = Partition::new(0.0, 72.0, 60.0, 120.0).unwrap();
        let b = Partition::new(72.0, 144.0, 60.0, 120.0).unwrap();
        let ra = padded_pixel_rect(&a, 2048, 1024, 5, 2);
        let rb = padded_pixel_rect(&b, 2048, 1024, 5, 2);
        let overlap = (0..2048)
            .filter(|&c| ra.contains_col(c) && rb.contains_col(c))
            .count();
        assert_eq!(overlap, 10);
    }

    #[test]
    fn padded_rect_respects_target_band() {
        let (r0, r1) = target_row_range(1024);
        assert_eq!((r0, r1), (142, 882));
        for p in default_grid().partitions() {
            let r = padded_pixel_rect(p, 2048, 1024, 5, 2);
            assert!(r.row_start >= r0 && r.row_end <= r1);
        }
    }

    #[test]
    fn unpadded_partitions_tile_target_band() {
        let g = default_grid();
        let (w, h) = (512, 256);
        let rects: Vec<PixelRect> = g
            .partitions()
            .iter()
            .map(|p| padded_pixel_rect(p, w, h, 0, 0))
            .collect();
        let (r0, r1) = target_row_range(h);
        for row in r0..r1 {
            for col in 0..w {
                let n = rects.iter().filter(|r| r.contains(col, row)).count();
                assert_eq!(n, 1, "pixel ({col}, {row}) covered {n} times");
            }
        }
    }

    proptest! {
        #[test]
        fn random_cut_grids_tile(
            n_az in 1usize..6,
            n_zen in 1usize..4,
            seed in 0u64..1000,
        ) {
            // Deterministic pseudo-random strictly increasing cut lists.
            let mut s = seed;
            let mut next = move || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 33) as f64 / (1u64 << 31) as f64
            };
            // Keep cuts at least 4° apart so none collapse to zero pixels
            // on the 128-wide test canvas.
            let mut az: Vec<f64> = (0..n_az).map(|_| next() * 355.0).collect();
            az.sort_by(|a, b| a.partial_cmp(b).unwrap());
            az.dedup_by(|a, b| (*a - *b).abs() < 4.0);
            let mut zen = vec![25.0];
            for _ in 0..n_zen {
                zen.push(25.0 + next() * 130.0);
            }
            zen.push(155.0);
            zen.sort_by(|a, b| a.partial_cmp(b).unwrap());
            zen.dedup_by(|a, b| (*a - *b).abs() < 4.0);
            prop_assume!(!az.is_empty() && zen.len() >= 2);
            prop_assume!(*zen.last().unwrap() == 155.0 && zen[0] == 25.0);

            let g = grid_from_cuts(&az, &zen).unwrap();
            let (w, h) = (128, 64);
            let rects: Vec<PixelRect> = g
                .partitions()
                .iter()
                .map(|p| padded_pixel_rect(p, w, h, 0, 0))
                .collect();
            let (r0, r1) = target_row_range(h);
            for row in r0..r1 {
                for col in 0..w {
                    let n = rects.iter().filter(|r| r.contains(col, row)).count();
                    prop_assert_eq!(n, 1);
                }
            }
            // With padding, every target pixel is covered at least once.
            let padded: Vec<PixelRect> = g
                .partitions()
                .iter()
                .map(|p| padded_pixel_rect(p, w, h, 5, 2))
                .collect();
            for row in r0..r1 {
                for col in 0..w {
                    prop_assert!(padded.iter().any(|r| r.contains(col, row)));
                }
            }
        }
    }
}
