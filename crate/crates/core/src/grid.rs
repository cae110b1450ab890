//! Scalar rasters over the equirectangular domain.
//!
//! An [`EquirectGrid`] stores a horizontal band of rows of the full W×H
//! equirectangular canvas, with a per-pixel validity mask. Pixel `(i, j)`
//! is centered at azimuth `(i+0.5)·360/W` and zenith `(j+0.5)·180/H`.
//! Sampling wraps horizontally across the azimuth 0/360 seam and never
//! wraps vertically.

use crate::error::{Error, Result};

/// A band of rows of a W×H equirectangular raster.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectGrid {
    width: usize,
    height: usize,
    row_start: usize,
    row_end: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

/// Outcome of a bilinear fetch from an [`EquirectGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Value(f64),
    /// A contributing pixel is inside the stored band but masked invalid.
    Invalid,
    /// A contributing pixel falls on rows the grid does not store.
    OutOfBand { first_row: usize, last_row: usize },
}

impl EquirectGrid {
    /// An all-invalid grid covering rows `row_start..row_end` of a W×H canvas.
    pub fn new_band(width: usize, height: usize, row_start: usize, row_end: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        assert!(
            row_start < row_end && row_end <= height,
            "invalid row range {row_start}..{row_end} for height {height}"
        );
        let n = width * (row_end - row_start);
        Self {
            width,
            height,
            row_start,
            row_end,
            values: vec![0.0; n],
            valid: vec![false; n],
        }
    }

    /// An all-invalid grid covering the full canvas.
    pub fn new_full(width: usize, height: usize) -> Self {
        Self::new_band(width, height, 0, height)
    }

    /// Wraps a dense row-major value buffer covering the full canvas.
    /// Non-finite values are masked invalid.
    pub fn from_values_full(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height);
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self {
            width,
            height,
            row_start: 0,
            row_end: height,
            values,
            valid,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn row_start(&self) -> usize {
        self.row_start
    }

    pub fn row_end(&self) -> usize {
        self.row_end
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.row_start..self.row_end
    }

    #[inline]
    fn index(&self, col: usize, row: usize) -> Option<usize> {
        if col < self.width && row >= self.row_start && row < self.row_end {
            Some((row - self.row_start) * self.width + col)
        } else {
            None
        }
    }

    #[inline]
    pub fn is_valid(&self, col: usize, row: usize) -> bool {
        self.index(col, row).map_or(false, |i| self.valid[i])
    }

    /// The value at `(col, row)`, or `None` outside the band or when masked.
    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        self.index(col, row)
            .filter(|&i| self.valid[i])
            .map(|i| self.values[i])
    }

    /// Raw stored value, ignoring the validity mask.
    #[inline]
    pub fn raw(&self, col: usize, row: usize) -> Option<f64> {
        self.index(col, row).map(|i| self.values[i])
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        let i = self
            .index(col, row)
            .unwrap_or_else(|| panic!("pixel ({col}, {row}) outside grid band"));
        self.values[i] = value;
        self.valid[i] = true;
    }

    #[inline]
    pub fn set_invalid(&mut self, col: usize, row: usize) {
        if let Some(i) = self.index(col, row) {
            self.valid[i] = false;
        }
    }

    pub fn azimuth_of_col(&self, col: usize) -> f64 {
        (col as f64 + 0.5) * 360.0 / self.width as f64
    }

    pub fn zenith_of_row(&self, row: usize) -> f64 {
        (row as f64 + 0.5) * 180.0 / self.height as f64
    }

    /// Continuous column coordinate of an azimuth (pixel centers at integers).
    pub fn col_of_azimuth(&self, azimuth_deg: f64) -> f64 {
        azimuth_deg / 360.0 * self.width as f64 - 0.5
    }

    /// Continuous row coordinate of a zenith (pixel centers at integers).
    pub fn row_of_zenith(&self, zenith_deg: f64) -> f64 {
        zenith_deg / 180.0 * self.height as f64 - 0.5
    }

    pub fn count_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Applies `f` to every valid pixel value in place.
    pub fn map_valid(&mut self, mut f: impl FnMut(f64) -> f64) {
        for (v, ok) in self.values.iter_mut().zip(&self.valid) {
            if *ok {
                *v = f(*v);
            }
        }
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        let r0 = self.row_start;
        self.valid.iter().enumerate().filter_map(move |(i, ok)| {
            ok.then(|| (i % w, r0 + i / w, self.values[i]))
        })
    }

    /// Bilinear fetch at `(azimuth, zenith)` in degrees with horizontal wrap.
    ///
    /// Neighbors with zero interpolation weight are ignored; any invalid
    /// neighbor with positive weight makes the sample invalid, and any
    /// positive-weight neighbor on a missing row reports the row range.
    pub fn sample_bilinear(&self, azimuth_deg: f64, zenith_deg: f64) -> Sample {
        let w = self.width as f64;
        let x = (azimuth_deg / 360.0 * w - 0.5).rem_euclid(w);
        let y = zenith_deg / 180.0 * self.height as f64 - 0.5;

        let i0 = x.floor() as usize % self.width;
        let i1 = (i0 + 1) % self.width;
        let fx = x - x.floor();

        // Vertical clamp applies only at the canvas poles, not at band edges.
        let yf = y.floor();
        let fy = y - yf;
        let (j0, j1) = {
            let j0 = yf as isize;
            (
                j0.clamp(0, self.height as isize - 1) as usize,
                (j0 + 1).clamp(0, self.height as isize - 1) as usize,
            )
        };

        let mut missing: Option<(usize, usize)> = None;
        let mut invalid = false;
        let mut acc = 0.0;
        for (col, row, wgt) in [
            (i0, j0, (1.0 - fx) * (1.0 - fy)),
            (i1, j0, fx * (1.0 - fy)),
            (i0, j1, (1.0 - fx) * fy),
            (i1, j1, fx * fy),
        ] {
            if wgt <= 0.0 {
                continue;
            }
            match self.index(col, row) {
                None => {
                    let m = missing.get_or_insert((row, row));
                    m.0 = m.0.min(row);
                    m.1 = m.1.max(row);
                }
                Some(i) if !self.valid[i] => invalid = true,
                Some(i) => acc += wgt * self.values[i],
            }
        }
        if let Some((first_row, last_row)) = missing {
            Sample::OutOfBand {
                first_row,
                last_row,
            }
        } else if invalid {
            Sample::Invalid
        } else {
            Sample::Value(acc)
        }
    }

    /// Restricts the band to `row_start..row_end`, dropping rows outside.
    pub fn crop_rows(&self, row_start: usize, row_end: usize) -> Result<EquirectGrid> {
        if row_start < self.row_start || row_end > self.row_end || row_start >= row_end {
            return Err(Error::Domain(format!(
                "crop {row_start}..{row_end} outside stored band {}..{}",
                self.row_start, self.row_end
            )));
        }
        let mut out = EquirectGrid::new_band(self.width, self.height, row_start, row_end);
        let a = (row_start - self.row_start) * self.width;
        let b = (row_end - self.row_start) * self.width;
        out.values.copy_from_slice(&self.values[a..b]);
        out.valid.copy_from_slice(&self.valid[a..b]);
        Ok(out)
    }

    /// Root-mean-square difference over pixels valid in both grids.
    pub fn rms_diff(&self, other: &EquirectGrid) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Metrics("dimension mismatch in rms_diff".into()));
        }
        let mut sum = 0.0;
        let mut n = 0usize;
        for (col, row, v) in self.iter_valid() {
            if let Some(o) = other.get(col, row) {
                let d = v - o;
                sum += d * d;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::Metrics("no jointly valid pixels".into()));
        }
        Ok((sum / n as f64).sqrt())
    }

    /// Expands the band into a full-canvas raster; rows outside the band
    /// become invalid pixels.
    pub fn to_full_raster(&self) -> Raster {
        let mut out = Raster::new(self.width, self.height);
        for (col, row, v) in self.iter_valid() {
            out.set(col, row, v);
        }
        out
    }

    /// Wraps a full raster as a full-band grid.
    pub fn from_raster(raster: &Raster) -> EquirectGrid {
        let mut out = EquirectGrid::new_full(raster.width, raster.height);
        for row in 0..raster.height {
            for col in 0..raster.width {
                if let Some(v) = raster.get(col, row) {
                    out.set(col, row, v);
                }
            }
        }
        out
    }

}

/// A plain dense raster for perspective view images.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height);
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self {
            width,
            height,
            values,
            valid,
        }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        let i = row * self.width + col;
        (col < self.width && row < self.height && self.valid[i]).then(|| self.values[i])
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        let i = row * self.width + col;
        self.values[i] = value;
        self.valid[i] = true;
    }

    #[inline]
    pub fn set_invalid(&mut self, col: usize, row: usize) {
        self.valid[row * self.width + col] = false;
    }

    pub fn is_valid(&self, col: usize, row: usize) -> bool {
        col < self.width && row < self.height && self.valid[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    /// Bilinear fetch at continuous pixel coordinates (centers at integers),
    /// clamping to the raster edges. `None` when a contributing pixel is
    /// invalid.
    pub fn sample_bilinear_clamped(&self, x: f64, y: f64) -> Option<f64> {
        let xf = x.floor();
        let yf = y.floor();
        let fx = x - xf;
        let fy = y - yf;
        let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
        let i0 = clamp(xf as isize, self.width);
        let i1 = clamp(xf as isize + 1, self.width);
        let j0 = clamp(yf as isize, self.height);
        let j1 = clamp(yf as isize + 1, self.height);

        let mut acc = 0.0;
        for (col, row, wgt) in [
            (i0, j0, (1.0 - fx) * (1.0 - fy)),
            (i1, j0, fx * (1.0 - fy)),
            (i0, j1, (1.0 - fx) * fy),
            (i1, j1, fx * fy),
        ] {
            if wgt <= 0.0 {
                continue;
            }
            match self.get(col, row) {
                Some(v) => acc += wgt * v,
                None => return None,
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_centers_follow_convention() {
        let g = EquirectGrid::new_full(2048, 1024);
        assert!((g.azimuth_of_col(0) - 0.087890625).abs() < 1e-12);
        assert!((g.zenith_of_row(0) - 0.087890625).abs() < 1e-12);
        assert!((g.azimuth_of_col(2047) - (360.0 - 0.087890625)).abs() < 1e-12);
    }

    #[test]
    fn sample_wraps_horizontally() {
        let mut g = EquirectGrid::new_full(4, 2);
        for row in 0..2 {
            for col in 0..4 {
                g.set(col, row, col as f64);
            }
        }
        // Azimuth 0 sits halfway between the centers of the last and first
        // columns, across the seam.
        match g.sample_bilinear(0.0, g.zenith_of_row(0)) {
            Sample::Value(v) => assert!((v - 1.5).abs() < 1e-12, "v = {v}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sample_reports_missing_rows() {
        let g = EquirectGrid::new_band(8, 8, 2, 6);
        match g.sample_bilinear(10.0, 0.1) {
            Sample::OutOfBand { first_row, .. } => assert_eq!(first_row, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_hits_ignore_zero_weight_neighbors() {
        let mut g = EquirectGrid::new_full(4, 4);
        g.set(1, 1, 5.0);
        // Neighbors are invalid, but the sample lands exactly on (1, 1).
        match g.sample_bilinear(g.azimuth_of_col(1), g.zenith_of_row(1)) {
            Sample::Value(v) => assert_eq!(v, 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_neighbor_poisons_sample() {
        let mut g = EquirectGrid::new_full(4, 4);
        g.set(1, 1, 5.0);
        match g.sample_bilinear(g.azimuth_of_col(1) + 10.0, g.zenith_of_row(1)) {
            Sample::Invalid => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn raster_clamps_at_edges() {
        let mut r = Raster::new(2, 2);
        r.set(0, 0, 1.0);
        r.set(1, 0, 2.0);
        r.set(0, 1, 3.0);
        r.set(1, 1, 4.0);
        assert_eq!(r.sample_bilinear_clamped(-0.4, -0.4), Some(1.0));
        assert_eq!(r.sample_bilinear_clamped(1.4, 1.4), Some(4.0));
        let mid = r.sample_bilinear_clamped(0.5, 0.5).unwrap();
        assert!((mid - 2.5).abs() < 1e-12);
    }
}
