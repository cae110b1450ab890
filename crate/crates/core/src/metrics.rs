//! Depth-map evaluation: median scaling, error and accuracy metrics, and
//! the 5×5 Laplacian sharpness metrics.
//!
//! All statistics run over pixels valid in both inputs with positive ground
//! truth. Pixels with non-positive predictions are excluded from the log and
//! δ metrics but kept in RMSE/MAE/AbsRel. Sums use compensated accumulation
//! so parallel or reordered evaluation stays within 1e−12.

use crate::error::{Error, Result};
use crate::grid::EquirectGrid;

/// The full evaluation record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub absrel: f64,
    pub rmse_log10: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub lap_mae: f64,
    pub log_mae: f64,
    pub pixel_count: usize,
}

/// Kahan-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Median with the lower-of-two-middles rule for even counts.
fn median_lower(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(values[(values.len() - 1) / 2])
}

/// Scales `pred` by `median(gt) / median(pred)` over jointly valid pixels.
///
/// The scaling is written as `(p / median(pred)) · median(gt)` so the scaled
/// median lands exactly on the target median and a second application is a
/// bit-for-bit no-op.
pub fn median_scale(pred: &EquirectGrid, gt: &EquirectGrid) -> Result<EquirectGrid> {
    let mut pred_vals = Vec::new();
    let mut gt_vals = Vec::new();
    for (col, row, p) in pred.iter_valid() {
        if let Some(g) = gt.get(col, row) {
            pred_vals.push(p);
            gt_vals.push(g);
        }
    }
    let med_pred = median_lower(&mut pred_vals)
        .ok_or_else(|| Error::Metrics("no jointly valid pixels for median scaling".into()))?;
    let med_gt = median_lower(&mut gt_vals).expect("same count as pred_vals");
    if !(med_pred > 0.0) || !med_pred.is_finite() {
        return Err(Error::Metrics(format!(
            "prediction median {med_pred} is not positive"
        )));
    }
    if !(med_gt > 0.0) || !med_gt.is_finite() {
        return Err(Error::Metrics(format!(
            "ground-truth median {med_gt} is not positive"
        )));
    }
    if med_gt / med_pred == 1.0 {
        return Ok(pred.clone());
    }
    let mut out = pred.clone();
    out.map_valid(|p| (p / med_pred) * med_gt);
    Ok(out)
}

/// Error and accuracy metrics over jointly valid pixels with `gt > 0`.
///
/// The caller is expected to median-scale `pred` first; this function does
/// not enforce it. The Laplacian fields of the report are left at zero.
pub fn error_metrics(pred: &EquirectGrid, gt: &EquirectGrid) -> Result<MetricsReport> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::Metrics("dimension mismatch".into()));
    }
    let mut sq = Kahan::default();
    let mut abs = Kahan::default();
    let mut rel = Kahan::default();
    let mut log_sq = Kahan::default();
    let mut n = 0usize;
    let mut n_pos = 0usize;
    let mut hits = [0usize; 3];
    let thresholds = [1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25];

    for (col, row, p) in pred.iter_valid() {
        let g = match gt.get(col, row) {
            Some(g) if g > 0.0 => g,
            _ => continue,
        };
        n += 1;
        let d = p - g;
        sq.add(d * d);
        abs.add(d.abs());
        rel.add(d.abs() / g);
        if p > 0.0 {
            n_pos += 1;
            let dl = p.log10() - g.log10();
            log_sq.add(dl * dl);
            let ratio = (p / g).max(g / p);
            for (k, &t) in thresholds.iter().enumerate() {
                if ratio < t {
                    hits[k] += 1;
                }
            }
        }
    }
    if n == 0 {
        return Err(Error::Metrics("no jointly valid pixels with gt > 0".into()));
    }
    if n_pos == 0 {
        return Err(Error::Metrics(
            "no positive predictions for log/δ metrics".into(),
        ));
    }
    Ok(MetricsReport {
        rmse: (sq.value() / n as f64).sqrt(),
        mae: abs.value() / n as f64,
        absrel: rel.value() / n as f64,
        rmse_log10: (log_sq.value() / n_pos as f64).sqrt(),
        delta1: hits[0] as f64 / n_pos as f64,
        delta2: hits[1] as f64 / n_pos as f64,
        delta3: hits[2] as f64 / n_pos as f64,
        lap_mae: 0.0,
        log_mae: 0.0,
        pixel_count: n,
    })
}

/// 5×5 Laplacian kernel; the LoG kernel is its sign flip. Both are zero-sum.
pub const K5: [[f64; 5]; 5] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 1.0, 2.0, 1.0, 0.0],
    [1.0, 2.0, -16.0, 2.0, 1.0],
    [0.0, 1.0, 2.0, 1.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0],
];

fn convolve5_at(g: &EquirectGrid, col: usize, row: usize, kernel: &[[f64; 5]; 5]) -> Option<f64> {
    let mut acc = 0.0;
    for (dr, krow) in kernel.iter().enumerate() {
        for (dc, &k) in krow.iter().enumerate() {
            let c = col + dc;
            let r = row + dr;
            acc += k * g.get(c - 2, r - 2)?;
        }
    }
    Some(acc)
}

/// Mean absolute differences of the 5×5 Laplacian and LoG responses,
/// over pixels whose full window is valid in both grids.
pub fn laplacian_metrics(pred: &EquirectGrid, gt: &EquirectGrid) -> Result<(f64, f64)> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::Metrics("dimension mismatch".into()));
    }
    let mut log5 = K5;
    for row in &mut log5 {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
    let mut lap_sum = Kahan::default();
    let mut log_sum = Kahan::default();
    let mut n = 0usize;
    let w = pred.width();
    for row in pred.rows().skip(2) {
        if row + 2 >= pred.row_end() {
            break;
        }
        for col in 2..w.saturating_sub(2) {
            let (Some(lp), Some(lg)) = (convolve5_at(pred, col, row, &K5), convolve5_at(gt, col, row, &K5)) else {
                continue;
            };
            let (Some(gp), Some(gg)) = (
                convolve5_at(pred, col, row, &log5),
                convolve5_at(gt, col, row, &log5),
            ) else {
                continue;
            };
            lap_sum.add((lp - lg).abs());
            log_sum.add((gp - gg).abs());
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Metrics(
            "no pixel has a fully valid 5x5 window in both grids".into(),
        ));
    }
    Ok((lap_sum.value() / n as f64, log_sum.value() / n as f64))
}

/// Full evaluation protocol: median-scale the prediction, then compute all
/// metric fields.
pub fn evaluate(pred: &EquirectGrid, gt: &EquirectGrid) -> Result<MetricsReport> {
    let scaled = median_scale(pred, gt)?;
    let mut report = error_metrics(&scaled, gt)?;
    let (lap_mae, log_mae) = laplacian_metrics(&scaled, gt)?;
    report.lap_mae = lap_mae;
    report.log_mae = log_mae;
    Ok(report)
}
