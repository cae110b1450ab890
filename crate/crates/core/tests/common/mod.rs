//! Shared test oracles, independent of the library's solver internals.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pano_stitch::blending::LaplacianTarget;
use pano_stitch::grid::EquirectGrid;

/// Splitmix-style deterministic f64 stream in [0, 1).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_add(0x9E3779B97F4A7C15))
    }

    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let z = self.0 ^ (self.0 >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

pub fn full_grid(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> f64) -> EquirectGrid {
    let mut g = EquirectGrid::new_full(w, h);
    for row in 0..h {
        for col in 0..w {
            g.set(col, row, f(col, row));
        }
    }
    g
}

/// Dense normal-equations solve of the blend objective, assembled from
/// explicit K / A matrices rather than stencil sweeps.
///
/// Returns the unconstrained minimizer of
/// `Σ_centers (l(x) − L)² + γ Σ_domain (x − X)²` as a grid.
pub fn dense_normal_solve(
    target: &LaplacianTarget,
    reference: &EquirectGrid,
    gamma: f64,
    wrap: bool,
) -> EquirectGrid {
    let w = reference.width();
    let h = reference.height();

    // Domain pixels in row-major order.
    let mut dense_index = vec![usize::MAX; w * h];
    let mut pixels = Vec::new();
    for row in reference.rows() {
        for col in 0..w {
            if reference.get(col, row).is_some() {
                dense_index[row * w + col] = pixels.len();
                pixels.push((col, row));
            }
        }
    }
    let n = pixels.len();

    let neighbors = |col: usize, row: usize| -> Option<[(usize, usize); 4]> {
        if row == 0 || row + 1 >= h {
            return None;
        }
        let (left, right) = if wrap {
            ((col + w - 1) % w, (col + 1) % w)
        } else if col >= 1 && col + 1 < w {
            (col - 1, col + 1)
        } else {
            return None;
        };
        Some([(left, row), (right, row), (col, row - 1), (col, row + 1)])
    };

    // K: one row per center pixel.
    let mut k_rows: Vec<(usize, [usize; 4])> = Vec::new();
    let mut l_values = Vec::new();
    for (i, &(col, row)) in pixels.iter().enumerate() {
        let l = match target.values.get(col, row) {
            Some(l) => l,
            None => continue,
        };
        if let Some(nb) = neighbors(col, row) {
            let idx: Vec<usize> = nb
                .iter()
                .map(|&(c, r)| dense_index[r * w + c])
                .collect();
            if idx.iter().all(|&q| q != usize::MAX) {
                k_rows.push((i, [idx[0], idx[1], idx[2], idx[3]]));
                l_values.push(l);
            }
        }
    }

    let mut k = DMatrix::<f64>::zeros(k_rows.len(), n);
    for (r, &(center, nb)) in k_rows.iter().enumerate() {
        k[(r, center)] = 4.0;
        for q in nb {
            k[(r, q)] -= 1.0;
        }
    }
    let l_vec = DVector::from_vec(l_values);
    let x_ref = DVector::from_iterator(
        n,
        pixels.iter().map(|&(c, r)| reference.get(c, r).unwrap()),
    );

    let a = k.transpose() * &k + DMatrix::identity(n, n) * gamma;
    let b = k.transpose() * l_vec + gamma * &x_ref;
    let solution = a.lu().solve(&b).expect("normal matrix is SPD");

    let mut out = EquirectGrid::new_band(w, h, reference.row_start(), reference.row_end());
    for (i, &(col, row)) in pixels.iter().enumerate() {
        out.set(col, row, solution[i]);
    }
    out
}

/// RMS difference over jointly valid pixels.
pub fn rms_between(a: &EquirectGrid, b: &EquirectGrid) -> f64 {
    a.rms_diff(b).expect("grids overlap")
}

/// All nine evaluation metrics, reimplemented with naive per-pixel loops.
pub struct BruteForceMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub absrel: f64,
    pub rmse_log10: f64,
    pub delta: [f64; 3],
    pub lap_mae: f64,
    pub log_mae: f64,
}

pub fn brute_force_metrics(pred: &EquirectGrid, gt: &EquirectGrid) -> BruteForceMetrics {
    let (mut sq, mut abs, mut rel, mut logs) = (0.0, 0.0, 0.0, 0.0);
    let (mut n, mut n_pos) = (0usize, 0usize);
    let mut hits = [0usize; 3];
    for row in 0..pred.height() {
        for col in 0..pred.width() {
            let (Some(p), Some(g)) = (pred.get(col, row), gt.get(col, row)) else {
                continue;
            };
            if g <= 0.0 {
                continue;
            }
            n += 1;
            sq += (p - g) * (p - g);
            abs += (p - g).abs();
            rel += (p - g).abs() / g;
            if p > 0.0 {
                n_pos += 1;
                logs += (p.log10() - g.log10()).powi(2);
                let ratio = if p / g > g / p { p / g } else { g / p };
                for (k, t) in [1.25, 1.5625, 1.953125].into_iter().enumerate() {
                    if ratio < t {
                        hits[k] += 1;
                    }
                }
            }
        }
    }
    let lap = [
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 2.0, 1.0, 0.0],
        [1.0, 2.0, -16.0, 2.0, 1.0],
        [0.0, 1.0, 2.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0],
    ];
    let (mut lap_sum, mut log_sum) = (0.0, 0.0);
    let mut n5 = 0usize;
    for row in 2..pred.height().saturating_sub(2) {
        'cols: for col in 2..pred.width().saturating_sub(2) {
            let (mut rp, mut rg) = (0.0, 0.0);
            for dr in 0..5 {
                for dc in 0..5 {
                    let (Some(p), Some(g)) = (
                        pred.get(col + dc - 2, row + dr - 2),
                        gt.get(col + dc - 2, row + dr - 2),
                    ) else {
                        continue 'cols;
                    };
                    rp += lap[dr][dc] * p;
                    rg += lap[dr][dc] * g;
                }
            }
            lap_sum += (rp - rg).abs();
            log_sum += ((-rp) - (-rg)).abs();
            n5 += 1;
        }
    }
    BruteForceMetrics {
        rmse: (sq / n as f64).sqrt(),
        mae: abs / n as f64,
        absrel: rel / n as f64,
        rmse_log10: (logs / n_pos as f64).sqrt(),
        delta: [
            hits[0] as f64 / n_pos as f64,
            hits[1] as f64 / n_pos as f64,
            hits[2] as f64 / n_pos as f64,
        ],
        lap_mae: lap_sum / n5 as f64,
        log_mae: log_sum / n5 as f64,
    }
}

pub fn random_grid(rng: &mut Rng, w: usize, h: usize, lo: f64, hi: f64) -> EquirectGrid {
    full_grid(w, h, |_, _| rng.range(lo, hi))
}
