//! Laplacian-domain blending of registered partitions.
//!
//! The blend solves, per pixel, for depths whose discrete 3×3 Laplacians
//! match the averaged per-partition target Laplacians, with a small L2 pull
//! of weight `gamma` toward the reference panorama and the constraint that
//! depths stay nonnegative:
//!
//! ```text
//! min Σ (l(x)_ij − L_ij)² + γ Σ (x_ij − X_ij)²   s.t.  x_ij ≥ 0
//! ```
//!
//! The normal equations `(KᵀK + γI) x = KᵀL + γX` are iterated with a
//! projected, damped Jacobi sweep, coarse to fine over a resolution pyramid.
//! Undamped Jacobi diverges here: the squared-Laplacian operator pushes the
//! iteration-matrix spectrum below −1, while damping `ω = 0.5` keeps it
//! inside the unit circle.

use crate::error::{Error, Result};
use crate::grid::EquirectGrid;
use rayon::prelude::*;

/// Assembled target Laplacians with per-pixel contribution counts.
#[derive(Debug, Clone)]
pub struct LaplacianTarget {
    /// Mean target Laplacian; valid exactly where some partial contributed.
    pub values: EquirectGrid,
    /// Contributions per pixel, aligned with the band of `values`.
    pub counts: Vec<u32>,
}

/// Pyramid schedule and solver constants for one blend run.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendSchedule {
    /// `(width, height)` per level, coarse to fine; the last entry is the
    /// working resolution and every coarser level is its ceiling half.
    pub levels: Vec<(usize, usize)>,
    /// Jacobi iteration budget per level, coarse to fine.
    pub iterations: Vec<usize>,
    pub gamma: f64,
    pub omega: f64,
    /// Stop a level once the residual falls to this fraction of its
    /// initial value.
    pub residual_stop: f64,
}

impl BlendSchedule {
    /// The automatic pyramid for a working resolution: halve (ceiling) until
    /// the smaller dimension is ≤ 256, at most 4 levels. The finest level
    /// runs 50 iterations, intermediate levels add 50 each, and the coarsest
    /// runs 200.
    pub fn auto(width: usize, height: usize, gamma: f64, omega: f64, residual_stop: f64) -> Self {
        let mut dims = vec![(width, height)];
        while dims.len() < 4 {
            let (w, h) = *dims.last().unwrap();
            if w.min(h) <= 256 {
                break;
            }
            dims.push((w.div_ceil(2), h.div_ceil(2)));
        }
        let n = dims.len();
        let mut iterations: Vec<usize> = (0..n).map(|k| 50 * (k + 1)).collect();
        if n > 1 {
            iterations[n - 1] = 200;
        }
        iterations.reverse();
        dims.reverse();
        Self {
            levels: dims,
            iterations,
            gamma,
            omega,
            residual_stop,
        }
    }

    pub fn validate(&self, working_w: usize, working_h: usize) -> Result<()> {
        if self.levels.is_empty() || self.levels.len() != self.iterations.len() {
            return Err(Error::Config("schedule levels/iterations mismatch".into()));
        }
        if *self.levels.last().unwrap() != (working_w, working_h) {
            return Err(Error::Config(format!(
                "finest level {:?} does not match working resolution {}x{}",
                self.levels.last().unwrap(),
                working_w,
                working_h
            )));
        }
        for pair in self.levels.windows(2) {
            let (cw, ch) = pair[0];
            let (fw, fh) = pair[1];
            if cw != fw.div_ceil(2) || ch != fh.div_ceil(2) {
                return Err(Error::Config(format!(
                    "level {cw}x{ch} is not the ceiling half of {fw}x{fh}"
                )));
            }
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config("omega must lie in (0, 1]".into()));
        }
        if !(self.residual_stop >= 0.0) {
            return Err(Error::Config("residual_stop must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-level convergence data from a blend run.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub width: usize,
    pub height: usize,
    pub budget: usize,
    pub iterations_used: usize,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct BlendReport {
    pub levels: Vec<LevelReport>,
}

/// The discrete 5-point Laplacian `4x − x_left − x_right − x_up − x_down`,
/// valid wherever the pixel and all four neighbors are valid. Without
/// `wrap`, the first and last canvas columns have no Laplacian.
pub fn laplacian_field(g: &EquirectGrid, wrap: bool) -> EquirectGrid {
    let w = g.width();
    let mut out = EquirectGrid::new_band(w, g.height(), g.row_start(), g.row_end());
    for row in g.rows() {
        for col in 0..w {
            let (left, right) = if wrap {
                ((col + w - 1) % w, (col + 1) % w)
            } else if col >= 1 && col + 1 < w {
                (col - 1, col + 1)
            } else {
                continue;
            };
            if row == 0 || row + 1 >= g.height() {
                continue;
            }
            let stencil = (
                g.get(col, row),
                g.get(left, row),
                g.get(right, row),
                g.get(col, row - 1),
                g.get(col, row + 1),
            );
            if let (Some(c), Some(l), Some(r), Some(u), Some(d)) = stencil {
                out.set(col, row, 4.0 * c - l - r - u - d);
            }
        }
    }
    out
}

/// Computes each partial's Laplacian field and averages the contributions
/// on a shared canvas.
pub fn assemble_targets(
    partials: &[EquirectGrid],
    canvas_w: usize,
    canvas_h: usize,
    wrap: bool,
) -> Result<LaplacianTarget> {
    if partials.is_empty() {
        return Err(Error::Assembly("no partials to assemble".into()));
    }
    let row_start = partials.iter().map(|p| p.row_start()).min().unwrap();
    let row_end = partials.iter().map(|p| p.row_end()).max().unwrap();
    let mut values = EquirectGrid::new_band(canvas_w, canvas_h, row_start, row_end);
    let mut counts = vec![0u32; canvas_w * (row_end - row_start)];

    for partial in partials {
        if partial.width() != canvas_w || partial.height() != canvas_h {
            return Err(Error::Assembly(format!(
                "partial canvas {}x{} does not match {}x{}",
                partial.width(),
                partial.height(),
                canvas_w,
                canvas_h
            )));
        }
        let lap = laplacian_field(partial, wrap);
        for (col, row, l) in lap.iter_valid() {
            let i = (row - row_start) * canvas_w + col;
            let sum = values.raw(col, row).unwrap() * counts[i] as f64;
            counts[i] += 1;
            values.set(col, row, (sum + l) / counts[i] as f64);
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::Assembly(
            "no partial contributed any Laplacian pixel".into(),
        ));
    }
    Ok(LaplacianTarget { values, counts })
}

/// Flat per-pixel neighbor indices over a solve band; `usize::MAX` marks a
/// missing neighbor.
struct SolveLayout {
    width: usize,
    row_start: usize,
    rows: usize,
    neighbors: Vec<[usize; 4]>,
}

const NONE: usize = usize::MAX;

impl SolveLayout {
    fn new(width: usize, row_start: usize, row_end: usize, wrap: bool) -> Self {
        let rows = row_end - row_start;
        let mut neighbors = vec![[NONE; 4]; width * rows];
        for r in 0..rows {
            for c in 0..width {
                let i = r * width + c;
                let (left, right) = if wrap {
                    (Some((c + width - 1) % width), Some((c + 1) % width))
                } else {
                    (c.checked_sub(1), (c + 1 < width).then_some(c + 1))
                };
                let mut n = [NONE; 4];
                if let Some(l) = left {
                    n[0] = r * width + l;
                }
                if let Some(rr) = right {
                    n[1] = r * width + rr;
                }
                if r > 0 {
                    n[2] = (r - 1) * width + c;
                }
                if r + 1 < rows {
                    n[3] = (r + 1) * width + c;
                }
                neighbors[i] = n;
            }
        }
        Self {
            width,
            row_start,
            rows,
            neighbors,
        }
    }

    fn col_row(&self, i: usize) -> (usize, usize) {
        (i % self.width, self.row_start + i / self.width)
    }
}

/// One damped-Jacobi level solve of the normal equations
/// `(KᵀK + γI) x = KᵀL + γX` with projection onto `x ≥ 0`.
///
/// `K` holds one Laplacian row per pixel where the target is valid and the
/// full stencil lies inside the solve domain (the reference's valid set).
/// The Jacobi diagonal is assembled by stencil counting, `20 + γ` deep in
/// the interior. Iteration stops at `max_iters` or once the residual RMS
/// falls to `residual_stop` of its initial value. Returns the solution, the
/// number of iterations taken, and the residual history (index 0 is the
/// initial residual).
#[allow(clippy::too_many_arguments)]
pub fn jacobi_level_solve(
    target: &LaplacianTarget,
    reference: &EquirectGrid,
    init: &EquirectGrid,
    gamma: f64,
    omega: f64,
    max_iters: usize,
    residual_stop: f64,
    wrap: bool,
) -> Result<(EquirectGrid, usize, Vec<f64>)> {
    for (name, g) in [("target", &target.values), ("init", init)] {
        if g.width() != reference.width() || g.height() != reference.height() {
            return Err(Error::Config(format!(
                "{name} dimensions {}x{} do not match reference {}x{}",
                g.width(),
                g.height(),
                reference.width(),
                reference.height()
            )));
        }
    }
    if !(gamma > 0.0) {
        return Err(Error::Config("gamma must be positive".into()));
    }

    let width = reference.width();
    let height = reference.height();
    let (row_start, row_end) = (reference.row_start(), reference.row_end());
    let layout = SolveLayout::new(width, row_start, row_end, wrap);
    let n = width * layout.rows;

    // Domain: pixels the reference defines. Everything is flattened onto
    // the reference band.
    let mut domain = vec![false; n];
    let mut x = vec![0.0f64; n];
    let mut x_ref = vec![0.0f64; n];
    let mut lap_target = vec![0.0f64; n];
    let mut has_target = vec![false; n];
    for r in 0..layout.rows {
        let row = row_start + r;
        for c in 0..width {
            let i = r * width + c;
            if let Some(v) = reference.get(c, row) {
                domain[i] = true;
                x_ref[i] = v;
                x[i] = init.get(c, row).unwrap_or(v);
            }
            if let Some(l) = target.values.get(c, row) {
                lap_target[i] = l;
                has_target[i] = true;
            }
        }
    }

    // Center pixels carry a Laplacian row of K. Eq. 4's index bounds exclude
    // the first/last canvas row; band edges and domain holes are excluded
    // because their stencils leave the domain.
    let is_center: Vec<bool> = (0..n)
        .map(|i| {
            let (_, row) = layout.col_row(i);
            domain[i]
                && has_target[i]
                && row > 0
                && row + 1 < height
                && layout.neighbors[i]
                    .iter()
                    .all(|&q| q != NONE && domain[q])
        })
        .collect();

    // Diagonal of KᵀK + γI by stencil counting.
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let mut d = gamma;
            if is_center[i] {
                d += 16.0;
            }
            for &q in &layout.neighbors[i] {
                if q != NONE && is_center[q] {
                    d += 1.0;
                }
            }
            d
        })
        .collect();

    // KᵀL, accumulated in the same order as Kᵀ(Kx) below so the residual
    // (KᵀL − KᵀKx) + γ(X − x) is exactly zero at a fixed point.
    let kt_l: Vec<f64> = (0..n)
        .map(|i| {
            if !domain[i] {
                return 0.0;
            }
            let mut acc = if is_center[i] {
                4.0 * lap_target[i]
            } else {
                0.0
            };
            for &q in &layout.neighbors[i] {
                if q != NONE && is_center[q] {
                    acc -= lap_target[q];
                }
            }
            acc
        })
        .collect();

    let mut lap = vec![0.0f64; n];
    let mut residual = vec![0.0f64; n];
    let mut x_next = vec![0.0f64; n];
    let mut history = Vec::new();
    let mut iterations_used = 0usize;
    let domain_count = domain.iter().filter(|d| **d).count().max(1);
    // Per-row rayon tasks only pay off on large levels.
    let parallel = n >= 1 << 16;

    let lap_pass = |row: usize, lap_row: &mut [f64], x: &[f64]| {
        for (c, out) in lap_row.iter_mut().enumerate() {
            let i = row * width + c;
            *out = if is_center[i] {
                let nb = &layout.neighbors[i];
                4.0 * x[i] - x[nb[0]] - x[nb[1]] - x[nb[2]] - x[nb[3]]
            } else {
                0.0
            };
        }
    };
    let residual_pass = |row: usize, res_row: &mut [f64], x: &[f64], lap: &[f64]| -> f64 {
        let mut sum = 0.0;
        for (c, out) in res_row.iter_mut().enumerate() {
            let i = row * width + c;
            if !domain[i] {
                *out = 0.0;
                continue;
            }
            let mut ktl = if is_center[i] { 4.0 * lap[i] } else { 0.0 };
            for &q in &layout.neighbors[i] {
                if q != NONE && is_center[q] {
                    ktl -= lap[q];
                }
            }
            let r_i = (kt_l[i] - ktl) + gamma * (x_ref[i] - x[i]);
            *out = r_i;
            sum += r_i * r_i;
        }
        sum
    };
    let update_pass = |row: usize, next_row: &mut [f64], x: &[f64], residual: &[f64]| {
        for (c, out) in next_row.iter_mut().enumerate() {
            let i = row * width + c;
            *out = if domain[i] {
                (x[i] + omega * residual[i] / diag[i]).max(0.0)
            } else {
                x[i]
            };
        }
    };

    loop {
        // lap = K x at center rows, then residual = b − (KᵀK + γI) x.
        let sum_sq: f64 = if parallel {
            lap.par_chunks_mut(width)
                .enumerate()
                .for_each(|(r, lap_row)| lap_pass(r, lap_row, &x));
            residual
                .par_chunks_mut(width)
                .enumerate()
                .map(|(r, res_row)| residual_pass(r, res_row, &x, &lap))
                .collect::<Vec<f64>>()
                .iter()
                .sum()
        } else {
            for (r, lap_row) in lap.chunks_mut(width).enumerate() {
                lap_pass(r, lap_row, &x);
            }
            residual
                .chunks_mut(width)
                .enumerate()
                .map(|(r, res_row)| residual_pass(r, res_row, &x, &lap))
                .sum()
        };
        let rms = (sum_sq / domain_count as f64).sqrt();
        if !rms.is_finite() {
            let bad = (0..n)
                .find(|&i| !residual[i].is_finite() || !x[i].is_finite())
                .unwrap_or(0);
            let (col, row) = layout.col_row(bad);
            return Err(Error::NonFinite { col, row });
        }
        history.push(rms);

        let initial = history[0];
        if rms <= residual_stop * initial || iterations_used >= max_iters || initial == 0.0 {
            break;
        }

        // Projected damped update.
        if parallel {
            x_next
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(r, next_row)| update_pass(r, next_row, &x, &residual));
        } else {
            for (r, next_row) in x_next.chunks_mut(width).enumerate() {
                update_pass(r, next_row, &x, &residual);
            }
        }
        std::mem::swap(&mut x, &mut x_next);
        iterations_used += 1;
    }

    let mut out = EquirectGrid::new_band(width, height, row_start, row_end);
    for r in 0..layout.rows {
        for c in 0..width {
            let i = r * width + c;
            if domain[i] {
                out.set(c, row_start + r, x[i]);
            }
        }
    }
    Ok((out, iterations_used, history))
}

/// The blend objective `Σ (l(x) − L)² + γ Σ (x − X)²`, evaluated with the
/// same center set as the solver.
pub fn blend_objective(
    target: &LaplacianTarget,
    reference: &EquirectGrid,
    x: &EquirectGrid,
    gamma: f64,
    wrap: bool,
) -> f64 {
    let lap = laplacian_field(x, wrap);
    let mut e = 0.0;
    for (col, row, l_target) in target.values.iter_valid() {
        if let Some(l) = lap.get(col, row) {
            let d = l - l_target;
            e += d * d;
        }
    }
    for (col, row, xr) in reference.iter_valid() {
        if let Some(xv) = x.get(col, row) {
            let d = xv - xr;
            e += gamma * d * d;
        }
    }
    e
}

/// 2×2 box downsample to ceiling dimensions. Each coarse pixel averages the
/// valid pixels of its block; all-invalid blocks stay invalid.
pub fn downsample2(g: &EquirectGrid) -> EquirectGrid {
    downsample2_impl(g, false)
}

/// Like [`downsample2`], but a coarse pixel survives only when every canvas
/// pixel of its block is valid.
///
/// The pyramid uses this for the partials: blocks straddling a padded
/// rectangle's edge average a subset of the scene and would otherwise plant
/// inconsistent Laplacian targets along every partition border at the
/// coarse levels. The padding overlap means neighbors still cover the seam.
fn downsample2_all_valid(g: &EquirectGrid) -> EquirectGrid {
    downsample2_impl(g, true)
}

fn downsample2_impl(g: &EquirectGrid, require_all: bool) -> EquirectGrid {
    let cw = g.width().div_ceil(2);
    let ch = g.height().div_ceil(2);
    let r0 = g.row_start() / 2;
    let r1 = g.row_end().div_ceil(2);
    let mut out = EquirectGrid::new_band(cw, ch, r0, r1);
    for rc in r0..r1 {
        for cc in 0..cw {
            let mut sum = 0.0;
            let mut count = 0u32;
            let mut missing = false;
            for dr in 0..2 {
                for dc in 0..2 {
                    let row = rc * 2 + dr;
                    let col = cc * 2 + dc;
                    if row < g.height() && col < g.width() {
                        if let Some(v) = g.get(col, row) {
                            sum += v;
                            count += 1;
                        } else {
                            missing = true;
                        }
                    }
                }
            }
            if count > 0 && !(require_all && missing) {
                out.set(cc, rc, sum / count as f64);
            }
        }
    }
    out
}

/// Bilinear resize to exact target dimensions.
///
/// Pixels are invalid only where every positive-weight source pixel is
/// invalid; partially valid neighborhoods renormalize over the valid
/// contributors.
pub fn resize_bilinear(g: &EquirectGrid, target_w: usize, target_h: usize) -> EquirectGrid {
    assert!(target_w > 0 && target_h > 0);
    let sx = g.width() as f64 / target_w as f64;
    let sy = g.height() as f64 / target_h as f64;
    // Target rows that can draw on the stored band.
    let rt0 = (((g.row_start() as f64 - 0.5) / sy - 0.5).floor().max(0.0)) as usize;
    let rt1 = ((((g.row_end() as f64 + 0.5) / sy + 0.5).ceil()) as usize).min(target_h);
    let (rt0, rt1) = if rt0 < rt1 { (rt0, rt1) } else { (0, target_h) };

    let mut out = EquirectGrid::new_band(target_w, target_h, rt0, rt1.max(rt0 + 1));
    for rt in rt0..rt1 {
        let ys = (rt as f64 + 0.5) * sy - 0.5;
        let yf = ys.floor();
        let fy = ys - yf;
        let j0 = (yf as isize).clamp(0, g.height() as isize - 1) as usize;
        let j1 = (yf as isize + 1).clamp(0, g.height() as isize - 1) as usize;
        for ct in 0..target_w {
            let xs = (ct as f64 + 0.5) * sx - 0.5;
            let xf = xs.floor();
            let fx = xs - xf;
            let i0 = (xf as isize).clamp(0, g.width() as isize - 1) as usize;
            let i1 = (xf as isize + 1).clamp(0, g.width() as isize - 1) as usize;

            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (col, row, wgt) in [
                (i0, j0, (1.0 - fx) * (1.0 - fy)),
                (i1, j0, fx * (1.0 - fy)),
                (i0, j1, (1.0 - fx) * fy),
                (i1, j1, fx * fy),
            ] {
                if wgt <= 0.0 {
                    continue;
                }
                if let Some(v) = g.get(col, row) {
                    acc += wgt * v;
                    wsum += wgt;
                }
            }
            if wsum > 0.0 {
                out.set(ct, rt, acc / wsum);
            }
        }
    }
    out
}

/// Bilinear upsample to exact target dimensions (the pyramid inverse of
/// [`downsample2`]).
pub fn upsample2(g: &EquirectGrid, target_w: usize, target_h: usize) -> EquirectGrid {
    resize_bilinear(g, target_w, target_h)
}

/// Coarse-to-fine blend: at each level the partials and reference are
/// downsampled, targets assembled, and the level solved with a warm start
/// from the level below. The reference initializes the coarsest level;
/// finer levels start from their own reference plus the bilinearly
/// upsampled coarse *correction* (solution minus reference), so the
/// reference's fine detail is never low-passed through the pyramid and a
/// solution at its fixed point hands the fixed point up unchanged.
pub fn multiscale_blend(
    partials: &[EquirectGrid],
    reference: &EquirectGrid,
    schedule: &BlendSchedule,
    wrap: bool,
) -> Result<(EquirectGrid, BlendReport)> {
    schedule.validate(reference.width(), reference.height())?;
    let n_levels = schedule.levels.len();

    // Pyramids, index 0 = finest. Partials downsample strictly so blocks
    // straddling their rectangle edges drop out instead of contaminating
    // the coarse targets.
    let mut ref_pyramid = vec![reference.clone()];
    let mut partial_pyramids: Vec<Vec<EquirectGrid>> = vec![partials.to_vec()];
    for _ in 1..n_levels {
        ref_pyramid.push(downsample2(ref_pyramid.last().unwrap()));
        partial_pyramids.push(
            partial_pyramids
                .last()
                .unwrap()
                .iter()
                .map(downsample2_all_valid)
                .collect(),
        );
    }

    let mut report = BlendReport::default();
    let mut solution: Option<EquirectGrid> = None;
    for (k, (&(w, h), &budget)) in schedule
        .levels
        .iter()
        .zip(&schedule.iterations)
        .enumerate()
    {
        let level = n_levels - 1 - k; // pyramid index
        let level_ref = &ref_pyramid[level];
        debug_assert_eq!((level_ref.width(), level_ref.height()), (w, h));
        let target = assemble_targets(&partial_pyramids[level], w, h, wrap)?;
        let init = match &solution {
            None => level_ref.clone(),
            Some(prev) => {
                let coarse_ref = &ref_pyramid[level + 1];
                let mut correction = prev.clone();
                for row in correction.rows() {
                    for col in 0..correction.width() {
                        match (prev.get(col, row), coarse_ref.get(col, row)) {
                            (Some(x), Some(r)) => correction.set(col, row, x - r),
                            _ => correction.set_invalid(col, row),
                        }
                    }
                }
                let up = upsample2(&correction, w, h);
                let mut init = level_ref.clone();
                for row in init.rows() {
                    for col in 0..init.width() {
                        if let (Some(r), Some(c)) = (init.get(col, row), up.get(col, row)) {
                            init.set(col, row, (r + c).max(0.0));
                        }
                    }
                }
                init
            }
        };
        let (x, iterations_used, residual_history) = jacobi_level_solve(
            &target,
            level_ref,
            &init,
            schedule.gamma,
            schedule.omega,
            budget,
            schedule.residual_stop,
            wrap,
        )?;
        report.levels.push(LevelReport {
            width: w,
            height: h,
            budget,
            iterations_used,
            residual_history,
        });
        solution = Some(x);
    }
    Ok((solution.expect("at least one level"), report))
}
