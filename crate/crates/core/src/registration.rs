//! Per-partition registration of a warped depth map to the reference
//! panorama: fit `f(x) = a·x³ + b·x² + c·x + d + x` by least squares over
//! sampled pixel pairs, then transform every pixel of the partition.

use crate::error::{Error, Result};
use crate::grid::{EquirectGrid, Sample};
use crate::partition::Partition;

/// Coefficients of the identity-residual value transform
/// `f(x) = a·x³ + b·x² + c·x + d + x`.
///
/// Degree 1 forces `a = b = 0`; degree 2 forces `a = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegistrationPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub degree: u8,
}

impl RegistrationPoly {
    pub fn new(a: f64, b: f64, c: f64, d: f64, degree: u8) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::Domain(format!("degree {degree} not in 1..=3")));
        }
        if (degree < 3 && a != 0.0) || (degree < 2 && b != 0.0) {
            return Err(Error::Domain(format!(
                "coefficients ({a}, {b}) inconsistent with degree {degree}"
            )));
        }
        Ok(Self { a, b, c, d, degree })
    }

    pub fn identity() -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            degree: 3,
        }
    }

    /// Evaluates the transform, including the identity term.
    pub fn eval(&self, x: f64) -> f64 {
        ((self.a * x + self.b) * x + (self.c + 1.0)) * x + self.d
    }

    /// Derivative of the transform.
    pub fn deriv(&self, x: f64) -> f64 {
        (3.0 * self.a * x + 2.0 * self.b) * x + self.c + 1.0
    }
}

/// Matched `(partition value, reference value)` samples for one partition.
#[derive(Debug, Clone, Default)]
pub struct SamplePairs {
    pub pairs: Vec<(f64, f64)>,
}

impl SamplePairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn distinct_x(&self) -> usize {
        let mut xs: Vec<f64> = self.pairs.iter().map(|p| p.0).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        xs.len()
    }
}

/// Samples both grids on a degree lattice over the partition.
///
/// The lattice runs `phi0, phi0+step, … < phi1` (and likewise in zenith),
/// each point fetched by bilinear interpolation from both grids. Pairs with
/// an invalid or non-positive value on either side are dropped.
pub fn sample_pairs(
    partial: &EquirectGrid,
    reference: &EquirectGrid,
    p: &Partition,
    step_deg: f64,
) -> Result<SamplePairs> {
    if !(step_deg > 0.0) {
        return Err(Error::Domain(format!("sample step {step_deg} must be positive")));
    }
    let mut pairs = Vec::new();
    let mut az = p.phi0;
    while az < p.phi1 - 1e-9 {
        let mut zen = p.theta0;
        while zen < p.theta1 - 1e-9 {
            let x = partial.sample_bilinear(az.rem_euclid(360.0), zen);
            let big_x = reference.sample_bilinear(az.rem_euclid(360.0), zen);
            if let (Sample::Value(x), Sample::Value(big_x)) = (x, big_x) {
                if x > 0.0 && big_x > 0.0 {
                    pairs.push((x, big_x));
                }
            }
            zen += step_deg;
        }
        az += step_deg;
    }
    if pairs.len() < 4 {
        return Err(Error::InsufficientSamples {
            found: pairs.len(),
            need: 4,
        });
    }
    Ok(SamplePairs { pairs })
}

/// Solves a small symmetric system by Gaussian elimination with partial
/// pivoting. Errors when a pivot collapses relative to the matrix scale.
fn solve_dense_small(mat: &mut [[f64; 4]; 4], rhs: &mut [f64; 4], n: usize) -> Result<[f64; 4]> {
    let scale = mat
        .iter()
        .take(n)
        .flat_map(|r| r.iter().take(n))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::DegenerateFit("zero normal matrix".into()));
    }
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&i, &j| mat[i][k].abs().partial_cmp(&mat[j][k].abs()).unwrap())
            .unwrap();
        if mat[pivot_row][k].abs() <= 1e-13 * scale {
            return Err(Error::DegenerateFit(format!(
                "rank-deficient normal matrix (pivot {k})"
            )));
        }
        if pivot_row != k {
            mat.swap(k, pivot_row);
            rhs.swap(k, pivot_row);
        }
        for i in k + 1..n {
            let factor = mat[i][k] / mat[k][k];
            for j in k..n {
                mat[i][j] -= factor * mat[k][j];
            }
            rhs[i] -= factor * rhs[k];
        }
    }
    let mut x = [0.0f64; 4];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for j in k + 1..n {
            acc -= mat[k][j] * x[j];
        }
        x[k] = acc / mat[k][k];
    }
    Ok(x)
}

/// Fits the registration transform by an exact normal-equations solve of
/// the linear least-squares problem, with one iterative-refinement pass.
pub fn fit_poly(samples: &SamplePairs, degree: u8) -> Result<RegistrationPoly> {
    if !(1..=3).contains(&degree) {
        return Err(Error::Domain(format!("degree {degree} not in 1..=3")));
    }
    let unknowns = degree as usize + 1;
    if samples.len() < unknowns || samples.distinct_x() < unknowns {
        return Err(Error::DegenerateFit(format!(
            "{} samples with {} distinct values cannot determine {unknowns} coefficients",
            samples.len(),
            samples.distinct_x()
        )));
    }

    // Basis ordered highest power first; the target is t = X − x.
    let basis = |x: f64, out: &mut [f64; 4]| {
        let mut p = 1.0;
        for k in (0..unknowns).rev() {
            out[k] = p;
            p *= x;
        }
    };

    let mut mat = [[0.0f64; 4]; 4];
    let mut rhs = [0.0f64; 4];
    let mut phi = [0.0f64; 4];
    for &(x, big_x) in &samples.pairs {
        basis(x, &mut phi);
        let t = big_x - x;
        for i in 0..unknowns {
            for j in 0..unknowns {
                mat[i][j] += phi[i] * phi[j];
            }
            rhs[i] += phi[i] * t;
        }
    }

    let mut mat_f = mat;
    let mut rhs_f = rhs;
    let mut coef = solve_dense_small(&mut mat_f, &mut rhs_f, unknowns)?;

    // One refinement pass sharpens the solve on the mildly ill-conditioned
    // power basis.
    let mut residual = [0.0f64; 4];
    for i in 0..unknowns {
        residual[i] = rhs[i];
        for j in 0..unknowns {
            residual[i] -= mat[i][j] * coef[j];
        }
    }
    let mut mat_r = mat;
    if let Ok(delta) = solve_dense_small(&mut mat_r, &mut residual, unknowns) {
        for i in 0..unknowns {
            coef[i] += delta[i];
        }
    }

    let (a, b, c, d) = match degree {
        1 => (0.0, 0.0, coef[0], coef[1]),
        2 => (0.0, coef[0], coef[1], coef[2]),
        _ => (coef[0], coef[1], coef[2], coef[3]),
    };
    RegistrationPoly::new(a, b, c, d, degree)
}

/// Applies the transform to every valid pixel, clamping results at zero.
pub fn apply_poly(poly: &RegistrationPoly, partial: &EquirectGrid) -> EquirectGrid {
    let mut out = partial.clone();
    out.map_valid(|x| poly.eval(x).max(0.0));
    out
}

/// Sum of squared residuals of a transform over sample pairs.
pub fn sse(poly: &RegistrationPoly, samples: &SamplePairs) -> f64 {
    samples
        .pairs
        .iter()
        .map(|&(x, big_x)| {
            let r = poly.eval(x) - big_x;
            r * r
        })
        .sum()
}
