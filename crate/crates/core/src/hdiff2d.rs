//! One cycle of the 2D high-order anisotropic diffusion update.
//!
//! All stages read the Neumann-bordered grid `u_{i,j}`, `i, j = 0..=N+1`,
//! and never touch its four corners. Index ranges per stage (staggered axes
//! use half-indices, `k` meaning `k + 1/2`):
//!
//! | stage                    | field        | x range        | y range        |
//! |--------------------------|--------------|----------------|----------------|
//! | [`average_to_staggered`] | `AverageX`   | `1 ..= N-1`    | `0 ..= N+1`    |
//! |                          | `AverageY`   | `0 ..= N+1`    | `1 ..= N-1`    |
//! | [`variations`]           | `VariationX` | `0 ..= N`      | `1 ..= N-1`    |
//! |                          | `VariationY` | `1 ..= N-1`    | `0 ..= N`      |
//! | [`laplacian`]            | `Laplacian`  | `1 ..= N-1`    | `1 ..= N-1`    |
//! | [`coefficient`]          | `D`, `R`     | `1 ..= N-1`    | `1 ..= N-1`    |
//! | [`extend_coefficient`]   | `R`          | `-1 ..= N+1`   | `-1 ..= N+1`   |
//! | [`interpolate_to_nodes`] | `R_{i,j}`    | `1 ..= N`      | `1 ..= N`      |
//!
//! Every per-node expression is symmetric under swapping x and y, so the
//! step commutes bitwise with image transposition.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::grid::{extend_neumann_2d, Bordered2D, Field2D, GreyImage, Quantity2D};
use crate::hdiff1d::{anisotropy, check_gamma, LAGRANGE_WEIGHTS, MIN_LEN};

fn check_side(n: usize) -> Result<()> {
    if n < MIN_LEN {
        Err(Error::input(format!("image side must be at least {MIN_LEN}, got {n}")))
    } else {
        Ok(())
    }
}

fn intersect(a: RangeInclusive<isize>, b: RangeInclusive<isize>) -> RangeInclusive<isize> {
    (*a.start()).max(*b.start())..=(*a.end()).min(*b.end())
}

fn shrink(r: RangeInclusive<isize>) -> RangeInclusive<isize> {
    r.start() + 1..=r.end() - 1
}

fn non_empty(r: &RangeInclusive<isize>, what: &str) -> Result<()> {
    if r.is_empty() {
        Err(Error::input(format!("{what}: insufficient index range")))
    } else {
        Ok(())
    }
}

/// Pixel averages at the half-integer nodes:
/// `u_{k+1/2, m} = (u_{k,m} + u_{k+1,m}) / 2` and the same along y.
pub fn average_to_staggered(u: &Bordered2D) -> Result<(Field2D, Field2D)> {
    let n = u.n() as isize;
    let avg_x = Field2D::from_fn(Quantity2D::AverageX, 1..=n - 1, 0..=n + 1, |k, m| {
        let (k, m) = (k as usize, m as usize);
        0.5 * (u.get(k, m) + u.get(k + 1, m))
    })?;
    let avg_y = Field2D::from_fn(Quantity2D::AverageY, 0..=n + 1, 1..=n - 1, |m, k| {
        let (m, k) = (m as usize, k as usize);
        0.5 * (u.get(m, k) + u.get(m, k + 1))
    })?;
    Ok((avg_x, avg_y))
}

/// Directional differences of the averages, landing on the doubly staggered grid.
///
/// `dx_{kx+1/2, ky+1/2} = (avg_y(kx+1, ky+1/2) - avg_y(kx, ky+1/2)) / h`, and
/// symmetrically for `dy`. Computed over every index the inputs support.
pub fn variations(avg_x: &Field2D, avg_y: &Field2D, h: f64) -> Result<(Field2D, Field2D)> {
    let dx_x = avg_y.x_range().start().to_owned()..=avg_y.x_range().end() - 1;
    let dy_y = avg_x.y_range().start().to_owned()..=avg_x.y_range().end() - 1;
    non_empty(&dx_x, "x-variations")?;
    non_empty(&dy_y, "y-variations")?;
    let dx = Field2D::from_fn(Quantity2D::VariationX, dx_x, avg_y.y_range(), |kx, ky| {
        (avg_y.at(kx + 1, ky) - avg_y.at(kx, ky)) / h
    })?;
    let dy = Field2D::from_fn(Quantity2D::VariationY, avg_x.x_range(), dy_y, |kx, ky| {
        (avg_x.at(kx, ky + 1) - avg_x.at(kx, ky)) / h
    })?;
    Ok((dx, dy))
}

/// Laplacian approximation from the neighbouring variations:
/// `l = ((dx_{+1} - dx_{-1}) + (dy_{+1} - dy_{-1})) / (2h)`.
///
/// Exact for bivariate polynomials of total degree up to three.
pub fn laplacian(dx: &Field2D, dy: &Field2D, h: f64) -> Result<Field2D> {
    let xs = intersect(shrink(dx.x_range()), dy.x_range());
    let ys = intersect(dx.y_range(), shrink(dy.y_range()));
    non_empty(&xs, "laplacian")?;
    non_empty(&ys, "laplacian")?;
    let denom = 2.0 * h;
    Field2D::from_fn(Quantity2D::Laplacian, xs, ys, |kx, ky| {
        let along_x = dx.at(kx + 1, ky) - dx.at(kx - 1, ky);
        let along_y = dy.at(kx, ky + 1) - dy.at(kx, ky - 1);
        (along_x + along_y) / denom
    })
}

/// Gradient magnitude `D = sqrt(dx^2 + dy^2)` and coefficient
/// `R = sqrt(D^2 / (1 + D^2)) * l`, on the index range of `l`.
pub fn coefficient(dx: &Field2D, dy: &Field2D, l: &Field2D) -> Result<(Field2D, Field2D)> {
    let (xs, ys) = (l.x_range(), l.y_range());
    for f in [dx, dy] {
        let covers = f.contains(*xs.start(), *ys.start()) && f.contains(*xs.end(), *ys.end());
        if !covers {
            return Err(Error::input(format!(
                "{:?} does not cover the laplacian range {xs:?} x {ys:?}",
                f.quantity()
            )));
        }
    }
    let magnitude = Field2D::from_fn(Quantity2D::GradientMagnitude, xs.clone(), ys.clone(), |kx, ky| {
        let (a, b) = (dx.at(kx, ky), dy.at(kx, ky));
        (a * a + b * b).sqrt()
    })?;
    let coeff = Field2D::from_fn(Quantity2D::Coefficient, xs, ys, |kx, ky| {
        anisotropy(magnitude.at(kx, ky)) * l.at(kx, ky)
    })?;
    Ok((magnitude, coeff))
}

/// Source index of the mirrored layers `-1 -> 2`, `0 -> 1`, `N -> N-1`, `N+1 -> N-2`.
fn mirror(k: isize, n: isize) -> isize {
    match k {
        -1 => 2,
        0 => 1,
        k if k == n => n - 1,
        k if k == n + 1 => n - 2,
        k => k,
    }
}

/// Adds a double mirrored layer on every side of a coefficient field stored
/// on `1 ..= N-1` in both axes: first along x for every row, then along y
/// for every extended column.
pub fn extend_coefficient(r: &Field2D) -> Result<Field2D> {
    let (xs, ys) = (r.x_range(), r.y_range());
    if *xs.start() != 1 || xs != ys {
        return Err(Error::input(format!(
            "coefficient field must cover 1..=N-1 in both axes, got {xs:?} x {ys:?}"
        )));
    }
    let n = xs.end() + 1;
    check_side(n as usize)?;
    let along_x = Field2D::from_fn(Quantity2D::Coefficient, -1..=n + 1, ys.clone(), |kx, ky| {
        r.at(mirror(kx, n), ky)
    })?;
    Field2D::from_fn(Quantity2D::Coefficient, -1..=n + 1, -1..=n + 1, |kx, ky| {
        along_x.at(kx, mirror(ky, n))
    })
}

/// Tensor-product four-point Lagrange interpolation to the integer nodes,
/// weights `w_p w_q / 256` with `w = (-1, 9, 9, -1)`.
///
/// Produces every node whose 4x4 staggered neighbourhood is stored; for a
/// field from [`extend_coefficient`] that is `1 ..= N` in both axes.
/// Mirror-image terms are summed in pairs so the result is exactly
/// symmetric under transposition.
pub fn interpolate_to_nodes(r: &Field2D) -> Result<Field2D> {
    let xs = r.x_range().start() + 2..=r.x_range().end() - 1;
    let ys = r.y_range().start() + 2..=r.y_range().end() - 1;
    non_empty(&xs, "interpolation")?;
    non_empty(&ys, "interpolation")?;
    const OFFSETS: [isize; 4] = [-2, -1, 0, 1];
    let w = LAGRANGE_WEIGHTS;
    Field2D::from_fn(Quantity2D::CoefficientAtNodes, xs, ys, |i, j| {
        let mut acc = 0.0;
        for a in 0..4 {
            acc += w[a] * w[a] * r.at(i + OFFSETS[a], j + OFFSETS[a]);
        }
        for a in 0..4 {
            for b in a + 1..4 {
                let pair = r.at(i + OFFSETS[a], j + OFFSETS[b]) + r.at(i + OFFSETS[b], j + OFFSETS[a]);
                acc += w[a] * w[b] * pair;
            }
        }
        acc / 256.0
    })
}

/// Every intermediate field of one 2D cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Step2DTrace {
    pub avg_x: Field2D,
    pub avg_y: Field2D,
    pub dx: Field2D,
    pub dy: Field2D,
    pub laplacian: Field2D,
    pub magnitude: Field2D,
    pub coefficient: Field2D,
    pub coefficient_ext: Field2D,
    pub coefficient_nodes: Field2D,
    pub updated: GreyImage,
}

impl Step2DTrace {
    /// All coefficient values (staggered, mirrored and interpolated) are zero.
    pub fn coefficients_vanish(&self) -> bool {
        self.coefficient.is_all_zero()
            && self.coefficient_ext.is_all_zero()
            && self.coefficient_nodes.is_all_zero()
    }

    /// Largest `|R|` over the staggered and interpolated coefficient fields.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficient_ext.max_abs().max(self.coefficient_nodes.max_abs())
    }
}

/// One cycle, keeping every intermediate field.
pub fn step_traced(img: &GreyImage, gamma: f64) -> Result<Step2DTrace> {
    check_side(img.n())?;
    check_gamma(gamma)?;
    let h = img.h();
    let bordered = extend_neumann_2d(img);
    let (avg_x, avg_y) = average_to_staggered(&bordered)?;
    let (dx, dy) = variations(&avg_x, &avg_y, h)?;
    let l = laplacian(&dx, &dy, h)?;
    let (magnitude, coeff) = coefficient(&dx, &dy, &l)?;
    let coeff_ext = extend_coefficient(&coeff)?;
    let nodes = interpolate_to_nodes(&coeff_ext)?;
    let values = img
        .values()
        .iter()
        .zip(nodes.values())
        .map(|(&u, &r)| u + gamma * r)
        .collect();
    let updated = img.with_values(values)?;
    Ok(Step2DTrace {
        avg_x,
        avg_y,
        dx,
        dy,
        laplacian: l,
        magnitude,
        coefficient: coeff,
        coefficient_ext: coeff_ext,
        coefficient_nodes: nodes,
        updated,
    })
}

/// `u_{i,j} <- u_{i,j} + gamma R_{i,j}`. No clamping to the palette.
pub fn step(img: &GreyImage, gamma: f64) -> Result<GreyImage> {
    step_traced(img, gamma).map(|t| t.updated)
}

/// Applies [`step`] once per entry of `schedule`, in order.
pub fn multi_step(img: &GreyImage, schedule: &[f64]) -> Result<GreyImage> {
    if schedule.is_empty() {
        return Err(Error::param("gamma schedule is empty"));
    }
    schedule.iter().try_fold(img.clone(), |acc, &g| step(&acc, g))
}
