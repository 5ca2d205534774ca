//! One cycle of the 1D high-order anisotropic diffusion update.
//!
//! Stage ranges, as half-indices (`k` is the position `k + 1/2`):
//!
//! | stage                  | quantity          | indices        |
//! |------------------------|-------------------|----------------|
//! | [`variations`]         | `d`               | `0 ..= N`      |
//! | [`second_derivative`]  | `s`               | `1 ..= N - 1`  |
//! | [`coefficient`]        | `R`               | `1 ..= N - 1`  |
//! | [`extend_coefficient`] | `R` (mirrored)    | `-1 ..= N + 1` |
//! | [`interpolate_to_nodes`] | `R_i` (integer) | `1 ..= N`      |

use crate::error::{Error, Result};
use crate::grid::{extend_neumann_1d, Extended1D, Field1D, Quantity1D, Signal1D};

/// Smallest signal length the four-point stencils accept.
pub const MIN_LEN: usize = 4;

/// Lagrange weights for the midpoint of four equispaced samples, over 16.
pub(crate) const LAGRANGE_WEIGHTS: [f64; 4] = [-1.0, 9.0, 9.0, -1.0];

fn check_len(n: usize) -> Result<()> {
    if n < MIN_LEN {
        Err(Error::input(format!("need at least {MIN_LEN} samples, got {n}")))
    } else {
        Ok(())
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("gamma must be finite, got {gamma}")))
    }
}

/// Smooth anisotropy factor `sqrt(g^2 / (1 + g^2))`; vanishes at `g = 0`.
#[inline]
pub(crate) fn anisotropy(g: f64) -> f64 {
    let g2 = g * g;
    (g2 / (1.0 + g2)).sqrt()
}

/// First differences `d_{k+1/2} = (u_{k+1} - u_k) / h` for `k = 0..=N`.
///
/// With Neumann borders the two end values are exactly zero.
pub fn variations(u: &Extended1D) -> Field1D {
    let (n, h) = (u.n() as isize, u.h());
    Field1D::from_fn(Quantity1D::Variation, 0..=n, |k| {
        let k = k as usize;
        (u.get(k + 1) - u.get(k)) / h
    })
}

/// Second-derivative approximation at `k + 1/2`, `k = 1..=N-1`:
/// `(u_{k-1} - u_k - u_{k+1} + u_{k+2}) / (2 h^2)`.
///
/// Exact for cubic polynomials.
pub fn second_derivative(u: &Extended1D) -> Result<Field1D> {
    check_len(u.n())?;
    let (n, h) = (u.n() as isize, u.h());
    let denom = 2.0 * h * h;
    Ok(Field1D::from_fn(Quantity1D::SecondDerivative, 1..=n - 1, |k| {
        let k = k as usize;
        (u.get(k - 1) - u.get(k) - u.get(k + 1) + u.get(k + 2)) / denom
    }))
}

/// `R = sqrt(d^2 / (1 + d^2)) * s` on the index range of `s`.
pub fn coefficient(d: &Field1D, s: &Field1D) -> Result<Field1D> {
    if !d.contains(s.first()) || !d.contains(s.last()) {
        return Err(Error::input(format!(
            "variations {:?} do not cover second derivative range {:?}",
            d.range(),
            s.range()
        )));
    }
    Ok(Field1D::from_fn(Quantity1D::Coefficient, s.range(), |k| {
        anisotropy(d.at(k)) * s.at(k)
    }))
}

/// Adds the two mirrored layers at each end of a coefficient field defined
/// on `1 ..= N - 1`:
/// `R_{-1/2} = R_{5/2}`, `R_{1/2} = R_{3/2}`, `R_{N+1/2} = R_{N-1/2}`, `R_{N+3/2} = R_{N-3/2}`.
pub fn extend_coefficient(r: &Field1D) -> Result<Field1D> {
    if r.first() != 1 {
        return Err(Error::input(format!(
            "coefficient field must start at half-index 1, got {:?}",
            r.range()
        )));
    }
    let n = r.last() + 1;
    check_len(n as usize)?;
    Ok(Field1D::from_fn(Quantity1D::Coefficient, -1..=n + 1, |k| match k {
        -1 => r.at(2),
        0 => r.at(1),
        k if k == n => r.at(n - 1),
        k if k == n + 1 => r.at(n - 2),
        k => r.at(k),
    }))
}

/// Four-point Lagrange interpolation from half-integer to integer positions:
/// `R_i = (-R_{i-3/2} + 9 R_{i-1/2} + 9 R_{i+1/2} - R_{i+3/2}) / 16`.
///
/// Produces every node whose four neighbours are stored, i.e. nodes
/// `first + 2 ..= last - 1` of the input half-index range. For a field
/// from [`extend_coefficient`] that is `1 ..= N`.
pub fn interpolate_to_nodes(r: &Field1D) -> Result<Field1D> {
    if r.len() < 4 {
        return Err(Error::input(format!(
            "interpolation needs 4 staggered values, got range {:?}",
            r.range()
        )));
    }
    Ok(Field1D::from_fn(
        Quantity1D::CoefficientAtNodes,
        r.first() + 2..=r.last() - 1,
        |i| (-r.at(i - 2) + 9.0 * r.at(i - 1) + 9.0 * r.at(i) - r.at(i + 1)) / 16.0,
    ))
}

/// Every intermediate field of one 1D cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Step1DTrace {
    pub variations: Field1D,
    pub second_derivative: Field1D,
    pub coefficient: Field1D,
    pub coefficient_ext: Field1D,
    pub coefficient_nodes: Field1D,
    pub updated: Signal1D,
}

impl Step1DTrace {
    /// All coefficient values (staggered, mirrored and interpolated) are zero.
    pub fn coefficients_vanish(&self) -> bool {
        [&self.coefficient, &self.coefficient_ext, &self.coefficient_nodes]
            .iter()
            .all(|f| f.values().iter().all(|&v| v == 0.0))
    }
}

/// One cycle, keeping every intermediate field.
pub fn step_traced(u: &Signal1D, gamma: f64) -> Result<Step1DTrace> {
    check_len(u.len())?;
    check_gamma(gamma)?;
    let ext = extend_neumann_1d(u);
    let d = variations(&ext);
    let s = second_derivative(&ext)?;
    let r = coefficient(&d, &s)?;
    let r_ext = extend_coefficient(&r)?;
    let r_nodes = interpolate_to_nodes(&r_ext)?;
    let values = u
        .values()
        .iter()
        .zip(r_nodes.values())
        .map(|(&ui, &ri)| ui + gamma * ri)
        .collect();
    let updated = Signal1D::new(values, u.h())?;
    Ok(Step1DTrace {
        variations: d,
        second_derivative: s,
        coefficient: r,
        coefficient_ext: r_ext,
        coefficient_nodes: r_nodes,
        updated,
    })
}

/// `u_i <- u_i + gamma R_i`, `i = 1..=N`. No clamping to the palette.
pub fn step(u: &Signal1D, gamma: f64) -> Result<Signal1D> {
    step_traced(u, gamma).map(|t| t.updated)
}

/// Applies [`step`] once per entry of `schedule`, in order.
pub fn multi_step(u: &Signal1D, schedule: &[f64]) -> Result<Signal1D> {
    if schedule.is_empty() {
        return Err(Error::param("gamma schedule is empty"));
    }
    schedule.iter().try_fold(u.clone(), |acc, &g| step(&acc, g))
}
