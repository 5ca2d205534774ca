//! Classical Perona-Malik diffusion with an explicit five-point scheme.
//!
//! Conductivity `g_a(s) = 1 / (1 + s^2 / a^2)` is evaluated at the pixels
//! from centred differences, averaged to the half-nodes, and multiplies the
//! one-sided differences of the flux form. Borders are re-derived with
//! Neumann replication before every step, so the boundary fluxes vanish.

use crate::error::{Error, Result};
use crate::grid::{extend_neumann_2d, Bordered2D, Field2D, GreyImage, Quantity2D};

/// Tolerance on `T / dt` being an integer.
const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PMParams {
    a: f64,
    dt: f64,
    t_final: f64,
    steps: usize,
}

impl PMParams {
    pub fn new(a: f64, dt: f64, t_final: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::param(format!("conductivity parameter a must be > 0, got {a}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param(format!("time step must be > 0, got {dt}")));
        }
        if !(t_final.is_finite() && t_final >= dt) {
            return Err(Error::param(format!(
                "final time must be at least one time step, got T={t_final}, dt={dt}"
            )));
        }
        let ratio = t_final / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > STEP_COUNT_TOL {
            return Err(Error::param(format!("T / dt = {ratio} is not an integer")));
        }
        Ok(Self {
            a,
            dt,
            t_final,
            steps: steps as usize,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Number of steps `K = T / dt`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `dt > h^2 / 4`: the explicit scheme may lose the maximum principle.
    pub fn exceeds_stability_bound(&self, h: f64) -> bool {
        self.dt > h * h / 4.0
    }
}

/// `g_a(eta) = 1 / (1 + eta^2 / a^2)`.
pub fn g_a(eta: f64, a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param(format!("a must be > 0, got {a}")));
    }
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::param(format!("gradient magnitude must be >= 0, got {eta}")));
    }
    Ok(conductivity(eta, a))
}

#[inline]
fn conductivity(eta: f64, a: f64) -> f64 {
    1.0 / (1.0 + (eta * eta) / (a * a))
}

/// Conductivity at pixels `1..=N` from centred differences of the bordered grid.
pub fn conductivity_nodes(u: &Bordered2D, a: f64) -> Result<Field2D> {
    g_a(0.0, a)?;
    let n = u.n() as isize;
    let two_h = 2.0 * u.h();
    Field2D::from_fn(Quantity2D::Conductivity, 1..=n, 1..=n, |i, j| {
        let (i, j) = (i as usize, j as usize);
        let gx = (u.get(i + 1, j) - u.get(i - 1, j)) / two_h;
        let gy = (u.get(i, j + 1) - u.get(i, j - 1)) / two_h;
        conductivity((gx * gx + gy * gy).sqrt(), a)
    })
}

/// Divergence term of the five-point scheme at every pixel, i.e. the rate
/// `(u^{k+1} - u^k) / dt`.
pub fn flux_divergence(img: &GreyImage, a: f64) -> Result<Vec<f64>> {
    let n = img.n();
    let h = img.h();
    let u = extend_neumann_2d(img);
    let g = conductivity_nodes(&u, a)?;
    // replicated conductivity on the border; the matching fluxes are zero anyway
    let gat = |i: usize, j: usize| g.at(i.clamp(1, n) as isize, j.clamp(1, n) as isize);
    let mut rate = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            let c = u.get(i, j);
            let gc = gat(i, j);
            let east = 0.5 * (gc + gat(i + 1, j)) * (u.get(i + 1, j) - c) / h;
            let west = 0.5 * (gc + gat(i - 1, j)) * (c - u.get(i - 1, j)) / h;
            let north = 0.5 * (gc + gat(i, j + 1)) * (u.get(i, j + 1) - c) / h;
            let south = 0.5 * (gc + gat(i, j - 1)) * (c - u.get(i, j - 1)) / h;
            rate.push((east - west + north - south) / h);
        }
    }
    Ok(rate)
}

/// One explicit step of size `params.dt()`.
pub fn step(img: &GreyImage, params: &PMParams) -> Result<GreyImage> {
    let rate = flux_divergence(img, params.a)?;
    let values = img
        .values()
        .iter()
        .zip(&rate)
        .map(|(&u, &r)| u + params.dt * r)
        .collect();
    img.with_values(values)
}

/// `K = T / dt` explicit steps.
pub fn run(img: &GreyImage, params: &PMParams) -> Result<GreyImage> {
    (0..params.steps).try_fold(img.clone(), |acc, _| step(&acc, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g_a_values() {
        assert_eq!(g_a(0.0, 3.0).unwrap(), 1.0);
        assert_eq!(g_a(2.5, 2.5).unwrap(), 0.5);
        assert!((g_a(5.0 * 3f64.sqrt(), 5.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(g_a(1.0, 0.0).is_err());
        assert!(g_a(-1.0, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        let p = PMParams::new(5.0, 0.2, 2.0).unwrap();
        assert_eq!(p.steps(), 10);
        assert!(!p.exceeds_stability_bound(1.0));
        assert!(PMParams::new(5.0, 0.3, 0.9).unwrap().exceeds_stability_bound(1.0));
        assert_eq!(PMParams::new(5.0, 0.2, 0.2).unwrap().steps(), 1);
        assert_eq!(PMParams::new(5.0, 0.3, 0.9).unwrap().steps(), 3);
        assert!(PMParams::new(5.0, 0.3, 1.0).is_err());
        assert!(PMParams::new(0.0, 0.2, 2.0).is_err());
        assert!(PMParams::new(1.0, 0.2, 0.1).is_err());
    }

    #[test]
    fn conductivity_examples() {
        let flat = extend_neumann_2d(&GreyImage::from_fn(5, |_, _| 9.0).unwrap());
        assert!(conductivity_nodes(&flat, 2.0).unwrap().values().iter().all(|&g| g == 1.0));

        let ramp = Bordered2D::from_fn(5, 1.0, |i, _| i as f64).unwrap();
        assert!(conductivity_nodes(&ramp, 1.0).unwrap().values().iter().all(|&g| g == 0.5));

        let checker = GreyImage::from_fn(6, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 256.0 }).unwrap();
        let g = conductivity_nodes(&extend_neumann_2d(&checker), 5.0).unwrap();
        for i in 2..=5 {
            for j in 2..=5 {
                assert_eq!(g.at(i, j), 1.0);
            }
        }
    }

    #[test]
    fn hot_pixel_one_step() {
        // a huge a makes g = 1 up to ~1e-12
        let img = GreyImage::from_fn(5, |i, j| if (i, j) == (3, 3) { 100.0 } else { 10.0 }).unwrap();
        let p = PMParams::new(1e7, 0.2, 0.2).unwrap();
        let out = step(&img, &p).unwrap();
        assert!((out.get(3, 3) - (100.0 - 4.0 * 0.2 * 90.0)).abs() < 1e-6);
        for (i, j) in [(2, 3), (4, 3), (3, 2), (3, 4)] {
            assert!((out.get(i, j) - (10.0 + 0.2 * 90.0)).abs() < 1e-6);
        }
        assert_eq!(out.get(1, 1), 10.0);
    }

    #[test]
    fn checkerboard_is_deformed() {
        let img = GreyImage::from_fn(10, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 256.0 }).unwrap();
        let p = PMParams::new(5.0, 0.2, 0.2).unwrap();
        assert!(step(&img, &p).unwrap().max_abs_diff(&img) > 0.0);
    }

    #[test]
    fn run_counts_steps() {
        let img = GreyImage::from_fn(6, |i, j| ((i * 7 + j * 3) % 11) as f64).unwrap();
        let one = PMParams::new(5.0, 0.2, 0.2).unwrap();
        assert_eq!(run(&img, &one).unwrap(), step(&img, &one).unwrap());
        let flat = GreyImage::from_fn(6, |_, _| 77.0).unwrap();
        assert_eq!(run(&flat, &PMParams::new(5.0, 0.2, 2.0).unwrap()).unwrap(), flat);
    }

    proptest! {
        #[test]
        fn interior_sum_is_conserved(n in 2usize..12, seed in proptest::collection::vec(1.0f64..256.0, 144), a in 0.5f64..50.0) {
            let img = GreyImage::new(n, seed[..n * n].to_vec()).unwrap();
            let p = PMParams::new(a, 0.2, 0.2).unwrap();
            let out = step(&img, &p).unwrap();
            let before: f64 = img.values().iter().sum();
            let after: f64 = out.values().iter().sum();
            prop_assert!((after - before).abs() <= 1e-10 * before.abs());
        }

        #[test]
        fn maximum_principle(n in 2usize..12, seed in proptest::collection::vec(1.0f64..256.0, 144), a in 0.5f64..50.0, dt in 0.01f64..0.25) {
            let img = GreyImage::new(n, seed[..n * n].to_vec()).unwrap();
            let p = PMParams::new(a, dt, dt).unwrap();
            let out = step(&img, &p).unwrap();
            let (lo, hi) = img.min_max();
            let (olo, ohi) = out.min_max();
            prop_assert!(olo >= lo - 1e-12 && ohi <= hi + 1e-12);
        }
    }
}
