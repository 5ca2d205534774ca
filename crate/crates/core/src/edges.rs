//! Edge detection by diffusion, renormalization and a two-sided cut-off,
//! plus test pattern generators and the invariance checker.

use crate::error::{Error, Result};
use crate::grid::{renormalize_palette, GreyImage, Signal1D};
use crate::perona_malik::{self, PMParams};
use crate::{hdiff1d, hdiff2d};

pub const MIN_TAU: u32 = 128;
pub const MAX_TAU: u32 = 256;

/// Levels of the binary cut-off output in the 256-level palette.
pub const EDGE_WHITE: f64 = 256.0;
pub const EDGE_BLACK: f64 = 1.0;

fn check_tau(tau: u32) -> Result<()> {
    if (MIN_TAU..=MAX_TAU).contains(&tau) {
        Ok(())
    } else {
        Err(Error::param(format!("tau must lie in [{MIN_TAU}, {MAX_TAU}], got {tau}")))
    }
}

/// Marks pixels in the extreme bands: white (256) where `phi >= tau` or
/// `phi <= 256 - tau`, black (1) elsewhere.
///
/// The input must already be quantized to `[1, 256]`.
pub fn cutoff_filter(img: &GreyImage, tau: u32) -> Result<GreyImage> {
    check_tau(tau)?;
    if !img.is_quantized() {
        return Err(Error::input("cut-off filter needs a quantized image; renormalize first"));
    }
    let values = img
        .values()
        .iter()
        .map(|&phi| if in_extreme_band(phi, tau) { EDGE_WHITE } else { EDGE_BLACK })
        .collect();
    img.with_values(values)
}

/// `phi >= tau || phi <= 256 - tau`. Symmetric under `phi -> 256 - phi`.
#[inline]
pub fn in_extreme_band(phi: f64, tau: u32) -> bool {
    phi >= f64::from(tau) || phi <= f64::from(MAX_TAU - tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    HighOrder,
    PeronaMalik(PMParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeParams {
    /// One high-order step per entry; ignored by Perona-Malik.
    pub gamma_schedule: Vec<f64>,
    pub tau: u32,
    pub scheme: Scheme,
}

impl EdgeParams {
    pub fn high_order(gamma_schedule: Vec<f64>, tau: u32) -> Result<Self> {
        let p = Self {
            gamma_schedule,
            tau,
            scheme: Scheme::HighOrder,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn perona_malik(params: PMParams, tau: u32) -> Result<Self> {
        let p = Self {
            gamma_schedule: vec![0.0],
            tau,
            scheme: Scheme::PeronaMalik(params),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if matches!(self.scheme, Scheme::HighOrder) && self.gamma_schedule.is_empty() {
            return Err(Error::param("gamma schedule is empty"));
        }
        Ok(())
    }
}

/// Diffuses, renormalizes to the palette and applies the cut-off.
pub fn detect_edges(img: &GreyImage, params: &EdgeParams) -> Result<GreyImage> {
    params.validate()?;
    let diffused = match &params.scheme {
        Scheme::HighOrder => hdiff2d::multi_step(img, &params.gamma_schedule)?,
        Scheme::PeronaMalik(pm) => perona_malik::run(img, pm)?,
    };
    cutoff_filter(&renormalize_palette(&diffused), params.tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// `V1` where `i + j` is even.
    Checkerboard,
    /// Constant along each column; bands of `period` columns alternate `V1`, `V2`.
    VStripes,
    /// Constant along each row; bands of `period` rows alternate.
    HStripes,
    /// `V1` for rows `i <= split`, `V2` below.
    HalfPlaneX,
    /// `V1` for columns `j <= split`, `V2` to the right.
    HalfPlaneY,
    /// `V2` where `i < j`, `V1` elsewhere.
    Diagonal,
    /// 1D: `V1` before `split`, the mean at `split`, `V2` after.
    Ramp1D,
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "checkerboard" => PatternKind::Checkerboard,
            "v-stripes" => PatternKind::VStripes,
            "h-stripes" => PatternKind::HStripes,
            "half-plane-x" => PatternKind::HalfPlaneX,
            "half-plane-y" => PatternKind::HalfPlaneY,
            "diagonal" => PatternKind::Diagonal,
            "ramp-1d" => PatternKind::Ramp1D,
            other => return Err(Error::param(format!("unknown pattern '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub n: usize,
    pub v1: f64,
    pub v2: f64,
    /// Stripe width, in pixels.
    pub period: usize,
    /// Split row/column for half-planes, mid sample for the ramp.
    pub split: usize,
}

impl PatternSpec {
    /// Defaults: period 1, split at `n / 2`.
    pub fn new(kind: PatternKind, n: usize, v1: f64, v2: f64) -> Self {
        Self {
            kind,
            n,
            v1,
            v2,
            period: 1,
            split: n / 2,
        }
    }

    pub fn with_period(mut self, period: usize) -> Self {
        self.period = period;
        self
    }

    pub fn with_split(mut self, split: usize) -> Self {
        self.split = split;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Image(GreyImage),
    Signal(Signal1D),
}

impl Pattern {
    pub fn into_image(self) -> Option<GreyImage> {
        match self {
            Pattern::Image(img) => Some(img),
            Pattern::Signal(_) => None,
        }
    }

    pub fn into_signal(self) -> Option<Signal1D> {
        match self {
            Pattern::Signal(s) => Some(s),
            Pattern::Image(_) => None,
        }
    }
}

pub fn generate_pattern(spec: &PatternSpec) -> Result<Pattern> {
    let PatternSpec {
        kind,
        n,
        v1,
        v2,
        period,
        split,
    } = *spec;
    if n < hdiff1d::MIN_LEN {
        return Err(Error::param(format!("pattern size must be at least 4, got {n}")));
    }
    if !(v1.is_finite() && v2.is_finite()) || v1 == v2 {
        return Err(Error::param(format!("pattern levels must be finite and distinct, got {v1}, {v2}")));
    }
    let band = |k: usize| if ((k - 1) / period).is_multiple_of(2) { v1 } else { v2 };
    match kind {
        PatternKind::VStripes | PatternKind::HStripes if period == 0 => {
            return Err(Error::param("stripe period must be at least 1"));
        }
        PatternKind::HalfPlaneX | PatternKind::HalfPlaneY if !(1..n).contains(&split) => {
            return Err(Error::param(format!("split must lie in 1..={}, got {split}", n - 1)));
        }
        PatternKind::Ramp1D if !(1..=n).contains(&split) => {
            return Err(Error::param(format!("ramp midpoint must lie in 1..={n}, got {split}")));
        }
        _ => {}
    }
    let img = match kind {
        PatternKind::Checkerboard => GreyImage::from_fn(n, |i, j| if (i + j) % 2 == 0 { v1 } else { v2 }),
        PatternKind::VStripes => GreyImage::from_fn(n, |_, j| band(j)),
        PatternKind::HStripes => GreyImage::from_fn(n, |i, _| band(i)),
        PatternKind::HalfPlaneX => GreyImage::from_fn(n, |i, _| if i <= split { v1 } else { v2 }),
        PatternKind::HalfPlaneY => GreyImage::from_fn(n, |_, j| if j <= split { v1 } else { v2 }),
        PatternKind::Diagonal => GreyImage::from_fn(n, |i, j| if i < j { v2 } else { v1 }),
        PatternKind::Ramp1D => {
            let mid = 0.5 * (v1 + v2);
            let values = (1..=n)
                .map(|j| match j.cmp(&split) {
                    std::cmp::Ordering::Less => v1,
                    std::cmp::Ordering::Equal => mid,
                    std::cmp::Ordering::Greater => v2,
                })
                .collect();
            return Ok(Pattern::Signal(Signal1D::unit(values)?));
        }
    };
    img.map(Pattern::Image)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    /// Every coefficient is exactly zero and the output equals the input bitwise.
    pub is_invariant: bool,
    /// Largest `|R|` for the high-order scheme; largest `|du/dt|` for Perona-Malik.
    pub max_abs_r: f64,
    pub max_abs_change: f64,
}

/// Runs one step and reports whether the image is a fixed point.
///
/// `gamma` is the high-order step size and is ignored for Perona-Malik,
/// which takes one step of `dt`.
pub fn check_invariance(img: &GreyImage, scheme: &Scheme, gamma: f64) -> Result<InvarianceReport> {
    match scheme {
        Scheme::HighOrder => {
            let t = hdiff2d::step_traced(img, gamma)?;
            Ok(InvarianceReport {
                is_invariant: t.coefficients_vanish() && t.updated.bitwise_eq(img),
                max_abs_r: t.max_abs_coefficient(),
                max_abs_change: t.updated.max_abs_diff(img),
            })
        }
        Scheme::PeronaMalik(pm) => {
            let rate = perona_malik::flux_divergence(img, pm.a())?;
            let out = perona_malik::step(img, pm)?;
            Ok(InvarianceReport {
                is_invariant: rate.iter().all(|&r| r == 0.0) && out.bitwise_eq(img),
                max_abs_r: rate.iter().fold(0.0, |m, r| m.max(r.abs())),
                max_abs_change: out.max_abs_diff(img),
            })
        }
    }
}

/// 1D counterpart of [`check_invariance`] for the high-order scheme.
pub fn check_invariance_1d(signal: &Signal1D, gamma: f64) -> Result<InvarianceReport> {
    let t = hdiff1d::step_traced(signal, gamma)?;
    let unchanged = t
        .updated
        .values()
        .iter()
        .zip(signal.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let max_abs_change = t
        .updated
        .values()
        .iter()
        .zip(signal.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(InvarianceReport {
        is_invariant: t.coefficients_vanish() && unchanged,
        max_abs_r: t.coefficient_ext.max_abs().max(t.coefficient_nodes.max_abs()),
        max_abs_change,
    })
}
