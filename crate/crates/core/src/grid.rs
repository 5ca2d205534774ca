//! Signal and image containers, Neumann borders, staggered field storage
//! and palette renormalization.
//!
//! # Index conventions
//!
//! Pixels are addressed with 1-based indices, `1..=N`, so that stencil code
//! reads like the difference formulas it implements. Neumann-bordered
//! containers add index `0` and `N + 1`.
//!
//! Half-integer positions are stored with an integer *half-index*: along a
//! staggered axis, index `k` denotes the position `k + 1/2`. So the 1D
//! variations `d` at positions `1/2 ..= N + 1/2` live at half-indices
//! `0 ..= N`, and the mirrored coefficient layer at `-1/2` has half-index
//! `-1`. Whether an axis is staggered or integer is fixed by the field's
//! [`Quantity1D`] / [`Quantity2D`] tag (see [`Centering`]).

use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Number of grey levels in the default palette `[1, 256]`.
pub const DEFAULT_PALETTE_MAX: u32 = 256;

fn check_spacing(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("grid spacing must be finite and > 0, got {h}")))
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(idx) => Err(Error::input(format!(
            "value at flat index {idx} is not finite ({})",
            values[idx]
        ))),
        None => Ok(()),
    }
}

/// A 1D sequence of grey intensities `u_1 ..= u_N` with grid spacing `h`.
///
/// Construction only requires `N >= 2` so that border extension can be used
/// on its own; the diffusion stages check `N >= 4` themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    values: Vec<f64>,
    h: f64,
}

impl Signal1D {
    pub fn new(values: Vec<f64>, h: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input(format!(
                "a signal needs at least 2 samples, got {}",
                values.len()
            )));
        }
        check_finite(&values)?;
        check_spacing(h)?;
        Ok(Self { values, h })
    }

    /// Signal with unit grid spacing.
    pub fn unit(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Sample `u_i`, `i` in `1..=N`.
    pub fn get(&self, i: usize) -> f64 {
        assert!(i >= 1 && i <= self.values.len(), "pixel index {i} out of 1..={}", self.values.len());
        self.values[i - 1]
    }
}

/// A signal extended by one sample at each end, indices `0 ..= N + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extended1D {
    values: Vec<f64>,
    h: f64,
}

impl Extended1D {
    /// Wraps raw samples `u_0 ..= u_{N+1}` without imposing any border rule.
    ///
    /// Useful for feeding exact samples of a smooth function to the stencils.
    pub fn from_values(values: Vec<f64>, h: f64) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::input(format!(
                "an extended signal needs at least 4 samples, got {}",
                values.len()
            )));
        }
        check_finite(&values)?;
        check_spacing(h)?;
        Ok(Self { values, h })
    }

    /// Number of interior samples `N`.
    pub fn n(&self) -> usize {
        self.values.len() - 2
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Sample `u_k`, `k` in `0..=N+1`.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Replicates the end samples: `u_0 = u_1`, `u_{N+1} = u_N`.
pub fn extend_neumann_1d(signal: &Signal1D) -> Extended1D {
    let v = signal.values();
    let mut values = Vec::with_capacity(v.len() + 2);
    values.push(v[0]);
    values.extend_from_slice(v);
    values.push(v[v.len() - 1]);
    Extended1D { values, h: signal.h }
}

/// Square grey image `u_{i,j}`, `i, j` in `1..=N`.
///
/// Stored row-major with `i` as the row index. The palette maximum `K` only
/// matters for quantization; values between diffusion steps are real.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyImage {
    n: usize,
    h: f64,
    palette_max: u32,
    values: Vec<f64>,
}

impl GreyImage {
    /// Image with unit spacing and the default 256-level palette.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("image side must be at least 2, got {n}")));
        }
        if values.len() != n * n {
            return Err(Error::input(format!(
                "expected {} values for a {n}x{n} image, got {}",
                n * n,
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            n,
            h: 1.0,
            palette_max: DEFAULT_PALETTE_MAX,
            values,
        })
    }

    /// Builds an image from `f(i, j)` with 1-based indices.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                values.push(f(i, j));
            }
        }
        Self::new(n, values)
    }

    pub fn with_spacing(mut self, h: f64) -> Result<Self> {
        check_spacing(h)?;
        self.h = h;
        Ok(self)
    }

    pub fn with_palette_max(mut self, palette_max: u32) -> Result<Self> {
        if palette_max < 2 {
            return Err(Error::param(format!("palette needs at least 2 levels, got {palette_max}")));
        }
        self.palette_max = palette_max;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn palette_max(&self) -> u32 {
        self.palette_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pixel `u_{i,j}`, 1-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j));
        self.values[(i - 1) * self.n + (j - 1)]
    }

    /// Same spacing and palette, new pixel values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.n, values)?;
        out.h = self.h;
        out.palette_max = self.palette_max;
        Ok(out)
    }

    /// Every pixel is an integer in `[1, K]`.
    pub fn is_quantized(&self) -> bool {
        let k = f64::from(self.palette_max);
        self.values
            .iter()
            .all(|&v| v.fract() == 0.0 && (1.0..=k).contains(&v))
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[j * n + i] = self.values[i * n + j];
            }
        }
        Self { values, ..self.clone() }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Largest `|a - b|` over corresponding pixels.
    pub fn max_abs_diff(&self, other: &GreyImage) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Pixel-wise bit equality (distinguishes `0.0` from `-0.0`).
    pub fn bitwise_eq(&self, other: &GreyImage) -> bool {
        self.n == other.n
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Image bordered by one row/column on each side, indices `0 ..= N + 1`.
///
/// The four corner cells are never read by any stencil in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bordered2D {
    n: usize,
    h: f64,
    values: Vec<f64>,
}

impl Bordered2D {
    /// Builds the full `(N+2) x (N+2)` grid from `f(i, j)`, `i, j` in `0..=N+1`,
    /// without imposing a border rule.
    pub fn from_fn(n: usize, h: f64, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("image side must be at least 2, got {n}")));
        }
        check_spacing(h)?;
        let side = n + 2;
        let mut values = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                values.push(f(i, j));
            }
        }
        check_finite(&values)?;
        Ok(Self { n, h, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `u_{i,j}`, `i, j` in `0..=N+1`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.n + 2) + j]
    }
}

/// Replicates the outer rows and columns; corners are set to 0.
pub fn extend_neumann_2d(img: &GreyImage) -> Bordered2D {
    let n = img.n;
    let side = n + 2;
    let mut values = vec![0.0; side * side];
    for i in 1..=n {
        for j in 1..=n {
            values[i * side + j] = img.get(i, j);
        }
        values[i * side] = img.get(i, 1);
        values[i * side + n + 1] = img.get(i, n);
    }
    for j in 1..=n {
        values[j] = img.get(1, j);
        values[(n + 1) * side + j] = img.get(n, j);
    }
    Bordered2D { n, h: img.h, values }
}

/// Maps the image affinely onto the integer palette `[1, K]`.
///
/// `v -> 1 + (K - 1)(v - min)/(max - min)`, rounded half away from zero.
/// A constant image maps to mid-grey `(K + 1) / 2` (integer division).
pub fn renormalize_palette(img: &GreyImage) -> GreyImage {
    let k = f64::from(img.palette_max);
    let (lo, hi) = img.min_max();
    let values = if hi > lo {
        let span = hi - lo;
        img.values
            .iter()
            .map(|&v| (1.0 + (k - 1.0) * (v - lo) / span).round().clamp(1.0, k))
            .collect()
    } else {
        let mid = f64::from(img.palette_max.div_ceil(2));
        vec![mid; img.values.len()]
    };
    GreyImage { values, ..img.clone() }
}

/// Whether a field axis sits on the pixel grid or halfway between pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Index `k` is the position `k`.
    Integer,
    /// Index `k` is the position `k + 1/2`.
    Staggered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity1D {
    Variation,
    SecondDerivative,
    Coefficient,
    /// Coefficient interpolated back to the pixels.
    CoefficientAtNodes,
}

impl Quantity1D {
    pub fn centering(self) -> Centering {
        match self {
            Quantity1D::CoefficientAtNodes => Centering::Integer,
            _ => Centering::Staggered,
        }
    }
}

/// Real values over a contiguous index range `first ..= first + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    quantity: Quantity1D,
    first: isize,
    values: Vec<f64>,
}

impl Field1D {
    pub fn new(quantity: Quantity1D, first: isize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("a field needs at least one value"));
        }
        Ok(Self {
            quantity,
            first,
            values,
        })
    }

    pub(crate) fn from_fn(
        quantity: Quantity1D,
        range: RangeInclusive<isize>,
        f: impl FnMut(isize) -> f64,
    ) -> Self {
        let first = *range.start();
        Self {
            quantity,
            first,
            values: range.map(f).collect(),
        }
    }

    pub fn quantity(&self) -> Quantity1D {
        self.quantity
    }

    pub fn first(&self) -> isize {
        self.first
    }

    pub fn last(&self) -> isize {
        self.first + self.values.len() as isize - 1
    }

    pub fn range(&self) -> RangeInclusive<isize> {
        self.first..=self.last()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, k: isize) -> bool {
        self.range().contains(&k)
    }

    pub fn get(&self, k: isize) -> Option<f64> {
        self.contains(k).then(|| self.values[(k - self.first) as usize])
    }

    /// Value at index `k`; panics outside the stored range.
    #[inline]
    pub fn at(&self, k: isize) -> f64 {
        match self.get(k) {
            Some(v) => v,
            None => panic!("{:?} index {k} outside {:?}", self.quantity, self.range()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity2D {
    /// Pixel values averaged along x: staggered in x, integer in y.
    AverageX,
    /// Pixel values averaged along y: integer in x, staggered in y.
    AverageY,
    VariationX,
    VariationY,
    Laplacian,
    GradientMagnitude,
    Coefficient,
    /// Coefficient interpolated back to the pixels.
    CoefficientAtNodes,
    /// Perona-Malik conductivity at the pixels.
    Conductivity,
}

impl Quantity2D {
    /// Centering of the (x, y) axes.
    pub fn centering(self) -> (Centering, Centering) {
        use Centering::*;
        match self {
            Quantity2D::AverageX => (Staggered, Integer),
            Quantity2D::AverageY => (Integer, Staggered),
            Quantity2D::CoefficientAtNodes | Quantity2D::Conductivity => (Integer, Integer),
            _ => (Staggered, Staggered),
        }
    }
}

/// Real values over a rectangular index range, stored row-major in x.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    quantity: Quantity2D,
    x_first: isize,
    y_first: isize,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(
        quantity: Quantity2D,
        x_first: isize,
        y_first: isize,
        nx: usize,
        ny: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::input("a field needs a non-empty index range"));
        }
        if values.len() != nx * ny {
            return Err(Error::input(format!(
                "expected {} values for a {nx}x{ny} field, got {}",
                nx * ny,
                values.len()
            )));
        }
        Ok(Self {
            quantity,
            x_first,
            y_first,
            nx,
            ny,
            values,
        })
    }

    /// Builds a field over `xs x ys` from `f(kx, ky)`.
    pub fn from_fn(
        quantity: Quantity2D,
        xs: RangeInclusive<isize>,
        ys: RangeInclusive<isize>,
        mut f: impl FnMut(isize, isize) -> f64,
    ) -> Result<Self> {
        let (x_first, y_first) = (*xs.start(), *ys.start());
        let nx = (xs.end() - xs.start() + 1).max(0) as usize;
        let ny = (ys.end() - ys.start() + 1).max(0) as usize;
        let mut values = Vec::with_capacity(nx * ny);
        for kx in xs {
            for ky in ys.clone() {
                values.push(f(kx, ky));
            }
        }
        Self::new(quantity, x_first, y_first, nx, ny, values)
    }

    pub fn quantity(&self) -> Quantity2D {
        self.quantity
    }

    pub fn x_range(&self) -> RangeInclusive<isize> {
        self.x_first..=self.x_first + self.nx as isize - 1
    }

    pub fn y_range(&self) -> RangeInclusive<isize> {
        self.y_first..=self.y_first + self.ny as isize - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, kx: isize, ky: isize) -> bool {
        self.x_range().contains(&kx) && self.y_range().contains(&ky)
    }

    pub fn get(&self, kx: isize, ky: isize) -> Option<f64> {
        self.contains(kx, ky).then(|| self.at(kx, ky))
    }

    #[inline]
    pub fn at(&self, kx: isize, ky: isize) -> f64 {
        let ix = (kx - self.x_first) as usize;
        let iy = (ky - self.y_first) as usize;
        debug_assert!(ix < self.nx && iy < self.ny, "{:?} index ({kx}, {ky}) out of range", self.quantity);
        self.values[ix * self.ny + iy]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Every stored value compares equal to zero (`-0.0` included).
    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Writes the field as a whitespace-separated matrix, one x-index per line.
    pub fn write_matrix(&self, out: &mut impl fmt::Write) -> fmt::Result {
        for row in self.values.chunks(self.ny) {
            let mut first = true;
            for v in row {
                if !first {
                    out.write_char(' ')?;
                }
                first = false;
                write!(out, "{v}")?;
            }
            out.write_char('\n')?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extend_1d_replicates_ends() {
        let s = Signal1D::unit(vec![5.0, 7.0, 9.0]).unwrap();
        assert_eq!(extend_neumann_1d(&s).values(), &[5.0, 5.0, 7.0, 9.0, 9.0]);

        let s = Signal1D::unit(vec![1.0, 256.0]).unwrap();
        assert_eq!(extend_neumann_1d(&s).values(), &[1.0, 1.0, 256.0, 256.0]);

        let s = Signal1D::unit(vec![3.5; 6]).unwrap();
        assert_eq!(extend_neumann_1d(&s).values(), &[3.5; 8]);
    }

    #[test]
    fn signal_rejects_bad_input() {
        assert!(matches!(Signal1D::unit(vec![1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(Signal1D::unit(vec![1.0, f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(Signal1D::new(vec![1.0, 2.0], 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn extend_2d_two_by_two() {
        let img = GreyImage::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = extend_neumann_2d(&img);
        let expected = [
            [0.0, 1.0, 2.0, 0.0],
            [1.0, 1.0, 2.0, 2.0],
            [3.0, 3.0, 4.0, 4.0],
            [0.0, 3.0, 4.0, 0.0],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(b.get(i, j), v, "({i}, {j})");
            }
        }
    }

    #[test]
    fn extend_2d_constant_and_column_profile() {
        let img = GreyImage::from_fn(5, |_, _| 42.0).unwrap();
        let b = extend_neumann_2d(&img);
        for i in 0..7 {
            for j in 0..7 {
                let corner = (i == 0 || i == 6) && (j == 0 || j == 6);
                if !corner {
                    assert_eq!(b.get(i, j), 42.0);
                }
            }
        }

        // a column profile (depends on i only): left/right borders copy it
        let img = GreyImage::from_fn(4, |i, _| (10 * i) as f64).unwrap();
        let b = extend_neumann_2d(&img);
        for i in 1..=4 {
            assert_eq!(b.get(i, 0), (10 * i) as f64);
            assert_eq!(b.get(i, 5), (10 * i) as f64);
        }
    }

    #[test]
    fn extend_2d_borders_are_idempotent() {
        let img = GreyImage::from_fn(6, |i, j| (i * 31 + j * 7 % 5) as f64).unwrap();
        let b = extend_neumann_2d(&img);
        let interior = GreyImage::from_fn(6, |i, j| b.get(i, j)).unwrap();
        assert_eq!(extend_neumann_2d(&interior), b);
    }

    #[test]
    fn renormalize_endpoints_and_midpoint() {
        let img = GreyImage::new(2, vec![-10.0, 500.0, 245.0, 0.0]).unwrap();
        let r = renormalize_palette(&img);
        assert_eq!(r.get(1, 1), 1.0);
        assert_eq!(r.get(1, 2), 256.0);
        // (min + max) / 2 = 245 -> 1 + 255/2 = 128.5 -> 129
        assert_eq!(r.get(2, 1), 129.0);
        assert!(r.is_quantized());
    }

    #[test]
    fn renormalize_constant_is_mid_grey() {
        let img = GreyImage::from_fn(4, |_, _| 17.25).unwrap();
        let r = renormalize_palette(&img);
        assert!(r.values().iter().all(|&v| v == 128.0));
    }

    #[test]
    fn field_indexing() {
        let f = Field1D::new(Quantity1D::Variation, -1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.range(), -1..=1);
        assert_eq!(f.at(-1), 1.0);
        assert_eq!(f.get(2), None);

        let g = Field2D::from_fn(Quantity2D::Laplacian, 1..=2, -1..=1, |x, y| (10 * x + y) as f64).unwrap();
        assert_eq!(g.shape(), (2, 3));
        assert_eq!(g.at(2, -1), 19.0);
        assert_eq!(g.get(0, 0), None);
        let mut s = String::new();
        g.write_matrix(&mut s).unwrap();
        assert_eq!(s, "9 10 11\n19 20 21\n");
    }
}
