//! Periodic grid on `[-L, L)^2`, scaled Fourier transforms and Fourier multipliers.
//!
//! Transforms follow the continuum convention
//! `û(ξ) = ∫ e^{-ix·ξ} u(x) dx` and `u(x) = (2π)^{-2} ∫ e^{ix·ξ} û(ξ) dξ`,
//! approximated by Riemann sums on the lattice. Frequency-space arrays are
//! stored in "math order": index `a` along an axis holds `ξ = (a - n/2)·π/L`,
//! so the unpaired Nyquist mode sits at index 0.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Which domain the samples of a [`ComplexField`] live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Frequency,
}

struct GridInner {
    n: usize,
    half_width: f64,
    spacing: f64,
    dxi: f64,
    xs: Vec<f64>,
    xis: Vec<f64>,
    // (-1)^(a - n/2), the phase picked up by shifting the physical origin to -L
    parity: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Uniform `n × n` discretisation of the periodic box `[-L, L)^2` and its dual lattice.
///
/// Cheap to clone; all clones share the same FFT plans.
#[derive(Clone)]
pub struct SpectralGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n())
            .field("L", &self.half_width())
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.n() == other.n()
                && self.half_width().to_bits() == other.half_width().to_bits())
    }
}

/// Builds the grid for `n` points per dimension on `[-L, L)^2`.
pub fn make_grid(n: usize, half_width: f64) -> Result<SpectralGrid> {
    SpectralGrid::new(n, half_width)
}

impl SpectralGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n must be even and at least 16, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width L must be positive and finite, got {half_width}"
            )));
        }
        let spacing = 2.0 * half_width / n as f64;
        let dxi = PI / half_width;
        let half = (n / 2) as i64;
        let xs = (0..n).map(|m| -half_width + m as f64 * spacing).collect();
        let xis = (0..n).map(|a| (a as i64 - half) as f64 * dxi).collect();
        let parity = (0..n)
            .map(|a| {
                if (a as i64 - half) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(SpectralGrid {
            inner: Arc::new(GridInner {
                n,
                half_width,
                spacing,
                dxi,
                xs,
                xis,
                parity,
                fwd,
                inv,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Half-width `L` of the box.
    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    /// Physical spacing `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Frequency cell width `π/L`.
    pub fn dxi(&self) -> f64 {
        self.inner.dxi
    }

    /// Physical coordinates along one axis, `-L + m·h`.
    pub fn xs(&self) -> &[f64] {
        &self.inner.xs
    }

    /// Frequencies along one axis in math order, `(a - n/2)·π/L`.
    pub fn xis(&self) -> &[f64] {
        &self.inner.xis
    }

    /// Number of samples, `n²`.
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of `(i, j)`, `i` along the first coordinate.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.inner.n + j
    }

    /// Math-order index of the zero frequency along one axis.
    pub fn zero_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Largest representable `|ξ|` on the lattice (the Nyquist corner).
    pub fn max_frequency(&self) -> f64 {
        std::f64::consts::SQRT_2 * (self.inner.n / 2) as f64 * self.inner.dxi
    }

    /// Largest-magnitude frequency that has a `±` partner, per axis.
    pub fn paired_frequency_limit(&self) -> f64 {
        (self.inner.n / 2 - 1) as f64 * self.inner.dxi
    }

    /// Lattice frequency nearest to `xi`, as math-order indices.
    pub fn nearest_frequency_index(&self, xi: [f64; 2]) -> (usize, usize) {
        let n = self.inner.n as i64;
        let snap = |v: f64| {
            let a = (v / self.inner.dxi).round() as i64 + n / 2;
            a.clamp(0, n - 1) as usize
        };
        (snap(xi[0]), snap(xi[1]))
    }

    pub fn zeros(&self, space: Space) -> ComplexField {
        ComplexField {
            values: vec![Complex64::new(0.0, 0.0); self.len()],
            space,
            grid: self.clone(),
        }
    }

    /// Samples `f(x₁, x₂)` on the physical lattice.
    pub fn sample_physical(&self, f: impl Fn(f64, f64) -> Complex64) -> ComplexField {
        let xs = self.xs();
        let mut values = Vec::with_capacity(self.len());
        for &x1 in xs {
            for &x2 in xs {
                values.push(f(x1, x2));
            }
        }
        ComplexField::new(self, values, Space::Physical)
    }

    /// Samples `f(ξ₁, ξ₂)` on the frequency lattice.
    pub fn sample_frequency(&self, f: impl Fn(f64, f64) -> Complex64) -> ComplexField {
        let xis = self.xis();
        let mut values = Vec::with_capacity(self.len());
        for &k1 in xis {
            for &k2 in xis {
                values.push(f(k1, k2));
            }
        }
        ComplexField::new(self, values, Space::Frequency)
    }

    fn real_symbol(&self, descriptor: String, f: impl Fn(f64, f64) -> f64) -> MultiplierSymbol {
        let xis = self.xis();
        let mut values = Vec::with_capacity(self.len());
        for &k1 in xis {
            for &k2 in xis {
                values.push(f(k1, k2));
            }
        }
        MultiplierSymbol {
            values: SymbolValues::Real(values),
            descriptor,
            grid: self.clone(),
        }
    }

    fn complex_symbol(
        &self,
        descriptor: String,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> MultiplierSymbol {
        let xis = self.xis();
        let mut values = Vec::with_capacity(self.len());
        for &k1 in xis {
            for &k2 in xis {
                values.push(f(k1, k2));
            }
        }
        MultiplierSymbol {
            values: SymbolValues::Complex(values),
            descriptor,
            grid: self.clone(),
        }
    }

    /// Unnormalised 2D FFT in place, natural (non-shifted) ordering.
    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let n = self.inner.n;
        let plan = if forward {
            &self.inner.fwd
        } else {
            &self.inner.inv
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Swaps quadrants; for even `n` this is its own inverse.
fn shift_quadrants(data: &mut [Complex64], n: usize) {
    let h = n / 2;
    for i in 0..h {
        for j in 0..n {
            let jj = (j + h) % n;
            data.swap(i * n + j, (i + h) * n + jj);
        }
    }
}

/// Complex samples on the grid, tagged with the domain they belong to.
#[derive(Clone, Debug)]
pub struct ComplexField {
    values: Vec<Complex64>,
    space: Space,
    grid: SpectralGrid,
}

impl ComplexField {
    /// Panics if `values.len() != n²`.
    pub fn new(grid: &SpectralGrid, values: Vec<Complex64>, space: Space) -> Self {
        assert_eq!(values.len(), grid.len(), "field length must be n²");
        ComplexField {
            values,
            space,
            grid: grid.clone(),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn expect_space(&self, expected: Space) -> Result<()> {
        if self.space == expected {
            Ok(())
        } else {
            Err(Error::WrongSpace {
                expected,
                found: self.space,
            })
        }
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// Largest `|value|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Riemann-sum `Σ|v|²·cell` with the cell area of the field's domain
    /// (`h²` physical, `dxi²` frequency).
    pub fn l2_norm_sq(&self) -> f64 {
        let cell = match self.space {
            Space::Physical => self.grid.spacing().powi(2),
            Space::Frequency => self.grid.dxi().powi(2),
        };
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// `û(ξ_j) = h² Σ_m e^{-i x_m·ξ_j} u(x_m)`.
pub fn forward_ft(u: &ComplexField) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    let grid = u.grid();
    let mut data = u.values.clone();
    forward_in_place(grid, &mut data);
    Ok(ComplexField {
        values: data,
        space: Space::Frequency,
        grid: grid.clone(),
    })
}

/// `u(x_m) = (2π)^{-2} dxi² Σ_j e^{i x_m·ξ_j} û(ξ_j)`.
pub fn inverse_ft(v: &ComplexField) -> Result<ComplexField> {
    v.expect_space(Space::Frequency)?;
    let grid = v.grid();
    let mut data = v.values.clone();
    inverse_in_place(grid, &mut data);
    Ok(ComplexField {
        values: data,
        space: Space::Physical,
        grid: grid.clone(),
    })
}

pub(crate) fn forward_in_place(grid: &SpectralGrid, data: &mut [Complex64]) {
    let n = grid.n();
    grid.fft2(data, true);
    shift_quadrants(data, n);
    let h2 = grid.spacing() * grid.spacing();
    let parity = &grid.inner.parity;
    for (i, row) in data.chunks_exact_mut(n).enumerate() {
        let pi = parity[i] * h2;
        for (v, pj) in row.iter_mut().zip(parity) {
            *v *= pi * pj;
        }
    }
}

pub(crate) fn inverse_in_place(grid: &SpectralGrid, data: &mut [Complex64]) {
    let n = grid.n();
    let parity = &grid.inner.parity;
    for (i, row) in data.chunks_exact_mut(n).enumerate() {
        let pi = parity[i];
        for (v, pj) in row.iter_mut().zip(parity) {
            *v *= pi * pj;
        }
    }
    shift_quadrants(data, n);
    grid.fft2(data, false);
    let norm = 1.0 / (4.0 * grid.half_width() * grid.half_width());
    for v in data.iter_mut() {
        *v *= norm;
    }
}

#[derive(Clone, Debug)]
pub enum SymbolValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A Fourier multiplier `m(ξ)` sampled on the math-order frequency lattice.
#[derive(Clone, Debug)]
pub struct MultiplierSymbol {
    values: SymbolValues,
    descriptor: String,
    grid: SpectralGrid,
}

impl MultiplierSymbol {
    pub fn from_real(grid: &SpectralGrid, descriptor: impl Into<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        MultiplierSymbol {
            values: SymbolValues::Real(values),
            descriptor: descriptor.into(),
            grid: grid.clone(),
        }
    }

    pub fn values(&self) -> &SymbolValues {
        &self.values
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        let k = self.grid.index(i, j);
        match &self.values {
            SymbolValues::Real(v) => Complex64::new(v[k], 0.0),
            SymbolValues::Complex(v) => v[k],
        }
    }

    /// Real part of every sample (the symbol itself for real symbols).
    pub fn real_values(&self) -> Vec<f64> {
        match &self.values {
            SymbolValues::Real(v) => v.clone(),
            SymbolValues::Complex(v) => v.iter().map(|c| c.re).collect(),
        }
    }

    /// Pointwise product of two symbols on the same grid.
    pub fn compose(&self, other: &MultiplierSymbol) -> Result<MultiplierSymbol> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = match (&self.values, &other.values) {
            (SymbolValues::Real(a), SymbolValues::Real(b)) => {
                SymbolValues::Real(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => {
                let n = self.grid.n();
                let mut out = Vec::with_capacity(self.grid.len());
                for i in 0..n {
                    for j in 0..n {
                        out.push(self.value(i, j) * other.value(i, j));
                    }
                }
                SymbolValues::Complex(out)
            }
        };
        Ok(MultiplierSymbol {
            values,
            descriptor: format!("{} * {}", self.descriptor, other.descriptor),
            grid: self.grid.clone(),
        })
    }

    /// Multiplies frequency-space samples by the symbol in place.
    pub fn multiply_in_place(&self, data: &mut [Complex64]) {
        match &self.values {
            SymbolValues::Real(m) => data.iter_mut().zip(m).for_each(|(v, m)| *v *= m),
            SymbolValues::Complex(m) => data.iter_mut().zip(m).for_each(|(v, m)| *v *= m),
        }
    }
}

/// `m(D)u = F⁻¹(m·Fu)` for a physical-space field.
pub fn apply_multiplier(u: &ComplexField, m: &MultiplierSymbol) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    if u.grid != m.grid {
        return Err(Error::GridMismatch);
    }
    let mut data = u.values.clone();
    forward_in_place(&u.grid, &mut data);
    m.multiply_in_place(&mut data);
    inverse_in_place(&u.grid, &mut data);
    Ok(ComplexField {
        values: data,
        space: Space::Physical,
        grid: u.grid.clone(),
    })
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
#[inline]
pub fn japanese(xi1: f64, xi2: f64) -> f64 {
    (1.0 + xi1 * xi1 + xi2 * xi2).sqrt()
}

/// `⟨ξ⟩^s`.
pub fn bessel_symbol(grid: &SpectralGrid, s: f64) -> MultiplierSymbol {
    grid.real_symbol(format!("<xi>^{s}"), |k1, k2| {
        (1.0 + k1 * k1 + k2 * k2).powf(0.5 * s)
    })
}

/// The half-wave propagator `e^{-it⟨ξ⟩}`.
pub fn half_wave_symbol(grid: &SpectralGrid, t: f64) -> MultiplierSymbol {
    grid.complex_symbol(format!("exp(-i {t} <xi>)"), |k1, k2| {
        Complex64::from_polar(1.0, -t * japanese(k1, k2))
    })
}

fn smooth_step_kernel(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Radial bump: 1 on `r ≤ 1`, 0 on `r ≥ 2`, smooth monotone transition in between.
pub fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = smooth_step_kernel(2.0 - r);
        let b = smooth_step_kernel(r - 1.0);
        a / (a + b)
    }
}

/// Littlewood–Paley annulus weight `ρ(ξ/N) - ρ(2ξ/N)`.
#[inline]
pub fn lp_weight(xi_norm: f64, dyad: f64) -> f64 {
    bump(xi_norm / dyad) - bump(2.0 * xi_norm / dyad)
}

fn check_dyadic(dyad: f64) -> Result<()> {
    if !(dyad.is_finite() && dyad > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dyadic frequency must be positive, got {dyad}"
        )));
    }
    let e = dyad.log2();
    if (e - e.round()).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "{dyad} is not a power of two"
        )));
    }
    Ok(())
}

/// `ρ_N(ξ)`, supported in `N/2 ≤ |ξ| ≤ 2N`.
pub fn lp_projection_symbol(grid: &SpectralGrid, dyad: f64) -> Result<MultiplierSymbol> {
    check_dyadic(dyad)?;
    Ok(grid.real_symbol(format!("rho_{dyad}"), |k1, k2| {
        lp_weight((k1 * k1 + k2 * k2).sqrt(), dyad)
    }))
}

/// `ρ_{≤N₀} = 1 - Σ_{N>N₀} ρ_N`, which telescopes to `ρ(ξ/N₀)` once the sum
/// reaches past the lattice.
pub fn lp_low_symbol(grid: &SpectralGrid, dyad: f64) -> Result<MultiplierSymbol> {
    check_dyadic(dyad)?;
    Ok(grid.real_symbol(format!("rho_<={dyad}"), |k1, k2| {
        bump((k1 * k1 + k2 * k2).sqrt() / dyad)
    }))
}

/// Dyadic frequencies `N > N₀` needed to cover every lattice frequency.
pub fn dyads_above(grid: &SpectralGrid, dyad_low: f64) -> Vec<f64> {
    let top = grid.max_frequency();
    let mut out = Vec::new();
    let mut n = 2.0 * dyad_low;
    // ρ(ξ/N) = 1 for every lattice ξ once N ≥ max|ξ|
    while n / 2.0 < top {
        out.push(n);
        n *= 2.0;
    }
    out
}

/// Normalisation `c_γ` with `F(|x|^{-γ}) = c_γ |η|^{γ-2}` in two dimensions.
pub fn riesz_constant(gamma: f64) -> f64 {
    use statrs::function::gamma::gamma as gamma_fn;
    2f64.powf(2.0 - gamma) * PI * gamma_fn(1.0 - 0.5 * gamma) / gamma_fn(0.5 * gamma)
}

/// Fourier symbol of `|x|^{-γ}` on the lattice; the zero mode is set to 0.
pub fn riesz_kernel_symbol(grid: &SpectralGrid, gamma: f64) -> Result<MultiplierSymbol> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel exponent gamma must lie in (0, 2), got {gamma}"
        )));
    }
    let c = riesz_constant(gamma);
    Ok(grid.real_symbol(format!("{c}|eta|^({gamma}-2)"), |k1, k2| {
        let r2 = k1 * k1 + k2 * k2;
        if r2 == 0.0 {
            0.0
        } else {
            c * r2.powf(0.5 * (gamma - 2.0))
        }
    }))
}
