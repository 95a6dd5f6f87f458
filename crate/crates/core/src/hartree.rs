//! Hartree potential `W = |x|^{-γ} * |u|²` and the nonlinear right-hand side.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    forward_in_place, inverse_in_place, japanese, riesz_kernel_symbol, ComplexField, Space,
    SpectralGrid,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityParams {
    /// Coupling λ.
    pub lambda: f64,
    /// Kernel exponent γ ∈ (0, 2); 1 is the Coulomb case.
    pub gamma: f64,
    /// Apply the 2/3-rule truncation to `F|u|²` before convolving.
    pub dealias: bool,
}

impl Default for NonlinearityParams {
    fn default() -> Self {
        NonlinearityParams {
            lambda: 0.1,
            gamma: 1.0,
            dealias: true,
        }
    }
}

impl NonlinearityParams {
    pub fn new(lambda: f64, gamma: f64) -> Self {
        NonlinearityParams {
            lambda,
            gamma,
            dealias: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coupling lambda must be finite, got {}",
                self.lambda
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel exponent gamma must lie in (0, 2), got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Precomputed convolution kernel (Riesz symbol times the de-aliasing mask).
#[derive(Clone, Debug)]
pub struct HartreeOperator {
    grid: SpectralGrid,
    params: NonlinearityParams,
    kernel: Vec<f64>,
    kinetic: Vec<f64>,
}

impl HartreeOperator {
    pub fn new(grid: &SpectralGrid, params: NonlinearityParams) -> Result<Self> {
        params.validate()?;
        let mut kernel = riesz_kernel_symbol(grid, params.gamma)?.real_values();
        if params.dealias {
            let n = grid.n();
            let half = (n / 2) as i64;
            let cut = (n / 3) as i64;
            for a1 in 0..n {
                for a2 in 0..n {
                    let j1 = a1 as i64 - half;
                    let j2 = a2 as i64 - half;
                    if j1.abs() > cut || j2.abs() > cut {
                        kernel[grid.index(a1, a2)] = 0.0;
                    }
                }
            }
        }
        let xis = grid.xis();
        let mut kinetic = Vec::with_capacity(grid.len());
        for &k1 in xis {
            for &k2 in xis {
                kinetic.push(japanese(k1, k2));
            }
        }
        Ok(HartreeOperator {
            grid: grid.clone(),
            params,
            kernel,
            kinetic,
        })
    }

    pub fn params(&self) -> &NonlinearityParams {
        &self.params
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// `W` as complex samples; the imaginary part is transform roundoff only.
    pub fn potential(&self, u: &ComplexField) -> Result<ComplexField> {
        u.expect_space(Space::Physical)?;
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut data: Vec<Complex64> = u
            .values()
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect();
        forward_in_place(&self.grid, &mut data);
        for (v, k) in data.iter_mut().zip(&self.kernel) {
            *v *= k;
        }
        inverse_in_place(&self.grid, &mut data);
        Ok(ComplexField::new(&self.grid, data, Space::Physical))
    }

    /// Real part of [`HartreeOperator::potential`].
    pub fn potential_real(&self, u: &ComplexField) -> Result<Vec<f64>> {
        Ok(self.potential(u)?.values().iter().map(|w| w.re).collect())
    }

    /// `∂ₜu = -i⟨D⟩u + iλWu`.
    pub fn rhs(&self, u: &ComplexField) -> Result<ComplexField> {
        let w = self.potential_real(u)?;
        let mut lin = u.values().to_vec();
        forward_in_place(&self.grid, &mut lin);
        for (v, k) in lin.iter_mut().zip(&self.kinetic) {
            *v *= Complex64::new(0.0, -k);
        }
        inverse_in_place(&self.grid, &mut lin);
        let lambda = self.params.lambda;
        for ((out, u), w) in lin.iter_mut().zip(u.values()).zip(&w) {
            *out += Complex64::new(0.0, lambda * w) * u;
        }
        Ok(ComplexField::new(&self.grid, lin, Space::Physical))
    }

    /// Exact flow of `∂ₜu = iλWu` over `dt`; `|u|` and hence `W` stay frozen.
    pub fn phase_step(&self, u: &mut ComplexField, dt: f64) -> Result<()> {
        if self.params.lambda == 0.0 || dt == 0.0 {
            return Ok(());
        }
        let w = self.potential_real(u)?;
        let scale = self.params.lambda * dt;
        for (v, w) in u.values_mut().iter_mut().zip(&w) {
            *v *= Complex64::from_polar(1.0, scale * w);
        }
        Ok(())
    }
}

/// `W = |x|^{-γ} * |u|²`, computed spectrally with the periodic lattice kernel.
pub fn hartree_potential(u: &ComplexField, p: &NonlinearityParams) -> Result<ComplexField> {
    HartreeOperator::new(u.grid(), *p)?.potential(u)
}

pub fn rhs(u: &ComplexField, p: &NonlinearityParams) -> Result<ComplexField> {
    HartreeOperator::new(u.grid(), *p)?.rhs(u)
}

/// `u ↦ e^{iλW·dt}u` pointwise.
pub fn nonlinear_phase_step(
    u: &ComplexField,
    p: &NonlinearityParams,
    dt: f64,
) -> Result<ComplexField> {
    if !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be finite, got {dt}"
        )));
    }
    let mut out = u.clone();
    HartreeOperator::new(u.grid(), *p)?.phase_step(&mut out, dt)?;
    Ok(out)
}
