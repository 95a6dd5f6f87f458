//! WebAssembly bindings for the browser demo: a steppable simulation whose
//! modulus is drawn on a canvas, the Littlewood–Paley annulus symbol, and the
//! phase-correction rate along the ξ₁ axis.

use num_complex::Complex64;
use wasm_bindgen::prelude::*;

use relhartree2d::evolve::Stepper;
use relhartree2d::scattering::{FrequencySet, PhaseRateEvaluator, SingularCellRule};
use relhartree2d::spectral::{lp_projection_symbol, SpectralGrid};
use relhartree2d::{ComplexField, IndexBundle, NonlinearityParams};

/// Nearest power of two in `[16, 256]`; the page stays responsive up to 256².
fn demo_size(n: usize) -> usize {
    n.clamp(16, 256).next_power_of_two().min(256)
}

fn demo_grid(n: usize, half_width: f64) -> SpectralGrid {
    let l = if half_width.is_finite() && half_width > 0.0 {
        half_width
    } else {
        16.0
    };
    SpectralGrid::new(demo_size(n), l).expect("demo grid parameters are valid")
}

fn demo_params(lambda: f64, gamma: f64) -> NonlinearityParams {
    let lambda = if lambda.is_finite() { lambda } else { 0.0 };
    let gamma = if gamma > 0.0 && gamma < 2.0 {
        gamma
    } else {
        1.0
    };
    NonlinearityParams::new(lambda, gamma)
}

/// A running simulation started from a moving Gaussian.
#[wasm_bindgen]
pub struct Simulation {
    grid: SpectralGrid,
    params: NonlinearityParams,
    stepper: Stepper,
    u: ComplexField,
    t: f64,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: usize,
        half_width: f64,
        lambda: f64,
        gamma: f64,
        amplitude: f64,
        width: f64,
        momentum: f64,
    ) -> Simulation {
        let grid = demo_grid(n, half_width);
        let params = demo_params(lambda, gamma);
        let w = if width > 0.0 { width } else { 1.0 };
        let u = grid.sample_physical(|x, y| {
            Complex64::from_polar(
                amplitude * (-(x * x + y * y) / (2.0 * w * w)).exp(),
                momentum * x,
            )
        });
        let stepper = Stepper::new(&grid, params).expect("parameters were sanitised");
        Simulation {
            grid,
            params,
            stepper,
            u,
            t: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `‖u‖_{L²}`; constant up to roundoff.
    pub fn mass(&self) -> f64 {
        self.u.l2_norm_sq().sqrt()
    }

    /// Advances by `steps` Strang steps of size `dt`.
    pub fn advance(&mut self, steps: u32, dt: f64) {
        if !(dt.is_finite() && dt > 0.0) {
            return;
        }
        for _ in 0..steps {
            self.stepper
                .strang(&mut self.u, dt)
                .expect("field and stepper share a grid");
            self.t += dt;
        }
    }

    /// `|u|` row-major, `n × n`, first index along x₁.
    pub fn modulus(&self) -> Vec<f64> {
        self.u.values().iter().map(|v| v.norm()).collect()
    }

    /// `∂ₜB(t, ξ)` for ξ on the ξ₁ axis (every lattice frequency), at the current state.
    pub fn phase_rate_axis(&self) -> Vec<f64> {
        let z = self.grid.zero_index();
        let idx = (0..self.grid.n()).map(|a| (a, z)).collect();
        let points = FrequencySet::from_indices(&self.grid, idx);
        PhaseRateEvaluator::new(&self.grid, points, SingularCellRule::Epstein)
            .rate(&self.u, self.t, &self.params, &IndexBundle::default())
            .expect("physical-space field on the evaluator's grid")
    }

    /// Frequencies matching [`Simulation::phase_rate_axis`].
    pub fn axis_frequencies(&self) -> Vec<f64> {
        self.grid.xis().to_vec()
    }
}

/// Littlewood–Paley weight `φ(ξ/N) - φ(2ξ/N)` on the `n × n` frequency lattice
/// of a box of half-width `half_width`.
#[wasm_bindgen]
pub fn lp_annulus(n: usize, half_width: f64, dyad: f64) -> Vec<f64> {
    let grid = demo_grid(n, half_width);
    let dyad = if dyad > 0.0 {
        2f64.powi(dyad.log2().round() as i32)
    } else {
        1.0
    };
    lp_projection_symbol(&grid, dyad)
        .expect("dyad is a power of two")
        .real_values()
}
