//! Time stepping: Strang splitting with exact substeps, a classical RK4
//! reference integrator, and the run loop with observers and the wrap guard.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hartree::{HartreeOperator, NonlinearityParams};
use crate::scattering::PhaseTracker;
use crate::spectral::{forward_in_place, inverse_in_place, japanese, ComplexField, SpectralGrid};

/// Regularity/decay indices `(n, k, δ₀)` carried with a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexBundle {
    /// Controls the cutoff `ρ(s^{-2/n}ξ)` in the phase correction.
    pub n_index: f64,
    /// Weight exponent in `⟨ξ⟩^k` for the scattering norm and Cauchy metrics.
    pub k_index: u32,
    pub delta0: f64,
}

impl Default for IndexBundle {
    fn default() -> Self {
        IndexBundle {
            n_index: 1000.0,
            k_index: 10,
            delta0: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: ComplexField,
    /// Accumulated phase correction `B(t, ξ)` on the tracked frequencies.
    pub phase: PhaseTracker,
    pub params: NonlinearityParams,
    pub indices: IndexBundle,
}

impl SimState {
    /// State at `t = 0` with an empty phase tracker.
    pub fn new(u: ComplexField, params: NonlinearityParams, indices: IndexBundle) -> Self {
        let phase = PhaseTracker::disabled(u.grid());
        SimState {
            t: 0.0,
            u,
            phase,
            params,
            indices,
        }
    }

    pub fn with_phase(mut self, phase: PhaseTracker) -> Self {
        self.phase = phase;
        self
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Strang,
    Rk4Ref,
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub dt: f64,
    pub t_end: f64,
    /// Increasing times at which observers fire.
    pub output_times: Vec<f64>,
    pub integrator: Integrator,
    pub wrap_guard_margin: f64,
    /// Effective radius `r₀` of the initial data (distance from the origin
    /// containing essentially all of its mass).
    pub initial_radius: f64,
    /// When false the wrap guard is not enforced (mass/energy studies on the torus).
    pub enforce_wrap_guard: bool,
}

impl RunPlan {
    pub fn new(dt: f64, t_end: f64, output_times: Vec<f64>) -> Self {
        RunPlan {
            dt,
            t_end,
            output_times,
            integrator: Integrator::Strang,
            wrap_guard_margin: 2.0,
            initial_radius: 0.0,
            enforce_wrap_guard: true,
        }
    }

    /// Latest time the guard allows on a box of half-width `L`.
    pub fn guard_limit(&self, half_width: f64) -> f64 {
        half_width - self.initial_radius - self.wrap_guard_margin
    }

    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.output_times {
            if !(t > prev && t >= 0.0 && t <= self.t_end + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "output times must be increasing within [0, t_end], offending value {t}"
                )));
            }
            prev = t;
        }
        self.check_guard(grid)
    }

    pub fn check_guard(&self, grid: &SpectralGrid) -> Result<()> {
        if !self.enforce_wrap_guard {
            return Ok(());
        }
        let l = grid.half_width();
        if self.t_end + self.initial_radius + self.wrap_guard_margin >= l {
            return Err(Error::WrapGuard(format!(
                "t_end + r0 + margin = {} + {} + {} must be < L = {}",
                self.t_end, self.initial_radius, self.wrap_guard_margin, l
            )));
        }
        Ok(())
    }
}

/// Reusable stepping machinery: nonlinearity plus the cached half-step propagator.
pub struct Stepper {
    op: HartreeOperator,
    kinetic: Vec<f64>,
    half: Vec<Complex64>,
    half_dt: f64,
}

impl Stepper {
    pub fn new(grid: &SpectralGrid, params: NonlinearityParams) -> Result<Self> {
        let op = HartreeOperator::new(grid, params)?;
        let xis = grid.xis();
        let mut kinetic = Vec::with_capacity(grid.len());
        for &k1 in xis {
            for &k2 in xis {
                kinetic.push(japanese(k1, k2));
            }
        }
        Ok(Stepper {
            op,
            kinetic,
            half: Vec::new(),
            half_dt: f64::NAN,
        })
    }

    pub fn operator(&self) -> &HartreeOperator {
        &self.op
    }

    fn linear_half(&mut self, u: &mut ComplexField, dt: f64) {
        if self.half_dt.to_bits() != dt.to_bits() {
            self.half = self
                .kinetic
                .iter()
                .map(|w| Complex64::from_polar(1.0, -0.5 * dt * w))
                .collect();
            self.half_dt = dt;
        }
        let grid = u.grid().clone();
        let data = u.values_mut();
        forward_in_place(&grid, data);
        for (v, m) in data.iter_mut().zip(&self.half) {
            *v *= m;
        }
        inverse_in_place(&grid, data);
    }

    /// `e^{-i(dt/2)⟨D⟩} ∘ e^{iλW·dt} ∘ e^{-i(dt/2)⟨D⟩}`.
    pub fn strang(&mut self, u: &mut ComplexField, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        self.linear_half(u, dt);
        self.op.phase_step(u, dt)?;
        self.linear_half(u, dt);
        Ok(())
    }

    /// Classical four-stage Runge–Kutta on the full right-hand side.
    pub fn rk4(&mut self, u: &mut ComplexField, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let k1 = self.op.rhs(u)?;
        let stage = |base: &ComplexField, k: &ComplexField, c: f64| {
            let mut s = base.clone();
            for (v, d) in s.values_mut().iter_mut().zip(k.values()) {
                *v += d * c;
            }
            s
        };
        let k2 = self.op.rhs(&stage(u, &k1, 0.5 * dt))?;
        let k3 = self.op.rhs(&stage(u, &k2, 0.5 * dt))?;
        let k4 = self.op.rhs(&stage(u, &k3, dt))?;
        let w = dt / 6.0;
        for (i, v) in u.values_mut().iter_mut().enumerate() {
            *v +=
                (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]) * w;
        }
        Ok(())
    }

    pub fn step(&mut self, integrator: Integrator, u: &mut ComplexField, dt: f64) -> Result<()> {
        match integrator {
            Integrator::Strang => self.strang(u, dt),
            Integrator::Rk4Ref => self.rk4(u, dt),
        }
    }
}

/// One Strang step; the phase correction is left untouched.
pub fn strang_step(s: &SimState, dt: f64) -> Result<SimState> {
    let mut out = s.clone();
    Stepper::new(s.grid(), s.params)?.strang(&mut out.u, dt)?;
    out.t += dt;
    Ok(out)
}

/// One RK4 step on `∂ₜu = -i⟨D⟩u + iλWu`; the phase correction is left untouched.
pub fn rk4_reference_step(s: &SimState, dt: f64) -> Result<SimState> {
    let mut out = s.clone();
    Stepper::new(s.grid(), s.params)?.rk4(&mut out.u, dt)?;
    out.t += dt;
    Ok(out)
}

/// Receives read-only snapshots at the plan's output times.
pub trait Observer {
    fn observe(&mut self, state: &SimState) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&SimState) -> Result<()>,
{
    fn observe(&mut self, state: &SimState) -> Result<()> {
        self(state)
    }
}

const TIME_EPS: f64 = 1e-10;

/// Advances `s0` to `plan.t_end`, accumulating `B` after every step and
/// calling each observer at each output time.
///
/// On a non-finite state the run halts with [`Error::NonFinite`] carrying the
/// last finite state.
pub fn evolve(
    s0: SimState,
    plan: &RunPlan,
    observers: &mut [&mut dyn Observer],
) -> Result<SimState> {
    plan.validate(s0.grid())?;
    let mut stepper = Stepper::new(s0.grid(), s0.params)?;
    let mut state = s0;
    let guard = plan.guard_limit(state.grid().half_width());
    state
        .phase
        .prime(&state.u, state.t, &state.params, &state.indices)?;

    let mut targets: Vec<f64> = plan.output_times.clone();
    if targets.last().is_none_or(|&t| t < plan.t_end - TIME_EPS) {
        targets.push(plan.t_end);
    }
    let mut emitted = 0;
    for target in targets {
        while state.t < target - TIME_EPS {
            let dt = plan.dt.min(target - state.t);
            if plan.enforce_wrap_guard && state.t + dt > guard + TIME_EPS {
                return Err(Error::WrapGuard(format!(
                    "step to t = {} passes the guard limit {guard}",
                    state.t + dt
                )));
            }
            let previous = state.clone();
            stepper.step(plan.integrator, &mut state.u, dt)?;
            let t_new = if (target - (state.t + dt)).abs() < TIME_EPS {
                target
            } else {
                state.t + dt
            };
            if !state.u.is_finite() {
                return Err(Error::NonFinite {
                    t: t_new,
                    last_good: Box::new(previous),
                });
            }
            state.t = t_new;
            let at_output = (state.t - target).abs() < TIME_EPS;
            state
                .phase
                .advance(&state.u, state.t, &state.params, &state.indices, at_output)?;
        }
        if emitted < plan.output_times.len()
            && (plan.output_times[emitted] - target).abs() < TIME_EPS
        {
            for obs in observers.iter_mut() {
                obs.observe(&state)?;
            }
            emitted += 1;
        }
    }
    Ok(state)
}
